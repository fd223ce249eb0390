//! Quick invariant battery covering every subsystem; used by the `selftest`
//! subcommand and the `selftest` experiment kind.

use std::fmt::Write as _;

use nbw_core::disorder::{
    generate_delone, levy_concentration_empirical, sample_field, split_delone, verify_delone,
    CouplingDistribution,
};
use nbw_core::error::{Error, Result};
use nbw_core::experiments::{
    fuzz_lower_bound, s_sum, s_sum_closed, s_sum_geometric, wegner_one_volume, SystemSpec,
    WegnerOneConfig, WindowCenter,
};
use nbw_core::geometry::{lattice_sites, r_separated, Box1, NRectangle};
use nbw_core::operator::{Boundary, Mesh};
use nbw_core::potential::{PotentialSpec, SingleSite, SiteLayout};
use nbw_core::spectral::{Spectrum, SpectrumWindow};

fn check(out: &mut String, name: &str, result: Result<()>) -> Result<()> {
    match result {
        Ok(()) => {
            let _ = writeln!(out, "[ok]   {name}");
            Ok(())
        }
        Err(e) => {
            let _ = writeln!(out, "[FAIL] {name}: {e}");
            Err(e)
        }
    }
}

fn ensure(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("selftest assertion failed: {what}")))
    }
}

pub fn run_battery() -> Result<String> {
    let mut out = String::new();
    let mut failed = false;

    let mut run = |name: &str, f: &dyn Fn() -> Result<()>| {
        if check(&mut out, name, f()).is_err() {
            failed = true;
        }
    };

    run("counter streams: determinism and key separation", &|| {
        use nbw_core::rng::{Purpose, Stream};
        let a: Vec<u64> = {
            let mut s = Stream::new(1, Purpose::Field, 2, 3);
            (0..8).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = Stream::new(1, Purpose::Field, 2, 3);
            (0..8).map(|_| s.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut s = Stream::new(1, Purpose::Field, 2, 4);
            (0..8).map(|_| s.next_u64()).collect()
        };
        ensure(a == b, "same key reproduces the stream")?;
        ensure(a != c, "distinct sites give distinct streams")
    });

    run("lattice skeleton: centered count L^d", &|| {
        let sites = lattice_sites(&Box1::centered(2, 5.0)?)?;
        ensure(sites.len() == 25, "5^2 skeleton points")
    });

    run("separation: shadowed pair decides with coordinate 2", &|| {
        let a = NRectangle::cube(2, 1, 1.0)?;
        let b = NRectangle::new(vec![Box1::new(vec![0], 1.0)?, Box1::new(vec![6], 1.0)?])?;
        let dec = r_separated(&a, &b, 1.0)?;
        let w = dec.witness.ok_or_else(|| {
            Error::InvalidParameter("expected a separation witness".into())
        })?;
        ensure(dec.separated && w.indices == vec![1], "witness coordinate set {2}")
    });

    run("mesh flattening is a bijection", &|| {
        let rect = NRectangle::new(vec![Box1::centered(2, 2.0)?, Box1::centered(2, 3.0)?])?;
        let mesh = Mesh::new(rect, 2, Boundary::Dirichlet)?;
        for idx in 0..mesh.size() {
            ensure(
                mesh.flatten(&mesh.unflatten(idx)) == idx,
                "round-trip index",
            )?;
        }
        Ok(())
    });

    run("spectrum oracle: tridiagonal eigenvalues and counts", &|| {
        let sys = SystemSpec::cube(
            1,
            1,
            11.0,
            Boundary::Dirichlet,
            1,
            PotentialSpec::anderson(SingleSite::cube(1.0, 1)?, SiteLayout::Regular),
            CouplingDistribution::degenerate(0.0)?,
        )?;
        let h = sys.build(0, 0)?;
        let sp = Spectrum::new(&h);
        ensure(sp.count_below(2.0) == 5, "half the band lies below 2")?;
        let slice = sp.eigen_window(SpectrumWindow::new(-1.0, 5.0)?)?;
        for (k, ev) in slice.eigenvalues.iter().enumerate() {
            let analytic =
                2.0 - 2.0 * ((k as f64 + 1.0) * std::f64::consts::PI / 11.0).cos();
            ensure((ev - analytic).abs() < 1e-10, "analytic eigenvalue")?;
        }
        Ok(())
    });

    run("concentration: empirical tracks exact", &|| {
        let d = CouplingDistribution::uniform(0.0, 1.0)?;
        let est = levy_concentration_empirical(&d, 0.2, 20_000, 40, 5)?;
        ensure(
            (est.estimate - 0.2).abs() < 0.02,
            "sliding-window estimate near 0.2",
        )
    });

    run("point sets: generate, verify, split", &|| {
        let wb = Box1::centered(2, 9.0)?;
        let gen = generate_delone(0.5, 1.5, &wb, 11, 1.0, 40, true)?;
        ensure(
            verify_delone(&gen.set.points, 0.5, 1.5, &wb).ok,
            "generated set verifies",
        )?;
        let split = split_delone(&gen.set)?;
        ensure(
            split.gamma1.points.len() + split.gamma2.len() == gen.set.points.len(),
            "split is a partition",
        )
    });

    run("field sampling: site-extension stability", &|| {
        let dist = CouplingDistribution::uniform(0.0, 1.0)?;
        let small: Vec<Vec<i64>> = (-2..=2).map(|j| vec![j]).collect();
        let large: Vec<Vec<i64>> = (-6..=6).map(|j| vec![j]).collect();
        let f1 = sample_field(&dist, &small, 9, 4)?;
        let f2 = sample_field(&dist, &large, 9, 4)?;
        for site in &small {
            ensure(
                f1.value(site)? == f2.value(site)?,
                "values stable under growth",
            )?;
        }
        Ok(())
    });

    run("weight series: three evaluation routes agree", &|| {
        for &b in &[0.5, 1.0, 2.0, 10.0] {
            for m in 1..=6usize {
                let closed = s_sum_closed(b, m)?;
                let fast = s_sum_geometric(b, m)?;
                ensure(((fast - closed) / closed).abs() <= 1e-14, "geometric route")?;
                let sigma: Vec<f64> = (0..=m)
                    .map(|j| {
                        if j == 0 {
                            1.0
                        } else {
                            b.powf(-((1i64 << (j - 1)) as f64))
                        }
                    })
                    .collect();
                let direct = s_sum(&sigma)?;
                ensure(((direct - closed) / closed).abs() <= 1e-13, "direct route")?;
            }
        }
        Ok(())
    });

    run("potential lower bound: 25 fuzzed configurations", &|| {
        let report = fuzz_lower_bound(25, 99)?;
        ensure(report.failures == 0, "no negative margins")
    });

    run("window scan: repeat run is identical", &|| {
        let sys = SystemSpec::cube(
            1,
            1,
            10.0,
            Boundary::Dirichlet,
            2,
            PotentialSpec::anderson(SingleSite::cube(1.0, 1)?, SiteLayout::Regular),
            CouplingDistribution::uniform(0.0, 1.0)?,
        )?;
        let cfg = WegnerOneConfig {
            volumes: vec![10.0],
            widths: vec![0.05, 0.1],
            center: WindowCenter::Quantile(0.05),
            trials: 40,
            seed: 123,
        };
        let r1 = wegner_one_volume(&sys, &cfg)?;
        let r2 = wegner_one_volume(&sys, &cfg)?;
        ensure(r1.center == r2.center, "center reproduces")?;
        for (a, b) in r1.cells.iter().zip(&r2.cells) {
            ensure(
                a.mean_trace == b.mean_trace && a.p_nonempty == b.p_nonempty,
                "aggregates reproduce bit-for-bit",
            )?;
        }
        // Monotonicity under window inclusion is exact on shared trials.
        for (a, b) in r1
            .raw
            .iter()
            .filter(|r| r.width == 0.05)
            .zip(r1.raw.iter().filter(|r| r.width == 0.1))
        {
            ensure(a.trace <= b.trace, "nested windows never lose counts")?;
        }
        Ok(())
    });

    if failed {
        Err(Error::InvalidParameter(format!(
            "selftest failures:\n{out}"
        )))
    } else {
        Ok(out)
    }
}
