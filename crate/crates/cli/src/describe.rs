//! Dry-run planning: matrix dimensions, trial counts, threshold warnings,
//! and separation witnesses, without running any ensemble.

use std::fmt::Write as _;

use nbw_core::error::Result;
use nbw_core::experiments::{two_volume_witness, SystemSpec};
use nbw_core::geometry::SeparationSide;
use nbw_core::operator::Boundary;

use crate::config::{ExperimentConfig, Plan};
use crate::output::config_hash;

fn axis_nodes(side: f64, p: usize, boundary: Boundary) -> usize {
    let segments = side as usize * p;
    match boundary {
        Boundary::Dirichlet => segments.saturating_sub(1),
        Boundary::Periodic => segments,
    }
}

fn dimension_of(sys: &SystemSpec) -> usize {
    sys.factors
        .iter()
        .map(|f| axis_nodes(f.side(), sys.points_per_unit, sys.boundary).pow(sys.d as u32))
        .product()
}

fn describe_system(out: &mut String, label: &str, sys: &SystemSpec, volumes: Option<&[f64]>) {
    let _ = writeln!(
        out,
        "{label}: d={}, N={}, boundary={:?}, p={}",
        sys.d,
        sys.particles(),
        sys.boundary,
        sys.points_per_unit
    );
    let sides: Vec<f64> = match volumes {
        Some(vs) => vs.to_vec(),
        None => vec![sys.min_side()],
    };
    for side in sides {
        let resized = if volumes.is_some() {
            sys.with_side(side).unwrap_or_else(|_| sys.clone())
        } else {
            sys.clone()
        };
        let dim = dimension_of(&resized);
        let per_axis: Vec<usize> = resized
            .factors
            .iter()
            .map(|f| axis_nodes(f.side(), resized.points_per_unit, resized.boundary))
            .collect();
        let _ = write!(
            out,
            "  sides {:?}: nodes per axis {:?}, matrix dimension {dim}",
            resized.factors.iter().map(|f| f.side()).collect::<Vec<_>>(),
            per_axis
        );
        if dim > resized.max_dimension {
            let _ = write!(
                out,
                "  -> REFUSED: exceeds the dimension cap {} (raise system.max_dimension)",
                resized.max_dimension
            );
        }
        let _ = writeln!(out);
        for w in resized.warnings() {
            let _ = writeln!(out, "  warning [{}]: {}", w.code, w.message);
        }
    }
}

pub fn describe(cfg: &ExperimentConfig) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "config hash: {}", config_hash(cfg));
    let _ = writeln!(out, "experiment:  {}", cfg.experiment.kind);
    let _ = writeln!(out, "trials:      {}", cfg.experiment.trials);
    match cfg.plan()? {
        Plan::WegnerOne(sys, wcfg) => {
            describe_system(&mut out, "system", &sys, Some(&wcfg.volumes));
            let _ = writeln!(out, "widths: {:?}", wcfg.widths);
        }
        Plan::WegnerTwo(a, b, tcfg) => {
            describe_system(&mut out, "box A", &a, None);
            describe_system(&mut out, "box B", &b, None);
            let witness = two_volume_witness(&a, &b, tcfg.separation_r)?;
            let side = match witness.side {
                SeparationSide::FirstBox => "first",
                SeparationSide::SecondBox => "second",
            };
            let _ = writeln!(
                out,
                "separation witness: coordinates {:?} ({side} condition), distance {:.4} > 2R = {}",
                witness.indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
                witness.distance,
                2.0 * tcfg.separation_r
            );
        }
        Plan::Ids(sys, icfg) => {
            describe_system(&mut out, "system", &sys, None);
            let _ = writeln!(
                out,
                "energy grid: [{}, {}] step {} ({} points)",
                icfg.grid.start,
                icfg.grid.energy(icfg.grid.bins),
                icfg.grid.step,
                icfg.grid.len()
            );
        }
        Plan::IdsConv(sys, n, ccfg) => {
            describe_system(&mut out, "one-body system", &sys, None);
            let mut product = (*sys).clone();
            product.factors = vec![sys.factors[0].clone(); n];
            describe_system(&mut out, "product system", &product, None);
            let _ = writeln!(
                out,
                "energy grid: [{}, {}] step {}",
                ccfg.grid.start,
                ccfg.grid.energy(ccfg.grid.bins),
                ccfg.grid.step
            );
        }
        Plan::Lipschitz(sys, lcfg) => {
            describe_system(&mut out, "system", &sys, Some(&lcfg.volumes));
        }
        Plan::Ucp(sys, ucfg) => {
            describe_system(&mut out, "system", &sys, Some(&ucfg.volumes));
            let _ = writeln!(
                out,
                "windows: {} of width {} below E0 = {}",
                ucfg.n_windows, ucfg.window_width, ucfg.e0
            );
        }
        Plan::DeloneCheck(plan) => {
            let _ = writeln!(
                out,
                "point-set check: {} sets, m={}, M={}, d={}",
                plan.count, plan.m, plan.covering, plan.dimension
            );
        }
        Plan::Selftest => {
            let _ = writeln!(out, "selftest battery (no ensemble)");
        }
    }
    Ok(out)
}
