//! Experiment orchestration: chunked trial execution with checkpointed raw
//! records, resumable after interruption, with aggregates recomputed from
//! the full record set so resumed and uninterrupted runs are identical.

use std::fmt::Write as _;

use serde_json::json;

use nbw_core::disorder::{generate_delone, split_delone, verify_delone};
use nbw_core::error::{Error, Result};
use nbw_core::experiments::{
    convolution_aggregate, convolution_trials, ids_aggregate, ids_trials, lipschitz_aggregate,
    lipschitz_trials, two_volume_witness, ucp_aggregate, ucp_trials, ucp_windows,
    wegner_one_aggregate, wegner_one_center, wegner_one_trials, wegner_two_aggregate,
    wegner_two_trials, ConvolutionTrialRow, IdsTrialRow, SystemSpec, UcpTrialRow,
    VolumeTrialRow, Warning, WegnerTrialRecord,
};
use nbw_core::geometry::SeparationSide;

use crate::config::{DeloneCheckPlan, ExperimentConfig, Plan};
use crate::output::{fmt_f64, parse_f64, Checkpoint, OutputWriter};
use crate::selftest;

fn chunk_size(total: usize) -> usize {
    total.div_ceil(8).clamp(1, 500)
}

/// Runs all trials of an ensemble in checkpointed chunks. The raw CSV is the
/// checkpoint medium; rows parse back exactly (shortest round-trip floats).
fn run_ensemble<Row>(
    writer: &OutputWriter,
    header: &str,
    total: usize,
    to_csv: impl Fn(&Row) -> String,
    from_csv: impl Fn(&str) -> Result<Row>,
    run_chunk: impl Fn(u64, usize) -> Result<Vec<Row>>,
) -> Result<Vec<Row>> {
    let chunk = chunk_size(total);
    let mut rows: Vec<Row> = Vec::new();
    let mut done = 0usize;
    match Checkpoint::load(&writer.dir)? {
        Some(cp) => {
            if cp.config_hash != writer.hash {
                return Err(Error::InvalidParameter(format!(
                    "output directory holds a checkpoint for config {}, this run is {}; \
                     remove it or choose another --out",
                    cp.config_hash, writer.hash
                )));
            }
            if cp.total_trials != total {
                return Err(Error::InvalidParameter(format!(
                    "checkpoint was taken with {} trials, this run wants {total}; \
                     remove the output directory to start over",
                    cp.total_trials
                )));
            }
            match writer.read_raw("raw.csv")? {
                Some(lines) => {
                    for line in &lines {
                        rows.push(from_csv(line)?);
                    }
                    done = cp.trials_done;
                }
                None => {
                    return Err(Error::InvalidParameter(
                        "checkpoint.json exists but raw.csv is missing; remove the output \
                         directory to start over"
                            .into(),
                    ))
                }
            }
        }
        None => {
            writer.start_csv("raw.csv", header)?;
        }
    }
    while done < total {
        let count = chunk.min(total - done);
        let new_rows = run_chunk(done as u64, count)?;
        let mut text = String::new();
        for r in &new_rows {
            text.push_str(&to_csv(r));
            text.push('\n');
        }
        writer.append_csv("raw.csv", &text)?;
        rows.extend(new_rows);
        done += count;
        Checkpoint {
            config_hash: writer.hash.clone(),
            trials_done: done,
            total_trials: total,
        }
        .store(&writer.dir)?;
    }
    Checkpoint::clear(&writer.dir)?;
    if !writer.write_raw {
        let _ = std::fs::remove_file(writer.path("raw.csv"));
    }
    Ok(rows)
}

fn plot_rows(points: &[(f64, f64, f64, f64, String)]) -> String {
    let mut out = String::new();
    for (x, y, lo, hi, series) in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{series}",
            fmt_f64(*x),
            fmt_f64(*y),
            fmt_f64(*lo),
            fmt_f64(*hi)
        );
    }
    out
}

pub fn run(cfg: &ExperimentConfig, writer: &OutputWriter) -> Result<Vec<Warning>> {
    match cfg.plan()? {
        Plan::WegnerOne(sys, wcfg) => run_wegner1(cfg, writer, &sys, &wcfg),
        Plan::WegnerTwo(a, b, tcfg) => run_wegner2(cfg, writer, &a, &b, &tcfg),
        Plan::Ids(sys, icfg) => run_ids(cfg, writer, &sys, &icfg),
        Plan::IdsConv(sys, n, ccfg) => run_conv(cfg, writer, &sys, n, &ccfg),
        Plan::Lipschitz(sys, lcfg) => run_lipschitz(cfg, writer, &sys, &lcfg),
        Plan::Ucp(sys, ucfg) => run_ucp(cfg, writer, &sys, &ucfg),
        Plan::DeloneCheck(plan) => run_delone_check(cfg, writer, &plan),
        Plan::Selftest => {
            let report = selftest::run_battery()?;
            writer.write_report(cfg, &[], &report)?;
            writer.write_summary(cfg, &[], json!({"selftest": "pass"}))?;
            Ok(Vec::new())
        }
    }
}

fn run_wegner1(
    cfg: &ExperimentConfig,
    writer: &OutputWriter,
    sys: &SystemSpec,
    wcfg: &nbw_core::experiments::WegnerOneConfig,
) -> Result<Vec<Warning>> {
    let center = wegner_one_center(sys, wcfg)?;
    let rows = run_ensemble(
        writer,
        "side,width,trial,trace",
        wcfg.trials,
        |r: &WegnerTrialRecord| {
            format!("{},{},{},{}", fmt_f64(r.side), fmt_f64(r.width), r.trial, r.trace)
        },
        |line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad record: {line:?}")));
            }
            Ok(WegnerTrialRecord {
                side: parse_f64(f[0])?,
                width: parse_f64(f[1])?,
                trial: f[2].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                trace: f[3].parse().map_err(|e| Error::Parse(format!("{e}")))?,
            })
        },
        |base, count| wegner_one_trials(sys, wcfg, center, base, count),
    )?;
    let res = wegner_one_aggregate(sys, wcfg, center, rows)?;

    let mut agg = String::new();
    for c in &res.cells {
        let _ = writeln!(
            agg,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(c.side),
            fmt_f64(c.width),
            fmt_f64(c.window.lo),
            fmt_f64(c.window.hi),
            fmt_f64(c.volume),
            fmt_f64(c.s_width),
            c.trials,
            fmt_f64(c.p_nonempty),
            fmt_f64(c.p_ci.0),
            fmt_f64(c.p_ci.1),
            fmt_f64(c.mean_trace),
            fmt_f64(c.trace_ci.0),
            fmt_f64(c.trace_ci.1),
        );
    }
    writer.write_csv_file(
        "aggregate.csv",
        "side,width,window_lo,window_hi,volume,s_width,trials,p_nonempty,p_lo,p_hi,mean_trace,trace_lo,trace_hi",
        &agg,
    )?;

    let mut plot = Vec::new();
    for c in &res.cells {
        plot.push((
            c.width,
            c.mean_trace,
            c.trace_ci.0,
            c.trace_ci.1,
            format!("L={}", c.side),
        ));
    }
    writer.write_csv_file("plot.csv", "x,y,ci_lo,ci_hi,series", &plot_rows(&plot))?;

    let results = json!({
        "center": res.center,
        "fits_vs_width": res.fit_vs_width.iter().map(|(side, fit)| json!({
            "side": side, "slope": fit.slope, "r_squared": fit.r_squared,
        })).collect::<Vec<_>>(),
        "fits_vs_volume": res.fit_vs_volume.iter().map(|(width, fit)| json!({
            "width": width, "slope": fit.slope, "r_squared": fit.r_squared,
        })).collect::<Vec<_>>(),
        "cells": res.cells.iter().map(|c| json!({
            "side": c.side, "width": c.width, "p_nonempty": c.p_nonempty,
            "mean_trace": c.mean_trace,
        })).collect::<Vec<_>>(),
    });
    writer.write_summary(cfg, &res.warnings, results)?;

    let mut body = String::new();
    let _ = writeln!(body, "window center: {}", res.center);
    let _ = writeln!(body, "side  width    P(hit)   mean count  count/volume");
    for c in &res.cells {
        let _ = writeln!(
            body,
            "{:<5} {:<8} {:<8.4} {:<11.5} {:.6}",
            c.side,
            c.width,
            c.p_nonempty,
            c.mean_trace,
            c.mean_trace / c.volume
        );
    }
    for (side, fit) in &res.fit_vs_width {
        let _ = writeln!(
            body,
            "mean count vs s(width) at L={side}: slope {:.5} (empirical), R^2 {:.6}",
            fit.slope, fit.r_squared
        );
    }
    for (width, fit) in &res.fit_vs_volume {
        let _ = writeln!(
            body,
            "mean count vs volume at width {width}: slope {:.7} (empirical), R^2 {:.6}",
            fit.slope, fit.r_squared
        );
    }
    writer.write_report(cfg, &res.warnings, &body)?;
    Ok(res.warnings)
}

fn run_wegner2(
    cfg: &ExperimentConfig,
    writer: &OutputWriter,
    a: &SystemSpec,
    b: &SystemSpec,
    tcfg: &nbw_core::experiments::TwoVolumeConfig,
) -> Result<Vec<Warning>> {
    let witness = two_volume_witness(a, b, tcfg.separation_r)?;
    let rows = run_ensemble(
        writer,
        "trial,min_distance,a_count,b_count,a_hit,b_hit",
        tcfg.trials,
        |r: &nbw_core::experiments::TwoVolumeTrial| {
            format!(
                "{},{},{},{},{},{}",
                r.trial,
                fmt_f64(r.min_distance),
                r.a_count,
                r.b_count,
                r.a_hit_window as u8,
                r.b_hit_window as u8
            )
        },
        |line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("bad record: {line:?}")));
            }
            Ok(nbw_core::experiments::TwoVolumeTrial {
                trial: f[0].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                min_distance: parse_f64(f[1])?,
                a_count: f[2].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                b_count: f[3].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                a_hit_window: f[4] == "1",
                b_hit_window: f[5] == "1",
            })
        },
        |base, count| wegner_two_trials(a, b, tcfg, base, count),
    )?;
    let res = wegner_two_aggregate(a, b, tcfg, witness, rows)?;

    let mut agg = String::new();
    for (eps, p, (lo, hi)) in &res.cdf {
        let _ = writeln!(
            agg,
            "{},{},{},{}",
            fmt_f64(*eps),
            fmt_f64(*p),
            fmt_f64(*lo),
            fmt_f64(*hi)
        );
    }
    writer.write_csv_file("aggregate.csv", "epsilon,p_close,p_lo,p_hi", &agg)?;
    let plot: Vec<_> = res
        .cdf
        .iter()
        .map(|(e, p, ci)| (*e, *p, ci.0, ci.1, "dist_cdf".to_string()))
        .collect();
    writer.write_csv_file("plot.csv", "x,y,ci_lo,ci_hi,series", &plot_rows(&plot))?;

    let side = match res.witness.side {
        SeparationSide::FirstBox => "first",
        SeparationSide::SecondBox => "second",
    };
    let results = json!({
        "witness": {
            "coordinates": res.witness.indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "condition": side,
            "distance": res.witness.distance,
        },
        "fit": {"slope": res.fit.slope, "r_squared": res.fit.r_squared},
        "cdf": res.cdf.iter().map(|(e, p, ci)| json!({
            "epsilon": e, "p": p, "ci": [ci.0, ci.1],
        })).collect::<Vec<_>>(),
        "product_check": res.product_check.as_ref().map(|pl| json!({
            "p_joint": pl.p_joint, "joint_ci": [pl.joint_ci.0, pl.joint_ci.1],
            "p_a": pl.p_a, "p_b": pl.p_b, "consistent": pl.consistent,
        })),
    });
    writer.write_summary(cfg, &res.warnings, results)?;

    let mut body = String::new();
    let _ = writeln!(
        body,
        "separation witness: coordinates {:?} ({side} condition), distance {:.4}",
        res.witness.indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
        res.witness.distance
    );
    let _ = writeln!(body, "epsilon   P(dist < eps)   CI");
    for (eps, p, (lo, hi)) in &res.cdf {
        let _ = writeln!(body, "{eps:<9} {p:<15.4} ({lo:.4}, {hi:.4})");
    }
    let _ = writeln!(
        body,
        "linear fit through origin: slope {:.4} (empirical), R^2 {:.6}",
        res.fit.slope, res.fit.r_squared
    );
    if let Some(pl) = &res.product_check {
        let _ = writeln!(
            body,
            "joint window hits: P = {:.4} in ({:.4}, {:.4}); marginals {:.4} * {:.4} = {:.4}; \
             product law consistent: {}",
            pl.p_joint,
            pl.joint_ci.0,
            pl.joint_ci.1,
            pl.p_a,
            pl.p_b,
            pl.p_a * pl.p_b,
            pl.consistent
        );
    }
    writer.write_report(cfg, &res.warnings, &body)?;
    Ok(res.warnings)
}

fn counts_to_csv(counts: &[usize]) -> String {
    counts
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn counts_from_csv(fields: &[&str]) -> Result<Vec<usize>> {
    fields
        .iter()
        .map(|f| f.parse::<usize>().map_err(|e| Error::Parse(format!("{e}"))))
        .collect()
}

fn ids_header(grid: &nbw_core::experiments::EnergyGrid, prefix: &str) -> String {
    let mut cols = vec!["trial".to_string()];
    for k in 0..grid.len() {
        cols.push(format!("{prefix}{}", fmt_f64(grid.energy(k))));
    }
    cols.join(",")
}

fn run_ids(
    cfg: &ExperimentConfig,
    writer: &OutputWriter,
    sys: &SystemSpec,
    icfg: &nbw_core::experiments::IdsConfig,
) -> Result<Vec<Warning>> {
    let grid = icfg.grid;
    let rows = run_ensemble(
        writer,
        &ids_header(&grid, "n@"),
        icfg.trials,
        |r: &IdsTrialRow| format!("{},{}", r.trial, counts_to_csv(&r.counts)),
        |line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != grid.len() + 1 {
                return Err(Error::Parse(format!("bad record width {}", f.len())));
            }
            Ok(IdsTrialRow {
                trial: f[0].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                counts: counts_from_csv(&f[1..])?,
            })
        },
        |base, count| ids_trials(sys, &grid, icfg.seed, base, count),
    )?;
    let res = ids_aggregate(sys, &grid, rows)?;

    let mut agg = String::new();
    for k in 0..grid.len() {
        let dos = if k > 0 {
            fmt_f64(res.dos_mass[k - 1])
        } else {
            String::new()
        };
        let _ = writeln!(
            agg,
            "{},{},{},{},{},{}",
            fmt_f64(grid.energy(k)),
            fmt_f64(res.mean_ids[k]),
            fmt_f64(res.ci[k].0),
            fmt_f64(res.ci[k].1),
            fmt_f64(res.variance[k]),
            dos
        );
    }
    writer.write_csv_file(
        "aggregate.csv",
        "energy,mean_ids,ci_lo,ci_hi,variance,dos_mass",
        &agg,
    )?;
    let plot: Vec<_> = (0..grid.len())
        .map(|k| {
            (
                grid.energy(k),
                res.mean_ids[k],
                res.ci[k].0,
                res.ci[k].1,
                "ids".to_string(),
            )
        })
        .collect();
    writer.write_csv_file("plot.csv", "x,y,ci_lo,ci_hi,series", &plot_rows(&plot))?;

    let results = json!({
        "volume": res.volume,
        "grid": {"start": grid.start, "step": grid.step, "bins": grid.bins},
        "max_ids": res.mean_ids.last(),
    });
    writer.write_summary(cfg, &res.warnings, results)?;
    let mut body = String::new();
    let _ = writeln!(body, "normalized counting function over {} grid points", grid.len());
    let _ = writeln!(
        body,
        "volume {}, final value {:.6}",
        res.volume,
        res.mean_ids.last().unwrap_or(&0.0)
    );
    writer.write_report(cfg, &res.warnings, &body)?;
    Ok(res.warnings)
}

fn run_conv(
    cfg: &ExperimentConfig,
    writer: &OutputWriter,
    sys: &SystemSpec,
    n_particles: usize,
    ccfg: &nbw_core::experiments::ConvolutionConfig,
) -> Result<Vec<Warning>> {
    let grid = ccfg.grid;
    let len = grid.len();
    let header = {
        let mut cols = vec!["trial".to_string()];
        for prefix in ["one@", "shared@", "indep@"] {
            for k in 0..len {
                cols.push(format!("{prefix}{}", fmt_f64(grid.energy(k))));
            }
        }
        cols.join(",")
    };
    let rows = run_ensemble(
        writer,
        &header,
        ccfg.trials,
        |r: &ConvolutionTrialRow| {
            format!(
                "{},{},{},{}",
                r.trial,
                counts_to_csv(&r.one_body),
                counts_to_csv(&r.shared),
                counts_to_csv(&r.independent)
            )
        },
        |line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 * len + 1 {
                return Err(Error::Parse(format!("bad record width {}", f.len())));
            }
            Ok(ConvolutionTrialRow {
                trial: f[0].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                one_body: counts_from_csv(&f[1..=len])?,
                shared: counts_from_csv(&f[len + 1..=2 * len])?,
                independent: counts_from_csv(&f[2 * len + 1..])?,
            })
        },
        |base, count| convolution_trials(sys, n_particles, ccfg, base, count),
    )?;
    let res = convolution_aggregate(sys, n_particles, ccfg, rows)?;

    let mut agg = String::new();
    for k in 0..len {
        let _ = writeln!(
            agg,
            "{},{},{},{},{}",
            fmt_f64(grid.energy(k)),
            fmt_f64(res.one_body.mean_ids[k]),
            fmt_f64(res.convolved[k]),
            fmt_f64(res.nbody_shared[k]),
            fmt_f64(res.nbody_independent[k]),
        );
    }
    writer.write_csv_file(
        "aggregate.csv",
        "energy,one_body_ids,convolved,nbody_shared,nbody_independent",
        &agg,
    )?;
    let mut plot = Vec::new();
    for k in 0..len {
        let e = grid.energy(k);
        plot.push((e, res.convolved[k], f64::NAN, f64::NAN, "convolved".to_string()));
        plot.push((e, res.nbody_shared[k], f64::NAN, f64::NAN, "shared".to_string()));
        plot.push((
            e,
            res.nbody_independent[k],
            f64::NAN,
            f64::NAN,
            "independent".to_string(),
        ));
    }
    writer.write_csv_file("plot.csv", "x,y,ci_lo,ci_hi,series", &plot_rows(&plot))?;

    let results = json!({
        "sup_shared": res.sup_shared,
        "sup_independent": res.sup_independent,
        "l1_shared": res.l1_shared,
        "l1_independent": res.l1_independent,
    });
    writer.write_summary(cfg, &res.warnings, results)?;
    let mut body = String::new();
    let _ = writeln!(
        body,
        "sup-norm discrepancy vs convolution: shared-field {:.5}, independent-field {:.5}",
        res.sup_shared, res.sup_independent
    );
    let _ = writeln!(
        body,
        "L1 discrepancy: shared-field {:.5}, independent-field {:.5}",
        res.l1_shared, res.l1_independent
    );
    writer.write_report(cfg, &res.warnings, &body)?;
    Ok(res.warnings)
}

fn run_lipschitz(
    cfg: &ExperimentConfig,
    writer: &OutputWriter,
    sys: &SystemSpec,
    lcfg: &nbw_core::experiments::LipschitzConfig,
) -> Result<Vec<Warning>> {
    let grid = lcfg.grid;
    let header = {
        let mut cols = vec!["side".to_string(), "trial".to_string()];
        for k in 0..grid.len() {
            cols.push(format!("n@{}", fmt_f64(grid.energy(k))));
        }
        cols.join(",")
    };
    let rows = run_ensemble(
        writer,
        &header,
        lcfg.trials,
        |r: &VolumeTrialRow| {
            format!("{},{},{}", fmt_f64(r.side), r.trial, counts_to_csv(&r.counts))
        },
        |line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != grid.len() + 2 {
                return Err(Error::Parse(format!("bad record width {}", f.len())));
            }
            Ok(VolumeTrialRow {
                side: parse_f64(f[0])?,
                trial: f[1].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                counts: counts_from_csv(&f[2..])?,
            })
        },
        |base, count| lipschitz_trials(sys, lcfg, base, count),
    )?;
    let res = lipschitz_aggregate(sys, lcfg, rows)?;

    let mut agg = String::new();
    for s in &res.max_slopes {
        let _ = writeln!(
            agg,
            "{},{},{},{}",
            fmt_f64(s.side),
            fmt_f64(s.slope),
            fmt_f64(s.at_energy),
            fmt_f64(s.se)
        );
    }
    writer.write_csv_file("aggregate.csv", "side,max_slope,at_energy,se", &agg)?;
    let mut plot = Vec::new();
    for table in &res.tables {
        let side = table.volume.powf(1.0 / (sys.particles() * sys.d) as f64);
        for k in 0..grid.len() {
            plot.push((
                grid.energy(k),
                table.mean_ids[k],
                table.ci[k].0,
                table.ci[k].1,
                format!("L={side:.0}"),
            ));
        }
    }
    writer.write_csv_file("plot.csv", "x,y,ci_lo,ci_hi,series", &plot_rows(&plot))?;

    let results = json!({
        "max_slopes": res.max_slopes.iter().map(|s| json!({
            "side": s.side, "slope": s.slope, "at_energy": s.at_energy, "se": s.se,
        })).collect::<Vec<_>>(),
    });
    writer.write_summary(cfg, &res.warnings, results)?;
    let mut body = String::new();
    let _ = writeln!(body, "side   max slope   at energy   se");
    for s in &res.max_slopes {
        let _ = writeln!(
            body,
            "{:<6} {:<11.5} {:<11.3} {:.5}",
            s.side, s.slope, s.at_energy, s.se
        );
    }
    writer.write_report(cfg, &res.warnings, &body)?;
    Ok(res.warnings)
}

fn run_ucp(
    cfg: &ExperimentConfig,
    writer: &OutputWriter,
    sys: &SystemSpec,
    ucfg: &nbw_core::experiments::UcpConfig,
) -> Result<Vec<Warning>> {
    let windows = ucp_windows(sys, ucfg)?;
    let rows = run_ensemble(
        writer,
        "side,trial,window_lo,ratio",
        ucfg.trials,
        |r: &UcpTrialRow| {
            let ratio = r.ratio.map(fmt_f64).unwrap_or_default();
            format!("{},{},{},{ratio}", fmt_f64(r.side), r.trial, fmt_f64(r.window_lo))
        },
        |line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad record: {line:?}")));
            }
            Ok(UcpTrialRow {
                side: parse_f64(f[0])?,
                trial: f[1].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                window_lo: parse_f64(f[2])?,
                ratio: if f[3].is_empty() {
                    None
                } else {
                    Some(parse_f64(f[3])?)
                },
            })
        },
        |base, count| ucp_trials(sys, ucfg, &windows, base, count),
    )?;
    let res = ucp_aggregate(sys, ucfg, windows, rows)?;

    let mut agg = String::new();
    for v in &res.per_volume {
        let _ = writeln!(
            agg,
            "{},{},{},{},{}",
            fmt_f64(v.side),
            fmt_f64(v.min_ratio),
            fmt_f64(v.mean_ratio),
            v.nonempty_slices,
            v.total_slices
        );
    }
    writer.write_csv_file(
        "aggregate.csv",
        "side,min_ratio,mean_ratio,nonempty_slices,total_slices",
        &agg,
    )?;
    let plot: Vec<_> = res
        .per_volume
        .iter()
        .map(|v| (v.side, v.min_ratio, f64::NAN, f64::NAN, "min_ratio".to_string()))
        .collect();
    writer.write_csv_file("plot.csv", "x,y,ci_lo,ci_hi,series", &plot_rows(&plot))?;

    let results = json!({
        "width_cap": res.width_cap,
        "trend_ratio": res.trend_ratio,
        "per_volume": res.per_volume.iter().map(|v| json!({
            "side": v.side, "min_ratio": v.min_ratio, "mean_ratio": v.mean_ratio,
            "nonempty_slices": v.nonempty_slices, "total_slices": v.total_slices,
        })).collect::<Vec<_>>(),
    });
    writer.write_summary(cfg, &res.warnings, results)?;
    let mut body = String::new();
    let _ = writeln!(
        body,
        "reporting width cap 2*gamma = {:.4e}; trend (largest/smallest min) = {:.4}",
        res.width_cap, res.trend_ratio
    );
    let _ = writeln!(body, "side   min ratio     mean ratio    nonempty/total");
    for v in &res.per_volume {
        let _ = writeln!(
            body,
            "{:<6} {:<13.5e} {:<13.5e} {}/{}",
            v.side, v.min_ratio, v.mean_ratio, v.nonempty_slices, v.total_slices
        );
    }
    writer.write_report(cfg, &res.warnings, &body)?;
    Ok(res.warnings)
}

fn run_delone_check(
    cfg: &ExperimentConfig,
    writer: &OutputWriter,
    plan: &DeloneCheckPlan,
) -> Result<Vec<Warning>> {
    let side = if plan.box_side > 0.0 {
        plan.box_side
    } else {
        (6.0 * plan.covering).ceil()
    };
    let wb = nbw_core::geometry::Box1::centered(plan.dimension, side)?;
    let mut raw = String::new();
    let mut all_ok = true;
    let mut results = Vec::new();
    for index in 0..plan.count {
        let gen = generate_delone(
            plan.m,
            plan.covering,
            &wb,
            plan.seed.wrapping_add(index as u64),
            plan.jitter_frac,
            40,
            true,
        )?;
        let verify = verify_delone(&gen.set.points, plan.m, plan.covering, &wb);
        let split = split_delone(&gen.set)?;
        let g1_verify = verify_delone(&split.gamma1.points, plan.m, plan.covering, &wb);
        let partition_ok =
            split.gamma1.points.len() + split.gamma2.len() == gen.set.points.len();
        let ok = verify.ok && g1_verify.ok && partition_ok;
        all_ok &= ok;
        let _ = writeln!(
            raw,
            "{index},{},{},{},{},{},{},{}",
            ok as u8,
            gen.rounds_used,
            fmt_f64(gen.jitter_amplitude),
            gen.set.points.len(),
            split.gamma1.points.len(),
            split.gamma2.len(),
            g1_verify.ok as u8
        );
        results.push(json!({
            "index": index, "ok": ok, "rounds": gen.rounds_used,
            "points": gen.set.points.len(),
        }));
    }
    if writer.write_raw {
        writer.start_csv("raw.csv", "index,ok,rounds,jitter,points,gamma1,gamma2,gamma1_ok")?;
        writer.append_csv("raw.csv", &raw)?;
    }
    let agg = format!("{},{},{}\n", plan.count, all_ok as u8, plan.count);
    writer.write_csv_file("aggregate.csv", "sets,all_ok,verified", &agg)?;
    writer.write_summary(cfg, &[], json!({"sets": plan.count, "all_ok": all_ok}))?;
    let mut body = String::new();
    let _ = writeln!(
        body,
        "{} generated point sets, all verified: {}",
        plan.count, all_ok
    );
    writer.write_report(cfg, &[], &body)?;
    if !all_ok {
        return Err(Error::GenerationFailure(
            "at least one generated point set failed verification".into(),
        ));
    }
    Ok(Vec::new())
}
