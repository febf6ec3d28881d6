//! Outage, secrecy-rate and distribution-check experiments rendered as text.

use std::fmt::Write;

use relaysec::outage::{beta_ratio_check, pout1_check, pout2_check, sum_excluding_max_report};
use relaysec::{diversity_slope, estimate_outage, estimate_secrecy_rate};
use serde_json::json;

use crate::args::ExperimentSpec;
use crate::CliError;

/// SNR window (dB) used for the slope fit of outage curves.
pub const SLOPE_WINDOW_DB: (f64, f64) = (30.0, 45.0);

fn header(spec: &ExperimentSpec) -> String {
    spec.describe().lines().map(|l| format!("# {l}\n")).collect()
}

fn core_error(e: relaysec::Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// One row per `(L, snr)` with the Monte Carlo estimate and the bound, and
/// a trailing comment line with the fitted slope per `L`.
pub fn run_outage(spec: &ExperimentSpec) -> Result<String, CliError> {
    let mut out = header(spec);
    out.push_str("L,snr_db,pout_mc,pout_ub,outage_count,trials\n");
    let mut footer = String::new();
    for cfg in spec.configs() {
        let curve = estimate_outage(&cfg, &spec.snr_grid_db, spec.trials, spec.mode).map_err(core_error)?;
        for i in 0..curve.snr_db.len() {
            let ub = curve.pout_ub[i].map_or_else(|| "NA".to_string(), |v| v.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{}",
                cfg.l, curve.snr_db[i], curve.pout_mc[i], ub, curve.outage_count[i], curve.trials
            )
            .unwrap();
        }
        let (lo, hi) = SLOPE_WINDOW_DB;
        match diversity_slope(&curve, SLOPE_WINDOW_DB) {
            Ok(est) => {
                let used: Vec<String> = est.used_db.iter().map(ToString::to_string).collect();
                writeln!(
                    footer,
                    "# slope k={} L={}: {} window_db={lo}:{hi} points={} residual={}",
                    cfg.k,
                    cfg.l,
                    est.slope,
                    used.join(";"),
                    est.residual
                )
                .unwrap();
            }
            Err(e) => writeln!(footer, "# slope k={} L={}: NA window_db={lo}:{hi} ({e})", cfg.k, cfg.l).unwrap(),
        }
        writeln!(footer, "# resampled k={} L={}: {}", cfg.k, cfg.l, curve.resampled).unwrap();
    }
    out.push_str(&footer);
    Ok(out)
}

/// One row per `(K, snr)` with ergodic means.
pub fn run_secrecy_rate(spec: &ExperimentSpec) -> Result<String, CliError> {
    let mut out = header(spec);
    out.push_str("snr_db,K,r_secrecy_mean,r_bob_mean,r_eve_max_mean,trials\n");
    let mut footer = String::new();
    for cfg in spec.configs() {
        let curve = estimate_secrecy_rate(&cfg, &spec.snr_grid_db, spec.trials, spec.mode).map_err(core_error)?;
        for p in &curve.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.snr_db, cfg.k, p.r_secrecy_mean, p.r_bob_mean, p.r_eve_max_mean, p.trials
            )
            .unwrap();
        }
        writeln!(footer, "# resampled k={} L={}: {}", cfg.k, cfg.l, curve.resampled).unwrap();
    }
    out.push_str(&footer);
    Ok(out)
}

/// Cut points of the sum-excluding-max CDF report.
const CDF_POINTS: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];

/// Distributional probes per configuration as a JSON document. The boolean
/// is false when the projection-ratio KS test or a moment check fails.
pub fn run_dist_check(spec: &ExperimentSpec) -> Result<(String, bool), CliError> {
    let mut reports = Vec::new();
    let mut passed = true;
    for cfg in spec.configs() {
        let beta = beta_ratio_check(&cfg, spec.trials as usize).map_err(core_error)?;
        passed &= beta.ks_pass && beta.parallel_energy.within_3_sigma && beta.perpendicular_energy.within_3_sigma;
        let pout1 = spec
            .snr_grid_db
            .iter()
            .map(|&db| pout1_check(&cfg, db, cfg.epsilon, spec.trials))
            .collect::<Result<Vec<_>, _>>()
            .map_err(core_error)?;
        let pout2 = pout2_check(&cfg, &spec.snr_grid_db, cfg.epsilon, spec.trials).map_err(core_error)?;
        let sum_excl = sum_excluding_max_report(cfg.l, spec.trials, cfg.seed, &CDF_POINTS);
        reports.push(json!({
            "k": cfg.k,
            "l": cfg.l,
            "projection_ratio": beta,
            "pout1": pout1,
            "pout2": pout2,
            "sum_excluding_max_cdf": sum_excl,
        }));
    }
    let doc = json!({
        "spec": spec.describe().lines().collect::<Vec<_>>(),
        "passed": passed,
        "configs": reports,
    });
    Ok((serde_json::to_string_pretty(&doc).unwrap() + "\n", passed))
}
