use std::fmt::Write as _;

use serde_json::Value;

use super::config::ExperimentConfig;
use super::run::TrialResult;
use crate::Result;

/// Mean and standard error of one metric at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub snr_db: f64,
    pub pilot_energy: f64,
    pub metric: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-point statistics in grid order (SNR, then pilot energy), one row per
/// metric present in the trials: `mae`, `exact_rate`, `iterations`, `ber`.
pub fn summarize(cfg: &ExperimentConfig, trials: &[TrialResult]) -> Vec<PointSummary> {
    type Pick = fn(&TrialResult) -> Option<f64>;
    let metrics: [(&'static str, Pick); 4] = [
        ("mae", |t| t.mae),
        ("exact_rate", |t| t.exact.map(|e| f64::from(u8::from(e)))),
        ("iterations", |t| t.iterations),
        ("ber", |t| t.ber),
    ];
    let mut out = Vec::new();
    for &snr in &cfg.snr_db {
        for &e in &cfg.pilot_energy {
            let here: Vec<&TrialResult> = trials
                .iter()
                .filter(|t| t.snr_db == snr && t.pilot_energy == e)
                .collect();
            for (name, pick) in metrics {
                let values: Vec<f64> = here.iter().filter_map(|t| pick(t)).collect();
                if values.is_empty() {
                    continue;
                }
                let (mean, stderr) = mean_stderr(&values);
                out.push(PointSummary {
                    snr_db: snr,
                    pilot_energy: e,
                    metric: name,
                    mean,
                    stderr,
                    trials: values.len(),
                });
            }
        }
    }
    out
}

/// Looks up one summary row.
pub fn point<'a>(rows: &'a [PointSummary], snr_db: f64, pilot_energy: f64, metric: &str) -> Option<&'a PointSummary> {
    rows.iter()
        .find(|r| r.snr_db == snr_db && r.pilot_energy == pilot_energy && r.metric == metric)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// CSV with the configuration echoed as `# key=value` lines followed by
/// `snr_db,pilot_energy,metric,mean,stderr,trials` rows.
pub fn experiment_csv(experiment: &str, cfg: &ExperimentConfig, rows: &[PointSummary]) -> Result<String> {
    let mut echo = vec![
        ("experiment".to_string(), experiment.to_string()),
        ("delay_prior".to_string(), "uniform".to_string()),
    ];
    flatten("", &serde_json::to_value(cfg)?, &mut echo);
    let mut out = String::new();
    for (k, v) in echo {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("snr_db,pilot_energy,metric,mean,stderr,trials\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.9e},{:.9e},{}",
            r.snr_db, r.pilot_energy, r.metric, r.mean, r.stderr, r.trials
        );
    }
    Ok(out)
}
