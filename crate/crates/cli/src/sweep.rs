//! Alpha-grid sweeps comparing the series expansion, Blahut-Arimoto upper
//! bounds, exact i.i.d.-input rates and Monte Carlo checks.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use syncap_core::capacity::{blahut_arimoto, mutual_information, InputLaw};
use syncap_core::exact::EnumerationGuard;
use syncap_core::monte_carlo::{estimate_ab_entropy_rate, estimate_output_length, McConfig};
use syncap_core::series::{binary_entropy, capacity_expansion, epsilon2_bound};
use syncap_core::Error as CoreError;

use crate::error::CliError;
use crate::record::VERSION;

pub const CSV_SCHEMA: &str = "syncap-csv v1";
pub const CSV_FILE: &str = "sweep.csv";
pub const JSON_FILE: &str = "sweep.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub alpha_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    #[serde(rename = "L")]
    pub l: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Monte Carlo trials per alpha; zero disables the checks.
    pub trials: usize,
    pub mc_n: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub expansion: f64,
    /// Series truncation error of the expansion, `alpha * R_L`.
    pub tail: f64,
    /// Size of the second-order perturbation correction.
    pub eps2_budget: f64,
    #[serde(rename = "C_min_upper")]
    pub c_min_upper: Option<f64>,
    pub c_min_n: Option<usize>,
    /// Exact per-symbol rate under uniform i.i.d. input, one entry per blocklength.
    pub rate_iid: Vec<Option<f64>>,
    pub mc_status: String,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub params: SweepParams,
    pub rows: Vec<SweepRow>,
}

pub fn run_sweep(p: &SweepParams, guard: &EnumerationGuard) -> Result<SweepTable, CliError> {
    if let Some(&n_max) = p.n_list.last() {
        guard.check_alphabet(n_max)?;
    }
    let rows = p
        .alpha_grid
        .iter()
        .map(|&alpha| sweep_row(p, alpha, guard))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable {
        params: p.clone(),
        rows,
    })
}

fn sweep_row(p: &SweepParams, alpha: f64, guard: &EnumerationGuard) -> Result<SweepRow, CliError> {
    let x = capacity_expansion(alpha, p.l)?;
    let mut row = SweepRow {
        alpha,
        expansion: x.value,
        tail: alpha * x.g1.tail_bound,
        eps2_budget: epsilon2_bound(alpha, p.l)?.value,
        c_min_upper: None,
        c_min_n: None,
        rate_iid: Vec::with_capacity(p.n_list.len()),
        mc_status: "skipped".into(),
        errors: Vec::new(),
    };

    for &n in &p.n_list {
        match mutual_information(&InputLaw::uniform(n), alpha, guard) {
            Ok(r) => row.rate_iid.push(Some(r.per_symbol())),
            Err(e) => {
                row.rate_iid.push(None);
                row.errors.push(format!("rate n={n}: {e}"));
            }
        }
        let upper = match blahut_arimoto(n, alpha, p.tol, p.max_iter, guard) {
            Ok(t) => Some(t.upper_bound),
            // the certified bound holds whether or not the gap closed
            Err(CoreError::NotConverged { trace, .. }) => {
                row.errors
                    .push(format!("ba n={n}: gap {:.3e} above tolerance", trace.gap));
                Some(trace.upper_bound)
            }
            Err(e) => {
                row.errors.push(format!("ba n={n}: {e}"));
                None
            }
        };
        if let Some(u) = upper {
            if row.c_min_upper.is_none_or(|c| u < c) {
                row.c_min_upper = Some(u);
                row.c_min_n = Some(n);
            }
        }
    }

    if p.trials > 0 {
        row.mc_status = match mc_checks(p, alpha) {
            Ok(s) => s,
            Err(e) => {
                row.errors.push(format!("mc: {e}"));
                "error".into()
            }
        };
    }
    Ok(row)
}

fn mc_checks(p: &SweepParams, alpha: f64) -> Result<String, CoreError> {
    let cfg = McConfig::new(alpha, p.mc_n, p.trials, p.seed)?;
    let ab = estimate_ab_entropy_rate(&cfg)?.within(binary_entropy(alpha)? + alpha, 5.0);
    let len = estimate_output_length(&cfg)?.within(alpha, 5.0);
    Ok(match (ab, len) {
        (true, true) => "pass".into(),
        (false, true) => "fail:ab".into(),
        (true, false) => "fail:length".into(),
        (false, false) => "fail:ab+length".into(),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

impl SweepTable {
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = [
            "alpha",
            "expansion",
            "tail",
            "eps2_budget",
            "C_min_upper",
            "C_min_n",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend(self.params.n_list.iter().map(|n| format!("rate_iid_n{n}")));
        cols.push("mc_status".into());
        cols.push("errors".into());
        cols
    }

    /// CSV text: a schema comment line, then a header and one row per alpha.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns())?;
        for r in &self.rows {
            let mut rec = vec![
                r.alpha.to_string(),
                r.expansion.to_string(),
                r.tail.to_string(),
                r.eps2_budget.to_string(),
                cell(r.c_min_upper),
                r.c_min_n.map_or_else(|| "NA".into(), |n| n.to_string()),
            ];
            rec.extend(r.rate_iid.iter().map(|&v| cell(v)));
            rec.push(r.mc_status.clone());
            rec.push(r.errors.join("; "));
            w.write_record(rec)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(format!(
            "# {CSV_SCHEMA}\n{}",
            String::from_utf8(body).expect("utf-8 csv")
        ))
    }

    /// JSON mirror of the CSV with its parameters; contains no timestamps.
    pub fn to_json(&self) -> Result<String, CliError> {
        let doc = serde_json::json!({
            "schema": CSV_SCHEMA,
            "version": VERSION,
            "columns": self.columns(),
            "params": self.params,
            "rows": self.rows,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(CSV_FILE);
        let json_path = dir.join(JSON_FILE);
        fs::write(&csv_path, self.to_csv()?)?;
        fs::write(&json_path, self.to_json()?)?;
        Ok((csv_path, json_path))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:>8}  {:>10}  {:>12}  {:>9}",
            "alpha", "expansion", "C_min_upper", "mc"
        )
        .unwrap();
        for r in &self.rows {
            let c = r
                .c_min_upper
                .map_or_else(|| "NA".into(), |c| format!("{c:.6}"));
            writeln!(
                s,
                "{:>8}  {:>10.6}  {:>12}  {:>9}",
                r.alpha, r.expansion, c, r.mc_status
            )
            .unwrap();
            for e in &r.errors {
                writeln!(s, "          ! {e}").unwrap();
            }
        }
        s
    }
}
