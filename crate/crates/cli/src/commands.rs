//! Typed parameters and execution for each subcommand.
//!
//! Parameters are resolved once (CLI, then config file, then defaults) into a
//! serializable form; the same form drives both fresh runs and replays.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use syncap_core::capacity::{blahut_arimoto, mutual_information, BaTrace, InputLaw};
use syncap_core::exact::{channel_law, output_distribution, EnumerationGuard};
use syncap_core::monte_carlo::{
    estimate_ab_entropy_rate, estimate_boundary_ambiguity, estimate_flip_density,
    estimate_length_biased_log_run, estimate_output_length, estimate_zv_stats, Estimate, McConfig,
};
use syncap_core::series::{
    a1, binary_entropy, capacity_expansion, e_log_l0, epsilon2_bound, flip_density_bound, g1,
    LENGTH_BIASED_MEAN,
};
use syncap_core::{BitWord, Error as CoreError};

use crate::args::{BaArgs, Estimator, LawArgs, McArgs, MiArgs, SeriesArgs, SweepArgs};
use crate::config::Config;
use crate::error::CliError;
use crate::sweep::{run_sweep, SweepParams, SweepTable};

pub const DEFAULT_L: usize = 1000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    #[serde(rename = "L")]
    pub l: usize,
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawParams {
    pub x: String,
    pub y: Option<String>,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawSpec {
    Iid { p: f64 },
    Markov { p01: f64, p10: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiParams {
    pub n: usize,
    pub alpha: f64,
    pub law: LawSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaParams {
    pub n: usize,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub estimator: Estimator,
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(rename = "L")]
    pub l: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Series(SeriesParams),
    Law(LawParams),
    Mi(MiParams),
    Ba(BaParams),
    Mc(McParams),
    Sweep(SweepParams),
}

impl Params {
    pub fn command(&self) -> &'static str {
        match self {
            Params::Series(_) => "series",
            Params::Law(_) => "law",
            Params::Mi(_) => "mi",
            Params::Ba(_) => "ba",
            Params::Mc(_) => "mc",
            Params::Sweep(_) => "sweep",
        }
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            Params::Series(p) => serde_json::to_value(p),
            Params::Law(p) => serde_json::to_value(p),
            Params::Mi(p) => serde_json::to_value(p),
            Params::Ba(p) => serde_json::to_value(p),
            Params::Mc(p) => serde_json::to_value(p),
            Params::Sweep(p) => serde_json::to_value(p),
        };
        v.expect("parameters serialize")
    }

    pub fn from_record(command: &str, params: &Value) -> Result<Self, CliError> {
        let p = params.clone();
        Ok(match command {
            "series" => Params::Series(serde_json::from_value(p)?),
            "law" => Params::Law(serde_json::from_value(p)?),
            "mi" => Params::Mi(serde_json::from_value(p)?),
            "ba" => Params::Ba(serde_json::from_value(p)?),
            "mc" => Params::Mc(serde_json::from_value(p)?),
            "sweep" => Params::Sweep(serde_json::from_value(p)?),
            other => return Err(CliError::Usage(format!("cannot replay command `{other}`"))),
        })
    }
}

/// Result of executing one command.
pub struct Report {
    pub results: Value,
    pub text: String,
    /// Exit status; nonzero for completed-with-warning runs.
    pub code: i32,
    pub sweep: Option<SweepTable>,
}

impl Report {
    fn ok(results: Value, text: String) -> Self {
        Self {
            results,
            text,
            code: 0,
            sweep: None,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(usage(format!("--alpha must lie in [0, 1), got {alpha}")))
    }
}

fn check_positive(value: usize, flag: &str) -> Result<(), CliError> {
    if value == 0 {
        Err(usage(format!("--{flag} must be positive")))
    } else {
        Ok(())
    }
}

pub fn resolve_series(a: SeriesArgs, cfg: &Config) -> Result<Params, CliError> {
    let l = cfg.get(a.l, "L", DEFAULT_L)?;
    check_positive(l, "L")?;
    let alpha = cfg.list(a.alpha, "alpha")?;
    alpha.iter().try_for_each(|&x| check_alpha(x))?;
    Ok(Params::Series(SeriesParams { l, alpha }))
}

pub fn resolve_law(a: LawArgs, cfg: &Config) -> Result<Params, CliError> {
    let x: String = cfg.require(a.x, "x")?;
    let y: Option<String> = cfg.opt(a.y, "y")?;
    let alpha = cfg.require(a.alpha, "alpha")?;
    check_alpha(alpha)?;
    parse_word(&x, "x")?;
    if let Some(y) = &y {
        parse_word(y, "y")?;
    }
    Ok(Params::Law(LawParams { x, y, alpha }))
}

pub fn resolve_mi(a: MiArgs, cfg: &Config) -> Result<Params, CliError> {
    let n = cfg.require(a.n, "n")?;
    check_positive(n, "n")?;
    let alpha = cfg.require(a.alpha, "alpha")?;
    check_alpha(alpha)?;
    let markov = match a.markov {
        Some(v) => Some(v),
        None if a.iid.is_none() => cfg.opt(None::<String>, "markov")?.map(|s| {
            s.split(',')
                .map(|t| t.trim().parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        }),
        None => None,
    };
    let law = match markov {
        Some(v) => {
            if v.len() != 2 || v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(usage("--markov expects two probabilities p01,p10"));
            }
            LawSpec::Markov {
                p01: v[0],
                p10: v[1],
            }
        }
        None => {
            let p = cfg.get(a.iid, "iid", 0.5)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(usage(format!("--iid must lie in [0, 1], got {p}")));
            }
            LawSpec::Iid { p }
        }
    };
    Ok(Params::Mi(MiParams { n, alpha, law }))
}

pub fn resolve_ba(a: BaArgs, cfg: &Config) -> Result<Params, CliError> {
    let n = cfg.require(a.n, "n")?;
    check_positive(n, "n")?;
    let alpha = cfg.require(a.alpha, "alpha")?;
    check_alpha(alpha)?;
    let tol = cfg.get(a.tol, "tol", syncap_core::capacity::DEFAULT_TOL)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(usage("--tol must be positive"));
    }
    let max_iter = cfg.get(
        a.max_iter,
        "max-iter",
        syncap_core::capacity::DEFAULT_MAX_ITER,
    )?;
    check_positive(max_iter, "max-iter")?;
    Ok(Params::Ba(BaParams {
        n,
        alpha,
        tol,
        max_iter,
    }))
}

pub fn resolve_mc(a: McArgs, seed: Option<u64>, cfg: &Config) -> Result<Params, CliError> {
    let estimator = match a.estimator {
        Some(e) => e,
        None => match cfg.raw("estimator") {
            None => Estimator::Ab,
            Some(s) => clap::ValueEnum::from_str(s, true)
                .map_err(|_| usage(format!("config key `estimator`: unknown value `{s}`")))?,
        },
    };
    let alpha = cfg.get(a.alpha, "alpha", 0.1)?;
    check_alpha(alpha)?;
    let n = cfg.get(a.n, "n", 100_000)?;
    check_positive(n, "n")?;
    let trials = cfg.get(a.trials, "trials", 20)?;
    check_positive(trials, "trials")?;
    let l = cfg.get(a.l, "L", 4)?;
    check_positive(l, "L")?;
    let seed = cfg.get(seed, "seed", DEFAULT_SEED)?;
    Ok(Params::Mc(McParams {
        estimator,
        alpha,
        n,
        trials,
        seed,
        l,
    }))
}

pub fn resolve_sweep(a: SweepArgs, seed: Option<u64>, cfg: &Config) -> Result<Params, CliError> {
    let alpha_grid = cfg.list(a.alpha, "alpha")?;
    if alpha_grid.is_empty() {
        return Err(usage("sweep needs a non-empty --alpha grid"));
    }
    if alpha_grid.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(usage("sweep alphas must lie in (0, 1)"));
    }
    if alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("sweep alphas must be strictly increasing"));
    }
    let mut n_list = cfg.list(a.n_list, "n")?;
    if n_list.is_empty() {
        n_list = (1..=6).collect();
    }
    if n_list.contains(&0) {
        return Err(usage("blocklengths must be positive"));
    }
    n_list.sort_unstable();
    n_list.dedup();
    let l = cfg.get(a.l, "L", DEFAULT_L)?;
    check_positive(l, "L")?;
    let tol = cfg.get(a.tol, "tol", syncap_core::capacity::DEFAULT_TOL)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(usage("--tol must be positive"));
    }
    let max_iter = cfg.get(
        a.max_iter,
        "max-iter",
        syncap_core::capacity::DEFAULT_MAX_ITER,
    )?;
    check_positive(max_iter, "max-iter")?;
    Ok(Params::Sweep(SweepParams {
        alpha_grid,
        n_list,
        l,
        tol,
        max_iter,
        trials: cfg.get(a.trials, "trials", 0)?,
        mc_n: cfg.get(a.mc_n, "mc-n", 100_000)?,
        seed: cfg.get(seed, "seed", DEFAULT_SEED)?,
    }))
}

fn parse_word(s: &str, flag: &str) -> Result<BitWord, CliError> {
    let w: BitWord = s
        .parse()
        .map_err(|_| usage(format!("--{flag} must be a non-empty binary word")))?;
    if w.is_empty() {
        return Err(usage(format!("--{flag} must be a non-empty binary word")));
    }
    Ok(w)
}

pub fn execute(params: &Params, guard: &EnumerationGuard) -> Result<Report, CliError> {
    match params {
        Params::Series(p) => series(p),
        Params::Law(p) => law(p, guard),
        Params::Mi(p) => mi(p, guard),
        Params::Ba(p) => ba(p, guard),
        Params::Mc(p) => mc(p),
        Params::Sweep(p) => {
            let table = run_sweep(p, guard)?;
            let results = serde_json::to_value(&table.rows)?;
            let text = table.summary();
            Ok(Report {
                results,
                text,
                code: 0,
                sweep: Some(table),
            })
        }
    }
}

fn series(p: &SeriesParams) -> Result<Report, CliError> {
    let g = g1(p.l)?;
    let a = a1(p.l)?;
    let e = e_log_l0(p.l)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    writeln!(text, "L = {}", p.l).unwrap();
    writeln!(
        text,
        "G1          {:.6}  tail_bound {:.6e}",
        g.value, g.tail_bound
    )
    .unwrap();
    writeln!(
        text,
        "A1          {:.6}  tail_bound {:.6e}",
        a.value, a.tail_bound
    )
    .unwrap();
    writeln!(
        text,
        "E[log2 L0]  {:.6}  tail_bound {:.6e}",
        e.value, e.tail_bound
    )
    .unwrap();
    if !p.alpha.is_empty() {
        writeln!(
            text,
            "{:>10}  {:>10}  {:>10}  {:>12}  {:>12}",
            "alpha", "G1", "expansion", "tail_bound", "eps2_budget"
        )
        .unwrap();
    }
    for &alpha in &p.alpha {
        let x = capacity_expansion(alpha, p.l)?;
        let eps2 = if alpha > 0.0 {
            epsilon2_bound(alpha, p.l)?.value
        } else {
            0.0
        };
        writeln!(
            text,
            "{alpha:>10}  {:>10.6}  {:>10.6}  {:>12.4e}  {:>12.4e}",
            g.value, x.value, g.tail_bound, eps2
        )
        .unwrap();
        rows.push(json!({
            "alpha": alpha,
            "expansion": x.value,
            "expansion_tail": alpha * g.tail_bound,
            "eps2_budget": eps2,
            "remainder_order": x.remainder_order,
        }));
    }
    let results =
        json!({ "g1": g, "a1": a, "e_log_l0": e, "tail_bound": g.tail_bound, "rows": rows });
    Ok(Report::ok(results, text))
}

fn law(p: &LawParams, guard: &EnumerationGuard) -> Result<Report, CliError> {
    let x = parse_word(&p.x, "x")?;
    if let Some(y) = &p.y {
        let y = parse_word(y, "y")?;
        let prob = channel_law(&x, &y, p.alpha)?;
        let text = format!("P({y} | {x}) = {prob:.12e}\n");
        return Ok(Report::ok(json!({ "probability": prob }), text));
    }
    let d = output_distribution(&x, p.alpha, guard)?;
    let mut text = String::new();
    let entries: Vec<Value> = d
        .entries()
        .iter()
        .map(|&(k, prob)| {
            let y = k.to_word().to_string();
            writeln!(text, "{y:<width$}  {prob:.12e}", width = 2 * x.len()).unwrap();
            json!({ "y": y, "p": prob })
        })
        .collect();
    writeln!(
        text,
        "outputs {}  mass {:.15}  H(Y|x) {:.9} bits",
        d.len(),
        d.total_mass(),
        d.entropy()
    )
    .unwrap();
    let results = json!({
        "outputs": entries,
        "total_mass": d.total_mass(),
        "entropy": d.entropy(),
    });
    Ok(Report::ok(results, text))
}

fn mi(p: &MiParams, guard: &EnumerationGuard) -> Result<Report, CliError> {
    let law = match p.law {
        LawSpec::Iid { p: q } => InputLaw::iid(p.n, q)?,
        LawSpec::Markov { p01, p10 } => InputLaw::markov(p.n, p01, p10)?,
    };
    let r = mutual_information(&law, p.alpha, guard)?;
    let mut results = serde_json::to_value(r)?;
    results["per_symbol"] = json!(r.per_symbol());
    results["residual_direct"] = json!(r.residual_direct());
    results["residual_decomposition"] = json!(r.residual_decomposition());
    let mut text = String::new();
    for (name, v) in [
        ("H(X)", r.h_x),
        ("H(Y)", r.h_y),
        ("H(Y|X)", r.h_y_given_x),
        ("H(A,B)", r.h_ab),
        ("H(A,B|X,Y,K)", r.h_ab_given_xyk),
        ("H(K|X,Y)", r.h_k_given_xy),
    ] {
        writeln!(text, "{name:<14}{v:.9}").unwrap();
    }
    writeln!(
        text,
        "{:<14}{:.6}  ({:.6} per symbol)",
        "I",
        r.mutual_information,
        r.per_symbol()
    )
    .unwrap();
    writeln!(
        text,
        "residuals     direct {:.3e}  decomposition {:.3e}",
        r.residual_direct(),
        r.residual_decomposition()
    )
    .unwrap();
    Ok(Report::ok(results, text))
}

fn ba_results(t: &BaTrace) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(t)?;
    v["status"] = json!(if t.converged {
        "converged"
    } else {
        "not_converged"
    });
    Ok(v)
}

fn ba(p: &BaParams, guard: &EnumerationGuard) -> Result<Report, CliError> {
    let (trace, code) = match blahut_arimoto(p.n, p.alpha, p.tol, p.max_iter, guard) {
        Ok(t) => (t, 0),
        Err(CoreError::NotConverged { trace, .. }) => (*trace, 2),
        Err(e) => return Err(e.into()),
    };
    let mut text = format!(
        "C_{} = {:.9}  upper {:.9}  gap {:.3e} bits  iterations {}\n",
        trace.n, trace.capacity, trace.upper_bound, trace.gap, trace.iterations
    );
    if code != 0 {
        text.push_str("warning: gap tolerance not reached; the upper bound remains valid\n");
    }
    Ok(Report {
        results: ba_results(&trace)?,
        text,
        code,
        sweep: None,
    })
}

fn estimate_json(e: &Estimate) -> Value {
    serde_json::to_value(e).expect("estimate serializes")
}

fn status(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn mc(p: &McParams) -> Result<Report, CliError> {
    let cfg = McConfig::new(p.alpha, p.n, p.trials, p.seed)?;
    let (estimates, target, criterion, pass) = match p.estimator {
        Estimator::Ab => {
            let e = estimate_ab_entropy_rate(&cfg)?;
            let t = binary_entropy(p.alpha)? + p.alpha;
            (
                json!({ "ab": estimate_json(&e) }),
                t,
                "within 5 std errors",
                e.within(t, 5.0),
            )
        }
        Estimator::Length => {
            let e = estimate_output_length(&cfg)?;
            (
                json!({ "length": estimate_json(&e) }),
                p.alpha,
                "within 5 std errors",
                e.within(p.alpha, 5.0),
            )
        }
        Estimator::Zv => {
            let z = estimate_zv_stats(&cfg)?;
            let bound = p.alpha * p.alpha * LENGTH_BIASED_MEAN;
            let ok = [z.reversed_zero, z.reversed_one]
                .iter()
                .all(|e| e.mean <= bound + 3.0 * e.std_error);
            let est = json!({
                "z1_v0": estimate_json(&z.reversed_zero),
                "z1_v1": estimate_json(&z.reversed_one),
            });
            (
                est,
                bound,
                "each frequency at most bound + 3 std errors",
                ok,
            )
        }
        Estimator::Ambiguity => {
            let a = estimate_boundary_ambiguity(&cfg)?;
            let t = a1(DEFAULT_L)?.value;
            let ok = a.per_pair.samples > 0 && (a.per_pair.mean / t - 1.0).abs() <= 0.05;
            let est = json!({
                "per_pair": estimate_json(&a.per_pair),
                "per_symbol": estimate_json(&a.per_symbol),
                "events": a.events,
            });
            (est, t, "per-pair mean within 5% of target", ok)
        }
        Estimator::LogRun => {
            let e = estimate_length_biased_log_run(&cfg)?;
            let t = e_log_l0(DEFAULT_L)?.value;
            (
                json!({ "log_run": estimate_json(&e) }),
                t,
                "within 1% of target",
                (e.mean / t - 1.0).abs() <= 0.01,
            )
        }
        Estimator::Flips => {
            let e = estimate_flip_density(&cfg, p.l)?;
            let b = flip_density_bound(p.l);
            (
                json!({ "flips": estimate_json(&e) }),
                b,
                "at most bound + 3 std errors",
                e.mean <= b + 3.0 * e.std_error,
            )
        }
    };
    let mut text = String::new();
    for (name, e) in estimates.as_object().expect("object") {
        if let (Some(m), Some(s)) = (e.get("mean"), e.get("std_error")) {
            writeln!(
                text,
                "{name:<12}{:.6} +/- {:.2e}",
                m.as_f64().unwrap_or(f64::NAN),
                s.as_f64().unwrap_or(f64::NAN)
            )
            .unwrap();
        }
    }
    writeln!(
        text,
        "target      {target:.6}  ({criterion})  {}",
        status(pass)
    )
    .unwrap();
    let results = json!({
        "estimates": estimates,
        "target": target,
        "criterion": criterion,
        "status": status(pass),
    });
    Ok(Report::ok(results, text))
}
