//! One function per subcommand. Each returns a JSON result, an optional CSV
//! body and whether its checks passed.

use std::collections::BTreeMap;

use num::bigint::BigUint;
use num::rational::BigRational;
use num::Zero;
use probpark::analytics::unbounded::DEFAULT_TERM_BUDGET;
use probpark::analytics::{
    bounded_path_count, catalan_convolution, exact_law, expected_time_via_paths,
    open_expected_time_all, open_expected_time_all_half_closed_form, open_expected_time_single,
    open_prob_all, open_prob_all_reversed, open_prob_single, open_time_variance_all,
    open_time_variance_single, ruin_path_count, unbounded_expected_time,
    unbounded_expected_time_all, unbounded_prob_all, unbounded_prob_series, unbounded_prob_single,
    unbounded_variance, unbounded_variance_all, verify_open_time_solution, OccupancyLaw,
};
use probpark::combinatorics::{
    asymptotic_evaluators, binomial, catalan, catalan_triangle, conditional_monotonicity_check,
    count_wipf_entry, expected_last_entry, expected_last_entry_paper_printed, expected_lucky,
    identity_checks, last_entry_distribution, lucky_count_distribution,
    lucky_count_distribution_paper_printed, lucky_set_probability,
};
use probpark::experiments::{
    all_subsets, chernoff_check, correlation_test, formula_cross_validation, heatmap,
};
use probpark::parking::{classical_park, classify, wipfs, LuckySet};
use probpark::samplers::{empirical_wipf_checks, sample, SamplerSpec};
use probpark::scalar::{ProbabilityValue, StepProbability};
use probpark::walk::{batch_simulate, run_protocol, Boundary, WalkParameters};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::CliError;

/// Largest list `simulate` accepts: batch statistics keep an `n x n` table
/// of pair counts.
pub const MAX_SIMULATE_N: usize = 256;

/// Largest `n` for the enumeration oracles.
pub const MAX_ORACLE_N: u64 = 12;

pub struct Report {
    pub result: Value,
    /// Body of the CSV output, for commands that have one.
    pub csv: Option<String>,
    pub passed: bool,
}

impl Report {
    fn ok(result: Value) -> Self {
        Report {
            result,
            csv: None,
            passed: true,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize to JSON")
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::Usage(format!("this query needs --{flag}")))
}

fn need_u64(v: Option<i64>, flag: &str) -> Result<u64, CliError> {
    let v = need(&v, flag)?;
    u64::try_from(v).map_err(|_| CliError::Usage(format!("--{flag} must be non-negative")))
}

fn rat(r: &BigRational) -> String {
    ProbabilityValue::Exact(r.clone()).to_string()
}

/// Merges `formula` into an object result.
fn tagged(formula: ExactFormula, v: Value) -> Value {
    let mut obj = match v {
        Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    obj.insert("formula".into(), json!(formula.to_string()));
    Value::Object(obj)
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    match &cfg.command {
        Command::Classify(a) => Ok(Report::ok(to_json(&classify(a.alpha()?)))),
        Command::Park(a) => park(a),
        Command::Simulate(a) => simulate(a),
        Command::Exact(a) => exact(a).map(|v| Report::ok(tagged(a.formula, v))),
        Command::Sample(a) => sample_cmd(a),
        Command::Count(a) => count(a),
        Command::Verify(a) => verify(a),
        Command::Correlate(a) => correlate(a),
        Command::Chernoff(a) => chernoff(a),
        Command::Heatmap(a) => heatmap_cmd(a),
    }
}

/// Whether `cfg` can be written as CSV.
pub fn supports_csv(cmd: &Command) -> bool {
    match cmd {
        Command::Sample(_) => true,
        Command::Count(a) => a.what.is_tabular(),
        _ => false,
    }
}

fn park(a: &ListArgs) -> Result<Report, CliError> {
    let alpha = a.alpha()?;
    let out = classical_park(alpha);
    let displacement: usize = out
        .spot_of_car
        .iter()
        .enumerate()
        .filter_map(|(c, s)| s.map(|s| s - alpha.pref(c + 1)))
        .sum();
    Ok(Report::ok(json!({
        "outcome": out.outcome.slots,
        "lucky": out.lucky.members,
        "failed_cars": out.failed_cars,
        "spot_of_car": out.spot_of_car,
        "total_displacement": displacement,
        "all_parked": out.failed_cars.is_empty(),
    })))
}

fn walk_params(p: &StepProbability, boundary: Boundary) -> Result<WalkParameters, CliError> {
    Ok(WalkParameters::new(p.as_f64(), boundary)?)
}

fn simulate(a: &SimulateArgs) -> Result<Report, CliError> {
    let alpha = a.list.alpha()?;
    if alpha.n() > MAX_SIMULATE_N {
        return Err(CliError::Usage(format!(
            "simulate handles at most {MAX_SIMULATE_N} cars (got {})",
            alpha.n()
        )));
    }
    let params = walk_params(&a.p, a.boundary)?.with_step_cap(a.step_cap)?;
    let stats = batch_simulate(alpha, &params, a.seed, a.trials)?;
    let trace = if a.trace {
        Some(run_protocol(
            alpha,
            &params.clone().with_trace(true),
            a.seed,
            0,
        )?)
    } else {
        None
    };
    Ok(Report::ok(json!({
        "mode": a.p.mode(),
        "p": a.p.as_f64(),
        "summary": stats.summary(),
        "conditional_time_mean_se": stats.conditional_steps.mean_se(),
        "trace": trace,
    })))
}

fn law_json<F>(law: &OccupancyLaw<F>, wrap: fn(F) -> ProbabilityValue) -> Value
where
    F: Clone + probpark::analytics::Ruin,
{
    let w = |x: F| to_json(&wrap(x));
    json!({
        "marginals": (1..=law.n).map(|i| w(law.marginal(i))).collect::<Vec<_>>(),
        "all_parked": w(law.all_parked()),
        "mean_parked": w(law.mean_parked()),
        "parked_count_distribution":
            law.parked_count_distribution().into_iter().map(w).collect::<Vec<_>>(),
    })
}

fn exact(a: &ExactArgs) -> Result<Value, CliError> {
    use ExactFormula::*;
    let p = || need(&a.p, "p");
    let alpha = || a.list.alpha();
    let pv = |v: ProbabilityValue| Ok(to_json(&v));
    match a.formula {
        OpenProbSingle => pv(open_prob_single(
            need_u64(a.i, "i")?,
            need_u64(a.s, "s")?,
            &p()?,
        )?),
        OpenProbAll => pv(open_prob_all(alpha()?, &p()?)?),
        OpenProbAllReversed => pv(open_prob_all_reversed(alpha()?, &p()?)?),
        OpenExpectedTimeSingle => pv(open_expected_time_single(
            need_u64(a.i, "i")?,
            need_u64(a.s, "s")?,
            &p()?,
        )?),
        OpenExpectedTimeAll => pv(open_expected_time_all(alpha()?, &p()?)?),
        OpenExpectedTimeHalf => pv(ProbabilityValue::Exact(
            open_expected_time_all_half_closed_form(alpha()?)?,
        )),
        OpenTimeVarianceSingle => pv(open_time_variance_single(
            need_u64(a.i, "i")?,
            need_u64(a.s, "s")?,
            &p()?,
        )?),
        OpenTimeVarianceAll => pv(open_time_variance_all(alpha()?, &p()?)?),
        UnboundedProbSingle => Ok(to_json(&unbounded_prob_single(
            need_u64(a.d, "d")?,
            &p()?,
            a.tolerance,
        )?)),
        UnboundedProbAll => pv(unbounded_prob_all(alpha()?, &p()?)?),
        UnboundedProbSeries => Ok(to_json(&unbounded_prob_series(
            need_u64(a.d, "d")?,
            p()?.as_f64(),
            a.tolerance,
            DEFAULT_TERM_BUDGET,
        )?)),
        UnboundedExpectedTime => pv(unbounded_expected_time(need_u64(a.d, "d")?, &p()?)?),
        UnboundedVariance => pv(unbounded_variance(need_u64(a.d, "d")?, &p()?)?),
        UnboundedExpectedTimeAll => pv(unbounded_expected_time_all(alpha()?, &p()?)?),
        UnboundedVarianceAll => pv(unbounded_variance_all(alpha()?, &p()?)?),
        ExpectedTimeViaPaths => Ok(to_json(&expected_time_via_paths(
            need_u64(a.i, "i")?,
            need_u64(a.s, "s")?,
            p()?.as_f64(),
            a.tolerance,
        )?)),
        RuinPathCount => Ok(json!(
            ruin_path_count(need(&a.b, "b")?, need(&a.k, "k")?)?.to_string()
        )),
        CatalanConvolution => Ok(json!(catalan_convolution(
            need(&a.d, "d")?,
            need(&a.l, "l")?
        )?
        .to_string())),
        BoundedPathCount => Ok(json!(bounded_path_count(
            need(&a.i, "i")?,
            need(&a.j, "j")?,
            need(&a.k, "k")?
        )?
        .to_string())),
        OccupancyLaw => {
            let boundary = a.boundary.unwrap_or(Boundary::Open);
            let mut v = match p()? {
                StepProbability::Exact(r) => {
                    law_json(&exact_law(alpha()?, boundary, &r)?, ProbabilityValue::Exact)
                }
                StepProbability::Float(f) => {
                    law_json(&exact_law(alpha()?, boundary, &f)?, ProbabilityValue::Float)
                }
            };
            v["boundary"] = json!(boundary);
            Ok(v)
        }
    }
}

fn sample_cmd(a: &SampleArgs) -> Result<Report, CliError> {
    let spec = SamplerSpec::new(a.family, a.n, a.seed)?;
    let end = a
        .start
        .checked_add(a.count)
        .ok_or_else(|| CliError::Usage("--start + --count overflows".into()))?;
    let draws: Vec<_> = (a.start..end).map(|k| (k, sample(&spec, k))).collect();
    let mut csv = String::from("draw,alpha\n");
    for (k, alpha) in &draws {
        let entries: Vec<String> = alpha.as_slice().iter().map(|x| x.to_string()).collect();
        csv.push_str(&format!("{k},{}\n", entries.join(" ")));
    }
    let result = json!({
        "family": a.family,
        "n": a.n,
        "draws": draws
            .iter()
            .map(|(k, alpha)| json!({"index": k, "alpha": alpha}))
            .collect::<Vec<_>>(),
    });
    Ok(Report {
        result,
        csv: Some(csv),
        passed: true,
    })
}

fn count(a: &CountArgs) -> Result<Report, CliError> {
    use CountQuery::*;
    let n = || need(&a.n, "n");
    let value = |s: String| Ok(Report::ok(json!({ "value": s })));
    match a.what {
        Catalan => value(catalan(n()?).to_string()),
        CatalanTriangle => value(catalan_triangle(n()?, need(&a.k, "k")?).to_string()),
        Binomial => value(binomial(n()?, need(&a.k, "k")?).to_string()),
        WipfEntry => value(count_wipf_entry(n()?, need(&a.i, "i")?, need(&a.j, "j")?)?.to_string()),
        LastEntryDistribution => {
            let dist = last_entry_distribution(n()?)?;
            let probs = dist.probabilities();
            let mut csv = String::from("j,count,probability\n");
            for (idx, (c, pr)) in dist.counts.iter().zip(&probs).enumerate() {
                csv.push_str(&format!("{},{c},{}\n", idx + 1, rat(pr)));
            }
            Ok(Report {
                result: json!({
                    "total": dist.total().to_string(),
                    "counts": dist.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "probabilities": probs.iter().map(rat).collect::<Vec<_>>(),
                }),
                csv: Some(csv),
                passed: true,
            })
        }
        ExpectedLastEntry => {
            let n = n()?;
            Ok(Report::ok(json!({
                "value": rat(&expected_last_entry(n)?),
                "printed_value": rat(&expected_last_entry_paper_printed(n)),
            })))
        }
        LuckySetProbability => {
            let lucky = LuckySet::new(a.lucky.clone());
            value(rat(&lucky_set_probability(n()?, &lucky)?))
        }
        LuckyCountDistribution => {
            let n = n()?;
            let probs = lucky_count_distribution(n)?;
            let printed = lucky_count_distribution_paper_printed(n)?;
            let sum = |v: &[BigRational]| v.iter().fold(BigRational::zero(), |acc, x| acc + x);
            let mut csv = String::from("k,probability,printed_factor_probability\n");
            for (idx, (pr, pp)) in probs.iter().zip(&printed).enumerate() {
                csv.push_str(&format!("{},{},{}\n", idx + 1, rat(pr), rat(pp)));
            }
            Ok(Report {
                result: json!({
                    "probabilities": probs.iter().map(rat).collect::<Vec<_>>(),
                    "total": rat(&sum(&probs)),
                    "printed_factor_probabilities": printed.iter().map(rat).collect::<Vec<_>>(),
                    "printed_factor_total": rat(&sum(&printed)),
                }),
                csv: Some(csv),
                passed: true,
            })
        }
        ExpectedLucky => value(rat(&expected_lucky(n()?)?)),
        Asymptotic => Ok(Report::ok(to_json(&asymptotic_evaluators(
            need(&a.formula, "formula")?,
            n()?,
            a.j,
        )?))),
        Monotonicity => {
            let same = conditional_monotonicity_check(n()?, need(&a.m, "m")?, &a.indices)?;
            Ok(Report::ok(json!({ "same_event": same })))
        }
    }
}

fn verify(a: &VerifyArgs) -> Result<Report, CliError> {
    if a.tolerance.is_nan() || a.tolerance < 0.0 {
        return Err(CliError::Usage("--tolerance must be non-negative".into()));
    }
    match a.suite {
        Suite::Identities => {
            let r = identity_checks(need(&a.n_max, "n-max")?)?;
            Ok(Report::ok(
                json!({"suite": a.suite, "passed": true, "report": r}),
            ))
        }
        Suite::Residuals => {
            let n_max = need(&a.n_max, "n-max")?;
            let p = need(&a.p, "p")?;
            let reports = (2..=n_max.max(2))
                .map(|i| verify_open_time_solution(i, &p, a.tolerance))
                .collect::<Result<Vec<_>, _>>()?;
            let passed = reports.iter().all(|r| r.passed);
            Ok(Report {
                result: json!({"suite": a.suite, "passed": passed, "mode": p.mode(), "systems": reports}),
                csv: None,
                passed,
            })
        }
        Suite::Oracles => {
            let n_max = need(&a.n_max, "n-max")?;
            if n_max > MAX_ORACLE_N {
                return Err(CliError::Usage(format!(
                    "oracle enumeration is limited to --n-max {MAX_ORACLE_N}"
                )));
            }
            let (checked, failures) = oracles(n_max, a.tolerance)?;
            let passed = failures.is_empty();
            Ok(Report {
                result: json!({"suite": a.suite, "passed": passed, "checked": checked, "failures": failures}),
                csv: None,
                passed,
            })
        }
        Suite::Crossval => {
            let n_max = need(&a.n_max, "n-max")? as usize;
            let r = formula_cross_validation(
                n_max,
                &a.p_set,
                a.boundary,
                need(&a.trials, "trials")?,
                a.seed,
            )?;
            let passed = r.failures == 0;
            Ok(Report {
                result: json!({"suite": a.suite, "passed": passed, "report": r}),
                csv: None,
                passed,
            })
        }
        Suite::WipfSampler => {
            let r = empirical_wipf_checks(need(&a.n, "n")?, need(&a.trials, "trials")?, a.seed)?;
            let passed = r.passed;
            Ok(Report {
                result: json!({"suite": a.suite, "passed": passed, "report": r}),
                csv: None,
                passed,
            })
        }
    }
}

/// Counting formulas against enumeration of all weakly increasing parking
/// functions, and the path series against the closed-form expected time.
fn oracles(n_max: u64, tol: f64) -> Result<(u64, Vec<String>), CliError> {
    let mut checked = 0u64;
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: String| {
        checked += 1;
        if !ok {
            failures.push(what);
        }
    };
    for n in 1..=n_max {
        let all = wipfs(n as usize);
        let total = BigUint::from(all.len());
        check(total == catalan(n), format!("n={n}: |WIPF| != C_n"));
        let mut entry = vec![vec![0u64; n as usize]; n as usize];
        let mut lucky_counts = vec![0u64; n as usize + 1];
        let mut lucky_sets: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for alpha in &all {
            for (i, &a) in alpha.as_slice().iter().enumerate() {
                entry[i][a - 1] += 1;
            }
            let lucky = classical_park(alpha).lucky;
            lucky_counts[lucky.len()] += 1;
            *lucky_sets.entry(lucky.members).or_insert(0) += 1;
        }
        for i in 1..=n {
            for j in 1..=n {
                let seen = entry[i as usize - 1][j as usize - 1];
                // entry i of a weakly increasing parking function is at most i
                let expected = if j <= i {
                    count_wipf_entry(n, i, j)?
                } else {
                    BigUint::zero()
                };
                check(
                    expected == BigUint::from(seen),
                    format!("n={n}: entry count ({i},{j})"),
                );
            }
        }
        let last = last_entry_distribution(n)?;
        for j in 1..=n as usize {
            check(
                last.counts[j - 1] == BigUint::from(entry[n as usize - 1][j - 1]),
                format!("n={n}: last-entry count j={j}"),
            );
        }
        let freq = |c: u64| BigRational::new(c.into(), BigUint::from(all.len()).into());
        for (members, c) in &lucky_sets {
            let pr = lucky_set_probability(n, &LuckySet::new(members.clone()))?;
            check(pr == freq(*c), format!("n={n}: lucky set {members:?}"));
        }
        let dist = lucky_count_distribution(n)?;
        for k in 1..=n as usize {
            check(
                dist[k - 1] == freq(lucky_counts[k]),
                format!("n={n}: lucky count {k}"),
            );
        }
        let mean = lucky_counts
            .iter()
            .enumerate()
            .fold(BigRational::zero(), |acc, (k, &c)| acc + freq(c * k as u64));
        check(expected_lucky(n)? == mean, format!("n={n}: expected lucky"));
    }
    for i in 2..=8u64 {
        for s in [1, i - 1] {
            for p in [0.3, 0.5, 0.7] {
                let series = expected_time_via_paths(i, s, p, 1e-12)?;
                let closed = open_expected_time_single(i, s, &StepProbability::float(p)?)?;
                let gap = (series.value - closed.as_f64()).abs();
                check(
                    gap <= tol.max(1e-8) && series.converged,
                    format!("path series i={i} s={s} p={p}: gap {gap:e}"),
                );
            }
        }
    }
    Ok((checked, failures))
}

fn correlate(a: &CorrelateArgs) -> Result<Report, CliError> {
    let alpha = a.list.alpha()?;
    let params = walk_params(&a.p, a.boundary)?;
    let subsets: Vec<Vec<usize>> = if a.all_subsets {
        all_subsets(alpha.n())
            .into_iter()
            .filter(|s| s.len() > 2)
            .collect()
    } else {
        a.subsets.iter().map(|s| s.0.clone()).collect()
    };
    let report = correlation_test(alpha, &params, a.seed, a.trials, &subsets)?;
    // negative correlation is only claimed for the open boundary
    let passed = a.boundary == Boundary::Unbounded || report.violations == 0;
    Ok(Report {
        result: json!({"mode": a.p.mode(), "passed": passed, "report": report}),
        csv: None,
        passed,
    })
}

fn chernoff(a: &ChernoffArgs) -> Result<Report, CliError> {
    let alpha = a.list.alpha()?;
    let params = walk_params(&a.p, Boundary::Open)?;
    let report = chernoff_check(alpha, &params, a.seed, a.trials, &a.deltas)?;
    let passed = report.passed;
    Ok(Report {
        result: json!({"mode": a.p.mode(), "passed": passed, "report": report}),
        csv: None,
        passed,
    })
}

fn heatmap_cmd(a: &HeatmapArgs) -> Result<Report, CliError> {
    let grid = heatmap(a.n, a.p_resolution, a.y_resolution)?;
    if let Some(path) = &a.csv {
        write_file(path, grid.to_csv().as_bytes())?;
    }
    if let Some(path) = &a.pgm {
        write_file(path, &grid.to_pgm())?;
    }
    let failures = grid.property_failures();
    let passed = failures.is_empty();
    Ok(Report {
        result: json!({
            "passed": passed,
            "csv": a.csv,
            "pgm": a.pgm,
            "property_failures": failures,
            "grid": grid,
        }),
        csv: None,
        passed,
    })
}

pub fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}
