use serde::Serialize;

use resamplex::choice::SplitSource;
use resamplex::coverage::{
    actual_coverage, protocol_count, simulate_coverage, success_realizations_with, upper_bound,
    CoverageConfig, CoverageMode, Functional, SuccessLaw, DEFAULT_PROTOCOL_CAP,
};
use resamplex::estimator::{
    hierarchical_estimate, plugin_block_reliability, plugin_estimate, resampling_block_reliability,
    simple_estimate, EstimateReport, DEFAULT_PLUGIN_CAP,
};
use resamplex::optimizer::{
    bellman_optimize, equal_allocation, exhaustive_optimize_oracle, Allocation, OptimizerConfig,
    DEFAULT_ORACLE_CAP,
};
use resamplex::partial::{estimate_known_subfunction, estimate_simulated_subfunction};
use resamplex::reproduce::{self, ScanOptions};
use resamplex::scenarios::{list_scenarios, load_scenario, ScenarioKind};
use resamplex::stats::RunningMoments;
use resamplex::variance::{
    hierarchical_variance, resampling_variance, VarianceOptions, VarianceReport,
};

use crate::args::{
    CoverageArgs, EstimateArgs, EstimateMethod, Format, OptimizeArgs, OutputArgs, PartialArgs,
    ReproduceArgs, Scheme, Situation, VarianceArgs,
};
use crate::model::{require_seed, Model, Shape};
use crate::output::{join, num, opt_num, Report, RunConfig};
use crate::CliError;

const AUTO_PROTOCOL_SAMPLES: u64 = 2_000_000;

#[derive(Serialize)]
struct EstimateRow {
    t: Option<f64>,
    #[serde(flatten)]
    report: EstimateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_bound: Option<f64>,
}

pub fn estimate(a: &EstimateArgs) -> Result<(RunConfig, Report), CliError> {
    let mut cfg = RunConfig::new("estimate", &a.out, Format::Json).with_model(&a.model);
    cfg.seed = a.seed;
    cfg.option("method", a.method);
    let model = Model::load(&a.model)?;
    let ts = model.thresholds(&a.model)?;
    let sizes = a.model.sizes.as_deref();
    let needs_seed = !(a.method == EstimateMethod::Plugin && model.observed());
    let seed = if needs_seed { Some(require_seed(a.seed)?) } else { a.seed };
    // only the simple method draws r realizations
    let r = match a.method {
        EstimateMethod::Simple => model.default_r(a.r)?,
        _ => model.default_r(a.r).unwrap_or(0),
    };
    cfg.r = (r > 0).then_some(r);
    let pools = model.pools(sizes, seed)?;

    let mut rows = Vec::new();
    for &t in &ts {
        let row = match model.shape() {
            Shape::Tree => {
                let tree = model.tree(t)?;
                let report = match a.method {
                    EstimateMethod::Simple => simple_estimate(&pools, &tree, r, require_seed(seed)?)?,
                    EstimateMethod::Hierarchical => hierarchical_estimate(&pools, &tree, require_seed(seed)?)?,
                    EstimateMethod::Plugin => EstimateReport {
                        value: plugin_estimate(&pools, &tree, DEFAULT_PLUGIN_CAP)?,
                        method: resamplex::estimator::Method::PlugIn,
                        replications: 0,
                        sizes: pools.iter().map(|p| p.len()).collect(),
                        seed,
                        std_error: None,
                        variance: None,
                    },
                };
                EstimateRow { t, report, gamma: None, upper_bound: None }
            }
            Shape::Blocks => {
                let t = t.expect("block models carry t");
                let system = model.block_system(pools.clone())?;
                let report = match a.method {
                    EstimateMethod::Simple => resampling_block_reliability(&system, t, r, require_seed(seed)?)?,
                    EstimateMethod::Plugin => EstimateReport {
                        value: plugin_block_reliability(&system, t)?,
                        method: resamplex::estimator::Method::BlockPlugIn,
                        replications: 0,
                        sizes: pools.iter().map(|p| p.len()).collect(),
                        seed,
                        std_error: None,
                        variance: None,
                    },
                    EstimateMethod::Hierarchical => {
                        return Err(CliError::Usage("block systems support --method simple or plugin".into()))
                    }
                };
                EstimateRow { t: Some(t), report, gamma: None, upper_bound: None }
            }
            Shape::Partial { .. } => {
                if a.method != EstimateMethod::Simple {
                    return Err(CliError::Usage("partial models support --method simple only".into()));
                }
                let pm = model.partial_model(pools.clone(), t)?;
                let report = estimate_known_subfunction(&pm, r, require_seed(seed)?)?;
                EstimateRow { t, report, gamma: None, upper_bound: None }
            }
            Shape::Coverage { functional, gamma } => {
                if a.method != EstimateMethod::Simple {
                    return Err(CliError::Usage("coverage scenarios support --method simple only".into()));
                }
                let gamma = a.gamma.unwrap_or(gamma);
                let seed = require_seed(seed)?;
                let mut src = SplitSource::new(seed);
                let vals = success_realizations_with(&pools, functional, r, a.batch, &mut src)?;
                let mut m = RunningMoments::default();
                vals.iter().for_each(|&v| m.push(v));
                let report = EstimateReport {
                    value: vals.iter().sum::<f64>() / r as f64,
                    method: resamplex::estimator::Method::Simple,
                    replications: r,
                    sizes: pools.iter().map(|p| p.len()).collect(),
                    seed: Some(seed),
                    std_error: Some(m.std_error()),
                    variance: None,
                };
                cfg.option("batch", a.batch);
                cfg.gamma = Some(vec![gamma]);
                EstimateRow {
                    t: None,
                    report,
                    gamma: Some(gamma),
                    upper_bound: Some(upper_bound(&vals, gamma)?),
                }
            }
        };
        rows.push(row);
    }

    let header = vec!["t", "method", "value", "std_error", "replications", "sizes", "seed", "upper_bound"];
    let table = rows
        .iter()
        .map(|row| {
            vec![
                opt_num(row.t),
                serde_json::to_value(row.report.method)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                num(row.report.value),
                opt_num(row.report.std_error),
                row.report.replications.to_string(),
                join(&row.report.sizes),
                row.report.seed.map(|s| s.to_string()).unwrap_or_default(),
                opt_num(row.upper_bound),
            ]
        })
        .collect();
    Ok((cfg, Report::new(&rows, header, table)))
}

#[derive(Serialize)]
struct VarianceRow {
    t: Option<f64>,
    scheme: Scheme,
    r: Option<usize>,
    sizes: Vec<usize>,
    #[serde(flatten)]
    report: VarianceReport,
}

pub fn variance(a: &VarianceArgs) -> Result<(RunConfig, Report), CliError> {
    let mut cfg = RunConfig::new("variance", &a.out, Format::Json).with_model(&a.model);
    cfg.seed = a.seed;
    cfg.option("scheme", a.scheme);
    let model = Model::load(&a.model)?;
    if !matches!(model.shape(), Shape::Tree) {
        return Err(CliError::Usage("variance needs a calculation-tree model".into()));
    }
    let laws = model.laws()?;
    let ts = model.thresholds(&a.model)?;
    let all_finite = laws.iter().all(|l| l.is_finite_support());
    let mc_needed = match a.scheme {
        Scheme::Simple => !all_finite && laws.len() > 1,
        Scheme::Hierarchical => !all_finite,
    };
    if mc_needed {
        require_seed(a.seed)?;
    }
    let mut opts = VarianceOptions {
        seed: a.seed,
        ..VarianceOptions::default()
    };
    if let Some(cap) = a.cap {
        opts.cap = cap;
    }
    if let Some(mc) = a.mc {
        opts.mc_replications = mc;
    }
    cfg.option("cap", opts.cap);
    cfg.option("mc_replications", opts.mc_replications);

    let mut rows = Vec::new();
    for &t in &ts {
        let tree = model.tree(t)?;
        let row = match a.scheme {
            Scheme::Simple => {
                let sizes = a.model.sizes.clone().unwrap_or_else(|| model.default_sizes());
                let r = model.default_r(a.r)?;
                cfg.r = Some(r);
                let report = resampling_variance(&tree, &laws, &sizes, r, &opts)?;
                VarianceRow { t, scheme: a.scheme, r: Some(r), sizes, report }
            }
            Scheme::Hierarchical => {
                let tree = with_leaf_sizes(tree, a.model.sizes.as_deref(), &model)?;
                let report = hierarchical_variance(&tree, &laws, &opts)?;
                VarianceRow { t, scheme: a.scheme, r: None, sizes: tree.sizes(), report }
            }
        };
        rows.push(row);
    }

    let header = vec!["t", "scheme", "r", "sizes", "method", "variance", "std_error"];
    let table = rows
        .iter()
        .map(|row| {
            vec![
                opt_num(row.t),
                format!("{:?}", row.scheme).to_lowercase(),
                row.r.map(|r| r.to_string()).unwrap_or_default(),
                join(&row.sizes),
                serde_json::to_value(row.report.method)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                num(row.report.variance),
                num(row.report.std_error),
            ]
        })
        .collect();
    Ok((cfg, Report::new(&rows, header, table)))
}

#[derive(Serialize)]
struct OracleCheck {
    allocation: Allocation,
    agrees: bool,
}

#[derive(Serialize)]
struct OptimizeResult {
    t: Option<f64>,
    budget: u64,
    weights: Vec<u64>,
    optimized: Allocation,
    equal: Allocation,
    improvement_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

pub fn optimize(a: &OptimizeArgs) -> Result<(RunConfig, Report), CliError> {
    let mut cfg = RunConfig::new("optimize", &a.out, Format::Json).with_model(&a.model);
    let model = Model::load(&a.model)?;
    if !matches!(model.shape(), Shape::Tree) {
        return Err(CliError::Usage("optimize needs a calculation-tree model".into()));
    }
    let laws = model.laws()?;
    let ts = model.thresholds(&a.model)?;
    let mut results = Vec::new();
    for &t in &ts {
        let tree = with_leaf_sizes(model.tree(t)?, a.model.sizes.as_deref(), &model)?;
        let weights = a.weights.clone().unwrap_or_else(|| vec![1; tree.len()]);
        if weights.len() != tree.len() {
            return Err(CliError::Usage(format!(
                "--weights needs {} entries (one per node), got {}",
                tree.len(),
                weights.len()
            )));
        }
        let current: u64 = weights.iter().zip(tree.sizes()).map(|(&w, n)| w * n as u64).sum();
        let budget = a.budget.unwrap_or(current);
        let config = OptimizerConfig::from_laws(tree, weights.clone(), budget, &laws)?;
        let optimized = bellman_optimize(&config)?;
        let equal = equal_allocation(&config)?;
        let improvement_pct = if equal.variance > 0.0 {
            100.0 * (equal.variance - optimized.variance) / equal.variance
        } else {
            0.0
        };
        let oracle = if a.oracle {
            let allocation = exhaustive_optimize_oracle(&config, DEFAULT_ORACLE_CAP)?;
            let agrees = allocation == optimized;
            Some(OracleCheck { allocation, agrees })
        } else {
            None
        };
        results.push(OptimizeResult { t, budget, weights, optimized, equal, improvement_pct, oracle });
    }
    cfg.option("budget", a.budget);
    cfg.option("weights", &a.weights);
    cfg.option("oracle", a.oracle);

    let header = vec!["t", "allocation", "budget", "cost", "variance", "sizes", "improvement_pct"];
    let mut table = Vec::new();
    for res in &results {
        let mut push = |name: &str, al: &Allocation, imp: String| {
            table.push(vec![
                opt_num(res.t),
                name.to_owned(),
                res.budget.to_string(),
                al.cost.to_string(),
                num(al.variance),
                join(&al.sizes),
                imp,
            ])
        };
        push("optimized", &res.optimized, num(res.improvement_pct));
        push("equal", &res.equal, String::new());
        if let Some(o) = &res.oracle {
            push("oracle", &o.allocation, String::new());
        }
    }
    Ok((cfg, Report::new(&results, header, table)))
}

#[derive(Serialize)]
struct PartialRow {
    t: Option<f64>,
    situation: Situation,
    closed_form: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicates: Option<usize>,
    #[serde(flatten)]
    report: EstimateReport,
}

pub fn partial(a: &PartialArgs) -> Result<(RunConfig, Report), CliError> {
    let mut cfg = RunConfig::new("partial", &a.out, Format::Json).with_model(&a.model);
    cfg.seed = a.seed;
    cfg.option("situation", a.situation);
    let model = Model::load(&a.model)?;
    let Shape::Partial { replicates } = model.shape() else {
        return Err(CliError::Usage(
            "partial needs a model with known inputs (e.g. --scenario hier-query-partial)".into(),
        ));
    };
    let seed = require_seed(a.seed)?;
    let ts = model.thresholds(&a.model)?;
    let r = model.default_r(a.r)?;
    cfg.r = Some(r);
    let n = a.replicates.unwrap_or(replicates);
    if a.situation == Situation::Simulated {
        cfg.replicates = Some(n);
    }
    let pools = model.pools(a.model.sizes.as_deref(), Some(seed))?;
    let mut rows = Vec::new();
    for &t in &ts {
        let pm = model.partial_model(pools.clone(), t)?;
        let report = match a.situation {
            Situation::Known => estimate_known_subfunction(&pm, r, seed)?,
            Situation::Simulated => estimate_simulated_subfunction(&pm, r, n, seed)?,
        };
        rows.push(PartialRow {
            t,
            situation: a.situation,
            closed_form: pm.closed_form().is_some(),
            replicates: (a.situation == Situation::Simulated).then_some(n),
            report,
        });
    }
    let header = vec!["t", "situation", "value", "std_error", "r", "replicates", "closed_form", "seed"];
    let table = rows
        .iter()
        .map(|row| {
            vec![
                opt_num(row.t),
                format!("{:?}", row.situation).to_lowercase(),
                num(row.report.value),
                opt_num(row.report.std_error),
                row.report.replications.to_string(),
                row.replicates.map(|n| n.to_string()).unwrap_or_default(),
                row.closed_form.to_string(),
                seed.to_string(),
            ]
        })
        .collect();
    Ok((cfg, Report::new(&rows, header, table)))
}

#[derive(Serialize)]
struct CoverageRow {
    sizes: Vec<usize>,
    functional: Functional,
    gamma: f64,
    r: usize,
    k: usize,
    batch: usize,
    theta: f64,
    coverage: f64,
    std_error: f64,
    method: &'static str,
    protocols: u128,
}

pub fn coverage(a: &CoverageArgs) -> Result<(RunConfig, Report), CliError> {
    let mut cfg = RunConfig::new("coverage", &a.out, Format::Json);
    cfg.scenario = a.scenario.clone();
    cfg.seed = a.seed;
    let defaults = match &a.scenario {
        Some(name) => match load_scenario(name).map_err(CliError::usage)?.kind {
            ScenarioKind::Coverage {
                functional,
                sizes,
                gamma,
                r,
            } => Some((functional, sizes, gamma, r)),
            _ => return Err(CliError::Usage(format!("scenario `{name}` is not a coverage scenario"))),
        },
        None => None,
    };
    let functional = match (&a.functional, &defaults) {
        (Some(f), _) => Functional::parse(f).map_err(CliError::usage)?,
        (None, Some(d)) => d.0,
        (None, None) => return Err(CliError::Usage("give --functional or --scenario".into())),
    };
    let sizes = a
        .sizes
        .clone()
        .or_else(|| defaults.as_ref().map(|d| d.1.clone()))
        .ok_or_else(|| CliError::Usage("give --sizes or --scenario".into()))?;
    let gammas = a
        .gamma
        .clone()
        .or_else(|| defaults.as_ref().map(|d| vec![d.2]))
        .ok_or_else(|| CliError::Usage("give --gamma or --scenario".into()))?;
    let r = a
        .r
        .or_else(|| defaults.as_ref().map(|d| d.3))
        .ok_or_else(|| CliError::Usage("give --r or --scenario".into()))?;
    let cap = a.cap.unwrap_or(DEFAULT_PROTOCOL_CAP);
    cfg.sizes = Some(sizes.clone());
    cfg.gamma = Some(gammas.clone());
    cfg.r = Some(r);
    cfg.option("functional", functional);
    cfg.option("batch", a.batch);
    cfg.option("cap", cap);
    cfg.option("exact", a.exact);
    cfg.option("mc", a.mc);
    cfg.option("simulate", a.simulate);

    let configs = gammas
        .iter()
        .map(|&g| {
            let mut c = CoverageConfig::new(sizes.clone(), g, r, functional).map_err(CliError::usage)?;
            c.batch = a.batch;
            c.validate().map_err(CliError::usage)?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let count = protocol_count(&sizes);

    let mut rows = Vec::new();
    if let Some(runs) = a.simulate {
        let seed = require_seed(a.seed)?;
        for c in &configs {
            let sim = simulate_coverage(c, runs, seed)?;
            rows.push(row(c, sim.coverage, sim.std_error, "simulated", count));
        }
    } else {
        let mode = if a.exact {
            CoverageMode::Exact { cap }
        } else if let Some(samples) = a.mc {
            CoverageMode::Sampled {
                samples,
                seed: require_seed(a.seed)?,
            }
        } else if count <= cap {
            CoverageMode::Exact { cap }
        } else {
            CoverageMode::Sampled {
                samples: AUTO_PROTOCOL_SAMPLES,
                seed: require_seed(a.seed)?,
            }
        };
        let method = match mode {
            CoverageMode::Exact { .. } => "exact",
            _ => "sampled-protocols",
        };
        if configs.len() == 1 {
            let rep = actual_coverage(&configs[0], mode)?;
            rows.push(row(&configs[0], rep.coverage, rep.std_error, method, count));
        } else {
            let law = SuccessLaw::build(&sizes, functional, mode)?;
            for c in &configs {
                let (cov, se) = law.coverage(c.r, c.gamma, c.batch)?;
                rows.push(row(c, cov, se, method, count));
            }
        }
    }

    let header = vec![
        "sizes", "functional", "gamma", "r", "k", "batch", "theta", "coverage", "std_error", "method",
    ];
    let table = rows
        .iter()
        .map(|row| {
            vec![
                join(&row.sizes),
                row.functional.name().to_owned(),
                num(row.gamma),
                row.r.to_string(),
                row.k.to_string(),
                row.batch.to_string(),
                num(row.theta),
                num(row.coverage),
                num(row.std_error),
                row.method.to_owned(),
            ]
        })
        .collect();
    Ok((cfg, Report::new(&rows, header, table)))
}

fn row(c: &CoverageConfig, coverage: f64, std_error: f64, method: &'static str, protocols: u128) -> CoverageRow {
    CoverageRow {
        sizes: c.sizes.clone(),
        functional: c.functional,
        gamma: c.gamma,
        r: c.r,
        k: c.k(),
        batch: c.batch,
        theta: 1.0 / match c.functional {
            Functional::MinSelection => c.m() as f64,
            Functional::Ordering => (1..=c.m()).product::<usize>() as f64,
        },
        coverage,
        std_error,
        method,
        protocols,
    }
}

pub fn reproduce(a: &ReproduceArgs) -> Result<(RunConfig, Report), CliError> {
    let mut cfg = RunConfig::new("reproduce", &a.out, Format::Csv);
    cfg.option("table", &a.table);
    let (result, csv) = match a.table.as_str() {
        "table1" => {
            let rows = reproduce::table1();
            (to_value(&rows), reproduce::table1_csv(&rows)?)
        }
        "table2" => {
            let rows = reproduce::table2();
            (to_value(&rows), reproduce::table2_csv(&rows)?)
        }
        "table5-direction" => {
            let rows = reproduce::table5_direction()?;
            (to_value(&rows), reproduce::table5_csv(&rows)?)
        }
        "table6-scan" | "table7-scan" => {
            let functional = if a.table == "table6-scan" {
                Functional::MinSelection
            } else {
                Functional::Ordering
            };
            let opts = ScanOptions {
                r_min: a.r_min,
                r_max: a.r_max,
                batch: a.batch,
                samples: a.samples,
                seed: a.seed,
            };
            cfg.seed = Some(a.seed);
            cfg.option("scan", opts);
            let rows = reproduce::coverage_scan(functional, &opts)?;
            (to_value(&rows), reproduce::scan_csv(&rows)?)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown table `{other}`; valid ids: {}",
                reproduce::TABLE_IDS.join(", ")
            )))
        }
    };
    Ok((
        cfg,
        Report {
            result,
            header: Vec::new(),
            rows: Vec::new(),
            csv: Some(csv),
        },
    ))
}

pub fn list(out: &OutputArgs) -> Result<(RunConfig, Report), CliError> {
    let cfg = RunConfig::new("list", out, Format::Csv);
    #[derive(Serialize)]
    struct Entry {
        name: &'static str,
        topic: &'static str,
        doc: &'static str,
    }
    let entries: Vec<Entry> = list_scenarios()
        .into_iter()
        .map(|(name, topic, doc)| Entry { name, topic, doc })
        .collect();
    let table = entries
        .iter()
        .map(|e| vec![e.name.to_owned(), e.topic.to_owned(), e.doc.to_owned()])
        .collect();
    Ok((cfg, Report::new(&entries, vec!["name", "topic", "doc"], table)))
}

/// Leaf sizes from `--sizes`, else the model defaults, else the tree's own.
fn with_leaf_sizes(
    tree: resamplex::CalcTree,
    sizes: Option<&[usize]>,
    model: &Model,
) -> Result<resamplex::CalcTree, CliError> {
    let defaults = model.default_sizes();
    match sizes.or((!defaults.is_empty()).then_some(&defaults[..])) {
        Some(s) => tree.with_leaf_sizes(s).map_err(CliError::usage),
        None => Ok(tree),
    }
}

fn to_value(v: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable rows")
}
