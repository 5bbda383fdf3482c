//! `kstep`: bounds, constructions, simulations and decision experiments
//! for the K-steps-ahead law of large numbers, with CSV/JSON output.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use kstep::bounds::{
    aggregation_bound, hoeffding_marginal_tail, kr_threshold, midpoint_bound, prop2_threshold, theorem1_epsilon_for,
    theorem1_max_horizon, theorem1_threshold, AggregationParams, HorizonParams,
};
use kstep::constructions::{
    audit_mv_bound, block_deviation_tail, block_deviation_tail_rational, imbalance_cutoff, imbalance_prob,
    imbalance_prob_rational, min_imbalance_prob, sample_block_process,
};
use kstep::decision::{
    adversarial_strategy, bayesian_strategy, clairvoyant_regret_tail, dominance_violations, regret_tail,
    shifted_deviation_check, shifted_sequence, uniform_random_strategy,
};
use kstep::simulation::format::{read_tree_file, TreeDocument};
use kstep::simulation::{exact_tail, mc_tail, BlockSampler, Sided, TreeSampler};
use kstep::verify::{run_all, Tier, DEFAULT_SEED};
use serde_json::json;

use output::{Cell, Destination, Format, Table};

#[derive(Debug, Parser)]
#[command(name = "kstep", version, about = "K-steps-ahead law of large numbers toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; `-` for standard output. Defaults to
    /// `$KSTEP_OUTPUT_DIR/<command>.<format>` when that variable is set,
    /// else standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper bounds at (N, K, epsilon): threshold and the proof-chain values.
    Bound(BoundArgs),
    /// Inverts the threshold: epsilon for (N, K, C), or the largest K for
    /// (N, epsilon, C).
    Invert(InvertArgs),
    /// Lower-bound constructions from the block process.
    Construct(ConstructArgs),
    /// Per-m table of the lower-bound construction against the upper bound.
    Scan(ScanArgs),
    /// Exact and Monte Carlo tails of the bias for a tree file or the block
    /// process.
    Simulate(SimulateArgs),
    /// Bayesian strategy against alternatives on a tree file with losses.
    Decide(DecideArgs),
    /// Runs the acceptance criteria.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long = "N")]
    steps: usize,
    #[arg(long = "K")]
    horizon: usize,
    #[arg(long)]
    epsilon: f64,
    /// Deviation level at which the tail bounds are evaluated; defaults to
    /// the threshold.
    #[arg(long = "C")]
    deviation: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("given").required(true).args(["horizon", "epsilon"])))]
struct InvertArgs {
    #[arg(long = "N")]
    steps: usize,
    #[arg(long = "K")]
    horizon: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "C")]
    deviation: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args([
    "min_imbalance", "imbalance", "block_tail", "prop2", "mv_audit", "sample",
])))]
struct ConstructArgs {
    /// Minimum imbalance probability over 1 ≤ m ≤ --m-max.
    #[arg(long)]
    min_imbalance: bool,
    /// Imbalance probability at --m.
    #[arg(long)]
    imbalance: bool,
    /// Exact P(S ≥ C) of the block process at (--N, --K, --C).
    #[arg(long)]
    block_tail: bool,
    /// Lower-bound threshold at (--N, --K, --epsilon) with its validity.
    #[arg(long)]
    prop2: bool,
    /// Audits the binomial lower bound against exact tails up to --m-max.
    #[arg(long)]
    mv_audit: bool,
    /// Draws one block process of length --N with block length --K.
    #[arg(long)]
    sample: bool,
    #[arg(long)]
    m_max: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long = "N")]
    steps: Option<usize>,
    #[arg(long = "K")]
    horizon: Option<usize>,
    #[arg(long = "C")]
    deviation: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    m_max: usize,
    #[arg(long = "K", default_value_t = 1)]
    horizon: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Tree file with `Y`; without it the block process of (--N, --K) is
    /// used.
    #[arg(long)]
    tree_file: Option<PathBuf>,
    #[arg(long = "N")]
    steps: Option<usize>,
    #[arg(long = "K")]
    horizon: usize,
    /// Deviation level; defaults to the threshold at --epsilon.
    #[arg(long = "C")]
    deviation: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Monte Carlo trials; 0 skips sampling.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct DecideArgs {
    #[arg(long)]
    tree_file: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Seed of the uniform-random alternative.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("tier").args(["quick", "full"])))]
struct VerifyArgs {
    /// Reduced instance counts.
    #[arg(long)]
    quick: bool,
    /// Full sizes and runtime budgets (default).
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Directory for the suite CSVs; defaults to `$KSTEP_OUTPUT_DIR`, and
    /// they are not written when neither is set.
    #[arg(long)]
    artifacts_dir: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(kstep::Error),
    TreeFile(kstep::Error),
    Output(String),
}

impl From<kstep::Error> for Failure {
    fn from(e: kstep::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn kind_and_code(&self) -> (&'static str, u8) {
        use kstep::Error as E;
        match self {
            Failure::Usage(_) => ("usage", 2),
            Failure::TreeFile(_) | Failure::Core(E::TreeFile(_)) => ("tree_file", 4),
            Failure::Core(E::Falsified(_)) => ("falsified", 5),
            Failure::Core(E::SamplerFailed { .. }) => ("sampler", 1),
            Failure::Core(_) => ("invalid_parameter", 3),
            Failure::Output(_) => ("output", 6),
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Output(m) => m.clone(),
            Failure::Core(e) | Failure::TreeFile(e) => e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn config(command: &str, params: &[(&str, String)], out: &OutputArgs, dest: &Destination) -> Vec<(String, String)> {
    let mut c = vec![("command".to_owned(), command.to_owned())];
    c.extend(params.iter().map(|(k, v)| (k.to_string(), v.clone())));
    c.push(("format".into(), out.format.name().into()));
    c.push(("output".into(), dest.describe()));
    c
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn required<T>(v: Option<T>, flag: &str, mode: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("{mode} requires {flag}")))
}

fn emit(table: &Table, out: &OutputArgs, dest: &Destination) -> Outcome {
    dest.write(&table.render(out.format))
        .map_err(|e| Failure::Output(format!("{}: {e}", dest.describe())))
}

fn destination(out: &OutputArgs, stem: &str) -> Destination {
    Destination::resolve(out.output.as_deref(), &format!("{stem}.{}", out.format.extension()))
}

fn bound(a: &BoundArgs) -> Outcome {
    let p = HorizonParams::new(a.steps, a.horizon, a.epsilon)?;
    let threshold = theorem1_threshold(&p)?;
    let c = a.deviation.unwrap_or(threshold);
    if !(c > 0.0 && c.is_finite()) {
        return Err(kstep::Error::InvalidParameter {
            name: "C",
            value: c.to_string(),
            reason: "must be positive and finite".into(),
        }
        .into());
    }
    // the divisible-case bounds run at N rounded up to a multiple of K
    let rounded = a.steps.div_ceil(a.horizon) * a.horizon;
    let ap = AggregationParams::from_horizon(c, rounded, a.horizon)?;
    let p2 = prop2_threshold(&p).ok();
    let dest = destination(&a.out, "bound");
    let params = [
        ("N", a.steps.to_string()),
        ("K", a.horizon.to_string()),
        ("epsilon", a.epsilon.to_string()),
        ("C", opt(a.deviation)),
    ];
    let mut t = Table::new(
        config("bound", &params, &a.out, &dest),
        vec![
            "N", "K", "epsilon", "threshold", "C", "N_rounded", "hoeffding_marginal", "midpoint_bound", "aggregation_exact",
            "aggregation_relaxed", "lower_threshold", "lower_valid", "kr_threshold",
        ],
    );
    t.push(vec![
        a.steps.into(),
        a.horizon.into(),
        a.epsilon.into(),
        threshold.into(),
        c.into(),
        rounded.into(),
        hoeffding_marginal_tail(c, rounded, a.horizon)?.into(),
        midpoint_bound(c, a.horizon, rounded)?.into(),
        aggregation_bound(&ap, false).value.into(),
        aggregation_bound(&ap, true).value.into(),
        p2.as_ref().map(|p| p.threshold).into(),
        p2.as_ref().map(|p| p.valid).into(),
        kr_threshold(&p).ok().into(),
    ]);
    emit(&t, &a.out, &dest)
}

fn invert(a: &InvertArgs) -> Outcome {
    let dest = destination(&a.out, "invert");
    let params = [
        ("N", a.steps.to_string()),
        ("K", opt(a.horizon)),
        ("epsilon", opt(a.epsilon)),
        ("C", a.deviation.to_string()),
    ];
    let mut t = Table::new(config("invert", &params, &a.out, &dest), vec!["N", "K", "epsilon", "C"]);
    match (a.horizon, a.epsilon) {
        (Some(k), None) => {
            let eps = theorem1_epsilon_for(a.steps, k, a.deviation)?;
            t.push(vec![a.steps.into(), k.into(), eps.into(), a.deviation.into()]);
        }
        (None, Some(eps)) => {
            let k = theorem1_max_horizon(a.steps, eps, a.deviation)?;
            t.push(vec![a.steps.into(), k.into(), eps.into(), a.deviation.into()]);
        }
        _ => return Err(Failure::Usage("give exactly one of --K and --epsilon".into())),
    }
    emit(&t, &a.out, &dest)
}

fn construct(a: &ConstructArgs) -> Outcome {
    let dest = destination(&a.out, "construct");
    let params = [
        ("m_max", opt(a.m_max)),
        ("m", opt(a.m)),
        ("N", opt(a.steps)),
        ("K", opt(a.horizon)),
        ("C", opt(a.deviation)),
        ("epsilon", opt(a.epsilon)),
        ("seed", a.seed.to_string()),
    ];
    let mode = if a.min_imbalance {
        "min-imbalance"
    } else if a.imbalance {
        "imbalance"
    } else if a.block_tail {
        "block-tail"
    } else if a.prop2 {
        "prop2"
    } else if a.mv_audit {
        "mv-audit"
    } else {
        "sample"
    };
    let mut params = params.to_vec();
    params.insert(0, ("mode", mode.to_owned()));
    let cfg = config("construct", &params, &a.out, &dest);
    let flag = format!("--{mode}");
    let table = match mode {
        "min-imbalance" => {
            let m_max = required(a.m_max, "--m-max", &flag)?;
            let (m, p) = min_imbalance_prob(m_max)?;
            let rational = u32::try_from(m).ok().and_then(imbalance_prob_rational);
            let mut t = Table::new(cfg, vec!["m_max", "argmin_m", "min_prob", "min_prob_exact"]);
            t.push(vec![m_max.into(), m.into(), p.into(), rational.map(|r| r.to_string()).into()]);
            t
        }
        "imbalance" => {
            let m = required(a.m, "--m", &flag)?;
            let p = imbalance_prob(m)?;
            let rational = u32::try_from(m).ok().and_then(imbalance_prob_rational);
            let mut t = Table::new(cfg, vec!["m", "cutoff", "prob", "prob_exact"]);
            t.push(vec![m.into(), imbalance_cutoff(m).into(), p.into(), rational.map(|r| r.to_string()).into()]);
            t
        }
        "block-tail" => {
            let n = required(a.steps, "--N", &flag)?;
            let k = required(a.horizon, "--K", &flag)?;
            let c = required(a.deviation, "--C", &flag)?;
            let tail = block_deviation_tail(n, k, c)?;
            let rational = block_deviation_tail_rational(n, k, c)?;
            let mut t = Table::new(cfg, vec!["N", "K", "C", "tail", "tail_exact"]);
            t.push(vec![n.into(), k.into(), c.into(), tail.into(), rational.map(|r| r.to_string()).into()]);
            t
        }
        "prop2" => {
            let n = required(a.steps, "--N", &flag)?;
            let k = required(a.horizon, "--K", &flag)?;
            let eps = required(a.epsilon, "--epsilon", &flag)?;
            let p = prop2_threshold(&HorizonParams::new(n, k, eps)?)?;
            let tail = if n % k == 0 {
                Some(block_deviation_tail(n, k, p.threshold)?)
            } else {
                None
            };
            let violations: Vec<String> = p.violations.iter().map(|v| v.to_string()).collect();
            let mut t = Table::new(
                cfg,
                vec![
                    "N", "K", "epsilon", "threshold", "block_deviation", "valid", "violations", "tail_at_threshold",
                    "tail_at_least_epsilon",
                ],
            );
            t.push(vec![
                n.into(),
                k.into(),
                eps.into(),
                p.threshold.into(),
                p.block_deviation.into(),
                p.valid.into(),
                violations.join("; ").into(),
                tail.into(),
                tail.map(|v| v >= eps).into(),
            ]);
            t
        }
        "mv-audit" => {
            let m_max = required(a.m_max, "--m-max", &flag)?;
            let audit = audit_mv_bound(m_max as usize)?;
            let mut t = Table::new(
                cfg,
                vec!["m_max", "pairs_checked", "nontrivial_pairs", "min_ratio", "min_ratio_m", "min_ratio_t", "violations"],
            );
            t.push(vec![
                m_max.into(),
                audit.pairs_checked.into(),
                audit.nontrivial_pairs.into(),
                audit.min_ratio.into(),
                audit.min_ratio_at.0.into(),
                audit.min_ratio_at.1.into(),
                audit.violations.len().into(),
            ]);
            emit(&t, &a.out, &dest)?;
            if let Some(v) = audit.violations.first() {
                return Err(kstep::Error::Falsified(format!(
                    "P(Z >= m/2 + t) = {} < {} at m = {}, t = {}",
                    v.tail, v.bound, v.blocks, v.deviation
                ))
                .into());
            }
            return Ok(());
        }
        _ => {
            let n = required(a.steps, "--N", &flag)?;
            let k = required(a.horizon, "--K", &flag)?;
            let process = sample_block_process(n, k, a.seed)?;
            let mut t = Table::new(cfg, vec!["step", "block", "value", "partial_sum"]);
            let mut sum = 0i64;
            for (i, &v) in process.values.iter().enumerate() {
                sum += v as i64;
                t.push(vec![(i + 1).into(), (i / k + 1).into(), (v as i64).into(), sum.into()]);
            }
            t
        }
    };
    emit(&table, &a.out, &dest)
}

fn scan(a: &ScanArgs) -> Outcome {
    let dest = destination(&a.out, "scan");
    let params = [
        ("m_max", a.m_max.to_string()),
        ("K", a.horizon.to_string()),
        ("epsilon", a.epsilon.to_string()),
    ];
    let mut t = Table::new(
        config("scan", &params, &a.out, &dest),
        vec!["m", "N", "K", "epsilon", "imbalance_prob", "threshold", "block_tail_at_threshold", "midpoint_bound"],
    );
    if a.m_max == 0 {
        return Err(Failure::Usage("--m-max must be at least 1".into()));
    }
    for m in 1..=a.m_max {
        let n = m * a.horizon;
        let p = HorizonParams::new(n, a.horizon, a.epsilon)?;
        let threshold = theorem1_threshold(&p)?;
        let c_div = 4.0 * ((a.horizon * n) as f64 * (1.0 / a.epsilon).ln()).sqrt();
        t.push(vec![
            m.into(),
            n.into(),
            a.horizon.into(),
            a.epsilon.into(),
            imbalance_prob(m as u64)?.into(),
            threshold.into(),
            block_deviation_tail(n, a.horizon, threshold)?.into(),
            midpoint_bound(c_div, a.horizon, n)?.into(),
        ]);
    }
    emit(&t, &a.out, &dest)
}

fn read_document(path: &Path) -> Result<TreeDocument, Failure> {
    read_tree_file(path).map_err(Failure::TreeFile)
}

fn simulate(a: &SimulateArgs) -> Outcome {
    let dest = destination(&a.out, "simulate");
    let params = [
        ("tree_file", opt(a.tree_file.as_ref().map(|p| p.display()))),
        ("N", opt(a.steps)),
        ("K", a.horizon.to_string()),
        ("C", opt(a.deviation)),
        ("epsilon", opt(a.epsilon)),
        ("trials", a.trials.to_string()),
        ("seed", a.seed.to_string()),
    ];
    let cfg = config("simulate", &params, &a.out, &dest);
    let columns = vec![
        "source", "N", "K", "C", "sided", "exact_tail", "trials", "seed", "hits", "p_hat", "ci_low", "ci_high",
        "ci_contains_exact",
    ];
    let mut t = Table::new(cfg, columns);
    let deviation_for = |steps: usize| -> Result<f64, Failure> {
        match (a.deviation, a.epsilon) {
            (Some(c), _) => Ok(c),
            (None, Some(eps)) => Ok(theorem1_threshold(&HorizonParams::new(steps, a.horizon, eps)?)?),
            (None, None) => Err(Failure::Usage("give --C or --epsilon".into())),
        }
    };
    let mut push = |source: &str, steps: usize, c: f64, sided: Sided, exact: f64, est: Option<kstep::simulation::TailEstimate>| {
        let sided_name = match sided {
            Sided::TwoSided => "two_sided",
            Sided::Upper => "upper",
        };
        t.push(vec![
            source.into(),
            steps.into(),
            a.horizon.into(),
            c.into(),
            sided_name.into(),
            exact.into(),
            a.trials.into(),
            a.seed.into(),
            est.map(|e| e.hits).into(),
            est.map(|e| e.p_hat).into(),
            est.map(|e| e.ci_low).into(),
            est.map(|e| e.ci_high).into(),
            est.map(|e| e.contains(exact)).into(),
        ]);
    };
    match &a.tree_file {
        Some(path) => {
            let doc = read_document(path)?;
            let y = doc
                .sequence
                .ok_or_else(|| Failure::TreeFile(kstep::Error::TreeFile(format!("{}: no Y values", path.display()))))?;
            let steps = y.steps();
            let c = deviation_for(steps)?;
            let sampler = TreeSampler::new(&doc.tree, &y, a.horizon)?;
            for sided in [Sided::TwoSided, Sided::Upper] {
                let exact = exact_tail(&doc.tree, &y, a.horizon, c, sided)?;
                let est = (a.trials > 0)
                    .then(|| mc_tail(&sampler, c, sided, a.trials, a.seed))
                    .transpose()?;
                push("tree_file", steps, c, sided, exact, est);
            }
        }
        None => {
            let steps = required(a.steps, "--N", "simulate without --tree-file")?;
            let c = deviation_for(steps)?;
            let exact = block_deviation_tail(steps, a.horizon, c)?;
            let sampler = BlockSampler::new(steps, a.horizon)?;
            let est = (a.trials > 0)
                .then(|| mc_tail(&sampler, c, Sided::Upper, a.trials, a.seed))
                .transpose()?;
            push("block_process", steps, c, Sided::Upper, exact, est);
        }
    }
    emit(&t, &a.out, &dest)
}

fn decide(a: &DecideArgs) -> Outcome {
    let doc = read_document(&a.tree_file)?;
    let loss = doc.losses.ok_or_else(|| {
        Failure::TreeFile(kstep::Error::TreeFile(format!("{}: no losses", a.tree_file.display())))
    })?;
    let tree = doc.tree;
    let (n, k) = (loss.steps(), loss.horizon());
    let threshold = theorem1_threshold(&HorizonParams::new(n, k, a.epsilon)?)?;
    let dest = destination(&a.out, "decide");
    let params = [
        ("tree_file", a.tree_file.display().to_string()),
        ("epsilon", a.epsilon.to_string()),
        ("seed", a.seed.to_string()),
    ];
    let mut t = Table::new(
        config("decide", &params, &a.out, &dest),
        vec![
            "alternative", "N", "K", "decisions", "epsilon", "threshold", "dominance_violations", "regret_tail",
            "regret_below_half_epsilon", "shifted_check", "shifted_upper_tail", "max_forecast",
        ],
    );
    let bayes = bayesian_strategy(&tree, &loss);
    let dominance = dominance_violations(&tree, &loss, &bayes).len();
    let mut failures = Vec::new();
    if dominance > 0 {
        failures.push(format!("{dominance} dominance violations"));
    }
    let alternatives = [
        ("adversarial", adversarial_strategy(&tree, &loss)),
        ("uniform_random", uniform_random_strategy(&tree, &loss, a.seed)),
    ];
    for (name, alt) in &alternatives {
        let check = shifted_deviation_check(&tree, &loss, alt)?;
        let shifted = shifted_sequence(&tree, &loss, alt)?;
        let regret = regret_tail(&tree, &loss, alt, threshold);
        let upper = exact_tail(&tree, &shifted, k, threshold, Sided::Upper)?;
        if !check.passed {
            failures.push(format!("shifted check against {name}: {:?}", check.violations.first()));
        }
        t.push(vec![
            (*name).into(),
            n.into(),
            k.into(),
            loss.space().len().into(),
            a.epsilon.into(),
            threshold.into(),
            dominance.into(),
            regret.into(),
            (regret < a.epsilon / 2.0).into(),
            check.passed.into(),
            upper.into(),
            check.max_forecast.into(),
        ]);
    }
    // out-of-model baseline: no bound is claimed
    let clair = clairvoyant_regret_tail(&tree, &loss, threshold);
    t.push(vec![
        "clairvoyant".into(),
        n.into(),
        k.into(),
        loss.space().len().into(),
        a.epsilon.into(),
        threshold.into(),
        dominance.into(),
        clair.into(),
        (clair < a.epsilon / 2.0).into(),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ]);
    emit(&t, &a.out, &dest)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(kstep::Error::Falsified(failures.join("; ")).into())
    }
}

fn verify_all(a: &VerifyArgs) -> Outcome {
    let tier = if a.quick { Tier::Quick } else { Tier::Full };
    let run = run_all(tier, a.seed)?;
    for r in &run.reports {
        eprintln!("{r}");
    }
    let artifacts_dir = a
        .artifacts_dir
        .clone()
        .or_else(|| std::env::var_os(output::OUTPUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from));
    if let Some(dir) = &artifacts_dir {
        for artifact in &run.artifacts {
            Destination::File(dir.join(artifact.name))
                .write(&artifact.csv)
                .map_err(|e| Failure::Output(format!("{}: {e}", dir.join(artifact.name).display())))?;
        }
    }
    let dest = destination(&a.out, "verify_all");
    let tier_name = if a.quick { "quick" } else { "full" };
    let params = [
        ("tier", tier_name.to_owned()),
        ("seed", a.seed.to_string()),
        ("artifacts_dir", opt(artifacts_dir.as_ref().map(|d| d.display()))),
    ];
    // timings are left out so that reruns compare byte for byte
    let mut t = Table::new(config("verify-all", &params, &a.out, &dest), vec!["criterion", "title", "passed", "detail"]);
    for r in &run.reports {
        t.push(vec![(r.id as usize).into(), r.title.into(), r.passed.into(), r.detail.clone().into()]);
    }
    emit(&t, &a.out, &dest)?;
    let failed: Vec<u8> = run.reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(kstep::Error::Falsified(format!("criteria {failed:?} failed")).into())
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Bound(a) => bound(a),
        Command::Invert(a) => invert(a),
        Command::Construct(a) => construct(a),
        Command::Scan(a) => scan(a),
        Command::Simulate(a) => simulate(a),
        Command::Decide(a) => decide(a),
        Command::VerifyAll(a) => verify_all(a),
    }
}

fn report(failure: &Failure) -> ExitCode {
    let (kind, code) = failure.kind_and_code();
    let record = json!({ "error": kind, "exit_code": code, "message": failure.message() });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&Failure::Usage(e.render().to_string().trim_end().to_owned())),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
