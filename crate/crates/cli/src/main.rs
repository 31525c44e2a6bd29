//! `imred`: command-line front end for the one-variable reduction, the
//! finite-model semantics and the countermodel search.
//!
//! Output is plain text, one record per line, fields separated by tabs.
//! Exit status: 0 true or unrefuted, 1 false or refuted, 2 error.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use thiserror::Error;

use imred::audit::{audit_lengths, audit_sizes, audit_spiral, audit_stability, AuditItem};
use imred::corpus::{self, FormulaConfig};
use imred::reduction::{
    base_length, family_formula, level_count, positive_embed, reduce_to_one_var, spiral_cell, spiral_index, star,
    stability_level, FamilyId, Letter, ReductionError,
};
use imred::search::{
    check_translation_consistency, find_countermodel, RefutationResult, SearchBudget, SearchError, Verdict,
};
use imred::semantics::{eval, SemanticsError};
use imred::syntax::{parse_model, print_certificate, ModelError, ParseError};
use imred::{parse_formula, Formula, LogicKind};

const CORPUS_HELP: &str = "Random formulas come from a ChaCha8 generator seeded with --seed. A formula \
is a tree with a uniformly drawn node count; each inner node is <> or [] (weights 2, 2) or &, |, -> \
(weights 3, 3, 4); each leaf is a variable drawn uniformly from p1..pV (weight 6) or false (weight 1).";

#[derive(Parser, Debug)]
#[command(name = "imred", version, about = "One-variable reduction for the intuitionistic modal logics FS and MIPC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Use MIPC-frames (every S_w total).
    #[arg(long, global = true, conflicts_with = "fs")]
    mipc: bool,
    /// Use FS-frames (the default).
    #[arg(long, global = true)]
    fs: bool,
}

impl Cli {
    fn kind(&self) -> Option<LogicKind> {
        if self.mipc {
            Some(LogicKind::Mipc)
        } else if self.fs {
            Some(LogicKind::Fs)
        } else {
            None
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Translate a formula to a positive formula in p1.
    Translate(TranslateArgs),
    /// Print family members, spiral ranks and level sizes.
    Family(FamilyArgs),
    /// Evaluate a formula on a model file.
    Check(CheckArgs),
    /// Search for a finite countermodel.
    Refute(RefuteArgs),
    /// Check the reduction's numeric bounds.
    #[command(after_help = CORPUS_HELP)]
    Audit(AuditArgs),
    /// Time the translation and compare search results before and after it.
    #[command(after_help = CORPUS_HELP)]
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stage {
    /// `e(φ)` only.
    Positive,
    /// The substitution only; the input must not contain `false`.
    Star,
    /// `e(φ)*`.
    Full,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    formula: String,
    #[arg(long, value_enum, default_value = "full")]
    stage: Stage,
    /// Formulas longer than this are summarized instead of printed.
    #[arg(long, default_value_t = 4096)]
    max_print: u64,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    /// `A` or `B`.
    letter: Option<String>,
    level: Option<u32>,
    index: Option<u64>,
    /// Spiral rank of the cell (I, J).
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    g: Option<Vec<u64>>,
    /// Cell of spiral rank R.
    #[arg(long, value_name = "R")]
    ginv: Option<u64>,
    /// Number of family members of each letter at level K.
    #[arg(long, value_name = "K")]
    count: Option<u32>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Model file, or `-` for standard input.
    model: PathBuf,
    formula: String,
    /// Print one verdict for the whole model.
    #[arg(long)]
    global: bool,
}

#[derive(Args, Debug, Clone)]
struct BudgetArgs {
    #[arg(long, default_value_t = 3)]
    max_worlds: usize,
    /// Bound on the number of distinct points.
    #[arg(long, default_value_t = 3)]
    max_points: usize,
    /// Variables p1..pN get valuations; defaults to the largest variable of the formula.
    #[arg(long)]
    vars: Option<u32>,
    /// Stop after this many (frame, valuation) pairs.
    #[arg(long)]
    cap: Option<u64>,
}

impl BudgetArgs {
    fn budget(&self, phi: &Formula) -> SearchBudget {
        let vars = self.vars.unwrap_or_else(|| phi.varset().max().unwrap_or(0));
        with_caps(SearchBudget::new(self.max_worlds, self.max_points, vars), self.cap)
    }
}

fn with_caps(mut budget: SearchBudget, cap: Option<u64>) -> SearchBudget {
    budget.candidate_cap = cap;
    budget.time_cap = std::env::var("IMRED_TIME_CAP_MS").ok().and_then(|v| v.parse().ok()).map(Duration::from_millis);
    budget
}

#[derive(Args, Debug)]
struct RefuteArgs {
    formula: String,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Compare the spiral with a step-by-step walk up to rank N.
    #[arg(long, value_name = "N", num_args = 0..=1, default_missing_value = "10000")]
    spiral: Option<u64>,
    /// Check |A^k_i|, |B^k_i| < l0 * 5^k.
    #[arg(long, alias = "lemma3")]
    lengths: bool,
    /// Highest level for --lengths; levels up to 3 are checked in full.
    #[arg(long, default_value_t = 6)]
    max_level: u32,
    /// Check the level k0 where the family outgrows l0 * 5^k.
    #[arg(long)]
    stability: bool,
    /// Check the output size bound on a random corpus.
    #[arg(long)]
    sizes: bool,
    /// Corpus size for --sizes.
    #[arg(long, default_value_t = 200)]
    corpus: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Target formula lengths.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    lengths: Vec<u64>,
    /// Formulas per length.
    #[arg(long, default_value_t = 5)]
    samples: usize,
    /// Variables per formula.
    #[arg(long, default_value_t = 8)]
    vars: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also search N random formulas refutable within (2 worlds, 2 points, 2
    /// vars) and compare with searches on their translations.
    #[arg(long, value_name = "N")]
    consistency: Option<usize>,
    /// Worlds for the searches on translations.
    #[arg(long, default_value_t = 2)]
    max_worlds: usize,
    /// Points for the searches on translations.
    #[arg(long, default_value_t = 2)]
    max_points: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Reduction(#[from] ReductionError),
    #[error("{0}")]
    Search(#[from] SearchError),
    #[error("{0}")]
    Semantics(#[from] SemanticsError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

/// Exit status of a successful run.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Holds,
    Fails,
}

type CliResult = Result<Status, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = cli.kind();
    let result = match &cli.command {
        Command::Translate(a) => translate(a),
        Command::Family(a) => family(a),
        Command::Check(a) => check(a, kind),
        Command::Refute(a) => refute(a, kind.unwrap_or_default()),
        Command::Audit(a) => audit(a),
        Command::Bench(a) => bench(a, kind.unwrap_or_default()),
    };
    match result {
        Ok(Status::Holds) => ExitCode::SUCCESS,
        Ok(Status::Fails) => ExitCode::from(1),
        Err(e) => {
            eprintln!("imred: {e}");
            ExitCode::from(2)
        }
    }
}

fn formula_field(f: &Formula, max_print: u64) -> String {
    if f.length() <= max_print {
        f.to_string()
    } else {
        format!("<length {}; raise --max-print to print>", f.length())
    }
}

fn vars_field(f: &Formula) -> String {
    f.varset().iter().map(|v| format!("p{v}")).collect::<Vec<_>>().join(",")
}

fn translate(args: &TranslateArgs) -> CliResult {
    let phi = parse_formula(&args.formula)?;
    let show = |f: &Formula| formula_field(f, args.max_print);
    println!("input\t{}", show(&phi));
    println!("stage\t{}", format!("{:?}", args.stage).to_lowercase());
    let positive = match args.stage {
        Stage::Star => phi.clone(),
        Stage::Positive | Stage::Full => {
            let e = positive_embed(&phi);
            println!("fresh\tp{}", e.fresh);
            println!("F1\t{}", show(&e.f1));
            println!("F2\t{}", show(&e.f2));
            println!("F3\t{}", show(&e.f3));
            println!("F\t{}", show(&e.guard));
            println!("phi_f\t{}", show(&e.replaced));
            println!("embedded\t{}", show(&e.embedded));
            println!("length_embedded\t{}", e.embedded.length());
            e.embedded
        }
    };
    println!("length_input\t{}", phi.length());
    if let Stage::Positive = args.stage {
        println!("vars\t{}", vars_field(&positive));
        println!("positive\t{}", positive.is_positive());
        return Ok(Status::Holds);
    }
    let s = star(&positive)?;
    let k0 = stability_level()?;
    let out = &s.formula;
    let renaming: Vec<String> = s.renaming.iter().map(|(v, r)| format!("p{v}={r}")).collect();
    println!("output\t{}", show(out));
    println!("vars\t{}", vars_field(out));
    println!("positive\t{}", out.is_positive());
    println!("k_phi\t{}", s.target_level);
    println!("k0\t{k0}");
    println!("l0\t{}", base_length());
    println!("level\t{}", s.level);
    println!("renaming\t{}", renaming.join(","));
    println!("length_output\t{}", out.length());
    println!("dag_output\t{}", out.dag_size());
    let base = u128::from(positive.length());
    let bound = 2 * 5u128.pow(k0 + 1) * base * base;
    println!("size_bound\t{bound}");
    println!("bound_ok={}", u128::from(out.length()) < bound);
    Ok(Status::Holds)
}

fn family(args: &FamilyArgs) -> CliResult {
    let mut printed = false;
    if let Some(g) = &args.g {
        println!("{}", spiral_index(g[0], g[1])?);
        printed = true;
    }
    if let Some(r) = args.ginv {
        let (i, j) = spiral_cell(r)?;
        println!("({i},{j})");
        printed = true;
    }
    if let Some(k) = args.count {
        println!("{}", level_count(k));
        printed = true;
    }
    match (&args.letter, args.level, args.index) {
        (Some(letter), Some(level), Some(index)) => {
            let letter = match letter.as_str() {
                "A" | "a" => Letter::A,
                "B" | "b" => Letter::B,
                other => return Err(CliError::Usage(format!("letter must be A or B, got `{other}`"))),
            };
            println!("{}", family_formula(FamilyId::new(level, letter, index), 1)?);
        }
        (None, None, None) if printed => {}
        _ => return Err(CliError::Usage("expected LETTER LEVEL INDEX, --g, --ginv or --count".into())),
    }
    Ok(Status::Holds)
}

fn read_input(path: &PathBuf) -> Result<String, std::io::Error> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
    }
}

fn check(args: &CheckArgs, kind: Option<LogicKind>) -> CliResult {
    let mut model = parse_model(&read_input(&args.model)?)?;
    if let Some(kind) = kind {
        model = model.with_kind(kind);
        let violations = model.validate();
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations).into());
        }
    }
    let phi = parse_formula(&args.formula)?;
    let frame = model.frame();
    let mut first_false = None;
    for w in 0..frame.num_worlds() {
        for x in frame.domain(w).ones() {
            let value = eval(&model, w, x, &phi)?;
            if !value && first_false.is_none() {
                first_false = Some((w, x));
            }
            if !args.global {
                println!("{}\t{}\t{value}", frame.world_name(w), frame.point_name(x));
            }
        }
    }
    match first_false {
        None => {
            if args.global {
                println!("true");
            }
            Ok(Status::Holds)
        }
        Some((w, x)) => {
            if args.global {
                println!("false\t{}\t{}", frame.world_name(w), frame.point_name(x));
            }
            Ok(Status::Fails)
        }
    }
}

fn refute(args: &RefuteArgs, kind: LogicKind) -> CliResult {
    let phi = parse_formula(&args.formula)?;
    let budget = args.budget.budget(&phi);
    match find_countermodel(&phi, &budget, kind)? {
        RefutationResult::Countermodel { model, world, point, stats } => {
            print!("{}", print_certificate(&model, world, point));
            println!("# {kind}\t{budget}\t{stats}");
            Ok(Status::Fails)
        }
        RefutationResult::Exhausted(stats) => {
            println!("exhausted\t{kind}\t{budget}\t{stats}");
            Ok(Status::Holds)
        }
    }
}

fn audit(args: &AuditArgs) -> CliResult {
    let all = args.spiral.is_none() && !args.lengths && !args.stability && !args.sizes;
    let mut items: Vec<AuditItem> = Vec::new();
    if all || args.spiral.is_some() {
        items.push(audit_spiral(args.spiral.unwrap_or(10_000)));
    }
    if all || args.lengths {
        items.push(audit_lengths(args.max_level, 3, 100, args.seed));
    }
    if all || args.stability {
        items.push(audit_stability(10));
    }
    if all || args.sizes {
        items.push(audit_sizes(args.corpus, args.seed, 1000));
    }
    for item in &items {
        println!("{item}");
    }
    Ok(if items.iter().all(|i| i.passed) { Status::Holds } else { Status::Fails })
}

fn bench(args: &BenchArgs, kind: LogicKind) -> CliResult {
    let mut rng = corpus::rng(args.seed);
    println!("seed\t{}", args.seed);
    println!("target\tmean_length\tmean_output_length\tms_per_formula");
    for &target in &args.lengths {
        let samples: Vec<Formula> =
            (0..args.samples.max(1)).map(|_| corpus::formula_near_length(&mut rng, args.vars, target)).collect();
        let start = Instant::now();
        let mut out_len = 0f64;
        for phi in &samples {
            out_len += reduce_to_one_var(phi)?.output().length() as f64;
        }
        let ms = start.elapsed().as_secs_f64() * 1e3 / samples.len() as f64;
        let mean = samples.iter().map(|f| f.length() as f64).sum::<f64>() / samples.len() as f64;
        println!("{target}\t{mean:.0}\t{:.0}\t{ms:.3}", out_len / samples.len() as f64);
    }
    let Some(n) = args.consistency else { return Ok(Status::Holds) };
    let budget_in = with_caps(SearchBudget::new(2, 2, 2), None);
    let budget_out = with_caps(SearchBudget::new(args.max_worlds, args.max_points, 1), None);
    println!("consistency\t{kind}\tinput {budget_in}\toutput {budget_out}");
    let (mut found, mut soft, mut contradictions) = (0, [0; 2], 0);
    while found < n {
        let config = FormulaConfig::new(2, rng.gen_range(3..=9));
        let phi = corpus::random_formula(&mut rng, &config);
        if !find_countermodel(&phi, &budget_in, kind)?.is_refuted() {
            continue;
        }
        found += 1;
        let r = check_translation_consistency(&phi, &budget_in, &budget_out, kind)?;
        for (slot, verdict) in [r.embed_verdict, r.star_verdict].into_iter().enumerate() {
            match verdict {
                Verdict::SoftMiss => soft[slot] += 1,
                Verdict::Contradiction => contradictions += 1,
                Verdict::Consistent => {}
            }
        }
        println!("{phi}\t{}\t{}", r.embed_verdict, r.star_verdict);
    }
    println!("summary\tformulas={n}\tsoft_miss_embedded={}\tsoft_miss_star={}\tcontradictions={contradictions}", soft[0], soft[1]);
    Ok(if contradictions == 0 { Status::Holds } else { Status::Fails })
}
