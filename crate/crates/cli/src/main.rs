//! Command-line front end. Exit codes: 0 = success/affirmative, 1 =
//! definitive negative (no matching, sequence refuted, certificate
//! invalid), 2 = usage or validation error, 3 = inconclusive (budget
//! exhausted).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use rainbow_cli::battery::{self, Corruption};
use rainbow_cli::report::{envelope, flag, int, obj, real, render, render_csv, text, uint, OutputFormat, RunConfig};
use rainbow_core::docio;
use rainbow_core::family::{Block, Family, FamilySystem, InstanceParams};
use rainbow_core::matcher::{self, HallCertificate};
use rainbow_core::nullstellensatz as cn;
use rainbow_core::randmatch::{self, XiOptions};
use rainbow_core::sequences::{self, ThresholdSequence, WitnessStatus};
use rainbow_core::spread;

#[derive(Parser)]
#[command(name = "rainbow", version, about = "Rainbow matchings in [n]^k: exact matchers, threshold sequences, random-matching statistics, spread approximation, and GF(p^2) certificates")]
struct Cli {
    /// RNG seed; RAINBOW_SEED overrides the default of 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sampling stream count; 1 guarantees determinism.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Report format (csv only for lambda grids, count tables, catalogs).
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a rainbow matching in a family-system document.
    Match(InputArgs),
    /// Decide cross-dependence exactly.
    CrossDep(InputArgs),
    /// Hall certificate against a perfect matching (identity by default).
    Hall {
        #[command(flatten)]
        input: InputArgs,
        /// Perfect-matching document.
        #[arg(long)]
        matching: Option<PathBuf>,
    },
    /// Greedy matcher for n >= k^2 s^2.
    Greedy(InputArgs),
    /// Threshold sequences.
    #[command(subcommand)]
    Seq(SeqCommand),
    /// Random perfect matchings and xi statistics.
    #[command(subcommand)]
    Rand(RandCommand),
    /// Spreadness testing and spread approximation.
    #[command(subcommand)]
    Spread(SpreadCommand),
    /// Coefficient certificates over GF(p^2).
    Cn(CnArgs),
    /// Run the full desk-scale reproduction battery.
    Reproduce,
}

#[derive(Args)]
struct InputArgs {
    /// Family-system document.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct FamilyPick {
    #[command(flatten)]
    input: InputArgs,
    /// 1-based family index within the document.
    #[arg(long, default_value_t = 1)]
    family: usize,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    k: usize,
    #[arg(short)]
    s: usize,
}

#[derive(Subcommand)]
enum SeqCommand {
    /// Evaluate a named sequence formula.
    Make {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        kind: SeqKind,
        /// Constant for the truncated sequence.
        #[arg(long, default_value_t = 20.0)]
        c: f64,
    },
    /// Build a counterexample family system.
    Construct {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        construction: Construction,
        /// 1-based pin value for the pinned construction.
        #[arg(long, default_value_t = 1)]
        pin: usize,
    },
    /// Test whether a document refutes a sequence.
    Check {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated thresholds.
        #[arg(long)]
        thresholds: String,
        /// Sort the thresholds into nondecreasing order first.
        #[arg(long)]
        sort: bool,
    },
    /// Complete witness search against a sequence.
    Witness {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        thresholds: String,
        #[arg(long)]
        sort: bool,
        /// Node budget.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SeqKind {
    Uniform,
    Linear,
    Truncated,
    Spread,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    Pinned,
    Pigeonhole,
}

#[derive(Subcommand)]
enum RandCommand {
    /// Sample uniform perfect matchings.
    Sample {
        #[arg(short)]
        n: usize,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Estimate (or enumerate) the xi distribution of one family.
    Xi {
        #[command(flatten)]
        pick: FamilyPick,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Empirical concentration tails against the formula bound.
    Conc {
        #[command(flatten)]
        pick: FamilyPick,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Comma-separated lambda grid.
        #[arg(long, default_value = "1,2,4,8")]
        lambdas: String,
    },
    /// Fat/thin hyperplane classification at tail probability p.
    Classify {
        #[command(flatten)]
        pick: FamilyPick,
        #[arg(long)]
        p: f64,
    },
    /// Exact disjoint-pair count vs the mixing bound.
    Mixing {
        #[command(flatten)]
        pick: FamilyPick,
    },
    /// Empirical check of the spread lemma's conclusion.
    Spreadlemma {
        #[command(flatten)]
        pick: FamilyPick,
        #[arg(short)]
        r: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
}

#[derive(Subcommand)]
enum SpreadCommand {
    /// Test r-spreadness of one family.
    Check {
        #[command(flatten)]
        pick: FamilyPick,
        #[arg(short)]
        r: f64,
    },
    /// Run the spread-approximation procedure on one family.
    Approx {
        #[command(flatten)]
        pick: FamilyPick,
        #[arg(short)]
        r: f64,
    },
    /// Approximate every family, degree-reduce, cap, and report cores.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short)]
        r: f64,
    },
}

#[derive(Args)]
struct CnArgs {
    #[command(subcommand)]
    command: CnCommand,
}

#[derive(Subcommand)]
enum CnCommand {
    /// Certify one exponent vector modulo p.
    Certify {
        #[arg(short)]
        p: u64,
        /// Comma-separated exponents f_1,...,f_s.
        #[arg(short)]
        f: String,
    },
    /// All nondecreasing exponent vectors with their certificates.
    Catalog {
        #[arg(short)]
        s: usize,
        #[arg(short)]
        p: u64,
    },
    /// Exhaustive square-criterion verification of the field layer.
    VerifyField {
        #[arg(short)]
        p: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or_else(|| {
        std::env::var("RAINBOW_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    });
    let config = RunConfig {
        seed,
        threads: cli.threads.max(1),
        format: match cli.format {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        },
    };
    match dispatch(&cli.command, &config) {
        Ok((code, output)) => {
            let outcome = match &cli.output {
                Some(path) => fs::write(path, output).map_err(|e| e.to_string()),
                None => {
                    print!("{output}");
                    Ok(())
                }
            };
            match outcome {
                Ok(()) => ExitCode::from(code),
                Err(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(2)
                }
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: &Command, config: &RunConfig) -> Result<(u8, String), String> {
    if config.format == OutputFormat::Csv && !supports_csv(command) {
        return Err("csv output is only available for 'rand conc', 'rand classify', and 'cn catalog'".into());
    }
    match command {
        Command::Match(input) => cmd_match(input, config),
        Command::CrossDep(input) => cmd_cross_dep(input, config),
        Command::Hall { input, matching } => cmd_hall(input, matching.as_deref(), config),
        Command::Greedy(input) => cmd_greedy(input, config),
        Command::Seq(seq) => cmd_seq(seq, config),
        Command::Rand(rand) => cmd_rand(rand, config),
        Command::Spread(sp) => cmd_spread(sp, config),
        Command::Cn(cn_args) => cmd_cn(&cn_args.command, config),
        Command::Reproduce => cmd_reproduce(config),
    }
}

fn supports_csv(command: &Command) -> bool {
    matches!(
        command,
        Command::Rand(RandCommand::Conc { .. })
            | Command::Rand(RandCommand::Classify { .. })
            | Command::Cn(CnArgs { command: CnCommand::Catalog { .. } })
    )
}

fn load_system(input: &InputArgs) -> Result<FamilySystem, String> {
    let doc = fs::read_to_string(&input.input)
        .map_err(|e| format!("cannot read {}: {e}", input.input.display()))?;
    docio::deserialize_system(&doc).map_err(|e| e.to_string())
}

fn pick_family(pick: &FamilyPick) -> Result<(FamilySystem, Family), String> {
    let system = load_system(&pick.input)?;
    if pick.family < 1 || pick.family > system.params().s {
        return Err(format!(
            "family index {} out of range 1..={}",
            pick.family,
            system.params().s
        ));
    }
    let family = system.families()[pick.family - 1].clone();
    Ok((system, family))
}

fn block_str(b: &Block, k: usize) -> Value {
    if b.is_partite_complete(k) {
        let vals: Vec<String> = b.elements().iter().map(|e| (e.value + 1).to_string()).collect();
        text(format!("[{}]", vals.join(",")))
    } else {
        let pairs: Vec<String> = b
            .elements()
            .iter()
            .map(|e| format!("[{},{}]", e.part + 1, e.value + 1))
            .collect();
        text(format!("[{}]", pairs.join(",")))
    }
}

fn params_echo(p: InstanceParams) -> Vec<(&'static str, Value)> {
    vec![("n", int(p.n as i128)), ("k", int(p.k as i128)), ("s", int(p.s as i128))]
}

fn parse_f64_list(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|tok| tok.trim().parse::<f64>().map_err(|e| format!("bad threshold '{tok}': {e}")))
        .collect()
}

fn parse_u64_list(raw: &str) -> Result<Vec<u64>, String> {
    raw.split(',')
        .map(|tok| tok.trim().parse::<u64>().map_err(|e| format!("bad entry '{tok}': {e}")))
        .collect()
}

fn cmd_match(input: &InputArgs, config: &RunConfig) -> Result<(u8, String), String> {
    let system = load_system(input)?;
    let k = system.params().k;
    let found = matcher::find_rainbow(&system);
    let result = obj(vec![
        ("found", flag(found.is_some())),
        (
            "matching",
            match &found {
                Some(m) => Value::Array(m.assignment().iter().map(|b| block_str(b, k)).collect()),
                None => Value::Null,
            },
        ),
        ("sizes", sizes_value(&system)),
    ]);
    let mut extra = params_echo(system.params());
    extra.push(("input", text(input.input.display().to_string())));
    let report = envelope("match", config, &extra, result);
    Ok((if found.is_some() { 0 } else { 1 }, render(&report)))
}

fn sizes_value(system: &FamilySystem) -> Value {
    Value::Array(system.sizes().iter().map(|&z| int(z as i128)).collect())
}

fn cmd_cross_dep(input: &InputArgs, config: &RunConfig) -> Result<(u8, String), String> {
    let system = load_system(input)?;
    let dependent = matcher::is_cross_dependent(&system);
    let result = obj(vec![
        ("cross_dependent", flag(dependent)),
        ("sizes", sizes_value(&system)),
    ]);
    let mut extra = params_echo(system.params());
    extra.push(("input", text(input.input.display().to_string())));
    let report = envelope("cross-dep", config, &extra, result);
    Ok((if dependent { 0 } else { 1 }, render(&report)))
}

fn cmd_hall(
    input: &InputArgs,
    matching: Option<&std::path::Path>,
    config: &RunConfig,
) -> Result<(u8, String), String> {
    let system = load_system(input)?;
    let p = system.params();
    let m = match matching {
        Some(path) => {
            let doc = fs::read_to_string(path).map_err(|e| format!("cannot read matching: {e}"))?;
            docio::deserialize_matching(&doc).map_err(|e| e.to_string())?
        }
        None => randmatch::PerfectMatching::identity(p.n, p.k),
    };
    let certificate = matcher::hall_certificate(&system, &m).map_err(|e| e.to_string())?;
    let (code, result) = match certificate {
        HallCertificate::Sdr(assignment) => (
            0u8,
            obj(vec![
                ("certificate", text("sdr")),
                (
                    "assignment",
                    Value::Array(assignment.iter().map(|&row| int(row as i128 + 1)).collect()),
                ),
            ]),
        ),
        HallCertificate::ViolatingSet { families, neighborhood } => (
            1,
            obj(vec![
                ("certificate", text("violating-set")),
                (
                    "families",
                    Value::Array(families.iter().map(|&i| int(i as i128 + 1)).collect()),
                ),
                (
                    "neighborhood",
                    Value::Array(neighborhood.iter().map(|&r| int(r as i128 + 1)).collect()),
                ),
            ]),
        ),
    };
    let mut extra = params_echo(p);
    extra.push(("input", text(input.input.display().to_string())));
    let report = envelope("hall", config, &extra, result);
    Ok((code, render(&report)))
}

fn cmd_greedy(input: &InputArgs, config: &RunConfig) -> Result<(u8, String), String> {
    let system = load_system(input)?;
    let k = system.params().k;
    let m = matcher::greedy_large_n(&system).map_err(|e| e.to_string())?;
    let result = obj(vec![
        ("found", flag(true)),
        (
            "matching",
            Value::Array(m.assignment().iter().map(|b| block_str(b, k)).collect()),
        ),
    ]);
    let mut extra = params_echo(system.params());
    extra.push(("input", text(input.input.display().to_string())));
    let report = envelope("greedy", config, &extra, result);
    Ok((0, render(&report)))
}

fn sequence_values(seq: &ThresholdSequence) -> Value {
    Value::Array(seq.values().iter().map(|&v| real(v)).collect())
}

fn cmd_seq(command: &SeqCommand, config: &RunConfig) -> Result<(u8, String), String> {
    match command {
        SeqCommand::Make { params, kind, c } => {
            let p = InstanceParams::new(params.n, params.k, params.s).map_err(|e| e.to_string())?;
            let (name, seq, note) = match kind {
                SeqKind::Uniform => ("uniform", sequences::uniform_sequence(p), None),
                SeqKind::Linear => ("linear", sequences::linear_sequence(p), None),
                SeqKind::Truncated => (
                    "truncated",
                    sequences::truncated_sequence(p, *c).map_err(|e| e.to_string())?,
                    Some(("log_base", text("natural"))),
                ),
                SeqKind::Spread => ("spread", sequences::spread_threshold_sequence(p), None),
            };
            let mut fields = vec![("kind", text(name)), ("values", sequence_values(&seq))];
            if matches!(kind, SeqKind::Truncated) {
                fields.push(("c", real(*c)));
            }
            if let Some(note) = note {
                fields.push(note);
            }
            let report = envelope("seq make", config, &params_echo(p), obj(fields));
            Ok((0, render(&report)))
        }
        SeqCommand::Construct { params, construction, pin } => {
            let p = InstanceParams::new(params.n, params.k, params.s).map_err(|e| e.to_string())?;
            let system = match construction {
                Construction::Pinned => {
                    if *pin < 1 {
                        return Err("pin is 1-based".into());
                    }
                    sequences::pinned_block_system(p, pin - 1).map_err(|e| e.to_string())?
                }
                Construction::Pigeonhole => {
                    sequences::pigeonhole_system(p).map_err(|e| e.to_string())?
                }
            };
            // the constructed document is the report payload
            Ok((0, docio::serialize_system(&system)))
        }
        SeqCommand::Check { input, thresholds, sort } => {
            let system = load_system(input)?;
            let mut values = parse_f64_list(thresholds)?;
            if *sort {
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
            let seq = ThresholdSequence::new(system.params(), values).map_err(|e| e.to_string())?;
            let refuted =
                sequences::is_counterexample_for(&system, &seq).map_err(|e| e.to_string())?;
            let result = obj(vec![
                ("counterexample", flag(refuted)),
                ("sizes", sizes_value(&system)),
                ("thresholds", sequence_values(&seq)),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("input", text(input.input.display().to_string())));
            let report = envelope("seq check", config, &extra, result);
            Ok((if refuted { 1 } else { 0 }, render(&report)))
        }
        SeqCommand::Witness { params, thresholds, sort, budget } => {
            let p = InstanceParams::new(params.n, params.k, params.s).map_err(|e| e.to_string())?;
            let mut values = parse_f64_list(thresholds)?;
            if *sort {
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
            let seq = ThresholdSequence::new(p, values).map_err(|e| e.to_string())?;
            let report_data = sequences::witness_search(p, &seq, *budget).map_err(|e| e.to_string())?;
            let (code, status) = match report_data.status {
                WitnessStatus::SatisfyingVerified => (0u8, "SATISFYING-VERIFIED"),
                WitnessStatus::WitnessFound => (1, "WITNESS-FOUND"),
                WitnessStatus::Inconclusive => (3, "INCONCLUSIVE"),
            };
            let result = obj(vec![
                ("status", text(status)),
                ("nodes_explored", uint(report_data.nodes_explored)),
                (
                    "witness",
                    match &report_data.witness {
                        Some(sys) => text(docio::serialize_system(sys)),
                        None => Value::Null,
                    },
                ),
                ("thresholds", sequence_values(&seq)),
            ]);
            let mut extra = params_echo(p);
            extra.push(("budget", uint(*budget)));
            let report = envelope("seq witness", config, &extra, result);
            Ok((code, render(&report)))
        }
    }
}

fn cmd_rand(command: &RandCommand, config: &RunConfig) -> Result<(u8, String), String> {
    match command {
        RandCommand::Sample { n, k, count } => {
            let p = InstanceParams::new(*n, *k, 1).map_err(|e| e.to_string())?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(config.seed);
            let samples: Vec<Value> = (0..*count)
                .map(|_| {
                    let m = randmatch::sample_matching(p, &mut rng);
                    Value::Array(m.rows().iter().map(|b| block_str(b, *k)).collect())
                })
                .collect();
            let result = obj(vec![("matchings", Value::Array(samples))]);
            let mut extra = params_echo(p);
            extra.push(("count", int(*count as i128)));
            let report = envelope("rand sample", config, &extra, result);
            Ok((0, render(&report)))
        }
        RandCommand::Xi { pick, trials } => {
            let (system, family) = pick_family(pick)?;
            let opts = XiOptions { streams: config.threads, ..XiOptions::default() };
            let stats =
                randmatch::estimate_xi_with(&family, system.params().s, *trials, config.seed, opts)
                    .map_err(|e| e.to_string())?;
            let tails: Vec<Value> = stats
                .tail_counts
                .iter()
                .map(|(&t, &c)| obj(vec![("threshold", int(t as i128)), ("count", uint(c))]))
                .collect();
            let result = obj(vec![
                ("trials", uint(stats.trials)),
                ("exact", flag(stats.exact)),
                ("mean", real(stats.mean)),
                ("p_neq", real(stats.p_neq)),
                ("p_gt", real(stats.p_gt)),
                ("tail_counts", Value::Array(tails)),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("family", int(pick.family as i128)));
            let report = envelope("rand xi", config, &extra, result);
            Ok((0, render(&report)))
        }
        RandCommand::Conc { pick, trials, lambdas } => {
            let (system, family) = pick_family(pick)?;
            let grid = parse_f64_list(lambdas)?;
            let data =
                randmatch::check_concentration(&family, system.params().s, *trials, &grid, config.seed)
                    .map_err(|e| e.to_string())?;
            if config.format == OutputFormat::Csv {
                let rows: Vec<Vec<String>> = data
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            format!("{}", r.lambda),
                            format!("{}", r.delta),
                            format!("{}", r.empirical),
                            format!("{}", r.bound),
                            format!("{}", r.std_err),
                            format!("{}", r.flagged),
                        ]
                    })
                    .collect();
                let csv = render_csv(
                    &["lambda", "delta", "empirical", "bound", "std_err", "flagged"],
                    &rows,
                );
                return Ok((if data.flags() == 0 { 0 } else { 1 }, csv));
            }
            let rows: Vec<Value> = data
                .rows
                .iter()
                .map(|r| {
                    obj(vec![
                        ("lambda", real(r.lambda)),
                        ("delta", int(r.delta as i128)),
                        ("empirical", real(r.empirical)),
                        ("bound", real(r.bound)),
                        ("std_err", real(r.std_err)),
                        ("flagged", flag(r.flagged)),
                    ])
                })
                .collect();
            let result = obj(vec![
                ("alpha", real(data.alpha)),
                ("trials", uint(data.trials)),
                ("flags", int(data.flags() as i128)),
                ("rows", Value::Array(rows)),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("family", int(pick.family as i128)));
            let report = envelope("rand conc", config, &extra, result);
            Ok((if data.flags() == 0 { 0 } else { 1 }, render(&report)))
        }
        RandCommand::Classify { pick, p } => {
            let (system, family) = pick_family(pick)?;
            let data = randmatch::classify_hyperplanes(&family, *p, system.params().s)
                .map_err(|e| e.to_string())?;
            let any_violation = data
                .coords
                .iter()
                .any(|c| c.case == randmatch::CoordCase::RegimeViolation);
            if config.format == OutputFormat::Csv {
                let mut rows = Vec::new();
                for (ci, coord) in data.coords.iter().enumerate() {
                    for (v, &count) in coord.counts.iter().enumerate() {
                        let role = if coord.fat.contains(&v) {
                            "fat"
                        } else if coord.thin.contains(&v) {
                            "thin"
                        } else {
                            "-"
                        };
                        rows.push(vec![
                            format!("{}", ci + 1),
                            format!("{}", v + 1),
                            format!("{count}"),
                            format!("{:?}", coord.case),
                            role.to_string(),
                        ]);
                    }
                }
                let csv = render_csv(&["coord", "value", "count", "case", "role"], &rows);
                return Ok((if any_violation { 1 } else { 0 }, csv));
            }
            let coords: Vec<Value> = data
                .coords
                .iter()
                .map(|c| {
                    obj(vec![
                        ("case", text(format!("{:?}", c.case))),
                        (
                            "fat",
                            Value::Array(c.fat.iter().map(|&v| int(v as i128 + 1)).collect()),
                        ),
                        (
                            "thin",
                            Value::Array(c.thin.iter().map(|&v| int(v as i128 + 1)).collect()),
                        ),
                        (
                            "counts",
                            Value::Array(c.counts.iter().map(|&c| uint(c)).collect()),
                        ),
                    ])
                })
                .collect();
            let result = obj(vec![
                ("p", real(data.p)),
                ("coords", Value::Array(coords)),
                ("parallel", flag(data.parallel)),
                (
                    "parallel_coord",
                    data.parallel_coord.map(|c| int(c as i128 + 1)).unwrap_or(Value::Null),
                ),
                ("fat_total", int(data.fat_total as i128)),
                ("fat_equals_s_minus_1", flag(data.fat_equals_s_minus_1)),
                ("p_below_one_eighth", flag(data.p_below_one_eighth)),
                ("p_at_most_one_fifth", flag(data.p_at_most_one_fifth)),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("family", int(pick.family as i128)));
            let report = envelope("rand classify", config, &extra, result);
            Ok((if any_violation { 1 } else { 0 }, render(&report)))
        }
        RandCommand::Mixing { pick } => {
            let (system, family) = pick_family(pick)?;
            let count = randmatch::disjoint_pair_count(&family).map_err(|e| e.to_string())?;
            // the family lives in [n]^{k-1}; the bound takes the ambient k
            let ambient_k = system.params().k + 1;
            let bound = randmatch::mixing_bound(system.params().n, ambient_k, family.len() as u64)
                .map_err(|e| e.to_string())?;
            let holds = count as f64 >= bound;
            let result = obj(vec![
                ("disjoint_pairs", uint(count)),
                ("mixing_bound", real(bound)),
                ("ambient_k", int(ambient_k as i128)),
                ("holds", flag(holds)),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("family", int(pick.family as i128)));
            let report = envelope("rand mixing", config, &extra, result);
            Ok((if holds { 0 } else { 1 }, render(&report)))
        }
        RandCommand::Spreadlemma { pick, r, beta, delta, trials } => {
            let (system, family) = pick_family(pick)?;
            let data =
                randmatch::spread_lemma_check(&family, *r, *beta, *delta, *trials, config.seed)
                    .map_err(|e| e.to_string())?;
            let (code, status) = match data.status {
                randmatch::SpreadLemmaStatus::Pass => (0u8, "PASS"),
                randmatch::SpreadLemmaStatus::Vacuous => (0, "VACUOUS"),
                randmatch::SpreadLemmaStatus::Fail => (1, "FAIL"),
            };
            let result = obj(vec![
                ("status", text(status)),
                ("empirical", real(data.empirical)),
                ("bound", real(data.bound)),
                ("margin", real(data.margin)),
                ("trials", uint(data.trials)),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("family", int(pick.family as i128)));
            extra.push(("r", real(*r)));
            extra.push(("beta", real(*beta)));
            extra.push(("delta", real(*delta)));
            let report = envelope("rand spreadlemma", config, &extra, result);
            Ok((code, render(&report)))
        }
    }
}

fn cmd_spread(command: &SpreadCommand, config: &RunConfig) -> Result<(u8, String), String> {
    match command {
        SpreadCommand::Check { pick, r } => {
            let (system, family) = pick_family(pick)?;
            let check = spread::is_r_spread(&family, *r).map_err(|e| e.to_string())?;
            let k = system.params().k;
            let result = obj(vec![
                ("spread", flag(check.is_spread)),
                (
                    "violator",
                    check.violator.as_ref().map(|b| block_str(b, k)).unwrap_or(Value::Null),
                ),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("family", int(pick.family as i128)));
            extra.push(("r", real(*r)));
            let report = envelope("spread check", config, &extra, result);
            Ok((if check.is_spread { 0 } else { 1 }, render(&report)))
        }
        SpreadCommand::Approx { pick, r } => {
            let (system, family) = pick_family(pick)?;
            let approx = spread::spread_approximate(&family, *r).map_err(|e| e.to_string())?;
            let verify = spread::check_approximation(&family, &approx);
            let k = system.params().k;
            let entries: Vec<Value> = approx
                .entries
                .iter()
                .map(|e| {
                    obj(vec![
                        ("core", block_str(&e.core, k)),
                        ("attached_size", int(e.attached.len() as i128)),
                    ])
                })
                .collect();
            let result = obj(vec![
                ("entries", Value::Array(entries)),
                ("residual_size", int(approx.residual.len() as i128)),
                ("stop", text(format!("{:?}", approx.stop))),
                ("empty_core_event", flag(approx.empty_core_event)),
                ("properties_ok", flag(verify.all_ok())),
                (
                    "residual_bound",
                    text(format!("{:?}", verify.residual_bound)),
                ),
            ]);
            let mut extra = params_echo(system.params());
            extra.push(("family", int(pick.family as i128)));
            extra.push(("r", real(*r)));
            let report = envelope("spread approx", config, &extra, result);
            Ok((if verify.all_ok() { 0 } else { 1 }, render(&report)))
        }
        SpreadCommand::Pipeline { input, r } => {
            let system = load_system(input)?;
            let p = system.params();
            let mut collections: Vec<spread::CoreCollection> = Vec::new();
            let mut property_failures = Vec::new();
            for (i, family) in system.families().iter().enumerate() {
                if family.is_empty() {
                    collections.push(spread::CoreCollection::new());
                    continue;
                }
                let approx = spread::spread_approximate(family, *r).map_err(|e| e.to_string())?;
                let verify = spread::check_approximation(family, &approx);
                if !verify.all_ok() {
                    property_failures.push(format!("family {}: {:?}", i + 1, verify.failures));
                }
                collections.push(approx.cores());
            }
            spread::degree_reduce(&mut collections, p.s);
            spread::cap_replace(&mut collections, p.s);
            let dependent =
                spread::cores_cross_dependent(p, &collections).map_err(|e| e.to_string())?;
            let cols: Vec<Value> = collections
                .iter()
                .map(|cores| Value::Array(cores.iter().map(|c| block_str(c, p.k)).collect()))
                .collect();
            let result = obj(vec![
                ("core_collections", Value::Array(cols)),
                ("cores_cross_dependent", flag(dependent)),
                ("properties_ok", flag(property_failures.is_empty())),
                (
                    "property_failures",
                    Value::Array(property_failures.iter().map(|f| text(f.clone())).collect()),
                ),
            ]);
            let mut extra = params_echo(p);
            extra.push(("input", text(input.input.display().to_string())));
            extra.push(("r", real(*r)));
            let report = envelope("spread pipeline", config, &extra, result);
            Ok((if property_failures.is_empty() { 0 } else { 1 }, render(&report)))
        }
    }
}

fn certificate_value(cert: &cn::CoefficientCertificate) -> Value {
    obj(vec![
        ("s", int(cert.s as i128)),
        (
            "exponents",
            Value::Array(cert.exponents.iter().map(|&e| uint(e)).collect()),
        ),
        ("p", uint(cert.p)),
        ("coefficient", uint(cert.coefficient)),
        (
            "satisfying_sequence",
            Value::Array(cert.satisfying_sequence.iter().map(|&v| uint(v)).collect()),
        ),
        ("valid", flag(cert.valid)),
        ("rationale", text(cert.rationale.clone())),
    ])
}

fn cmd_cn(command: &CnCommand, config: &RunConfig) -> Result<(u8, String), String> {
    match command {
        CnCommand::Certify { p, f } => {
            let exponents = parse_u64_list(f)?;
            let cert = cn::certify_sequence_k2(*p, &exponents).map_err(|e| e.to_string())?;
            let code = if cert.valid { 0 } else { 1 };
            let report = envelope(
                "cn certify",
                config,
                &[("p", uint(*p))],
                certificate_value(&cert),
            );
            Ok((code, render(&report)))
        }
        CnCommand::Catalog { s, p } => {
            let catalog = cn::catalog_certificates(*s, *p).map_err(|e| e.to_string())?;
            if config.format == OutputFormat::Csv {
                let rows: Vec<Vec<String>> = catalog
                    .iter()
                    .map(|c| {
                        vec![
                            c.exponents.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
                            c.coefficient.to_string(),
                            c.valid.to_string(),
                            c.satisfying_sequence
                                .iter()
                                .map(u64::to_string)
                                .collect::<Vec<_>>()
                                .join(" "),
                        ]
                    })
                    .collect();
                return Ok((0, render_csv(&["f", "coefficient", "valid", "sequence"], &rows)));
            }
            let result = obj(vec![
                ("count", int(catalog.len() as i128)),
                (
                    "certificates",
                    Value::Array(catalog.iter().map(certificate_value).collect()),
                ),
            ]);
            let report = envelope(
                "cn catalog",
                config,
                &[("s", int(*s as i128)), ("p", uint(*p))],
                result,
            );
            Ok((0, render(&report)))
        }
        CnCommand::VerifyField { p } => {
            let field = cn::QuadExtField::new(*p).map_err(|e| e.to_string())?;
            let data = cn::check_square_criterion(&field).map_err(|e| e.to_string())?;
            let result = obj(vec![
                ("p", uint(*p)),
                ("non_residue", uint(field.a())),
                ("pairs_checked", uint(data.pairs_checked)),
                ("consistent", flag(data.all_consistent)),
            ]);
            let report = envelope("cn verify-field", config, &[("p", uint(*p))], result);
            Ok((if data.all_consistent { 0 } else { 1 }, render(&report)))
        }
    }
}

fn cmd_reproduce(config: &RunConfig) -> Result<(u8, String), String> {
    let outcomes = battery::run_all(Corruption::None);
    let rows: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            obj(vec![
                ("id", int(o.id as i128)),
                ("name", text(o.name)),
                ("passed", flag(o.passed)),
                ("detail", text(o.detail.clone())),
            ])
        })
        .collect();
    let all_passed = outcomes.iter().all(|o| o.passed);
    let result = obj(vec![
        ("passed", flag(all_passed)),
        ("criteria", Value::Array(rows)),
    ]);
    let report = envelope("reproduce", config, &[], result);
    Ok((if all_passed { 0 } else { 1 }, render(&report)))
}
