use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use meaning_game::beliefs::LevelKConfig;
use meaning_game::centering::resolve;
use meaning_game::equilibrium::{OffPathRule, SolveOptions, DEFAULT_CAP};
use meaning_game::scenario::{self, Body, CompoundBody, GameFile, LoadedGame, RunInputs, RunReport};
use meaning_game::{validate_game, GameBuilder, GameError, MeaningGame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXIT_ERROR: u8 = 1;
const EXIT_AMBIGUOUS: u8 = 3;
const CAP_ENV: &str = "MEANING_GAME_CAP";

#[derive(Parser)]
#[command(name = "meaning-game", version, about = "Equilibria and reference resolution for meaning games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Beliefs after unused messages
    #[arg(long, global = true, value_enum)]
    off_path: Option<OffPath>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Maximum number of pure profiles to enumerate [env: MEANING_GAME_CAP]
    #[arg(long, global = true)]
    cap: Option<u128>,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OffPath {
    Prior,
    Uniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Machine,
}

#[derive(Args)]
struct GameSource {
    #[arg(long, required_unless_present = "random")]
    game: Option<PathBuf>,
    /// Use a random complete NxN game instead of a file
    #[arg(long, value_name = "N", conflicts_with = "game")]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game or discourse file
    Validate {
        #[arg(long, required_unless_present = "discourse", conflicts_with = "discourse")]
        game: Option<PathBuf>,
        #[arg(long)]
        discourse: Option<PathBuf>,
    },
    /// List every pure equilibrium
    Solve(GameSource),
    /// List the Pareto-optimal equilibria
    Pareto(GameSource),
    /// Predicted play; exit code 3 when ambiguous
    Predict(GameSource),
    /// Resolve the references of a discourse; exit code 3 when ambiguous
    Resolve {
        #[arg(long)]
        discourse: PathBuf,
    },
    /// Compound games of a discourse with constituent optimality
    Compound {
        #[arg(long)]
        discourse: PathBuf,
    },
    /// Level-k strategies, optionally with a separate receiver estimate
    Levelk {
        #[command(flatten)]
        source: GameSource,
        #[arg(long)]
        receiver_game: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Compare the two perfect-communication equilibria of a 2x2 game
    Explain {
        #[arg(long)]
        game: PathBuf,
    },
}

struct Failure(u8, String);

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        Failure(EXIT_ERROR, e.to_string())
    }
}

fn at(path: &Path) -> impl Fn(GameError) -> Failure + '_ {
    move |e| match e {
        GameError::Parse { .. } | GameError::Io { .. } => Failure::from(e),
        other => Failure(EXIT_ERROR, format!("{}: {other}", path.display())),
    }
}

fn random_game(n: usize, seed: u64) -> Result<MeaningGame, Failure> {
    if !(1..=12).contains(&n) {
        return Err(Failure(EXIT_ERROR, "--random: N must be between 1 and 12".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GameBuilder::new().bonus(1.0);
    for i in 0..n {
        b = b.content(&format!("c{i}"), rng.gen_range(0.05..1.0));
    }
    for j in 0..n {
        b = b.message(&format!("m{j}"), rng.gen_range(0.0..0.9));
    }
    let g = b.assemble()?;
    let (prior, _) = meaning_game::Prior::normalized(g.prior().weights().to_vec())?;
    Ok(g.with_prior(prior).validated()?)
}

fn game_from(src: &GameSource) -> Result<LoadedGame, Failure> {
    match (&src.game, src.random) {
        (_, Some(n)) => Ok(LoadedGame { game: random_game(n, src.seed)?, off_path: None, cap: None, warnings: vec![] }),
        (Some(path), None) => scenario::load_game(path).map_err(at(path)),
        (None, None) => Err(Failure(EXIT_ERROR, "--game or --random is required".into())),
    }
}

fn solve_options(common: &Common, file: Option<&LoadedGame>) -> Result<SolveOptions, Failure> {
    let off_path = match common.off_path {
        Some(OffPath::Prior) => OffPathRule::PriorRestricted,
        Some(OffPath::Uniform) => OffPathRule::UniformRestricted,
        None => file.and_then(|f| f.off_path).unwrap_or_default(),
    };
    let cap = match (common.cap, file.and_then(|f| f.cap)) {
        (Some(c), _) => c,
        (None, Some(c)) => c as u128,
        (None, None) => match std::env::var(CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure(EXIT_ERROR, format!("{CAP_ENV}: '{v}' is not a nonnegative integer")))?,
            Err(_) => DEFAULT_CAP,
        },
    };
    Ok(SolveOptions { off_path, cap })
}

fn run(cli: &Cli, echo: String) -> Result<(RunReport, u8), Failure> {
    let common = &cli.common;
    let mut warnings = Vec::new();
    let mut inputs = RunInputs {
        command: "",
        game: None,
        receiver_game: None,
        discourse: None,
        off_path: String::new(),
        cap: String::new(),
        depth: None,
        seed: None,
        extra: Default::default(),
    };
    let discourse_holder;
    let mut code = 0;
    let result = match &cli.command {
        Command::Validate { game: Some(path), .. } => {
            inputs.command = "validate";
            let loaded = scenario::load_game_unchecked(path).map_err(at(path))?;
            warnings.extend(loaded.warnings.clone());
            let report = validate_game(&loaded.game);
            if !report.is_valid() {
                code = EXIT_ERROR;
            }
            inputs.game = Some(GameFile::from_game(&loaded.game));
            Body::Validate(scenario::validate_body(&loaded.game, &report))
        }
        Command::Validate { discourse: Some(path), .. } => {
            inputs.command = "validate";
            let loaded = scenario::load_discourse(path)?;
            let summary = scenario::discourse_summary(&loaded);
            discourse_holder = loaded.discourse;
            inputs.discourse = Some(&discourse_holder);
            Body::ValidateDiscourse(summary)
        }
        Command::Validate { .. } => unreachable!("clap requires a source"),
        Command::Solve(src) | Command::Pareto(src) => {
            let pareto = matches!(cli.command, Command::Pareto(_));
            inputs.command = if pareto { "pareto" } else { "solve" };
            let loaded = game_from(src)?;
            let opts = solve_options(common, Some(&loaded))?;
            warnings.extend(loaded.warnings.clone());
            inputs.game = Some(GameFile::from_game(&loaded.game));
            inputs.seed = src.random.map(|_| src.seed);
            fill_opts(&mut inputs, &opts);
            Body::Solve(scenario::solve_body(&loaded.game, &opts, pareto)?)
        }
        Command::Predict(src) => {
            inputs.command = "predict";
            let loaded = game_from(src)?;
            let opts = solve_options(common, Some(&loaded))?;
            warnings.extend(loaded.warnings.clone());
            inputs.game = Some(GameFile::from_game(&loaded.game));
            inputs.seed = src.random.map(|_| src.seed);
            fill_opts(&mut inputs, &opts);
            let body = scenario::predict_body(&loaded.game, &opts)?;
            if body.ambiguous {
                code = EXIT_AMBIGUOUS;
            }
            Body::Predict(body)
        }
        Command::Resolve { discourse } | Command::Compound { discourse } => {
            let compound = matches!(cli.command, Command::Compound { .. });
            inputs.command = if compound { "compound" } else { "resolve" };
            let loaded = scenario::load_discourse(discourse)?;
            let opts = solve_options(common, None)?;
            fill_opts(&mut inputs, &opts);
            let resolution = resolve(&loaded.discourse, &opts).map_err(at(discourse))?;
            discourse_holder = loaded.discourse;
            inputs.discourse = Some(&discourse_holder);
            if compound {
                let body = CompoundBody { compounds: resolution.compounds };
                if body.compounds.is_empty() {
                    warnings.push("the discourse declares no compounds".into());
                }
                if body.ambiguous() {
                    code = EXIT_AMBIGUOUS;
                }
                Body::Compound(body)
            } else {
                if resolution.is_ambiguous() {
                    code = EXIT_AMBIGUOUS;
                }
                Body::Resolve(Box::new(resolution))
            }
        }
        Command::Levelk { source, receiver_game, depth } => {
            inputs.command = "levelk";
            let loaded = game_from(source)?;
            let receiver = match receiver_game {
                Some(path) => Some(scenario::load_game(path).map_err(at(path))?),
                None => None,
            };
            let opts = solve_options(common, Some(&loaded))?;
            warnings.extend(loaded.warnings.clone());
            if let Some(r) = &receiver {
                warnings.extend(r.warnings.clone());
            }
            let g_r = receiver.as_ref().map_or(&loaded.game, |r| &r.game);
            let cfg = LevelKConfig { depth: *depth, off_path: opts.off_path, ..Default::default() };
            inputs.game = Some(GameFile::from_game(&loaded.game));
            inputs.receiver_game = receiver.as_ref().map(|r| GameFile::from_game(&r.game));
            inputs.depth = Some(*depth);
            inputs.seed = source.random.map(|_| source.seed);
            fill_opts(&mut inputs, &opts);
            Body::LevelK(scenario::level_k_body(&loaded.game, g_r, &cfg)?)
        }
        Command::Explain { game } => {
            inputs.command = "explain";
            let loaded = scenario::load_game(game).map_err(at(game))?;
            let opts = solve_options(common, Some(&loaded))?;
            warnings.extend(loaded.warnings.clone());
            inputs.game = Some(GameFile::from_game(&loaded.game));
            fill_opts(&mut inputs, &opts);
            Body::Explain(scenario::explain_body(&loaded.game, &opts).map_err(at(game))?)
        }
    };
    let report = RunReport { command: echo, config_hash: scenario::config_hash(&inputs), warnings, result };
    Ok((report, code))
}

fn fill_opts(inputs: &mut RunInputs, opts: &SolveOptions) {
    inputs.off_path = opts.off_path.to_string();
    inputs.cap = opts.cap.to_string();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let start = Instant::now();
    let outcome = run(&cli, echo);
    let elapsed = start.elapsed();
    match outcome {
        Ok((report, code)) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let text = match cli.common.format {
                Format::Table => report.to_table(),
                Format::Machine => report.to_json(),
            };
            match &cli.common.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: --out {}: {e}", path.display());
                        return ExitCode::from(EXIT_ERROR);
                    }
                }
                None => print!("{text}"),
            }
            eprintln!("time: {:.3} ms", elapsed.as_secs_f64() * 1e3);
            ExitCode::from(code)
        }
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
