//! `teamgames` command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use teamgames::belief::OffPathPolicy;
use teamgames::coord::strategy::Profile;
use teamgames::coord::Spaces;
use teamgames::error::Budgets;
use teamgames::model::graph::{dependency_graph, is_layered, is_public_team, is_separable, is_signaling_free};
use teamgames::model::{builtins, doc, spec_hash};
use teamgames::solve::{
    solve_cib, solve_layered, solve_signaling_free, solve_spib, spaces_for, CibConfig, CibOutcome, CibSolution, Mode, SpibConfig,
    SpibSolution,
};
use teamgames::verify::{bne_enumerate_tiny, nash_gap, simulate, NashCertificate};
use teamgames::{Error, GameSpec};

#[derive(Parser, Debug)]
#[command(name = "teamgames", version, about = "Equilibria of finite games among teams with delayed sharing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute an equilibrium and write a solution file.
    Solve(SolveArgs),
    /// Recompute the Nash certificate of a solution file.
    Verify(VerifyArgs),
    /// Estimate payoffs of a solution by Monte Carlo rollouts.
    Simulate(SimulateArgs),
    /// Enumerate the equilibria of a tiny two-team game.
    EnumerateBne(EnumerateArgs),
    /// Dependency graph, structural predicates and space sizes.
    Analyze(AnalyzeArgs),
    /// List or emit the built-in games.
    Examples(ExamplesArgs),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["builtin", "spec"])))]
struct Input {
    /// Built-in game name (see `examples list`).
    #[arg(long)]
    builtin: Option<String>,
    /// Game description document.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Built-in parameter, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", conflicts_with = "spec")]
    params: Vec<String>,
}

#[derive(Args, Debug)]
struct Common {
    /// Output file for the machine-readable result; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Cap on worker threads for best responses.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: Input,
    /// cib, spib, signaling-free or layered.
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    /// Completion of beliefs after zero-probability events.
    #[arg(long, default_value = "uniform", value_parser = parse_offpath)]
    offpath: OffPathPolicy,
    /// Per-agent prescriptions on own current state (separable games).
    #[arg(long)]
    simple: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    input: Input,
    /// Solution file written by `solve`.
    #[arg(long, value_name = "FILE")]
    profile: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_name = "FILE")]
    profile: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ExamplesArgs {
    #[command(subcommand)]
    action: ExamplesAction,
}

#[derive(Subcommand, Debug)]
enum ExamplesAction {
    List,
    /// Print a built-in as a game description document.
    Emit {
        name: String,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_offpath(s: &str) -> Result<OffPathPolicy, String> {
    s.parse()
}

/// Bad flag values found after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Solution files that are malformed or belong to another spec.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// A solver that ran to completion without an equilibrium.
#[derive(Debug)]
struct NoFixedPoint;

impl std::fmt::Display for NoFixedPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("no fixed point found")
    }
}

impl std::error::Error for NoFixedPoint {}

fn parse_params(raw: &[String]) -> anyhow::Result<BTreeMap<String, String>> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Usage(format!("parameter `{kv}` is not KEY=VALUE")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn load_game(input: &Input) -> anyhow::Result<GameSpec> {
    match (&input.builtin, &input.spec) {
        (Some(name), None) => Ok(builtins::builtin(name, &parse_params(&input.params)?)?),
        (None, Some(path)) => Ok(doc::load(path)?),
        _ => Err(Usage("give exactly one of --builtin and --spec".into()).into()),
    }
}

fn budgets(common: &Common) -> anyhow::Result<Budgets> {
    let mut b = Budgets::from_env();
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(Usage("--workers must be positive".into()).into());
        }
        b.workers = w;
    }
    Ok(b)
}

/// Writes `value` to `--out` and the summary to stdout, or the value to
/// stdout and the summary to stderr.
fn emit(out: &Option<PathBuf>, value: &impl Serialize, summary: &str) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            print!("{summary}");
        }
        None => {
            print!("{text}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn certificate_lines(cert: &NashCertificate) -> String {
    let mut s = String::new();
    for c in &cert.teams {
        let _ = writeln!(s, "  {}: payoff {:.9} best response {:.9} gap {:.3e}", c.team, c.payoff, c.br_value, c.gap);
    }
    let _ = writeln!(s, "  epsilon {:.3e}", cert.epsilon);
    s
}

fn solve(args: &SolveArgs) -> anyhow::Result<()> {
    let g = load_game(&args.input)?;
    let budgets = budgets(&args.common)?;
    let spaces = spaces_for(&g, args.simple, budgets)?;
    let cib_cfg = CibConfig {
        seed: args.seed,
        offpath_policy: args.offpath,
        budgets,
        ..CibConfig::default()
    };
    let outcome = match args.mode {
        Mode::Spib => {
            let cfg = SpibConfig {
                seed: args.seed,
                budgets,
                ..SpibConfig::default()
            };
            let sol = solve_spib(&g, &spaces, &cfg)?;
            let mut s = format!("spib: source {:?}, {} schedule steps\n", sol.source, sol.schedule.len());
            s += &certificate_lines(&sol.verifier_report);
            return emit(&args.common.out, &sol, &s);
        }
        Mode::SignalingFree => CibOutcome::Solved(Box::new(solve_signaling_free(&g, &spaces, budgets, true)?)),
        Mode::Cib => solve_cib(&g, &spaces, &cib_cfg)?,
        Mode::Layered => solve_layered(&g, &spaces, &cib_cfg)?,
    };
    match outcome {
        CibOutcome::Solved(sol) => {
            let mut s = format!(
                "{}: {} cells, max stage gap {:.3e}, max consistency {:.3e}\n",
                serde_json::to_value(sol.mode)?.as_str().unwrap_or("?"),
                sol.cells.len(),
                sol.residuals.max_gap,
                sol.residuals.max_consistency
            );
            if let Some(cert) = &sol.verifier_report {
                s += &certificate_lines(cert);
            }
            emit(&args.common.out, &sol, &s)
        }
        CibOutcome::NoFixedPoint(report) => {
            let mut s = String::from("no fixed point\n");
            for r in &report.stage_residuals {
                let _ = writeln!(s, "  t={}: best residual {:.3e}", r.t, r.best_residual);
            }
            if let Some(b) = &report.budget_exhausted {
                let _ = writeln!(s, "  budget exhausted: {b}");
            }
            if let Some(ob) = &report.obstruction {
                let _ = writeln!(s, "  obstruction at t={} (certified: {})", ob.t, ob.certified);
            }
            if let Some(d) = &report.diagnosis {
                let _ = writeln!(s, "  {d}");
            }
            emit(&args.common.out, &report, &s)?;
            Err(NoFixedPoint.into())
        }
    }
}

/// A solution file of any mode.
enum Solution {
    Cells(Box<CibSolution>),
    Spib(Box<SpibSolution>),
}

impl Solution {
    fn read(path: &PathBuf) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if value.get("outcome").is_some() || value.get("stage_residuals").is_some() {
            bail!(Invalid(format!("{} is a no-fixed-point report, not a solution", path.display())));
        }
        let sol = match value.get("mode").and_then(Value::as_str) {
            Some("spib") => Solution::Spib(Box::new(serde_json::from_value(value)?)),
            Some(_) => Solution::Cells(Box::new(serde_json::from_value(value)?)),
            None => bail!(Invalid(format!("{} has no `mode` field", path.display()))),
        };
        Ok(sol)
    }

    fn spec_hash(&self) -> &str {
        match self {
            Solution::Cells(s) => &s.spec_hash,
            Solution::Spib(s) => &s.spec_hash,
        }
    }

    fn simple(&self) -> bool {
        match self {
            Solution::Cells(s) => s.simple_mode,
            Solution::Spib(s) => s.simple_mode,
        }
    }

    fn profile(&self) -> Profile {
        match self {
            Solution::Cells(s) => s.profile(),
            Solution::Spib(s) => s.strategies(),
        }
    }

    fn embedded(&self) -> Option<&NashCertificate> {
        match self {
            Solution::Cells(s) => s.verifier_report.as_ref(),
            Solution::Spib(s) => Some(&s.verifier_report),
        }
    }
}

/// Loads the game and a matching solution, refusing mismatched pairs.
fn game_and_solution(input: &Input, path: &PathBuf, budgets: Budgets) -> anyhow::Result<(GameSpec, Spaces, Solution)> {
    let g = load_game(input)?;
    let sol = Solution::read(path)?;
    let hash = spec_hash(&g);
    if sol.spec_hash() != hash {
        bail!(Invalid(format!(
            "{} was computed for spec {}, not {hash}",
            path.display(),
            sol.spec_hash()
        )));
    }
    let spaces = spaces_for(&g, sol.simple(), budgets)?;
    Ok((g, spaces, sol))
}

fn verify(args: &VerifyArgs) -> anyhow::Result<()> {
    let budgets = budgets(&args.common)?;
    let (g, spaces, sol) = game_and_solution(&args.input, &args.profile, budgets)?;
    let cert = nash_gap(&g, &spaces, &sol.profile(), budgets)?;
    let mut s = String::from("certificate\n");
    s += &certificate_lines(&cert);
    if let Some(old) = sol.embedded() {
        let diff = (old.epsilon - cert.epsilon).abs();
        let _ = writeln!(s, "  embedded epsilon {:.3e}, difference {:.3e}", old.epsilon, diff);
    }
    emit(&args.common.out, &cert, &s)
}

fn simulate_cmd(args: &SimulateArgs) -> anyhow::Result<()> {
    let budgets = budgets(&args.common)?;
    let (g, spaces, sol) = game_and_solution(&args.input, &args.profile, budgets)?;
    let stats = simulate(&g, &spaces, &sol.profile(), args.samples, args.seed)?;
    let mut s = format!("{} rollouts\n", stats.samples);
    for (i, team) in g.teams.iter().enumerate() {
        let _ = writeln!(s, "  {}: mean {:.6} +- {:.6}", team.name, stats.mean[i], stats.std_error[i]);
    }
    emit(&args.common.out, &stats, &s)
}

fn enumerate(args: &EnumerateArgs) -> anyhow::Result<()> {
    let g = load_game(&args.input)?;
    let budgets = budgets(&args.common)?;
    let spaces = spaces_for(&g, false, budgets)?;
    let report = bne_enumerate_tiny(&g, &spaces, budgets)?;
    let mut s = format!(
        "{} equilibria over {:?} reduced pure strategies\n",
        report.equilibria.len(),
        report.strategy_counts
    );
    for (k, eq) in report.equilibria.iter().enumerate() {
        let payoff: Vec<String> = eq.payoff.iter().map(|v| format!("{v:.9}")).collect();
        let _ = writeln!(s, "  #{k}: payoff [{}], rigid {}", payoff.join(", "), eq.rigid);
    }
    emit(&args.common.out, &report, &s)
}

#[derive(Serialize)]
struct TeamSummary {
    name: String,
    agents: usize,
    public: bool,
    /// Full prescription-space sizes by time.
    prescriptions: Option<Vec<usize>>,
    /// Simple prescription-space sizes by time, for separable games.
    simple_prescriptions: Option<Vec<usize>>,
    spi: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct Analysis {
    spec_hash: String,
    horizon: usize,
    delay: usize,
    teams: Vec<TeamSummary>,
    separable: bool,
    signaling_free: bool,
    layered: bool,
    /// `[from, to]` team names.
    edges: Vec<[String; 2]>,
    /// Strongly connected components in topological order.
    components: Vec<Vec<String>>,
}

fn analyze(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let g = load_game(&args.input)?;
    let budgets = budgets(&args.common)?;
    let horizon = g.horizon_t();
    let sizes = |simple: bool| -> Option<Vec<Vec<usize>>> {
        let sp = Spaces::new(&g, simple, budgets.cells).ok()?;
        Some((0..g.n_teams()).map(|i| (1..=horizon).map(|t| sp.presc(i, t).size).collect()).collect())
    };
    let full = sizes(false);
    let separable = is_separable(&g);
    let simple = if separable { sizes(true) } else { None };
    let spi = Spaces::new(&g, false, budgets.cells)
        .ok()
        .map(|sp| (0..g.n_teams()).map(|i| (1..=horizon).map(|t| sp.spi(i, t).size).collect::<Vec<_>>()).collect::<Vec<_>>());
    let name = |i: usize| g.teams[i].name.clone();
    let dg = dependency_graph(&g);
    let analysis = Analysis {
        spec_hash: spec_hash(&g),
        horizon: g.horizon,
        delay: g.delay,
        teams: (0..g.n_teams())
            .map(|i| TeamSummary {
                name: name(i),
                agents: g.n_agents(i),
                public: is_public_team(&g, i),
                prescriptions: full.as_ref().map(|v| v[i].clone()),
                simple_prescriptions: simple.as_ref().map(|v| v[i].clone()),
                spi: spi.as_ref().map(|v| v[i].clone()),
            })
            .collect(),
        separable,
        signaling_free: is_signaling_free(&g),
        layered: is_layered(&g),
        edges: dg.edges.iter().map(|&(j, i)| [name(j), name(i)]).collect(),
        components: dg.components.iter().map(|c| c.iter().map(|&i| name(i)).collect()).collect(),
    };
    let mut s = String::new();
    let _ = writeln!(s, "T={} d={}", analysis.horizon, analysis.delay);
    let _ = writeln!(s, "teams={}", analysis.teams.len());
    for t in &analysis.teams {
        let _ = writeln!(
            s,
            "  {}: agents={} public={} prescriptions={:?} spi={:?}",
            t.name, t.agents, t.public, t.prescriptions, t.spi
        );
    }
    let _ = writeln!(
        s,
        "separable={} signaling_free={} layered={}",
        analysis.separable, analysis.signaling_free, analysis.layered
    );
    let comps: Vec<String> = analysis.components.iter().map(|c| format!("{{{}}}", c.join(", "))).collect();
    let _ = writeln!(s, "scc={} components: {}", comps.len(), comps.join(" -> "));
    let edges: Vec<String> = analysis.edges.iter().map(|[a, b]| format!("{a}->{b}")).collect();
    let _ = writeln!(s, "edges: {}", if edges.is_empty() { "none".into() } else { edges.join(" ") });
    emit(&args.common.out, &analysis, &s)
}

fn examples(args: &ExamplesArgs) -> anyhow::Result<()> {
    match &args.action {
        ExamplesAction::List => {
            for name in builtins::NAMES {
                let g = builtins::builtin(name, &BTreeMap::new())?;
                let teams: Vec<&str> = g.teams.iter().map(|t| t.name.as_str()).collect();
                println!("{name:<24} T={} d={} teams [{}]", g.horizon, g.delay, teams.join(", "));
            }
            Ok(())
        }
        ExamplesAction::Emit { name, params, out } => {
            let g = builtins::builtin(name, &parse_params(params)?)?;
            let text = doc::emit(&g) + "\n";
            match out {
                Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::EnumerateBne(a) => enumerate(a),
        Command::Analyze(a) => analyze(a),
        Command::Examples(a) => examples(a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<NoFixedPoint>() {
        return 3;
    }
    if e.is::<Usage>() {
        return 1;
    }
    if let Some(Error::InvalidArgument(_)) = e.downcast_ref::<Error>() {
        return 1;
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.is::<NoFixedPoint>() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;
    use teamgames::SpecError;

    #[test]
    fn params_split_on_first_equals() {
        let p = parse_params(&["eps=0.1".into(), "seed = 3".into()]).unwrap();
        assert_eq!(p["eps"], "0.1");
        assert_eq!(p["seed"], "3");
        assert!(parse_params(&["eps".into()]).unwrap_err().is::<Usage>());
    }

    #[test]
    fn spec_errors_map_to_two() {
        let e: anyhow::Error = SpecError::UnknownBuiltin("x".into()).into();
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow!(NoFixedPoint)), 3);
    }
}
