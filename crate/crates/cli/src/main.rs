mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use multent_core::analysis::{self, FAMILIES};
use multent_core::coupled::{self, CoupledGraph};
use multent_core::entropy::{self, to_f64};
use multent_core::pattern::{self, build_lattice};
use multent_core::relation::{self, SmoothSequence};
use multent_core::{ConstraintSystem, Convention, Error, GammaSet, TransitionMatrix};
use serde_json::json;

use report::{Format, Report};

#[derive(Debug, Parser)]
#[command(
    name = "multent",
    version,
    about = "Entropy of multiplicative shifts of finite type"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Emit JSON.
    #[arg(long, global = true, conflicts_with_all = ["csv", "dot"])]
    json: bool,

    /// Emit CSV (one row per k for series output).
    #[arg(long, global = true, conflicts_with = "dot")]
    csv: bool,

    /// Emit Graphviz DOT (connect only).
    #[arg(long, global = true)]
    dot: bool,

    /// Worker threads for parallel enumeration.
    #[arg(long, global = true, env = "MULTENT_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the smooth sequence q_1 < q_2 < … generated by Γ.
    Qseq(QseqArgs),
    /// Count of chains of length k in [1, n] and its density.
    Density(DensityArgs),
    /// Admissible patterns on the lattice L_k.
    Count(CountArgs),
    /// Truncated entropy series with optional tail bound.
    Entropy(EntropyArgs),
    /// Entropy bounds for a shift coupled with an additive SFT.
    Coupled(CoupledArgs),
    /// Consecutiveness diagnostics for the chains iM_k.
    Connect(ConnectArgs),
    /// Cross-check the counting engine against exhaustive enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct Alphabet {
    /// Number of symbols N.
    #[arg(long = "symbols", short = 'N', default_value_t = 2)]
    symbols: u32,

    /// Allowed products C, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    allowed: Vec<u64>,
}

impl Alphabet {
    fn system(&self) -> Result<ConstraintSystem, Error> {
        ConstraintSystem::new(self.symbols, self.allowed.iter().copied())
    }
}

#[derive(Debug, Args)]
struct Sft {
    /// Transition matrix, rows separated by ';' (e.g. "1,1;1,0").
    #[arg(long, conflicts_with = "sft_file")]
    sft: Option<String>,

    /// File holding the transition matrix, one row per line.
    #[arg(long)]
    sft_file: Option<PathBuf>,
}

impl Sft {
    fn matrix(&self) -> Result<Option<TransitionMatrix>, CliError> {
        let text = match (&self.sft, &self.sft_file) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?,
            (None, None) => return Ok(None),
        };
        Ok(Some(text.parse()?))
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("extent").args(["count", "bound"])))]
struct QseqArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    gamma: Vec<u64>,
    /// Number of terms.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// List every term up to this value instead.
    #[arg(long)]
    bound: Option<u64>,
    /// Generate from Γ itself rather than its prime base.
    #[arg(long)]
    raw: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("system").args(["gamma", "q"]).required(true)))]
struct DensityArgs {
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<u64>>,
    /// Single multiplier of the coupled system (counts generation graphs).
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    n: u64,
}

#[derive(Debug, Args)]
struct CountArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    gamma: Vec<u64>,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    alphabet: Alphabet,
    #[arg(long, default_value_t = Convention::Inclusive)]
    convention: Convention,
    /// Report every k' ≤ k.
    #[arg(long)]
    series: bool,
    /// Enumerate exhaustively instead of eliminating.
    #[arg(long)]
    brute_force: bool,
}

#[derive(Debug, Args)]
struct EntropyArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    gamma: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    terms: usize,
    #[command(flatten)]
    alphabet: Alphabet,
    #[arg(long, default_value_t = Convention::Inclusive)]
    convention: Convention,
    /// Include the tail bound on the omitted terms.
    #[arg(long)]
    with_error: bool,
    /// Include the per-term breakdown.
    #[arg(long)]
    series: bool,
}

#[derive(Debug, Args)]
struct CoupledArgs {
    #[arg(long, default_value_t = 2)]
    q: u64,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    alphabet: Alphabet,
    #[command(flatten)]
    sft: Sft,
    /// Root of the generation graph (default: smallest admissible).
    #[arg(long)]
    root: Option<u64>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").args(["arms", "families"])))]
struct ConnectArgs {
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    bound: u64,
    /// Classify the arms of a single chain iM_4 instead.
    #[arg(long)]
    arms: Option<u64>,
    /// Verify every consecutive family for l ≤ this value instead.
    #[arg(long)]
    families: Option<u64>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("system").args(["gamma", "q"]).required(true)))]
struct OracleArgs {
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<u64>>,
    /// Check a coupled generation graph instead.
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    alphabet: Alphabet,
    #[command(flatten)]
    sft: Sft,
    #[arg(long, default_value_t = Convention::Inclusive)]
    convention: Convention,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Engine(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Engine(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Engine(
                Error::TooLarge { .. } | Error::FrontierTooWide { .. } | Error::Overflow(_),
            ) => 2,
            CliError::Engine(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Engine(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok((report, code)) => {
            let format = if cli.json {
                Format::Json
            } else if cli.csv {
                Format::Csv
            } else if cli.dot {
                Format::Dot
            } else {
                Format::Text
            };
            match report.render(format) {
                Ok(out) => {
                    print!("{out}");
                    ExitCode::from(code)
                }
                Err(m) => {
                    eprintln!("error: {m}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(Report, u8), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))?;
    }
    if cli.dot && !matches!(cli.command, Command::Connect(_)) {
        return Err(CliError::Usage(
            "--dot is only available for connect".into(),
        ));
    }
    Ok(match &cli.command {
        Command::Qseq(a) => (qseq(a)?, 0),
        Command::Density(a) => (density(a)?, 0),
        Command::Count(a) => (count(a)?, 0),
        Command::Entropy(a) => (entropy_cmd(a)?, 0),
        Command::Coupled(a) => (coupled_cmd(a)?, 0),
        Command::Connect(a) => (connect(a)?, 0),
        Command::Oracle(a) => oracle(a)?,
    })
}

fn qseq(a: &QseqArgs) -> Result<Report, CliError> {
    let g = GammaSet::new(&a.gamma)?;
    let base = if a.raw { g.gammas() } else { g.prime_base() };
    let seq = match a.bound {
        Some(b) => SmoothSequence::up_to(base, b)?,
        None => SmoothSequence::generate(base, a.count)?,
    };
    let mut r = Report::new("qseq");
    r.set("gamma", json!(g.gammas()));
    r.set("base", json!(base));
    r.set("values", json!(seq.values));
    r.table(
        &["k", "q"],
        seq.values
            .iter()
            .enumerate()
            .map(|(i, q)| vec![(i + 1).to_string(), q.to_string()]),
    );
    Ok(r)
}

fn density(a: &DensityArgs) -> Result<Report, CliError> {
    let mut r = Report::new("density");
    r.set("k", json!(a.k));
    r.set("n", json!(a.n));
    if let Some(gamma) = &a.gamma {
        let g = GammaSet::new(gamma)?;
        let d = relation::copy_count(a.k as usize, a.n, &g)?;
        r.set("gamma", json!(g.gammas()));
        r.set("alpha", json!(d.alpha.to_string()));
        r.set("empirical", json!(d.empirical.to_string()));
        r.set("empirical_f64", report::float(to_f64(&d.empirical)));
        r.set("limit", json!(d.limit.to_string()));
        r.set("limit_f64", report::float(to_f64(&d.limit)));
        r.set("beta", json!(relation::beta(&g).to_string()));
    } else if let Some(q) = a.q {
        let c = coupled::copy_count_coupled(q, a.k, a.n)?;
        let unused = coupled::unused_vertex_count(q, a.k, a.n)?;
        r.set("q", json!(q));
        r.set("alpha", json!(c.alpha.to_string()));
        r.set("m_star", json!(c.m_star));
        r.set("limit", json!(c.density_limit.to_string()));
        r.set("limit_f64", report::float(to_f64(&c.density_limit)));
        r.set("unused", json!(unused.to_string()));
        r.set(
            "vertices_per_copy",
            json!(coupled::lattice_size(q, a.k as u32).to_string()),
        );
    }
    Ok(r)
}

fn count(a: &CountArgs) -> Result<Report, CliError> {
    let g = GammaSet::new(&a.gamma)?;
    let cs = a.alphabet.system()?;
    let mut r = Report::new("count");
    r.set("gamma", json!(g.gammas()));
    r.set("k", json!(a.k));
    r.set("symbols", json!(cs.num_symbols));
    r.set("allowed", json!(cs.allowed_products));
    r.set("convention", json!(a.convention.to_string()));
    let lat = build_lattice(&g, a.k, a.convention)?;
    r.set("cells", json!(lat.len()));
    let c = if a.brute_force {
        pattern::brute_force_count(&lat, &cs)?
    } else {
        pattern::count_patterns(&lat, &cs)?
    };
    r.set("count", json!(c.exact.to_string()));
    r.set("log_count", report::float(c.log_value));
    if a.series {
        let all = pattern::count_series(&g, &cs, a.k, a.convention)?;
        r.set(
            "series",
            json!(all.iter().map(|c| c.exact.to_string()).collect::<Vec<_>>()),
        );
        r.table(
            &["k", "count", "log_count"],
            all.iter().enumerate().map(|(i, c)| {
                vec![
                    (i + 1).to_string(),
                    c.exact.to_string(),
                    report::fmt_float(c.log_value),
                ]
            }),
        );
    } else {
        r.table(
            &["k", "count", "log_count"],
            [vec![
                a.k.to_string(),
                c.exact.to_string(),
                report::fmt_float(c.log_value),
            ]],
        );
    }
    Ok(r)
}

fn entropy_cmd(a: &EntropyArgs) -> Result<Report, CliError> {
    let g = GammaSet::new(&a.gamma)?;
    let cs = a.alphabet.system()?;
    let est = entropy::partial_entropy(&g, &cs, a.terms, a.convention)?;
    let mut r = Report::new("entropy");
    r.set("gamma", json!(g.gammas()));
    r.set("terms", json!(a.terms));
    r.set("convention", json!(a.convention.to_string()));
    r.set("h_partial", report::float(est.value));
    if cs.num_symbols >= 2 {
        r.set(
            "dim_M",
            report::float(entropy::minkowski_dimension(est.value, cs.num_symbols)?),
        );
    }
    if a.with_error {
        r.set("tail_bound", report::float(est.tail_bound));
        r.set("h_upper", report::float(est.value + est.tail_bound));
    }
    r.set("beta", json!(est.beta.to_string()));
    let rows: Vec<Vec<String>> = est
        .series
        .iter()
        .map(|t| {
            vec![
                t.k.to_string(),
                t.q.to_string(),
                t.weight.to_string(),
                t.count.exact.to_string(),
                report::fmt_float(t.partial),
            ]
        })
        .collect();
    if a.series {
        r.set(
            "series",
            json!(est
                .series
                .iter()
                .map(|t| json!({
                    "k": t.k,
                    "q": t.q,
                    "weight": t.weight.to_string(),
                    "count": t.count.exact.to_string(),
                    "partial": report::float(t.partial),
                }))
                .collect::<Vec<_>>()),
        );
    }
    r.table(&["k", "q", "weight", "count", "partial"], rows);
    Ok(r)
}

fn coupled_system(alphabet: &Alphabet, sft: &Sft) -> Result<ConstraintSystem, CliError> {
    let matrix = sft.matrix()?.ok_or_else(|| {
        CliError::Usage("a transition matrix is required (--sft or --sft-file)".into())
    })?;
    Ok(alphabet.system()?.with_sft(matrix)?)
}

fn coupled_cmd(a: &CoupledArgs) -> Result<Report, CliError> {
    let cs = coupled_system(&a.alphabet, &a.sft)?;
    let b = match a.root {
        Some(l) => coupled::entropy_bounds_at(a.q, &cs, a.k, l)?,
        None => coupled::entropy_bounds(a.q, &cs, a.k)?,
    };
    let mut r = Report::new("coupled");
    r.set("q", json!(b.q));
    r.set("k", json!(b.k));
    r.set("root", json!(b.root));
    r.set("vertices", json!(b.vertices));
    r.set("count", json!(b.count.exact.to_string()));
    r.set("lower", report::float(b.lower));
    r.set("upper", report::float(b.upper));
    r.set("lower_certified", json!(b.lower_certified));
    r.table(
        &["k", "count", "lower", "upper"],
        [vec![
            b.k.to_string(),
            b.count.exact.to_string(),
            report::fmt_float(b.lower),
            report::fmt_float(b.upper),
        ]],
    );
    Ok(r)
}

fn connect(a: &ConnectArgs) -> Result<Report, CliError> {
    if let Some(i) = a.arms {
        let rep = analysis::classify_arms(i)?;
        let mut r = Report::new("connect");
        r.set("i", json!(i));
        r.set("part", json!(rep.part));
        r.set("row", json!(rep.row));
        r.set("residue_72", json!(rep.residue_72));
        let arms: Vec<_> = rep
            .arms
            .iter()
            .map(|arm| {
                let name = format!(
                    "{}i{}1",
                    if arm.multiplier == 1 {
                        String::new()
                    } else {
                        arm.multiplier.to_string()
                    },
                    if arm.sign > 0 { '+' } else { '-' }
                );
                json!({
                    "arm": name,
                    "value": arm.value,
                    "l": arm.landing.map(|(l, _)| l),
                    "j": arm.landing.map(|(_, j)| j),
                    "direction": arm.direction.map(|d| d.to_string()),
                })
            })
            .collect();
        r.set("arms", json!(arms));
        r.set("up", json!(rep.up));
        r.set("down", json!(rep.down));
        r.table(
            &["arm", "value", "l", "j", "direction"],
            arms.iter().map(|v| {
                ["arm", "value", "l", "j", "direction"]
                    .iter()
                    .map(|k| match &v[*k] {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Null => String::new(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<String>>()
            }),
        );
        return Ok(r);
    }
    if let Some(l_max) = a.families {
        let mut r = Report::new("connect");
        let mut rows = Vec::new();
        let mut all_ok = true;
        for f in FAMILIES {
            let checks = analysis::verify_consecutive_family(f.family, f.sub, l_max)?;
            let failures: Vec<u64> = checks
                .iter()
                .filter(|c| c.witness.is_none())
                .map(|c| c.l)
                .collect();
            all_ok &= failures.is_empty();
            let first = checks.first().and_then(|c| c.witness);
            rows.push(json!({
                "family": f.family,
                "sub": f.sub,
                "checked": checks.len(),
                "failures": failures,
                "first_witness": first,
            }));
        }
        r.set("l_max", json!(l_max));
        r.set("families", json!(rows));
        r.set("all_verified", json!(all_ok));
        r.table(
            &["family", "sub", "checked", "failures"],
            rows.iter().map(|v| {
                vec![
                    v["family"].to_string(),
                    v["sub"].to_string(),
                    v["checked"].to_string(),
                    v["failures"].as_array().map_or(0, |x| x.len()).to_string(),
                ]
            }),
        );
        return Ok(r);
    }

    let rep = analysis::connectivity_report(a.k, a.bound)?;
    let graph = analysis::build_obstruction_graph(a.k, a.bound)?;
    let mut r = Report::new("connect");
    r.set("k", json!(rep.degree));
    r.set("bound", json!(rep.bound));
    r.set("search_bound", json!(rep.search_bound));
    r.set("nodes", json!(graph.roots()));
    r.set("edges", json!(graph.edges()));
    r.set("components", json!(rep.components));
    r.set("connected", json!(rep.connected()));
    r.set("max_path_length", json!(rep.max_path_len()));
    r.set(
        "paths",
        json!(rep
            .paths
            .iter()
            .map(|p| json!({"root": p.root, "path": p.path, "decreasing": p.decreasing}))
            .collect::<Vec<_>>()),
    );
    r.set("unreached", json!(rep.unreached));
    r.set("note", json!(rep.note));
    r.summary(vec![
        ("k", rep.degree.to_string()),
        ("bound", rep.bound.to_string()),
        ("search_bound", rep.search_bound.to_string()),
        ("nodes", rep.nodes.to_string()),
        ("edges", rep.edges.to_string()),
        ("components", rep.components.to_string()),
        ("connected", rep.connected().to_string()),
        ("max_path_length", rep.max_path_len().to_string()),
        (
            "decreasing_paths",
            rep.paths
                .iter()
                .filter(|p| p.decreasing.is_some())
                .count()
                .to_string(),
        ),
        ("unreached", format!("{:?}", rep.unreached)),
        ("note", rep.note.to_string()),
    ]);
    r.table(
        &["root", "length", "path"],
        rep.paths.iter().map(|p| {
            vec![
                p.root.to_string(),
                (p.path.len() - 1).to_string(),
                p.path
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
            ]
        }),
    );
    r.set_dot(graph.to_dot());
    Ok(r)
}

fn oracle(a: &OracleArgs) -> Result<(Report, u8), CliError> {
    let mut r = Report::new("oracle");
    r.set("k", json!(a.k));
    let (engine, brute) = if let Some(q) = a.q {
        let cs = coupled_system(&a.alphabet, &a.sft)?;
        let root = coupled::canonical_root(q, a.k)?;
        let g: CoupledGraph = coupled::build_coupled_graph(q, root, a.k)?;
        r.set("q", json!(q));
        r.set("root", json!(root));
        r.set("cells", json!(g.len()));
        (
            coupled::count_coupled_patterns(&g, &cs)?,
            coupled::brute_force_coupled(&g, &cs)?,
        )
    } else {
        let g = GammaSet::new(a.gamma.as_deref().unwrap_or_default())?;
        let cs = a.alphabet.system()?;
        let lat = build_lattice(&g, a.k, a.convention)?;
        r.set("gamma", json!(g.gammas()));
        r.set("convention", json!(a.convention.to_string()));
        r.set("cells", json!(lat.len()));
        (
            pattern::count_patterns(&lat, &cs)?,
            pattern::brute_force_count(&lat, &cs)?,
        )
    };
    let agree = engine.exact == brute.exact;
    r.set("engine", json!(engine.exact.to_string()));
    r.set("brute_force", json!(brute.exact.to_string()));
    r.set("agree", json!(agree));
    r.table(
        &["k", "engine", "brute_force", "agree"],
        [vec![
            a.k.to_string(),
            engine.exact.to_string(),
            brute.exact.to_string(),
            agree.to_string(),
        ]],
    );
    Ok((r, if agree { 0 } else { 2 }))
}
