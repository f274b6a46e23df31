use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use spandec::decomp::{encode_classical, ext, span, validate_td, width, TreeDecomposition};
use spandec::ef::{ef_equivalent_with, Budget};
use spandec::falsifier::{enumerate_decompositions, micro_refute, IndexMode, SearchConfig};
use spandec::gadgets::{
    build_tw_g, build_tw_h, canonical_pd_pw, canonical_td_tw, make_bicol, make_bicolit, make_gadget, make_loz,
    plan_pw, plan_tw, verify_pw, verify_tw, PwParams, TwParams, TwPlan, TwVariant,
};
use spandec::io::{parse_pace_gr, parse_pace_td, to_dot, DecompositionFile, StructureFile};
use spandec::structure::{are_isomorphic, cycle_graph, path_graph, DEFAULT_ISO_BUDGET};
use spandec::{Error, Result, Structure};

/// Environment variables supplying budget defaults.
const ENV_MAX_STATES: &str = "SPANDEC_MAX_STATES";
const ENV_MAX_SECONDS: &str = "SPANDEC_MAX_SECONDS";

#[derive(Parser)]
#[command(name = "spandec", version, about = "Bounded-span decompositions, gadget generators and EF games")]
struct Cli {
    /// Recorded in reports; every generator is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a structure as JSON.
    Gen(GenArgs),
    /// Print the parameter plan of a family.
    Plan {
        family: Family,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        beta: u64,
    },
    /// Plan and verify both families over a grid `K,D,B` (k in 1..=K, delta in 1..=D, beta in 0..=B).
    VerifyBounds {
        #[arg(long)]
        grid: String,
    },
    /// Validate a decomposition; exits 0 iff valid (and matching `--structure`).
    Check {
        decomposition: PathBuf,
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long)]
        delta: Option<usize>,
    },
    Span {
        decomposition: PathBuf,
    },
    Width {
        decomposition: PathBuf,
    },
    /// Print the structure reconstructed from a decomposition.
    Ext {
        decomposition: PathBuf,
    },
    /// Play the game; exits 0 if equivalent, 1 if distinguished, 2 on budget.
    Ef {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        rounds: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Enumerate decompositions as JSON lines.
    Search {
        structure: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Compare the decompositions of two structures at depth `alpha`.
    Refute {
        g: PathBuf,
        h: PathBuf,
        #[arg(long)]
        alpha: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    ExportDot {
        structure: PathBuf,
    },
    /// Convert PACE `.gr` and `.td` files into a decomposition file.
    ImportPace {
        graph: PathBuf,
        td: PathBuf,
        /// Also write the graph as a structure file.
        #[arg(long)]
        structure_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Pw,
    Tw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gadget,
    Bicol,
    Bicolit,
    PwG,
    PwH,
    Loz,
    TwG,
    TwH,
    Path,
    Cycle,
}

#[derive(Args)]
struct GenArgs {
    kind: Kind,
    #[arg(long, default_value_t = 1)]
    beta: u32,
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Run length (default 3); for tw-g/tw-h an override of the planned n.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    n1: usize,
    #[arg(long, default_value_t = 1)]
    n2: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    l: usize,
    /// Plan inputs for tw-g/tw-h.
    #[arg(long, default_value_t = 1)]
    k: u64,
    #[arg(long, default_value_t = 1)]
    delta: u64,
    /// Write the canonical witness decomposition here.
    #[arg(long)]
    decomposition: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "series-parallel")]
    variant: Variant,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    SeriesParallel,
    Sweep,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long)]
    max_seconds: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Result<Budget> {
        Ok(Budget {
            max_nodes: self.max_nodes.or(env_number(ENV_MAX_STATES)?),
            max_seconds: self.max_seconds.or(env_number(ENV_MAX_SECONDS)?),
        })
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    delta: usize,
    #[arg(long)]
    path_only: bool,
    #[arg(long)]
    max_tree_nodes: Option<usize>,
    #[arg(long)]
    max_states: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    index_mode: Mode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Canonical,
    Exhaustive,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig> {
        let mut cfg = SearchConfig::new(self.k, self.delta).path_only(self.path_only);
        if let Some(t) = self.max_tree_nodes {
            cfg.max_tree_nodes = t;
        }
        if let Some(s) = self.max_states.or(env_number(ENV_MAX_STATES)?) {
            cfg.max_states = Some(s);
        }
        cfg.max_seconds = env_number(ENV_MAX_SECONDS)?;
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.index_mode = match self.index_mode {
            Mode::Canonical => IndexMode::Canonical,
            Mode::Exhaustive => IndexMode::Exhaustive,
        };
        Ok(cfg)
    }
}

fn env_number<T: std::str::FromStr>(var: &str) -> Result<Option<T>> {
    match std::env::var(var) {
        Ok(v) => v.parse().map(Some).map_err(|_| Error::Parameter(format!("{var} is not a number: `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn read_structure(path: &Path) -> Result<Structure> {
    StructureFile::parse(&read(path)?)
}

fn read_decomposition(path: &Path) -> Result<TreeDecomposition> {
    DecompositionFile::parse(&read(path)?)
}

fn tw_params(k: u64, delta: u64, beta: u32, n: Option<usize>) -> Result<(TwPlan, TwParams)> {
    let plan = match n {
        Some(n) => TwPlan::at_n(k, delta, beta as u64, n as u64)?,
        None => plan_tw(k, delta, beta as u64)?,
    };
    let params = TwParams::from_plan(&plan)?;
    Ok((plan, params))
}

fn gen(args: &GenArgs) -> Result<()> {
    let n = args.n.unwrap_or(3);
    let pw = PwParams { beta: args.beta, p: args.p, n, m: args.m, l: args.l };
    let tw = || tw_params(args.k, args.delta, args.beta, args.n).map(|x| x.1);
    let s = match args.kind {
        Kind::Gadget => make_gadget(args.beta, args.p, n)?,
        Kind::Bicol => make_bicol(args.beta, args.p, n, args.n1, args.n2)?,
        Kind::Bicolit => make_bicolit(args.beta, args.p, n, args.n1, args.n2, args.m)?,
        Kind::PwG => spandec::gadgets::build_pw_g(&pw)?,
        Kind::PwH => spandec::gadgets::build_pw_h(&pw)?,
        Kind::Loz => make_loz(args.p as u32, args.l)?,
        Kind::TwG => build_tw_g(&tw()?)?,
        Kind::TwH => build_tw_h(&tw()?)?,
        Kind::Path => path_graph(n),
        Kind::Cycle => cycle_graph(n),
    };
    if let Some(path) = &args.decomposition {
        let td = match args.kind {
            Kind::Gadget | Kind::Bicol | Kind::Bicolit | Kind::PwG | Kind::PwH => canonical_pd_pw(&s)?,
            Kind::Loz | Kind::TwG | Kind::TwH => canonical_td_tw(
                &s,
                match args.variant {
                    Variant::SeriesParallel => TwVariant::SeriesParallel,
                    Variant::Sweep => TwVariant::Sweep,
                },
            )?,
            Kind::Path | Kind::Cycle => {
                return Err(Error::Parameter("no canonical decomposition for this family".into()))
            }
        };
        fs::write(path, DecompositionFile::render(&td)?)?;
    }
    print!("{}", StructureFile::render(&s)?);
    Ok(())
}

fn verify_bounds(grid: &str) -> Result<bool> {
    let parts: Vec<u64> = grid
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Parameter(format!("bad grid `{grid}`"))))
        .collect::<Result<_>>()?;
    let [kk, dd, bb] = parts[..] else {
        return Err(Error::Parameter("grid must be K,D,B".into()));
    };
    let mut all = true;
    println!("k\tdelta\tbeta\tpw\ttw");
    for k in 1..=kk {
        for d in 1..=dd {
            for b in 0..=bb {
                let pw = plan_pw(k, d, b).map(|p| verify_pw(&p));
                let tw = plan_tw(k, d, b).map(|p| verify_tw(&p));
                let show = |r: &Result<spandec::gadgets::PlanReport>| match r {
                    Ok(rep) if rep.ok() => "pass".to_string(),
                    Ok(rep) => format!(
                        "FAIL({})",
                        rep.violations().iter().map(|c| c.name.clone()).collect::<Vec<_>>().join("; ")
                    ),
                    Err(e) => format!("ERROR({e})"),
                };
                let ok = matches!(&pw, Ok(r) if r.ok()) && matches!(&tw, Ok(r) if r.ok());
                all &= ok;
                println!("{k}\t{d}\t{b}\t{}\t{}", show(&pw), show(&tw));
            }
        }
    }
    Ok(all)
}

fn check(path: &Path, structure: Option<&Path>, delta: Option<usize>) -> Result<bool> {
    let td = read_decomposition(path)?;
    if let Err(violations) = validate_td(&td) {
        for v in &violations {
            println!("violation: node {} {:?}{}: {}", v.node, v.condition, v.index.map(|i| format!(" [{i}]")).unwrap_or_default(), v.detail);
        }
        return Ok(false);
    }
    let w = width(&td);
    let sp = span(&td)?;
    println!("ok: width {w}, span {sp}");
    let mut ok = true;
    if let Some(d) = delta {
        if sp > d {
            println!("span {sp} exceeds delta {d}");
            ok = false;
        }
    }
    if let Some(sp) = structure {
        let s = read_structure(sp)?;
        match are_isomorphic(&ext(&td)?.0, &s, DEFAULT_ISO_BUDGET)? {
            Some(_) => println!("ext is isomorphic to the structure"),
            None => {
                println!("ext is not isomorphic to the structure");
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let seed = cli.seed;
    match cli.command {
        Command::Gen(args) => {
            gen(&args)?;
        }
        Command::Plan { family, k, delta, beta } => {
            let (plan, report) = match family {
                Family::Pw => {
                    let p = plan_pw(k, delta, beta)?;
                    (serde_json::to_value(&p)?, verify_pw(&p))
                }
                Family::Tw => {
                    let p = plan_tw(k, delta, beta)?;
                    (serde_json::to_value(&p)?, verify_tw(&p))
                }
            };
            println!("{}", serde_json::to_string_pretty(&json!({ "plan": plan, "checks": report.checks }))?);
        }
        Command::VerifyBounds { grid } => {
            if !verify_bounds(&grid)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Check { decomposition, structure, delta } => {
            if !check(&decomposition, structure.as_deref(), delta)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Span { decomposition } => println!("{}", span(&read_decomposition(&decomposition)?)?),
        Command::Width { decomposition } => println!("{}", width(&read_decomposition(&decomposition)?)),
        Command::Ext { decomposition } => {
            let (s, _) = ext(&read_decomposition(&decomposition)?)?;
            print!("{}", StructureFile::render(&s)?);
        }
        Command::Ef { a, b, rounds, budget } => {
            let (a, b) = (read_structure(&a)?, read_structure(&b)?);
            return Ok(match ef_equivalent_with(&a, &b, rounds, budget.budget()?) {
                Ok(true) => {
                    println!("equivalent");
                    ExitCode::from(0)
                }
                Ok(false) => {
                    println!("distinguishable");
                    ExitCode::from(1)
                }
                Err(Error::BudgetExceeded { explored }) => {
                    println!("budget exceeded after {explored} positions");
                    ExitCode::from(2)
                }
                Err(e) => return Err(e),
            });
        }
        Command::Search { structure, search } => {
            let s = read_structure(&structure)?;
            let cfg = search.config()?;
            let e = enumerate_decompositions(&s, &cfg)?;
            for (i, td) in e.decompositions.iter().enumerate() {
                let rec = json!({
                    "record": "decomposition",
                    "index": i,
                    "width": width(td),
                    "span": span(td)?,
                    "decomposition": DecompositionFile::from_decomposition(td),
                });
                println!("{rec}");
            }
            let summary = json!({
                "record": "summary",
                "count": e.decompositions.len(),
                "complete": e.complete,
                "config": cfg,
                "seed": seed,
            });
            println!("{summary}");
        }
        Command::Refute { g, h, alpha, search, budget } => {
            let (g, h) = (read_structure(&g)?, read_structure(&h)?);
            let report = micro_refute(&g, &h, &search.config()?, alpha, budget.budget()?)?;
            print!("{}", report.to_json_lines()?);
            if let Some(seed) = seed {
                println!("{}", json!({ "record": "seed", "seed": seed }));
            }
        }
        Command::ExportDot { structure } => print!("{}", to_dot(&read_structure(&structure)?)?),
        Command::ImportPace { graph, td, structure_out } => {
            let s = parse_pace_gr(&read(&graph)?)?;
            let d = parse_pace_td(&read(&td)?)?;
            let td = encode_classical(&s, &d, d.width())?;
            if let Some(path) = structure_out {
                fs::write(path, StructureFile::render(&s)?)?;
            }
            print!("{}", DecompositionFile::render(&td)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
