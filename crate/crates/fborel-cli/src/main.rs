//! `fborel`: JSON in, JSON (or DOT) out.
//!
//! Exit codes: 0 success, 2 unparseable input, 3 failed precondition,
//! 4 failed property (a counterexample file is written).

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use fborel::broom::{self, BroomExpr, ExtensionStrategy, InfBroomExpr};
use fborel::derive::{self, Kind};
use fborel::fintop::{self, Extension, FinSpace};
use fborel::leafscheme::{self, LeafScheme, SetExpr};
use fborel::ordinal::limit_enumeration;
use fborel::seqtree::canonical_tree;
use fborel::sets::{AtomSet, ClosureOperator, Universe};
use fborel::suslin::{self, SuslinScheme};
use fborel::verify::Suite;
use fborel::{FiniteTree, Ordinal, Seq, TreeExpr};

#[derive(Parser)]
#[command(name = "fborel", version, about = "Trees on omega, ranks, Suslin schemes, brooms and finite spaces")]
struct Cli {
    /// Output format; DOT renders trees (as truncations) and finite spaces
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Seed for randomized commands
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Largest child index kept when truncating infinite trees
    #[arg(long, env = "FBOREL_WIDTH", default_value_t = 3, global = true)]
    width: u64,
    /// Largest depth kept when truncating infinite trees
    #[arg(long, env = "FBOREL_DEPTH", default_value_t = 4, global = true)]
    depth: usize,
    /// Where counterexample files go
    #[arg(long, default_value = ".", global = true)]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    L,
    I,
    Iie,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::L => Kind::L,
            KindArg::I => Kind::I,
            KindArg::Iie => Kind::Iie,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Ordinals below ω^ω
    #[command(subcommand)]
    Ord(OrdCmd),
    /// Canonical trees and truncations
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Rank of a tree for a derivative
    Rank {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        tree: PathBuf,
    },
    /// Iterated derivative of a tree
    Derive {
        #[arg(long, value_enum, default_value_t = KindArg::L)]
        kind: KindArg,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value = "1")]
        iterate: String,
    },
    /// Leaf-schemes
    #[command(subcommand)]
    Scheme(SchemeCmd),
    /// Suslin schemes and R_T sets
    #[command(subcommand)]
    Rt(RtCmd),
    /// Broom sets
    #[command(subcommand)]
    Broom(BroomCmd),
    /// Finite topological spaces
    #[command(subcommand)]
    Topo(TopoCmd),
    /// Run a property suite
    Verify {
        /// Suite name, or `all`
        #[arg(long)]
        suite: String,
        /// Number of random cases (the suite's default if absent)
        #[arg(long)]
        cases: Option<usize>,
    },
}

#[derive(Subcommand)]
enum OrdCmd {
    /// Normal form and basic facts
    Show { alpha: String },
    /// The first values of the fixed enumeration of a limit
    Enum {
        lambda: String,
        #[arg(long, default_value_t = 10)]
        count: u64,
    },
}

#[derive(Subcommand)]
enum TreeCmd {
    /// The canonical tree of an ordinal
    Canonical { alpha: String },
    /// A finite truncation of a tree
    Truncate {
        #[arg(long)]
        tree: PathBuf,
    },
}

#[derive(Subcommand)]
enum SchemeCmd {
    /// Value of a leaf-scheme
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Leaf-scheme on a truncated canonical tree for an expression
    Compile {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long)]
        alpha: String,
    },
}

#[derive(Subcommand)]
enum RtCmd {
    /// Whether a point lies in R_T(C)
    Member {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        point: u32,
        /// Base node, entries separated by commas
        #[arg(long, default_value = "")]
        at: String,
    },
    /// R_α(C)
    Ralpha {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long)]
        alpha: String,
    },
    /// A Suslin scheme whose R_α-set is the expression
    Compile {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long)]
        alpha: String,
    },
    /// A(C)
    SuslinOp {
        #[arg(long)]
        scheme: PathBuf,
    },
    /// Sufficient condition for R_α(cl C) = A(cl C)
    CheckFa {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long)]
        closure: PathBuf,
        #[arg(long)]
        alpha: String,
    },
}

#[derive(Subcommand)]
enum BroomCmd {
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Broom extension of a finite broom
    Extend {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        strategy: Option<PathBuf>,
    },
    /// D_iie of an extension, as a tree
    Diie {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// The rank lemma for a finite broom or an extension
    CheckRank {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Almost disjointness of a list of extensions
    CheckAd {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum TopoCmd {
    /// `{"y": space, "xs": {"i": space, ...}}`
    Zoom {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// `{"x": space, "family": [...], "extensions": [...]}`
    Amalgamate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// `{"space": space, "p": [...], "g": [...]}`
    WOp {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// `{"space": space, "family": [...], "escape_bound": n}`
    CheckAAxioms {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// <γ-handles of a broom extension
    Handles {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        gamma: String,
    },
}

enum Failure {
    Parse(String),
    Precondition(String),
    Property { what: String, counterexample: Value },
}

type Res<T> = Result<T, Failure>;

fn pre<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Precondition(e.to_string())
}

fn read<T: DeserializeOwned>(path: &Path) -> Res<T> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Parse(format!("stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn ordinal(s: &str) -> Res<Ordinal> {
    s.parse().map_err(|e: fborel::ordinal::OrdinalError| Failure::Parse(e.to_string()))
}

/// What a command produced.
enum Out {
    Json(Value),
    Tree(FiniteTree),
    Space(FinSpace),
}

#[derive(Deserialize)]
struct ExprInput {
    universe: Universe,
    expr: SetExpr,
}

#[derive(Deserialize)]
struct ZoomInput {
    y: FinSpace,
    #[serde(default)]
    xs: std::collections::BTreeMap<u32, FinSpace>,
}

#[derive(Deserialize)]
struct AmgInput {
    x: FinSpace,
    family: Vec<AtomSet>,
    extensions: Vec<Extension>,
}

#[derive(Deserialize)]
struct WInput {
    space: FinSpace,
    p: AtomSet,
    g: AtomSet,
}

#[derive(Deserialize)]
struct AxiomInput {
    space: FinSpace,
    family: Vec<AtomSet>,
    #[serde(default)]
    escape_bound: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyBroom {
    Inf(InfBroomExpr),
    Fin(BroomExpr),
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

impl Cli {
    fn tree_out(&self, t: &TreeExpr) -> Res<Out> {
        if self.format == Format::Dot {
            Ok(Out::Tree(t.truncate(self.depth, self.width).map_err(pre)?))
        } else {
            Ok(Out::Json(to_value(t)))
        }
    }

    fn run(&self) -> Res<Out> {
        match &self.cmd {
            Cmd::Ord(OrdCmd::Show { alpha }) => {
                let a = ordinal(alpha)?;
                Ok(Out::Json(json!({
                    "ordinal": a,
                    "finite": a.is_finite(),
                    "successor": a.is_successor(),
                    "limit": a.is_limit(),
                    "even": a.is_even(),
                    "alpha_prime": a.alpha_prime(),
                })))
            }
            Cmd::Ord(OrdCmd::Enum { lambda, count }) => {
                let l = ordinal(lambda)?;
                let e = limit_enumeration(&l).map_err(pre)?;
                let vals: Vec<Ordinal> = (0..*count).map(|k| e.at(k)).collect();
                Ok(Out::Json(json!({"lambda": l, "values": vals})))
            }
            Cmd::Tree(TreeCmd::Canonical { alpha }) => self.tree_out(&canonical_tree(&ordinal(alpha)?)),
            Cmd::Tree(TreeCmd::Truncate { tree }) => {
                let t: TreeExpr = read(tree)?;
                t.validate().map_err(pre)?;
                let f = t.truncate(self.depth, self.width).map_err(pre)?;
                Ok(if self.format == Format::Dot { Out::Tree(f) } else { Out::Json(to_value(&f)) })
            }
            Cmd::Rank { kind, tree } => {
                let t: TreeExpr = read(tree)?;
                t.validate().map_err(pre)?;
                let r = derive::rank((*kind).into(), &t).map_err(pre)?;
                Ok(Out::Json(json!({"rank": r})))
            }
            Cmd::Derive { kind, tree, iterate } => {
                let t: TreeExpr = read(tree)?;
                t.validate().map_err(pre)?;
                let d = derive::iterate((*kind).into(), &t, &ordinal(iterate)?).map_err(pre)?;
                self.tree_out(&d)
            }
            Cmd::Scheme(SchemeCmd::Eval { input }) => {
                let h: LeafScheme = read(input)?;
                Ok(Out::Json(json!({"value": leafscheme::eval_scheme(&h)})))
            }
            Cmd::Scheme(SchemeCmd::Compile { expr, alpha }) => {
                let e: ExprInput = read(expr)?;
                let h = leafscheme::compile_simple(&e.expr, &ordinal(alpha)?, self.width, e.universe).map_err(pre)?;
                Ok(if self.format == Format::Dot { Out::Tree(h.tree().clone()) } else { Out::Json(to_value(&h)) })
            }
            Cmd::Rt(cmd) => self.rt(cmd),
            Cmd::Broom(cmd) => self.broom(cmd),
            Cmd::Topo(cmd) => self.topo(cmd),
            Cmd::Verify { suite, cases } => self.verify(suite, *cases),
        }
    }

    fn rt(&self, cmd: &RtCmd) -> Res<Out> {
        match cmd {
            RtCmd::Member { scheme, tree, point, at } => {
                let c: SuslinScheme = read(scheme)?;
                let t: TreeExpr = read(tree)?;
                t.validate().map_err(pre)?;
                let h = parse_seq(at)?;
                let m = suslin::rt_member(&c, &t, *point, &h).map_err(pre)?;
                Ok(Out::Json(json!({"member": m})))
            }
            RtCmd::Ralpha { scheme, alpha } => {
                let c: SuslinScheme = read(scheme)?;
                let r = suslin::r_alpha(&c, &ordinal(alpha)?).map_err(pre)?;
                Ok(Out::Json(json!({"set": r})))
            }
            RtCmd::Compile { expr, alpha } => {
                let e: ExprInput = read(expr)?;
                let c = suslin::compile_regular(&e.expr, &ordinal(alpha)?, self.width, e.universe).map_err(pre)?;
                Ok(if self.format == Format::Dot { Out::Tree(c.domain().clone()) } else { Out::Json(to_value(&c)) })
            }
            RtCmd::SuslinOp { scheme } => {
                let c: SuslinScheme = read(scheme)?;
                Ok(Out::Json(json!({"set": suslin::suslin_operation(&c)})))
            }
            RtCmd::CheckFa { scheme, closure, alpha } => {
                let c: SuslinScheme = read(scheme)?;
                let cl: ClosureOperator = read(closure)?;
                let x = suslin::suslin_operation(&c.closed(&cl));
                let r = suslin::fa_sufficiency_check(&c, &cl, x, &ordinal(alpha)?).map_err(pre)?;
                property(r.pass, "sufficient condition fails", to_value(&r))
            }
        }
    }

    fn broom(&self, cmd: &BroomCmd) -> Res<Out> {
        match cmd {
            BroomCmd::Classify { input } => {
                let b: BroomExpr = read(input)?;
                b.validate().map_err(pre)?;
                Ok(Out::Json(json!({"rank": broom::classify(&b).map_err(pre)?})))
            }
            BroomCmd::Extend { input, strategy } => {
                let b: BroomExpr = read(input)?;
                b.validate().map_err(pre)?;
                let s: ExtensionStrategy = match strategy {
                    Some(p) => read(p)?,
                    None => ExtensionStrategy::default(),
                };
                let a = broom::extend_broom(&b, &s).map_err(pre)?;
                if self.format == Format::Dot {
                    return self.tree_out(&a.closure_tree().map_err(pre)?);
                }
                Ok(Out::Json(to_value(&a)))
            }
            BroomCmd::Diie { input } => {
                let a: InfBroomExpr = read(input)?;
                a.validate().map_err(pre)?;
                self.tree_out(&broom::broom_diie(&a).map_err(pre)?)
            }
            BroomCmd::CheckRank { input } => {
                let r = match read::<AnyBroom>(input)? {
                    AnyBroom::Inf(a) => {
                        a.validate().map_err(pre)?;
                        broom::rank_lemma_check_inf(&a)
                    }
                    AnyBroom::Fin(b) => {
                        b.validate().map_err(pre)?;
                        broom::rank_lemma_check(&b)
                    }
                }
                .map_err(pre)?;
                property(r.pass, "rank lemma fails", to_value(&r))
            }
            BroomCmd::CheckAd { input } => {
                let fam: Vec<InfBroomExpr> = read(input)?;
                for a in &fam {
                    a.validate().map_err(pre)?;
                }
                let ok = broom::almost_disjoint_check(&fam).map_err(pre)?;
                property(ok, "family is not almost disjoint", json!({"family": fam, "almost_disjoint": ok}))
            }
        }
    }

    fn topo(&self, cmd: &TopoCmd) -> Res<Out> {
        match cmd {
            TopoCmd::Zoom { input } => {
                let z: ZoomInput = read(input)?;
                let r = fintop::zoom_space(&z.y, &z.xs).map_err(pre)?;
                Ok(if self.format == Format::Dot { Out::Space(r.space) } else { Out::Json(to_value(&r)) })
            }
            TopoCmd::Amalgamate { input } => {
                let a: AmgInput = read(input)?;
                let r = fintop::amalgamate(&a.x, &a.family, &a.extensions).map_err(pre)?;
                Ok(if self.format == Format::Dot { Out::Space(r.space) } else { Out::Json(to_value(&r)) })
            }
            TopoCmd::WOp { input } => {
                let w: WInput = read(input)?;
                let r = fintop::w_operator(&w.space, w.p, w.g).map_err(pre)?;
                Ok(Out::Json(json!({"w": r})))
            }
            TopoCmd::CheckAAxioms { input } => {
                let a: AxiomInput = read(input)?;
                let r = fintop::check_axioms_a(&a.space, &a.family, a.escape_bound).map_err(pre)?;
                property(r.pass(), "(A1)-(A4) fail", to_value(&r))
            }
            TopoCmd::Handles { input, gamma } => {
                let a: InfBroomExpr = read(input)?;
                let r = fintop::gamma_handles(&a, &ordinal(gamma)?, self.width).map_err(pre)?;
                property(r.partition && r.prefix_property, "handle decomposition fails", to_value(&r))
            }
        }
    }

    fn verify(&self, suite: &str, cases: Option<usize>) -> Res<Out> {
        let suites: Vec<Suite> = if suite == "all" {
            Suite::ALL.to_vec()
        } else {
            vec![suite.parse().map_err(Failure::Parse)?]
        };
        let reports: Vec<_> = suites.iter().map(|s| s.run(self.seed, cases.unwrap_or(s.default_cases()))).collect();
        let pass = reports.iter().all(|r| r.pass);
        let v = if reports.len() == 1 { to_value(&reports[0]) } else { to_value(&reports) };
        property(pass, "property suite failed", v)
    }
}

fn property(ok: bool, what: &str, report: Value) -> Res<Out> {
    if ok {
        Ok(Out::Json(report))
    } else {
        Err(Failure::Property { what: what.into(), counterexample: report })
    }
}

fn parse_seq(s: &str) -> Res<Seq> {
    if s.trim().is_empty() {
        return Ok(Seq::empty());
    }
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| Failure::Parse(format!("bad sequence {s}: {e}"))))
        .collect::<Res<Vec<u64>>>()
        .map(Seq)
}

fn space_dot(x: &FinSpace) -> String {
    let mut out = String::from("digraph space {\n");
    for p in 0..x.len() {
        out.push_str(&format!("  {p};\n"));
    }
    // an edge p -> q when q lies in every neighbourhood of p
    for p in 0..x.len() {
        for q in x.nbhd(p).atoms().filter(|&q| q != p) {
            out.push_str(&format!("  {p} -> {q};\n"));
        }
    }
    out.push_str("}\n");
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.run() {
        Ok(out) => {
            let text = match (cli.format, out) {
                (Format::Dot, Out::Tree(t)) => t.to_dot("tree"),
                (Format::Dot, Out::Space(s)) => space_dot(&s),
                (Format::Dot, Out::Json(_)) => {
                    eprintln!("error: this command has no DOT rendering");
                    return ExitCode::from(2);
                }
                (Format::Json, Out::Json(v)) => serde_json::to_string(&v).expect("json"),
                (Format::Json, Out::Tree(t)) => serde_json::to_string(&t).expect("json"),
                (Format::Json, Out::Space(s)) => serde_json::to_string(&s).expect("json"),
            };
            println!("{}", text.trim_end());
            ExitCode::SUCCESS
        }
        Err(Failure::Parse(m)) => {
            eprintln!("parse error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Precondition(m)) => {
            eprintln!("precondition failed: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Property { what, counterexample }) => {
            let path = cli.out_dir.join(format!("counterexample-{}.json", cli.seed));
            let body = serde_json::to_string_pretty(&counterexample).expect("json");
            match fs::write(&path, body + "\n") {
                Ok(()) => eprintln!("property failed: {what}; counterexample written to {}", path.display()),
                Err(e) => eprintln!("property failed: {what}; could not write {}: {e}", path.display()),
            }
            ExitCode::from(4)
        }
    }
}
