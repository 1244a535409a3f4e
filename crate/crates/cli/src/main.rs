//! Command-line front end: equation files, expression parsing, command
//! dispatch and machine-readable JSON reports.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use varpn_core::ansatz::{solve_shadows, AnsatzSpec};
use varpn_core::brackets;
use varpn_core::coverings::{self, ShadowFamily};
use varpn_core::equation::{CoveringMode, EquationContext};
use varpn_core::expr;
use varpn_core::poly::{Role, VecFun};
use varpn_core::verify::{self, ConservationLaw, Verdict};
use varpn_core::DiffOp;

#[derive(Parser)]
#[command(
    name = "varpn",
    about = "Verify and discover Hamiltonian operators, recursion operators and their compatibility on evolution PDEs",
    version
)]
struct Cli {
    /// Seed for randomized commands; also makes reports byte-reproducible
    /// (timing_ms is reported as 0 when set).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a generating section is a symmetry of the equation.
    CheckSym {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        phi: String,
    },
    /// Check that a covector is a cosymmetry of the equation.
    CheckCosym {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        psi: String,
    },
    /// Check a conservation law X dx + T dt and report its generating
    /// function.
    CheckClaw {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long = "X")]
        x: String,
        #[arg(long = "T")]
        t: String,
    },
    /// Check that an operator is a Hamiltonian structure.
    CheckHam {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        op: String,
    },
    /// Check that an operator is a recursion operator (invariance only).
    CheckRec {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        op: String,
    },
    /// Check that an operator is a Nijenhuis recursion operator.
    CheckNij {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        op: String,
    },
    /// Check that a pair (A, R) is a Poisson-Nijenhuis structure.
    CheckPn {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long = "A")]
        a: String,
        #[arg(long = "R")]
        r: String,
    },
    /// Evaluate one of the brackets; with arguments omitted, generic
    /// parameter-coefficient arguments certify vanishing.
    Bracket {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        kind: BracketKind,
        #[arg(long = "A")]
        a: String,
        /// Second operator (B, R or S depending on the kind); defaults to A.
        #[arg(long = "B")]
        b: Option<String>,
        /// First test argument (covector or section per kind).
        #[arg(long)]
        arg1: Option<String>,
        /// Second test argument.
        #[arg(long)]
        arg2: Option<String>,
    },
    /// Build the hierarchy R^i A with pairwise compatibility verdicts.
    Hierarchy {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long = "A")]
        a: String,
        #[arg(long = "R")]
        r: String,
        #[arg(long)]
        n: usize,
    },
    /// Run the proof-identity suite on randomized compatible triples, or
    /// on explicitly given operators.
    Identities {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long = "A")]
        a: Option<String>,
        #[arg(long = "B")]
        b: Option<String>,
        #[arg(long = "R")]
        r: Option<String>,
    },
    /// Solve the shadow equation within a finite ansatz and report the
    /// exact nullspace basis.
    Search {
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        covering: Covering,
        /// Highest odd jet order in the ansatz.
        #[arg(long)]
        order: usize,
        /// Coefficient polynomial degree in the even jets.
        #[arg(long)]
        degree: usize,
        /// Highest even jet order allowed in coefficients.
        #[arg(long)]
        jets: usize,
        /// Allow explicit x,t dependence in coefficients.
        #[arg(long, default_value_t = false)]
        xt: bool,
        /// Degree bound for the x,t part when enabled.
        #[arg(long, default_value_t = 0)]
        xt_degree: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BracketKind {
    Schouten,
    Fn,
    C,
    Cstar,
    Hh,
    Nn,
    Hn,
}

impl BracketKind {
    fn name(&self) -> &'static str {
        match self {
            BracketKind::Schouten => "schouten",
            BracketKind::Fn => "fn",
            BracketKind::C => "c",
            BracketKind::Cstar => "cstar",
            BracketKind::Hh => "hh",
            BracketKind::Nn => "nn",
            BracketKind::Hn => "hn",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Covering {
    Lstar,
    L,
}

#[derive(Deserialize)]
struct EquationFile {
    name: String,
    components: usize,
    f: Vec<String>,
    #[serde(default)]
    #[allow(dead_code)]
    metadata: Option<Value>,
}

struct Report {
    command: String,
    inputs: BTreeMap<String, String>,
    verdict: Option<bool>,
    witness: Option<String>,
    route: Option<String>,
    data: Option<Value>,
}

impl Report {
    fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            inputs: BTreeMap::new(),
            verdict: None,
            witness: None,
            route: None,
            data: None,
        }
    }

    fn input(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.inputs.insert(key.into(), value.to_string());
        self
    }

    fn verdict(&mut self, v: &Verdict) -> &mut Self {
        self.verdict = Some(v.holds);
        self.witness = v.witness.as_ref().map(|w| w.to_string());
        self.route = Some(v.route.clone());
        self
    }

    fn emit(&self, timing_ms: u64) -> String {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "witness": self.witness,
            "route": self.route,
            "timing_ms": timing_ms,
            "data": self.data,
        })
        .to_string()
    }
}

fn load_equation(path: &PathBuf) -> Result<EquationContext, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: EquationFile =
        serde_json::from_str(&text).map_err(|e| format!("invalid equation file: {e}"))?;
    if file.f.len() != file.components {
        return Err(format!(
            "equation file declares {} components but lists {} right-hand sides",
            file.components,
            file.f.len()
        ));
    }
    let mut entries = Vec::with_capacity(file.components);
    for s in &file.f {
        let p = expr::parse_expr(s, CoveringMode::Plain).map_err(|e| e.to_string())?;
        if expr::max_component(&p) > file.components {
            return Err(format!(
                "right-hand side {s:?} mentions a component beyond {}",
                file.components
            ));
        }
        entries.push(p);
    }
    EquationContext::new(file.name, file.components, VecFun::section(entries))
        .map_err(|e| e.to_string())
}

fn parse_vec_checked(
    s: &str,
    mode: CoveringMode,
    role: Role,
    ctx: &EquationContext,
) -> Result<VecFun, String> {
    let v = expr::parse_vec(s, mode, role).map_err(|e| e.to_string())?;
    if v.len() != ctx.components() {
        return Err(format!(
            "expected {} components, found {}",
            ctx.components(),
            v.len()
        ));
    }
    for p in v.iter() {
        if expr::max_component(p) > ctx.components() {
            return Err("expression mentions a component beyond the equation size".into());
        }
    }
    Ok(v)
}

fn parse_op_checked(s: &str, ctx: &EquationContext) -> Result<DiffOp, String> {
    let op = expr::parse_op(s).map_err(|e| e.to_string())?;
    if op.rows() != ctx.components() || op.cols() != ctx.components() {
        return Err(format!(
            "operator is {}x{}, equation has {} components",
            op.rows(),
            op.cols(),
            ctx.components()
        ));
    }
    if expr::max_component_op(&op) > ctx.components() {
        return Err("operator coefficients mention a component beyond the equation size".into());
    }
    Ok(op)
}

fn generic_pair(ctx: &EquationContext, a: &DiffOp, b: &DiffOp, role: Role) -> (VecFun, VecFun) {
    let degree = verify::generic_degree(a, b, ctx.max_order() + 2);
    (
        varpn_core::sample::generic_x_arg(ctx.components(), degree, "ga", role),
        varpn_core::sample::generic_x_arg(ctx.components(), degree, "gb", role),
    )
}

fn vec_verdict(value: &VecFun, route: &str) -> Verdict {
    if value.is_zero() {
        Verdict::pass(route)
    } else {
        Verdict::fail_vec(route, value.clone())
    }
}

/// Randomized identity trials, one compatible triple per trial, evaluated
/// in parallel; the pool size is capped by VARPN_THREADS.
fn identities_parallel(
    ctx: &EquationContext,
    trials: usize,
    seed: u64,
) -> Result<Verdict, String> {
    use rayon::prelude::*;
    let results: Vec<Result<Verdict, String>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = varpn_core::sample::rng(seed.wrapping_add(trial as u64));
            let (a, b, r) = verify::identity_family_draw(&mut rng, ctx.components(), 1, 1, 1, trial % 3)
                .map_err(|e| e.to_string())?;
            verify::identity_suite(ctx, &a, &b, &r, 1, seed.wrapping_add(trial as u64))
                .map_err(|e| e.to_string())
        })
        .collect();
    for (trial, result) in results.into_iter().enumerate() {
        let v = result?;
        if !v.holds {
            return Ok(Verdict {
                route: format!("trial {trial}: {}", v.route),
                ..v
            });
        }
    }
    Ok(Verdict::pass(format!(
        "all five identities over {trials} randomized triples"
    )))
}

fn run(cli: &Cli) -> Result<(Report, ExitCode), String> {
    let mut report;
    match &cli.command {
        Command::CheckSym { eq, phi } => {
            let ctx = load_equation(eq)?;
            let v = parse_vec_checked(phi, CoveringMode::Plain, Role::Section, &ctx)?;
            report = Report::new("check-sym");
            report
                .input("equation", ctx.name())
                .input("f", ctx.rhs())
                .input("phi", &v);
            let verdict = verify::is_symmetry(&ctx, &v).map_err(|e| e.to_string())?;
            report.verdict(&verdict);
        }
        Command::CheckCosym { eq, psi } => {
            let ctx = load_equation(eq)?;
            let v = parse_vec_checked(psi, CoveringMode::Plain, Role::Covector, &ctx)?;
            report = Report::new("check-cosym");
            report
                .input("equation", ctx.name())
                .input("f", ctx.rhs())
                .input("psi", &v);
            let verdict = verify::is_cosymmetry(&ctx, &v).map_err(|e| e.to_string())?;
            report.verdict(&verdict);
        }
        Command::CheckClaw { eq, x, t } => {
            let ctx = load_equation(eq)?;
            let xv = expr::parse_expr(x, CoveringMode::Plain).map_err(|e| e.to_string())?;
            let tv = expr::parse_expr(t, CoveringMode::Plain).map_err(|e| e.to_string())?;
            let law = ConservationLaw { x: xv.clone(), t: tv.clone() };
            report = Report::new("check-claw");
            report
                .input("equation", ctx.name())
                .input("X", &xv)
                .input("T", &tv);
            let verdict = verify::is_conservation_law(&ctx, &law).map_err(|e| e.to_string())?;
            let gf = verify::generating_function(&ctx, &law).map_err(|e| e.to_string())?;
            report.verdict(&verdict);
            report.data = Some(json!({ "generating_function": gf.to_string() }));
        }
        Command::CheckHam { eq, op } => {
            let ctx = load_equation(eq)?;
            let a = parse_op_checked(op, &ctx)?;
            report = Report::new("check-ham");
            report.input("equation", ctx.name()).input("op", &a);
            let verdict = verify::is_hamiltonian(&ctx, &a).map_err(|e| e.to_string())?;
            report.verdict(&verdict);
        }
        Command::CheckRec { eq, op } => {
            let ctx = load_equation(eq)?;
            let r = parse_op_checked(op, &ctx)?;
            report = Report::new("check-rec");
            report.input("equation", ctx.name()).input("op", &r);
            let verdict = verify::is_recursion(&ctx, &r).map_err(|e| e.to_string())?;
            report.verdict(&verdict);
        }
        Command::CheckNij { eq, op } => {
            let ctx = load_equation(eq)?;
            let r = parse_op_checked(op, &ctx)?;
            report = Report::new("check-nij");
            report.input("equation", ctx.name()).input("op", &r);
            let verdict = verify::is_nijenhuis_recursion(&ctx, &r).map_err(|e| e.to_string())?;
            report.verdict(&verdict);
        }
        Command::CheckPn { eq, a, r } => {
            let ctx = load_equation(eq)?;
            let a_op = parse_op_checked(a, &ctx)?;
            let r_op = parse_op_checked(r, &ctx)?;
            report = Report::new("check-pn");
            report
                .input("equation", ctx.name())
                .input("A", &a_op)
                .input("R", &r_op);
            let verdict = verify::is_pn_pair(&ctx, &a_op, &r_op).map_err(|e| e.to_string())?;
            report.verdict(&verdict);
        }
        Command::Bracket { eq, kind, a, b, arg1, arg2 } => {
            let ctx = load_equation(eq)?;
            let a_op = parse_op_checked(a, &ctx)?;
            let b_op = match b {
                Some(s) => parse_op_checked(s, &ctx)?,
                None => a_op.clone(),
            };
            report = Report::new("bracket");
            report
                .input("equation", ctx.name())
                .input("kind", kind.name())
                .input("A", &a_op)
                .input("B", &b_op);
            let mode = CoveringMode::Plain;
            let (role1, role2) = match kind {
                BracketKind::Fn => (Role::Section, Role::Section),
                BracketKind::Cstar => (Role::Covector, Role::Section),
                _ => (Role::Covector, Role::Covector),
            };
            let value = match kind {
                BracketKind::Hh => {
                    let s1 = coverings::to_shadow(&a_op, ShadowFamily::LStar)
                        .map_err(|e| e.to_string())?;
                    let s2 = coverings::to_shadow(&b_op, ShadowFamily::LStar)
                        .map_err(|e| e.to_string())?;
                    coverings::bracket_hh(&s1, &s2).map_err(|e| e.to_string())?
                }
                BracketKind::Nn => {
                    let s1 =
                        coverings::to_shadow(&a_op, ShadowFamily::L).map_err(|e| e.to_string())?;
                    let s2 =
                        coverings::to_shadow(&b_op, ShadowFamily::L).map_err(|e| e.to_string())?;
                    coverings::bracket_nn(&s1, &s2).map_err(|e| e.to_string())?
                }
                BracketKind::Hn => {
                    let s1 = coverings::to_shadow(&a_op, ShadowFamily::LStar)
                        .map_err(|e| e.to_string())?;
                    let s2 =
                        coverings::to_shadow(&b_op, ShadowFamily::L).map_err(|e| e.to_string())?;
                    coverings::bracket_hn(&s1, &s2).map_err(|e| e.to_string())?
                }
                _ => {
                    let (g1, g2) = generic_pair(&ctx, &a_op, &b_op, role1);
                    let x1 = match arg1 {
                        Some(s) => parse_vec_checked(s, mode, role1, &ctx)?,
                        None => g1,
                    };
                    let x2 = match arg2 {
                        Some(s) => parse_vec_checked(s, mode, role2, &ctx)?,
                        None => g2.with_role(role2),
                    };
                    report.input("arg1", &x1).input("arg2", &x2);
                    match kind {
                        BracketKind::Schouten => brackets::schouten(mode, &a_op, &b_op, &x1, &x2)
                            .map_err(|e| e.to_string())?,
                        BracketKind::Fn => brackets::fn_bracket(mode, &a_op, &b_op, &x1, &x2)
                            .map_err(|e| e.to_string())?,
                        BracketKind::C => brackets::c_compat(mode, &a_op, &b_op, &x1, &x2)
                            .map_err(|e| e.to_string())?,
                        BracketKind::Cstar => brackets::c_star(mode, &a_op, &b_op, &x1, &x2)
                            .map_err(|e| e.to_string())?,
                        _ => unreachable!(),
                    }
                }
            };
            let verdict = vec_verdict(&value, &format!("{} bracket evaluation", kind.name()));
            report.verdict(&verdict);
            report.data = Some(json!({ "value": value.to_string() }));
        }
        Command::Hierarchy { eq, a, r, n } => {
            let ctx = load_equation(eq)?;
            let a_op = parse_op_checked(a, &ctx)?;
            let r_op = parse_op_checked(r, &ctx)?;
            report = Report::new("hierarchy");
            report
                .input("equation", ctx.name())
                .input("A", &a_op)
                .input("R", &r_op)
                .input("n", n);
            let h = verify::hierarchy(&ctx, &a_op, &r_op, *n).map_err(|e| e.to_string())?;
            report.verdict = Some(h.all_hold());
            report.route = Some("iterated operators R^i A".into());
            report.data = Some(json!({
                "operators": h.operators.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
                "compatible": h.compatible,
                "skew": h.skew,
                "invariant": h.invariant,
            }));
        }
        Command::Identities { eq, trials, a, b, r } => {
            let ctx = load_equation(eq)?;
            let seed = cli.seed.unwrap_or(0);
            report = Report::new("identities");
            report
                .input("equation", ctx.name())
                .input("trials", trials)
                .input("seed", seed);
            let verdict = match (a, b, r) {
                (Some(a), Some(b), Some(r)) => {
                    let a_op = parse_op_checked(a, &ctx)?;
                    let b_op = parse_op_checked(b, &ctx)?;
                    let r_op = parse_op_checked(r, &ctx)?;
                    report.input("A", &a_op).input("B", &b_op).input("R", &r_op);
                    verify::identity_suite(&ctx, &a_op, &b_op, &r_op, *trials, seed)
                        .map_err(|e| e.to_string())?
                }
                (None, None, None) => identities_parallel(&ctx, *trials, seed)?,
                _ => return Err("provide all of --A, --B, --R or none of them".into()),
            };
            report.verdict(&verdict);
        }
        Command::Search { eq, covering, order, degree, jets, xt, xt_degree } => {
            let ctx = load_equation(eq)?;
            let family = match covering {
                Covering::Lstar => ShadowFamily::LStar,
                Covering::L => ShadowFamily::L,
            };
            let mut spec = AnsatzSpec::new(family, *order, *jets, *degree);
            spec.allow_xt = *xt;
            spec.xt_degree = *xt_degree;
            report = Report::new("search");
            report
                .input("equation", ctx.name())
                .input(
                    "covering",
                    match covering {
                        Covering::Lstar => "lstar",
                        Covering::L => "l",
                    },
                )
                .input("order", order)
                .input("degree", degree)
                .input("jets", jets);
            let shadows = solve_shadows(&ctx, &spec).map_err(|e| e.to_string())?;
            let mut shadow_strings = Vec::new();
            let mut op_strings = Vec::new();
            for s in &shadows {
                shadow_strings.push(s.value.to_string());
                op_strings.push(
                    coverings::from_shadow(s)
                        .map_err(|e| e.to_string())?
                        .to_string(),
                );
            }
            report.data = Some(json!({
                "dimension": shadows.len(),
                "shadows": shadow_strings,
                "operators": op_strings,
            }));
        }
    }
    let code = match report.verdict {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    };
    Ok((report, code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("VARPN_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let start = Instant::now();
    match run(&cli) {
        Ok((report, code)) => {
            let timing = if cli.seed.is_some() {
                0
            } else {
                start.elapsed().as_millis() as u64
            };
            println!("{}", report.emit(timing));
            code
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
