//! `fgdist`: batch command surface for distribution algebras of formal
//! group laws over prime fields.
//!
//! Subcommands cover law validation, additive-basis products,
//! comultiplication and commutators, Poisson table extraction and
//! checking, PBW word reduction and S-polynomial confluence, algebra
//! reconstruction and oracle comparison, and a packaged demonstration
//! that replays the upper-triangular worked example formula by formula.
//!
//! Exit codes are stable across commands: 0 for success, 2 for a
//! mathematical refusal (a failed check, an out-of-level operand, a
//! refused cap), 3 for malformed input. Output is JSON by default and a
//! canonical text rendering under `--format text`; identical invocations
//! produce byte-identical output.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fgdist_core::arith::{binom_mod_p, MultiIndex, Prime};
use fgdist_core::dist::{
    parse_distribution, parse_mult_combo, safe_cap, DistLevel, Distribution, MultCombo,
};
use fgdist_core::group::{builtin_law, GroupLaw};
use fgdist_core::poisson::{parse_generator, PoissonTable};
use fgdist_core::reconstruct::{build_u, ReconstructedAlgebra};
use fgdist_core::report::{CheckOutcome, Report};
use fgdist_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fgdist",
    version,
    about = "Distribution algebras of formal group laws over F_p"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the formal-group axioms of a law.
    Validate {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Multiply two distributions.
    Mul {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
        /// Left operand, `d[...]` or `m[...]` syntax.
        #[arg(value_name = "DIST", allow_hyphen_values = true)]
        left: String,
        /// Right operand.
        #[arg(value_name = "DIST", allow_hyphen_values = true)]
        right: String,
    },
    /// Comultiply a distribution.
    Comul {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(value_name = "DIST", allow_hyphen_values = true)]
        operand: String,
    },
    /// Commutator of two distributions.
    Commutator {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(value_name = "DIST", allow_hyphen_values = true)]
        left: String,
        #[arg(value_name = "DIST", allow_hyphen_values = true)]
        right: String,
    },
    /// Extract the canonical Poisson table of the splay of blocks.
    Pi {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the four structural checks on a Poisson table document.
    Check {
        #[command(flatten)]
        out: OutputArgs,
        /// Table document written by `pi` (stdin when absent).
        #[arg(value_name = "FILE")]
        file: Option<PathBuf>,
    },
    /// Reduce a generator word to its PBW normal form.
    Pbw {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
        /// Generator names, e.g. `x x^3 y`; several may share one argument.
        #[arg(value_name = "WORD", required = true)]
        word: Vec<String>,
    },
    /// Report S-polynomial residues of the straightening rewrite system.
    Confluence {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Rebuild the algebra from block data plus the extracted table.
    Reconstruct {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare a reconstructed algebra document against the direct oracle.
    Compare {
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutputArgs,
        /// Algebra document written by `reconstruct` (stdin when absent).
        #[arg(value_name = "FILE")]
        file: Option<PathBuf>,
    },
    /// Replay the upper-triangular worked example as a pass/fail table.
    DemoT2 {
        #[command(flatten)]
        level: LevelArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// Level parameters shared by every law-bearing command.
#[derive(Args)]
struct LevelArgs {
    /// Prime modulus.
    #[arg(short = 'p', long = "prime", value_name = "P")]
    prime: Option<u32>,
    /// Frobenius level bound R; generators are the p^0 .. p^R powers.
    #[arg(short = 'R', long = "level", value_name = "R", default_value_t = 0)]
    r_max: u32,
    /// Series truncation cap; defaults to the safe bound for the level.
    #[arg(long, value_name = "N")]
    cap: Option<u32>,
    /// Accept a cap below the safe bound. Products that actually need a
    /// deeper coefficient are then refused at run time instead of being
    /// silently truncated.
    #[arg(long)]
    unsafe_cap: bool,
}

/// Law selection: exactly one of a builtin expression or a law file.
#[derive(Args)]
struct LawArgs {
    /// Builtin law expression: ga, gm, t2, or a product such as ga*gm.
    #[arg(long, value_name = "EXPR")]
    builtin: Option<String>,
    /// Law description file (JSON).
    #[arg(long, value_name = "FILE", conflicts_with = "builtin")]
    law: Option<PathBuf>,
    #[command(flatten)]
    level: LevelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when absent).
    #[arg(short = 'o', long = "output", value_name = "FILE")]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl OutputArgs {
    fn emit(&self, text: &str, jsonv: &Value) -> Result<()> {
        let body = match self.format {
            Format::Text => format!("{text}\n"),
            Format::Json => format!("{}\n", serde_json::to_string_pretty(jsonv)?),
        };
        match &self.output {
            Some(path) => fs::write(path, body)?,
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes())?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(raw) = std::env::var("FGDIST_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("fgdist: ignoring FGDIST_THREADS={raw:?} (want a positive integer)"),
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("fgdist: {e}");
            ExitCode::from(if e.is_input_error() { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { law, out } => cmd_validate(&law, &out),
        Command::Mul { law, out, left, right } => cmd_product(&law, &out, &left, &right, false),
        Command::Commutator { law, out, left, right } => {
            cmd_product(&law, &out, &left, &right, true)
        }
        Command::Comul { law, out, operand } => cmd_comul(&law, &out, &operand),
        Command::Pi { law, out } => cmd_pi(&law, &out),
        Command::Check { out, file } => cmd_check(&out, &file),
        Command::Pbw { law, out, word } => cmd_pbw(&law, &out, &word),
        Command::Confluence { law, out } => cmd_confluence(&law, &out),
        Command::Reconstruct { law, out } => cmd_reconstruct(&law, &out),
        Command::Compare { law, out, file } => cmd_compare(&law, &out, &file),
        Command::DemoT2 { level, out } => cmd_demo_t2(&level, &out),
    }
}

// ----- law and level resolution -------------------------------------------------------

fn required_prime(level: &LevelArgs) -> Result<Prime> {
    match level.prime {
        Some(p) => Prime::new(p),
        None => Err(Error::Parse("this law source needs an explicit prime; pass -p".into())),
    }
}

/// Builds the law from `--builtin` or `--law`. The default cap is the safe
/// bound for the requested level, so every in-level product is covered.
fn resolve_law(args: &LawArgs) -> Result<Arc<GroupLaw>> {
    let law = match (&args.builtin, &args.law) {
        (Some(expr), None) => {
            let p = required_prime(&args.level)?;
            let cap = match args.level.cap {
                Some(c) => c,
                None => {
                    // A tiny probe instance, only to learn the coordinate
                    // count the cap formula depends on.
                    let probe = builtin_law(expr, p, 4)?;
                    safe_cap(p, args.level.r_max, probe.num_coords())?
                }
            };
            builtin_law(expr, p, cap)?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            let law = GroupLaw::from_json_str(&text, args.level.cap)?;
            if let Some(p) = args.level.prime {
                if p != law.modulus().get() {
                    return Err(Error::Parse(format!(
                        "law file has p = {}, but the flags say p = {p}",
                        law.modulus().get()
                    )));
                }
            }
            law
        }
        (None, None) => {
            return Err(Error::Parse("one of --builtin or --law is required".into()));
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --builtin together with --law"),
    };
    Ok(Arc::new(law))
}

fn resolve_level(args: &LawArgs) -> Result<Arc<DistLevel>> {
    let law = resolve_law(args)?;
    if args.level.unsafe_cap {
        DistLevel::new_unchecked(law, args.level.r_max)
    } else {
        DistLevel::new(law, args.level.r_max)
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => Ok(fs::read_to_string(p)?),
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            Ok(text)
        }
    }
}

/// Accepts either operand syntax and lands in the additive basis.
fn parse_operand(level: &Arc<DistLevel>, text: &str) -> Result<Distribution> {
    if text.trim_start().starts_with("m[") || text.trim_start().starts_with('m') && text.contains("m[") {
        parse_mult_combo(level, text)?.to_additive()
    } else {
        parse_distribution(level, text)
    }
}

// ----- rendering -----------------------------------------------------------------------

fn report_text(report: &Report) -> String {
    let mut lines = Vec::new();
    for c in &report.checks {
        let mut line = format!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
        if let Some(w) = &c.witness {
            line.push_str(": ");
            line.push_str(w);
        } else if let Some(d) = &c.detail {
            line.push_str(": ");
            line.push_str(d);
        }
        lines.push(line);
    }
    let total = report.checks.len();
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    lines.push(if failed == 0 {
        format!("all {total} checks pass")
    } else {
        format!("{failed} of {total} checks fail")
    });
    lines.join("\n")
}

fn envelope(command: &str, level: &DistLevel) -> Value {
    json!({
        "command": command,
        "law": level.law().name(),
        "p": level.modulus().get(),
        "r_max": level.r_max(),
    })
}

fn with_field(mut v: Value, key: &str, field: Value) -> Value {
    v.as_object_mut().expect("envelope is an object").insert(key.into(), field);
    v
}

fn letter_name(level: &DistLevel, gid: usize) -> String {
    let full = level.gen_name(gid);
    full.strip_prefix("d[")
        .and_then(|s| s.strip_suffix(']'))
        .map(str::to_string)
        .unwrap_or(full)
}

/// Renders a PBW combo as generator words, `x^2 y + y` style, in the same
/// descending order as the `m[...]` form.
fn word_text(level: &DistLevel, combo: &MultCombo) -> String {
    if combo.is_zero() {
        return "0".into();
    }
    let letters: Vec<String> =
        (0..level.num_generators()).map(|gid| letter_name(level, gid)).collect();
    let terms: Vec<(&fgdist_core::dist::MultMonomial, u32)> = combo.terms().collect();
    let mut parts = Vec::new();
    for (m, c) in terms.into_iter().rev() {
        let mut word = Vec::new();
        for (gid, &d) in m.digits().iter().enumerate() {
            for _ in 0..d {
                word.push(letters[gid].as_str());
            }
        }
        let body = if word.is_empty() { "1".to_string() } else { word.join(" ") };
        parts.push(if c == 1 { body } else { format!("{c} {body}") });
    }
    parts.join(" + ")
}

// ----- commands ------------------------------------------------------------------------

fn cmd_validate(args: &LawArgs, out: &OutputArgs) -> Result<u8> {
    let law = resolve_law(args)?;
    let report = law.validate();
    let jsonv = json!({
        "command": "validate",
        "law": law.name(),
        "p": law.modulus().get(),
        "report": serde_json::to_value(&report)?,
    });
    out.emit(&report_text(&report), &jsonv)?;
    Ok(if report.all_pass() { 0 } else { 2 })
}

fn cmd_product(
    args: &LawArgs,
    out: &OutputArgs,
    left: &str,
    right: &str,
    commutator: bool,
) -> Result<u8> {
    let level = resolve_level(args)?;
    let a = parse_operand(&level, left)?;
    let b = parse_operand(&level, right)?;
    let result = if commutator { a.commutator(&b)? } else { a.mul(&b)? };
    let name = if commutator { "commutator" } else { "mul" };
    let jsonv = envelope(name, &level);
    let jsonv = with_field(jsonv, "left", json!(a.to_string()));
    let jsonv = with_field(jsonv, "right", json!(b.to_string()));
    let jsonv = with_field(jsonv, "result", json!(result.to_string()));
    let jsonv = with_field(jsonv, "result_mult", json!(result.to_mult()?.to_text()));
    out.emit(&result.to_string(), &jsonv)?;
    Ok(0)
}

fn cmd_comul(args: &LawArgs, out: &OutputArgs, operand: &str) -> Result<u8> {
    let level = resolve_level(args)?;
    let a = parse_operand(&level, operand)?;
    let tensor = a.comul();
    let jsonv = envelope("comul", &level);
    let jsonv = with_field(jsonv, "operand", json!(a.to_string()));
    let jsonv = with_field(jsonv, "result", json!(tensor.to_string()));
    out.emit(&tensor.to_string(), &jsonv)?;
    Ok(0)
}

fn cmd_pi(args: &LawArgs, out: &OutputArgs) -> Result<u8> {
    let level = resolve_level(args)?;
    let table = PoissonTable::extract(&level)?;
    // The JSON form is the self-contained document `check` reads back.
    out.emit(&table.to_text(), &table.to_json_value())?;
    Ok(0)
}

fn cmd_check(out: &OutputArgs, file: &Option<PathBuf>) -> Result<u8> {
    let text = read_input(file)?;
    let table = PoissonTable::from_json_str(&text)?;
    let report = table.check_all()?;
    let jsonv = envelope("check", table.level());
    let jsonv = with_field(jsonv, "entries", json!(table.num_entries()));
    let jsonv = with_field(jsonv, "report", serde_json::to_value(&report)?);
    out.emit(&report_text(&report), &jsonv)?;
    Ok(if report.all_pass() { 0 } else { 2 })
}

fn cmd_pbw(args: &LawArgs, out: &OutputArgs, word_args: &[String]) -> Result<u8> {
    let level = resolve_level(args)?;
    let table = PoissonTable::extract(&level)?;
    let system = table.full_rewrite()?;
    let mut word: Vec<u16> = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    for token in word_args.iter().flat_map(|chunk| chunk.split_whitespace()) {
        word.push(parse_generator(&level, token)? as u16);
        tokens.push(token.to_string());
    }
    let nf = system.normal_form_word(&word)?;
    let text = word_text(&level, &nf);
    let jsonv = envelope("pbw", &level);
    let jsonv = with_field(jsonv, "word", json!(tokens));
    let jsonv = with_field(jsonv, "normal_form", json!(nf.to_text()));
    let jsonv = with_field(jsonv, "letters", json!(text));
    out.emit(&text, &jsonv)?;
    Ok(0)
}

fn cmd_confluence(args: &LawArgs, out: &OutputArgs) -> Result<u8> {
    let level = resolve_level(args)?;
    let table = PoissonTable::extract(&level)?;
    let report = table.full_rewrite()?.s_polynomial_report()?;
    let text = if report.all_pass() {
        "all S-polynomials reduce to 0".to_string()
    } else {
        report_text(&report)
    };
    let jsonv = envelope("confluence", &level);
    let jsonv = with_field(jsonv, "report", serde_json::to_value(&report)?);
    out.emit(&text, &jsonv)?;
    Ok(if report.all_pass() { 0 } else { 2 })
}

fn cmd_reconstruct(args: &LawArgs, out: &OutputArgs) -> Result<u8> {
    let level = resolve_level(args)?;
    let table = PoissonTable::extract(&level)?;
    let algebra = build_u(&table)?;
    let text = format!(
        "reconstructed algebra: dimension {}, p = {}, level {}",
        algebra.dim(),
        level.modulus().get(),
        level.r_max()
    );
    // The JSON form is the self-contained document `compare` reads back.
    out.emit(&text, &algebra.to_json_value())?;
    Ok(0)
}

fn cmd_compare(args: &LawArgs, out: &OutputArgs, file: &Option<PathBuf>) -> Result<u8> {
    let level = resolve_level(args)?;
    let text = read_input(file)?;
    let algebra = ReconstructedAlgebra::from_json_str(&text, &level)?;
    let report = algebra.compare_with_oracle()?;
    let rendered = if report.all_pass() {
        report
            .checks
            .first()
            .and_then(|c| c.detail.clone())
            .unwrap_or_else(|| "identical".into())
    } else {
        report_text(&report)
    };
    let jsonv = envelope("compare", &level);
    let jsonv = with_field(jsonv, "dim", json!(algebra.dim()));
    let jsonv = with_field(jsonv, "report", serde_json::to_value(&report)?);
    out.emit(&rendered, &jsonv)?;
    Ok(if report.all_pass() { 0 } else { 2 })
}

fn cmd_demo_t2(level_args: &LevelArgs, out: &OutputArgs) -> Result<u8> {
    let p = required_prime(level_args)?;
    let cap = match level_args.cap {
        Some(c) => c,
        None => safe_cap(p, level_args.r_max, 2)?,
    };
    let law = Arc::new(GroupLaw::t2(p, cap)?);
    let level = if level_args.unsafe_cap {
        DistLevel::new_unchecked(law, level_args.r_max)?
    } else {
        DistLevel::new(law, level_args.r_max)?
    };
    let report = demo_report(&level)?;
    let jsonv = envelope("demo-t2", &level);
    let jsonv = with_field(jsonv, "report", serde_json::to_value(&report)?);
    out.emit(&report_text(&report), &jsonv)?;
    Ok(if report.all_pass() { 0 } else { 2 })
}

// ----- the packaged demonstration ------------------------------------------------------
//
// Replays every displayed identity of the upper-triangular worked example
// against the pairing oracle: the two comultiplication series, the
// Frobenius powers of both blocks, the product closed forms in both
// orders, the commutator closed form, and the straightening recursion
// used to express the bracket in multiplicative coordinates.

fn demo_report(level: &Arc<DistLevel>) -> Result<Report> {
    let mut report = Report::new();
    law_display_checks(level, &mut report);
    frobenius_checks(level, &mut report)?;
    product_checks(level, &mut report)?;
    reverse_product_checks(level, &mut report)?;
    commutator_checks(level, &mut report)?;
    recursion_checks(level, &mut report)?;
    Ok(report)
}

fn t2_coords(level: &DistLevel) -> (usize, usize) {
    let law = level.law();
    let cx = law.coord_index("x").expect("t2 has a coordinate x");
    let cy = law.coord_index("y").expect("t2 has a coordinate y");
    (cx, cy)
}

fn idx_xy(level: &DistLevel, a: u64, b: u64) -> MultiIndex {
    let (cx, cy) = t2_coords(level);
    let mut idx = MultiIndex::zero(level.num_coords());
    idx.0[cx] = a as u32;
    idx.0[cy] = b as u32;
    idx
}

fn formula_check(name: String, statement: String, lhs: &Distribution, rhs: &Distribution) -> CheckOutcome {
    if lhs == rhs {
        CheckOutcome::pass(name).with_detail(statement)
    } else {
        CheckOutcome::fail(name, format!("computed {lhs}, formula gives {rhs}"))
    }
}

/// The two displayed comultiplication series, compared coefficient by
/// coefficient against the constructed law up to its cap.
fn law_display_checks(level: &Arc<DistLevel>, report: &mut Report) {
    use std::collections::BTreeMap;
    let law = level.law();
    let (cx, cy) = t2_coords(level);
    let n = law.num_coords();
    let p = level.modulus();
    let cap = law.cap() as u64;

    let two_leg = |lx: u64, ly: u64, rx: u64, ry: u64| -> MultiIndex {
        let mut idx = MultiIndex::zero(2 * n);
        idx.0[cx] = lx as u32;
        idx.0[cy] = ly as u32;
        idx.0[n + cx] = rx as u32;
        idx.0[n + cy] = ry as u32;
        idx
    };
    let collect = |coord: usize| -> BTreeMap<MultiIndex, u32> {
        law.comul(coord).terms().map(|(idx, c)| (idx.clone(), c)).collect()
    };

    // m(x) = x(x)1 + 1(x)x + x(x)x.
    let mut expect_x = BTreeMap::new();
    expect_x.insert(two_leg(1, 0, 0, 0), 1u32);
    expect_x.insert(two_leg(0, 0, 1, 0), 1u32);
    expect_x.insert(two_leg(1, 0, 1, 0), 1u32);
    report.push(series_check(
        "law-display-x".into(),
        "m(x) = x(x)1 + 1(x)x + x(x)x".into(),
        &collect(cx),
        &expect_x,
    ));

    // m(y) = (1+x)(x)y + y(x)(1 - x + x^2 - ...), truncated at the cap.
    let mut expect_y = BTreeMap::new();
    expect_y.insert(two_leg(0, 0, 0, 1), 1u32);
    expect_y.insert(two_leg(1, 0, 0, 1), 1u32);
    for k in 0..cap {
        let coeff = p.elt_signed(if k % 2 == 0 { 1 } else { -1 }).value();
        expect_y.insert(two_leg(0, 1, k, 0), coeff);
    }
    report.push(series_check(
        "law-display-y".into(),
        "m(y) = (1+x)(x)y + y(x)(1 - x + x^2 - ...)".into(),
        &collect(cy),
        &expect_y,
    ));
}

fn series_check(
    name: String,
    statement: String,
    actual: &std::collections::BTreeMap<MultiIndex, u32>,
    expected: &std::collections::BTreeMap<MultiIndex, u32>,
) -> CheckOutcome {
    if actual == expected {
        CheckOutcome::pass(name).with_detail(statement)
    } else {
        let diff = expected
            .iter()
            .find(|(idx, c)| actual.get(*idx) != Some(*c))
            .map(|(idx, _)| idx.clone())
            .or_else(|| {
                actual.iter().find(|(idx, _)| !expected.contains_key(*idx)).map(|(i, _)| i.clone())
            });
        CheckOutcome::fail(name, format!("series differs at exponent {diff:?}"))
    }
}

/// p-th powers of the generators: the multiplicative block is fixed, the
/// additive block is annihilated.
fn frobenius_checks(level: &Arc<DistLevel>, report: &mut Report) -> Result<()> {
    let (cx, cy) = t2_coords(level);
    for r in 0..=level.r_max() {
        let gx = level.gen_id(cx, r);
        let fx = level.frobenius(gx)?;
        let same = Distribution::generator(level, gx);
        report.push(formula_check(
            format!("frobenius x r={r}"),
            format!("{}^p = {}", level.gen_name(gx), same),
            &fx,
            &same,
        ));

        let gy = level.gen_id(cy, r);
        let fy = level.frobenius(gy)?;
        let zero = Distribution::zero(level);
        report.push(formula_check(
            format!("frobenius y r={r}"),
            format!("{}^p = 0", level.gen_name(gy)),
            &fy,
            &zero,
        ));
    }
    Ok(())
}

/// d[x^(p^r)] d[y^(p^s)]: one term for r < s, two terms for r >= s.
fn product_checks(level: &Arc<DistLevel>, report: &mut Report) -> Result<()> {
    let p = u64::from(level.modulus().get());
    for r in 0..=level.r_max() {
        for s in 0..=level.r_max() {
            let (pr, ps) = (p.pow(r), p.pow(s));
            let dx = Distribution::basis(level, idx_xy(level, pr, 0))?;
            let dy = Distribution::basis(level, idx_xy(level, 0, ps))?;
            let lhs = dx.mul(&dy)?;
            let mut rhs = Distribution::zero(level);
            rhs.add_term(&idx_xy(level, pr, ps), 1);
            if r >= s {
                rhs.add_term(&idx_xy(level, pr - ps, ps), 1);
            }
            report.push(formula_check(
                format!("product r={r} s={s}"),
                format!("{dx} {dy} = {rhs}"),
                &lhs,
                &rhs,
            ));
        }
    }
    Ok(())
}

/// d[y^(p^s)] d[x^(p^r)] = sum over 0 <= k <= p^(r-s) of
/// (-1)^k d[x^(p^r - k p^s) y^(p^s)]; a single term when r < s.
fn reverse_product_checks(level: &Arc<DistLevel>, report: &mut Report) -> Result<()> {
    let prime = level.modulus();
    let p = u64::from(prime.get());
    for r in 0..=level.r_max() {
        for s in 0..=level.r_max() {
            let (pr, ps) = (p.pow(r), p.pow(s));
            let dx = Distribution::basis(level, idx_xy(level, pr, 0))?;
            let dy = Distribution::basis(level, idx_xy(level, 0, ps))?;
            let lhs = dy.mul(&dx)?;
            let kmax = if r >= s { p.pow(r - s) } else { 0 };
            let mut rhs = Distribution::zero(level);
            for k in 0..=kmax {
                let sign = prime.elt_signed(if k % 2 == 0 { 1 } else { -1 });
                rhs.add_term(&idx_xy(level, pr - k * ps, ps), sign.value());
            }
            report.push(formula_check(
                format!("reverse-product r={r} s={s}"),
                format!("{dy} {dx} = {rhs}"),
                &lhs,
                &rhs,
            ));
        }
    }
    Ok(())
}

/// The commutator display: zero for r < s, and for r >= s
/// 2 d[x^(p^r - p^s) y^(p^s)] - sum over 2 <= k <= p^(r-s) of
/// (-1)^k d[x^(p^r - k p^s) y^(p^s)].
fn commutator_checks(level: &Arc<DistLevel>, report: &mut Report) -> Result<()> {
    let prime = level.modulus();
    let p = u64::from(prime.get());
    for r in 0..=level.r_max() {
        for s in 0..=level.r_max() {
            let (pr, ps) = (p.pow(r), p.pow(s));
            let dx = Distribution::basis(level, idx_xy(level, pr, 0))?;
            let dy = Distribution::basis(level, idx_xy(level, 0, ps))?;
            let lhs = dx.commutator(&dy)?;
            let mut rhs = Distribution::zero(level);
            if r >= s {
                rhs.add_term(&idx_xy(level, pr - ps, ps), 2);
                for k in 2..=p.pow(r - s) {
                    let sign = prime.elt_signed(if k % 2 == 0 { -1 } else { 1 });
                    rhs.add_term(&idx_xy(level, pr - k * ps, ps), sign.value());
                }
            }
            report.push(formula_check(
                format!("commutator r={r} s={s}"),
                format!("[{dx}, {dy}] = {rhs}"),
                &lhs,
                &rhs,
            ));
        }
    }
    Ok(())
}

/// The straightening recursion:
///
///   d[x^(p^r)] d[x^m y^(p^s)] = (m_r + 1) d[x^(m + p^r) y^(p^s)]
///     + m_r d[x^m y^(p^s)]
///     + sum over m <= k <= p^r - p^s of
///       C(k, k-m) C(m, m + p^r - p^s - k) d[x^k y^(p^s)],
///
/// with m_r the p-adic digit of m at position r. The identity holds for
/// m_r < p-1 with m arbitrary when r < s (the sum is then empty), and
/// for m a multiple of p^s below p^r when r >= s.
fn recursion_checks(level: &Arc<DistLevel>, report: &mut Report) -> Result<()> {
    let prime = level.modulus();
    let p = u64::from(prime.get());
    let bound = u64::from(level.bound());
    for r in 0..=level.r_max() {
        for s in 0..=level.r_max() {
            let (pr, ps) = (p.pow(r), p.pow(s));
            for m in 0..=(bound - pr) {
                let m_r = (m / pr) % p;
                if m_r >= p - 1 {
                    continue;
                }
                if r >= s && (m % ps != 0 || m >= pr) {
                    continue;
                }
                let dx = Distribution::basis(level, idx_xy(level, pr, 0))?;
                let dm = Distribution::basis(level, idx_xy(level, m, ps))?;
                let lhs = dx.mul(&dm)?;
                let mut rhs = Distribution::zero(level);
                rhs.add_term(&idx_xy(level, m + pr, ps), prime.elt(m_r + 1).value());
                rhs.add_term(&idx_xy(level, m, ps), prime.elt(m_r).value());
                if r >= s {
                    for k in m..=(pr - ps) {
                        let c = binom_mod_p(k, k - m, prime)
                            * binom_mod_p(m, m + pr - ps - k, prime);
                        rhs.add_term(&idx_xy(level, k, ps), c.value());
                    }
                }
                report.push(formula_check(
                    format!("recursion r={r} s={s} m={m}"),
                    format!("{dx} {dm} = {rhs}"),
                    &lhs,
                    &rhs,
                ));
            }
        }
    }
    Ok(())
}
