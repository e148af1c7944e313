use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use quadcert::arith::Effort;
use quadcert::cfrac::{convergents, expand_sqrt, fundamental_unit};
use quadcert::escalation::{lower_bound_search_with, named_queue, SearchLimits};
use quadcert::family::{
    certify_non_universality, scan_t, verify_instance, RangeMode, SearchFilters,
};
use quadcert::quadfield::{
    check_prop24, make_field_with, small_norm_generators, Certificate, Cond4Mode, FieldContext, QuadInt,
};
use quadcert::sieve::{count_simultaneous, euler_constant, SieveSpec};
use quadcert::Error;

#[derive(Parser)]
#[command(name = "quadcert", version, about = "Certificates about universal quadratic forms over real quadratic fields")]
struct Cli {
    /// Pollard rho iterations per attempt when deciding squarefreeness.
    #[arg(long, global = true)]
    effort: Option<usize>,
    #[arg(long, global = true)]
    json_pretty: bool,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    Direct,
    Prop11,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Brute,
    Condition5,
}

#[derive(Subcommand)]
enum Cmd {
    /// Continued fraction of sqrt(D), its fundamental unit and convergents.
    Cfrac {
        #[arg(long)]
        d: String,
        /// Number of convergents to list; one full period by default.
        #[arg(long, alias = "convergents")]
        n: Option<usize>,
    },
    /// Scan t for fields sqrt(D) = [k; u, ..., u, 2k].
    Family {
        #[arg(long)]
        u: String,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        t_min: String,
        #[arg(long)]
        t_max: String,
        /// Keep only D = 2 mod 4.
        #[arg(long)]
        mod4: bool,
        /// Attach a certificate to every surviving t.
        #[arg(long)]
        certify: bool,
        #[arg(long, value_enum, default_value_t = RangeArg::Direct)]
        range: RangeArg,
    },
    /// Count n <= X with f(n) and all g_j(n) squarefree.
    Sieve {
        /// Coefficients a,b,c of a x^2 + b x + c.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        /// Coefficients k,r of k x + r; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        g: Vec<String>,
        #[arg(long)]
        x: u64,
        /// Prime cutoff for the Euler product enclosure.
        #[arg(long)]
        euler: Option<u64>,
    },
    /// Lower bound on the rank of universal classical forms by escalation.
    Escalate {
        #[arg(long)]
        d: String,
        /// Built-in queue name or a JSON file with [x, y] pairs in the basis {1, w}.
        #[arg(long)]
        queue: String,
        #[arg(long, default_value_t = 8)]
        max_depth: usize,
        #[arg(long)]
        emit_tree: bool,
    },
    /// Check a candidate set, re-verify a certificate, or chain search and certification.
    Certify {
        #[arg(long)]
        d: Option<String>,
        /// JSON file with [x, y] pairs in the basis {1, w}; the first must be 1.
        #[arg(long)]
        elements: Option<PathBuf>,
        /// Use one totally positive generator per squarefree norm up to this bound; norm 1 gives 1.
        #[arg(long)]
        generators: Option<u64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Brute)]
        mode: ModeArg,
        /// Certificate JSON to re-check.
        #[arg(long)]
        verify: Option<PathBuf>,
        /// Search the family, certify the first hits and print a summary table.
        #[arg(long)]
        seed_list: bool,
        #[arg(long)]
        u: Vec<String>,
        #[arg(long)]
        l: Vec<usize>,
        #[arg(long, default_value = "1")]
        t_min: String,
        #[arg(long, default_value = "50")]
        t_max: String,
        /// Valid certificates wanted per (u, l); rejected hits before them are listed too.
        #[arg(long, default_value_t = 1)]
        per_pair: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Verification(Value),
    Input(String),
    Unresolved(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnresolvedFactorization(_) | Error::SquarefreeUnresolved(_) => Failure::Unresolved(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Run = std::result::Result<Value, Failure>;

fn big(s: &str, name: &str) -> std::result::Result<BigInt, Failure> {
    BigInt::from_str(s.trim()).map_err(|_| Failure::Input(format!("{name}: not an integer: {s}")))
}

/// Small integers as JSON numbers, larger ones as decimal strings.
fn num(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(n) => json!(n),
        None => json!(v.to_string()),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn parse_elem(field: &FieldContext, v: &Value) -> std::result::Result<QuadInt, Failure> {
    let coord = |c: &Value| -> std::result::Result<BigInt, Failure> {
        match c {
            Value::String(s) => big(s, "element"),
            Value::Number(n) => big(&n.to_string(), "element"),
            _ => Err(Failure::Input(format!("bad coordinate {c}"))),
        }
    };
    match v.as_array().map(|a| a.as_slice()) {
        Some([x, y]) => Ok(field.elem(coord(x)?, coord(y)?)),
        _ => Err(Failure::Input(format!("expected [x, y], got {v}"))),
    }
}

fn read_json(path: &PathBuf) -> std::result::Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_elems(field: &FieldContext, path: &PathBuf) -> std::result::Result<Vec<QuadInt>, Failure> {
    let v = read_json(path)?;
    let arr = v.as_array().ok_or_else(|| Failure::Input("expected a JSON array".into()))?;
    arr.iter().map(|e| parse_elem(field, e)).collect()
}

fn run_cfrac(d: &str, n: Option<usize>) -> Run {
    let d = big(d, "d")?;
    let exp = expand_sqrt(&d)?;
    let mut out = json!({
        "D": d.to_string(),
        "a0": num(&exp.a0),
        "period": exp.period.iter().map(num).collect::<Vec<_>>(),
        "r": exp.len(),
        "symmetric": exp.has_symmetric_period(),
    });
    let field = quadcert::quadfield::field_unchecked(&d);
    let (eps, norm) = fundamental_unit(&field);
    out["unit"] = json!({ "element": to_value(&eps), "norm": norm });
    out["convergents"] = to_value(&convergents(&exp, n.unwrap_or(exp.len())));
    Ok(out)
}

fn family_record(inst: &quadcert::family::FamilyInstance) -> Value {
    let mut v = to_value(inst);
    v["t"] = num(&inst.t);
    v["l"] = json!(inst.l);
    v["verified"] = json!(verify_instance(inst).is_ok());
    v
}

#[allow(clippy::too_many_arguments)]
fn run_family(
    u: &str,
    l: usize,
    t_min: &str,
    t_max: &str,
    mod4: bool,
    certify: bool,
    range: RangeArg,
    effort: Effort,
) -> Run {
    let u = big(u, "u")?;
    let (t0, t1) = (big(t_min, "t-min")?, big(t_max, "t-max")?);
    let filters = SearchFilters { mod4, effort };
    let (hits, _) = scan_t(&u, l, &t0, &t1, &filters)?;
    let mode = match range {
        RangeArg::Direct => RangeMode::Direct,
        RangeArg::Prop11 => RangeMode::Prop11,
    };
    let mut out = Vec::new();
    for h in hits {
        let mut rec = family_record(&h.instance);
        rec["evidence"] = to_value(&h.evidence);
        if certify {
            rec["certificate"] = to_value(&certify_non_universality(&h.instance, mode)?);
        }
        out.push(rec);
    }
    Ok(Value::Array(out))
}

fn parse_ints(s: &str, n: usize, name: &str) -> std::result::Result<Vec<i64>, Failure> {
    let v: Vec<i64> = s
        .split(',')
        .map(|p| p.trim().parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::Input(format!("{name}: expected {n} comma-separated integers")))?;
    if v.len() != n {
        return Err(Failure::Input(format!("{name}: expected {n} comma-separated integers")));
    }
    Ok(v)
}

fn run_sieve(f: &str, g: &[String], x: u64, euler: Option<u64>, effort: Effort) -> Run {
    let fc = parse_ints(f, 3, "f")?;
    let gs = g
        .iter()
        .map(|s| parse_ints(s, 2, "g").map(|v| (v[0], v[1])))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let spec = SieveSpec::new((fc[0], fc[1], fc[2]), gs)?;
    let count = count_simultaneous(&spec, x, &effort)?;
    let enclosure = match euler {
        Some(p) => to_value(&euler_constant(&spec, p)?),
        None => Value::Null,
    };
    Ok(json!({
        "count": count,
        "X": x,
        "ratio": count as f64 / x as f64,
        "euler_enclosure": enclosure,
        "flagged": spec.flagged,
    }))
}

fn run_escalate(d: &str, queue: &str, max_depth: usize, emit_tree: bool, effort: Effort) -> Run {
    let field = make_field_with(&big(d, "d")?, &effort)?;
    let q = match named_queue(queue, &field) {
        Ok(q) => q,
        Err(_) if std::path::Path::new(queue).exists() => read_elems(&field, &PathBuf::from(queue))?,
        Err(e) => return Err(e.into()),
    };
    let limits = SearchLimits {
        keep_tree: emit_tree,
        ..Default::default()
    };
    Ok(to_value(&lower_bound_search_with(&field, &q, max_depth, &limits)?))
}

fn cond_mode(m: ModeArg) -> Cond4Mode {
    match m {
        ModeArg::Brute => Cond4Mode::Brute,
        ModeArg::Condition5 => Cond4Mode::Condition5,
    }
}

fn certificate_result(c: &Certificate) -> Run {
    let v = to_value(c);
    if c.valid {
        Ok(v)
    } else {
        Err(Failure::Verification(v))
    }
}

fn run_verify(path: &PathBuf, effort: Effort) -> Run {
    let v = read_json(path)?;
    let d = v["D"]
        .as_str()
        .ok_or_else(|| Failure::Input("certificate has no D".into()))?;
    let field = make_field_with(&big(d, "D")?, &effort)?;
    let elems = v["elements"]
        .as_array()
        .ok_or_else(|| Failure::Input("certificate has no elements".into()))?
        .iter()
        .map(|e| parse_elem(&field, e))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mode = match v["mode"].as_str() {
        Some("brute") => Cond4Mode::Brute,
        Some("condition5") => Cond4Mode::Condition5,
        _ => return Err(Failure::Input("certificate has no valid mode".into())),
    };
    let again = check_prop24(&field, &elems, mode)?;
    let recorded = v["conditions"].as_array().cloned().unwrap_or_default();
    let fresh = to_value(&again.checks);
    let fresh = fresh.as_array().expect("array");
    let mut mismatches = Vec::new();
    if recorded.len() != fresh.len() {
        mismatches.push(json!(format!("{} recorded checks, {} recomputed", recorded.len(), fresh.len())));
    }
    for (a, b) in recorded.iter().zip(fresh) {
        if a["kind"] != b["kind"] || a["verdict"] != b["verdict"] || a.get("index") != b.get("index") || a.get("pair") != b.get("pair") {
            mismatches.push(json!({ "recorded": a, "recomputed": b }));
        }
    }
    if v["valid"].as_bool() != Some(again.valid) {
        mismatches.push(json!("validity flag differs"));
    }
    if v.get("M") != Some(&to_value(&again.conclusion_m)) {
        mismatches.push(json!("M differs"));
    }
    let ok = mismatches.is_empty() && again.valid;
    let out = json!({
        "D": d,
        "verified": ok,
        "valid": again.valid,
        "M": again.conclusion_m,
        "mismatches": mismatches,
    });
    if ok {
        Ok(out)
    } else {
        Err(Failure::Verification(out))
    }
}

fn run_seed_list(us: &[String], ls: &[usize], t_min: &str, t_max: &str, per_pair: usize, effort: Effort) -> Run {
    if us.is_empty() || ls.is_empty() {
        return Err(Failure::Input("--seed-list needs at least one --u and one --l".into()));
    }
    let (t0, t1) = (big(t_min, "t-min")?, big(t_max, "t-max")?);
    let filters = SearchFilters { mod4: false, effort };
    let mut rows = Vec::new();
    for u in us {
        let u = big(u, "u")?;
        for &l in ls {
            let (hits, _) = scan_t(&u, l, &t0, &t1, &filters)?;
            let mut valid = 0;
            for h in &hits {
                if valid >= per_pair {
                    break;
                }
                let c = certify_non_universality(&h.instance, RangeMode::Direct)?;
                valid += usize::from(c.valid);
                rows.push(json!({
                    "u": num(&u),
                    "l": l,
                    "t": num(&h.instance.t),
                    "D": h.instance.d.to_string(),
                    "M": c.conclusion_m,
                    "valid": c.valid,
                }));
            }
        }
    }
    Ok(Value::Array(rows))
}

fn run(cli: &Cli) -> Run {
    let effort = cli.effort.map(Effort::with_rho_iterations).unwrap_or_default();
    match &cli.cmd {
        Cmd::Cfrac { d, n } => run_cfrac(d, *n),
        Cmd::Family {
            u,
            l,
            t_min,
            t_max,
            mod4,
            certify,
            range,
        } => run_family(u, *l, t_min, t_max, *mod4, *certify, *range, effort),
        Cmd::Sieve { f, g, x, euler } => run_sieve(f, g, *x, *euler, effort),
        Cmd::Escalate {
            d,
            queue,
            max_depth,
            emit_tree,
        } => run_escalate(d, queue, *max_depth, *emit_tree, effort),
        Cmd::Certify {
            d,
            elements,
            generators,
            mode,
            verify,
            seed_list,
            u,
            l,
            t_min,
            t_max,
            per_pair,
        } => {
            if let Some(p) = verify {
                return run_verify(p, effort);
            }
            if *seed_list {
                return run_seed_list(u, l, t_min, t_max, *per_pair, effort);
            }
            let d = d.as_ref().ok_or_else(|| Failure::Input("--d is required".into()))?;
            let field = make_field_with(&big(d, "d")?, &effort)?;
            let elems = match (elements, generators) {
                (Some(p), None) => read_elems(&field, p)?,
                (None, Some(n)) => small_norm_generators(&field, *n)?,
                _ => return Err(Failure::Input("give exactly one of --elements and --generators".into())),
            };
            certificate_result(&check_prop24(&field, &elems, cond_mode(*mode))?)
        }
    }
}

fn emit(cli: &Cli, v: &Value) -> std::io::Result<()> {
    let mut text = if cli.json_pretty {
        serde_json::to_string_pretty(v)
    } else {
        serde_json::to_string(v)
    }
    .expect("serializable");
    text.push('\n');
    match &cli.output {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (value, code) = match run(&cli) {
        Ok(v) => (Some(v), 0),
        Err(Failure::Verification(v)) => (Some(v), 1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            (None, 2)
        }
        Err(Failure::Unresolved(msg)) => {
            eprintln!("error: {msg}");
            (None, 3)
        }
    };
    if let Some(v) = value {
        if let Err(e) = emit(&cli, &v) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
