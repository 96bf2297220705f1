use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use num_rational::BigRational;

use hmf::cache::{Cache, CacheKey};
use hmf::forms::{
    add, cusp_subspace, eisenstein, monomial_basis, product, scale, CoeffNumber, Expansion,
};
use hmf::hecke::{eigenforms, is_normalized_eigenform};
use hmf::numeric::precision_bits;
use hmf::quadfield::FieldContext;
use hmf::search::{bounds_scan, classify, recheck_certificate, verify_identity, VerifyOutcome};
use hmf::specialvalues::{zeta_special, zeta_special_numeric};
use hmf::{Error, Result};

#[derive(Parser)]
#[command(name = "hmf", version, about = "Exact Hilbert modular form computations over real quadratic fields of narrow class number one")]
struct Cli {
    /// Directory for cached expansions (overrides HMF_CACHE).
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print zeta_F(1-k) exactly, or a certified decimal approximation.
    Zeta {
        #[arg(long)]
        d: i64,
        #[arg(long)]
        k: i64,
        /// Print a decimal value instead of an exact rational.
        #[arg(long)]
        numeric: bool,
    },
    /// Write the weight-k Eisenstein series to an expansion file.
    Eis {
        #[arg(long)]
        d: i64,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        bound: i64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Multiply two expansion files.
    Product {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Form a rational linear combination of expansion files.
    ///
    /// The spec string names inputs bound with --input, e.g.
    /// --spec "60*A+-1/2*B" --input A=a.json --input B=b.json.
    Combine {
        #[arg(long)]
        spec: String,
        /// NAME=FILE binding; repeat once per named input.
        #[arg(long = "input", value_name = "NAME=FILE")]
        input: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one expansion file per normalized cuspidal eigenform of weight k.
    Eigenforms {
        #[arg(long)]
        d: i64,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        bound: i64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check the multiplicative Hecke relations for a stored expansion.
    Eigencheck {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        weight: i64,
    },
    /// Classify eigenform product identities, with a certificate per exclusion.
    Search {
        #[arg(long)]
        d: i64,
        #[arg(long)]
        max_weight: i64,
        #[arg(long, default_value_t = 200)]
        bound: i64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit bound-only exclusion certificates over a discriminant range.
    Bounds {
        #[arg(long)]
        dmin: i64,
        #[arg(long)]
        dmax: i64,
        #[arg(long)]
        max_weight: i64,
        /// Write the JSON certificate list here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify or refute a single product identity given form labels.
    Verify {
        #[arg(long)]
        d: i64,
        /// Label of the first factor: E<k>, h<k>, or h<k>p.
        #[arg(long)]
        f: String,
        /// Label of the second factor.
        #[arg(long)]
        h: String,
        #[arg(long, default_value_t = 200)]
        bound: i64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cache = Cache::from_flag_or_env(cli.cache_dir.as_deref())?;
    match cli.cmd {
        Cmd::Zeta { d, k, numeric } => {
            let ctx = certified(d)?;
            if numeric {
                let enclosure = zeta_special_numeric(&ctx, k)?;
                println!("{}", enclosure.dec_pair(15).0);
            } else {
                println!("{}", zeta_special(&ctx, k)?);
            }
        }
        Cmd::Eis { d, k, bound, out } => {
            let ctx = certified(d)?;
            let form = cached_eisenstein(&cache, &ctx, k, bound)?;
            fs::write(&out, form.to_json())?;
        }
        Cmd::Product { lhs, rhs, out } => {
            let f = load_expansion(&lhs)?;
            let h = load_expansion(&rhs)?;
            fs::write(&out, product(&f, &h)?.to_json())?;
        }
        Cmd::Combine { spec, input, out } => {
            let mut inputs = HashMap::new();
            for binding in &input {
                let Some((name, path)) = binding.split_once('=') else {
                    return Err(Error::Parse(format!(
                        "input binding {binding:?} is not of the form NAME=FILE"
                    )));
                };
                inputs.insert(name.to_string(), load_expansion(Path::new(path))?);
            }
            let mut acc: Option<Expansion> = None;
            for (coeff, name) in parse_combine_spec(&spec)? {
                let Some(form) = inputs.get(&name) else {
                    return Err(Error::Parse(format!("spec names unbound input {name}")));
                };
                let term = scale(form, &CoeffNumber::from_ratio(coeff))?;
                acc = Some(match acc {
                    None => term,
                    Some(sum) => add(&sum, &term)?,
                });
            }
            let Some(sum) = acc else {
                return Err(Error::Parse("combine spec has no terms".into()));
            };
            fs::write(&out, sum.to_json())?;
        }
        Cmd::Eigenforms { d, k, bound, out_dir } => {
            let ctx = certified(d)?;
            let forms = cached_eigenforms(&cache, &ctx, k, bound)?;
            fs::create_dir_all(&out_dir)?;
            for (label, form) in &forms {
                fs::write(out_dir.join(format!("{label}.json")), form.to_json())?;
            }
        }
        Cmd::Eigencheck { form, weight } => {
            let f = load_expansion(&form)?;
            if f.weight != weight {
                return Err(Error::WeightMismatch(f.weight, weight));
            }
            match is_normalized_eigenform(&f)? {
                None => println!("pass"),
                Some(witness) => println!("fail: {witness}"),
            }
        }
        Cmd::Search { d, max_weight, bound, out } => {
            let ctx = certified(d)?;
            let report = classify(&ctx, max_weight, bound, precision_bits())?;
            let json = serde_json::to_string(&report)
                .map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
            emit(out.as_deref(), &json)?;
        }
        Cmd::Bounds { dmin, dmax, max_weight, out } => {
            let certs = bounds_scan(dmin, dmax, max_weight, precision_bits())?;
            for cert in &certs {
                recheck_certificate(cert, 400)?;
            }
            let json = serde_json::to_string(&serde_json::json!({ "certificates": certs }))
                .map_err(|e| Error::Internal(format!("certificate serialization: {e}")))?;
            emit(out.as_deref(), &json)?;
        }
        Cmd::Verify { d, f, h, bound } => {
            let ctx = certified(d)?;
            let fe = resolve_label(&cache, &ctx, &f, bound)?;
            let he = resolve_label(&cache, &ctx, &h, bound)?;
            let value = match verify_identity(&fe, &he)? {
                VerifyOutcome::Identity { g, scalar } => serde_json::json!({
                    "identity": {
                        "bound": bound,
                        "f": f,
                        "g": g,
                        "h": h,
                        "scalar": scalar.to_string(),
                    }
                }),
                VerifyOutcome::NotEigenform { witness, lhs, rhs } => serde_json::json!({
                    "refuted": {
                        "f": f,
                        "h": h,
                        "lhs": lhs.to_string(),
                        "rhs": rhs.to_string(),
                        "witness": witness.to_string(),
                    }
                }),
            };
            println!("{value}");
        }
    }
    Ok(())
}

fn certified(d: i64) -> Result<Arc<FieldContext>> {
    Ok(Arc::new(FieldContext::certified(d, 50)?))
}

fn load_expansion(path: &Path) -> Result<Expansion> {
    Expansion::from_json(&fs::read_to_string(path)?)
}

fn emit(out: Option<&Path>, json: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cached_eisenstein(
    cache: &Option<Cache>,
    ctx: &Arc<FieldContext>,
    k: i64,
    bound: i64,
) -> Result<Expansion> {
    let key = CacheKey::eis(ctx.d, k, bound);
    if let Some(c) = cache {
        match c.get(&key) {
            Ok(Some(form)) => return Ok(form),
            Ok(None) => {}
            Err(Error::CacheCorruption(msg)) => {
                eprintln!("warning: {msg}; recomputing");
            }
            Err(e) => return Err(e),
        }
    }
    let form = eisenstein(ctx, k, bound)?;
    if let Some(c) = cache {
        c.put(&key, &form)?;
    }
    Ok(form)
}

/// Labels are decided by the cusp dimension alone so that cache hits skip the
/// eigenform computation entirely.
fn cached_eigenforms(
    cache: &Option<Cache>,
    ctx: &Arc<FieldContext>,
    k: i64,
    bound: i64,
) -> Result<Vec<(String, Expansion)>> {
    let dim = cusp_subspace(&monomial_basis(ctx, k, 30)?)?.len();
    let labels: Vec<String> = match dim {
        0 => return Ok(Vec::new()),
        1 => vec![format!("h{k}")],
        2 => vec![format!("h{k}"), format!("h{k}p")],
        _ => return Err(Error::UnsupportedDimension { weight: k, dim }),
    };
    if let Some(c) = cache {
        let mut hits = Vec::new();
        for label in &labels {
            match c.get(&CacheKey::eigenform(ctx.d, k, label, bound)) {
                Ok(Some(form)) => hits.push((label.clone(), form)),
                Ok(None) => {
                    hits.clear();
                    break;
                }
                Err(Error::CacheCorruption(msg)) => {
                    eprintln!("warning: {msg}; recomputing");
                    hits.clear();
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if hits.len() == labels.len() {
            return Ok(hits);
        }
    }
    let records = eigenforms(ctx, k, bound)?;
    let mut out = Vec::new();
    for record in records {
        if let Some(c) = cache {
            c.put(&CacheKey::eigenform(ctx.d, k, &record.label, bound), &record.form)?;
        }
        out.push((record.label, record.form));
    }
    Ok(out)
}

fn resolve_label(
    cache: &Option<Cache>,
    ctx: &Arc<FieldContext>,
    label: &str,
    bound: i64,
) -> Result<Expansion> {
    if let Some(k) = label.strip_prefix('E').and_then(|s| s.parse::<i64>().ok()) {
        return cached_eisenstein(cache, ctx, k, bound);
    }
    if let Some(rest) = label.strip_prefix('h') {
        let core = rest.strip_suffix('p').unwrap_or(rest);
        if let Ok(k) = core.parse::<i64>() {
            let forms = cached_eigenforms(cache, ctx, k, bound)?;
            for (l, form) in forms {
                if l == label {
                    return Ok(form);
                }
            }
            return Err(Error::Parse(format!(
                "no eigenform labelled {label} at weight {k}"
            )));
        }
    }
    Err(Error::Parse(format!(
        "unknown form label {label}; expected E<k>, h<k>, or h<k>p"
    )))
}

/// Grammar: term ("+"|"-") term ..., term = [-]RATIONAL "*" NAME, where
/// RATIONAL is p or p/q in digits and NAME is alphanumeric. "+-" reads as
/// a separator followed by a negated coefficient.
fn parse_combine_spec(spec: &str) -> Result<Vec<(BigRational, String)>> {
    let bad = |msg: &str| Error::Parse(format!("combine spec: {msg}"));
    let chars: Vec<char> = spec.chars().collect();
    let mut terms = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut negate = false;
        if !terms.is_empty() {
            match chars[i] {
                '+' => i += 1,
                '-' => {
                    negate = true;
                    i += 1;
                }
                _ => return Err(bad("expected + or - between terms")),
            }
        }
        if i < chars.len() && chars[i] == '-' {
            negate = !negate;
            i += 1;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '/') {
            i += 1;
        }
        if start == i {
            return Err(bad("expected a rational coefficient"));
        }
        let text: String = chars[start..i].iter().collect();
        let coeff: BigRational = text
            .parse()
            .map_err(|_| bad(&format!("bad rational {text:?}")))?;
        if i >= chars.len() || chars[i] != '*' {
            return Err(bad("expected * after the coefficient"));
        }
        i += 1;
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
            i += 1;
        }
        if start == i {
            return Err(bad("expected an input name"));
        }
        let name: String = chars[start..i].iter().collect();
        terms.push((if negate { -coeff } else { coeff }, name));
    }
    if terms.is_empty() {
        return Err(bad("no terms"));
    }
    Ok(terms)
}
