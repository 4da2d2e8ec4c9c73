use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use formality_core::dgla::{Dgla, ReducedQuadratic};
use formality_core::exactla::format_rational;
use formality_core::freelie::{sigma_certificate, FreeError};
use formality_core::liealg::{builtin, cartan_3_regular, from_json, BilinearForm, LieAlgebra, LieError};
use formality_core::linfty::{
    check_linfty, check_residuals, Cutoff, DglaPackage, GradedBasis, LinftyError, TaylorMap, Transfer,
};
use formality_core::obstruction::{c3_certificate, ce_setup, verify_certificate, ObstructionError};
use formality_core::polyvec::{Bidegree, CeComplex, PolyError};
use formality_core::SparseVec;

#[derive(Parser, Debug)]
#[command(name = "formality", version, about = "Exact L∞ formality checks for Lie algebras and free algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Built-in algebra: abelian[:N], heisenberg3, so3, affine[:M].
    #[arg(long, global = true, conflicts_with = "input")]
    builtin: Option<String>,
    /// Algebra in the JSON bracket format.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Polynomial-degree cutoff of the CE complex.
    #[arg(long, global = true, default_value_t = 6)]
    dmax: usize,
    #[arg(long, global = true, default_value_t = 4)]
    max_arity: usize,
    #[arg(long, global = true, default_value_t = 5)]
    max_weight: u32,
    /// Tensor-length cutoff for the free algebra.
    #[arg(long, global = true, default_value_t = 4)]
    tmax: usize,
    /// Number of generators of the free algebra.
    #[arg(long, global = true, default_value_t = 2)]
    dim_n: usize,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the Jacobi identity.
    Jacobi,
    /// Killing form, invariant forms and Cartan-3-regularity.
    QuadraticInfo,
    /// Cohomology dimensions per (form degree, polynomial degree).
    Cohomology,
    /// Transferred L∞ structure on cohomology with residual checks.
    Transfer,
    /// Characteristic 3-class certificate.
    C3,
    /// The σ cocycle of the free algebra and its non-exactness.
    FreeSigma,
    /// Re-check a certificate produced by `c3` or `free-sigma`.
    Verify { certificate: PathBuf },
}

/// Exit 1 for bad input, 2 for a failed internal identity.
enum Fail {
    Input(String),
    Invariant(String),
}

impl From<LieError> for Fail {
    fn from(e: LieError) -> Self {
        Fail::Input(e.to_string())
    }
}

impl From<PolyError> for Fail {
    fn from(e: PolyError) -> Self {
        match e {
            PolyError::Lie(l) => l.into(),
            other => Fail::Invariant(other.to_string()),
        }
    }
}

impl From<LinftyError> for Fail {
    fn from(e: LinftyError) -> Self {
        Fail::Invariant(e.to_string())
    }
}

impl From<ObstructionError> for Fail {
    fn from(e: ObstructionError) -> Self {
        match e {
            ObstructionError::Lie(l) => l.into(),
            other => Fail::Invariant(other.to_string()),
        }
    }
}

impl From<FreeError> for Fail {
    fn from(e: FreeError) -> Self {
        match e {
            FreeError::Truncation { .. } | FreeError::TooFewGenerators(_) => Fail::Input(e.to_string()),
            other => Fail::Invariant(other.to_string()),
        }
    }
}

impl From<formality_core::dgla::DglaError> for Fail {
    fn from(e: formality_core::dgla::DglaError) -> Self {
        Fail::Invariant(e.to_string())
    }
}

struct Loaded {
    name: String,
    l: LieAlgebra,
    kappa: Option<BilinearForm>,
    kappa_source: &'static str,
}

fn load(cli: &Cli) -> Result<Loaded, Fail> {
    let loaded = match (&cli.builtin, &cli.input) {
        (Some(name), None) => {
            let l = builtin(name, 2)?;
            let kappa = l.default_form(name);
            Loaded { name: name.clone(), l, kappa, kappa_source: "default" }
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
            let (l, kappa) = from_json(&text)?;
            Loaded { name: path.display().to_string(), l, kappa, kappa_source: "input" }
        }
        _ => return Err(Fail::Input("give exactly one of --builtin NAME or --input FILE".into())),
    };
    Ok(loaded)
}

fn load_lie(cli: &Cli) -> Result<Loaded, Fail> {
    let a = load(cli)?;
    a.l.check_jacobi()?;
    Ok(a)
}

fn check_cutoffs(cli: &Cli) -> Result<(), Fail> {
    if cli.dmax == 0 || cli.max_arity == 0 || cli.max_weight == 0 || cli.tmax == 0 {
        return Err(Fail::Input("cutoffs must be positive".into()));
    }
    Ok(())
}

fn form_json(k: &BilinearForm) -> Value {
    json!(k.to_strings())
}

/// κ used for quadratic questions: the loaded or default form, else the
/// Killing form or an invariant basis form when nondegenerate.
fn quadratic_form(a: &Loaded) -> Option<(BilinearForm, &'static str)> {
    if let Some(k) = &a.kappa {
        if k.check_quadratic(&a.l).is_ok() {
            return Some((k.clone(), a.kappa_source));
        }
    }
    let killing = a.l.killing_form();
    if killing.is_nondegenerate() {
        return Some((killing, "killing"));
    }
    a.l.invariant_forms().into_iter().find(|f| f.is_nondegenerate()).map(|f| (f, "invariant"))
}

fn cmd_jacobi(a: &Loaded) -> (Value, String) {
    let res = a.l.check_jacobi();
    let ok = res.is_ok();
    let v = json!({"algebra": a.name, "dim": a.l.dim(), "jacobi": if ok { "pass" } else { "fail" }});
    let text = match res {
        Ok(()) => format!("{}: Jacobi identity holds (dim {})", a.name, a.l.dim()),
        Err(e) => format!("{}: {e}", a.name),
    };
    (v, text)
}

fn cmd_quadratic_info(a: &Loaded) -> Result<(Value, String), Fail> {
    let killing = a.l.killing_form();
    let form = quadratic_form(a);
    let regular = match &form {
        Some((k, _)) => {
            Some(!matches!(cartan_3_regular(&a.l, k)?, formality_core::liealg::DerivationSearch::Witness(_)))
        }
        None => None,
    };
    let v = json!({
        "algebra": a.name,
        "dim": a.l.dim(),
        "jacobi": "pass",
        "abelian": a.l.is_abelian(),
        "killing": form_json(&killing),
        "killing_nondegenerate": killing.is_nondegenerate(),
        "invariant_forms": a.l.invariant_forms().len(),
        "form": form.as_ref().map(|(k, src)| json!({"source": src, "matrix": form_json(k)})),
        "quadratic": form.is_some(),
        "cartan3regular": regular.map(|r| if r { "yes" } else { "no" }),
    });
    let mut t = String::new();
    let _ = writeln!(t, "{} (dim {}): Jacobi holds", a.name, a.l.dim());
    let _ = writeln!(t, "Killing form: {}", rows_display(&killing.to_strings()));
    let _ = writeln!(t, "invariant symmetric forms: {}", a.l.invariant_forms().len());
    match (&form, regular) {
        (Some((k, src)), Some(r)) => {
            let _ = writeln!(t, "quadratic with {src} form {}", rows_display(&k.to_strings()));
            let _ = write!(t, "Cartan-3-regular: {}", if r { "yes" } else { "no" });
        }
        _ => {
            let _ = write!(t, "no nondegenerate invariant form found; Cartan-3-regularity not applicable");
        }
    }
    Ok((v, t))
}

fn rows_display(rows: &[Vec<String>]) -> String {
    format!("[{}]", rows.iter().map(|r| r.join(" ")).collect::<Vec<_>>().join("; "))
}

fn cmd_cohomology(a: &Loaded, dmax: usize) -> Result<(Value, String), Fail> {
    let cx = CeComplex::new(a.l.clone(), dmax)?;
    let table = cx.cohomology_table()?;
    let n = a.l.dim();
    let rows: Vec<Vec<usize>> = (0..=dmax).map(|m| (0..=n).map(|k| table[&Bidegree::new(k, m)]).collect()).collect();
    let v = json!({
        "algebra": a.name,
        "dmax": dmax,
        "rows": rows.iter().enumerate().map(|(m, r)| json!({"poly": m, "dims": r})).collect::<Vec<_>>(),
    });
    let mut t = format!("H^(k,m) of {} (rows m = polynomial degree, columns k = form degree)\n", a.name);
    let _ = writeln!(t, "m\\k {}", (0..=n).map(|k| format!("{k:>4}")).collect::<String>());
    for (m, r) in rows.iter().enumerate() {
        let _ = writeln!(t, "{m:>3} {}", r.iter().map(|d| format!("{d:>4}")).collect::<String>());
    }
    Ok((v, t.trim_end().to_string()))
}

fn vec_json(v: &SparseVec, key: impl Fn(usize) -> String) -> Value {
    Value::Object(v.iter().map(|(k, c)| (key(*k), Value::String(format_rational(c)))).collect())
}

fn vec_display(v: &SparseVec, key: impl Fn(usize) -> String) -> String {
    v.iter().map(|(k, c)| format!("{}·{}", format_rational(c), key(*k))).collect::<Vec<_>>().join(" + ")
}

fn transfer_report(
    g: &dyn Dgla,
    c: &formality_core::DglaContraction,
    model: &str,
    name: &str,
    cutoff: Cutoff,
) -> Result<(Value, String), Fail> {
    let u = GradedBasis::from_contraction(c);
    let v = GradedBasis::from_dgla(g);
    let (b, br, full) = (DglaPackage::differential(g), DglaPackage::bracket(g), DglaPackage::full(g));
    let t = Transfer::new(u.clone(), v.clone(), c, &b, &br)?;
    let d = TaylorMap::tabulate(&t.d_map(), &u, cutoff)?;
    check_linfty(&d, &u, cutoff)?;
    check_residuals(&t.phi_map(), &full, &d, &u, &v, cutoff)?;
    let key = |y: usize| u.key(y).to_string();
    let mut by_arity = serde_json::Map::new();
    let mut text = format!(
        "transfer for {name} ({model} model, arity ≤ {}, weight ≤ {})\n",
        cutoff.arity,
        cutoff.weight.map_or("∞".into(), |w| w.to_string())
    );
    for r in 1..=cutoff.arity {
        let entries: Vec<Value> = d
            .entries()
            .filter(|(w, val)| w.len() == r && !val.is_empty())
            .map(|(w, val)| {
                json!({"args": w.letters().iter().map(|&y| key(y)).collect::<Vec<_>>(), "value": vec_json(val, key)})
            })
            .collect();
        let _ = writeln!(
            text,
            "d{r}: {}",
            if entries.is_empty() { "0".to_string() } else { format!("{} nonzero values", entries.len()) }
        );
        for (w, val) in d.entries().filter(|(w, val)| w.len() == r && !val.is_empty()) {
            let _ = writeln!(
                text,
                "  d{r}({}) = {}",
                w.letters().iter().map(|&y| key(y)).collect::<Vec<_>>().join(", "),
                vec_display(val, key)
            );
        }
        by_arity.insert(r.to_string(), Value::Array(entries));
    }
    let _ = writeln!(text, "square zero: ok");
    let _ = write!(text, "residuals P1..P{}: vanish", cutoff.arity);
    let value = json!({
        "algebra": name,
        "model": model,
        "max_arity": cutoff.arity,
        "max_weight": cutoff.weight,
        "d": by_arity,
        "square_zero": true,
        "residuals": "vanish",
    });
    Ok((value, text))
}

fn cmd_transfer(a: &Loaded, cli: &Cli) -> Result<(Value, String), Fail> {
    match quadratic_form(a).filter(|_| !a.l.is_abelian()) {
        Some((k, _)) => {
            let g = ReducedQuadratic::new(&a.l, &k, cli.max_weight)?;
            let c = g.contraction();
            transfer_report(&g, &c, "reduced K[q]{1,E,π,Ω}", &a.name, Cutoff::new(cli.max_arity, cli.max_weight))
        }
        None => {
            let (g, c) = ce_setup(&a.l, a.kappa.as_ref(), cli.dmax)?;
            let w = cli.max_weight.min(cli.dmax as u32);
            transfer_report(&g, &c, "full CE", &a.name, Cutoff::new(cli.max_arity, w))
        }
    }
}

fn cmd_c3(a: &Loaded, dmax: usize) -> Result<(Value, String), Fail> {
    let kappa = quadratic_form(a).map(|(k, _)| k);
    let cert = c3_certificate(&a.l, kappa.as_ref(), dmax)?;
    let r = &cert["system_rank"];
    let text = format!(
        "c3 for {} at Dmax={dmax}: {}\n{} probes, {} unknowns, {} equations, rank {} (augmented {})\nderivation scaling check: {}",
        a.name,
        cert["verdict"].as_str().unwrap_or_default(),
        cert["probe_count"],
        r["unknowns"],
        r["equations"],
        r["rank"],
        r["augmented_rank"],
        cert["derivation_scaling_check"].as_str().unwrap_or("n/a"),
    );
    Ok((cert, text))
}

fn cmd_free_sigma(n: usize, tmax: usize) -> Result<(Value, String), Fail> {
    if n < 2 {
        let v = json!({
            "N": n,
            "Tmax": tmax,
            "note": "formal: for N ≤ 1 the algebra is commutative, b′ = 0, and cohomology is the whole reduced complex",
        });
        return Ok((v, format!("N = {n}: formal (commutative tensor algebra, no inner derivations)")));
    }
    let v = sigma_certificate(n, tmax)?;
    let text = format!(
        "free algebra N={n}, Tmax={tmax}\nσ(ε1, ε2, e1e2e2⊗ε2) = {}\nδθ = σ: {} (rank {}, augmented rank {}, {} unknowns, {} equations)",
        v["sigma_probe"].as_str().unwrap_or_default(),
        v["exactness"].as_str().unwrap_or_default(),
        v["rank"],
        v["augmented_rank"],
        v["unknowns"],
        v["equations"],
    );
    Ok((v, text))
}

fn cmd_verify(path: &PathBuf) -> Result<(Value, String), Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
    let cert: Value = serde_json::from_str(&text).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
    if cert.get("exactness").is_some() {
        let n = cert["N"].as_u64().ok_or_else(|| Fail::Input("missing N".into()))? as usize;
        let tmax = cert["Tmax"].as_u64().ok_or_else(|| Fail::Input("missing Tmax".into()))? as usize;
        let again = sigma_certificate(n, tmax)?;
        if again != cert {
            return Err(Fail::Invariant("free-sigma certificate differs from recomputation".into()));
        }
        let verdict = again["exactness"].as_str().unwrap_or_default().to_string();
        return Ok((
            json!({"kind": "free-sigma", "verified": true, "verdict": verdict}),
            format!("verified: {verdict}"),
        ));
    }
    if cert.get("algebra").is_none() {
        return Err(Fail::Input("not a certificate".into()));
    }
    let verdict = verify_certificate(&cert)?;
    Ok((json!({"kind": "c3", "verified": true, "verdict": verdict}), format!("verified: {verdict}")))
}

fn run(cli: &Cli) -> Result<(Value, String), Fail> {
    check_cutoffs(cli)?;
    match &cli.command {
        Command::Jacobi => {
            let a = load(cli)?;
            let (v, t) = cmd_jacobi(&a);
            if v["jacobi"] == "fail" {
                return Err(Fail::Input(t));
            }
            Ok((v, t))
        }
        Command::QuadraticInfo => cmd_quadratic_info(&load_lie(cli)?),
        Command::Cohomology => cmd_cohomology(&load_lie(cli)?, cli.dmax),
        Command::Transfer => cmd_transfer(&load_lie(cli)?, cli),
        Command::C3 => cmd_c3(&load_lie(cli)?, cli.dmax),
        Command::FreeSigma => cmd_free_sigma(cli.dim_n, cli.tmax),
        Command::Verify { certificate } => cmd_verify(certificate),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((v, t)) => {
            let out = if cli.json { serde_json::to_string_pretty(&v).expect("serializable") } else { t };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{out}");
            ExitCode::SUCCESS
        }
        Err(Fail::Input(m)) => {
            eprintln!("input error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Invariant(m)) => {
            eprintln!("invariant violation: {m}");
            ExitCode::from(2)
        }
    }
}
