//! Deterministic command-line front end: datasets in, exact-fraction CSV
//! reports out. Identical config and seed always produce identical bytes.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::classical::{
    al_duality_check, classical_u_matrix, compare_classicality, slope_multiset, ClassicalError,
};
use crate::coset::{gen_synthetic, parse_dataset, serialize_dataset, validate_dataset,
    CosetDataset, SynthParams};
use crate::dist::u_v_matrix_series;
use crate::fredholm::{
    check_specialization_floors, fredholm_series, halo_report, lambda_lower_bound,
    newton_polygon, CheckStatus, FredholmError, LambdaSeries, NewtonPolygon,
};
use crate::padic::{Padic, PadicRing};
use crate::rat::{PrecVal, Rat};
use crate::weight::{make_locally_algebraic, FiniteCharacter, WeightComponent};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "uvhalo",
    version,
    about = "Slope data for U_v on overconvergent quaternionic forms near the boundary of weight space",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add a non-authoritative decimal column next to exact fractions.
    #[arg(long, global = true)]
    pub approx: bool,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Lower-bound table lambda(n) for n = 0..N-1.
    Lambda {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long)]
        n: usize,
    },
    /// Coefficients of det(1 - T U_v) over Lambda, with the lambda(n) bound
    /// check.
    Charpoly {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 24)]
        m: usize,
        #[arg(long, default_value_t = 12)]
        mx: usize,
        #[arg(long = "n-max", default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 20)]
        prec: u32,
    },
    /// Newton polygon of the series specialized at a point with
    /// v_p(z) = a/b.
    Newton {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 24)]
        m: usize,
        #[arg(long, default_value_t = 12)]
        mx: usize,
        #[arg(long = "n-max", default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 20)]
        prec: u32,
        /// Valuation of the specialization point, as a fraction a/b.
        #[arg(long, default_value = "1/2")]
        vz: String,
    },
    /// Halo decomposition report: unit-flag windows, touch points, and
    /// per-sample polygon structure.
    Halo {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 24)]
        m: usize,
        #[arg(long, default_value_t = 12)]
        mx: usize,
        #[arg(long = "n-max", default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 20)]
        prec: u32,
        #[arg(long = "z-samples", default_value_t = 3)]
        z_samples: usize,
    },
    /// Slopes of the classical space at the locally algebraic weight
    /// (k, w = dataset w, trivial epsilon).
    Classical {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        k: i64,
        #[arg(long, default_value_t = 30)]
        prec: u32,
    },
    /// Compare the sub-(k-1)-slope data of the overconvergent series with
    /// the classical characteristic polynomial.
    CompareClassicality {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        k: i64,
        #[arg(long, default_value_t = 24)]
        m: usize,
        #[arg(long, default_value_t = 30)]
        prec: u32,
    },
    /// Atkin-Lehner slope duality check on two comma-separated slope lists
    /// (entries a or a/b).
    AlCheck {
        #[arg(long)]
        eps: String,
        #[arg(long = "eps-inv")]
        eps_inv: String,
        #[arg(long)]
        k: i64,
        #[arg(long = "expected-count")]
        expected_count: usize,
    },
    /// Generate a synthetic dataset (deterministic in the seed).
    GenSynthetic {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        w: i64,
        /// Comma-separated fixed weights at the d-1 non-distinguished
        /// places.
        #[arg(long = "k-list", default_value = "")]
        k_list: String,
        #[arg(long = "n-away", default_value_t = 1)]
        n_away: usize,
        #[arg(long = "n-store", default_value_t = 30)]
        n_store: u32,
        #[arg(long)]
        perturb: bool,
    },
    /// Validate a dataset file against the monoid and shape constraints.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
    },
}

enum CliError {
    /// Bad arguments, unreadable or invalid data: exit 2.
    Validation(String),
    /// Requested output cannot be certified at the carried precision: exit 3.
    Precision(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Precision(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Precision(m) => m,
        }
    }
}

impl From<FredholmError> for CliError {
    fn from(e: FredholmError) -> CliError {
        match e {
            FredholmError::Precision { .. } => CliError::Precision(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ClassicalError> for CliError {
    fn from(e: ClassicalError) -> CliError {
        match e {
            ClassicalError::Fredholm(f) => CliError::from(f),
            ClassicalError::Uncertified(m) => CliError::Precision(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

macro_rules! from_validation {
    ($t:ty) => {
        impl From<$t> for CliError {
            fn from(e: $t) -> CliError {
                CliError::Validation(e.to_string())
            }
        }
    };
}
from_validation!(crate::coset::DatasetError);
from_validation!(crate::dist::DistError);
from_validation!(crate::weight::WeightError);
from_validation!(crate::padic::PadicError);
from_validation!(std::io::Error);
from_validation!(std::fmt::Error);

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let res = match &cli.out {
                Some(path) => std::fs::write(path, text.as_bytes()).map_err(CliError::from),
                None => {
                    print!("{}", text);
                    Ok(())
                }
            };
            match res {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {}", e.message());
                    e.code()
                }
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

fn header(config: &str, dataset_hash: Option<&str>) -> String {
    format!(
        "# uvhalo {}\n# config: {}\n# dataset: {}\n",
        VERSION,
        config,
        dataset_hash.unwrap_or("-")
    )
}

fn load_dataset(path: &PathBuf) -> Result<CosetDataset, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_dataset(&text)?)
}

/// The component of trivial nebentypus matching the dataset's central
/// weight: the one containing the smallest locally algebraic weight of the
/// parity of w.
fn default_component(p: u64, w: i64) -> Result<WeightComponent, CliError> {
    let triv = FiniteCharacter::new(p, 1, 0, 0);
    let k0 = 2 + w.rem_euclid(2);
    Ok(make_locally_algebraic(p, k0, w, (triv.clone(), triv))?.component)
}

fn parse_rat(s: &str) -> Result<Rat, CliError> {
    let bad = || CliError::Validation(format!("cannot parse fraction '{}'", s));
    let mut it = s.splitn(2, '/');
    let num: i64 = it.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let den: i64 = match it.next() {
        Some(d) => d.trim().parse().map_err(|_| bad())?,
        None => 1,
    };
    if den == 0 {
        return Err(bad());
    }
    Ok(Rat::new(num, den))
}

fn parse_rat_list(s: &str) -> Result<Vec<Rat>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_rat)
        .collect()
}

/// A point of exact valuation a/b, realized in Q_p(p^{1/b}).
fn z_point(p: u64, vz: &Rat, prec: u32) -> Result<Padic, CliError> {
    if *vz <= Rat::zero() || vz.num() < 1 {
        return Err(CliError::Validation(
            "specialization valuation must be positive".into(),
        ));
    }
    let ring = if vz.den() == 1 {
        PadicRing::qp(p)?
    } else {
        PadicRing::pth_root(p, vz.den() as usize)?
    };
    Ok(ring.pi(prec).pow_u64(vz.num() as u64))
}

fn approx_col(approx: bool, v: &Rat) -> String {
    if approx {
        format!(",{:.6}", v.num() as f64 / v.den() as f64)
    } else {
        String::new()
    }
}

fn status_str(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Verified => "verified",
        CheckStatus::Violated => "violated",
        CheckStatus::Unresolved => "unresolved",
    }
}

fn series_for(
    ds: &CosetDataset,
    m: usize,
    mx: usize,
    n_max: usize,
    prec: u32,
) -> Result<LambdaSeries, CliError> {
    let comp = default_component(ds.p, ds.w)?;
    let u = u_v_matrix_series(ds, &comp, m, mx)?;
    Ok(fredholm_series(&u, comp.c(), n_max, prec)?)
}

fn emit_polygon(out: &mut String, poly: &NewtonPolygon, approx: bool) -> std::fmt::Result {
    writeln!(
        out,
        "n,val_num,val_den,slope_from_prev_num,slope_from_prev_den,certified{}",
        if approx { ",val_approx" } else { "" }
    )?;
    for (i, (n, v)) in poly.vertices.iter().enumerate() {
        if i == 0 {
            writeln!(
                out,
                "{},{},{},,,{}",
                n,
                v.num(),
                v.den(),
                format_args!("true{}", approx_col(approx, v))
            )?;
        } else {
            let seg = &poly.segments[i - 1];
            writeln!(
                out,
                "{},{},{},{},{},{}{}",
                n,
                v.num(),
                v.den(),
                seg.slope.num(),
                seg.slope.den(),
                seg.certified,
                approx_col(approx, v)
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// subcommands

fn execute(cli: &Cli) -> Result<(String, i32), CliError> {
    let mut out = String::new();
    let mut code = 0;
    match &cli.cmd {
        Cmd::Lambda { p, t, n } => {
            if *n == 0 || *t == 0 {
                return Err(CliError::Validation("need n >= 1 and t >= 1".into()));
            }
            out += &header(&format!("lambda p={} t={} n={}", p, t, n), None);
            let lam = lambda_lower_bound(*p, *t, n - 1);
            writeln!(out, "n,lambda")?;
            for (i, l) in lam.iter().enumerate() {
                writeln!(out, "{},{}", i, l)?;
            }
        }

        Cmd::Charpoly {
            dataset,
            m,
            mx,
            n_max,
            prec,
        } => {
            let ds = load_dataset(dataset)?;
            let s = series_for(&ds, *m, *mx, *n_max, *prec)?;
            out += &header(
                &format!(
                    "charpoly m={} mx={} n-max={} prec={} approx={}",
                    m, mx, n_max, prec, cli.approx
                ),
                Some(&ds.hash()),
            );
            writeln!(out, "n,m,val_num,val_den,exact")?;
            for (n, c) in s.coeffs.iter().enumerate() {
                for (mm, b) in c.coeffs().iter().enumerate() {
                    let (v, exact) = match b.val() {
                        PrecVal::Exact(v) => (v, true),
                        PrecVal::AtLeast(v) => (v, false),
                    };
                    writeln!(out, "{},{},{},{},{}", n, mm, v.num(), v.den(), exact)?;
                }
            }
            writeln!(out)?;
            writeln!(out, "n,lambda,wval_num,wval_den,status")?;
            for row in s.check_coefficient_bounds() {
                let w = row.w_val.lower_bound();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.n,
                    row.lambda,
                    w.num(),
                    w.den(),
                    status_str(row.status)
                )?;
            }
        }

        Cmd::Newton {
            dataset,
            m,
            mx,
            n_max,
            prec,
            vz,
        } => {
            let ds = load_dataset(dataset)?;
            let vz = parse_rat(vz)?;
            let s = series_for(&ds, *m, *mx, *n_max, *prec)?;
            let z = z_point(ds.p, &vz, 2 * prec)?;
            out += &header(
                &format!(
                    "newton m={} mx={} n-max={} prec={} vz={}/{} approx={}",
                    m,
                    mx,
                    n_max,
                    prec,
                    vz.num(),
                    vz.den(),
                    cli.approx
                ),
                Some(&ds.hash()),
            );
            let vals = s.specialize(&z)?;
            let poly = newton_polygon(&vals)?;
            emit_polygon(&mut out, &poly, cli.approx)?;
            writeln!(out)?;
            writeln!(out, "n,floor_num,floor_den,required_num,required_den,status")?;
            for row in check_specialization_floors(&s, &z)? {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    row.n,
                    row.floor.num(),
                    row.floor.den(),
                    row.required.num(),
                    row.required.den(),
                    status_str(row.status)
                )?;
            }
        }

        Cmd::Halo {
            dataset,
            m,
            mx,
            n_max,
            prec,
            z_samples,
        } => {
            let ds = load_dataset(dataset)?;
            let s = series_for(&ds, *m, *mx, *n_max, *prec)?;
            let comp = default_component(ds.p, ds.w)?;
            // samples v_p(z) = 1/(phi(p^c)(i+2)) stay inside the annulus
            let e0 = crate::weight::phi_p(ds.p, comp.c()) as i64;
            let mut zs = Vec::new();
            for i in 0..*z_samples {
                let vz = Rat::new(1, e0 * (i as i64 + 2));
                zs.push(z_point(ds.p, &vz, 2 * prec)?);
            }
            let rep = halo_report(&s, ds.w, &zs)?;
            out += &header(
                &format!(
                    "halo m={} mx={} n-max={} prec={} z-samples={} approx={}",
                    m, mx, n_max, prec, z_samples, cli.approx
                ),
                Some(&ds.hash()),
            );
            writeln!(out, "s0,{}", rep.s0)?;
            writeln!(out, "k,n_k,lambda_n_k,n_minus,n_plus")?;
            let opt = |v: Option<usize>| match v {
                Some(x) => x.to_string(),
                None => "unresolved".to_string(),
            };
            for w in &rep.windows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    w.k,
                    w.n_k,
                    w.lambda_n_k,
                    opt(w.n_minus),
                    opt(w.n_plus)
                )?;
            }
            for zr in &rep.z_reports {
                writeln!(out)?;
                writeln!(
                    out,
                    "z: vz={}/{} intervals_ok={}",
                    zr.vz.num(),
                    zr.vz.den(),
                    zr.intervals_ok
                )?;
                writeln!(out, "x_start,length,slope_num,slope_den,certified")?;
                for seg in &zr.segments {
                    writeln!(
                        out,
                        "{},{},{},{},{}{}",
                        seg.x_start,
                        seg.length,
                        seg.slope.num(),
                        seg.slope.den(),
                        seg.certified,
                        approx_col(cli.approx, &seg.slope)
                    )?;
                }
                writeln!(out, "k,touch_ok")?;
                for (k, ok) in &zr.touch_ok {
                    writeln!(out, "{},{}", k, ok)?;
                }
            }
            writeln!(out)?;
            writeln!(out, "pass,{}", rep.pass)?;
        }

        Cmd::Classical { dataset, k, prec } => {
            let ds = load_dataset(dataset)?;
            let triv = FiniteCharacter::new(ds.p, 1, 0, 0);
            let wp = make_locally_algebraic(ds.p, *k, ds.w, (triv.clone(), triv))?;
            let u = classical_u_matrix(&ds, &wp, *prec)?;
            let sm = slope_multiset(&u, *k)?;
            out += &header(
                &format!("classical k={} prec={} approx={}", k, prec, cli.approx),
                Some(&ds.hash()),
            );
            writeln!(out, "dim,{}", u.dim)?;
            writeln!(out, "i,slope_num,slope_den")?;
            for (i, s) in sm.slopes.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{}{}",
                    i,
                    s.num(),
                    s.den(),
                    approx_col(cli.approx, s)
                )?;
            }
            writeln!(out, "missing,{}", sm.missing)?;
            for a in &sm.anomalies {
                writeln!(out, "anomaly,{},{}", a.num(), a.den())?;
            }
        }

        Cmd::CompareClassicality {
            dataset,
            k,
            m,
            prec,
        } => {
            let ds = load_dataset(dataset)?;
            let rep = compare_classicality(&ds, *k, *m, *prec)?;
            out += &header(
                &format!(
                    "compare-classicality k={} m={} prec={} approx={}",
                    k, m, prec, cli.approx
                ),
                Some(&ds.hash()),
            );
            writeln!(out, "side,slope_num,slope_den,mult")?;
            for (s, n) in &rep.oc_small {
                writeln!(out, "overconvergent,{},{},{}", s.num(), s.den(), n)?;
            }
            for (s, n) in &rep.cl_small {
                writeln!(out, "classical,{},{},{}", s.num(), s.den(), n)?;
            }
            writeln!(out, "agree,{}", rep.agree)?;
        }

        Cmd::AlCheck {
            eps,
            eps_inv,
            k,
            expected_count,
        } => {
            let se = parse_rat_list(eps)?;
            let si = parse_rat_list(eps_inv)?;
            let rep = al_duality_check(&se, &si, *k, *expected_count);
            out += &header(
                &format!(
                    "al-check k={} expected-count={} eps={} eps-inv={}",
                    k, expected_count, eps, eps_inv
                ),
                None,
            );
            writeln!(out, "count_ok,{}", rep.count_ok)?;
            writeln!(
                out,
                "first_violation,{}",
                match rep.first_violation {
                    Some(i) => i.to_string(),
                    None => "-".to_string(),
                }
            )?;
            writeln!(out, "sum_num,sum_den,{},{}", rep.sum.num(), rep.sum.den())?;
            writeln!(out, "sum_ok,{}", rep.sum_ok)?;
            writeln!(out, "ok,{}", rep.ok)?;
        }

        Cmd::GenSynthetic {
            seed,
            p,
            d,
            t,
            w,
            k_list,
            n_away,
            n_store,
            perturb,
        } => {
            let ks: Vec<i64> = k_list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| CliError::Validation(format!("bad weight '{}'", s)))
                })
                .collect::<Result<_, _>>()?;
            let params = SynthParams {
                p: *p,
                d: *d,
                t: *t,
                w: *w,
                k_list: ks,
                n_away: *n_away,
                n_store: *n_store,
                perturb: *perturb,
            };
            let ds = gen_synthetic(*seed, &params)?;
            // dataset files carry no report header: they must round-trip
            // through the parser
            out += &serialize_dataset(&ds);
        }

        Cmd::Validate { dataset } => {
            let ds = load_dataset(dataset)?;
            let rep = validate_dataset(&ds);
            out += &header("validate", Some(&ds.hash()));
            if rep.ok() {
                writeln!(out, "ok,true")?;
            } else {
                writeln!(out, "ok,false")?;
                writeln!(out, "datum,item,place,condition")?;
                for v in &rep.violations {
                    writeln!(out, "{},{},{},{}", v.datum, v.item, v.place, v.condition)?;
                }
                code = 2;
            }
        }
    }
    Ok((out, code))
}
