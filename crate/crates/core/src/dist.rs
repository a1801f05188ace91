//! Truncated models of the overconvergent function and distribution spaces,
//! the explicit monoid action of the distinguished place, and assembly of
//! Hecke matrices on H^0 = (L(k^v,w) (x) D)^{(+)t}.
//!
//! Functions live on pZ_p and are truncated to polynomials of degree < M;
//! distributions are tracked by their moments mu(x^j), j < M. For
//! gamma = [[a,b],[c,d]] in the monoid (a a unit, c = 0 mod p, integral
//! entries, det of valuation >= 0) the right action is
//!
//! ```text
//! (f.gamma)(x) = kappa(a+bx, u/(a+bx)) * f((c+dx)/(a+bx)),   u = det/p^{v(det)}
//! ```
//!
//! Since x runs over pZ_p, the Teichmueller data of a+bx is that of a, and
//! the character factor splits as a scalar times (1+X)^{alpha_0 + lam(x)}
//! with alpha_0 = plog(<a>/sqrt(<u>))/p constant and lam(x) = plog(1+(b/a)x)/p
//! a series with no constant term. Moment matrices are stored in the raw
//! basis mu_j = mu(x^j). The compactness estimate underlying the lambda(n)
//! bound lives in the Amice (binomial) basis; the transition from monomials
//! is triangular with diagonal l!, so in raw coordinates the entry bound
//! reads w(U[j][l]) >= j - v_p(l!), which agrees with the scaled-basis row
//! profile j - floor(j/p) for all l < p^2. The Fredholm coefficients c_n are
//! invariant under triangular changes of basis, so the raw matrix feeds the
//! Fredholm expansion as-is and w(c_n) >= lambda(n) still holds.

use crate::coset::{CosetDataset, HeckeDatum, Mat2};
use crate::lambda::LambdaPoly;
use crate::padic::{binom_coeffs, Padic, PadicError, PadicRing};
use crate::rat::{PrecVal, Rat};
use crate::weight::{WeightComponent, WeightError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("datum '{0}' not present in dataset")]
    MissingDatum(String),
    #[error("matrix dimension {0} exceeds the cap {1}")]
    DimensionCap(usize, usize),
    #[error("matrix is not in the monoid: {0}")]
    NotInMonoid(String),
    #[error("truncation M={0} too small (need at least {1})")]
    MTooSmall(usize, usize),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Arith(#[from] PadicError),
}

/// Entry types a Hecke matrix can be assembled over: specialized p-adic
/// numbers or X-truncated Iwasawa elements.
pub trait Coef: Clone {
    fn cadd(&self, o: &Self) -> Self;
    fn cmul_padic(&self, s: &Padic) -> Self;
}

impl Coef for Padic {
    fn cadd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn cmul_padic(&self, s: &Padic) -> Self {
        self.mul(s)
    }
}

impl Coef for LambdaPoly {
    fn cadd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn cmul_padic(&self, s: &Padic) -> Self {
        self.scale(s)
    }
}

/// Hecke matrix on H^0, basis ordered (class index, algebraic index, moment
/// degree); row-major entries.
#[derive(Clone, Debug)]
pub struct UMatrix<T> {
    pub dim: usize,
    pub t_base: usize,
    pub alg_dim: usize,
    pub m_trunc: usize,
    pub entries: Vec<T>,
    pub name: String,
    pub dataset_hash: String,
}

impl<T> UMatrix<T> {
    pub fn at(&self, r: usize, c: usize) -> &T {
        &self.entries[r * self.dim + c]
    }

    /// Moment degree of a global row index.
    pub fn moment_degree(&self, row: usize) -> usize {
        row % self.m_trunc
    }
}

// ---------------------------------------------------------------------------
// the action at the distinguished place

fn exact_int_val(x: &Padic) -> Result<i64, DistError> {
    match x.val() {
        PrecVal::Exact(v) if v.is_integer() => Ok(v.num()),
        PrecVal::Exact(v) => Err(DistError::NotInMonoid(format!(
            "fractional valuation {}",
            v
        ))),
        PrecVal::AtLeast(_) => Err(DistError::NotInMonoid(
            "determinant indistinguishable from zero at precision".into(),
        )),
    }
}

fn check_monoid(g: &Mat2) -> Result<(), DistError> {
    for x in g.entries() {
        if x.val().lower_bound() < Rat::zero() {
            return Err(DistError::NotInMonoid("entries must be integral".into()));
        }
    }
    if !matches!(g.a.val(), PrecVal::Exact(v) if v == Rat::zero()) {
        return Err(DistError::NotInMonoid("a must be a unit".into()));
    }
    if g.c.val().lower_bound() < Rat::int(1) {
        return Err(DistError::NotInMonoid("c must be 0 mod p".into()));
    }
    Ok(())
}

/// Shared per-matrix data for the character factor and the substitution.
struct GammaSeed {
    /// omega(d1,d2) * eta(s), in the component's coefficient field.
    scalar: Padic,
    /// plog(u_0)/p where u_0 = <a>/sqrt(<u_det>).
    alpha0: Padic,
    /// lam(x) = plog(1 + (b/a)x)/p over Q_p, no constant term, length M.
    lam: LambdaPoly,
    /// y(x) = (c+dx)/(a+bx) over Q_p, length M.
    y: LambdaPoly,
}

fn gamma_seed(
    comp: &WeightComponent,
    g: &Mat2,
    m_trunc: usize,
    e_ring: &PadicRing,
) -> Result<GammaSeed, DistError> {
    check_monoid(g)?;
    let qp = g.a.ring().clone();
    let det = g.det();
    let vdet = exact_int_val(&det)?;
    if vdet < 0 {
        return Err(DistError::NotInMonoid("det must be integral".into()));
    }
    let u_det = det.mul_p_pow(-vdet);
    let delta_a = g.a.teichmuller()?;
    let ua = g.a.div(&delta_a)?;
    let delta_u = u_det.teichmuller()?;
    let uu = u_det.div(&delta_u)?;
    let delta2 = delta_u.div(&delta_a)?;
    let s = uu.sqrt_one_unit()?;
    let u0 = ua.div(&s)?;
    let scalar = comp
        .omega_value(&delta_a, &delta2)
        .embed(e_ring)
        .mul(&comp.eta_value(&s, e_ring)?);
    let alpha0 = u0.plog()?.mul_p_pow(-1);

    // eps = b/a; lam(x) = (1/p) * sum (-1)^{n+1} (eps x)^n / n
    let eps = g.b.mul(&g.a.inv()?);
    let prec = g.a.modexp().max(2);
    let mut lam_coeffs = vec![qp.zero(eps.abs_precision().max(1)); m_trunc];
    let mut epsn = qp.one(prec);
    for n in 1..m_trunc {
        epsn = epsn.mul(&eps);
        let term = epsn.div_i64_exact(n as i64).mul_p_pow(-1);
        lam_coeffs[n] = if n % 2 == 0 { term.neg() } else { term };
    }
    let lam = LambdaPoly::new(lam_coeffs);

    // y(x) = (c+dx) * (1/a) * sum (-eps x)^n
    let ainv = g.a.inv()?;
    let mut inv_coeffs = Vec::with_capacity(m_trunc);
    let mut acc = ainv.clone();
    for n in 0..m_trunc {
        inv_coeffs.push(acc.clone());
        if n + 1 < m_trunc {
            acc = acc.mul(&eps).neg();
        }
    }
    let inv_abx = LambdaPoly::new(inv_coeffs);
    let mut cd = vec![qp.zero(prec as i64); m_trunc];
    cd[0] = g.c.clone();
    if m_trunc > 1 {
        cd[1] = g.d.clone();
    }
    let y = LambdaPoly::new(cd).mul(&inv_abx);
    Ok(GammaSeed {
        scalar,
        alpha0,
        lam,
        y,
    })
}

fn lift(x: &Padic, r: &PadicRing) -> Padic {
    if x.ring().same_ring(r) {
        x.clone()
    } else {
        x.embed(r)
    }
}

/// Unscaled function-action rows over Lambda: rows[j] is the list of X-series
/// coefficients of x^l in (x^j . gamma), as x-polynomials of X-degree < mx.
fn function_rows_series(
    comp: &WeightComponent,
    g: &Mat2,
    m_trunc: usize,
    mx: usize,
) -> Result<Vec<Vec<LambdaPoly>>, DistError> {
    let e_ring = comp.coefficient_ring();
    let seed = gamma_seed(comp, g, m_trunc, &e_ring)?;
    // alpha(x) = alpha0 + lam(x); b_m(x) = C(alpha(x), m) over Q_p
    let qp = seed.alpha0.ring().clone();
    let mut alpha = seed.lam.clone();
    let mut a0 = alpha.coeffs().to_vec();
    a0[0] = a0[0].add(&seed.alpha0);
    alpha = LambdaPoly::new(a0);
    let prec = seed.alpha0.modexp().max(2);
    // charfac[m] = scalar * b_m(x), coefficients in E
    let mut charfac: Vec<LambdaPoly> = Vec::with_capacity(mx);
    let mut bm = LambdaPoly::constant(qp.one(prec), m_trunc);
    for m in 0..mx {
        let row = LambdaPoly::new(
            bm.coeffs()
                .iter()
                .map(|c| lift(c, &e_ring).mul(&seed.scalar))
                .collect(),
        );
        charfac.push(row);
        if m + 1 < mx {
            let mut shifted = alpha.coeffs().to_vec();
            shifted[0] = shifted[0].sub(&qp.int(m as i64, prec));
            bm = bm.mul(&LambdaPoly::new(shifted));
            bm = LambdaPoly::new(
                bm.coeffs()
                    .iter()
                    .map(|c| c.div_i64_exact(m as i64 + 1))
                    .collect(),
            );
        }
    }
    let mut rows = Vec::with_capacity(m_trunc);
    let mut ypow = LambdaPoly::constant(qp.one(prec), m_trunc);
    for j in 0..m_trunc {
        if j > 0 {
            ypow = ypow.mul(&seed.y);
        }
        let mut row = Vec::with_capacity(m_trunc);
        for l in 0..m_trunc {
            let mut xcoeffs = Vec::with_capacity(mx);
            for cf in charfac.iter() {
                let mut acc: Option<Padic> = None;
                for l1 in 0..=l {
                    let t = cf.coeff(l1).mul(&lift(ypow.coeff(l - l1), &e_ring));
                    acc = Some(match acc {
                        None => t,
                        Some(a) => a.add(&t),
                    });
                }
                xcoeffs.push(acc.unwrap());
            }
            row.push(LambdaPoly::new(xcoeffs));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Unscaled function-action rows at a specialization X = z: rows[j][l] is the
/// coefficient of x^l in (x^j . gamma) with the character factor evaluated at
/// z. The lam-part of the binomial series vanishes in x-degree < m beyond
/// m = M, so its truncation at M is exact; only (1+z)^{alpha_0} needs a
/// convergent tail cut.
fn function_rows_at(
    comp: &WeightComponent,
    g: &Mat2,
    m_trunc: usize,
    z: &Padic,
) -> Result<Vec<Vec<Padic>>, DistError> {
    let out = z.ring().clone();
    let seed = gamma_seed(comp, g, m_trunc, &out)?;
    let qp = seed.alpha0.ring().clone();
    let prec = seed.alpha0.modexp().max(2);

    // (1+z)^{alpha_0}
    let pow0 = match z.val() {
        PrecVal::AtLeast(_) => out.one(z.modexp().max(prec)),
        PrecVal::Exact(vz) => {
            assert!(vz > Rat::zero(), "specialization requires v_p(z) > 0");
            let target = z.abs_precision().max(1);
            let mcut = (Rat::int(target).div(&vz).ceil() + 1) as usize;
            let cs = binom_coeffs(&seed.alpha0, mcut);
            let mut acc = out.zero(target);
            let mut zm = out.one(z.modexp());
            for c in cs {
                acc = acc.add(&lift(&c, &out).mul(&zm));
                zm = zm.mul(z);
            }
            acc
        }
    };
    let scalar = lift(&seed.scalar, &out).mul(&pow0);

    // cf(x) = sum_m C(lam(x), m) z^m, coefficients in z's ring.  C(lam, m)
    // contributes at every x-degree >= 1, so the m-sum runs past m_trunc
    // until the remaining terms fall below the working precision: the tail
    // term has valuation >= m*v_p(z) - floor(l/p).
    let mcut = match z.val() {
        PrecVal::AtLeast(_) => m_trunc,
        PrecVal::Exact(vz) => {
            let target = z.abs_precision().max(1) + m_trunc as i64;
            (Rat::int(target).div(&vz).ceil() as usize + 2).max(m_trunc)
        }
    };
    let mut cf = vec![out.zero(1 << 40); m_trunc];
    let mut bm = LambdaPoly::constant(qp.one(prec), m_trunc);
    let mut zm = out.one(z.modexp().max(prec));
    for m in 0..mcut {
        for l in 0..m_trunc {
            cf[l] = cf[l].add(&lift(bm.coeff(l), &out).mul(&zm));
        }
        if m + 1 < mcut {
            let mut shifted = seed.lam.coeffs().to_vec();
            shifted[0] = shifted[0].sub(&qp.int(m as i64, prec));
            bm = bm.mul(&LambdaPoly::new(shifted));
            bm = LambdaPoly::new(
                bm.coeffs()
                    .iter()
                    .map(|c| c.div_i64_exact(m as i64 + 1))
                    .collect(),
            );
            zm = zm.mul(z);
        }
    }
    for c in cf.iter_mut() {
        *c = c.mul(&scalar);
    }

    let mut rows = Vec::with_capacity(m_trunc);
    let mut ypow = LambdaPoly::constant(qp.one(prec), m_trunc);
    for j in 0..m_trunc {
        if j > 0 {
            ypow = ypow.mul(&seed.y);
        }
        let mut row = Vec::with_capacity(m_trunc);
        for l in 0..m_trunc {
            let mut acc: Option<Padic> = None;
            for l1 in 0..=l {
                let t = cf[l1].mul(&lift(ypow.coeff(l - l1), &out));
                acc = Some(match acc {
                    None => t,
                    Some(a) => a.add(&t),
                });
            }
            row.push(acc.unwrap());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Right action of gamma on a truncated function f = sum f_j x^j, with the
/// weight character evaluated at X = z.
pub fn act_function_at(
    comp: &WeightComponent,
    g: &Mat2,
    f: &[Padic],
    z: &Padic,
) -> Result<Vec<Padic>, DistError> {
    let m_trunc = f.len();
    let rows = function_rows_at(comp, g, m_trunc, z)?;
    let out = z.ring().clone();
    let mut res = vec![out.zero(1 << 40); m_trunc];
    for (j, fj) in f.iter().enumerate() {
        let fj = lift(fj, &out);
        for l in 0..m_trunc {
            res[l] = res[l].add(&rows[j][l].mul(&fj));
        }
    }
    Ok(res)
}

/// Moment-matrix block of gamma: block[j][l] = [x^l](x^j.gamma), flattened
/// row-major, entries over Lambda.
pub fn dist_block_series(
    comp: &WeightComponent,
    g: &Mat2,
    m_trunc: usize,
    mx: usize,
) -> Result<Vec<LambdaPoly>, DistError> {
    let rows = function_rows_series(comp, g, m_trunc, mx)?;
    Ok(rows.into_iter().flatten().collect())
}

/// Same block with the character specialized at X = z.
pub fn dist_block_at(
    comp: &WeightComponent,
    g: &Mat2,
    m_trunc: usize,
    z: &Padic,
) -> Result<Vec<Padic>, DistError> {
    let rows = function_rows_at(comp, g, m_trunc, z)?;
    Ok(rows.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// algebraic coefficient blocks at the non-distinguished places

/// Matrix of gamma on det^{(w-k+2)/2} Sym^{k-2}: row i is the expansion of
/// det^e (a+bx)^{k-2-i} (c+dx)^i in the monomial basis. Row-major (k-1)^2.
pub fn algebraic_block(g: &Mat2, k: i64, w: i64) -> Result<Vec<Padic>, DistError> {
    assert!(k >= 2 && (k - w).rem_euclid(2) == 0);
    let n = (k - 1) as usize;
    let qp = g.a.ring().clone();
    let prec = g.a.modexp().max(2);
    let e = (w - k + 2) / 2;
    let dete = g.det().pow_i64(e)?;
    let mk_lin = |c0: &Padic, c1: &Padic| {
        let mut v = vec![qp.zero(prec as i64); n];
        v[0] = c0.clone();
        if n > 1 {
            v[1] = c1.clone();
        }
        LambdaPoly::new(v)
    };
    let ab = mk_lin(&g.a, &g.b);
    let cd = mk_lin(&g.c, &g.d);
    let mut out = vec![qp.zero(prec as i64); n * n];
    for i in 0..n {
        // (a+bx)^{k-2-i} (c+dx)^i
        let mut poly = LambdaPoly::constant(dete.clone(), n);
        for _ in 0..(n - 1 - i) {
            poly = poly.mul(&ab);
        }
        for _ in 0..i {
            poly = poly.mul(&cd);
        }
        for ip in 0..n {
            out[i * n + ip] = poly.coeff(ip).clone();
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// assembly

pub const DIM_CAP: usize = 4096;

fn kron(a: &[Padic], an: usize, b: &[Padic], bn: usize) -> (Vec<Padic>, usize) {
    let n = an * bn;
    let mut out = Vec::with_capacity(n * n);
    for i1 in 0..an {
        for i2 in 0..bn {
            for j1 in 0..an {
                for j2 in 0..bn {
                    out.push(a[i1 * an + j1].mul(&b[i2 * bn + j2]));
                }
            }
        }
    }
    (out, n)
}

pub(crate) fn assemble<T: Coef>(
    ds: &CosetDataset,
    datum: &HeckeDatum,
    m_trunc: usize,
    dist_block: &dyn Fn(&Mat2) -> Result<Vec<T>, DistError>,
    ident_block: &dyn Fn() -> Vec<T>,
    zero: &T,
) -> Result<UMatrix<T>, DistError> {
    let alg_dim: usize = ds.k_list.iter().map(|&k| (k - 1) as usize).product();
    let dim = ds.t_base * alg_dim * m_trunc;
    if dim > DIM_CAP {
        return Err(DistError::DimensionCap(dim, DIM_CAP));
    }
    let qp = PadicRing::qp(ds.p).expect("valid p");
    let u_place = datum.u_place();
    let away_from_p = u_place.is_none() && datum.name != "Uv";
    let mut entries = vec![zero.clone(); dim * dim];
    for item in &datum.items {
        // distribution factor at the distinguished place
        let dist = if away_from_p {
            ident_block()
        } else {
            dist_block(&item.mats[0])?
        };
        // algebraic factor: Kronecker product over the non-distinguished places
        let mut alg = vec![qp.one(40)];
        let mut an = 1usize;
        for (pl, &k) in ds.k_list.iter().enumerate() {
            let b = algebraic_block(&item.mats[pl + 1], k, ds.w)?;
            let (next, n) = kron(&alg, an, &b, (k - 1) as usize);
            alg = next;
            an = n;
        }
        // U_{v'} normalization p^{-(w-k'+2)/2}
        if let Some(pl) = u_place {
            if pl >= 1 {
                let e = (ds.w - ds.k_list[pl - 1] + 2) / 2;
                alg = alg.iter().map(|x| x.mul_p_pow(-e)).collect();
            }
        }
        debug_assert_eq!(an, alg_dim);
        for (i, &src) in item.perm.iter().enumerate() {
            for ai in 0..alg_dim {
                for aj in 0..alg_dim {
                    let s = &alg[ai * alg_dim + aj];
                    for jm in 0..m_trunc {
                        let row = (i * alg_dim + ai) * m_trunc + jm;
                        for lm in 0..m_trunc {
                            let col = (src * alg_dim + aj) * m_trunc + lm;
                            let contrib = dist[jm * m_trunc + lm].cmul_padic(s);
                            let cell = &mut entries[row * dim + col];
                            *cell = cell.cadd(&contrib);
                        }
                    }
                }
            }
        }
    }
    Ok(UMatrix {
        dim,
        t_base: ds.t_base,
        alg_dim,
        m_trunc,
        entries,
        name: datum.name.clone(),
        dataset_hash: ds.hash(),
    })
}

/// Matrix of the named operator over Lambda (universal weight on the
/// component).
pub fn hecke_matrix_series(
    ds: &CosetDataset,
    name: &str,
    comp: &WeightComponent,
    m_trunc: usize,
    mx: usize,
) -> Result<UMatrix<LambdaPoly>, DistError> {
    let datum = ds
        .datum(name)
        .ok_or_else(|| DistError::MissingDatum(name.to_string()))?;
    let e_ring = comp.coefficient_ring();
    let zero = LambdaPoly::zero(&e_ring, mx, 1 << 40);
    let one = LambdaPoly::constant(e_ring.one(40), mx);
    let ident = || {
        let mut b = vec![zero.clone(); m_trunc * m_trunc];
        for j in 0..m_trunc {
            b[j * m_trunc + j] = one.clone();
        }
        b
    };
    assemble(
        ds,
        datum,
        m_trunc,
        &|g| dist_block_series(comp, g, m_trunc, mx),
        &ident,
        &zero,
    )
}

/// Matrix of the named operator with the weight character specialized at
/// X = z (z's ring must contain the component's coefficient field).
pub fn hecke_matrix_at(
    ds: &CosetDataset,
    name: &str,
    comp: &WeightComponent,
    m_trunc: usize,
    z: &Padic,
) -> Result<UMatrix<Padic>, DistError> {
    let datum = ds
        .datum(name)
        .ok_or_else(|| DistError::MissingDatum(name.to_string()))?;
    let out = z.ring().clone();
    let zero = out.zero(1 << 40);
    let ident = || {
        let mut b = vec![zero.clone(); m_trunc * m_trunc];
        for j in 0..m_trunc {
            b[j * m_trunc + j] = out.one(40);
        }
        b
    };
    assemble(
        ds,
        datum,
        m_trunc,
        &|g| dist_block_at(comp, g, m_trunc, z),
        &ident,
        &zero,
    )
}

pub fn u_v_matrix_series(
    ds: &CosetDataset,
    comp: &WeightComponent,
    m_trunc: usize,
    mx: usize,
) -> Result<UMatrix<LambdaPoly>, DistError> {
    hecke_matrix_series(ds, "Uv", comp, m_trunc, mx)
}

pub fn u_v_matrix_at(
    ds: &CosetDataset,
    comp: &WeightComponent,
    m_trunc: usize,
    z: &Padic,
) -> Result<UMatrix<Padic>, DistError> {
    hecke_matrix_at(ds, "Uv", comp, m_trunc, z)
}

// ---------------------------------------------------------------------------
// classicality projection

/// The projection mu -> (mu(x^i))_{i <= k-2} in the moment basis: a
/// (k-1) x M truncation matrix. Acts block-wise on the full space (identity
/// on class and algebraic indices).
pub fn classicality_projection(
    p: u64,
    k: i64,
    m_trunc: usize,
) -> Result<Vec<Padic>, DistError> {
    let n = (k - 1) as usize;
    if m_trunc < n {
        return Err(DistError::MTooSmall(m_trunc, n));
    }
    let qp = PadicRing::qp(p).expect("valid p");
    let mut out = vec![qp.zero(1 << 40); n * m_trunc];
    for i in 0..n {
        out[i * m_trunc + i] = qp.one(40);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// compactness profile

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileStatus {
    Verified,
    Violated,
    Unresolved,
}

#[derive(Clone, Debug)]
pub struct ProfileRow {
    pub row: usize,
    pub moment_degree: usize,
    pub required: i64,
    pub status: ProfileStatus,
}

/// v_p(l!), by Legendre's formula.
pub fn vp_factorial(p: u64, l: u64) -> i64 {
    let mut s = 0i64;
    let mut q = l / p;
    while q > 0 {
        s += q as i64;
        q /= p;
    }
    s
}

/// Check the compactness profile: every entry must satisfy
/// w(U[row][col]) >= j - v_p(l!), where j, l are the moment degrees of row
/// and column. For l < p^2 this is the scaled-basis row bound
/// w >= j - floor(j/p); the v_p(l!) correction accounts for the triangular
/// monomial-to-binomial basis transition at higher degree. Rows whose
/// entries are below resolvable precision are reported Unresolved, never
/// silently passed as Verified.
pub fn check_row_profile(u: &UMatrix<LambdaPoly>, p: u64) -> Vec<ProfileRow> {
    let mut out = Vec::with_capacity(u.dim);
    for row in 0..u.dim {
        let j = u.moment_degree(row) as i64;
        let required = j - j / p as i64;
        let mut status = ProfileStatus::Verified;
        for col in 0..u.dim {
            let l = u.moment_degree(col) as u64;
            let need = Rat::int(j - vp_factorial(p, l));
            match u.at(row, col).w_val() {
                PrecVal::Exact(v) => {
                    if v < need {
                        status = ProfileStatus::Violated;
                        break;
                    }
                }
                PrecVal::AtLeast(v) => {
                    if v < need && status == ProfileStatus::Verified {
                        status = ProfileStatus::Unresolved;
                    }
                }
            }
        }
        out.push(ProfileRow {
            row,
            moment_degree: j as usize,
            required,
            status,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::{gen_synthetic, SynthParams};
    use crate::weight::{eval_weight_char_at, FiniteCharacter};

    fn triv_comp(p: u64, w: i64) -> WeightComponent {
        let tame = w.rem_euclid(p as i64 - 1) as u64;
        let eta = FiniteCharacter::new(p, 1, tame, 0);
        let o1 = tame; // omega = (w mod (p-1), 0) restricted consistency
        WeightComponent::new(p, w, eta, (o1, 0)).unwrap()
    }

    fn qp3() -> PadicRing {
        PadicRing::qp(3).unwrap()
    }

    #[test]
    fn identity_acts_trivially() {
        let r = qp3();
        let comp = triv_comp(3, 0);
        let g = Mat2::from_ints(&r, [1, 0, 0, 1], 20);
        let z = r.int(3, 12); // some specialization
        let f: Vec<Padic> = (0..5).map(|i| r.int(i + 2, 12)).collect();
        let res = act_function_at(&comp, &g, &f, &z).unwrap();
        for (a, b) in res.iter().zip(&f) {
            assert!(a.congruent(b));
        }
    }

    #[test]
    fn diag_one_p_scales_monomials() {
        let r = qp3();
        let comp = triv_comp(3, 0);
        let g = Mat2::from_ints(&r, [1, 0, 0, 3], 20);
        let z = r.int(3, 12);
        let rows = function_rows_at(&comp, &g, 6, &z).unwrap();
        for j in 0..6 {
            for l in 0..6 {
                if j == l {
                    assert!(rows[j][l].congruent(&r.int(3i64.pow(j as u32), 10)));
                } else {
                    assert!(rows[j][l].sub(&r.zero(8)).is_zero_at_precision());
                }
            }
        }
    }

    #[test]
    fn unipotent_translates() {
        // [[1,0],[pc,1]]: f -> f(x + pc), character factor 1
        let r = qp3();
        let comp = triv_comp(3, 0);
        let g = Mat2::from_ints(&r, [1, 0, 6, 1], 20);
        let z = r.int(3, 12);
        let f = vec![r.zero(12), r.one(12), r.zero(12)]; // f = x
        let res = act_function_at(&comp, &g, &f, &z).unwrap();
        assert!(res[0].congruent(&r.int(6, 10)));
        assert!(res[1].congruent(&r.one(10)));
        assert!(res[2].sub(&r.zero(10)).is_zero_at_precision());
    }

    #[test]
    fn monoid_action_property() {
        use rand::{Rng, SeedableRng};
        let r = qp3();
        let comp = triv_comp(3, 0);
        let z = r.int(3, 12);
        let m = 12;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let mut mk = |u_type: bool| loop {
                let a = rng.gen_range(1..729i64);
                let b = rng.gen_range(0..729i64);
                let c = 3 * rng.gen_range(0..243i64);
                let d = rng.gen_range(0..729i64);
                let g = Mat2::from_ints(&r, [a, b, c, d], 20);
                let ok_det = match g.det().val() {
                    PrecVal::Exact(v) => {
                        v.is_integer() && (u_type == (v >= Rat::int(1))) && v >= Rat::zero()
                    }
                    _ => false,
                };
                if a % 3 != 0 && ok_det {
                    return g;
                }
            };
            let g1 = mk(false);
            let g2 = mk(true);
            let f: Vec<Padic> = (0..m).map(|i| r.int(i as i64 + 1, 16)).collect();
            let lhs = act_function_at(&comp, &g1, &act_function_at(&comp, &g2, &f, &z).unwrap(), &z)
                .unwrap();
            let rhs = act_function_at(&comp, &g2.mul(&g1), &f, &z).unwrap();
            // agreement modulo truncation tails: degrees >= m contribute
            // valuation >= m - floor(m/p) under the profile bound
            let tol = r.zero((m - m / 3 - 2) as i64);
            for l in 0..m / 2 {
                assert!(
                    lhs[l].sub(&rhs[l]).add(&tol).is_zero_at_precision(),
                    "coefficient {} differs: {:?} vs {:?}",
                    l,
                    lhs[l],
                    rhs[l]
                );
            }
        }
    }

    fn std_params() -> SynthParams {
        SynthParams {
            p: 3,
            d: 1,
            t: 1,
            w: 0,
            k_list: vec![],
            n_away: 0,
            n_store: 24,
            perturb: false,
        }
    }

    #[test]
    fn standard_u_matrix_m1_is_p() {
        let ds = gen_synthetic(0, &std_params()).unwrap();
        let comp = triv_comp(3, 0);
        let u = u_v_matrix_series(&ds, &comp, 1, 4).unwrap();
        assert_eq!(u.dim, 1);
        let r = qp3();
        let entry = &u.entries[0];
        assert!(entry.coeff(0).congruent(&r.int(3, 20)));
        for m in 1..4 {
            assert!(entry.coeff(m).sub(&r.zero(18)).is_zero_at_precision());
        }
    }

    #[test]
    fn standard_u_matrix_m2_triangular() {
        let ds = gen_synthetic(0, &std_params()).unwrap();
        let comp = triv_comp(3, 0);
        let u = u_v_matrix_series(&ds, &comp, 2, 4).unwrap();
        let r = qp3();
        // diagonal (p, p*p); the [x^1](x^0.gamma) corner vanishes
        assert!(u.at(0, 0).coeff(0).congruent(&r.int(3, 18)));
        assert!(u.at(1, 1).coeff(0).congruent(&r.int(9, 18)));
        assert!(u
            .at(0, 1)
            .coeff(0)
            .sub(&r.zero(16))
            .is_zero_at_precision());
    }

    #[test]
    fn row_profile_on_synthetic_data() {
        for seed in [1u64, 2, 3] {
            let params = SynthParams {
                t: 1 + seed as usize % 2,
                perturb: true,
                ..std_params()
            };
            let ds = gen_synthetic(seed, &params).unwrap();
            let comp = triv_comp(3, 0);
            let u = u_v_matrix_series(&ds, &comp, 10, 6).unwrap();
            for row in check_row_profile(&u, 3) {
                assert_ne!(
                    row.status,
                    ProfileStatus::Violated,
                    "seed {} row {:?}",
                    seed,
                    row
                );
            }
        }
    }

    #[test]
    fn specialization_commutes_with_assembly() {
        // evaluating the Lambda matrix at z agrees with building at z, up to
        // the X-tail beyond mx (valuation >= mx * v_p(z))
        let params = SynthParams {
            perturb: true,
            ..std_params()
        };
        let ds = gen_synthetic(5, &params).unwrap();
        let comp = triv_comp(3, 0);
        let r = qp3();
        let z = r.int(9, 16);
        let m = 6;
        let mx = 14;
        let series = u_v_matrix_series(&ds, &comp, m, mx).unwrap();
        let direct = u_v_matrix_at(&ds, &comp, m, &z).unwrap();
        let tol = r.zero(11); // mx * v_p(z) - margin
        for rix in 0..series.dim {
            for cix in 0..series.dim {
                let ev = series.at(rix, cix).eval(&z);
                let diff = ev.sub(direct.at(rix, cix));
                assert!(
                    diff.add(&tol).is_zero_at_precision(),
                    "entry ({},{}): {:?} vs {:?}",
                    rix,
                    cix,
                    ev,
                    direct.at(rix, cix)
                );
            }
        }
    }

    #[test]
    fn away_operator_is_permutation_pattern() {
        // T_w on t=2 with swap permutation and trivial matrices: block
        // anti-diagonal with identity blocks times the item count
        let r = qp3();
        let ident = Mat2::from_ints(&r, [1, 0, 0, 1], 20);
        let ds = CosetDataset {
            p: 3,
            d: 1,
            t_base: 2,
            w: 0,
            k_list: vec![],
            data: vec![HeckeDatum {
                name: "Tw1".into(),
                items: vec![crate::coset::CosetItem {
                    perm: vec![1, 0],
                    mats: vec![ident.clone()],
                }],
            }],
            provenance: crate::coset::Provenance::Ingested,
        };
        let comp = triv_comp(3, 0);
        let u = hecke_matrix_series(&ds, "Tw1", &comp, 2, 2).unwrap();
        assert_eq!(u.dim, 4);
        // row block 0 writes to column block 1 and vice versa
        assert!(u.at(0, 2).coeff(0).congruent(&r.one(18)));
        assert!(u.at(2, 0).coeff(0).congruent(&r.one(18)));
        assert!(u.at(0, 0).coeff(0).sub(&r.zero(18)).is_zero_at_precision());
    }

    #[test]
    fn projection_shape() {
        let p = classicality_projection(3, 4, 6).unwrap();
        let r = qp3();
        assert_eq!(p.len(), 3 * 6);
        assert!(p[0].congruent(&r.one(20)));
        assert!(p[6 + 1].congruent(&r.one(20)));
        assert!(p[2 * 6 + 2].congruent(&r.one(20)));
        assert!(classicality_projection(3, 9, 6).is_err());
    }

    #[test]
    fn function_rows_at_pointwise_oracle() {
        // evaluate the truncated action rows at a point x0 in pZ_p and
        // compare against a direct evaluation of the weight character;
        // residual is the x-degree >= M truncation tail
        let r = qp3();
        let comp = triv_comp(3, 0);
        let g = Mat2::from_ints(&r, [2, 5, 6, 7], 20); // det = -16, a unit
        let z = r.int(3, 14);
        let m = 14;
        let rows = function_rows_at(&comp, &g, m, &z).unwrap();
        let x0 = r.int(3, 18);
        let t1 = g.a.add(&g.b.mul(&x0));
        let t2 = g.det().div(&t1).unwrap();
        let kap = eval_weight_char_at(&comp, &t1, &t2, &z).unwrap();
        let yx0 = g.c.add(&g.d.mul(&x0)).div(&t1).unwrap();
        for j in [0usize, 1, 3] {
            let mut got = r.zero(1 << 40);
            let mut xp = r.one(18);
            for l in 0..m {
                got = got.add(&rows[j][l].mul(&xp));
                xp = xp.mul(&x0);
            }
            let want = kap.mul(&yx0.pow_u64(j as u64));
            let diff = got.sub(&want);
            assert!(
                diff.add(&r.zero(8)).is_zero_at_precision(),
                "row {}: {:?} vs {:?}",
                j,
                got,
                want
            );
        }
    }

    #[test]
    fn function_rows_series_pointwise_oracle() {
        // same oracle through the Lambda route: build rows over Lambda,
        // evaluate each X-polynomial at z, then sum at x0
        let r = qp3();
        let comp = triv_comp(3, 0);
        let g = Mat2::from_ints(&r, [2, 5, 6, 7], 22);
        let z = r.int(3, 14);
        let m = 14;
        let rows = function_rows_series(&comp, &g, m, 14).unwrap();
        let x0 = r.int(3, 18);
        let t1 = g.a.add(&g.b.mul(&x0));
        let t2 = g.det().div(&t1).unwrap();
        let kap = eval_weight_char_at(&comp, &t1, &t2, &z).unwrap();
        let yx0 = g.c.add(&g.d.mul(&x0)).div(&t1).unwrap();
        for j in [0usize, 1, 2] {
            let mut got = r.zero(12);
            let mut xp = r.one(18);
            for l in 0..m {
                got = got.add(&rows[j][l].eval(&z).mul(&xp));
                xp = xp.mul(&x0);
            }
            let want = kap.mul(&yx0.pow_u64(j as u64));
            let diff = got.sub(&want);
            assert!(
                diff.add(&r.zero(8)).is_zero_at_precision(),
                "row {}: {:?} vs {:?}",
                j,
                got,
                want
            );
        }
    }
}

#[cfg(test)]
mod lattice_tests {
    use super::*;
    use crate::coset::{gen_synthetic, SynthParams};
    use crate::weight::FiniteCharacter;

    // Conjugating the matrix entry in position (row degree j, column degree l)
    // by p^{v_p(l!)} and substituting X = pY must land every coefficient in
    // Z_p, and the lattice is stable under matrix products. This is the
    // precondition for the flat fixed-modulus arithmetic used when expanding
    // the characteristic series.
    #[test]
    fn factorial_lattice_is_integral_and_product_stable() {
        let params = SynthParams {
            p: 3, d: 2, t: 2, w: 0, k_list: vec![2], n_away: 1, n_store: 40, perturb: true,
        };
        let ds = gen_synthetic(7, &params).unwrap();
        let eta = FiniteCharacter::new(3, 1, 0, 0);
        let comp = WeightComponent::new(3, 0, eta, (0, 0)).unwrap();
        let m = 24;
        let u = u_v_matrix_series(&ds, &comp, m, 12).unwrap();
        for row in 0..u.dim {
            let j = u.moment_degree(row) as i64;
            for col in 0..u.dim {
                let l = u.moment_degree(col) as i64;
                let sh = vp_factorial(3, l as u64) - vp_factorial(3, j as u64);
                for (mm, c) in u.at(row, col).coeffs().iter().enumerate() {
                    if let PrecVal::Exact(v) = c.val() {
                        let tot = v.add(&Rat::int(mm as i64 + sh));
                        assert!(
                            tot >= Rat::int(0),
                            "lattice violation {:?} at j={} l={} m={}",
                            tot, j, l, mm
                        );
                    }
                }
            }
        }
        // sampled entries of U^2 stay in the same lattice
        let d = u.dim;
        for row in (0..d).step_by(17) {
            let j = u.moment_degree(row) as i64;
            for col in (0..d).step_by(13) {
                let l = u.moment_degree(col) as i64;
                let mut acc = LambdaPoly::zero(&u.at(0, 0).ring(), 12, 1 << 40);
                for kk in 0..d {
                    acc = acc.add(&u.at(row, kk).mul(u.at(kk, col)));
                }
                let sh = vp_factorial(3, l as u64) - vp_factorial(3, j as u64);
                for (mm, c) in acc.coeffs().iter().enumerate() {
                    if let PrecVal::Exact(v) = c.val() {
                        let tot = v.add(&Rat::int(mm as i64 + sh));
                        assert!(tot >= Rat::int(0), "product lattice violation {:?}", tot);
                    }
                }
            }
        }
    }
}
