//! Characteristic series det(1 - T U) of truncated compact operators over
//! the Iwasawa algebra, coefficient lower bounds lambda(n), Newton polygons
//! with certification, boundary specialization floors, and the spectral
//! decomposition report near the boundary of weight space.

use crate::dist::{vp_factorial, UMatrix};
use crate::lambda::LambdaPoly;
use crate::padic::{Padic, PadicError, PadicRing};
use crate::rat::{PrecVal, Rat};
use crate::weight::phi_p;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FredholmError {
    #[error("insufficient coefficient precision: need {need} p-adic digits, have {have}")]
    Precision { need: i64, have: i64 },
    #[error("entry outside the integral lattice: {0}")]
    NonIntegral(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Arith(#[from] PadicError),
}

/// lambda(0..=n_max): lambda(0) = 0 and
/// lambda(i+1) = lambda(i) + floor(i/t') - floor(i/(p t')).
pub fn lambda_lower_bound(p: u64, t_prime: usize, n_max: usize) -> Vec<i64> {
    assert!(t_prime > 0);
    let pt = p as usize * t_prime;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0i64);
    for i in 0..n_max {
        let prev = out[i];
        out.push(prev + (i / t_prime) as i64 - (i / pt) as i64);
    }
    out
}

// ---------------------------------------------------------------------------
// division-free characteristic series

/// Ring interface for the leading-minor recursion below.
pub trait SRing: Clone {
    fn sadd(&self, other: &Self) -> Self;
    fn ssub(&self, other: &Self) -> Self;
    fn smul(&self, other: &Self) -> Self;
}

impl SRing for Padic {
    fn sadd(&self, other: &Padic) -> Padic {
        self.add(other)
    }
    fn ssub(&self, other: &Padic) -> Padic {
        self.sub(other)
    }
    fn smul(&self, other: &Padic) -> Padic {
        self.mul(other)
    }
}

impl SRing for LambdaPoly {
    fn sadd(&self, other: &LambdaPoly) -> LambdaPoly {
        self.add(other)
    }
    fn ssub(&self, other: &LambdaPoly) -> LambdaPoly {
        self.sub(other)
    }
    fn smul(&self, other: &LambdaPoly) -> LambdaPoly {
        self.mul(other)
    }
}

/// Truncated polynomial over Z/p^k with a fixed coefficient count; the flat
/// representation used when expanding the two-variable series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatPoly {
    pub v: Vec<u64>,
    pub pmod: u64,
}

impl SRing for FlatPoly {
    fn sadd(&self, other: &FlatPoly) -> FlatPoly {
        debug_assert_eq!(self.pmod, other.pmod);
        FlatPoly {
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| (a + b) % self.pmod)
                .collect(),
            pmod: self.pmod,
        }
    }
    fn ssub(&self, other: &FlatPoly) -> FlatPoly {
        FlatPoly {
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| (a + self.pmod - b) % self.pmod)
                .collect(),
            pmod: self.pmod,
        }
    }
    fn smul(&self, other: &FlatPoly) -> FlatPoly {
        let mx = self.v.len();
        let pm = self.pmod as u128;
        let mut out = vec![0u64; mx];
        for (i, &a) in self.v.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.v.iter().enumerate() {
                if i + j >= mx {
                    break;
                }
                let t = ((a as u128 * b as u128) % pm) as u64;
                out[i + j] = (out[i + j] + t) % self.pmod;
            }
        }
        FlatPoly {
            v: out,
            pmod: self.pmod,
        }
    }
}

/// det(1 - T A) truncated at T^n_max, computed without divisions via the
/// leading-minor recursion: with A_r the leading r x r block, R the row
/// below it and C the column to its right,
/// det(1 - T A_{r+1}) = det(1 - T A_r) (1 - a_{rr} T - sum_k (R A_r^k C) T^{k+2}).
pub fn char_series<T: SRing>(entries: &[T], dim: usize, n_max: usize, one: &T) -> Vec<T> {
    assert_eq!(entries.len(), dim * dim);
    let zero = one.ssub(one);
    let idx = |i: usize, j: usize| i * dim + j;
    let mut cp: Vec<T> = vec![one.clone()];
    if n_max == 0 {
        return cp;
    }
    for r in 0..dim {
        let mut f: Vec<T> = vec![one.clone(), zero.ssub(&entries[idx(r, r)])];
        if r > 0 && n_max >= 2 {
            let mut v: Vec<T> = (0..r).map(|i| entries[idx(i, r)].clone()).collect();
            loop {
                let mut s = zero.clone();
                for i in 0..r {
                    s = s.sadd(&entries[idx(r, i)].smul(&v[i]));
                }
                f.push(zero.ssub(&s));
                if f.len() == n_max + 1 {
                    break;
                }
                let mut nv = Vec::with_capacity(r);
                for i in 0..r {
                    let mut acc = zero.clone();
                    for j in 0..r {
                        acc = acc.sadd(&entries[idx(i, j)].smul(&v[j]));
                    }
                    nv.push(acc);
                }
                v = nv;
            }
        }
        let out_len = (cp.len() + f.len() - 1).min(n_max + 1);
        let mut out: Vec<T> = vec![zero.clone(); out_len];
        for (i, a) in cp.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                if i + j < out_len {
                    out[i + j] = out[i + j].sadd(&a.smul(b));
                }
            }
        }
        cp = out;
    }
    cp
}

/// det(1 - T U) for a pointwise (specialized or classical) matrix.
pub fn char_series_padic(u: &UMatrix<Padic>, n_max: usize) -> Vec<Padic> {
    let ring = u.at(0, 0).ring().clone();
    let prec = u.at(0, 0).modexp().max(1);
    char_series(&u.entries, u.dim, n_max, &ring.one(prec))
}

// ---------------------------------------------------------------------------
// flat expansion over Lambda

/// Flat image of a matrix over Lambda: the entry in position
/// (row degree j, column degree l) is scaled by p^{v_p(l!) - v_p(j!)},
/// X is substituted by pY, and coefficients are reduced mod p^neff.
/// The scaled entries are p-integral; a violation means the matrix was not
/// built from an integral compact action and is reported as an error.
pub fn flatten(u: &UMatrix<LambdaPoly>, neff: u32) -> Result<Vec<FlatPoly>, FredholmError> {
    let ring = u.at(0, 0).ring().clone();
    if ring.e() != 1 {
        return Err(FredholmError::BadInput(
            "flat expansion requires an unramified coefficient ring".into(),
        ));
    }
    let p = ring.p();
    let mut pmod: u64 = 1;
    for _ in 0..neff {
        pmod = pmod
            .checked_mul(p)
            .filter(|m| *m < (1u64 << 62))
            .ok_or_else(|| FredholmError::BadInput("flat modulus exceeds 2^62".into()))?;
    }
    let mut out = Vec::with_capacity(u.dim * u.dim);
    for r in 0..u.dim {
        let j = u.moment_degree(r) as u64;
        for c in 0..u.dim {
            let l = u.moment_degree(c) as u64;
            let sh = vp_factorial(p, l) - vp_factorial(p, j);
            let entry = u.at(r, c);
            let mut v = Vec::with_capacity(entry.mx());
            for (m, b) in entry.coeffs().iter().enumerate() {
                let scaled = b.mul_p_pow(m as i64 + sh);
                match scaled.residue_u64(neff) {
                    Some(x) => v.push(x),
                    None => {
                        if scaled.val().lower_bound() < Rat::zero() {
                            return Err(FredholmError::NonIntegral(format!(
                                "entry ({}, {}), coefficient of X^{}",
                                r, c, m
                            )));
                        }
                        return Err(FredholmError::Precision {
                            need: neff as i64,
                            have: scaled.abs_precision(),
                        });
                    }
                }
            }
            out.push(FlatPoly { v, pmod });
        }
    }
    Ok(out)
}

/// Largest m with p^m < 2^62.
fn u64_modexp_cap(p: u64) -> u32 {
    let mut m = 0u32;
    let mut acc = 1u64;
    while let Some(next) = acc.checked_mul(p).filter(|v| *v < (1u64 << 62)) {
        acc = next;
        m += 1;
    }
    m
}

/// Largest uniform modulus exponent supported by the entries of the
/// conjugated, X = pY rescaled matrix: the least absolute precision among
/// the scaled coefficients.
fn flat_capacity(u: &UMatrix<LambdaPoly>) -> u32 {
    let p = u.at(0, 0).ring().p();
    let mut cap = i64::MAX;
    for r in 0..u.dim {
        let j = u.moment_degree(r) as u64;
        for c in 0..u.dim {
            let l = u.moment_degree(c) as u64;
            let sh = vp_factorial(p, l) - vp_factorial(p, j);
            for (m, b) in u.at(r, c).coeffs().iter().enumerate() {
                cap = cap.min(b.abs_precision() + m as i64 + sh);
            }
        }
    }
    cap.clamp(0, u32::MAX as i64) as u32
}

// ---------------------------------------------------------------------------
// the series and its invariants

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Verified,
    Violated,
    Unresolved,
}

/// Characteristic series sum_n c_n(X) T^n with c_n in O_E[[X]] / X^mx,
/// carried at finite coefficient precision, plus the component data needed
/// to interpret it on the boundary annulus.
#[derive(Clone, Debug)]
pub struct LambdaSeries {
    pub p: u64,
    /// Wild conductor exponent: coefficients live over E = Q_p(zeta_{p^c}).
    pub c: u32,
    pub t_prime: usize,
    pub coeffs: Vec<LambdaPoly>,
    pub dataset_hash: String,
    pub operator: String,
}

impl LambdaSeries {
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mx(&self) -> usize {
        self.coeffs[0].mx()
    }

    pub fn ring(&self) -> &PadicRing {
        self.coeffs[0].ring()
    }

    /// v_p of the uniformizer of E: 1/phi(p^c).
    pub fn vp_pi(&self) -> Rat {
        Rat::new(1, phi_p(self.p, self.c) as i64)
    }

    pub fn lambda(&self) -> Vec<i64> {
        lambda_lower_bound(self.p, self.t_prime, self.n_max())
    }

    /// Whether b_{n, lambda(n)} is a unit of O_E; None when the coefficient
    /// is outside the X-truncation or unresolved at the carried precision.
    pub fn unit_flag(&self, n: usize) -> Option<bool> {
        let lam = self.lambda()[n];
        if lam < 0 || lam as usize >= self.mx() {
            return None;
        }
        match self.coeffs[n].coeff(lam as usize).val() {
            PrecVal::Exact(v) => Some(v == Rat::zero()),
            PrecVal::AtLeast(b) => {
                if b > Rat::zero() {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }

    /// w(c_n) >= lambda(n) for every n, in uniformizer units.
    pub fn check_coefficient_bounds(&self) -> Vec<BoundRow> {
        let lam = self.lambda();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                let req = Rat::int(lam[n]);
                let w = c.w_val();
                let status = match w {
                    PrecVal::Exact(v) => {
                        if v >= req {
                            CheckStatus::Verified
                        } else {
                            CheckStatus::Violated
                        }
                    }
                    PrecVal::AtLeast(b) => {
                        if b >= req {
                            CheckStatus::Verified
                        } else {
                            CheckStatus::Unresolved
                        }
                    }
                };
                BoundRow {
                    n,
                    lambda: lam[n],
                    w_val: w,
                    status,
                }
            })
            .collect()
    }

    /// Valuations v_p(c_n(z)) at a boundary point z.
    pub fn specialize(&self, z: &Padic) -> Result<Vec<PrecVal>, FredholmError> {
        let ring = self.ring();
        if !ring.same_ring(z.ring()) && ring.e() != 1 {
            return Err(FredholmError::BadInput(
                "specialization point must live over the coefficient ring".into(),
            ));
        }
        Ok(self.coeffs.iter().map(|c| c.eval(z).val()).collect())
    }
}

#[derive(Clone, Debug)]
pub struct BoundRow {
    pub n: usize,
    pub lambda: i64,
    pub w_val: PrecVal,
    pub status: CheckStatus,
}

/// det(1 - T U) over Lambda, with b_{n,m} carried mod p^n_prec.
///
/// Unramified coefficients go through the flat fixed-modulus path; ramified
/// coefficient rings use the generic recursion directly.
pub fn fredholm_series(
    u: &UMatrix<LambdaPoly>,
    c: u32,
    n_max: usize,
    n_prec: u32,
) -> Result<LambdaSeries, FredholmError> {
    let ring = u.at(0, 0).ring().clone();
    let mx = u.at(0, 0).mx();
    let p = ring.p();
    let n_cap = n_max.min(u.dim);
    let coeffs = if ring.e() == 1 {
        // the uniform flat modulus is capped by what the entries carry and
        // by the u64 headroom; the unflattened coefficients then record the
        // (possibly reduced) precision they were computed at
        let neff = (n_prec + mx as u32 - 1)
            .min(flat_capacity(u))
            .min(u64_modexp_cap(p));
        if (neff as usize) < mx + 2 {
            return Err(FredholmError::Precision {
                need: mx as i64 + 2,
                have: neff as i64,
            });
        }
        let flat = flatten(u, neff)?;
        let pmod = flat[0].pmod;
        let one = FlatPoly {
            v: {
                let mut v = vec![0u64; mx];
                v[0] = 1;
                v
            },
            pmod,
        };
        let cp = char_series(&flat, u.dim, n_cap, &one);
        // undo Y = X/p: the Y^m coefficient of the flat series is
        // b_{n,m} p^m mod p^neff
        let mut out = Vec::with_capacity(n_cap + 1);
        for fp in &cp {
            let coeffs: Vec<Padic> = fp
                .v
                .iter()
                .enumerate()
                .map(|(m, &r)| ring.int(r as i64, neff).mul_p_pow(-(m as i64)))
                .collect();
            out.push(LambdaPoly::new(coeffs));
        }
        out
    } else {
        let one = LambdaPoly::constant(ring.one(ring.max_modexp()), mx);
        char_series(&u.entries, u.dim, n_cap, &one)
    };
    Ok(LambdaSeries {
        p,
        c,
        // the class number times the dimension of the algebraic coefficient
        // block away from the distinguished place
        t_prime: u.t_base * u.alg_dim,
        coeffs,
        dataset_hash: u.dataset_hash.clone(),
        operator: u.name.clone(),
    })
}

// ---------------------------------------------------------------------------
// Newton polygons

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonSegment {
    pub slope: Rat,
    pub length: usize,
    pub x_start: usize,
    pub y_start: Rat,
    pub certified: bool,
}

#[derive(Clone, Debug)]
pub struct NewtonPolygon {
    pub vertices: Vec<(usize, Rat)>,
    pub segments: Vec<NewtonSegment>,
}

fn lower_hull(pts: &[(i64, Rat)]) -> Vec<(i64, Rat)> {
    let mut hull: Vec<(i64, Rat)> = Vec::new();
    for &(x, y) in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point when it sits on or above the chord
            let lhs = y2.sub(&y1).mul(&Rat::int(x - x1));
            let rhs = y.sub(&y1).mul(&Rat::int(x2 - x1));
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    hull
}

/// Lower convex hull of (n, v_p(c_n)). Valuations known only as lower bounds
/// cannot create hull vertices; a segment is certified when it survives even
/// if every bounded coefficient attains its bound exactly.
pub fn newton_polygon(vals: &[PrecVal]) -> Result<NewtonPolygon, FredholmError> {
    let mut exact: Vec<(i64, Rat)> = Vec::new();
    let mut all: Vec<(i64, Rat)> = Vec::new();
    for (n, v) in vals.iter().enumerate() {
        match v {
            PrecVal::Exact(r) => {
                exact.push((n as i64, *r));
                all.push((n as i64, *r));
            }
            PrecVal::AtLeast(r) => all.push((n as i64, *r)),
        }
    }
    if exact.is_empty() || exact[0].0 != 0 {
        return Err(FredholmError::BadInput(
            "constant term must have an exact valuation".into(),
        ));
    }
    let hull = lower_hull(&exact);
    let pessimistic = lower_hull(&all);
    let is_pess_edge = |a: (i64, Rat), b: (i64, Rat)| {
        pessimistic
            .windows(2)
            .any(|w| w[0] == a && w[1] == b)
    };
    let mut segments = Vec::new();
    for w in hull.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        segments.push(NewtonSegment {
            slope: y2.sub(&y1).div(&Rat::int(x2 - x1)),
            length: (x2 - x1) as usize,
            x_start: x1 as usize,
            y_start: y1,
            certified: is_pess_edge(w[0], w[1]),
        });
    }
    Ok(NewtonPolygon {
        vertices: hull.iter().map(|&(x, y)| (x as usize, y)).collect(),
        segments,
    })
}

/// Slopes strictly below `bound` with multiplicities. Errors when an
/// uncertified segment overlaps the requested range.
pub fn small_slope_multiset(
    poly: &NewtonPolygon,
    bound: &Rat,
) -> Result<Vec<(Rat, usize)>, FredholmError> {
    let mut out = Vec::new();
    for seg in &poly.segments {
        if seg.slope < *bound {
            if !seg.certified {
                return Err(FredholmError::BadInput(format!(
                    "uncertified segment of slope {}/{} below the requested bound",
                    seg.slope.num(),
                    seg.slope.den()
                )));
            }
            out.push((seg.slope, seg.length));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// specialization floors

#[derive(Clone, Debug)]
pub struct FloorRow {
    pub n: usize,
    pub floor: Rat,
    pub required: Rat,
    pub expect_equality: bool,
    pub measured: PrecVal,
    pub status: CheckStatus,
}

/// Valuation floors at a boundary point z with 0 < v_p(z) < v_p(pi_E):
/// v_p(c_n(z)) >= lambda(n) v_p(z), with equality exactly when
/// b_{n, lambda(n)} is a unit, and otherwise the strengthened floor
/// lambda(n) v_p(z) + min(v_p(z), v_p(pi_E) - v_p(z)).
pub fn check_specialization_floors(
    s: &LambdaSeries,
    z: &Padic,
) -> Result<Vec<FloorRow>, FredholmError> {
    let vz = match z.val() {
        PrecVal::Exact(v) => v,
        PrecVal::AtLeast(_) => {
            return Err(FredholmError::BadInput(
                "specialization point must have an exact valuation".into(),
            ))
        }
    };
    let vpi = s.vp_pi();
    if vz <= Rat::zero() || vz >= vpi {
        return Err(FredholmError::BadInput(
            "specialization point must lie in the open boundary annulus".into(),
        ));
    }
    let lam = s.lambda();
    let vals = s.specialize(z)?;
    let margin = if vz < vpi.sub(&vz) { vz } else { vpi.sub(&vz) };
    let mut out = Vec::with_capacity(vals.len());
    for (n, measured) in vals.into_iter().enumerate() {
        let floor = vz.mul_int(lam[n]);
        let flag = s.unit_flag(n);
        let (required, expect_equality) = match flag {
            Some(true) => (floor, true),
            Some(false) => (floor.add(&margin), false),
            None => (floor, false),
        };
        let status = match (expect_equality, measured) {
            (true, PrecVal::Exact(v)) => {
                if v == floor {
                    CheckStatus::Verified
                } else {
                    CheckStatus::Violated
                }
            }
            (true, PrecVal::AtLeast(b)) => {
                if b > floor {
                    CheckStatus::Violated
                } else {
                    CheckStatus::Unresolved
                }
            }
            (false, PrecVal::Exact(v)) => {
                if v >= required {
                    CheckStatus::Verified
                } else {
                    CheckStatus::Violated
                }
            }
            (false, PrecVal::AtLeast(b)) => {
                if b >= required {
                    CheckStatus::Verified
                } else {
                    CheckStatus::Unresolved
                }
            }
        };
        out.push(FloorRow {
            n,
            floor,
            required,
            expect_equality,
            measured,
            status,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// halo structure

/// Unit-flag window around the touch point n_k = (k-1) p^{c+1} t'.
#[derive(Clone, Debug)]
pub struct HaloWindow {
    pub k: i64,
    pub n_k: usize,
    pub lambda_n_k: i64,
    /// Smallest i in [n_k - t', n_k] with b_{i, lambda(i)} a unit.
    pub n_minus: Option<usize>,
    /// Largest i in [n_k, n_k + t'] with b_{i, lambda(i)} a unit.
    pub n_plus: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ZReport {
    pub vz: Rat,
    pub segments: Vec<NewtonSegment>,
    /// Per window k: the polygon passes through (n_k, lambda(n_k) v_p(z))
    /// with the predicted local shape (a vertex when n_k^- = n_k^+, otherwise
    /// a segment of slope (k-1) phi(p^{c+1}) v_p(z) between the vertices
    /// (n_k^-, lambda(n_k^-) v_p(z)) and (n_k^+, lambda(n_k^+) v_p(z))).
    pub touch_ok: Vec<(i64, bool)>,
    /// Every slope divided by phi(p^{c+1}) v_p(z) lies in the decomposition
    /// intervals: [0, s_0) before the first window, exactly k-1 on a touch
    /// segment, and (k-1, k+1) between windows k and k+2.
    pub intervals_ok: bool,
}

#[derive(Clone, Debug)]
pub struct HaloReport {
    pub s0: i64,
    pub phi1: u64,
    pub windows: Vec<HaloWindow>,
    pub z_reports: Vec<ZReport>,
    pub pass: bool,
}

/// Verify the boundary decomposition structure of a characteristic series
/// for a component of parity w, sampling the listed boundary points.
pub fn halo_report(s: &LambdaSeries, w: i64, zs: &[Padic]) -> Result<HaloReport, FredholmError> {
    let lam = s.lambda();
    let phi1 = phi_p(s.p, s.c + 1);
    let s0 = if w.rem_euclid(2) == 0 { 1 } else { 2 };
    let t = s.t_prime;
    let step = s.p.pow(s.c + 1) as usize * t;

    let mut windows = Vec::new();
    let mut k = if w.rem_euclid(2) == 0 { 2i64 } else { 3i64 };
    loop {
        let n_k = (k - 1) as usize * step;
        if n_k + t > s.n_max() {
            break;
        }
        if lam[n_k + t] as usize >= s.mx() {
            break;
        }
        let n_minus = (n_k - t..=n_k).find(|&i| s.unit_flag(i) == Some(true));
        let n_plus = (n_k..=n_k + t).rev().find(|&i| s.unit_flag(i) == Some(true));
        windows.push(HaloWindow {
            k,
            n_k,
            lambda_n_k: lam[n_k],
            n_minus,
            n_plus,
        });
        k += 2;
    }

    let mut pass = windows
        .iter()
        .all(|wd| wd.n_minus.is_some() && wd.n_plus.is_some());
    let mut z_reports = Vec::new();
    for z in zs {
        let vz = match z.val() {
            PrecVal::Exact(v) => v,
            PrecVal::AtLeast(_) => {
                return Err(FredholmError::BadInput(
                    "sample point must have an exact valuation".into(),
                ))
            }
        };
        if vz <= Rat::zero() || vz >= s.vp_pi() {
            return Err(FredholmError::BadInput(
                "sample point must lie in the open boundary annulus".into(),
            ));
        }
        let vals = s.specialize(z)?;
        let poly = newton_polygon(&vals)?;
        let scale = vz.mul_int(phi1 as i64);

        let mut touch_ok = Vec::new();
        for wd in &windows {
            let ok = match (wd.n_minus, wd.n_plus) {
                (Some(nm), Some(np)) => {
                    let va = (nm, vz.mul_int(lam[nm]));
                    let vb = (np, vz.mul_int(lam[np]));
                    if nm == np {
                        poly.vertices.contains(&va)
                    } else {
                        let adjacent = poly
                            .vertices
                            .windows(2)
                            .any(|pr| pr[0] == va && pr[1] == vb);
                        let want_slope = scale.mul_int(wd.k - 1);
                        let got_slope = vb.1.sub(&va.1).div(&Rat::int((np - nm) as i64));
                        adjacent && got_slope == want_slope
                    }
                }
                _ => false,
            };
            touch_ok.push((wd.k, ok));
        }

        // interval membership of every segment, located by its x-range
        // relative to the resolved windows
        let mut intervals_ok = true;
        for seg in &poly.segments {
            let x1 = seg.x_start;
            let x2 = seg.x_start + seg.length;
            let x = seg.slope.div(&scale);
            let mut ok = false;
            if x >= Rat::zero() {
                let first = windows.first().and_then(|wd| wd.n_minus);
                let in_head = first.map_or(false, |nm| x2 <= nm);
                if in_head {
                    ok = x < Rat::int(s0);
                } else {
                    for (i, wd) in windows.iter().enumerate() {
                        let (nm, np) = match (wd.n_minus, wd.n_plus) {
                            (Some(a), Some(b)) => (a, b),
                            _ => continue,
                        };
                        if x1 >= nm && x2 <= np {
                            ok = x == Rat::int(wd.k - 1);
                            break;
                        }
                        let next_nm = windows.get(i + 1).and_then(|n| n.n_minus);
                        let below_next = next_nm.map_or(true, |n| x2 <= n);
                        if x1 >= np && below_next {
                            ok = x > Rat::int(wd.k - 1)
                                && (next_nm.is_none() || x < Rat::int(wd.k + 1));
                            break;
                        }
                    }
                }
            }
            if !ok {
                intervals_ok = false;
            }
        }

        let all_touch = touch_ok.iter().all(|&(_, ok)| ok);
        pass = pass && all_touch && intervals_ok;
        z_reports.push(ZReport {
            vz,
            segments: poly.segments,
            touch_ok,
            intervals_ok,
        });
    }

    Ok(HaloReport {
        s0,
        phi1,
        windows,
        z_reports,
        pass,
    })
}

// ---------------------------------------------------------------------------
// small-slope scan over twist conductors

#[derive(Clone, Debug)]
pub struct SlopeScanRow {
    /// Wild conductor exponent c' of the sampled twist: conductor p^{c'+2},
    /// v_p(z) = 1/phi(p^{c'+1}).
    pub c_prime: u32,
    pub vz: Rat,
    /// Number of leading eigenvalues tracked: n_k = (k-1) p^{c+1} t'.
    pub tracked: usize,
    /// Tracked slopes below k-1, grouped with multiplicities.
    pub small_slopes: Vec<(Rat, usize)>,
    pub all_below: bool,
}

/// Walk locally algebraic weights of weight (k, w) with epsilon-twists of
/// increasing wild conductor p^{c'+2}: the disc coordinate has
/// v_p(z) = 1/phi(p^{c'+1}), shrinking toward the boundary, and the first
/// n_k slopes of the specialized polygon eventually all fall below k-1.
/// The weights are realized by stand-in coordinates of the exact valuation
/// in Q_p(p^{1/e}).
pub fn small_slope_scan(
    s: &LambdaSeries,
    k: i64,
    w: i64,
    samples: u32,
) -> Result<Vec<SlopeScanRow>, FredholmError> {
    if k < 2 || (k - w).rem_euclid(2) != 0 {
        return Err(FredholmError::BadInput(
            "weight k must be >= 2 with the parity of w".into(),
        ));
    }
    let step = s.p.pow(s.c + 1) as usize * s.t_prime;
    let n_k = ((k - 1) as usize * step).min(s.n_max());
    let bound = Rat::int(k - 1);
    let mut out = Vec::new();
    for i in 0..samples {
        let cp = s.c + i;
        let e = phi_p(s.p, cp + 1);
        let ring = PadicRing::pth_root(s.p, e as usize)?;
        let z = ring.pi(40);
        let vz = Rat::new(1, e as i64);
        let vals = s.specialize(&z)?;
        let poly = newton_polygon(&vals)?;
        let mut tracked_slopes = Vec::new();
        for seg in &poly.segments {
            for _ in 0..seg.length {
                if tracked_slopes.len() < n_k {
                    tracked_slopes.push((seg.slope, seg.certified));
                }
            }
        }
        let all_below = tracked_slopes.len() == n_k
            && tracked_slopes.iter().all(|(sl, cert)| *cert && *sl < bound);
        let mut small_slopes: Vec<(Rat, usize)> = Vec::new();
        for (sl, _) in tracked_slopes.iter().filter(|(sl, _)| *sl < bound) {
            match small_slopes.last_mut() {
                Some((r, n)) if r == sl => *n += 1,
                _ => small_slopes.push((*sl, 1)),
            }
        }
        out.push(SlopeScanRow {
            c_prime: cp,
            vz,
            tracked: n_k,
            small_slopes,
            all_below,
        });
    }
    Ok(out)
}
