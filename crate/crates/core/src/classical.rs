//! Classical finite-dimensional pieces at locally algebraic weights: the
//! exact polynomial action at the distinguished place, slope multisets of
//! characteristic polynomials, the small-slope comparison against the
//! overconvergent series, and the Atkin-Lehner duality check.

use crate::coset::CosetDataset;
use crate::dist::{assemble, DistError, UMatrix};
use crate::fredholm::{char_series_padic, newton_polygon, FredholmError};
use crate::lambda::LambdaPoly;
use crate::padic::{binom_coeffs, Padic, PadicError};
use crate::rat::{PrecVal, Rat};
use crate::weight::{
    make_locally_algebraic, z_coordinate, FiniteCharacter, Position, WeightComponent,
    WeightError, WeightPoint,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("weight point is not locally algebraic")]
    NotLocallyAlgebraic,
    #[error("uncertified Newton segment: {0}")]
    Uncertified(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Fredholm(#[from] FredholmError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Arith(#[from] PadicError),
}

/// dim S(k, w, eps) at wild level p^n: (k-1) p^{n-1} t.
pub fn classical_dimension(p: u64, n_level: u32, t: usize, k: i64) -> usize {
    assert!(n_level >= 1 && k >= 2);
    (k - 1) as usize * p.pow(n_level - 1) as usize * t
}

fn lift(x: &Padic, r: &crate::padic::PadicRing) -> Padic {
    if x.ring().same_ring(r) {
        x.clone()
    } else {
        x.embed(r)
    }
}

/// (1 + z)^alpha by the binomial series, for v_p(z) > 0 or z = 0 at
/// precision.
fn one_plus_z_pow(alpha: &Padic, z: &Padic) -> Padic {
    let out = z.ring().clone();
    match z.val() {
        PrecVal::AtLeast(_) => out.one(z.modexp().max(alpha.modexp()).max(1)),
        PrecVal::Exact(vz) => {
            assert!(vz > Rat::zero());
            let target = z.abs_precision().max(1);
            let mcut = (Rat::int(target).div(&vz).ceil() + 1) as usize;
            let cs = binom_coeffs(alpha, mcut);
            let mut acc = out.zero(target);
            let mut zm = out.one(z.modexp());
            for c in cs {
                acc = acc.add(&lift(&c, &out).mul(&zm));
                zm = zm.mul(z);
            }
            acc
        }
    }
}

/// Block of gamma on polynomials of degree <= k-2 at the distinguished
/// place, with the weight character at the locally algebraic point of disc
/// coordinate z: row i lists the monomial coefficients of
///
///   (x^i . gamma) = scalar_cl * a^{2-k} (a+bx)^{k-2-i} (c+dx)^i,
///
/// scalar_cl = omega(d_a, d_u/d_a) eta(s) (1+z)^{plog(u_0)/p} with
/// u_0 = <a>/s. Exactly polynomial, so degree <= k-2 is preserved and the
/// moment truncation intertwines this block with the overconvergent one.
pub fn classical_block(
    comp: &WeightComponent,
    g: &crate::coset::Mat2,
    k: i64,
    z: &Padic,
) -> Result<Vec<Padic>, ClassicalError> {
    let out = z.ring().clone();
    let n = (k - 1) as usize;
    let qp = g.a.ring().clone();
    let prec = g.a.modexp().max(2);

    let det = g.det();
    let vdet = match det.val() {
        PrecVal::Exact(v) if v.is_integer() && v.num() >= 0 => v.num(),
        _ => {
            return Err(ClassicalError::BadInput(
                "determinant must have exact nonnegative integral valuation".into(),
            ))
        }
    };
    let u_det = det.mul_p_pow(-vdet);
    let delta_a = g.a.teichmuller()?;
    let ua = g.a.div(&delta_a)?;
    let delta_u = u_det.teichmuller()?;
    let uu = u_det.div(&delta_u)?;
    let delta2 = delta_u.div(&delta_a)?;
    let s = uu.sqrt_one_unit()?;
    let u0 = ua.div(&s)?;
    let alpha0 = u0.plog()?.mul_p_pow(-1);
    let scalar = comp
        .omega_value(&delta_a, &delta2)
        .embed(&out)
        .mul(&comp.eta_value(&s, &out)?)
        .mul(&one_plus_z_pow(&alpha0, z));
    let a_pow = g.a.inv()?.pow_u64((k - 2) as u64);
    let scalar = scalar.mul(&lift(&a_pow, &out));

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
    let mut block = vec![out.zero(1 << 40); n * n];
    for i in 0..n {
        let mut poly = LambdaPoly::constant(qp.one(prec), n);
        for _ in 0..(n - 1 - i) {
            poly = poly.mul(&ab);
        }
        for _ in 0..i {
            poly = poly.mul(&cd);
        }
        for l in 0..n {
            block[i * n + l] = lift(poly.coeff(l), &out).mul(&scalar);
        }
    }
    Ok(block)
}

/// Matrix of the named operator on the classical space at a locally
/// algebraic weight point.
pub fn classical_hecke_matrix(
    ds: &CosetDataset,
    name: &str,
    wp: &WeightPoint,
    prec: u32,
) -> Result<UMatrix<Padic>, ClassicalError> {
    let k = match &wp.position {
        Position::LocallyAlgebraic { k, .. } => *k,
        Position::Specialized(_) => return Err(ClassicalError::NotLocallyAlgebraic),
    };
    let comp = &wp.component;
    let (z, _) = z_coordinate(wp, prec)?;
    let datum = ds
        .datum(name)
        .ok_or_else(|| DistError::MissingDatum(name.to_string()))?;
    let out = z.ring().clone();
    let n = (k - 1) as usize;
    let zero = out.zero(1 << 40);
    let ident = || {
        let mut b = vec![zero.clone(); n * n];
        for j in 0..n {
            b[j * n + j] = out.one(40);
        }
        b
    };
    let mut u = assemble(
        ds,
        datum,
        n,
        &|g| classical_block(comp, g, k, &z).map_err(classical_to_dist),
        &ident,
        &zero,
    )?;
    u.name = format!("{}@k={}", name, k);
    Ok(u)
}

fn classical_to_dist(e: ClassicalError) -> DistError {
    match e {
        ClassicalError::Dist(d) => d,
        ClassicalError::Arith(a) => DistError::Arith(a),
        other => DistError::NotInMonoid(other.to_string()),
    }
}

pub fn classical_u_matrix(
    ds: &CosetDataset,
    wp: &WeightPoint,
    prec: u32,
) -> Result<UMatrix<Padic>, ClassicalError> {
    classical_hecke_matrix(ds, "Uv", wp, prec)
}

// ---------------------------------------------------------------------------
// slopes

/// Slopes of a characteristic polynomial with multiplicity, ascending.
/// `missing` counts eigenvalues pushed to infinite slope (degree drop);
/// `anomalies` lists slopes outside [0, k-1], reported rather than asserted.
#[derive(Clone, Debug)]
pub struct SlopeMultiset {
    pub slopes: Vec<Rat>,
    pub missing: usize,
    pub anomalies: Vec<Rat>,
}

/// Slope multiset of det(1 - T U) for a pointwise matrix. Every segment must
/// be certified (exact coefficient valuations).
pub fn slope_multiset(u: &UMatrix<Padic>, k: i64) -> Result<SlopeMultiset, ClassicalError> {
    let cp = char_series_padic(u, u.dim);
    let vals: Vec<PrecVal> = cp.iter().map(|c| c.val()).collect();
    let poly = newton_polygon(&vals)?;
    let mut slopes = Vec::new();
    for seg in &poly.segments {
        if !seg.certified {
            return Err(ClassicalError::Uncertified(format!(
                "slope {}/{} at x = {}",
                seg.slope.num(),
                seg.slope.den(),
                seg.x_start
            )));
        }
        for _ in 0..seg.length {
            slopes.push(seg.slope);
        }
    }
    let missing = u.dim - slopes.len();
    let bound = Rat::int(k - 1);
    let anomalies = slopes
        .iter()
        .filter(|s| **s < Rat::zero() || **s > bound)
        .copied()
        .collect();
    Ok(SlopeMultiset {
        slopes,
        missing,
        anomalies,
    })
}

// ---------------------------------------------------------------------------
// small-slope comparison

#[derive(Clone, Debug)]
pub struct ClassicalityReport {
    pub k: i64,
    pub oc_small: Vec<(Rat, usize)>,
    pub cl_small: Vec<(Rat, usize)>,
    pub agree: bool,
}

fn group(slopes: &[Rat]) -> Vec<(Rat, usize)> {
    let mut out: Vec<(Rat, usize)> = Vec::new();
    for s in slopes {
        match out.last_mut() {
            Some((r, n)) if r == s => *n += 1,
            _ => out.push((*s, 1)),
        }
    }
    out
}

/// Compare the sub-(k-1)-slope prefix of the overconvergent characteristic
/// series at the locally algebraic weight (k, w = ds.w, trivial eps) with
/// the slopes of the classical characteristic polynomial below k-1.
pub fn compare_classicality(
    ds: &CosetDataset,
    k: i64,
    m_trunc: usize,
    prec: u32,
) -> Result<ClassicalityReport, ClassicalError> {
    let p = ds.p;
    let triv = FiniteCharacter::new(p, 1, 0, 0);
    let wp = make_locally_algebraic(p, k, ds.w, (triv.clone(), triv))?;
    let comp = wp.component.clone();
    let (z, _) = z_coordinate(&wp, prec)?;

    let u_cl = classical_u_matrix(ds, &wp, prec)?;
    let cl = slope_multiset(&u_cl, k)?;
    let bound = Rat::int(k - 1);
    let cl_small: Vec<Rat> = cl
        .slopes
        .iter()
        .filter(|s| **s < bound)
        .copied()
        .collect();

    let u_oc = crate::dist::u_v_matrix_at(ds, &comp, m_trunc, &z)?;
    // enough coefficients to see the polygon climb past slope k-1
    let n_max = (u_cl.dim + u_cl.t_base * u_cl.alg_dim + 4).min(u_oc.dim);
    let cp = char_series_padic(&u_oc, n_max);
    let vals: Vec<PrecVal> = cp.iter().map(|c| c.val()).collect();
    let poly = newton_polygon(&vals)?;
    let mut oc_small = Vec::new();
    for seg in &poly.segments {
        if seg.slope < bound {
            if !seg.certified {
                return Err(ClassicalError::Uncertified(format!(
                    "overconvergent slope {}/{} at x = {}",
                    seg.slope.num(),
                    seg.slope.den(),
                    seg.x_start
                )));
            }
            for _ in 0..seg.length {
                oc_small.push(seg.slope);
            }
        }
    }

    let agree = oc_small == cl_small;
    Ok(ClassicalityReport {
        k,
        oc_small: group(&oc_small),
        cl_small: group(&cl_small),
        agree,
    })
}

/// proj . U^oc = U^cl . proj, entrywise at the carried precision: the rows of
/// the overconvergent matrix with moment degree below k-1 must reproduce the
/// classical matrix on columns below k-1 and vanish beyond.
pub fn check_intertwining(
    u_oc: &UMatrix<Padic>,
    u_cl: &UMatrix<Padic>,
    k: i64,
    tol: i64,
) -> bool {
    let n = (k - 1) as usize;
    let m = u_oc.m_trunc;
    let nb = u_oc.dim / m;
    if u_cl.m_trunc != n || u_cl.dim / n != nb || m < n {
        return false;
    }
    let ring = u_oc.at(0, 0).ring().clone();
    let is_zero = |x: &Padic| x.add(&ring.zero(tol)).is_zero_at_precision();
    for b1 in 0..nb {
        for j in 0..n {
            for b2 in 0..nb {
                for l in 0..m {
                    let oc = u_oc.at(b1 * m + j, b2 * m + l);
                    if l < n {
                        let cl = u_cl.at(b1 * n + j, b2 * n + l);
                        if !is_zero(&oc.sub(cl)) {
                            return false;
                        }
                    } else if !is_zero(oc) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Atkin-Lehner duality

#[derive(Clone, Debug)]
pub struct AlReport {
    pub ok: bool,
    pub count_ok: bool,
    /// First index i where slopes_eps[i] + slopes_eps_inv[N-1-i] != k-1.
    pub first_violation: Option<usize>,
    pub sum: Rat,
    pub sum_ok: bool,
}

/// Check the duality between the U-slopes at nebentypus eps and eps^{-1}:
/// sorted ascending, alpha_i(eps) + alpha_{N-1-i}(eps^{-1}) = k-1 for all i,
/// so the combined slope sum is (k-1) * N.
pub fn al_duality_check(
    slopes_eps: &[Rat],
    slopes_eps_inv: &[Rat],
    k: i64,
    expected_count: usize,
) -> AlReport {
    let mut a = slopes_eps.to_vec();
    let mut b = slopes_eps_inv.to_vec();
    a.sort();
    b.sort();
    let count_ok = a.len() == expected_count && b.len() == expected_count;
    let mut first_violation = None;
    if a.len() == b.len() {
        let n = a.len();
        let target = Rat::int(k - 1);
        for i in 0..n {
            if a[i].add(&b[n - 1 - i]) != target {
                first_violation = Some(i);
                break;
            }
        }
    } else {
        first_violation = Some(0);
    }
    let mut sum = Rat::zero();
    for s in a.iter().chain(&b) {
        sum = sum.add(s);
    }
    let sum_ok = count_ok && sum == Rat::int(k - 1).mul_int(expected_count as i64);
    AlReport {
        ok: count_ok && first_violation.is_none() && sum_ok,
        count_ok,
        first_violation,
        sum,
        sum_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::{gen_synthetic, Mat2, SynthParams};
    use crate::dist::{dist_block_at, u_v_matrix_at};
    use crate::padic::PadicRing;

    fn triv_wp(p: u64, k: i64, w: i64) -> WeightPoint {
        let triv = FiniteCharacter::new(p, 1, 0, 0);
        make_locally_algebraic(p, k, w, (triv.clone(), triv)).unwrap()
    }

    #[test]
    fn dimension_formula() {
        assert_eq!(classical_dimension(3, 1, 2, 2), 2);
        assert_eq!(classical_dimension(3, 1, 2, 4), 6);
        assert_eq!(classical_dimension(3, 2, 1, 3), 6);
        assert_eq!(classical_dimension(5, 1, 3, 5), 12);
    }

    #[test]
    fn classical_block_matches_specialized_action() {
        // the overconvergent block at z_k restricted to degrees <= k-2 must
        // equal the exact polynomial block, and rows below k-1 must vanish
        // in higher degree
        let qp = PadicRing::qp(3).unwrap();
        let g = Mat2::from_ints(&qp, [2, 5, 6, 7], 30);
        let wp = triv_wp(3, 4, 0);
        let comp = &wp.component;
        let (z, _) = z_coordinate(&wp, 30).unwrap();
        let m = 8;
        let oc = dist_block_at(comp, &g, m, &z).unwrap();
        let cl = classical_block(comp, &g, 4, &z).unwrap();
        let n = 3;
        let tolz = qp.zero(10);
        for j in 0..n {
            for l in 0..m {
                let o = &oc[j * m + l];
                if l < n {
                    let d = o.sub(&cl[j * n + l]).add(&tolz);
                    assert!(d.is_zero_at_precision(), "j={} l={} {:?}", j, l, d);
                } else {
                    assert!(
                        o.add(&tolz).is_zero_at_precision(),
                        "j={} l={} should vanish: {:?}",
                        j,
                        l,
                        o
                    );
                }
            }
        }
    }

    #[test]
    fn intertwining_on_synthetic_dataset() {
        let params = SynthParams {
            p: 3,
            d: 2,
            t: 2,
            w: 0,
            k_list: vec![2],
            n_away: 1,
            n_store: 30,
            perturb: true,
        };
        let ds = gen_synthetic(19, &params).unwrap();
        let wp = triv_wp(3, 4, 0);
        let (z, _) = z_coordinate(&wp, 30).unwrap();
        let u_oc = u_v_matrix_at(&ds, &wp.component, 8, &z).unwrap();
        let u_cl = classical_u_matrix(&ds, &wp, 30).unwrap();
        assert!(check_intertwining(&u_oc, &u_cl, 4, 8));
    }

    #[test]
    fn slope_multiset_of_diagonal() {
        let qp = PadicRing::qp(3).unwrap();
        let d = [1i64, 3, 9];
        let mut entries = vec![qp.zero(30); 9];
        for i in 0..3 {
            entries[i * 3 + i] = qp.int(d[i], 25);
        }
        let u = UMatrix {
            dim: 3,
            t_base: 3,
            alg_dim: 1,
            m_trunc: 1,
            entries,
            name: "diag".into(),
            dataset_hash: String::new(),
        };
        let sm = slope_multiset(&u, 4).unwrap();
        assert_eq!(sm.slopes, vec![Rat::int(0), Rat::int(1), Rat::int(2)]);
        assert_eq!(sm.missing, 0);
        assert!(sm.anomalies.is_empty());
    }

    #[test]
    fn classicality_comparison_on_synthetic_dataset() {
        let params = SynthParams {
            p: 3,
            d: 1,
            t: 2,
            w: 0,
            k_list: vec![],
            n_away: 1,
            n_store: 30,
            perturb: true,
        };
        let ds = gen_synthetic(23, &params).unwrap();
        let rep = compare_classicality(&ds, 2, 12, 30).unwrap();
        assert!(rep.agree, "{:?}", rep);
    }

    #[test]
    fn al_duality_hand_cases() {
        let r = |n: i64, d: i64| Rat::new(n, d);
        // k = 3, N = 4: pairs summing to 2
        let se = [r(0, 1), r(1, 1), r(1, 1), r(2, 1)];
        let si = [r(0, 1), r(1, 1), r(1, 1), r(2, 1)];
        let rep = al_duality_check(&se, &si, 3, 4);
        assert!(rep.ok);
        assert_eq!(rep.sum, Rat::int(8));
        // perturb one slope: after sorting it sits at index 2 and the
        // pairing breaks there
        let bad = [r(0, 1), r(3, 2), r(1, 1), r(2, 1)];
        let rep = al_duality_check(&bad, &si, 3, 4);
        assert!(!rep.ok);
        assert_eq!(rep.first_violation, Some(2));
        // count mismatch
        let rep = al_duality_check(&se[..3], &si, 3, 4);
        assert!(!rep.count_ok);
    }
}
