//! Weight space: components indexed by a pair (eta, omega), finite-order
//! characters of Z_p^x by generator exponents, locally algebraic weights
//! (k, w, eps), the disc coordinate z, and evaluation of the universal weight
//! character either at a specialization or as a truncated series in X.

use crate::lambda::LambdaPoly;
use crate::padic::{binom_coeffs, exp_p, ExtKind, Padic, PadicError, PadicRing};
use crate::rat::{PrecVal, Rat, ValQ};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("k = {0} is below the minimal weight 2")]
    KTooSmall(i64),
    #[error("parity mismatch: k = {k} and w = {w} must be congruent mod 2")]
    ParityMismatch { k: i64, w: i64 },
    #[error("characters have different primes")]
    PrimeMismatch,
    #[error("evaluation ring lacks the needed p-power roots of unity (need level {need}, have {have})")]
    RingTooSmall { need: u32, have: u32 },
    #[error("weight characters are only evaluated on units")]
    NotUnit,
    #[error(transparent)]
    Arith(#[from] PadicError),
}

/// Finite-order character of Z_p^x, stored by generator exponents: the
/// Teichmueller part maps to its `tame`-th power, and exp(p) maps to
/// zeta_{p^{m-1}}^wild. Conductor is p^m; the representation is kept minimal
/// (wild exponent prime to p whenever m >= 2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteCharacter {
    p: u64,
    m: u32,
    tame: u64,
    wild: u64,
}

fn pow_u64(b: u64, e: u32) -> u64 {
    (0..e).fold(1u64, |a, _| a.checked_mul(b).unwrap())
}

impl FiniteCharacter {
    /// Character with the given exponents at level p^m; the level is lowered
    /// to the true conductor.
    pub fn new(p: u64, m: u32, tame: u64, wild: u64) -> FiniteCharacter {
        let tame = tame % (p - 1);
        let mut m = m;
        let mut wild = if m >= 1 { wild % pow_u64(p, m - 1) } else { 0 };
        while m >= 2 && wild % p == 0 {
            // zeta_{p^{m-1}}^{wild} = zeta_{p^{m-2}}^{wild/p}
            wild /= p;
            m -= 1;
        }
        if wild == 0 {
            m = if tame == 0 { 0 } else { 1 };
        }
        FiniteCharacter { p, m, tame, wild }
    }

    pub fn trivial(p: u64) -> FiniteCharacter {
        FiniteCharacter::new(p, 0, 0, 0)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Conductor exponent m (conductor p^m).
    pub fn conductor_exponent(&self) -> u32 {
        self.m
    }

    pub fn tame(&self) -> u64 {
        self.tame
    }

    pub fn wild(&self) -> u64 {
        self.wild
    }

    /// Wild exponent lifted to level p^{lvl} (lvl >= m-1).
    fn wild_at_level(&self, lvl: u32) -> u64 {
        if self.m < 2 {
            return 0;
        }
        self.wild * pow_u64(self.p, lvl - (self.m - 1))
    }

    pub fn product(&self, other: &FiniteCharacter) -> Result<FiniteCharacter, WeightError> {
        if self.p != other.p {
            return Err(WeightError::PrimeMismatch);
        }
        let lvl = self.m.max(other.m).max(1) - 1;
        Ok(FiniteCharacter::new(
            self.p,
            lvl + 1,
            self.tame + other.tame,
            self.wild_at_level(lvl) + other.wild_at_level(lvl),
        ))
    }

    pub fn inverse(&self) -> FiniteCharacter {
        let wild = if self.m >= 2 {
            pow_u64(self.p, self.m - 1) - self.wild
        } else {
            0
        };
        FiniteCharacter::new(self.p, self.m, (self.p - 1) - self.tame, wild)
    }

    /// Value on a 1-unit u: zeta_{p^{m-1}}^{wild * (plog(u)/p)}. The output
    /// ring must contain zeta_{p^{m-1}}.
    pub fn eval_one_unit(&self, u: &Padic, out: &PadicRing) -> Result<Padic, WeightError> {
        let prec = u.modexp().max(2);
        if self.m < 2 {
            return Ok(out.one(prec));
        }
        let lvl = self.m - 1;
        let have = match out.kind() {
            ExtKind::CyclotomicWild { c } => *c,
            _ => 0,
        };
        if have < lvl {
            return Err(WeightError::RingTooSmall { need: lvl, have });
        }
        let alpha = u.plog()?.mul_p_pow(-1);
        let a = alpha
            .residue_u64(lvl)
            .ok_or(PadicError::InsufficientPrecision(
                "log residue below character level".into(),
            ))?;
        let exponent = self
            .wild
            .checked_mul(a)
            .unwrap()
            .checked_mul(pow_u64(self.p, have - lvl))
            .unwrap();
        Ok(out.zeta(prec).pow_u64(exponent))
    }

    /// Value on an arbitrary unit of Z_p.
    pub fn eval(&self, a: &Padic, out: &PadicRing) -> Result<Padic, WeightError> {
        let delta = a.teichmuller()?;
        let one_unit = a.div(&delta)?;
        let tame_val = delta.pow_u64(self.tame).embed(out);
        Ok(tame_val.mul(&self.eval_one_unit(&one_unit, out)?))
    }
}

/// A connected component of weight space, indexed by (eta, omega): eta is the
/// restriction to the diagonal torus written as t^w * eta_tilde(t), omega the
/// pair of tame exponents on Delta x Delta. The coefficient field is
/// E = Q_p(zeta_{p^c}) with c determined by the wild conductor of eta_tilde.
#[derive(Clone, Debug)]
pub struct WeightComponent {
    p: u64,
    w: i64,
    eta_tilde: FiniteCharacter,
    omega: (u64, u64),
    c: u32,
}

impl WeightComponent {
    pub fn new(
        p: u64,
        w: i64,
        eta_tilde: FiniteCharacter,
        omega: (u64, u64),
    ) -> Result<WeightComponent, WeightError> {
        if eta_tilde.p() != p {
            return Err(WeightError::PrimeMismatch);
        }
        // omega on the diagonal must equal eta on Delta
        let lhs = (omega.0 + omega.1) % (p - 1);
        let rhs = (w + eta_tilde.tame() as i64).rem_euclid(p as i64 - 1) as u64;
        assert_eq!(lhs, rhs, "omega does not restrict to eta on the diagonal");
        let c = eta_tilde.conductor_exponent().saturating_sub(1);
        Ok(WeightComponent {
            p,
            w,
            eta_tilde,
            omega,
            c,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn w(&self) -> i64 {
        self.w
    }

    pub fn eta_tilde(&self) -> &FiniteCharacter {
        &self.eta_tilde
    }

    pub fn omega(&self) -> (u64, u64) {
        self.omega
    }

    /// c with E = Q_p(zeta_{p^c}).
    pub fn c(&self) -> u32 {
        self.c
    }

    /// The coefficient field E as an arithmetic context.
    pub fn coefficient_ring(&self) -> PadicRing {
        PadicRing::cyclotomic(self.p, self.c).expect("valid ring")
    }

    /// v_p of the uniformizer of E: 1/phi(p^c), with phi(p^0) = 1.
    pub fn vp_pi_e(&self) -> Rat {
        Rat::new(1, phi_p(self.p, self.c) as i64)
    }

    /// omega(delta_1, delta_2) for Teichmueller units delta_i (values in Q_p).
    pub fn omega_value(&self, d1: &Padic, d2: &Padic) -> Padic {
        d1.pow_u64(self.omega.0).mul(&d2.pow_u64(self.omega.1))
    }

    /// eta(s) = s^w * eta_tilde(s) for a 1-unit s, valued in `out`.
    pub fn eta_value(&self, s: &Padic, out: &PadicRing) -> Result<Padic, WeightError> {
        let sw = s.pow_i64(self.w)?;
        let sw = if s.ring().same_ring(out) {
            sw
        } else {
            sw.embed(out)
        };
        Ok(sw.mul(&self.eta_tilde.eval_one_unit(s, out)?))
    }
}

pub fn phi_p(p: u64, c: u32) -> u64 {
    if c == 0 {
        1
    } else {
        (p - 1) * pow_u64(p, c - 1)
    }
}

/// Position of a point in its component: an explicit disc coordinate, or a
/// locally algebraic weight (k, w, eps) not yet specialized.
#[derive(Clone, Debug)]
pub enum Position {
    Specialized(Padic),
    LocallyAlgebraic {
        k: i64,
        eps: (FiniteCharacter, FiniteCharacter),
    },
}

#[derive(Clone, Debug)]
pub struct WeightPoint {
    pub component: WeightComponent,
    pub position: Position,
}

/// The locally algebraic weight chi_k * eps at central weight w, placed in
/// the component determined by eta_tilde = eps_1*eps_2 and the tame data of
/// chi_k*eps.
pub fn make_locally_algebraic(
    p: u64,
    k: i64,
    w: i64,
    eps: (FiniteCharacter, FiniteCharacter),
) -> Result<WeightPoint, WeightError> {
    if k < 2 {
        return Err(WeightError::KTooSmall(k));
    }
    if (k - w).rem_euclid(2) != 0 {
        return Err(WeightError::ParityMismatch { k, w });
    }
    if eps.0.p() != p || eps.1.p() != p {
        return Err(WeightError::PrimeMismatch);
    }
    let eta_tilde = eps.0.product(&eps.1)?;
    let a1 = (w + k - 2) / 2;
    let a2 = (w - k + 2) / 2;
    let pm1 = p as i64 - 1;
    let omega = (
        (a1 + eps.0.tame() as i64).rem_euclid(pm1) as u64,
        (a2 + eps.1.tame() as i64).rem_euclid(pm1) as u64,
    );
    let component = WeightComponent::new(p, w, eta_tilde, omega)?;
    Ok(WeightPoint {
        component,
        position: Position::LocallyAlgebraic { k, eps },
    })
}

/// Disc coordinate of a locally algebraic point:
/// z = exp(p)^{k-2} * (eps_1/eps_2)(exp(p)) - 1, with its exact valuation.
pub fn z_coordinate(wp: &WeightPoint, prec: u32) -> Result<(Padic, ValQ), WeightError> {
    let (k, eps) = match &wp.position {
        Position::LocallyAlgebraic { k, eps } => (*k, eps),
        Position::Specialized(_) => panic!("z_coordinate needs a locally algebraic point"),
    };
    let p = wp.component.p();
    let ratio = eps.0.product(&eps.1.inverse())?;
    let cprime = ratio.conductor_exponent().saturating_sub(1);
    if k == 2 && cprime == 0 {
        let qp = PadicRing::qp(p)?;
        return Ok((qp.zero(prec as i64), ValQ::Infinity));
    }
    let ring = PadicRing::cyclotomic(p, cprime)?;
    let g = exp_p(&ring, prec);
    // (eps_1/eps_2)(exp(p)): plog(exp(p))/p = 1
    let zeta_part = if cprime == 0 {
        ring.one(prec)
    } else {
        ring.zeta(prec).pow_u64(ratio.wild())
    };
    let z = g.pow_u64((k - 2) as u64).mul(&zeta_part).sub(&ring.one(prec));
    let val = match z.val() {
        PrecVal::Exact(r) => ValQ::Finite(r),
        PrecVal::AtLeast(_) => ValQ::Infinity,
    };
    Ok((z, val))
}

/// Shared decomposition for universal-character evaluation: returns
/// (scalar prefactor omega(d1,d2)*eta(s) in `out`, alpha = plog(u)/p in Z_p).
fn char_parts(
    comp: &WeightComponent,
    t1: &Padic,
    t2: &Padic,
    out: &PadicRing,
) -> Result<(Padic, Padic), WeightError> {
    let d1 = t1.teichmuller().map_err(|_| WeightError::NotUnit)?;
    let d2 = t2.teichmuller().map_err(|_| WeightError::NotUnit)?;
    let u1 = t1.div(&d1)?;
    let u2 = t2.div(&d2)?;
    let s = u1.mul(&u2).sqrt_one_unit()?;
    let u = u1.div(&u2)?.sqrt_one_unit()?;
    let scalar = comp
        .omega_value(&d1, &d2)
        .embed(out)
        .mul(&comp.eta_value(&s, out)?);
    let alpha = u.plog()?.mul_p_pow(-1);
    Ok((scalar, alpha))
}

/// kappa_{(eta,omega)}(t1,t2) as a series in X mod X^mx:
/// omega(d1,d2) * eta(s) * (1+X)^{plog(u)/p}.
pub fn eval_weight_char_series(
    comp: &WeightComponent,
    t1: &Padic,
    t2: &Padic,
    mx: usize,
) -> Result<LambdaPoly, WeightError> {
    let out = comp.coefficient_ring();
    let (scalar, alpha) = char_parts(comp, t1, t2, &out)?;
    let coeffs = binom_coeffs(&alpha, mx)
        .into_iter()
        .map(|c| c.embed(&out).mul(&scalar))
        .collect();
    Ok(LambdaPoly::new(coeffs))
}

/// kappa_{(eta,omega)}(t1,t2) evaluated at X = z (v_p(z) > 0 required for
/// convergence of the binomial series).
pub fn eval_weight_char_at(
    comp: &WeightComponent,
    t1: &Padic,
    t2: &Padic,
    z: &Padic,
) -> Result<Padic, WeightError> {
    let out = z.ring().clone();
    let (scalar, alpha) = char_parts(comp, t1, t2, &out)?;
    let vz = match z.val() {
        PrecVal::Exact(r) => r,
        PrecVal::AtLeast(_) => {
            // z = 0 at precision: (1+z)^alpha = 1 at matching precision
            return Ok(scalar);
        }
    };
    assert!(vz > Rat::zero(), "specialization requires v_p(z) > 0");
    // C(alpha, m) is integral, so the m-th term has valuation >= m*v_p(z)
    let target = z.abs_precision().max(1);
    let mcut = (Rat::int(target).div(&vz).ceil() + 1) as usize;
    let cs = binom_coeffs(&alpha, mcut);
    let mut acc = out.zero(target);
    let mut zm = out.one(z.modexp());
    for c in cs {
        acc = acc.add(&c.embed(&out).mul(&zm));
        zm = zm.mul(z);
    }
    Ok(acc.mul(&scalar))
}

/// True iff z lies in the boundary annulus of the component:
/// 0 < v_p(z) < v_p(pi_E) = 1/phi(p^c).
pub fn in_boundary_annulus(z: &Padic, comp: &WeightComponent) -> bool {
    match z.val() {
        PrecVal::Exact(v) => v > Rat::zero() && v < comp.vp_pi_e(),
        PrecVal::AtLeast(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn qp(p: u64) -> PadicRing {
        PadicRing::qp(p).unwrap()
    }

    #[test]
    fn character_normalization() {
        // wild exponent divisible by p lowers the level
        let chi = FiniteCharacter::new(3, 3, 0, 3);
        assert_eq!(chi.conductor_exponent(), 2);
        assert_eq!(chi.wild(), 1);
        let triv = FiniteCharacter::new(3, 2, 0, 0);
        assert_eq!(triv.conductor_exponent(), 0);
        let tame = FiniteCharacter::new(3, 2, 1, 0);
        assert_eq!(tame.conductor_exponent(), 1);
    }

    #[test]
    fn character_group_laws() {
        let a = FiniteCharacter::new(3, 3, 1, 2);
        let b = a.inverse();
        let prod = a.product(&b).unwrap();
        assert_eq!(prod, FiniteCharacter::trivial(3));
    }

    #[test]
    fn character_is_multiplicative() {
        let r = qp(3);
        let ext = PadicRing::cyclotomic(3, 2).unwrap();
        let chi = FiniteCharacter::new(3, 3, 1, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = r.int(1 + rng.gen_range(0..3_i64.pow(8)), 12);
            let b = r.int(1 + rng.gen_range(0..3_i64.pow(8)), 12);
            let (a, b) = match (a.val(), b.val()) {
                (PrecVal::Exact(x), PrecVal::Exact(y))
                    if x == Rat::zero() && y == Rat::zero() =>
                {
                    (a, b)
                }
                _ => continue,
            };
            let lhs = chi.eval(&a.mul(&b), &ext).unwrap();
            let rhs = chi.eval(&a, &ext).unwrap().mul(&chi.eval(&b, &ext).unwrap());
            assert!(lhs.congruent(&rhs));
        }
    }

    #[test]
    fn locally_algebraic_construction() {
        let triv = FiniteCharacter::trivial(3);
        let wp = make_locally_algebraic(3, 2, 0, (triv.clone(), triv.clone())).unwrap();
        assert_eq!(wp.component.c(), 0);
        assert_eq!(wp.component.omega(), (0, 0));
        assert!(matches!(
            make_locally_algebraic(3, 3, 0, (triv.clone(), triv.clone())),
            Err(WeightError::ParityMismatch { .. })
        ));
        assert!(matches!(
            make_locally_algebraic(3, 1, 1, (triv.clone(), triv.clone())),
            Err(WeightError::KTooSmall(1))
        ));
        // wild eps pair with eps_1*eps_2 = 1: trivial eta, but c' from the ratio
        let chi = FiniteCharacter::new(3, 2, 0, 1);
        let wp = make_locally_algebraic(3, 2, 0, (chi.clone(), chi.inverse())).unwrap();
        assert_eq!(wp.component.c(), 0); // eta_tilde trivial
        let (_, v) = z_coordinate(&wp, 12).unwrap();
        assert_eq!(v, ValQ::finite(1, 2)); // conductor p^2 ratio: 1/phi(p)
    }

    #[test]
    fn z_coordinate_valuations() {
        let triv = FiniteCharacter::trivial(3);
        // k = 2, trivial: z = 0
        let wp = make_locally_algebraic(3, 2, 0, (triv.clone(), triv.clone())).unwrap();
        let (z, v) = z_coordinate(&wp, 12).unwrap();
        assert_eq!(v, ValQ::Infinity);
        assert!(z.is_zero_at_precision());
        // k = 4 trivial at p = 3: v_p(exp(3)^2 - 1) = 1 + v_3(2) = 1
        let wp = make_locally_algebraic(3, 4, 0, (triv.clone(), triv.clone())).unwrap();
        let (_, v) = z_coordinate(&wp, 12).unwrap();
        assert_eq!(v, ValQ::int(1));
        // conductor p^{c+2} ratio gives 1/phi(p^{c+1}), c = 0,1,2
        for c in 0u32..3 {
            let chi = FiniteCharacter::new(3, c + 2, 0, 1);
            let wp = make_locally_algebraic(3, 2, 0, (chi.clone(), chi.inverse())).unwrap();
            let (z, v) = z_coordinate(&wp, 8).unwrap();
            let want = phi_p(3, c + 1) as i64;
            assert_eq!(v, ValQ::finite(1, want), "c = {}", c);
            assert!(!z.is_zero_at_precision());
        }
    }

    #[test]
    fn universal_char_defining_property() {
        // kappa(exp(p), exp(p)^{-1}) = 1 + X exactly
        let comp = WeightComponent::new(3, 0, FiniteCharacter::trivial(3), (0, 0)).unwrap();
        let r = qp(3);
        let g = exp_p(&r, 12);
        let gi = g.inv().unwrap();
        let s = eval_weight_char_series(&comp, &g, &gi, 5).unwrap();
        assert!(s.coeff(0).congruent(&r.one(10)));
        assert!(s.coeff(1).congruent(&r.one(10)));
        for m in 2..5 {
            assert!(s.coeff(m).is_zero_at_precision(), "coeff {}", m);
        }
    }

    #[test]
    fn diagonal_evaluation_is_eta() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let r = qp(3);
        let eta = FiniteCharacter::new(3, 2, 1, 1);
        let comp = WeightComponent::new(3, 1, eta.clone(), (1, 1)).unwrap();
        let ext = comp.coefficient_ring();
        for _ in 0..20 {
            let t = r.int(1 + 3 * rng.gen_range(0..3_i64.pow(7)), 12);
            let s = eval_weight_char_series(&comp, &t, &t, 4).unwrap();
            // no X-dependence
            for m in 1..4 {
                assert!(s.coeff(m).is_zero_at_precision());
            }
            // value is eta(t) = t^w eta_tilde(t)
            let want = t.embed(&ext).mul(&eta.eval(&t, &ext).unwrap());
            assert!(s.coeff(0).congruent(&want));
        }
    }

    #[test]
    fn locally_algebraic_round_trip() {
        // evaluating the universal character at z reproduces chi_k * eps
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let p = 3u64;
        let r = qp(p);
        let cases = [
            (2i64, 0i64, FiniteCharacter::trivial(p), FiniteCharacter::trivial(p)),
            (4, 0, FiniteCharacter::trivial(p), FiniteCharacter::trivial(p)),
            (3, 1, FiniteCharacter::new(p, 1, 1, 0), FiniteCharacter::trivial(p)),
            (2, 0, FiniteCharacter::new(p, 2, 0, 1), FiniteCharacter::new(p, 2, 0, 2)),
        ];
        for (k, w, e1, e2) in cases {
            let wp = make_locally_algebraic(p, k, w, (e1.clone(), e2.clone())).unwrap();
            let (z, _) = z_coordinate(&wp, 14).unwrap();
            let out = z.ring().clone();
            let a1 = (w + k - 2) / 2;
            let a2 = (w - k + 2) / 2;
            for _ in 0..50 {
                let t1 = r.int(1 + rng.gen_range(0..p.pow(9) as i64), 14);
                let t2 = r.int(1 + rng.gen_range(0..p.pow(9) as i64), 14);
                if t1.val() != PrecVal::Exact(Rat::zero())
                    || t2.val() != PrecVal::Exact(Rat::zero())
                {
                    continue;
                }
                let got = eval_weight_char_at(&wp.component, &t1, &t2, &z).unwrap();
                let want = t1
                    .pow_i64(a1)
                    .unwrap()
                    .embed(&out)
                    .mul(&t2.pow_i64(a2).unwrap().embed(&out))
                    .mul(&e1.eval(&t1, &out).unwrap())
                    .mul(&e2.eval(&t2, &out).unwrap());
                assert!(
                    got.congruent(&want),
                    "k={} w={} t1={:?} t2={:?}",
                    k,
                    w,
                    t1,
                    t2
                );
            }
        }
    }

    #[test]
    fn boundary_annulus_membership() {
        let comp0 = WeightComponent::new(3, 0, FiniteCharacter::trivial(3), (0, 0)).unwrap();
        let half = PadicRing::pth_root(3, 2).unwrap().pi(10);
        assert!(in_boundary_annulus(&half, &comp0));
        let one = qp(3).int(3, 10);
        assert!(!in_boundary_annulus(&one, &comp0));
        // c = 1 component: bound is 1/2
        let eta = FiniteCharacter::new(3, 2, 0, 1);
        let comp1 = WeightComponent::new(3, 1, eta, (1, 0)).unwrap();
        let third = PadicRing::pth_root(3, 3).unwrap().pi(10);
        assert!(in_boundary_annulus(&third, &comp1));
        assert!(!in_boundary_annulus(&half, &comp1) || comp1.vp_pi_e() > Rat::new(1, 2));
    }
}
