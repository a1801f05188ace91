//! Exact bounded-precision arithmetic in Z_p, Q_p and totally ramified
//! extensions given by an Eisenstein polynomial.
//!
//! An element is `p^shift * (a_0 + a_1*pi + ... + a_{e-1}*pi^{e-1})` with the
//! `a_i` exact residues mod `p^modexp`. Absolute precision (in v_p units) is
//! `shift + modexp`; relative precision is `modexp + shift - val`. The basis
//! `1, pi, ..., pi^{e-1}` is valuation-orthogonal: `val = min_i (v_p(a_i) + i/e)`
//! is always attained at a unique index, so valuations are exact whenever any
//! coordinate is nonzero at the tracked precision.

use crate::rat::{PrecVal, Rat};
use smallvec::SmallVec;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PadicError {
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("argument is not a unit")]
    NotUnit,
    #[error("argument is not a 1-unit")]
    NotOneUnit,
    #[error("elements belong to different rings")]
    RingMismatch,
    #[error("invalid ring parameters: {0}")]
    BadRing(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtKind {
    /// Q_p itself (e = 1).
    Rational,
    /// Q_p(p^{1/e}), Eisenstein polynomial x^e - p.
    PthRoot,
    /// Q_p(zeta_{p^c}), uniformizer zeta - 1, e = phi(p^c).
    CyclotomicWild { c: u32 },
    /// Any other Eisenstein extension.
    Eisenstein,
}

#[derive(Debug)]
struct RingInner {
    p: u64,
    e: usize,
    kind: ExtKind,
    /// Largest exponent m with p^m < 2^62.
    maxexp: u32,
    /// p^0 .. p^maxexp.
    pow: Vec<u64>,
    /// Residues of -g_i mod p^maxexp, where the Eisenstein polynomial is
    /// x^e + g_{e-1} x^{e-1} + ... + g_0. Reduction rule: pi^e = sum_i neg_eis[i] pi^i.
    neg_eis: Vec<u64>,
}

/// Cheap-to-clone handle to a fixed (p, extension) arithmetic context.
#[derive(Clone, Debug)]
pub struct PadicRing(Arc<RingInner>);

fn is_small_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PadicRing {
    fn build(p: u64, eis: Vec<i64>, kind: ExtKind) -> Result<PadicRing, PadicError> {
        if !is_small_prime(p) || p == 2 {
            return Err(PadicError::BadRing(format!("p = {} must be an odd prime", p)));
        }
        let e = eis.len().max(1);
        let mut pow = vec![1u64];
        while *pow.last().unwrap() <= (1u64 << 62) / p {
            let next = pow.last().unwrap() * p;
            pow.push(next);
        }
        let maxexp = (pow.len() - 1) as u32;
        let pmax = pow[maxexp as usize];
        if kind != ExtKind::Rational {
            if eis.len() < 2 {
                return Err(PadicError::BadRing("extension degree must be >= 2".into()));
            }
            if eis[0].unsigned_abs() % p != 0 || eis[0].unsigned_abs() % (p * p) == 0 {
                return Err(PadicError::BadRing(
                    "constant term must have valuation exactly 1".into(),
                ));
            }
            for g in &eis {
                if g.unsigned_abs() % p != 0 {
                    return Err(PadicError::BadRing(
                        "Eisenstein coefficients must be divisible by p".into(),
                    ));
                }
            }
        }
        let neg_eis = eis
            .iter()
            .map(|&g| {
                let r = (g.unsigned_abs() % pmax) as i128;
                let r = if g < 0 { r } else { -r };
                r.rem_euclid(pmax as i128) as u64
            })
            .collect();
        Ok(PadicRing(Arc::new(RingInner {
            p,
            e,
            kind,
            maxexp,
            pow,
            neg_eis,
        })))
    }

    pub fn qp(p: u64) -> Result<PadicRing, PadicError> {
        PadicRing::build(p, vec![], ExtKind::Rational)
    }

    /// Q_p(p^{1/e}), the generic sampling field with v_p(pi) = 1/e.
    pub fn pth_root(p: u64, e: usize) -> Result<PadicRing, PadicError> {
        if e < 2 {
            return PadicRing::qp(p);
        }
        let mut eis = vec![0i64; e];
        eis[0] = -(p as i64);
        PadicRing::build(p, eis, ExtKind::PthRoot)
    }

    /// Q_p(zeta_{p^c}) with uniformizer zeta - 1, via Phi_{p^c}(1 + x).
    pub fn cyclotomic(p: u64, c: u32) -> Result<PadicRing, PadicError> {
        if c == 0 {
            return PadicRing::qp(p);
        }
        let q = (p as i128).pow(c - 1);
        let deg = ((p - 1) as i128 * q) as usize;
        // Phi_{p^c}(1+x) = sum_{j<p} (1+x)^{j p^{c-1}}
        let mut coeffs = vec![0i128; deg + 1];
        for j in 0..p as i128 {
            let n = j * q;
            // add binomials C(n, i)
            let mut b = 1i128;
            for i in 0..=n {
                coeffs[i as usize] += b;
                // next binomial; values stay well within i128 for p^c <= 25
                b = b * (n - i) / (i + 1);
            }
        }
        assert_eq!(coeffs[deg], 1);
        let eis = coeffs[..deg]
            .iter()
            .map(|&c| i64::try_from(c).expect("cyclotomic coefficient overflow"))
            .collect();
        PadicRing::build(p, eis, ExtKind::CyclotomicWild { c })
    }

    /// Arbitrary Eisenstein extension x^e + g_{e-1} x^{e-1} + ... + g_0.
    pub fn eisenstein(p: u64, eis: Vec<i64>) -> Result<PadicRing, PadicError> {
        PadicRing::build(p, eis, ExtKind::Eisenstein)
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn e(&self) -> usize {
        self.0.e
    }

    pub fn kind(&self) -> &ExtKind {
        &self.0.kind
    }

    pub fn max_modexp(&self) -> u32 {
        self.0.maxexp
    }

    /// v_p of the uniformizer: 1/e.
    pub fn vp_pi(&self) -> Rat {
        Rat::new(1, self.0.e as i64)
    }

    pub fn pw(&self, m: u32) -> u64 {
        self.0.pow[m as usize]
    }

    pub fn same_ring(&self, other: &PadicRing) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.e == other.0.e && self.0.neg_eis == other.0.neg_eis)
    }

    fn clamp(&self, m: u32) -> u32 {
        m.min(self.0.maxexp)
    }

    /// Integer constant at the given relative precision.
    pub fn int(&self, n: i64, modexp: u32) -> Padic {
        let m = self.clamp(modexp);
        let pm = self.pw(m);
        let r = (n as i128).rem_euclid(pm as i128) as u64;
        let mut coords = SmallVec::from_elem(0u64, self.0.e);
        coords[0] = r;
        Padic {
            ring: self.clone(),
            shift: 0,
            modexp: m,
            coords,
        }
        .normalized()
    }

    pub fn zero(&self, absprec: i64) -> Padic {
        Padic {
            ring: self.clone(),
            shift: absprec,
            modexp: 0,
            coords: SmallVec::from_elem(0u64, self.0.e),
        }
    }

    pub fn one(&self, modexp: u32) -> Padic {
        self.int(1, modexp)
    }

    /// The uniformizer pi.
    pub fn pi(&self, modexp: u32) -> Padic {
        assert!(self.0.e >= 2, "pi of Q_p is just p");
        let mut coords = SmallVec::from_elem(0u64, self.0.e);
        coords[1] = 1;
        Padic {
            ring: self.clone(),
            shift: 0,
            modexp: self.clamp(modexp),
            coords,
        }
    }

    /// zeta_{p^c} = 1 + pi in a cyclotomic ring.
    pub fn zeta(&self, modexp: u32) -> Padic {
        assert!(matches!(self.0.kind, ExtKind::CyclotomicWild { .. }));
        let mut coords = SmallVec::from_elem(0u64, self.0.e);
        coords[0] = 1;
        coords[1] = 1;
        Padic {
            ring: self.clone(),
            shift: 0,
            modexp: self.clamp(modexp),
            coords,
        }
    }

    /// Element from explicit pi-basis residues.
    pub fn from_coords(&self, coords: &[i64], modexp: u32) -> Padic {
        assert_eq!(coords.len(), self.0.e);
        let m = self.clamp(modexp);
        let pm = self.pw(m);
        let coords = coords
            .iter()
            .map(|&c| (c as i128).rem_euclid(pm as i128) as u64)
            .collect();
        Padic {
            ring: self.clone(),
            shift: 0,
            modexp: m,
            coords,
        }
    }

    fn mulm(&self, a: u64, b: u64, pm: u64) -> u64 {
        ((a as u128 * b as u128) % pm as u128) as u64
    }

    /// Reduce a length-(2e-1) convolution by the Eisenstein relation.
    fn reduce_conv(&self, buf: &mut [u128], m: u32) -> SmallVec<[u64; 2]> {
        let e = self.0.e;
        let pm = self.pw(m) as u128;
        for d in (e..buf.len()).rev() {
            let c = buf[d] % pm;
            buf[d] = 0;
            if c != 0 {
                for i in 0..e {
                    let g = self.0.neg_eis[i] as u128 % pm;
                    if g != 0 {
                        buf[d - e + i] = (buf[d - e + i] + c * g % pm) % pm;
                    }
                }
            }
        }
        buf[..e].iter().map(|&x| (x % pm) as u64).collect()
    }
}

/// An element of Q_p or of a totally ramified extension, with tracked
/// precision.
#[derive(Clone)]
pub struct Padic {
    ring: PadicRing,
    shift: i64,
    modexp: u32,
    coords: SmallVec<[u64; 2]>,
}

impl fmt::Debug for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p^{}*{:?} mod {}^{}",
            self.shift,
            &self.coords[..],
            self.ring.p(),
            self.modexp
        )
    }
}

impl Padic {
    pub fn ring(&self) -> &PadicRing {
        &self.ring
    }

    pub fn modexp(&self) -> u32 {
        self.modexp
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// Absolute precision in v_p units.
    pub fn abs_precision(&self) -> i64 {
        self.shift + self.modexp as i64
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Pull out powers of p common to all coordinates.
    fn normalized(mut self) -> Padic {
        let p = self.ring.p();
        while self.modexp > 0
            && !self.is_zero_at_precision()
            && self.coords.iter().all(|&c| c % p == 0)
        {
            for c in self.coords.iter_mut() {
                *c /= p;
            }
            self.shift += 1;
            self.modexp -= 1;
        }
        if self.is_zero_at_precision() {
            // canonical zero: no residue information, only the precision bound
            self.shift += self.modexp as i64;
            self.modexp = 0;
        }
        self
    }

    /// Exact rational valuation, or an "at least precision" marker.
    pub fn val(&self) -> PrecVal {
        if self.is_zero_at_precision() {
            return PrecVal::AtLeast(Rat::int(self.abs_precision()));
        }
        let p = self.ring.p();
        let e = self.ring.e() as i64;
        let mut best: Option<Rat> = None;
        for (i, &c) in self.coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut v = 0i64;
            let mut c = c;
            while c % p == 0 {
                c /= p;
                v += 1;
            }
            let cand = Rat::new(v * e + i as i64, e).add(&Rat::int(self.shift));
            if best.map_or(true, |b| cand < b) {
                best = Some(cand);
            }
        }
        PrecVal::Exact(best.unwrap())
    }

    fn check_ring(&self, other: &Padic) {
        assert!(
            self.ring.same_ring(&other.ring),
            "ring mismatch: {:?} vs {:?}",
            self.ring.kind(),
            other.ring.kind()
        );
    }

    pub fn add(&self, other: &Padic) -> Padic {
        self.check_ring(other);
        let ring = &self.ring;
        let s = self.shift.min(other.shift);
        let absprec = self.abs_precision().min(other.abs_precision());
        let m = ring.clamp((absprec - s).max(0) as u32);
        let pm = ring.pw(m);
        let e = ring.e();
        let mut coords = SmallVec::from_elem(0u64, e);
        for src in [self, other] {
            let k = (src.shift - s) as u32;
            if (k as i64) >= m as i64 {
                continue;
            }
            let scale = ring.pw(k.min(ring.max_modexp()));
            for i in 0..e {
                let v = ring.mulm(src.coords[i] % pm, scale % pm, pm);
                coords[i] = (coords[i] + v) % pm;
            }
        }
        Padic {
            ring: ring.clone(),
            shift: s,
            modexp: m,
            coords,
        }
        .normalized()
    }

    pub fn neg(&self) -> Padic {
        let pm = self.ring.pw(self.modexp);
        let coords = self
            .coords
            .iter()
            .map(|&c| if c == 0 { 0 } else { pm - c })
            .collect();
        Padic {
            ring: self.ring.clone(),
            shift: self.shift,
            modexp: self.modexp,
            coords,
        }
    }

    pub fn sub(&self, other: &Padic) -> Padic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Padic) -> Padic {
        self.check_ring(other);
        let ring = &self.ring;
        let e = ring.e();
        let m = self.modexp.min(other.modexp);
        if m == 0 || self.is_zero_at_precision() || other.is_zero_at_precision() {
            // zero times x is zero known to precision (zero's bound + val(x))
            let bound = if self.is_zero_at_precision() {
                self.abs_precision() + other.val_floor()
            } else {
                other.abs_precision() + self.val_floor()
            };
            return ring.zero(bound);
        }
        let pm = ring.pw(m);
        let mut buf = vec![0u128; 2 * e - 1];
        for i in 0..e {
            let a = self.coords[i] % pm;
            if a == 0 {
                continue;
            }
            for j in 0..e {
                let b = other.coords[j] % pm;
                if b != 0 {
                    buf[i + j] += (a as u128 * b as u128) % pm as u128;
                }
            }
        }
        let coords = ring.reduce_conv(&mut buf, m);
        Padic {
            ring: ring.clone(),
            shift: self.shift + other.shift,
            modexp: m,
            coords,
        }
        .normalized()
    }

    /// Floor of the valuation (used for zero-product precision bookkeeping).
    fn val_floor(&self) -> i64 {
        match self.val() {
            PrecVal::Exact(r) => r.floor(),
            PrecVal::AtLeast(r) => r.floor(),
        }
    }

    pub fn mul_i64(&self, n: i64) -> Padic {
        self.mul(&self.ring.int(n, self.modexp.max(1)))
    }

    /// Multiply by p^k (k may be negative); exact, shifts only.
    pub fn mul_p_pow(&self, k: i64) -> Padic {
        let mut r = self.clone();
        r.shift += k;
        r
    }

    fn inv_unit(&self) -> Result<Padic, PadicError> {
        // self must be normalized with coords[0] a unit mod p
        let ring = &self.ring;
        let p = ring.p();
        if self.is_zero_at_precision() || self.coords[0] % p == 0 {
            return Err(PadicError::NotUnit);
        }
        let m = self.modexp;
        // invert coords[0] mod p by brute force (p is small), then Newton
        let a0 = self.coords[0] % p;
        let mut inv0 = 1u64;
        for x in 1..p {
            if (a0 * x) % p == 1 {
                inv0 = x;
                break;
            }
        }
        // invert the shift-free body by Newton iteration, restore the shift after
        let body = Padic {
            ring: ring.clone(),
            shift: 0,
            modexp: m,
            coords: self.coords.clone(),
        };
        let mut x = ring.int(inv0 as i64, m);
        let two = ring.int(2, m);
        for _ in 0..(64 - (m as u64 * ring.e() as u64).leading_zeros() + 2) {
            let t = two.sub(&body.mul(&x));
            x = x.mul(&t);
        }
        debug_assert!(body.mul(&x).sub(&ring.one(m)).is_zero_at_precision());
        Ok(x.mul_p_pow(-self.shift))
    }

    pub fn inv(&self) -> Result<Padic, PadicError> {
        let ring = &self.ring;
        let b = self.clone().normalized();
        if b.is_zero_at_precision() {
            return Err(PadicError::InsufficientPrecision(format!(
                "division by an element indistinguishable from 0 at precision {}",
                b.abs_precision()
            )));
        }
        let e = ring.e();
        if e == 1 {
            return b.inv_unit();
        }
        // b^{-1} = b^{e-1} * (b^e)^{-1}; b^e has integer valuation so its
        // normalized form is a unit times a power of p.
        let mut bem1 = ring.one(b.modexp);
        for _ in 1..e {
            bem1 = bem1.mul(&b);
        }
        let be = bem1.mul(&b).normalized();
        let inv = be.inv_unit()?;
        Ok(bem1.mul(&inv))
    }

    pub fn div(&self, other: &Padic) -> Result<Padic, PadicError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Exact division by the rational integer n (unit part inverted, p-part
    /// moved into the shift).
    pub fn div_i64_exact(&self, n: i64) -> Padic {
        assert!(n != 0);
        let p = self.ring.p() as i64;
        let mut n = n;
        let mut k = 0i64;
        while n % p == 0 {
            n /= p;
            k += 1;
        }
        let unit = self.ring.int(n, self.modexp.max(1));
        self.mul(&unit.inv().expect("unit")).mul_p_pow(-k)
    }

    pub fn pow_u64(&self, mut n: u64) -> Padic {
        let mut base = self.clone();
        let mut acc = self.ring.one(self.modexp.max(1));
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    pub fn pow_i64(&self, n: i64) -> Result<Padic, PadicError> {
        if n >= 0 {
            Ok(self.pow_u64(n as u64))
        } else {
            Ok(self.inv()?.pow_u64((-n) as u64))
        }
    }

    /// Embed a Q_p element into a larger totally ramified ring.
    pub fn embed(&self, target: &PadicRing) -> Padic {
        assert_eq!(self.ring.e(), 1, "can only embed rational elements");
        assert_eq!(self.ring.p(), target.p());
        let m = target.clamp(self.modexp);
        let pm = target.pw(m);
        let mut coords = SmallVec::from_elem(0u64, target.e());
        coords[0] = self.coords[0] % pm;
        Padic {
            ring: target.clone(),
            shift: self.shift,
            modexp: m,
            coords,
        }
        .normalized()
    }

    /// True if the two elements agree modulo the smaller absolute precision.
    pub fn congruent(&self, other: &Padic) -> bool {
        self.sub(other).is_zero_at_precision()
    }

    /// Teichmueller lift of the residue of a unit.
    pub fn teichmuller(&self) -> Result<Padic, PadicError> {
        let b = self.clone().normalized();
        if b.shift != 0 || b.is_zero_at_precision() || b.coords[0] % b.ring.p() == 0 {
            return Err(PadicError::NotUnit);
        }
        let ring = &b.ring;
        let p = ring.p();
        let m = b.modexp;
        let pm = ring.pw(m);
        // the residue field is F_p, so the lift lives in Z_p
        let mut t = b.coords[0] % p;
        loop {
            // next = t^p mod p^m
            let mut next = 1u64;
            let mut base = t;
            let mut n = p;
            while n > 0 {
                if n & 1 == 1 {
                    next = ring.mulm(next, base, pm);
                }
                base = ring.mulm(base, base, pm);
                n >>= 1;
            }
            if next == t {
                break;
            }
            t = next;
        }
        let mut coords = SmallVec::from_elem(0u64, ring.e());
        coords[0] = t;
        Ok(Padic {
            ring: ring.clone(),
            shift: 0,
            modexp: m,
            coords,
        })
    }

    /// The 1-unit part <x> = x / teichmuller(x).
    pub fn one_unit_part(&self) -> Result<Padic, PadicError> {
        let t = self.teichmuller()?;
        self.div(&t)
    }

    /// p-adic logarithm of a 1-unit (converges when v(u-1) > 1/(p-1)).
    pub fn plog(&self) -> Result<Padic, PadicError> {
        let ring = &self.ring;
        let w = self.sub(&ring.one(self.modexp.max(1)));
        let conv = Rat::new(1, ring.p() as i64 - 1);
        let mu = match w.val() {
            PrecVal::Exact(r) => {
                if r <= conv {
                    return Err(PadicError::NotOneUnit);
                }
                r
            }
            PrecVal::AtLeast(_) => {
                // u == 1 at precision: log is 0 at the same precision
                return Ok(ring.zero(w.abs_precision()));
            }
        };
        let target = self.abs_precision() + 2;
        let mut acc = ring.zero(target);
        let mut wn = w.clone();
        let mut n = 1i64;
        loop {
            let term = wn.div_i64_exact(n);
            let term = if n % 2 == 0 { term.neg() } else { term };
            acc = acc.add(&term);
            n += 1;
            // bound remaining terms: val >= n*mu - log_p(n)
            let logp = (64 - (n as u64).leading_zeros()) as i64; // crude >= log_p n
            if mu.mul_int(n).sub(&Rat::int(logp)) >= Rat::int(target) {
                break;
            }
            wn = wn.mul(&w);
            if wn.is_zero_at_precision() && n > 2 {
                break;
            }
        }
        Ok(acc)
    }

    /// p-adic exponential (converges when v(x) > 1/(p-1)).
    pub fn pexp(&self) -> Result<Padic, PadicError> {
        let ring = &self.ring;
        let conv = Rat::new(1, ring.p() as i64 - 1);
        match self.val() {
            PrecVal::Exact(r) if r <= conv => return Err(PadicError::NotOneUnit),
            _ => {}
        }
        let mut acc = ring.one(self.modexp.max(1));
        let mut term = ring.one(self.modexp.max(1));
        let target = self.abs_precision() + 2;
        let mut n = 1i64;
        loop {
            term = term.mul(self).div_i64_exact(n);
            acc = acc.add(&term);
            match term.val() {
                PrecVal::Exact(r) if r < Rat::int(target) => {}
                _ => break,
            }
            n += 1;
            if n > 4 * target.max(4) {
                break;
            }
        }
        Ok(acc)
    }

    /// Square root of a 1-unit (p odd), the root that is itself a 1-unit.
    pub fn sqrt_one_unit(&self) -> Result<Padic, PadicError> {
        let ring = &self.ring;
        let one = ring.one(self.modexp.max(1));
        let conv = Rat::new(1, ring.p() as i64 - 1);
        match self.sub(&one).val() {
            PrecVal::Exact(r) if r <= conv => return Err(PadicError::NotOneUnit),
            _ => {}
        }
        let half = ring.int(2, self.modexp.max(1)).inv()?;
        let mut x = one.clone();
        for _ in 0..(2 * self.modexp.max(1) as usize * ring.e() + 4) {
            let next = x.add(&self.div(&x)?).mul(&half);
            if next.congruent(&x) && next.sub(&x).is_zero_at_precision() {
                x = next;
                break;
            }
            x = next;
        }
        debug_assert!(x.mul(&x).congruent(self));
        Ok(x)
    }

    /// Raw coordinates (residues mod p^modexp).
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    /// Residue mod p^k of an integral rational element (e = 1, shift >= 0).
    /// None when the element is not integral-rational or k exceeds the
    /// tracked absolute precision.
    pub fn residue_u64(&self, k: u32) -> Option<u64> {
        if self.ring.e() != 1 || self.shift < 0 || self.abs_precision() < k as i64 {
            return None;
        }
        let pk = self.ring.pw(k);
        let scale = self.ring.pw((self.shift as u32).min(k));
        Some(self.ring.mulm(self.coords[0] % pk, scale % pk, pk))
    }

    /// Render the integral residue when shift >= 0 and e = 1.
    pub fn residue_i128(&self) -> Option<i128> {
        if self.ring.e() != 1 || self.shift < 0 {
            return None;
        }
        let mut v = self.coords[0] as i128;
        for _ in 0..self.shift {
            v *= self.ring.p() as i128;
        }
        Some(v)
    }
}

/// exp(p), the canonical topological generator of 1 + pZ_p.
pub fn exp_p(ring: &PadicRing, modexp: u32) -> Padic {
    let p = ring.int(ring.p() as i64, modexp);
    p.pexp().expect("v_p(p) = 1 > 1/(p-1)")
}

/// Binomial coefficients C(a, j) for j < m, for a in Z_p.
pub fn binom_coeffs(a: &Padic, m: usize) -> Vec<Padic> {
    let ring = a.ring().clone();
    let mut out = Vec::with_capacity(m);
    let prec = a.modexp().max(1);
    let mut c = ring.one(prec);
    for j in 0..m {
        out.push(c.clone());
        if j + 1 < m {
            let factor = a.sub(&ring.int(j as i64, prec));
            c = c.mul(&factor).div_i64_exact(j as i64 + 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{PrecVal, Rat};

    fn qp3() -> PadicRing {
        PadicRing::qp(3).unwrap()
    }

    #[test]
    fn val_of_nine_times_unit() {
        let r = qp3();
        let x = r.int(9 * 5, 20);
        assert_eq!(x.val(), PrecVal::Exact(Rat::int(2)));
    }

    #[test]
    fn val_of_pi_in_quadratic() {
        let r = PadicRing::pth_root(3, 2).unwrap();
        let x = r.pi(20);
        assert_eq!(x.val(), PrecVal::Exact(Rat::new(1, 2)));
        // pi * pi = 3
        let sq = x.mul(&x);
        assert!(sq.congruent(&r.int(3, 20)));
    }

    #[test]
    fn zero_reports_precision_marker() {
        let r = qp3();
        let z = r.zero(7);
        assert_eq!(z.val(), PrecVal::AtLeast(Rat::int(7)));
    }

    #[test]
    fn basic_arith() {
        let r = qp3();
        // (1+3)(1-3) = 1-9 mod 27
        let a = r.int(4, 3);
        let b = r.int(-2, 3);
        assert!(a.mul(&b).congruent(&r.int(-8, 3)));
    }

    #[test]
    fn div_by_p_reduces_precision() {
        let r = qp3();
        let one = r.int(1, 5);
        let three = r.int(3, 5);
        let q = one.div(&three).unwrap();
        assert_eq!(q.val(), PrecVal::Exact(Rat::int(-1)));
        // relative precision 4: shift -1, residues mod 3^4
        assert_eq!(q.shift(), -1);
        assert_eq!(q.modexp(), 4);
    }

    #[test]
    fn division_by_zero_precision_errors() {
        let r = qp3();
        let z = r.zero(5);
        assert!(r.int(1, 5).div(&z).is_err());
    }

    #[test]
    fn plog_of_four_mod_27() {
        let r = qp3();
        let u = r.int(4, 3);
        let l = u.plog().unwrap();
        assert!(l.congruent(&r.int(21, 3)));
    }

    #[test]
    fn plog_exp_roundtrip() {
        let r = qp3();
        let e = exp_p(&r, 6);
        let l = e.plog().unwrap();
        assert!(l.congruent(&r.int(3, 3)));
    }

    #[test]
    fn plog_is_homomorphism() {
        let r = qp3();
        for (a, b) in [(4i64, 7i64), (10, 13), (4, 22)] {
            let u = r.int(a, 10);
            let v = r.int(b, 10);
            let lhs = u.mul(&v).plog().unwrap();
            let rhs = u.plog().unwrap().add(&v.plog().unwrap());
            assert!(lhs.congruent(&rhs), "plog({}*{})", a, b);
        }
    }

    #[test]
    fn binom_examples() {
        let r = qp3();
        let zero = r.int(0, 10);
        let got: Vec<_> = binom_coeffs(&zero, 3)
            .iter()
            .map(|c| c.congruent(&r.zero(8)))
            .collect();
        assert!(!got[0] && got[1] && got[2]);

        let two = r.int(2, 10);
        let cs = binom_coeffs(&two, 4);
        for (c, want) in cs.iter().zip([1i64, 2, 1, 0]) {
            assert!(c.congruent(&r.int(want, 8)));
        }

        let three = r.int(3, 10);
        let cs = binom_coeffs(&three, 3);
        for (c, want) in cs.iter().zip([1i64, 3, 3]) {
            assert!(c.congruent(&r.int(want, 8)));
        }
    }

    #[test]
    fn binom_integral_for_zp() {
        let r = qp3();
        for a in [5i64, 17, 100, -4] {
            for c in binom_coeffs(&r.int(a, 12), 10) {
                match c.val() {
                    PrecVal::Exact(v) => assert!(v >= Rat::zero(), "C({},j) not integral", a),
                    PrecVal::AtLeast(_) => {}
                }
            }
        }
    }

    #[test]
    fn teichmuller_fixed_by_pth_power() {
        let r = PadicRing::qp(5).unwrap();
        let t = r.int(2, 10).teichmuller().unwrap();
        assert!(t.pow_u64(5).congruent(&t));
        assert!(t.pow_u64(4).congruent(&r.one(10)));
    }

    #[test]
    fn sqrt_of_one_unit() {
        let r = qp3();
        let u = r.int(1 + 3 * 5, 10);
        let s = u.sqrt_one_unit().unwrap();
        assert!(s.mul(&s).congruent(&u));
    }

    #[test]
    fn cyclotomic_ring_zeta_order() {
        let r = PadicRing::cyclotomic(3, 1).unwrap();
        assert_eq!(r.e(), 2);
        let z = r.zeta(12);
        assert!(z.pow_u64(3).congruent(&r.one(12)));
        assert!(!z.sub(&r.one(12)).is_zero_at_precision());
        // v_p(zeta - 1) = 1/2
        assert_eq!(r.pi(12).val(), PrecVal::Exact(Rat::new(1, 2)));
    }

    #[test]
    fn cyclotomic_level_two() {
        let r = PadicRing::cyclotomic(3, 2).unwrap();
        assert_eq!(r.e(), 6);
        let z = r.zeta(8);
        assert!(z.pow_u64(9).congruent(&r.one(8)));
        assert!(!z.pow_u64(3).sub(&r.one(8)).is_zero_at_precision());
    }

    #[test]
    fn inverse_in_extension() {
        let r = PadicRing::cyclotomic(3, 1).unwrap();
        let z = r.zeta(10);
        let x = z.add(&r.int(3, 10));
        let xi = x.inv().unwrap();
        assert!(x.mul(&xi).congruent(&r.one(10)));
        // inverse of pi has valuation -1/2
        let pi_inv = r.pi(10).inv().unwrap();
        assert_eq!(pi_inv.val(), PrecVal::Exact(Rat::new(-1, 2)));
    }

    #[test]
    fn val_multiplicative_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let rings = [qp3(), PadicRing::pth_root(3, 4).unwrap()];
        for _ in 0..1000 {
            let r = &rings[rng.gen_range(0..rings.len())];
            let mut mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let coords: Vec<i64> = (0..r.e()).map(|_| rng.gen_range(0..200i64)).collect();
                r.from_coords(&coords, 16)
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            if let (PrecVal::Exact(va), PrecVal::Exact(vb)) = (a.val(), b.val()) {
                let prod = a.mul(&b);
                if let PrecVal::Exact(vp) = prod.val() {
                    assert_eq!(vp, va.add(&vb));
                }
            }
        }
    }

    #[test]
    fn val_formula_matches_division_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let r = PadicRing::pth_root(3, 3).unwrap();
        let pi = r.pi(18);
        for _ in 0..200 {
            let coords: Vec<i64> = (0..3).map(|_| rng.gen_range(0..729i64)).collect();
            let x = r.from_coords(&coords, 18);
            if x.is_zero_at_precision() {
                continue;
            }
            // oracle: divide by pi until the quotient is no longer integral
            let mut y = x.clone();
            let mut steps = 0i64;
            loop {
                let q = y.div(&pi).unwrap();
                match q.val() {
                    PrecVal::Exact(v) if v >= Rat::zero() => {
                        y = q;
                        steps += 1;
                    }
                    _ => break,
                }
                if steps > 60 {
                    break;
                }
            }
            assert_eq!(x.val(), PrecVal::Exact(Rat::new(steps, 3)));
        }
    }
}
