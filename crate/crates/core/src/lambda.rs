//! Truncated Iwasawa-algebra elements: polynomials in X modulo X^mx with
//! p-adic coefficients, and the weighted valuation that treats both the
//! uniformizer and X as size-1 variables.

use crate::padic::{Padic, PadicRing};
use crate::rat::{PrecVal, Rat};

/// Element of O_E[[X]] / X^mx carried at finite coefficient precision.
#[derive(Clone, Debug)]
pub struct LambdaPoly {
    coeffs: Vec<Padic>,
}

impl LambdaPoly {
    pub fn new(coeffs: Vec<Padic>) -> LambdaPoly {
        assert!(!coeffs.is_empty());
        LambdaPoly { coeffs }
    }

    pub fn zero(ring: &PadicRing, mx: usize, absprec: i64) -> LambdaPoly {
        LambdaPoly {
            coeffs: vec![ring.zero(absprec); mx],
        }
    }

    pub fn constant(c: Padic, mx: usize) -> LambdaPoly {
        let z = c.ring().zero(c.abs_precision());
        let mut coeffs = vec![z; mx];
        coeffs[0] = c;
        LambdaPoly { coeffs }
    }

    pub fn mx(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, m: usize) -> &Padic {
        &self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[Padic] {
        &self.coeffs
    }

    pub fn ring(&self) -> &PadicRing {
        self.coeffs[0].ring()
    }

    pub fn add(&self, other: &LambdaPoly) -> LambdaPoly {
        assert_eq!(self.mx(), other.mx());
        LambdaPoly {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &LambdaPoly) -> LambdaPoly {
        assert_eq!(self.mx(), other.mx());
        LambdaPoly {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn mul(&self, other: &LambdaPoly) -> LambdaPoly {
        assert_eq!(self.mx(), other.mx());
        let mx = self.mx();
        let mut out = Vec::with_capacity(mx);
        for m in 0..mx {
            let mut acc: Option<Padic> = None;
            for i in 0..=m {
                let t = self.coeffs[i].mul(&other.coeffs[m - i]);
                acc = Some(match acc {
                    None => t,
                    Some(a) => a.add(&t),
                });
            }
            out.push(acc.unwrap());
        }
        LambdaPoly { coeffs: out }
    }

    pub fn scale(&self, c: &Padic) -> LambdaPoly {
        LambdaPoly {
            coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect(),
        }
    }

    /// Multiply by X (drop the top coefficient).
    pub fn mul_x(&self) -> LambdaPoly {
        let mut coeffs = Vec::with_capacity(self.mx());
        coeffs.push(self.ring().zero(self.coeffs[0].abs_precision()));
        coeffs.extend_from_slice(&self.coeffs[..self.mx() - 1]);
        LambdaPoly { coeffs }
    }

    /// Evaluate at X = z (z in a possibly larger totally ramified ring;
    /// coefficients must be rational or live in z's ring).
    pub fn eval(&self, z: &Padic) -> Padic {
        let target = z.ring();
        let lift = |c: &Padic| -> Padic {
            if c.ring().same_ring(target) {
                c.clone()
            } else {
                c.embed(target)
            }
        };
        let mut acc = lift(self.coeffs.last().unwrap());
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(z).add(&lift(c));
        }
        acc
    }

    /// Weighted valuation w(sum b_m X^m) = min_m (e * val(b_m) + m), where e
    /// is the ramification index of the coefficient ring (so the uniformizer
    /// and X both have weight 1). `AtLeast` when the minimum might be hidden
    /// below coefficient precision.
    pub fn w_val(&self) -> PrecVal {
        let e = self.ring().e() as i64;
        let mut best_exact: Option<Rat> = None;
        let mut best_bound: Option<Rat> = None;
        for (m, c) in self.coeffs.iter().enumerate() {
            match c.val() {
                PrecVal::Exact(v) => {
                    let w = v.mul_int(e).add(&Rat::int(m as i64));
                    if best_exact.map_or(true, |b| w < b) {
                        best_exact = Some(w);
                    }
                }
                PrecVal::AtLeast(v) => {
                    let w = v.mul_int(e).add(&Rat::int(m as i64));
                    if best_bound.map_or(true, |b| w < b) {
                        best_bound = Some(w);
                    }
                }
            }
        }
        match (best_exact, best_bound) {
            (Some(x), Some(b)) if b < x => PrecVal::AtLeast(b),
            (Some(x), _) => PrecVal::Exact(x),
            (None, Some(b)) => PrecVal::AtLeast(b),
            (None, None) => unreachable!("empty polynomial"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicRing;

    #[test]
    fn mul_truncates() {
        let r = PadicRing::qp(3).unwrap();
        // (1 + X)^2 mod X^3 = 1 + 2X + X^2
        let one_plus_x = LambdaPoly::new(vec![r.int(1, 10), r.int(1, 10), r.int(0, 10)]);
        let sq = one_plus_x.mul(&one_plus_x);
        assert!(sq.coeff(0).congruent(&r.int(1, 10)));
        assert!(sq.coeff(1).congruent(&r.int(2, 10)));
        assert!(sq.coeff(2).congruent(&r.int(1, 10)));
    }

    #[test]
    fn eval_in_extension() {
        let r = PadicRing::qp(3).unwrap();
        let ext = PadicRing::pth_root(3, 2).unwrap();
        // f = 2 + 3X + X^2 at z = pi: 2 + 3*pi + 3
        let f = LambdaPoly::new(vec![r.int(2, 10), r.int(3, 10), r.int(1, 10)]);
        let z = ext.pi(10);
        let got = f.eval(&z);
        let want = ext.int(5, 10).add(&ext.pi(10).mul(&ext.int(3, 10)));
        assert!(got.congruent(&want));
    }

    #[test]
    fn w_val_weights_both_variables() {
        let r = PadicRing::qp(3).unwrap();
        // 9 + 3X + X^2 has w-val 2 (attained three times; min is exact)
        let f = LambdaPoly::new(vec![r.int(9, 10), r.int(3, 10), r.int(1, 10)]);
        assert_eq!(f.w_val(), PrecVal::Exact(Rat::int(2)));
        // 27 + 0*X + 9X^2: zero coefficient at X with high precision
        let f = LambdaPoly::new(vec![r.int(27, 10), r.zero(10), r.int(9, 10)]);
        assert_eq!(f.w_val(), PrecVal::Exact(Rat::int(3)));
        // all coefficients zero at low precision: only a bound
        let f = LambdaPoly::new(vec![r.zero(2), r.zero(2), r.zero(2)]);
        assert_eq!(f.w_val(), PrecVal::AtLeast(Rat::int(2)));
    }
}
