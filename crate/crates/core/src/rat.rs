//! Exact rational valuations.
//!
//! Valuations of elements of ramified extensions live in (1/e)Z, so we keep
//! them as reduced fractions and compare by cross-multiplication. No floats.

use std::cmp::Ordering;
use std::fmt;

/// A reduced fraction with i64 numerator and positive denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rat {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    pub fn new(num: i64, den: i64) -> Rat {
        assert!(den != 0, "zero denominator");
        let s = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Rat {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn int(n: i64) -> Rat {
        Rat { num: n, den: 1 }
    }

    pub fn zero() -> Rat {
        Rat::int(0)
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn add(&self, other: &Rat) -> Rat {
        Rat::new(
            self.num
                .checked_mul(other.den)
                .and_then(|x| x.checked_add(other.num.checked_mul(self.den).unwrap()))
                .unwrap(),
            self.den.checked_mul(other.den).unwrap(),
        )
    }

    pub fn sub(&self, other: &Rat) -> Rat {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Rat {
        Rat {
            num: -self.num,
            den: self.den,
        }
    }

    pub fn mul(&self, other: &Rat) -> Rat {
        Rat::new(
            self.num.checked_mul(other.num).unwrap(),
            self.den.checked_mul(other.den).unwrap(),
        )
    }

    pub fn mul_int(&self, n: i64) -> Rat {
        Rat::new(self.num.checked_mul(n).unwrap(), self.den)
    }

    pub fn div(&self, other: &Rat) -> Rat {
        assert!(other.num != 0, "division by zero rational");
        Rat::new(
            self.num.checked_mul(other.den).unwrap(),
            self.den.checked_mul(other.num).unwrap(),
        )
    }

    pub fn floor(&self) -> i64 {
        self.num.div_euclid(self.den)
    }

    pub fn ceil(&self) -> i64 {
        -((-self.num).div_euclid(self.den))
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Rat) -> Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Valuation value: an exact rational or infinity (the valuation of zero).
/// Infinity absorbs addition and dominates every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValQ {
    Finite(Rat),
    Infinity,
}

impl ValQ {
    pub fn finite(num: i64, den: i64) -> ValQ {
        ValQ::Finite(Rat::new(num, den))
    }

    pub fn int(n: i64) -> ValQ {
        ValQ::Finite(Rat::int(n))
    }

    pub fn as_rat(&self) -> Option<Rat> {
        match self {
            ValQ::Finite(r) => Some(*r),
            ValQ::Infinity => None,
        }
    }

    pub fn add(&self, other: &ValQ) -> ValQ {
        match (self, other) {
            (ValQ::Finite(a), ValQ::Finite(b)) => ValQ::Finite(a.add(b)),
            _ => ValQ::Infinity,
        }
    }
}

impl PartialOrd for ValQ {
    fn partial_cmp(&self, other: &ValQ) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ValQ {
    fn cmp(&self, other: &ValQ) -> Ordering {
        match (self, other) {
            (ValQ::Finite(a), ValQ::Finite(b)) => a.cmp(b),
            (ValQ::Finite(_), ValQ::Infinity) => Ordering::Less,
            (ValQ::Infinity, ValQ::Finite(_)) => Ordering::Greater,
            (ValQ::Infinity, ValQ::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ValQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValQ::Finite(r) => write!(f, "{}", r),
            ValQ::Infinity => write!(f, "inf"),
        }
    }
}

/// Valuation of an element carried at finite precision: either resolved
/// exactly, or only known to be at least the tracked precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecVal {
    Exact(Rat),
    AtLeast(Rat),
}

impl PrecVal {
    /// The certified lower bound in either case.
    pub fn lower_bound(&self) -> Rat {
        match self {
            PrecVal::Exact(r) | PrecVal::AtLeast(r) => *r,
        }
    }

    pub fn exact(&self) -> Option<Rat> {
        match self {
            PrecVal::Exact(r) => Some(*r),
            PrecVal::AtLeast(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PrecVal::Exact(_))
    }
}

impl fmt::Display for PrecVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecVal::Exact(r) => write!(f, "{}", r),
            PrecVal::AtLeast(r) => write!(f, ">={}", r),
        }
    }
}
