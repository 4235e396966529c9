//! Exact scalars: rationals, Gaussian rationals, and angles that are
//! rational multiples of pi with exact trigonometric sign evaluation.
//!
//! Restricting angles to rational multiples of pi means every dominance
//! comparison in the crate reduces to the sign of a cosine at such an angle,
//! which is decided exactly by locating the normalized multiple relative to
//! 1/2 and 3/2. No floating point is used anywhere.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with positive
/// denominator (enforced by `num-rational`).
pub type Rat = BigRational;

/// Build a rational from a small signed fraction.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parse a rational from `"p/q"` or `"p"` form.
pub fn rat_from_str(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Invalid(alloc::format!("bad rational {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Invalid(alloc::format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(Error::Invalid(alloc::format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

/// Render a rational as `"p/q"` (or `"p"` when the denominator is 1).
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        alloc::format!("{}", r.numer())
    } else {
        alloc::format!("{}/{}", r.numer(), r.denom())
    }
}

/// An element of the field of Gaussian rationals `Q(i)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gaussian {
    pub re: Rat,
    pub im: Rat,
}

impl Gaussian {
    pub fn new(re: Rat, im: Rat) -> Self {
        Gaussian { re, im }
    }

    pub fn zero() -> Self {
        Gaussian::new(Rat::zero(), Rat::zero())
    }

    pub fn one() -> Self {
        Gaussian::new(Rat::one(), Rat::zero())
    }

    pub fn i() -> Self {
        Gaussian::new(Rat::zero(), Rat::one())
    }

    pub fn from_rat(re: Rat) -> Self {
        Gaussian::new(re, Rat::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Gaussian::from_rat(rat(n, 1))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Gaussian::new(self.re.clone(), -self.im.clone())
    }

    /// Squared modulus `a * conj(a)`, a nonnegative rational.
    pub fn norm(&self) -> Rat {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Invalid("division by zero".into()));
        }
        let n = self.norm();
        Ok(Gaussian::new(&self.re / &n, -(&self.im / &n)))
    }

    /// Scale by a rational.
    pub fn scale(&self, r: &Rat) -> Self {
        Gaussian::new(&self.re * r, &self.im * r)
    }
}

impl fmt::Display for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", rat_to_string(&self.re))
        } else if self.re.is_zero() {
            write!(f, "{}i", rat_to_string(&self.im))
        } else if self.im.is_negative() {
            write!(f, "{}{}i", rat_to_string(&self.re), rat_to_string(&self.im))
        } else {
            write!(f, "{}+{}i", rat_to_string(&self.re), rat_to_string(&self.im))
        }
    }
}

impl fmt::Debug for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for &Gaussian {
    type Output = Gaussian;
    fn add(self, rhs: &Gaussian) -> Gaussian {
        Gaussian::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &Gaussian {
    type Output = Gaussian;
    fn sub(self, rhs: &Gaussian) -> Gaussian {
        Gaussian::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &Gaussian {
    type Output = Gaussian;
    fn mul(self, rhs: &Gaussian) -> Gaussian {
        Gaussian::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Div for &Gaussian {
    type Output = Gaussian;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Gaussian) -> Gaussian {
        let inv = rhs.inv().expect("division by zero Gaussian rational");
        self * &inv
    }
}

impl Neg for &Gaussian {
    type Output = Gaussian;
    fn neg(self) -> Gaussian {
        Gaussian::new(-self.re.clone(), -self.im.clone())
    }
}

/// Sign of an exact quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// An angle `t * pi`.
///
/// Bounded angles are points of the circle of directions and normalize into
/// `0 <= t < 2`. Unbounded angles live on the universal cover and are never
/// reduced; they are what transports along long sectors work with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Angle {
    /// The angle is `pi_multiple * pi`.
    pub pi_multiple: Rat,
    pub bounded: bool,
}

impl Angle {
    /// A bounded direction, normalized into `[0, 2) * pi`.
    pub fn bounded(pi_multiple: Rat) -> Self {
        Angle {
            pi_multiple,
            bounded: true,
        }
        .normalize()
    }

    /// A point of the universal cover; kept exactly as given.
    pub fn unbounded(pi_multiple: Rat) -> Self {
        Angle {
            pi_multiple,
            bounded: false,
        }
    }

    pub fn zero() -> Self {
        Angle::bounded(Rat::zero())
    }

    /// Reduce mod `2*pi` so that `0 <= t < 2`; identity on unbounded angles.
    pub fn normalize(&self) -> Self {
        if !self.bounded {
            return self.clone();
        }
        Angle {
            pi_multiple: reduce_mod2(&self.pi_multiple),
            bounded: true,
        }
    }

    /// The direction on the circle below this cover point.
    pub fn project(&self) -> Angle {
        Angle {
            pi_multiple: reduce_mod2(&self.pi_multiple),
            bounded: true,
        }
    }

    /// Lift a bounded angle to the universal cover.
    pub fn lift(&self) -> Angle {
        Angle::unbounded(self.pi_multiple.clone())
    }

    /// Exact comparison. Unbounded angles compare on the cover; bounded
    /// angles compare as normalized representatives (cut point 0).
    pub fn compare(&self, other: &Angle) -> Result<Ordering> {
        if self.bounded != other.bounded {
            return Err(Error::AngleKind);
        }
        if self.bounded {
            Ok(reduce_mod2(&self.pi_multiple).cmp(&reduce_mod2(&other.pi_multiple)))
        } else {
            Ok(self.pi_multiple.cmp(&other.pi_multiple))
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·π", rat_to_string(&self.pi_multiple))
    }
}

/// Reduce a pi-multiple mod 2 into `[0, 2)`.
pub fn reduce_mod2(t: &Rat) -> Rat {
    let two = rat(2, 1);
    let mut r = t % &two;
    if r.is_negative() {
        r += &two;
    }
    r
}

/// Exact sign of `cos(t * pi)` for rational `t`.
pub fn cos_sign_pi(t: &Rat) -> Sign {
    let r = reduce_mod2(t);
    let half = rat(1, 2);
    let three_half = rat(3, 2);
    match (r.cmp(&half), r.cmp(&three_half)) {
        (Ordering::Equal, _) | (_, Ordering::Equal) => Sign::Zero,
        (Ordering::Less, _) => Sign::Positive,
        (_, Ordering::Greater) => Sign::Positive,
        _ => Sign::Negative,
    }
}

/// Exact sign of `cos` at an angle.
pub fn cos_sign(a: &Angle) -> Sign {
    cos_sign_pi(&a.pi_multiple)
}

/// A nonzero complex coefficient in polar form: positive rational modulus
/// and argument a rational multiple of pi.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolarCoeff {
    pub modulus: Rat,
    /// Argument normalized into `[0, 2) * pi`.
    pub arg_pi: Rat,
}

impl PolarCoeff {
    pub fn new(modulus: Rat, arg_pi: Rat) -> Result<Self> {
        if !modulus.is_positive() {
            return Err(Error::Invalid("polar coefficient needs modulus > 0".into()));
        }
        Ok(PolarCoeff {
            modulus,
            arg_pi: reduce_mod2(&arg_pi),
        })
    }

    pub fn neg(&self) -> Self {
        PolarCoeff {
            modulus: self.modulus.clone(),
            arg_pi: reduce_mod2(&(&self.arg_pi + Rat::one())),
        }
    }

    /// Rotate the argument by `delta * pi`.
    pub fn rotate(&self, delta_pi: &Rat) -> Self {
        PolarCoeff {
            modulus: self.modulus.clone(),
            arg_pi: reduce_mod2(&(&self.arg_pi + delta_pi)),
        }
    }

    /// Sum of two polar coefficients, when the result stays polar-exact:
    /// equal arguments add moduli, opposite arguments subtract them.
    /// Returns `None` for a zero sum, `Err` if the sum leaves the
    /// representable class.
    pub fn add(&self, other: &PolarCoeff) -> Result<Option<PolarCoeff>> {
        if self.arg_pi == other.arg_pi {
            return Ok(Some(PolarCoeff {
                modulus: &self.modulus + &other.modulus,
                arg_pi: self.arg_pi.clone(),
            }));
        }
        if reduce_mod2(&(&self.arg_pi - &other.arg_pi)) == Rat::one() {
            let d = &self.modulus - &other.modulus;
            return Ok(match d.cmp(&Rat::zero()) {
                Ordering::Greater => Some(PolarCoeff {
                    modulus: d,
                    arg_pi: self.arg_pi.clone(),
                }),
                Ordering::Less => Some(PolarCoeff {
                    modulus: -d,
                    arg_pi: other.arg_pi.clone(),
                }),
                Ordering::Equal => None,
            });
        }
        Err(Error::Invalid(
            "sum of polar coefficients with non-aligned arguments".into(),
        ))
    }
}

/// Sort and deduplicate a list of bounded angles.
pub fn sort_angles(mut v: Vec<Rat>) -> Vec<Rat> {
    v.sort();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_normalization() {
        assert_eq!(Angle::bounded(rat(9, 4)).pi_multiple, rat(1, 4));
        assert_eq!(Angle::bounded(rat(-1, 2)).pi_multiple, rat(3, 2));
        assert_eq!(Angle::bounded(rat(0, 1)).pi_multiple, rat(0, 1));
        // idempotent
        let a = Angle::bounded(rat(7, 3));
        assert_eq!(a.normalize(), a);
    }

    #[test]
    fn cos_sign_basics() {
        assert_eq!(cos_sign(&Angle::bounded(rat(0, 1))), Sign::Positive);
        assert_eq!(cos_sign(&Angle::bounded(rat(1, 2))), Sign::Zero);
        assert_eq!(cos_sign(&Angle::bounded(rat(1, 1))), Sign::Negative);
        assert_eq!(cos_sign(&Angle::bounded(rat(3, 2))), Sign::Zero);
        assert_eq!(cos_sign(&Angle::bounded(rat(7, 4))), Sign::Positive);
    }

    #[test]
    fn angle_comparisons() {
        let less = Angle::unbounded(rat(1, 4))
            .compare(&Angle::unbounded(rat(3, 4)))
            .unwrap();
        assert_eq!(less, Ordering::Less);
        let eq = Angle::bounded(rat(0, 1))
            .compare(&Angle::bounded(rat(2, 1)))
            .unwrap();
        assert_eq!(eq, Ordering::Equal);
        let gt = Angle::unbounded(rat(5, 2))
            .compare(&Angle::unbounded(rat(1, 2)))
            .unwrap();
        assert_eq!(gt, Ordering::Greater);
        assert!(Angle::bounded(rat(1, 2))
            .compare(&Angle::unbounded(rat(1, 2)))
            .is_err());
    }

    #[test]
    fn gaussian_field_axioms() {
        let a = Gaussian::new(rat(3, 5), rat(-7, 2));
        let inv = a.inv().unwrap();
        assert_eq!(&a * &inv, Gaussian::one());
        assert_eq!(a.conj().conj(), a);
        assert!(Gaussian::zero().inv().is_err());
    }

    #[test]
    fn polar_sum() {
        let p = PolarCoeff::new(rat(1, 2), rat(1, 4)).unwrap();
        let q = PolarCoeff::new(rat(1, 3), rat(5, 4)).unwrap();
        // opposite arguments: moduli subtract
        let s = p.add(&q).unwrap().unwrap();
        assert_eq!(s.modulus, rat(1, 6));
        assert_eq!(s.arg_pi, rat(1, 4));
        let z = p.add(&PolarCoeff::new(rat(1, 2), rat(5, 4)).unwrap()).unwrap();
        assert!(z.is_none());
        assert!(p.add(&PolarCoeff::new(rat(1, 1), rat(1, 3)).unwrap()).is_err());
    }
}
