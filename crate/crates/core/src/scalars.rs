//! Exact coefficient arithmetic: arbitrary-precision rationals, p-adic
//! valuation, prime-field reduction, and the combinatorial coefficients of
//! divided-power calculus.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{AlgebraError, Result};

/// An exact rational number. Always stored normalized: gcd(num, den) = 1,
/// den >= 1, zero is 0/1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactScalar(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        ExactScalar(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        ExactScalar(BigRational::from_integer(n))
    }

    /// Build num/den. Panics on a zero denominator.
    pub fn from_frac(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        ExactScalar(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big_frac(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        ExactScalar(BigRational::new(num, den))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(ExactScalar(self.0.recip()))
        }
    }

    /// Integer power with negative exponents allowed (panics on 0^-k).
    pub fn pow(&self, e: i64) -> Self {
        if e == 0 {
            return Self::one();
        }
        if e < 0 {
            return self.inv().expect("inverse of zero").pow(-e);
        }
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                ExactScalar((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar(self.0.$method(rhs.0))
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);
scalar_binop!(Div, div);

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-&self.0)
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-self.0)
    }
}

/// A fixed prime, checked at construction by trial division.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeContext {
    p: u64,
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        Ok(PrimeContext { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// p-adic valuation value: an integer or +infinity (for zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn is_nonnegative(&self) -> bool {
        match self {
            Valuation::Finite(v) => *v >= 0,
            Valuation::Infinite => true,
        }
    }

    pub fn finite(&self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(*v),
            Valuation::Infinite => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Finite(_), Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        })
    }
}

fn int_valuation(n: &BigInt, p: u64) -> Option<i64> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0i64;
    let mut cur = n.abs();
    loop {
        let (q, r) = num::Integer::div_rem(&cur, &p);
        if r.is_zero() {
            v += 1;
            cur = q;
        } else {
            return Some(v);
        }
    }
}

/// v_p(q) = v_p(num) - v_p(den); +infinity for zero.
pub fn vp(q: &ExactScalar, ctx: &PrimeContext) -> Valuation {
    if q.is_zero() {
        return Valuation::Infinite;
    }
    let vn = int_valuation(q.numer(), ctx.p()).expect("nonzero numerator");
    let vd = int_valuation(q.denom(), ctx.p()).expect("nonzero denominator");
    Valuation::Finite(vn - vd)
}

/// Membership in the local ring Z_(p): true iff v_p(q) >= 0.
pub fn is_p_local(q: &ExactScalar, ctx: &PrimeContext) -> bool {
    vp(q, ctx).is_nonnegative()
}

/// Image of a p-local scalar in the prime field, as a representative in 0..p.
pub fn mod_p(q: &ExactScalar, ctx: &PrimeContext) -> Result<u64> {
    if !is_p_local(q, ctx) {
        return Err(AlgebraError::NonPLocal {
            value: q.to_string(),
            p: ctx.p(),
        });
    }
    let p = BigInt::from(ctx.p());
    let num = num::Integer::mod_floor(q.numer(), &p);
    let den = num::Integer::mod_floor(q.denom(), &p);
    let num: u64 = num.try_into().expect("residue fits in u64");
    let den: u64 = den.try_into().expect("residue fits in u64");
    let den_inv = mod_inverse(den, ctx.p()).expect("denominator is a p-unit");
    Ok(num * den_inv % ctx.p())
}

/// Inverse mod p by extended Euclid; None when a == 0 mod p.
pub fn mod_inverse(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return None;
    }
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p as i64, a as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1);
    Some(t.rem_euclid(p as i64) as u64)
}

/// Coefficient domain for algebra elements: exact rationals, the p-local
/// subring, or the prime field (stored as integer representatives in 0..p).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScalarDomain {
    Rational,
    PLocal(PrimeContext),
    PrimeField(PrimeContext),
}

impl ScalarDomain {
    pub fn prime(&self) -> Option<PrimeContext> {
        match self {
            ScalarDomain::Rational => None,
            ScalarDomain::PLocal(ctx) | ScalarDomain::PrimeField(ctx) => Some(*ctx),
        }
    }

    pub fn is_prime_field(&self) -> bool {
        matches!(self, ScalarDomain::PrimeField(_))
    }

    /// Bring a raw rational into the domain: reduce mod p for prime fields,
    /// check p-locality for the local ring.
    pub fn reduce(&self, s: ExactScalar) -> Result<ExactScalar> {
        match self {
            ScalarDomain::Rational => Ok(s),
            ScalarDomain::PLocal(ctx) => {
                if is_p_local(&s, ctx) {
                    Ok(s)
                } else {
                    Err(AlgebraError::NonPLocal {
                        value: s.to_string(),
                        p: ctx.p(),
                    })
                }
            }
            ScalarDomain::PrimeField(ctx) => Ok(ExactScalar::from_int(mod_p(&s, ctx)? as i64)),
        }
    }

    /// Multiplicative inverse inside the domain.
    pub fn inv(&self, s: &ExactScalar) -> Result<ExactScalar> {
        match self {
            ScalarDomain::Rational => s.inv().ok_or(AlgebraError::ZeroElement),
            ScalarDomain::PLocal(ctx) => {
                let r = s.inv().ok_or(AlgebraError::ZeroElement)?;
                self.reduce(r).map_err(|_| AlgebraError::NonPLocal {
                    value: format!("1/({s})"),
                    p: ctx.p(),
                })
            }
            ScalarDomain::PrimeField(ctx) => {
                let rep = mod_p(s, ctx)?;
                let inv = mod_inverse(rep, ctx.p()).ok_or(AlgebraError::ZeroElement)?;
                Ok(ExactScalar::from_int(inv as i64))
            }
        }
    }
}

static PASCAL: OnceLock<Mutex<Vec<Vec<BigInt>>>> = OnceLock::new();

/// Binomial coefficient by Pascal recursion with a synchronized memo table.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let table = PASCAL.get_or_init(|| Mutex::new(vec![vec![BigInt::one()]]));
    let mut rows = table.lock().expect("pascal table lock");
    while rows.len() as u64 <= n {
        let prev = rows.last().expect("nonempty table");
        let m = prev.len();
        let mut next = Vec::with_capacity(m + 1);
        next.push(BigInt::one());
        for i in 1..m {
            next.push(&prev[i - 1] + &prev[i]);
        }
        next.push(BigInt::one());
        rows.push(next);
    }
    rows[n as usize][k as usize].clone()
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

/// Multinomial coefficient (sum parts)! / prod(parts!), as a product of
/// binomials so no division is ever performed.
pub fn multinomial(parts: &[u64]) -> BigInt {
    let mut acc = BigInt::one();
    let mut cum = 0u64;
    for &part in parts {
        cum += part;
        acc *= binomial(cum, part);
    }
    acc
}

/// The coefficient of the divided-power composition law
/// gamma_m(gamma_n(x)) = c(m, n) * gamma_{mn}(x), namely (mn)!/(m!*(n!)^m).
/// Computed as prod_{i=1..m} C(i*n - 1, n - 1), which is manifestly integral.
pub fn gamma_comp_coeff(m: u64, n: u64) -> BigInt {
    assert!(n >= 1, "gamma_comp_coeff needs n >= 1");
    let mut acc = BigInt::one();
    for i in 1..=m {
        acc *= binomial(i * n - 1, n - 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    // independent oracle: valuation by naive repeated division on i64
    fn vp_oracle(mut n: i64, p: i64) -> Option<i64> {
        if n == 0 {
            return None;
        }
        let mut v = 0;
        while n % p == 0 {
            n /= p;
            v += 1;
        }
        Some(v)
    }

    fn factorial_oracle(n: u64) -> BigInt {
        (2..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
    }

    #[test]
    fn vp_examples() {
        let p2 = PrimeContext::new(2).unwrap();
        let p3 = PrimeContext::new(3).unwrap();
        assert_eq!(vp_oracle(12, 2), Some(2));
        assert_eq!(
            vp(&ExactScalar::from_int(12), &p2),
            Valuation::Finite(2)
        );
        assert_eq!(vp(&ExactScalar::from_int(1), &p3), Valuation::Finite(0));
        assert_eq!(vp(&ExactScalar::zero(), &p2), Valuation::Infinite);
        assert_eq!(
            vp(&ExactScalar::from_frac(3, 8), &p2),
            Valuation::Finite(-3)
        );
    }

    #[test]
    fn p_local_examples() {
        let p2 = PrimeContext::new(2).unwrap();
        let p7 = PrimeContext::new(7).unwrap();
        assert!(is_p_local(&ExactScalar::from_frac(3, 5), &p2));
        assert!(!is_p_local(&ExactScalar::from_frac(1, 2), &p2));
        assert!(is_p_local(&ExactScalar::zero(), &p7));
    }

    #[test]
    fn mod_p_examples() {
        let p2 = PrimeContext::new(2).unwrap();
        assert_eq!(mod_p(&ExactScalar::from_frac(3, 5), &p2).unwrap(), 1);
        assert_eq!(mod_p(&ExactScalar::from_int(4), &p2).unwrap(), 0);
        assert!(matches!(
            mod_p(&ExactScalar::from_frac(1, 2), &p2),
            Err(AlgebraError::NonPLocal { .. })
        ));
        let p5 = PrimeContext::new(5).unwrap();
        // 2/3 = 2 * 3^{-1} = 2 * 2 = 4 in F_5
        assert_eq!(mod_p(&ExactScalar::from_frac(2, 3), &p5).unwrap(), 4);
    }

    #[test]
    fn mod_p_is_ring_hom_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &p in &[2u64, 3, 5] {
            let ctx = PrimeContext::new(p).unwrap();
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| loop {
                let num = rng.gen_range(-50i64..=50);
                let den = rng.gen_range(1i64..=50);
                let s = ExactScalar::from_frac(num, den);
                if is_p_local(&s, &ctx) {
                    return s;
                }
            };
            for _ in 0..100 {
                let a = draw(&mut rng);
                let b = draw(&mut rng);
                let sum = mod_p(&(&a + &b), &ctx).unwrap();
                let prod = mod_p(&(&a * &b), &ctx).unwrap();
                let ma = mod_p(&a, &ctx).unwrap();
                let mb = mod_p(&b, &ctx).unwrap();
                assert_eq!(sum, (ma + mb) % p);
                assert_eq!(prod, ma * mb % p);
            }
        }
    }

    #[test]
    fn gamma_comp_examples() {
        assert_eq!(gamma_comp_coeff(1, 5), BigInt::from(1));
        // oracle: 4!/(2! * 2!^2) and 6!/(2! * 6^2)
        let o22 = factorial_oracle(4) / (factorial_oracle(2) * BigInt::from(4));
        assert_eq!(gamma_comp_coeff(2, 2), o22);
        assert_eq!(gamma_comp_coeff(2, 2), BigInt::from(3));
        let o23 = factorial_oracle(6) / (factorial_oracle(2) * BigInt::from(36));
        assert_eq!(gamma_comp_coeff(2, 3), o23);
        assert_eq!(gamma_comp_coeff(2, 3), BigInt::from(10));
        assert_eq!(gamma_comp_coeff(0, 4), BigInt::from(1));
    }

    #[test]
    fn gamma_comp_times_denominator_is_factorial() {
        for m in 0..=6u64 {
            for n in 1..=6u64 {
                let lhs = gamma_comp_coeff(m, n)
                    * factorial_oracle(m)
                    * factorial_oracle(n).pow(m as u32);
                assert_eq!(lhs, factorial_oracle(m * n), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn primality_check() {
        assert!(PrimeContext::new(2).is_ok());
        assert!(PrimeContext::new(97).is_ok());
        assert_eq!(PrimeContext::new(4), Err(AlgebraError::NotPrime(4)));
        assert_eq!(PrimeContext::new(1), Err(AlgebraError::NotPrime(1)));
        assert_eq!(PrimeContext::new(0), Err(AlgebraError::NotPrime(0)));
    }

    #[test]
    fn scalar_display_round_trip() {
        assert_eq!(ExactScalar::from_frac(3, 5).to_string(), "3/5");
        assert_eq!(ExactScalar::from_int(-7).to_string(), "-7");
        assert_eq!(ExactScalar::zero().to_string(), "0");
        assert_eq!(ExactScalar::from_frac(-3, 6).to_string(), "-1/2");
    }

    #[test]
    fn domain_reduction() {
        let p3 = PrimeContext::new(3).unwrap();
        let fp = ScalarDomain::PrimeField(p3);
        assert_eq!(
            fp.reduce(ExactScalar::from_int(7)).unwrap(),
            ExactScalar::from_int(1)
        );
        assert_eq!(
            fp.inv(&ExactScalar::from_int(2)).unwrap(),
            ExactScalar::from_int(2)
        );
        let pl = ScalarDomain::PLocal(p3);
        assert!(pl.reduce(ExactScalar::from_frac(1, 3)).is_err());
        assert!(pl.inv(&ExactScalar::from_int(3)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn vp_multiplicative_additive(an in -200i64..200, ad in 1i64..200,
                                      bn in -200i64..200, bd in 1i64..200) {
            let p = PrimeContext::new(3).unwrap();
            let a = ExactScalar::from_frac(an, ad);
            let b = ExactScalar::from_frac(bn, bd);
            let va = vp(&a, &p);
            let vb = vp(&b, &p);
            // v(ab) = v(a) + v(b)
            match (va, vb) {
                (Valuation::Finite(x), Valuation::Finite(y)) => {
                    proptest::prop_assert_eq!(vp(&(&a * &b), &p), Valuation::Finite(x + y));
                    // ultrametric inequality, equality on distinct valuations
                    let vs = vp(&(&a + &b), &p);
                    let min = x.min(y);
                    match vs {
                        Valuation::Finite(s) => proptest::prop_assert!(s >= min),
                        Valuation::Infinite => {}
                    }
                    if x != y {
                        proptest::prop_assert_eq!(vs, Valuation::Finite(min));
                    }
                }
                _ => {
                    proptest::prop_assert_eq!(vp(&(&a * &b), &p), Valuation::Infinite);
                }
            }
        }
    }
}
