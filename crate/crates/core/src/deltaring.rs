//! Free delta-rings Z_(p){G} as polynomial rings in the tower variables
//! delta^k(g): the delta operator by the axiom recursion, the Frobenius lift
//! as an independent substitution endomorphism, substitution homomorphisms,
//! and the explicit delta identities used by the prismatic module.
//!
//! The delta operator over a prime field is undefined (it divides by p);
//! characteristic-p statements are always proved by reducing exact p-local
//! identities.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num::BigInt;

use crate::error::{AlgebraError, Result};
use crate::monomial::cmp_dense;
use crate::report::format_terms;
use crate::scalars::{binomial, is_p_local, ExactScalar, PrimeContext, ScalarDomain, Valuation};

/// Context of a free delta-ring: generator names, the depth bound on tower
/// variables, and the scalar domain (rational or p-local).
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaContext {
    generators: Vec<String>,
    depth_bound: u8,
    domain: ScalarDomain,
    prime: PrimeContext,
}

impl DeltaContext {
    pub fn new(
        generators: &[&str],
        depth_bound: u8,
        domain: ScalarDomain,
        prime: PrimeContext,
    ) -> Result<Self> {
        if domain.is_prime_field() {
            return Err(AlgebraError::DeltaOverPrimeField);
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in generators {
            if !seen.insert(*g) {
                return Err(AlgebraError::UnknownVariable(format!(
                    "duplicate generator name {g}"
                )));
            }
        }
        Ok(DeltaContext {
            generators: generators.iter().map(|s| s.to_string()).collect(),
            depth_bound,
            domain,
            prime,
        })
    }

    pub fn rational(generators: &[&str], depth_bound: u8, prime: PrimeContext) -> Self {
        Self::new(generators, depth_bound, ScalarDomain::Rational, prime)
            .expect("rational domain is always valid")
    }

    pub fn p_local(generators: &[&str], depth_bound: u8, prime: PrimeContext) -> Self {
        Self::new(generators, depth_bound, ScalarDomain::PLocal(prime), prime)
            .expect("p-local domain is always valid")
    }

    pub fn p(&self) -> u64 {
        self.prime.p()
    }

    pub fn prime(&self) -> PrimeContext {
        self.prime
    }

    pub fn depth_bound(&self) -> u8 {
        self.depth_bound
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn domain(&self) -> &ScalarDomain {
        &self.domain
    }

    pub fn generator_index(&self, name: &str) -> Result<u16> {
        self.generators
            .iter()
            .position(|g| g == name)
            .map(|i| i as u16)
            .ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))
    }
}

/// The symbol delta^depth(generator).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TowerVariable {
    pub generator: u16,
    pub depth: u8,
}

impl TowerVariable {
    pub fn new(generator: u16, depth: u8) -> Self {
        TowerVariable { generator, depth }
    }

    /// Serialized name: "g" at depth 0, "d(g)" at depth 1, "d^k(g)" beyond.
    pub fn display(&self, ctx: &DeltaContext) -> String {
        let g = &ctx.generators[self.generator as usize];
        match self.depth {
            0 => g.clone(),
            1 => format!("d({g})"),
            k => format!("d^{k}({g})"),
        }
    }
}

/// Sorted sparse exponent vector over tower variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TowerMonomial(Vec<(TowerVariable, u32)>);

impl TowerMonomial {
    pub fn unit() -> Self {
        TowerMonomial(vec![])
    }

    pub fn var(v: TowerVariable) -> Self {
        TowerMonomial(vec![(v, 1)])
    }

    pub fn from_factors(mut factors: Vec<(TowerVariable, u32)>) -> Self {
        factors.retain(|&(_, e)| e > 0);
        factors.sort_unstable();
        TowerMonomial(factors)
    }

    pub fn factors(&self) -> &[(TowerVariable, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_depth(&self) -> u8 {
        self.0.iter().map(|&(v, _)| v.depth).max().unwrap_or(0)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<TowerVariable, u32> = self.0.iter().copied().collect();
        for &(v, e) in &other.0 {
            *out.entry(v).or_insert(0) += e;
        }
        TowerMonomial(out.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn display(&self, ctx: &DeltaContext) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&(v, e)| {
                let name = v.display(ctx);
                if e == 1 {
                    name
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl Ord for TowerMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| cmp_dense(&other.0, &self.0))
    }
}

impl PartialOrd for TowerMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse polynomial in tower variables with exact coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DeltaElement {
    terms: BTreeMap<TowerMonomial, ExactScalar>,
}

impl DeltaElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::scalar_unchecked(ExactScalar::one())
    }

    fn scalar_unchecked(c: ExactScalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(TowerMonomial::unit(), c);
        }
        DeltaElement { terms }
    }

    pub fn scalar(ctx: &DeltaContext, c: ExactScalar) -> Result<Self> {
        Ok(Self::scalar_unchecked(ctx.domain.reduce(c)?))
    }

    /// The generator itself (depth 0).
    pub fn gen(ctx: &DeltaContext, name: &str) -> Result<Self> {
        let idx = ctx.generator_index(name)?;
        Ok(Self::from_monomial(
            TowerMonomial::var(TowerVariable::new(idx, 0)),
            ExactScalar::one(),
        ))
    }

    /// delta^depth of a generator as a bare tower variable.
    pub fn tower(ctx: &DeltaContext, name: &str, depth: u8) -> Result<Self> {
        if depth > ctx.depth_bound {
            return Err(AlgebraError::DepthExceeded {
                needed: depth as u32,
                bound: ctx.depth_bound as u32,
            });
        }
        let idx = ctx.generator_index(name)?;
        Ok(Self::from_monomial(
            TowerMonomial::var(TowerVariable::new(idx, depth)),
            ExactScalar::one(),
        ))
    }

    pub fn from_monomial(m: TowerMonomial, c: ExactScalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        DeltaElement { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TowerMonomial, &ExactScalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &TowerMonomial) -> ExactScalar {
        self.terms.get(m).cloned().unwrap_or_else(ExactScalar::zero)
    }

    pub fn max_depth(&self) -> u8 {
        self.terms.keys().map(|m| m.max_depth()).max().unwrap_or(0)
    }

    fn accumulate(&mut self, ctx: &DeltaContext, m: TowerMonomial, c: ExactScalar) {
        let cur = self.terms.remove(&m).unwrap_or_else(ExactScalar::zero);
        let sum = ctx
            .domain
            .reduce(cur + c)
            .expect("domain closed under addition");
        if !sum.is_zero() {
            self.terms.insert(m, sum);
        }
    }

    pub fn add(&self, ctx: &DeltaContext, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(ctx, m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, ctx: &DeltaContext, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(ctx, m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, ctx: &DeltaContext, c: &ExactScalar) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.accumulate(ctx, m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, ctx: &DeltaContext, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.accumulate(ctx, ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, ctx: &DeltaContext, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.mul(ctx, self);
        }
        acc
    }

    /// True when every coefficient has nonnegative p-adic valuation.
    pub fn is_p_local(&self, prime: &PrimeContext) -> bool {
        self.terms.values().all(|c| is_p_local(c, prime))
    }

    pub fn display(&self, ctx: &DeltaContext) -> String {
        let terms: Vec<(ExactScalar, String)> = self
            .terms
            .iter()
            .map(|(m, c)| (c.clone(), m.display(ctx)))
            .collect();
        format_terms(&terms)
    }

    /// JSON encoding shared with the divided-power module: monomial keys are
    /// tower-variable strings.
    pub fn to_json(&self, ctx: &DeltaContext) -> serde_json::Value {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let mut mono = serde_json::Map::new();
            for &(v, e) in m.factors() {
                mono.insert(v.display(ctx), e.into());
            }
            terms.push(serde_json::json!({"c": c.to_string(), "m": mono}));
        }
        serde_json::json!({ "terms": terms })
    }
}

/// The addition defect P(X, Y) = ((X+Y)^p - X^p - Y^p)/p evaluated on two
/// elements: sum_{j=1}^{p-1} (1/p) C(p, j) X^{p-j} Y^j. The scaled binomials
/// are integers, so this never leaves the scalar domain.
fn addition_defect(ctx: &DeltaContext, x: &DeltaElement, y: &DeltaElement) -> DeltaElement {
    let p = ctx.p();
    let mut out = DeltaElement::zero();
    for j in 1..p {
        let c = binomial(p, j) / BigInt::from(p);
        let term = x
            .pow(ctx, (p - j) as u32)
            .mul(ctx, &y.pow(ctx, j as u32))
            .scale(ctx, &ExactScalar::from_bigint(c));
        out = out.add(ctx, &term);
    }
    out
}

/// delta of a scalar: (c - c^p)/p, the unique delta-structure on the initial
/// delta-ring, extended to all rationals by the same formula.
fn delta_scalar(ctx: &DeltaContext, c: &ExactScalar) -> Result<ExactScalar> {
    let p = ExactScalar::from_int(ctx.p() as i64);
    ctx.domain.reduce((c - &c.pow(ctx.p() as i64)) / p)
}

/// delta of v^e by iterating the product rule; depth headroom of one is
/// required on the variable.
fn delta_var_power(ctx: &DeltaContext, v: TowerVariable, e: u32) -> Result<DeltaElement> {
    if v.depth as u32 + 1 > ctx.depth_bound as u32 {
        return Err(AlgebraError::DepthExceeded {
            needed: v.depth as u32 + 1,
            bound: ctx.depth_bound as u32,
        });
    }
    let p = ctx.p() as u32;
    let base = DeltaElement::from_monomial(TowerMonomial::var(v), ExactScalar::one());
    let dv = DeltaElement::from_monomial(
        TowerMonomial::var(TowerVariable::new(v.generator, v.depth + 1)),
        ExactScalar::one(),
    );
    let mut acc = dv.clone();
    // delta(v^{k+1}) = v^p delta(v^k) + v^{kp} delta(v) + p delta(v) delta(v^k)
    for k in 1..e {
        let vp = base.pow(ctx, p);
        let vkp = base.pow(ctx, k * p);
        let p_scalar = ExactScalar::from_int(ctx.p() as i64);
        acc = vp
            .mul(ctx, &acc)
            .add(ctx, &vkp.mul(ctx, &dv))
            .add(ctx, &dv.mul(ctx, &acc).scale(ctx, &p_scalar));
    }
    Ok(acc)
}

/// delta of a single term c * m via the product rule over its factors.
fn delta_term(ctx: &DeltaContext, m: &TowerMonomial, c: &ExactScalar) -> Result<DeltaElement> {
    let p = ctx.p();
    let mut factors = m.factors().to_vec();
    let Some((v, e)) = factors.pop() else {
        return Ok(DeltaElement::scalar_unchecked(delta_scalar(ctx, c)?));
    };
    let rest = TowerMonomial::from_factors(factors);
    let u = DeltaElement::from_monomial(TowerMonomial::var(v), ExactScalar::one()).pow(ctx, e);
    let du = delta_var_power(ctx, v, e)?;
    let w = DeltaElement::from_monomial(rest.clone(), c.clone());
    let dw = delta_term(ctx, &rest, c)?;
    // delta(uw) = u^p delta(w) + w^p delta(u) + p delta(u) delta(w)
    let p_scalar = ExactScalar::from_int(p as i64);
    Ok(u
        .pow(ctx, p as u32)
        .mul(ctx, &dw)
        .add(ctx, &w.pow(ctx, p as u32).mul(ctx, &du))
        .add(ctx, &du.mul(ctx, &dw).scale(ctx, &p_scalar)))
}

/// The delta operator, computed by the axiom recursion: the scalar formula on
/// coefficients, the depth shift on tower variables, the product rule on
/// factors and the addition law with defect P on sums.
pub fn delta(ctx: &DeltaContext, f: &DeltaElement) -> Result<DeltaElement> {
    let terms: Vec<(&TowerMonomial, &ExactScalar)> = f.terms.iter().collect();
    // fold from the back so the defect pairs each term with its tail sum
    let mut acc = DeltaElement::zero();
    let mut acc_delta = DeltaElement::zero();
    for (m, c) in terms.into_iter().rev() {
        let t = DeltaElement::from_monomial(m.clone(), c.clone());
        let dt = delta_term(ctx, m, c)?;
        if acc.is_zero() {
            acc = t;
            acc_delta = dt;
        } else {
            let defect = addition_defect(ctx, &t, &acc);
            acc_delta = dt.add(ctx, &acc_delta).sub(ctx, &defect);
            acc = acc.add(ctx, &t);
        }
    }
    Ok(acc_delta)
}

pub fn delta_iter(ctx: &DeltaContext, f: &DeltaElement, n: u32) -> Result<DeltaElement> {
    let mut out = f.clone();
    for _ in 0..n {
        out = delta(ctx, &out)?;
    }
    Ok(out)
}

/// The Frobenius lift phi(x) = x^p + p delta(x), implemented independently of
/// `delta` as the ring endomorphism substituting
/// (g, k) -> (g, k)^p + p * (g, k+1) and fixing scalars.
pub fn frobenius(ctx: &DeltaContext, f: &DeltaElement) -> Result<DeltaElement> {
    let p = ctx.p() as u32;
    let p_scalar = ExactScalar::from_int(ctx.p() as i64);
    let mut out = DeltaElement::zero();
    for (m, c) in &f.terms {
        let mut term = DeltaElement::scalar_unchecked(c.clone());
        for &(v, e) in m.factors() {
            if v.depth as u32 + 1 > ctx.depth_bound as u32 {
                return Err(AlgebraError::DepthExceeded {
                    needed: v.depth as u32 + 1,
                    bound: ctx.depth_bound as u32,
                });
            }
            let vp = DeltaElement::from_monomial(TowerMonomial::var(v), ExactScalar::one())
                .pow(ctx, p);
            let shifted = DeltaElement::from_monomial(
                TowerMonomial::var(TowerVariable::new(v.generator, v.depth + 1)),
                p_scalar.clone(),
            );
            let image = vp.add(ctx, &shifted);
            term = term.mul(ctx, &image.pow(ctx, e));
        }
        out = out.add(ctx, &term);
    }
    Ok(out)
}

pub fn frobenius_iter(ctx: &DeltaContext, f: &DeltaElement, n: u32) -> Result<DeltaElement> {
    let mut out = f.clone();
    for _ in 0..n {
        out = frobenius(ctx, &out)?;
    }
    Ok(out)
}

/// The delta-ring homomorphism induced by an assignment of generators:
/// (g, k) maps to delta^k of the image of g. Generators without an explicit
/// image map to the generator of the same name in the target context.
pub fn substitute(
    src: &DeltaContext,
    f: &DeltaElement,
    dst: &DeltaContext,
    assignment: &BTreeMap<String, DeltaElement>,
) -> Result<DeltaElement> {
    let mut out = DeltaElement::zero();
    for (m, c) in &f.terms {
        let mut term = DeltaElement::scalar_unchecked(c.clone());
        for &(v, e) in m.factors() {
            let name = &src.generators[v.generator as usize];
            let image = match assignment.get(name) {
                Some(el) => el.clone(),
                None => DeltaElement::gen(dst, name)?,
            };
            let image_k = delta_iter(dst, &image, v.depth as u32)?;
            term = term.mul(dst, &image_k.pow(dst, e));
        }
        out = out.add(dst, &term);
    }
    Ok(out)
}

/// Checks delta(u^p) = sum_{k=1}^p C(p,k) u^{p(p-k)} p^{k-1} delta(u)^k
/// exactly.
pub fn verify_delta_power(ctx: &DeltaContext, u: &DeltaElement) -> Result<bool> {
    let p = ctx.p();
    let lhs = delta(ctx, &u.pow(ctx, p as u32))?;
    let du = delta(ctx, u)?;
    let mut rhs = DeltaElement::zero();
    for k in 1..=p {
        let c = ExactScalar::from_bigint(binomial(p, k))
            * ExactScalar::from_int(p as i64).pow(k as i64 - 1);
        let term = u
            .pow(ctx, (p * (p - k)) as u32)
            .mul(ctx, &du.pow(ctx, k as u32))
            .scale(ctx, &c);
        rhs = rhs.add(ctx, &term);
    }
    Ok(lhs == rhs)
}

/// Checks the closed expansion of delta(y^p / p) in Q{y}:
///   ((p^{p-1} - 1)/p^{p+1}) y^{p^2} + y^{p(p-1)} delta(y)
///     + sum_{k=0}^{p-2} p^{p-2-k} C(p,k) y^{kp} delta(y)^{p-k},
/// and that the result lands in the divided-power envelope: the coefficient
/// of each monomial y^a * (tower part) becomes p-local once measured against
/// gamma_a(y) = y^a / a!, i.e. v_p(c * a!) >= 0 for every term.
pub fn delta_divided_identity(prime: PrimeContext) -> Result<bool> {
    let ctx = DeltaContext::rational(&["y"], 2, prime);
    let p = prime.p();
    let y = DeltaElement::gen(&ctx, "y")?;
    let inv_p = ExactScalar::from_frac(1, p as i64);
    let w = y.pow(&ctx, p as u32).scale(&ctx, &inv_p);
    let lhs = delta(&ctx, &w)?;

    let dy = delta(&ctx, &y)?;
    let lead_coeff = (ExactScalar::from_int(p as i64).pow(p as i64 - 1) - ExactScalar::one())
        / ExactScalar::from_int(p as i64).pow(p as i64 + 1);
    let mut rhs = y.pow(&ctx, (p * p) as u32).scale(&ctx, &lead_coeff);
    rhs = rhs.add(
        &ctx,
        &y.pow(&ctx, (p * (p - 1)) as u32).mul(&ctx, &dy),
    );
    for k in 0..=(p as i64 - 2).max(-1) {
        if k < 0 {
            break;
        }
        let k = k as u64;
        let c = ExactScalar::from_int(p as i64).pow(p as i64 - 2 - k as i64)
            * ExactScalar::from_bigint(binomial(p, k));
        let term = y
            .pow(&ctx, (k * p) as u32)
            .mul(&ctx, &dy.pow(&ctx, (p - k) as u32))
            .scale(&ctx, &c);
        rhs = rhs.add(&ctx, &term);
    }
    let pd_local = lhs.terms.iter().all(|(m, c)| {
        let a: u32 = m
            .factors()
            .iter()
            .filter(|&&(v, _)| v.depth == 0)
            .map(|&(_, e)| e)
            .sum();
        let normalized = c * &ExactScalar::from_bigint(crate::scalars::factorial(a as u64));
        is_p_local(&normalized, &prime)
    });
    Ok(lhs == rhs && pd_local)
}

/// delta^n(x) in the rationalized presentation Q[x, phi(x), phi^2(x), ...],
/// computed by the recursion delta(f) = (phi(f) - f^p)/p where phi shifts the
/// variable index. Exponent vectors index phi-powers: entry j is the exponent
/// of phi^j(x).
pub type PhiPolynomial = BTreeMap<Vec<u32>, ExactScalar>;

#[derive(Clone, Debug)]
pub struct RationalNormalForm {
    pub poly: PhiPolynomial,
    pub deg_x: u32,
    pub leading: ExactScalar,
    pub degree_ok: bool,
    pub leading_ok: bool,
}

fn phi_trim(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn phi_add(a: &mut PhiPolynomial, m: Vec<u32>, c: ExactScalar) {
    let cur = a.remove(&m).unwrap_or_else(ExactScalar::zero);
    let sum = cur + c;
    if !sum.is_zero() {
        a.insert(m, sum);
    }
}

fn phi_mul(a: &PhiPolynomial, b: &PhiPolynomial) -> PhiPolynomial {
    let mut out = PhiPolynomial::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let mut m = vec![0u32; ma.len().max(mb.len())];
            for (i, e) in ma.iter().enumerate() {
                m[i] += e;
            }
            for (i, e) in mb.iter().enumerate() {
                m[i] += e;
            }
            phi_trim(&mut m);
            phi_add(&mut out, m, ca * cb);
        }
    }
    out
}

fn phi_pow(a: &PhiPolynomial, e: u32) -> PhiPolynomial {
    let mut acc = PhiPolynomial::from([(vec![], ExactScalar::one())]);
    for _ in 0..e {
        acc = phi_mul(&acc, a);
    }
    acc
}

/// Renders a phi-polynomial with variables x, phi(x), phi^2(x), ...
pub fn phi_poly_display(poly: &PhiPolynomial) -> String {
    let name = |j: usize| match j {
        0 => "x".to_string(),
        1 => "phi(x)".to_string(),
        j => format!("phi^{j}(x)"),
    };
    let terms: Vec<(ExactScalar, String)> = poly
        .iter()
        .map(|(m, c)| {
            let mono: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|&(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        name(j)
                    } else {
                        format!("{}^{e}", name(j))
                    }
                })
                .collect();
            let mono = if mono.is_empty() {
                "1".to_string()
            } else {
                mono.join("*")
            };
            (c.clone(), mono)
        })
        .collect();
    format_terms(&terms)
}

pub fn rational_normal_form(
    prime: PrimeContext,
    n: u32,
    depth_bound: u32,
) -> Result<RationalNormalForm> {
    if n > depth_bound {
        return Err(AlgebraError::DepthExceeded {
            needed: n,
            bound: depth_bound,
        });
    }
    let p = prime.p();
    let inv_p = ExactScalar::from_frac(1, p as i64);
    // D_0 = x
    let mut d = PhiPolynomial::from([(vec![1u32], ExactScalar::one())]);
    for _ in 0..n {
        // shift phi^j(x) -> phi^{j+1}(x)
        let mut shifted = PhiPolynomial::new();
        for (m, c) in &d {
            let mut nm = vec![0u32];
            nm.extend_from_slice(m);
            phi_trim(&mut nm);
            shifted.insert(nm, c.clone());
        }
        let mut dp = phi_pow(&d, p as u32);
        // (shifted - d^p) / p
        let mut next = PhiPolynomial::new();
        for (m, c) in shifted {
            phi_add(&mut next, m, c * inv_p.clone());
        }
        for (m, c) in std::mem::take(&mut dp) {
            phi_add(&mut next, m, -(c * inv_p.clone()));
        }
        d = next;
    }
    let deg_x = d
        .keys()
        .map(|m| m.first().copied().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let p_pow_n = (p as u64).pow(n);
    let mut pure = vec![p_pow_n as u32];
    phi_trim(&mut pure);
    let leading = d.get(&pure).cloned().unwrap_or_else(ExactScalar::zero);
    // expected degree p^n, leading (-1/p)^{(p^n - 1)/(p - 1)}
    let exp = ((p_pow_n - 1) / (p - 1)) as i64;
    let expected_leading = ExactScalar::from_frac(-1, p as i64).pow(exp);
    Ok(RationalNormalForm {
        degree_ok: deg_x as u64 == p_pow_n,
        leading_ok: leading == expected_leading,
        poly: d,
        deg_x,
        leading,
    })
}

/// The integrality statement behind the delta tower: all coefficients of
/// delta^n applied to a p-local element stay p-local.
pub fn iterated_delta_is_p_local(
    ctx: &DeltaContext,
    f: &DeltaElement,
    n: u32,
) -> Result<bool> {
    let mut cur = f.clone();
    for _ in 0..n {
        cur = delta(ctx, &cur)?;
        if !cur.is_p_local(&ctx.prime()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Valuation floor over all coefficients, used by cross-checks.
pub fn min_valuation(f: &DeltaElement, prime: &PrimeContext) -> Valuation {
    f.terms
        .values()
        .map(|c| crate::scalars::vp(c, prime))
        .fold(Valuation::Infinite, |acc, v| {
            if matches!(v.partial_cmp(&acc), Some(Ordering::Less)) {
                v
            } else {
                acc
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> PrimeContext {
        PrimeContext::new(2).unwrap()
    }

    fn p3() -> PrimeContext {
        PrimeContext::new(3).unwrap()
    }

    fn int(n: i64) -> ExactScalar {
        ExactScalar::from_int(n)
    }

    #[test]
    fn delta_sum_axiom_p2() {
        let ctx = DeltaContext::p_local(&["x", "y"], 2, p2());
        let x = DeltaElement::gen(&ctx, "x").unwrap();
        let y = DeltaElement::gen(&ctx, "y").unwrap();
        let lhs = delta(&ctx, &x.add(&ctx, &y)).unwrap();
        // delta(x) + delta(y) - x*y
        let expect = DeltaElement::tower(&ctx, "x", 1)
            .unwrap()
            .add(&ctx, &DeltaElement::tower(&ctx, "y", 1).unwrap())
            .sub(&ctx, &x.mul(&ctx, &y));
        assert_eq!(lhs, expect);
        assert_eq!(lhs.display(&ctx), "d(x) + d(y) - x*y");
    }

    #[test]
    fn delta_scalar_p2() {
        let ctx = DeltaContext::p_local(&["x"], 1, p2());
        let three = DeltaElement::scalar(&ctx, int(3)).unwrap();
        // (3 - 9)/2 = -3
        assert_eq!(
            delta(&ctx, &three).unwrap(),
            DeltaElement::scalar(&ctx, int(-3)).unwrap()
        );
    }

    #[test]
    fn delta_square_p2() {
        let ctx = DeltaContext::p_local(&["x"], 1, p2());
        let x = DeltaElement::gen(&ctx, "x").unwrap();
        let lhs = delta(&ctx, &x.pow(&ctx, 2)).unwrap();
        // product-rule oracle with u = v = x:
        // delta(x*x) = x^2 d(x) + x^2 d(x) + 2 d(x)^2
        let dx = DeltaElement::tower(&ctx, "x", 1).unwrap();
        let oracle = x
            .pow(&ctx, 2)
            .mul(&ctx, &dx)
            .scale(&ctx, &int(2))
            .add(&ctx, &dx.pow(&ctx, 2).scale(&ctx, &int(2)));
        assert_eq!(lhs, oracle);
    }

    #[test]
    fn delta_product_axiom_random_shapes() {
        for prime in [p2(), p3()] {
            let ctx = DeltaContext::p_local(&["x", "y"], 2, prime);
            let x = DeltaElement::gen(&ctx, "x").unwrap();
            let y = DeltaElement::gen(&ctx, "y").unwrap();
            let f = x.pow(&ctx, 2).add(&ctx, &y.scale(&ctx, &int(3)));
            let g = x.mul(&ctx, &y).add(&ctx, &DeltaElement::one());
            let p_scalar = int(prime.p() as i64);
            let lhs = delta(&ctx, &f.mul(&ctx, &g)).unwrap();
            let df = delta(&ctx, &f).unwrap();
            let dg = delta(&ctx, &g).unwrap();
            let rhs = f
                .pow(&ctx, prime.p() as u32)
                .mul(&ctx, &dg)
                .add(&ctx, &g.pow(&ctx, prime.p() as u32).mul(&ctx, &df))
                .add(&ctx, &df.mul(&ctx, &dg).scale(&ctx, &p_scalar));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn delta_depth_guard() {
        let ctx = DeltaContext::p_local(&["x"], 1, p2());
        let dx = DeltaElement::tower(&ctx, "x", 1).unwrap();
        assert_eq!(
            delta(&ctx, &dx),
            Err(AlgebraError::DepthExceeded { needed: 2, bound: 1 })
        );
    }

    #[test]
    fn frobenius_examples() {
        let ctx = DeltaContext::p_local(&["x", "y"], 2, p3());
        let x = DeltaElement::gen(&ctx, "x").unwrap();
        let phi_x = frobenius(&ctx, &x).unwrap();
        let expect = x.pow(&ctx, 3).add(
            &ctx,
            &DeltaElement::tower(&ctx, "x", 1).unwrap().scale(&ctx, &int(3)),
        );
        assert_eq!(phi_x, expect);

        let c = DeltaElement::scalar(&ctx, ExactScalar::from_frac(5, 7)).unwrap();
        assert_eq!(frobenius(&ctx, &c).unwrap(), c);

        let y = DeltaElement::gen(&ctx, "y").unwrap();
        let lhs = frobenius(&ctx, &x.mul(&ctx, &y)).unwrap();
        let rhs = frobenius(&ctx, &x)
            .unwrap()
            .mul(&ctx, &frobenius(&ctx, &y).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn frobenius_agrees_with_delta() {
        for prime in [p2(), p3()] {
            let ctx = DeltaContext::p_local(&["x", "y"], 3, prime);
            let x = DeltaElement::gen(&ctx, "x").unwrap();
            let y = DeltaElement::gen(&ctx, "y").unwrap();
            let f = x
                .mul(&ctx, &y)
                .add(&ctx, &x.pow(&ctx, 2).scale(&ctx, &int(2)))
                .add(&ctx, &DeltaElement::scalar(&ctx, int(5)).unwrap());
            let p_scalar = int(prime.p() as i64);
            let lhs = frobenius(&ctx, &f).unwrap();
            let rhs = f
                .pow(&ctx, prime.p() as u32)
                .add(&ctx, &delta(&ctx, &f).unwrap().scale(&ctx, &p_scalar));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn substitute_y_to_zd() {
        // delta(y) with y -> z*d becomes delta(z) phi(d) + z^p delta(d)
        for prime in [p2(), p3()] {
            let src = DeltaContext::p_local(&["y"], 2, prime);
            let dst = DeltaContext::p_local(&["z", "d"], 2, prime);
            let dy = DeltaElement::tower(&src, "y", 1).unwrap();
            let z = DeltaElement::gen(&dst, "z").unwrap();
            let d = DeltaElement::gen(&dst, "d").unwrap();
            let assignment = BTreeMap::from([("y".to_string(), z.mul(&dst, &d))]);
            let image = substitute(&src, &dy, &dst, &assignment).unwrap();
            let expect = delta(&dst, &z)
                .unwrap()
                .mul(&dst, &frobenius(&dst, &d).unwrap())
                .add(
                    &dst,
                    &z.pow(&dst, prime.p() as u32)
                        .mul(&dst, &delta(&dst, &d).unwrap()),
                );
            assert_eq!(image, expect);
        }
    }

    #[test]
    fn substitute_identity_and_zero() {
        let ctx = DeltaContext::p_local(&["y"], 2, p2());
        let f = delta(&ctx, &DeltaElement::gen(&ctx, "y").unwrap())
            .unwrap()
            .add(&ctx, &DeltaElement::gen(&ctx, "y").unwrap().pow(&ctx, 3));
        let id = substitute(&ctx, &f, &ctx, &BTreeMap::new()).unwrap();
        assert_eq!(id, f);

        let zero_assign = BTreeMap::from([("y".to_string(), DeltaElement::zero())]);
        let z = substitute(&ctx, &f, &ctx, &zero_assign).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn substitute_commutes_with_delta() {
        let src = DeltaContext::p_local(&["y"], 3, p2());
        let dst = DeltaContext::p_local(&["z", "d"], 3, p2());
        let y = DeltaElement::gen(&src, "y").unwrap();
        let f = y.pow(&src, 2).add(&src, &delta(&src, &y).unwrap());
        let zd = DeltaElement::gen(&dst, "z").unwrap().mul(
            &dst,
            &DeltaElement::gen(&dst, "d").unwrap(),
        );
        let assignment = BTreeMap::from([("y".to_string(), zd)]);
        let lhs = substitute(&src, &delta(&src, &f).unwrap(), &dst, &assignment).unwrap();
        let rhs = delta(&dst, &substitute(&src, &f, &dst, &assignment).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn delta_power_examples() {
        let ctx2 = DeltaContext::p_local(&["x", "y"], 2, p2());
        let x = DeltaElement::gen(&ctx2, "x").unwrap();
        assert!(verify_delta_power(&ctx2, &x).unwrap());
        let c = DeltaElement::scalar(&ctx2, int(7)).unwrap();
        assert!(verify_delta_power(&ctx2, &c).unwrap());

        let ctx3 = DeltaContext::p_local(&["x", "y"], 2, p3());
        let xy = DeltaElement::gen(&ctx3, "x")
            .unwrap()
            .add(&ctx3, &DeltaElement::gen(&ctx3, "y").unwrap());
        assert!(verify_delta_power(&ctx3, &xy).unwrap());
    }

    #[test]
    fn delta_divided_identity_small_primes() {
        assert!(delta_divided_identity(p2()).unwrap());
        assert!(delta_divided_identity(p3()).unwrap());
    }

    #[test]
    fn divided_identity_p2_explicit() {
        // delta(y^2/2) = y^4/8 + y^2 d(y) + d(y)^2
        let ctx = DeltaContext::rational(&["y"], 2, p2());
        let y = DeltaElement::gen(&ctx, "y").unwrap();
        let w = y.pow(&ctx, 2).scale(&ctx, &ExactScalar::from_frac(1, 2));
        let lhs = delta(&ctx, &w).unwrap();
        let dy = DeltaElement::tower(&ctx, "y", 1).unwrap();
        let expect = y
            .pow(&ctx, 4)
            .scale(&ctx, &ExactScalar::from_frac(1, 8))
            .add(&ctx, &y.pow(&ctx, 2).mul(&ctx, &dy))
            .add(&ctx, &dy.pow(&ctx, 2));
        assert_eq!(lhs, expect);
    }

    #[test]
    fn rational_normal_form_small() {
        let nf0 = rational_normal_form(p2(), 0, 4).unwrap();
        assert_eq!(nf0.deg_x, 1);
        assert_eq!(nf0.leading, ExactScalar::one());
        assert!(nf0.degree_ok && nf0.leading_ok);

        let nf1 = rational_normal_form(p3(), 1, 4).unwrap();
        assert_eq!(nf1.deg_x, 3);
        assert_eq!(nf1.leading, ExactScalar::from_frac(-1, 3));
        assert!(nf1.degree_ok && nf1.leading_ok);

        // D_2 at p = 2: phi^2(x)/4 - 3 phi(x)^2/8 + x^2 phi(x)/4 - x^4/8
        let nf2 = rational_normal_form(p2(), 2, 4).unwrap();
        assert!(nf2.degree_ok && nf2.leading_ok);
        assert_eq!(nf2.deg_x, 4);
        assert_eq!(nf2.leading, ExactScalar::from_frac(-1, 8));
        let expected = PhiPolynomial::from([
            (vec![0, 0, 1], ExactScalar::from_frac(1, 4)),
            (vec![0, 2], ExactScalar::from_frac(-3, 8)),
            (vec![2, 1], ExactScalar::from_frac(1, 4)),
            (vec![4], ExactScalar::from_frac(-1, 8)),
        ]);
        assert_eq!(nf2.poly, expected);
        assert_eq!(
            phi_poly_display(&nf2.poly),
            "1/4*phi^2(x) - 3/8*phi(x)^2 + 1/4*x^2*phi(x) - 1/8*x^4"
        );

        assert!(matches!(
            rational_normal_form(p2(), 5, 4),
            Err(AlgebraError::DepthExceeded { .. })
        ));
    }

    #[test]
    fn iterated_delta_integrality() {
        let ctx = DeltaContext::p_local(&["x"], 3, p2());
        let x = DeltaElement::gen(&ctx, "x").unwrap();
        let f = x.pow(&ctx, 2).add(&ctx, &x.scale(&ctx, &int(3)));
        assert!(iterated_delta_is_p_local(&ctx, &f, 3).unwrap());
    }
}
