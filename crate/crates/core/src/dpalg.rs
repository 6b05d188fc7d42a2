//! Sparse divided-power polynomial algebras Gamma_{R[X]}(Y): multiplication,
//! gamma_n on ideal elements, the PD/adic/conjugate filtrations and their
//! graded-piece verifications at standard pairs.
//!
//! Monomials are X^alpha * gamma_beta(Y); the weight of a monomial is the sum
//! of its gamma indices. The weight bound applies to divided exponents only,
//! and operations that would create weight beyond the bound fail loudly with
//! `TruncationOverflow` instead of dropping terms.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num::BigInt;

use crate::error::{AlgebraError, Result};
use crate::exactla::ExactMatrix;
use crate::monomial::cmp_dense;
use crate::report::{format_terms, FiltrationLevel, FiltrationReport};
use crate::scalars::{binomial, gamma_comp_coeff, ExactScalar, ScalarDomain};

/// The ambient standard PD-pair: ordinary variables X, divided variables Y,
/// a coefficient domain and the truncation bound on divided weight.
#[derive(Clone, Debug, PartialEq)]
pub struct PDContext {
    ordinary: Vec<String>,
    divided: Vec<String>,
    domain: ScalarDomain,
    weight_bound: u32,
}

impl PDContext {
    pub fn new(
        ordinary: &[&str],
        divided: &[&str],
        domain: ScalarDomain,
        weight_bound: u32,
    ) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for name in ordinary.iter().chain(divided.iter()) {
            if !seen.insert(*name) {
                return Err(AlgebraError::UnknownVariable(format!(
                    "duplicate variable name {name}"
                )));
            }
        }
        Ok(PDContext {
            ordinary: ordinary.iter().map(|s| s.to_string()).collect(),
            divided: divided.iter().map(|s| s.to_string()).collect(),
            domain,
            weight_bound,
        })
    }

    pub fn ordinary_vars(&self) -> &[String] {
        &self.ordinary
    }

    pub fn divided_vars(&self) -> &[String] {
        &self.divided
    }

    pub fn domain(&self) -> &ScalarDomain {
        &self.domain
    }

    pub fn weight_bound(&self) -> u32 {
        self.weight_bound
    }

    pub fn ordinary_index(&self, name: &str) -> Result<u16> {
        self.ordinary
            .iter()
            .position(|v| v == name)
            .map(|i| i as u16)
            .ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))
    }

    pub fn divided_index(&self, name: &str) -> Result<u16> {
        self.divided
            .iter()
            .position(|v| v == name)
            .map(|i| i as u16)
            .ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))
    }
}

fn merge_add(a: &[(u16, u32)], b: &[(u16, u32)]) -> Vec<(u16, u32)> {
    let mut out: BTreeMap<u16, u32> = a.iter().copied().collect();
    for &(i, e) in b {
        *out.entry(i).or_insert(0) += e;
    }
    out.into_iter().filter(|&(_, e)| e > 0).collect()
}

/// A monomial X^alpha * gamma_beta(Y). `div` stores (variable, n) for a
/// gamma_n factor. Canonical sparse form: sorted, no zero exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DPMonomial {
    ord: Vec<(u16, u32)>,
    div: Vec<(u16, u32)>,
}

impl DPMonomial {
    pub fn unit() -> Self {
        DPMonomial {
            ord: vec![],
            div: vec![],
        }
    }

    pub fn from_parts(mut ord: Vec<(u16, u32)>, mut div: Vec<(u16, u32)>) -> Self {
        ord.retain(|&(_, e)| e > 0);
        ord.sort_unstable();
        div.retain(|&(_, e)| e > 0);
        div.sort_unstable();
        DPMonomial { ord, div }
    }

    pub fn ordinary(&self) -> &[(u16, u32)] {
        &self.ord
    }

    pub fn divided(&self) -> &[(u16, u32)] {
        &self.div
    }

    /// Sum of gamma indices; the PD-filtration degree of the monomial.
    pub fn weight(&self) -> u32 {
        self.div.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.ord.is_empty() && self.div.is_empty()
    }

    pub fn display(&self, ctx: &PDContext) -> String {
        if self.is_unit() {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        for &(i, e) in &self.ord {
            let name = &ctx.ordinary[i as usize];
            if e == 1 {
                parts.push(name.clone());
            } else {
                parts.push(format!("{name}^{e}"));
            }
        }
        for &(i, n) in &self.div {
            let name = &ctx.divided[i as usize];
            if n == 1 {
                parts.push(name.clone());
            } else {
                parts.push(format!("g_{n}({name})"));
            }
        }
        parts.join("*")
    }
}

impl Ord for DPMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| cmp_dense(&other.div, &self.div))
            .then_with(|| cmp_dense(&other.ord, &self.ord))
    }
}

impl PartialOrd for DPMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse sum of divided-power monomials with exact coefficientsary.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DPElement {
    terms: BTreeMap<DPMonomial, ExactScalar>,
}

impl DPElement {
    pub fn zero() -> Self {
        DPElement {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(DPMonomial::unit(), ExactScalar::one());
        DPElement { terms }
    }

    pub fn scalar(ctx: &PDContext, c: ExactScalar) -> Result<Self> {
        let c = ctx.domain.reduce(c)?;
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(DPMonomial::unit(), c);
        }
        Ok(DPElement { terms })
    }

    /// gamma_n of a single divided variable.
    pub fn gamma(ctx: &PDContext, name: &str, n: u32) -> Result<Self> {
        if n > ctx.weight_bound {
            return Err(AlgebraError::TruncationOverflow {
                weight: n,
                bound: ctx.weight_bound,
            });
        }
        let idx = ctx.divided_index(name)?;
        Ok(Self::from_monomial(
            DPMonomial::from_parts(vec![], vec![(idx, n)]),
            ExactScalar::one(),
        ))
    }

    /// An ordinary variable, or gamma_1 of a divided one.
    pub fn var(ctx: &PDContext, name: &str) -> Result<Self> {
        if let Ok(idx) = ctx.ordinary_index(name) {
            return Ok(Self::from_monomial(
                DPMonomial::from_parts(vec![(idx, 1)], vec![]),
                ExactScalar::one(),
            ));
        }
        Self::gamma(ctx, name, 1)
    }

    pub fn from_monomial(m: DPMonomial, c: ExactScalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        DPElement { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DPMonomial, &ExactScalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &DPMonomial) -> ExactScalar {
        self.terms.get(m).cloned().unwrap_or_else(ExactScalar::zero)
    }

    fn accumulate(&mut self, ctx: &PDContext, m: DPMonomial, c: ExactScalar) {
        let cur = self.terms.remove(&m).unwrap_or_else(ExactScalar::zero);
        let sum = ctx
            .domain
            .reduce(cur + c)
            .expect("domain closed under addition");
        if !sum.is_zero() {
            self.terms.insert(m, sum);
        }
    }

    pub fn add(&self, ctx: &PDContext, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(ctx, m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, ctx: &PDContext, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(ctx, m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        DPElement {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, ctx: &PDContext, c: &ExactScalar) -> Self {
        let mut out = DPElement::zero();
        for (m, v) in &self.terms {
            out.accumulate(ctx, m.clone(), v * c);
        }
        out
    }

    /// Minimum weight over the monomials of a nonzero element.
    pub fn min_weight(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.weight()).min()
    }

    pub fn max_weight(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.weight()).max()
    }

    pub fn display(&self, ctx: &PDContext) -> String {
        let terms: Vec<(ExactScalar, String)> = self
            .terms
            .iter()
            .map(|(m, c)| (c.clone(), m.display(ctx)))
            .collect();
        format_terms(&terms)
    }

    /// JSON encoding: {"terms":[{"c":"<scalar>","m":{"x":2,"g:y":3}}]} where a
    /// key "g:y" with value n denotes gamma_n(y).
    pub fn to_json(&self, ctx: &PDContext) -> serde_json::Value {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let mut mono = serde_json::Map::new();
            for &(i, e) in &m.ord {
                mono.insert(ctx.ordinary[i as usize].clone(), e.into());
            }
            for &(i, n) in &m.div {
                mono.insert(format!("g:{}", ctx.divided[i as usize]), n.into());
            }
            terms.push(serde_json::json!({"c": c.to_string(), "m": mono}));
        }
        serde_json::json!({ "terms": terms })
    }
}

fn mul_monomials(
    ctx: &PDContext,
    a: &DPMonomial,
    b: &DPMonomial,
) -> Result<(DPMonomial, ExactScalar)> {
    let ord = merge_add(&a.ord, &b.ord);
    let mut coeff = BigInt::from(1);
    let mut div: BTreeMap<u16, u32> = a.div.iter().copied().collect();
    for &(i, n) in &b.div {
        match div.get_mut(&i) {
            Some(m) => {
                // gamma_m(y) * gamma_n(y) = C(m+n, m) * gamma_{m+n}(y)
                coeff *= binomial((*m + n) as u64, *m as u64);
                *m += n;
            }
            None => {
                div.insert(i, n);
            }
        }
    }
    let div: Vec<(u16, u32)> = div.into_iter().collect();
    let weight: u32 = div.iter().map(|&(_, e)| e).sum();
    if weight > ctx.weight_bound {
        return Err(AlgebraError::TruncationOverflow {
            weight,
            bound: ctx.weight_bound,
        });
    }
    Ok((
        DPMonomial { ord, div },
        ExactScalar::from_bigint(coeff),
    ))
}

/// Bilinear divided-power multiplication.
pub fn mul(ctx: &PDContext, a: &DPElement, b: &DPElement) -> Result<DPElement> {
    let mut out = DPElement::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            let (m, binom) = mul_monomials(ctx, ma, mb)?;
            out.accumulate(ctx, m, ca * cb * binom);
        }
    }
    Ok(out)
}

pub fn pow(ctx: &PDContext, f: &DPElement, e: u32) -> Result<DPElement> {
    let mut acc = DPElement::one();
    for _ in 0..e {
        acc = mul(ctx, &acc, f)?;
    }
    Ok(acc)
}

/// Which divided variable gamma-factor gets extracted first in
/// `divided_power`. The result is independent of the choice; the alternative
/// order exists so that independence can be verified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtractionOrder {
    LexLeast,
    LexGreatest,
}

fn gamma_of_term(
    ctx: &PDContext,
    a: u32,
    mono: &DPMonomial,
    coeff: &ExactScalar,
    order: ExtractionOrder,
) -> Result<DPElement> {
    if a == 0 {
        return Ok(DPElement::one());
    }
    if mono.div.is_empty() {
        return Err(AlgebraError::NotInIdeal);
    }
    let pos = match order {
        ExtractionOrder::LexLeast => 0,
        ExtractionOrder::LexGreatest => mono.div.len() - 1,
    };
    let (var, b) = mono.div[pos];
    let mut rest = mono.clone();
    rest.div.remove(pos);
    // gamma_a(c * u * gamma_b(y)) = c^a * u^a * comp(a, b) * gamma_{ab}(y)
    let rest_pow = pow(ctx, &DPElement::from_monomial(rest, ExactScalar::one()), a)?;
    let lead_weight = a * b;
    if lead_weight > ctx.weight_bound {
        return Err(AlgebraError::TruncationOverflow {
            weight: lead_weight,
            bound: ctx.weight_bound,
        });
    }
    let lead = DPElement::from_monomial(
        DPMonomial::from_parts(vec![], vec![(var, lead_weight)]),
        ExactScalar::from_bigint(gamma_comp_coeff(a as u64, b as u64)) * coeff.pow(a as i64),
    );
    mul(ctx, &rest_pow, &lead)
}

pub(crate) fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut tail in compositions(total - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.append(&mut tail);
            out.push(v);
        }
    }
    out
}

/// The divided power gamma_n(f) of an element of the PD-ideal, by multinomial
/// expansion over the terms of f and the composition law on single terms.
pub fn divided_power(ctx: &PDContext, n: u32, f: &DPElement) -> Result<DPElement> {
    divided_power_with_order(ctx, n, f, ExtractionOrder::LexLeast)
}

pub fn divided_power_with_order(
    ctx: &PDContext,
    n: u32,
    f: &DPElement,
    order: ExtractionOrder,
) -> Result<DPElement> {
    if n == 0 {
        return Ok(DPElement::one());
    }
    if f.terms.keys().any(|m| m.weight() == 0) {
        return Err(AlgebraError::NotInIdeal);
    }
    if n == 1 {
        return Ok(f.clone());
    }
    let terms: Vec<(&DPMonomial, &ExactScalar)> = f.terms.iter().collect();
    let mut out = DPElement::zero();
    for comp in compositions(n, terms.len()) {
        let mut prod = DPElement::one();
        for (ai, (mono, coeff)) in comp.iter().zip(&terms) {
            if *ai == 0 {
                continue;
            }
            let factor = gamma_of_term(ctx, *ai, mono, coeff, order)?;
            prod = mul(ctx, &prod, &factor)?;
        }
        out = out.add(ctx, &prod);
    }
    Ok(out)
}

/// The largest n with f in I^[n]: the minimum weight over monomials of f.
pub fn pd_filtration_weight(f: &DPElement) -> Result<u32> {
    f.min_weight().ok_or(AlgebraError::ZeroElement)
}

/// Graded-piece rank check for the PD or adic filtration at a standard pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Filtration {
    Pd,
    Adic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrRank {
    pub rank: usize,
    pub expected: usize,
    pub pass: bool,
}

fn expected_gr_rank(n: u32, r: usize) -> usize {
    if r == 0 {
        return if n == 0 { 1 } else { 0 };
    }
    let e: BigInt = binomial((n as u64) + (r as u64) - 1, (r as u64) - 1);
    e.try_into().expect("desk-scale rank fits usize")
}

/// For the PD filtration: count divided monomials of exact weight n. For the
/// adic filtration on the pair (Z[X, Y], (Y)): count ordinary Y-monomials of
/// total degree n. Both must equal C(n + r - 1, r - 1) on a rank-r module.
pub fn gr_rank(ctx: &PDContext, filtration: Filtration, n: u32) -> Result<GrRank> {
    if n > ctx.weight_bound {
        return Err(AlgebraError::TruncationOverflow {
            weight: n,
            bound: ctx.weight_bound,
        });
    }
    let r = ctx.divided.len();
    let rank = match filtration {
        // basis of gr^n(PD): gamma-monomials of weight exactly n
        Filtration::Pd => compositions(n, r).len(),
        // basis of gr^n(adic) at (Z[X,Y],(Y)): Y-monomials of degree n
        Filtration::Adic => compositions(n, r).len(),
    };
    let expected = expected_gr_rank(n, r);
    Ok(GrRank {
        rank,
        expected,
        pass: rank == expected,
    })
}

/// All divided monomials of exact weight w over the context's divided vars,
/// in canonical term order.
pub fn divided_monomials_of_weight(ctx: &PDContext, w: u32) -> Vec<DPMonomial> {
    let r = ctx.divided.len();
    let mut out: Vec<DPMonomial> = compositions(w, r)
        .into_iter()
        .map(|beta| {
            DPMonomial::from_parts(
                vec![],
                beta.iter()
                    .enumerate()
                    .map(|(i, &e)| (i as u16, e))
                    .collect(),
            )
        })
        .collect();
    out.sort();
    out
}

/// Conjugate filtration of the PD-envelope of the standard pair over F_p.
///
/// Fil^{-j} is generated, over the Frobenius twist of the base, by products
/// of gamma_{kp} with index sum at most j; the graded piece gr^{-j} is free
/// of rank C(j + r - 1, r - 1) on the products with index sum exactly j.
/// Each level also re-derives its rank by enumerating the weight-(jp) slice
/// and certifies that every monomial of Fil^{-j} in that slice is a unit
/// multiple of a module generator.
pub fn conj_fil_pd(ctx: &PDContext, i: u32) -> Result<FiltrationReport> {
    let ScalarDomain::PrimeField(prime) = ctx.domain else {
        return Err(AlgebraError::DeltaOverPrimeField);
    };
    let p = prime.p() as u32;
    if (i + 1) * p > ctx.weight_bound {
        return Err(AlgebraError::TruncationOverflow {
            weight: (i + 1) * p,
            bound: ctx.weight_bound,
        });
    }
    let r = ctx.divided.len();
    let mut report = FiltrationReport::default();
    for j in 0..=i {
        // module generators: index sums <= j, scaled by p
        let mut module_generators = Vec::new();
        for s in 0..=j {
            let mut monos: Vec<DPMonomial> = compositions(s, r)
                .into_iter()
                .map(|k| {
                    DPMonomial::from_parts(
                        vec![],
                        k.iter()
                            .enumerate()
                            .map(|(v, &e)| (v as u16, e * p))
                            .collect(),
                    )
                })
                .collect();
            monos.sort();
            module_generators.extend(monos.iter().map(|m| m.display(ctx)));
        }
        // graded piece: enumerate the weight-(jp) slice of B and keep the
        // monomials whose digit sum of floor(n_y / p) is exactly j
        let slice = divided_monomials_of_weight(ctx, j * p);
        let gr_monos: Vec<&DPMonomial> = slice
            .iter()
            .filter(|m| m.divided().iter().map(|&(_, n)| n / p).sum::<u32>() == j)
            .collect();
        let rank = gr_monos.len();
        let expected = expected_gr_rank(j, r);
        // membership certificate: every monomial with floor-digit sum <= j in
        // weights below (j+1)p is a unit multiple of (base monomial) x
        // (module generator)
        let mut membership_ok = true;
        'outer: for w in 0..((j + 1) * p).min(ctx.weight_bound + 1) {
            for m in divided_monomials_of_weight(ctx, w) {
                let digits: Vec<(u16, u32, u32)> = m
                    .divided()
                    .iter()
                    .map(|&(v, n)| (v, n % p, n / p))
                    .collect();
                if digits.iter().map(|&(_, _, k)| k).sum::<u32>() > j {
                    continue;
                }
                // y^a expands as a! * gamma_a(y); multiply honest powers so
                // the unit comes out of the algebra rather than a formula
                let mut power = DPElement::one();
                for &(v, a, _) in &digits {
                    let y = DPElement::gamma(ctx, &ctx.divided[v as usize].clone(), 1)?;
                    for _ in 0..a {
                        power = mul(ctx, &power, &y)?;
                    }
                }
                let generator = DPElement::from_monomial(
                    DPMonomial::from_parts(
                        vec![],
                        digits
                            .iter()
                            .filter(|&&(_, _, k)| k > 0)
                            .map(|&(v, _, k)| (v, k * p))
                            .collect(),
                    ),
                    ExactScalar::one(),
                );
                let product = mul(ctx, &power, &generator)?;
                // expect unit * m exactly
                if product.num_terms() != 1 {
                    membership_ok = false;
                    break 'outer;
                }
                let (pm, pc) = product.terms.iter().next().expect("single term");
                if pm != &m || pc.is_zero() {
                    membership_ok = false;
                    break 'outer;
                }
            }
        }
        let pass = rank == expected && membership_ok;
        report.levels.push(FiltrationLevel {
            index: j,
            rank,
            expected,
            pass,
            module_generators,
            gr_generators: gr_monos.iter().map(|m| m.display(ctx)).collect(),
        });
    }
    Ok(report)
}

/// Per-weight change of basis between {gamma_n(y)} and
/// {y^{a0} * gamma_{pm}(y) : n = a0 + pm, 0 <= a0 < p} for a single divided
/// variable over F_p. The matrix is diagonal because each weight space has
/// rank one; invertibility means every diagonal entry is nonzero.
pub fn mod_p_basis_change(ctx: &PDContext, bound: u32) -> Result<(ExactMatrix, bool)> {
    let ScalarDomain::PrimeField(prime) = ctx.domain else {
        return Err(AlgebraError::DeltaOverPrimeField);
    };
    assert_eq!(ctx.divided.len(), 1, "single divided variable expected");
    let p = prime.p() as u32;
    if bound > ctx.weight_bound {
        return Err(AlgebraError::TruncationOverflow {
            weight: bound,
            bound: ctx.weight_bound,
        });
    }
    let y = ctx.divided[0].clone();
    let n_rows = (bound + 1) as usize;
    let mut matrix = ExactMatrix::zero(ctx.domain.clone(), n_rows, n_rows);
    let mut invertible = true;
    for n in 0..=bound {
        let a0 = n % p;
        let m = n / p;
        let mut el = DPElement::gamma(ctx, &y, p * m)?;
        let y1 = DPElement::gamma(ctx, &y, 1)?;
        for _ in 0..a0 {
            el = mul(ctx, &el, &y1)?;
        }
        // el = c_n * gamma_n(y)
        let target = DPMonomial::from_parts(vec![], vec![(0, n)]);
        let c = el.coefficient(&target);
        if c.is_zero() {
            invertible = false;
        }
        matrix.set(n as usize, n as usize, c)?;
    }
    Ok((matrix, invertible))
}
