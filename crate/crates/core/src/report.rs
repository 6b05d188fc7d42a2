//! Report types returned by the filtration verification operations.

/// One graded level of a filtration check: the computed rank of the graded
/// piece, the expected rank, and the generator lists that witness it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationLevel {
    /// The filtration index j, meaning the piece Fil^{-j}.
    pub index: u32,
    pub rank: usize,
    pub expected: usize,
    pub pass: bool,
    /// Generating set of Fil^{-j} as a module over the base.
    pub module_generators: Vec<String>,
    /// Generators of the graded piece gr^{-j}.
    pub gr_generators: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FiltrationReport {
    pub levels: Vec<FiltrationLevel>,
}

impl FiltrationReport {
    pub fn pass(&self) -> bool {
        self.levels.iter().all(|l| l.pass)
    }
}

/// Render a sum of (coefficient, monomial-text) pairs the way a human writes
/// polynomials: "a + b - c", suppressing unit coefficients.
pub fn format_terms(terms: &[(crate::scalars::ExactScalar, String)]) -> String {
    use num::Signed;
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (c, m)) in terms.iter().enumerate() {
        let negative = c.numer().is_negative();
        let abs = if negative { -c } else { c.clone() };
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else if negative {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let coeff_is_one = abs.is_one();
        if m == "1" {
            out.push_str(&abs.to_string());
        } else if coeff_is_one {
            out.push_str(m);
        } else {
            out.push_str(&format!("{abs}*{m}"));
        }
    }
    out
}
