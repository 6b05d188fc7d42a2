//! Exact sparse linear algebra over the rationals and prime fields: row
//! reduction, rank, kernel bases, and linear solves. Backs the graded-rank
//! verifications elsewhere in the crate.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::scalars::{ExactScalar, ScalarDomain};

/// A sparse matrix with exact entries from a fixed coefficient domain.
/// Stored zeros are never kept.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    pub rows: usize,
    pub cols: usize,
    domain: ScalarDomain,
    entries: BTreeMap<(usize, usize), ExactScalar>,
}

impl ExactMatrix {
    pub fn zero(domain: ScalarDomain, rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            domain,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(domain: ScalarDomain, n: usize) -> Self {
        let mut m = Self::zero(domain, n, n);
        for i in 0..n {
            m.set(i, i, ExactScalar::one()).expect("identity entries");
        }
        m
    }

    pub fn from_rows(domain: ScalarDomain, data: &[Vec<ExactScalar>]) -> Result<Self> {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        let mut m = Self::zero(domain, rows, cols);
        for (i, row) in data.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone())?;
            }
        }
        Ok(m)
    }

    pub fn domain(&self) -> &ScalarDomain {
        &self.domain
    }

    pub fn set(&mut self, i: usize, j: usize, v: ExactScalar) -> Result<()> {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        let v = self.domain.reduce(v)?;
        if v.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> ExactScalar {
        self.entries
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(ExactScalar::zero)
    }

    pub fn is_zero_at(&self, i: usize, j: usize) -> bool {
        !self.entries.contains_key(&(i, j))
    }

    fn row(&self, i: usize) -> Vec<(usize, ExactScalar)> {
        self.entries
            .range((i, 0)..=(i, self.cols.max(1) - 1))
            .map(|(&(_, j), v)| (j, v.clone()))
            .collect()
    }

    fn scale_row(&mut self, i: usize, c: &ExactScalar) {
        let row = self.row(i);
        for (j, v) in row {
            let nv = self.domain.reduce(&v * c).expect("domain closed under mul");
            if nv.is_zero() {
                self.entries.remove(&(i, j));
            } else {
                self.entries.insert((i, j), nv);
            }
        }
    }

    /// row_dst += c * row_src
    fn add_scaled_row(&mut self, dst: usize, src: usize, c: &ExactScalar) {
        for (j, v) in self.row(src) {
            let cur = self.get(dst, j);
            let nv = self
                .domain
                .reduce(cur + &v * c)
                .expect("domain closed under ring ops");
            if nv.is_zero() {
                self.entries.remove(&(dst, j));
            } else {
                self.entries.insert((dst, j), nv);
            }
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let ra = self.row(a);
        let rb = self.row(b);
        for (j, _) in &ra {
            self.entries.remove(&(a, *j));
        }
        for (j, _) in &rb {
            self.entries.remove(&(b, *j));
        }
        for (j, v) in ra {
            self.entries.insert((b, j), v);
        }
        for (j, v) in rb {
            self.entries.insert((a, j), v);
        }
    }
}

/// Output of `rref`: the reduced matrix, its rank, and the pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: ExactMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

/// Reduced row-echelon form by exact Gauss-Jordan elimination. Pivots are
/// chosen as the first nonzero entry in each column, so the output is
/// deterministic.
pub fn rref(m: &ExactMatrix) -> Rref {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let pivot_row = (r..a.rows).find(|&i| !a.is_zero_at(i, c));
        let Some(pr) = pivot_row else { continue };
        a.swap_rows(r, pr);
        let inv = a
            .domain
            .inv(&a.get(r, c))
            .expect("pivot invertible in a field");
        a.scale_row(r, &inv);
        for i in 0..a.rows {
            if i != r && !a.is_zero_at(i, c) {
                let c_val = -a.get(i, c);
                a.add_scaled_row(i, r, &c_val);
            }
        }
        pivots.push(c);
        r += 1;
    }
    Rref {
        matrix: a,
        rank: r,
        pivots,
    }
}

pub fn rank(m: &ExactMatrix) -> usize {
    rref(m).rank
}

/// Basis of the right kernel; its size is cols - rank.
pub fn kernel_basis(m: &ExactMatrix) -> Vec<Vec<ExactScalar>> {
    let red = rref(m);
    let pivot_of_col: BTreeMap<usize, usize> = red
        .pivots
        .iter()
        .enumerate()
        .map(|(r, &c)| (c, r))
        .collect();
    let mut basis = Vec::new();
    for free in 0..m.cols {
        if pivot_of_col.contains_key(&free) {
            continue;
        }
        let mut v = vec![ExactScalar::zero(); m.cols];
        v[free] = ExactScalar::one();
        for (&col, &row) in &pivot_of_col {
            v[col] = -red.matrix.get(row, free);
        }
        basis.push(v);
    }
    basis
}

/// Any exact solution of m * x = b, or None when the system is inconsistent.
pub fn solve(m: &ExactMatrix, b: &[ExactScalar]) -> Option<Vec<ExactScalar>> {
    assert_eq!(b.len(), m.rows, "rhs length mismatch");
    let mut aug = ExactMatrix::zero(m.domain.clone(), m.rows, m.cols + 1);
    for (&(i, j), v) in &m.entries {
        aug.set(i, j, v.clone()).expect("copy entries");
    }
    for (i, v) in b.iter().enumerate() {
        aug.set(i, m.cols, v.clone()).expect("copy rhs");
    }
    let red = rref(&aug);
    // inconsistent iff some pivot lands in the rhs column
    if red.pivots.iter().any(|&c| c == m.cols) {
        return None;
    }
    let mut x = vec![ExactScalar::zero(); m.cols];
    for (r, &c) in red.pivots.iter().enumerate() {
        x[c] = red.matrix.get(r, m.cols);
    }
    Some(x)
}

/// Solve m * x = b over Q while keeping the solution inside Z_(p) whenever
/// the right-hand side lies in the Z_(p)-lattice spanned by the columns.
///
/// Forward Gaussian elimination picks the remaining entry of minimal p-adic
/// valuation as the pivot and never touches a pivot row again. A frozen pivot
/// row then satisfies v(pivot) <= v(entry) for every entry in it, so each
/// back-substitution divides by a valuation-minimal element of its row, and
/// the computed solution differs from any p-local one by a p-local vector.
/// Returns None when the system is inconsistent over Q or no p-local
/// solution exists.
pub fn solve_p_local(
    m: &ExactMatrix,
    b: &[ExactScalar],
    prime: &crate::scalars::PrimeContext,
) -> Option<Vec<ExactScalar>> {
    use crate::scalars::{is_p_local, vp, Valuation};
    assert!(matches!(m.domain, ScalarDomain::Rational));
    assert_eq!(b.len(), m.rows);
    let mut a: Vec<Vec<ExactScalar>> = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j)).collect())
        .collect();
    let mut rhs: Vec<ExactScalar> = b.to_vec();
    let mut frozen = vec![false; m.rows];
    let mut is_pivot_col = vec![false; m.cols];
    let mut steps: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut best: Option<(usize, usize, Valuation)> = None;
        for i in 0..m.rows {
            if frozen[i] {
                continue;
            }
            for j in 0..m.cols {
                if a[i][j].is_zero() {
                    continue;
                }
                let v = vp(&a[i][j], prime);
                let better = match &best {
                    None => true,
                    Some((_, _, bv)) => {
                        matches!(v.partial_cmp(bv), Some(std::cmp::Ordering::Less))
                    }
                };
                if better {
                    best = Some((i, j, v));
                }
            }
        }
        let Some((pi, pj, _)) = best else { break };
        frozen[pi] = true;
        is_pivot_col[pj] = true;
        steps.push((pi, pj));
        for i in 0..m.rows {
            if frozen[i] || a[i][pj].is_zero() {
                continue;
            }
            let factor = &a[i][pj] / &a[pi][pj];
            for j in 0..m.cols {
                a[i][j] = &a[i][j] - &(&factor * &a[pi][j]);
            }
            rhs[i] = &rhs[i] - &(&factor * &rhs[pi]);
        }
    }
    // rows that never produced a pivot are all-zero; nonzero rhs there means
    // the system is inconsistent
    for i in 0..m.rows {
        if !frozen[i] && !rhs[i].is_zero() {
            return None;
        }
    }
    // back-substitute in reverse selection order with free variables at zero
    let mut x = vec![ExactScalar::zero(); m.cols];
    for &(pi, pj) in steps.iter().rev() {
        let mut val = rhs[pi].clone();
        for j in 0..m.cols {
            if j != pj && !x[j].is_zero() {
                val = val - &a[pi][j] * &x[j];
            }
        }
        x[pj] = val / a[pi][pj].clone();
    }
    if mat_vec(m, &x) != b.to_vec() {
        return None;
    }
    if x.iter().all(|c| is_p_local(c, prime)) {
        Some(x)
    } else {
        None
    }
}

/// m * x, for checking solutions and kernel vectors.
pub fn mat_vec(m: &ExactMatrix, x: &[ExactScalar]) -> Vec<ExactScalar> {
    assert_eq!(x.len(), m.cols);
    let mut out = vec![ExactScalar::zero(); m.rows];
    for (&(i, j), v) in &m.entries {
        out[i] = m
            .domain
            .reduce(std::mem::replace(&mut out[i], ExactScalar::zero()) + v * &x[j])
            .expect("domain closed");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::PrimeContext;

    fn q(n: i64, d: i64) -> ExactScalar {
        ExactScalar::from_frac(n, d)
    }

    fn int(n: i64) -> ExactScalar {
        ExactScalar::from_int(n)
    }

    #[test]
    fn identity_rank() {
        let m = ExactMatrix::identity(ScalarDomain::Rational, 3);
        assert_eq!(rank(&m), 3);
        assert!(kernel_basis(&m).is_empty());
    }

    #[test]
    fn f2_rank_one() {
        let p2 = PrimeContext::new(2).unwrap();
        let m = ExactMatrix::from_rows(
            ScalarDomain::PrimeField(p2),
            &[vec![int(1), int(1)], vec![int(1), int(1)]],
        )
        .unwrap();
        assert_eq!(rank(&m), 1);
    }

    #[test]
    fn zero_matrix() {
        let m = ExactMatrix::zero(ScalarDomain::Rational, 2, 2);
        assert_eq!(rank(&m), 0);
        assert_eq!(kernel_basis(&m).len(), 2);
    }

    #[test]
    fn kernel_single_relation() {
        let m =
            ExactMatrix::from_rows(ScalarDomain::Rational, &[vec![int(1), int(1)]]).unwrap();
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 1);
        // basis vector proportional to (1, -1); free column gets 1
        assert_eq!(k[0], vec![int(-1), int(1)]);
        assert!(mat_vec(&m, &k[0]).iter().all(|v| v.is_zero()));
    }

    #[test]
    fn solve_examples() {
        let id = ExactMatrix::identity(ScalarDomain::Rational, 2);
        let b = vec![q(1, 3), int(5)];
        assert_eq!(solve(&id, &b).unwrap(), b);

        let m = ExactMatrix::from_rows(ScalarDomain::Rational, &[vec![int(2)]]).unwrap();
        assert_eq!(solve(&m, &[int(1)]).unwrap(), vec![q(1, 2)]);

        let z = ExactMatrix::from_rows(ScalarDomain::Rational, &[vec![int(0)]]).unwrap();
        assert_eq!(solve(&z, &[int(1)]), None);
    }

    #[test]
    fn solve_satisfies_system() {
        let m = ExactMatrix::from_rows(
            ScalarDomain::Rational,
            &[
                vec![int(1), int(2), int(3)],
                vec![int(2), int(4), int(6)],
                vec![int(1), int(0), int(1)],
            ],
        )
        .unwrap();
        let b = vec![int(6), int(12), int(2)];
        let x = solve(&m, &b).unwrap();
        assert_eq!(mat_vec(&m, &x), b);
    }

    #[test]
    fn p_local_solve_prefers_integral_columns() {
        let p2 = PrimeContext::new(2).unwrap();
        // columns x^2 and z = x^2/2 seen as vectors over the monomial x^2:
        // the target x^2/2! = x^2/2 has the 2-local solution z * 1
        let m = ExactMatrix::from_rows(ScalarDomain::Rational, &[vec![int(1), q(1, 2)]]).unwrap();
        let x = solve_p_local(&m, &[q(1, 2)], &p2).unwrap();
        assert!(x
            .iter()
            .all(|c| crate::scalars::is_p_local(c, &p2)));
        assert_eq!(mat_vec(&m, &x), vec![q(1, 2)]);

        // unique solution is 1/2 * first column: no 2-local solution exists
        let m2 = ExactMatrix::from_rows(
            ScalarDomain::Rational,
            &[vec![int(1), int(0)], vec![int(0), int(1)]],
        )
        .unwrap();
        assert_eq!(solve_p_local(&m2, &[q(1, 2), int(0)], &p2), None);

        // inconsistent system
        let m3 = ExactMatrix::from_rows(ScalarDomain::Rational, &[vec![int(0)]]).unwrap();
        assert_eq!(solve_p_local(&m3, &[int(1)], &p2), None);
    }

    proptest::proptest! {
        #[test]
        fn rank_nullity_and_kernel(rows in 1usize..5, cols in 1usize..5,
                                   seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for domain in [ScalarDomain::Rational,
                           ScalarDomain::PrimeField(PrimeContext::new(3).unwrap())] {
                let mut m = ExactMatrix::zero(domain, rows, cols);
                for i in 0..rows {
                    for j in 0..cols {
                        m.set(i, j, int(rng.gen_range(-4i64..=4))).unwrap();
                    }
                }
                let r = rank(&m);
                let k = kernel_basis(&m);
                proptest::prop_assert_eq!(r + k.len(), cols);
                for v in &k {
                    proptest::prop_assert!(mat_vec(&m, v).iter().all(|x| x.is_zero()));
                }
            }
        }
    }
}
