//! Shared ordering helpers for sparse exponent vectors.

use std::cmp::Ordering;

/// Dense lexicographic comparison of sparse exponent vectors sorted by key
/// with no zero entries: walk the variables in key order and compare the
/// first differing exponent (absent means zero).
pub(crate) fn cmp_dense<K: Ord + Copy>(a: &[(K, u32)], b: &[(K, u32)]) -> Ordering {
    cmp_dense_by(a, b, &0u32)
}

pub(crate) fn cmp_dense_i64<K: Ord + Copy>(a: &[(K, i64)], b: &[(K, i64)]) -> Ordering {
    cmp_dense_by(a, b, &0i64)
}

fn cmp_dense_by<K: Ord + Copy, E: Ord + Copy>(a: &[(K, E)], b: &[(K, E)], zero: &E) -> Ordering {
    let mut ia = 0;
    let mut ib = 0;
    loop {
        match (a.get(ia), b.get(ib)) {
            (None, None) => return Ordering::Equal,
            (Some(&(_, ea)), None) => {
                return if ea > *zero {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            (None, Some(&(_, eb))) => {
                return if eb > *zero {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            (Some(&(xa, ea)), Some(&(xb, eb))) => {
                if xa < xb {
                    return if ea > *zero {
                        Ordering::Greater
                    } else {
                        Ordering::Less
                    };
                }
                if xb < xa {
                    return if eb > *zero {
                        Ordering::Less
                    } else {
                        Ordering::Greater
                    };
                }
                if ea != eb {
                    return ea.cmp(&eb);
                }
                ia += 1;
                ib += 1;
            }
        }
    }
}
