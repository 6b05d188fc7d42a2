//! Acceptance gate: runs every library-level criterion at its pinned primes
//! and bounds and prints one pass/fail line per criterion. The CLI-level
//! criterion lives in the cli crate's own acceptance test.

use std::collections::BTreeMap;

use gammadelta_core::verify::{run_suite, SuiteReport, VerifyConfig};

struct Gate {
    reports: BTreeMap<(u64, &'static str), SuiteReport>,
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        let mut reports = BTreeMap::new();
        for (suite, primes) in [
            ("pd", vec![2u64, 3, 5]),
            ("delta", vec![2, 3]),
            ("prism", vec![2, 3]),
            ("derham", vec![2, 3, 5]),
        ] {
            for p in primes {
                let cfg = VerifyConfig::new(p, 12, 4, 0).expect("valid config");
                let report = run_suite(suite, &cfg).expect("suite runs without bound errors");
                reports.insert((p, suite), report);
            }
        }
        Gate {
            reports,
            failures: Vec::new(),
        }
    }

    fn check(&self, p: u64, suite: &'static str, key: &str) -> bool {
        self.reports[&(p, suite)]
            .checks
            .iter()
            .find(|c| c.key == key)
            .unwrap_or_else(|| panic!("missing check {suite}/{key}"))
            .pass
    }

    fn criterion(&mut self, number: u32, description: &str, pass: bool) {
        println!(
            "criterion {number:2}: [{}] {description}",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            self.failures.push(format!("criterion {number}: {description}"));
        }
    }
}

#[test]
fn acceptance_criteria() {
    let mut gate = Gate::new();

    let axiom_keys = [
        "ess-img-pdpair/gamma-zero",
        "ess-img-pdpair/gamma-one",
        "ess-img-pdpair/product-law",
        "ess-img-pdpair/sum-law",
        "ess-img-pdpair/scalar-law",
        "ess-img-pdpair/composition-law",
    ];
    let c1 = [2u64, 3, 5]
        .iter()
        .all(|&p| axiom_keys.iter().all(|k| gate.check(p, "pd", k)));
    gate.criterion(
        1,
        "PD-axiom suite exact on 200 random ideal elements, p in {2,3,5}",
        c1,
    );

    let c2 = gate.check(2, "pd", "pdfil-free-pdalg/gr-rank")
        && gate.check(2, "pd", "LAdFil-symm-cot-cx/gr-rank");
    gate.criterion(
        2,
        "adic and PD graded pieces have rank C(n+r-1, r-1), n <= 8, r <= 3",
        c2,
    );

    let c3 = [2u64, 3]
        .iter()
        .all(|&p| gate.check(p, "pd", "bhatt-conj-fil/gr-rank"));
    gate.criterion(
        3,
        "conjugate filtration of the PD-envelope: gr^{-j} rank and generators, j <= 4, r <= 2",
        c3,
    );

    let c4 = [2u64, 3].iter().all(|&p| {
        gate.check(p, "delta", "delta-power/identity")
            && gate.check(p, "delta", "delta-divided/expansion")
            && gate.check(p, "prism", "delta-mod-I-indep-gen/witness")
    });
    gate.criterion(
        4,
        "delta identities: power expansion, divided expansion, weak-distinguishedness witness",
        c4,
    );

    let c5 = [2u64, 3].iter().all(|&p| {
        [
            "expand-delta-n/no-top-var",
            "expand-delta-n/top-degree",
            "expand-delta-n/leading-coefficient",
            "expand-delta-n/homogeneity",
        ]
        .iter()
        .all(|k| gate.check(p, "prism", k))
    });
    gate.criterion(
        5,
        "delta^n(zd) expansion: all four structural checks, n <= 3 at p = 2 and n <= 2 at p = 3",
        c5,
    );

    let c6 = [2u64, 3].iter().all(|&p| {
        gate.check(p, "prism", "phi-d-p-local/exact-identity")
            && gate.check(p, "prism", "phi-d-p-local/unit-congruence")
    });
    gate.criterion(
        6,
        "unit tower: phi^n(d) = d^{p^n} + p u_n with u_n a unit mod (p, d), n <= 3",
        c6,
    );

    let c7 = [2u64, 3]
        .iter()
        .all(|&p| gate.check(p, "delta", "delta-n-rat/degree-and-leading"));
    gate.criterion(
        7,
        "rational normal form: deg_x delta^n(x) = p^n with leading (-1/p)^{(p^n-1)/(p-1)}, n <= 3",
        c7,
    );

    let c8 = [2u64, 3].iter().all(|&p| {
        gate.check(p, "prism", "conj-fil-prism-env/gr-rank")
            && gate.check(p, "prism", "prism-conj-fil-mod-p-rat/idempotent")
            && gate.check(p, "prism", "prism-conj-fil-mod-p-rat/uniqueness")
            && gate.check(p, "prism", "prism-conj-fil-mod-p-rat/rational-degree")
            && gate.check(p, "prism", "conj-fil-prism-comp/invertible")
    });
    gate.criterion(
        8,
        "prismatic conjugate filtration and Hodge-Tate comparison, i <= p^2, r <= 2",
        c8,
    );

    let c9 = [2u64, 3].iter().all(|&p| {
        gate.check(p, "pd", "mod-p-basis/invertible")
            && gate.check(p, "prism", "divided-power-integrality/p-local")
    });
    gate.criterion(
        9,
        "mod-p basis change invertible and divided powers p-integral up to p^2 + p",
        c9,
    );

    let c10 = [2u64, 3, 5].iter().all(|&p| {
        [
            "pd-derivation/d-squared",
            "pd-derivation/graded-leibniz",
            "poincare/divided-power",
            "poincare/rational",
            "dR-rational/degeneration",
        ]
        .iter()
        .all(|k| gate.check(p, "derham", k))
    }) && [2u64, 3].iter().all(|&p| {
        [
            "cartier/rank-match",
            "cartier/invertible",
            "cartier/additivity",
        ]
        .iter()
        .all(|k| gate.check(p, "derham", k))
    });
    gate.criterion(
        10,
        "de Rham suite: d^2 = 0, Leibniz, Poincare vanishing, Cartier isomorphism and additivity",
        c10,
    );

    assert!(
        gate.failures.is_empty(),
        "failed criteria:\n{}",
        gate.failures.join("\n")
    );
}
