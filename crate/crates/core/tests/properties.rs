//! Invariants checked over random inputs.

mod common;

use common::tiny_code;
use instanton_core::analysis::{bsc_weight, check_weight_bounds, enumerate_medians};
use instanton_core::code::alist::{canonicalize, parse_alist, write_alist};
use instanton_core::code::{build_qc_code, tanner_155, QcSpec, TannerCode};
use instanton_core::decoder::{cost, Decoder, FlipSupport, Formulation, OutcomeKind, PseudoCodeword, Rational};
use instanton_core::lp::{solve, LpProblem, Relation};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use std::sync::OnceLock;

fn tanner() -> &'static TannerCode {
    static CODE: OnceLock<TannerCode> = OnceLock::new();
    CODE.get_or_init(tanner_155)
}

fn flips(n: usize, sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = FlipSupport> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), sizes)
        .prop_map(move |v| FlipSupport::new(n, v).unwrap())
}

/// Nonzero vectors with coordinates in {0, 1/d, ..., 1}.
fn pcw() -> impl Strategy<Value = PseudoCodeword> {
    (1i64..=6)
        .prop_flat_map(|d| (Just(d), proptest::collection::vec(0..=d, 1..=12)))
        .prop_filter("nonzero", |(_, v)| v.iter().any(|&x| x > 0))
        .prop_map(|(d, v)| PseudoCodeword::new(v.into_iter().map(|x| Rational::new(x, d)).collect()))
}

fn qc_spec() -> impl Strategy<Value = QcSpec> {
    (1usize..=3, 1usize..=5, 1usize..=8).prop_flat_map(|(rows, cols, p)| {
        proptest::collection::vec(proptest::collection::vec(0..p, cols), rows).prop_map(move |exponents| QcSpec {
            rows,
            cols,
            circulant_size: p,
            exponents,
        })
    })
}

fn big(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn alist_round_trip(code in tiny_code(9)) {
        let text = write_alist(&code);
        let back = parse_alist(&text).unwrap();
        prop_assert_eq!(&back, &canonicalize(&code));
        prop_assert_eq!(write_alist(&back), text);
    }

    #[test]
    fn qc_codes_are_regular(spec in qc_spec()) {
        let code = build_qc_code(&spec).unwrap();
        prop_assert_eq!(code.n(), spec.cols * spec.circulant_size);
        prop_assert_eq!(code.m(), spec.rows * spec.circulant_size);
        for i in 0..code.n() {
            prop_assert_eq!(code.var(i).len(), spec.rows);
        }
        for j in 0..code.m() {
            prop_assert_eq!(code.check(j).len(), spec.cols);
        }
        prop_assert!(code.gf2_rank() <= code.m());
    }

    #[test]
    fn box_lp_optimum_takes_negative_costs(c in proptest::collection::vec(-5i32..=5, 1..=10)) {
        let mut lp = LpProblem::unit_box(c.len());
        lp.objective = c.iter().map(|&x| x as f64).collect();
        let sol = solve(&lp).unwrap();
        prop_assert!(sol.is_optimal());
        let expected: i64 = c.iter().map(|&x| x.min(0) as i64).sum();
        prop_assert_eq!(&sol.objective_value, &big(expected));
        prop_assert_eq!(solve(&lp).unwrap(), sol);
    }

    #[test]
    fn simplex_lp_optimum_is_the_smallest_cost(c in proptest::collection::vec(-5i32..=5, 1..=10)) {
        let mut lp = LpProblem::unit_box(c.len());
        lp.objective = c.iter().map(|&x| x as f64).collect();
        lp.add_constraint((0..c.len()).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
        let sol = solve(&lp).unwrap();
        let expected = *c.iter().min().unwrap() as i64;
        prop_assert_eq!(&sol.objective_value, &big(expected));
        let total: BigRational = sol.vertex.iter().sum();
        prop_assert!(total.is_one());
    }

    #[test]
    fn medians_have_nonpositive_cost_and_minimal_size(p in pcw()) {
        let w = bsc_weight(&p).unwrap();
        prop_assert!(w.w_bsc == 2 * w.e || w.w_bsc + 1 == 2 * w.e);
        let medians = enumerate_medians(&p).unwrap();
        prop_assert_eq!(medians.e, w.e);
        let all = medians.all();
        prop_assert_eq!(all.len() as u128, medians.count());
        for m in &all {
            prop_assert_eq!(m.len(), w.e);
            prop_assert!(cost(m, &p) <= Rational::zero());
            prop_assert_eq!(cost(m, &p).is_zero(), w.equality_case);
        }
        // no set of size e - 1 reaches half the total
        let mut sorted = p.coords().to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let total: Rational = sorted.iter().sum();
        let top: Rational = sorted[..w.e - 1].iter().sum();
        prop_assert!(top * 2 < total);
        prop_assert!(check_weight_bounds(&p).unwrap().holds());
    }

    #[test]
    fn integral_weight_is_hamming_weight(bits in proptest::collection::vec(any::<bool>(), 1..=20)) {
        prop_assume!(bits.iter().any(|&b| b));
        let p = PseudoCodeword::new(bits.iter().map(|&b| if b { Rational::one() } else { Rational::zero() }).collect());
        prop_assert_eq!(bsc_weight(&p).unwrap().w_bsc, bits.iter().filter(|&&b| b).count());
    }

    #[test]
    fn flip_support_json_round_trip(f in flips(30, 0..=30)) {
        let text = serde_json::to_string(&f).unwrap();
        let back: FlipSupport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn projected_and_full_agree_on_tiny_codes(code in tiny_code(7), seed in any::<u64>()) {
        let n = code.n();
        let f = FlipSupport::new(n, (0..n).filter(|i| seed >> i & 1 == 1)).unwrap();
        let a = Decoder::new(&code).decode(&f).unwrap();
        let b = Decoder::new(&code).with_formulation(Formulation::Full).decode(&f).unwrap();
        // tiny codes often have several optimal vertices, so only the verdict must match
        prop_assert_eq!(a.is_failure(), b.is_failure());
        prop_assert_eq!(a.cost, b.cost);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoder_output_is_self_consistent(f in flips(155, 3..=14)) {
        let out = Decoder::new(tanner()).decode(&f).unwrap();
        match (&out.kind, &out.pcw) {
            (OutcomeKind::AllZero, _) => prop_assert!(out.cost.is_zero()),
            (kind, Some(p)) => {
                prop_assert_eq!(cost(&f, p), out.cost);
                prop_assert!(!p.is_zero());
                match kind {
                    OutcomeKind::NonzeroCodeword => {
                        prop_assert!(p.is_integral());
                        let word: Vec<bool> = p.coords().iter().map(|x| x.is_one()).collect();
                        prop_assert!(tanner().is_codeword(&word));
                        prop_assert!(out.cost < Rational::zero());
                    }
                    OutcomeKind::FractionalPcw => {
                        prop_assert!(!p.is_integral());
                        prop_assert!(out.cost < Rational::zero());
                    }
                    _ => prop_assert!(out.cost.is_zero()),
                }
            }
            (kind, None) => prop_assert!(false, "{:?} without a pseudo-codeword", kind),
        }
    }

    #[test]
    fn failure_is_monotone_under_adding_flips(f in flips(155, 16..=24), extra in 0usize..155) {
        let dec = Decoder::new(tanner());
        let out = dec.decode(&f).unwrap();
        prop_assume!(out.is_failure() && !f.contains(extra));
        let mut bigger: Vec<usize> = f.positions().to_vec();
        bigger.push(extra);
        let g = FlipSupport::new(155, bigger).unwrap();
        prop_assert!(dec.decode(&g).unwrap().is_failure());
    }

    #[test]
    fn projected_and_full_agree_on_tanner(f in flips(155, 4..=10)) {
        let a = Decoder::new(tanner()).decode(&f).unwrap();
        let b = Decoder::new(tanner()).with_formulation(Formulation::Full).decode(&f).unwrap();
        prop_assert_eq!(a.kind, b.kind);
        prop_assert_eq!(a.cost, b.cost);
    }
}
