//! The decoder, the zero-cost probe and the fractional distance checked
//! against brute-force vertex enumeration on tiny codes.

mod common;

use common::{cost_of, tiny_code, vertices, Q};
use instanton_core::analysis::{fractional_distance, FacetFamily};
use instanton_core::code::TannerCode;
use instanton_core::decoder::{Decoder, FlipSupport, OutcomeKind};
use num_traits::Zero;
use proptest::prelude::*;

fn nonzero_min_weight(verts: &[Vec<Q>]) -> Option<Q> {
    verts.iter().filter(|v| v.iter().any(|x| !x.is_zero())).map(|v| v.iter().sum()).min()
}

fn flips(n: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n)
}

fn code_and_flips(max_n: usize) -> impl Strategy<Value = (TannerCode, Vec<usize>)> {
    tiny_code(max_n).prop_flat_map(|c| {
        let n = c.n();
        (Just(c), flips(n))
    })
}

#[test]
fn single_check_of_degree_three() {
    // vertices: 0 and the three weight-2 codewords
    let code = TannerCode::from_check_neighbors(3, vec![vec![0, 1, 2]]).unwrap();
    let v = vertices(&code);
    assert_eq!(v.len(), 4);
    assert_eq!(nonzero_min_weight(&v), Some(Q::from_integer(2)));
}

#[test]
fn cycle_with_pendant_check() {
    let code = TannerCode::from_check_neighbors(4, vec![vec![0, 1], vec![1, 2], vec![0, 2, 3]]).unwrap();
    let v = vertices(&code);
    assert!(v.iter().all(|x| x.iter().all(|c| *c >= Q::zero() && *c <= Q::from_integer(1))));
    let dec = Decoder::new(&code);
    let all = fractional_distance(&dec, FacetFamily::All).unwrap().unwrap();
    assert_eq!(Some(all.value), nonzero_min_weight(&v));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn all_family_distance_is_the_minimum_vertex_weight(code in tiny_code(5)) {
        let verts = vertices(&code);
        let dec = Decoder::new(&code);
        let all = fractional_distance(&dec, FacetFamily::All).unwrap();
        prop_assert_eq!(all.as_ref().map(|d| d.value), nonzero_min_weight(&verts));
        if let Some(d) = &all {
            prop_assert!(verts.contains(&d.argmin.coords().to_vec()));
        }
        // the parity family only looks at a subset of the faces
        if let Some(p) = fractional_distance(&dec, FacetFamily::Parity).unwrap() {
            prop_assert!(p.value >= all.unwrap().value);
        }
    }

    #[test]
    fn decode_reaches_the_enumerated_optimum((code, f) in code_and_flips(5)) {
        let verts = vertices(&code);
        let support = FlipSupport::new(code.n(), f.clone()).unwrap();
        let out = Decoder::new(&code).decode(&support).unwrap();
        let best = verts.iter().map(|v| cost_of(&f, v)).min().unwrap();
        prop_assert_eq!(out.cost, best);
        if let Some(p) = &out.pcw {
            prop_assert!(verts.contains(&p.coords().to_vec()), "decoder output is not a vertex: {:?}", p);
        }
        // failure iff some nonzero vertex costs no more than zero
        let failing = verts.iter().any(|v| v.iter().any(|x| !x.is_zero()) && cost_of(&f, v) <= Q::zero());
        prop_assert_eq!(out.is_failure(), failing, "{:?}", out.kind);
        prop_assert_eq!(out.kind == OutcomeKind::AllZero, !failing);
    }

    #[test]
    fn probe_finds_a_zero_cost_point_iff_one_exists((code, f) in code_and_flips(5)) {
        let verts = vertices(&code);
        let support = FlipSupport::new(code.n(), f.clone()).unwrap();
        let dec = Decoder::new(&code);
        if verts.iter().any(|v| cost_of(&f, v) < Q::zero()) {
            return Ok(());
        }
        let probe = dec.probe_zero_cost(&support).unwrap();
        let exists = verts.iter().any(|v| v.iter().any(|x| !x.is_zero()) && cost_of(&f, v).is_zero());
        prop_assert_eq!(probe.is_some(), exists);
        if let Some(p) = probe {
            prop_assert!(!p.is_zero());
            prop_assert!(cost_of(&f, p.coords()).is_zero());
        }
    }
}
