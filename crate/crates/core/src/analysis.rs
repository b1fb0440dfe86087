//! Weights, medians and the fractional distance of pseudo-codewords.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::{odd_set_cut, subsets_with_parity, to_pcw, DecodeError, Decoder, FlipSupport, PseudoCodeword, Rational};
use crate::lp::{Constraint, Relation};
use crate::par;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("the all-zero vector has no BSC weight or median")]
pub struct ZeroVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightReport {
    pub w_bsc: usize,
    /// Median size.
    pub e: usize,
    /// The `e` largest coordinates sum to exactly half the total.
    pub equality_case: bool,
}

/// Indices sorted by decreasing coordinate, ties by index.
fn descending(p: &PseudoCodeword) -> Vec<usize> {
    let f = p.coords();
    let mut idx: Vec<usize> = (0..f.len()).collect();
    idx.sort_by(|&a, &b| f[b].cmp(&f[a]).then(a.cmp(&b)));
    idx
}

fn median_size(p: &PseudoCodeword, order: &[usize]) -> Result<(usize, bool), ZeroVector> {
    let f = p.coords();
    let total: Rational = f.iter().sum();
    if total.is_zero() {
        return Err(ZeroVector);
    }
    let half = total / Rational::from_integer(2);
    let mut acc = Rational::zero();
    for (k, &i) in order.iter().enumerate() {
        acc += f[i];
        match acc.cmp(&half) {
            Ordering::Less => continue,
            Ordering::Equal => return Ok((k + 1, true)),
            Ordering::Greater => return Ok((k + 1, false)),
        }
    }
    unreachable!("the full sum exceeds half of a positive total")
}

pub fn bsc_weight(p: &PseudoCodeword) -> Result<WeightReport, ZeroVector> {
    let (e, equality_case) = median_size(p, &descending(p))?;
    Ok(WeightReport {
        w_bsc: if equality_case { 2 * e } else { 2 * e - 1 },
        e,
        equality_case,
    })
}

/// All medians of a pseudo-codeword: `forced` plus any `pick` positions of `tied`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedianSet {
    pub n: usize,
    pub e: usize,
    pub forced: Vec<usize>,
    pub tied: Vec<usize>,
    pub pick: usize,
}

impl MedianSet {
    /// Number of distinct medians, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        let (t, k) = (self.tied.len() as u128, self.pick as u128);
        (0..k).try_fold(1u128, |acc, i| acc.checked_mul(t - i).map(|v| v / (i + 1))).unwrap_or(u128::MAX)
    }

    /// Every median, in lexicographic order of the chosen tied positions.
    /// Intended for small sets; the count is checked with [`MedianSet::count`].
    pub fn all(&self) -> Vec<FlipSupport> {
        let mut out = Vec::new();
        let mut chosen = Vec::with_capacity(self.pick);
        self.extend(0, &mut chosen, &mut out);
        out
    }

    fn extend(&self, from: usize, chosen: &mut Vec<usize>, out: &mut Vec<FlipSupport>) {
        if chosen.len() == self.pick {
            out.push(self.with(chosen.iter().copied()));
            return;
        }
        for k in from..self.tied.len() {
            if self.tied.len() - k < self.pick - chosen.len() {
                break;
            }
            chosen.push(self.tied[k]);
            self.extend(k + 1, chosen, out);
            chosen.pop();
        }
    }

    fn with(&self, extra: impl IntoIterator<Item = usize>) -> FlipSupport {
        let positions = self.forced.iter().copied().chain(extra);
        FlipSupport::new(self.n, positions).expect("median positions are distinct and in range")
    }

    pub fn contains(&self, m: &FlipSupport) -> bool {
        m.len() == self.e
            && self.forced.iter().all(|&i| m.contains(i))
            && m.positions().iter().all(|i| self.forced.contains(i) || self.tied.contains(i))
    }

    /// A uniformly random median.
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> FlipSupport {
        let mut idx = sample(rng, self.tied.len(), self.pick).into_vec();
        idx.sort_unstable();
        self.with(idx.into_iter().map(|k| self.tied[k]))
    }
}

pub fn enumerate_medians(p: &PseudoCodeword) -> Result<MedianSet, ZeroVector> {
    let order = descending(p);
    let (e, _) = median_size(p, &order)?;
    let f = p.coords();
    let cutoff = f[order[e - 1]];
    let mut forced: Vec<usize> = order.iter().copied().filter(|&i| f[i] > cutoff).collect();
    let mut tied: Vec<usize> = order.iter().copied().filter(|&i| f[i] == cutoff).collect();
    forced.sort_unstable();
    tied.sort_unstable();
    let pick = e - forced.len();
    Ok(MedianSet {
        n: p.len(),
        e,
        forced,
        tied,
        pick,
    })
}

pub fn pick_median<R: Rng + ?Sized>(p: &PseudoCodeword, rng: &mut R) -> Result<FlipSupport, ZeroVector> {
    Ok(enumerate_medians(p)?.pick(rng))
}

/// L1 norm.
pub fn frac_weight(p: &PseudoCodeword) -> Rational {
    p.coords().iter().sum()
}

/// L1 norm divided by the largest coordinate.
pub fn max_frac_weight(p: &PseudoCodeword) -> Result<Rational, ZeroVector> {
    let max = p.coords().iter().max().copied().unwrap_or_else(Rational::zero);
    if max.is_zero() {
        return Err(ZeroVector);
    }
    Ok(frac_weight(p) / max)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub weight: WeightReport,
    #[serde(with = "crate::decoder::rational_str")]
    pub frac_weight: Rational,
    #[serde(with = "crate::decoder::rational_str")]
    pub max_frac_weight: Rational,
    /// `w_bsc ≥ 2⌈w_frac/2⌉ − 1`
    pub frac_bound_holds: bool,
    /// `w_bsc + 1 ≥ w_max_frac`
    pub max_frac_bound_holds: bool,
}

impl WeightBounds {
    pub fn holds(&self) -> bool {
        self.frac_bound_holds && self.max_frac_bound_holds
    }
}

pub fn check_weight_bounds(p: &PseudoCodeword) -> Result<WeightBounds, ZeroVector> {
    let weight = bsc_weight(p)?;
    let wf = frac_weight(p);
    let wmf = max_frac_weight(p)?;
    let w = Rational::from_integer(weight.w_bsc as i64);
    let two = Rational::from_integer(2);
    Ok(WeightBounds {
        weight,
        frac_bound_holds: w >= two * (wf / two).ceil() - Rational::one(),
        max_frac_bound_holds: w + Rational::one() >= wmf,
        frac_weight: wf,
        max_frac_weight: wmf,
    })
}

/// An inequality of the projected polytope that does not pass through the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Facet {
    /// `f_i ≤ 1`
    Upper(usize),
    /// Odd-set inequality of check `check` for `set` with `|set| ≥ 3`.
    OddSet { check: usize, set: Vec<usize> },
}

impl Facet {
    fn tightened(&self, decoder: &Decoder<'_>) -> Constraint {
        match self {
            Facet::Upper(i) => Constraint::new(vec![(*i, 1.0)], Relation::Eq, 1.0),
            Facet::OddSet { check, set } => {
                let mut c = odd_set_cut(decoder.code().check(*check), set);
                c.relation = Relation::Eq;
                c
            }
        }
    }
}

/// Which inequalities [`fractional_distance`] tightens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetFamily {
    /// Odd-set inequalities with `|S| ≥ 3` only. This is the classic
    /// procedure; it can miss vertices whose only tight inequality away from
    /// the origin is a bound `f_i ≤ 1`, so it yields an upper bound on the
    /// true minimum.
    #[default]
    Parity,
    /// Odd sets plus the bounds `f_i ≤ 1`: the exact minimum L1 weight over
    /// nonzero vertices.
    All,
}

/// Candidate facets in a fixed order: bounds by index (for
/// [`FacetFamily::All`]), then odd sets per check in enumeration order.
pub fn candidate_facets(decoder: &Decoder<'_>, family: FacetFamily) -> Vec<Facet> {
    let code = decoder.code();
    let mut out: Vec<Facet> = match family {
        FacetFamily::All => (0..code.n()).map(Facet::Upper).collect(),
        FacetFamily::Parity => Vec::new(),
    };
    for j in 0..code.m() {
        for set in subsets_with_parity(code.check(j), true) {
            if set.len() >= 3 {
                out.push(Facet::OddSet { check: j, set });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalDistance {
    #[serde(with = "crate::decoder::rational_str")]
    pub value: Rational,
    /// Optimal vertex of the first facet LP attaining `value`.
    pub argmin: PseudoCodeword,
    pub facet: Facet,
    pub family: FacetFamily,
    pub facets_checked: usize,
}

/// Minimum L1 weight over nonzero vertices of the projected polytope.
///
/// Each candidate facet is tightened to equality in turn and Σf minimized
/// over the resulting face. With [`FacetFamily::All`], every nonzero vertex
/// is tight at some candidate (otherwise it would share all its tight
/// inequalities with the origin), so the smallest face optimum is exact.
/// Returns `None` when no face is feasible.
pub fn fractional_distance(decoder: &Decoder<'_>, family: FacetFamily) -> Result<Option<FractionalDistance>, DecodeError> {
    let facets = candidate_facets(decoder, family);
    let objective = vec![1.0; decoder.code().n()];
    let results = par::map(&facets, |facet| -> Result<Option<PseudoCodeword>, DecodeError> {
        let row = facet.tightened(decoder);
        match decoder.optimize(&objective, std::slice::from_ref(&row))? {
            Some(v) => Ok(Some(to_pcw(&v)?)),
            None => Ok(None),
        }
    });
    let mut best: Option<(Rational, PseudoCodeword, usize)> = None;
    for (k, r) in results.into_iter().enumerate() {
        let Some(p) = r? else { continue };
        let w = frac_weight(&p);
        if w.is_zero() {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _, _)| w < *b) {
            best = Some((w, p, k));
        }
    }
    Ok(best.map(|(value, argmin, k)| FractionalDistance {
        value,
        argmin,
        facet: facets[k].clone(),
        family,
        facets_checked: facets.len(),
    }))
}
