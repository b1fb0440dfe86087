//! The instanton search algorithm.
//!
//! Starting from a failing input, each step replaces the current
//! pseudo-codeword `p` by one of strictly smaller BSC weight: either the
//! decoder output at a median of `p`, or the output of a failing median with
//! one flip removed. When the median fails but all of its one-removed
//! subsets decode correctly, the median is an instanton.
//!
//! Every structural guarantee of the method is re-checked while running and
//! a violation is reported as [`IsaError::Invariant`] rather than ignored.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{bsc_weight, check_weight_bounds, enumerate_medians, WeightReport};
use crate::decoder::{cost, DecodeError, DecodeOutcome, Decoder, FlipSupport, OutcomeKind, PseudoCodeword};
use crate::rng::{stream, Purpose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsaError {
    #[error("the initial pattern decodes to the all-zero codeword")]
    InsufficientNoise,
    #[error(transparent)]
    Decode(#[from] DecodeError),
    /// A guarantee of the algorithm failed; this indicates a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    WeightDropped,
    SubsetSearch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NextChoice {
    /// The median's own decoder output.
    Median,
    /// The output of the median with this 0-based position removed.
    Subset(usize),
    Halt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetOutcome {
    /// 0-based position removed from the median.
    pub removed: usize,
    pub outcome: DecodeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsaStep {
    /// 1-based step number.
    pub index: usize,
    pub input_pcw: PseudoCodeword,
    pub input_weight: WeightReport,
    pub median: FlipSupport,
    pub median_outcome: DecodeOutcome,
    pub median_weight: WeightReport,
    pub branch: Branch,
    /// Empty unless `branch` is [`Branch::SubsetSearch`].
    pub subset_outcomes: Vec<SubsetOutcome>,
    pub chosen_next: NextChoice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsaResult {
    pub initial: FlipSupport,
    pub k0: usize,
    pub instanton: FlipSupport,
    /// Decoder output for the instanton itself.
    pub final_pcw: PseudoCodeword,
    pub final_weight: WeightReport,
    pub steps_used: usize,
    pub trace: Vec<IsaStep>,
}

impl IsaResult {
    /// BSC weights of the successive input pseudo-codewords.
    pub fn weights(&self) -> Vec<usize> {
        self.trace.iter().map(|s| s.input_weight.w_bsc).collect()
    }

    /// Sizes of the successive medians.
    pub fn median_sizes(&self) -> Vec<usize> {
        self.trace.iter().map(|s| s.median.len()).collect()
    }
}

/// Key of the random streams a run draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunKey {
    pub master_seed: u64,
    pub trial: u64,
}

fn invariant(msg: String) -> IsaError {
    IsaError::Invariant(msg)
}

fn failing_pcw(outcome: &DecodeOutcome, what: &str) -> Result<PseudoCodeword, IsaError> {
    match (&outcome.pcw, outcome.is_failure()) {
        (Some(p), true) => Ok(p.clone()),
        _ => Err(invariant(format!("{what}: expected a failure with a pseudo-codeword, got {:?}", outcome.kind))),
    }
}

fn weight(p: &PseudoCodeword) -> Result<WeightReport, IsaError> {
    let w = bsc_weight(p).map_err(|_| invariant("nonzero pseudo-codeword expected".into()))?;
    if w.w_bsc != 2 * w.e && w.w_bsc + 1 != 2 * w.e {
        return Err(invariant(format!("weight {} is not 2e or 2e-1 for e={}", w.w_bsc, w.e)));
    }
    let bounds = check_weight_bounds(p).map_err(|_| invariant("nonzero pseudo-codeword expected".into()))?;
    if !bounds.holds() {
        return Err(invariant(format!("weight bounds fail: {bounds:?}")));
    }
    Ok(w)
}

/// Runs the search from `initial`. Random choices come from streams keyed by
/// `key` and the step number, so a run is reproducible on its own.
pub fn isa_run(decoder: &Decoder<'_>, initial: &FlipSupport, key: RunKey) -> Result<IsaResult, IsaError> {
    let k0 = initial.len();
    let first = decoder.decode(initial)?;
    if !first.is_failure() {
        return Err(IsaError::InsufficientNoise);
    }
    let mut p = failing_pcw(&first, "initial decode")?;
    let mut w = weight(&p)?;
    if w.w_bsc > 2 * k0 {
        return Err(invariant(format!("initial weight {} exceeds 2k0 = {}", w.w_bsc, 2 * k0)));
    }
    let mut trace = Vec::new();
    for index in 1.. {
        if index > 2 * k0 {
            return Err(invariant(format!("more than 2k0 = {} steps", 2 * k0)));
        }
        let mut rng = stream(key.master_seed, key.trial, Purpose::Step(index as u64));
        let median = enumerate_medians(&p)
            .map_err(|_| invariant("nonzero pseudo-codeword expected".into()))?
            .pick(&mut rng);
        if cost(&median, &p) > num_traits::Zero::zero() {
            return Err(invariant(format!("median {median} has positive cost")));
        }
        // a nonzero point of cost ≤ 0 exists, so the decode (with its probe) must fail
        let median_outcome = decoder.decode(&median)?;
        let p_m = failing_pcw(&median_outcome, "median decode")?;
        let median_weight = weight(&p_m)?;
        if median_weight.w_bsc > w.w_bsc {
            return Err(invariant(format!(
                "median output weight {} above input weight {}",
                median_weight.w_bsc, w.w_bsc
            )));
        }
        let mut step = IsaStep {
            index,
            input_pcw: p.clone(),
            input_weight: w,
            median: median.clone(),
            median_outcome: median_outcome.clone(),
            median_weight,
            branch: Branch::WeightDropped,
            subset_outcomes: Vec::new(),
            chosen_next: NextChoice::Median,
        };
        let (next, next_weight) = if median_weight.w_bsc < w.w_bsc {
            (p_m, median_weight)
        } else {
            step.branch = Branch::SubsetSearch;
            for &i in median.positions() {
                let outcome = decoder.decode(&median.without(i))?;
                if outcome.pcw.as_ref() == Some(&p) {
                    return Err(invariant(format!("subset without {} reproduced the input pseudo-codeword", i + 1)));
                }
                step.subset_outcomes.push(SubsetOutcome { removed: i, outcome });
            }
            let failing: Vec<&SubsetOutcome> = step.subset_outcomes.iter().filter(|s| s.outcome.is_failure()).collect();
            if failing.is_empty() {
                step.chosen_next = NextChoice::Halt;
                trace.push(step);
                return Ok(IsaResult {
                    initial: initial.clone(),
                    k0,
                    instanton: median,
                    final_pcw: p_m,
                    final_weight: median_weight,
                    steps_used: index,
                    trace,
                });
            }
            let chosen = failing[rng.gen_range(0..failing.len())];
            let removed = chosen.removed;
            let next = failing_pcw(&chosen.outcome, "subset decode")?;
            step.chosen_next = NextChoice::Subset(removed);
            let next_weight = weight(&next)?;
            (next, next_weight)
        };
        if next_weight.w_bsc >= w.w_bsc {
            return Err(invariant(format!(
                "weight did not decrease at step {index}: {} -> {}",
                w.w_bsc, next_weight.w_bsc
            )));
        }
        trace.push(step);
        p = next;
        w = next_weight;
    }
    unreachable!("the step loop only exits by returning")
}

/// Evidence for or against a candidate instanton.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantonCheck {
    pub candidate: FlipSupport,
    pub outcome: DecodeOutcome,
    pub subsets: Vec<SubsetOutcome>,
    /// The candidate itself fails to decode.
    pub fails: bool,
    /// Every one-removed subset decodes to the all-zero codeword.
    pub subsets_succeed: bool,
}

impl InstantonCheck {
    pub fn is_instanton(&self) -> bool {
        self.fails && self.subsets_succeed
    }
}

/// Checks the instanton conditions directly. Failure is monotone under
/// adding flips, so testing the one-removed subsets covers all subsets.
pub fn verify_instanton(decoder: &Decoder<'_>, candidate: &FlipSupport) -> Result<InstantonCheck, DecodeError> {
    let outcome = decoder.decode(candidate)?;
    let subsets = candidate
        .positions()
        .iter()
        .map(|&i| {
            decoder.decode(&candidate.without(i)).map(|outcome| SubsetOutcome { removed: i, outcome })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InstantonCheck {
        candidate: candidate.clone(),
        fails: outcome.is_failure(),
        subsets_succeed: subsets.iter().all(|s| s.outcome.kind == OutcomeKind::AllZero),
        outcome,
        subsets,
    })
}
