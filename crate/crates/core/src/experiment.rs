//! Batches of ISA trials, instanton bookkeeping, a brute-force oracle for
//! small codes and the versioned report format.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{check_weight_bounds, frac_weight};
use crate::decoder::{rational_str, DecodeError, Decoder, FlipSupport, Rational};
use crate::isa::{isa_run, verify_instanton, IsaError, IsaResult, RunKey};
use crate::par;
use crate::rng::{stream, Purpose};

/// Version of the JSON report layout; bumped on any incompatible change.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Default number of decodes [`brute_force_instantons`] may spend.
pub const DEFAULT_ORACLE_CAP: u64 = 2_000_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("k0 = {k0} must lie in 1..={n}")]
    BadK0 { k0: usize, n: usize },
    #[error("enumeration needs {needed} decodes, above the cap of {cap}")]
    CapExceeded { needed: u64, cap: u64 },
    #[error("report schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The `k0`-subset trial `trial` starts from.
pub fn initiation(n: usize, k0: usize, master_seed: u64, trial: u64) -> FlipSupport {
    let mut rng = stream(master_seed, trial, Purpose::Initiation);
    FlipSupport::new(n, sample(&mut rng, n, k0).into_vec()).expect("sampled positions are distinct")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Instanton(Box<IsaResult>),
    InsufficientNoise,
    /// Solver failure; counted, not fatal.
    SolverError { message: String },
    /// A guarantee of the algorithm failed.
    InvariantViolation { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub outcome: TrialOutcome,
}

/// Runs one trial: draw the initiation, then run the search.
pub fn run_trial(decoder: &Decoder<'_>, k0: usize, master_seed: u64, trial: u64) -> TrialResult {
    let initial = initiation(decoder.code().n(), k0, master_seed, trial);
    let outcome = match isa_run(decoder, &initial, RunKey { master_seed, trial }) {
        Ok(r) => TrialOutcome::Instanton(Box::new(r)),
        Err(IsaError::InsufficientNoise) => TrialOutcome::InsufficientNoise,
        Err(IsaError::Decode(e)) => TrialOutcome::SolverError { message: e.to_string() },
        Err(IsaError::Invariant(m)) => TrialOutcome::InvariantViolation { message: m },
    };
    TrialResult { trial, outcome }
}

/// Trials `0..trials` in index order. The result does not depend on the
/// worker count because every trial owns its random streams.
pub fn run_trials(
    decoder: &Decoder<'_>,
    k0: usize,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<TrialResult>, ExperimentError> {
    let n = decoder.code().n();
    if k0 == 0 || k0 > n {
        return Err(ExperimentError::BadK0 { k0, n });
    }
    let ids: Vec<u64> = (0..trials).collect();
    Ok(par::with_workers(workers, || {
        par::map(&ids, |&t| run_trial(decoder, k0, master_seed, t))
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantonRecord {
    pub support: FlipSupport,
    pub size: usize,
    /// BSC weight of the pseudo-codeword the instanton decodes to.
    pub pcw_weight: usize,
    #[serde(with = "rational_str")]
    pub frac_weight: Rational,
    pub first_seen_trial: u64,
    pub hit_count: u64,
}

/// One instanton hit before deduplication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hit {
    pub support: FlipSupport,
    pub pcw_weight: usize,
    pub frac_weight: Rational,
    pub trial: u64,
}

/// Groups hits by support, ordered by size then support.
pub fn dedup(hits: &[Hit]) -> Vec<InstantonRecord> {
    let mut by_support: BTreeMap<(usize, Vec<usize>), InstantonRecord> = BTreeMap::new();
    for h in hits {
        let key = (h.support.len(), h.support.positions().to_vec());
        let rec = by_support.entry(key).or_insert_with(|| InstantonRecord {
            support: h.support.clone(),
            size: h.support.len(),
            pcw_weight: h.pcw_weight,
            frac_weight: h.frac_weight,
            first_seen_trial: h.trial,
            hit_count: 0,
        });
        rec.hit_count += 1;
        rec.first_seen_trial = rec.first_seen_trial.min(h.trial);
    }
    by_support.into_values().collect()
}

/// Counts of the per-run and per-record property checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyTallies {
    pub runs_completed: u64,
    pub insufficient_noise: u64,
    pub solver_errors: u64,
    pub invariant_violations: u64,
    /// Largest `steps_used / (2·k0)` seen, as `(steps_used, k0)`.
    pub max_steps: Option<(usize, usize)>,
    /// Runs whose weight sequence did not strictly decrease or that exceeded 2k0 steps.
    pub theorem_violations: u64,
    /// Harvested pseudo-codewords checked against both weight bounds.
    pub weight_bound_checks: u64,
    pub weight_bound_failures: u64,
    /// Unique instantons re-verified with an independent decoder.
    pub records_verified: u64,
    pub verification_failures: u64,
    /// First few failure messages, for diagnosis.
    pub messages: Vec<String>,
}

const MAX_MESSAGES: usize = 20;

impl PropertyTallies {
    fn note(&mut self, msg: String) {
        if self.messages.len() < MAX_MESSAGES {
            self.messages.push(msg);
        }
    }

    pub fn clean(&self) -> bool {
        self.solver_errors == 0
            && self.invariant_violations == 0
            && self.theorem_violations == 0
            && self.weight_bound_failures == 0
            && self.verification_failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub code_fingerprint: String,
    pub n: usize,
    pub k0: usize,
    pub trials: u64,
    pub master_seed: u64,
    /// Size → number of trials halting at that size; 0 counts trials whose
    /// initiation already decoded correctly. Trials lost to errors are not binned.
    pub frequency_bars: BTreeMap<usize, u64>,
    /// Size → number of distinct instantons.
    pub unique_bars: BTreeMap<usize, u64>,
    pub records: Vec<InstantonRecord>,
    pub checks: PropertyTallies,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TrialResult>,
}

fn strictly_decreasing(r: &IsaResult) -> bool {
    let w = r.weights();
    w.windows(2).all(|p| p[0] > p[1]) && r.final_weight.w_bsc <= *w.last().unwrap_or(&usize::MAX)
}

impl BatchReport {
    /// Builds the report from trial results, re-verifying every distinct
    /// instanton with `verifier` (which should not share a cache with the
    /// decoder that produced the trials).
    pub fn from_trials(
        verifier: &Decoder<'_>,
        k0: usize,
        master_seed: u64,
        results: &[TrialResult],
        keep_traces: bool,
    ) -> Result<Self, ExperimentError> {
        let code = verifier.code();
        let mut checks = PropertyTallies::default();
        let mut frequency_bars: BTreeMap<usize, u64> = BTreeMap::new();
        let mut hits = Vec::new();
        for t in results {
            match &t.outcome {
                TrialOutcome::Instanton(r) => {
                    checks.runs_completed += 1;
                    *frequency_bars.entry(r.instanton.len()).or_default() += 1;
                    if checks.max_steps.is_none_or(|(s, k)| r.steps_used * k > s * r.k0) {
                        checks.max_steps = Some((r.steps_used, r.k0));
                    }
                    if r.steps_used > 2 * r.k0 || !strictly_decreasing(r) {
                        checks.theorem_violations += 1;
                        checks.note(format!("trial {}: weights {:?}", t.trial, r.weights()));
                    }
                    let pcws = r.trace.iter().map(|s| &s.input_pcw).chain(std::iter::once(&r.final_pcw));
                    for p in pcws {
                        checks.weight_bound_checks += 1;
                        if !check_weight_bounds(p).is_ok_and(|b| b.holds()) {
                            checks.weight_bound_failures += 1;
                            checks.note(format!("trial {}: weight bounds fail", t.trial));
                        }
                    }
                    hits.push(Hit {
                        support: r.instanton.clone(),
                        pcw_weight: r.final_weight.w_bsc,
                        frac_weight: frac_weight(&r.final_pcw),
                        trial: t.trial,
                    });
                }
                TrialOutcome::InsufficientNoise => {
                    checks.insufficient_noise += 1;
                    *frequency_bars.entry(0).or_default() += 1;
                }
                TrialOutcome::SolverError { message } => {
                    checks.solver_errors += 1;
                    checks.note(format!("trial {}: {message}", t.trial));
                }
                TrialOutcome::InvariantViolation { message } => {
                    checks.invariant_violations += 1;
                    checks.note(format!("trial {}: {message}", t.trial));
                }
            }
        }
        let records = dedup(&hits);
        let verdicts = par::map(&records, |rec| verify_instanton(verifier, &rec.support).map(|c| c.is_instanton()));
        for (rec, v) in records.iter().zip(verdicts) {
            checks.records_verified += 1;
            if !v? {
                checks.verification_failures += 1;
                checks.note(format!("record {} failed verification", rec.support));
            }
        }
        let mut unique_bars: BTreeMap<usize, u64> = BTreeMap::new();
        for r in &records {
            *unique_bars.entry(r.size).or_default() += 1;
        }
        Ok(BatchReport {
            schema_version: REPORT_SCHEMA_VERSION,
            code_fingerprint: code.fingerprint(),
            n: code.n(),
            k0,
            trials: results.len() as u64,
            master_seed,
            frequency_bars,
            unique_bars,
            records,
            checks,
            traces: if keep_traces { results.to_vec() } else { Vec::new() },
        })
    }

    pub fn unique_at(&self, size: usize) -> u64 {
        self.unique_bars.get(&size).copied().unwrap_or(0)
    }

    pub fn frequency_at(&self, size: usize) -> u64 {
        self.frequency_bars.get(&size).copied().unwrap_or(0)
    }

    /// Smallest instanton size found.
    pub fn min_size(&self) -> Option<usize> {
        self.records.iter().map(|r| r.size).min()
    }

    pub fn min_pcw_weight(&self) -> Option<usize> {
        self.records.iter().map(|r| r.pcw_weight).min()
    }

    pub fn to_json(&self) -> Result<String, ExperimentError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let version: SchemaProbe = serde_json::from_str(text)?;
        if version.schema_version != REPORT_SCHEMA_VERSION {
            return Err(ExperimentError::SchemaVersion {
                found: version.schema_version,
                expected: REPORT_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }

    /// Bar table with columns `size,frequency_count,unique_count`, one row
    /// per size present in either bar graph.
    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let sizes: std::collections::BTreeSet<usize> =
            self.frequency_bars.keys().chain(self.unique_bars.keys()).copied().collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["size", "frequency_count", "unique_count"])?;
        for s in sizes {
            w.serialize((s, self.frequency_at(s), self.unique_at(s)))?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }
}

#[derive(Deserialize)]
struct SchemaProbe {
    schema_version: u32,
}

/// Runs a batch end to end. `decoder` runs the trials (a cache is fine);
/// distinct instantons are re-verified with a fresh uncached decoder.
pub fn run_batch(
    decoder: &Decoder<'_>,
    k0: usize,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<BatchReport, ExperimentError> {
    let results = run_trials(decoder, k0, trials, master_seed, workers)?;
    let verifier = Decoder::new(decoder.code()).with_formulation(decoder.formulation());
    par::with_workers(workers, || BatchReport::from_trials(&verifier, k0, master_seed, &results, false))
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Every instanton of size at most `max_size`, found by decoding all
/// supports in order of size. A failing support is an instanton exactly
/// when none of its one-removed subsets fails; those were all decoded at
/// the previous size.
pub fn brute_force_instantons(
    decoder: &Decoder<'_>,
    max_size: usize,
    cap: u64,
) -> Result<Vec<FlipSupport>, ExperimentError> {
    let n = decoder.code().n();
    let max_size = max_size.min(n);
    let needed = (0..=max_size as u64).fold(0u64, |acc, k| acc.saturating_add(binomial(n as u64, k)));
    if needed > cap {
        return Err(ExperimentError::CapExceeded { needed, cap });
    }
    let mut failing: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    let mut level: Vec<Vec<usize>> = vec![Vec::new()];
    for size in 0..=max_size {
        let supports: Vec<FlipSupport> = level
            .iter()
            .map(|s| FlipSupport::new(n, s.iter().copied()).expect("enumerated supports are valid"))
            .collect();
        let verdicts = par::map(&supports, |s| decoder.decode(s).map(|o| o.is_failure()));
        let mut fails_now = Vec::new();
        for (s, v) in supports.into_iter().zip(verdicts) {
            if v? {
                let minimal = s.positions().iter().all(|&i| !failing.contains(s.without(i).positions()));
                if minimal {
                    out.push(s.clone());
                }
                fails_now.push(s.positions().to_vec());
            }
        }
        failing.extend(fails_now);
        if size < max_size {
            level = level
                .iter()
                .flat_map(|s| {
                    let start = s.last().map_or(0, |&l| l + 1);
                    (start..n).map(move |i| {
                        let mut t = s.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
    }
    Ok(out)
}

/// Result of re-checking a sample of records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub sampled: u64,
    pub verify_failures: u64,
    /// Strict supersets that decoded correctly (each is a violation).
    pub superset_successes: u64,
    pub messages: Vec<String>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.verify_failures == 0 && self.superset_successes == 0
    }
}

/// Re-verifies up to `samples` records and decodes one random strict
/// superset of each, which must fail.
pub fn audit_records(
    decoder: &Decoder<'_>,
    records: &[InstantonRecord],
    samples: usize,
    seed: u64,
) -> Result<AuditReport, ExperimentError> {
    let n = decoder.code().n();
    let mut rng = stream(seed, 0, Purpose::Aux(0));
    let picked: Vec<usize> = if records.len() <= samples {
        (0..records.len()).collect()
    } else {
        let mut v = sample(&mut rng, records.len(), samples).into_vec();
        v.sort_unstable();
        v
    };
    let supersets: Vec<(usize, FlipSupport)> = picked
        .iter()
        .map(|&k| {
            let base = &records[k].support;
            let free: Vec<usize> = (0..n).filter(|i| !base.contains(*i)).collect();
            let extra = rng.gen_range(1..=free.len().clamp(1, 3));
            let chosen = sample(&mut rng, free.len(), extra.min(free.len())).into_iter().map(|i| free[i]);
            let sup = FlipSupport::new(n, base.positions().iter().copied().chain(chosen)).expect("disjoint additions");
            (k, sup)
        })
        .collect();
    let results = par::map(&supersets, |(k, sup)| -> Result<(bool, bool), DecodeError> {
        let ok = verify_instanton(decoder, &records[*k].support)?.is_instanton();
        let fails = decoder.decode(sup)?.is_failure();
        Ok((ok, fails))
    });
    let mut audit = AuditReport { sampled: picked.len() as u64, ..Default::default() };
    for ((k, sup), r) in supersets.iter().zip(results) {
        let (ok, fails) = r?;
        if !ok {
            audit.verify_failures += 1;
            audit.messages.push(format!("{} is not an instanton", records[*k].support));
        }
        if !fails {
            audit.superset_successes += 1;
            audit.messages.push(format!("superset {sup} of {} decodes", records[*k].support));
        }
    }
    Ok(audit)
}

/// Instanton supports in a stable order, for set comparisons.
pub fn support_set(supports: impl IntoIterator<Item = FlipSupport>) -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = supports.into_iter().map(|s| s.positions().to_vec()).collect();
    v.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    v.dedup();
    v
}
