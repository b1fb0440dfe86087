//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes plain strings and numbers and returns a JSON document.
//! An empty `alist` selects the built-in Tanner code.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use instanton_core::analysis::{bsc_weight, frac_weight};
use instanton_core::code::alist::parse_alist;
use instanton_core::code::{tanner_155, TannerCode};
use instanton_core::decoder::{Decoder, FlipSupport, PseudoCodeword};
use instanton_core::experiment::{initiation, run_trials, BatchReport};
use instanton_core::isa::{isa_run, IsaError, NextChoice, RunKey};

/// Largest batch the page may request; keeps the tab responsive.
pub const MAX_DEMO_TRIALS: u64 = 200;

fn load(alist: &str) -> Result<TannerCode, String> {
    if alist.trim().is_empty() {
        Ok(tanner_155())
    } else {
        parse_alist(alist).map_err(|e| format!("alist: {e}"))
    }
}

fn pcw_summary(p: &PseudoCodeword) -> Value {
    let coords: Vec<(usize, String)> = p.support().into_iter().map(|i| (i + 1, p.coords()[i].to_string())).collect();
    json!({
        "w_bsc": bsc_weight(p).ok().map(|w| w.w_bsc),
        "frac_weight": frac_weight(p).to_string(),
        "coords": coords,
    })
}

/// Decodes one 1-based comma separated flip list.
pub fn decode_json(alist: &str, flips: &str) -> Result<String, String> {
    let code = load(alist)?;
    let f = FlipSupport::parse_one_based(code.n(), flips).map_err(|e| format!("flips: {e}"))?;
    let out = Decoder::new(&code).decode(&f).map_err(|e| e.to_string())?;
    Ok(json!({
        "n": code.n(),
        "flips": f.one_based(),
        "kind": out.kind,
        "failure": out.is_failure(),
        "cost": out.cost.to_string(),
        "pcw": out.pcw.as_ref().map(pcw_summary),
    })
    .to_string())
}

/// One search from a random `k0`-flip start, with a per-step trace.
pub fn isa_json(alist: &str, k0: usize, seed: u64, trial: u64) -> Result<String, String> {
    let code = load(alist)?;
    if k0 == 0 || k0 > code.n() {
        return Err(format!("k0 must lie in 1..={}", code.n()));
    }
    let start = initiation(code.n(), k0, seed, trial);
    let r = match isa_run(&Decoder::new(&code), &start, RunKey { master_seed: seed, trial }) {
        Ok(r) => r,
        Err(IsaError::InsufficientNoise) => {
            return Ok(json!({ "status": "insufficient_noise", "initial": start.one_based() }).to_string());
        }
        Err(e) => return Err(e.to_string()),
    };
    let steps: Vec<Value> = r
        .trace
        .iter()
        .map(|s| {
            json!({
                "index": s.index,
                "input_weight": s.input_weight.w_bsc,
                "median": s.median.one_based(),
                "median_weight": s.median_weight.w_bsc,
                "next": match &s.chosen_next {
                    NextChoice::Median => "median".to_string(),
                    NextChoice::Subset(i) => format!("median without {}", i + 1),
                    NextChoice::Halt => "halt".to_string(),
                },
            })
        })
        .collect();
    Ok(json!({
        "status": "instanton",
        "initial": r.initial.one_based(),
        "instanton": r.instanton.one_based(),
        "final_weight": r.final_weight.w_bsc,
        "final_frac_weight": frac_weight(&r.final_pcw).to_string(),
        "steps": steps,
    })
    .to_string())
}

/// A small batch and its bar table.
pub fn bars_json(alist: &str, k0: usize, trials: u64, seed: u64) -> Result<String, String> {
    if trials > MAX_DEMO_TRIALS {
        return Err(format!("at most {MAX_DEMO_TRIALS} trials in the browser; use the command line for more"));
    }
    let code = load(alist)?;
    let dec = Decoder::new(&code);
    let results = run_trials(&dec, k0, trials, seed, 1).map_err(|e| e.to_string())?;
    let report = BatchReport::from_trials(&dec, k0, seed, &results, false).map_err(|e| e.to_string())?;
    let sizes: std::collections::BTreeSet<usize> =
        report.frequency_bars.keys().chain(report.unique_bars.keys()).copied().collect();
    let bars: Vec<Value> = sizes
        .into_iter()
        .map(|s| json!({ "size": s, "frequency_count": report.frequency_at(s), "unique_count": report.unique_at(s) }))
        .collect();
    Ok(json!({ "trials": trials, "distinct": report.records.len(), "bars": bars }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn decode(alist: &str, flips: &str) -> Result<String, JsError> {
    js(decode_json(alist, flips))
}

#[wasm_bindgen]
pub fn isa(alist: &str, k0: usize, seed: u64, trial: u64) -> Result<String, JsError> {
    js(isa_json(alist, k0, seed, trial))
}

#[wasm_bindgen]
pub fn bars(alist: &str, k0: usize, trials: u64, seed: u64) -> Result<String, JsError> {
    js(bars_json(alist, k0, trials, seed))
}
