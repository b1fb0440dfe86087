//! `instanton`: LP decoding, instanton search and pseudo-codeword analysis
//! from the command line.
//!
//! Positions on the command line and in all output are 1-based.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use instanton_core::analysis::{bsc_weight, fractional_distance, frac_weight, max_frac_weight, FacetFamily};
use instanton_core::code::alist::{parse_alist, write_alist};
use instanton_core::code::{tanner_155, TannerCode};
use instanton_core::decoder::{DecodeOutcome, Decoder, FlipSupport, PseudoCodeword, Rational};
use instanton_core::experiment::{brute_force_instantons, run_batch, ExperimentError, DEFAULT_ORACLE_CAP};
use instanton_core::isa::{isa_run, IsaError, RunKey};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_DECODE_FAILURE: u8 = 2;
const EXIT_INSUFFICIENT_NOISE: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "instanton", version, about = "LP decoding and instanton search for LDPC codes on the BSC")]
#[command(after_help = "Exit codes: 0 success or all-zero decode, 1 usage error, 2 decoding failure, \
                        3 insufficient noise, 4 solver or internal error.")]
struct Cli {
    /// Print JSON lines instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CodeArg {
    /// The built-in code `tanner155` or the path of an alist file.
    #[arg(long)]
    code: String,
}

#[derive(Subcommand)]
enum Command {
    /// LP-decode one flip pattern of the all-zero codeword.
    Decode {
        #[command(flatten)]
        code: CodeArg,
        /// Comma separated 1-based flipped positions; empty for none.
        #[arg(long, allow_hyphen_values = true)]
        flips: String,
    },
    /// Run the instanton search once.
    #[command(group = clap::ArgGroup::new("start").required(true).args(["k0", "flips"]))]
    Isa {
        #[command(flatten)]
        code: CodeArg,
        /// Draw a random initial pattern with this many flips.
        #[arg(long)]
        k0: Option<usize>,
        /// Start from these 1-based positions instead.
        #[arg(long)]
        flips: Option<String>,
        #[arg(long)]
        seed: u64,
        /// Trial index; selects the random streams together with the seed.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Write the full step trace as JSON to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run many independent trials and write the report and bar table.
    Batch {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long)]
        k0: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Directory for report.json and bars.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core. Results do not depend on it.
        #[arg(long, env = "INSTANTON_WORKERS", default_value_t = 0)]
        workers: usize,
        /// Keep every trial's step trace in the report.
        #[arg(long)]
        traces: bool,
    },
    /// Compute the fractional distance exactly.
    Dfrac {
        #[command(flatten)]
        code: CodeArg,
        /// Facets to tighten; both by default.
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
    },
    /// List every instanton up to a size by exhaustive decoding.
    Oracle {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long)]
        max_size: usize,
        /// Refuse to run when more decodes than this would be needed.
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: u64,
    },
    /// Check an alist file and summarize the code it describes.
    Validate {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Parity,
    All,
}

impl From<FamilyArg> for FacetFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Parity => FacetFamily::Parity,
            FamilyArg::All => FacetFamily::All,
        }
    }
}

/// A command that stopped early, with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn solver(message: impl ToString) -> Self {
        Failure { code: EXIT_SOLVER, message: message.to_string() }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::BadK0 { .. } | ExperimentError::CapExceeded { .. } => Failure::usage(e.to_string()),
            _ => Failure::solver(e),
        }
    }
}

type CmdResult = Result<u8, Failure>;

struct Out {
    json: bool,
}

impl Out {
    /// Everything needed to rerun the command.
    fn header(&self, command: &str, code: &Loaded, params: Value) {
        if self.json {
            self.line(json!({
                "type": "header",
                "command": command,
                "code": code.label,
                "fingerprint": code.code.fingerprint(),
                "n": code.code.n(),
                "m": code.code.m(),
                "params": params,
            }));
        } else {
            let mut line = format!(
                "# instanton {command} code={} fingerprint={} n={} m={}",
                code.label,
                code.code.fingerprint(),
                code.code.n(),
                code.code.m()
            );
            if let Value::Object(map) = &params {
                for (k, v) in map {
                    match v {
                        Value::String(s) => line += &format!(" {k}={s:?}"),
                        other => line += &format!(" {k}={other}"),
                    }
                }
            }
            println!("{line}");
        }
    }

    fn line(&self, v: Value) {
        println!("{v}");
    }

    /// Prints `value` as a JSON line or `text` otherwise.
    fn emit(&self, value: Value, text: impl FnOnce() -> String) {
        if self.json {
            self.line(value);
        } else {
            println!("{}", text());
        }
    }
}

struct Loaded {
    label: String,
    code: TannerCode,
}

fn load_code(arg: &CodeArg) -> Result<Loaded, Failure> {
    let code = if arg.code == "tanner155" {
        tanner_155()
    } else {
        let text = std::fs::read_to_string(&arg.code).map_err(|e| Failure::usage(format!("{}: {e}", arg.code)))?;
        parse_alist(&text).map_err(|e| Failure::usage(format!("{}: {e}", arg.code)))?
    };
    Ok(Loaded { label: arg.code.clone(), code })
}

fn parse_flips(n: usize, text: &str) -> Result<FlipSupport, Failure> {
    FlipSupport::parse_one_based(n, text).map_err(|e| Failure::usage(format!("--flips: {e}")))
}

fn decimal(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn nonzero_coords(p: &PseudoCodeword) -> Vec<(usize, String)> {
    p.support().into_iter().map(|i| (i + 1, p.coords()[i].to_string())).collect()
}

fn describe_pcw(p: &PseudoCodeword) -> Value {
    let w = bsc_weight(p).ok();
    json!({
        "w_bsc": w.map(|w| w.w_bsc),
        "e": w.map(|w| w.e),
        "frac_weight": frac_weight(p).to_string(),
        "max_frac_weight": max_frac_weight(p).ok().map(|r| r.to_string()),
        "support_size": p.support().len(),
        "coords": nonzero_coords(p),
    })
}

fn outcome_json(out: &DecodeOutcome) -> Value {
    json!({
        "kind": out.kind,
        "cost": out.cost.to_string(),
        "pcw": out.pcw.as_ref().map(describe_pcw),
    })
}

fn outcome_text(out: &DecodeOutcome) -> String {
    let mut s = format!("kind: {:?}\ncost: {}", out.kind, out.cost);
    if let Some(p) = &out.pcw {
        if let Ok(w) = bsc_weight(p) {
            s += &format!("\nw_bsc: {} (median size {})", w.w_bsc, w.e);
        }
        s += &format!("\nfrac_weight: {}", frac_weight(p));
        if let Ok(m) = max_frac_weight(p) {
            s += &format!("\nmax_frac_weight: {m}");
        }
        let coords: Vec<String> = nonzero_coords(p).into_iter().map(|(i, v)| format!("{i}:{v}")).collect();
        s += &format!("\nnonzero: {}", coords.join(" "));
    }
    s
}

fn cmd_decode(out: &Out, code: &CodeArg, flips: &str) -> CmdResult {
    let code = load_code(code)?;
    let f = parse_flips(code.code.n(), flips)?;
    out.header("decode", &code, json!({ "flips": f.one_based() }));
    let result = Decoder::new(&code.code).decode(&f).map_err(Failure::solver)?;
    out.emit(json!({ "type": "decode", "outcome": outcome_json(&result) }), || outcome_text(&result));
    Ok(if result.is_failure() { EXIT_DECODE_FAILURE } else { EXIT_OK })
}

fn cmd_isa(
    out: &Out,
    code: &CodeArg,
    k0: Option<usize>,
    flips: Option<&str>,
    seed: u64,
    trial: u64,
    trace: Option<&Path>,
) -> CmdResult {
    let code = load_code(code)?;
    let n = code.code.n();
    let initial = match (k0, flips) {
        (_, Some(text)) => parse_flips(n, text)?,
        (Some(k0), None) => {
            if k0 == 0 || k0 > n {
                return Err(Failure::usage(format!("--k0 must lie in 1..={n}")));
            }
            instanton_core::experiment::initiation(n, k0, seed, trial)
        }
        (None, None) => return Err(Failure::usage("one of --k0 or --flips is required")),
    };
    let params = match k0 {
        Some(k0) if flips.is_none() => json!({ "k0": k0, "seed": seed, "trial": trial }),
        _ => json!({ "flips": initial.one_based(), "seed": seed, "trial": trial }),
    };
    out.header("isa", &code, params);
    let decoder = Decoder::new(&code.code);
    let result = match isa_run(&decoder, &initial, RunKey { master_seed: seed, trial }) {
        Ok(r) => r,
        Err(IsaError::InsufficientNoise) => {
            out.emit(json!({ "type": "isa", "status": "insufficient_noise", "initial": initial.one_based() }), || {
                format!("initial {initial} decodes to the all-zero codeword; use more flips")
            });
            return Ok(EXIT_INSUFFICIENT_NOISE);
        }
        Err(e) => return Err(Failure::solver(e)),
    };
    if let Some(path) = trace {
        let text = serde_json::to_string_pretty(&result).map_err(Failure::solver)?;
        std::fs::write(path, text + "\n").map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    let weights = result.weights();
    out.emit(
        json!({
            "type": "isa",
            "status": "instanton",
            "initial": result.initial.one_based(),
            "instanton": result.instanton.one_based(),
            "size": result.instanton.len(),
            "final_weight": result.final_weight.w_bsc,
            "final_frac_weight": frac_weight(&result.final_pcw).to_string(),
            "steps_used": result.steps_used,
            "weights": weights,
            "median_sizes": result.median_sizes(),
        }),
        || {
            let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
            format!(
                "initial: {} (k0={})\ninstanton: {}\nsize: {}\nfinal weight: {} (frac {})\nsteps: {}\nweights: {}",
                result.initial,
                result.k0,
                result.instanton,
                result.instanton.len(),
                result.final_weight.w_bsc,
                frac_weight(&result.final_pcw),
                result.steps_used,
                w.join(" > ")
            )
        },
    );
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_batch(
    out: &Out,
    code: &CodeArg,
    k0: usize,
    trials: u64,
    seed: u64,
    dir: Option<&Path>,
    workers: usize,
    traces: bool,
) -> CmdResult {
    let code = load_code(code)?;
    out.header("batch", &code, json!({ "k0": k0, "trials": trials, "seed": seed }));
    let decoder = Decoder::new(&code.code);
    let report = if traces {
        let results = instanton_core::experiment::run_trials(&decoder, k0, trials, seed, workers)?;
        let verifier = Decoder::new(&code.code);
        instanton_core::par::with_workers(workers, || {
            instanton_core::experiment::BatchReport::from_trials(&verifier, k0, seed, &results, true)
        })?
    } else {
        run_batch(&decoder, k0, trials, seed, workers)?
    };
    let csv = report.to_csv()?;
    if let Some(dir) = dir {
        let io = |e: std::io::Error| Failure::usage(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.json"), report.to_json()?).map_err(io)?;
        std::fs::write(dir.join("bars.csv"), &csv).map_err(io)?;
    }
    let c = &report.checks;
    out.emit(
        json!({
            "type": "batch",
            "runs_completed": c.runs_completed,
            "insufficient_noise": c.insufficient_noise,
            "solver_errors": c.solver_errors,
            "invariant_violations": c.invariant_violations,
            "verification_failures": c.verification_failures,
            "distinct_instantons": report.records.len(),
            "min_size": report.min_size(),
            "min_pcw_weight": report.min_pcw_weight(),
            "bars": report.frequency_bars.keys().chain(report.unique_bars.keys())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .map(|&s| json!({ "size": s, "frequency_count": report.frequency_at(s), "unique_count": report.unique_at(s) }))
                .collect::<Vec<_>>(),
        }),
        || {
            format!(
                "runs: {} completed, {} insufficient noise, {} solver errors, {} invariant violations\n\
                 distinct instantons: {} (smallest size {}, smallest weight {})\n{}",
                c.runs_completed,
                c.insufficient_noise,
                c.solver_errors,
                c.invariant_violations,
                report.records.len(),
                report.min_size().map_or("-".into(), |s| s.to_string()),
                report.min_pcw_weight().map_or("-".into(), |s| s.to_string()),
                csv.trim_end()
            )
        },
    );
    Ok(if c.clean() { EXIT_OK } else { EXIT_SOLVER })
}

fn cmd_dfrac(out: &Out, code: &CodeArg, family: Option<FamilyArg>) -> CmdResult {
    let code = load_code(code)?;
    let families: Vec<FacetFamily> = match family {
        Some(f) => vec![f.into()],
        None => vec![FacetFamily::Parity, FacetFamily::All],
    };
    out.header("dfrac", &code, json!({}));
    let decoder = Decoder::new(&code.code);
    for family in families {
        let name = match family {
            FacetFamily::Parity => "parity",
            FacetFamily::All => "all",
        };
        match fractional_distance(&decoder, family).map_err(Failure::solver)? {
            Some(d) => {
                let w = bsc_weight(&d.argmin).ok().map(|w| w.w_bsc);
                out.emit(
                    json!({
                        "type": "dfrac",
                        "family": family,
                        "value": d.value.to_string(),
                        "decimal": decimal(&d.value),
                        "facets_checked": d.facets_checked,
                        "argmin_w_bsc": w,
                        "argmin": describe_pcw(&d.argmin),
                    }),
                    || {
                        format!(
                            "{name}: d_frac = {} ~ {:.6} over {} facets (argmin w_bsc {})",
                            d.value,
                            decimal(&d.value),
                            d.facets_checked,
                            w.map_or("-".into(), |w| w.to_string())
                        )
                    },
                );
            }
            None => out.emit(json!({ "type": "dfrac", "family": family, "value": null }), || {
                format!("{name}: no nonzero vertex on any candidate facet")
            }),
        }
    }
    Ok(EXIT_OK)
}

fn cmd_oracle(out: &Out, code: &CodeArg, max_size: usize, cap: u64) -> CmdResult {
    let code = load_code(code)?;
    out.header("oracle", &code, json!({ "max_size": max_size, "cap": cap }));
    let found = brute_force_instantons(&Decoder::new(&code.code), max_size, cap)?;
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &found {
        *by_size.entry(s.len()).or_default() += 1;
        out.emit(json!({ "type": "instanton", "support": s.one_based(), "size": s.len() }), || s.to_string());
    }
    out.emit(json!({ "type": "oracle_summary", "total": found.len(), "by_size": by_size }), || {
        let parts: Vec<String> = by_size.iter().map(|(s, c)| format!("size {s}: {c}")).collect();
        format!("total: {} ({})", found.len(), parts.join(", "))
    });
    Ok(EXIT_OK)
}

/// Pairs of checks sharing two or more variables, counted with multiplicity.
fn four_cycles(code: &TannerCode) -> usize {
    let mut count = 0;
    for a in 0..code.m() {
        for b in a + 1..code.m() {
            let shared = code.check(a).iter().filter(|v| code.check(b).contains(v)).count();
            count += shared * shared.saturating_sub(1) / 2;
        }
    }
    count
}

fn cmd_validate(out: &Out, path: &Path) -> CmdResult {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let code = match parse_alist(&text) {
        Ok(c) => c,
        Err(e) => {
            out.emit(json!({ "type": "validate", "valid": false, "error": e.to_string() }), || {
                format!("{}: invalid: {e}", path.display())
            });
            return Ok(EXIT_USAGE);
        }
    };
    let degrees = |it: &mut dyn Iterator<Item = usize>| -> (usize, usize) {
        it.fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)))
    };
    let (vmin, vmax) = degrees(&mut (0..code.n()).map(|i| code.var(i).len()));
    let (cmin, cmax) = degrees(&mut (0..code.m()).map(|j| code.check(j).len()));
    let mut warnings = Vec::new();
    let isolated: Vec<usize> = (0..code.n()).filter(|&i| code.var(i).is_empty()).map(|i| i + 1).collect();
    if !isolated.is_empty() {
        warnings.push(format!("variables in no check: {isolated:?}"));
    }
    let cycles = four_cycles(&code);
    if cycles > 0 {
        warnings.push(format!("{cycles} cycles of length 4"));
    }
    let normalize = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    if normalize(&write_alist(&code)) != normalize(&text) {
        warnings.push("not in canonical form (sorted adjacency, zero padded)".into());
    }
    let rank = code.gf2_rank();
    out.emit(
        json!({
            "type": "validate",
            "valid": true,
            "n": code.n(),
            "m": code.m(),
            "edges": code.num_edges(),
            "var_degree": [vmin, vmax],
            "check_degree": [cmin, cmax],
            "rank": rank,
            "dimension": code.dimension(),
            "fingerprint": code.fingerprint(),
            "warnings": warnings,
        }),
        || {
            let mut s = format!(
                "{}: valid\nn={} m={} edges={}\nvariable degree {}..{}, check degree {}..{}\nrank {} dimension {}\nfingerprint {}",
                path.display(),
                code.n(),
                code.m(),
                code.num_edges(),
                vmin,
                vmax,
                cmin,
                cmax,
                rank,
                code.dimension(),
                code.fingerprint()
            );
            for w in &warnings {
                s += &format!("\nwarning: {w}");
            }
            s
        },
    );
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let out = Out { json: cli.json };
    let result = match &cli.command {
        Command::Decode { code, flips } => cmd_decode(&out, code, flips),
        Command::Isa { code, k0, flips, seed, trial, trace } => {
            cmd_isa(&out, code, *k0, flips.as_deref(), *seed, *trial, trace.as_deref())
        }
        Command::Batch { code, k0, trials, seed, out: dir, workers, traces } => {
            cmd_batch(&out, code, *k0, *trials, *seed, dir.as_deref(), *workers, *traces)
        }
        Command::Dfrac { code, family } => cmd_dfrac(&out, code, *family),
        Command::Oracle { code, max_size, cap } => cmd_oracle(&out, code, *max_size, *cap),
        Command::Validate { path } => cmd_validate(&out, path),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if out.json {
                out.line(json!({ "type": "error", "exit_code": f.code, "message": f.message }));
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
