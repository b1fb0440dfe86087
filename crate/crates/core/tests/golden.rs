//! Byte-for-byte comparisons against checked-in files. Run with
//! `UPDATE_GOLDEN=1` to rewrite them after an intended format change.

use std::path::PathBuf;

use instanton_core::code::alist::{parse_alist, write_alist};
use instanton_core::code::{build_qc_code, tanner_155, QcSpec};
use instanton_core::decoder::Decoder;
use instanton_core::experiment::{run_batch, BatchReport};

fn path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn check(rel: &str, actual: &str) {
    let p = path(rel);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&p, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    assert_eq!(actual, expected, "{} differs from the generated output", p.display());
}

fn small_report() -> BatchReport {
    let spec = QcSpec {
        rows: 2,
        cols: 3,
        circulant_size: 4,
        exponents: vec![vec![0, 0, 0], vec![0, 1, 2]],
    };
    let code = build_qc_code(&spec).unwrap();
    run_batch(&Decoder::new(&code), 4, 12, 2024, 1).unwrap()
}

#[test]
fn tanner_alist() {
    let text = write_alist(&tanner_155());
    check("data/tanner155.alist", &text);
    assert_eq!(parse_alist(&text).unwrap(), tanner_155());
}

#[test]
fn batch_report_json() {
    let report = small_report();
    let json = report.to_json().unwrap();
    check("tests/golden/small_batch.json", &json);
    assert_eq!(BatchReport::from_json(&json).unwrap(), report);
}

#[test]
fn batch_report_csv() {
    check("tests/golden/small_batch.csv", &small_report().to_csv().unwrap());
}

#[test]
fn wrong_schema_version_is_rejected() {
    let json = small_report().to_json().unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(BatchReport::from_json(&json).is_err());
}
