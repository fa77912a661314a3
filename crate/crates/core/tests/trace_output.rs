use continuum_core::io::trace::{
    report_json, write_candidates_csv, write_summary_csv, CANDIDATES_HEADER, SUMMARY_HEADER,
};
use continuum_core::io::{reference_scenario, write_trace, TraceFormat};
use continuum_core::orchestrator::Trace;
use continuum_core::{run, RunTrace, Scenario};

fn reference_trace() -> RunTrace {
    let s: Scenario = reference_scenario();
    run(&s).unwrap()
}

fn csv_rows(bytes: &[u8]) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(bytes)
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn empty_trace_writes_headers_only() {
    let t: Trace<f64> = Trace::default();
    let mut buf = Vec::new();
    write_summary_csv(&t, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", SUMMARY_HEADER.join(",")));
    let mut buf = Vec::new();
    write_candidates_csv(&t, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CANDIDATES_HEADER.join(",")));
}

#[test]
fn reference_summary_has_nine_rows() {
    let mut buf = Vec::new();
    write_summary_csv(&reference_trace(), &mut buf).unwrap();
    let rows = csv_rows(&buf);
    assert_eq!(rows.len(), 10);
    let ro: Vec<&str> = rows[1..].iter().map(|r| &r[5]).collect();
    assert_eq!(
        ro,
        ["Migration", "Scaling", "Scaling", "Scaling", "Migration", "None", "None", "Migration", "None"]
    );
    assert_eq!(&rows[1][2], "None");
    assert_eq!(&rows[1][1], "UE1 added");
}

#[test]
fn csv_and_json_agree() {
    let t = reference_trace();
    let mut buf = Vec::new();
    write_candidates_csv(&t, &mut buf).unwrap();
    let rows = csv_rows(&buf);
    let json = report_json(&t);
    let mut i = 1;
    for step in json["steps"].as_array().unwrap() {
        for c in step["candidates"].as_array().unwrap() {
            let row = &rows[i];
            assert_eq!(&row[2], c["placement"].as_str().unwrap());
            match c["f"].as_f64() {
                Some(f) => assert_eq!(row[8].parse::<f64>().unwrap(), f),
                None => {
                    assert_eq!(&row[8], "");
                    assert_eq!(&row[9], c["discard_reason"].as_str().unwrap());
                }
            }
            for (col, key) in [(4, "qos_norm"), (5, "cost_norm"), (6, "ro_norm")] {
                assert_eq!(row[col].parse::<f64>().unwrap(), c[key].as_f64().unwrap());
            }
            i += 1;
        }
    }
    assert_eq!(i, rows.len());
}

#[test]
fn write_trace_respects_format() {
    let t = reference_trace();
    let dir = tempfile::tempdir().unwrap();
    let csv_only = write_trace(&t, &dir.path().join("csv"), TraceFormat::Csv).unwrap();
    assert_eq!(csv_only.len(), 2);
    let all = write_trace(&t, &dir.path().join("all"), TraceFormat::All).unwrap();
    assert_eq!(all.len(), 3);
    let a = std::fs::read(dir.path().join("csv/summary.csv")).unwrap();
    let b = std::fs::read(dir.path().join("all/summary.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn discarded_rows_carry_the_constraint() {
    let t = reference_trace();
    let mut buf = Vec::new();
    write_candidates_csv(&t, &mut buf).unwrap();
    let rows = csv_rows(&buf);
    let e2_t5 = rows.iter().find(|r| &r[0] == "5" && &r[3] == "E2").unwrap();
    assert!(e2_t5[9].starts_with("RAC"));
    assert_eq!(&e2_t5[10], "false");
}
