//! Runs the fourteen reproducibility criteria and prints one line each.

use lateral_casimir::validation::{run_criterion, ValidationOptions, CRITERIA};

#[test]
fn acceptance() {
    let opts = ValidationOptions::default();
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let report = run_criterion(id, &opts).expect("criterion runs");
        println!("{report}");
        if !report.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
