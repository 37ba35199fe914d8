//! On-disk round trips and the stability of the JSON schemas other tools
//! consume: protocol files, verification reports, and claim tables.

use std::fs;

use locmeas::engine::result_distribution;
use locmeas::protocols::{shipped_ids, shipped_protocol};
use locmeas::report::ClaimRow;
use locmeas::serial::{protocol_from_str, protocol_to_string};
use locmeas::state::haar_random_state;
use locmeas::verify::{check_born_equivalence, spanning_inputs};
use locmeas::MeasurementBasis;

#[test]
fn protocol_files_survive_a_disk_round_trip_bit_for_bit() {
    let dir = std::env::temp_dir().join(format!("locmeas-io-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    for id in shipped_ids() {
        let protocol = shipped_protocol(&id).unwrap();
        let path = dir.join(format!("{}.json", id.replace(':', "-")));
        fs::write(&path, protocol_to_string(&protocol)).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        let reloaded = protocol_from_str(&text).unwrap();

        // Canonical form is identical...
        assert_eq!(
            protocol_to_string(&protocol),
            protocol_to_string(&reloaded),
            "{id} drifted through the file system"
        );
        // ...and so are the statistics, with no rounding slack at all.
        let input = haar_random_state(protocol.input_slots.len(), 12).unwrap();
        assert_eq!(
            result_distribution(&protocol, &input).unwrap(),
            result_distribution(&reloaded, &input).unwrap()
        );
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn reloaded_protocols_still_pass_verification() {
    let original = shipped_protocol("twisted").unwrap();
    let reloaded = protocol_from_str(&protocol_to_string(&original)).unwrap();
    let target: MeasurementBasis = locmeas::basis::twisted_basis();
    let inputs = spanning_inputs(2, Some(&target), 5).unwrap();
    let report = check_born_equivalence(&reloaded, &target, &inputs).unwrap();
    assert!(report.passed());
}

#[test]
fn verification_reports_expose_the_agreed_schema() {
    let protocol = shipped_protocol("bsm").unwrap();
    let target = locmeas::basis::bell_basis();
    let inputs = spanning_inputs(2, Some(&target), 3).unwrap();
    let report = check_born_equivalence(&protocol, &target, &inputs).unwrap();
    let value = serde_json::to_value(&report).unwrap();

    let obj = value.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "check",
            "runtime_ms",
            "seed_list",
            "tolerance",
            "verdict",
            "witnesses"
        ]
    );
    assert_eq!(obj["verdict"], "pass");
    assert!(obj["seed_list"].as_array().unwrap().len() == 3);

    let witness = value["witnesses"][0].as_object().unwrap();
    let mut wkeys: Vec<&str> = witness.keys().map(|k| k.as_str()).collect();
    wkeys.sort_unstable();
    assert_eq!(wkeys, ["gap", "input_id", "kick"]);
}

#[test]
fn claim_rows_round_trip_through_json() {
    let row = ClaimRow {
        id: "example".into(),
        statement: "statement".into(),
        computed: "1.0".into(),
        expected: "1.0".into(),
        pass: true,
    };
    let text = serde_json::to_string(&row).unwrap();
    let back: ClaimRow = serde_json::from_str(&text).unwrap();
    assert_eq!(back.id, row.id);
    assert!(back.pass);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut keys: Vec<&str> = value
        .as_object()
        .unwrap()
        .keys()
        .map(|k| k.as_str())
        .collect();
    keys.sort_unstable();
    assert_eq!(keys, ["computed", "expected", "id", "pass", "statement"]);
}

#[test]
fn truncated_or_misshapen_files_are_rejected() {
    let good = protocol_to_string(&shipped_protocol("bsm").unwrap());
    let truncated = &good[..good.len() / 2];
    assert!(protocol_from_str(truncated).is_err());
    assert!(protocol_from_str("42").is_err());
    assert!(protocol_from_str(r#"{"name": "x"}"#).is_err());
}
