use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use hmf::forms::{CoeffNumber, Expansion};
use hmf::quadfield::{ideal_from_element, FieldContext};

fn run_in(dir: Option<&Path>, envs: &[(&str, &str)], args: &[&str]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hmf"));
    if let Some(d) = dir {
        cmd.current_dir(d);
    }
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.args(args).output().expect("spawn hmf");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn run(args: &[&str]) -> (i32, String, String) {
    run_in(None, &[], args)
}

fn load(path: &Path) -> Expansion {
    Expansion::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_64_and_help_exits_0() {
    let (code, _, _) = run(&["zeta", "--bogus"]);
    assert_eq!(code, 64);
    let (code, _, _) = run(&["no-such-command"]);
    assert_eq!(code, 64);
    let (code, _, _) = run(&[]);
    assert_eq!(code, 64);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("zeta"));
    let (code, _, _) = run(&["--version"]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["zeta", "--help"]);
    assert_eq!(code, 0);
}

#[test]
fn domain_errors_exit_2_with_a_diagnostic() {
    let (code, out, err) = run(&["zeta", "--d", "6", "--k", "2"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("not certified narrow-class-one with norm -1 unit"), "{err}");

    let (code, _, err) = run(&["zeta", "--d", "5", "--k", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("weight"), "{err}");

    let (code, _, err) = run(&["zeta", "--d", "12", "--k", "2"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");

    let (code, _, err) = run(&["eigencheck", "--form", "/no/such/file.json", "--weight", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("error:"), "{err}");
}

#[test]
fn zeta_prints_lowest_terms_rationals() {
    for (d, k, want) in [(5, 2, "1/30"), (13, 2, "1/6"), (17, 2, "1/3"), (13, 4, "29/60")] {
        let (code, out, _) = run(&["zeta", "--d", &d.to_string(), "--k", &k.to_string()]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), want, "d={d} k={k}");
    }
}

#[test]
fn expansion_files_round_trip_through_product_and_combine() {
    let dir = tempfile::tempdir().unwrap();
    let e2 = dir.path().join("e2.json");
    let e4 = dir.path().join("e4.json");
    let sq = dir.path().join("sq.json");
    let rebuilt = dir.path().join("rebuilt.json");
    for (k, path) in [(2, &e2), (4, &e4)] {
        let (code, _, _) = run(&[
            "eis", "--d", "5", "--k", &k.to_string(), "--bound", "25", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let (code, _, _) = run(&[
        "product", "--lhs", e2.to_str().unwrap(), "--rhs", e2.to_str().unwrap(), "--out",
        sq.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&[
        "combine", "--spec", "60*S",
        "--input", &format!("S={}", sq.display()),
        "--out", rebuilt.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(load(&rebuilt), load(&e4));

    // the emitted JSON is canonical: parsing and re-serializing is stable
    let text = fs::read_to_string(&e4).unwrap();
    assert_eq!(load(&e4).to_json(), text);
    assert!(!text.contains('\n'));

    // linear combinations cancel: 60*S - 1*E4 is the zero expansion
    let zero = dir.path().join("zero.json");
    let (code, _, _) = run(&[
        "combine", "--spec", "60*S-1*E",
        "--input", &format!("S={}", sq.display()),
        "--input", &format!("E={}", e4.display()),
        "--out", zero.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let z = load(&zero);
    assert!(z.constant_term.is_zero());
    assert!(z.coeffs.values().all(|c| c.is_zero()));
}

#[test]
fn combine_rejects_malformed_specs_and_unbound_names() {
    let dir = tempfile::tempdir().unwrap();
    let e2 = dir.path().join("e2.json");
    let out = dir.path().join("out.json");
    let (code, _, _) = run(&[
        "eis", "--d", "5", "--k", "2", "--bound", "16", "--out", e2.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let bind = format!("A={}", e2.display());
    for spec in ["", "A", "2*", "2*A 3*A", "1/0*A", "2*B"] {
        let (code, _, err) = run(&[
            "combine", "--spec", spec, "--input", &bind, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2, "spec {spec:?} should be rejected: {err}");
    }
    let (code, _, err) = run(&[
        "combine", "--spec", "2*A", "--input", "A", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("NAME=FILE"), "{err}");
}

#[test]
fn product_rejects_mismatched_fields_and_weights_add() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("d5.json");
    let b = dir.path().join("d13.json");
    let out = dir.path().join("out.json");
    let (code, _, _) = run(&["eis", "--d", "5", "--k", "2", "--bound", "16", "--out", a.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["eis", "--d", "13", "--k", "2", "--bound", "16", "--out", b.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _, err) = run(&[
        "product", "--lhs", a.to_str().unwrap(), "--rhs", b.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("different fields"), "{err}");

    let (code, _, _) = run(&[
        "product", "--lhs", a.to_str().unwrap(), "--rhs", a.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(load(&out).weight, 4);
}

#[test]
fn eigenforms_writes_one_file_per_label() {
    let dir = tempfile::tempdir().unwrap();
    let names = |k: i64| {
        let sub = dir.path().join(format!("w{k}"));
        let (code, _, err) = run(&[
            "eigenforms", "--d", "5", "--k", &k.to_string(), "--bound", "30", "--out-dir",
            sub.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "k={k}: {err}");
        let mut names: Vec<String> = fs::read_dir(&sub)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        names
    };
    assert_eq!(names(4), Vec::<String>::new());
    assert_eq!(names(6), vec!["h6.json"]);
    assert_eq!(names(10), vec!["h10.json", "h10p.json"]);
}

#[test]
fn eigencheck_reports_pass_fail_and_weight_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("w6");
    let (code, _, _) = run(&[
        "eigenforms", "--d", "5", "--k", "6", "--bound", "25", "--out-dir", sub.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let h6 = sub.join("h6.json");
    let (code, out, _) = run(&["eigencheck", "--form", h6.to_str().unwrap(), "--weight", "6"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "pass");

    let (code, _, err) = run(&["eigencheck", "--form", h6.to_str().unwrap(), "--weight", "8"]);
    assert_eq!(code, 2);
    assert!(err.contains("weight mismatch"), "{err}");

    // an unnormalized product fails with a named witness
    let e2 = dir.path().join("e2.json");
    let bad = dir.path().join("bad.json");
    let (code, _, _) = run(&["eis", "--d", "5", "--k", "2", "--bound", "25", "--out", e2.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&[
        "product", "--lhs", e2.to_str().unwrap(), "--rhs", h6.to_str().unwrap(), "--out",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (code, out, _) = run(&["eigencheck", "--form", bad.to_str().unwrap(), "--weight", "8"]);
    assert_eq!(code, 0);
    assert!(out.trim().starts_with("fail:"), "{out}");
}

#[test]
fn cache_round_trips_truncates_and_survives_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out40 = dir.path().join("e2_40.json");
    let out20 = dir.path().join("e2_20.json");
    let (code, _, _) = run(&[
        "--cache-dir", cache.to_str().unwrap(),
        "eis", "--d", "5", "--k", "2", "--bound", "40", "--out", out40.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let entry = cache.join("eis_d5_k2_b40.json");
    assert!(entry.exists());
    assert!(cache.join("eis_d5_k2_b40.json.sha256").exists());

    // a lower-bound request is served by truncating the stored expansion
    let (code, _, _) = run(&[
        "--cache-dir", cache.to_str().unwrap(),
        "eis", "--d", "5", "--k", "2", "--bound", "20", "--out", out20.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let got = load(&out20);
    assert_eq!(got.bound, 20);
    let ctx = Arc::new(FieldContext::certified(5, 50).unwrap());
    let two = ideal_from_element(&ctx, (2, 0)).unwrap();
    assert_eq!(*got.coefficient(&two).unwrap(), CoeffNumber::from_int(5));

    // corrupting the stored entry produces a warning and a clean recompute
    let mut bytes = fs::read(&entry).unwrap();
    let n = bytes.len();
    bytes[n / 2] ^= 0x20;
    fs::write(&entry, bytes).unwrap();
    let (code, _, err) = run(&[
        "--cache-dir", cache.to_str().unwrap(),
        "eis", "--d", "5", "--k", "2", "--bound", "40", "--out", out40.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("warning:"), "{err}");
    assert_eq!(load(&out40).bound, 40);

    // the recompute repaired the entry
    let (code, _, err) = run(&[
        "--cache-dir", cache.to_str().unwrap(),
        "eis", "--d", "5", "--k", "2", "--bound", "40", "--out", out40.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(err.is_empty(), "{err}");
}

#[test]
fn cache_directory_comes_from_the_environment_when_unflagged() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("envcache");
    let out = dir.path().join("e4.json");
    let (code, _, _) = run_in(
        None,
        &[("HMF_CACHE", cache.to_str().unwrap())],
        &["eis", "--d", "5", "--k", "4", "--bound", "20", "--out", out.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    assert!(cache.join("eis_d5_k4_b20.json").exists());

    // eigenform runs store one entry per label
    let sub = dir.path().join("w10");
    let (code, _, _) = run_in(
        None,
        &[("HMF_CACHE", cache.to_str().unwrap())],
        &["eigenforms", "--d", "5", "--k", "10", "--bound", "20", "--out-dir", sub.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    assert!(cache.join("eigenform_d5_k10_h10_b20.json").exists());
    assert!(cache.join("eigenform_d5_k10_h10p_b20.json").exists());
}

#[test]
fn verify_emits_identity_and_refutation_json() {
    let (code, out, _) = run(&["verify", "--d", "5", "--f", "E2", "--h", "h6", "--bound", "30"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["identity"]["g"], "h8");
    assert_eq!(v["identity"]["scalar"], "1/120");

    let (code, out, _) = run(&["verify", "--d", "5", "--f", "E4", "--h", "E4", "--bound", "30"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert!(v["refuted"]["witness"].as_str().unwrap().contains("recurrence fails"));

    let (code, _, err) = run(&["verify", "--d", "5", "--f", "E3", "--h", "E2", "--bound", "30"]);
    assert_eq!(code, 2);
    assert!(err.contains("weight"), "{err}");

    let (code, _, err) = run(&["verify", "--d", "5", "--f", "h4", "--h", "E2", "--bound", "30"]);
    assert_eq!(code, 2);
    assert!(err.contains("no eigenform"), "{err}");

    let (code, _, err) = run(&["verify", "--d", "5", "--f", "x6", "--h", "E2", "--bound", "30"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown form label"), "{err}");
}

#[test]
fn search_without_out_prints_the_report_to_stdout() {
    let (code, out, _) = run(&["search", "--d", "5", "--max-weight", "6", "--bound", "20"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["d"], 5);
    assert_eq!(v["max_weight"], 6);
    assert_eq!(v["identities"].as_array().unwrap().len(), 1);
    assert_eq!(v["identities"][0]["g"], "E4");
    assert!(out.trim().starts_with("{\"bound\":20,\"d\":5,"));
}

#[test]
fn bounds_scan_prints_certificates_to_stdout() {
    let (code, out, _) = run(&["bounds", "--dmin", "5", "--dmax", "8", "--max-weight", "12"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let certs = v["certificates"].as_array().unwrap();
    assert!(!certs.is_empty());
    assert!(certs.iter().all(|c| c["D"] == 5 || c["D"] == 8));
    assert!(certs.iter().any(|c| c["rule"] == "eis-eis-ramified-two-gap"));
}
