//! Golden-file tests for the `weakcm` binary. Set `UPDATE_GOLDEN=1` to
//! regenerate `tests/data/golden`.

use std::path::{Path, PathBuf};
use std::process::Command;

use weakcm_cli::Report;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn run(args: &[&str]) -> (String, i32) {
    let inputs = data().join("inputs");
    let args: Vec<String> = args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(f) => inputs.join(f).to_string_lossy().into_owned(),
            None => a.to_string(),
        })
        .collect();
    let out = Command::new(env!("CARGO_BIN_EXE_weakcm"))
        .args(&args)
        .env_remove("WEAKCM_SQUAREFREE_BOUND")
        .output()
        .expect("binary runs");
    (String::from_utf8(out.stdout).expect("utf-8 output"), out.status.code().expect("exit code"))
}

// (golden name, arguments, exit code); `@file` names an input document.
const CASES: &[(&str, &[&str], i32)] = &[
    ("classify_quadratic", &["classify-field", "--input", "@field_quadratic.json"], 0),
    ("classify_biquadratic", &["classify-field", "--input", "@field_biquadratic.json"], 0),
    ("classify_cyclic", &["classify-field", "--input", "@field_cyclic.json"], 0),
    ("classify_nongalois", &["classify-field", "--input", "@field_nongalois.json"], 0),
    ("classify_bad_d", &["classify-field", "--input", "@field_bad_d.json"], 1),
    ("galois_cyclic", &["galois", "--input", "@field_cyclic.json"], 0),
    ("galois_nongalois", &["galois", "--input", "@field_nongalois.json"], 0),
    ("galois_malformed", &["galois", "--input", "@malformed.json"], 1),
    ("reflex_cyclic", &["reflex", "--input", "@field_cyclic.json"], 0),
    ("reflex_nongalois", &["reflex", "--input", "@field_nongalois.json"], 0),
    ("reflex_quadratic", &["reflex", "--input", "@field_quadratic.json"], 1),
    ("split_case_a", &["split", "--input", "@torus_case_a.json"], 0),
    ("split_case_a_text", &["split", "--input", "@torus_case_a.json", "--emit", "text"], 0),
    ("split_deg2", &["split", "--input", "@torus_deg2.json"], 0),
    ("split_case_b_odd", &["split", "--input", "@torus_case_b_odd.json"], 1),
    ("validate_case_a", &["validate", "--input", "@torus_case_a.json"], 0),
    ("validate_proper_subfield", &["validate", "--input", "@torus_proper_subfield.json"], 1),
    ("dodson_enum_2", &["dodson-enum", "--n", "2"], 0),
    ("dodson_enum_bound", &["dodson-enum", "--n", "5"], 2),
    ("classify_k3_2", &["dodson-classify", "--n", "2", "--partition", "k3"], 0),
    ("classify_abl_2", &["dodson-classify", "--n", "2", "--partition", "abl"], 0),
    ("classify_cy3_3", &["dodson-classify", "--n", "3", "--partition", "cy3", "--threads", "2"], 0),
    ("classify_abl_3", &["dodson-classify", "--n", "3", "--partition", "abl", "--emit", "text"], 0),
    (
        "classify_blocks",
        &["dodson-classify", "--n", "2", "--partition", r#"[{"p":2,"q":0,"slots":[1]},{"p":0,"q":2,"slots":[-1]},{"p":1,"q":1,"slots":[2,-2]}]"#],
        0,
    ),
    ("dodson_reflex_iii", &["dodson-reflex", "--input", "@cm_type_iii.json"], 0),
    ("presets", &["presets"], 0),
    ("preset_unknown", &["presets", "--id", "nope"], 1),
    ("k3t2_disjoint", &["k3t2", "--input", "@k3t2_disjoint.json"], 0),
    ("k3t2_contained", &["k3t2", "--input", "@k3t2_contained.json"], 0),
    ("product_curves", &["product", "--input", "@product_curves.json"], 0),
    ("weil_griffiths", &["weil-griffiths", "--input", "@weight3_cyclic.json"], 0),
    ("weil_griffiths_mixed", &["weil-griffiths", "--input", "@weight3_mixed.json"], 0),
];

#[test]
fn golden_outputs() {
    let golden = data().join("golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut failures = Vec::new();
    for (name, args, code) in CASES {
        let (out, got) = run(args);
        if got != *code {
            failures.push(format!("{name}: exit {got}, expected {code}\n{out}"));
            continue;
        }
        let ext = if args.contains(&"text") { "txt" } else { "json" };
        let path = golden.join(format!("{name}.{ext}"));
        if update {
            std::fs::write(&path, &out).unwrap();
        } else {
            match std::fs::read_to_string(&path) {
                Ok(expected) if expected == out => {}
                Ok(_) => failures.push(format!("{name}: output differs from {}", path.display())),
                Err(e) => failures.push(format!("{name}: {e}")),
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn json_reports_parse_and_reserialize() {
    for (name, args, _) in CASES.iter().filter(|(_, a, _)| !a.contains(&"text")) {
        let (out, _) = run(args);
        let r: Report = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(r.status == weakcm_cli::Status::Ok, r.payload.is_some(), "{name}");
        assert_eq!(weakcm_cli::render(&r, weakcm_cli::Emit::Json), out, "{name}");
    }
}

#[test]
fn output_is_deterministic() {
    let args: &[&str] = &["dodson-classify", "--n", "3", "--partition", "cy3", "--threads", "4"];
    let (a, _) = run(args);
    let (b, _) = run(&["dodson-classify", "--n", "3", "--partition", "cy3", "--threads", "1"]);
    assert_eq!(a, b);
}

#[test]
fn split_writes_certificate_file() {
    let dir = std::env::temp_dir().join(format!("weakcm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cert.json");
    let (out, code) = run(&["split", "--input", "@torus_case_a.json", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "split: verified: true");
    let r: Report = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let cert = &r.payload.unwrap()["certificate"];
    assert_eq!(cert["case"], "A");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn squarefree_bound_from_environment() {
    let inputs = data().join("inputs");
    let out = Command::new(env!("CARGO_BIN_EXE_weakcm"))
        .args(["classify-field", "--input"])
        .arg(inputs.join("field_large_d.json"))
        .env("WEAKCM_SQUAREFREE_BOUND", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.diagnostics[0].condition, "square-free-inconclusive");
}

#[test]
fn bad_arguments_exit_nonzero() {
    let (_, code) = run(&["dodson-classify", "--n", "3", "--partition", "nope"]);
    assert_eq!(code, 1);
    let (_, code) = run(&["split", "--input", "@does_not_exist.json"]);
    assert_eq!(code, 1);
    let out = Command::new(env!("CARGO_BIN_EXE_weakcm")).arg("frobnicate").output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}
