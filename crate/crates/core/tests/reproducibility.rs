use bpsim::experiments::{run, write_output, ExperimentSpec};
use bpsim::Execution;

fn small_fig3(seed: u64, exec: Execution) -> ExperimentSpec {
    let mut s = ExperimentSpec::named("fig3", seed)
        .unwrap()
        .with_sweep("seeds", vec![0.0, 1.0])
        .with_sweep("step_fraction", vec![0.1, 0.2, 0.4, 0.8])
        .with_sweep("arrival_fraction", vec![0.1, 0.2]);
    s.exec = exec;
    s
}

fn files(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, spec) in [
        ("fig1e", ExperimentSpec::named("fig1e", 3).unwrap()),
        ("fig3", small_fig3(3, Execution::Auto)),
    ] {
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        write_output(&a, &spec, &run(&spec).unwrap()).unwrap();
        write_output(&b, &spec, &run(&spec).unwrap()).unwrap();
        assert_eq!(files(&a.join(name)), files(&b.join(name)), "{name}");
    }
}

#[test]
fn parallel_and_sequential_agree() {
    let a = run(&small_fig3(5, Execution::Sequential)).unwrap();
    let b = run(&small_fig3(5, Execution::Parallel)).unwrap();
    for (x, y) in a.tables.iter().zip(&b.tables) {
        assert_eq!(x.to_csv(), y.to_csv(), "{}", x.name);
    }
}

#[test]
fn manifest_records_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::named("fig1e", 9).unwrap();
    write_output(tmp.path(), &spec, &run(&spec).unwrap()).unwrap();
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fig1e/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiment"], "fig1e");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["inputs_sha256"], spec.inputs_hash());
    let listed: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert!(listed.contains(&"roots.csv") && listed.contains(&"summary.txt"));
    let other = ExperimentSpec::named("fig1e", 10).unwrap();
    assert_ne!(spec.inputs_hash(), other.inputs_hash());
}

#[test]
fn output_filter_limits_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::named("fig1e", 0).unwrap();
    spec.outputs = vec!["bp".into()];
    write_output(tmp.path(), &spec, &run(&spec).unwrap()).unwrap();
    let names: Vec<String> = files(&tmp.path().join("fig1e")).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["bp.csv", "manifest.json", "summary.txt"]);
}
