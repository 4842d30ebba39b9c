use std::fs;
use std::path::Path;
use std::process::Command;

fn untangle(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_untangle")).args(args).output().unwrap();
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn genscene(dir: &Path, kind: &str, resolution: usize, frames: usize) {
    let code = untangle(&[
        "genscene",
        "--kind",
        kind,
        "--seed",
        "4",
        "--out",
        s(dir),
        "--resolution",
        &resolution.to_string(),
        "--frames",
        &frames.to_string(),
    ]);
    assert_eq!(code, 0);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|row| row.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn genscene_is_byte_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    genscene(&a, "piercedSheet", 12, 5);
    genscene(&b, "piercedSheet", 12, 5);
    for f in ["garment.obj", "body.mseq", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analyze_reports_clean_and_pierced_scenes() {
    let t = tempfile::tempdir().unwrap();
    let clean = t.path().join("clean");
    genscene(&clean, "stackedSheets", 8, 1);
    let csv = t.path().join("clean.csv");
    assert_eq!(untangle(&["analyze", "--in", s(&clean.join("garment.obj")), "--csv", s(&csv)]), 0);
    assert_eq!(csv_rows(&csv), vec![vec!["0", "0", "0.0", "0", "0", "162", "0"]]);

    let pierced = t.path().join("pierced");
    genscene(&pierced, "piercedSheet", 16, 1);
    let csv = t.path().join("pierced.csv");
    let contours = t.path().join("contours.obj");
    let code = untangle(&[
        "analyze",
        "--in",
        s(&pierced.join("garment.obj")),
        "--csv",
        s(&csv),
        "--contours",
        s(&contours),
    ]);
    assert_eq!(code, 3);
    let row = &csv_rows(&csv)[0];
    assert!(row[1].parse::<usize>().unwrap() > 0);
    assert!(row[4].parse::<usize>().unwrap() >= 1);
    assert!(fs::read_to_string(&contours).unwrap().contains("_closed"));
}

#[test]
fn analyze_gives_one_row_per_sequence_frame() {
    let t = tempfile::tempdir().unwrap();
    let scene = t.path().join("scene");
    genscene(&scene, "sphereBody", 6, 4);
    let csv = t.path().join("body.csv");
    assert_eq!(untangle(&["analyze", "--in", s(&scene.join("body.mseq")), "--csv", s(&csv)]), 0);
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().map(|r| r[0].clone()).collect::<Vec<_>>(), ["0", "1", "2", "3"]);
}

#[test]
fn resolve_output_analyzes_clean() {
    let t = tempfile::tempdir().unwrap();
    let scene = t.path().join("scene");
    genscene(&scene, "piercedSheet", 24, 1);
    let out = t.path().join("resolved.obj");
    let code = untangle(&[
        "resolve",
        "--in",
        s(&scene.join("garment.obj")),
        "--config",
        s(&scene.join("config.json")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0);
    let trajectory = csv_rows(&t.path().join("resolved.csv"));
    assert!(trajectory[0][1].parse::<usize>().unwrap() > 0);
    assert_eq!(trajectory.last().unwrap()[1], "0");
    let csv = t.path().join("check.csv");
    assert_eq!(untangle(&["analyze", "--in", s(&out), "--csv", s(&csv)]), 0);
}

fn simulate(scene: &Path, out: &Path, ablation: &str, extra: &[&str]) -> i32 {
    let (garment, body, config) = (scene.join("garment.obj"), scene.join("body.mseq"), scene.join("config.json"));
    let mut args = vec![
        "simulate",
        "--garment",
        s(&garment),
        "--body",
        s(&body),
        "--config",
        s(&config),
        "--ablation",
        ablation,
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    untangle(&args)
}

#[test]
fn simulate_dumps_every_nth_frame_and_repeats_exactly() {
    let t = tempfile::tempdir().unwrap();
    let scene = t.path().join("scene");
    genscene(&scene, "sphereBody", 10, 25);
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert_eq!(simulate(&scene, &a, "ours", &["--dump-every", "10"]), 0);
    assert_eq!(simulate(&scene, &b, "ours", &[]), 0);
    let mut dumped: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".obj"))
        .collect();
    dumped.sort();
    assert_eq!(dumped, ["frame_00000.obj", "frame_00010.obj", "frame_00020.obj"]);
    let stats = fs::read(a.join("stats.csv")).unwrap();
    assert_eq!(stats, fs::read(b.join("stats.csv")).unwrap());
    assert_eq!(csv_rows(&a.join("stats.csv")).len(), 25);
}

#[test]
fn ours_ends_with_no_more_intersections_than_no_ic_loss() {
    let t = tempfile::tempdir().unwrap();
    let scene = t.path().join("scene");
    genscene(&scene, "piercedSheet", 16, 10);
    let final_count = |ablation: &str| {
        let out = t.path().join(ablation);
        let code = simulate(&scene, &out, ablation, &[]);
        assert!(code == 0 || code == 3);
        csv_rows(&out.join("stats.csv")).last().unwrap()[1].parse::<usize>().unwrap()
    };
    let ours = final_count("ours");
    let no_ic = final_count("no-ic-loss");
    assert!(ours <= no_ic, "ours {ours}, no-ic-loss {no_ic}");
}

#[test]
fn input_errors_exit_with_two_and_write_nothing() {
    let t = tempfile::tempdir().unwrap();
    let scene = t.path().join("scene");
    genscene(&scene, "sphereBody", 6, 3);
    fs::remove_file(scene.join("body.mseq")).unwrap();
    let out = t.path().join("run");
    assert_eq!(simulate(&scene, &out, "ours", &[]), 2);
    assert!(!out.exists());

    genscene(&scene, "sphereBody", 6, 3);
    assert_eq!(simulate(&scene, &out, "fastest", &[]), 2);
    assert!(!out.exists());
    assert_eq!(untangle(&["genscene", "--kind", "teapot", "--out", s(&out)]), 2);
    assert_eq!(untangle(&["genscene", "--kind", "stackedSheets", "--resolution", "1", "--out", s(&out)]), 2);
    let csv = t.path().join("x.csv");
    assert_eq!(untangle(&["analyze", "--in", s(&t.path().join("none.obj")), "--csv", s(&csv)]), 2);
    fs::write(scene.join("config.json"), r#"{"solver": {"lamda_ic": 1.0}}"#).unwrap();
    assert_eq!(simulate(&scene, &out, "ours", &[]), 2);
}
