use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use voltfloor::formats::{parse_blocks, parse_floorplan, parse_nets, parse_shifters};
use voltfloor::pipeline::{FLOORPLAN_FILE, REPORT_FILE, SHIFTERS_FILE, SVG_FILE};
use voltfloor::report::{parse_report, COLUMNS};
use voltfloor_core::model::decompose_multipin;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn voltfloor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voltfloor")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run(dir: &Path, name: &str, extra: &[&str]) -> Output {
    let (b, n, sp) = (fixture(&format!("{name}.blocks")), fixture(&format!("{name}.nets")), fixture(&format!("{name}.spec")));
    let mut args = vec!["run", "--blocks", s(&b), "--nets", s(&n), "--spec", s(&sp), "--seed", "42", "--out-dir", s(dir)];
    args.extend_from_slice(extra);
    voltfloor(&args)
}

#[test]
fn fixture_files_parse() {
    let blocks = parse_blocks(&std::fs::read_to_string(fixture("n10.blocks")).unwrap()).unwrap();
    assert_eq!(blocks.len(), 10);
    let names: Vec<String> = (0..10).map(|i| format!("sb{i}")).collect();
    assert_eq!(blocks.iter().map(|b| b.name.clone()).collect::<Vec<_>>(), names);

    let small = parse_blocks(&std::fs::read_to_string(fixture("small.blocks")).unwrap()).unwrap();
    let raw = parse_nets(&std::fs::read_to_string(fixture("small.nets")).unwrap(), &small).unwrap();
    assert_eq!(raw.len(), 3);
    assert_eq!(decompose_multipin(&raw).unwrap().len(), 5);
}

#[test]
fn single_module_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "single", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_report(&std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].ls_number, 0);
    assert_eq!(rows[0].ilo_percent, num_rational::Ratio::from_integer(0));
    // slowest level plus its shifter overhead
    assert_eq!(rows[0].power_cost, 381);
    let svg = std::fs::read_to_string(dir.path().join(SVG_FILE)).unwrap();
    assert_eq!(svg.matches("<rect").count(), 2);
}

#[test]
fn artifacts_reparse_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "n10", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fp = parse_floorplan(&std::fs::read_to_string(dir.path().join(FLOORPLAN_FILE)).unwrap()).unwrap();
    fp.floorplan.check_tiling().unwrap();
    assert_eq!(fp.names.len(), 10);
    let shifters = parse_shifters(&std::fs::read_to_string(dir.path().join(SHIFTERS_FILE)).unwrap()).unwrap();
    for sh in shifters.iter().filter(|s| s.room.is_some()) {
        let room = &fp.floorplan.rooms[fp.names.iter().position(|n| Some(n) == sh.room.as_ref()).unwrap()];
        assert!(room.rect.contains(&sh.rect) && !room.module_rect().overlaps(&sh.rect));
    }

    let svg = dir.path().join("again.svg");
    let r = voltfloor(&[
        "render",
        "--floorplan",
        s(&dir.path().join(FLOORPLAN_FILE)),
        "--shifters",
        s(&dir.path().join(SHIFTERS_FILE)),
        "--out",
        s(&svg),
    ]);
    assert!(r.status.success());
    let rendered = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(rendered, std::fs::read_to_string(dir.path().join(SVG_FILE)).unwrap());
    assert_eq!(rendered.matches("<rect").count(), 2 * 10 + shifters.len());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.blocks");
    std::fs::write(&bad, "a 1\n").unwrap();
    let out = voltfloor(&[
        "run",
        "--blocks",
        s(&bad),
        "--nets",
        s(&fixture("n10.nets")),
        "--spec",
        s(&fixture("n10.spec")),
        "--seed",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let out = run(dir.path(), "n10", &["--tcycle", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("timing infeasible") && err.contains("sb"), "{err}");

    let out = voltfloor(&["gen-spec", "--blocks", s(&fixture("n10.blocks")), "--nets", s(&fixture("n10.nets"))]);
    assert_eq!(out.status.code(), Some(2), "--seed is required");
}

#[test]
fn gen_spec_is_reproducible() {
    let (b, n) = (fixture("n10.blocks"), fixture("n10.nets"));
    let args = ["gen-spec", "--blocks", s(&b), "--nets", s(&n), "--seed", "10"];
    let a = voltfloor(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, voltfloor(&args).stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap(), std::fs::read_to_string(fixture("n10.spec")).unwrap());
}

#[test]
fn report_merges_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&a, "n10", &[]).status.success());
    assert!(run(&b, "n10", &["--k", "2", "--dataset", "n10-k2"]).status.success());
    let out = voltfloor(&["report", s(&a.join(REPORT_FILE)), s(&b.join(REPORT_FILE))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], COLUMNS.join(","));
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("n10-k2,2,"));
    assert!(lines[3].starts_with("Avg,,"));
    let pretty = voltfloor(&["report", "--pretty", s(&a.join(REPORT_FILE))]);
    assert!(String::from_utf8(pretty.stdout).unwrap().starts_with("dataset"));
}

#[test]
fn convert_and_bench_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let blocks = dir.path().join("x.blocks");
    let nets = dir.path().join("x.nets");
    std::fs::write(&blocks, "UCSC blocks 1.0\nNumHardRectilinearBlocks : 2\nbk1 hardrectilinear 4 (0, 0) (0, 5) (7, 5) (7, 0)\nbk2 softrectangular 36 1.0 1.0\np1 terminal\n").unwrap();
    std::fs::write(&nets, "UCSC nets 1.0\nNumNets : 1\nNetDegree : 3\nbk2 B\np1 B\nbk1 B\n").unwrap();
    let out_dir = dir.path().join("plain");
    let out = voltfloor(&["convert", "--blocks", s(&blocks), "--nets", s(&nets), "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(out_dir.join("x.blocks")).unwrap(), "bk1 7 5\nbk2 6 6\n");
    assert_eq!(std::fs::read_to_string(out_dir.join("x.nets")).unwrap(), "net bk1 bk2\n");

    let out = voltfloor(&["gen-bench", "--modules", "10", "--seed", "10", "--out-dir", s(dir.path())]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("n10.blocks")).unwrap(),
        std::fs::read_to_string(fixture("n10.blocks")).unwrap()
    );
}
