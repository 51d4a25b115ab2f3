mod common;

use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgmflow::pixelio::{load_disparity, save_disparity, save_pgm};
use sgmflow::{DisparityMap, GrayImage, INVALID};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgmflow"))
        .args(args)
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn estimate_reproduces_the_reference_runtime() {
    let out = run(&[
        "estimate", "--cost", "census", "--win", "5", "--dmax", "64", "--uf", "16", "--width",
        "1242", "--height", "374",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("cycles 1858131\n"), "{stdout}");
    assert!(stdout.contains("runtime 0.0062 s"), "{stdout}");
    assert!(stdout.contains("fps 161\n"), "{stdout}");
}

#[test]
fn estimate_reads_config_files_and_reports_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c0.cfg");
    std::fs::write(&cfg, "# dmax/uf = 4\ncost=census\nwin=5\ndmax=128\nuf=32\n").unwrap();
    let out = run(&["estimate", "--config", p(&cfg)]);
    assert!(text(&out.stdout).contains("cycles 1858131\n"));
    let out = run(&["estimate", "--config", p(&cfg), "--win", "4", "--uf", "48"]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("odd") && err.contains("uf=48"), "{err}");
    let out = run(&["estimate", "--config", p(&dir.path().join("missing.cfg"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one() {
    let out = run(&["estimate", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("Usage"));
    assert_eq!(run(&["teleport"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for cmd in ["match", "sweep", "estimate", "eval"] {
        assert!(text(&help.stdout).contains(cmd));
    }
}

#[test]
fn match_writes_a_disparity_map() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pair = common::shifted_pair(&mut rng, 48, 20, 4);
    let (b, m, o, dump) = (
        dir.path().join("b.pgm"),
        dir.path().join("m.pgm"),
        dir.path().join("d.pgm"),
        dir.path().join("costs.bin"),
    );
    save_pgm(&pair.base, &b).unwrap();
    save_pgm(&pair.matching, &m).unwrap();
    let out = run(&[
        "match",
        "--base",
        p(&b),
        "--match",
        p(&m),
        "--out",
        p(&o),
        "--dmax",
        "16",
        "--uf",
        "4",
        "--lr",
        "lr1",
        "--dump-costs",
        p(&dump),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let map = load_disparity(&o, 256).unwrap();
    assert_eq!((map.width(), map.height()), (48, 20));
    assert_eq!(map.get(30, 10), 4);
    assert_eq!(
        std::fs::metadata(&dump).unwrap().len(),
        16 + 4 * 48 * 20 * 16
    );

    let streamed = dir.path().join("s.pgm");
    let out = run(&[
        "match",
        "--base",
        p(&b),
        "--match",
        p(&m),
        "--out",
        p(&streamed),
        "--dmax",
        "16",
        "--uf",
        "4",
        "--lr",
        "lr1",
        "--streamed",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(&o).unwrap(),
        std::fs::read(&streamed).unwrap()
    );
}

#[test]
fn match_rejects_mismatched_images() {
    let dir = tempfile::tempdir().unwrap();
    let (b, m) = (dir.path().join("b.pgm"), dir.path().join("m.pgm"));
    save_pgm(&GrayImage::from_fn(40, 10, |x, _| x as u8), &b).unwrap();
    save_pgm(&GrayImage::from_fn(41, 10, |x, _| x as u8), &m).unwrap();
    let out = run(&[
        "match",
        "--base",
        p(&b),
        "--match",
        p(&m),
        "--out",
        p(&dir.path().join("o.pgm")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("dimension"),
        "{}",
        text(&out.stderr)
    );
    std::fs::write(&m, b"P5\n40 10\n255\nshort").unwrap();
    let out = run(&[
        "match",
        "--base",
        p(&b),
        "--match",
        p(&m),
        "--out",
        p(&dir.path().join("o.pgm")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_of_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let map = DisparityMap::new(3, 2, vec![1, 5, INVALID, 9, 12, 40]).unwrap();
    let f = dir.path().join("gt.pgm");
    save_disparity(&map, &f, 256).unwrap();
    let out = run(&["eval", p(&f), p(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        text(&out.stdout),
        "d1_all 0.000000\nevaluated 5\nerroneous 0\n"
    );
    assert_eq!(
        run(&["eval", p(&f), p(&dir.path().join("nope.pgm"))])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_writes_csv_and_pareto_front() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pair = common::shifted_pair(&mut rng, 40, 16, 3);
    let (b, m, g) = (
        dir.path().join("b.pgm"),
        dir.path().join("m.pgm"),
        dir.path().join("g.pgm"),
    );
    save_pgm(&pair.base, &b).unwrap();
    save_pgm(&pair.matching, &m).unwrap();
    save_disparity(&DisparityMap::filled(40, 16, 3), &g, 256).unwrap();
    let spec = format!("{}:{}:{}", p(&b), p(&m), p(&g));
    let csv = dir.path().join("s.csv");
    let out = run(&[
        "sweep",
        "--pair",
        &spec,
        "--out",
        p(&csv),
        "--cost",
        "census,rank",
        "--dmax",
        "8",
        "--uf",
        "2,3,4",
        "--lr",
        "nlr,lr2",
        "--pareto",
        "d1_all,mem_bits",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 1 + 2 * 2 * 2);
    assert!(body.starts_with("cost,win,dmax,uf,lr,median,width,height,d1_all,cycles,"));
    assert!(text(&out.stdout).contains("pareto front over d1_all, mem_bits"));
    assert!(text(&out.stderr).contains("uf=3 does not divide dmax=8"));

    let again = dir.path().join("again.csv");
    let out = run(&[
        "sweep",
        "--pair",
        &spec,
        "--out",
        p(&again),
        "--cost",
        "census,rank",
        "--dmax",
        "8",
        "--uf",
        "2,3,4",
        "--lr",
        "nlr,lr2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(body, std::fs::read_to_string(&again).unwrap());

    let out = run(&[
        "sweep",
        "--pair",
        &spec,
        "--out",
        p(&csv),
        "--pareto",
        "speed",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
