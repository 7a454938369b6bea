mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blurstack::cli;
use blurstack::raster::{load_pnm, save_pnm};
use blurstack::signal::Signal1D;

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_string()
    }

    fn write_photo(&self, name: &str, size: usize, seed: u64) -> String {
        let p = self.path(name);
        std::fs::write(&p, save_pnm(&common::synthetic_photo(size, seed))).unwrap();
        p
    }
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blurstack"))
        .args(args)
        .output()
        .unwrap()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("blurstack")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn exists(p: &str) -> bool {
    Path::new(p).exists()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["encode", "--input", "x"]).0, 1);
    assert_eq!(
        run(&["encode", "--input", "a", "--output", "b", "--preset", "paper", "--factor", "3"]).0,
        1
    );
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("encode"));
}

#[test]
fn missing_input_exits_2() {
    let sb = Sandbox::new();
    let (code, _, err) = run(&["decode", "--input", &sb.path("nope.gbs"), "--output", &sb.path("o.ppm")]);
    assert_eq!(code, 2);
    assert!(err.contains("nope.gbs"));
    assert!(!exists(&sb.path("o.ppm")));
}

#[test]
fn malformed_inputs_exit_3() {
    let sb = Sandbox::new();
    std::fs::write(sb.path("bad.gbs"), b"GBS2 not a container").unwrap();
    assert_eq!(run(&["inspect", "--input", &sb.path("bad.gbs")]).0, 3);
    std::fs::write(sb.path("bad.ppm"), b"P6\n2 2\n65535\n").unwrap();
    let (code, _, err) = run(&["encode", "--input", &sb.path("bad.ppm"), "--output", &sb.path("o.gbs")]);
    assert_eq!(code, 3);
    assert!(err.contains("65535"));
}

#[test]
fn diff_reports_and_verifies() {
    let sb = Sandbox::new();
    let a = sb.write_photo("a.ppm", 32, 1);
    let b = sb.write_photo("b.ppm", 32, 2);
    let (code, out, _) = run(&["diff", &a, &a]);
    assert_eq!(code, 0);
    assert_eq!(out, "max_abs_diff 0\npsnr inf\n");
    let (code, out, _) = run(&[
        "diff",
        &a,
        &b,
        "--mode",
        "grain",
        "--output",
        &sb.path("g.ppm"),
        "--fail-on-difference",
    ]);
    assert_eq!(code, 4);
    assert!(out.starts_with("max_abs_diff "));
    assert!(exists(&sb.path("g.ppm")));
}

#[test]
fn lossy_encode_and_inspect_table() {
    let sb = Sandbox::new();
    let input = sb.write_photo("in.ppm", 64, 3);
    let gbs = sb.path("s.gbs");
    let (code, _, err) = run(&[
        "encode",
        "--input",
        &input,
        "--output",
        &gbs,
        "--preset",
        "paper",
        "--layer-codec",
        "downq",
        "--quant-bits",
        "5",
        "--base-codec",
        "downq",
        "--spread-preset",
        "paper-spread",
        "--seed",
        "4",
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, table, _) = run(&["inspect", "--input", &gbs]);
    assert_eq!(code, 0);
    for sigma in ["1000", "500", "250", "125", "60", "30", "15", "8", "4", "2", "1"] {
        assert!(
            table.lines().any(|l| l.split_whitespace().nth(1) == Some(sigma)),
            "sigma {sigma} missing:\n{table}"
        );
    }
    assert_eq!(table.lines().count(), 13);
}

#[test]
fn preview_enlarge_and_denoise() {
    let sb = Sandbox::new();
    let input = sb.write_photo("in.ppm", 48, 4);
    let gbs = sb.path("s.gbs");
    assert_eq!(
        run(&["encode", "--input", &input, "--output", &gbs, "--sigma0", "auto", "--factor", "2"]).0,
        0
    );

    assert_eq!(
        run(&[
            "preview",
            "--input",
            &gbs,
            "--output",
            &sb.path("p.ppm"),
            "--layers",
            "2",
            "--order",
            "topdown"
        ])
        .0,
        0
    );
    let p = load_pnm(&std::fs::read(sb.path("p.ppm")).unwrap()).unwrap();
    assert_eq!((p.width(), p.height()), (48, 48));
    assert_eq!(
        run(&[
            "preview",
            "--input",
            &gbs,
            "--output",
            &sb.path("p.ppm"),
            "--layers",
            "99"
        ])
        .0,
        1
    );

    assert_eq!(
        run(&[
            "enlarge",
            "--input",
            &gbs,
            "--output",
            &sb.path("e.ppm"),
            "--scale",
            "2"
        ])
        .0,
        0
    );
    let e = load_pnm(&std::fs::read(sb.path("e.ppm")).unwrap()).unwrap();
    assert_eq!((e.width(), e.height()), (96, 96));

    let den = sb.path("d.gbs");
    let (code, _, err) = run(&[
        "denoise",
        "--input",
        &gbs,
        "--output",
        &den,
        "--blur-layers",
        "4,5",
        "--layer-sigma",
        "3",
        "--base-grey",
        "--base-sigma",
        "4",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(run(&["decode", "--input", &den, "--output", &sb.path("d.ppm")]).0, 0);
}

#[test]
fn signal_round_trip() {
    let sb = Sandbox::new();
    let sig = Signal1D::new((0..1000).map(|i| i * 37 % 256).collect(), 22050).unwrap();
    let raw = sb.path("sig.raw");
    std::fs::write(&raw, sig.to_bytes()).unwrap();
    std::fs::write(format!("{raw}.meta"), sig.sidecar()).unwrap();
    let gbs = sb.path("sig.gbs");
    assert_eq!(run(&["signal-encode", "--input", &raw, "--output", &gbs]).0, 0);
    let out = sb.path("out.raw");
    assert_eq!(run(&["signal-decode", "--input", &gbs, "--output", &out]).0, 0);
    assert_eq!(std::fs::read(&out).unwrap(), sig.to_bytes());
    assert_eq!(std::fs::read_to_string(format!("{out}.meta")).unwrap(), sig.sidecar());

    // An image container is not a signal.
    let img = sb.write_photo("i.ppm", 16, 1);
    assert_eq!(run(&["encode", "--input", &img, "--output", &sb.path("i.gbs")]).0, 0);
    assert_eq!(
        run(&[
            "signal-decode",
            "--input",
            &sb.path("i.gbs"),
            "--output",
            &sb.path("x.raw")
        ])
        .0,
        1
    );
}

#[test]
fn index_add_and_search() {
    let sb = Sandbox::new();
    let index = sb.path("idx");
    let mut stacks: Vec<PathBuf> = Vec::new();
    for i in 0..4 {
        let img = sb.write_photo(&format!("{i}.ppm"), 64, 200 + i);
        let gbs = sb.path(&format!("{i}.gbs"));
        assert_eq!(
            run(&["encode", "--input", &img, "--output", &gbs, "--preset", "paper"]).0,
            0
        );
        let (code, out, err) = run(&[
            "index",
            "add",
            "--index",
            &index,
            "--id",
            &format!("img{i}"),
            "--stack",
            &gbs,
        ]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(out.trim(), format!("{} entries", i + 1));
        stacks.push(gbs.into());
    }
    let dup = run(&[
        "index",
        "add",
        "--index",
        &index,
        "--id",
        "img0",
        "--stack",
        stacks[0].to_str().unwrap(),
    ]);
    assert_eq!(dup.0, 1);

    let q = stacks[2].to_str().unwrap();
    let (code, out, _) = run(&[
        "index",
        "search",
        "--index",
        &index,
        "--query",
        q,
        "--thresholds",
        "0.05,0.05,0.05",
        "--json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let first = &v["results"][0];
    assert_eq!(first["id"], "img2");
    assert_eq!(first["accepted"], true);
    assert_eq!(first["per_level_scores"].as_array().unwrap().len(), 3);

    let (code, table, _) = run(&[
        "index",
        "search",
        "--index",
        &index,
        "--query",
        q,
        "--thresholds",
        "0.05",
    ]);
    assert_eq!(code, 0);
    assert!(table.lines().nth(1).unwrap().contains("img2"));
}

#[test]
fn outputs_are_reproducible_across_processes() {
    let sb = Sandbox::new();
    let input = sb.write_photo("in.ppm", 40, 9);
    let args = |out: &str| {
        vec![
            "encode".to_string(),
            "--input".into(),
            input.clone(),
            "--output".into(),
            out.to_string(),
            "--spread".into(),
            "4".into(),
            "--seed".into(),
            "11".into(),
            "--layer-codec".into(),
            "downq".into(),
        ]
    };
    let (o1, o2) = (sb.path("1.gbs"), sb.path("2.gbs"));
    let a1: Vec<String> = args(&o1);
    let a2: Vec<String> = args(&o2);
    assert!(bin(&a1.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    assert!(bin(&a2.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
}
