use std::path::Path;
use std::process::{Command, Output};

fn implosion(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_implosion")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn f64s(path: &Path) -> Vec<f64> {
    std::fs::read(path).unwrap()[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
}

#[test]
fn precedence_is_recorded() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("job.cfg"), "width = 12\nheight = 10\nquantity = class\n").unwrap();
    let o = implosion(d.path(), &["slice", "-c", "job.cfg", "-o", "out/s", "width=16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let side = json(&d.path().join("out/s.json"));
    let e = &side["config"]["entries"];
    assert_eq!(e["width"]["value"], "16");
    assert_eq!(e["width"]["source"], "flag");
    assert_eq!(e["height"]["source"], "file");
    assert_eq!(e["a"]["source"], "default");
    assert_eq!(side["width"], 16);
    let raw = std::fs::read(d.path().join("out/s.raw")).unwrap();
    assert_eq!(raw.len(), 32 + 16 * 10);
    assert!(d.path().join("out/s.png").exists());
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(implosion(d.path(), &["slice", "bogus=1"]).status.code(), Some(2));
    assert_eq!(implosion(d.path(), &["slice", "width"]).status.code(), Some(2));
    assert_eq!(implosion(d.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(implosion(d.path(), &["slice", "re_min=1", "re_max=0"]).status.code(), Some(2));
}

#[test]
fn budget_failure_exits_3() {
    let d = tempfile::tempdir().unwrap();
    // The central strip of the cylinder escapes, so there is no outgoing preimage.
    let o = implosion(d.path(), &["saddle-creation", "zeta0=0.5", "alpha=0", "j_list=50", "-o", "t"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn thread_count_does_not_change_bytes() {
    let d = tempfile::tempdir().unwrap();
    for t in ["1", "3"] {
        let o = implosion(d.path(), &["lavaurs", "width=24", "height=24", "--threads", t, "-o", &format!("l{t}")]);
        assert!(o.status.success());
    }
    for ext in ["raw", "hops.raw", "png"] {
        assert_eq!(
            std::fs::read(d.path().join(format!("l1.{ext}"))).unwrap(),
            std::fs::read(d.path().join(format!("l3.{ext}"))).unwrap()
        );
    }
    let env = Command::new(env!("CARGO_BIN_EXE_implosion"))
        .current_dir(d.path())
        .env("IMPLOSION_THREADS", "2")
        .args(["lavaurs", "width=24", "height=24", "-o", "le"])
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(json(&d.path().join("le.json"))["config"]["entries"]["threads"]["value"], "2");
    assert_eq!(std::fs::read(d.path().join("l1.raw")).unwrap(), std::fs::read(d.path().join("le.raw")).unwrap());
}

#[test]
fn fatou_bands_shift_with_the_cylinder() {
    let d = tempfile::tempdir().unwrap();
    let common = ["fatou-grid", "width=20", "height=8", "im_min=3", "im_max=7"];
    assert!(implosion(d.path(), &[&common[..], &["re_min=0", "re_max=2", "-o", "a"]].concat()).status.success());
    assert!(implosion(d.path(), &[&common[..], &["re_min=1", "re_max=3", "-o", "b"]].concat()).status.success());
    let (a, b) = (f64s(&d.path().join("a.raw")), f64s(&d.path().join("b.raw")));
    let mut checked = 0;
    for i in 0..8 {
        for j in 0..10 {
            let (x, y) = (a[i * 20 + j + 10], b[i * 20 + j]);
            if x.is_finite() && y.is_finite() {
                assert!((x - y).abs() < 1e-9, "{x} {y}");
                let x0 = a[i * 20 + j];
                if x0.is_finite() {
                    assert!((x - x0 - 1.0).abs() < 1e-8);
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 40);
}

#[test]
fn ppm_and_csv_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = implosion(d.path(), &["slice", "width=4", "height=3", "--format", "ppm", "--csv", "-o", "p"]);
    assert!(o.status.success());
    assert!(std::fs::read(d.path().join("p.ppm")).unwrap().starts_with(b"P6\n4 3\n255\n"));
    let csv = std::fs::read_to_string(d.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# ") && lines[0].contains("a=0.3"));
    assert_eq!(lines[1], "i,j,re,im,value");
    assert_eq!(lines.len(), 2 + 12);
}

#[test]
fn periodic_two_cycle_record() {
    let d = tempfile::tempdir().unwrap();
    assert!(implosion(d.path(), &["periodic", "-o", "p"]).status.success());
    let r = &json(&d.path().join("p.json"))["result"];
    assert_eq!(r["period"], 2);
    assert_eq!(r["kind"], "Saddle");
    assert!(r["log_det_defect"].as_f64().unwrap() < 1e-10);
}

#[test]
fn verify_reports_and_forced_failure() {
    let d = tempfile::tempdir().unwrap();
    let ok = implosion(d.path(), &["verify", "--only", "1,4", "-o", "v"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("PASS criterion  1") && text.contains("2/2 criteria passed"));
    let rep = json(&d.path().join("v.json"));
    assert_eq!(rep["result"].as_array().unwrap().len(), 2);
    let bad = implosion(d.path(), &["verify", "--only", "1", "--tolerance-scale", "0", "-o", "w"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}
