//! End-to-end tests of the command-line surface: exit codes, file formats,
//! and byte-level determinism of reports and search output.

use std::path::{Path, PathBuf};
use std::process::Command;

use cfkit::seq::{dyadic_odometer, CfSequence};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfkit"))
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Workspace {
        Workspace {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    fn write_seq(&self, name: &str, seq: &CfSequence) -> PathBuf {
        self.write(name, &(seq.to_json() + "\n"))
    }
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn validate_exit_codes() {
    let ws = Workspace::new();
    let good = ws.write_seq("good.json", &dyadic_odometer(3));
    let (code, stdout, _) = run(bin().arg("validate").arg(&good));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("accepted"));

    // break disjointness: C_2 = {0,1}
    let seq = dyadic_odometer(3);
    let broken_text = seq.to_json().replace("\"0\",\n      \"2\"", "\"0\",\n      \"1\"");
    assert_ne!(broken_text, seq.to_json(), "mutation must hit");
    let bad = ws.write("bad.json", &broken_text);
    let (code, stdout, _) = run(bin().arg("validate").arg(&bad));
    assert_eq!(code, 1, "{stdout}");

    let empty = ws.write("empty.json", "");
    let (code, _, stderr) = run(bin().arg("validate").arg(&empty));
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn transform_round_trips_and_rejects_singletons() {
    let ws = Workspace::new();
    let seq = dyadic_odometer(3);
    let input = ws.write_seq("seq.json", &seq);

    // identity telescoping writes back the identical canonical bytes
    let params = ws.write("id.json", "{\"l\": [0, 1, 2, 3]}\n");
    let out = ws.path("out.json");
    let (code, _, _) = run(bin()
        .arg("transform")
        .arg(&input)
        .args(["--op", "telescope"])
        .arg("--params")
        .arg(&params)
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0);
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&out).unwrap(),
        "identity telescope must reproduce the canonical file"
    );

    // the transformed file re-validates cleanly
    let params = ws.write("tele.json", "{\"l\": [0, 2]}\n");
    let out2 = ws.path("out2.json");
    let (code, _, _) = run(bin()
        .arg("transform")
        .arg(&input)
        .args(["--op", "telescope"])
        .arg("--params")
        .arg(&params)
        .arg("--out")
        .arg(&out2));
    assert_eq!(code, 0);
    let (code, _, _) = run(bin().arg("validate").arg(&out2));
    assert_eq!(code, 0);

    // reducing a block set to one element is a verdict failure
    let params = ws.write(
        "reduce.json",
        "{\"A\": [[\"0\"], [\"0\", \"2\"], [\"0\", \"4\"]]}\n",
    );
    let out3 = ws.path("out3.json");
    let (code, stdout, _) = run(bin()
        .arg("transform")
        .arg(&input)
        .args(["--op", "reduce"])
        .arg("--params")
        .arg(&params)
        .arg("--out")
        .arg(&out3));
    assert_eq!(code, 1, "{stdout}");
}

#[test]
fn iso_search_is_deterministic_across_workers() {
    let ws = Workspace::new();
    let seq = ws.write_seq("dyadic.json", &dyadic_odometer(4));

    let out1 = ws.path("w1.json");
    let out8 = ws.path("w8.json");
    for (out, workers) in [(&out1, "1"), (&out8, "8")] {
        let (code, stdout, _) = run(bin()
            .arg("iso-search")
            .arg(&seq)
            .arg(&seq)
            .args(["--depth", "4", "--workers", workers])
            .arg("--out")
            .arg(out));
        assert_eq!(code, 0, "{stdout}");
    }
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out8).unwrap(),
        "witness files must be byte-identical across worker counts"
    );

    // the emitted witness passes the checker
    let (code, stdout, _) = run(bin().arg("iso-check").arg(&seq).arg(&seq).arg(&out1));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("verdict: pass"));

    // a clearly different pair under tight tolerances is not matched
    let tri = ws.write_seq("triadic.json", &CfSequence::odometer(&[1, 3, 3, 3]).unwrap());
    let (code, stdout, _) = run(bin()
        .arg("iso-search")
        .arg(&seq)
        .arg(&tri)
        .args(["--depth", "3", "--eps", "1/8,1/8,1/8"]));
    assert_eq!(code, 1, "{stdout}");
    assert!(stdout.contains("not found"));

    // malformed witness files are input errors
    let junk = ws.write("junk.json", "{\"k\": [0,0]}");
    let (code, _, _) = run(bin().arg("iso-check").arg(&seq).arg(&seq).arg(&junk));
    assert_eq!(code, 2);
}

#[test]
fn factor_and_odometer_commands() {
    let ws = Workspace::new();
    let seq = ws.write_seq("dyadic.json", &dyadic_odometer(3));

    // the identity factor witness passes and maps every point
    let witness = ws.write(
        "fw.json",
        "{\"k\": [0, 1, 2, 3], \"J\": [[\"0\"], [\"0\"], [\"0\"]], \"eps\": [\"2/1\", \"1/8\", \"1/16\"]}\n",
    );
    let (code, stdout, _) = run(bin().arg("factor-check").arg(&seq).arg(&seq).arg(&witness));
    assert_eq!(code, 0, "{stdout}");
    let (code, stdout, _) = run(bin().arg("factor-map").arg(&seq).arg(&seq).arg(&witness));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("domain fractions"));

    // triadic rank-one against base 3: found with zero defects
    let tri = ws.write_seq("triadic.json", &CfSequence::odometer(&[1, 3, 3, 3]).unwrap());
    let odo = ws.write("odo.json", "{\"d\": [1, 3, 3, 3]}\n");
    let (code, stdout, _) = run(bin().arg("odometer-check").arg(&tri).arg(&odo));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("partial sum: 0/1"));

    // Chacon-type against base 3: greedy gets stuck
    let chacon = CfSequence::from_cutting_stacking(
        &[3, 3, 3],
        &[vec![0, 1, 0], vec![0, 1, 0], vec![0, 1, 0]],
        1,
    )
    .unwrap();
    let chacon_path = ws.write_seq("chacon.json", &chacon);
    let odo4 = ws.write("odo4.json", "{\"d\": [1, 3, 3, 3, 3]}\n");
    let (code, stdout, _) = run(bin()
        .arg("odometer-check")
        .arg(&chacon_path)
        .arg(&odo4)
        .args(["--threshold", "1/2,1/4,1/8,1/16"]));
    assert_eq!(code, 1, "{stdout}");
}

#[test]
fn quotient_and_standardize_commands() {
    let ws = Workspace::new();
    let t = ws.write_seq("quaternary.json", &CfSequence::odometer(&[1, 4, 4]).unwrap());
    let tt = ws.write_seq("dyadic.json", &dyadic_odometer(2));

    let params = ws.write(
        "q.json",
        "{\"k\": [0, 1, 2], \"A\": [[\"0\", \"2\"], [\"0\", \"4\", \"8\", \"12\"]]}\n",
    );
    let (code, stdout, _) = run(bin()
        .arg("quotient-check")
        .arg(&t)
        .arg(&tt)
        .arg("--params")
        .arg(&params));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("factor map built"));

    let broken = ws.write(
        "qbad.json",
        "{\"k\": [0, 1, 2], \"A\": [[\"0\", \"2\"], [\"0\", \"4\", \"8\", \"13\"]]}\n",
    );
    let (code, stdout, _) = run(bin()
        .arg("quotient-check")
        .arg(&t)
        .arg(&tt)
        .arg("--params")
        .arg(&broken));
    assert_eq!(code, 1, "{stdout}");

    let seq = ws.write_seq("deep.json", &dyadic_odometer(4));
    let out = ws.path("std.json");
    let (code, stdout, _) = run(bin()
        .arg("standardize")
        .arg(&seq)
        .args(["--window", "1,-1", "--budget", "4"])
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0, "{stdout}");
    assert!(out.exists());
}

#[test]
fn json_reports_are_byte_identical() {
    let ws = Workspace::new();
    let seq = ws.write_seq("dyadic.json", &dyadic_odometer(3));

    let capture = |path: &Path| -> String {
        let (code, stdout, _) = run(bin().arg("validate").arg(path).arg("--json"));
        assert_eq!(code, 0);
        stdout
    };
    assert_eq!(capture(&seq), capture(&seq));

    let (_, first, _) = run(bin()
        .arg("iso-search")
        .arg(&seq)
        .arg(&seq)
        .args(["--depth", "3", "--json"]));
    let (_, second, _) = run(bin()
        .arg("iso-search")
        .arg(&seq)
        .arg(&seq)
        .args(["--depth", "3", "--json", "--workers", "6"]));
    assert_eq!(first, second);
}
