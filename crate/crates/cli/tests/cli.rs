use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn trainrecip(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trainrecip"))
        .current_dir(dir)
        .env_remove("TRAINRECIP_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn solve_default_config() {
    let tmp = TempDir::new().unwrap();
    let o = trainrecip(tmp.path(), &["solve", "--out", "res"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("BT = (0.13, 0.16, 0.17, 0.18)"));
    assert!(text.contains("MAW = [50, 150, 250, 335, 335], effort = [0, 0, 0, 4, 4]"));
    assert!(text.contains("O1 pass, O2 pass"));
    let csv = fs::read_to_string(tmp.path().join("res/equilibrium.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 5);
    assert!(csv.contains("ENDO,4,450,335,335,4,"));
    assert!(tmp.path().join("res/observation_checks.csv").exists());
}

#[test]
fn selfish_solve_has_no_gap_or_effort() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[reciprocity]\neta = 0.0\n");
    let o = trainrecip(tmp.path(), &["solve", "-c", "c.toml", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(
        text.matches("MAW = [50, 150, 250, 350, 450], effort = [0, 0, 0, 0, 0]")
            .count(),
        4
    );
}

#[test]
fn eta_list_gives_ordered_blocks() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "treatments = [\"ENDO\"]\n[reciprocity]\neta = [0.05, 0.1, 0.2]\n",
    );
    let o = trainrecip(tmp.path(), &["solve", "-c", "c.toml", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let positions: Vec<usize> = ["eta = 0.05,", "eta = 0.1,", "eta = 0.2,"]
        .iter()
        .map(|needle| text.find(needle).expect(needle))
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    assert!(text.contains("MAW = [50, 150, 250, 345, 345]"));
    assert!(text.contains("MAW = [50, 150, 250, 330, 330]"));
}

#[test]
fn sweep_writes_csv_and_svg() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[sweep]\neta = [0.0, 0.1]\nk_quad = [5.0, 1.0]\n",
    );
    let o = trainrecip(tmp.path(), &["sweep", "-c", "c.toml", "--out", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 4 * 5);
    let svg = fs::read_to_string(tmp.path().join("s/sweep.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 8);
}

#[test]
fn simulate_counts_and_determinism() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "endo.toml",
        "treatments = [\"ENDO\"]\n[population]\nreciprocal = 60\nseed = 42\n",
    );
    let a = trainrecip(tmp.path(), &["simulate", "-c", "endo.toml", "--out", "a"]);
    let b = trainrecip(tmp.path(), &["simulate", "-c", "endo.toml", "--out", "b"]);
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    assert!(stdout(&a).contains("ENDO: 30 pairs, 150 worker-level rows"));
    let fa = fs::read(tmp.path().join("a/simulated.csv")).unwrap();
    let fb = fs::read(tmp.path().join("b/simulated.csv")).unwrap();
    assert_eq!(fa, fb);
    assert_eq!(fa.iter().filter(|&&c| c == b'\n').count(), 151);

    write(
        tmp.path(),
        "exo.toml",
        "treatments = [\"EXO\"]\n[population]\nreciprocal = 58\n",
    );
    let o = trainrecip(
        tmp.path(),
        &["simulate", "-c", "exo.toml", "--seed", "7", "--out", "e"],
    );
    assert!(stdout(&o).contains("EXO: 29 pairs, 145 worker-level rows"));
    // a different seed changes the pairing
    let o2 = trainrecip(
        tmp.path(),
        &["simulate", "-c", "exo.toml", "--seed", "8", "--out", "f"],
    );
    assert!(o2.status.success());
    assert_ne!(
        fs::read(tmp.path().join("e/simulated.csv")).unwrap(),
        fs::read(tmp.path().join("f/simulated.csv")).unwrap()
    );
}

#[test]
fn odd_population_fails() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[population]\nreciprocal = 59\n");
    let o = trainrecip(tmp.path(), &["simulate", "-c", "c.toml", "--out", "x"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("cannot be paired"));
}

#[test]
fn output_dir_from_environment() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_trainrecip"))
        .current_dir(tmp.path())
        .env("TRAINRECIP_OUT_DIR", "from-env")
        .arg("solve")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from-env/equilibrium.csv").exists());
}

#[test]
fn analyze_simulated_table() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "treatments = [\"ENDO\", \"EXO\"]\n[population]\nreciprocal = 40\ntremble = 0.05\n",
    );
    let o = trainrecip(tmp.path(), &["simulate", "-c", "c.toml", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = trainrecip(
        tmp.path(),
        &["analyze", "-c", "c.toml", "--out", "r", "r/simulated.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "summary.csv",
        "regressions.csv",
        "ols.csv",
        "patterns.csv",
        "patterns.svg",
        "profits.csv",
    ] {
        assert!(tmp.path().join("r").join(f).exists(), "{f}");
    }
    let patterns = fs::read_to_string(tmp.path().join("r/patterns.csv")).unwrap();
    let endo_increasing: f64 = patterns
        .lines()
        .find(|l| l.starts_with("ENDO,weakly increasing"))
        .and_then(|l| l.rsplit(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(endo_increasing > 0.5, "{endo_increasing}");
    let regressions = fs::read_to_string(tmp.path().join("r/regressions.csv")).unwrap();
    assert!(regressions.contains("EXO & ENDO,effort,ENDO:X4,"));
    assert!(stdout(&o).contains("maximum likelihood"));
}

#[test]
fn analyze_selfish_table_reports_zeros() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "treatments = [\"ENDO\"]\n[population]\nselfish = 20\nreciprocal = 0\n",
    );
    assert!(
        trainrecip(tmp.path(), &["simulate", "-c", "c.toml", "--out", "r"])
            .status
            .success()
    );
    let o = trainrecip(
        tmp.path(),
        &["analyze", "-c", "c.toml", "--out", "r", "r/simulated.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("r/summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[5], "0", "{line}");
        assert_eq!(cells[7], "0", "{line}");
    }
}

#[test]
fn analyze_rejects_schema_violations() {
    let tmp = TempDir::new().unwrap();
    let header = "treatment,subject_id,x,maw,effort\n";
    let mut body = String::from(header);
    for x in 0..5 {
        body.push_str(&format!("ENDO,a,{x},{},0\n", 50 + 100 * x));
    }
    body.push_str("ENDO,b,0,50,0\nENDO,b,1,150,99\n");
    write(tmp.path(), "bad.csv", &body);
    let o = trainrecip(tmp.path(), &["analyze", "--out", "r", "bad.csv"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("line 8"), "{err}");
    assert!(err.contains("strategy-method completeness"), "{err}");
}

#[test]
fn ingest_check_reports() {
    let tmp = TempDir::new().unwrap();
    let mut ok = String::from("treatment,subject_id,x,maw,effort\n");
    for s in ["a", "b"] {
        for x in 0..5 {
            ok.push_str(&format!("EXO,{s},{x},{},1\n", 50 + 100 * x));
        }
    }
    write(tmp.path(), "ok.csv", &ok);
    let o = trainrecip(tmp.path(), &["ingest-check", "ok.csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("10 records, 0 violations"));

    write(
        tmp.path(),
        "nomaw.csv",
        "treatment,subject_id,x,effort\nEXO,a,0,0\n",
    );
    let o = trainrecip(tmp.path(), &["ingest-check", "nomaw.csv"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("maw"));

    let mut six = ok.clone();
    six.push_str("EXO,a,4,450,1\n");
    write(tmp.path(), "six.csv", &six);
    let o = trainrecip(tmp.path(), &["ingest-check", "six.csv"]);
    assert!(
        stdout(&o).contains("strategy-method completeness"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn ingest_with_column_mapping() {
    let tmp = TempDir::new().unwrap();
    let mut foreign = String::from("arm,id,level,minwage,de\n");
    for x in 0..5 {
        foreign.push_str(&format!("1,s1,{x},{},0\n", 50 + 100 * x));
    }
    write(tmp.path(), "foreign.csv", &foreign);
    write(
        tmp.path(),
        "map.toml",
        "[ingest.columns]\ntreatment = \"arm\"\nsubject_id = \"id\"\nx = \"level\"\nmaw = \"minwage\"\neffort = \"de\"\n[ingest.treatment_values]\n\"1\" = \"ENDO\"\n",
    );
    let o = trainrecip(
        tmp.path(),
        &["ingest-check", "-c", "map.toml", "foreign.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("5 records, 0 violations"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn bad_config_fails() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "rng = \"mt19937\"\n");
    let o = trainrecip(tmp.path(), &["solve", "-c", "c.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unsupported rng"));
    let o = trainrecip(tmp.path(), &["solve", "-c", "missing.toml"]);
    assert!(!o.status.success());
}
