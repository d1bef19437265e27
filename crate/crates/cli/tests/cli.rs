mod common;

use std::io::Write;
use std::process::{Command, Output, Stdio};

use cfdcast::{AreaId, Covariate, ElicitationProfile, ProfileRow};

fn cfdcast(data: &std::path::Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfdcast"))
        .env("CFD_DATA_DIR", data)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn workflow_on_fixture() {
    let (dir, _) = common::workspace(false);
    let d = dir.path();
    let o = cfdcast(d, &["ingest"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cfdcast(d, &["fit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("beta_WA          NA       NA"));
    let csv = std::fs::read_to_string(d.join("coefficients.csv")).unwrap();
    assert!(csv.starts_with("horizon,epoch,coefficient,DK1,DK2,FI,NO1,SE\n"));

    let args = [
        "forecast",
        "--area",
        "NO2",
        "--horizon",
        "M1",
        "--n",
        "10",
        "--seed",
        "7",
        "--out",
        "-",
    ];
    let a = cfdcast(d, &args);
    let b = cfdcast(d, &args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("date,mean,q2.5,q50,q97.5,n_draws\n"));
    assert!(text.lines().nth(1).unwrap().ends_with(",10"));

    let o = cfdcast(
        d,
        &["backtest", "--area", "NO1", "--horizon", "Q1", "--out", "-"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().lines().count() > 1);
    let o = cfdcast(
        d,
        &["forecast", "--area", "NO1", "--horizon", "Y1", "--n", "50"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("forecasts/NO1_Y1.csv").exists());
}

#[test]
fn errors_are_single_coded_lines() {
    let (dir, _) = common::workspace(false);
    let cases: [(&[&str], &str); 4] = [
        (&["frobnicate"], "cli.usage"),
        (&["fit"], "cli.missing_artifact"),
        (
            &["forecast", "--area", "NO2", "--horizon", "M9"],
            "cli.usage",
        ),
        (&["ingest", "--input", "/nonexistent"], "market.io"),
    ];
    for (args, code) in cases {
        let o = cfdcast(dir.path(), args);
        assert!(!o.status.success());
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(&format!("error: {code}: ")), "{err}");
    }
    cfdcast(dir.path(), &["ingest"]);
    cfdcast(dir.path(), &["fit"]);
    std::fs::remove_file(dir.path().join("profiles/NO3.toml")).unwrap();
    let o = cfdcast(
        dir.path(),
        &["forecast", "--area", "NO3", "--horizon", "M1"],
    );
    assert!(stderr(&o).starts_with("error: cli.no_profile: "));
}

fn expert_row(c: Covariate, raw: [f64; 5]) -> ProfileRow {
    ProfileRow {
        covariate: c,
        rho: raw.to_vec(),
        months: 1.0,
    }
}

#[test]
fn elicit_session_reproduces_reference_profile() {
    let (dir, _) = common::workspace(false);
    cfdcast(dir.path(), &["ingest"]);
    // FW, SA, SS rows ask all five observed areas; WA skips DK1 and DK2.
    let answers = "5\n5\n5\n75\n10\n1\n5\n5\n5\n80\n5\n1\n5%\n5\n5\n80\n5\n1\n5\n85\n10\n1\n";
    let mut child = Command::new(env!("CARGO_BIN_EXE_cfdcast"))
        .env("CFD_DATA_DIR", dir.path())
        .args(["elicit", "--area", "NO2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(answers.as_bytes())
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("How many months of data"));

    let stored = ElicitationProfile::from_toml(
        &std::fs::read_to_string(dir.path().join("profiles/NO2.toml")).unwrap(),
    )
    .unwrap();
    let observed: Vec<AreaId> = ["DK1", "DK2", "FI", "NO1", "SE"].map(AreaId::from).to_vec();
    let canonical = ElicitationProfile {
        target: "NO2".into(),
        observed_order: observed,
        rows: vec![
            expert_row(Covariate::Forward, [5.0, 5.0, 5.0, 75.0, 10.0]),
            expert_row(Covariate::AreaSpot, [5.0, 5.0, 5.0, 80.0, 5.0]),
            expert_row(Covariate::SystemSpot, [5.0, 5.0, 5.0, 80.0, 5.0]),
            expert_row(Covariate::Reservoir, [0.0, 0.0, 5.0, 85.0, 10.0]),
        ],
        transcript: None,
    };
    let areas = cfdcast_cli::Workspace::new(dir.path())
        .load_panel()
        .unwrap()
        .areas;
    let canonical = cfdcast::validate_profile(&canonical, &areas).unwrap();
    assert_eq!(stored.rows, canonical.rows);
    assert_eq!(stored.observed_order, canonical.observed_order);
    assert!(stored.transcript.is_some());
    assert_eq!(stored.content_hash(), canonical.content_hash());

    let short = Command::new(env!("CARGO_BIN_EXE_cfdcast"))
        .env("CFD_DATA_DIR", dir.path())
        .args(["elicit", "--area", "NO2"])
        .stdin(Stdio::null())
        .output()
        .unwrap();
    assert!(stderr(&short)
        .lines()
        .last()
        .unwrap()
        .starts_with("error: elicitation.incomplete_transcript"));
}
