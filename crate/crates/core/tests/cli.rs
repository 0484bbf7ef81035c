use std::process::{Command, Output};

use serde_json::Value;

fn qhahn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhahn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn rates_from_hahn_parameters() {
    let v = json(&qhahn(&[
        "rates", "--gamma", "0.25", "--mu", "0.5", "--m", "1", "--k", "1",
    ]));
    assert!((num(&v, "beta_plus") - 2.0).abs() < 1e-15);
    assert!((num(&v, "beta_minus") - 4.0).abs() < 1e-15);
    assert!(v.get("rho").is_none());
}

#[test]
fn rates_from_spin_parameters() {
    let v = json(&qhahn(&[
        "rates", "--q", "0.6", "--s", "0.5", "--m", "1", "--k", "1",
    ]));
    assert!((num(&v, "rho") - 2.6041666666666667).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(
        qhahn(&["rates", "--gamma", "1.5", "--mu", "0.5", "--m", "1", "--k", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(qhahn(&["rates", "--gamma", "0.25"]).status.code(), Some(2));
    assert_eq!(qhahn(&["rates", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        qhahn(&["spectrum", "--n", "2", "--q", "0.6", "--s", "0.3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qhahn(&["nonsense"]).status.code(), Some(2));
    assert_eq!(qhahn(&["--help"]).status.code(), Some(0));
    assert_eq!(qhahn(&["--version"]).status.code(), Some(0));
    let out = qhahn(&[
        "rates", "--gamma", "1.5", "--mu", "0.5", "--m", "1", "--k", "1",
    ]);
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn generator_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let out = qhahn(&[
        "generator",
        "--sites",
        "2",
        "--particles",
        "1",
        "--gamma",
        "0.25",
        "--mu",
        "0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    let v = json(&out);
    assert_eq!(num(&v, "column_sum_max_deviation"), 0.0);
    let text = std::fs::read_to_string(&path).unwrap();
    let (header, m) = qhahn::generator::read_matrix(text.as_bytes()).unwrap();
    assert_eq!(
        (header.rows, header.cols, header.sites, header.particles),
        (2, 2, 2, 1)
    );
    let expect = [[2.0, -4.0], [-2.0, 4.0]];
    for (i, row) in expect.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            assert!((m[(i, j)] - e).abs() < 1e-14);
        }
    }
    let basis = std::fs::read_to_string(dir.path().join("m.txt.basis")).unwrap();
    assert_eq!(basis, "1,0\n0,1\n");
}

#[test]
fn generator_periodic_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.txt");
    let p = path.to_str().unwrap();
    let v = json(&qhahn(&[
        "generator",
        "--sites",
        "3",
        "--particles",
        "2",
        "--gamma",
        "0.25",
        "--mu",
        "0.5",
        "--boundary",
        "periodic",
        "--out",
        p,
    ]));
    assert_eq!(v["rows"].as_u64(), Some(6));
    assert!(num(&v, "column_sum_max_deviation") < 1e-11);

    let v = json(&qhahn(&[
        "generator",
        "--sites",
        "2",
        "--particles",
        "0",
        "--gamma",
        "0.25",
        "--mu",
        "0.5",
        "--out",
        p,
    ]));
    assert_eq!(v["rows"].as_u64(), Some(1));
    let (_, m) =
        qhahn::generator::read_matrix(std::fs::read_to_string(&path).unwrap().as_bytes()).unwrap();
    assert_eq!(m.shape(), (1, 1));
    assert_eq!(m[(0, 0)], 0.0);
}

#[test]
fn spectrum_subcommand() {
    let v = json(&qhahn(&[
        "spectrum", "--n", "1", "--q", "0.6", "--s", "0.5",
    ]));
    let spec: Vec<f64> = v["spectrum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(spec.len(), 2);
    assert!(spec[0].abs() < 1e-9);
    assert!((spec[1] - 5.902777777777778).abs() < 1e-9);
    assert!(num(&v, "max_deviation") < 1e-9);

    let v = json(&qhahn(&["spectrum", "--n", "6", "--q", "0.9", "--s", "2"]));
    assert_eq!(v["spectrum"].as_array().unwrap().len(), 7);
    assert!(num(&v, "max_deviation") < 1e-8);
}

#[test]
fn check_subcommand() {
    let out = qhahn(&["check", "--suite", "uqsl2", "--max-n", "2"]);
    let v = json(&out);
    assert_eq!(v["summary"]["failed"].as_u64(), Some(0));
    let total = v["summary"]["total"].as_u64().unwrap();
    assert_eq!(v["cases"].as_array().unwrap().len() as u64, total);
    for c in v["cases"].as_array().unwrap() {
        assert_eq!(
            c["pass"].as_bool().unwrap(),
            num(c, "residual") <= num(c, "tolerance")
        );
    }

    let v = json(&qhahn(&["check", "--suite", "rates"]));
    assert_eq!(v["summary"]["failed"].as_u64(), Some(0));
}

#[test]
fn limits_subcommand() {
    for args in [
        &["limits", "--which", "madm", "--gamma", "0.36"][..],
        &[
            "limits", "--which", "rational", "--q", "0.9999", "--s", "0.5",
        ][..],
        &[
            "limits", "--which", "tasep", "--gamma", "0.001", "--s", "0.5",
        ][..],
    ] {
        let v = json(&qhahn(args));
        for row in v["rows"].as_array().unwrap() {
            assert!(row["pass"].as_bool().unwrap(), "{row}");
        }
    }
}

#[test]
fn simulate_subcommand() {
    let v = json(&qhahn(&[
        "simulate",
        "--sites",
        "2",
        "--particles",
        "1",
        "--gamma",
        "0.25",
        "--mu",
        "0.5",
        "--events",
        "0",
        "--seed",
        "7",
    ]));
    assert_eq!(v["event_count"].as_u64(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.csv");
    let args = [
        "simulate",
        "--sites",
        "3",
        "--particles",
        "2",
        "--gamma",
        "0.25",
        "--mu",
        "0.5",
        "--boundary",
        "periodic",
        "--events",
        "20000",
        "--seed",
        "11",
        "--compare-exact",
        "--traj",
        traj.to_str().unwrap(),
    ];
    let a = qhahn(&args);
    let b = qhahn(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!(num(&v, "tv_distance") < 0.05);
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("time,site_1,site_2,site_3\n"));

    assert_eq!(
        qhahn(&[
            "simulate",
            "--sites",
            "2",
            "--particles",
            "1",
            "--gamma",
            "0.25",
            "--mu",
            "0.5"
        ])
        .status
        .code(),
        Some(2)
    );
}
