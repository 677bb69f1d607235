use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lndimer::rovib::BoundLevel;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lndimer"));
    c.env_remove("LNDIMER_CONSTANTS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("lndimer-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

/// Header plus rows of a CSV body.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let h = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (h, rows)
}

fn col(h: &[String], name: &str) -> usize {
    h.iter().position(|x| x == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn coefficient(report: &Value, op: &str, field: &str) -> f64 {
    report["coefficients"].as_array().unwrap().iter().find(|c| c["operator"] == op).unwrap()[field].as_f64().unwrap()
}

#[test]
fn dispersion_erbium_isotropic_coefficient() {
    let v: Value = serde_json::from_str(&ok(&["dispersion", "--species", "er", "--lines", data("er_lines.csv").to_str().unwrap()])).unwrap();
    let c0 = coefficient(&v, "C0(1)", "value");
    assert!((c0 / -1723.07 - 1.0).abs() < 1e-3, "{c0}");
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 7);
    assert!(v["d2_2"].as_f64().unwrap() < 0.0);
    // the embedded set deserializes back
    let set: lndimer::dispersion::DispersionSet = serde_json::from_value(v["dispersion"].clone()).unwrap();
    assert_eq!(set.c[0], c0);
}

#[test]
fn dispersion_monte_carlo_agrees_with_linear_propagation() {
    let v: Value = serde_json::from_str(&ok(&["dispersion", "--species", "er", "--montecarlo", "100000", "--seed", "7"])).unwrap();
    for c in v["coefficients"].as_array().unwrap() {
        let (u, mc) = (c["u"].as_f64().unwrap(), c["u_mc"].as_f64().unwrap());
        assert!((mc / u - 1.0).abs() < 0.05, "{}: {u} vs {mc}", c["operator"]);
    }
}

#[test]
fn thulium_weak_coefficients_are_nonlinear_in_the_strengths() {
    // some f-values carry 200 % uncertainties and C0(2) nearly cancels
    let v: Value = serde_json::from_str(&ok(&["dispersion", "--species", "tm", "--montecarlo", "100000", "--seed", "7"])).unwrap();
    for op in ["C0(1)", "C2(1)"] {
        let ratio = coefficient(&v, op, "u_mc") / coefficient(&v, op, "u");
        assert!((ratio - 1.0).abs() < 0.05, "{op}: {ratio}");
    }
    for op in ["C0(2)", "C2(2)", "C4(1)"] {
        assert!(coefficient(&v, op, "u_mc") > 1.3 * coefficient(&v, op, "u"), "{op}");
    }
}

#[test]
fn missing_line_list_is_a_validation_error() {
    let o = run(&["dispersion", "--species", "er", "--lines", "/no/such/lines.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/lines.csv"));
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_arguments_exit_with_two() {
    for args in [
        &["dispersion", "--species", "xx"][..],
        &["curves", "--species", "er", "--grid", "6:5:0.1"],
        &["curves", "--species", "er", "--which", "v7"],
        &["levels", "--species", "er", "--blocks", "q/even"],
        &["levels", "--species", "er", "--grid-n", "1"],
        &["constants", "--format", "csv"],
        &["adiabats", "--species", "er"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn curves_reproduce_thulium_table_nodes() {
    let (h, rows) = table(&ok(&["curves", "--species", "tm", "--grid", "6:30:0.1"]));
    let (iv2, ivss) = (col(&h, "v2_1"), col(&h, "vss"));
    let at = |r: f64| rows.iter().find(|x| (x[0].parse::<f64>().unwrap() - r).abs() < 1e-9);
    let mut checked = 0;
    for rec in csv::Reader::from_path(data("tm_v2.csv")).unwrap().records() {
        let rec = rec.unwrap();
        let r: f64 = rec[0].parse().unwrap();
        let v2: f64 = rec[2].parse().unwrap();
        if let Some(row) = at(r) {
            let got: f64 = row[iv2].parse().unwrap();
            assert!((got - v2).abs() <= 1e-9 * v2.abs().max(1.0), "V2 at {r}: {got} vs {v2}");
            checked += 1;
        }
    }
    for rec in csv::Reader::from_path(data("tm_vss.csv")).unwrap().records() {
        let rec = rec.unwrap();
        let r: f64 = rec[0].parse().unwrap();
        let v: f64 = rec[1].parse().unwrap();
        if let Some(row) = at(r) {
            let got: f64 = row[ivss].parse().unwrap();
            assert!((got - v).abs() <= 1e-6 * v.abs().max(1.0), "V_ss at {r}: {got} vs {v}");
            checked += 1;
        }
    }
    assert!(checked > 20);
}

#[test]
fn curves_outside_validity_exit_two() {
    let o = run(&["curves", "--species", "er", "--grid", "0.1:2:0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside"));
}

#[test]
fn erbium_anisotropy_at_twelve_bohr() {
    let (h, rows) = table(&ok(&["curves", "--species", "er", "--grid", "12:12:1", "--which", "v2"]));
    assert_eq!(h, ["r_bohr", "v2_1"]);
    let v: f64 = rows[0][1].parse().unwrap();
    assert!((v - 0.05871469).abs() < 1e-9, "{v}");
}

#[test]
fn curves_json_matches_csv() {
    let v: Value = serde_json::from_str(&ok(&["curves", "--species", "er", "--grid", "9:10:0.5", "--format", "json"])).unwrap();
    let (h, rows) = table(&ok(&["curves", "--species", "er", "--grid", "9:10:0.5"]));
    assert_eq!(v["r_bohr"].as_array().unwrap().len(), rows.len());
    for name in &h[1..] {
        let xs = v[name.as_str()].as_array().unwrap();
        for (row, x) in rows.iter().zip(xs) {
            let a: f64 = row[col(&h, name)].parse().unwrap();
            let b = x.as_f64().unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{name}");
        }
    }
}

/// Rows of `adiabats` output as `(symmetry, n, energy)`.
fn adiabat_rows(text: &str) -> Vec<(String, u32, f64)> {
    let (h, rows) = table(text);
    assert_eq!(h, ["r_bohr", "n", "omega", "sigma", "reflection", "u_rel_cm"]);
    rows.iter().map(|r| (format!("{}{}{}", r[2], r[3], r[4]), r[1].parse().unwrap(), r[5].parse().unwrap())).collect()
}

#[test]
fn adiabat_census_and_ground_state() {
    let er = adiabat_rows(&ok(&["adiabats", "--species", "er", "--r", "8.7"]));
    assert_eq!(er.len(), 91);
    let low = er.iter().min_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
    assert_eq!((low.0.as_str(), low.1), ("0g+", 1));
    let tm = adiabat_rows(&ok(&["adiabats", "--species", "tm", "--r", "8.7"]));
    assert_eq!(tm.len(), 36);
    let two = adiabat_rows(&ok(&["adiabats", "--species", "tm", "--grid", "8:10:1"]));
    assert_eq!(two.len(), 3 * 36);
}

#[test]
fn two_tensor_top_zero_gerade_meets_stretched_state() {
    let rows = adiabat_rows(&ok(&["adiabats", "--species", "er", "--model", "two_tensor", "--r", "9.5"]));
    let top = rows.iter().filter(|r| r.0 == "0g+").map(|r| r.2).fold(f64::MIN, f64::max);
    let ss = rows.iter().find(|r| r.0 == "12g").unwrap().2;
    assert!((top - ss).abs() < 1e-9 * ss.abs(), "{top} vs {ss}");
}

#[test]
fn adiabats_round_trip_through_the_fit() {
    let path = tmp("adiabats.csv");
    ok(&["adiabats", "--species", "er", "--model", "two_tensor", "--r", "9,11", "-o", path.to_str().unwrap()]);
    let (h, rows) = table(&ok(&["strengths-fit", "--species", "er", "--two-tensor", "--input", path.to_str().unwrap()]));
    let (ch, crow) = table(&ok(&["curves", "--species", "er", "--grid", "9:11:2"]));
    assert_eq!(rows.len(), 2);
    for (row, cr) in rows.iter().zip(&crow) {
        for name in ["v0_1", "v2_1"] {
            let fit: f64 = row[col(&h, name)].parse().unwrap();
            let want: f64 = cr[col(&ch, name)].parse().unwrap();
            assert!((fit - want).abs() < 1e-7 * want.abs(), "{name}: {fit} vs {want}");
        }
        let chi2: f64 = row[col(&h, "chi2_nu")].parse().unwrap();
        assert!(chi2 < 1e-6);
    }
}

#[test]
fn thulium_lowest_ungerade_level_has_j_three() {
    let (h, rows) = table(&ok(&["levels", "--species", "tm", "--J", "0:12", "--model", "full", "--max-levels", "1", "--no-convergence"]));
    let (ij, ib, ie) = (col(&h, "J"), col(&h, "block"), col(&h, "energy_cm"));
    let lowest = |inv: &str| {
        rows.iter()
            .filter(|r| r[ib].starts_with(inv))
            .min_by(|a, b| a[ie].parse::<f64>().unwrap().total_cmp(&b[ie].parse().unwrap()))
            .map(|r| r[ij].parse::<u32>().unwrap())
            .unwrap()
    };
    assert_eq!(lowest("u/"), 3);
    assert_eq!(lowest("g/"), 0);
}

#[test]
fn erbium_weak_tensors_shift_levels_by_about_a_wavenumber() {
    let levels = |model: &str| -> Vec<BoundLevel> {
        serde_json::from_str(&ok(&[
            "levels", "--species", "er", "--J", "0:2", "--model", model, "--max-levels", "8", "--no-convergence",
            "--format", "json",
        ]))
        .unwrap()
    };
    let (two, full) = (levels("two_tensor"), levels("full"));
    assert_eq!(two.len(), full.len());
    let mut d: Vec<f64> = two
        .iter()
        .zip(&full)
        .map(|(a, b)| {
            assert_eq!((a.j_total, a.block, a.index), (b.j_total, b.block, b.index));
            (a.energy - b.energy).abs()
        })
        .collect();
    d.sort_by(f64::total_cmp);
    let median = d[d.len() / 2];
    assert!((0.1..10.0).contains(&median), "median {median}");
}

#[test]
fn empty_spectrum_is_header_only() {
    let out = ok(&["levels", "--species", "tm", "--J", "0", "--e-max", "-5000"]);
    assert_eq!(out.trim_end(), "J,block,index,energy_cm,v,nodes,omega_label,label_n,label_weight,mean_abs_omega1,top3_channels");
}

#[test]
fn level_rows_carry_assignments() {
    let (h, rows) = table(&ok(&["levels", "--species", "tm", "--J", "0", "--blocks", "g/even", "--max-levels", "3", "--no-convergence"]));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][col(&h, "omega_label")], "0g+");
    assert_eq!(rows[0][col(&h, "v")], "0");
    let top = &rows[0][col(&h, "top3_channels")];
    assert_eq!(top.split(';').count(), 3);
    let e: Vec<f64> = rows.iter().map(|r| r[col(&h, "energy_cm")].parse().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn manifest_sidecar_and_reproducibility() {
    let a = tmp("run_a.csv");
    let b = tmp("run_b.csv");
    let args = |p: &Path| {
        vec!["levels", "--species", "tm", "--J", "0:1", "--max-levels", "4", "-o", p.to_str().unwrap()]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    for p in [&a, &b] {
        let o = bin().args(args(p)).output().unwrap();
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ma: Value = serde_json::from_slice(&std::fs::read(tmp("run_a.csv.manifest.json")).unwrap()).unwrap();
    let mb: Value = serde_json::from_slice(&std::fs::read(tmp("run_b.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["output_sha256"], mb["output_sha256"]);
    assert_eq!(ma["config"]["params"]["species"], "tm");
    assert!(ma["constants"]["codata"].is_object());
    assert!(ma["build"]["version"].is_string());
    let conv = ma["convergence"].as_array().unwrap();
    assert_eq!(conv.len(), 4);
    for r in conv {
        assert!(r["max_shift"].as_f64().unwrap() < 0.01);
    }
}

#[test]
fn manifest_goes_to_stderr_without_output_file() {
    let o = run(&["curves", "--species", "er", "--grid", "10:10:1"]);
    assert!(o.status.success());
    let m: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["config"]["command"], "curves");
    assert!(m["output"].is_null());
}

#[test]
fn constants_file_from_environment() {
    let text = std::fs::read_to_string(data("constants.toml")).unwrap();
    let path = tmp("constants.toml");
    std::fs::write(&path, &text).unwrap();
    let o = bin().args(["constants"]).env("LNDIMER_CONSTANTS", &path).output().unwrap();
    assert!(o.status.success());
    let m: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["config"]["constants_file"], path.to_str().unwrap());
    assert_eq!(m["inputs"][0]["path"], path.to_str().unwrap());
    let bad = tmp("broken.toml");
    std::fs::write(&bad, "codata = 3\n").unwrap();
    let o = bin().args(["constants"]).env("LNDIMER_CONSTANTS", &bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["constants", "--constants", "/no/such.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such.toml"));
}

#[test]
fn spectroscopic_constants_for_a_species() {
    let v: Value = serde_json::from_str(&ok(&["constants", "--species", "er"])).unwrap();
    let s = &v["spectroscopic"];
    assert!((s["b_e"].as_f64().unwrap() / 0.0095 - 1.0).abs() < 0.03);
    assert!((8.3..9.0).contains(&s["r_e"].as_f64().unwrap()));
}

#[test]
fn unconverged_levels_exit_three_after_writing() {
    let out = tmp("strict.csv");
    let o = run(&[
        "levels", "--species", "tm", "--J", "0", "--blocks", "g/even", "--max-levels", "3", "--max-shift", "1e-12", "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not converged"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 4);
}
