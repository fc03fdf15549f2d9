//! Acceptance criteria, evaluated on two runs of the bundled `paper-full` campaign.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use serde_json::Value;

const NEWTON_REL_TOL: f64 = 1e-10;
const LEMMA_REL_TOL: f64 = 1e-10;
const LEMMA_SAMPLES: u64 = 10_000;
const SPHERE_EQUALITY_REL: f64 = 1e-6;
const QUAD_FACTOR: f64 = 10.0;
const SERRE_DISK_TOL: f64 = 1e-8;
const PEANUT_MIN_DEFICIT: f64 = 1e-3;
const SERRE_EQUALITY_TOL: f64 = 1e-6;
const RANDOM_FIELDS: u64 = 100;
const CLIFFORD_DEFICIT_TOL: f64 = 1e-6;
const LOGSOB_FLOOR: f64 = -1e-8;
const RANDOM_TRIG: u64 = 100;
const REDUCTION_DIMS: [u64; 8] = [1, 2, 3, 4, 5, 6, 7, 8];
const COVERING_FRACTION: f64 = 0.999;
const WORST_GAP: f64 = 1e-6;
const COVERING_TARGETS: u64 = 10_000;
const JACOBIAN_TOL: f64 = 1e-8;
const PDE_TOL: f64 = 1e-6;
const SPECTRAL_EIGEN_TOL: f64 = 1e-8;
const GALERKIN_EIGEN_TOL: f64 = 1e-4;
const GALERKIN_RESOLUTION: u64 = 64;

/// Runtime budgets in milliseconds.
const BUDGET_MS: [u64; 7] = [30_000, 60_000, 60_000, 120_000, 120_000, 300_000, 0];
/// Whole-campaign budget.
const CAMPAIGN_MS: u64 = 600_000;

type Criterion = fn(&Run) -> Result<String, String>;

struct Run {
    records: Vec<Value>,
    timings: BTreeMap<String, u64>,
}

impl Run {
    fn record(&self, check_id: &str) -> Result<&Value, String> {
        self.records.iter().find(|r| r["check_id"] == check_id).ok_or(format!("missing record {check_id}"))
    }

    fn runtime(&self, ids: &[&str]) -> u64 {
        ids.iter().map(|id| self.timings.get(*id).copied().unwrap_or(0)).sum()
    }
}

fn num(r: &Value, key: &str) -> Result<f64, String> {
    r[key].as_f64().or_else(|| r["metadata"][key].as_f64()).ok_or(format!("{}: no number '{key}'", r["check_id"]))
}

fn count(r: &Value, key: &str) -> Result<u64, String> {
    r["metadata"][key].as_u64().ok_or(format!("{}: no count '{key}'", r["check_id"]))
}

fn flag(r: &Value, key: &str) -> bool {
    r[key].as_bool().or_else(|| r["metadata"][key].as_bool()).unwrap_or(false)
}

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within_budget(run: &Run, ids: &[&str], budget: u64) -> Result<String, String> {
    let ms = run.runtime(ids);
    ensure(budget == 0 || ms < budget, format!("runtime {ms} ms over budget {budget} ms"))?;
    Ok(format!("{ms} ms"))
}

fn newton_identities(run: &Run) -> Result<String, String> {
    let r = run.record("newton-identities::newton_identities")?;
    ensure(count(r, "samples")? == LEMMA_SAMPLES, "sample count")?;
    for key in ["trace_rel_err", "product_rel_err", "subset_rel_err"] {
        let e = num(r, key)?;
        ensure(e <= NEWTON_REL_TOL, format!("{key} = {e:e}"))?;
    }
    let t = within_budget(run, &["newton-identities"], BUDGET_MS[0])?;
    Ok(format!("worst relative error {:.2e}, {t}", num(r, "lhs")?))
}

fn matrix_lemmas(run: &Run) -> Result<String, String> {
    let mut worst = f64::INFINITY;
    for id in ["garding::garding_inequality", "det-tk-bound::det_tk_lower_bound", "amgm::amgm_det_trace"] {
        let r = run.record(id)?;
        ensure(count(r, "samples")? == LEMMA_SAMPLES, format!("{id}: sample count"))?;
        ensure(count(r, "failures")? == 0, format!("{id}: failures"))?;
        let rel = num(r, "worst_relative_deficit")?;
        ensure(rel >= -LEMMA_REL_TOL, format!("{id}: relative deficit {rel:e}"))?;
        ensure(flag(r, "require:equality_at_scalar_inputs"), format!("{id}: equality not detected at scalar inputs"))?;
        worst = worst.min(rel);
    }
    let t = within_budget(run, &["garding", "det-tk-bound", "amgm"], BUDGET_MS[1])?;
    Ok(format!("worst relative deficit {worst:.2e}, {t}"))
}

fn quermass(run: &Run) -> Result<String, String> {
    let s = run.record("quermass-sphere::quermass_main")?;
    ensure(count(s, "resolution")? == 64, "sphere resolution")?;
    let scale = num(s, "lhs")?.abs().max(num(s, "rhs")?.abs());
    let rel = num(s, "deficit")?.abs() / scale;
    ensure(flag(s, "equality") && rel <= SPHERE_EQUALITY_REL, format!("sphere relative deficit {rel:e}"))?;
    let e = run.record("quermass-ellipsoid::quermass_main")?;
    let (d, q) = (num(e, "deficit")?, num(e, "quad_error_est")?);
    ensure(!flag(e, "equality") && d > QUAD_FACTOR * q, format!("ellipsoid deficit {d:e} vs quadrature {q:e}"))?;
    for id in ["quermass-scale-ellipsoid", "quermass-scale-triaxial", "quermass-scale-sphere"] {
        let r = run.record(&format!("{id}::quermass_scale_invariance"))?;
        ensure(flag(r, "pass") && flag(r, "require:pass_and_sign_stable"), format!("{id} not scale invariant"))?;
        let lambdas = &r["metadata"]["lambdas"];
        ensure(*lambdas == serde_json::json!([0.5, 3.0]), format!("{id}: scale factors {lambdas}"))?;
    }
    let t = within_budget(
        run,
        &["quermass-sphere", "quermass-ellipsoid", "quermass-scale-ellipsoid", "quermass-scale-triaxial", "quermass-scale-sphere"],
        BUDGET_MS[2],
    )?;
    Ok(format!("sphere rel {rel:.1e}, ellipsoid deficit/quad {:.1e}, {t}", d / q.max(f64::MIN_POSITIVE)))
}

fn serre(run: &Run) -> Result<String, String> {
    let disk = num(run.record("serre-disk-identity::serre")?, "deficit")?;
    ensure(disk.abs() <= SERRE_DISK_TOL, format!("disk deficit {disk:e}"))?;
    let peanut = num(run.record("serre-peanut-identity::serre")?, "deficit")?;
    ensure(peanut > PEANUT_MIN_DEFICIT, format!("peanut deficit {peanut:e}"))?;
    let eq = num(run.record("serre-equality-half-square::serre")?, "deficit")?;
    ensure(eq.abs() <= SERRE_EQUALITY_TOL, format!("equality case deficit {eq:e}"))?;
    for id in ["serre-random-disk", "serre-random-peanut"] {
        let r = run.record(&format!("{id}::serre:random_fields"))?;
        ensure(count(r, "samples")? == RANDOM_FIELDS && count(r, "failures")? == 0 && flag(r, "pass"), format!("{id} failed"))?;
    }
    let t = within_budget(
        run,
        &["serre-disk-identity", "serre-peanut-identity", "serre-equality-half-square", "serre-random-disk", "serre-random-peanut"],
        BUDGET_MS[3],
    )?;
    Ok(format!("disk {disk:.1e}, peanut {peanut:.3}, equality {eq:.1e}, {t}"))
}

fn logsob(run: &Run) -> Result<String, String> {
    let target = 2.0 * PI * PI * (PI / 2.0).ln();
    let d = num(run.record("logsob-clifford-constant::logsob:sharp_m12")?, "deficit")?;
    ensure((d - target).abs() <= CLIFFORD_DEFICIT_TOL, format!("Clifford deficit {d} vs {target}"))?;
    let surfaces = ["great-circle-s2", "great-circle-s3", "equator-s3", "equator-s4", "clifford"];
    let mut ids = vec!["logsob-clifford-constant".to_string(), "logsob-constant-reduction".to_string()];
    for s in surfaces {
        let id = format!("logsob-random-{s}");
        let r = run.record(&format!("{id}::logsob:random_trig"))?;
        ensure(count(r, "samples")? == RANDOM_TRIG, format!("{id}: sample count"))?;
        let worst = num(r, "deficit")?;
        ensure(worst >= LOGSOB_FLOOR && count(r, "failures")? == 0, format!("{id}: worst deficit {worst:e}"))?;
        ids.push(id);
    }
    let red = run.record("logsob-constant-reduction::logsob:constant_reduction")?;
    ensure(red["metadata"]["dims"] == serde_json::json!(REDUCTION_DIMS), "reduction dimensions")?;
    ensure(flag(red, "pass") && count(red, "failures")? == 0, "constant reduction failed")?;
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let t = within_budget(run, &refs, BUDGET_MS[4])?;
    Ok(format!("Clifford deficit error {:.1e}, {t}", (d - target).abs()))
}

fn abp(run: &Run) -> Result<String, String> {
    let cases = [
        ("abp-great-circle", "abp.logsob_pde", "abp.jacobian_bound", "abp.logsob_covering"),
        ("abp-clifford", "abp.logsob_pde", "abp.jacobian_bound", "abp.logsob_covering"),
        ("abp-serre-disk", "abp.serre_pde", "abp.serre_jacobian", "abp.serre_covering"),
        ("abp-quermass-ellipsoid", "abp.quermass_pde", "abp.quermass_jacobian", "abp.quermass_covering"),
    ];
    let mut lowest = f64::INFINITY;
    for (id, pde, jac, cover) in cases {
        let p = run.record(&format!("{id}::{pde}"))?;
        let res = num(p, "lhs")?;
        ensure(res <= PDE_TOL, format!("{id}: PDE residual {res:e}"))?;
        let j = run.record(&format!("{id}::{jac}"))?;
        ensure(count(j, "failures")? == 0 && count(j, "in_v")? > 0, format!("{id}: Jacobian bound failures"))?;
        ensure(num(j, "deficit")? >= -JACOBIAN_TOL, format!("{id}: Jacobian deficit {:e}", num(j, "deficit")?))?;
        let c = run.record(&format!("{id}::{cover}"))?;
        let (fraction, gap) = (num(c, "rhs")?, num(c, "worst_gap")?);
        ensure(count(c, "targets")? == COVERING_TARGETS, format!("{id}: target count"))?;
        ensure(fraction >= COVERING_FRACTION && gap <= WORST_GAP, format!("{id}: fraction {fraction}, worst gap {gap:e}"))?;
        lowest = lowest.min(fraction);
    }
    let t = within_budget(run, &cases.map(|c| c.0), BUDGET_MS[5])?;
    Ok(format!("lowest covering fraction {lowest}, {t}"))
}

fn eigenfunctions(run: &Run) -> Result<String, String> {
    let mut out = Vec::new();
    for (id, tol) in [("eigen-great-circle", SPECTRAL_EIGEN_TOL), ("eigen-clifford", SPECTRAL_EIGEN_TOL), ("eigen-s2", GALERKIN_EIGEN_TOL)] {
        let r = run.record(&format!("{id}::logsob:eigenfunction"))?;
        let res = num(r, "lhs")?;
        ensure(res <= tol, format!("{id}: residual {res:e} above {tol:e}"))?;
        out.push(format!("{res:.1e}"));
    }
    let s2 = run.record("eigen-s2::logsob:eigenfunction")?;
    ensure(count(s2, "n")? == 2 && count(s2, "resolution")? == GALERKIN_RESOLUTION, "S² dimension or resolution")?;
    Ok(format!("residuals {}", out.join(", ")))
}

fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_abp-verify"))
}

fn run_campaign(out: &Path) -> Result<Run, String> {
    let status = Command::new(binary())
        .args(["--config", "paper-full", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.code() != Some(0) {
        return Err(format!("paper-full exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stdout)));
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let timings: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(out.join("timings.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let timings = timings
        .iter()
        .map(|t| (t["id"].as_str().unwrap_or_default().to_string(), t["runtime_ms"].as_u64().unwrap_or(u64::MAX)))
        .collect();
    let records = report["records"].as_array().cloned().unwrap_or_default();
    Ok(Run { records, timings })
}

fn determinism(a: &Path, b: &Path, fixtures: &Path, scratch: &Path) -> Result<String, String> {
    for file in ["report.json", "report.csv"] {
        let x = std::fs::read(a.join(file)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(file)).map_err(|e| e.to_string())?;
        ensure(x == y, format!("{file} differs between runs"))?;
    }
    for (fixture, expected) in [("empty.json", 0), ("unknown_surface.json", 3), ("failing.json", 1), ("malformed.json", 2)] {
        let out = Command::new(binary())
            .arg("--config")
            .arg(fixtures.join(fixture))
            .arg("--out")
            .arg(scratch)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(expected), format!("{fixture}: exit {:?}, expected {expected}", out.status.code()))?;
    }
    Ok("report.json and report.csv byte-identical, fixture exit codes 0/3/1/2".into())
}

fn main() -> ExitCode {
    let root = std::env::temp_dir().join(format!("abp-acceptance-{}", std::process::id()));
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let (first, second) = (root.join("run1"), root.join("run2"));
    let runs = run_campaign(&first).and_then(|a| run_campaign(&second).map(|_| a));
    let mut failed = 0;
    let mut line = |n: usize, name: &str, result: Result<String, String>| {
        match result {
            Ok(detail) => println!("PASS criterion {n} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n} {name}: {why}");
            }
        }
    };
    match &runs {
        Ok(run) => {
            let total: u64 = run.timings.values().sum();
            let criteria: [(&str, Criterion); 7] = [
                ("newton-identities", newton_identities),
                ("matrix-lemmas", matrix_lemmas),
                ("quermass", quermass),
                ("serre", serre),
                ("log-sobolev", logsob),
                ("abp-machinery", abp),
                ("eigenfunction-identity", eigenfunctions),
            ];
            for (i, (name, f)) in criteria.iter().enumerate() {
                line(i + 1, name, f(run));
            }
            let det = determinism(&first, &second, &fixtures, &root.join("fixture"))
                .and_then(|d| ensure(total < CAMPAIGN_MS, format!("campaign took {total} ms")).map(|_| format!("{d}, campaign {total} ms")));
            line(8, "cli-determinism", det);
        }
        Err(e) => {
            for (i, name) in ["newton-identities", "matrix-lemmas", "quermass", "serre", "log-sobolev", "abp-machinery", "eigenfunction-identity", "cli-determinism"]
                .iter()
                .enumerate()
            {
                line(i + 1, name, Err(e.clone()));
            }
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
