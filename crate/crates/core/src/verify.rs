//! The acceptance checks, runnable from the CLI and the test suite.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::diagrams::{saw_correction_bound, saw_loop_sum};
use crate::error::{Error, Result};
use crate::kernels::make_uniform;
use crate::oracle::{fourier_return, triangle_abel_quadrature, triangle_abel_series};
use crate::returns::continuum::{continuum_center_density_exact, continuum_oracle, ORACLE_STEP};
use crate::returns::{
    continuum_center_density, discretized_return, return_series, return_series_dense,
    return_series_integer, return_series_truncated, Truncation,
};
use crate::simulate::{mc_return, op_pc_estimate, PcSearch, SimConfig};
use crate::sums::{cp_epsilon_sum, compare_discrete_continuum, predict_pc, triangle_sum, CompareVariant, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fast,
    Full,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            other => Err(Error::invalid_argument(
                "suite",
                format!("unknown suite `{other}` (expected fast or full)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// Non-gating checks are reported but do not affect the exit status.
    pub gating: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.gating)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = match (c.passed, c.gating) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "SOFT-FAIL",
            };
            let _ = writeln!(
                out,
                "[{status}] {:>2} {:<34} {:>7.2}s  {}",
                c.id, c.name, c.seconds, c.detail
            );
        }
        out
    }
}

/// Settings for the checks; `seed` feeds every Monte Carlo check.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 20240611 }
    }
}

type Check = fn(&VerifyOptions) -> Result<(bool, String)>;

pub const CHECKS: [(u32, &str, Check); 11] = [
    (1, "exact second return", check_second_return),
    (2, "method equivalence", check_method_equivalence),
    (3, "Monte Carlo return oracle", check_monte_carlo),
    (4, "Irwin-Hall validation", check_irwin_hall),
    (5, "continuum convergence", check_continuum_convergence),
    (6, "series invariants", check_invariant_suite),
    (7, "SAW decomposition", check_saw_decomposition),
    (8, "triangle diagnostic", check_triangle),
    (9, "contact-process limit", check_cp_limit),
    (10, "ghost-mode calibration", check_ghost_calibration),
    (11, "exploratory OP critical point", check_exploratory_op),
];

pub fn suite_ids(suite: Suite) -> Vec<u32> {
    match suite {
        Suite::Fast => vec![1, 2, 4, 5, 6, 7, 8, 9],
        Suite::Full => (1..=11).collect(),
    }
}

pub fn is_gating(id: u32) -> bool {
    id != 11
}

pub fn run_check(id: u32, opts: &VerifyOptions) -> Result<CheckResult> {
    let (_, name, f) = CHECKS
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::invalid_argument("check", format!("no check {id}")))?;
    let start = Instant::now();
    let (passed, detail) = match f(opts) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CheckResult {
        id,
        name: name.to_string(),
        passed,
        gating: is_gating(id),
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn verify(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for id in suite_ids(suite) {
        let r = run_check(id, opts)?;
        log::info!("check {id}: {}", if r.passed { "pass" } else { "fail" });
        checks.push(r);
    }
    Ok(VerifyReport { suite, checks })
}

fn check_second_return(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut bad = Vec::new();
    for d in 1..=4 {
        for l in 1..=5u32 {
            let k = make_uniform(d, l)?;
            let s = return_series_integer(&k, 2)?;
            let want = BigRational::new(1.into(), ((2 * l as i64 + 1).pow(d as u32) - 1).into());
            if s.exact.as_ref().unwrap()[2] != want {
                bad.push(format!("d={d},L={l}"));
            }
        }
    }
    Ok((bad.is_empty(), format!("20 cases exact, mismatches: {bad:?}")))
}

fn check_method_equivalence(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst_dense: f64 = 0.0;
    for d in 1..=3 {
        for l in 1..=3u32 {
            let k = make_uniform(d, l)?;
            let a = return_series_integer(&k, 16)?;
            let b = return_series_dense(&k, 16)?;
            for (x, y) in a.values.iter().zip(&b.values) {
                worst_dense = worst_dense.max((x - y).abs());
            }
        }
    }
    let mut worst_fourier: f64 = 0.0;
    for d in 1..=2 {
        for l in 1..=3u32 {
            let k = make_uniform(d, l)?;
            let a = return_series_integer(&k, 10)?;
            let b = return_series_dense(&k, 10)?;
            for n in 0..=10 {
                let q = fourier_return(&k, n, 64)?;
                worst_fourier = worst_fourier
                    .max((a.values[n] - q).abs())
                    .max((b.values[n] - q).abs());
            }
        }
    }
    Ok((
        worst_dense <= 1e-12 && worst_fourier <= 1e-8,
        format!("max |integer-dense| = {worst_dense:.2e}, max |route-quadrature| = {worst_fourier:.2e}"),
    ))
}

fn check_monte_carlo(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, l, n) in [(1usize, 1u32, 2usize), (2, 2, 4), (3, 1, 6)] {
        let k = make_uniform(d, l)?;
        let exact = return_series(&k, n)?.values[n];
        let e = mc_return(&k, n, 1_000_000, opts.seed)?;
        let z = (e.value - exact) / e.stderr;
        ok &= z.abs() <= 4.0;
        parts.push(format!("({d},{l},{n}) z={z:+.2}"));
    }
    Ok((ok, parts.join(", ")))
}

fn check_irwin_hall(_: &VerifyOptions) -> Result<(bool, String)> {
    let oracle = continuum_oracle(10, ORACLE_STEP);
    let worst = oracle
        .iter()
        .enumerate()
        .map(|(i, o)| (continuum_center_density(i + 1) - o).abs())
        .fold(0.0, f64::max);
    let v2 = continuum_center_density_exact(2) == BigRational::new(1.into(), 2.into());
    let v3 = continuum_center_density_exact(3) == BigRational::new(3.into(), 8.into());
    Ok((
        worst <= 1e-4 && v2 && v3,
        format!("max |closed - oracle| (n<=10) = {worst:.2e}, v2=1/2 {v2}, v3=3/8 {v3}"),
    ))
}

fn check_continuum_convergence(_: &VerifyOptions) -> Result<(bool, String)> {
    let ranges = [4, 8, 16, 32];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, variant) in [
        ("alpha=0", CompareVariant::Weighted { alpha: 0 }),
        ("even", CompareVariant::Even),
    ] {
        let r = compare_discrete_continuum(5, &ranges, variant, Truncation::default(), false)?;
        let spread = r.ratio_spread();
        ok &= spread <= 2.0 && r.rows.iter().all(|x| x.tail_valid);
        let ratios: Vec<String> = r.rows.iter().map(|x| format!("{:.4}", x.ratio)).collect();
        parts.push(format!("{label}: ratios [{}] spread {spread:.3}", ratios.join(", ")));
    }
    Ok((ok, parts.join("; ")))
}

/// `max_{2 <= n <= 30} r_n n^{d/2} / beta`.
fn gauss_constant_window(values: &[f64], dim: usize, beta: f64) -> f64 {
    (2..=30)
        .map(|n| values[n] * (n as f64).powf(dim as f64 / 2.0) / beta)
        .fold(0.0, f64::max)
}

fn check_invariant_suite(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut ok = true;
    let mut failures = Vec::new();
    let mut count = 0;
    let cases: Vec<(usize, u32, usize)> = (1..=3)
        .flat_map(|d| (1..=3u32).map(move |l| (d, l, 60)))
        .chain([(4, 2, 200), (5, 1, 200), (5, 4, 200), (5, 8, 200), (5, 16, 200), (7, 2, 200), (7, 4, 200)])
        .collect();
    for (d, l, n) in cases {
        let s = return_series(&make_uniform(d, l)?, n)?;
        let rep = s.check_invariants();
        count += 1;
        if !rep.all_hold() {
            ok = false;
            failures.push(format!("d={d},L={l}: {rep:?}"));
        }
    }
    let mut consts = Vec::new();
    for l in [4, 8, 16] {
        let s = return_series(&make_uniform(5, l)?, 30)?;
        consts.push(gauss_constant_window(&s.values, 5, s.beta));
    }
    let spread = consts.iter().cloned().fold(f64::MIN, f64::max) / consts.iter().cloned().fold(f64::MAX, f64::min);
    ok &= spread <= 2.0;
    // discretized walk: q^{*n}(o) <= (1-eps)^n + C beta / max(1, n eps)^{d/2}
    let s = return_series(&make_uniform(5, 4)?, 200)?;
    let gc = s.gauss_constant;
    let mut disc = Vec::new();
    for eps in [1.0, 0.5, 0.25] {
        let mut c: f64 = 0.0;
        for n in 1..=200 {
            let q = discretized_return(&s, eps, n)?;
            let excess = q - (1.0 - eps).powi(n as i32);
            let scale = (n as f64 * eps).max(1.0).powf(2.5);
            c = c.max(excess * scale / s.beta);
        }
        ok &= c <= 2.0 * gc && c >= 0.5 * gc;
        disc.push(format!("{c:.3}"));
    }
    Ok((
        ok,
        format!(
            "{count} series invariant-clean{}; gauss const d=5 L=4,8,16: [{:.3}, {:.3}, {:.3}] spread {spread:.3}; discretized C (eps=1,1/2,1/4) [{}] vs {gc:.3}",
            if failures.is_empty() { String::new() } else { format!(" except {failures:?}") },
            consts[0],
            consts[1],
            consts[2],
            disc.join(", ")
        ),
    ))
}

fn check_saw_decomposition(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [1u32, 2] {
        let k = make_uniform(5, l)?;
        let e = saw_loop_sum(&k, 8)?;
        let defect = e.defect();
        let series = return_series_truncated(&k, Truncation::default())?;
        let bound = saw_correction_bound(&series)?;
        ok &= defect >= 0.0 && defect <= bound.value && bound.valid;
        parts.push(format!("L={l}: defect {defect:.3e} <= bound {:.3e}", bound.value));
    }
    Ok((ok, parts.join(", ")))
}

fn check_triangle(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut scaled = Vec::new();
    let mut ok = true;
    for l in [2u32, 3, 4] {
        let s = return_series_truncated(&make_uniform(7, l)?, Truncation::default())?;
        let t = triangle_sum(&s);
        ok &= t.valid;
        scaled.push(t.value * (l as f64).powi(7));
    }
    let spread = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min);
    ok &= spread <= 2.0;
    // d=2: both sides diverge, so compare the Abel-regularized forms at z
    let z = 0.9;
    let mut worst: f64 = 0.0;
    for l in [1u32, 2] {
        let k = make_uniform(2, l)?;
        let s = return_series(&k, 800)?;
        let a = triangle_abel_series(&s, z);
        let b = triangle_abel_quadrature(&k, z, 512)?;
        worst = worst.max((a - b).abs());
    }
    ok &= worst <= 1e-6;
    Ok((
        ok,
        format!(
            "T L^7 (L=2,3,4) = [{:.5}, {:.5}, {:.5}] spread {spread:.3}; d=2 series vs quadrature at z={z}: {worst:.2e}",
            scaled[0], scaled[1], scaled[2]
        ),
    ))
}

fn check_cp_limit(_: &VerifyOptions) -> Result<(bool, String)> {
    let s = return_series(&make_uniform(5, 4)?, 200)?;
    let f = |e: f64| cp_epsilon_sum(&s, e);
    let (a, b, c) = (f(0.2)?, f(0.1)?, f(0.05)?);
    let s_all = a.s_all;
    let constant = ((a.value - s_all).abs() / 0.2).max((b.value - s_all).abs() / 0.1);
    let gap = (c.value - s_all).abs();
    let ok = gap <= constant * 0.05 && a.tail_valid && b.tail_valid && c.tail_valid;
    Ok((
        ok,
        format!("S_all {s_all:.6e}; C = {constant:.4e}; |f(0.05) - S_all| = {gap:.3e} <= {:.3e}", constant * 0.05),
    ))
}

fn check_ghost_calibration(opts: &VerifyOptions) -> Result<(bool, String)> {
    let k = make_uniform(5, 2)?;
    let mut base = SimConfig::new(0.0, 200, 10_000, opts.seed);
    base.ignore_collisions = true;
    let search = PcSearch {
        base,
        bracket: (0.9, 1.1),
        tol: 1e-3,
    };
    let e = op_pc_estimate(&k, &search)?;
    let gap = (e.value - 1.0).abs();
    Ok((gap <= 0.02, format!("estimate {:.4} +- {:.4}, |gap| {gap:.4}", e.value, e.stderr)))
}

fn check_exploratory_op(opts: &VerifyOptions) -> Result<(bool, String)> {
    let k = make_uniform(5, 2)?;
    let prediction = predict_pc(Model::Op, &k, Truncation::default(), false)?;
    let search = PcSearch {
        base: SimConfig::new(0.0, 200, 4_000, opts.seed),
        bracket: (0.9, 1.2),
        tol: 1e-3,
    };
    let e = op_pc_estimate(&k, &search)?;
    let gap = e.value - prediction.p_c_leading;
    Ok((
        gap.abs() <= 0.02,
        format!(
            "estimate {:.4} +- {:.4} vs 1 + S_even/2 = {:.4}, gap {gap:+.4}",
            e.value, e.stderr, prediction.p_c_leading
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites() {
        assert_eq!(suite_ids(Suite::Fast).len(), 8);
        assert_eq!(suite_ids(Suite::Full).len(), 11);
        assert!("nosuch".parse::<Suite>().is_err());
        assert!(!is_gating(11));
    }

    #[test]
    fn cheap_checks_pass() {
        let o = VerifyOptions::default();
        for id in [1, 4] {
            let r = run_check(id, &o).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
