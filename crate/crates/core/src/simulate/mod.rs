//! Monte Carlo checks: random-walk returns, oriented-percolation survival,
//! a bisection for the finite-horizon critical point, and double
//! connections at `p = 1`.
//!
//! All randomness comes from keyed streams (see [`rng`]), so every estimate
//! is a function of its configuration alone.

pub mod flow;
pub mod rng;

use std::collections::HashSet;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Offset, Profile};
use crate::returns::{Method, ReturnSeries};

pub use flow::{double_connection_reference, op_double_connection_sum, DoubleConnectionConfig};
use rng::{child_key, site_key, stream, Stream};

/// Smallest trial count accepted for a reported estimate.
pub const MIN_TRIALS: u64 = 100;
/// Default population cap per generation.
pub const DEFAULT_MAX_ACTIVE: usize = 5_000;

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
    pub dropped_trials: u64,
    /// Trials that hit the population cap and were counted as surviving.
    pub flagged_trials: u64,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Seconds; omitted from reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl SimEstimate {
    fn proportion(successes: u64, trials: u64, seed: u64, config: serde_json::Value) -> Self {
        let value = successes as f64 / trials as f64;
        SimEstimate {
            value,
            stderr: (value * (1.0 - value) / trials as f64).sqrt(),
            trials,
            dropped_trials: 0,
            flagged_trials: 0,
            seed,
            config,
            wall_time: None,
        }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid_argument(
            "trials",
            format!("need at least {MIN_TRIALS} trials, got {trials}"),
        ));
    }
    Ok(())
}

/// Draws steps and occupied bonds for one kernel.
#[derive(Clone, Debug)]
enum Sampler {
    Uniform { dim: usize, range: i32, bonds: u64 },
    Table { entries: Vec<(Offset, f64)>, cdf: Vec<f64> },
}

impl Sampler {
    fn new(kernel: &KernelSpec) -> Self {
        match kernel.profile() {
            Profile::UniformBox => Sampler::Uniform {
                dim: kernel.dim(),
                range: kernel.range() as i32,
                bonds: kernel.box_size() - 1,
            },
            Profile::ExplicitTable(entries) => {
                let mut acc = 0.0;
                let cdf = entries
                    .iter()
                    .map(|(_, m)| {
                        acc += m;
                        acc
                    })
                    .collect();
                Sampler::Table {
                    entries: entries.clone(),
                    cdf,
                }
            }
        }
    }

    fn box_offset(rng: &mut Stream, dim: usize, range: i32) -> Offset {
        loop {
            let x: Offset = (0..dim).map(|_| rng.random_range(-range..=range)).collect();
            if x.iter().any(|&c| c != 0) {
                return x;
            }
        }
    }

    /// One step of the walk.
    fn step(&self, rng: &mut Stream) -> Offset {
        match self {
            Sampler::Uniform { dim, range, .. } => Self::box_offset(rng, *dim, *range),
            Sampler::Table { entries, cdf } => {
                let u: f64 = rng.random::<f64>() * cdf.last().copied().unwrap_or(1.0);
                let i = cdf.partition_point(|&c| c <= u).min(entries.len() - 1);
                entries[i].0.clone()
            }
        }
    }

    /// Occupied bonds out of one site at intensity `p`, each offset `y`
    /// independently with probability `p D(y)`. For the uniform kernel the
    /// uniforms of the `M - 1` bonds are generated as increasing order
    /// statistics and stopped at the first one above `p / (M - 1)`; each is
    /// attached to a fresh offset chosen by rejection. The draws depend on
    /// `p` only through the stopping point, so the set grows with `p`.
    fn occupied(&self, rng: &mut Stream, p: f64, out: &mut Vec<Offset>) {
        out.clear();
        match self {
            Sampler::Uniform { dim, range, bonds } => {
                let q = p / *bonds as f64;
                let mut u = 0.0f64;
                for k in 0..*bonds {
                    let v = 1.0 - rng.random::<f64>();
                    u = 1.0 - (1.0 - u) * v.powf(1.0 / (bonds - k) as f64);
                    if u >= q {
                        break;
                    }
                    loop {
                        let x = Self::box_offset(rng, *dim, *range);
                        if !out.contains(&x) {
                            out.push(x);
                            break;
                        }
                    }
                }
            }
            Sampler::Table { entries, .. } => {
                for (x, m) in entries {
                    if rng.random::<f64>() < p * m {
                        out.push(x.clone());
                    }
                }
            }
        }
    }

    /// Number of occupied bonds, drawn as in [`Sampler::occupied`] without
    /// placing them.
    fn occupied_count(&self, rng: &mut Stream, p: f64) -> u64 {
        match self {
            Sampler::Uniform { bonds, .. } => {
                let q = p / *bonds as f64;
                let mut u = 0.0f64;
                let mut k = 0;
                while k < *bonds {
                    let v = 1.0 - rng.random::<f64>();
                    u = 1.0 - (1.0 - u) * v.powf(1.0 / (bonds - k) as f64);
                    if u >= q {
                        break;
                    }
                    k += 1;
                }
                k
            }
            Sampler::Table { entries, .. } => entries
                .iter()
                .filter(|(_, m)| rng.random::<f64>() < p * m)
                .count() as u64,
        }
    }
}

/// Estimates `r_n` as the fraction of `n`-step walks ending at the origin.
pub fn mc_return(kernel: &KernelSpec, n: usize, trials: u64, seed: u64) -> Result<SimEstimate> {
    if n == 0 {
        return Err(Error::invalid_argument("n", "must be at least 1"));
    }
    check_trials(trials)?;
    let start = Instant::now();
    let sampler = Sampler::new(kernel);
    let dim = kernel.dim();
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = stream(seed, t, 0, 0);
            let mut pos = vec![0i64; dim];
            for _ in 0..n {
                for (p, s) in pos.iter_mut().zip(sampler.step(&mut rng)) {
                    *p += s as i64;
                }
            }
            pos.iter().all(|&c| c == 0)
        })
        .count() as u64;
    let config = serde_json::json!({
        "op": "mc_return", "d": dim, "L": kernel.range(), "n": n,
    });
    let mut est = SimEstimate::proportion(hits, trials, seed, config);
    est.wall_time = Some(start.elapsed().as_secs_f64());
    Ok(est)
}

/// Monte Carlo estimates of `r_1..r_N` packaged as a series.
pub fn mc_return_series(kernel: &KernelSpec, n_max: usize, trials: u64, seed: u64) -> Result<ReturnSeries> {
    let mut values = vec![1.0];
    for n in 1..=n_max {
        values.push(mc_return(kernel, n, trials, seed.wrapping_add(n as u64))?.value);
    }
    Ok(ReturnSeries::from_values(kernel.dim(), kernel.range(), values, Method::MonteCarlo))
}

/// Oriented-percolation run parameters (no vertical bonds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: f64,
    pub horizon: usize,
    pub trials: u64,
    pub seed: u64,
    /// Survival fraction defining the crossing point in the bisection.
    /// Defaults to `2 / T`.
    pub survival_threshold: Option<f64>,
    /// Skip site de-duplication, turning the process into a Galton-Watson tree.
    pub ignore_collisions: bool,
    pub max_active: usize,
}

impl SimConfig {
    pub fn new(p: f64, horizon: usize, trials: u64, seed: u64) -> Self {
        SimConfig {
            p,
            horizon,
            trials,
            seed,
            survival_threshold: None,
            ignore_collisions: false,
            max_active: DEFAULT_MAX_ACTIVE,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.survival_threshold
            .unwrap_or_else(|| (2.0 / self.horizon.max(1) as f64).min(0.5))
    }

    fn validate(&self, kernel: &KernelSpec) -> Result<()> {
        check_trials(self.trials)?;
        check_intensity(self.p, kernel)?;
        if self.max_active == 0 {
            return Err(Error::invalid_argument("max_active", "must be positive"));
        }
        if let Some(t) = self.survival_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid_argument("survival_threshold", "must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

fn check_intensity(p: f64, kernel: &KernelSpec) -> Result<()> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::invalid_argument("p", "must be a nonnegative number"));
    }
    if p * kernel.sup_mass() > 1.0 {
        return Err(Error::invalid_argument(
            "p",
            format!("p sup D = {} exceeds 1, bonds would not be probabilities", p * kernel.sup_mass()),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Outcome {
    survived: bool,
    flagged: bool,
}

const ROOT_KEY: u64 = 0x0123_4567_89ab_cdef;

fn run_trial(sampler: &Sampler, cfg: &SimConfig, p: f64, trial: u64) -> Outcome {
    let alive = Outcome { survived: true, flagged: false };
    let dead = Outcome { survived: false, flagged: false };
    let blown = Outcome { survived: true, flagged: true };
    if p == 0.0 {
        return if cfg.horizon == 0 { alive } else { dead };
    }
    if cfg.ignore_collisions {
        let mut active = vec![ROOT_KEY];
        for g in 0..cfg.horizon {
            let mut next = Vec::new();
            for &key in &active {
                let mut rng = stream(cfg.seed, trial, g as u64, key);
                let c = sampler.occupied_count(&mut rng, p);
                next.extend((0..c).map(|r| child_key(key, r)));
            }
            if next.is_empty() {
                return dead;
            }
            if next.len() > cfg.max_active {
                return blown;
            }
            active = next;
        }
        return alive;
    }
    let dim = match sampler {
        Sampler::Uniform { dim, .. } => *dim,
        Sampler::Table { entries, .. } => entries[0].0.len(),
    };
    let mut active: Vec<Offset> = vec![vec![0; dim]];
    let mut bonds = Vec::new();
    for g in 0..cfg.horizon {
        let mut next: HashSet<Offset> = HashSet::new();
        for site in &active {
            let mut rng = stream(cfg.seed, trial, g as u64, site_key(site));
            sampler.occupied(&mut rng, p, &mut bonds);
            for b in &bonds {
                next.insert(site.iter().zip(b).map(|(x, y)| x + y).collect());
            }
        }
        if next.is_empty() {
            return dead;
        }
        if next.len() > cfg.max_active {
            return blown;
        }
        active = next.into_iter().collect();
    }
    alive
}

fn outcomes(sampler: &Sampler, cfg: &SimConfig, p: f64) -> Vec<Outcome> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(sampler, cfg, p, t))
        .collect()
}

/// Fraction of trials in which the cluster of `(o, 0)` reaches generation `T`.
pub fn op_survival(kernel: &KernelSpec, cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate(kernel)?;
    let start = Instant::now();
    let sampler = Sampler::new(kernel);
    let out = outcomes(&sampler, cfg, cfg.p);
    let survived = out.iter().filter(|o| o.survived).count() as u64;
    let flagged = out.iter().filter(|o| o.flagged).count() as u64;
    let mut est = SimEstimate::proportion(survived, cfg.trials, cfg.seed, echo(kernel, cfg));
    est.flagged_trials = flagged;
    est.wall_time = Some(start.elapsed().as_secs_f64());
    Ok(est)
}

fn echo(kernel: &KernelSpec, cfg: &SimConfig) -> serde_json::Value {
    serde_json::json!({
        "d": kernel.dim(),
        "L": kernel.range(),
        "p": cfg.p,
        "horizon": cfg.horizon,
        "survival_threshold": cfg.threshold(),
        "ignore_collisions": cfg.ignore_collisions,
        "max_active": cfg.max_active,
    })
}

/// Bisection settings for [`op_pc_estimate`]. `base.p` is ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcSearch {
    pub base: SimConfig,
    pub bracket: (f64, f64),
    pub tol: f64,
}

/// Half-width of the finite difference used for the survival slope.
pub const SLOPE_STEP: f64 = 0.01;

/// Survival curves evaluated with common random numbers, checked for
/// per-trial monotonicity in `p` as they are added.
struct CrnCurve<'a> {
    sampler: Sampler,
    cfg: &'a SimConfig,
    evaluated: Vec<(f64, Vec<Outcome>)>,
}

impl CrnCurve<'_> {
    fn eval(&mut self, p: f64) -> Result<f64> {
        let out = outcomes(&self.sampler, self.cfg, p);
        for (q, prev) in &self.evaluated {
            let (lo, hi) = if *q <= p { (prev, &out) } else { (&out, prev) };
            if let Some(t) = lo.iter().zip(hi).position(|(a, b)| a.survived && !b.survived) {
                return Err(Error::NonMonotone { trial: t as u64 });
            }
        }
        let frac = out.iter().filter(|o| o.survived).count() as f64 / out.len() as f64;
        self.evaluated.push((p, out));
        Ok(frac)
    }
}

/// Finite-horizon critical point: the `p` where the survival fraction
/// crosses the threshold, found by bisection with common random numbers.
/// The horizon biases the estimate at order `1/T`.
pub fn op_pc_estimate(kernel: &KernelSpec, search: &PcSearch) -> Result<SimEstimate> {
    let (lo, hi) = search.bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::Bracket {
            lo,
            hi,
            reason: "need 0 <= p_lo < p_hi".into(),
        });
    }
    if !(search.tol > 0.0) {
        return Err(Error::invalid_argument("tol", "must be positive"));
    }
    let cfg = &search.base;
    cfg.validate(kernel)?;
    check_intensity(hi + SLOPE_STEP, kernel).map_err(|e| Error::Bracket {
        lo,
        hi,
        reason: e.to_string(),
    })?;
    let start = Instant::now();
    let threshold = cfg.threshold();
    let mut curve = CrnCurve {
        sampler: Sampler::new(kernel),
        cfg,
        evaluated: Vec::new(),
    };
    let p_lo = curve.eval(lo)?;
    let p_hi = curve.eval(hi)?;
    if p_lo >= threshold || p_hi < threshold {
        return Err(Error::Bracket {
            lo,
            hi,
            reason: format!(
                "survival {p_lo:.4} at p_lo and {p_hi:.4} at p_hi do not straddle the threshold {threshold:.4}"
            ),
        });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > search.tol {
        let mid = 0.5 * (a + b);
        log::info!("bisection: p in [{a:.5}, {b:.5}]");
        if curve.eval(mid)? >= threshold {
            b = mid;
        } else {
            a = mid;
        }
    }
    let estimate = 0.5 * (a + b);
    let below = (estimate - SLOPE_STEP).max(0.0);
    let above = estimate + SLOPE_STEP;
    let slope = (curve.eval(above)? - curve.eval(below)?) / (above - below);
    let stderr = (threshold * (1.0 - threshold) / cfg.trials as f64).sqrt() / slope.max(1e-12);
    let flagged = curve
        .evaluated
        .iter()
        .map(|(_, o)| o.iter().filter(|x| x.flagged).count() as u64)
        .max()
        .unwrap_or(0);
    let mut evals: Vec<(f64, f64)> = curve
        .evaluated
        .iter()
        .map(|(p, o)| (*p, o.iter().filter(|x| x.survived).count() as f64 / o.len() as f64))
        .collect();
    evals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut config = echo(kernel, cfg);
    config["bracket"] = serde_json::json!([lo, hi]);
    config["tol"] = serde_json::json!(search.tol);
    config["slope"] = serde_json::json!(slope);
    config["evaluations"] = serde_json::json!(evals);
    config.as_object_mut().unwrap().remove("p");
    Ok(SimEstimate {
        value: estimate,
        stderr,
        trials: cfg.trials,
        dropped_trials: 0,
        flagged_trials: flagged,
        seed: cfg.seed,
        config,
        wall_time: Some(start.elapsed().as_secs_f64()),
    })
}
