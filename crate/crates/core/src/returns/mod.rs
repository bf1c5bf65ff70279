//! Return probabilities `r_n = D^{*n}(o)` and their tails.

pub mod continuum;
pub mod dense;
pub mod integer;
pub mod tail;

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numeric::{binomial_weights, compensated_sum, ln_factorials, rational_to_f64};

pub use continuum::{continuum_center_density, ContinuumReturns};
pub use dense::{dense_returns, max_dense_steps, DenseReturns};
pub use integer::{axis_return_counts, return_counts_integer};
pub use tail::{tail_bound, TailEstimate, TailModel, TailModelKind, TailWeight};

/// Default cap on the series length.
pub const DEFAULT_N_MAX: usize = 200;
/// Default truncation tolerance, relative to `beta`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative slack used when checking inequalities on floating-point series.
const INVARIANT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IntegerExact,
    DenseConvolution,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::IntegerExact => "integer_exact",
            Method::DenseConvolution => "dense_convolution",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// `r_0..r_N` for one kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub dim: usize,
    pub range: u32,
    pub beta: f64,
    pub values: Vec<f64>,
    /// Exact rationals, present for the integer route.
    #[serde(skip)]
    pub exact: Option<Vec<BigRational>>,
    pub method: Method,
    /// Unit-weight tail beyond the last index, when the series is long enough.
    pub tail: Option<TailEstimate>,
    /// `max_{1 <= n <= N} r_n n^{d/2} / beta`.
    pub gauss_constant: f64,
    /// Worst `|sum_x D^{*n}(x) - 1|` seen while computing, dense route only.
    pub normalization_defect: Option<f64>,
}

impl ReturnSeries {
    /// Wraps a sequence `r_0..r_N` and fills in the derived fields.
    pub fn from_values(dim: usize, range: u32, values: Vec<f64>, method: Method) -> Self {
        let beta = (range as f64).powi(-(dim as i32));
        let mut s = ReturnSeries {
            dim,
            range,
            beta,
            values,
            exact: None,
            method,
            tail: None,
            gauss_constant: 0.0,
            normalization_defect: None,
        };
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        let half_d = self.dim as f64 / 2.0;
        self.gauss_constant = self
            .values
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &r)| r * (n as f64).powf(half_d) / self.beta)
            .fold(0.0, f64::max);
        let n = self.n_max();
        self.tail = if n >= 4 {
            let from = n - n % 2;
            tail_bound(&self.values, from, TailWeight::Unit).ok()
        } else {
            None
        };
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<f64> {
        self.values.get(n).copied().ok_or(Error::Index {
            what: "return series",
            needed: n,
            available: self.n_max(),
        })
    }

    /// Keeps `r_0..=r_n`.
    pub fn truncated(&self, n: usize) -> ReturnSeries {
        let n = n.min(self.n_max());
        let mut s = self.clone();
        s.values.truncate(n + 1);
        if let Some(e) = s.exact.as_mut() {
            e.truncate(n + 1);
        }
        s.refresh();
        s
    }

    /// Largest even index not beyond the end of the series.
    pub fn last_even(&self) -> usize {
        self.n_max() - self.n_max() % 2
    }

    pub fn tail_model(&self) -> Result<TailModel> {
        TailModel::fit(&self.values, self.last_even())
    }

    pub fn check_invariants(&self) -> InvariantReport {
        check_invariants(&self.values, self.exact.as_deref(), self.gauss_constant, self.beta, self.dim)
    }

    /// CSV with columns `n,r_n,method,d,L`, plus `rational` when exact
    /// values are present and requested.
    pub fn to_csv(&self, with_rational: bool) -> String {
        let rational = with_rational && self.exact.is_some();
        let mut out = String::from("n,r_n,method,d,L");
        if rational {
            out.push_str(",rational");
        }
        out.push('\n');
        for (n, r) in self.values.iter().enumerate() {
            let _ = write!(out, "{n},{},{},{},{}", fmt_real(*r), self.method.as_str(), self.dim, self.range);
            if rational {
                let q = &self.exact.as_ref().unwrap()[n];
                let _ = write!(out, ",{}/{}", q.numer(), q.denom());
            }
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip formatting.
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

/// Outcome of the structural checks on a return series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub starts_at_one: bool,
    pub first_return_zero: bool,
    pub in_unit_interval: bool,
    pub even_monotone: bool,
    pub log_convex: bool,
    pub gaussian_bound: bool,
    /// First index violating a check, for diagnostics.
    pub first_violation: Option<usize>,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.starts_at_one
            && self.first_return_zero
            && self.in_unit_interval
            && self.even_monotone
            && self.log_convex
            && self.gaussian_bound
    }
}

fn leq(a: f64, b: f64) -> bool {
    a <= b + INVARIANT_SLACK * b.abs().max(a.abs())
}

/// Checks the return-series invariants. Exact rationals, when given, are
/// used for the monotonicity and log-convexity comparisons.
pub fn check_invariants(
    values: &[f64],
    exact: Option<&[BigRational]>,
    gauss_constant: f64,
    beta: f64,
    dim: usize,
) -> InvariantReport {
    let mut report = InvariantReport {
        starts_at_one: values.first() == Some(&1.0),
        first_return_zero: values.get(1).is_none_or(|&r| r == 0.0),
        in_unit_interval: values.iter().all(|&r| (0.0..=1.0).contains(&r)),
        even_monotone: true,
        log_convex: true,
        gaussian_bound: true,
        first_violation: None,
    };
    let note = |i: usize, r: &mut Option<usize>| {
        if r.is_none() {
            *r = Some(i);
        }
    };
    let n_max = values.len().saturating_sub(1);
    let mut first = None;
    let mut m = 1;
    while 2 * m + 2 <= n_max {
        let ok = match exact {
            Some(q) => q[2 * m + 2] <= q[2 * m],
            None => leq(values[2 * m + 2], values[2 * m]),
        };
        if !ok {
            report.even_monotone = false;
            note(2 * m + 2, &mut first);
        }
        m += 1;
    }
    let mut m = 2;
    while 2 * m + 2 <= n_max {
        let ok = match exact {
            Some(q) => &q[2 * m] * &q[2 * m] <= &q[2 * m - 2] * &q[2 * m + 2],
            None => leq(values[2 * m] * values[2 * m], values[2 * m - 2] * values[2 * m + 2]),
        };
        if !ok {
            report.log_convex = false;
            note(2 * m, &mut first);
        }
        m += 1;
    }
    let half_d = dim as f64 / 2.0;
    for (n, &r) in values.iter().enumerate().skip(1) {
        if !leq(r, gauss_constant * beta / (n as f64).powf(half_d)) {
            report.gaussian_bound = false;
            note(n, &mut first);
        }
    }
    report.first_violation = first;
    report
}

/// Exact series for the uniform punctured box.
pub fn return_series_integer(kernel: &KernelSpec, n_max: usize) -> Result<ReturnSeries> {
    if !kernel.is_uniform() {
        return Err(Error::invalid_argument(
            "kernel",
            "the integer route needs the uniform box kernel",
        ));
    }
    let counts = return_counts_integer(kernel.dim(), kernel.range(), n_max);
    let steps = BigInt::from(kernel.box_size() - 1);
    let mut denom = BigInt::one();
    let mut exact = Vec::with_capacity(n_max + 1);
    for w in counts {
        exact.push(if w.is_zero() {
            BigRational::zero()
        } else {
            BigRational::new(w, denom.clone())
        });
        denom *= &steps;
    }
    let values = exact.iter().map(rational_to_f64).collect();
    let mut s = ReturnSeries::from_values(kernel.dim(), kernel.range(), values, Method::IntegerExact);
    s.exact = Some(exact);
    Ok(s)
}

/// Series from iterated dense convolution.
pub fn return_series_dense(kernel: &KernelSpec, n_max: usize) -> Result<ReturnSeries> {
    let dense = dense_returns(kernel, n_max)?;
    let mut s = ReturnSeries::from_values(
        kernel.dim(),
        kernel.range(),
        dense.values,
        Method::DenseConvolution,
    );
    s.normalization_defect = Some(dense.normalization_defect);
    Ok(s)
}

/// Integer route for uniform kernels, dense convolution otherwise.
pub fn return_series(kernel: &KernelSpec, n_max: usize) -> Result<ReturnSeries> {
    if kernel.is_uniform() {
        return_series_integer(kernel, n_max)
    } else {
        return_series_dense(kernel, n_max)
    }
}

/// How long a series to compute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_max: usize,
    pub tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            n_max: DEFAULT_N_MAX,
            tol: DEFAULT_TOL,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 4 {
            return Err(Error::invalid_argument("nmax", "must be at least 4 for tail control"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid_argument("tol", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Series truncated at the first even `N` with `r_N < tol * beta` and a
/// valid tail, or at `n_max`. Explicit kernels are additionally capped by
/// the dense-route budget.
pub fn return_series_truncated(kernel: &KernelSpec, policy: Truncation) -> Result<ReturnSeries> {
    policy.validate()?;
    let mut cap = policy.n_max;
    if !kernel.is_uniform() {
        let budget = max_dense_steps(kernel.dim(), kernel.range());
        if budget < cap {
            log::warn!("dense route budget limits the series to N = {budget}");
            cap = budget.max(4);
        }
    }
    let full = return_series(kernel, cap)?;
    let n = truncation_index(&full.values, full.beta, policy.tol);
    Ok(full.truncated(n))
}

/// First even `N >= 4` with `r_N < tol * beta` and a valid unit tail, else
/// the last even index.
pub fn truncation_index(values: &[f64], beta: f64, tol: f64) -> usize {
    let last = values.len().saturating_sub(1);
    let last_even = last - last % 2;
    let mut n = 4;
    while n <= last {
        if values[n] < tol * beta
            && tail_bound(values, n, TailWeight::Unit).is_ok_and(|t| t.valid)
        {
            return n;
        }
        n += 2;
    }
    last_even
}

/// `q^{*n}(o) = sum_j C(n,j) (1-eps)^{n-j} eps^j r_j` for the discretized
/// kernel `q = (1 - eps) delta_o + eps D` at `p = 1`.
pub fn discretized_return(series: &ReturnSeries, epsilon: f64, n: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid_argument("epsilon", "must lie in (0, 1]"));
    }
    if n > series.n_max() {
        return Err(Error::Index {
            what: "discretized return",
            needed: n,
            available: series.n_max(),
        });
    }
    let lf = ln_factorials(n);
    let w = binomial_weights(n, epsilon, &lf);
    Ok(compensated_sum(w.iter().zip(&series.values).map(|(a, r)| a * r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_explicit, make_uniform};

    #[test]
    fn integer_route_examples() {
        let s = return_series(&make_uniform(1, 1).unwrap(), 4).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0, 0.5, 0.0, 0.375]);
        assert_eq!(s.method, Method::IntegerExact);
        let s = return_series(&make_uniform(2, 1).unwrap(), 2).unwrap();
        assert_eq!(s.exact.as_ref().unwrap()[2], BigRational::new(1.into(), 8.into()));
    }

    #[test]
    fn dispatch_explicit_goes_dense() {
        let k = make_explicit(1, 2, vec![(vec![1], 0.3), (vec![-1], 0.3), (vec![2], 0.2), (vec![-2], 0.2)])
            .unwrap();
        let s = return_series(&k, 10).unwrap();
        assert_eq!(s.method, Method::DenseConvolution);
        assert_eq!(s.values[1], 0.0);
        assert!(s.check_invariants().all_hold());
    }

    #[test]
    fn routes_agree() {
        let k = make_uniform(2, 2).unwrap();
        let a = return_series_integer(&k, 12).unwrap();
        let b = return_series_dense(&k, 12).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn d5_series_invariants() {
        let s = return_series(&make_uniform(5, 4).unwrap(), 40).unwrap();
        let rep = s.check_invariants();
        assert!(rep.all_hold(), "{rep:?}");
        let t = s.tail.unwrap();
        // power-law tail: larger than r_N, small next to the partial sum
        let partial: f64 = s.values[2..].iter().sum();
        assert!(t.valid && t.value > s.values[40] && t.value < 0.05 * partial);
    }

    #[test]
    fn recurrent_tail_is_invalid() {
        let s = return_series(&make_uniform(1, 1).unwrap(), 40).unwrap();
        assert!(!s.tail.unwrap().valid);
    }

    #[test]
    fn discretized_examples() {
        let s = return_series(&make_uniform(1, 1).unwrap(), 6).unwrap();
        let e = 0.3;
        assert!((discretized_return(&s, e, 1).unwrap() - (1.0 - e)).abs() < 1e-15);
        let want = (1.0 - e) * (1.0 - e) + e * e * 0.5;
        assert!((discretized_return(&s, e, 2).unwrap() - want).abs() < 1e-15);
        for n in 0..=6 {
            assert!((discretized_return(&s, 1.0, n).unwrap() - s.values[n]).abs() < 1e-15);
        }
        assert!(matches!(discretized_return(&s, e, 7), Err(Error::Index { .. })));
    }

    #[test]
    fn truncation_hits_cap_in_d5() {
        let k = make_uniform(5, 2).unwrap();
        let s = return_series_truncated(&k, Truncation { n_max: 60, tol: 1e-10 }).unwrap();
        assert_eq!(s.n_max(), 60);
        let s = return_series_truncated(&k, Truncation { n_max: 60, tol: 0.5 }).unwrap();
        assert!(s.n_max() < 60 && s.tail.unwrap().valid);
    }

    #[test]
    fn csv_has_rational_column() {
        let s = return_series(&make_uniform(1, 1).unwrap(), 2).unwrap();
        let csv = s.to_csv(true);
        assert_eq!(
            csv,
            "n,r_n,method,d,L,rational\n0,1.0,integer_exact,1,1,1/1\n1,0.0,integer_exact,1,1,0/1\n2,0.5,integer_exact,1,1,1/2\n"
        );
    }
}
