//! Truncation control for the infinite return-probability sums.
//!
//! The tail beyond an even index `N` is extrapolated separately on the even
//! and odd subsequences. Each parity class is fitted from its last three
//! points with either a geometric law `r_{N+2m} = r_N lambda^m` or a power
//! law `r_n = A n^{-gamma}`, whichever has the more stable two-point
//! parameter. Transient lattice walks land on the power law, whose sums
//! diverge unless `gamma` exceeds the weight degree plus one; that is what
//! flags recurrent (d <= 2) series as invalid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Weighting applied to `r_n` in a tail sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailWeight {
    /// `sum r_n`
    Unit,
    /// `sum (n + 1) r_n`
    NPlusOne,
    /// `sum r_n` over even `n` only
    EvenOnly,
    /// `sum n r_n`
    Linear,
    /// `sum n (n - 1) / 2 r_n`, the triangle weighting `(m+1)(m+2)/2` at `n = m + 2`
    Triangle,
}

impl TailWeight {
    /// Polynomial coefficients `(c0, c1, c2)` of the weight in `n`.
    fn coefficients(self) -> [f64; 3] {
        match self {
            TailWeight::Unit | TailWeight::EvenOnly => [1.0, 0.0, 0.0],
            TailWeight::NPlusOne => [1.0, 1.0, 0.0],
            TailWeight::Linear => [0.0, 1.0, 0.0],
            TailWeight::Triangle => [0.0, -0.5, 0.5],
        }
    }

    pub fn eval(self, n: usize) -> f64 {
        let [c0, c1, c2] = self.coefficients();
        let x = n as f64;
        c0 + c1 * x + c2 * x * x
    }

    fn includes_odd(self) -> bool {
        !matches!(self, TailWeight::EvenOnly)
    }

    fn degree(self) -> usize {
        let c = self.coefficients();
        if c[2] != 0.0 {
            2
        } else if c[1] != 0.0 {
            1
        } else {
            0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailModelKind {
    /// The series is identically zero past the anchor.
    Zero,
    Geometric,
    PowerLaw,
}

/// Summary of a tail extrapolation starting after index `start`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub start: usize,
    pub value: f64,
    /// `lambda = r_N / r_{N-2}`.
    pub ratio: f64,
    /// Fitted decay exponent of the even subsequence when the power law wins.
    pub exponent: Option<f64>,
    pub model: TailModelKind,
    pub valid: bool,
}

impl TailEstimate {
    /// Tail of a series that is known to vanish beyond `start`.
    pub fn zero(start: usize) -> Self {
        TailEstimate {
            start,
            value: 0.0,
            ratio: 0.0,
            exponent: None,
            model: TailModelKind::Zero,
            valid: true,
        }
    }

    pub fn invalid(start: usize) -> Self {
        TailEstimate {
            start,
            value: f64::NAN,
            ratio: f64::NAN,
            exponent: None,
            model: TailModelKind::Geometric,
            valid: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Fit {
    Zero,
    Geometric { anchor: usize, value: f64, ratio: f64 },
    Power { anchor: usize, value: f64, exponent: f64 },
    /// Growing or undefined sequence.
    Broken,
}

impl Fit {
    fn from_points(values: &[f64], anchor: usize) -> Fit {
        let at = |i: usize| values[i];
        let last = at(anchor);
        if last == 0.0 && (anchor < 2 || at(anchor - 2) == 0.0) {
            return Fit::Zero;
        }
        if anchor < 2 || at(anchor - 2) <= 0.0 || last < 0.0 {
            return Fit::Broken;
        }
        let ratio = last / at(anchor - 2);
        if last == 0.0 {
            return Fit::Geometric { anchor, value: 0.0, ratio: 0.0 };
        }
        let power = |hi: usize| -> f64 {
            let (a, b) = (values[hi - 2], values[hi]);
            -(b / a).ln() / ((hi as f64) / ((hi - 2) as f64)).ln()
        };
        // Without a third point the geometric law is the default.
        if anchor < 5 || at(anchor - 4) <= 0.0 {
            return Fit::Geometric { anchor, value: last, ratio };
        }
        let ratio_prev = at(anchor - 2) / at(anchor - 4);
        let geo_drift = (ratio - ratio_prev).abs() / ratio.abs().max(f64::MIN_POSITIVE);
        let gamma = power(anchor);
        let gamma_prev = power(anchor - 2);
        let pow_drift = (gamma - gamma_prev).abs() / gamma.abs().max(f64::MIN_POSITIVE);
        if geo_drift <= pow_drift {
            Fit::Geometric { anchor, value: last, ratio }
        } else {
            Fit::Power { anchor, value: last, exponent: gamma }
        }
    }

    fn extrapolate(&self, n: usize) -> f64 {
        match *self {
            Fit::Zero => 0.0,
            Fit::Geometric { anchor, value, ratio } => {
                let steps = (n - anchor) / 2;
                value * ratio.powi(steps as i32)
            }
            Fit::Power { anchor, value, exponent } => {
                value * (anchor as f64 / n as f64).powf(exponent)
            }
            Fit::Broken => f64::NAN,
        }
    }

    /// `sum_{m >= 1} w(anchor + 2m) r_{anchor + 2m}` under the fitted law.
    fn weighted_tail(&self, weight: TailWeight) -> Option<f64> {
        match *self {
            Fit::Zero => Some(0.0),
            Fit::Broken => None,
            Fit::Geometric { anchor, value, ratio } => {
                if !(0.0..1.0).contains(&ratio) {
                    return None;
                }
                if value == 0.0 {
                    return Some(0.0);
                }
                // w(b + 2m) = a0 + a1 m + a2 m^2
                let [c0, c1, c2] = weight.coefficients();
                let b = anchor as f64;
                let a0 = c0 + c1 * b + c2 * b * b;
                let a1 = 2.0 * c1 + 4.0 * c2 * b;
                let a2 = 4.0 * c2;
                let l = ratio;
                let s0 = l / (1.0 - l);
                let s1 = l / ((1.0 - l) * (1.0 - l));
                let s2 = l * (1.0 + l) / ((1.0 - l) * (1.0 - l) * (1.0 - l));
                Some(value * (a0 * s0 + a1 * s1 + a2 * s2))
            }
            Fit::Power { anchor, value, exponent } => {
                let degree = weight.degree() as f64;
                if exponent <= degree + 1.0 {
                    return None;
                }
                // Explicit terms first, then a midpoint integral for the rest.
                let explicit_terms = 10 * anchor.max(10);
                let mut acc = NeumaierSum::new();
                for m in 1..=explicit_terms {
                    let n = anchor + 2 * m;
                    acc.add(weight.eval(n) * self.extrapolate(n));
                }
                let start = (anchor + 2 * explicit_terms) as f64 + 1.0;
                let amp = value * (anchor as f64).powf(exponent);
                let [c0, c1, c2] = weight.coefficients();
                let mut integral = 0.0;
                for (k, c) in [c0, c1, c2].into_iter().enumerate() {
                    if c != 0.0 {
                        let e = exponent - k as f64 - 1.0;
                        integral += c * start.powf(-e) / e;
                    }
                }
                acc.add(0.5 * amp * integral);
                Some(acc.value())
            }
        }
    }
}

/// Fitted tail of a return series beyond an even index.
#[derive(Clone, Debug, PartialEq)]
pub struct TailModel {
    start: usize,
    even: Fit,
    odd: Fit,
    ratio: f64,
    monotone: bool,
}

impl TailModel {
    /// Fits the tail after the even index `from` using `values[..=from]`.
    pub fn fit(values: &[f64], from: usize) -> Result<TailModel> {
        if from % 2 != 0 || from < 4 {
            return Err(Error::invalid_argument(
                "from",
                format!("tail start must be even and at least 4, got {from}"),
            ));
        }
        if from >= values.len() {
            return Err(Error::Index {
                what: "tail fit",
                needed: from,
                available: values.len().saturating_sub(1),
            });
        }
        let monotone = (1..from / 2).all(|m| values[2 * m + 2] <= values[2 * m]);
        let even = Fit::from_points(values, from);
        let odd = Fit::from_points(values, from - 1);
        let ratio = if values[from - 2] > 0.0 {
            values[from] / values[from - 2]
        } else {
            0.0
        };
        Ok(TailModel {
            start: from,
            even,
            odd,
            ratio,
            monotone,
        })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Model value of `r_n` for `n > start`.
    pub fn extrapolate(&self, n: usize) -> f64 {
        debug_assert!(n > self.start);
        if n % 2 == 0 {
            self.even.extrapolate(n)
        } else {
            self.odd.extrapolate(n)
        }
    }

    pub fn estimate(&self, weight: TailWeight) -> TailEstimate {
        let even = self.even.weighted_tail(weight);
        let odd = if weight.includes_odd() {
            self.odd.weighted_tail(weight)
        } else {
            Some(0.0)
        };
        let (model, exponent) = match self.even {
            Fit::Zero => (TailModelKind::Zero, None),
            Fit::Power { exponent, .. } => (TailModelKind::PowerLaw, Some(exponent)),
            _ => (TailModelKind::Geometric, None),
        };
        match (even, odd) {
            (Some(e), Some(o)) if self.monotone && self.ratio < 1.0 => {
                let value = e + o;
                TailEstimate {
                    start: self.start,
                    value,
                    ratio: self.ratio,
                    exponent,
                    model,
                    valid: value >= 0.0,
                }
            }
            _ => TailEstimate {
                start: self.start,
                value: e_or_nan(even) + e_or_nan(odd),
                ratio: self.ratio,
                exponent,
                model,
                valid: false,
            },
        }
    }
}

fn e_or_nan(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Tail estimate of `sum_{n > from} w(n) r_n`.
pub fn tail_bound(values: &[f64], from: usize, weight: TailWeight) -> Result<TailEstimate> {
    Ok(TailModel::fit(values, from)?.estimate(weight))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_tail_is_exact() {
        let (a, lambda) = (0.3, 0.6);
        let mut r = vec![0.0; 41];
        r[0] = 1.0;
        for m in 1..=20 {
            r[2 * m] = a * lambda_pow(lambda, m);
        }
        let m0 = 10;
        let t = tail_bound(&r, 2 * m0, TailWeight::Unit).unwrap();
        let expect = a * lambda_pow(lambda, m0 + 1) / (1.0 - lambda);
        assert!(t.valid);
        assert_eq!(t.model, TailModelKind::Geometric);
        assert!((t.value - expect).abs() < 1e-15 * expect.max(1.0), "{} vs {expect}", t.value);
        assert!((t.ratio - lambda).abs() < 1e-14);
    }

    fn lambda_pow(l: f64, m: usize) -> f64 {
        l.powi(m as i32)
    }

    #[test]
    fn geometric_weighted_tails_match_brute_force() {
        let lambda: f64 = 0.8;
        let r: Vec<f64> = (0..2000)
            .map(|n| if n >= 2 { 0.01 * lambda.powi((n / 2) as i32) } else { [1.0, 0.0][n] })
            .collect();
        for weight in [
            TailWeight::Unit,
            TailWeight::NPlusOne,
            TailWeight::EvenOnly,
            TailWeight::Linear,
            TailWeight::Triangle,
        ] {
            let t = tail_bound(&r[..31], 30, weight).unwrap();
            let brute: f64 = (31..2000)
                .filter(|n| weight != TailWeight::EvenOnly || n % 2 == 0)
                .map(|n| weight.eval(n) * r[n])
                .sum();
            assert!(t.valid);
            assert!((t.value - brute).abs() < 1e-12 * brute, "{weight:?}: {} vs {brute}", t.value);
        }
    }

    #[test]
    fn power_law_tail_converges_and_diverges_by_exponent() {
        let r: Vec<f64> = (0..=200)
            .map(|n| if n == 0 { 1.0 } else { (n as f64).powf(-2.5) })
            .collect();
        let t = tail_bound(&r, 200, TailWeight::Unit).unwrap();
        assert_eq!(t.model, TailModelKind::PowerLaw);
        assert!(t.valid);
        // Hurwitz-type tail sum_{n > 200} n^{-5/2}, by brute force to 10^6 plus integral.
        let mut brute: f64 = (201..1_000_000).map(|n| (n as f64).powf(-2.5)).sum();
        brute += (1_000_000f64 - 0.5).powf(-1.5) / 1.5;
        assert!((t.value - brute).abs() < 1e-6 * brute, "{} vs {brute}", t.value);
        let tri = tail_bound(&r, 200, TailWeight::Triangle).unwrap();
        assert!(!tri.valid);
        let lin = tail_bound(&r, 200, TailWeight::NPlusOne).unwrap();
        assert!(lin.valid);
    }

    #[test]
    fn zero_tail_and_preconditions() {
        let r = [1.0, 0.0, 0.1, 0.05, 0.02, 0.0, 0.0, 0.0, 0.0];
        let t = tail_bound(&r, 8, TailWeight::Unit).unwrap();
        assert!(t.valid);
        assert_eq!(t.value, 0.0);
        assert!(tail_bound(&r, 7, TailWeight::Unit).is_err());
        assert!(tail_bound(&r, 2, TailWeight::Unit).is_err());
        assert!(tail_bound(&r, 10, TailWeight::Unit).is_err());
    }

    #[test]
    fn growing_series_is_invalid() {
        let r: Vec<f64> = (0..=20).map(|n| 1.0 + n as f64).collect();
        let t = tail_bound(&r, 20, TailWeight::Unit).unwrap();
        assert!(!t.valid);
    }
}
