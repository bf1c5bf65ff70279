//! Small numerical helpers shared across modules.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

/// Compensated (Neumaier) accumulator. Reduction order is the insertion
/// order, so results are reproducible for a fixed input sequence.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(values);
    acc.value()
}

/// `sin(x)/x` with the removable singularity filled in. Below `1e-4` the
/// Taylor polynomial is used; both branches agree to 1e-15 there.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Natural logarithms of `0!, 1!, ..., n!`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = NeumaierSum::new();
    out.push(0.0);
    for k in 1..=n {
        acc.add((k as f64).ln());
        out.push(acc.value());
    }
    out
}

/// Binomial probabilities `C(n,j) (1-eps)^(n-j) eps^j` for `j = 0..=n`,
/// evaluated in log space so large `n` does not underflow intermediate terms.
pub fn binomial_weights(n: usize, eps: f64, ln_fact: &[f64]) -> Vec<f64> {
    debug_assert!(ln_fact.len() > n);
    if eps >= 1.0 {
        let mut w = vec![0.0; n + 1];
        w[n] = 1.0;
        return w;
    }
    if eps <= 0.0 {
        let mut w = vec![0.0; n + 1];
        w[0] = 1.0;
        return w;
    }
    let (ln_e, ln_1me) = (eps.ln(), (-eps).ln_1p());
    (0..=n)
        .map(|j| {
            let ln_c = ln_fact[n] - ln_fact[j] - ln_fact[n - j];
            (ln_c + j as f64 * ln_e + (n - j) as f64 * ln_1me).exp()
        })
        .collect()
}

/// Correctly rounded conversion of an exact rational to `f64`.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn big_to_f64(n: &BigInt) -> f64 {
    n.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_branches_agree_at_threshold() {
        let x: f64 = 1e-4;
        let taylor = 1.0 - x * x / 6.0 + x.powi(4) / 120.0;
        assert!((taylor - x.sin() / x).abs() < 1e-15);
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn neumaier_recovers_small_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        let lf = ln_factorials(400);
        for &eps in &[0.05, 0.25, 0.5, 0.9] {
            let w = binomial_weights(400, eps, &lf);
            assert!((compensated_sum(w) - 1.0).abs() < 1e-12);
        }
        let w = binomial_weights(3, 0.5, &lf);
        assert!((w[1] - 0.375).abs() < 1e-15);
    }
}
