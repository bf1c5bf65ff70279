//! Independent reference computations used to cross-check the fast routes.

use crate::error::{Error, Result};
use crate::kernels::{fourier_eval, KernelSpec};
use crate::numeric::{binomial_weights, ln_factorials, NeumaierSum};
use crate::returns::ReturnSeries;

/// Iterates over the `K^d` nodes `k_j = -pi + 2 pi i_j / K`, calling `f`
/// on each wave vector.
fn for_each_node<F: FnMut(&[f64])>(dim: usize, nodes: usize, mut f: F) {
    let h = 2.0 * std::f64::consts::PI / nodes as f64;
    let mut idx = vec![0usize; dim];
    let mut k = vec![-std::f64::consts::PI; dim];
    loop {
        f(&k);
        let mut a = dim;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < nodes {
                k[a] = -std::f64::consts::PI + h * idx[a] as f64;
                break;
            }
            idx[a] = 0;
            k[a] = -std::f64::consts::PI;
        }
    }
}

/// `(2 pi)^{-d} int D_hat(k)^n dk` by the `K`-point rectangle rule per axis.
/// For `nL < K` the integrand is a trigonometric polynomial the rule
/// integrates exactly, so only rounding remains.
pub fn fourier_return(kernel: &KernelSpec, n: usize, nodes: usize) -> Result<f64> {
    let cells = (nodes as f64).powi(kernel.dim() as i32);
    if cells > 1e8 {
        return Err(Error::SizeLimit {
            what: format!("Fourier quadrature grid {nodes}^{}", kernel.dim()),
            needed: cells,
            limit: 1e8,
            hint: "lower the node count or the dimension",
        });
    }
    let mut acc = NeumaierSum::new();
    for_each_node(kernel.dim(), nodes, |k| acc.add(fourier_eval(kernel, k).powi(n as i32)));
    Ok(acc.value() / cells)
}

/// Abel-regularized triangle series `sum_m (m+1)(m+2)/2 z^m r_{m+2}`.
pub fn triangle_abel_series(series: &ReturnSeries, z: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    let mut zm = 1.0;
    for (m, r) in series.values.iter().skip(2).enumerate() {
        let c = ((m + 1) * (m + 2)) as f64 / 2.0;
        acc.add(c * zm * r);
        zm *= z;
    }
    acc.value()
}

/// `(2 pi)^{-d} int D_hat^2 / (1 - z D_hat)^3 dk` by the rectangle rule; the
/// integrand is smooth and periodic for `z < 1`.
pub fn triangle_abel_quadrature(kernel: &KernelSpec, z: f64, nodes: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::invalid_argument("z", "must lie in [0, 1)"));
    }
    let cells = (nodes as f64).powi(kernel.dim() as i32);
    let mut acc = NeumaierSum::new();
    for_each_node(kernel.dim(), nodes, |k| {
        let d = fourier_eval(kernel, k);
        acc.add(d * d / (1.0 - z * d).powi(3));
    });
    Ok(acc.value() / cells)
}

/// `2 eps sum_{n>=0} sum_j C(2n, j) (1-eps)^{2n-j} eps^j r_{j+2}` summed
/// directly, treating `r` as zero past the end of `values`.
pub fn cp_epsilon_direct(values: &[f64], epsilon: f64) -> f64 {
    let top = values.len().saturating_sub(1);
    let mut outer = NeumaierSum::new();
    let mut lf = ln_factorials(64);
    let mut n = 0usize;
    loop {
        if lf.len() <= 2 * n {
            lf = ln_factorials(4 * n + 64);
        }
        let w = binomial_weights(2 * n, epsilon, &lf);
        let mut inner = NeumaierSum::new();
        for (j, wj) in w.iter().enumerate() {
            if j + 2 > top {
                break;
            }
            inner.add(wj * values[j + 2]);
        }
        let term = inner.value();
        outer.add(term);
        if (2 * n) as f64 * epsilon > (top + 20) as f64 && term < 1e-18 {
            break;
        }
        n += 1;
    }
    2.0 * epsilon * outer.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::make_uniform;
    use crate::returns::{return_series, Method};
    use crate::sums::cp_epsilon_sum;

    #[test]
    fn fourier_matches_integer_route() {
        let k = make_uniform(2, 2).unwrap();
        let s = return_series(&k, 8).unwrap();
        for n in 0..=8 {
            assert!((fourier_return(&k, n, 64).unwrap() - s.values[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_eps_sum_matches_rearrangement() {
        let mut v = vec![0.0; 11];
        v[0] = 1.0;
        v[2] = 0.1;
        v[3] = 0.05;
        v[4] = 0.02;
        v[6] = 0.004;
        let s = ReturnSeries::from_values(5, 1, v.clone(), Method::IntegerExact);
        for eps in [0.05, 0.3, 0.7, 1.0] {
            let a = cp_epsilon_direct(&v, eps);
            let b = cp_epsilon_sum(&s, eps).unwrap().value;
            assert!((a - b).abs() < 1e-12, "eps={eps}: {a} vs {b}");
        }
    }

    #[test]
    fn abel_triangle_in_one_dimension() {
        let k = make_uniform(1, 2).unwrap();
        let s = return_series(&k, 600).unwrap();
        let a = triangle_abel_series(&s, 0.8);
        let b = triangle_abel_quadrature(&k, 0.8, 512).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}
