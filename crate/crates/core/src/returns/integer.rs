//! Exact return counts for the uniform punctured box.
//!
//! With `a(x) = 1{|x|_inf <= L}` the punctured step count is `a - delta_o`,
//! and `a` factorizes over coordinates. Expanding `(a - delta_o)^{*n}` gives
//!
//! `W_n = sum_j C(n, j) (-1)^{n-j} N_j^d`,
//!
//! where `N_j` counts 1-D `j`-step walks with steps in `{-L..L}` that end at
//! zero. The alternating sum cancels catastrophically in floating point, so
//! everything here stays in big integers.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};
use rayon::prelude::*;

/// `N_0..=N_{n_max}` by exact 1-D convolution of the box `{-L..L}`.
pub fn axis_return_counts(range: u32, n_max: usize) -> Vec<BigUint> {
    let width = 2 * range as usize;
    let mut dist: Vec<BigUint> = vec![BigUint::one()];
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(BigUint::one());
    for _ in 0..n_max {
        // new[i] = sum_{t = i - 2L}^{i} dist[t], sliding window
        let len = dist.len();
        let mut next = Vec::with_capacity(len + width);
        let mut window = BigUint::zero();
        for i in 0..len + width {
            if i < len {
                window += &dist[i];
            }
            if i > width {
                window -= &dist[i - width - 1];
            }
            next.push(window.clone());
        }
        dist = next;
        out.push(dist[dist.len() / 2].clone());
    }
    out
}

/// `W_0..=W_{n_max}`: the number of `n`-step walks with steps in the
/// punctured box `0 < |x|_inf <= L` that return to the origin.
pub fn return_counts_integer(dim: usize, range: u32, n_max: usize) -> Vec<BigInt> {
    let axis = axis_return_counts(range, n_max);
    let powers: Vec<BigInt> = axis
        .iter()
        .map(|c| BigInt::from_biguint(Sign::Plus, num_traits::pow(c.clone(), dim)))
        .collect();
    let rows = pascal_rows(n_max);
    (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut acc = BigInt::zero();
            for (j, binom) in rows[n].iter().enumerate() {
                let term = binom * &powers[j];
                if (n - j) % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        })
        .collect()
}

fn pascal_rows(n_max: usize) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n_max + 1);
    rows.push(vec![BigInt::one()]);
    for n in 1..=n_max {
        let prev = &rows[n - 1];
        let mut row = Vec::with_capacity(n + 1);
        row.push(BigInt::one());
        for j in 1..n {
            row.push(&prev[j - 1] + &prev[j]);
        }
        row.push(BigInt::one());
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_counts_trinomial() {
        let n: Vec<u64> = axis_return_counts(1, 5)
            .iter()
            .map(|c| c.try_into().unwrap())
            .collect();
        assert_eq!(n, vec![1, 1, 3, 7, 19, 51]);
    }

    #[test]
    fn second_return_counts() {
        // d=1, L=1: W_2 = 1 - 2 + 3 = 2
        let w = return_counts_integer(1, 1, 4);
        assert_eq!(w[2], BigInt::from(2));
        assert_eq!(w[1], BigInt::zero());
        assert_eq!(w[4], BigInt::from(6));
        // d=2, L=1: W_2 = 1 - 2 + 9 = 8 = M - 1
        let w = return_counts_integer(2, 1, 2);
        assert_eq!(w[2], BigInt::from(8));
    }

    #[test]
    fn counts_match_brute_force_walks() {
        // d=2, L=1, all 8^4 four-step walks
        let steps: Vec<(i32, i32)> = (-1..=1)
            .flat_map(|a| (-1..=1).map(move |b| (a, b)))
            .filter(|&s| s != (0, 0))
            .collect();
        let mut count = 0u64;
        for a in &steps {
            for b in &steps {
                for c in &steps {
                    for d in &steps {
                        if a.0 + b.0 + c.0 + d.0 == 0 && a.1 + b.1 + c.1 + d.1 == 0 {
                            count += 1;
                        }
                    }
                }
            }
        }
        let w = return_counts_integer(2, 1, 4);
        assert_eq!(w[4], BigInt::from(count));
    }
}
