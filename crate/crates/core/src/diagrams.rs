//! Self-avoiding loops through the origin.
//!
//! The first lace-expansion coefficient of the self-avoiding walk at leading
//! order is the total `D`-weight of walks `o -> o` that visit no site twice
//! apart from the shared endpoint. Its difference from `sum_n r_n` is
//! bounded by `(sum_{n>=1} n r_n)(sum_{n>=2} r_n)`.
//!
//! Loops are enumerated depth first with an occupancy list while the number
//! of step sequences stays below [`DFS_BUDGET`]. Uniform kernels beyond that
//! are counted by Mobius inversion over set partitions of the loop's
//! vertices: maps that are constant on the blocks of a partition and use
//! steps in the full box factorize over coordinates, and inverting over the
//! partition lattice leaves only the injective maps.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Offset};
use crate::numeric::{compensated_sum, rational_to_f64};
use crate::returns::{fmt_real, return_series, ReturnSeries, TailWeight};
use crate::sums::{weighted_sum, SumTerm};

/// Largest number of step sequences `(#support)^nmax` walked depth first.
pub const DFS_BUDGET: f64 = 1e9;
/// Longest loop counted through the partition lattice (Bell(10) = 115975).
pub const PARTITION_MAX_N: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationMethod {
    DepthFirst,
    PartitionInversion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopEnumeration {
    pub d: usize,
    #[serde(rename = "L")]
    pub range: u32,
    pub nmax: usize,
    /// `r_n`, indexed by `n`.
    pub all_loops: Vec<f64>,
    /// Weight of self-avoiding loops of length `n`, indexed by `n`.
    pub saw_loops: Vec<f64>,
    /// Exact values of `saw_loops` for uniform kernels.
    #[serde(skip)]
    pub saw_exact: Option<Vec<BigRational>>,
    pub pi1_truncated: f64,
    pub method: EnumerationMethod,
}

impl LoopEnumeration {
    /// `sum_{n=2}^{nmax} r_n - pi1_truncated`.
    pub fn defect(&self) -> f64 {
        let all = compensated_sum(self.all_loops.iter().skip(2).copied());
        all - self.pi1_truncated
    }

    /// Cumulative self-avoiding weight up to each `n`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.saw_loops
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,all_loops_weight,saw_loops_weight\n");
        for n in 2..=self.nmax {
            let _ = writeln!(
                out,
                "{n},{},{}",
                fmt_real(self.all_loops[n]),
                fmt_real(self.saw_loops[n])
            );
        }
        out
    }
}

pub fn saw_loop_sum(kernel: &KernelSpec, nmax: usize) -> Result<LoopEnumeration> {
    if nmax < 2 {
        return Err(Error::invalid_argument("nmax", "loops need at least two steps"));
    }
    let steps = kernel.box_size() - 1;
    let sequences = (steps as f64).powi(nmax as i32);
    let all_loops = return_series(kernel, nmax)?.values;
    let (saw_exact, saw_loops, method) = if sequences <= DFS_BUDGET {
        let support = kernel.support()?;
        if kernel.is_uniform() {
            let counts = dfs_counts(kernel.dim(), kernel.range(), &support, nmax);
            let exact = to_rationals(&counts, steps);
            let values = exact.iter().map(rational_to_f64).collect();
            (Some(exact), values, EnumerationMethod::DepthFirst)
        } else {
            let values = dfs_weights(kernel.dim(), kernel.range(), &support, nmax);
            (None, values, EnumerationMethod::DepthFirst)
        }
    } else if kernel.is_uniform() && nmax <= PARTITION_MAX_N {
        let counts: Vec<BigInt> = (0..=nmax)
            .map(|n| {
                if n < 2 {
                    BigInt::zero()
                } else {
                    partition_loop_count(kernel.dim(), kernel.range(), n)
                }
            })
            .collect();
        let exact = to_rationals(&counts, steps);
        let values = exact.iter().map(rational_to_f64).collect();
        (Some(exact), values, EnumerationMethod::PartitionInversion)
    } else {
        return Err(Error::SizeLimit {
            what: format!(
                "self-avoiding loop enumeration d={} L={} nmax={nmax}",
                kernel.dim(),
                kernel.range()
            ),
            needed: sequences,
            limit: DFS_BUDGET,
            hint: "use a smaller nmax or L (uniform kernels allow nmax <= 10)",
        });
    };
    let pi1_truncated = match &saw_exact {
        Some(q) => rational_to_f64(&q.iter().fold(BigRational::zero(), |a, b| a + b)),
        None => compensated_sum(saw_loops.iter().copied()),
    };
    Ok(LoopEnumeration {
        d: kernel.dim(),
        range: kernel.range(),
        nmax,
        all_loops,
        saw_loops,
        saw_exact,
        pi1_truncated,
        method,
    })
}

fn to_rationals(counts: &[BigInt], steps: u64) -> Vec<BigRational> {
    let steps = BigInt::from(steps);
    let mut denom = BigInt::one();
    counts
        .iter()
        .map(|c| {
            let q = BigRational::new(c.clone(), denom.clone());
            denom *= &steps;
            q
        })
        .collect()
}

/// Packs coordinates in `[-nmax L, nmax L]` into one integer key.
struct Packer {
    offset: i64,
    base: i64,
}

impl Packer {
    fn new(dim: usize, range: u32, nmax: usize) -> Self {
        let offset = range as i64 * nmax as i64;
        let base = 2 * offset + 1;
        assert!(
            (base as f64).powi(dim as i32) < 9.0e18,
            "site keys overflow for this enumeration size"
        );
        Packer { offset, base }
    }

    fn key(&self, x: &[i32]) -> i64 {
        x.iter()
            .fold(0, |acc, &c| acc * self.base + (c as i64 + self.offset))
    }
}

/// Walks self-avoiding paths from the origin; `visit(length, weight)` is
/// called whenever a path closes at the origin.
struct LoopWalker<'a> {
    support: &'a [(Offset, f64)],
    range: i32,
    nmax: usize,
    packer: Packer,
    origin_key: i64,
}

impl LoopWalker<'_> {
    fn walk<F: FnMut(usize, f64)>(&self, pos: &mut Vec<i32>, visited: &mut Vec<i64>, weight: f64, visit: &mut F) {
        let depth = visited.len();
        if depth >= self.nmax {
            return;
        }
        let remaining = (self.nmax - depth - 1) as i32;
        for (step, mass) in self.support {
            for (p, s) in pos.iter_mut().zip(step) {
                *p += s;
            }
            let key = self.packer.key(pos);
            if key == self.origin_key {
                if depth + 1 >= 2 {
                    visit(depth + 1, weight * mass);
                }
            } else if pos.iter().all(|c| c.abs() <= self.range * remaining)
                && !visited.contains(&key)
            {
                visited.push(key);
                self.walk(pos, visited, weight * mass, visit);
                visited.pop();
            }
            for (p, s) in pos.iter_mut().zip(step) {
                *p -= s;
            }
        }
    }

    /// Runs the walk for each first step in parallel; results are returned
    /// in first-step order.
    fn per_first_step<T, F>(&self, dim: usize, fresh: impl Fn() -> T + Sync, visit: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut T, usize, f64) + Sync,
    {
        self.support
            .par_iter()
            .map(|(step, mass)| {
                let mut acc = fresh();
                let mut pos = step.clone();
                let mut visited = vec![self.packer.key(&pos)];
                debug_assert_eq!(pos.len(), dim);
                self.walk(&mut pos, &mut visited, *mass, &mut |n, w| visit(&mut acc, n, w));
                acc
            })
            .collect()
    }
}

fn walker<'a>(dim: usize, range: u32, support: &'a [(Offset, f64)], nmax: usize) -> LoopWalker<'a> {
    let packer = Packer::new(dim, range, nmax);
    let origin_key = packer.key(&vec![0; dim]);
    LoopWalker {
        support,
        range: range as i32,
        nmax,
        packer,
        origin_key,
    }
}

fn dfs_counts(dim: usize, range: u32, support: &[(Offset, f64)], nmax: usize) -> Vec<BigInt> {
    let w = walker(dim, range, support, nmax);
    let parts = w.per_first_step(dim, || vec![0u64; nmax + 1], |acc, n, _| acc[n] += 1);
    let mut total = vec![0u64; nmax + 1];
    for p in parts {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    total.into_iter().map(BigInt::from).collect()
}

fn dfs_weights(dim: usize, range: u32, support: &[(Offset, f64)], nmax: usize) -> Vec<f64> {
    let w = walker(dim, range, support, nmax);
    let parts = w.per_first_step(dim, || vec![Vec::new(); nmax + 1], |acc: &mut Vec<Vec<f64>>, n, wt| {
        acc[n].push(wt)
    });
    (0..=nmax)
        .map(|n| compensated_sum(parts.iter().flat_map(|p| p[n].iter().copied())))
        .collect()
}

/// Set partitions of `{0..n}` as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=max + 1 {
            prefix.push(b);
            grow(prefix, max.max(b), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    grow(&mut prefix, 0, n, &mut out);
    out
}

/// Number of self-avoiding `n`-step loops at the origin with steps in the
/// punctured box, as an exact integer.
pub fn partition_loop_count(dim: usize, range: u32, n: usize) -> BigInt {
    assert!(n >= 2);
    set_partitions(n)
        .par_iter()
        .map(|blocks| {
            let k = blocks.iter().max().unwrap() + 1;
            let mut sizes = vec![0usize; k];
            for &b in blocks {
                sizes[b] += 1;
            }
            let mut mobius = BigInt::one();
            for &s in &sizes {
                for j in 1..s {
                    mobius *= BigInt::from(j);
                }
                if s % 2 == 0 {
                    mobius = -mobius;
                }
            }
            let h = axis_homomorphisms(blocks, k, range as i64);
            mobius * num_traits::pow(BigInt::from(h), dim)
        })
        .reduce(BigInt::zero, |a, b| a + b)
}

/// Maps from the blocks of a partition of the `n`-cycle to `Z`, with block 0
/// (holding vertex 0) sent to 0 and every cycle edge stretched by at most
/// `range`.
fn axis_homomorphisms(blocks: &[usize], k: usize, range: i64) -> u64 {
    let n = blocks.len();
    let mut adj = vec![Vec::new(); k];
    for i in 0..n {
        let (a, b) = (blocks[i], blocks[(i + 1) % n]);
        if a != b && !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    // breadth-first order from block 0
    let mut order = vec![0usize];
    let mut seen = vec![false; k];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        for &nb in &adj[order[i]] {
            if !seen[nb] {
                seen[nb] = true;
                order.push(nb);
            }
        }
        i += 1;
    }
    debug_assert_eq!(order.len(), k, "quotient of a cycle is connected");
    let mut value = vec![0i64; k];
    let mut placed = vec![false; k];
    placed[0] = true;

    fn count(
        idx: usize,
        order: &[usize],
        adj: &[Vec<usize>],
        value: &mut [i64],
        placed: &mut [bool],
        range: i64,
    ) -> u64 {
        if idx == order.len() {
            return 1;
        }
        let b = order[idx];
        let (mut lo, mut hi) = (i64::MIN, i64::MAX);
        for &nb in &adj[b] {
            if placed[nb] {
                lo = lo.max(value[nb] - range);
                hi = hi.min(value[nb] + range);
            }
        }
        if lo > hi {
            return 0;
        }
        if idx + 1 == order.len() {
            return (hi - lo + 1) as u64;
        }
        let mut total = 0;
        placed[b] = true;
        for v in lo..=hi {
            value[b] = v;
            total += count(idx + 1, order, adj, value, placed, range);
        }
        placed[b] = false;
        total
    }

    count(1, &order, &adj, &mut value, &mut placed, range)
}

/// `(sum_{n>=1} n r_n)(sum_{n>=2} r_n)`, each with its tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionBound {
    pub value: f64,
    pub linear: SumTerm,
    pub loops: SumTerm,
    pub valid: bool,
}

pub fn saw_correction_bound(series: &ReturnSeries) -> Result<CorrectionBound> {
    let n = series.last_even();
    if n < 4 {
        return Err(Error::Index {
            what: "correction bound",
            needed: 4,
            available: series.n_max(),
        });
    }
    let linear = weighted_sum(&series.values, 1, n, TailWeight::Linear);
    let loops = weighted_sum(&series.values, 2, n, TailWeight::Unit);
    Ok(CorrectionBound {
        value: linear.value * loops.value,
        linear,
        loops,
        valid: linear.valid && loops.valid && series.dim > 4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_explicit, make_uniform};
    use crate::returns::Method;

    #[test]
    fn one_dimensional_loops() {
        let e = saw_loop_sum(&make_uniform(1, 1).unwrap(), 4).unwrap();
        assert_eq!(e.pi1_truncated, 0.5);
        assert_eq!(e.method, EnumerationMethod::DepthFirst);
    }

    #[test]
    fn short_loops_are_all_self_avoiding() {
        for (d, l) in [(1, 2), (2, 1), (2, 2), (3, 1)] {
            let k = make_uniform(d, l).unwrap();
            let e = saw_loop_sum(&k, 3).unwrap();
            let q = e.saw_exact.as_ref().unwrap();
            let r = crate::returns::return_series(&k, 3).unwrap();
            let rq = r.exact.as_ref().unwrap();
            assert_eq!(q[2], rq[2]);
            assert_eq!(q[3], rq[3]);
        }
        let e = saw_loop_sum(&make_uniform(2, 1).unwrap(), 2).unwrap();
        assert_eq!(e.pi1_truncated, 0.125);
    }

    #[test]
    fn partition_route_matches_dfs() {
        let cases: [(usize, u32, usize, u64); 6] = [
            (2, 1, 3, 24),
            (2, 1, 4, 96),
            (2, 1, 5, 360),
            (2, 1, 6, 1512),
            (3, 1, 4, 4320),
            (1, 2, 5, 10),
        ];
        for (d, l, n, want) in cases {
            assert_eq!(partition_loop_count(d, l, n), BigInt::from(want), "d={d} L={l} n={n}");
            let k = make_uniform(d, l).unwrap();
            let support = k.support().unwrap();
            assert_eq!(dfs_counts(d, l, &support, n)[n], BigInt::from(want));
        }
    }

    #[test]
    fn explicit_kernel_weights() {
        let k = make_explicit(1, 2, vec![(vec![1], 0.3), (vec![-1], 0.3), (vec![2], 0.2), (vec![-2], 0.2)])
            .unwrap();
        let e = saw_loop_sum(&k, 5).unwrap();
        assert!(e.saw_exact.is_none());
        assert!((e.saw_loops[2] - e.all_loops[2]).abs() < 1e-15);
        assert!((e.saw_loops[3] - e.all_loops[3]).abs() < 1e-15);
        for n in 2..=5 {
            assert!(e.saw_loops[n] <= e.all_loops[n] + 1e-15);
        }
    }

    #[test]
    fn budget_error() {
        let k = make_uniform(3, 3).unwrap();
        assert!(matches!(saw_loop_sum(&k, 12), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn correction_bound_examples() {
        let mut v = vec![0.0; 9];
        v[0] = 1.0;
        v[2] = 0.2;
        let s = ReturnSeries::from_values(5, 1, v.clone(), Method::IntegerExact);
        assert!((saw_correction_bound(&s).unwrap().value - 2.0 * 0.04).abs() < 1e-15);
        v[3] = 0.05;
        v[2] = 0.1;
        let s = ReturnSeries::from_values(5, 1, v, Method::IntegerExact);
        assert!((saw_correction_bound(&s).unwrap().value - 0.0525).abs() < 1e-15);
    }
}
