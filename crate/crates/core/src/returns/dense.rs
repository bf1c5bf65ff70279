//! Iterated dense convolution on the exact support `[-nL, nL]^d`.

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Profile};
use crate::numeric::{compensated_sum, NeumaierSum};

/// Largest dense table, in cells, the convolution route will allocate.
pub const DENSE_CELL_LIMIT: f64 = 2.0e7;

/// Output of the dense route: `r_0..=r_N` plus the worst normalization
/// defect `|sum_x D^{*n}(x) - 1|` seen over all intermediate steps.
#[derive(Clone, Debug)]
pub struct DenseReturns {
    pub values: Vec<f64>,
    pub normalization_defect: f64,
}

pub fn dense_cells(dim: usize, range: u32, n_max: usize) -> f64 {
    (2.0 * range as f64 * n_max as f64 + 1.0).powi(dim as i32)
}

/// Largest `N` for which the dense route stays within [`DENSE_CELL_LIMIT`].
pub fn max_dense_steps(dim: usize, range: u32) -> usize {
    let side = DENSE_CELL_LIMIT.powf(1.0 / dim as f64);
    (((side - 1.0) / (2.0 * range as f64)).floor().max(0.0)) as usize
}

/// Dense hypercube array with side `2R+1`, row-major, last axis fastest.
struct Grid {
    dim: usize,
    radius: usize,
    data: Vec<f64>,
}

impl Grid {
    fn delta(dim: usize) -> Self {
        Grid {
            dim,
            radius: 0,
            data: vec![1.0],
        }
    }

    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn center(&self) -> f64 {
        self.data[self.data.len() / 2]
    }

    fn index(&self, coords: &[usize]) -> usize {
        let side = self.side();
        coords.iter().fold(0, |acc, &c| acc * side + c)
    }

    fn total(&self) -> f64 {
        compensated_sum(self.data.iter().copied())
    }

    /// Uniform punctured box step: `(box * f - f) / (M - 1)`, where the box
    /// sum is separable over axes.
    fn step_uniform(&self, range: usize, box_size: f64) -> Grid {
        let new_radius = self.radius + range;
        let mut shape = vec![self.side(); self.dim];
        let mut data = self.data.clone();
        for axis in 0..self.dim {
            let (d, s) = box_sum_axis(&data, &shape, axis, range);
            data = d;
            shape = s;
        }
        let out_side = 2 * new_radius + 1;
        // subtract the old grid embedded at offset `range` on every axis
        let old_side = self.side();
        let mut coords = vec![0usize; self.dim];
        for (i, &v) in self.data.iter().enumerate() {
            let mut rem = i;
            for a in (0..self.dim).rev() {
                coords[a] = rem % old_side + range;
                rem /= old_side;
            }
            let j = coords.iter().fold(0, |acc, &c| acc * out_side + c);
            data[j] -= v;
        }
        let scale = 1.0 / (box_size - 1.0);
        data.iter_mut().for_each(|v| *v *= scale);
        Grid {
            dim: self.dim,
            radius: new_radius,
            data,
        }
    }

    fn step_table(&self, range: usize, entries: &[(Vec<i32>, f64)]) -> Grid {
        let new_radius = self.radius + range;
        let out_side = 2 * new_radius + 1;
        let mut data = vec![0.0; out_side.pow(self.dim as u32)];
        let old_side = self.side();
        let mut coords = vec![0usize; self.dim];
        for (i, &v) in self.data.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rem = i;
            for a in (0..self.dim).rev() {
                coords[a] = rem % old_side + range;
                rem /= old_side;
            }
            for (x, m) in entries {
                let j = coords
                    .iter()
                    .zip(x)
                    .fold(0, |acc, (&c, &o)| acc * out_side + (c as i64 + o as i64) as usize);
                data[j] += v * m;
            }
        }
        Grid {
            dim: self.dim,
            radius: new_radius,
            data,
        }
    }
}

/// Window sums of width `2r+1` along one axis, widening that axis by `2r`.
fn box_sum_axis(data: &[f64], shape: &[usize], axis: usize, r: usize) -> (Vec<f64>, Vec<usize>) {
    let n = shape[axis];
    let out_n = n + 2 * r;
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = out_n;
    let mut out = vec![0.0; outer * out_n * inner];
    for o in 0..outer {
        for i in 0..inner {
            for t in 0..out_n {
                // output t covers inputs t - 2r ..= t
                let lo = t.saturating_sub(2 * r);
                let hi = t.min(n - 1);
                let mut acc = NeumaierSum::new();
                for s in lo..=hi {
                    acc.add(data[(o * n + s) * inner + i]);
                }
                out[(o * out_n + t) * inner + i] = acc.value();
            }
        }
    }
    (out, out_shape)
}

pub fn dense_returns(kernel: &KernelSpec, n_max: usize) -> Result<DenseReturns> {
    let (dim, range) = (kernel.dim(), kernel.range());
    let cells = dense_cells(dim, range, n_max);
    if cells > DENSE_CELL_LIMIT {
        return Err(Error::SizeLimit {
            what: format!("dense convolution table (2LN+1)^d for d={dim}, L={range}, N={n_max}"),
            needed: cells,
            limit: DENSE_CELL_LIMIT,
            hint: "lower N or use the integer route for uniform kernels",
        });
    }
    let table = match kernel.profile() {
        Profile::ExplicitTable(e) => Some(e.clone()),
        Profile::UniformBox => None,
    };
    let mut grid = Grid::delta(dim);
    let mut values = Vec::with_capacity(n_max + 1);
    let mut defect: f64 = 0.0;
    values.push(grid.center());
    for _ in 0..n_max {
        grid = match &table {
            Some(entries) => grid.step_table(range as usize, entries),
            None => grid.step_uniform(range as usize, kernel.box_size() as f64),
        };
        defect = defect.max((grid.total() - 1.0).abs());
        values.push(grid.center());
    }
    debug_assert!(grid.index(&vec![grid.radius; dim]) == grid.data.len() / 2);
    Ok(DenseReturns {
        values,
        normalization_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_explicit, make_uniform};

    #[test]
    fn plus_minus_one_walk() {
        let k = make_uniform(1, 1).unwrap();
        let r = dense_returns(&k, 4).unwrap();
        assert_eq!(r.values, vec![1.0, 0.0, 0.5, 0.0, 0.375]);
    }

    #[test]
    fn second_return_d2() {
        let k = make_uniform(2, 1).unwrap();
        let r = dense_returns(&k, 2).unwrap();
        assert!((r.values[2] - 0.125).abs() < 1e-16);
        assert!(r.normalization_defect < 1e-12);
    }

    #[test]
    fn table_route_matches_uniform_route() {
        let u = make_uniform(2, 2).unwrap();
        let t = make_explicit(2, 2, u.support().unwrap()).unwrap();
        let a = dense_returns(&u, 8).unwrap();
        let b = dense_returns(&t, 8).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(b.normalization_defect < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let k = make_uniform(4, 3).unwrap();
        match dense_returns(&k, 200) {
            Err(Error::SizeLimit { limit, .. }) => assert_eq!(limit, DENSE_CELL_LIMIT),
            other => panic!("expected size error, got {other:?}"),
        }
        assert!(max_dense_steps(4, 3) >= 1);
        assert!(dense_cells(4, 3, max_dense_steps(4, 3)) <= DENSE_CELL_LIMIT);
    }
}
