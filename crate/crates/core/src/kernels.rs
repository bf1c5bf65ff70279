//! Spread-out step distributions on `Z^d`.
//!
//! Two profiles are supported. The uniform punctured box
//! `D(x) = 1{0 < |x|_inf <= L} / ((2L+1)^d - 1)` is stored implicitly by
//! `(d, L, M)` so that large dimensions stay cheap. Explicit tables hold a
//! mass per offset in `[-L, L]^d`, are symmetrized under the hyperoctahedral
//! group on construction, and are limited to `(2L+1)^d <= 10^7` cells.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, sinc, NeumaierSum};

/// A lattice offset, one coordinate per dimension.
pub type Offset = Vec<i32>;

/// Largest box `(2L+1)^d` accepted for explicit tables.
pub const MAX_TABLE_CELLS: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    UniformBox,
    /// Normalized, symmetric masses on nonzero offsets, sorted by offset.
    ExplicitTable(Vec<(Offset, f64)>),
}

/// Per-axis factorization of the uniform kernel through the regularized box
/// `D_o(x) = prod_j u(x_j)` with `u = 1/(2L+1)` on `{-L..L}`. The punctured
/// kernel is recovered as `D = (M D_o - delta_o) / (M - 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisFactorization {
    range: u32,
    box_size: u64,
}

impl AxisFactorization {
    pub fn range(&self) -> u32 {
        self.range
    }

    /// `M = (2L+1)^d`.
    pub fn box_size(&self) -> u64 {
        self.box_size
    }

    /// Mass of the 1-D regularized uniform law at each site of `{-L..L}`.
    pub fn axis_mass(&self) -> f64 {
        1.0 / (2 * self.range + 1) as f64
    }

    /// `u_hat(k) = sin((2L+1)k/2) / ((2L+1) sin(k/2))`, written as a ratio of
    /// sincs so that `k = 0` needs no special case.
    pub fn axis_fourier(&self, k: f64) -> f64 {
        let half_width = self.range as f64 + 0.5;
        sinc(half_width * k) / sinc(0.5 * k)
    }

    /// Fourier transform of the regularized box `D_o`.
    pub fn regularized_fourier(&self, k: &[f64]) -> f64 {
        k.iter().map(|&kj| self.axis_fourier(kj)).product()
    }

    /// Fourier transform of the punctured kernel via the hole correction.
    pub fn fourier(&self, k: &[f64]) -> f64 {
        let m = self.box_size as f64;
        (m * self.regularized_fourier(k) - 1.0) / (m - 1.0)
    }

    /// `beta_o = (L + 1/2)^{-d}`.
    pub fn regularized_beta(&self, dim: usize) -> f64 {
        (self.range as f64 + 0.5).powi(-(dim as i32))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    dim: usize,
    range: u32,
    profile: Profile,
    box_size: u64,
    sup_constant: f64,
    input_symmetric: bool,
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The range `L` in lattice units.
    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.profile, Profile::UniformBox)
    }

    /// `(2L+1)^d`.
    pub fn box_size(&self) -> u64 {
        self.box_size
    }

    /// `beta = L^{-d}`.
    pub fn beta(&self) -> f64 {
        (self.range as f64).powi(-(self.dim as i32))
    }

    /// The constant `C` with `sup_x D(x) = C L^{-d}`.
    pub fn sup_constant(&self) -> f64 {
        self.sup_constant
    }

    pub fn sup_mass(&self) -> f64 {
        self.sup_constant * self.beta()
    }

    /// Whether the table passed to [`make_explicit`] was already invariant
    /// under sign flips and coordinate permutations.
    pub fn input_was_symmetric(&self) -> bool {
        self.input_symmetric
    }

    pub fn factorization(&self) -> Option<AxisFactorization> {
        match self.profile {
            Profile::UniformBox => Some(AxisFactorization {
                range: self.range,
                box_size: self.box_size,
            }),
            Profile::ExplicitTable(_) => None,
        }
    }

    pub fn mass(&self, x: &[i32]) -> f64 {
        assert_eq!(x.len(), self.dim, "offset dimension mismatch");
        match &self.profile {
            Profile::UniformBox => {
                let inside = x.iter().all(|&c| c.unsigned_abs() <= self.range);
                let origin = x.iter().all(|&c| c == 0);
                if inside && !origin {
                    1.0 / (self.box_size - 1) as f64
                } else {
                    0.0
                }
            }
            Profile::ExplicitTable(entries) => entries
                .binary_search_by(|(o, _)| o.as_slice().cmp(x))
                .map(|i| entries[i].1)
                .unwrap_or(0.0),
        }
    }

    /// All offsets with positive mass. Materializes the box for uniform
    /// kernels, so it is subject to the explicit-table size limit.
    pub fn support(&self) -> Result<Vec<(Offset, f64)>> {
        match &self.profile {
            Profile::ExplicitTable(entries) => Ok(entries.clone()),
            Profile::UniformBox => {
                if self.box_size > MAX_TABLE_CELLS {
                    return Err(Error::SizeLimit {
                        what: format!("support of uniform kernel d={} L={}", self.dim, self.range),
                        needed: self.box_size as f64,
                        limit: MAX_TABLE_CELLS as f64,
                        hint: "use the implicit uniform routes",
                    });
                }
                let mass = 1.0 / (self.box_size - 1) as f64;
                Ok(box_offsets(self.dim, self.range as i32)
                    .filter(|x| x.iter().any(|&c| c != 0))
                    .map(|x| (x, mass))
                    .collect())
            }
        }
    }

    /// Serializes to the line-oriented kernel file format.
    pub fn to_kernel_file(&self) -> String {
        let mut out = String::new();
        match &self.profile {
            Profile::UniformBox => {
                let _ = writeln!(out, "d={} L={} profile=uniform", self.dim, self.range);
            }
            Profile::ExplicitTable(entries) => {
                let _ = writeln!(out, "d={} L={} profile=table", self.dim, self.range);
                for (x, m) in entries {
                    for c in x {
                        let _ = write!(out, "{c} ");
                    }
                    let _ = writeln!(out, "{m:e}");
                }
            }
        }
        out
    }
}

/// Iterates over `[-range, range]^dim` in lexicographic order.
pub fn box_offsets(dim: usize, range: i32) -> impl Iterator<Item = Offset> {
    let mut current: Option<Offset> = Some(vec![-range; dim]);
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = dim;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if next[i] < range {
                next[i] += 1;
                for c in next.iter_mut().skip(i + 1) {
                    *c = -range;
                }
                current = Some(next);
                break;
            }
        }
        Some(out)
    })
}

fn checked_box_size(dim: usize, range: u32) -> Result<u64> {
    let side = 2u64 * range as u64 + 1;
    let exp = u32::try_from(dim).map_err(|_| Error::Range {
        what: format!("dimension {dim}"),
        width: "u32",
    })?;
    side.checked_pow(exp).ok_or_else(|| Error::Range {
        what: format!("(2L+1)^d with d={dim}, L={range}"),
        width: "u64",
    })
}

/// The uniform punctured box kernel.
pub fn make_uniform(dim: usize, range: u32) -> Result<KernelSpec> {
    if dim == 0 {
        return Err(Error::invalid_argument("d", "dimension must be at least 1"));
    }
    if range == 0 {
        return Err(Error::invalid_argument("L", "range must be at least 1"));
    }
    let box_size = checked_box_size(dim, range)?;
    // sup D * L^d = L^d / (M - 1)
    let sup_constant = (range as f64).powi(dim as i32) / (box_size - 1) as f64;
    Ok(KernelSpec {
        dim,
        range,
        profile: Profile::UniformBox,
        box_size,
        sup_constant,
        input_symmetric: true,
    })
}

/// Builds a kernel from an offset-to-mass table. Masses are normalized and
/// averaged over the hyperoctahedral group; asymmetric input is accepted and
/// reported through [`KernelSpec::input_was_symmetric`].
pub fn make_explicit<I>(dim: usize, range: u32, table: I) -> Result<KernelSpec>
where
    I: IntoIterator<Item = (Offset, f64)>,
{
    if dim == 0 {
        return Err(Error::invalid_argument("d", "dimension must be at least 1"));
    }
    if range == 0 {
        return Err(Error::invalid_argument("L", "range must be at least 1"));
    }
    let box_size = checked_box_size(dim, range)?;
    if box_size > MAX_TABLE_CELLS {
        return Err(Error::SizeLimit {
            what: format!("explicit table box (2L+1)^d for d={dim}, L={range}"),
            needed: box_size as f64,
            limit: MAX_TABLE_CELLS as f64,
            hint: "explicit tables are limited to 10^7 cells",
        });
    }

    let mut raw: BTreeMap<Offset, f64> = BTreeMap::new();
    for (x, m) in table {
        if x.len() != dim {
            return Err(Error::InvalidKernel(format!(
                "offset {x:?} has {} coordinates, expected {dim}",
                x.len()
            )));
        }
        if x.iter().any(|&c| c.unsigned_abs() > range) {
            return Err(Error::InvalidKernel(format!(
                "offset {x:?} lies outside [-{range}, {range}]^{dim}"
            )));
        }
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidKernel(format!(
                "mass {m} at {x:?} is not a nonnegative number"
            )));
        }
        if x.iter().all(|&c| c == 0) && m != 0.0 {
            return Err(Error::InvalidKernel(
                "nonzero mass at the origin; D(o) must vanish".into(),
            ));
        }
        if raw.insert(x.clone(), m).is_some() {
            return Err(Error::InvalidKernel(format!("duplicate offset {x:?}")));
        }
    }
    let total = compensated_sum(raw.values().copied());
    if total <= 0.0 {
        return Err(Error::InvalidKernel("total mass is zero".into()));
    }

    // Orbit-average: every point of an orbit gets the orbit's mean mass.
    let mut orbits: BTreeMap<Offset, NeumaierSum> = BTreeMap::new();
    for (x, &m) in &raw {
        if m > 0.0 {
            orbits.entry(canonical(x)).or_default().add(m / total);
        }
    }
    let mut entries = Vec::new();
    for (rep, mass) in &orbits {
        let members = orbit(rep);
        let each = mass.value() / members.len() as f64;
        entries.extend(members.into_iter().map(|x| (x, each)));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    let scale = entries.iter().map(|e| e.1).fold(0.0, f64::max);
    let input_symmetric = entries.iter().all(|(x, m)| {
        let given = raw.get(x).copied().unwrap_or(0.0) / total;
        (given - m).abs() <= 1e-12 * scale
    }) && raw
        .iter()
        .filter(|(_, &m)| m > 0.0)
        .all(|(x, _)| entries.binary_search_by(|(o, _)| o.cmp(x)).is_ok());

    let sup_constant = scale * (range as f64).powi(dim as i32);
    Ok(KernelSpec {
        dim,
        range,
        profile: Profile::ExplicitTable(entries),
        box_size,
        sup_constant,
        input_symmetric,
    })
}

/// Orbit representative: absolute values sorted in decreasing order.
fn canonical(x: &[i32]) -> Offset {
    let mut c: Offset = x.iter().map(|v| v.abs()).collect();
    c.sort_unstable_by(|a, b| b.cmp(a));
    c
}

/// All distinct images of `rep` under signed coordinate permutations.
fn orbit(rep: &[i32]) -> Vec<Offset> {
    let mut perms: Vec<Offset> = Vec::new();
    let mut base: Offset = rep.to_vec();
    base.sort_unstable();
    loop {
        perms.push(base.clone());
        if !next_permutation(&mut base) {
            break;
        }
    }
    let mut out = Vec::new();
    for p in perms {
        let nonzero: Vec<usize> = (0..p.len()).filter(|&i| p[i] != 0).collect();
        for mask in 0u64..(1u64 << nonzero.len()) {
            let mut y = p.clone();
            for (bit, &i) in nonzero.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    y[i] = -y[i];
                }
            }
            out.push(y);
        }
    }
    out.sort();
    out.dedup();
    out
}

fn next_permutation(v: &mut [i32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `D_hat(k) = sum_x D(x) e^{i k.x}`. Real by symmetry. The uniform kernel
/// goes through the per-axis Dirichlet product with the hole correction.
pub fn fourier_eval(kernel: &KernelSpec, k: &[f64]) -> f64 {
    assert_eq!(k.len(), kernel.dim(), "wave vector dimension mismatch");
    match (&kernel.profile, kernel.factorization()) {
        (_, Some(f)) => f.fourier(k),
        (Profile::ExplicitTable(entries), None) => {
            let mut acc = NeumaierSum::new();
            for (x, m) in entries {
                let phase: f64 = x.iter().zip(k).map(|(&c, &kj)| c as f64 * kj).sum();
                acc.add(m * phase.cos());
            }
            acc.value()
        }
        (Profile::UniformBox, None) => unreachable!(),
    }
}

/// Fourier transform of the uniform density on `[-1, 1]^d`:
/// `U_hat(k) = prod_j sin(k_j)/k_j`.
pub fn continuum_fourier(k: &[f64]) -> f64 {
    k.iter().map(|&kj| sinc(kj)).product()
}

/// Parses the line-oriented kernel definition format:
///
/// ```text
/// # comment
/// d=2 L=1 profile=table
/// 1 0 0.25
/// -1 0 0.25
/// ```
pub fn parse_kernel_file(text: &str) -> Result<KernelSpec> {
    let mut header: Option<(usize, u32, bool)> = None;
    let mut table = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match header {
            None => header = Some(parse_header(line, line_no)?),
            Some((dim, _, uniform)) => {
                if uniform {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: "uniform kernels take no table lines".into(),
                    });
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != dim + 1 {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("expected {} fields, found {}", dim + 1, fields.len()),
                    });
                }
                let offset = fields[..dim]
                    .iter()
                    .map(|f| f.parse::<i32>())
                    .collect::<std::result::Result<Offset, _>>()
                    .map_err(|e| Error::Parse {
                        line: line_no,
                        reason: format!("bad coordinate: {e}"),
                    })?;
                let mass = fields[dim].parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    reason: format!("bad mass: {e}"),
                })?;
                table.push((offset, mass));
            }
        }
    }
    let (dim, range, uniform) = header.ok_or(Error::Parse {
        line: 0,
        reason: "missing header `d=<int> L=<int> profile=<uniform|table>`".into(),
    })?;
    if uniform {
        make_uniform(dim, range)
    } else {
        make_explicit(dim, range, table)
    }
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, u32, bool)> {
    let (mut dim, mut range, mut profile) = (None, None, None);
    for token in line.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            reason: format!("expected key=value, found `{token}`"),
        })?;
        let bad = |what: &str| Error::Parse {
            line: line_no,
            reason: format!("bad {what} value `{value}`"),
        };
        match key {
            "d" => dim = Some(value.parse::<usize>().map_err(|_| bad("d"))?),
            "L" => range = Some(value.parse::<u32>().map_err(|_| bad("L"))?),
            "profile" => {
                profile = Some(match value {
                    "uniform" => true,
                    "table" => false,
                    _ => return Err(bad("profile")),
                })
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("unknown header key `{key}`"),
                })
            }
        }
    }
    match (dim, range, profile) {
        (Some(d), Some(l), Some(p)) => Ok((d, l, p)),
        _ => Err(Error::Parse {
            line: line_no,
            reason: "header needs d, L and profile".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct_fourier(kernel: &KernelSpec, k: &[f64]) -> f64 {
        kernel
            .support()
            .unwrap()
            .iter()
            .map(|(x, m)| {
                let phase: f64 = x.iter().zip(k).map(|(&c, &kj)| c as f64 * kj).sum();
                m * phase.cos()
            })
            .sum()
    }

    #[test]
    fn uniform_small_cases() {
        let k = make_uniform(1, 1).unwrap();
        assert_eq!(k.mass(&[1]), 0.5);
        assert_eq!(k.mass(&[-1]), 0.5);
        assert_eq!(k.mass(&[0]), 0.0);
        let k2 = make_uniform(2, 1).unwrap();
        let s = k2.support().unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.iter().all(|(_, m)| *m == 0.125));
    }

    #[test]
    fn uniform_sup_constant_d5_l4() {
        let k = make_uniform(5, 4).unwrap();
        let per_site = 1.0 / (9f64.powi(5) - 1.0);
        assert_eq!(k.box_size(), 59049);
        assert!((k.sup_mass() - per_site).abs() < 1e-20);
        // C = 4^5 / (9^5 - 1)
        assert!((k.sup_constant() - 1024.0 / 59048.0).abs() < 1e-15);
        assert!(k.sup_mass() <= k.sup_constant() * 4f64.powi(-5) * (1.0 + 1e-12));
    }

    #[test]
    fn uniform_overflow_is_range_error() {
        assert!(matches!(make_uniform(64, 10), Err(Error::Range { .. })));
        assert!(make_uniform(7, 10).is_ok());
        assert!(make_uniform(0, 1).is_err());
        assert!(make_uniform(1, 0).is_err());
    }

    #[test]
    fn explicit_symmetric_table() {
        let k = make_explicit(
            1,
            2,
            vec![(vec![1], 0.3), (vec![-1], 0.3), (vec![2], 0.2), (vec![-2], 0.2)],
        )
        .unwrap();
        assert!(k.input_was_symmetric());
        let total: f64 = k.support().unwrap().iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((k.mass(&[2]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn explicit_asymmetric_table_is_symmetrized() {
        let k = make_explicit(1, 1, vec![(vec![1], 1.0)]).unwrap();
        assert!(!k.input_was_symmetric());
        assert_eq!(k.mass(&[1]), 0.5);
        assert_eq!(k.mass(&[-1]), 0.5);
    }

    #[test]
    fn explicit_rejects_origin_and_zero_mass() {
        assert!(matches!(
            make_explicit(1, 1, vec![(vec![0], 0.5), (vec![1], 0.5)]),
            Err(Error::InvalidKernel(_))
        ));
        assert!(matches!(
            make_explicit(1, 1, vec![(vec![1], 0.0)]),
            Err(Error::InvalidKernel(_))
        ));
        assert!(make_explicit(1, 1, vec![(vec![2], 1.0)]).is_err());
        assert!(make_explicit(1, 1, vec![(vec![1], -1.0)]).is_err());
    }

    #[test]
    fn hyperoctahedral_symmetry_exhaustive() {
        let k = make_explicit(
            3,
            2,
            vec![
                (vec![1, 0, 0], 3.0),
                (vec![2, 1, 0], 1.0),
                (vec![-1, 1, 2], 0.5),
                (vec![0, 0, -2], 2.0),
            ],
        )
        .unwrap();
        assert!(!k.input_was_symmetric());
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for x in box_offsets(3, 2) {
            let m = k.mass(&x);
            for p in &perms {
                for signs in 0..8 {
                    let y: Offset = (0..3)
                        .map(|i| {
                            let v = x[p[i]];
                            if signs >> i & 1 == 1 {
                                -v
                            } else {
                                v
                            }
                        })
                        .collect();
                    assert_eq!(k.mass(&y), m, "{x:?} vs {y:?}");
                }
            }
        }
        let total: f64 = k.support().unwrap().iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_examples() {
        let k1 = make_uniform(1, 1).unwrap();
        assert_eq!(fourier_eval(&k1, &[0.0]), 1.0);
        assert!((fourier_eval(&k1, &[PI]) + 1.0).abs() < 1e-15);
        let k2 = make_uniform(2, 1).unwrap();
        let q = [PI / 2.0, 0.0];
        assert!((fourier_eval(&k2, &q) - direct_fourier(&k2, &q)).abs() < 1e-14);
        let k3 = make_explicit(1, 2, vec![(vec![1], 0.3), (vec![2], 0.2)]).unwrap();
        assert!((fourier_eval(&k3, &[0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fourier_factorization_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in 1..=2 {
            for l in 1..=3 {
                let k = make_uniform(d, l).unwrap();
                for _ in 0..100 {
                    let q: Vec<f64> = (0..d).map(|_| rng.random_range(-PI..PI)).collect();
                    let a = fourier_eval(&k, &q);
                    let b = direct_fourier(&k, &q);
                    assert!((a - b).abs() < 1e-12, "d={d} L={l} k={q:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn fourier_bound_on_grid() {
        for d in 1..=2usize {
            for l in 1..=4 {
                let k = make_uniform(d, l).unwrap();
                assert_eq!(fourier_eval(&k, &vec![0.0; d]), 1.0);
                let pts: Vec<f64> = (0..=100).map(|i| PI * (2.0 * i as f64 / 100.0 - 1.0)).collect();
                let mut min_gap = f64::INFINITY;
                if d == 1 {
                    for &a in &pts {
                        min_gap = min_gap.min(1.0 - fourier_eval(&k, &[a]));
                    }
                } else {
                    for &a in &pts {
                        for &b in &pts {
                            min_gap = min_gap.min(1.0 - fourier_eval(&k, &[a, b]));
                        }
                    }
                }
                assert!(min_gap >= 0.0, "d={d} L={l}: {min_gap}");
            }
        }
    }

    #[test]
    fn continuum_fourier_examples() {
        assert_eq!(continuum_fourier(&[0.0, 0.0]), 1.0);
        assert!(continuum_fourier(&[PI]).abs() < 1e-16);
        let v = continuum_fourier(&[PI / 2.0, PI / 2.0]);
        assert!((v - (2.0 / PI).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn regularized_fourier_is_ratio_of_continuum_transforms() {
        let f = make_uniform(2, 3).unwrap().factorization().unwrap();
        let k = [0.7, -1.3];
        let scaled: Vec<f64> = k.iter().map(|v| v * 3.5).collect();
        let half: Vec<f64> = k.iter().map(|v| v * 0.5).collect();
        let expect = continuum_fourier(&scaled) / continuum_fourier(&half);
        assert!((f.regularized_fourier(&k) - expect).abs() < 1e-14);
        assert!((f.regularized_beta(2) - 3.5f64.powi(-2)).abs() < 1e-16);
    }

    #[test]
    fn kernel_file_round_trip() {
        let text = "# sample\nd=1 L=2 profile=table\n1 0.3\n-1 0.3 # trailing\n2 0.2\n-2 0.2\n";
        let k = parse_kernel_file(text).unwrap();
        let again = parse_kernel_file(&k.to_kernel_file()).unwrap();
        assert_eq!(k, again);
        let u = parse_kernel_file("d=5 L=4 profile=uniform").unwrap();
        assert!(u.is_uniform());
        assert!(parse_kernel_file("d=1 L=1 profile=cube").is_err());
        assert!(parse_kernel_file("d=2 L=1 profile=table\n1 0.5\n").is_err());
        assert!(parse_kernel_file("1 0.5\n").is_err());
    }
}
