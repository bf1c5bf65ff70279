//! Loop sums and the leading-order critical points built from them.
//!
//! With `r_n = D^{*n}(o)`:
//!
//! * self-avoiding walk, contact process: `p_c = 1 + sum_{n>=2} r_n`
//! * oriented percolation: `p_c = 1 + 1/2 sum_{n>=2} r_{2n}`
//! * percolation: `p_c = 1 + r_2 + 1/2 sum_{n>=3} (n+1) r_n`
//!
//! each up to `O(beta^2)`. The continuum versions replace `r_n` by
//! `beta U^{*n}(o) = beta v_n^d` and carry an `O(beta / L)` error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numeric::{compensated_sum, NeumaierSum};
use crate::returns::{
    return_series_truncated, tail_bound, truncation_index, ContinuumReturns, ReturnSeries,
    TailEstimate, TailWeight, Truncation,
};

/// One truncated weighted sum plus its tail beyond the truncation index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumTerm {
    pub truncated: f64,
    pub tail: TailEstimate,
    /// `truncated + tail`, with an unusable tail counted as zero.
    pub value: f64,
    pub valid: bool,
}

impl SumTerm {
    fn new(truncated: f64, tail: TailEstimate) -> Self {
        let extra = if tail.value.is_finite() { tail.value } else { 0.0 };
        SumTerm {
            truncated,
            tail,
            value: truncated + extra,
            valid: tail.valid,
        }
    }

    fn scaled(self, c: f64) -> Self {
        let mut tail = self.tail;
        tail.value *= c;
        SumTerm {
            truncated: self.truncated * c,
            tail,
            value: self.value * c,
            valid: self.valid,
        }
    }

    fn shifted(self, c: f64) -> Self {
        SumTerm {
            truncated: self.truncated + c,
            value: self.value + c,
            ..self
        }
    }
}

/// `sum_{n >= first} w(n) r_n` over `n <= n_trunc`, plus the tail model
/// beyond `n_trunc` (which must be even).
pub fn weighted_sum(values: &[f64], first: usize, n_trunc: usize, weight: TailWeight) -> SumTerm {
    let even_only = weight == TailWeight::EvenOnly;
    let mut acc = NeumaierSum::new();
    for (n, &r) in values.iter().enumerate().take(n_trunc + 1).skip(first) {
        if !even_only || n % 2 == 0 {
            acc.add(weight.eval(n) * r);
        }
    }
    let tail = if n_trunc >= 4 {
        tail_bound(values, n_trunc, weight).unwrap_or(TailEstimate::invalid(n_trunc))
    } else {
        TailEstimate::invalid(n_trunc)
    };
    SumTerm::new(acc.value(), tail)
}

/// The model loop sums of one series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSums {
    pub dim: usize,
    pub range: u32,
    pub truncation_n: usize,
    /// `sum_{n>=2} r_n`
    pub s_all: SumTerm,
    /// `sum_{n>=2} r_{2n}`
    pub s_even: SumTerm,
    /// `r_2 + 1/2 sum_{n>=3} (n+1) r_n`
    pub s_weighted: SumTerm,
    /// `sum_{m>=0} (m+1)(m+2)/2 r_{m+2}`, only for d > 6.
    pub triangle: Option<SumTerm>,
}

fn assemble(dim: usize, range: u32, values: &[f64], n: usize, with_triangle: bool) -> LoopSums {
    let r2 = values.get(2).copied().unwrap_or(0.0);
    LoopSums {
        dim,
        range,
        truncation_n: n,
        s_all: weighted_sum(values, 2, n, TailWeight::Unit),
        s_even: weighted_sum(values, 4, n, TailWeight::EvenOnly),
        s_weighted: weighted_sum(values, 3, n, TailWeight::NPlusOne).scaled(0.5).shifted(r2),
        triangle: with_triangle.then(|| weighted_sum(values, 2, n, TailWeight::Triangle)),
    }
}

/// Loop sums truncated by the series truncation rule at `tol`.
pub fn loop_sums(series: &ReturnSeries, tol: f64) -> LoopSums {
    let n = truncation_index(&series.values, series.beta, tol);
    assemble(series.dim, series.range, &series.values, n, series.dim > 6)
}

/// The triangle series without the dimension restriction of [`loop_sums`].
pub fn triangle_sum(series: &ReturnSeries) -> SumTerm {
    weighted_sum(&series.values, 2, series.last_even(), TailWeight::Triangle)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Saw,
    Cp,
    Op,
    Perc,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Saw, Model::Cp, Model::Op, Model::Perc];

    /// Dimension `d` must exceed this for the model's sum to be used.
    pub fn gate(self) -> usize {
        match self {
            Model::Saw | Model::Cp | Model::Op => 4,
            Model::Perc => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Saw => "saw",
            Model::Cp => "cp",
            Model::Op => "op",
            Model::Perc => "perc",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "saw" => Ok(Model::Saw),
            "cp" => Ok(Model::Cp),
            "op" => Ok(Model::Op),
            "perc" => Ok(Model::Perc),
            other => Err(Error::invalid_argument(
                "model",
                format!("unknown model `{other}` (expected saw, cp, op or perc)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Discrete,
    Continuum,
}

/// Checks the model's dimension gate. Returns whether it was overridden.
pub fn check_gate(model: Model, dim: usize, override_gate: bool) -> Result<bool> {
    gate(&format!("{model} critical point"), dim, model.gate(), override_gate)
}

fn gate(quantity: &str, dim: usize, required: usize, override_gate: bool) -> Result<bool> {
    if dim > required {
        Ok(false)
    } else if override_gate {
        log::warn!("{quantity} needs d > {required}; continuing at d = {dim} on request");
        Ok(true)
    } else {
        Err(Error::DimensionGate {
            quantity: quantity.to_string(),
            d: dim,
            required,
        })
    }
}

/// One contribution `coefficient * (truncated + tail)` to a correction term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub coefficient: f64,
    pub truncated: f64,
    pub tail: f64,
    pub tail_valid: bool,
}

impl Component {
    fn from_term(name: &str, coefficient: f64, term: SumTerm) -> Self {
        Component {
            name: name.to_string(),
            coefficient,
            truncated: term.truncated,
            tail: term.value - term.truncated,
            tail_valid: term.valid,
        }
    }

    fn exact(name: &str, value: f64) -> Self {
        Component {
            name: name.to_string(),
            coefficient: 1.0,
            truncated: value,
            tail: 0.0,
            tail_valid: true,
        }
    }

    pub fn value(&self) -> f64 {
        self.coefficient * (self.truncated + self.tail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub model: Model,
    pub source: Source,
    pub d: usize,
    #[serde(rename = "L")]
    pub range: u32,
    pub beta: f64,
    pub correction_term: f64,
    pub p_c_leading: f64,
    /// Order of the neglected term: `beta^2` discrete, `beta / L` continuum.
    pub error_scale: f64,
    pub truncation_n: usize,
    pub tail_valid: bool,
    pub gate_overridden: bool,
    /// `max_n r_n n^{d/2} / beta` of the underlying series.
    pub gauss_constant: f64,
    pub components: Vec<Component>,
}

impl Prediction {
    /// `correction_term <= 10 gauss_constant beta`.
    pub fn within_order_bound(&self) -> bool {
        self.correction_term <= 10.0 * self.gauss_constant * self.beta
    }
}

/// Components of the model correction from a value sequence indexed by `n`.
/// `scale` multiplies every component (`beta` for the continuum).
fn model_components(model: Model, values: &[f64], n: usize, scale: f64) -> Vec<Component> {
    let s = |w: SumTerm| w.scaled(scale);
    match model {
        Model::Saw | Model::Cp => vec![Component::from_term(
            "sum_{n>=2} r_n",
            1.0,
            s(weighted_sum(values, 2, n, TailWeight::Unit)),
        )],
        Model::Op => vec![Component::from_term(
            "sum_{n>=2} r_{2n}",
            0.5,
            s(weighted_sum(values, 4, n, TailWeight::EvenOnly)),
        )],
        Model::Perc => vec![
            Component::exact("r_2", scale * values.get(2).copied().unwrap_or(0.0)),
            Component::from_term(
                "sum_{n>=3} (n+1) r_n",
                0.5,
                s(weighted_sum(values, 3, n, TailWeight::NPlusOne)),
            ),
        ],
    }
}

fn gauss_constant(values: &[f64], dim: usize) -> f64 {
    let half_d = dim as f64 / 2.0;
    values
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &r)| r * (n as f64).powf(half_d))
        .fold(0.0, f64::max)
}

/// Prediction from an existing series, truncated at `tol`.
pub fn predict_from_series(
    model: Model,
    series: &ReturnSeries,
    tol: f64,
    override_gate: bool,
) -> Result<Prediction> {
    let gate_overridden = check_gate(model, series.dim, override_gate)?;
    let n = truncation_index(&series.values, series.beta, tol);
    let components = model_components(model, &series.values, n, 1.0);
    let correction_term = compensated_sum(components.iter().map(Component::value));
    Ok(Prediction {
        model,
        source: Source::Discrete,
        d: series.dim,
        range: series.range,
        beta: series.beta,
        correction_term,
        p_c_leading: 1.0 + correction_term,
        error_scale: series.beta * series.beta,
        truncation_n: n,
        tail_valid: components.iter().all(|c| c.tail_valid),
        gate_overridden,
        gauss_constant: series.gauss_constant,
        components,
    })
}

pub fn predict_pc(
    model: Model,
    kernel: &KernelSpec,
    truncation: Truncation,
    override_gate: bool,
) -> Result<Prediction> {
    check_gate(model, kernel.dim(), override_gate)?;
    let series = return_series_truncated(kernel, truncation)?;
    predict_from_series(model, &series, truncation.tol, override_gate)
}

/// Continuum prediction `1 + beta * (model sum over v_n^d)`.
pub fn predict_pc_continuum(
    model: Model,
    dim: usize,
    range: u32,
    n_max: usize,
    override_gate: bool,
) -> Result<Prediction> {
    if range == 0 {
        return Err(Error::invalid_argument("L", "range must be at least 1"));
    }
    if n_max < 4 {
        return Err(Error::invalid_argument("nmax", "must be at least 4 for tail control"));
    }
    let gate_overridden = check_gate(model, dim, override_gate)?;
    let continuum = ContinuumReturns::compute(dim, n_max)?;
    let values = continuum.center_returns();
    let n = n_max - n_max % 2;
    let beta = (range as f64).powi(-(dim as i32));
    let components = model_components(model, &values, n, beta);
    let correction_term = compensated_sum(components.iter().map(Component::value));
    Ok(Prediction {
        model,
        source: Source::Continuum,
        d: dim,
        range,
        beta,
        correction_term,
        p_c_leading: 1.0 + correction_term,
        error_scale: beta / range as f64,
        truncation_n: n,
        tail_valid: components.iter().all(|c| c.tail_valid),
        gate_overridden,
        gauss_constant: gauss_constant(&values, dim),
        components,
    })
}

/// `f(epsilon)` for the discretized contact process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpLimit {
    pub epsilon: f64,
    pub value: f64,
    /// The `epsilon -> 0` limit `sum_{n>=2} r_n` from the same series.
    pub s_all: f64,
    pub tail_valid: bool,
}

/// `f(eps) = 2 eps sum_{n>=0} (D^{*2} * q^{*2n})(o)`.
///
/// Summing the geometric series in `q` first gives the exact rearrangement
/// `f(eps) = S_all + sum_{j>=0} (-1)^j rho^{j+1} r_{j+2}` with
/// `rho = eps / (2 - eps)`, which converges geometrically for `eps < 1`;
/// the direct double sum only decays like a power of `n`. Terms past the
/// series end come from the fitted tail.
pub fn cp_epsilon_sum(series: &ReturnSeries, epsilon: f64) -> Result<CpLimit> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid_argument("epsilon", "must lie in (0, 1]"));
    }
    let n = series.last_even();
    if n < 4 {
        return Err(Error::Index {
            what: "contact-process sum",
            needed: 4,
            available: series.n_max(),
        });
    }
    let values = &series.values;
    let s_all = weighted_sum(values, 2, n, TailWeight::Unit);
    let rho = epsilon / (2.0 - epsilon);
    let mut acc = NeumaierSum::new();
    acc.add(s_all.value);
    let mut power = rho;
    for (j, &r) in values.iter().enumerate().take(n + 1).skip(2) {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * power * r);
        power *= rho;
    }
    let mut tail_valid = s_all.valid;
    if rho >= 1.0 {
        // alternating tail: even part minus odd part
        let all = tail_bound(values, n, TailWeight::Unit)?;
        let even = tail_bound(values, n, TailWeight::EvenOnly)?;
        tail_valid &= all.valid && even.valid;
        if all.value.is_finite() && even.value.is_finite() {
            acc.add(2.0 * even.value - all.value);
        }
    } else {
        let model = series.tail_model()?;
        let mut m = n + 1;
        while power > 1e-18 && m < n + 1_000_000 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let r = model.extrapolate(m);
            if !r.is_finite() {
                tail_valid = false;
                break;
            }
            acc.add(sign * power * r);
            power *= rho;
            m += 1;
        }
    }
    Ok(CpLimit {
        epsilon,
        value: acc.value(),
        s_all: s_all.value,
        tail_valid: tail_valid && series.dim > 2,
    })
}

/// Which discrete sum is compared with its continuum limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CompareVariant {
    /// `sum_{n>=3} (n+1)^alpha r_n`, alpha in {0, 1}
    Weighted { alpha: u32 },
    /// `sum_{n>=2} r_{2n}`
    Even,
}

impl CompareVariant {
    fn gate(self) -> usize {
        match self {
            CompareVariant::Weighted { alpha } => 4 + 2 * alpha as usize,
            CompareVariant::Even => 4,
        }
    }

    fn sum(self, values: &[f64], n: usize) -> SumTerm {
        match self {
            CompareVariant::Weighted { alpha: 0 } => weighted_sum(values, 3, n, TailWeight::Unit),
            CompareVariant::Weighted { .. } => weighted_sum(values, 3, n, TailWeight::NPlusOne),
            CompareVariant::Even => weighted_sum(values, 4, n, TailWeight::EvenOnly),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    #[serde(rename = "L")]
    pub range: u32,
    pub beta: f64,
    pub discrete: f64,
    /// `beta` times the continuum sum.
    pub continuum: f64,
    pub delta: f64,
    /// `delta / (beta / L)`
    pub ratio: f64,
    pub tail_valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub d: usize,
    pub variant: CompareVariant,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    /// max/min of the normalized discrepancies.
    pub fn ratio_spread(&self) -> f64 {
        let max = self.rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
        let min = self.rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
        max / min
    }
}

/// Discrepancy between a discrete loop sum and `beta` times its continuum
/// counterpart, for each `L` in `ranges`.
pub fn compare_discrete_continuum(
    dim: usize,
    ranges: &[u32],
    variant: CompareVariant,
    truncation: Truncation,
    override_gate: bool,
) -> Result<CompareReport> {
    if let CompareVariant::Weighted { alpha } = variant {
        if alpha > 1 {
            return Err(Error::invalid_argument("alpha", "must be 0 or 1"));
        }
    }
    if ranges.is_empty() {
        return Err(Error::invalid_argument("Ls", "need at least one range"));
    }
    gate("discrete/continuum comparison", dim, variant.gate(), override_gate)?;
    truncation.validate()?;
    let continuum = ContinuumReturns::compute(dim, truncation.n_max)?;
    let cvalues = continuum.center_returns();
    let cterm = variant.sum(&cvalues, truncation.n_max - truncation.n_max % 2);
    let mut rows = Vec::with_capacity(ranges.len());
    for &range in ranges {
        let kernel = crate::kernels::make_uniform(dim, range)?;
        let series = return_series_truncated(&kernel, truncation)?;
        let dterm = variant.sum(&series.values, series.last_even());
        let beta = series.beta;
        let cont = beta * cterm.value;
        let delta = (dterm.value - cont).abs();
        rows.push(CompareRow {
            range,
            beta,
            discrete: dterm.value,
            continuum: cont,
            delta,
            ratio: delta / (beta / range as f64),
            tail_valid: dterm.valid && cterm.valid,
        });
    }
    Ok(CompareReport { d: dim, variant, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::make_uniform;
    use crate::returns::{return_series, Method};

    fn synthetic() -> ReturnSeries {
        let mut v = vec![0.0; 9];
        v[0] = 1.0;
        v[2] = 0.1;
        v[3] = 0.05;
        v[4] = 0.02;
        ReturnSeries::from_values(7, 1, v, Method::IntegerExact)
    }

    #[test]
    fn synthetic_sums() {
        let s = loop_sums(&synthetic(), 1e-10);
        assert!((s.s_all.value - 0.17).abs() < 1e-15);
        assert!((s.s_even.value - 0.02).abs() < 1e-15);
        assert!((s.s_weighted.value - 0.25).abs() < 1e-15);
        assert!(s.s_all.valid && s.s_even.valid && s.s_weighted.valid);
        // 1*0.1 + 3*0.05 + 6*0.02
        assert!((s.triangle.unwrap().value - 0.37).abs() < 1e-15);
    }

    #[test]
    fn synthetic_predictions() {
        let s = synthetic();
        let p = |m| predict_from_series(m, &s, 1e-10, false).unwrap().p_c_leading;
        assert!((p(Model::Saw) - 1.17).abs() < 1e-15);
        assert!((p(Model::Cp) - 1.17).abs() < 1e-15);
        assert!((p(Model::Op) - 1.01).abs() < 1e-15);
        assert!((p(Model::Perc) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn zero_series_is_mean_field() {
        let mut v = vec![0.0; 9];
        v[0] = 1.0;
        let s = ReturnSeries::from_values(7, 1, v, Method::IntegerExact);
        for m in Model::ALL {
            assert_eq!(predict_from_series(m, &s, 1e-10, false).unwrap().p_c_leading, 1.0);
        }
    }

    #[test]
    fn gates() {
        let k = make_uniform(3, 4).unwrap();
        assert!(matches!(
            predict_pc(Model::Perc, &k, Truncation::default(), false),
            Err(Error::DimensionGate { required: 6, .. })
        ));
        let p = predict_pc(Model::Saw, &k, Truncation { n_max: 40, tol: 1e-10 }, true).unwrap();
        assert!(p.gate_overridden);
    }

    #[test]
    fn d5_predictions_are_order_beta() {
        let k = make_uniform(5, 4).unwrap();
        let saw = predict_pc(Model::Saw, &k, Truncation::default(), false).unwrap();
        let op = predict_pc(Model::Op, &k, Truncation::default(), false).unwrap();
        assert!(saw.tail_valid && op.tail_valid);
        assert!(saw.p_c_leading > 1.0 && saw.within_order_bound());
        assert!(op.correction_term > 0.0 && op.correction_term <= saw.correction_term);
        assert_eq!(saw.p_c_leading, 1.0 + saw.correction_term);
    }

    #[test]
    fn continuum_perc_first_component() {
        let p = predict_pc_continuum(Model::Perc, 7, 3, 200, false).unwrap();
        let beta = 3f64.powi(-7);
        assert!((p.components[0].value() - beta * 2f64.powi(-7)).abs() < 1e-20);
        assert!((p.error_scale - beta / 3.0).abs() < 1e-20);
        assert!(p.tail_valid);
    }

    #[test]
    fn cp_sum_examples() {
        let s = synthetic();
        // only r_2 = a nonzero
        let mut v = vec![0.0; 9];
        v[0] = 1.0;
        v[2] = 0.3;
        let only = ReturnSeries::from_values(5, 1, v, Method::IntegerExact);
        for eps in [0.1, 0.5, 1.0] {
            let f = cp_epsilon_sum(&only, eps).unwrap();
            assert!((f.value - 0.6 / (2.0 - eps)).abs() < 1e-15);
        }
        let f = cp_epsilon_sum(&s, 1.0).unwrap();
        assert!((f.value - 2.0 * (0.1 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn cp_sum_converges_to_s_all() {
        let s = return_series(&make_uniform(5, 4).unwrap(), 200).unwrap();
        let a = cp_epsilon_sum(&s, 0.1).unwrap();
        let b = cp_epsilon_sum(&s, 0.05).unwrap();
        assert!((b.value - b.s_all).abs() < (a.value - a.s_all).abs());
        assert!(a.tail_valid);
    }

    #[test]
    fn compare_single_range() {
        let r = compare_discrete_continuum(
            5,
            &[4],
            CompareVariant::Weighted { alpha: 0 },
            Truncation::default(),
            false,
        )
        .unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].delta > 0.0 && r.rows[0].tail_valid);
        assert!(compare_discrete_continuum(
            5,
            &[4],
            CompareVariant::Weighted { alpha: 1 },
            Truncation::default(),
            false
        )
        .is_err());
    }
}
