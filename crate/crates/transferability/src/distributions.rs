//! Datasets, discretized densities, risks, rates, and the divergence
//! machinery every transfer bound consumes.
//!
//! Two evaluation paths coexist:
//!
//! - a **sample path** over [`EmpiricalDataset`] (used by the DAG and credit
//!   simulators), where every probability is an exact count, and
//! - a **density path** over [`BinnedDensity1D`] / [`BinnedPopulation`]
//!   (used by the closed-form strategic and replicator models), where every
//!   probability is an exact integral against a piecewise-constant density.
//!
//! Both paths are closed systems: risks, acceptance probabilities, total
//! variation and H-divergence are all evaluated against the same measure, so
//! inequalities that hold for arbitrary probability measures hold here to
//! floating-point round-off, not merely to sampling tolerance.
//!
//! A binned density is interpreted as a genuine measure on `[lo, hi]` whose
//! density is constant within each bin; events that cut a bin are handled by
//! exact partial-bin integration under that interpretation.

use crate::classifiers::{HypothesisGrid, ThresholdClassifier};
use crate::error::{Error, Result};

/// Tolerance for "masses sum to one" checks on constructed densities.
const MASS_TOL: f64 = 1e-9;

/// Tolerance for the mean-one importance-weight invariant.
const MEAN_ONE_TOL: f64 = 1e-6;

/// One labeled observation: features, a ±1 label, and an optional group id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub y: i8,
    pub group: Option<u32>,
}

impl LabeledPoint {
    pub fn new(x: Vec<f64>, y: i8) -> Self {
        assert!(y == 1 || y == -1, "label must be +1 or -1, got {y}");
        assert!(!x.is_empty(), "feature vector must have dimension >= 1");
        Self { x, y, group: None }
    }

    pub fn with_group(mut self, group: u32) -> Self {
        self.group = Some(group);
        self
    }
}

/// A finite labeled sample from one domain.
#[derive(Debug, Clone)]
pub struct EmpiricalDataset {
    points: Vec<LabeledPoint>,
    domain_tag: String,
}

impl EmpiricalDataset {
    pub fn new(points: Vec<LabeledPoint>, domain_tag: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = points[0].x.len();
        for p in &points {
            if p.x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.x.len() });
            }
            if p.y != 1 && p.y != -1 {
                return Err(Error::InvalidConfig(format!("label {} is not in {{-1,+1}}", p.y)));
            }
        }
        Ok(Self { points, domain_tag: domain_tag.into() })
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty datasets
    }

    pub fn dim(&self) -> usize {
        self.points[0].x.len()
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    /// Fraction of points labeled +1.
    pub fn label_marginal(&self) -> LabelMarginal {
        let pos = self.points.iter().filter(|p| p.y == 1).count();
        LabelMarginal::new(pos as f64 / self.len() as f64)
    }

    /// Values of one feature coordinate across the sample.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.x[i]).collect()
    }
}

/// Bernoulli label marginal, stored as P(Y = +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMarginal {
    p_plus: f64,
}

impl LabelMarginal {
    pub fn new(p_plus: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&p_plus),
            "label marginal must lie in [0,1], got {p_plus}"
        );
        Self { p_plus }
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }
}

/// Piecewise-constant density on `[lo, hi]` with `K >= 2` equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDensity1D {
    lo: f64,
    hi: f64,
    mass: Vec<f64>,
}

impl BinnedDensity1D {
    pub fn new(lo: f64, hi: f64, mass: Vec<f64>) -> Result<Self> {
        if hi <= lo || mass.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "binned density needs hi > lo and K >= 2 (lo={lo}, hi={hi}, K={})",
                mass.len()
            )));
        }
        if mass.iter().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::InvalidConfig("bin masses must be finite and nonnegative".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidConfig(format!(
                "bin masses sum to {total}, expected 1 within {MASS_TOL}"
            )));
        }
        Ok(Self { lo, hi, mass })
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, k: usize) -> Self {
        Self::new(lo, hi, vec![1.0 / k as f64; k]).expect("uniform density is valid")
    }

    /// Bin masses from a sample, clamping out-of-range values into the edge bins.
    pub fn from_samples(lo: f64, hi: f64, k: usize, xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut mass = vec![0.0; k];
        let w = (hi - lo) / k as f64;
        for &x in xs {
            let idx = (((x - lo) / w).floor() as i64).clamp(0, k as i64 - 1) as usize;
            mass[idx] += 1.0;
        }
        let n = xs.len() as f64;
        for m in &mut mass {
            *m /= n;
        }
        Self::new(lo, hi, mass)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn k(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.k() as f64
    }

    pub fn same_bins(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.k() == other.k()
    }

    /// P(X <= x) under the piecewise-constant interpretation.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let w = self.bin_width();
        let pos = (x - self.lo) / w;
        let full = pos.floor() as usize;
        let frac = pos - full as f64;
        let mut acc: f64 = self.mass[..full].iter().sum();
        if full < self.k() {
            acc += self.mass[full] * frac;
        }
        acc
    }

    /// P(X >= x).
    pub fn mass_above(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Expectation of a per-bin value vector.
    pub fn expect(&self, per_bin: &[f64]) -> f64 {
        assert_eq!(per_bin.len(), self.k());
        self.mass.iter().zip(per_bin).map(|(m, v)| m * v).sum()
    }

    /// Midpoint of bin `i`.
    pub fn bin_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    /// Fraction of bin `i` lying at or above `x` (0 when the bin is fully
    /// below, 1 when fully above, linear in between).
    pub fn bin_fraction_above(&self, i: usize, x: f64) -> f64 {
        let w = self.bin_width();
        let lo = self.lo + i as f64 * w;
        let hi = lo + w;
        if x <= lo {
            1.0
        } else if x >= hi {
            0.0
        } else {
            (hi - x) / w
        }
    }
}

/// Per-bin importance weights ω aligned with a source density.
///
/// ω integrates to one against the source (Σ ω·source = 1), the discrete form
/// of the mean-one identity for covariate-shift weights.
#[derive(Debug, Clone)]
pub struct ImportanceWeightMap {
    lo: f64,
    hi: f64,
    omega: Vec<f64>,
}

impl ImportanceWeightMap {
    /// Build a weight map and check the mean-one invariant against `source`.
    pub fn new(source: &BinnedDensity1D, omega: Vec<f64>) -> Result<Self> {
        if omega.len() != source.k() {
            return Err(Error::MismatchedBins);
        }
        if omega.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite and nonnegative".into()));
        }
        let mean: f64 = source.mass().iter().zip(&omega).map(|(m, w)| m * w).sum();
        if (mean - 1.0).abs() > MEAN_ONE_TOL {
            return Err(Error::InvalidConfig(format!(
                "importance weights have mean {mean} under the source, expected 1 within {MEAN_ONE_TOL}"
            )));
        }
        Ok(Self { lo: source.lo(), hi: source.hi(), omega })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn aligned_with(&self, d: &BinnedDensity1D) -> bool {
        self.lo == d.lo() && self.hi == d.hi() && self.omega.len() == d.k()
    }

    /// Variance of ω under the source density.
    pub fn variance(&self, source: &BinnedDensity1D) -> Result<f64> {
        if !self.aligned_with(source) {
            return Err(Error::MismatchedBins);
        }
        let mean: f64 = source.expect(&self.omega);
        let second: f64 = source
            .mass()
            .iter()
            .zip(&self.omega)
            .map(|(m, w)| m * w * w)
            .sum();
        Ok(second - mean * mean)
    }
}

/// A 1-D population: a feature density plus the per-bin label conditional
/// q_k = P(Y = +1 | X in bin k).
///
/// This is the closed-form counterpart of an [`EmpiricalDataset`]; risks and
/// rates are exact integrals instead of counts.
#[derive(Debug, Clone)]
pub struct BinnedPopulation {
    density: BinnedDensity1D,
    conditional: Vec<f64>,
}

impl BinnedPopulation {
    pub fn new(density: BinnedDensity1D, conditional: Vec<f64>) -> Result<Self> {
        if conditional.len() != density.k() {
            return Err(Error::MismatchedBins);
        }
        if conditional.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
            return Err(Error::InvalidConfig("conditional must lie in [0,1] per bin".into()));
        }
        Ok(Self { density, conditional })
    }

    /// Population from a density and a pointwise conditional evaluated at bin centers.
    pub fn from_fn(density: BinnedDensity1D, q: impl Fn(f64) -> f64) -> Result<Self> {
        let cond: Vec<f64> = (0..density.k()).map(|i| q(density.bin_center(i))).collect();
        Self::new(density, cond)
    }

    pub fn density(&self) -> &BinnedDensity1D {
        &self.density
    }

    pub fn conditional(&self) -> &[f64] {
        &self.conditional
    }

    pub fn label_marginal(&self) -> LabelMarginal {
        LabelMarginal::new(self.density.expect(&self.conditional).clamp(0.0, 1.0))
    }

    /// Acceptance probability P(X >= tau) of the raw threshold at `tau`.
    pub fn accept_raw(&self, tau: f64) -> f64 {
        self.density.mass_above(tau)
    }

    /// 0-1 risk of the raw threshold at `tau`: predict +1 iff x >= tau.
    pub fn risk_raw(&self, tau: f64) -> f64 {
        let mut risk = 0.0;
        for i in 0..self.density.k() {
            let (below, above) = self.bin_split(i, tau);
            let m = self.density.mass()[i];
            let q = self.conditional[i];
            risk += m * (q * below + (1.0 - q) * above);
        }
        risk
    }

    /// (TPR, FPR) of the raw threshold at `tau`.
    pub fn rates_raw(&self, tau: f64) -> Result<(f64, f64)> {
        let p = self.label_marginal().p_plus();
        if p <= 0.0 || p >= 1.0 {
            return Err(Error::MissingClass);
        }
        let mut tp = 0.0;
        let mut fp = 0.0;
        for i in 0..self.density.k() {
            let (_, above) = self.bin_split(i, tau);
            let m = self.density.mass()[i];
            let q = self.conditional[i];
            tp += m * q * above;
            fp += m * (1.0 - q) * above;
        }
        Ok((tp / p, fp / (1.0 - p)))
    }

    /// Class-conditional feature densities (φ₊, φ₋).
    pub fn class_conditionals(&self) -> Result<(BinnedDensity1D, BinnedDensity1D)> {
        let p = self.label_marginal().p_plus();
        if p <= 0.0 || p >= 1.0 {
            return Err(Error::MissingClass);
        }
        let plus: Vec<f64> = self
            .density
            .mass()
            .iter()
            .zip(&self.conditional)
            .map(|(m, q)| m * q / p)
            .collect();
        let minus: Vec<f64> = self
            .density
            .mass()
            .iter()
            .zip(&self.conditional)
            .map(|(m, q)| m * (1.0 - q) / (1.0 - p))
            .collect();
        Ok((
            BinnedDensity1D::new(self.density.lo(), self.density.hi(), plus)?,
            BinnedDensity1D::new(self.density.lo(), self.density.hi(), minus)?,
        ))
    }

    /// Reweight the feature density while keeping P(Y|X): the covariate-shift
    /// induced population.
    pub fn reweight(&self, w: &ImportanceWeightMap) -> Result<Self> {
        if !w.aligned_with(&self.density) {
            return Err(Error::MismatchedBins);
        }
        let mass: Vec<f64> = self
            .density
            .mass()
            .iter()
            .zip(w.omega())
            .map(|(m, om)| m * om)
            .collect();
        let density = BinnedDensity1D::new(self.density.lo(), self.density.hi(), mass)?;
        Self::new(density, self.conditional.clone())
    }

    /// Fractions of bin `i` lying below / at-or-above `tau`.
    fn bin_split(&self, i: usize, tau: f64) -> (f64, f64) {
        let above = self.density.bin_fraction_above(i, tau);
        (1.0 - above, above)
    }
}

/// Total variation distance between two Bernoulli label marginals.
pub fn tv_binary(p: &LabelMarginal, q: &LabelMarginal) -> f64 {
    (p.p_plus() - q.p_plus()).abs()
}

/// Total variation distance between aligned binned densities: ½ Σ |f_k − g_k|.
pub fn tv_binned(f: &BinnedDensity1D, g: &BinnedDensity1D) -> Result<f64> {
    if !f.same_bins(g) {
        return Err(Error::MismatchedBins);
    }
    Ok(0.5 * f.mass().iter().zip(g.mass()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Exact total variation distance between the empirical distributions of two
/// 1-D samples (atoms compared by exact value).
pub fn tv_empirical_1d(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty());
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut tv = 0.0;
    while i < a.len() || j < b.len() {
        let va = a.get(i).copied();
        let vb = b.get(j).copied();
        match (va, vb) {
            (Some(x), Some(y)) if x == y => {
                let (mut ci, mut cj) = (0.0, 0.0);
                while i < a.len() && a[i] == x {
                    ci += 1.0;
                    i += 1;
                }
                while j < b.len() && b[j] == y {
                    cj += 1.0;
                    j += 1;
                }
                tv += (ci / na - cj / nb).abs();
            }
            (Some(x), Some(y)) if x < y => {
                let mut ci = 0.0;
                while i < a.len() && a[i] == x {
                    ci += 1.0;
                    i += 1;
                }
                tv += ci / na;
            }
            (Some(_), Some(_)) | (None, Some(_)) => {
                let y = b[j];
                let mut cj = 0.0;
                while j < b.len() && b[j] == y {
                    cj += 1.0;
                    j += 1;
                }
                tv += cj / nb;
            }
            (Some(x), None) => {
                let mut ci = 0.0;
                while i < a.len() && a[i] == x {
                    ci += 1.0;
                    i += 1;
                }
                tv += ci / na;
            }
            (None, None) => break,
        }
    }
    0.5 * tv
}

/// Fraction of points the classifier gets wrong.
pub fn empirical_risk(h: &ThresholdClassifier, d: &EmpiricalDataset) -> f64 {
    let wrong = d
        .points()
        .iter()
        .filter(|p| h.predict(&p.x).expect("dimension checked by dataset") != p.y)
        .count();
    wrong as f64 / d.len() as f64
}

/// Per-class error rates (err₊, err₋) = (P(h≠Y|Y=+1), P(h≠Y|Y=−1)).
pub fn class_conditional_risks(
    h: &ThresholdClassifier,
    d: &EmpiricalDataset,
) -> Result<(f64, f64)> {
    let (mut n_pos, mut n_neg, mut wrong_pos, mut wrong_neg) = (0u64, 0u64, 0u64, 0u64);
    for p in d.points() {
        let pred = h.predict(&p.x)?;
        if p.y == 1 {
            n_pos += 1;
            if pred != 1 {
                wrong_pos += 1;
            }
        } else {
            n_neg += 1;
            if pred != -1 {
                wrong_neg += 1;
            }
        }
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MissingClass);
    }
    Ok((wrong_pos as f64 / n_pos as f64, wrong_neg as f64 / n_neg as f64))
}

/// (TPR, FPR) of `h` on the dataset.
pub fn rates(h: &ThresholdClassifier, d: &EmpiricalDataset) -> Result<(f64, f64)> {
    let (err_plus, err_minus) = class_conditional_risks(h, d)?;
    Ok((1.0 - err_plus, err_minus))
}

/// H-divergence between two datasets over a threshold grid:
/// `2 · max_{h,h'} |P_D(h≠h') − P_{D2}(h≠h')|`.
///
/// For a shared-scorer threshold family the acceptance regions are nested, so
/// the disagreement probability of a pair is the difference of acceptance
/// probabilities; the maximum is still taken over all ordered pairs.
pub fn h_divergence(d: &EmpiricalDataset, d2: &EmpiricalDataset, grid: &HypothesisGrid) -> f64 {
    let acc1 = grid.acceptance_fractions(d);
    let acc2 = grid.acceptance_fractions(d2);
    h_divergence_from_acceptance(&acc1, &acc2)
}

/// H-divergence from precomputed per-threshold acceptance probabilities
/// (nested acceptance regions assumed, which a shared-scorer grid guarantees).
pub fn h_divergence_from_acceptance(acc1: &[f64], acc2: &[f64]) -> f64 {
    assert_eq!(acc1.len(), acc2.len());
    let mut best = 0.0f64;
    for i in 0..acc1.len() {
        for j in 0..acc1.len() {
            let dis1 = (acc1[i] - acc1[j]).abs();
            let dis2 = (acc2[i] - acc2[j]).abs();
            best = best.max((dis1 - dis2).abs());
        }
    }
    2.0 * best
}

/// Per-bin importance weights ω_k = induced_k / source_k.
///
/// Bins where both masses vanish get ω = 0; induced mass over an empty source
/// bin violates the shared-support requirement of covariate shift.
pub fn importance_weights(
    source: &BinnedDensity1D,
    induced: &BinnedDensity1D,
) -> Result<ImportanceWeightMap> {
    if !source.same_bins(induced) {
        return Err(Error::MismatchedBins);
    }
    let mut omega = Vec::with_capacity(source.k());
    for (i, (&s, &t)) in source.mass().iter().zip(induced.mass()).enumerate() {
        if s > 0.0 {
            omega.push(t / s);
        } else if t > 0.0 {
            return Err(Error::UnsupportedShift { bin: i });
        } else {
            omega.push(0.0);
        }
    }
    ImportanceWeightMap::new(source, omega)
}

/// Importance-weighted source risk E_S[ω·1(h(x)≠y)] for a raw threshold on a
/// binned population. Under covariate shift this equals the induced risk.
pub fn reweighted_risk_binned(
    tau: f64,
    source: &BinnedPopulation,
    w: &ImportanceWeightMap,
) -> Result<f64> {
    if !w.aligned_with(source.density()) {
        return Err(Error::MismatchedBins);
    }
    let mut risk = 0.0;
    for i in 0..source.density().k() {
        let (below, above) = source.bin_split(i, tau);
        let m = source.density().mass()[i];
        let q = source.conditional()[i];
        risk += w.omega()[i] * m * (q * below + (1.0 - q) * above);
    }
    Ok(risk)
}

/// Importance-weighted risk over a sample, with per-point ω looked up by bin.
pub fn reweighted_risk_empirical(
    h: &ThresholdClassifier,
    d: &EmpiricalDataset,
    source_bins: &BinnedDensity1D,
    w: &ImportanceWeightMap,
) -> Result<f64> {
    if !w.aligned_with(source_bins) {
        return Err(Error::MismatchedBins);
    }
    let k = source_bins.k();
    let width = source_bins.bin_width();
    let mut total = 0.0;
    for p in d.points() {
        let pred = h.predict(&p.x)?;
        if pred != p.y {
            let idx =
                (((p.x[0] - source_bins.lo()) / width).floor() as i64).clamp(0, k as i64 - 1) as usize;
            total += w.omega()[idx];
        }
    }
    Ok(total / d.len() as f64)
}
