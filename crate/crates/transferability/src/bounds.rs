//! Transfer bounds between a classifier's source risk, its induced risk,
//! and the minimum achievable induced risk, plus the assumption checkers
//! and worst-case estimators built on them.
//!
//! Every bound is assembled from per-threshold sweeps ([`SweepTable`]):
//! given the error and acceptance probability of each grid classifier on
//! each domain, the combined errors λ/Λ, the H-divergence, and all total
//! variation terms are exact functions of those vectors. Because the sweeps
//! are exact on both evaluation paths (counts on samples, integrals on
//! binned populations), the bound inequalities hold to round-off wherever
//! they hold for arbitrary probability measures.
//!
//! Quantities, for two domains D, D′ and a grid H:
//!
//! ```text
//!   λ(D→D′)      = min_{h'∈H} err_{D′}(h') + err_D(h')
//!   Λ(D→D′)(h)   = err_{D′}(h) + err_D(h)
//!   d_{H×H}      = 2·max_{h,h'∈H} |P_D(h≠h') − P_{D′}(h≠h')|
//! ```
//!
//! Upper bounds: source→induced `err_S(h) + λ + ½d` and induced→optimal
//! `(λ + Λ(h))/2 + ½d`. Lower bound: `(TV(label marginals) − TV(prediction
//! marginals))/2`, with a feature-marginal variant via data processing.

use crate::classifiers::SweepTable;
use crate::distributions::{
    h_divergence_from_acceptance, BinnedPopulation, ImportanceWeightMap, LabelMarginal,
};
use crate::error::{Error, Result};

/// Strictness threshold for the covariance positivity check.
const COV_STRICT: f64 = 1e-12;

/// Minimum and probe-dependent combined errors of two domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedErrors {
    /// min over the grid of err_D(h') + err_D′(h').
    pub lambda_min: f64,
    /// err_D(h) + err_D′(h) for the probe h.
    pub lambda_max_of_h: f64,
}

/// `λ` and `Λ(h)` from two per-threshold error vectors.
pub fn combined_errors(h_idx: usize, d: &SweepTable, d2: &SweepTable) -> CombinedErrors {
    assert_eq!(d.err.len(), d2.err.len());
    let lambda_min = d
        .err
        .iter()
        .zip(&d2.err)
        .map(|(a, b)| a + b)
        .fold(f64::INFINITY, f64::min);
    CombinedErrors { lambda_min, lambda_max_of_h: d.err[h_idx] + d2.err[h_idx] }
}

/// Source-to-induced upper bound: `err_S(h) + λ + ½·d_{H×H}(D_S, D(h))`.
pub fn ub_source_to_induced(h_idx: usize, source: &SweepTable, induced: &SweepTable) -> f64 {
    let ce = combined_errors(h_idx, source, induced);
    let hdiv = h_divergence_from_acceptance(&source.accept, &induced.accept);
    source.err[h_idx] + ce.lambda_min + 0.5 * hdiv
}

/// Induced-to-optimal upper bound:
/// `(λ + Λ(h))/2 + ½·d_{H×H}(D(h'), D(h))`, with sweeps taken on the two
/// induced domains.
pub fn ub_induced_to_optimal(h_idx: usize, on_dh: &SweepTable, on_dht: &SweepTable) -> f64 {
    let ce = combined_errors(h_idx, on_dh, on_dht);
    let hdiv = h_divergence_from_acceptance(&on_dht.accept, &on_dh.accept);
    0.5 * (ce.lambda_min + ce.lambda_max_of_h) + 0.5 * hdiv
}

/// Learning-tradeoff lower bound from its two total-variation components:
/// `(TV(D_{Y|S}, D_Y(h)) − TV(D_{h|S}, D_h(h)))/2`.
pub fn lb_tradeoff(tv_labels: f64, tv_predictions: f64) -> f64 {
    0.5 * (tv_labels - tv_predictions)
}

/// Feature-marginal variant: the prediction-marginal TV is replaced by the
/// feature-marginal TV, which dominates it by data processing, so this value
/// never exceeds [`lb_tradeoff`].
pub fn lb_tradeoff_features(tv_labels: f64, tv_features: f64) -> f64 {
    0.5 * (tv_labels - tv_features)
}

/// Covariate-shift suboptimality bound:
/// `sqrt(err_{D_S}(h_T)) · (sd(ω(h_S)) + sd(ω(h_T)))`.
pub fn cs_ub_suboptimality(
    err_source_of_ht: f64,
    w_s: &ImportanceWeightMap,
    w_t: &ImportanceWeightMap,
    source: &crate::distributions::BinnedDensity1D,
) -> Result<f64> {
    let var_s = w_s.variance(source)?;
    let var_t = w_t.variance(source)?;
    Ok(cs_ub_from_components(err_source_of_ht, var_s, var_t))
}

/// The same bound from precomputed weight variances.
pub fn cs_ub_from_components(err_source_of_ht: f64, var_s: f64, var_t: f64) -> f64 {
    err_source_of_ht.sqrt() * (var_s.max(0.0).sqrt() + var_t.max(0.0).sqrt())
}

/// Outcomes of the three covariate-shift lower-bound assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionFlags {
    /// Weight-gaining regions carry more positive-label mass.
    pub a1: bool,
    /// Weight-gaining regions carry more accepted mass.
    pub a2: bool,
    /// Cov(P(Y=+1|x) − P(h(x)=+1|x), ω(x)) strictly positive.
    pub a3: bool,
}

impl AssumptionFlags {
    pub fn all(&self) -> bool {
        self.a1 && self.a2 && self.a3
    }
}

/// Check the three assumptions behind the strictly-positive covariate-shift
/// lower bound, for a raw threshold `tau` probing a binned population whose
/// shift is described by `w`.
///
/// The split X₊ = {ω ≥ 1}, X₋ = {ω < 1} is taken per bin; a1/a2 compare the
/// magnitudes of the source integrals of `(1 − ω)` against the positive-label
/// (resp. accepted) mass, the form the lower-bound derivation consumes.
pub fn cs_assumption_check(
    tau: f64,
    pop: &BinnedPopulation,
    w: &ImportanceWeightMap,
) -> Result<AssumptionFlags> {
    if !w.aligned_with(pop.density()) {
        return Err(Error::MismatchedBins);
    }
    let k = pop.density().k();
    let f = pop.density().mass();
    let q = pop.conditional();
    let omega = w.omega();

    let mut a1_plus = 0.0; // ∫_{X₊} q·f·(1−ω)
    let mut a1_minus = 0.0; // ∫_{X₋} q·f·(1−ω)
    let mut a2_plus = 0.0; // ∫_{X₊} a·f·(1−ω)
    let mut a2_minus = 0.0;
    let mut e_g = 0.0; // E[q − a]
    let mut e_gw = 0.0; // E[(q − a)·ω]
    for i in 0..k {
        let accept = pop.density().bin_fraction_above(i, tau);
        let one_minus

= 1.0 - omega[i];
        let weighted = f[i] * one_minus;
        if omega[i] >= 1.0 {
            a1_plus += q[i] * weighted;
            a2_plus += accept * weighted;
        } else {
            a1_minus += q[i] * weighted;
            a2_minus += accept * weighted;
        }
        let g = q[i] - accept;
        e_g += f[i] * g;
        e_gw += f[i] * g * omega[i];
    }
    let e_w: f64 = f.iter().zip(omega).map(|(m, om)| m * om).sum();
    let cov = e_gw - e_g * e_w;
    Ok(AssumptionFlags {
        a1: a1_plus.abs() >= a1_minus.abs(),
        a2: a2_plus.abs() >= a2_minus.abs(),
        a3: cov > COV_STRICT,
    })
}

/// Gated lower bound: returns the learning-tradeoff value only when all
/// three covariate-shift assumptions hold, the regime in which it is
/// guaranteed strictly positive.
pub fn cs_lb_positive(
    tau: f64,
    pop_source: &BinnedPopulation,
    pop_induced: &BinnedPopulation,
    w: &ImportanceWeightMap,
) -> Result<f64> {
    let flags = cs_assumption_check(tau, pop_source, w)?;
    if !flags.all() {
        return Err(Error::AssumptionsUnmet);
    }
    let tv_labels = crate::distributions::tv_binary(
        &pop_source.label_marginal(),
        &pop_induced.label_marginal(),
    );
    let tv_pred = (pop_source.accept_raw(tau) - pop_induced.accept_raw(tau)).abs();
    Ok(lb_tradeoff(tv_labels, tv_pred))
}

/// Strategic-response upper bound `sqrt((2B/3) · err)`.
pub fn strategic_ub(b: f64, err_source_of_ht: f64) -> f64 {
    assert!(b >= 0.0 && (0.0..=1.0).contains(&err_source_of_ht));
    ((2.0 * b / 3.0) * err_source_of_ht).sqrt()
}

/// Target-shift upper bound:
/// `|p(h_S) − p(h_T)| + (1 + p)·(TV₊ + TV₋)` with
/// `TV_± = |P_{X|Y=±1}(h_S accepts) − P_{X|Y=±1}(h_T accepts)|`, i.e. the
/// TPR and FPR gaps of the two classifiers on the source class conditionals.
pub fn ts_ub(
    p_source: f64,
    p_of_hs: f64,
    p_of_ht: f64,
    tpr_hs: f64,
    tpr_ht: f64,
    fpr_hs: f64,
    fpr_ht: f64,
) -> f64 {
    let tv_plus = (tpr_hs - tpr_ht).abs();
    let tv_minus = (fpr_hs - fpr_ht).abs();
    (p_of_hs - p_of_ht).abs() + (1.0 + p_source) * (tv_plus + tv_minus)
}

/// Target-shift lower bound:
/// `|p − p(h)| · (1 − |TPR_S(h) − FPR_S(h)|) / 2`.
pub fn ts_lb(p: f64, p_h: f64, tpr_s: f64, fpr_s: f64) -> f64 {
    0.5 * (p - p_h).abs() * (1.0 - (tpr_s - fpr_s).abs())
}

/// Denominator convention for [`replicator_prop_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropBoundForm {
    /// Product of accuracies (1−err)(1−err), the form the accuracy-fitness
    /// replicator update forces. Default.
    Accuracy,
    /// Product of errors err·err, kept as a labeled alternate.
    Errors,
}

/// Replicator-dynamics proportion bound:
/// `p_S · |err(h_S) − err(h_T)| · |TPR(h_S) − TPR(h_T)| / denom`,
/// with `denom = (1−err(h_S))(1−err(h_T))` under [`PropBoundForm::Accuracy`].
pub fn replicator_prop_bound(
    p_source: f64,
    err_hs: f64,
    err_ht: f64,
    tpr_hs: f64,
    tpr_ht: f64,
    form: PropBoundForm,
) -> Result<f64> {
    let denom = match form {
        PropBoundForm::Accuracy => (1.0 - err_hs) * (1.0 - err_ht),
        PropBoundForm::Errors => err_hs * err_ht,
    };
    if denom <= 0.0 {
        return Err(Error::DegenerateAccuracy);
    }
    Ok(p_source * (err_hs - err_ht).abs() * (tpr_hs - tpr_ht).abs() / denom)
}

/// One candidate distribution for the worst-case estimator: its grid sweep
/// and label marginal.
#[derive(Debug, Clone)]
pub struct CandidateDomain {
    pub sweep: SweepTable,
    pub label_marginal: LabelMarginal,
}

/// Worst-case bounds over a predicted set of candidate induced domains:
/// the largest induced-to-optimal upper bound and the smallest tradeoff
/// lower bound across candidates.
pub fn worst_case_bounds(
    h_idx: usize,
    probe_induced: &CandidateDomain,
    source: &CandidateDomain,
    candidates: &[CandidateDomain],
) -> (f64, f64) {
    assert!(!candidates.is_empty(), "candidate set must be nonempty");
    let mut ub = f64::NEG_INFINITY;
    let mut lb = f64::INFINITY;
    for cand in candidates {
        ub = ub.max(ub_induced_to_optimal(h_idx, &probe_induced.sweep, &cand.sweep));
        let tv_labels =
            crate::distributions::tv_binary(&source.label_marginal, &cand.label_marginal);
        let tv_pred = (source.sweep.accept[h_idx] - cand.sweep.accept[h_idx]).abs();
        lb = lb.min(lb_tradeoff(tv_labels, tv_pred));
    }
    (ub, lb)
}

/// Check the convexity condition for weighted losses: for every sampled pair
/// of classifiers and every sampled point,
/// `(ω_h(x) − ω_h'(x)) · (ℓ_h(x,y) − ℓ_h'(x,y)) ≥ 0` within 1e−12.
pub fn convexity_condition_check<T, W, L>(
    classifiers: &[T],
    omega: W,
    loss: L,
    points: &[(f64, f64)],
    sample_pairs: usize,
    rng: &mut impl rand::Rng,
) -> bool
where
    W: Fn(&T, f64) -> f64,
    L: Fn(&T, f64, f64) -> f64,
{
    assert!(classifiers.len() >= 2, "need at least two classifiers");
    for _ in 0..sample_pairs {
        let i = rng.random_range(0..classifiers.len());
        let j = rng.random_range(0..classifiers.len());
        if i == j {
            continue;
        }
        for &(x, y) in points {
            let dw = omega(&classifiers[i], x) - omega(&classifiers[j], x);
            let dl = loss(&classifiers[i], x, y) - loss(&classifiers[j], x, y);
            if dw * dl < -COV_STRICT {
                return false;
            }
        }
    }
    true
}

/// Every bound evaluated for one (deployed, optimal) classifier pair, with
/// its components, serializable as one flat CSV row.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Induced-risk gap err_{D(h_S*)}(h_S*) − err_{D(h_T*)}(h_T*).
    pub diff: f64,
    /// max{err_{D_S}(h_T*), err_{D(h_T*)}(h_T*)}.
    pub max_pair: f64,
    pub ub_thm_source_to_induced: f64,
    pub ub_thm_induced_to_optimal: f64,
    pub lb_tradeoff: f64,
    pub lb_tradeoff_features: f64,
    /// Named extra components (TV terms, H-divergence, λ, Λ, weight
    /// variances, rates), in a fixed order for deterministic output.
    pub components: Vec<(String, f64)>,
}

impl BoundReport {
    /// The defining inequalities, asserted rather than assumed.
    pub fn validate(&self) -> Result<()> {
        if self.lb_tradeoff > self.max_pair + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "lower bound {} exceeds max error {}",
                self.lb_tradeoff, self.max_pair
            )));
        }
        if self.diff > self.ub_thm_induced_to_optimal + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "gap {} exceeds upper bound {}",
                self.diff, self.ub_thm_induced_to_optimal
            )));
        }
        Ok(())
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec![
            "diff".to_string(),
            "max_pair".to_string(),
            "ub_thm_source_to_induced".to_string(),
            "ub_thm_induced_to_optimal".to_string(),
            "lb_tradeoff".to_string(),
            "lb_tradeoff_features".to_string(),
        ];
        cols.extend(self.components.iter().map(|(k, _)| k.clone()));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut vals = vec![
            self.diff,
            self.max_pair,
            self.ub_thm_source_to_induced,
            self.ub_thm_induced_to_optimal,
            self.lb_tradeoff,
            self.lb_tradeoff_features,
        ];
        vals.extend(self.components.iter().map(|(_, v)| *v));
        vals.iter().map(|v| crate::harness::fmt_value(*v)).collect::<Vec<_>>().join(",")
    }
}
