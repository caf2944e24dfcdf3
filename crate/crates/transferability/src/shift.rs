//! The shift models: the mapping from a deployed classifier h to the
//! distribution D(h) it induces.
//!
//! Four families are implemented.
//!
//! - **Strategic response** (covariate shift): agents just below a raw
//!   threshold pay to cross it. Available both in closed form — the induced
//!   density has an explicit piecewise-linear importance weight — and as a
//!   per-agent sampler.
//! - **Replicator dynamics** (target shift): class proportions rescale by
//!   the fitness each label earns under the classifier's treatment.
//! - **Synthetic causal DAGs**: a covariate-shift DAG where predictions move
//!   the root feature, and a target-shift DAG where predictions re-draw the
//!   qualification. Downstream variables regenerate from the structural
//!   equations, which preserves P(Y|X) (covariate) or P(X|Y) (target) by
//!   construction.
//! - **Credit-score dynamics**: a grouped population whose latent score gets
//!   a multiplicative bump from favorable decisions and outcomes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::ThresholdClassifier;
use crate::distributions::{
    BinnedDensity1D, BinnedPopulation, EmpiricalDataset, LabeledPoint,
};
use crate::error::{Error, Result};
use crate::math::{std_normal_from_uniform, TruncatedNormal};

// ---------------------------------------------------------------------------
// Strategic response
// ---------------------------------------------------------------------------

/// Manipulation budget for the strategic-response model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategicConfig {
    pub budget: f64,
}

impl StrategicConfig {
    pub fn new(budget: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&budget) {
            return Err(Error::InvalidConfig(format!(
                "strategic budget must lie in [0, 0.5], got {budget}"
            )));
        }
        Ok(Self { budget })
    }

    /// The model is only defined when the band `[τ−B, τ+B]` stays inside [0,1].
    pub fn validate_tau(&self, tau: f64) -> Result<()> {
        if tau - self.budget < 0.0 || tau + self.budget > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "threshold {tau} with budget {} leaves [0,1]",
                self.budget
            )));
        }
        Ok(())
    }
}

/// Importance weight of the strategic response at `x`, for threshold `tau`
/// and budget `b`:
///
/// ```text
///   ω(x) = 1               on [0, τ−B)
///          (τ−x)/B         on [τ−B, τ)
///          (τ + 2B − x)/B  on [τ, τ+B)
///          1               on [τ+B, 1]
/// ```
pub fn strategic_weight(x: f64, tau: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { value: x });
    }
    if b <= 0.0 {
        return Err(Error::InvalidConfig("strategic weight needs budget > 0".into()));
    }
    StrategicConfig::new(b)?.validate_tau(tau)?;
    Ok(if x < tau - b {
        1.0
    } else if x < tau {
        (tau - x) / b
    } else if x < tau + b {
        (tau + 2.0 * b - x) / b
    } else {
        1.0
    })
}

/// Integral of the strategic weight over `[a, c]` (pieces are linear, so the
/// midpoint rule per piece is exact).
fn strategic_weight_integral(a: f64, c: f64, tau: f64, b: f64) -> f64 {
    let knots = [0.0, tau - b, tau, tau + b, 1.0];
    let mut total = 0.0;
    for w in knots.windows(2) {
        let lo = a.max(w[0]);
        let hi = c.min(w[1]);
        if hi > lo {
            let mid = 0.5 * (lo + hi);
            let val = if mid < tau - b || mid >= tau + b {
                1.0
            } else if mid < tau {
                (tau - mid) / b
            } else {
                (tau + 2.0 * b - mid) / b
            };
            total += val * (hi - lo);
        }
    }
    total
}

/// Closed-form induced feature density for the strategic model over the
/// uniform source on [0,1]: each bin mass is the exact integral of the
/// piecewise-linear weight over the bin.
///
/// `b = 0` degenerates to the uniform source (no agent can move).
pub fn strategic_induced_density(tau: f64, b: f64, k: usize) -> Result<BinnedDensity1D> {
    if b == 0.0 {
        return Ok(BinnedDensity1D::uniform(0.0, 1.0, k));
    }
    StrategicConfig::new(b)?.validate_tau(tau)?;
    let width = 1.0 / k as f64;
    let mass: Vec<f64> = (0..k)
        .map(|i| strategic_weight_integral(i as f64 * width, (i + 1) as f64 * width, tau, b))
        .collect();
    BinnedDensity1D::new(0.0, 1.0, mass)
}

/// One agent's probabilistic response to the threshold.
///
/// Accepted agents and agents farther than the budget from the boundary stay
/// put. An agent at distance `g = τ − x < B` succeeds with probability
/// `1 − g/B` and, on success, lands uniformly in `[τ, τ + (B − g)]`.
pub fn strategic_agent_response(
    x: f64,
    tau: f64,
    b: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { value: x });
    }
    StrategicConfig::new(b)?.validate_tau(tau)?;
    if x >= tau || b == 0.0 || x < tau - b {
        return Ok(x);
    }
    let gap = tau - x;
    let success = 1.0 - gap / b;
    if rng.random::<f64>() < success {
        let reach = b - gap;
        Ok(tau + rng.random::<f64>() * reach)
    } else {
        Ok(x)
    }
}

// ---------------------------------------------------------------------------
// Replicator dynamics
// ---------------------------------------------------------------------------

/// Utility of each (qualification, classification) outcome pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityMatrix {
    /// U(y=+1, ŷ=+1)
    pub u_pp: f64,
    /// U(y=+1, ŷ=−1)
    pub u_pn: f64,
    /// U(y=−1, ŷ=+1)
    pub u_np: f64,
    /// U(y=−1, ŷ=−1)
    pub u_nn: f64,
}

impl UtilityMatrix {
    /// Reward 1 for being classified as one's own label, 0 otherwise.
    pub fn identity_reward() -> Self {
        Self { u_pp: 1.0, u_pn: 0.0, u_np: 0.0, u_nn: 1.0 }
    }

    pub fn all_ones() -> Self {
        Self { u_pp: 1.0, u_pn: 1.0, u_np: 1.0, u_nn: 1.0 }
    }

    pub fn get(&self, y: i8, y_hat: i8) -> f64 {
        match (y, y_hat) {
            (1, 1) => self.u_pp,
            (1, -1) => self.u_pn,
            (-1, 1) => self.u_np,
            (-1, -1) => self.u_nn,
            _ => panic!("labels must be ±1"),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.u_pp, self.u_pn, self.u_np, self.u_nn].iter().all(|u| u.is_finite())
    }
}

/// Replicator-dynamics model: truncated-Gaussian class conditionals on [0,1],
/// an initial qualification rate, and an outcome utility matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicatorConfig {
    pub p0: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub sigma: f64,
    pub utility: UtilityMatrix,
}

impl ReplicatorConfig {
    pub fn new(p0: f64, mu_plus: f64, mu_minus: f64, sigma: f64, utility: UtilityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::InvalidConfig(format!("p0 must lie in [0,1], got {p0}")));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        if !utility.is_finite() {
            return Err(Error::InvalidConfig("utility matrix must be finite".into()));
        }
        Ok(Self { p0, mu_plus, mu_minus, sigma, utility })
    }

    pub fn conditional_plus(&self) -> TruncatedNormal {
        TruncatedNormal::new(self.mu_plus, self.sigma, 0.0, 1.0)
    }

    pub fn conditional_minus(&self) -> TruncatedNormal {
        TruncatedNormal::new(self.mu_minus, self.sigma, 0.0, 1.0)
    }

    /// Exact (TPR, FPR) of the raw threshold at `theta` on the source
    /// class conditionals.
    pub fn rates_at(&self, theta: f64) -> (f64, f64) {
        (
            self.conditional_plus().mass_above(theta),
            self.conditional_minus().mass_above(theta),
        )
    }

    /// Utility fitness of each class under the raw threshold at `theta`.
    pub fn fitness_at(&self, theta: f64) -> (f64, f64) {
        let (tpr, fpr) = self.rates_at(theta);
        let u = &self.utility;
        (
            tpr * u.u_pp + (1.0 - tpr) * u.u_pn,
            fpr * u.u_np + (1.0 - fpr) * u.u_nn,
        )
    }

    /// Induced qualification rate p(h_theta).
    pub fn induced_p(&self, theta: f64) -> Result<f64> {
        let (fp, fm) = self.fitness_at(theta);
        replicator_induce(self.p0, fp, fm)
    }

    /// Class-conditional feature densities discretized to `k` bins.
    pub fn binned_conditionals(&self, k: usize) -> (BinnedDensity1D, BinnedDensity1D) {
        let bin_mass = |tn: &TruncatedNormal| -> Vec<f64> {
            let mut mass: Vec<f64> = (0..k)
                .map(|i| tn.cdf((i + 1) as f64 / k as f64) - tn.cdf(i as f64 / k as f64))
                .collect();
            let total: f64 = mass.iter().sum();
            for m in &mut mass {
                *m /= total;
            }
            mass
        };
        (
            BinnedDensity1D::new(0.0, 1.0, bin_mass(&self.conditional_plus())).expect("valid"),
            BinnedDensity1D::new(0.0, 1.0, bin_mass(&self.conditional_minus())).expect("valid"),
        )
    }

    /// The population with qualification rate `p`, discretized to `k` bins.
    pub fn population(&self, p: f64, k: usize) -> Result<BinnedPopulation> {
        let (phi_p, phi_m) = self.binned_conditionals(k);
        let mass: Vec<f64> = phi_p
            .mass()
            .iter()
            .zip(phi_m.mass())
            .map(|(mp, mm)| p * mp + (1.0 - p) * mm)
            .collect();
        let cond: Vec<f64> = phi_p
            .mass()
            .iter()
            .zip(phi_m.mass())
            .map(|(mp, mm)| {
                let num = p * mp;
                let den = p * mp + (1.0 - p) * mm;
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            })
            .collect();
        BinnedPopulation::new(BinnedDensity1D::new(0.0, 1.0, mass)?, cond)
    }

    /// Sample `n` labeled points from the population with qualification rate `p`.
    pub fn sample(&self, p: f64, n: usize, rng: &mut impl Rng) -> Result<EmpiricalDataset> {
        let tn_p = self.conditional_plus();
        let tn_m = self.conditional_minus();
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let y: i8 = if rng.random::<f64>() < p { 1 } else { -1 };
            let tn = if y == 1 { &tn_p } else { &tn_m };
            let x = tn.sample_from_uniform(rng.random::<f64>());
            pts.push(LabeledPoint::new(vec![x], y));
        }
        EmpiricalDataset::new(pts, "replicator")
    }
}

/// Accuracy fitness: F_y = P(h(X) = y | Y = y), i.e. (TPR, TNR).
pub fn fitness_accuracy(h: &ThresholdClassifier, d: &EmpiricalDataset) -> Result<(f64, f64)> {
    let (tpr, fpr) = crate::distributions::rates(h, d)?;
    Ok((tpr, 1.0 - fpr))
}

/// Utility fitness: F_y = Σ_ŷ P(h(X)=ŷ | Y=y) · U(y, ŷ).
pub fn fitness_utility(
    h: &ThresholdClassifier,
    d: &EmpiricalDataset,
    u: &UtilityMatrix,
) -> Result<(f64, f64)> {
    let (tpr, fpr) = crate::distributions::rates(h, d)?;
    Ok((
        tpr * u.u_pp + (1.0 - tpr) * u.u_pn,
        fpr * u.u_np + (1.0 - fpr) * u.u_nn,
    ))
}

/// Replicator update of the qualification rate:
/// `p(h) = p·F₊ / (p·F₊ + (1−p)·F₋)`.
pub fn replicator_induce(p_s: f64, f_plus: f64, f_minus: f64) -> Result<f64> {
    if f_plus < 0.0 || f_minus < 0.0 {
        return Err(Error::InvalidConfig("fitness values must be nonnegative".into()));
    }
    let denom = p_s * f_plus + (1.0 - p_s) * f_minus;
    if denom <= 0.0 {
        return Err(Error::DegenerateFitness);
    }
    Ok((p_s * f_plus / denom).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Synthetic causal DAGs
// ---------------------------------------------------------------------------

/// Covariate-shift DAG:
/// X1 ~ Unif(−1,1); X2 = 1.2·X1 + N(0,σ2²); X3 = −X1² + N(0,σ3²);
/// Y = +1 iff X2 > 0. Adaptation moves X1 by `c·(h(x) − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateDagConfig {
    pub sigma2: f64,
    pub sigma3: f64,
    pub c: f64,
    /// Keep X2, X3, Y fixed after moving X1 (sensitivity mode). The default
    /// regenerates them from the structural equations, which preserves P(Y|X).
    #[serde(default)]
    pub freeze_downstream: bool,
}

impl Default for CovariateDagConfig {
    fn default() -> Self {
        Self { sigma2: 0.1, sigma3: 0.1, c: 0.1, freeze_downstream: false }
    }
}

impl CovariateDagConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma2 <= 0.0 || self.sigma3 <= 0.0 {
            return Err(Error::InvalidConfig("sigma2 and sigma3 must be positive".into()));
        }
        if self.c < 0.0 {
            return Err(Error::InvalidConfig("adaptation strength c must be nonnegative".into()));
        }
        Ok(())
    }

    /// Downstream variables (X2, X3, Y) from the root feature and two
    /// standard-normal draws.
    pub fn downstream(&self, x1: f64, z2: f64, z3: f64) -> (f64, f64, i8) {
        let x2 = 1.2 * x1 + self.sigma2 * z2;
        let x3 = -x1 * x1 + self.sigma3 * z3;
        let y = if x2 > 0.0 { 1 } else { -1 };
        (x2, x3, y)
    }
}

/// Draw `n` points from the covariate-shift DAG.
pub fn covariate_dag_sample(
    n: usize,
    cfg: &CovariateDagConfig,
    rng: &mut impl Rng,
) -> Result<EmpiricalDataset> {
    cfg.validate()?;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = rng.random::<f64>() * 2.0 - 1.0;
        let z2 = std_normal_from_uniform(rng.random());
        let z3 = std_normal_from_uniform(rng.random());
        let (x2, x3, y) = cfg.downstream(x1, z2, z3);
        pts.push(LabeledPoint::new(vec![x1, x2, x3], y));
    }
    EmpiricalDataset::new(pts, "source")
}

/// Apply the covariate-DAG adaptation to every point: shift X1 by
/// `c·(h(x)−1)` and regenerate the downstream variables.
pub fn covariate_dag_adapt(
    d: &EmpiricalDataset,
    h: &ThresholdClassifier,
    cfg: &CovariateDagConfig,
    rng: &mut impl Rng,
) -> Result<EmpiricalDataset> {
    cfg.validate()?;
    let mut pts = Vec::with_capacity(d.len());
    for p in d.points() {
        if p.x.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: p.x.len() });
        }
        let pred = h.predict(&p.x)? as f64;
        let x1 = p.x[0] + cfg.c * (pred - 1.0);
        if cfg.freeze_downstream {
            pts.push(LabeledPoint::new(vec![x1, p.x[1], p.x[2]], p.y));
        } else {
            let z2 = std_normal_from_uniform(rng.random());
            let z3 = std_normal_from_uniform(rng.random());
            let (x2, x3, y) = cfg.downstream(x1, z2, z3);
            pts.push(LabeledPoint::new(vec![x1, x2, x3], y));
        }
    }
    EmpiricalDataset::new(pts, "induced")
}

/// Post-classification qualification transition:
/// entry (h, y) is P(Y' = +1 | h(X) = h, Y = y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    /// c(h=+1, y=+1)
    pub c_pp: f64,
    /// c(h=+1, y=−1)
    pub c_pn: f64,
    /// c(h=−1, y=+1)
    pub c_np: f64,
    /// c(h=−1, y=−1)
    pub c_nn: f64,
}

impl TransitionMatrix {
    pub fn validate(&self) -> Result<()> {
        for c in [self.c_pp, self.c_pn, self.c_np, self.c_nn] {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidConfig(format!(
                    "transition entries must lie in [0,1], got {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, h: i8, y: i8) -> f64 {
        match (h, y) {
            (1, 1) => self.c_pp,
            (1, -1) => self.c_pn,
            (-1, 1) => self.c_np,
            (-1, -1) => self.c_nn,
            _ => panic!("labels must be ±1"),
        }
    }
}

/// Target-shift DAG:
/// (Y+1)/2 ~ Bernoulli(α); X1|Y ~ truncated N(μ_y, σ²) on [0,1];
/// X2 = −0.8·X1 + N(0,σ2²); X3 = 0.2·Y + N(0,σ3²).
/// Adaptation re-draws Y with probability c_{h(x),y} and regenerates features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDagConfig {
    pub alpha: f64,
    pub mu_pos: f64,
    pub mu_neg: f64,
    pub sigma: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub c_hy: TransitionMatrix,
}

impl Default for TargetDagConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mu_pos: 0.7,
            mu_neg: 0.3,
            sigma: 0.15,
            sigma2: 0.1,
            sigma3: 0.1,
            c_hy: TransitionMatrix { c_pp: 0.9, c_pn: 0.7, c_np: 0.4, c_nn: 0.2 },
        }
    }
}

impl TargetDagConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        if self.sigma <= 0.0 || self.sigma2 <= 0.0 || self.sigma3 <= 0.0 {
            return Err(Error::InvalidConfig("noise scales must be positive".into()));
        }
        self.c_hy.validate()
    }

    /// Feature vector for label `y` from three uniform draws.
    pub fn features(&self, y: i8, u1: f64, u2: f64, u3: f64) -> Vec<f64> {
        let tn = TruncatedNormal::new(
            if y == 1 { self.mu_pos } else { self.mu_neg },
            self.sigma,
            0.0,
            1.0,
        );
        let x1 = tn.sample_from_uniform(u1);
        let x2 = -0.8 * x1 + self.sigma2 * std_normal_from_uniform(u2);
        let x3 = 0.2 * y as f64 + self.sigma3 * std_normal_from_uniform(u3);
        vec![x1, x2, x3]
    }
}

/// Draw `n` points from the target-shift DAG.
pub fn target_dag_sample(
    n: usize,
    cfg: &TargetDagConfig,
    rng: &mut impl Rng,
) -> Result<EmpiricalDataset> {
    cfg.validate()?;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let y: i8 = if rng.random::<f64>() < cfg.alpha { 1 } else { -1 };
        let x = cfg.features(y, rng.random(), rng.random(), rng.random());
        pts.push(LabeledPoint::new(x, y));
    }
    EmpiricalDataset::new(pts, "source")
}

/// Apply the target-DAG adaptation: re-draw each label from the transition
/// matrix and regenerate features from the class conditionals.
pub fn target_dag_adapt(
    d: &EmpiricalDataset,
    h: &ThresholdClassifier,
    cfg: &TargetDagConfig,
    rng: &mut impl Rng,
) -> Result<EmpiricalDataset> {
    cfg.validate()?;
    let mut pts = Vec::with_capacity(d.len());
    for p in d.points() {
        let pred = h.predict(&p.x)?;
        let c = cfg.c_hy.get(pred, p.y);
        let y_new: i8 = if rng.random::<f64>() < c { 1 } else { -1 };
        let x = cfg.features(y_new, rng.random(), rng.random(), rng.random());
        pts.push(LabeledPoint::new(x, y_new));
    }
    EmpiricalDataset::new(pts, "induced")
}

// ---------------------------------------------------------------------------
// Credit-score dynamics
// ---------------------------------------------------------------------------

/// Credit-score dynamics parameters. Defaults: ε₁ = ε₂ = σ = 0.1,
/// α_D = 0.01, α_Y = 0.005.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FicoConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub sigma: f64,
    pub alpha_d: f64,
    pub alpha_y: f64,
}

impl Default for FicoConfig {
    fn default() -> Self {
        Self { eps1: 0.1, eps2: 0.1, sigma: 0.1, alpha_d: 0.01, alpha_y: 0.005 }
    }
}

impl FicoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps1 < 0.0 || self.eps2 < 0.0 || self.sigma < 0.0 {
            return Err(Error::InvalidConfig("noise scales must be nonnegative".into()));
        }
        if self.alpha_d < 0.0 || self.alpha_y < 0.0 {
            return Err(Error::InvalidConfig("score increments must be nonnegative".into()));
        }
        Ok(())
    }

    /// Features from three uniform draws:
    /// X1 = 1.5·Q + U[−ε₁,ε₁]; X2 = 0.8·A + U[−ε₂,ε₂]; X3 = A + N(0,σ²).
    pub fn features_from_uniforms(&self, q: f64, a: f64, u1: f64, u2: f64, u3: f64) -> Result<[f64; 3]> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::OutOfDomain { value: q });
        }
        Ok([
            1.5 * q + self.eps1 * (2.0 * u1 - 1.0),
            0.8 * a + self.eps2 * (2.0 * u2 - 1.0),
            a + self.sigma * std_normal_from_uniform(u3),
        ])
    }
}

/// Observable features of an individual with score `q` in group `a`.
pub fn fico_features(q: f64, a: f64, cfg: &FicoConfig, rng: &mut impl Rng) -> Result<[f64; 3]> {
    cfg.validate()?;
    cfg.features_from_uniforms(q, a, rng.random(), rng.random(), rng.random())
}

/// Multiplicative score update, truncated into (0, 1]:
/// `Q' = { Q · (1 + α_D·1(D) + α_Y·1(Y)) }_(0,1]`.
pub fn fico_update(q: f64, d: bool, y: bool, cfg: &FicoConfig) -> Result<f64> {
    cfg.validate()?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::OutOfDomain { value: q });
    }
    let mult = 1.0 + if d { cfg.alpha_d } else { 0.0 } + if y { cfg.alpha_y } else { 0.0 };
    Ok((q * mult).min(1.0))
}

// ---------------------------------------------------------------------------
// Group CDF ingestion
// ---------------------------------------------------------------------------

/// Per-group score densities obtained by differencing CDF columns.
#[derive(Debug, Clone)]
pub struct GroupCdf {
    pub names: Vec<String>,
    pub densities: Vec<BinnedDensity1D>,
}

/// Read a group-CDF CSV file: header `score,<g1>,<g2>,…`, score column
/// strictly increasing in [0,1], group columns monotone nondecreasing.
pub fn ingest_group_cdf(path: &std::path::Path) -> Result<GroupCdf> {
    let text = std::fs::read_to_string(path)?;
    ingest_group_cdf_str(&text, None)
}

/// Parse group-CDF CSV text. If the score rows are evenly spaced their
/// intervals become the bins directly; otherwise the piecewise-linear CDF is
/// resampled onto `target_k` (default 512) uniform bins.
pub fn ingest_group_cdf_str(text: &str, target_k: Option<usize>) -> Result<GroupCdf> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::ParseError("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "score" {
        return Err(Error::ParseError("header must be `score,<group>,…`".into()));
    }
    let names: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();

    let mut scores: Vec<f64> = Vec::new();
    let mut cdfs: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row_idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::ParseError(format!(
                "row {row_idx} has {} fields, expected {}",
                fields.len(),
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::ParseError(format!("row {row_idx}: {s}: {e}")))
        };
        let score = parse(fields[0])?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ParseError(format!("score {score} outside [0,1]")));
        }
        if let Some(&prev) = scores.last() {
            if score <= prev {
                return Err(Error::ParseError(format!(
                    "score column must be strictly increasing (row {row_idx})"
                )));
            }
        }
        scores.push(score);
        for (g, cdf) in cdfs.iter_mut().enumerate() {
            let v = parse(fields[g + 1])?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ParseError(format!("CDF value {v} outside [0,1]")));
            }
            if let Some(&prev) = cdf.last() {
                if v < prev - 1e-12 {
                    return Err(Error::NonMonotoneCdf { row: row_idx });
                }
            }
            cdf.push(v);
        }
    }
    if scores.len() < 2 {
        return Err(Error::ParseError("need at least two CDF rows".into()));
    }

    let widths: Vec<f64> = scores.windows(2).map(|w| w[1] - w[0]).collect();
    let even = widths.iter().all(|&w| (w - widths[0]).abs() < 1e-9);
    let (lo, hi) = (scores[0], scores[scores.len() - 1]);

    let densities: Vec<BinnedDensity1D> = cdfs
        .iter()
        .map(|cdf| {
            let total = cdf[cdf.len() - 1] - cdf[0];
            if total <= 0.0 {
                return Err(Error::ParseError("CDF column carries no mass".into()));
            }
            if even && scores.len() >= 3 {
                let mass: Vec<f64> =
                    cdf.windows(2).map(|w| (w[1] - w[0]) / total).collect();
                BinnedDensity1D::new(lo, hi, mass)
            } else {
                // Resample the piecewise-linear CDF onto uniform bins.
                let k = target_k.unwrap_or(512);
                let interp = |x: f64| -> f64 {
                    if x <= lo {
                        return cdf[0];
                    }
                    if x >= hi {
                        return cdf[cdf.len() - 1];
                    }
                    let j = scores.partition_point(|&s| s <= x) - 1;
                    let t = (x - scores[j]) / (scores[j + 1] - scores[j]);
                    cdf[j] + t * (cdf[j + 1] - cdf[j])
                };
                let w = (hi - lo) / k as f64;
                let mass: Vec<f64> = (0..k)
                    .map(|i| {
                        (interp(lo + (i + 1) as f64 * w) - interp(lo + i as f64 * w)) / total
                    })
                    .collect();
                BinnedDensity1D::new(lo, hi, mass)
            }
        })
        .collect::<Result<_>>()?;

    Ok(GroupCdf { names, densities })
}
