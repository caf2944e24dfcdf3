//! Searches for the source-optimal and induced-optimal classifiers, the
//! closed-form replicator induced-risk descent, one-point bandit gradient
//! descent for performative problems, and penalized source training.
//!
//! The grid argmin with smallest-threshold tie-breaking is the workhorse:
//! exhaustive evaluation over the threshold grid is itself the oracle
//! against which the descent methods are checked.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::classifiers::{HypothesisGrid, SweepTable, ThresholdClassifier};
use crate::distributions::EmpiricalDataset;
use crate::error::{Error, Result};
use crate::shift::ReplicatorConfig;

/// Index of the smallest value, ties broken toward the smallest index
/// (hence the smallest threshold on an increasing grid).
pub fn grid_argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Grid argmin of the source risk.
pub fn source_optimal(grid: &HypothesisGrid, d: &EmpiricalDataset) -> (usize, ThresholdClassifier) {
    let sweep = grid.sweep_dataset(d);
    let idx = grid_argmin(&sweep.err);
    (idx, grid.classifier(idx))
}

/// Grid argmin of the induced risk, where `induced_risk[i]` is the risk of
/// grid classifier `i` on the distribution it induces (evaluated by the
/// caller, with common random numbers across the grid for sampled models).
pub fn induced_optimal(grid: &HypothesisGrid, induced_risk: &[f64]) -> (usize, ThresholdClassifier) {
    assert_eq!(induced_risk.len(), grid.len());
    let idx = grid_argmin(induced_risk);
    (idx, grid.classifier(idx))
}

/// Closed-form induced risk of the raw threshold `theta` under the
/// replicator model: `1 − [p(θ)·P₊(X ≥ θ) + (1 − p(θ))·P₋(X < θ)]`, where
/// p(θ) is the utility-replicator update of the qualification rate.
pub fn replicator_closed_form_risk(theta: f64, cfg: &ReplicatorConfig) -> Result<f64> {
    let p = cfg.induced_p(theta)?;
    let (tpr, fpr) = cfg.rates_at(theta);
    let accuracy = p * tpr + (1.0 - p) * (1.0 - fpr);
    Ok(1.0 - accuracy)
}

/// Gradient descent on the closed-form replicator induced risk.
///
/// The gradient is a central finite difference with step 1e−5; iterates are
/// clamped to [0,1]. With `backtracking` the step halves whenever it would
/// increase the risk, so accepted iterates are monotone.
pub fn replicator_gd(
    cfg: &ReplicatorConfig,
    lr: f64,
    iters: usize,
    theta0: f64,
    backtracking: bool,
) -> Result<f64> {
    assert!(lr > 0.0, "learning rate must be positive");
    const FD_STEP: f64 = 1e-5;
    let risk = |t: f64| replicator_closed_form_risk(t, cfg);
    let mut theta = theta0.clamp(0.0, 1.0);
    let mut current = risk(theta)?;
    for _ in 0..iters {
        let lo = (theta - FD_STEP).clamp(0.0, 1.0);
        let hi = (theta + FD_STEP).clamp(0.0, 1.0);
        if hi <= lo {
            break;
        }
        let grad = (risk(hi)? - risk(lo)?) / (hi - lo);
        if !backtracking {
            theta = (theta - lr * grad).clamp(0.0, 1.0);
            current = risk(theta)?;
            continue;
        }
        let mut step = lr;
        let mut moved = false;
        while step > 1e-14 {
            let cand = (theta - step * grad).clamp(0.0, 1.0);
            let cand_risk = risk(cand)?;
            if cand_risk <= current {
                theta = cand;
                current = cand_risk;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(theta)
}

/// A performative problem: deploying θ determines the sampling distribution
/// the loss is evaluated on.
pub trait PerformativeProblem {
    /// Draw `n` observations from D(θ).
    fn sample(&self, theta: &[f64], n: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>>;
    /// Loss of parameter θ on one observation.
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64;
}

/// One-point bandit gradient descent configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditConfig {
    pub dim: usize,
    /// Exploration radius δ in (0,1).
    pub delta: f64,
    /// Step size η.
    pub eta: f64,
    /// Round count T.
    pub rounds: usize,
    /// Radius of the parameter ball Θ.
    pub theta_radius: f64,
    /// Samples observed per round.
    pub n_t: usize,
}

impl BanditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0
            || !(0.0 < self.delta && self.delta < 1.0)
            || self.eta < 0.0
            || self.rounds == 0
            || self.theta_radius <= 0.0
            || self.n_t == 0
        {
            return Err(Error::InvalidConfig(format!("invalid bandit configuration: {self:?}")));
        }
        Ok(())
    }
}

/// One row of the optimizer trace.
#[derive(Debug, Clone, Copy)]
pub struct BanditTraceRow {
    pub round: usize,
    pub ir_estimate: f64,
    pub theta_norm: f64,
}

/// One-point bandit gradient descent.
///
/// Starting from θ = 0, each round probes θ⁺ = θ + δu for a uniform unit
/// vector u, estimates the induced risk as the mean loss of n_t draws from
/// D(θ⁺), forms the gradient estimate (d/δ)·IR̂·u, and projects the step
/// back onto the shrunk ball (1−δ)Θ.
pub fn bandit_gd(
    problem: &impl PerformativeProblem,
    cfg: &BanditConfig,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<f64>, Vec<BanditTraceRow>)> {
    cfg.validate()?;
    let mut theta = vec![0.0f64; cfg.dim];
    let mut trace = Vec::with_capacity(cfg.rounds);
    let shrunk_radius = (1.0 - cfg.delta) * cfg.theta_radius;
    for round in 1..=cfg.rounds {
        let u = unit_sphere(cfg.dim, rng);
        let theta_plus: Vec<f64> =
            theta.iter().zip(&u).map(|(t, ui)| t + cfg.delta * ui).collect();
        let samples = problem.sample(&theta_plus, cfg.n_t, rng);
        let mut ir = 0.0;
        for z in &samples {
            let l = problem.loss(&theta_plus, z);
            if !l.is_finite() {
                return Err(Error::NonFinite);
            }
            ir += l;
        }
        ir /= samples.len() as f64;
        let scale = cfg.dim as f64 / cfg.delta * ir;
        for (t, ui) in theta.iter_mut().zip(&u) {
            *t -= cfg.eta * scale * ui;
        }
        project_ball(&mut theta, shrunk_radius);
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        trace.push(BanditTraceRow { round, ir_estimate: ir, theta_norm: norm });
    }
    Ok((theta, trace))
}

fn unit_sphere(dim: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| crate::math::std_normal_from_uniform(rng.random()))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn project_ball(theta: &mut [f64], radius: f64) {
    let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm > radius {
        let s = radius / norm;
        for t in theta.iter_mut() {
            *t *= s;
        }
    }
}

/// Location-shift quadratic toy with a closed-form performative optimum:
/// deploying θ samples `z = κ·θ + m + sd·ξ`, and the loss is
/// `(θ − z)² + offset`. The induced risk is
/// `((1−κ)θ − m)² + sd² + offset`, minimized at `θ* = m/(1−κ)`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticLocationToy {
    pub kappa: f64,
    pub m: f64,
    pub noise_sd: f64,
    pub offset: f64,
}

impl Default for QuadraticLocationToy {
    fn default() -> Self {
        Self { kappa: 0.4, m: 0.3, noise_sd: 0.05, offset: 0.04 }
    }
}

impl QuadraticLocationToy {
    pub fn optimum(&self) -> f64 {
        self.m / (1.0 - self.kappa)
    }

    /// Exact induced risk of deploying θ.
    pub fn induced_risk(&self, theta: f64) -> f64 {
        let dev = (1.0 - self.kappa) * theta - self.m;
        dev * dev + self.noise_sd * self.noise_sd + self.offset
    }

    pub fn minimum_risk(&self) -> f64 {
        self.induced_risk(self.optimum())
    }
}

impl PerformativeProblem for QuadraticLocationToy {
    fn sample(&self, theta: &[f64], n: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let noise = crate::math::std_normal_from_uniform(rng.random());
                vec![self.kappa * theta[0] + self.m + self.noise_sd * noise]
            })
            .collect()
    }

    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        let d = theta[0] - z[0];
        d * d + self.offset
    }
}

/// Penalized source training: grid argmin of
/// `err_S(h) + α·(P(h=+1|Y=+1) + P(h=+1|Y=−1))/2`.
///
/// The penalty taxes positive predictions, trading false negatives for
/// false positives; beyond α/2 > min(p, 1−p) one class weight in the
/// equivalent reweighted objective goes negative and the rule degenerates.
pub fn regularized_training(
    grid: &HypothesisGrid,
    d: &EmpiricalDataset,
    alpha: f64,
) -> Result<(usize, ThresholdClassifier)> {
    let p = d.label_marginal().p_plus();
    if p == 0.0 || p == 1.0 {
        return Err(Error::MissingClass);
    }
    let idx = regularized_argmin(&grid.sweep_dataset(d), p, alpha)?;
    Ok((idx, grid.classifier(idx)))
}

/// The penalized argmin over a precomputed sweep.
pub fn regularized_argmin(sweep: &SweepTable, p_plus: f64, alpha: f64) -> Result<usize> {
    if alpha < 0.0 {
        return Err(Error::InvalidAlpha);
    }
    if alpha / 2.0 > p_plus.min(1.0 - p_plus) {
        return Err(Error::InvalidAlpha);
    }
    let objective: Vec<f64> = sweep
        .err
        .iter()
        .zip(sweep.tpr.iter().zip(&sweep.fpr))
        .map(|(e, (tpr, fpr))| e + alpha * 0.5 * (tpr + fpr))
        .collect();
    Ok(grid_argmin(&objective))
}

/// Relative induced-accuracy improvement of h_T over h_S, each measured on
/// its own induced distribution.
pub fn improvement_metric(acc_s: f64, acc_t: f64) -> Result<f64> {
    if acc_s <= 0.0 {
        return Err(Error::DegenerateAccuracy);
    }
    Ok((acc_t - acc_s) / acc_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{Mode, Scorer};
    use crate::distributions::LabeledPoint;
    use crate::shift::UtilityMatrix;
    use rand::SeedableRng;

    fn dataset_1d(xs: &[(f64, i8)]) -> EmpiricalDataset {
        let pts = xs.iter().map(|&(x, y)| LabeledPoint::new(vec![x], y)).collect();
        EmpiricalDataset::new(pts, "source").unwrap()
    }

    fn grid(taus: Vec<f64>) -> HypothesisGrid {
        HypothesisGrid::new(Scorer::Identity1D, Mode::Raw, taus).unwrap()
    }

    fn replicator_cfg() -> ReplicatorConfig {
        ReplicatorConfig::new(0.5, 0.7, 0.3, 0.15, UtilityMatrix::identity_reward()).unwrap()
    }

    #[test]
    fn argmin_breaks_ties_to_the_left() {
        assert_eq!(grid_argmin(&[0.3, 0.1, 0.1, 0.2]), 1);
        assert_eq!(grid_argmin(&[0.0]), 0);
    }

    #[test]
    fn source_optimal_finds_separating_threshold() {
        let d = dataset_1d(&[(0.1, -1), (0.3, -1), (0.6, 1), (0.9, 1)]);
        let g = grid(vec![0.25, 0.5, 0.75]);
        let (idx, h) = source_optimal(&g, &d);
        assert_eq!(idx, 1);
        assert_eq!(h.tau, 0.5);
    }

    #[test]
    fn source_optimal_all_positive_picks_smallest_tau() {
        let d = dataset_1d(&[(0.2, 1), (0.5, 1), (0.8, 1)]);
        let g = grid(vec![0.1, 0.4, 0.9]);
        let (idx, _) = source_optimal(&g, &d);
        assert_eq!(idx, 0);
    }

    #[test]
    fn induced_optimal_identity_model_matches_source_optimal() {
        let d = dataset_1d(&[(0.1, -1), (0.3, -1), (0.6, 1), (0.9, 1)]);
        let g = grid(vec![0.25, 0.5, 0.75]);
        let sweep = g.sweep_dataset(&d);
        let (idx, _) = induced_optimal(&g, &sweep.err);
        assert_eq!(idx, source_optimal(&g, &d).0);
    }

    #[test]
    fn replicator_risk_outside_support() {
        let cfg = replicator_cfg();
        // Accept everyone: wrong exactly on the negatives.
        let r_lo = replicator_closed_form_risk(-0.5, &cfg).unwrap();
        let p_lo = cfg.induced_p(-0.5).unwrap();
        assert!((r_lo - (1.0 - p_lo)).abs() < 1e-12);
        // Reject everyone: wrong exactly on the positives.
        let r_hi = replicator_closed_form_risk(1.5, &cfg).unwrap();
        let p_hi = cfg.induced_p(1.5).unwrap();
        assert!((r_hi - p_hi).abs() < 1e-12);
    }

    #[test]
    fn replicator_risk_matches_monte_carlo() {
        let cfg = replicator_cfg();
        let theta = 0.5;
        let closed = replicator_closed_form_risk(theta, &cfg).unwrap();

        // Monte Carlo oracle: draw from the induced population directly.
        let p_induced = cfg.induced_p(theta).unwrap();
        let n = 1_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(123);
        let d = cfg.sample(p_induced, n, &mut rng).unwrap();
        let h = ThresholdClassifier::raw(theta);
        let mc = crate::distributions::empirical_risk(&h, &d);
        let sigma = (closed * (1.0 - closed) / n as f64).sqrt();
        assert!(
            (mc - closed).abs() < 3.0 * sigma + 1e-4,
            "mc={mc}, closed={closed}, sigma={sigma}"
        );
    }

    #[test]
    fn replicator_gradient_self_consistency() {
        // Central difference at 1e−5 agrees with a 4th-order stencil.
        let cfg = replicator_cfg();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let risk = |t: f64| replicator_closed_form_risk(t, &cfg).unwrap();
        for _ in 0..100 {
            let theta: f64 = 0.05 + 0.9 * rng.random::<f64>();
            let h = 1e-5;
            let g2 = (risk(theta + h) - risk(theta - h)) / (2.0 * h);
            let g4 = (-risk(theta + 2.0 * h) + 8.0 * risk(theta + h) - 8.0 * risk(theta - h)
                + risk(theta - 2.0 * h))
                / (12.0 * h);
            assert!((g2 - g4).abs() < 1e-4, "theta={theta}: {g2} vs {g4}");
        }
    }

    #[test]
    fn replicator_gd_is_monotone_and_matches_grid_oracle() {
        let cfg = replicator_cfg();
        let risk = |t: f64| replicator_closed_form_risk(t, &cfg).unwrap();
        let theta0 = 0.2;
        let theta = replicator_gd(&cfg, 0.2, 400, theta0, true).unwrap();
        assert!(risk(theta) <= risk(theta0) + 1e-9);

        // 2001-point grid oracle.
        let grid_best = (0..=2000)
            .map(|i| risk(i as f64 / 2000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(
            (risk(theta) - grid_best).abs() < 1e-3,
            "gd risk {} vs grid best {}",
            risk(theta),
            grid_best
        );
    }

    #[test]
    fn replicator_gd_stays_at_local_minimum() {
        let cfg = replicator_cfg();
        let risk = |t: f64| replicator_closed_form_risk(t, &cfg).unwrap();
        let star = replicator_gd(&cfg, 0.2, 500, 0.5, true).unwrap();
        let again = replicator_gd(&cfg, 0.2, 50, star, true).unwrap();
        assert!((risk(again) - risk(star)).abs() < 1e-10);
    }

    #[test]
    fn bandit_zero_eta_never_moves() {
        let toy = QuadraticLocationToy::default();
        let cfg = BanditConfig {
            dim: 1,
            delta: 0.1,
            eta: 0.0,
            rounds: 50,
            theta_radius: 2.0,
            n_t: 8,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let (theta, trace) = bandit_gd(&toy, &cfg, &mut rng).unwrap();
        assert_eq!(theta, vec![0.0]);
        assert!(trace.iter().all(|r| r.theta_norm == 0.0));
    }

    #[test]
    fn bandit_single_round_is_reproducible() {
        let toy = QuadraticLocationToy::default();
        let cfg = BanditConfig {
            dim: 1,
            delta: 0.1,
            eta: 0.01,
            rounds: 1,
            theta_radius: 2.0,
            n_t: 8,
        };
        let run = |seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            bandit_gd(&toy, &cfg, &mut rng).unwrap()
        };
        let (t1, trace1) = run(7);
        let (t2, trace2) = run(7);
        assert_eq!(t1, t2);
        assert_eq!(trace1.len(), 1);
        assert_eq!(trace1[0].ir_estimate, trace2[0].ir_estimate);
        assert_ne!(t1, vec![0.0]);
    }

    #[test]
    fn bandit_iterates_stay_in_shrunk_ball() {
        let toy = QuadraticLocationToy { kappa: 0.0, m: 5.0, noise_sd: 0.1, offset: 0.0 };
        let cfg = BanditConfig {
            dim: 2,
            delta: 0.25,
            eta: 0.5,
            rounds: 200,
            theta_radius: 1.0,
            n_t: 4,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let (_, trace) = bandit_gd(&toy, &cfg, &mut rng).unwrap();
        for row in trace {
            assert!(row.theta_norm <= 0.75 + 1e-12);
        }
    }

    #[test]
    fn regularized_training_examples() {
        let d = dataset_1d(&[
            (0.1, -1),
            (0.25, -1),
            (0.45, 1),
            (0.55, -1),
            (0.7, 1),
            (0.9, 1),
        ]);
        let g = grid(vec![0.2, 0.4, 0.6, 0.8]);
        // α = 0 coincides with the plain source optimum, bit for bit.
        let (i0, h0) = regularized_training(&g, &d, 0.0).unwrap();
        let (is, hs) = source_optimal(&g, &d);
        assert_eq!(i0, is);
        assert_eq!(h0, hs);

        // A large α never accepts more than α = 0 does.
        let sweep = g.sweep_dataset(&d);
        let p = d.label_marginal().p_plus();
        let limit = 2.0 * p.min(1.0 - p);
        let (ia, _) = regularized_training(&g, &d, limit * 0.99).unwrap();
        assert!(sweep.accept[ia] <= sweep.accept[i0]);

        // Beyond the validity limit the call errors.
        assert!(matches!(
            regularized_training(&g, &d, limit + 0.2),
            Err(Error::InvalidAlpha)
        ));
    }

    #[test]
    fn regularized_argmin_two_bin_brute_force() {
        // Hand-set errors and rates per threshold; enumerate the objective.
        let sweep = SweepTable {
            accept: vec![0.9, 0.4],
            err: vec![0.3, 0.25],
            tpr: vec![1.0, 0.5],
            fpr: vec![0.8, 0.3],
        };
        let alpha = 0.4;
        let objective: Vec<f64> = (0..2)
            .map(|i| sweep.err[i] + alpha * 0.5 * (sweep.tpr[i] + sweep.fpr[i]))
            .collect();
        let expect = if objective[0] <= objective[1] { 0 } else { 1 };
        assert_eq!(regularized_argmin(&sweep, 0.5, alpha).unwrap(), expect);
    }

    #[test]
    fn improvement_metric_examples() {
        assert_eq!(improvement_metric(0.8, 0.8).unwrap(), 0.0);
        assert!((improvement_metric(0.8, 0.88).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(improvement_metric(0.0, 0.5), Err(Error::DegenerateAccuracy)));
    }
}
