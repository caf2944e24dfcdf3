//! Experiment loops behind the CLI: configuration parsing, the per-model
//! engines, seeded determinism, and CSV persistence.
//!
//! Every engine produces a sequence of [`StepRecord`]s carrying the reported
//! gap (`diff`), the worst pair error (`max_pair`), the enforced upper and
//! lower bound columns, and every component that went into them. Three
//! record invariants are asserted on every emitted row: `diff ≥ −1e−9`,
//! `diff ≤ ub + 1e−9`, and `lb ≤ max_pair + 1e−9`.
//!
//! Determinism: all randomness flows through ChaCha streams derived from the
//! root seed and a stream index, and sampled sweeps reuse one per-individual
//! noise record across every grid threshold (common random numbers), so the
//! grid argmin and the CSV bytes are reproducible run to run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::classifiers::{
    train_base_scorer, HypothesisGrid, LinearScorer, Mode, Scorer, SweepTable,
};
use crate::distributions::{
    importance_weights, tv_binary, tv_binned, tv_empirical_1d, BinnedDensity1D,
    BinnedPopulation, EmpiricalDataset, LabeledPoint,
};
use crate::error::{Error, Result};
use crate::math::derive_seed;
use crate::optimizers::{
    bandit_gd, grid_argmin, improvement_metric, replicator_closed_form_risk, replicator_gd,
    BanditConfig, QuadraticLocationToy,
};
use crate::shift::{
    fico_update, ingest_group_cdf_str, CovariateDagConfig, FicoConfig, ReplicatorConfig,
    StrategicConfig, TargetDagConfig, UtilityMatrix,
};

/// Format one CSV value with 12 significant digits.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.11e}")
    }
}

fn default_grid() -> usize {
    201
}
fn default_samples() -> usize {
    40_000
}
fn default_bins() -> usize {
    512
}
fn default_steps() -> usize {
    15
}
fn default_epochs() -> usize {
    300
}
fn default_lr() -> f64 {
    0.5
}
fn default_budget() -> f64 {
    0.2
}
fn default_cond_center() -> f64 {
    0.55
}
fn default_cond_width() -> f64 {
    0.1
}
fn default_p0() -> f64 {
    0.5
}
fn default_mu_plus() -> f64 {
    0.7
}
fn default_mu_minus() -> f64 {
    0.3
}
fn default_rep_sigma() -> f64 {
    0.15
}

/// Top-level experiment configuration, discriminated by `"experiment"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Strategic(StrategicExperiment),
    Replicator(ReplicatorExperiment),
    CovariateDag(CovariateDagExperiment),
    TargetDag(TargetDagExperiment),
    Fico(FicoExperiment),
    Bandit(BanditExperiment),
}

impl ExperimentConfig {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::ConfigError(e.to_string()))
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Strategic(c) => c.seed,
            Self::Replicator(c) => c.seed,
            Self::CovariateDag(c) => c.seed,
            Self::TargetDag(c) => c.seed,
            Self::Fico(c) => c.seed,
            Self::Bandit(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Self::Strategic(c) => c.seed = Some(seed),
            Self::Replicator(c) => c.seed = Some(seed),
            Self::CovariateDag(c) => c.seed = Some(seed),
            Self::TargetDag(c) => c.seed = Some(seed),
            Self::Fico(c) => c.seed = Some(seed),
            Self::Bandit(c) => c.seed = Some(seed),
        }
    }

    pub fn set_grid(&mut self, grid: usize) {
        match self {
            Self::Strategic(c) => c.grid = grid,
            Self::Replicator(c) => c.grid = grid,
            Self::CovariateDag(c) => c.grid = grid,
            Self::TargetDag(c) => c.grid = grid,
            Self::Fico(c) => c.grid = grid,
            Self::Bandit(_) => {}
        }
    }

    pub fn set_samples(&mut self, n: usize) {
        match self {
            Self::Strategic(_) | Self::Replicator(_) | Self::Bandit(_) => {}
            Self::CovariateDag(c) => c.samples = n,
            Self::TargetDag(c) => c.samples = n,
            Self::Fico(c) => c.samples = n,
        }
    }

    fn resolved_seed(&self) -> Result<u64> {
        self.seed().ok_or_else(|| Error::ConfigError("a seed is required".into()))
    }

    fn provenance(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::ConfigError(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategicExperiment {
    #[serde(default = "default_budget")]
    pub budget: f64,
    /// P(Y=+1|x) = logistic((x − center)/width).
    #[serde(default = "default_cond_center")]
    pub conditional_center: f64,
    #[serde(default = "default_cond_width")]
    pub conditional_width: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for StrategicExperiment {
    fn default() -> Self {
        Self {
            budget: default_budget(),
            conditional_center: default_cond_center(),
            conditional_width: default_cond_width(),
            bins: default_bins(),
            grid: default_grid(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicatorExperiment {
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default = "default_mu_plus")]
    pub mu_plus: f64,
    #[serde(default = "default_mu_minus")]
    pub mu_minus: f64,
    #[serde(default = "default_rep_sigma")]
    pub sigma: f64,
    #[serde(default = "UtilityMatrix::identity_reward")]
    pub utility: UtilityMatrix,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for ReplicatorExperiment {
    fn default() -> Self {
        Self {
            p0: default_p0(),
            mu_plus: default_mu_plus(),
            mu_minus: default_mu_minus(),
            sigma: default_rep_sigma(),
            utility: UtilityMatrix::identity_reward(),
            bins: default_bins(),
            grid: default_grid(),
            seed: None,
        }
    }
}

impl ReplicatorExperiment {
    pub fn model(&self) -> Result<ReplicatorConfig> {
        ReplicatorConfig::new(self.p0, self.mu_plus, self.mu_minus, self.sigma, self.utility)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateDagExperiment {
    #[serde(default)]
    pub model: CovariateDagConfig,
    /// Load the base scorer from this plain-text record instead of training.
    #[serde(default)]
    pub scorer_path: Option<String>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for CovariateDagExperiment {
    fn default() -> Self {
        Self {
            model: CovariateDagConfig::default(),
            scorer_path: None,
            epochs: default_epochs(),
            lr: default_lr(),
            grid: default_grid(),
            samples: default_samples(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDagExperiment {
    #[serde(default)]
    pub model: TargetDagConfig,
    /// Load the base scorer from this plain-text record instead of training.
    #[serde(default)]
    pub scorer_path: Option<String>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for TargetDagExperiment {
    fn default() -> Self {
        Self {
            model: TargetDagConfig::default(),
            scorer_path: None,
            epochs: default_epochs(),
            lr: default_lr(),
            grid: default_grid(),
            samples: default_samples(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FicoExperiment {
    #[serde(default)]
    pub dynamics: FicoConfig,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Path of a group-CDF CSV file; the bundled synthetic CDFs when absent.
    #[serde(default)]
    pub cdf_path: Option<String>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for FicoExperiment {
    fn default() -> Self {
        Self {
            dynamics: FicoConfig::default(),
            steps: default_steps(),
            cdf_path: None,
            epochs: default_epochs(),
            lr: default_lr(),
            grid: default_grid(),
            samples: default_samples(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditExperiment {
    #[serde(default = "default_bandit_dim")]
    pub dim: usize,
    #[serde(default = "default_bandit_delta")]
    pub delta: f64,
    #[serde(default = "default_bandit_eta")]
    pub eta: f64,
    #[serde(default = "default_bandit_rounds")]
    pub rounds: usize,
    #[serde(default = "default_bandit_radius")]
    pub theta_radius: f64,
    #[serde(default = "default_bandit_nt")]
    pub n_t: usize,
    #[serde(default)]
    pub toy: ToyParams,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_bandit_dim() -> usize {
    1
}
fn default_bandit_delta() -> f64 {
    0.1
}
fn default_bandit_eta() -> f64 {
    0.01
}
fn default_bandit_rounds() -> usize {
    2000
}
fn default_bandit_radius() -> f64 {
    2.0
}
fn default_bandit_nt() -> usize {
    64
}

impl Default for BanditExperiment {
    fn default() -> Self {
        Self {
            dim: default_bandit_dim(),
            delta: default_bandit_delta(),
            eta: default_bandit_eta(),
            rounds: default_bandit_rounds(),
            theta_radius: default_bandit_radius(),
            n_t: default_bandit_nt(),
            toy: ToyParams::default(),
            seed: None,
        }
    }
}

/// Parameters of the quadratic location-shift toy problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyParams {
    pub kappa: f64,
    pub m: f64,
    pub noise_sd: f64,
    pub offset: f64,
}

impl Default for ToyParams {
    fn default() -> Self {
        let t = QuadraticLocationToy::default();
        Self { kappa: t.kappa, m: t.m, noise_sd: t.noise_sd, offset: t.offset }
    }
}

impl ToyParams {
    pub fn toy(&self) -> QuadraticLocationToy {
        QuadraticLocationToy {
            kappa: self.kappa,
            m: self.m,
            noise_sd: self.noise_sd,
            offset: self.offset,
        }
    }
}

/// One emitted experiment row.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub diff: f64,
    pub max_pair: f64,
    pub ub: f64,
    pub lb: f64,
    pub components: Vec<(&'static str, f64)>,
}

impl StepRecord {
    /// The three record invariants, asserted on every emitted row.
    pub fn validate(&self) -> Result<()> {
        if self.diff < -1e-9 {
            return Err(Error::InvariantViolation(format!(
                "step {}: negative gap {}",
                self.step, self.diff
            )));
        }
        if self.diff > self.ub + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "step {}: gap {} exceeds upper bound {}",
                self.step, self.diff, self.ub
            )));
        }
        if self.lb > self.max_pair + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "step {}: lower bound {} exceeds max error {}",
                self.step, self.lb, self.max_pair
            )));
        }
        Ok(())
    }

    pub fn component(&self, key: &str) -> Option<f64> {
        self.components.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    /// Repackage the record as a [`bounds::BoundReport`]: the four theorem
    /// bounds become the report's named fields, everything else stays in
    /// the component map.
    pub fn to_bound_report(&self) -> bounds::BoundReport {
        const PRIMARY: [&str; 4] = [
            "ub_thm_source_to_induced",
            "ub_thm_induced_to_optimal",
            "lb_tradeoff",
            "lb_features",
        ];
        bounds::BoundReport {
            diff: self.diff,
            max_pair: self.max_pair,
            ub_thm_source_to_induced: self.component(PRIMARY[0]).unwrap_or(f64::NAN),
            ub_thm_induced_to_optimal: self.component(PRIMARY[1]).unwrap_or(f64::NAN),
            lb_tradeoff: self.component(PRIMARY[2]).unwrap_or(f64::NAN),
            lb_tradeoff_features: self.component(PRIMARY[3]).unwrap_or(f64::NAN),
            components: self
                .components
                .iter()
                .filter(|(k, _)| !PRIMARY.contains(k))
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    fn header(&self) -> String {
        let mut cols = vec!["step", "diff", "max_pair", "ub", "lb"];
        cols.extend(self.components.iter().map(|(k, _)| *k));
        cols.join(",")
    }

    fn row(&self) -> String {
        let mut out = vec![self.step.to_string()];
        out.push(fmt_value(self.diff));
        out.push(fmt_value(self.max_pair));
        out.push(fmt_value(self.ub));
        out.push(fmt_value(self.lb));
        out.extend(self.components.iter().map(|(_, v)| fmt_value(*v)));
        out.join(",")
    }
}

/// Result of one experiment run: the records, the CSV bytes, and the last
/// trained scorer (for the DAG and credit engines).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub csv: String,
    pub scorer: Option<LinearScorer>,
}

fn records_to_csv(provenance: &str, records: &[StepRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# config = {provenance}\n"));
    out.push_str(&records[0].header());
    out.push('\n');
    for r in records {
        out.push_str(&r.row());
        out.push('\n');
    }
    out
}

/// Errors/acceptance/rates of every raw grid threshold on a binned population.
pub fn sweep_population(pop: &BinnedPopulation, taus: &[f64]) -> SweepTable {
    let mut table = SweepTable {
        accept: Vec::with_capacity(taus.len()),
        err: Vec::with_capacity(taus.len()),
        tpr: Vec::with_capacity(taus.len()),
        fpr: Vec::with_capacity(taus.len()),
    };
    for &tau in taus {
        table.accept.push(pop.accept_raw(tau));
        table.err.push(pop.risk_raw(tau));
        match pop.rates_raw(tau) {
            Ok((tpr, fpr)) => {
                table.tpr.push(tpr);
                table.fpr.push(fpr);
            }
            Err(_) => {
                table.tpr.push(f64::NAN);
                table.fpr.push(f64::NAN);
            }
        }
    }
    table
}

/// Analytic sweep of the replicator model at qualification rate `p`.
pub fn replicator_sweep(cfg: &ReplicatorConfig, p: f64, taus: &[f64]) -> SweepTable {
    let mut table = SweepTable {
        accept: Vec::with_capacity(taus.len()),
        err: Vec::with_capacity(taus.len()),
        tpr: Vec::with_capacity(taus.len()),
        fpr: Vec::with_capacity(taus.len()),
    };
    for &tau in taus {
        let (tpr, fpr) = cfg.rates_at(tau);
        table.accept.push(p * tpr + (1.0 - p) * fpr);
        table.err.push(p * (1.0 - tpr) + (1.0 - p) * fpr);
        table.tpr.push(tpr);
        table.fpr.push(fpr);
    }
    table
}

/// The induced population of the strategic response at threshold `tau`.
pub fn strategic_induced_pop(
    source_pop: &BinnedPopulation,
    tau: f64,
    budget: f64,
) -> Result<BinnedPopulation> {
    let induced_density =
        crate::shift::strategic_induced_density(tau, budget, source_pop.density().k())?;
    if budget == 0.0 {
        return Ok(source_pop.clone());
    }
    let w = importance_weights(source_pop.density(), &induced_density)?;
    source_pop.reweight(&w)
}

/// The uniform-source strategic population with a logistic label conditional.
pub fn strategic_source_pop(cfg: &StrategicExperiment) -> Result<BinnedPopulation> {
    if cfg.conditional_width <= 0.0 {
        return Err(Error::ConfigError("conditional width must be positive".into()));
    }
    let density = BinnedDensity1D::uniform(0.0, 1.0, cfg.bins);
    let (center, width) = (cfg.conditional_center, cfg.conditional_width);
    BinnedPopulation::from_fn(density, move |x| crate::math::logistic((x - center) / width))
}

/// The strategic grid spans the band on which the response is defined.
pub fn strategic_grid(cfg: &StrategicExperiment) -> Result<HypothesisGrid> {
    if cfg.budget >= 0.5 {
        return Err(Error::ConfigError("strategic budget must be below 0.5".into()));
    }
    HypothesisGrid::uniform(Scorer::Identity1D, Mode::Raw, cfg.budget, 1.0 - cfg.budget, cfg.grid)
}

// ---------------------------------------------------------------------------
// Strategic engine (closed form)
// ---------------------------------------------------------------------------

fn run_strategic(cfg: &StrategicExperiment) -> Result<RunOutput> {
    let model = StrategicConfig::new(cfg.budget)?;
    let pop_s = strategic_source_pop(cfg)?;
    let grid = strategic_grid(cfg)?;
    let taus = grid.taus().to_vec();

    let source_sweep = sweep_population(&pop_s, &taus);
    let mut induced_risk = Vec::with_capacity(taus.len());
    for &tau in &taus {
        model.validate_tau(tau)?;
        induced_risk.push(strategic_induced_pop(&pop_s, tau, cfg.budget)?.risk_raw(tau));
    }
    let idx_s = grid_argmin(&source_sweep.err);
    let idx_t = grid_argmin(&induced_risk);
    let (tau_s, tau_t) = (taus[idx_s], taus[idx_t]);

    let source_density = pop_s.density();
    let induced_s = strategic_induced_pop(&pop_s, tau_s, cfg.budget)?;
    let induced_t = strategic_induced_pop(&pop_s, tau_t, cfg.budget)?;
    let w_s = importance_weights(source_density, induced_s.density())?;
    let w_t = importance_weights(source_density, induced_t.density())?;

    let sweep_on_dhs = sweep_population(&induced_s, &taus);
    let sweep_on_dht = sweep_population(&induced_t, &taus);

    let diff = induced_risk[idx_s] - induced_risk[idx_t];
    let err_s_ht = source_sweep.err[idx_t];
    let max_pair = err_s_ht.max(induced_risk[idx_t]);

    let ub_strategic = bounds::strategic_ub(cfg.budget, err_s_ht);
    let var_s = w_s.variance(source_density)?;
    let var_t = w_t.variance(source_density)?;
    let ub_cs = bounds::cs_ub_from_components(err_s_ht, var_s, var_t);
    let ub_thm31 = bounds::ub_source_to_induced(idx_s, &source_sweep, &sweep_on_dhs);
    let ub_thm32 = bounds::ub_induced_to_optimal(idx_s, &sweep_on_dhs, &sweep_on_dht);

    // Lower bound for the probe h_T* against its own induced distribution.
    let tv_labels = tv_binary(&pop_s.label_marginal(), &induced_t.label_marginal());
    let tv_pred = (pop_s.accept_raw(tau_t) - induced_t.accept_raw(tau_t)).abs();
    let tv_features = tv_binned(source_density, induced_t.density())?;
    let lb = bounds::lb_tradeoff(tv_labels, tv_pred);
    let lb_feat = bounds::lb_tradeoff_features(tv_labels, tv_features);

    let ce = bounds::combined_errors(idx_s, &sweep_on_dhs, &sweep_on_dht);
    let hdiv_pair = crate::distributions::h_divergence_from_acceptance(
        &sweep_on_dht.accept,
        &sweep_on_dhs.accept,
    );
    let hdiv_src = crate::distributions::h_divergence_from_acceptance(
        &source_sweep.accept,
        &sweep_on_dhs.accept,
    );

    let record = StepRecord {
        step: 0,
        diff,
        max_pair,
        ub: ub_strategic,
        lb,
        components: vec![
            ("tau_s", tau_s),
            ("tau_t", tau_t),
            ("err_source_hs", source_sweep.err[idx_s]),
            ("err_source_ht", err_s_ht),
            ("risk_induced_hs", induced_risk[idx_s]),
            ("risk_induced_ht", induced_risk[idx_t]),
            ("ub_strategic", ub_strategic),
            ("ub_cs_variance", ub_cs),
            ("ub_thm_source_to_induced", ub_thm31),
            ("ub_thm_induced_to_optimal", ub_thm32),
            ("lambda_pair", ce.lambda_min),
            ("capital_lambda_pair", ce.lambda_max_of_h),
            ("hdiv_pair", hdiv_pair),
            ("hdiv_source_induced", hdiv_src),
            ("lb_tradeoff", lb),
            ("lb_features", lb_feat),
            ("tv_labels", tv_labels),
            ("tv_predictions", tv_pred),
            ("tv_features", tv_features),
            ("var_omega_hs", var_s),
            ("var_omega_ht", var_t),
        ],
    };
    record.validate()?;
    let csv =
        records_to_csv(&ExperimentConfig::Strategic(cfg.clone()).provenance()?, std::slice::from_ref(&record));
    Ok(RunOutput { records: vec![record], csv, scorer: None })
}

// ---------------------------------------------------------------------------
// Replicator engine (closed form)
// ---------------------------------------------------------------------------

fn run_replicator(cfg: &ReplicatorExperiment) -> Result<RunOutput> {
    let model = cfg.model()?;
    let grid = HypothesisGrid::uniform(Scorer::Identity1D, Mode::Raw, 0.0, 1.0, cfg.grid)?;
    let taus = grid.taus().to_vec();

    let source_sweep = replicator_sweep(&model, model.p0, &taus);
    let induced_risk: Vec<f64> = taus
        .iter()
        .map(|&t| replicator_closed_form_risk(t, &model))
        .collect::<Result<_>>()?;
    let idx_s = grid_argmin(&source_sweep.err);
    let idx_t = grid_argmin(&induced_risk);
    let (tau_s, tau_t) = (taus[idx_s], taus[idx_t]);

    let p_hs = model.induced_p(tau_s)?;
    let p_ht = model.induced_p(tau_t)?;
    let sweep_on_dhs = replicator_sweep(&model, p_hs, &taus);
    let sweep_on_dht = replicator_sweep(&model, p_ht, &taus);

    let diff = induced_risk[idx_s] - induced_risk[idx_t];
    let err_s_ht = source_sweep.err[idx_t];
    let max_pair = err_s_ht.max(induced_risk[idx_t]);

    let (tpr_s, fpr_s) = model.rates_at(tau_s);
    let (tpr_t, fpr_t) = model.rates_at(tau_t);
    let ub_ts = bounds::ts_ub(model.p0, p_hs, p_ht, tpr_s, tpr_t, fpr_s, fpr_t);
    let ub_thm31 = bounds::ub_source_to_induced(idx_s, &source_sweep, &sweep_on_dhs);
    let ub_thm32 = bounds::ub_induced_to_optimal(idx_s, &sweep_on_dhs, &sweep_on_dht);

    let tv_labels = (model.p0 - p_ht).abs();
    let tv_pred = (source_sweep.accept[idx_t] - sweep_on_dht.accept[idx_t]).abs();
    let (phi_p, phi_m) = model.binned_conditionals(cfg.bins);
    let marginal = |p: f64| -> Result<BinnedDensity1D> {
        let mass: Vec<f64> = phi_p
            .mass()
            .iter()
            .zip(phi_m.mass())
            .map(|(a, b)| p * a + (1.0 - p) * b)
            .collect();
        BinnedDensity1D::new(0.0, 1.0, mass)
    };
    let tv_features = tv_binned(&marginal(model.p0)?, &marginal(p_ht)?)?;
    let lb = bounds::lb_tradeoff(tv_labels, tv_pred);
    let lb_feat = bounds::lb_tradeoff_features(tv_labels, tv_features);
    let lb_ts = bounds::ts_lb(model.p0, p_ht, tpr_t, fpr_t);

    let prop_acc = bounds::replicator_prop_bound(
        model.p0,
        source_sweep.err[idx_s],
        err_s_ht,
        tpr_s,
        tpr_t,
        bounds::PropBoundForm::Accuracy,
    )
    .unwrap_or(f64::NAN);
    let prop_err = bounds::replicator_prop_bound(
        model.p0,
        source_sweep.err[idx_s],
        err_s_ht,
        tpr_s,
        tpr_t,
        bounds::PropBoundForm::Errors,
    )
    .unwrap_or(f64::NAN);
    let hdiv_pair = crate::distributions::h_divergence_from_acceptance(
        &sweep_on_dht.accept,
        &sweep_on_dhs.accept,
    );

    let record = StepRecord {
        step: 0,
        diff,
        max_pair,
        ub: ub_ts,
        lb,
        components: vec![
            ("tau_s", tau_s),
            ("tau_t", tau_t),
            ("err_source_hs", source_sweep.err[idx_s]),
            ("err_source_ht", err_s_ht),
            ("risk_induced_hs", induced_risk[idx_s]),
            ("risk_induced_ht", induced_risk[idx_t]),
            ("p_source", model.p0),
            ("p_induced_hs", p_hs),
            ("p_induced_ht", p_ht),
            ("ub_ts", ub_ts),
            ("ub_thm_source_to_induced", ub_thm31),
            ("ub_thm_induced_to_optimal", ub_thm32),
            ("lb_tradeoff", lb),
            ("lb_features", lb_feat),
            ("lb_ts", lb_ts),
            ("prop_bound_accuracy", prop_acc),
            ("prop_bound_errors", prop_err),
            ("tpr_s_hs", tpr_s),
            ("tpr_s_ht", tpr_t),
            ("fpr_s_hs", fpr_s),
            ("fpr_s_ht", fpr_t),
            ("tv_labels", tv_labels),
            ("tv_predictions", tv_pred),
            ("tv_features", tv_features),
            ("hdiv_pair", hdiv_pair),
        ],
    };
    record.validate()?;
    let csv = records_to_csv(
        &ExperimentConfig::Replicator(cfg.clone()).provenance()?,
        std::slice::from_ref(&record),
    );
    Ok(RunOutput { records: vec![record], csv, scorer: None })
}

// ---------------------------------------------------------------------------
// Sampled engines: shared sweep machinery
// ---------------------------------------------------------------------------

/// Per-individual data for a sampled sweep under common random numbers: the
/// source score/label/feature-statistic, and the induced
/// (score, label, feature-statistic) under each of the classifier's two
/// possible treatments of the individual.
pub struct VariantSweep {
    pub source_scores: Vec<f64>,
    pub source_labels: Vec<i8>,
    /// 1-D feature statistic of the source sample (the adapted coordinate
    /// for the covariate DAG, the score for the others).
    pub source_features: Vec<f64>,
    pub accept_variant: Vec<(f64, i8, f64)>,
    pub reject_variant: Vec<(f64, i8, f64)>,
}

impl VariantSweep {
    pub fn n(&self) -> usize {
        self.source_scores.len()
    }

    /// Induced risk of each grid threshold on the distribution it induces
    /// (squashed mode: accept strictly above the threshold).
    pub fn induced_risks(&self, taus: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        taus.iter()
            .map(|&tau| {
                let mut wrong = 0usize;
                for i in 0..self.n() {
                    let (s, y, _) = if self.source_scores[i] > tau {
                        self.accept_variant[i]
                    } else {
                        self.reject_variant[i]
                    };
                    let pred: i8 = if s > tau { 1 } else { -1 };
                    if pred != y {
                        wrong += 1;
                    }
                }
                wrong as f64 / n
            })
            .collect()
    }

    /// Materialize the induced sample selected by deploying threshold `tau`.
    pub fn induced_at(&self, tau: f64) -> (Vec<f64>, Vec<i8>, Vec<f64>) {
        let mut scores = Vec::with_capacity(self.n());
        let mut labels = Vec::with_capacity(self.n());
        let mut features = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let (s, y, x) = if self.source_scores[i] > tau {
                self.accept_variant[i]
            } else {
                self.reject_variant[i]
            };
            scores.push(s);
            labels.push(y);
            features.push(x);
        }
        (scores, labels, features)
    }
}

/// Components common to every sampled engine step.
struct SampledStep {
    tau_s: f64,
    tau_t: f64,
    diff: f64,
    max_pair: f64,
    err_source_hs: f64,
    err_source_ht: f64,
    risk_induced_hs: f64,
    risk_induced_ht: f64,
    ub_thm31: f64,
    ub_thm32: f64,
    lambda_pair: f64,
    capital_lambda_pair: f64,
    hdiv_pair: f64,
    hdiv_source_induced: f64,
    lb: f64,
    lb_feat: f64,
    tv_labels: f64,
    tv_pred: f64,
    tv_features: f64,
    p_source: f64,
    p_induced_hs: f64,
    p_induced_ht: f64,
    tpr_s_hs: f64,
    tpr_s_ht: f64,
    fpr_s_hs: f64,
    fpr_s_ht: f64,
    induced_t_scores: Vec<f64>,
}

fn evaluate_sampled_step(grid: &HypothesisGrid, sweep: &VariantSweep) -> SampledStep {
    let taus = grid.taus();
    let source_table = grid.sweep_scores(&sweep.source_scores, Some(&sweep.source_labels));
    let induced_risk = sweep.induced_risks(taus);
    let idx_s = grid_argmin(&source_table.err);
    let idx_t = grid_argmin(&induced_risk);
    let (tau_s, tau_t) = (taus[idx_s], taus[idx_t]);

    let (scores_hs, labels_hs, _) = sweep.induced_at(tau_s);
    let (scores_ht, labels_ht, features_ht) = sweep.induced_at(tau_t);
    let table_on_dhs = grid.sweep_scores(&scores_hs, Some(&labels_hs));
    let table_on_dht = grid.sweep_scores(&scores_ht, Some(&labels_ht));

    let diff = induced_risk[idx_s] - induced_risk[idx_t];
    let err_source_ht = source_table.err[idx_t];
    let max_pair = err_source_ht.max(induced_risk[idx_t]);

    let ub_thm31 = bounds::ub_source_to_induced(idx_s, &source_table, &table_on_dhs);
    let ub_thm32 = bounds::ub_induced_to_optimal(idx_s, &table_on_dhs, &table_on_dht);
    let ce = bounds::combined_errors(idx_s, &table_on_dhs, &table_on_dht);
    let hdiv_pair = crate::distributions::h_divergence_from_acceptance(
        &table_on_dht.accept,
        &table_on_dhs.accept,
    );
    let hdiv_source_induced = crate::distributions::h_divergence_from_acceptance(
        &source_table.accept,
        &table_on_dhs.accept,
    );

    let frac_pos =
        |labels: &[i8]| labels.iter().filter(|&&y| y == 1).count() as f64 / labels.len() as f64;
    let p_source = frac_pos(&sweep.source_labels);
    let p_induced_hs = frac_pos(&labels_hs);
    let p_induced_ht = frac_pos(&labels_ht);

    let tv_labels = (p_source - p_induced_ht).abs();
    let tv_pred = (source_table.accept[idx_t] - table_on_dht.accept[idx_t]).abs();
    let tv_features = tv_empirical_1d(&sweep.source_features, &features_ht);
    let lb = bounds::lb_tradeoff(tv_labels, tv_pred);
    let lb_feat = bounds::lb_tradeoff_features(tv_labels, tv_features);

    SampledStep {
        tau_s,
        tau_t,
        diff,
        max_pair,
        err_source_hs: source_table.err[idx_s],
        err_source_ht,
        risk_induced_hs: induced_risk[idx_s],
        risk_induced_ht: induced_risk[idx_t],
        ub_thm31,
        ub_thm32,
        lambda_pair: ce.lambda_min,
        capital_lambda_pair: ce.lambda_max_of_h,
        hdiv_pair,
        hdiv_source_induced,
        lb,
        lb_feat,
        tv_labels,
        tv_pred,
        tv_features,
        p_source,
        p_induced_hs,
        p_induced_ht,
        tpr_s_hs: source_table.tpr[idx_s],
        tpr_s_ht: source_table.tpr[idx_t],
        fpr_s_hs: source_table.fpr[idx_s],
        fpr_s_ht: source_table.fpr[idx_t],
        induced_t_scores: scores_ht,
    }
}

// ---------------------------------------------------------------------------
// Covariate-DAG engine (sampled)
// ---------------------------------------------------------------------------

/// The base scorer for a sampled experiment: parsed from the configured
/// plain-text record when present, trained otherwise.
fn resolve_scorer(
    scorer_path: &Option<String>,
    source: &EmpiricalDataset,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<LinearScorer> {
    match scorer_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            LinearScorer::from_text(text.trim())
        }
        None => train_base_scorer(source, epochs, lr, seed),
    }
}

/// Build the per-individual variant table for the covariate-DAG experiment:
/// sample the source, fit or load the base scorer, and precompute both
/// induced variants of every individual under one shared fresh-noise record.
pub fn build_covariate_sweep(
    cfg: &CovariateDagExperiment,
    seed: u64,
) -> Result<(HypothesisGrid, VariantSweep, LinearScorer)> {
    cfg.model.validate()?;
    let n = cfg.samples;
    if n < 100 {
        return Err(Error::ConfigError("need at least 100 samples".into()));
    }
    let mut rng_sample = ChaCha12Rng::seed_from_u64(derive_seed(seed, 0));
    let source = crate::shift::covariate_dag_sample(n, &cfg.model, &mut rng_sample)?;
    let scorer = resolve_scorer(&cfg.scorer_path, &source, cfg.epochs, cfg.lr, seed)?;
    let grid =
        HypothesisGrid::uniform(Scorer::Linear(scorer.clone()), Mode::Squashed, 0.0, 1.0, cfg.grid)?;

    let source_scores = grid.scores(&source);
    let source_labels: Vec<i8> = source.points().iter().map(|p| p.y).collect();
    let source_features = source.coordinate(0);

    let mut rng_adapt = ChaCha12Rng::seed_from_u64(derive_seed(seed, 1));
    let probe = grid.classifier(0);
    let mut accept_variant = Vec::with_capacity(n);
    let mut reject_variant = Vec::with_capacity(n);
    for p in source.points() {
        let z2 = crate::math::std_normal_from_uniform(rng_adapt.random());
        let z3 = crate::math::std_normal_from_uniform(rng_adapt.random());
        let make = |x1: f64| -> (f64, i8, f64) {
            let (x2, x3, y) = cfg.model.downstream(x1, z2, z3);
            let s = probe.score(&[x1, x2, x3]).expect("dimension is 3");
            (s, y, x1)
        };
        accept_variant.push(make(p.x[0]));
        reject_variant.push(make(p.x[0] - 2.0 * cfg.model.c));
    }
    let sweep = VariantSweep {
        source_scores,
        source_labels,
        source_features,
        accept_variant,
        reject_variant,
    };
    Ok((grid, sweep, scorer))
}

fn run_covariate_dag(cfg: &CovariateDagExperiment, seed: u64) -> Result<RunOutput> {
    let (grid, sweep, scorer) = build_covariate_sweep(cfg, seed)?;
    let st = evaluate_sampled_step(&grid, &sweep);
    let record = StepRecord {
        step: 0,
        diff: st.diff,
        max_pair: st.max_pair,
        ub: st.ub_thm32,
        lb: st.lb,
        components: vec![
            ("tau_s", st.tau_s),
            ("tau_t", st.tau_t),
            ("err_source_hs", st.err_source_hs),
            ("err_source_ht", st.err_source_ht),
            ("risk_induced_hs", st.risk_induced_hs),
            ("risk_induced_ht", st.risk_induced_ht),
            ("ub_thm_source_to_induced", st.ub_thm31),
            ("ub_thm_induced_to_optimal", st.ub_thm32),
            ("lambda_pair", st.lambda_pair),
            ("capital_lambda_pair", st.capital_lambda_pair),
            ("hdiv_pair", st.hdiv_pair),
            ("hdiv_source_induced", st.hdiv_source_induced),
            ("lb_tradeoff", st.lb),
            ("lb_features", st.lb_feat),
            ("tv_labels", st.tv_labels),
            ("tv_predictions", st.tv_pred),
            ("tv_features", st.tv_features),
            ("p_source", st.p_source),
            ("p_induced_hs", st.p_induced_hs),
            ("p_induced_ht", st.p_induced_ht),
        ],
    };
    record.validate()?;
    let csv = records_to_csv(
        &ExperimentConfig::CovariateDag(cfg.clone()).provenance()?,
        std::slice::from_ref(&record),
    );
    Ok(RunOutput { records: vec![record], csv, scorer: Some(scorer) })
}

// ---------------------------------------------------------------------------
// Target-DAG engine (sampled)
// ---------------------------------------------------------------------------

/// Build the per-individual variant table for the target-DAG experiment.
pub fn build_target_sweep(
    cfg: &TargetDagExperiment,
    seed: u64,
) -> Result<(HypothesisGrid, VariantSweep, LinearScorer)> {
    cfg.model.validate()?;
    let n = cfg.samples;
    if n < 100 {
        return Err(Error::ConfigError("need at least 100 samples".into()));
    }
    let mut rng_sample = ChaCha12Rng::seed_from_u64(derive_seed(seed, 0));
    let source = crate::shift::target_dag_sample(n, &cfg.model, &mut rng_sample)?;
    let scorer = resolve_scorer(&cfg.scorer_path, &source, cfg.epochs, cfg.lr, seed)?;
    let grid =
        HypothesisGrid::uniform(Scorer::Linear(scorer.clone()), Mode::Squashed, 0.0, 1.0, cfg.grid)?;

    let source_scores = grid.scores(&source);
    let source_labels: Vec<i8> = source.points().iter().map(|p| p.y).collect();
    // The target shift regenerates every feature, so the 1-D statistic
    // carrying the feature-marginal TV is the score itself.
    let source_features = source_scores.clone();

    let mut rng_adapt = ChaCha12Rng::seed_from_u64(derive_seed(seed, 1));
    let probe = grid.classifier(0);
    let mut accept_variant = Vec::with_capacity(n);
    let mut reject_variant = Vec::with_capacity(n);
    for p in source.points() {
        let u_label: f64 = rng_adapt.random();
        let (u1, u2, u3): (f64, f64, f64) =
            (rng_adapt.random(), rng_adapt.random(), rng_adapt.random());
        let make = |pred: i8| -> (f64, i8, f64) {
            let c = cfg.model.c_hy.get(pred, p.y);
            let y_new: i8 = if u_label < c { 1 } else { -1 };
            let x = cfg.model.features(y_new, u1, u2, u3);
            let s = probe.score(&x).expect("dimension is 3");
            (s, y_new, s)
        };
        accept_variant.push(make(1));
        reject_variant.push(make(-1));
    }
    let sweep = VariantSweep {
        source_scores,
        source_labels,
        source_features,
        accept_variant,
        reject_variant,
    };
    Ok((grid, sweep, scorer))
}

fn run_target_dag(cfg: &TargetDagExperiment, seed: u64) -> Result<RunOutput> {
    let (grid, sweep, scorer) = build_target_sweep(cfg, seed)?;
    let st = evaluate_sampled_step(&grid, &sweep);
    let ub_ts = bounds::ts_ub(
        st.p_source,
        st.p_induced_hs,
        st.p_induced_ht,
        st.tpr_s_hs,
        st.tpr_s_ht,
        st.fpr_s_hs,
        st.fpr_s_ht,
    );
    let lb_ts = bounds::ts_lb(st.p_source, st.p_induced_ht, st.tpr_s_ht, st.fpr_s_ht);

    let record = StepRecord {
        step: 0,
        diff: st.diff,
        max_pair: st.max_pair,
        ub: st.ub_thm32,
        lb: st.lb,
        components: vec![
            ("tau_s", st.tau_s),
            ("tau_t", st.tau_t),
            ("err_source_hs", st.err_source_hs),
            ("err_source_ht", st.err_source_ht),
            ("risk_induced_hs", st.risk_induced_hs),
            ("risk_induced_ht", st.risk_induced_ht),
            ("ub_thm_source_to_induced", st.ub_thm31),
            ("ub_thm_induced_to_optimal", st.ub_thm32),
            ("ub_ts", ub_ts),
            ("lambda_pair", st.lambda_pair),
            ("capital_lambda_pair", st.capital_lambda_pair),
            ("hdiv_pair", st.hdiv_pair),
            ("hdiv_source_induced", st.hdiv_source_induced),
            ("lb_tradeoff", st.lb),
            ("lb_features", st.lb_feat),
            ("lb_ts", lb_ts),
            ("tv_labels", st.tv_labels),
            ("tv_predictions", st.tv_pred),
            ("tv_features", st.tv_features),
            ("p_source", st.p_source),
            ("p_induced_hs", st.p_induced_hs),
            ("p_induced_ht", st.p_induced_ht),
            ("tpr_s_hs", st.tpr_s_hs),
            ("tpr_s_ht", st.tpr_s_ht),
            ("fpr_s_hs", st.fpr_s_hs),
            ("fpr_s_ht", st.fpr_s_ht),
        ],
    };
    record.validate()?;
    let csv = records_to_csv(
        &ExperimentConfig::TargetDag(cfg.clone()).provenance()?,
        std::slice::from_ref(&record),
    );
    Ok(RunOutput { records: vec![record], csv, scorer: Some(scorer) })
}

// ---------------------------------------------------------------------------
// Credit-score engine (sampled, sequential)
// ---------------------------------------------------------------------------

/// Draw one value from a binned density via its inverse CDF.
fn sample_binned(d: &BinnedDensity1D, u: f64) -> f64 {
    let mut acc = 0.0;
    let w = d.bin_width();
    for (i, &m) in d.mass().iter().enumerate() {
        if u < acc + m || i == d.k() - 1 {
            let frac = if m > 0.0 { (u - acc) / m } else { 0.5 };
            return d.lo() + (i as f64 + frac.clamp(0.0, 1.0)) * w;
        }
        acc += m;
    }
    d.hi()
}

/// Run the sequential credit-score experiment: at each step, fit the base
/// scorer, deploy the source-optimal threshold, record the bound components,
/// and apply the score update as the next step's reality.
pub fn run_fico_sequence(cfg: &FicoExperiment) -> Result<RunOutput> {
    cfg.dynamics.validate()?;
    let seed = ExperimentConfig::Fico(cfg.clone()).resolved_seed()?;
    if cfg.steps == 0 {
        return Err(Error::ConfigError("need at least one step".into()));
    }
    if cfg.samples < 100 {
        return Err(Error::ConfigError("need at least 100 samples".into()));
    }
    let groups = match &cfg.cdf_path {
        Some(path) => crate::shift::ingest_group_cdf(std::path::Path::new(path))?,
        None => ingest_group_cdf_str(&synthetic_group_cdf_csv(64), None)?,
    };
    let g = groups.densities.len();
    let per_group = cfg.samples / g;
    if per_group == 0 {
        return Err(Error::ConfigError("not enough samples for one per group".into()));
    }
    let n = per_group * g;

    // Balanced initialization: equal counts per group.
    let mut rng_init = ChaCha12Rng::seed_from_u64(derive_seed(seed, 0));
    let mut q: Vec<f64> = Vec::with_capacity(n);
    let mut group_of: Vec<usize> = Vec::with_capacity(n);
    for (gi, density) in groups.densities.iter().enumerate() {
        for _ in 0..per_group {
            let u: f64 = rng_init.random();
            q.push(sample_binned(density, u).clamp(1e-9, 1.0));
            group_of.push(gi);
        }
    }

    let mut records = Vec::with_capacity(cfg.steps);
    let mut last_scorer = None;
    for step in 1..=cfg.steps {
        let mean_q = q.iter().sum::<f64>() / n as f64;

        // Step-scoped streams: features, outcome labels, next-step noise.
        let mut rng_feat = ChaCha12Rng::seed_from_u64(derive_seed(seed, 1000 + step as u64));
        let mut rng_label = ChaCha12Rng::seed_from_u64(derive_seed(seed, 2000 + step as u64));
        let mut rng_next = ChaCha12Rng::seed_from_u64(derive_seed(seed, 3000 + step as u64));

        let mut pts = Vec::with_capacity(n);
        let mut labels_bool = Vec::with_capacity(n);
        for i in 0..n {
            let a = group_of[i] as f64;
            let x = cfg.dynamics.features_from_uniforms(
                q[i],
                a,
                rng_feat.random(),
                rng_feat.random(),
                rng_feat.random(),
            )?;
            let y_bool = rng_label.random::<f64>() < q[i];
            let y: i8 = if y_bool { 1 } else { -1 };
            labels_bool.push(y_bool);
            pts.push(LabeledPoint::new(vec![a, x[0], x[1], x[2]], y).with_group(group_of[i] as u32));
        }
        let current = EmpiricalDataset::new(pts, "source")?;
        let scorer = train_base_scorer(&current, cfg.epochs, cfg.lr, seed)?;
        let grid =
            HypothesisGrid::uniform(Scorer::Linear(scorer.clone()), Mode::Squashed, 0.0, 1.0, cfg.grid)?;

        let source_scores = grid.scores(&current);
        let source_labels: Vec<i8> = current.points().iter().map(|p| p.y).collect();
        let source_features = source_scores.clone();

        let probe = grid.classifier(0);
        let mut accept_variant = Vec::with_capacity(n);
        let mut reject_variant = Vec::with_capacity(n);
        let mut q_accept = Vec::with_capacity(n);
        let mut q_reject = Vec::with_capacity(n);
        for i in 0..n {
            let a = group_of[i] as f64;
            let (u1, u2, u3): (f64, f64, f64) =
                (rng_next.random(), rng_next.random(), rng_next.random());
            let u_label: f64 = rng_next.random();
            let make = |decision: bool| -> Result<(f64, i8, f64)> {
                let q_new = fico_update(q[i], decision, labels_bool[i], &cfg.dynamics)?;
                let x = cfg.dynamics.features_from_uniforms(q_new, a, u1, u2, u3)?;
                let s = probe.score(&[a, x[0], x[1], x[2]]).expect("dimension is 4");
                let y_new: i8 = if u_label < q_new { 1 } else { -1 };
                Ok((s, y_new, s))
            };
            let acc = make(true)?;
            let rej = make(false)?;
            q_accept.push(fico_update(q[i], true, labels_bool[i], &cfg.dynamics)?);
            q_reject.push(fico_update(q[i], false, labels_bool[i], &cfg.dynamics)?);
            accept_variant.push(acc);
            reject_variant.push(rej);
        }
        let sweep = VariantSweep {
            source_scores,
            source_labels,
            source_features,
            accept_variant,
            reject_variant,
        };
        let st = evaluate_sampled_step(&grid, &sweep);

        // Estimated covariate-shift bound on the score marginal, reported as
        // a component when the shifted support allows it.
        let ub_cs = score_marginal_cs_ub(
            &sweep.source_features,
            &st.induced_t_scores,
            st.err_source_ht,
        );

        let record = StepRecord {
            step,
            diff: st.diff,
            max_pair: st.max_pair,
            ub: st.ub_thm32,
            lb: st.lb,
            components: vec![
                ("tau_s", st.tau_s),
                ("tau_t", st.tau_t),
                ("err_source_hs", st.err_source_hs),
                ("err_source_ht", st.err_source_ht),
                ("risk_induced_hs", st.risk_induced_hs),
                ("risk_induced_ht", st.risk_induced_ht),
                ("ub_thm_source_to_induced", st.ub_thm31),
                ("ub_thm_induced_to_optimal", st.ub_thm32),
                ("ub_cs_variance", ub_cs),
                ("lambda_pair", st.lambda_pair),
                ("capital_lambda_pair", st.capital_lambda_pair),
                ("hdiv_pair", st.hdiv_pair),
                ("hdiv_source_induced", st.hdiv_source_induced),
                ("lb_tradeoff", st.lb),
                ("lb_features", st.lb_feat),
                ("tv_labels", st.tv_labels),
                ("tv_predictions", st.tv_pred),
                ("tv_features", st.tv_features),
                ("mean_q", mean_q),
                ("p_source", st.p_source),
                ("p_induced_ht", st.p_induced_ht),
            ],
        };
        record.validate()?;
        records.push(record);
        last_scorer = Some(scorer);

        // Deploy the source-optimal classifier: its decisions become the
        // next step's reality.
        for i in 0..n {
            q[i] = if sweep.source_scores[i] > st.tau_s { q_accept[i] } else { q_reject[i] };
        }
    }

    let csv = records_to_csv(&ExperimentConfig::Fico(cfg.clone()).provenance()?, &records);
    Ok(RunOutput { records, csv, scorer: last_scorer })
}

/// Variance-based covariate-shift bound estimated on binned score marginals;
/// NaN when the induced support escapes the source support.
fn score_marginal_cs_ub(source_scores: &[f64], induced_scores: &[f64], err: f64) -> f64 {
    const K: usize = 50;
    let src = match BinnedDensity1D::from_samples(0.0, 1.0, K, source_scores) {
        Ok(d) => d,
        Err(_) => return f64::NAN,
    };
    let ind = match BinnedDensity1D::from_samples(0.0, 1.0, K, induced_scores) {
        Ok(d) => d,
        Err(_) => return f64::NAN,
    };
    match importance_weights(&src, &ind) {
        Ok(w) => match w.variance(&src) {
            Ok(var) => bounds::cs_ub_from_components(err, var, var),
            Err(_) => f64::NAN,
        },
        Err(_) => f64::NAN,
    }
}

/// Synthetic four-group score CDFs (polynomial Beta CDFs with distinct
/// shapes), the default input when no CDF file is supplied.
pub fn synthetic_group_cdf_csv(rows: usize) -> String {
    let shapes: [(u32, u32); 4] = [(2, 5), (3, 4), (4, 3), (5, 2)];
    let names = ["group_a", "group_b", "group_c", "group_d"];
    let mut out = String::from("score,");
    out.push_str(&names.join(","));
    out.push('\n');
    for r in 0..=rows {
        let x = r as f64 / rows as f64;
        let mut cols = vec![format!("{x:.6}")];
        for &(a, b) in &shapes {
            cols.push(format!("{:.12}", beta_cdf_int(x, a, b)));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Regularized incomplete beta I_x(a, b) for integer shapes, via the
/// binomial-tail identity.
fn beta_cdf_int(x: f64, a: u32, b: u32) -> f64 {
    let n = a + b - 1;
    let mut total = 0.0;
    for j in a..=n {
        total += binomial(n, j) * x.powi(j as i32) * (1.0 - x).powi((n - j) as i32);
    }
    total.clamp(0.0, 1.0)
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

// ---------------------------------------------------------------------------
// Dispatchers
// ---------------------------------------------------------------------------

/// Run a one-shot shift experiment (strategic, replicator, or one of the two
/// DAGs) and emit its record.
pub fn run_shift_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg {
        ExperimentConfig::Strategic(c) => {
            cfg.resolved_seed()?;
            run_strategic(c)
        }
        ExperimentConfig::Replicator(c) => {
            cfg.resolved_seed()?;
            run_replicator(c)
        }
        ExperimentConfig::CovariateDag(c) => run_covariate_dag(c, cfg.resolved_seed()?),
        ExperimentConfig::TargetDag(c) => run_target_dag(c, cfg.resolved_seed()?),
        ExperimentConfig::Fico(_) => {
            Err(Error::ConfigError("credit-score sequences run under the fico command".into()))
        }
        ExperimentConfig::Bandit(_) => {
            Err(Error::ConfigError("bandit runs use the bandit command".into()))
        }
    }
}

/// Output of the bandit runner.
#[derive(Debug, Clone)]
pub struct BanditOutput {
    pub theta: Vec<f64>,
    pub final_induced_risk: f64,
    pub csv: String,
}

/// Run one-point bandit gradient descent on the quadratic toy and emit the
/// (round, risk estimate, parameter norm) trace.
pub fn run_bandit(cfg: &BanditExperiment) -> Result<BanditOutput> {
    let seed = ExperimentConfig::Bandit(cfg.clone()).resolved_seed()?;
    let toy = cfg.toy.toy();
    let bandit_cfg = BanditConfig {
        dim: cfg.dim,
        delta: cfg.delta,
        eta: cfg.eta,
        rounds: cfg.rounds,
        theta_radius: cfg.theta_radius,
        n_t: cfg.n_t,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, 0));
    let (theta, trace) = bandit_gd(&toy, &bandit_cfg, &mut rng)?;

    let mut csv = String::new();
    csv.push_str(&format!(
        "# config = {}\n",
        ExperimentConfig::Bandit(cfg.clone()).provenance()?
    ));
    csv.push_str("round,ir_estimate,theta_norm\n");
    for row in &trace {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.round,
            fmt_value(row.ir_estimate),
            fmt_value(row.theta_norm)
        ));
    }
    let final_induced_risk = toy.induced_risk(theta[0]);
    Ok(BanditOutput { theta, final_induced_risk, csv })
}

// ---------------------------------------------------------------------------
// Replicator improvement sweep
// ---------------------------------------------------------------------------

/// A named utility matrix for the improvement sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedUtility {
    pub name: String,
    pub utility: UtilityMatrix,
}

/// Configuration of the replicator improvement sweep: for each utility and
/// initial qualification rate, compare the descent-found classifier against
/// the source optimum on their own induced distributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicatorImprovementConfig {
    #[serde(default = "default_p0_values")]
    pub p0_values: Vec<f64>,
    #[serde(default = "default_utilities")]
    pub utilities: Vec<NamedUtility>,
    #[serde(default = "default_mu_plus")]
    pub mu_plus: f64,
    #[serde(default = "default_mu_minus")]
    pub mu_minus: f64,
    #[serde(default = "default_rep_sigma")]
    pub sigma: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_gd_lr")]
    pub gd_lr: f64,
    #[serde(default = "default_gd_iters")]
    pub gd_iters: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_p0_values() -> Vec<f64> {
    vec![0.3, 0.5, 0.7]
}

// The shipped sweep keeps every utility entry strictly positive and the
// cross/diagonal ratios moderate: a near-zero fitness entry lets the
// accept-all or reject-all threshold collapse one class and turn a
// degenerate edge classifier into the global induced optimum.
fn default_utilities() -> Vec<NamedUtility> {
    vec![
        NamedUtility {
            name: "accuracy-weighted".into(),
            utility: UtilityMatrix { u_pp: 1.0, u_pn: 0.4, u_np: 0.4, u_nn: 1.0 },
        },
        NamedUtility {
            name: "acceptance-reward".into(),
            utility: UtilityMatrix { u_pp: 1.5, u_pn: 0.5, u_np: 1.2, u_nn: 0.6 },
        },
        NamedUtility {
            name: "qualified-premium".into(),
            utility: UtilityMatrix { u_pp: 2.0, u_pn: 0.7, u_np: 1.0, u_nn: 1.0 },
        },
    ]
}

fn default_gd_lr() -> f64 {
    0.2
}
fn default_gd_iters() -> usize {
    400
}

impl Default for ReplicatorImprovementConfig {
    fn default() -> Self {
        Self {
            p0_values: default_p0_values(),
            utilities: default_utilities(),
            mu_plus: default_mu_plus(),
            mu_minus: default_mu_minus(),
            sigma: default_rep_sigma(),
            grid: default_grid(),
            gd_lr: default_gd_lr(),
            gd_iters: default_gd_iters(),
            seed: None,
        }
    }
}

impl ReplicatorImprovementConfig {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::ConfigError(e.to_string()))
    }
}

/// One improvement-sweep row.
#[derive(Debug, Clone)]
pub struct ImprovementRow {
    pub utility: String,
    pub p0: f64,
    pub tau_source: f64,
    pub source_induced_accuracy: f64,
    pub theta_gd: f64,
    pub gd_induced_accuracy: f64,
    pub improvement: f64,
    pub gd_risk: f64,
    pub oracle_risk: f64,
}

/// Output of the improvement sweep.
#[derive(Debug, Clone)]
pub struct ImprovementOutput {
    pub rows: Vec<ImprovementRow>,
    pub csv: String,
}

/// For each (utility, p0) pair: find the source optimum on the grid, descend
/// the closed-form induced risk from it, and report the relative improvement
/// together with a 2001-point grid oracle of the induced risk.
pub fn run_replicator_improvement(cfg: &ReplicatorImprovementConfig) -> Result<ImprovementOutput> {
    let taus: Vec<f64> =
        (0..cfg.grid).map(|i| i as f64 / (cfg.grid - 1) as f64).collect();
    let mut rows = Vec::new();
    for named in &cfg.utilities {
        for &p0 in &cfg.p0_values {
            let model =
                ReplicatorConfig::new(p0, cfg.mu_plus, cfg.mu_minus, cfg.sigma, named.utility)?;
            let source_sweep = replicator_sweep(&model, p0, &taus);
            let idx_s = grid_argmin(&source_sweep.err);
            let tau_s = taus[idx_s];

            let risk_s = replicator_closed_form_risk(tau_s, &model)?;
            let theta_gd = replicator_gd(&model, cfg.gd_lr, cfg.gd_iters, tau_s, true)?;
            let gd_risk = replicator_closed_form_risk(theta_gd, &model)?;
            let oracle_risk = (0..=2000)
                .map(|i| replicator_closed_form_risk(i as f64 / 2000.0, &model))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);

            let acc_s = 1.0 - risk_s;
            let acc_t = 1.0 - gd_risk;
            let improvement = improvement_metric(acc_s, acc_t)?;
            rows.push(ImprovementRow {
                utility: named.name.clone(),
                p0,
                tau_source: tau_s,
                source_induced_accuracy: acc_s,
                theta_gd,
                gd_induced_accuracy: acc_t,
                improvement,
                gd_risk,
                oracle_risk,
            });
        }
    }

    let mut csv = String::new();
    let provenance =
        serde_json::to_string(cfg).map_err(|e| Error::ConfigError(e.to_string()))?;
    csv.push_str(&format!("# config = {provenance}\n"));
    csv.push_str("utility,p0,tau_source,source_induced_accuracy,theta_gd,gd_induced_accuracy,improvement,gd_risk,oracle_risk\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.utility,
            fmt_value(r.p0),
            fmt_value(r.tau_source),
            fmt_value(r.source_induced_accuracy),
            fmt_value(r.theta_gd),
            fmt_value(r.gd_induced_accuracy),
            fmt_value(r.improvement),
            fmt_value(r.gd_risk),
            fmt_value(r.oracle_risk)
        ));
    }
    Ok(ImprovementOutput { rows, csv })
}
