//! The threshold family h_τ over a scorer, logistic training for the base
//! scorer, and grid construction.
//!
//! Two boundary conventions coexist in the threshold family and both are kept:
//! raw mode accepts at `x >= τ`, squashed mode accepts at `σ(w·x+b) > τ`
//! strictly. Each simulator declares which mode it uses.

use crate::distributions::EmpiricalDataset;
use crate::error::{Error, Result};
use crate::math::logistic;

/// Score producing the quantity that gets thresholded.
#[derive(Debug, Clone, PartialEq)]
pub enum Scorer {
    /// The raw first coordinate of the feature vector.
    Identity1D,
    /// Logistic score σ(w·x + b).
    Linear(LinearScorer),
}

/// Linear score with bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearScorer {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { w, b })
    }

    pub fn raw_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::DimensionMismatch { expected: self.w.len(), got: x.len() });
        }
        Ok(self.w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + self.b)
    }

    /// Serialize as the plain-text record `w_1 … w_d b`.
    pub fn to_text(&self) -> String {
        let mut parts: Vec<String> = self.w.iter().map(|v| format!("{v:.17e}")).collect();
        parts.push(format!("{:.17e}", self.b));
        parts.join(" ")
    }

    /// Parse the plain-text record `w_1 … w_d b`.
    pub fn from_text(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::ParseError(format!("{t}: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() < 2 {
            return Err(Error::ParseError("scorer record needs at least one weight and a bias".into()));
        }
        let (w, b) = vals.split_at(vals.len() - 1);
        LinearScorer::new(w.to_vec(), b[0])
    }
}

/// Thresholding convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Accept iff x₁ >= τ (boundary inclusive).
    Raw,
    /// Accept iff σ(w·x+b) > τ strictly, τ in [0,1].
    Squashed,
}

/// Binary threshold classifier h_τ.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdClassifier {
    pub scorer: Scorer,
    pub mode: Mode,
    pub tau: f64,
}

impl ThresholdClassifier {
    /// Raw threshold on the first coordinate.
    pub fn raw(tau: f64) -> Self {
        Self { scorer: Scorer::Identity1D, mode: Mode::Raw, tau }
    }

    /// Squashed threshold over a linear scorer; τ must lie in [0,1].
    pub fn squashed(scorer: LinearScorer, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidConfig(format!("squashed mode requires tau in [0,1], got {tau}")));
        }
        Ok(Self { scorer: Scorer::Linear(scorer), mode: Mode::Squashed, tau })
    }

    /// Score of a feature vector (raw coordinate or logistic output).
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        match (&self.scorer, self.mode) {
            (Scorer::Identity1D, _) => {
                if x.is_empty() {
                    return Err(Error::DimensionMismatch { expected: 1, got: 0 });
                }
                Ok(x[0])
            }
            (Scorer::Linear(s), Mode::Squashed) => Ok(logistic(s.raw_score(x)?)),
            (Scorer::Linear(s), Mode::Raw) => s.raw_score(x),
        }
    }

    /// Accept/reject decision from a precomputed score.
    pub fn accepts_score(&self, score: f64) -> bool {
        match self.mode {
            Mode::Raw => score >= self.tau,
            Mode::Squashed => score > self.tau,
        }
    }

    /// ±1 prediction.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.accepts_score(self.score(x)?) { 1 } else { -1 })
    }
}

/// A strictly increasing family of thresholds over one shared scorer/mode.
#[derive(Debug, Clone)]
pub struct HypothesisGrid {
    scorer: Scorer,
    mode: Mode,
    taus: Vec<f64>,
}

impl HypothesisGrid {
    pub fn new(scorer: Scorer, mode: Mode, taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("grid thresholds must be strictly increasing".into()));
        }
        if mode == Mode::Squashed && taus.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidConfig("squashed grid thresholds must lie in [0,1]".into()));
        }
        Ok(Self { scorer, mode, taus })
    }

    /// `count` equally spaced thresholds spanning `[lo, hi]`.
    pub fn uniform(scorer: Scorer, mode: Mode, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 thresholds".into()));
        }
        let taus = (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect();
        Self::new(scorer, mode, taus)
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty grids
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn classifier(&self, i: usize) -> ThresholdClassifier {
        ThresholdClassifier { scorer: self.scorer.clone(), mode: self.mode, tau: self.taus[i] }
    }

    pub fn classifiers(&self) -> impl Iterator<Item = ThresholdClassifier> + '_ {
        (0..self.len()).map(move |i| self.classifier(i))
    }

    /// Scores of every dataset point under the shared scorer.
    pub fn scores(&self, d: &EmpiricalDataset) -> Vec<f64> {
        let probe = self.classifier(0);
        d.points().iter().map(|p| probe.score(&p.x).expect("uniform dimension")).collect()
    }

    /// Per-threshold acceptance fraction on a dataset.
    pub fn acceptance_fractions(&self, d: &EmpiricalDataset) -> Vec<f64> {
        let scores = self.scores(d);
        self.sweep_scores(&scores, None).accept
    }

    /// Per-threshold error, acceptance, TPR and FPR over precomputed scores.
    ///
    /// Sorting once makes the whole sweep O((n + T) log n).
    pub fn sweep_scores(&self, scores: &[f64], labels: Option<&[i8]>) -> SweepTable {
        let n = scores.len();
        let mut sorted: Vec<f64> = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut pos_scores: Vec<f64> = Vec::new();
        let mut neg_scores: Vec<f64> = Vec::new();
        if let Some(ys) = labels {
            assert_eq!(ys.len(), n);
            for (s, y) in scores.iter().zip(ys) {
                if *y == 1 {
                    pos_scores.push(*s);
                } else {
                    neg_scores.push(*s);
                }
            }
            pos_scores.sort_by(f64::total_cmp);
            neg_scores.sort_by(f64::total_cmp);
        }

        let count_accepted = |arr: &[f64], tau: f64| -> usize {
            // Raw accepts score >= tau, squashed accepts score > tau.
            let idx = match self.mode {
                Mode::Raw => arr.partition_point(|s| *s < tau),
                Mode::Squashed => arr.partition_point(|s| *s <= tau),
            };
            arr.len() - idx
        };

        let t = self.len();
        let mut table = SweepTable {
            accept: Vec::with_capacity(t),
            err: Vec::with_capacity(t),
            tpr: Vec::with_capacity(t),
            fpr: Vec::with_capacity(t),
        };
        for &tau in &self.taus {
            let acc = count_accepted(&sorted, tau) as f64 / n as f64;
            table.accept.push(acc);
            if labels.is_some() {
                let tp = count_accepted(&pos_scores, tau);
                let fp = count_accepted(&neg_scores, tau);
                let fnn = pos_scores.len() - tp;
                table.err.push((fp + fnn) as f64 / n as f64);
                table.tpr.push(if pos_scores.is_empty() { f64::NAN } else { tp as f64 / pos_scores.len() as f64 });
                table.fpr.push(if neg_scores.is_empty() { f64::NAN } else { fp as f64 / neg_scores.len() as f64 });
            }
        }
        table
    }

    /// Full sweep over a labeled dataset.
    pub fn sweep_dataset(&self, d: &EmpiricalDataset) -> SweepTable {
        let scores = self.scores(d);
        let labels: Vec<i8> = d.points().iter().map(|p| p.y).collect();
        self.sweep_scores(&scores, Some(&labels))
    }
}

/// Per-threshold quantities produced by a grid sweep.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub accept: Vec<f64>,
    pub err: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
}

/// Fit the base logistic scorer by full-batch gradient descent from zero
/// initialization. Deterministic given `(d, epochs, lr)`; the seed parameter
/// is accepted for interface uniformity and does not enter the optimization.
pub fn train_base_scorer(
    d: &EmpiricalDataset,
    epochs: usize,
    lr: f64,
    _seed: u64,
) -> Result<LinearScorer> {
    let p = d.label_marginal().p_plus();
    if p == 0.0 || p == 1.0 {
        return Err(Error::MissingClass);
    }
    let dim = d.dim();
    let n = d.len() as f64;
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    for _ in 0..epochs {
        let mut gw = vec![0.0f64; dim];
        let mut gb = 0.0f64;
        for pt in d.points() {
            let margin: f64 = w.iter().zip(&pt.x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            let y = pt.y as f64;
            // d/dm log(1 + exp(-y m)) = -y σ(-y m)
            let coeff = -y * logistic(-y * margin);
            for (g, xi) in gw.iter_mut().zip(&pt.x) {
                *g += coeff * xi;
            }
            gb += coeff;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * g / n;
        }
        b -= lr * gb / n;
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    LinearScorer::new(w, b)
}
