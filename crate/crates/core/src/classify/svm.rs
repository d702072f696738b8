//! L2-regularized L2-loss linear SVM solved by dual coordinate descent,
//! trained one-vs-rest.
//!
//! For labels `y_i` in {-1, +1} and augmented inputs `x_i` (a constant 1
//! appended when a bias is fitted) the dual is
//! `min 0.5 a'(Q + I/(2C))a - sum(a)` subject to `a >= 0`, with
//! `Q_ij = y_i y_j x_i'x_j`. Each epoch visits the coordinates in a fresh
//! seeded permutation; training stops once the largest projected-gradient
//! magnitude of an epoch falls below `tol`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassifyError, FusionLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
    #[serde(default = "yes")]
    pub fit_bias: bool,
}

fn yes() -> bool {
    true
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-4,
            max_epochs: 1000,
            seed: crate::DEFAULT_SEED,
            fit_bias: true,
        }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ClassifyError::InvalidParams(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ClassifyError::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(ClassifyError::InvalidParams("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub alpha: Vec<f64>,
    pub epochs: usize,
    /// Largest projected-gradient magnitude seen in the final epoch.
    pub max_violation: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves one binary problem; `positive[i]` marks the +1 examples. `stream`
/// selects an independent permutation sequence for the same seed.
pub fn train_binary(x: &[Vec<f64>], positive: &[bool], params: &SvmParams, stream: u64) -> BinarySolution {
    let n = x.len();
    let dim = x.first().map_or(0, Vec::len);
    let b_feat = if params.fit_bias { 1.0 } else { 0.0 };
    let diag = 0.5 / params.c;
    let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    let qii: Vec<f64> = x.iter().map(|xi| dot(xi, xi) + b_feat * b_feat + diag).collect();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(stream);

    let mut epochs = 0;
    let mut max_violation = f64::INFINITY;
    while epochs < params.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        max_violation = 0.0;
        for &i in &order {
            let g = y[i] * (dot(&w, &x[i]) + b * b_feat) - 1.0 + diag * alpha[i];
            let pg = if alpha[i] == 0.0 { g.min(0.0) } else { g };
            max_violation = max_violation.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).max(0.0);
                let step = (alpha[i] - old) * y[i];
                for (wj, xj) in w.iter_mut().zip(&x[i]) {
                    *wj += step * xj;
                }
                b += step * b_feat;
            }
        }
        if max_violation < params.tol {
            break;
        }
    }
    BinarySolution {
        weights: w,
        bias: b,
        alpha,
        epochs,
        max_violation,
        converged: max_violation < params.tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    /// Fusion layout the model was trained on, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<FusionLayout>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.classes.len() < 2 {
            return Err(ClassifyError::TooFewClasses(self.classes.len()));
        }
        if self.weights.len() != self.classes.len() || self.bias.len() != self.classes.len() {
            return Err(ClassifyError::Format("weights and bias must have one entry per class".into()));
        }
        let d = self.dim();
        if self.weights.iter().any(|w| w.len() != d) {
            return Err(ClassifyError::Format("weight vectors differ in length".into()));
        }
        if self.weights.iter().flatten().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(ClassifyError::Format("non-finite weight".into()));
        }
        if let Some(l) = &self.layout {
            if l.fused_dim() != d {
                return Err(ClassifyError::Format(format!("layout dimension {} differs from weights {d}", l.fused_dim())));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let m: Self = serde_json::from_str(text).map_err(|e| ClassifyError::Format(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

/// One-vs-rest training. `labels[i]` indexes `classes`.
pub fn svm_train(
    x: &[Vec<f64>],
    labels: &[usize],
    classes: &[String],
    params: &SvmParams,
) -> Result<LinearModel, ClassifyError> {
    params.validate()?;
    if classes.len() < 2 {
        return Err(ClassifyError::TooFewClasses(classes.len()));
    }
    if x.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            features: x.len(),
            labels: labels.len(),
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= classes.len()) {
        return Err(ClassifyError::LabelOutOfRange {
            label: l,
            classes: classes.len(),
        });
    }
    if let Some(c) = (0..classes.len()).find(|c| !labels.contains(c)) {
        return Err(ClassifyError::EmptyClass(classes[c].clone()));
    }
    let dim = x[0].len();
    for (i, xi) in x.iter().enumerate() {
        if xi.len() != dim {
            return Err(ClassifyError::DimensionMismatch {
                expected: dim,
                found: xi.len(),
            });
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite(i));
        }
    }
    let solutions: Vec<BinarySolution> = (0..classes.len())
        .into_par_iter()
        .map(|c| {
            let positive: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            train_binary(x, &positive, params, c as u64)
        })
        .collect();
    for (c, s) in solutions.iter().enumerate() {
        if !s.converged {
            log::warn!(
                "class {:?}: stopped after {} epochs with violation {:.3e}",
                classes[c],
                s.epochs,
                s.max_violation
            );
        }
    }
    Ok(LinearModel {
        classes: classes.to_vec(),
        bias: solutions.iter().map(|s| s.bias).collect(),
        weights: solutions.into_iter().map(|s| s.weights).collect(),
        c: params.c,
        tol: params.tol,
        layout: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    pub decisions: Vec<f64>,
}

impl Prediction {
    pub fn top_decision(&self) -> f64 {
        self.decisions[self.class_index]
    }
}

/// Argmax of `w'x + b`; ties go to the earliest class.
pub fn svm_predict(model: &LinearModel, x: &[f64]) -> Result<Prediction, ClassifyError> {
    if x.len() != model.dim() {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    let decisions: Vec<f64> = model.weights.iter().zip(&model.bias).map(|(w, b)| dot(w, x) + b).collect();
    let mut best = 0;
    for (c, &d) in decisions.iter().enumerate() {
        if d > decisions[best] {
            best = c;
        }
    }
    Ok(Prediction {
        class_index: best,
        label: model.classes[best].clone(),
        decisions,
    })
}
