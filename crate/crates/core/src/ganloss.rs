//! Refiner and discriminator losses of simulated+unsupervised refinement,
//! with analytic gradients.
//!
//! Refiner: `L_R = -sum_i log(1 - p_i) + lambda * sum_i |x~_i - x_i|_1` where
//! `p_i` is the discriminator output on refined sample `i`.
//!
//! Discriminator (as printed): `L_D = -sum_i log(p(x~_i)) - sum_j log(1 - p(y_j))`.
//! The `swap_targets` flag exchanges the two log terms, which is the labelling
//! used by the reference refinement trainer (refined → 0, real → 1).
//!
//! Probabilities are clamped to `[eps, 1 - eps]` before taking logs and all
//! sums run sequentially in index order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPSILON: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum GanLossError {
    #[error("lambda must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("epsilon must lie in (0, 0.5), got {0}")]
    InvalidEpsilon(f64),
    #[error("schedule needs k_d >= 1, k_r >= 1 and total > 0")]
    InvalidSchedule,
}

/// Synthetic inputs paired with their refined outputs, one flat vector each.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinerBatch {
    pub synthetic: Vec<Vec<f64>>,
    pub refined: Vec<Vec<f64>>,
}

impl RefinerBatch {
    pub fn validate(&self) -> Result<(), GanLossError> {
        if self.synthetic.len() != self.refined.len() {
            return Err(GanLossError::ShapeMismatch(format!(
                "{} synthetic vs {} refined samples",
                self.synthetic.len(),
                self.refined.len()
            )));
        }
        for (i, (x, r)) in self.synthetic.iter().zip(&self.refined).enumerate() {
            if x.len() != r.len() {
                return Err(GanLossError::ShapeMismatch(format!(
                    "sample {i}: synthetic length {} vs refined length {}",
                    x.len(),
                    r.len()
                )));
            }
        }
        if self.synthetic.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GanLossError::NonFinite("synthetic"));
        }
        if self.refined.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GanLossError::NonFinite("refined"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscOutputs {
    pub on_refined: Vec<f64>,
    pub on_real: Vec<f64>,
    pub epsilon: f64,
}

impl DiscOutputs {
    pub fn new(on_refined: Vec<f64>, on_real: Vec<f64>) -> Self {
        Self {
            on_refined,
            on_real,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub grads: BTreeMap<String, Vec<f64>>,
}

impl LossValue {
    pub fn grad(&self, name: &str) -> &[f64] {
        self.grads.get(name).map_or(&[], Vec::as_slice)
    }
}

fn check_eps(eps: f64) -> Result<(), GanLossError> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(GanLossError::InvalidEpsilon(eps))
    }
}

fn clamp_all(p: &[f64], eps: f64, what: &'static str) -> Result<Vec<f64>, GanLossError> {
    p.iter()
        .map(|&v| if v.is_nan() { Err(GanLossError::NonFinite(what)) } else { Ok(v.clamp(eps, 1.0 - eps)) })
        .collect()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Refiner loss. Gradients: `d_on_refined` (w.r.t. each `p_i`, evaluated at
/// the clamped value) and `refined` (flattened, `lambda * sign(x~ - x)` with
/// `sign(0) = 0`).
pub fn refiner_loss(
    d_on_refined: &[f64],
    batch: &RefinerBatch,
    lambda: f64,
    epsilon: f64,
) -> Result<LossValue, GanLossError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GanLossError::LambdaOutOfRange(lambda));
    }
    check_eps(epsilon)?;
    batch.validate()?;
    if d_on_refined.len() != batch.refined.len() {
        return Err(GanLossError::ShapeMismatch(format!(
            "{} discriminator outputs for {} refined samples",
            d_on_refined.len(),
            batch.refined.len()
        )));
    }
    let p = clamp_all(d_on_refined, epsilon, "d_on_refined")?;

    let mut adversarial = 0.0;
    for &pi in &p {
        adversarial += -(1.0 - pi).ln();
    }
    let mut l1 = 0.0;
    let mut grad_refined = Vec::with_capacity(batch.refined.iter().map(Vec::len).sum());
    for (x, r) in batch.synthetic.iter().zip(&batch.refined) {
        for (&xv, &rv) in x.iter().zip(r) {
            l1 += (rv - xv).abs();
            grad_refined.push(lambda * sign(rv - xv));
        }
    }

    let mut grads = BTreeMap::new();
    grads.insert("d_on_refined".to_string(), p.iter().map(|&pi| 1.0 / (1.0 - pi)).collect());
    grads.insert("refined".to_string(), grad_refined);
    Ok(LossValue {
        value: adversarial + lambda * l1,
        grads,
    })
}

/// Discriminator loss. Gradients `on_refined` and `on_real` are taken w.r.t.
/// the clamped probabilities.
pub fn discriminator_loss(outputs: &DiscOutputs, swap_targets: bool) -> Result<LossValue, GanLossError> {
    check_eps(outputs.epsilon)?;
    let pr = clamp_all(&outputs.on_refined, outputs.epsilon, "on_refined")?;
    let py = clamp_all(&outputs.on_real, outputs.epsilon, "on_real")?;

    // term(p) = -log(p) ("labelled 1") or -log(1 - p) ("labelled 0")
    let one = |p: f64| (-p.ln(), -1.0 / p);
    let zero = |p: f64| (-(1.0 - p).ln(), 1.0 / (1.0 - p));
    let (refined_term, real_term): (&dyn Fn(f64) -> (f64, f64), &dyn Fn(f64) -> (f64, f64)) =
        if swap_targets { (&zero, &one) } else { (&one, &zero) };

    let mut value = 0.0;
    let mut g_refined = Vec::with_capacity(pr.len());
    for &p in &pr {
        let (v, g) = refined_term(p);
        value += v;
        g_refined.push(g);
    }
    let mut g_real = Vec::with_capacity(py.len());
    for &p in &py {
        let (v, g) = real_term(p);
        value += v;
        g_real.push(g);
    }
    let mut grads = BTreeMap::new();
    grads.insert("on_refined".to_string(), g_refined);
    grads.insert("on_real".to_string(), g_real);
    Ok(LossValue { value, grads })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Refiner,
    Discriminator,
}

/// `k_r` refiner updates then `k_d` discriminator updates, repeated and cut
/// to `total` steps.
pub fn adversarial_step_schedule(k_d: usize, k_r: usize, total: i64) -> Result<Vec<Phase>, GanLossError> {
    if k_d == 0 || k_r == 0 || total <= 0 {
        return Err(GanLossError::InvalidSchedule);
    }
    let cycle = std::iter::repeat_n(Phase::Refiner, k_r).chain(std::iter::repeat_n(Phase::Discriminator, k_d));
    Ok(cycle.cycle().take(total as usize).collect())
}
