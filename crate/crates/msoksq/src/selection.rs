//! Sensor-selection weights on the scaled simplex `||w||_1 = M`, `w >= 0`:
//! per-sensor sub-gradients, the adaptive sparsity level, the projected
//! update, and the freeze once the target number of sensors remains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::Expansion;
use crate::kernel::{self, KernelKind};

/// Smallest weight treated as still enabled. The renormalized projected
/// update shrinks a disabled-bound weight geometrically but never lands on
/// zero exactly in floating point; entries below this are snapped to zero so
/// the disabled set is well defined. At most one entry is snapped per step.
pub const DEFAULT_ZERO_TOL: f64 = 5e-2;

/// Gradient of the decision value with respect to each sensor weight, taken
/// at the current atoms and the given (post-update) rule rows. The count kind
/// only sees atoms sharing the sensor observation.
pub fn decision_weight_gradients<R: AsRef<[f64]>>(
    expansion: &Expansion,
    rows_n: &[R],
    x_n: &[f64],
    kind: KernelKind,
    points: &[Vec<f64>],
) -> Vec<f64> {
    let m_total = x_n.len();
    let mut out = vec![0.0; m_total];
    match kind {
        KernelKind::Count => {
            for (m, o) in out.iter_mut().enumerate() {
                let row_n = rows_n[m].as_ref();
                for &i in expansion.atoms_observing(m, x_n[m]) {
                    let atom = &expansion.atoms()[i];
                    *o += expansion.coefficient(i)
                        * atom.weights[m]
                        * kernel::row_dot(&atom.rows[m], row_n);
                }
            }
        }
        KernelKind::Linear => {
            for (m, o) in out.iter_mut().enumerate() {
                let mean_n = kernel::row_mean(rows_n[m].as_ref(), &points[m]);
                for i in 0..expansion.len() {
                    let atom = &expansion.atoms()[i];
                    *o += expansion.coefficient(i)
                        * atom.weights[m]
                        * kernel::row_mean(&atom.rows[m], &points[m])
                        * mean_n;
                }
            }
        }
    }
    out
}

/// Full sub-gradient of the instantaneous risk with respect to `w_m`:
/// `lambda2 + nu * dv/dw_m`.
pub fn weight_subgradient<R: AsRef<[f64]>>(
    expansion: &Expansion,
    m: usize,
    rows_n: &[R],
    x_n: &[f64],
    nu: f64,
    lambda2: f64,
    kind: KernelKind,
    points: &[Vec<f64>],
) -> f64 {
    lambda2 + nu * decision_weight_gradients(expansion, rows_n, x_n, kind, points)[m]
}

/// Adaptive sparsity level: `max{0, min_m (w_m - nu * dv/dw_m)}` over the
/// still-enabled sensors. Chosen so that the projected update drives the
/// minimizing enabled sensor toward zero while every other weight stays
/// positive. Disabled sensors have left the system and are excluded: their
/// stale near-zero terms would otherwise dominate the minimum and stall
/// selection permanently after the first sensor is disabled.
pub fn lambda2_schedule(w: &[f64], gradients: &[f64], nu: f64) -> f64 {
    let raw = w
        .iter()
        .zip(gradients)
        .filter(|(&wm, _)| wm > 0.0)
        .map(|(&wm, &g)| wm - nu * g)
        .fold(f64::INFINITY, f64::min);
    if raw.is_finite() {
        raw.max(0.0)
    } else {
        0.0
    }
}

/// Indices of sensors with strictly positive weight.
pub fn enabled_sensors(w: &[f64]) -> Vec<usize> {
    w.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect()
}

/// Result of one weight update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Updated,
    /// Vector already frozen; nothing changed.
    Frozen,
    /// The step would have zeroed every sensor at once; rejected, w unchanged.
    Rejected,
}

/// The selection weight vector with its freeze state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    w: Vec<f64>,
    frozen: bool,
    m_prime: usize,
    zero_tol: f64,
}

impl WeightVector {
    /// All-ones start; `m_prime` is the number of sensors to keep enabled.
    pub fn new(m: usize, m_prime: usize) -> Result<Self> {
        Self::with_zero_tol(m, m_prime, DEFAULT_ZERO_TOL)
    }

    pub fn with_zero_tol(m: usize, m_prime: usize, zero_tol: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("sensor count must be >= 1".into()));
        }
        if m_prime == 0 || m_prime > m {
            return Err(Error::Config(format!(
                "target enabled count {m_prime} must be in 1..={m}"
            )));
        }
        if !(zero_tol >= 0.0) {
            return Err(Error::Config(format!("zero tolerance must be >= 0, got {zero_tol}")));
        }
        Ok(Self {
            w: vec![1.0; m],
            // no selection requested: nothing to disable, freeze from the start
            frozen: m_prime == m,
            m_prime,
            zero_tol,
        })
    }

    /// Frozen vector with the given entries; used by the random-selection
    /// baseline. Entries are scaled so the active ones sum to `M`.
    pub fn frozen_mask(m: usize, enabled: &[usize]) -> Result<Self> {
        if enabled.is_empty() {
            return Err(Error::Config("at least one sensor must stay enabled".into()));
        }
        let mut w = vec![0.0; m];
        for &i in enabled {
            if i >= m {
                return Err(Error::Config(format!("sensor index {i} out of range for M = {m}")));
            }
            w[i] = m as f64 / enabled.len() as f64;
        }
        Ok(Self { w, frozen: true, m_prime: enabled.len(), zero_tol: DEFAULT_ZERO_TOL })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn frozen(&self) -> bool {
        self.frozen
    }

    pub fn nonzero_count(&self) -> usize {
        self.w.iter().filter(|&&v| v > 0.0).count()
    }

    pub fn enabled(&self) -> Vec<usize> {
        enabled_sensors(&self.w)
    }

    /// Projected sparse step: clamp `w_m - eta_w * subgrad_m` at zero, then
    /// rescale back onto `||w||_1 = M`. A weight that lands below the zero
    /// tolerance is disabled outright (smallest first, at most one per call).
    /// Freezes once the enabled count is down to the target.
    pub fn update(&mut self, subgrads: &[f64], eta_w: f64) -> Result<UpdateOutcome> {
        if subgrads.len() != self.w.len() {
            return Err(Error::Config(format!(
                "sub-gradient length {} does not match sensor count {}",
                subgrads.len(),
                self.w.len()
            )));
        }
        if !(eta_w > 0.0) {
            return Err(Error::Config(format!("weight step size must be positive, got {eta_w}")));
        }
        if self.frozen {
            return Ok(UpdateOutcome::Frozen);
        }
        let m = self.w.len() as f64;
        // a disabled sensor stays disabled: a positive clamped step could
        // otherwise re-enable it whenever it does not attain the sparsity
        // level's minimum
        let mut tilde: Vec<f64> = self
            .w
            .iter()
            .zip(subgrads)
            .map(|(&wm, &g)| if wm == 0.0 { 0.0 } else { (wm - eta_w * g).max(0.0) })
            .collect();
        // a clamped step can zero several sensors at once; refuse to
        // overshoot past the target enabled count
        if enabled_sensors(&tilde).len() < self.m_prime {
            return Ok(UpdateOutcome::Rejected);
        }
        let sum: f64 = tilde.iter().sum();
        if sum <= 0.0 {
            return Ok(UpdateOutcome::Rejected);
        }
        for v in &mut tilde {
            *v *= m / sum;
        }
        // snap the smallest surviving weight to zero once it is negligible
        if enabled_sensors(&tilde).len() > self.m_prime {
            if let Some(min_idx) = tilde
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
            {
                if tilde[min_idx] < self.zero_tol {
                    tilde[min_idx] = 0.0;
                    let sum: f64 = tilde.iter().sum();
                    for v in &mut tilde {
                        *v *= m / sum;
                    }
                }
            }
        }
        self.w = tilde;
        if self.nonzero_count() <= self.m_prime {
            self.frozen = true;
        }
        Ok(UpdateOutcome::Updated)
    }
}
