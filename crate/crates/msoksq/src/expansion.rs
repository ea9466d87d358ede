//! The decision function as a growing kernel expansion over stored support
//! atoms, with lazy multiplicative coefficient decay and an inverted
//! (sensor, observation) index for sparse evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, KernelKind};
use crate::loss::LossKind;

/// Per-step snapshot of the rule rows at the observed values (one row per
/// sensor), stored in each support atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSnapshot {
    pub rows: Vec<Vec<f64>>,
}

/// One stored training step: the kernel-section coefficient together with the
/// rule-row, weight and observation snapshots needed to evaluate it later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportAtom {
    pub time: usize,
    pub y: f64,
    pub x: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    base_coeff: f64,
    creation_scale: f64,
}

impl SupportAtom {
    fn effective(&self, scale: f64) -> f64 {
        self.base_coeff * (scale / self.creation_scale)
    }
}

/// Learning-rate schedule for the decision weights: `eta1 * n^{-0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaSchedule {
    pub eta1: f64,
}

impl EtaSchedule {
    pub fn new(eta1: f64) -> Result<Self> {
        if !(eta1 > 0.0 && eta1 <= 1.0) {
            return Err(Error::Config(format!("eta1 must be in (0, 1], got {eta1}")));
        }
        Ok(Self { eta1 })
    }

    /// Rate at step `n` (1-based).
    pub fn at(&self, n: usize) -> f64 {
        self.eta1 * (n as f64).powf(-0.5)
    }
}

const RESCALE_FLOOR: f64 = 1e-150;

/// Kernel expansion representing the decision function.
#[derive(Debug, Clone)]
pub struct Expansion {
    atoms: Vec<SupportAtom>,
    /// Accumulated product of `(1 - eta_n * lambda1)` decay factors.
    scale: f64,
    /// Per sensor: observation value bits -> atom indices observing it.
    index: Vec<BTreeMap<u64, Vec<usize>>>,
    sensors: usize,
}

impl Expansion {
    pub fn new(sensors: usize) -> Self {
        Self {
            atoms: Vec::new(),
            scale: 1.0,
            index: vec![BTreeMap::new(); sensors],
            sensors,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[SupportAtom] {
        &self.atoms
    }

    pub fn coefficient(&self, i: usize) -> f64 {
        self.atoms[i].effective(self.scale)
    }

    /// Atom indices whose sensor-`m` observation equals `x`.
    pub fn atoms_observing(&self, m: usize, x: f64) -> &[usize] {
        self.index[m].get(&x.to_bits()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Decay every stored coefficient by `(1 - eta * lambda1)` and, when the
    /// loss sub-gradient at `margin` is nonzero, append a new atom with base
    /// coefficient `-eta * g`. Snapshots must be the post-update rule rows at
    /// the observed values and the weight vector in effect after this step.
    #[allow(clippy::too_many_arguments)]
    pub fn step_update(
        &mut self,
        time: usize,
        x: &[f64],
        margin: f64,
        y: f64,
        eta: f64,
        lambda1: f64,
        loss: LossKind,
        snapshot: RuleSnapshot,
        weights: Vec<f64>,
    ) -> Result<bool> {
        if eta * lambda1 >= 1.0 {
            return Err(Error::Config(format!(
                "decay step eta*lambda1 = {} must be < 1",
                eta * lambda1
            )));
        }
        self.scale *= 1.0 - eta * lambda1;
        if self.scale < RESCALE_FLOOR {
            self.rescale();
        }
        let g = loss.subgradient(margin, y);
        if g == 0.0 {
            return Ok(false);
        }
        let atom = SupportAtom {
            time,
            y,
            x: x.to_vec(),
            rows: snapshot.rows,
            weights,
            base_coeff: -eta * g,
            creation_scale: self.scale,
        };
        let id = self.atoms.len();
        for (m, &xv) in atom.x.iter().enumerate() {
            self.index[m].entry(xv.to_bits()).or_default().push(id);
        }
        self.atoms.push(atom);
        Ok(true)
    }

    fn rescale(&mut self) {
        for atom in &mut self.atoms {
            atom.base_coeff = atom.effective(self.scale);
            atom.creation_scale = 1.0;
        }
        self.scale = 1.0;
    }

    /// Training-time decision value: sum over atoms of the marginalized
    /// kernel between the atom snapshot and the current rules at `x_n`.
    ///
    /// `rows_n[m]` is the current rule row at `x_n[m]`; `points[m]` is only
    /// read for the linear kind.
    pub fn evaluate_margin<R: AsRef<[f64]>>(
        &self,
        rows_n: &[R],
        x_n: &[f64],
        w_n: &[f64],
        kind: KernelKind,
        points: &[Vec<f64>],
    ) -> f64 {
        match kind {
            KernelKind::Count => {
                let mut acc = 0.0;
                for m in 0..self.sensors {
                    let row_n = rows_n[m].as_ref();
                    for &i in self.atoms_observing(m, x_n[m]) {
                        let atom = &self.atoms[i];
                        acc += atom.effective(self.scale)
                            * atom.weights[m]
                            * w_n[m]
                            * kernel::row_dot(&atom.rows[m], row_n);
                    }
                }
                acc
            }
            KernelKind::Linear => {
                let means_n: Vec<f64> =
                    (0..self.sensors).map(|m| kernel::row_mean(rows_n[m].as_ref(), &points[m])).collect();
                let mut acc = 0.0;
                for atom in &self.atoms {
                    let mut k = 0.0;
                    for m in 0..self.sensors {
                        k += atom.weights[m]
                            * w_n[m]
                            * kernel::row_mean(&atom.rows[m], &points[m])
                            * means_n[m];
                    }
                    acc += atom.effective(self.scale) * k;
                }
                acc
            }
        }
    }

    /// Full-scan variant of [`evaluate_margin`]; used to validate the index.
    pub fn evaluate_margin_full_scan<R: AsRef<[f64]>>(
        &self,
        rows_n: &[R],
        x_n: &[f64],
        w_n: &[f64],
        kind: KernelKind,
        points: &[Vec<f64>],
    ) -> f64 {
        match kind {
            KernelKind::Count => self
                .atoms
                .iter()
                .map(|atom| {
                    atom.effective(self.scale)
                        * kernel::marginalized_count_kernel(
                            &atom.rows,
                            rows_n,
                            &atom.x,
                            x_n,
                            &atom.weights,
                            w_n,
                        )
                        .expect("consistent dimensions")
                })
                .sum(),
            KernelKind::Linear => self.evaluate_margin(rows_n, x_n, w_n, kind, points),
        }
    }

    /// Prediction-time decision value for a received quantization vector
    /// (indices into each sensor's alphabet): the expectation of the plain
    /// weighted kernel under each atom's snapshot rows, without the
    /// observation-equality indicator.
    ///
    /// With `indicator_x = Some(x_n)` the count kind additionally restricts
    /// each sensor term to atoms sharing the observation (the training-kernel
    /// ablation).
    pub fn evaluate_on_quantized(
        &self,
        q: &[usize],
        w_n: &[f64],
        kind: KernelKind,
        points: &[Vec<f64>],
        indicator_x: Option<&[f64]>,
    ) -> f64 {
        match (kind, indicator_x) {
            (KernelKind::Count, None) => {
                let mut acc = 0.0;
                for atom in &self.atoms {
                    let mut k = 0.0;
                    for m in 0..self.sensors {
                        k += atom.weights[m] * w_n[m] * atom.rows[m][q[m]];
                    }
                    acc += atom.effective(self.scale) * k;
                }
                acc
            }
            (KernelKind::Count, Some(x_n)) => {
                let mut acc = 0.0;
                for m in 0..self.sensors {
                    for &i in self.atoms_observing(m, x_n[m]) {
                        let atom = &self.atoms[i];
                        acc += atom.effective(self.scale) * atom.weights[m] * w_n[m] * atom.rows[m][q[m]];
                    }
                }
                acc
            }
            (KernelKind::Linear, _) => {
                let mut acc = 0.0;
                for atom in &self.atoms {
                    let mut k = 0.0;
                    for m in 0..self.sensors {
                        k += atom.weights[m]
                            * w_n[m]
                            * kernel::row_mean(&atom.rows[m], &points[m])
                            * points[m][q[m]];
                    }
                    acc += atom.effective(self.scale) * k;
                }
                acc
            }
        }
    }

    /// Squared RKHS norm of the decision function: the quadratic form of the
    /// effective coefficients under the snapshot-to-snapshot marginalized
    /// kernel Gram matrix. Diagnostics only.
    pub fn norm_squared(&self, kind: KernelKind, points: &[Vec<f64>]) -> f64 {
        match kind {
            KernelKind::Count => {
                // separable per (sensor, observation, q): sum of squared
                // coefficient-weighted row sums
                let mut acc = 0.0;
                let q_len: Vec<usize> = if self.atoms.is_empty() {
                    vec![0; self.sensors]
                } else {
                    (0..self.sensors).map(|m| self.atoms[0].rows[m].len()).collect()
                };
                let mut sums: Vec<f64> = Vec::new();
                for m in 0..self.sensors {
                    for ids in self.index[m].values() {
                        sums.clear();
                        sums.resize(q_len[m], 0.0);
                        for &i in ids {
                            let atom = &self.atoms[i];
                            let c = atom.effective(self.scale) * atom.weights[m];
                            for (s, &p) in sums.iter_mut().zip(atom.rows[m].iter()) {
                                *s += c * p;
                            }
                        }
                        acc += sums.iter().map(|s| s * s).sum::<f64>();
                    }
                }
                acc
            }
            KernelKind::Linear => {
                let mut acc = 0.0;
                for m in 0..self.sensors {
                    let total: f64 = self
                        .atoms
                        .iter()
                        .map(|a| a.effective(self.scale) * a.weights[m] * kernel::row_mean(&a.rows[m], &points[m]))
                        .sum();
                    acc += total * total;
                }
                acc
            }
        }
    }

    /// Retain the `budget` atoms of largest effective-coefficient magnitude.
    pub fn truncate(&mut self, budget: usize) -> Result<()> {
        if budget == 0 {
            return Err(Error::Config("truncation budget must be >= 1".into()));
        }
        if self.atoms.len() <= budget {
            return Ok(());
        }
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        order.sort_by(|&a, &b| {
            self.atoms[b]
                .effective(self.scale)
                .abs()
                .total_cmp(&self.atoms[a].effective(self.scale).abs())
        });
        let mut keep: Vec<bool> = vec![false; self.atoms.len()];
        for &i in order.iter().take(budget) {
            keep[i] = true;
        }
        let mut kept = Vec::with_capacity(budget);
        for (i, atom) in self.atoms.drain(..).enumerate() {
            if keep[i] {
                kept.push(atom);
            }
        }
        self.atoms = kept;
        self.rebuild_index();
        Ok(())
    }

    fn rebuild_index(&mut self) {
        for map in &mut self.index {
            map.clear();
        }
        for (id, atom) in self.atoms.iter().enumerate() {
            for (m, &xv) in atom.x.iter().enumerate() {
                self.index[m].entry(xv.to_bits()).or_default().push(id);
            }
        }
    }

    /// Snapshot of the atoms with their effective coefficients folded in;
    /// suitable for checkpointing an experiment.
    pub fn checkpoint(&self) -> Vec<SupportAtom> {
        self.atoms
            .iter()
            .map(|a| {
                let mut out = a.clone();
                out.base_coeff = a.effective(self.scale);
                out.creation_scale = 1.0;
                out
            })
            .collect()
    }

    /// Rebuild an expansion from checkpointed atoms.
    pub fn restore(sensors: usize, atoms: Vec<SupportAtom>) -> Self {
        let mut out = Self::new(sensors);
        out.atoms = atoms;
        out.rebuild_index();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn snapshot(rows: Vec<Vec<f64>>) -> RuleSnapshot {
        RuleSnapshot { rows }
    }

    fn push_atom(e: &mut Expansion, time: usize, x: Vec<f64>, rows: Vec<Vec<f64>>, w: Vec<f64>, y: f64, eta: f64) {
        // margin 0 with hinge forces g = -y, base = eta * y
        e.step_update(time, &x, 0.0, y, eta, 0.0, LossKind::hinge(), snapshot(rows), w)
            .unwrap();
    }

    #[test]
    fn empty_expansion_evaluates_to_zero() {
        let e = Expansion::new(2);
        let rows = vec![vec![0.5, 0.5]; 2];
        let pts = vec![vec![-0.5, 0.5]; 2];
        assert_eq!(e.evaluate_margin(&rows, &[0.0, 0.0], &[1.0, 1.0], KernelKind::Count, &pts), 0.0);
        assert_eq!(e.evaluate_on_quantized(&[0, 0], &[1.0, 1.0], KernelKind::Count, &pts, None), 0.0);
        assert_eq!(e.norm_squared(KernelKind::Count, &pts), 0.0);
    }

    #[test]
    fn single_atom_margin_composition() {
        let mut e = Expansion::new(1);
        push_atom(&mut e, 1, vec![0.3], vec![vec![0.3, 0.7]], vec![1.0], 1.0, 0.1);
        assert!((e.coefficient(0) - 0.1).abs() < 1e-15);
        let pts = vec![vec![-0.5, 0.5]];
        let v = e.evaluate_margin(&[vec![0.2, 0.8]], &[0.3], &[1.0], KernelKind::Count, &pts);
        assert!((v - 0.1 * 0.62).abs() < 1e-12);
        // disjoint observation annihilates the count kernel
        let v = e.evaluate_margin(&[vec![0.2, 0.8]], &[0.9], &[1.0], KernelKind::Count, &pts);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn quantized_evaluation_hand_values() {
        let pts = vec![vec![-0.5, 0.5]];
        let mut e = Expansion::new(1);
        push_atom(&mut e, 1, vec![0.3], vec![vec![0.3, 0.7]], vec![1.0], 1.0, 0.1);
        let v = e.evaluate_on_quantized(&[1], &[1.0], KernelKind::Count, &pts, None);
        assert!((v - 0.07).abs() < 1e-12);

        // deterministic snapshot rows matching q at all sensors -> alpha * M
        let m = 3;
        let pts3 = vec![vec![-0.5, 0.5]; m];
        let mut e = Expansion::new(m);
        push_atom(&mut e, 1, vec![0.0; m], vec![vec![0.0, 1.0]; m], vec![1.0; m], 1.0, 0.1);
        let v = e.evaluate_on_quantized(&[1, 1, 1], &vec![1.0; m], KernelKind::Count, &pts3, None);
        assert!((v - 0.1 * m as f64).abs() < 1e-12);
    }

    #[test]
    fn forced_first_step_and_inactive_margin() {
        let mut e = Expansion::new(1);
        // margin 0 <= rho -> g = -y, atom with alpha = eta * y
        let added = e
            .step_update(1, &[0.5], 0.0, 1.0, 0.1, 0.1, LossKind::hinge(), snapshot(vec![vec![1.0, 0.0]]), vec![1.0])
            .unwrap();
        assert!(added);
        assert!((e.coefficient(0) - 0.1).abs() < 1e-15);
        // inactive margin: no atom, existing coefficient decays by (1 - eta*lambda1)
        let before = e.coefficient(0);
        let added = e
            .step_update(2, &[0.5], 5.0, 1.0, 0.2, 0.1, LossKind::hinge(), snapshot(vec![vec![1.0, 0.0]]), vec![1.0])
            .unwrap();
        assert!(!added);
        assert_eq!(e.len(), 1);
        assert!((e.coefficient(0) - before * (1.0 - 0.2 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn zero_decay_keeps_scale_at_one() {
        let mut e = Expansion::new(1);
        for n in 1..=50 {
            e.step_update(n, &[0.5], 0.0, 1.0, 0.1, 0.0, LossKind::hinge(), snapshot(vec![vec![1.0, 0.0]]), vec![1.0])
                .unwrap();
        }
        assert!((e.coefficient(0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn step_rejects_divergent_decay() {
        let mut e = Expansion::new(1);
        let err = e.step_update(1, &[0.5], 0.0, 1.0, 0.5, 2.0, LossKind::hinge(), snapshot(vec![vec![1.0, 0.0]]), vec![1.0]);
        assert!(err.is_err());
    }

    #[test]
    fn lazy_scale_matches_direct_recursion() {
        // run 200 steps and compare effective coefficients to the naive recursion
        let mut e = Expansion::new(1);
        let schedule = EtaSchedule::new(0.1).unwrap();
        let lambda1 = 0.1;
        let mut naive: Vec<f64> = Vec::new();
        let mut rng = crate::seed_rng(3);
        for n in 1..=200usize {
            let eta = schedule.at(n);
            let margin = if rng.gen::<bool>() { 0.0 } else { 10.0 };
            let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            for c in &mut naive {
                *c *= 1.0 - eta * lambda1;
            }
            let added = e
                .step_update(n, &[0.5], margin, y, eta, lambda1, LossKind::hinge(), snapshot(vec![vec![1.0, 0.0]]), vec![1.0])
                .unwrap();
            if added {
                naive.push(eta * y);
            }
        }
        assert_eq!(e.len(), naive.len());
        for (i, &c) in naive.iter().enumerate() {
            assert!((e.coefficient(i) - c).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn rescale_preserves_effective_coefficients() {
        let mut e = Expansion::new(1);
        push_atom(&mut e, 1, vec![0.5], vec![vec![1.0, 0.0]], vec![1.0], 1.0, 0.1);
        let before = e.coefficient(0);
        // force many decays so the scale underflows and rescaling triggers
        for n in 2..=5000usize {
            e.step_update(n, &[0.5], 10.0, 1.0, 0.9, 0.9, LossKind::hinge(), snapshot(vec![vec![1.0, 0.0]]), vec![1.0])
                .unwrap();
        }
        let decayed = before * (1.0 - 0.81f64).powi(4999);
        assert!(e.coefficient(0).abs() < 1e-200 || (e.coefficient(0) - decayed).abs() < 1e-9);
        // the scale itself must have been renormalized upward
        assert!(e.scale > 1e-150);
    }

    #[test]
    fn index_evaluation_matches_full_scan() {
        let mut rng = crate::seed_rng(9);
        let m = 3;
        let pts = vec![vec![-0.5, 0.5]; m];
        let mut e = Expansion::new(m);
        for n in 1..=60usize {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0..4) as f64 / 4.0).collect();
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let p = rng.gen::<f64>();
                    vec![p, 1.0 - p]
                })
                .collect();
            let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            push_atom(&mut e, n, x, rows, vec![1.0; m], y, 0.1);
        }
        for _ in 0..20 {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0..4) as f64 / 4.0).collect();
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let p = rng.gen::<f64>();
                    vec![p, 1.0 - p]
                })
                .collect();
            let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0).collect();
            let fast = e.evaluate_margin(&rows, &x, &w, KernelKind::Count, &pts);
            let slow = e.evaluate_margin_full_scan(&rows, &x, &w, KernelKind::Count, &pts);
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_squared_matches_gram_quadratic_form() {
        let mut rng = crate::seed_rng(21);
        let m = 2;
        let pts = vec![vec![-0.5, 0.5]; m];
        let mut e = Expansion::new(m);
        for n in 1..=12usize {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0..3) as f64).collect();
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let p = rng.gen::<f64>();
                    vec![p, 1.0 - p]
                })
                .collect();
            let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.5).collect();
            let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            push_atom(&mut e, n, x, rows, w, y, 0.1);
        }
        // brute-force Gram quadratic form
        let mut direct = 0.0;
        for i in 0..e.len() {
            for j in 0..e.len() {
                let (a, b) = (&e.atoms()[i], &e.atoms()[j]);
                let k = kernel::marginalized_count_kernel(&a.rows, &b.rows, &a.x, &b.x, &a.weights, &b.weights)
                    .unwrap();
                direct += e.coefficient(i) * e.coefficient(j) * k;
            }
        }
        let fast = e.norm_squared(KernelKind::Count, &pts);
        assert!((fast - direct).abs() < 1e-10, "{fast} vs {direct}");

        // two-atom expansion explicit form
        let mut e2 = Expansion::new(1);
        push_atom(&mut e2, 1, vec![0.0], vec![vec![0.3, 0.7]], vec![1.0], 1.0, 0.1);
        push_atom(&mut e2, 2, vec![0.0], vec![vec![0.6, 0.4]], vec![1.0], -1.0, 0.2);
        let a1 = e2.coefficient(0);
        let a2 = e2.coefficient(1);
        let k11 = 0.3f64 * 0.3 + 0.7 * 0.7;
        let k22 = 0.6f64 * 0.6 + 0.4 * 0.4;
        let k12 = 0.3f64 * 0.6 + 0.7 * 0.4;
        let expect = a1 * a1 * k11 + 2.0 * a1 * a2 * k12 + a2 * a2 * k22;
        let pts1 = vec![vec![-0.5, 0.5]];
        assert!((e2.norm_squared(KernelKind::Count, &pts1) - expect).abs() < 1e-12);
    }

    #[test]
    fn truncation_keeps_largest_and_bounds_error() {
        let mut rng = crate::seed_rng(5);
        let m = 2;
        let pts = vec![vec![-0.5, 0.5]; m];
        let mut e = Expansion::new(m);
        for n in 1..=40usize {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0..3) as f64).collect();
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let p = rng.gen::<f64>();
                    vec![p, 1.0 - p]
                })
                .collect();
            let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            push_atom(&mut e, n, x, rows, vec![1.0; m], y, 0.1 / n as f64);
        }
        // identity when budget >= atom count
        let mut full = e.clone();
        full.truncate(1000).unwrap();
        assert_eq!(full.len(), e.len());

        let dropped_mass: f64 = {
            let mut coeffs: Vec<f64> = (0..e.len()).map(|i| e.coefficient(i).abs()).collect();
            coeffs.sort_by(f64::total_cmp);
            coeffs.iter().take(e.len() - 10).sum()
        };
        let mut small = e.clone();
        small.truncate(10).unwrap();
        assert_eq!(small.len(), 10);
        // decision values differ by at most sum of dropped |alpha| * max kernel (= M here)
        for _ in 0..10 {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0..3) as f64).collect();
            let rows: Vec<Vec<f64>> = (0..m).map(|_| vec![0.5, 0.5]).collect();
            let before = e.evaluate_margin(&rows, &x, &vec![1.0; m], KernelKind::Count, &pts);
            let after = small.evaluate_margin(&rows, &x, &vec![1.0; m], KernelKind::Count, &pts);
            assert!((before - after).abs() <= dropped_mass * m as f64 + 1e-12);
        }

        let mut one = e.clone();
        one.truncate(1).unwrap();
        assert_eq!(one.len(), 1);
        let max_c = (0..e.len()).map(|i| e.coefficient(i).abs()).fold(0.0, f64::max);
        assert!((one.coefficient(0).abs() - max_c).abs() < 1e-15);
    }

    #[test]
    fn checkpoint_roundtrip_preserves_evaluation() {
        let mut e = Expansion::new(1);
        push_atom(&mut e, 1, vec![0.5], vec![vec![0.3, 0.7]], vec![1.0], 1.0, 0.1);
        push_atom(&mut e, 2, vec![0.25], vec![vec![0.8, 0.2]], vec![1.0], -1.0, 0.05);
        let json = serde_json::to_string(&e.checkpoint()).unwrap();
        let atoms: Vec<SupportAtom> = serde_json::from_str(&json).unwrap();
        let restored = Expansion::restore(1, atoms);
        let pts = vec![vec![-0.5, 0.5]];
        for x in [0.5, 0.25, 0.9] {
            let a = e.evaluate_margin(&[vec![0.4, 0.6]], &[x], &[1.0], KernelKind::Count, &pts);
            let b = restored.evaluate_margin(&[vec![0.4, 0.6]], &[x], &[1.0], KernelKind::Count, &pts);
            assert!((a - b).abs() < 1e-15);
        }
    }
}
