//! Per-sensor stochastic quantization rules: a probability row over the
//! quantization points for every observation value, updated online toward a
//! deterministic table, plus the rule sub-gradients that drive those updates.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;

use crate::data::{ObservationAlphabet, QuantizationAlphabet};
use crate::error::{Error, Result};
use crate::expansion::Expansion;
use crate::kernel::{JointIter, KernelKind};

#[derive(Debug, Clone)]
struct SensorRules {
    points: Vec<f64>,
    xs: Vec<f64>,
    lookup: HashMap<u64, usize>,
    rows: Vec<Vec<f64>>,
    /// Number of update-path observations of each value.
    visits: Vec<u64>,
    /// Step at which each row was last updated.
    last_update: Vec<usize>,
}

impl SensorRules {
    fn new(xs: Vec<f64>, points: Vec<f64>, rows: Vec<Vec<f64>>) -> Self {
        let lookup = xs.iter().enumerate().map(|(i, x)| (x.to_bits(), i)).collect();
        let n = xs.len();
        Self { points, xs, lookup, rows, visits: vec![0; n], last_update: vec![0; n] }
    }
}

/// The full bank of quantization rules, one table per sensor.
#[derive(Debug, Clone)]
pub struct RuleTable {
    sensors: Vec<SensorRules>,
}

/// Index of the largest row entry, ties broken toward the larger
/// quantization point.
pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate() {
        if p >= row[best] {
            best = i;
        }
    }
    best
}

impl RuleTable {
    /// Unimodal initialization `P(q|x) ~ exp(-|x - q| / tau)`, peaked at the
    /// nearest quantization point. `tau = None` uses `range / |Q|` per sensor.
    pub fn softmax_init(
        observations: &[ObservationAlphabet],
        quantizers: &[QuantizationAlphabet],
        tau: Option<f64>,
    ) -> Result<Self> {
        if observations.len() != quantizers.len() {
            return Err(Error::Config(format!(
                "{} observation alphabets but {} quantization alphabets",
                observations.len(),
                quantizers.len()
            )));
        }
        if let Some(t) = tau {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tau must be positive, got {t}")));
            }
        }
        let mut sensors = Vec::with_capacity(observations.len());
        for (obs, quant) in observations.iter().zip(quantizers) {
            let t = tau.unwrap_or_else(|| quant.range() / quant.len() as f64);
            if !(t > 0.0) {
                return Err(Error::Config("default tau is not positive; alphabet has zero range".into()));
            }
            let xs = obs.all_values();
            let rows = xs
                .iter()
                .map(|&x| {
                    let raw: Vec<f64> = quant.points().iter().map(|&q| (-(x - q).abs() / t).exp()).collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / sum).collect()
                })
                .collect();
            sensors.push(SensorRules::new(xs, quant.points().to_vec(), rows));
        }
        Ok(Self { sensors })
    }

    /// Point-mass rows at the nearest quantization point (ties toward the
    /// larger point). Used by the deterministic-quantizer baseline.
    pub fn deterministic_init(
        observations: &[ObservationAlphabet],
        quantizers: &[QuantizationAlphabet],
    ) -> Result<Self> {
        if observations.len() != quantizers.len() {
            return Err(Error::Config(format!(
                "{} observation alphabets but {} quantization alphabets",
                observations.len(),
                quantizers.len()
            )));
        }
        let mut sensors = Vec::with_capacity(observations.len());
        for (obs, quant) in observations.iter().zip(quantizers) {
            let xs = obs.all_values();
            let rows = xs
                .iter()
                .map(|&x| {
                    let mut row = vec![0.0; quant.len()];
                    row[quant.nearest(x)] = 1.0;
                    row
                })
                .collect();
            sensors.push(SensorRules::new(xs, quant.points().to_vec(), rows));
        }
        Ok(Self { sensors })
    }

    /// Identity rules: each sensor's quantization alphabet is its observation
    /// alphabet and every row is a point mass at the observed value, so the
    /// channel passes observations through unchanged.
    pub fn identity_init(observations: &[ObservationAlphabet]) -> Result<Self> {
        let mut sensors = Vec::with_capacity(observations.len());
        for obs in observations {
            let quant = QuantizationAlphabet::from_points(obs.all_values())?;
            let xs = quant.points().to_vec();
            let rows = (0..xs.len())
                .map(|i| {
                    let mut row = vec![0.0; xs.len()];
                    row[i] = 1.0;
                    row
                })
                .collect();
            sensors.push(SensorRules::new(xs.clone(), xs, rows));
        }
        Ok(Self { sensors })
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn points(&self, m: usize) -> &[f64] {
        &self.sensors[m].points
    }

    pub fn all_points(&self) -> Vec<Vec<f64>> {
        self.sensors.iter().map(|s| s.points.clone()).collect()
    }

    fn row_index(&self, m: usize, x: f64) -> Result<usize> {
        self.sensors[m]
            .lookup
            .get(&x.to_bits())
            .copied()
            .ok_or(Error::UnknownObservation { sensor: m, value: x })
    }

    pub fn row(&self, m: usize, x: f64) -> Result<&[f64]> {
        Ok(&self.sensors[m].rows[self.row_index(m, x)?])
    }

    /// Clone of the rows at an observation vector, one per sensor.
    pub fn rows_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.sensors.len() {
            return Err(Error::Config(format!(
                "observation vector length {} does not match sensor count {}",
                x.len(),
                self.sensors.len()
            )));
        }
        x.iter().enumerate().map(|(m, &v)| self.row(m, v).map(<[f64]>::to_vec)).collect()
    }

    pub fn visits(&self, m: usize, x: f64) -> Result<u64> {
        Ok(self.sensors[m].visits[self.row_index(m, x)?])
    }

    pub fn last_update(&self, m: usize, x: f64) -> Result<usize> {
        Ok(self.sensors[m].last_update[self.row_index(m, x)?])
    }

    /// Draw one quantization index per sensor, independently across sensors.
    pub fn sample<R: Rng>(&self, x: &[f64], rng: &mut R) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(x.len());
        for (m, &v) in x.iter().enumerate() {
            let row = self.row(m, v)?;
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let mut pick = row.len() - 1;
            for (i, &p) in row.iter().enumerate() {
                cum += p;
                if u < cum {
                    pick = i;
                    break;
                }
            }
            out.push(pick);
        }
        Ok(out)
    }

    /// Shrink the row toward zero and move mass `eta_p` onto `target`, then
    /// advance the visit counter for the observed value. With `eta_p = 1` the
    /// row becomes deterministic after a single call.
    pub fn update(&mut self, m: usize, x: f64, target: usize, eta_p: f64, now: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&eta_p) {
            return Err(Error::Config(format!("rule step size must be in [0, 1], got {eta_p}")));
        }
        let i = self.row_index(m, x)?;
        let sensor = &mut self.sensors[m];
        if target >= sensor.points.len() {
            return Err(Error::Config(format!(
                "target index {target} out of range for sensor {m} with {} points",
                sensor.points.len()
            )));
        }
        for p in &mut sensor.rows[i] {
            *p *= 1.0 - eta_p;
        }
        sensor.rows[i][target] += eta_p;
        sensor.visits[i] += 1;
        sensor.last_update[i] = now;
        Ok(())
    }

    /// Advance the visit counter without changing the row (observed but not
    /// updated because no descent direction existed).
    pub fn record_visit(&mut self, m: usize, x: f64, now: usize) -> Result<()> {
        let i = self.row_index(m, x)?;
        self.sensors[m].visits[i] += 1;
        self.sensors[m].last_update[i] = now;
        Ok(())
    }

    /// `1 - max_q P(q|x)`: distance of the row from determinism.
    pub fn determinization_gap(&self, m: usize, x: f64) -> Result<f64> {
        let row = self.row(m, x)?;
        Ok(1.0 - row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)))
    }

    /// Mean determinization gap over every (sensor, observation) row.
    pub fn mean_gap(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for sensor in &self.sensors {
            for row in &sensor.rows {
                total += 1.0 - row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    /// All rows flattened as `(sensor, x, gap, visits)` for diagnostics.
    pub fn gap_report(&self) -> Vec<(usize, f64, f64, u64)> {
        let mut out = Vec::new();
        for (m, sensor) in self.sensors.iter().enumerate() {
            for (i, row) in sensor.rows.iter().enumerate() {
                let gap = 1.0 - row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                out.push((m, sensor.xs[i], gap, sensor.visits[i]));
            }
        }
        out
    }

    /// Write the full table as `sensor,x,q,prob,visits` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["sensor", "x", "q", "prob", "visits"])?;
        for (m, sensor) in self.sensors.iter().enumerate() {
            for (i, row) in sensor.rows.iter().enumerate() {
                for (j, &p) in row.iter().enumerate() {
                    wtr.write_record(&[
                        m.to_string(),
                        sensor.xs[i].to_string(),
                        sensor.points[j].to_string(),
                        p.to_string(),
                        sensor.visits[i].to_string(),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Sub-gradient of the instantaneous loss with respect to the rule row of
/// sensor `m` at the observed value `x_n[m]`, one entry per quantization
/// point: the sum over stored atoms sharing that observation of
/// `mu * alpha_i * w_{m,i} * w_{m,n} * P_i(q | x)`.
pub fn rule_subgradients(
    expansion: &Expansion,
    m: usize,
    x_mn: f64,
    w_mn: f64,
    mu: f64,
    q_len: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; q_len];
    for &i in expansion.atoms_observing(m, x_mn) {
        let atom = &expansion.atoms()[i];
        let c = mu * expansion.coefficient(i) * atom.weights[m] * w_mn;
        for (o, &p) in out.iter_mut().zip(atom.rows[m].iter()) {
            *o += c * p;
        }
    }
    out
}

/// Rule sub-gradient under the linear base kernel: the margin depends on the
/// row only through the conditional mean, so every atom contributes through
/// its own mean times the candidate point value (no observation indicator).
pub fn rule_subgradients_linear(
    expansion: &Expansion,
    m: usize,
    w_mn: f64,
    mu: f64,
    points_m: &[f64],
) -> Vec<f64> {
    let mut total = 0.0;
    for i in 0..expansion.len() {
        let atom = &expansion.atoms()[i];
        total += expansion.coefficient(i)
            * atom.weights[m]
            * crate::kernel::row_mean(&atom.rows[m], points_m);
    }
    points_m.iter().map(|&q| mu * w_mn * total * q).collect()
}

/// Quantization point targeted by the rule update: the entry of largest
/// sub-gradient magnitude, ties broken toward the smallest index. The row is
/// only moved when the returned sub-gradient is negative.
pub fn select_target_point(subgrads: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in subgrads.iter().enumerate() {
        match best {
            Some((_, b)) if s.abs() <= b.abs() => {}
            _ => best = Some((i, s)),
        }
    }
    best
}

/// Brute-force oracle for the rule sub-gradient under a general base kernel:
/// differentiates the explicit joint-enumeration expectation with respect to
/// `P_n(q | x_n[m])` by restricting the receive-side sum to vectors whose
/// `m`-th component equals `q`. Small alphabets only.
#[allow(clippy::too_many_arguments)]
pub fn rule_subgradient_bruteforce(
    expansion: &Expansion,
    table: &RuleTable,
    x_n: &[f64],
    w_n: &[f64],
    m: usize,
    q: usize,
    mu: f64,
    kind: KernelKind,
    cap: usize,
) -> Result<f64> {
    let sensors = table.n_sensors();
    let rows_n = table.rows_at(x_n)?;
    let sizes_n: Vec<usize> = rows_n.iter().map(Vec::len).collect();
    let joint: usize = sizes_n.iter().product();
    if joint > cap {
        return Err(Error::EnumerationOverflow { size: joint, cap });
    }

    let mut acc = 0.0;
    for i in 0..expansion.len() {
        let atom = &expansion.atoms()[i];
        let sizes_i: Vec<usize> = atom.rows.iter().map(Vec::len).collect();
        let joint_i: usize = sizes_i.iter().product();
        if joint_i > cap {
            return Err(Error::EnumerationOverflow { size: joint_i, cap });
        }
        let alpha = expansion.coefficient(i);
        for a in JointIter::new(&sizes_i) {
            let mut p_a = 1.0;
            for s in 0..sensors {
                p_a *= atom.rows[s][a[s]];
            }
            if p_a == 0.0 {
                continue;
            }
            // receive-side vectors with component m pinned to q
            let mut restricted = sizes_n.clone();
            restricted[m] = 1;
            for mut b in JointIter::new(&restricted) {
                b[m] = q;
                let mut p_b = 1.0;
                for s in 0..sensors {
                    if s != m {
                        p_b *= rows_n[s][b[s]];
                    }
                }
                if p_b == 0.0 {
                    continue;
                }
                let mut k = 0.0;
                for s in 0..sensors {
                    let factor = match kind {
                        KernelKind::Count => {
                            if a[s] == b[s] && atom.x[s] == x_n[s] {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        KernelKind::Linear => table.points(s)[a[s]] * table.points(s)[b[s]],
                    };
                    k += atom.weights[s] * w_n[s] * factor;
                }
                acc += mu * alpha * p_a * p_b * k;
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::RuleSnapshot;
    use crate::loss::LossKind;
    use proptest::prelude::*;
    use rand::Rng;

    fn obs(values: Vec<f64>) -> ObservationAlphabet {
        ObservationAlphabet::new(vec![values]).unwrap()
    }

    fn one_sensor_table(xs: Vec<f64>, bits: u32, a: f64, tau: Option<f64>) -> RuleTable {
        let quant = QuantizationAlphabet::uniform(bits, a).unwrap();
        RuleTable::softmax_init(&[obs(xs)], &[quant], tau).unwrap()
    }

    #[test]
    fn softmax_init_peaks_at_nearest_point() {
        let t = one_sensor_table(vec![0.4329, -0.9, 0.01], 1, 1.0, None);
        assert_eq!(argmax_row(t.row(0, 0.4329).unwrap()), 1);
        assert_eq!(argmax_row(t.row(0, -0.9).unwrap()), 0);
        // equidistant from -0.5 and 0.5 would tie; 0.01 is nearer 0.5
        assert_eq!(argmax_row(t.row(0, 0.01).unwrap()), 1);
    }

    #[test]
    fn softmax_rows_are_simplex_vectors() {
        let t = one_sensor_table(vec![-0.7, -0.1, 0.0, 0.3, 0.9], 2, 4.0, None);
        for x in [-0.7, -0.1, 0.0, 0.3, 0.9] {
            let row = t.row(0, x).unwrap();
            assert_eq!(row.len(), 4);
            assert!(row.iter().all(|&p| p > 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equidistant_tie_gives_equal_mass_and_larger_argmax() {
        let t = one_sensor_table(vec![0.0], 1, 1.0, None);
        let row = t.row(0, 0.0).unwrap();
        assert!((row[0] - row[1]).abs() < 1e-15);
        assert_eq!(argmax_row(row), 1);
    }

    #[test]
    fn small_tau_approaches_point_mass() {
        let t = one_sensor_table(vec![0.3], 1, 1.0, Some(1e-3));
        let row = t.row(0, 0.3).unwrap();
        assert!(row[1] > 1.0 - 1e-12);
    }

    #[test]
    fn softmax_hand_value() {
        // x = 0, Q = {-3,-1,1,3}, tau = 1: weights exp(-3),exp(-1),exp(-1),exp(-3)
        let t = one_sensor_table(vec![0.0], 2, 4.0, Some(1.0));
        let row = t.row(0, 0.0).unwrap();
        let z = 2.0 * ((-3.0f64).exp() + (-1.0f64).exp());
        assert!((row[0] - (-3.0f64).exp() / z).abs() < 1e-12);
        assert!((row[1] - (-1.0f64).exp() / z).abs() < 1e-12);
        assert!((row[1] - row[2]).abs() < 1e-15);
    }

    #[test]
    fn invalid_configurations_rejected() {
        let quant = QuantizationAlphabet::uniform(1, 1.0).unwrap();
        assert!(RuleTable::softmax_init(&[obs(vec![0.1])], &[quant.clone()], Some(0.0)).is_err());
        assert!(RuleTable::softmax_init(&[obs(vec![0.1]), obs(vec![0.2])], &[quant], None).is_err());
    }

    #[test]
    fn unknown_observation_is_an_error() {
        let t = one_sensor_table(vec![0.1, 0.2], 1, 1.0, None);
        assert!(matches!(
            t.row(0, 0.15),
            Err(Error::UnknownObservation { sensor: 0, .. })
        ));
    }

    #[test]
    fn deterministic_init_is_point_mass_at_nearest() {
        let quant = QuantizationAlphabet::uniform(2, 4.0).unwrap();
        let t = RuleTable::deterministic_init(&[obs(vec![-2.5, 0.0, 1.4])], &[quant]).unwrap();
        assert_eq!(t.row(0, -2.5).unwrap(), &[1.0, 0.0, 0.0, 0.0]);
        // 0.0 is equidistant from -1 and 1: tie toward the larger
        assert_eq!(t.row(0, 0.0).unwrap(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(t.row(0, 1.4).unwrap(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(t.determinization_gap(0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn identity_init_passes_observations_through() {
        let t = RuleTable::identity_init(&[obs(vec![0.3, -0.2, 0.8])]).unwrap();
        assert_eq!(t.points(0), &[-0.2, 0.3, 0.8]);
        assert_eq!(t.row(0, 0.3).unwrap(), &[0.0, 1.0, 0.0]);
        assert_eq!(t.mean_gap(), 0.0);
        let mut rng = crate::seed_rng(0);
        let q = t.sample(&[0.8], &mut rng).unwrap();
        assert_eq!(t.points(0)[q[0]], 0.8);
    }

    #[test]
    fn update_arithmetic_hand_value() {
        let mut t = one_sensor_table(vec![0.3], 1, 1.0, Some(1.0));
        // overwrite via updates until row is known, then check one step exactly
        let before = t.row(0, 0.3).unwrap().to_vec();
        t.update(0, 0.3, 0, 0.1, 7).unwrap();
        let after = t.row(0, 0.3).unwrap();
        assert!((after[0] - (0.9 * before[0] + 0.1)).abs() < 1e-15);
        assert!((after[1] - 0.9 * before[1]).abs() < 1e-15);
        assert!((after.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(t.visits(0, 0.3).unwrap(), 1);
        assert_eq!(t.last_update(0, 0.3).unwrap(), 7);
    }

    #[test]
    fn unit_step_determinizes_in_one_update() {
        let mut t = one_sensor_table(vec![0.0], 2, 4.0, None);
        t.update(0, 0.0, 3, 1.0, 1).unwrap();
        assert_eq!(t.row(0, 0.0).unwrap(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(t.determinization_gap(0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gap_follows_geometric_closed_form() {
        // start from a row with max 0.6 and always update its argmax:
        // gap after k updates = 0.4 * 0.9^k
        let mut t = one_sensor_table(vec![0.3], 1, 1.0, Some(1.0));
        // shape the row to (0.4, 0.6) via a unit step then a blend
        t.update(0, 0.3, 1, 1.0, 0).unwrap();
        t.update(0, 0.3, 0, 0.4, 0).unwrap();
        let row = t.row(0, 0.3).unwrap();
        assert!((row[1] - 0.6).abs() < 1e-12 && (row[0] - 0.4).abs() < 1e-12);
        for k in 1..=30u32 {
            let target = argmax_row(t.row(0, 0.3).unwrap());
            t.update(0, 0.3, target, 0.1, k as usize).unwrap();
            let gap = t.determinization_gap(0, 0.3).unwrap();
            assert!((gap - 0.4 * 0.9f64.powi(k as i32)).abs() < 1e-12, "k={k}");
        }
        assert!(1.0 - t.determinization_gap(0, 0.3).unwrap() >= 0.95);
        assert_eq!(t.visits(0, 0.3).unwrap(), 32);
    }

    #[test]
    fn uniform_row_gap() {
        let quant = QuantizationAlphabet::uniform(2, 4.0).unwrap();
        let mut t = RuleTable::softmax_init(&[obs(vec![0.0])], &[quant], Some(1e6)).unwrap();
        // enormous tau flattens the row to near uniform
        assert!((t.determinization_gap(0, 0.0).unwrap() - 0.75).abs() < 1e-5);
        t.record_visit(0, 0.0, 3).unwrap();
        assert_eq!(t.visits(0, 0.0).unwrap(), 1);
    }

    #[test]
    fn sampling_matches_row_probabilities() {
        let mut t = one_sensor_table(vec![0.0], 1, 1.0, None);
        t.update(0, 0.0, 1, 1.0, 0).unwrap();
        t.update(0, 0.0, 0, 0.5, 0).unwrap(); // row (0.5, 0.5)
        let mut rng = crate::seed_rng(42);
        let n = 100_000;
        let mut ones = 0usize;
        for _ in 0..n {
            ones += t.sample(&[0.0], &mut rng).unwrap()[0];
        }
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let t = one_sensor_table(vec![0.0, 0.5, -0.5], 2, 4.0, None);
        let draw = |seed| {
            let mut rng = crate::seed_rng(seed);
            (0..200)
                .map(|i| t.sample(&[[0.0, 0.5, -0.5][i % 3]], &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn target_selection_prefers_magnitude_then_smallest_index() {
        assert_eq!(select_target_point(&[0.1, -0.4, 0.3]), Some((1, -0.4)));
        assert_eq!(select_target_point(&[-0.2, 0.2]), Some((0, -0.2)));
        assert_eq!(select_target_point(&[0.0, 0.0]), Some((0, 0.0)));
        assert_eq!(select_target_point(&[]), None);
    }

    #[test]
    fn subgradients_match_bruteforce_oracle_single_sensor() {
        let mut rng = crate::seed_rng(17);
        for _ in 0..25 {
            let xs = vec![0.1, 0.2, 0.3];
            let t = one_sensor_table(xs.clone(), 2, 4.0, None);
            let mut e = Expansion::new(1);
            for n in 1..=8usize {
                let x = xs[rng.gen_range(0..3)];
                let rows = t.rows_at(&[x]).unwrap();
                let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let w = vec![rng.gen::<f64>() + 0.5];
                e.step_update(n, &[x], 0.0, y, 0.1, 0.0, LossKind::hinge(), RuleSnapshot { rows }, w)
                    .unwrap();
            }
            let x_n = [xs[rng.gen_range(0..3)]];
            let w_n = [rng.gen::<f64>() + 0.5];
            let mu = if rng.gen::<bool>() { -1.0 } else { 1.0 };
            let fast = rule_subgradients(&e, 0, x_n[0], w_n[0], mu, 4);
            for q in 0..4 {
                let slow = rule_subgradient_bruteforce(
                    &e, &t, &x_n, &w_n, 0, q, mu, KernelKind::Count, 1 << 16,
                )
                .unwrap();
                assert!((fast[q] - slow).abs() < 1e-12, "q={q}: {} vs {slow}", fast[q]);
            }
        }
    }

    #[test]
    fn linear_subgradients_match_bruteforce_oracle_single_sensor() {
        let mut rng = crate::seed_rng(23);
        for _ in 0..25 {
            let xs = vec![0.1, 0.2, 0.3];
            let t = one_sensor_table(xs.clone(), 2, 4.0, None);
            let mut e = Expansion::new(1);
            for n in 1..=6usize {
                let x = xs[rng.gen_range(0..3)];
                let rows = t.rows_at(&[x]).unwrap();
                let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let w = vec![rng.gen::<f64>() + 0.5];
                e.step_update(n, &[x], 0.0, y, 0.1, 0.0, LossKind::hinge(), RuleSnapshot { rows }, w)
                    .unwrap();
            }
            let x_n = [xs[rng.gen_range(0..3)]];
            let w_n = [rng.gen::<f64>() + 0.5];
            let mu = if rng.gen::<bool>() { -1.0 } else { 1.0 };
            let fast = rule_subgradients_linear(&e, 0, w_n[0], mu, t.points(0));
            for q in 0..4 {
                let slow = rule_subgradient_bruteforce(
                    &e, &t, &x_n, &w_n, 0, q, mu, KernelKind::Linear, 1 << 16,
                )
                .unwrap();
                assert!((fast[q] - slow).abs() < 1e-12, "q={q}: {} vs {slow}", fast[q]);
            }
        }
    }

    #[test]
    fn subgradient_zero_without_matching_atoms() {
        let t = one_sensor_table(vec![0.1, 0.2], 1, 1.0, None);
        let mut e = Expansion::new(1);
        let rows = t.rows_at(&[0.1]).unwrap();
        e.step_update(1, &[0.1], 0.0, 1.0, 0.1, 0.0, LossKind::hinge(), RuleSnapshot { rows }, vec![1.0])
            .unwrap();
        let g = rule_subgradients(&e, 0, 0.2, 1.0, -1.0, 2);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn subgradient_hand_value() {
        // one atom: alpha 0.1, w_i 1, row (0.3, 0.7); mu = -1, w_n = 1
        let t = one_sensor_table(vec![0.1], 1, 1.0, None);
        let mut e = Expansion::new(1);
        e.step_update(
            1,
            &[0.1],
            0.0,
            1.0,
            0.1,
            0.0,
            LossKind::hinge(),
            RuleSnapshot { rows: vec![vec![0.3, 0.7]] },
            vec![1.0],
        )
        .unwrap();
        let g = rule_subgradients(&e, 0, 0.1, 1.0, -1.0, 2);
        assert!((g[0] - (-0.03)).abs() < 1e-15);
        assert!((g[1] - (-0.07)).abs() < 1e-15);
        let _ = t;
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn updates_preserve_the_simplex(seed in 0u64..10_000, steps in 1usize..60) {
            let mut rng = crate::seed_rng(seed);
            let mut t = one_sensor_table(vec![-0.4, 0.0, 0.7], 2, 4.0, None);
            let xs = [-0.4, 0.0, 0.7];
            for n in 0..steps {
                let x = xs[rng.gen_range(0..3)];
                let target = rng.gen_range(0..4);
                let eta: f64 = rng.gen();
                t.update(0, x, target, eta, n).unwrap();
            }
            for &x in &xs {
                let row = t.row(0, x).unwrap();
                prop_assert!(row.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn repeated_updates_concentrate_mass(seed in 0u64..10_000) {
            let mut rng = crate::seed_rng(seed);
            let mut t = one_sensor_table(vec![0.2], 2, 4.0, None);
            let target = rng.gen_range(0..4);
            let mut prev = t.row(0, 0.2).unwrap()[target];
            for n in 0..40 {
                t.update(0, 0.2, target, 0.1, n).unwrap();
                let cur = t.row(0, 0.2).unwrap()[target];
                prop_assert!(cur > prev - 1e-15);
                prev = cur;
            }
            prop_assert!(prev > 0.95);
        }
    }
}
