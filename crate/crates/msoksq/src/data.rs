//! Finite observation/quantization alphabets, labeled sample streams,
//! synthetic data generation, and Iris ingestion.
//!
//! Observations live in finite per-sensor alphabets. A sample stream draws one
//! class per time step and one observation of that class per sensor, so all
//! sensors share the step label.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label: a binary scalar in {-1,+1}, or a label pair for 3-class
/// one-versus-all problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Binary(i8),
    Pair(i8, i8),
}

impl Label {
    /// Binary component seen by learner `j` (0 or 1).
    pub fn component(&self, j: usize) -> f64 {
        match self {
            Label::Binary(y) => f64::from(*y),
            Label::Pair(a, b) => {
                if j == 0 {
                    f64::from(*a)
                } else {
                    f64::from(*b)
                }
            }
        }
    }
}

/// One labeled observation vector across all sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Label,
}

/// Finite set of quantization points for one sensor, symmetric about 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationAlphabet {
    points: Vec<f64>,
    bits: u32,
}

impl QuantizationAlphabet {
    /// Uniform partition of `[-a, a]` into `2^bits` points:
    /// `(2d + 1 - |Q|) * a / |Q|` for `d = 0..|Q|-1`.
    pub fn uniform(bits: u32, a: f64) -> Result<Self> {
        if bits == 0 {
            return Err(Error::Config("quantizer bits must be >= 1".into()));
        }
        if a <= 0.0 {
            return Err(Error::Config("quantizer range must be > 0".into()));
        }
        let size = 1usize << bits;
        let points = (0..size)
            .map(|d| (2.0 * d as f64 + 1.0 - size as f64) * a / size as f64)
            .collect();
        Ok(Self { points, bits })
    }

    /// Identity alphabet over an observation set; used for the
    /// infinite-resolution deterministic quantizer baseline.
    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.len() < 2 {
            return Err(Error::Config("quantization alphabet needs >= 2 points".into()));
        }
        let bits = (points.len() as f64).log2().ceil() as u32;
        Ok(Self { points, bits })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Half-width of the covered range, i.e. the spacing-aware `a` such that
    /// the points partition `[-a, a]`.
    pub fn range(&self) -> f64 {
        let size = self.points.len() as f64;
        self.points[self.points.len() - 1] * size / (size - 1.0)
    }

    /// Index of the point nearest to `x`; equidistant ties go to the larger point.
    pub fn nearest(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, &q) in self.points.iter().enumerate() {
            let d = (x - q).abs();
            if d <= best_dist {
                // `<=` walks ties toward the larger point (points are increasing)
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

/// Finite per-sensor observation set, grouped by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationAlphabet {
    /// Observation values for each class, in generation order.
    classes: Vec<Vec<f64>>,
}

impl ObservationAlphabet {
    pub fn new(classes: Vec<Vec<f64>>) -> Result<Self> {
        if classes.iter().all(|c| c.is_empty()) {
            return Err(Error::Data("empty observation alphabet".into()));
        }
        Ok(Self { classes })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_values(&self, c: usize) -> &[f64] {
        &self.classes[c]
    }

    /// All values across classes, in class order.
    pub fn all_values(&self) -> Vec<f64> {
        self.classes.iter().flatten().copied().collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.classes.iter().flatten().any(|&v| v == x)
    }
}

/// Synthetic observation of class `y` in {-1,+1} for draw `c2 ~ Uni(0,1)`:
/// `y -/+ 0.75 * ((1 + c1) * c2 + c2^2)` (minus for y=+1, plus for y=-1).
pub fn synthetic_point(y: i8, c1: f64, c2: f64) -> f64 {
    let shift = 0.75 * ((1.0 + c1) * c2 + c2 * c2);
    if y > 0 {
        1.0 - shift
    } else {
        -1.0 + shift
    }
}

/// Generate a two-class observation alphabet with `size / 2` points per class.
pub fn generate_synthetic_alphabet(
    c1: f64,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ObservationAlphabet> {
    if !(c1 > 0.0 && c1 <= 1.0) {
        return Err(Error::Config(format!("c1 must be in (0, 1], got {c1}")));
    }
    if size == 0 || size % 2 != 0 {
        return Err(Error::Config(format!("alphabet size must be even and > 0, got {size}")));
    }
    let per_class = size / 2;
    let mut neg = Vec::with_capacity(per_class);
    let mut pos = Vec::with_capacity(per_class);
    for _ in 0..per_class {
        neg.push(synthetic_point(-1, c1, rng.gen::<f64>()));
    }
    for _ in 0..per_class {
        pos.push(synthetic_point(1, c1, rng.gen::<f64>()));
    }
    ObservationAlphabet::new(vec![neg, pos])
}

/// Load the UCI Iris file and build a shared observation alphabet from the
/// distinct petal-width values of each class.
///
/// Returns the alphabet (classes ordered as first seen in the file) together
/// with the class names. With `standardize` the petal widths are z-scored over
/// the whole dataset so that they span a symmetric quantizer range.
pub fn load_iris(path: &Path, standardize: bool) -> Result<(ObservationAlphabet, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;

    let mut rows: Vec<(f64, String)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 5 {
            if record.iter().all(|f| f.trim().is_empty()) {
                continue;
            }
            return Err(Error::Data(format!(
                "malformed Iris row (expected 5 fields, got {}): {:?}",
                record.len(),
                record
            )));
        }
        let petal_width = record.get(3).unwrap().trim();
        let class = record.get(4).unwrap().trim();
        match petal_width.parse::<f64>() {
            Ok(v) => rows.push((v, class.to_string())),
            Err(_) => {
                // header row: every field is non-numeric, and it comes first
                let first = record.get(0).unwrap_or("").trim();
                if rows.is_empty() && class.parse::<f64>().is_err() && first.parse::<f64>().is_err() {
                    continue;
                }
                return Err(Error::Data(format!("malformed petal-width value {petal_width:?}")));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Data("no Iris rows found".into()));
    }

    if standardize {
        let n = rows.len() as f64;
        let mean = rows.iter().map(|(v, _)| v).sum::<f64>() / n;
        let var = rows.iter().map(|(v, _)| (v - mean).powi(2)).sum::<f64>() / n;
        if var == 0.0 {
            return Err(Error::Data("cannot standardize a constant feature column".into()));
        }
        let std = var.sqrt();
        for (v, _) in &mut rows {
            *v = (*v - mean) / std;
        }
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut by_class: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (v, class) in rows {
        let idx = match class_names.iter().position(|c| *c == class) {
            Some(i) => i,
            None => {
                class_names.push(class.clone());
                class_names.len() - 1
            }
        };
        let values = by_class.entry(idx).or_default();
        if !values.contains(&v) {
            values.push(v);
        }
    }
    if class_names.len() > 3 {
        return Err(Error::Data(format!("expected at most 3 classes, got {:?}", class_names)));
    }
    let classes = (0..class_names.len()).map(|i| by_class[&i].clone()).collect();
    Ok((ObservationAlphabet::new(classes)?, class_names))
}

/// Label set for a given class count: {-1,+1} for two classes, the pairs
/// {[-1,1],[1,-1],[1,1]} for three.
pub fn label_for_class(n_classes: usize, class: usize) -> Label {
    if n_classes <= 2 {
        Label::Binary(if class == 0 { -1 } else { 1 })
    } else {
        match class {
            0 => Label::Pair(-1, 1),
            1 => Label::Pair(1, -1),
            _ => Label::Pair(1, 1),
        }
    }
}

/// Data source for a sample stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StreamSource {
    Synthetic { c1: f64, alphabet_size: usize },
    Iris { path: String, standardize: bool },
}

/// Stream configuration: sensor count, horizon and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub sensors: usize,
    pub horizon: usize,
    pub seed: u64,
    pub source: StreamSource,
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensors == 0 {
            return Err(Error::Config("sensor count must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        Ok(())
    }
}

/// Seeded stream of labeled samples over per-sensor alphabets.
///
/// Each step draws one class uniformly, then each sensor draws one observation
/// of that class from its own alphabet.
#[derive(Debug, Clone)]
pub struct SampleStream {
    per_sensor: Vec<ObservationAlphabet>,
    n_classes: usize,
    horizon: usize,
    emitted: usize,
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(per_sensor: Vec<ObservationAlphabet>, horizon: usize, rng: ChaCha8Rng) -> Result<Self> {
        if per_sensor.is_empty() {
            return Err(Error::Config("at least one sensor alphabet required".into()));
        }
        let n_classes = per_sensor[0].n_classes();
        if per_sensor.iter().any(|a| a.n_classes() != n_classes) {
            return Err(Error::Config("all sensors must share the class set".into()));
        }
        Ok(Self { per_sensor, n_classes, horizon, emitted: 0, rng })
    }

    /// Build the stream (and its per-sensor alphabets) from a config.
    pub fn from_config(cfg: &StreamConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = crate::seed_rng(cfg.seed);
        let per_sensor = match &cfg.source {
            StreamSource::Synthetic { c1, alphabet_size } => (0..cfg.sensors)
                .map(|_| generate_synthetic_alphabet(*c1, *alphabet_size, &mut rng))
                .collect::<Result<Vec<_>>>()?,
            StreamSource::Iris { path, standardize } => {
                let (alphabet, _) = load_iris(Path::new(path), *standardize)?;
                vec![alphabet; cfg.sensors]
            }
        };
        Self::new(per_sensor, cfg.horizon, rng)
    }

    pub fn sensors(&self) -> usize {
        self.per_sensor.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn alphabets(&self) -> &[ObservationAlphabet] {
        &self.per_sensor
    }

    /// Draw the next sample; errors once the horizon is exhausted.
    pub fn next_sample(&mut self) -> Result<Sample> {
        if self.emitted >= self.horizon {
            return Err(Error::Data(format!("stream horizon {} exhausted", self.horizon)));
        }
        self.emitted += 1;
        Ok(self.draw())
    }

    fn draw(&mut self) -> Sample {
        // skip classes with no values (can happen for degenerate inputs)
        let class = loop {
            let c = self.rng.gen_range(0..self.n_classes);
            if !self.per_sensor[0].class_values(c).is_empty() {
                break c;
            }
        };
        let x = self
            .per_sensor
            .iter()
            .map(|alphabet| {
                let values = alphabet.class_values(class);
                values[self.rng.gen_range(0..values.len())]
            })
            .collect();
        Sample { x, y: label_for_class(self.n_classes, class) }
    }

    /// Collect the whole remaining horizon.
    pub fn collect_all(mut self) -> Vec<Sample> {
        let mut out = Vec::with_capacity(self.horizon - self.emitted);
        while self.emitted < self.horizon {
            self.emitted += 1;
            out.push(self.draw());
        }
        out
    }
}

/// Write per-sensor alphabets as CSV (columns: sensor, class, value).
pub fn write_alphabets_csv<W: Write>(mut w: W, alphabets: &[ObservationAlphabet]) -> Result<()> {
    writeln!(w, "sensor,class,value")?;
    for (m, alphabet) in alphabets.iter().enumerate() {
        for c in 0..alphabet.n_classes() {
            for v in alphabet.class_values(c) {
                writeln!(w, "{m},{c},{v}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed_rng;

    #[test]
    fn uniform_quantization_points() {
        let q = QuantizationAlphabet::uniform(2, 4.0).unwrap();
        assert_eq!(q.points(), &[-3.0, -1.0, 1.0, 3.0]);
        let q = QuantizationAlphabet::uniform(1, 1.0).unwrap();
        assert_eq!(q.points(), &[-0.5, 0.5]);
        let q = QuantizationAlphabet::uniform(1, 2.0).unwrap();
        assert_eq!(q.points(), &[-1.0, 1.0]);
    }

    #[test]
    fn quantization_points_symmetric_increasing() {
        for bits in 1..=4 {
            let q = QuantizationAlphabet::uniform(bits, 3.5).unwrap();
            assert_eq!(q.len(), 1 << bits);
            for w in q.points().windows(2) {
                assert!(w[0] < w[1]);
            }
            for d in 0..q.len() {
                assert!((q.points()[d] + q.points()[q.len() - 1 - d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_quantizer_config_rejected() {
        assert!(QuantizationAlphabet::uniform(0, 1.0).is_err());
        assert!(QuantizationAlphabet::uniform(2, 0.0).is_err());
        assert!(QuantizationAlphabet::uniform(2, -1.0).is_err());
    }

    #[test]
    fn synthetic_formula_hand_values() {
        // c2 -> 0 boundary
        assert!((synthetic_point(1, 0.5, 0.0) - 1.0).abs() < 1e-12);
        // hand evaluations
        assert!((synthetic_point(1, 1.0, 0.5) - 0.0625).abs() < 1e-12);
        assert!((synthetic_point(-1, 0.1, 0.5) - (-0.4)).abs() < 1e-12);
    }

    #[test]
    fn synthetic_alphabet_satisfies_formula() {
        // regenerate c2 from x and check the identity holds to 1e-12
        let mut rng = seed_rng(7);
        let alphabet = generate_synthetic_alphabet(0.3, 40, &mut rng).unwrap();
        assert_eq!(alphabet.class_values(0).len(), 20);
        assert_eq!(alphabet.class_values(1).len(), 20);
        for (c, y) in [(0usize, -1i8), (1, 1)] {
            for &x in alphabet.class_values(c) {
                // invert shift = 0.75((1+c1)c2 + c2^2) for c2 in (0,1)
                let shift = if y > 0 { 1.0 - x } else { x + 1.0 };
                let c1 = 0.3f64;
                let s = shift / 0.75;
                let c2 = (-(1.0 + c1) + ((1.0 + c1).powi(2) + 4.0 * s).sqrt()) / 2.0;
                assert!((synthetic_point(y, c1, c2) - x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn synthetic_rejects_bad_config() {
        let mut rng = seed_rng(0);
        assert!(generate_synthetic_alphabet(0.0, 10, &mut rng).is_err());
        assert!(generate_synthetic_alphabet(1.5, 10, &mut rng).is_err());
        assert!(generate_synthetic_alphabet(0.5, 9, &mut rng).is_err());
    }

    #[test]
    fn stream_membership_and_determinism() {
        let cfg = StreamConfig {
            sensors: 10,
            horizon: 600,
            seed: 42,
            source: StreamSource::Synthetic { c1: 0.1, alphabet_size: 20 },
        };
        let s1 = SampleStream::from_config(&cfg).unwrap();
        let alphabets = s1.alphabets().to_vec();
        let run1 = s1.collect_all();
        let run2 = SampleStream::from_config(&cfg).unwrap().collect_all();
        assert_eq!(run1.len(), 600);
        assert_eq!(run1, run2);
        for sample in &run1 {
            assert_eq!(sample.x.len(), 10);
            for (m, &x) in sample.x.iter().enumerate() {
                assert!(alphabets[m].contains(x));
            }
        }
    }

    #[test]
    fn singleton_alphabet_yields_identical_samples() {
        let alphabet = ObservationAlphabet::new(vec![vec![0.25], vec![]]).unwrap();
        let mut stream = SampleStream::new(vec![alphabet], 5, seed_rng(1)).unwrap();
        let first = stream.next_sample().unwrap();
        for _ in 0..4 {
            assert_eq!(stream.next_sample().unwrap(), first);
        }
        assert!(stream.next_sample().is_err());
    }

    #[test]
    fn iris_loads_three_classes() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
        let (alphabet, names) = load_iris(&path, false).unwrap();
        assert_eq!(names, vec!["setosa", "versicolor", "virginica"]);
        assert_eq!(alphabet.n_classes(), 3);
        let distinct: usize = (0..3).map(|c| alphabet.class_values(c).len()).sum();
        assert!(distinct > 3);
        // raw petal widths live in [0.1, 2.5]
        for v in alphabet.all_values() {
            assert!((0.1..=2.5).contains(&v));
        }
    }

    #[test]
    fn iris_standardization_centers_values() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
        let (alphabet, _) = load_iris(&path, true).unwrap();
        let values = alphabet.all_values();
        assert!(values.iter().any(|&v| v < 0.0));
        assert!(values.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn iris_constant_column_standardization_fails() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        for _ in 0..5 {
            writeln!(tmp, "1.0,1.0,1.0,0.7,only").unwrap();
        }
        let err = load_iris(tmp.path(), true);
        assert!(err.is_err());
        // without standardization a single class is a valid (degenerate) alphabet
        let (alphabet, names) = load_iris(tmp.path(), false).unwrap();
        assert_eq!(names.len(), 1);
        assert_eq!(alphabet.n_classes(), 1);
    }

    #[test]
    fn iris_missing_file_and_malformed_rows() {
        assert!(load_iris(Path::new("/nonexistent/iris.csv"), false).is_err());
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, "1.0,1.0,1.0,abc,setosa").unwrap();
        writeln!(tmp, "1.0,1.0,1.0,0.2,setosa").unwrap();
        assert!(load_iris(tmp.path(), false).is_err());
    }

    #[test]
    fn nearest_breaks_ties_toward_larger_point() {
        let q = QuantizationAlphabet::uniform(1, 1.0).unwrap();
        assert_eq!(q.nearest(0.0), 1); // equidistant from -0.5 and 0.5
        assert_eq!(q.nearest(0.4329), 1);
        assert_eq!(q.nearest(-0.2), 0);
    }
}
