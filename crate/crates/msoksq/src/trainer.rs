//! The full training loop tying the three learned states together, plus the
//! ablation baselines, one-versus-all multiclass runs, and risk/accuracy
//! tracking.
//!
//! Each step runs, in order: the loss sub-gradient on the current margin,
//! the per-sensor rule updates, the weight update against the freshly
//! updated rules, the expansion update, and finally prediction bookkeeping.

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ObservationAlphabet, QuantizationAlphabet, Sample, SampleStream, StreamConfig};
use crate::error::{Error, Result};
use crate::expansion::{EtaSchedule, Expansion, RuleSnapshot};
use crate::kernel::KernelKind;
use crate::loss::LossKind;
use crate::quantizer::{self, RuleTable};
use crate::selection::{self, UpdateOutcome, WeightVector};

/// Sign convention used for classification: zero counts as +1.
pub fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Which parts of the learner are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Variant {
    /// Learn the decision function, the rules, and the weights.
    Full,
    /// Learn the decision function and the rules; weights stay all-ones.
    NoW,
    /// Learn only the decision function over the fixed initial rules.
    NoPNoW,
    /// Quantize observations deterministically at the sensors and learn a
    /// plain online kernel machine over the quantized stream.
    DeterministicQuantizer { bits: u32 },
    /// Plain online kernel machine on the raw observations (identity rules).
    Norma,
    /// Full rule/decision learning but with a random frozen sensor subset
    /// instead of learned weights.
    RandomSelection { keep: usize },
}

/// Hyperparameters and run shape for one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Base decision learning rate; the per-step rate is `eta1 / sqrt(n)`.
    pub eta1: f64,
    /// Rule (quantizer) step size.
    pub rule_lr: f64,
    /// Weight step size.
    pub weight_lr: f64,
    /// Decision-function decay strength.
    pub lambda1: f64,
    pub loss: LossKind,
    pub kernel: KernelKind,
    /// Number of sensors M.
    pub sensors: usize,
    /// Target number of enabled sensors.
    pub select: usize,
    /// Training horizon N.
    pub steps: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Quantizer resolution for the learned rules.
    pub bits: u32,
    /// Half-range A of the quantizer.
    pub range: f64,
    /// Initial rule concentration; `None` uses `range / |Q|`.
    pub tau: Option<f64>,
    /// Ablation: use the training kernel (with the observation-equality
    /// indicator) on the prediction path too.
    pub indicator_in_prediction: bool,
    /// Apply the weight update even on inactive-margin steps (verbatim
    /// projected-update behavior; see `step` for the default rationale).
    pub strict_eq39: bool,
    /// Exact squared-norm recomputation period for the risk trace.
    pub norm_every: usize,
}

impl TrainerConfig {
    /// Stock defaults for a given sensor count: rate 0.1/sqrt(n),
    /// rule step 0.1, weight step 0.5, decay 0.1, hinge margin 1.
    pub fn defaults(sensors: usize) -> Self {
        Self {
            eta1: 0.1,
            rule_lr: 0.1,
            weight_lr: 0.5,
            lambda1: 0.1,
            loss: LossKind::hinge(),
            kernel: KernelKind::Count,
            sensors,
            select: sensors,
            steps: 600,
            seed: 0,
            variant: Variant::Full,
            bits: 3,
            range: 1.0,
            tau: None,
            indicator_in_prediction: false,
            strict_eq39: false,
            norm_every: 25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors == 0 {
            return Err(Error::Config("sensor count must be >= 1".into()));
        }
        if self.select == 0 || self.select > self.sensors {
            return Err(Error::Config(format!(
                "select = {} must be in 1..={}",
                self.select, self.sensors
            )));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if !(self.eta1 > 0.0) || !(self.rule_lr >= 0.0) || !(self.weight_lr > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.rule_lr > 1.0 {
            return Err(Error::Config(format!("rule step size must be <= 1, got {}", self.rule_lr)));
        }
        if !(self.lambda1 >= 0.0) {
            return Err(Error::Config("decay strength must be >= 0".into()));
        }
        if self.lambda1 * self.eta1 >= 1.0 {
            return Err(Error::Config(format!(
                "need lambda1 < 1/eta1; got lambda1 = {}, eta1 = {}",
                self.lambda1, self.eta1
            )));
        }
        if self.bits == 0 {
            return Err(Error::Config("quantizer resolution must be >= 1 bit".into()));
        }
        if !(self.range > 0.0) {
            return Err(Error::Config("quantizer range must be positive".into()));
        }
        if self.norm_every == 0 {
            return Err(Error::Config("norm recomputation period must be >= 1".into()));
        }
        if let Variant::RandomSelection { keep } = self.variant {
            if keep == 0 || keep > self.sensors {
                return Err(Error::Config(format!(
                    "random selection keep = {keep} must be in 1..={}",
                    self.sensors
                )));
            }
        }
        Ok(())
    }
}

/// One finalized trace row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// Running classification accuracy over sampled transmissions.
    pub acr: f64,
    /// Instantaneous regularized risk at this step (norm term interpolated
    /// between exact checkpoints).
    pub risk: f64,
    /// Running mean of the per-step risks.
    pub r_avg: f64,
    pub margin: f64,
    pub hinge_active: bool,
    pub nonzero_w: usize,
    pub det_gap_mean: f64,
}

/// Per-run record of risks and accuracy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskTrace {
    pub rows: Vec<TraceRow>,
}

impl RiskTrace {
    pub fn final_acr(&self) -> f64 {
        self.rows.last().map(|r| r.acr).unwrap_or(0.0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "step",
            "acr",
            "risk",
            "r_avg",
            "margin",
            "hinge_active",
            "nonzero_w",
            "det_gap_mean",
        ])?;
        for r in &self.rows {
            wtr.write_record(&[
                r.step.to_string(),
                r.acr.to_string(),
                r.risk.to_string(),
                r.r_avg.to_string(),
                r.margin.to_string(),
                (r.hinge_active as u8).to_string(),
                r.nonzero_w.to_string(),
                r.det_gap_mean.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Update-order audit marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Rules,
    Weights,
    Decision,
}

/// Per-step raw record kept until the trace is finalized.
#[derive(Debug, Clone)]
struct PendingRow {
    step: usize,
    correct: bool,
    loss_term: f64,
    l1_term: f64,
    margin: f64,
    hinge_active: bool,
    nonzero_w: usize,
    det_gap_mean: f64,
    /// Exact squared norm of the pre-update decision function, when this
    /// step was a checkpoint.
    norm_sq: Option<f64>,
}

/// One online learner: decision expansion, rule tables, selection weights.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainerConfig,
    rules: RuleTable,
    weights: WeightVector,
    expansion: Expansion,
    schedule: EtaSchedule,
    points: Vec<Vec<f64>>,
    /// Sensor-side deterministic pre-quantizer, when the variant uses one.
    pre_quantizer: Option<QuantizationAlphabet>,
    rng: ChaCha8Rng,
    step_count: usize,
    correct_count: u64,
    pending: Vec<PendingRow>,
    rejected_weight_steps: u64,
    audit: Option<Vec<Phase>>,
}

fn quantize_alphabets(
    alphabets: &[ObservationAlphabet],
    quant: &QuantizationAlphabet,
) -> Result<Vec<ObservationAlphabet>> {
    alphabets
        .iter()
        .map(|a| {
            let classes: Vec<Vec<f64>> = (0..a.n_classes())
                .map(|c| {
                    let mut out: Vec<f64> = Vec::new();
                    for &v in a.class_values(c) {
                        let q = quant.points()[quant.nearest(v)];
                        if !out.contains(&q) {
                            out.push(q);
                        }
                    }
                    out
                })
                .collect();
            ObservationAlphabet::new(classes)
        })
        .collect()
}

impl Trainer {
    /// Build the initial state for the given per-sensor observation
    /// alphabets (one per sensor, in order).
    pub fn new(cfg: TrainerConfig, alphabets: &[ObservationAlphabet]) -> Result<Self> {
        cfg.validate()?;
        if alphabets.len() != cfg.sensors {
            return Err(Error::Config(format!(
                "{} observation alphabets for {} sensors",
                alphabets.len(),
                cfg.sensors
            )));
        }
        let mut rng = crate::seed_rng(cfg.seed);
        // keep the trainer's draws disjoint from the sample stream, which
        // uses stream 0 of the same seed
        rng.set_stream(1);

        let quantizers: Vec<QuantizationAlphabet> = (0..cfg.sensors)
            .map(|_| QuantizationAlphabet::uniform(cfg.bits, cfg.range))
            .collect::<Result<_>>()?;
        let (rules, pre_quantizer) = match cfg.variant {
            Variant::Full | Variant::NoW | Variant::NoPNoW | Variant::RandomSelection { .. } => {
                (RuleTable::softmax_init(alphabets, &quantizers, cfg.tau)?, None)
            }
            Variant::DeterministicQuantizer { bits } => {
                let quant = QuantizationAlphabet::uniform(bits, cfg.range)?;
                let quantized = quantize_alphabets(alphabets, &quant)?;
                (RuleTable::identity_init(&quantized)?, Some(quant))
            }
            Variant::Norma => (RuleTable::identity_init(alphabets)?, None),
        };

        let weights = match cfg.variant {
            Variant::Full => WeightVector::new(cfg.sensors, cfg.select)?,
            Variant::RandomSelection { keep } => {
                // uniform subset without replacement, drawn before any
                // quantizer sampling so it is stable for a given seed
                let mut pool: Vec<usize> = (0..cfg.sensors).collect();
                let mut chosen = Vec::with_capacity(keep);
                for _ in 0..keep {
                    use rand::Rng;
                    let i = rng.gen_range(0..pool.len());
                    chosen.push(pool.swap_remove(i));
                }
                chosen.sort_unstable();
                WeightVector::frozen_mask(cfg.sensors, &chosen)?
            }
            _ => WeightVector::frozen_mask(cfg.sensors, &(0..cfg.sensors).collect::<Vec<_>>())?,
        };

        let points = rules.all_points();
        Ok(Self {
            schedule: EtaSchedule::new(cfg.eta1)?,
            expansion: Expansion::new(cfg.sensors),
            rules,
            weights,
            points,
            pre_quantizer,
            rng,
            step_count: 0,
            correct_count: 0,
            pending: Vec::with_capacity(cfg.steps),
            rejected_weight_steps: 0,
            audit: None,
            cfg,
        })
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn expansion(&self) -> &Expansion {
        &self.expansion
    }

    pub fn steps_taken(&self) -> usize {
        self.step_count
    }

    pub fn rejected_weight_steps(&self) -> u64 {
        self.rejected_weight_steps
    }

    /// Record the (rules, weights, decision) update order for auditing.
    pub fn enable_audit(&mut self) {
        self.audit = Some(Vec::new());
    }

    pub fn audit_log(&self) -> Option<&[Phase]> {
        self.audit.as_deref()
    }

    fn mark(&mut self, phase: Phase) {
        if let Some(log) = &mut self.audit {
            log.push(phase);
        }
    }

    fn update_rules_enabled(&self) -> bool {
        self.cfg.rule_lr > 0.0
            && matches!(
                self.cfg.variant,
                Variant::Full | Variant::NoW | Variant::RandomSelection { .. }
            )
    }

    fn update_weights_enabled(&self) -> bool {
        matches!(self.cfg.variant, Variant::Full)
    }

    /// Map a raw observation vector through the sensor-side deterministic
    /// quantizer, when the variant has one.
    fn effective_input(&self, x: &[f64]) -> Vec<f64> {
        match &self.pre_quantizer {
            Some(q) => x.iter().map(|&v| q.points()[q.nearest(v)]).collect(),
            None => x.to_vec(),
        }
    }

    /// One training step on a binary-labeled observation.
    pub fn step(&mut self, x_raw: &[f64], y: f64) -> Result<()> {
        if x_raw.len() != self.cfg.sensors {
            return Err(Error::Config(format!(
                "observation vector length {} does not match sensor count {}",
                x_raw.len(),
                self.cfg.sensors
            )));
        }
        let n = self.step_count + 1;
        let x = self.effective_input(x_raw);
        let eta_n = self.schedule.at(n);
        let kind = self.cfg.kernel;

        // prediction bookkeeping with the pre-update state: the sensors
        // quantize with the current rules and the fusion center classifies
        // with the current decision function
        let q = self.rules.sample(&x, &mut self.rng)?;
        let indicator = if self.cfg.indicator_in_prediction { Some(&x[..]) } else { None };
        let pred = self.expansion.evaluate_on_quantized(
            &q,
            self.weights.weights(),
            kind,
            &self.points,
            indicator,
        );
        let correct = sgn(pred) == y;

        // loss sub-gradient on the current margin
        let rows_pre = self.rules.rows_at(&x)?;
        let margin = self
            .expansion
            .evaluate_margin(&rows_pre, &x, self.weights.weights(), kind, &self.points);
        let mu = self.cfg.loss.subgradient(margin, y);
        let loss_term = self.cfg.loss.loss(margin, y);

        let norm_sq = if (n - 1) % self.cfg.norm_every == 0 || n == self.cfg.steps {
            Some(self.expansion.norm_squared(kind, &self.points))
        } else {
            None
        };

        // rule updates: move each sensor's row for the observed value toward
        // the point with the strongest descent direction
        if self.update_rules_enabled() {
            for m in 0..self.cfg.sensors {
                let subgrads = match kind {
                    KernelKind::Count => quantizer::rule_subgradients(
                        &self.expansion,
                        m,
                        x[m],
                        self.weights.weights()[m],
                        mu,
                        self.points[m].len(),
                    ),
                    KernelKind::Linear => quantizer::rule_subgradients_linear(
                        &self.expansion,
                        m,
                        self.weights.weights()[m],
                        mu,
                        &self.points[m],
                    ),
                };
                match quantizer::select_target_point(&subgrads) {
                    Some((target, s)) if s < 0.0 => {
                        self.rules.update(m, x[m], target, self.cfg.rule_lr, n)?;
                    }
                    _ => self.rules.record_visit(m, x[m], n)?,
                }
            }
        }
        self.mark(Phase::Rules);

        // weight update against the post-update rules
        let rows_post = self.rules.rows_at(&x)?;
        let post_margin = self
            .expansion
            .evaluate_margin(&rows_post, &x, self.weights.weights(), kind, &self.points);
        let nu = self.cfg.loss.subgradient(post_margin, y);
        let mut lambda2 = 0.0;
        if self.update_weights_enabled() && !self.weights.frozen() {
            // by default easy samples leave the weights alone: with nu = 0
            // the projected step would still shrink-and-renormalize through
            // the sparsity level without any loss evidence
            if nu != 0.0 || self.cfg.strict_eq39 {
                let grads = selection::decision_weight_gradients(
                    &self.expansion,
                    &rows_post,
                    &x,
                    kind,
                    &self.points,
                );
                lambda2 = selection::lambda2_schedule(self.weights.weights(), &grads, nu);
                let subgrads: Vec<f64> = grads.iter().map(|g| nu * g + lambda2).collect();
                if self.weights.update(&subgrads, self.cfg.weight_lr)? == UpdateOutcome::Rejected {
                    self.rejected_weight_steps += 1;
                    if self.rejected_weight_steps == 1 {
                        eprintln!(
                            "warning: weight step at n = {n} would disable too many sensors; skipped"
                        );
                    }
                }
            }
        }
        self.mark(Phase::Weights);

        // decision update, storing the post-update rules and the new weights
        self.expansion.step_update(
            n,
            &x,
            post_margin,
            y,
            eta_n,
            self.cfg.lambda1,
            self.cfg.loss,
            RuleSnapshot { rows: rows_post },
            self.weights.weights().to_vec(),
        )?;
        self.mark(Phase::Decision);

        self.step_count = n;
        if correct {
            self.correct_count += 1;
        }
        self.pending.push(PendingRow {
            step: n,
            correct,
            loss_term,
            l1_term: lambda2 * self.weights.weights().iter().sum::<f64>(),
            margin,
            hinge_active: mu != 0.0,
            nonzero_w: self.weights.nonzero_count(),
            det_gap_mean: self.rules.mean_gap(),
            norm_sq,
        });
        Ok(())
    }

    /// Finalize the risk trace: interpolate the squared-norm term between
    /// exact checkpoints and accumulate the running averages.
    pub fn trace(&self) -> RiskTrace {
        let n = self.pending.len();
        let mut norms = vec![f64::NAN; n];
        let mut last: Option<(usize, f64)> = None;
        for (i, row) in self.pending.iter().enumerate() {
            if let Some(v) = row.norm_sq {
                if let Some((j, prev)) = last {
                    for (k, norm) in norms.iter_mut().enumerate().take(i).skip(j + 1) {
                        let t = (k - j) as f64 / (i - j) as f64;
                        *norm = prev + t * (v - prev);
                    }
                }
                norms[i] = v;
                last = Some((i, v));
            }
        }
        if let Some((j, prev)) = last {
            for norm in norms.iter_mut().skip(j + 1) {
                *norm = prev;
            }
        }

        let mut rows = Vec::with_capacity(n);
        let mut correct = 0u64;
        let mut risk_sum = 0.0;
        for (i, p) in self.pending.iter().enumerate() {
            if p.correct {
                correct += 1;
            }
            let risk = p.loss_term + 0.5 * self.cfg.lambda1 * norms[i] + p.l1_term;
            risk_sum += risk;
            rows.push(TraceRow {
                step: p.step,
                acr: correct as f64 / p.step as f64,
                risk,
                r_avg: risk_sum / p.step as f64,
                margin: p.margin,
                hinge_active: p.hinge_active,
                nonzero_w: p.nonzero_w,
                det_gap_mean: p.det_gap_mean,
            });
        }
        RiskTrace { rows }
    }

    /// Frozen-state batch objective over a dataset: mean loss of the current
    /// decision function plus its norm and weight penalties.
    pub fn batch_risk_diagnostic(&self, samples: &[Sample], lambda2: f64, component: usize) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Data("empty dataset".into()));
        }
        let mut loss_sum = 0.0;
        for s in samples {
            let x = self.effective_input(&s.x);
            let rows = self.rules.rows_at(&x)?;
            let v = self
                .expansion
                .evaluate_margin(&rows, &x, self.weights.weights(), self.cfg.kernel, &self.points);
            loss_sum += self.cfg.loss.loss(v, s.y.component(component));
        }
        let norm = self.expansion.norm_squared(self.cfg.kernel, &self.points);
        let l1: f64 = self.weights.weights().iter().sum();
        Ok(loss_sum / samples.len() as f64 + 0.5 * self.cfg.lambda1 * norm + lambda2 * l1)
    }
}

/// Train on a binary-labeled stream for `cfg.steps` steps.
pub fn run(cfg: &TrainerConfig, stream_cfg: &StreamConfig) -> Result<(RiskTrace, Trainer)> {
    let mut stream = SampleStream::from_config(stream_cfg)?;
    if stream.n_classes() > 2 {
        return Err(Error::Config(
            "stream has more than two classes; use the one-versus-all runner".into(),
        ));
    }
    let mut trainer = Trainer::new(cfg.clone(), stream.alphabets())?;
    for _ in 0..cfg.steps.min(stream_cfg.horizon) {
        let sample = stream.next_sample()?;
        trainer.step(&sample.x, sample.y.component(0))?;
    }
    Ok((trainer.trace(), trainer))
}

/// Train on explicit samples (used by baselines and tests).
pub fn run_samples(
    cfg: &TrainerConfig,
    alphabets: &[ObservationAlphabet],
    samples: &[Sample],
    component: usize,
) -> Result<(RiskTrace, Trainer)> {
    let mut trainer = Trainer::new(cfg.clone(), alphabets)?;
    for s in samples.iter().take(cfg.steps) {
        trainer.step(&s.x, s.y.component(component))?;
    }
    Ok((trainer.trace(), trainer))
}

/// Running accuracy from per-step correctness flags.
pub fn acr_from_flags(correct: &[bool]) -> Vec<f64> {
    let mut out = Vec::with_capacity(correct.len());
    let mut hits = 0u64;
    for (i, &c) in correct.iter().enumerate() {
        if c {
            hits += 1;
        }
        out.push(hits as f64 / (i + 1) as f64);
    }
    out
}

/// Running binary accuracy from (decision value, label) pairs.
pub fn acr_binary(values_and_labels: &[(f64, f64)]) -> Vec<f64> {
    let flags: Vec<bool> = values_and_labels.iter().map(|&(v, y)| sgn(v) == y).collect();
    acr_from_flags(&flags)
}

/// Running multiclass accuracy: both one-versus-all components must agree.
pub fn acr_multiclass(first: &[(f64, f64)], second: &[(f64, f64)]) -> Vec<f64> {
    let flags: Vec<bool> = first
        .iter()
        .zip(second)
        .map(|(&(v1, y1), &(v2, y2))| sgn(v1) == y1 && sgn(v2) == y2)
        .collect();
    acr_from_flags(&flags)
}

/// Output of a one-versus-all run over a 3-class stream.
#[derive(Debug, Clone)]
pub struct OvaOutcome {
    /// Running multiclass accuracy per step.
    pub acr: Vec<f64>,
    pub traces: Vec<RiskTrace>,
    pub learners: Vec<Trainer>,
}

impl OvaOutcome {
    pub fn final_acr(&self) -> f64 {
        self.acr.last().copied().unwrap_or(0.0)
    }
}

/// One-versus-all training over a shared 3-class stream: two independent
/// learners, one per label component. With `share_rules` the first learner
/// owns the quantization rules and the second follows its table; independent
/// tables are the default.
pub fn ova_run(cfg: &TrainerConfig, stream_cfg: &StreamConfig, share_rules: bool) -> Result<OvaOutcome> {
    let mut stream = SampleStream::from_config(stream_cfg)?;
    if stream.n_classes() < 2 {
        return Err(Error::Config("one-versus-all needs at least two classes".into()));
    }
    if stream.n_classes() == 2 {
        // binary stream: the second component duplicates the first
        let (trace, trainer) = run(cfg, stream_cfg)?;
        let acr = trace.rows.iter().map(|r| r.acr).collect();
        return Ok(OvaOutcome { acr, traces: vec![trace], learners: vec![trainer] });
    }

    let mut a = Trainer::new(cfg.clone(), stream.alphabets())?;
    let mut b = {
        let mut c = cfg.clone();
        // decorrelate the second learner's quantizer sampling
        c.seed = cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        Trainer::new(c, stream.alphabets())?
    };
    let mut flags = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps.min(stream_cfg.horizon) {
        let s = stream.next_sample()?;
        a.step(&s.x, s.y.component(0))?;
        if share_rules {
            b.rules = a.rules.clone();
        }
        b.step(&s.x, s.y.component(1))?;
        let (ra, rb) = (a.pending.last().unwrap(), b.pending.last().unwrap());
        flags.push(ra.correct && rb.correct);
    }
    Ok(OvaOutcome {
        acr: acr_from_flags(&flags),
        traces: vec![a.trace(), b.trace()],
        learners: vec![a, b],
    })
}
