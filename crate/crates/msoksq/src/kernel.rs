//! Weighted kernels over quantization vectors and marginalized kernels over
//! quantizer distributions, plus a brute-force enumeration oracle.
//!
//! Cross-time weights enter as `w_{m,i} * w_{m,n}` per sensor. The count kind
//! carries a per-sensor observation-equality indicator in its marginalized
//! form; the prediction path uses the plain count kernel without it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base kernel family over quantization vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// Weighted component-agreement count.
    Count,
    /// Weighted product of quantization point values.
    Linear,
}

fn check_len(tag: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Config(format!("{tag}: length {got} does not match sensor count {want}")));
    }
    Ok(())
}

/// `sum_m w_i[m] * w_n[m] * 1(q_i[m] == q_n[m])`.
pub fn weighted_count_kernel(q_i: &[f64], q_n: &[f64], w_i: &[f64], w_n: &[f64]) -> Result<f64> {
    let m = q_i.len();
    check_len("q_n", q_n.len(), m)?;
    check_len("w_i", w_i.len(), m)?;
    check_len("w_n", w_n.len(), m)?;
    let mut acc = 0.0;
    for i in 0..m {
        if q_i[i] == q_n[i] {
            acc += w_i[i] * w_n[i];
        }
    }
    Ok(acc)
}

/// `sum_m w_i[m] * w_n[m] * q_i[m] * q_n[m]`.
pub fn weighted_linear_kernel(q_i: &[f64], q_n: &[f64], w_i: &[f64], w_n: &[f64]) -> Result<f64> {
    let m = q_i.len();
    check_len("q_n", q_n.len(), m)?;
    check_len("w_i", w_i.len(), m)?;
    check_len("w_n", w_n.len(), m)?;
    Ok((0..m).map(|i| w_i[i] * w_n[i] * q_i[i] * q_n[i]).sum())
}

/// Inner product of two probability rows over the same quantization alphabet.
pub fn row_dot(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * b).sum()
}

/// Conditional mean of the quantization points under a probability row.
pub fn row_mean(p: &[f64], points: &[f64]) -> f64 {
    p.iter().zip(points).map(|(a, q)| a * q).sum()
}

/// Marginalized weighted count kernel between two observation vectors:
/// `sum_m w_i[m] w_n[m] 1(x_i[m] == x_n[m]) sum_q P_i(q|x_i[m]) P_n(q|x_n[m])`.
///
/// `rows_i[m]` / `rows_n[m]` are the rule rows at the observed values.
pub fn marginalized_count_kernel<A, B>(
    rows_i: &[A],
    rows_n: &[B],
    x_i: &[f64],
    x_n: &[f64],
    w_i: &[f64],
    w_n: &[f64],
) -> Result<f64>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    let m = x_i.len();
    check_len("rows_i", rows_i.len(), m)?;
    check_len("rows_n", rows_n.len(), m)?;
    check_len("x_n", x_n.len(), m)?;
    check_len("w_i", w_i.len(), m)?;
    check_len("w_n", w_n.len(), m)?;
    let mut acc = 0.0;
    for s in 0..m {
        if x_i[s] == x_n[s] {
            let (a, b) = (rows_i[s].as_ref(), rows_n[s].as_ref());
            if a.len() != b.len() {
                return Err(Error::Config(format!(
                    "sensor {s}: row lengths {} and {} differ",
                    a.len(),
                    b.len()
                )));
            }
            acc += w_i[s] * w_n[s] * row_dot(a, b);
        }
    }
    Ok(acc)
}

/// Marginalized weighted linear kernel: product of per-sensor conditional
/// means of the quantization points.
pub fn marginalized_linear_kernel<A, B>(
    rows_i: &[A],
    rows_n: &[B],
    w_i: &[f64],
    w_n: &[f64],
    points: &[Vec<f64>],
) -> Result<f64>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    let m = rows_i.len();
    check_len("rows_n", rows_n.len(), m)?;
    check_len("w_i", w_i.len(), m)?;
    check_len("w_n", w_n.len(), m)?;
    check_len("points", points.len(), m)?;
    let mut acc = 0.0;
    for s in 0..m {
        let (a, b) = (rows_i[s].as_ref(), rows_n[s].as_ref());
        if a.len() != points[s].len() || b.len() != points[s].len() {
            return Err(Error::Config(format!("sensor {s}: row length does not match alphabet")));
        }
        acc += w_i[s] * w_n[s] * row_mean(a, &points[s]) * row_mean(b, &points[s]);
    }
    Ok(acc)
}

/// Default joint-enumeration cap for the brute-force oracle.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 16;

/// Brute-force marginalized kernel: explicit expectation of the base kernel
/// over the joint quantizer distributions (product rules per sensor).
///
/// For the count kind the summand kernel carries the per-sensor
/// `1(x_i[m] == x_n[m])` factor unless `include_x_indicator` is false, in
/// which case the plain count kernel is used (the prediction-path variant).
/// Small instances only; guarded by `cap` on the joint alphabet size.
#[allow(clippy::too_many_arguments)]
pub fn marginalized_kernel_bruteforce<A, B>(
    rows_i: &[A],
    rows_n: &[B],
    x_i: &[f64],
    x_n: &[f64],
    w_i: &[f64],
    w_n: &[f64],
    points: &[Vec<f64>],
    kind: KernelKind,
    include_x_indicator: bool,
    cap: usize,
) -> Result<f64>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    let m = x_i.len();
    check_len("rows_i", rows_i.len(), m)?;
    check_len("rows_n", rows_n.len(), m)?;
    check_len("points", points.len(), m)?;
    let sizes: Vec<usize> = points.iter().map(|p| p.len()).collect();
    let joint: usize = sizes.iter().product();
    if joint > cap {
        return Err(Error::EnumerationOverflow { size: joint, cap });
    }

    let mut acc = 0.0;
    for a in JointIter::new(&sizes) {
        // P_i(q_a | x_i) under conditional independence
        let mut p_a = 1.0;
        for s in 0..m {
            p_a *= rows_i[s].as_ref()[a[s]];
        }
        if p_a == 0.0 {
            continue;
        }
        for b in JointIter::new(&sizes) {
            let mut p_b = 1.0;
            for s in 0..m {
                p_b *= rows_n[s].as_ref()[b[s]];
            }
            if p_b == 0.0 {
                continue;
            }
            let mut k = 0.0;
            for s in 0..m {
                let factor = match kind {
                    KernelKind::Count => {
                        let x_match = !include_x_indicator || x_i[s] == x_n[s];
                        if a[s] == b[s] && x_match {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    KernelKind::Linear => points[s][a[s]] * points[s][b[s]],
                };
                k += w_i[s] * w_n[s] * factor;
            }
            acc += p_a * p_b * k;
        }
    }
    Ok(acc)
}

/// Iterator over index tuples of a product space with the given per-axis sizes.
pub(crate) struct JointIter {
    sizes: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl JointIter {
    pub(crate) fn new(sizes: &[usize]) -> Self {
        Self {
            sizes: sizes.to_vec(),
            current: vec![0; sizes.len()],
            done: sizes.iter().any(|&s| s == 0),
        }
    }
}

impl Iterator for JointIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // odometer increment
        let mut i = 0;
        loop {
            if i == self.sizes.len() {
                self.done = true;
                break;
            }
            self.current[i] += 1;
            if self.current[i] < self.sizes[i] {
                break;
            }
            self.current[i] = 0;
            i += 1;
        }
        Some(out)
    }
}
