//! Convex losses and their sub-gradients with respect to the decision value.

use serde::{Deserialize, Serialize};

/// Loss applied to the decision value at the fusion center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossKind {
    /// `max{0, rho - y * value}`; hinge loss when `rho = 1`.
    SoftMargin { rho: f64 },
    /// `log(1 + exp(-y * value))`.
    Logistic,
}

impl LossKind {
    pub fn hinge() -> Self {
        LossKind::SoftMargin { rho: 1.0 }
    }

    pub fn loss(&self, value: f64, y: f64) -> f64 {
        match self {
            LossKind::SoftMargin { rho } => (rho - y * value).max(0.0),
            LossKind::Logistic => (-y * value).exp().ln_1p(),
        }
    }

    /// Sub-gradient with respect to the decision value. At the soft-margin
    /// kink `y * value = rho` exactly, returns `-y` (the `<= rho` convention).
    pub fn subgradient(&self, value: f64, y: f64) -> f64 {
        match self {
            LossKind::SoftMargin { rho } => {
                if y * value <= *rho {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Logistic => -y / (1.0 + (y * value).exp()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_margin_values() {
        let hinge = LossKind::hinge();
        assert_eq!(hinge.loss(1.0, 1.0), 0.0);
        assert_eq!(hinge.loss(0.5, 1.0), 0.5);
        assert_eq!(LossKind::Logistic.loss(0.0, 1.0), 2.0f64.ln());
    }

    #[test]
    fn subgradient_values() {
        let hinge = LossKind::hinge();
        assert_eq!(hinge.subgradient(0.5, 1.0), -1.0);
        assert_eq!(hinge.subgradient(-2.0, -1.0), 0.0);
        // kink convention: y*value == rho returns -y
        assert_eq!(hinge.subgradient(1.0, 1.0), -1.0);
        assert_eq!(LossKind::Logistic.subgradient(0.0, 1.0), -0.5);
    }

    #[test]
    fn logistic_subgradient_matches_central_differences() {
        let eps = 1e-6;
        for &y in &[-1.0, 1.0] {
            for i in -20..=20 {
                let v = i as f64 * 0.25;
                let fd = (LossKind::Logistic.loss(v + eps, y) - LossKind::Logistic.loss(v - eps, y))
                    / (2.0 * eps);
                assert!((fd - LossKind::Logistic.subgradient(v, y)).abs() < 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn lipschitz_with_constant_one(
            a in -50.0f64..50.0,
            b in -50.0f64..50.0,
            y in prop::sample::select(vec![-1.0f64, 1.0]),
            kind in prop::sample::select(vec![LossKind::hinge(), LossKind::SoftMargin { rho: 0.3 }, LossKind::Logistic]),
        ) {
            prop_assert!((kind.loss(a, y) - kind.loss(b, y)).abs() <= (a - b).abs() + 1e-12);
        }

        #[test]
        fn subgradient_inequality(
            a in -50.0f64..50.0,
            b in -50.0f64..50.0,
            y in prop::sample::select(vec![-1.0f64, 1.0]),
            kind in prop::sample::select(vec![LossKind::hinge(), LossKind::SoftMargin { rho: 2.0 }, LossKind::Logistic]),
        ) {
            let g = kind.subgradient(a, y);
            prop_assert!(kind.loss(b, y) >= kind.loss(a, y) + g * (b - a) - 1e-9);
        }
    }
}
