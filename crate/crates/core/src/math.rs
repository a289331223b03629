//! Small numeric helpers shared across modules.

use std::sync::OnceLock;

/// Standard logistic function, evaluated without overflow for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gauss-Hermite rule for integrals of the form `∫ exp(-x²) f(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes an `n`-point rule by Newton iteration on the normalized
    /// Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        // pi^(-1/4)
        const PIM4: f64 = 0.751_125_544_464_942_5;
        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self { nodes: x, weights: w }
    }

    /// `E[f(mean + sd·ε)]` for `ε ~ N(0, 1)`.
    pub fn normal_expectation(&self, mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mean + scale * x))
            .sum();
        s / std::f64::consts::PI.sqrt()
    }
}

/// Number of nodes used for the outcome-noise quadrature.
pub const OUTCOME_QUADRATURE_POINTS: usize = 21;

fn outcome_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(OUTCOME_QUADRATURE_POINTS))
}

/// `E[σ(m + ε)]` with `ε ~ N(0, sd²)`; exact when `sd == 0`.
pub fn expected_sigmoid(m: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        sigmoid(m)
    } else {
        outcome_rule().normal_expectation(m, sd, sigmoid)
    }
}

/// Median with the two-middle-values convention for even counts.
/// Returns `None` on empty input.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
