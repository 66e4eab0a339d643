use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scenario::{Behavior, BellExpression, Event, Scenario};

/// Two-qubit realization: the state `cos θ |00⟩ + sin θ |11⟩` measured with
/// reflections `[[cos 2α, sin 2α], [sin 2α, −cos 2α]]` in the X–Z plane.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitModel {
    theta: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

/// Maps an angle into `[−π, π)`; values already in `[−π, π]` are kept.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let t = libm::fmod(a + PI, 2.0 * PI);
    if t < 0.0 {
        t + PI
    } else {
        t - PI
    }
}

impl QubitModel {
    pub fn new(theta: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                actual: beta.len(),
            });
        }
        Scenario::new(u16::try_from(alpha.len()).unwrap_or(u16::MAX))?;
        if let Some(bad) = core::iter::once(theta)
            .chain(alpha.iter().copied())
            .chain(beta.iter().copied())
            .find(|a| !a.is_finite())
        {
            return Err(Error::NonFiniteCoefficient(bad));
        }
        Ok(Self {
            theta: wrap_angle(theta),
            alpha: alpha.into_iter().map(wrap_angle).collect(),
            beta: beta.into_iter().map(wrap_angle).collect(),
        })
    }

    /// Parameter vector layout `[θ, α_1..α_n, β_1..β_n]`.
    pub fn from_params(params: &[f64]) -> Result<Self> {
        if params.len() % 2 != 1 {
            return Err(Error::DimensionMismatch {
                expected: params.len() + 1,
                actual: params.len(),
            });
        }
        let n = (params.len() - 1) / 2;
        Self::new(params[0], params[1..=n].to_vec(), params[n + 1..].to_vec())
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(1 + 2 * self.alpha.len());
        p.push(self.theta);
        p.extend_from_slice(&self.alpha);
        p.extend_from_slice(&self.beta);
        p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.alpha.len() as u16).expect("validated on construction")
    }

    /// `p(ij|xy)` in closed form.
    pub fn probability(&self, e: Event) -> f64 {
        let s = amplitude(
            self.theta,
            self.alpha[usize::from(e.x) - 1],
            self.beta[usize::from(e.y) - 1],
            e.i,
            e.j,
        );
        s * s
    }
}

/// Eigenvector of the reflection at angle `angle` for outcome `o` and its
/// derivative with respect to `angle`.
fn eigvec(angle: f64, o: u8) -> ([f64; 2], [f64; 2]) {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    if o == 0 {
        ([c, s], [-s, c])
    } else {
        ([-s, c], [-c, -s])
    }
}

/// `⟨a_i ⊗ b_j | ψ(θ)⟩`.
fn amplitude(theta: f64, alpha: f64, beta: f64, i: u8, j: u8) -> f64 {
    let (a, _) = eigvec(alpha, i);
    let (b, _) = eigvec(beta, j);
    libm::cos(theta) * a[0] * b[0] + libm::sin(theta) * a[1] * b[1]
}

/// `p(ij|xy)` and its partial derivatives with respect to `θ`, `α_x`, `β_y`.
pub fn probability_with_gradient(
    theta: f64,
    alpha: f64,
    beta: f64,
    i: u8,
    j: u8,
) -> (f64, f64, f64, f64) {
    let (ct, st) = (libm::cos(theta), libm::sin(theta));
    let (a, da) = eigvec(alpha, i);
    let (b, db) = eigvec(beta, j);
    let s = ct * a[0] * b[0] + st * a[1] * b[1];
    let ds_t = -st * a[0] * b[0] + ct * a[1] * b[1];
    let ds_a = ct * da[0] * b[0] + st * da[1] * b[1];
    let ds_b = ct * a[0] * db[0] + st * a[1] * db[1];
    (s * s, 2.0 * s * ds_t, 2.0 * s * ds_a, 2.0 * s * ds_b)
}

/// Value of `expr` at the parameter vector and its gradient.
pub fn expression_with_gradient(expr: &BellExpression, params: &[f64]) -> (f64, Vec<f64>) {
    let n = (params.len() - 1) / 2;
    let mut grad = vec![0.0; params.len()];
    let mut value = 0.0;
    for (e, c) in expr.terms() {
        let (xi, yi) = (usize::from(e.x), usize::from(e.y));
        let (p, dt, da, db) =
            probability_with_gradient(params[0], params[xi], params[n + yi], e.i, e.j);
        value += c * p;
        grad[0] += c * dt;
        grad[xi] += c * da;
        grad[n + yi] += c * db;
    }
    (value, grad)
}

/// Born-rule behavior of the model (closed form).
pub fn behavior_of_model(m: &QubitModel) -> Behavior {
    Behavior::from_fn(m.scenario(), |e| m.probability(e))
        .expect("Born probabilities are normalized")
}

type Mat4 = [[f64; 4]; 4];

fn projector(angle: f64, o: u8) -> [[f64; 2]; 2] {
    let sign = if o == 0 { 1.0 } else { -1.0 };
    let (c2, s2) = (libm::cos(2.0 * angle), libm::sin(2.0 * angle));
    [
        [(1.0 + sign * c2) / 2.0, sign * s2 / 2.0],
        [sign * s2 / 2.0, (1.0 - sign * c2) / 2.0],
    ]
}

fn kron(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = a[r / 2][c / 2] * b[r % 2][c % 2];
        }
    }
    out
}

/// `Tr[(I + (−1)^i A_x)/2 ⊗ (I + (−1)^j B_y)/2 · ρ]` with the density matrix
/// built explicitly. Slower than [`QubitModel::probability`]; kept as an
/// independent route.
pub fn trace_probability(m: &QubitModel, e: Event) -> f64 {
    let psi = [libm::cos(m.theta), 0.0, 0.0, libm::sin(m.theta)];
    let mut rho: Mat4 = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            rho[r][c] = psi[r] * psi[c];
        }
    }
    let op = kron(
        &projector(m.alpha[usize::from(e.x) - 1], e.i),
        &projector(m.beta[usize::from(e.y) - 1], e.j),
    );
    (0..4)
        .map(|r| (0..4).map(|k| op[r][k] * rho[k][r]).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_4;

    #[test]
    fn product_state_all_zero() {
        let m = QubitModel::new(0.0, vec![0.0; 2], vec![0.0; 2]).unwrap();
        let b = behavior_of_model(&m);
        for x in 1..=2 {
            for y in 1..=2 {
                assert!((b.prob(0, 0, x, y) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn maximally_entangled_matching_measurements() {
        let m = QubitModel::new(FRAC_PI_4, vec![0.0, 0.3], vec![0.0, -0.2]).unwrap();
        let b = behavior_of_model(&m);
        assert!((b.prob(0, 0, 1, 1) - 0.5).abs() < 1e-15);
        assert!((b.prob(1, 1, 1, 1) - 0.5).abs() < 1e-15);
        assert!(b.prob(0, 1, 1, 1).abs() < 1e-15);
        assert!(b.prob(1, 0, 1, 1).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_trace() {
        let m = QubitModel::new(0.7968, vec![-0.1996, 0.5901], vec![0.1996, -0.5901]).unwrap();
        for e in m.scenario().events() {
            assert!((m.probability(e) - trace_probability(&m, e)).abs() < 1e-14);
        }
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(1.0), 1.0);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
        let m = QubitModel::new(7.0, vec![0.0, 10.0], vec![-7.0, 0.0]).unwrap();
        assert!(m.params().iter().all(|a| (-PI..=PI).contains(a)));
    }

    #[test]
    fn invalid_models() {
        assert!(QubitModel::new(0.0, vec![0.0; 2], vec![0.0; 3]).is_err());
        assert!(QubitModel::new(0.0, vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(QubitModel::new(f64::NAN, vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(QubitModel::from_params(&[0.0; 4]).is_err());
    }
}
