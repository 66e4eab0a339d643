//! Oracles shared by the integration tests. Nothing here calls into the
//! library's evaluation paths.

#![allow(dead_code)]

use nlwb_core::{BellExpression, Event, QubitModel};

/// The realigned n=4 condition as printed, as `(coeff, i, j, x, y)`, with
/// the Hardy term appended.
pub const REALIGNED_N4_LISTING: [(f64, u8, u8, u16, u16); 26] = [
    (1.0, 0, 0, 1, 2),
    (1.0, 1, 1, 2, 3),
    (1.0, 1, 1, 1, 3),
    (2.0, 1, 0, 3, 3),
    (1.0, 1, 1, 2, 2),
    (1.0, 0, 0, 3, 1),
    (1.0, 1, 0, 2, 4),
    (1.0, 0, 0, 4, 1),
    (1.0, 1, 1, 3, 2),
    (2.0, 0, 1, 3, 3),
    (1.0, 0, 0, 1, 4),
    (1.0, 1, 1, 1, 4),
    (1.0, 1, 1, 2, 1),
    (1.0, 0, 0, 2, 1),
    (1.0, 0, 0, 2, 3),
    (1.0, 1, 1, 3, 1),
    (1.0, 0, 0, 2, 2),
    (1.0, 0, 1, 2, 4),
    (1.0, 1, 1, 4, 1),
    (1.0, 1, 1, 1, 1),
    (1.0, 1, 1, 1, 2),
    (1.0, 0, 0, 1, 3),
    (1.0, 0, 0, 3, 2),
    (1.0, 0, 1, 4, 2),
    (1.0, 1, 0, 4, 2),
    (1.0, 0, 0, 1, 1),
];

/// `(n, θ, α, β, P(00|A1B1))`.
pub type Table1Row = (u16, f64, Vec<f64>, Vec<f64>, f64);

/// Published optimized qubit parameters.
pub fn table1_rows() -> Vec<Table1Row> {
    vec![
        (
            2,
            0.7968,
            vec![-0.1996, 0.5901],
            vec![0.1996, -0.5901],
            0.4140,
        ),
        (
            4,
            1.0793,
            vec![-1.5309, 1.3084, 2.1179, 0.9181],
            vec![-1.6107, -1.3084, -2.1179, -0.9181],
            0.7734,
        ),
    ]
}

pub fn table1_model(n: u16) -> QubitModel {
    let (_, t, a, b, _) = table1_rows()
        .into_iter()
        .find(|r| r.0 == n)
        .expect("row exists");
    QubitModel::new(t, a, b).expect("valid angles")
}

/// Value of `expr` on a deterministic strategy by counting matched terms.
pub fn strategy_value(expr: &BellExpression, alice: &[u8], bob: &[u8]) -> f64 {
    expr.terms()
        .filter(|(e, _)| alice[usize::from(e.x - 1)] == e.i && bob[usize::from(e.y - 1)] == e.j)
        .map(|(_, c)| c)
        .sum()
}

/// Every outcome assignment for `n` settings, in lexicographic order.
pub fn all_assignments(n: u16) -> Vec<Vec<u8>> {
    (0..1u32 << n)
        .map(|code| (0..n).map(|k| ((code >> (n - 1 - k)) & 1) as u8).collect())
        .collect()
}

type M2 = [[f64; 2]; 2];
type M4 = [[f64; 4]; 4];

fn projector(angle: f64, outcome: u8) -> M2 {
    let (c, s) = (angle.cos(), angle.sin());
    let p0 = [[c * c, c * s], [c * s, s * s]];
    if outcome == 0 {
        p0
    } else {
        [[1.0 - p0[0][0], -p0[0][1]], [-p0[1][0], 1.0 - p0[1][1]]]
    }
}

fn kron(a: &M2, b: &M2) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = a[r / 2][c / 2] * b[r % 2][c % 2];
        }
    }
    out
}

/// `tr(ρ · Π_i^x ⊗ Π_j^y)` with `ρ = |ψ⟩⟨ψ|`, `ψ = cosθ|00⟩ + sinθ|11⟩`.
pub fn born_probability(theta: f64, alpha: f64, beta: f64, i: u8, j: u8) -> f64 {
    let psi = [theta.cos(), 0.0, 0.0, theta.sin()];
    let mut rho = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            rho[r][c] = psi[r] * psi[c];
        }
    }
    let op = kron(&projector(alpha, i), &projector(beta, j));
    let mut tr = 0.0;
    for r in 0..4 {
        for k in 0..4 {
            tr += rho[r][k] * op[k][r];
        }
    }
    tr
}

pub fn model_born(m: &QubitModel, e: Event) -> f64 {
    born_probability(
        m.theta(),
        m.alpha()[usize::from(e.x - 1)],
        m.beta()[usize::from(e.y - 1)],
        e.i,
        e.j,
    )
}
