//! Dense primal-dual interior-point solver for moment relaxations.
//!
//! The moment problem is the LMI
//!
//! ```text
//!   maximize  bᵀz + const   subject to   Z = F₀ + Σ z_f F_f ⪰ 0
//! ```
//!
//! whose free variables `z` are the moment classes left after pinning the
//! identity moment to 1, optionally merging party-swap orbits, and
//! eliminating the equality constraints by Gauss–Jordan substitution. Its
//! dual is `minimize ⟨F₀, X⟩ s.t. ⟨F_f, X⟩ = −b_f, X ⪰ 0`. Iterates follow
//! the HKM search direction with Mehrotra predictor-corrector steps from an
//! infeasible start.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, NotPositiveDefinite};
use crate::npa::program::MomentProgram;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConfig {
    pub max_iterations: usize,
    /// Relative duality gap `|p − d| / (1 + |p| + |d|)` at termination.
    pub gap_tol: f64,
    /// Relative primal and dual residual norms at termination.
    pub feasibility_tol: f64,
    /// Fraction of the distance to the PSD boundary taken per step.
    pub step_fraction: f64,
    /// Merge moments related by exchanging Alice and Bob when the program
    /// is invariant under that exchange.
    pub exploit_symmetry: bool,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gap_tol: 1e-7,
            feasibility_tol: 1e-8,
            step_fraction: 0.95,
            exploit_symmetry: true,
        }
    }
}

impl SdpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if [self.gap_tol, self.feasibility_tol]
            .iter()
            .any(|t| t.is_nan() || *t <= 0.0)
        {
            return bad("tolerances must be positive");
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return bad("step_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl SdpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIterations => "max_iterations",
            SdpStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Objective at the returned moment assignment; NaN when infeasible.
    pub objective_value: f64,
    /// Objective of the dual iterate, an upper bound on the relaxation
    /// whenever that iterate is feasible; NaN when infeasible.
    pub certified_bound: f64,
    pub status: SdpStatus,
    /// One value per moment class of the program.
    pub moments: Vec<f64>,
    /// Row-major, `size × size`.
    pub moment_matrix: Vec<f64>,
    pub size: usize,
    pub min_eigenvalue: f64,
    /// `expression − target` for each equality.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub duality_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// Free variables in the final LMI.
    pub variables: usize,
}

/// A symmetric coefficient matrix as full-cell entries, grouped by column
/// for the Schur-complement kernel.
#[derive(Debug, Clone, Default)]
struct SparseSym {
    /// `(cell, value)` with `cell = row * size + col`, both triangles.
    entries: Vec<(usize, f64)>,
    /// `(col, start, end)` ranges into `by_col`.
    cols: Vec<(usize, usize, usize)>,
    /// `(row, value)` sorted by column.
    by_col: Vec<(usize, f64)>,
}

impl SparseSym {
    fn new(size: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
        entries.retain(|e| e.1 != 0.0);
        let mut by: Vec<(usize, usize, f64)> = entries
            .iter()
            .map(|&(c, v)| (c % size, c / size, v))
            .collect();
        by.sort_by_key(|e| (e.0, e.1));
        let mut cols = Vec::new();
        let mut by_col = Vec::with_capacity(by.len());
        let mut k = 0;
        while k < by.len() {
            let col = by[k].0;
            let start = by_col.len();
            while k < by.len() && by[k].0 == col {
                by_col.push((by[k].1, by[k].2));
                k += 1;
            }
            cols.push((col, start, by_col.len()));
        }
        Self {
            entries,
            cols,
            by_col,
        }
    }

    fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * w[c]).sum()
    }

    fn add_to(&self, dense: &mut [f64], scale: f64) {
        for &(c, v) in &self.entries {
            dense[c] += scale * v;
        }
    }
}

/// `(pivot var, rhs, [(free index, coeff)])`: `y_p = rhs − Σ coeff·z`.
type Pivot = (usize, f64, Vec<(usize, f64)>);

/// The LMI after elimination, plus what is needed to map back to moments.
struct Lmi {
    size: usize,
    f0: Vec<f64>,
    fs: Vec<SparseSym>,
    b: Vec<f64>,
    constant: f64,
    var_of_moment: Vec<usize>,
    free_vars: Vec<usize>,
    pivots: Vec<Pivot>,
    n_vars: usize,
}

impl Lmi {
    /// Returns `None` when the equalities are inconsistent.
    fn build(program: &MomentProgram, cfg: &SdpConfig) -> Option<Self> {
        let size = program.size();
        let n_moments = program.moments().len();

        let mut var_of_moment = vec![usize::MAX; n_moments];
        let mut n_vars = 0;
        let perm = (cfg.exploit_symmetry && program.is_party_symmetric())
            .then(|| program.party_swap_permutation());
        for k in 0..n_moments {
            if var_of_moment[k] == usize::MAX {
                var_of_moment[k] = n_vars;
                if let Some(p) = &perm {
                    var_of_moment[p[k]] = n_vars;
                }
                n_vars += 1;
            }
        }
        debug_assert_eq!(var_of_moment[0], 0);

        let mut cells_of_var: Vec<Vec<usize>> = vec![Vec::new(); n_vars];
        for r in 0..size {
            for c in 0..size {
                cells_of_var[var_of_moment[program.cell(r, c)]].push(r * size + c);
            }
        }

        let to_vars = |coeffs: &[(usize, f64)]| {
            let mut dense = vec![0.0; n_vars];
            for &(k, c) in coeffs {
                dense[var_of_moment[k]] += c;
            }
            dense
        };
        let mut objective = to_vars(&program.objective().coeffs);
        let mut constant = program.objective().constant + objective[0];
        objective[0] = 0.0;

        let mut rows: Vec<(Vec<f64>, f64)> = program
            .equalities()
            .iter()
            .map(|(f, t)| {
                let mut a = to_vars(&f.coeffs);
                let rhs = t - f.constant - a[0];
                a[0] = 0.0;
                (a, rhs)
            })
            .collect();
        // Face reduction: M v = 0 for every forced null vector.
        for v in program.null_vectors() {
            for r in 0..size {
                let mut a = vec![0.0; n_vars];
                for (w, &vw) in v.iter().enumerate().filter(|(_, vw)| **vw != 0.0) {
                    a[var_of_moment[program.cell(r, w)]] += vw;
                }
                let rhs = -a[0];
                a[0] = 0.0;
                rows.push((a, rhs));
            }
        }

        // Gauss–Jordan: each surviving row solves for one pivot variable.
        let mut pivot_rows: Vec<(usize, usize)> = Vec::new();
        let mut is_pivot = vec![false; n_vars];
        for r in 0..rows.len() {
            let scale = rows[r].0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale <= 1e-12 {
                if rows[r].1.abs() > 1e-9 {
                    return None;
                }
                continue;
            }
            let p = (1..n_vars)
                .filter(|&v| !is_pivot[v] && rows[r].0[v].abs() >= 0.5 * scale)
                .min_by_key(|&v| cells_of_var[v].len())
                .expect("a coefficient attains the row scale");
            let piv = rows[r].0[p];
            rows[r].0.iter_mut().for_each(|v| *v /= piv);
            rows[r].1 /= piv;
            let (row, rhs) = rows[r].clone();
            for (s, other) in rows.iter_mut().enumerate() {
                if s != r && other.0[p] != 0.0 {
                    let f = other.0[p];
                    for (o, v) in other.0.iter_mut().zip(&row) {
                        *o -= f * v;
                    }
                    other.1 -= f * rhs;
                }
            }
            is_pivot[p] = true;
            pivot_rows.push((p, r));
        }

        let free_vars: Vec<usize> = (1..n_vars).filter(|&v| !is_pivot[v]).collect();
        let mut free_index = vec![usize::MAX; n_vars];
        for (i, &v) in free_vars.iter().enumerate() {
            free_index[v] = i;
        }

        let mut f0 = vec![0.0; size * size];
        for &c in &cells_of_var[0] {
            f0[c] = 1.0;
        }
        let mut entries: Vec<Vec<(usize, f64)>> = free_vars
            .iter()
            .map(|&v| cells_of_var[v].iter().map(|&c| (c, 1.0)).collect())
            .collect();
        let mut b: Vec<f64> = free_vars.iter().map(|&v| objective[v]).collect();
        let mut pivots = Vec::new();
        for &(p, r) in &pivot_rows {
            let (row, rhs) = &rows[r];
            for &c in &cells_of_var[p] {
                f0[c] += rhs;
            }
            constant += objective[p] * rhs;
            let mut deps = Vec::new();
            for (v, &a) in row.iter().enumerate() {
                if v == p || a == 0.0 || is_pivot[v] {
                    continue;
                }
                let fi = free_index[v];
                deps.push((fi, a));
                entries[fi].extend(cells_of_var[p].iter().map(|&c| (c, -a)));
                b[fi] -= objective[p] * a;
            }
            pivots.push((p, *rhs, deps));
        }
        let (size, f0, entries) = if program.null_vectors().is_empty() {
            (size, f0, entries)
        } else {
            let q = complement_basis(program.null_vectors(), size);
            let k = q.len();
            let project = |dense: &[f64]| -> Vec<f64> {
                let mut out = vec![0.0; k * k];
                for (a, qa) in q.iter().enumerate() {
                    let fq: Vec<f64> = (0..size)
                        .map(|r| inner(&dense[r * size..(r + 1) * size], qa))
                        .collect();
                    for (b, qb) in q.iter().enumerate() {
                        out[b * k + a] = inner(qb, &fq);
                    }
                }
                linalg::symmetrize(&mut out, k);
                out
            };
            let entries = entries
                .into_iter()
                .map(|e| {
                    let mut dense = vec![0.0; size * size];
                    for (c, v) in e {
                        dense[c] += v;
                    }
                    project(&dense)
                        .into_iter()
                        .enumerate()
                        .filter(|(_, v)| v.abs() > 1e-15)
                        .collect()
                })
                .collect();
            (k, project(&f0), entries)
        };
        let fs = entries
            .into_iter()
            .map(|e| SparseSym::new(size, e))
            .collect();
        Some(Self {
            size,
            f0,
            fs,
            b,
            constant,
            var_of_moment,
            free_vars,
            pivots,
            n_vars,
        })
    }

    fn assemble(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.f0.clone();
        for (f, zf) in self.fs.iter().zip(z) {
            f.add_to(&mut out, *zf);
        }
        out
    }

    fn moments(&self, z: &[f64]) -> Vec<f64> {
        let mut vars = vec![0.0; self.n_vars];
        vars[0] = 1.0;
        for (&v, &val) in self.free_vars.iter().zip(z) {
            vars[v] = val;
        }
        for (p, rhs, deps) in &self.pivots {
            vars[*p] = rhs - deps.iter().map(|(fi, a)| a * z[*fi]).sum::<f64>();
        }
        self.var_of_moment.iter().map(|&v| vars[v]).collect()
    }

    /// Schur complement `M_fg = tr(F_f X F_g Z⁻¹)`, lower triangle.
    fn schur(&self, x: &[f64], zinv: &[f64]) -> Vec<f64> {
        let n = self.size;
        let m = self.fs.len();
        let mut out = vec![0.0; m * m];
        let mut t = vec![0.0; n * n];
        let mut u = vec![0.0; n];
        for (f, ff) in self.fs.iter().enumerate() {
            t.iter_mut().for_each(|v| *v = 0.0);
            // T = X F_f Z⁻¹, accumulated one column of F_f at a time.
            for &(col, start, end) in &ff.cols {
                u.iter_mut().for_each(|v| *v = 0.0);
                for &(row, v) in &ff.by_col[start..end] {
                    for (uc, xv) in u.iter_mut().zip(&x[row * n..(row + 1) * n]) {
                        *uc += v * xv;
                    }
                }
                let zrow = &zinv[col * n..(col + 1) * n];
                for (c, &uc) in u.iter().enumerate() {
                    if uc != 0.0 {
                        for (tv, zv) in t[c * n..(c + 1) * n].iter_mut().zip(zrow) {
                            *tv += uc * zv;
                        }
                    }
                }
            }
            let row = &mut out[f * m..f * m + f + 1];
            for (g, slot) in row.iter_mut().enumerate() {
                *slot = self.fs[g].dot(&t);
            }
        }
        out
    }
}

/// Orthonormal basis of the complement of `span(null)` in `R^size`.
fn complement_basis(null: &[Vec<f64>], size: usize) -> Vec<Vec<f64>> {
    let mut span: Vec<Vec<f64>> = Vec::new();
    let add = |span: &mut Vec<Vec<f64>>, mut v: Vec<f64>| -> bool {
        let scale = norm2(&v);
        for _ in 0..2 {
            for q in span.iter() {
                let d = inner(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
        }
        let len = norm2(&v);
        if len <= 1e-8 * scale {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= len);
        span.push(v);
        true
    };
    for v in null {
        add(&mut span, v.clone());
    }
    let rank = span.len();
    for i in 0..size {
        let mut e = vec![0.0; size];
        e[i] = 1.0;
        add(&mut span, e);
    }
    span.split_off(rank)
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(inner(a, a))
}

/// Largest `α` with `A + α D ⪰ 0`, given `L⁻¹` for `A = L Lᵀ`.
fn max_step(linv: &[f64], d: &[f64], n: usize) -> f64 {
    let w = linalg::matmul_transb(&linalg::matmul(linv, d, n), linv, n);
    let lmin = linalg::min_eigenvalue(&w, n);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// Factors `M`, adding a growing diagonal shift if rounding has pushed it
/// off positive definiteness.
fn factor_schur(m: &[f64], dim: usize) -> Option<Vec<f64>> {
    let max_diag = (0..dim)
        .map(|i| m[i * dim + i].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut l = m.to_vec();
        for i in 0..dim {
            l[i * dim + i] += shift;
        }
        match linalg::cholesky_in_place(&mut l, dim) {
            Ok(()) => return Some(l),
            Err(NotPositiveDefinite { .. }) => {
                shift = if shift == 0.0 {
                    1e-14 * max_diag
                } else {
                    shift * 100.0
                }
            }
        }
    }
    None
}

struct Direction {
    dz: Vec<f64>,
    dzm: Vec<f64>,
    dx: Vec<f64>,
}

/// Solves the Newton system for the complementarity target `Rc` (dense,
/// possibly nonsymmetric).
#[allow(clippy::too_many_arguments)]
fn direction(
    lmi: &Lmi,
    chol: &[f64],
    x: &[f64],
    zinv: &[f64],
    rd: &[f64],
    rp: &[f64],
    rc: &[f64],
) -> Direction {
    let n = lmi.size;
    let m = lmi.fs.len();
    let x_rd_zinv = linalg::matmul(&linalg::matmul(x, rd, n), zinv, n);
    let rc_zinv = linalg::matmul(rc, zinv, n);
    let w: Vec<f64> = rc_zinv.iter().zip(&x_rd_zinv).map(|(a, b)| a - b).collect();
    let mut dz: Vec<f64> = lmi.fs.iter().zip(rp).map(|(f, r)| f.dot(&w) - r).collect();
    linalg::cholesky_solve(chol, m, &mut dz);
    let mut dzm = rd.to_vec();
    for (f, d) in lmi.fs.iter().zip(&dz) {
        f.add_to(&mut dzm, *d);
    }
    let x_dz_zinv = linalg::matmul(&linalg::matmul(x, &dzm, n), zinv, n);
    let mut dx: Vec<f64> = rc_zinv.iter().zip(&x_dz_zinv).map(|(a, b)| a - b).collect();
    linalg::symmetrize(&mut dx, n);
    Direction { dz, dzm, dx }
}

/// Maximizes the program's objective over PSD moment matrices satisfying
/// its equalities.
pub fn solve(program: &MomentProgram, cfg: &SdpConfig) -> Result<SdpSolution> {
    cfg.validate()?;
    let Some(lmi) = Lmi::build(program, cfg) else {
        return Ok(infeasible(program, 0));
    };
    let n = lmi.size;
    let m = lmi.fs.len();
    let nf = n as f64;

    let mut x = vec![0.0; n * n];
    let mut zm = vec![0.0; n * n];
    let start = 10.0;
    for i in 0..n {
        x[i * n + i] = start;
        zm[i * n + i] = start;
    }
    let mut z = vec![0.0; m];
    let b_norm = norm2(&lmi.b);
    let f0_norm = norm2(&lmi.f0);

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let (mut gap_rel, mut pinf, mut dinf) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut pobj = 0.0;

    while iterations < cfg.max_iterations {
        let fz = lmi.assemble(&z);
        let rd: Vec<f64> = fz.iter().zip(&zm).map(|(a, b)| a - b).collect();
        let rp: Vec<f64> = lmi
            .fs
            .iter()
            .zip(&lmi.b)
            .map(|(f, b)| -b - f.dot(&x))
            .collect();
        pobj = inner(&lmi.f0, &x);
        let dobj = inner(&lmi.b, &z);
        gap_rel = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        pinf = norm2(&rp) / (1.0 + b_norm);
        dinf = norm2(&rd) / (1.0 + f0_norm);
        if gap_rel <= cfg.gap_tol && pinf <= cfg.feasibility_tol && dinf <= cfg.feasibility_tol {
            status = SdpStatus::Optimal;
            break;
        }
        // A PSD X with ⟨F_f, X⟩ = 0 and ⟨F₀, X⟩ < 0 certifies that no
        // moment assignment exists; large iterates approach such a ray.
        let x_trace: f64 = (0..n).map(|i| x[i * n + i]).sum();
        if x_trace > 1e6 {
            let ray_obj = pobj / x_trace;
            let ray_res =
                libm::sqrt(lmi.fs.iter().map(|f| f.dot(&x) * f.dot(&x)).sum::<f64>()) / x_trace;
            if ray_obj < -1e-6 && ray_res < 1e-6 * ray_obj.abs() {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        iterations += 1;

        let Ok((zinv, z_linv)) = linalg::spd_inverse(&zm, n) else {
            break;
        };
        let Ok((_, x_linv)) = linalg::spd_inverse(&x, n) else {
            break;
        };
        let schur = lmi.schur(&x, &zinv);
        let Some(chol) = factor_schur(&schur, m) else {
            break;
        };
        drop(schur);

        let mu = inner(&x, &zm) / nf;
        let xz = linalg::matmul(&x, &zm, n);
        let rc_aff: Vec<f64> = xz.iter().map(|v| -v).collect();
        let aff = direction(&lmi, &chol, &x, &zinv, &rd, &rp, &rc_aff);
        let ap = (cfg.step_fraction * max_step(&x_linv, &aff.dx, n)).min(1.0);
        let ad = (cfg.step_fraction * max_step(&z_linv, &aff.dzm, n)).min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..n * n {
            mu_aff += (x[k] + ap * aff.dx[k]) * (zm[k] + ad * aff.dzm[k]);
        }
        mu_aff /= nf;
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let sigma = ratio * ratio * ratio;

        let cross = linalg::matmul(&aff.dx, &aff.dzm, n);
        let mut rc: Vec<f64> = xz.iter().zip(&cross).map(|(a, b)| -a - b).collect();
        for i in 0..n {
            rc[i * n + i] += sigma * mu;
        }
        let dir = direction(&lmi, &chol, &x, &zinv, &rd, &rp, &rc);
        let ap = (cfg.step_fraction * max_step(&x_linv, &dir.dx, n)).min(1.0);
        let ad = (cfg.step_fraction * max_step(&z_linv, &dir.dzm, n)).min(1.0);
        for k in 0..n * n {
            x[k] += ap * dir.dx[k];
            zm[k] += ad * dir.dzm[k];
        }
        for (zv, d) in z.iter_mut().zip(&dir.dz) {
            *zv += ad * d;
        }
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
    }

    let moments = lmi.moments(&z);
    let moment_matrix = program.moment_matrix(&moments)?;
    let min_eigenvalue = linalg::min_eigenvalue(&moment_matrix, program.size());
    let residuals: Vec<f64> = program
        .equalities()
        .iter()
        .map(|(f, t)| f.eval(&moments) - t)
        .collect();
    if status == SdpStatus::Optimal
        && (min_eigenvalue < -1e-8 || residuals.iter().any(|r| r.abs() > 1e-7))
    {
        status = SdpStatus::MaxIterations;
    }
    let (objective_value, certified_bound) = if status == SdpStatus::Infeasible {
        (f64::NAN, f64::NAN)
    } else {
        (program.objective().eval(&moments), pobj + lmi.constant)
    };
    Ok(SdpSolution {
        objective_value,
        certified_bound,
        status,
        moments,
        moment_matrix,
        size: program.size(),
        min_eigenvalue,
        residuals,
        iterations,
        duality_gap: gap_rel,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        variables: m,
    })
}

fn infeasible(program: &MomentProgram, variables: usize) -> SdpSolution {
    let n = program.size();
    let mut moments = vec![0.0; program.moments().len()];
    moments[0] = 1.0;
    let moment_matrix = program
        .moment_matrix(&moments)
        .expect("sized by the program");
    SdpSolution {
        objective_value: f64::NAN,
        certified_bound: f64::NAN,
        status: SdpStatus::Infeasible,
        residuals: program
            .equalities()
            .iter()
            .map(|(f, t)| f.eval(&moments) - t)
            .collect(),
        min_eigenvalue: linalg::min_eigenvalue(&moment_matrix, n),
        moments,
        moment_matrix,
        size: n,
        iterations: 0,
        duality_gap: f64::NAN,
        primal_infeasibility: f64::NAN,
        dual_infeasibility: f64::NAN,
        variables,
    }
}
