//! Dense row-major linear algebra for the SDP solver. Cholesky factors and
//! their inverses come first; symmetric eigenvalues are at the bottom.
//!
//! Matrices are `&[f64]` slices of length `n * n` in row-major order.

use alloc::vec;
use alloc::vec::Vec;

/// The matrix handed to [`cholesky_in_place`] was not numerically positive
/// definite; `pivot` is the failing column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

const BLOCK: usize = 96;
const MR: usize = 4;
const NR: usize = 8;

trait MulAdd {
    fn mul_add(a: f64, b: f64, c: f64) -> f64;
}

struct Plain;

impl MulAdd for Plain {
    #[inline(always)]
    fn mul_add(a: f64, b: f64, c: f64) -> f64 {
        a * b + c
    }
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
struct Fused;

#[cfg(all(feature = "std", target_arch = "x86_64"))]
impl MulAdd for Fused {
    #[inline(always)]
    fn mul_add(a: f64, b: f64, c: f64) -> f64 {
        a.mul_add(b, c)
    }
}

/// `A[r0.., r0..] -= P Pᵀ` on the lower triangle, where the panel `P` is
/// packed k-major: `pa[k * m + r]` holds row `r0 + r`, column `k`.
#[inline(always)]
fn trailing_update_body<F: MulAdd>(
    a: &mut [f64],
    n: usize,
    r0: usize,
    m: usize,
    pa: &[f64],
    kb: usize,
) {
    let mut i = 0;
    while i < m {
        let ib = MR.min(m - i);
        let mut j = 0;
        while j < i + ib {
            let jb = NR.min(m - j);
            let mut acc = [[0.0f64; NR]; MR];
            if ib == MR && jb == NR {
                for k in 0..kb {
                    let row = &pa[k * m..(k + 1) * m];
                    let bv: &[f64; NR] = row[j..j + NR].try_into().expect("NR slice");
                    let av: &[f64; MR] = row[i..i + MR].try_into().expect("MR slice");
                    for r in 0..MR {
                        for c in 0..NR {
                            acc[r][c] = F::mul_add(av[r], bv[c], acc[r][c]);
                        }
                    }
                }
            } else {
                for k in 0..kb {
                    let row = &pa[k * m..(k + 1) * m];
                    for r in 0..ib {
                        for c in 0..jb {
                            acc[r][c] += row[i + r] * row[j + c];
                        }
                    }
                }
            }
            for r in 0..ib {
                let dst = &mut a[(r0 + i + r) * n + r0 + j..];
                for c in 0..jb.min(i + r + 1 - j) {
                    dst[c] -= acc[r][c];
                }
            }
            j += NR;
        }
        i += MR;
    }
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
#[target_feature(enable = "avx2,fma")]
unsafe fn trailing_update_avx2(
    a: &mut [f64],
    n: usize,
    r0: usize,
    m: usize,
    pa: &[f64],
    kb: usize,
) {
    trailing_update_body::<Fused>(a, n, r0, m, pa, kb)
}

fn trailing_update(a: &mut [f64], n: usize, r0: usize, m: usize, pa: &[f64], kb: usize) {
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    {
        if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { trailing_update_avx2(a, n, r0, m, pa, kb) };
            return;
        }
    }
    trailing_update_body::<Plain>(a, n, r0, m, pa, kb)
}

/// Overwrites the lower triangle of `a` with `L` such that `A = L Lᵀ`.
/// The strict upper triangle is left untouched.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), NotPositiveDefinite> {
    debug_assert_eq!(a.len(), n * n);
    let mut panel = Vec::new();
    let mut k0 = 0;
    while k0 < n {
        let kb = BLOCK.min(n - k0);
        for j in k0..k0 + kb {
            let rj = j * n;
            let mut d = a[rj + j];
            for k in k0..j {
                d -= a[rj + k] * a[rj + k];
            }
            if d.is_nan() || d <= 0.0 || !d.is_finite() {
                return Err(NotPositiveDefinite { pivot: j });
            }
            let d = libm::sqrt(d);
            a[rj + j] = d;
            let inv = 1.0 / d;
            for i in j + 1..n {
                let ri = i * n;
                let mut s = a[ri + j];
                for k in k0..j {
                    s -= a[ri + k] * a[rj + k];
                }
                a[ri + j] = s * inv;
            }
        }
        let r0 = k0 + kb;
        let m = n - r0;
        if m > 0 {
            panel.clear();
            panel.resize(kb * m, 0.0);
            for r in 0..m {
                let src = &a[(r0 + r) * n + k0..(r0 + r) * n + k0 + kb];
                for (k, v) in src.iter().enumerate() {
                    panel[k * m + r] = *v;
                }
            }
            trailing_update(a, n, r0, m, &panel, kb);
        }
        k0 += kb;
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// `L⁻¹` for a lower-triangular `L` (upper triangle of the input ignored).
pub fn lower_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for j in 0..n {
        inv[j * n + j] = 1.0 / l[j * n + j];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s += l[i * n + k] * inv[k * n + j];
            }
            inv[i * n + j] = -s / l[i * n + i];
        }
    }
    inv
}

/// `C = A B`.
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        let ci = &mut c[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for (cv, bv) in ci.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                *cv += aik * bv;
            }
        }
    }
    c
}

/// `C = A Bᵀ`.
pub fn matmul_transb(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        let ai = &a[i * n..(i + 1) * n];
        for j in 0..n {
            c[i * n + j] = ai
                .iter()
                .zip(&b[j * n..(j + 1) * n])
                .map(|(x, y)| x * y)
                .sum();
        }
    }
    c
}

/// `(A + Aᵀ)/2` in place.
pub fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
}

/// Inverse of a symmetric positive definite matrix together with the
/// inverse of its Cholesky factor.
pub fn spd_inverse(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>), NotPositiveDefinite> {
    let mut l = a.to_vec();
    cholesky_in_place(&mut l, n)?;
    let linv = lower_inverse(&l, n);
    let mut inv = vec![0.0; n * n];
    // A⁻¹ = L⁻ᵀ L⁻¹; column-wise dot products over the lower-triangular rows.
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..n {
                s += linv[k * n + i] * linv[k * n + j];
            }
            inv[i * n + j] = s;
            inv[j * n + i] = s;
        }
    }
    Ok((inv, linv))
}

/// Eigenvalues of a symmetric matrix in ascending order (Householder
/// tridiagonalization followed by implicit QL).
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut m = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut norm = 0.0;
        for r in 0..len {
            v[r] = m[(k + 1 + r) * n + k];
            norm += v[r] * v[r];
        }
        let norm = libm::sqrt(norm);
        d[k] = m[k * n + k];
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        e[k] = alpha;
        v[0] -= alpha;
        let vn = libm::sqrt(v[..len].iter().map(|x| x * x).sum::<f64>());
        if vn == 0.0 {
            continue;
        }
        v[..len].iter_mut().for_each(|x| *x /= vn);
        for r in 0..len {
            let row = &m[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            p[r] = row.iter().zip(&v[..len]).map(|(x, y)| x * y).sum();
        }
        let kk: f64 = p[..len].iter().zip(&v[..len]).map(|(x, y)| x * y).sum();
        for r in 0..len {
            p[r] -= kk * v[r];
        }
        for r in 0..len {
            let row = &mut m[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            for (c, x) in row.iter_mut().enumerate() {
                *x -= 2.0 * (v[r] * p[c] + p[r] * v[c]);
            }
        }
    }
    if n >= 2 {
        d[n - 2] = m[(n - 2) * n + n - 2];
        e[n - 2] = m[(n - 1) * n + n - 2];
    }
    d[n - 1] = m[(n - 1) * n + n - 1];
    e[n - 1] = 0.0;
    tridiagonal_ql(&mut d, &mut e);
    d.sort_by(f64::total_cmp);
    d
}

/// Implicit QL with Wilkinson-style shifts on the tridiagonal `(d, e)`,
/// `e[k]` coupling rows `k` and `k + 1`. Eigenvalues are left in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    // Absolute floor so clusters of zero eigenvalues still deflate.
    let floor = f64::EPSILON * d.iter().chain(e.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

pub fn min_eigenvalue(a: &[f64], n: usize) -> f64 {
    symmetric_eigenvalues(a, n).first().copied().unwrap_or(0.0)
}
