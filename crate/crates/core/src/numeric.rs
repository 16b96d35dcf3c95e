//! Small numerical kernels: finite-difference stencils, grid derivative
//! weights, nullspaces and adaptive quadrature.

use nalgebra::{DMatrix, DVector};

/// Cube root of machine epsilon, the classic central-difference step.
pub fn cbrt_eps() -> f64 {
    f64::EPSILON.cbrt()
}

/// Relative central-difference step `max(|x|, 1) * eps^(1/3)`.
pub fn central_step(x: f64) -> f64 {
    x.abs().max(1.0) * cbrt_eps()
}

/// Second-order central difference of `f` at `x` with step `h`.
pub fn central_diff<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Fourth-order five-point first derivative of `f` at 0.
pub fn d1_five_point<F: FnMut(f64) -> f64>(mut f: F, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

/// Derivative of `f` at `x` by Ridders' extrapolation of central
/// differences, starting from step `h0`. Returns the estimate and its error.
pub fn ridders_derivative<F, E>(mut f: F, x: f64, h0: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    const SAFE: f64 = 2.0;
    let mut a = [[0.0_f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Ok((best, err))
}

/// Fourth-order five-point second derivative of `f` at 0.
pub fn d2_five_point<F: FnMut(f64) -> f64>(mut f: F, h: f64) -> f64 {
    (-f(-2.0 * h) + 16.0 * f(-h) - 30.0 * f(0.0) + 16.0 * f(h) - f(2.0 * h)) / (12.0 * h * h)
}

/// Finite-difference weights on an arbitrary grid (Fornberg's recursion).
///
/// Returns `w[j][k]`, the weight of node `nodes[j]` in the approximation of
/// the `k`-th derivative at `z`, for `k = 0..=order`.
pub fn fornberg_weights(z: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second time derivatives of sampled series on a (possibly
/// non-uniform) grid, using five-node stencils.
///
/// `series[i]` is the vector sampled at `times[i]`. The stencil is centered
/// wherever possible and shifted inwards near the ends. Grids with fewer than
/// five samples fall back to the largest stencil available.
pub fn grid_derivatives(times: &[f64], series: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = times.len();
    let width = n.min(5);
    let dim = series.first().map_or(0, Vec::len);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n {
        if width < 2 {
            d1.push(vec![0.0; dim]);
            d2.push(vec![0.0; dim]);
            continue;
        }
        let half = width / 2;
        let start = i.saturating_sub(half).min(n - width);
        let nodes = &times[start..start + width];
        let w = fornberg_weights(times[i], nodes, 2);
        let mut v = vec![0.0; dim];
        let mut a = vec![0.0; dim];
        for (j, wj) in w.iter().enumerate() {
            let s = &series[start + j];
            for k in 0..dim {
                v[k] += wj[1] * s[k];
                a[k] += wj[2] * s[k];
            }
        }
        d1.push(v);
        d2.push(a);
    }
    (d1, d2)
}

/// Indices of samples whose five-node stencil is centered.
pub fn centered_indices(n: usize) -> std::ops::Range<usize> {
    if n < 5 {
        0..0
    } else {
        2..n - 2
    }
}

/// Orthonormal basis (as columns) of the nullspace of `rows`.
///
/// Rank decisions use row-pivoted Gauss-Jordan elimination with pivots below
/// `rel_tol * (largest row norm)` treated as zero. The raw nullspace vectors
/// are orthonormalized by modified Gram-Schmidt with one reorthogonalization
/// pass.
pub fn nullspace(rows: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = rows.shape();
    if m == 0 {
        return DMatrix::identity(n, n);
    }
    let mut a = rows.clone();
    let scale = (0..m).map(|r| a.row(r).norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return DMatrix::identity(n, n);
    }
    let tol = rel_tol * scale;
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let (p, pv) = (row..m)
            .map(|r| (r, a[(r, col)].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pv <= tol {
            continue;
        }
        a.swap_rows(p, row);
        let piv = a[(row, col)];
        for c in 0..n {
            a[(row, c)] /= piv;
        }
        for r in 0..m {
            if r != row {
                let factor = a[(r, col)];
                if factor != 0.0 {
                    for c in 0..n {
                        a[(r, c)] -= factor * a[(row, c)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = DVector::zeros(n);
        v[f] = 1.0;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -a[(r, f)];
        }
        basis.push(v);
    }
    let ortho = gram_schmidt(basis);
    let r = ortho.len();
    DMatrix::from_fn(n, r, |i, j| ortho[j][i])
}

fn gram_schmidt(vectors: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for _ in 0..2 {
            for q in &out {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 0.0 {
            out.push(v / norm);
        }
    }
    out
}

/// Least-squares solution of `a * x = b` (minimum norm when rank deficient)
/// together with the Euclidean residual norm.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), b.norm());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-12).max(f64::MIN_POSITIVE);
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
///
/// `f` may fail (e.g. outside its domain); the first failure aborts the
/// integration.
pub fn adaptive_simpson<F, E>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F, E>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)? + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
