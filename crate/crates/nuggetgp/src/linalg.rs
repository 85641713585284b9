//! Dense symmetric positive-definite linear algebra: kernel-matrix assembly,
//! Cholesky factorization with log-determinant, triangular solves, SPD
//! inverse, and a full symmetric eigendecomposition (Householder
//! tridiagonalization followed by implicit-shift QL).
//!
//! Everything is dense and deterministic; target problem sizes are n ≲ 4000.

use crate::error::{Error, Result};
use crate::kernel::{Correlation, NoisyModelParams};
use ndarray::{Array1, Array2};

/// n sampled points in [0,1]^d, d ∈ {1,2,3}, with separation metadata.
#[derive(Debug, Clone)]
pub struct LocationSet {
    d: usize,
    n: usize,
    coords: Vec<f64>, // row-major n × d
    min_sep: f64,
}

impl LocationSet {
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::domain(format!("dimension must be 1, 2, or 3, got {d}")));
        }
        if coords.len() % d != 0 {
            return Err(Error::Dimension {
                expected: d,
                got: coords.len(),
            });
        }
        for &c in &coords {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::domain(format!(
                    "coordinates must lie in [0,1], got {c}"
                )));
            }
        }
        let n = coords.len() / d;
        let min_sep = min_separation(d, n, &coords);
        if min_sep <= 0.0 {
            return Err(Error::domain(
                "duplicate locations: min pairwise distance must be > 0".to_string(),
            ));
        }
        Ok(LocationSet {
            d,
            n,
            coords,
            min_sep,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn min_separation(&self) -> f64 {
        self.min_sep
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        dist_nd(self.point(i), self.point(j))
    }

    pub fn dist_to_point(&self, i: usize, p: &[f64]) -> f64 {
        dist_nd(self.point(i), p)
    }

    /// Nested prefix of the first `n` locations (separation recomputed).
    pub fn prefix(&self, n: usize) -> Result<LocationSet> {
        if n > self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: n,
            });
        }
        LocationSet::new(self.d, self.coords[..n * self.d].to_vec())
    }
}

#[inline]
fn dist_nd(a: &[f64], b: &[f64]) -> f64 {
    match a.len() {
        1 => (a[0] - b[0]).abs(),
        2 => {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            (dx * dx + dy * dy).sqrt()
        }
        _ => {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            let dz = a[2] - b[2];
            (dx * dx + dy * dy + dz * dz).sqrt()
        }
    }
}

fn min_separation(d: usize, n: usize, coords: &[f64]) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    if d == 1 {
        let mut xs = coords.to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    } else {
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let dist = dist_nd(&coords[i * d..i * d + d], &coords[j * d..j * d + d]);
                if dist < best {
                    best = dist;
                }
            }
        }
        best
    }
}

/// Pairwise distance matrix, reusable across decay parameters.
pub fn distance_matrix(locs: &LocationSet) -> Array2<f64> {
    let n = locs.n();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = locs.dist(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// V_n = τ² I + K_n over the locations; entry (i,j) uses same-site nugget
/// semantics keyed on index equality.
pub fn build_cov_matrix(params: &NoisyModelParams, locs: &LocationSet) -> Array2<f64> {
    let corr = Correlation::new(params.matern.nu()).expect("validated params");
    let sigma2 = params.matern.sigma2();
    let phi = params.matern.phi();
    let tau2 = params.tau2();
    let n = locs.n();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[(i, i)] = sigma2 + tau2;
        for j in (i + 1)..n {
            let v = sigma2 * corr.rho(phi * locs.dist(i, j));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Correlation matrix ρ(φ) from a precomputed distance matrix.
pub(crate) fn corr_matrix_from_dists(
    corr: &Correlation,
    phi: f64,
    dists: &Array2<f64>,
) -> Array2<f64> {
    let n = dists.nrows();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = corr.rho(phi * dists[(i, j)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Entrywise dρ/dφ from a precomputed distance matrix (zero diagonal).
pub(crate) fn corr_dphi_from_dists(
    corr: &Correlation,
    phi: f64,
    dists: &Array2<f64>,
) -> Array2<f64> {
    let n = dists.nrows();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = dists[(i, j)];
            let v = dist * corr.drho_dx(phi * dist);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let (a4, ar) = a[..len].split_at(len - len % 4);
    let (b4, br) = b[..len].split_at(len - len % 4);
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ar.iter().zip(br) {
        s += x * y;
    }
    s
}

/// Lower-triangular Cholesky factor with the log-determinant of the source.
#[derive(Debug, Clone)]
pub struct CovFactor {
    lower: Array2<f64>,
    logdet: f64,
}

/// Cholesky factorization of a symmetric positive-definite matrix. A failed
/// pivot reports its index so callers can apply their jitter policy.
pub fn cholesky(a: &Array2<f64>) -> Result<CovFactor> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: a.ncols(),
        });
    }
    let src = a.as_slice().expect("standard layout");
    let mut l = vec![0.0f64; n * n];
    let mut logdet = 0.0;
    for i in 0..n {
        let (head, tail) = l.split_at_mut(i * n);
        let rowi = &mut tail[..n];
        for j in 0..i {
            let rowj = &head[j * n..j * n + j];
            let s = dot(&rowi[..j], rowj);
            rowi[j] = (src[i * n + j] - s) / head[j * n + j];
        }
        let s = dot(&rowi[..i], &rowi[..i]);
        let p = src[i * n + i] - s;
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        let d = p.sqrt();
        rowi[i] = d;
        logdet += 2.0 * d.ln();
    }
    Ok(CovFactor {
        lower: Array2::from_shape_vec((n, n), l).expect("shape"),
        logdet,
    })
}

/// Cholesky with the diagonal-jitter retry policy: boosts of
/// `1e-10 · scale` escalating tenfold up to `1e-6 · scale`, then the error
/// surfaces. Returns the factor and the jitter that was applied (0 if none).
pub fn cholesky_with_jitter(a: &Array2<f64>, scale: f64) -> Result<(CovFactor, f64)> {
    match cholesky(a) {
        Ok(f) => Ok((f, 0.0)),
        Err(first) => {
            let mut jitter = 1e-10 * scale;
            for _ in 0..5 {
                let mut boosted = a.clone();
                for i in 0..a.nrows() {
                    boosted[(i, i)] += jitter;
                }
                if let Ok(f) = cholesky(&boosted) {
                    return Ok((f, jitter));
                }
                jitter *= 10.0;
            }
            Err(first)
        }
    }
}

impl CovFactor {
    pub fn n(&self) -> usize {
        self.lower.nrows()
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.lower
    }

    /// Solve V x = b by forward and back substitution.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Result<Array1<f64>> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let l = self.lower.as_slice().expect("layout");
        let mut x = b.to_vec();
        forward_subst(l, n, &mut x);
        back_subst_transposed(l, n, &mut x);
        Ok(Array1::from_vec(x))
    }

    /// Solve V X = B columnwise.
    pub fn solve_mat(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        let n = self.n();
        if b.nrows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.nrows(),
            });
        }
        let mut out = Array2::zeros((n, b.ncols()));
        for (jc, col) in b.columns().into_iter().enumerate() {
            let solved = self.solve_vec(&col.to_owned())?;
            out.column_mut(jc).assign(&solved);
        }
        Ok(out)
    }

    /// Quadratic form bᵀ V⁻¹ b without forming the inverse.
    pub fn quad_form(&self, b: &Array1<f64>) -> Result<f64> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let l = self.lower.as_slice().expect("layout");
        let mut z = b.to_vec();
        forward_subst(l, n, &mut z);
        Ok(dot(&z, &z))
    }

    /// Full SPD inverse V⁻¹ = L⁻ᵀ L⁻¹ (used by the analytic-gradient traces).
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.n();
        let l = self.lower.as_slice().expect("layout");
        // linv_t[j*n + i] = (L^{-1})[i][j]; rows of linv_t are columns of L^{-1},
        // kept contiguous so both loops below run on slices.
        let mut linv_t = vec![0.0f64; n * n];
        for j in 0..n {
            let (head, tail) = linv_t.split_at_mut(j * n);
            let _ = head;
            let rowj = &mut tail[..n];
            rowj[j] = 1.0 / l[j * n + j];
            for i in (j + 1)..n {
                let s = dot(&l[i * n + j..i * n + i], &rowj[j..i]);
                rowj[i] = -s / l[i * n + i];
            }
        }
        let mut inv = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let k0 = i.max(j);
                let s = dot(&linv_t[i * n + k0..(i + 1) * n], &linv_t[j * n + k0..(j + 1) * n]);
                inv[(i, j)] = s;
                inv[(j, i)] = s;
            }
        }
        inv
    }

    /// tr(V⁻¹) = ‖L⁻¹‖_F², cheaper than the full inverse.
    pub fn trace_inverse(&self) -> f64 {
        let n = self.n();
        let l = self.lower.as_slice().expect("layout");
        let mut linv_t = vec![0.0f64; n * n];
        let mut tr = 0.0;
        for j in 0..n {
            let (_, tail) = linv_t.split_at_mut(j * n);
            let rowj = &mut tail[..n];
            rowj[j] = 1.0 / l[j * n + j];
            for i in (j + 1)..n {
                let s = dot(&l[i * n + j..i * n + i], &rowj[j..i]);
                rowj[i] = -s / l[i * n + i];
            }
            tr += dot(&rowj[j..], &rowj[j..]);
        }
        tr
    }
}

fn forward_subst(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &x[..i]);
        x[i] = (x[i] - s) / l[i * n + i];
    }
}

fn back_subst_transposed(l: &[f64], n: usize, x: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

/// Sorted (descending) eigenvalues of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    pub fn from_descending(values: Vec<f64>) -> Self {
        EigenSpectrum { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

fn check_symmetric(a: &Array2<f64>) -> Result<usize> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut scale = 0.0f64;
    for v in a.iter() {
        scale = scale.max(v.abs());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-8 * scale.max(1.0) {
                return Err(Error::domain(format!(
                    "matrix not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(n)
}

// Householder reduction to tridiagonal form. `a` is overwritten; the
// reflector for step k is left in column k below the diagonal with its
// scalar in `betas[k]`. Returns (diagonal, subdiagonal); the subdiagonal
// array is length n with e[n-1] as slack for the QL sweep.
fn householder_tridiag(a: &mut [f64], n: usize, betas: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0f64; n];
    let mut u = vec![0.0f64; n];
    let mut p = vec![0.0f64; n];
    for k in 0..n.saturating_sub(2) {
        let mut scale = 0.0;
        for i in (k + 1)..n {
            scale += a[i * n + k].abs();
        }
        if scale == 0.0 {
            e[k] = 0.0;
            betas[k] = 0.0;
            continue;
        }
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            u[i] = a[i * n + k] / scale;
            norm2 += u[i] * u[i];
        }
        let mut sigma = norm2.sqrt();
        if u[k + 1] < 0.0 {
            sigma = -sigma;
        }
        e[k] = -sigma * scale;
        u[k + 1] += sigma;
        let beta = 1.0 / (sigma * u[k + 1]);
        betas[k] = beta;
        // p = beta * A_sub u
        for i in (k + 1)..n {
            p[i] = beta * dot(&a[i * n + k + 1..i * n + n], &u[k + 1..n]);
        }
        let kc = 0.5 * beta * dot(&p[k + 1..n], &u[k + 1..n]);
        for i in (k + 1)..n {
            p[i] -= kc * u[i];
        }
        // A_sub -= u pᵀ + p uᵀ
        for i in (k + 1)..n {
            let ui = u[i];
            let pi = p[i];
            let row = &mut a[i * n + k + 1..i * n + n];
            for (jj, r) in row.iter_mut().enumerate() {
                let j = k + 1 + jj;
                *r -= ui * p[j] + pi * u[j];
            }
        }
        // stash the reflector in the zeroed part of the column
        for i in (k + 1)..n {
            a[i * n + k] = u[i];
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    let d = (0..n).map(|i| a[i * n + i]).collect();
    (d, e)
}

// Apply Qᵀ (product of stored reflectors, earliest first) to a vector.
fn apply_q_transpose_vec(a: &[f64], n: usize, betas: &[f64], y: &mut [f64]) {
    for k in 0..n.saturating_sub(2) {
        let beta = betas[k];
        if beta == 0.0 {
            continue;
        }
        let mut t = 0.0;
        for i in (k + 1)..n {
            t += a[i * n + k] * y[i];
        }
        t *= beta;
        for i in (k + 1)..n {
            y[i] -= t * a[i * n + k];
        }
    }
}

// Accumulate the full Q (n × n, row-major) from stored reflectors.
fn accumulate_q(a: &[f64], n: usize, betas: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0f64; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    // Q = H_0 H_1 ... H_{n-3}; build backwards so each H touches a small block.
    for k in (0..n.saturating_sub(2)).rev() {
        let beta = betas[k];
        if beta == 0.0 {
            continue;
        }
        for col in (k + 1)..n {
            let mut t = 0.0;
            for i in (k + 1)..n {
                t += a[i * n + k] * q[i * n + col];
            }
            t *= beta;
            for i in (k + 1)..n {
                q[i * n + col] -= t * a[i * n + k];
            }
        }
    }
    q
}

enum RotTarget<'a> {
    None,
    Vector(&'a mut [f64]),
    /// Row-major n×n matrix whose columns are rotated.
    Matrix(&'a mut [f64], usize),
}

impl RotTarget<'_> {
    #[inline]
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        match self {
            RotTarget::None => {}
            RotTarget::Vector(z) => {
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            RotTarget::Matrix(q, n) => {
                let n = *n;
                for row in 0..n {
                    let base = row * n;
                    let f = q[base + i + 1];
                    q[base + i + 1] = s * q[base + i] + c * f;
                    q[base + i] = c * q[base + i] - s * f;
                }
            }
        }
    }
}

// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
// `e[i]` couples `d[i]` and `d[i+1]`; `e` must have length n (slack at the end).
fn tridiag_ql(d: &mut [f64], e: &mut [f64], mut target: RotTarget<'_>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::numeric("eigen: QL iteration did not converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflowed = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                target.rotate(i, c, s);
            }
            if underflowed {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn sort_descending(d: &mut [f64]) -> Vec<usize> {
    let n = d.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    let sorted: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    d.copy_from_slice(&sorted);
    idx
}

/// Full spectrum of a symmetric matrix, descending.
pub fn eigen_sym(a: &Array2<f64>) -> Result<EigenSpectrum> {
    let n = check_symmetric(a)?;
    let mut work = a.as_slice().expect("layout").to_vec();
    let mut betas = vec![0.0f64; n];
    let (mut d, mut e) = householder_tridiag(&mut work, n, &mut betas);
    tridiag_ql(&mut d, &mut e, RotTarget::None)?;
    sort_descending(&mut d);
    Ok(EigenSpectrum::from_descending(d))
}

/// Spectrum plus `z = Qᵀ y`, the data rotated into the eigenbasis; `z` is
/// permuted consistently with the descending eigenvalue order.
pub fn eigen_sym_rotate(a: &Array2<f64>, y: &Array1<f64>) -> Result<(EigenSpectrum, Array1<f64>)> {
    let n = check_symmetric(a)?;
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let mut work = a.as_slice().expect("layout").to_vec();
    let mut betas = vec![0.0f64; n];
    let (mut d, mut e) = householder_tridiag(&mut work, n, &mut betas);
    let mut z = y.to_vec();
    apply_q_transpose_vec(&work, n, &betas, &mut z);
    tridiag_ql(&mut d, &mut e, RotTarget::Vector(&mut z))?;
    let perm = sort_descending(&mut d);
    let z_sorted: Vec<f64> = perm.iter().map(|&i| z[i]).collect();
    Ok((
        EigenSpectrum::from_descending(d),
        Array1::from_vec(z_sorted),
    ))
}

/// Spectrum plus the orthonormal eigenvector matrix (columns, same order).
pub fn eigen_sym_full(a: &Array2<f64>) -> Result<(EigenSpectrum, Array2<f64>)> {
    let n = check_symmetric(a)?;
    let mut work = a.as_slice().expect("layout").to_vec();
    let mut betas = vec![0.0f64; n];
    let (mut d, mut e) = householder_tridiag(&mut work, n, &mut betas);
    let mut q = accumulate_q(&work, n, &betas);
    tridiag_ql(&mut d, &mut e, RotTarget::Matrix(&mut q, n))?;
    let perm = sort_descending(&mut d);
    let mut q_sorted = vec![0.0f64; n * n];
    for (new_col, &old_col) in perm.iter().enumerate() {
        for row in 0..n {
            q_sorted[row * n + new_col] = q[row * n + old_col];
        }
    }
    Ok((
        EigenSpectrum::from_descending(d),
        Array2::from_shape_vec((n, n), q_sorted).expect("shape"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::MaternParams;

    fn locs_1d(xs: &[f64]) -> LocationSet {
        LocationSet::new(1, xs.to_vec()).unwrap()
    }

    // Small deterministic generator for test matrices.
    struct Lcg(u64);
    impl Lcg {
        fn next_f64(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn random_spd(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = Lcg(seed);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.next_f64() - 0.5;
            }
        }
        let mut spd = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += a[(i, k)] * a[(j, k)];
                }
                spd[(i, j)] = s + if i == j { 1.0 } else { 0.0 };
            }
        }
        spd
    }

    #[test]
    fn location_set_validation() {
        assert!(LocationSet::new(0, vec![0.1]).is_err());
        assert!(LocationSet::new(4, vec![0.1; 8]).is_err());
        assert!(LocationSet::new(2, vec![0.1, 0.2, 0.3]).is_err());
        assert!(LocationSet::new(1, vec![0.1, 1.2]).is_err());
        assert!(LocationSet::new(1, vec![0.25, 0.25]).is_err());
        let l = LocationSet::new(2, vec![0.0, 0.0, 0.3, 0.4, 1.0, 1.0]).unwrap();
        assert_eq!(l.n(), 3);
        assert_eq!(l.dist(0, 1), 0.5);
        assert_eq!(l.min_separation(), 0.5);
        let p = l.prefix(2).unwrap();
        assert_eq!(p.n(), 2);
        assert!(l.prefix(5).is_err());
    }

    #[test]
    fn build_cov_matrix_examples() {
        // n = 1, σ² = 1, τ² = 0.2 → [[1.2]]
        let p = NoisyModelParams::from_parts(0.2, 1.0, 7.489, 0.5).unwrap();
        let l1 = locs_1d(&[0.3]);
        let m = build_cov_matrix(&p, &l1);
        assert_eq!(m[(0, 0)], 1.2);

        // τ² = 0: diagonal equals σ² everywhere
        let p0 = NoisyModelParams::from_parts(0.0, 1.7, 3.0, 1.5).unwrap();
        let l = locs_1d(&[0.1, 0.5, 0.9]);
        let m0 = build_cov_matrix(&p0, &l);
        for i in 0..3 {
            assert_eq!(m0[(i, i)], 1.7);
        }

        // 3-point exponential kernel matches hand-computed σ² e^{−φ·dist}
        let pe = NoisyModelParams::from_parts(0.1, 2.0, 4.0, 0.5).unwrap();
        let me = build_cov_matrix(&pe, &l);
        for i in 0..3 {
            for j in 0..3 {
                let dist = l.dist(i, j);
                let want = 2.0 * (-4.0 * dist).exp() + if i == j { 0.1 } else { 0.0 };
                assert!((me[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_hand_cases() {
        let eye: Array2<f64> = Array2::eye(3);
        let f = cholesky(&eye).unwrap();
        assert_eq!(f.logdet(), 0.0);
        for i in 0..3 {
            assert_eq!(f.lower()[(i, i)], 1.0);
        }

        let a = ndarray::array![[4.0, 2.0], [2.0, 3.0]];
        let f = cholesky(&a).unwrap();
        assert!((f.lower()[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((f.lower()[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((f.lower()[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert!((f.logdet() - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn cholesky_reconstruction_random() {
        let a = random_spd(10, 42);
        let f = cholesky(&a).unwrap();
        let l = f.lower();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let mut s = 0.0;
                for k in 0..=i.min(j) {
                    s += l[(i, k)] * l[(j, k)];
                }
                err = err.max((s - a[(i, j)]).abs());
                scale = scale.max(a[(i, j)].abs());
            }
        }
        assert!(err / scale < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn cholesky_rejects_non_pd() {
        let a = ndarray::array![[1.0, 2.0], [2.0, 1.0]];
        match cholesky(&a) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_jitter_policy() {
        // rank-1 PSD matrix: plain factorization fails, jitter rescues it
        let ones = Array2::from_elem((3, 3), 1.0);
        assert!(cholesky(&ones).is_err());
        let (f, jitter) = cholesky_with_jitter(&ones, 1.0).unwrap();
        assert!(jitter > 0.0 && jitter <= 1e-6);
        assert_eq!(f.n(), 3);
    }

    #[test]
    fn solve_hand_cases() {
        let eye: Array2<f64> = Array2::eye(4);
        let f = cholesky(&eye).unwrap();
        let b = Array1::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        let x = f.solve_vec(&b).unwrap();
        for i in 0..4 {
            assert_eq!(x[i], b[i]);
        }

        let a = ndarray::array![[4.0, 2.0], [2.0, 3.0]];
        let f = cholesky(&a).unwrap();
        let x = f.solve_vec(&Array1::from_vec(vec![2.0, 3.0])).unwrap();
        // hand solve: det = 8, x = (3·2 − 2·3, 4·3 − 2·2)/8 = (0, 1)
        assert!((x[0] - 0.0).abs() < 1e-14);
        assert!((x[1] - 1.0).abs() < 1e-14);

        assert!(f.solve_vec(&Array1::zeros(3)).is_err());
    }

    #[test]
    fn solve_residual_random() {
        let a = random_spd(20, 7);
        let f = cholesky(&a).unwrap();
        let mut rng = Lcg(99);
        let xt = Array1::from_vec((0..20).map(|_| rng.next_f64() - 0.5).collect());
        let b = a.dot(&xt);
        let x = f.solve_vec(&b).unwrap();
        let r = &a.dot(&x) - &b;
        let rel = r.iter().map(|v| v * v).sum::<f64>().sqrt()
            / b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rel < 1e-8, "residual {rel}");
        // quadratic form agrees with explicit solve
        let q = f.quad_form(&b).unwrap();
        let q2 = b.dot(&x);
        assert!((q - q2).abs() < 1e-8 * q.abs());
    }

    #[test]
    fn inverse_and_trace() {
        let a = random_spd(15, 3);
        let f = cholesky(&a).unwrap();
        let inv = f.inverse();
        let prod = a.dot(&inv);
        for i in 0..15 {
            for j in 0..15 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-9);
            }
        }
        let tr: f64 = (0..15).map(|i| inv[(i, i)]).sum();
        assert!((f.trace_inverse() - tr).abs() < 1e-9 * tr.abs());
    }

    #[test]
    fn eigen_hand_cases() {
        let a = ndarray::array![[2.5]];
        let s = eigen_sym(&a).unwrap();
        assert_eq!(s.values(), &[2.5]);

        let d = Array2::from_diag(&Array1::from_vec(vec![3.0, 1.0, 2.0]));
        let s = eigen_sym(&d).unwrap();
        assert_eq!(s.values(), &[3.0, 2.0, 1.0]);
    }

    // Characteristic-polynomial oracle: det(K − λI) via LU with partial
    // pivoting, roots bracketed by sign changes and bisected. Independent of
    // the Householder/QL path.
    fn det_shifted(a: &Array2<f64>, lambda: f64) -> f64 {
        let n = a.nrows();
        let mut m: Vec<f64> = a.as_slice().unwrap().to_vec();
        for i in 0..n {
            m[i * n + i] -= lambda;
        }
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if m[r * n + col].abs() > m[piv * n + col].abs() {
                    piv = r;
                }
            }
            if m[piv * n + col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                for c in 0..n {
                    m.swap(piv * n + c, col * n + c);
                }
                det = -det;
            }
            det *= m[col * n + col];
            for r in (col + 1)..n {
                let fac = m[r * n + col] / m[col * n + col];
                for c in col..n {
                    m[r * n + c] -= fac * m[col * n + c];
                }
            }
        }
        det
    }

    #[test]
    fn eigen_matches_char_poly_oracle() {
        // 5-point equispaced 1-d grid, exponential kernel
        let locs = locs_1d(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let p = NoisyModelParams::from_parts(0.0, 1.0, 2.0, 0.5).unwrap();
        let k = build_cov_matrix(&p, &locs);
        let got = eigen_sym(&k).unwrap();

        // scan for sign changes of det(K − λI) on [0, trace]
        let hi = 5.5;
        let steps = 200_000;
        let mut roots = Vec::new();
        let mut prev_l = 1e-12;
        let mut prev = det_shifted(&k, prev_l);
        for s in 1..=steps {
            let lam = hi * s as f64 / steps as f64;
            let cur = det_shifted(&k, lam);
            if prev.signum() != cur.signum() {
                let (mut lo, mut up) = (prev_l, lam);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + up);
                    if det_shifted(&k, mid).signum() == prev.signum() {
                        lo = mid;
                    } else {
                        up = mid;
                    }
                }
                roots.push(0.5 * (lo + up));
            }
            prev_l = lam;
            prev = cur;
        }
        assert_eq!(roots.len(), 5, "oracle found {} roots", roots.len());
        roots.reverse();
        for (got_v, want) in got.values().iter().zip(&roots) {
            assert!(
                (got_v - want).abs() < 1e-8,
                "eigenvalue {got_v} vs oracle {want}"
            );
        }
    }

    #[test]
    fn eigen_full_reconstruction_and_orthogonality() {
        let a = random_spd(30, 11);
        let (s, q) = eigen_sym_full(&a).unwrap();
        let n = 30;
        let scale = s.values()[0];
        // QᵀQ = I
        for i in 0..n {
            for j in 0..n {
                let mut dotv = 0.0;
                for k in 0..n {
                    dotv += q[(k, i)] * q[(k, j)];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dotv - want).abs() < 1e-10, "orthogonality ({i},{j})");
            }
        }
        // QΛQᵀ = A
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    v += q[(i, k)] * s.values()[k] * q[(j, k)];
                }
                assert!(
                    (v - a[(i, j)]).abs() < 1e-8 * scale,
                    "reconstruction ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn eigen_rotate_matches_full() {
        let a = random_spd(25, 5);
        let mut rng = Lcg(17);
        let y = Array1::from_vec((0..25).map(|_| rng.next_f64() - 0.5).collect());
        let (s1, z) = eigen_sym_rotate(&a, &y).unwrap();
        let (s2, q) = eigen_sym_full(&a).unwrap();
        for (v1, v2) in s1.values().iter().zip(s2.values()) {
            assert!((v1 - v2).abs() < 1e-10);
        }
        let zt = q.t().dot(&y);
        for i in 0..25 {
            // eigenvector sign is arbitrary; compare magnitudes and the
            // quadratic form which is what the likelihood consumes
            assert!((z[i].abs() - zt[i].abs()).abs() < 1e-9, "component {i}");
        }
        let q1: f64 = z.iter().map(|v| v * v).sum();
        let q2: f64 = zt.iter().map(|v| v * v).sum();
        assert!((q1 - q2).abs() < 1e-9 * q1.max(1.0));
    }

    #[test]
    fn eigen_trace_and_logdet_consistency() {
        let locs = LocationSet::new(
            2,
            {
                let mut rng = Lcg(1234);
                (0..240).map(|_| rng.next_f64()).collect()
            },
        )
        .unwrap();
        let p = NoisyModelParams::from_parts(0.3, 1.0, 7.489, 0.5).unwrap();
        let v = build_cov_matrix(&p, &locs);
        let s = eigen_sym(&v).unwrap();
        let n = locs.n();
        // descending, nonnegative up to tolerance
        for w in s.values().windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(*s.values().last().unwrap() > -1e-10 * s.values()[0]);
        // trace identity
        let tr: f64 = (0..n).map(|i| v[(i, i)]).sum();
        let sum: f64 = s.values().iter().sum();
        assert!((sum - tr).abs() < 1e-8 * tr);
        // logdet via Cholesky equals Σ log λ
        let f = cholesky(&v).unwrap();
        let logdet_eig: f64 = s.values().iter().map(|l| l.ln()).sum();
        assert!(
            (f.logdet() - logdet_eig).abs() < 1e-6 * f.logdet().abs().max(1.0),
            "chol {} vs eig {}",
            f.logdet(),
            logdet_eig
        );
    }

    #[test]
    #[ignore = "manual perf probe"]
    fn perf_probe() {
        use std::time::Instant;
        for &n in &[900usize, 1600] {
            let mut rng = Lcg(n as u64);
            let coords: Vec<f64> = (0..2 * n).map(|_| rng.next_f64()).collect();
            let locs = LocationSet::new(2, coords).unwrap();
            let p = NoisyModelParams::from_parts(0.2, 1.0, 7.489, 0.5).unwrap();
            let t0 = Instant::now();
            let v = build_cov_matrix(&p, &locs);
            let t_build = t0.elapsed();
            let t0 = Instant::now();
            let f = cholesky(&v).unwrap();
            let t_chol = t0.elapsed();
            let t0 = Instant::now();
            let inv = f.inverse();
            let t_inv = t0.elapsed();
            let t0 = Instant::now();
            let s = eigen_sym(&v).unwrap();
            let t_eig = t0.elapsed();
            let y = Array1::from_vec((0..n).map(|_| rng.next_f64()).collect());
            let t0 = Instant::now();
            let (_, _) = eigen_sym_rotate(&v, &y).unwrap();
            let t_rot = t0.elapsed();
            println!(
                "n={n}: build {:?} chol {:?} inv {:?} eig {:?} eig+rot {:?} (lmax {:.3}, inv00 {:.4})",
                t_build, t_chol, t_inv, t_eig, t_rot, s.values()[0], inv[(0, 0)]
            );
        }
    }

    #[test]
    fn kernel_matrices_positive_definite_with_nugget() {
        // random designs stay factorizable when τ² > 0
        let mut rng = Lcg(2024);
        for &d in &[1usize, 2, 3] {
            for &nu in &[0.5, 1.2, 2.5] {
                let n = 50;
                let coords: Vec<f64> = (0..n * d).map(|_| rng.next_f64()).collect();
                let locs = match LocationSet::new(d, coords) {
                    Ok(l) => l,
                    Err(_) => continue,
                };
                let p = NoisyModelParams::new(
                    MaternParams::new(1.0, 5.0, nu).unwrap(),
                    0.05,
                )
                .unwrap();
                let v = build_cov_matrix(&p, &locs);
                assert!(cholesky(&v).is_ok(), "d={d}, nu={nu}");
            }
        }
    }
}
