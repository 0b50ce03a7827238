//! Dense eigenvalues of general complex matrices.
//!
//! Pipeline: diagonal balancing (powers of two), Householder reduction
//! to upper Hessenberg form, then single-shift complex QR with
//! Wilkinson shifts and exceptional shifts on stagnation. Eigenpairs are
//! checked afterwards by inverse iteration on the Hessenberg form, with
//! the eigenvector mapped back to the original basis.

use crate::error::{Error, Result};
use crate::matrix::{vec_norm, CMatrix, C64, ONE, ZERO};

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Raw eigenvalues plus the reduction needed to recover eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    hessenberg: CMatrix,
    reflectors: Vec<(usize, Vec<C64>)>,
    scale: Vec<f64>,
}

impl EigenDecomposition {
    /// Computes all eigenvalues of `m`.
    pub fn new(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "eigenvalues need a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.as_slice()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let mut a = m.clone();
        let scale = balance(&mut a);
        let reflectors = hessenberg(&mut a);
        let mut work = a.clone();
        let eigenvalues = hessenberg_qr(&mut work)?;
        Ok(Self {
            eigenvalues,
            hessenberg: a,
            reflectors,
            scale,
        })
    }

    /// Approximate eigenvector for `lambda` in the original basis, by
    /// inverse iteration on the Hessenberg form.
    pub fn eigenvector(&self, lambda: C64) -> Vec<C64> {
        let h = &self.hessenberg;
        let n = h.nrows();
        let hnorm = h.frobenius_norm().max(f64::MIN_POSITIVE);
        let lu = HessenbergLu::factor(h, lambda, f64::EPSILON * hnorm);
        let mut v: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0, 0.0) / ((i + 1) as f64).sqrt())
            .collect();
        // On defective eigenvalues further steps drift away from the
        // first, already converged iterate, so keep the best one.
        let mut best = v.clone();
        let mut best_res = f64::INFINITY;
        for _ in 0..3 {
            lu.solve(&mut v);
            let norm = vec_norm(&v);
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            let res = relative_residual(h, lambda, &v);
            if res < best_res {
                best_res = res;
                best.copy_from_slice(&v);
            }
            if res <= n as f64 * f64::EPSILON {
                break;
            }
        }
        let mut v = best;
        // undo the Householder reflections, last first
        for (k, u) in self.reflectors.iter().rev() {
            reflect(&mut v[*k..], u);
        }
        for (z, s) in v.iter_mut().zip(&self.scale) {
            *z *= *s;
        }
        let norm = vec_norm(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|z| *z /= norm);
        }
        v
    }
}

/// Relative residual `||A v - lambda v|| / ||A||_F` for a unit `v`.
pub fn relative_residual(a: &CMatrix, lambda: C64, v: &[C64]) -> f64 {
    let av = a.mul_vec(v);
    let r: Vec<C64> = av.iter().zip(v).map(|(x, y)| x - lambda * y).collect();
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        vec_norm(&r)
    } else {
        vec_norm(&r) / norm
    }
}

/// Diagonal similarity `D^-1 A D` with power-of-two entries chosen so row
/// and column norms are comparable. Returns the diagonal of `D`.
fn balance(a: &mut CMatrix) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut d = vec![1.0; n];
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            return d;
        }
    }
}

/// `x <- (I - 2 u u^H) x` for unit `u`.
fn reflect(x: &mut [C64], u: &[C64]) {
    let dot: C64 = u.iter().zip(x.iter()).map(|(ui, xi)| ui.conj() * xi).sum();
    for (xi, ui) in x.iter_mut().zip(u) {
        *xi -= ui * dot * 2.0;
    }
}

/// Reduces `a` to upper Hessenberg form in place; returns the unit
/// reflector vectors with their starting row.
fn hessenberg(a: &mut CMatrix) -> Vec<(usize, Vec<C64>)> {
    let n = a.nrows();
    let mut reflectors = Vec::new();
    for k in 0..n.saturating_sub(2) {
        let start = k + 1;
        let x: Vec<C64> = (start..n).map(|r| a[(r, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0] == ZERO {
            ONE
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * xnorm;
        let mut u = x;
        u[0] -= alpha;
        let unorm = vec_norm(&u);
        u.iter_mut().for_each(|z| *z /= unorm);

        // left: rows start.., columns k..
        for c in k..n {
            let dot: C64 = (start..n).map(|r| u[r - start].conj() * a[(r, c)]).sum();
            for r in start..n {
                let ur = u[r - start];
                a[(r, c)] -= ur * dot * 2.0;
            }
        }
        // right: all rows, columns start..
        for r in 0..n {
            let dot: C64 = (start..n).map(|c| a[(r, c)] * u[c - start]).sum();
            for c in start..n {
                let uc = u[c - start].conj();
                a[(r, c)] -= dot * uc * 2.0;
            }
        }
        for r in start + 1..n {
            a[(r, k)] = ZERO;
        }
        reflectors.push((start, u));
    }
    reflectors
}

/// Givens rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, y.conj() / y.norm());
    }
    let xn = x.norm();
    let norm = xn.hypot(y.norm());
    (xn / norm, (x / xn) * y.conj() / norm)
}

fn rotate_rows(h: &mut CMatrix, k: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for col in cols {
        let a = h[(k, col)];
        let b = h[(k + 1, col)];
        h[(k, col)] = a * c + s * b;
        h[(k + 1, col)] = -s.conj() * a + b * c;
    }
}

fn rotate_cols(h: &mut CMatrix, k: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for row in rows {
        let a = h[(row, k)];
        let b = h[(row, k + 1)];
        h[(row, k)] = a * c + b * s.conj();
        h[(row, k + 1)] = -a * s + b * c;
    }
}

/// Eigenvalues of an upper Hessenberg matrix by implicit single-shift QR.
/// The matrix is destroyed.
fn hessenberg_qr(h: &mut CMatrix) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut w = vec![ZERO; n];
    if n == 0 {
        return Ok(w);
    }
    let eps = f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;
    let smlnum = safmin * (n as f64 / eps);
    let budget = 30 * n.max(10) * n;
    let mut spent = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;

    loop {
        // look for a negligible subdiagonal in [0, hi]
        let mut l = hi;
        while l > 0 {
            let sub = abs1(h[(l, l - 1)]);
            if sub <= smlnum {
                break;
            }
            let mut tst = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if tst == 0.0 {
                if l >= 2 {
                    tst += h[(l - 1, l - 2)].re.abs();
                }
                if l < hi {
                    tst += h[(l + 1, l)].re.abs();
                }
            }
            if sub <= eps * tst {
                // Ahues-Tisseur refinement of the standard test
                let ab = sub.max(abs1(h[(l - 1, l)]));
                let ba = sub.min(abs1(h[(l - 1, l)]));
                let diff = h[(l - 1, l - 1)] - h[(l, l)];
                let aa = abs1(h[(l, l)]).max(abs1(diff));
                let bb = abs1(h[(l, l)]).min(abs1(diff));
                let s = aa + ab;
                if ba * (ab / s) <= smlnum.max(eps * (bb * (aa / s))) {
                    break;
                }
            }
            l -= 1;
        }
        if l > 0 {
            h[(l, l - 1)] = ZERO;
        }

        if l == hi {
            w[hi] = h[(hi, hi)];
            its = 0;
            if hi == 0 {
                return Ok(w);
            }
            hi -= 1;
            continue;
        }

        if l + 1 == hi {
            // a 2x2 block with equal diagonal can cycle on roundoff-sized
            // subdiagonals, so solve it directly
            let (a, b, c, d) = (h[(l, l)], h[(l, hi)], h[(hi, l)], h[(hi, hi)]);
            let mean = (a + d) * 0.5;
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            w[l] = mean + disc;
            w[hi] = mean - disc;
            its = 0;
            if l == 0 {
                return Ok(w);
            }
            hi = l - 1;
            continue;
        }

        spent += 1;
        its += 1;
        if spent > budget {
            return Err(Error::NoConvergence {
                lo: l,
                hi,
                iterations: spent,
            });
        }

        let shift = if its.is_multiple_of(10) {
            // exceptional shifts break cycles of the standard shift
            let s = 0.75
                * if its.is_multiple_of(20) {
                    h[(hi, hi - 1)].re.abs()
                } else {
                    h[(l + 1, l)].re.abs()
                };
            s + if its.is_multiple_of(20) {
                h[(hi, hi)]
            } else {
                h[(l, l)]
            }
        } else {
            wilkinson_shift(h, hi)
        };

        // bulge chase over the active block [l, hi]
        let (c, s) = givens(h[(l, l)] - shift, h[(l + 1, l)]);
        rotate_rows(h, l, c, s, l..hi + 1);
        rotate_cols(h, l, c, s, l..(l + 3).min(hi + 1));
        for k in l + 1..hi {
            let (c, s) = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
            rotate_rows(h, k, c, s, k - 1..hi + 1);
            h[(k + 1, k - 1)] = ZERO;
            rotate_cols(h, k, c, s, l..(k + 3).min(hi + 1));
        }
    }
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> C64 {
    let mut t = h[(hi, hi)];
    let u = h[(hi - 1, hi)].sqrt() * h[(hi, hi - 1)].sqrt();
    let s = abs1(u);
    if s != 0.0 {
        let x = (h[(hi - 1, hi - 1)] - t) * 0.5;
        let sx = abs1(x);
        let scale = s.max(sx);
        let xs = x / scale;
        let us = u / scale;
        let mut y = (xs * xs + us * us).sqrt() * scale;
        if sx > 0.0 {
            let xr = x / sx;
            let yr = y / sx;
            if xr.re * yr.re + xr.im * yr.im < 0.0 {
                y = -y;
            }
        }
        let denom = x + y;
        if denom != ZERO {
            t -= u * (u / denom);
        }
    }
    t
}

/// LU of `H - lambda I` for Hessenberg `H` with pivoting between adjacent
/// rows. Tiny pivots are replaced by `floor`.
struct HessenbergLu {
    u: CMatrix,
    multipliers: Vec<C64>,
    swapped: Vec<bool>,
}

impl HessenbergLu {
    fn factor(h: &CMatrix, lambda: C64, floor: f64) -> Self {
        let n = h.nrows();
        let mut u = h.clone();
        for i in 0..n {
            u[(i, i)] -= lambda;
        }
        let mut multipliers = vec![ZERO; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            if u[(k + 1, k)].norm() > u[(k, k)].norm() {
                for c in k..n {
                    let tmp = u[(k, c)];
                    u[(k, c)] = u[(k + 1, c)];
                    u[(k + 1, c)] = tmp;
                }
                swapped[k] = true;
            }
            if u[(k, k)].norm() < floor {
                u[(k, k)] = C64::new(floor.max(f64::MIN_POSITIVE), 0.0);
            }
            let m = u[(k + 1, k)] / u[(k, k)];
            multipliers[k] = m;
            u[(k + 1, k)] = ZERO;
            if m != ZERO {
                for c in k + 1..n {
                    let v = u[(k, c)];
                    u[(k + 1, c)] -= m * v;
                }
            }
        }
        if n > 0 && u[(n - 1, n - 1)].norm() < floor {
            u[(n - 1, n - 1)] = C64::new(floor.max(f64::MIN_POSITIVE), 0.0);
        }
        Self {
            u,
            multipliers,
            swapped,
        }
    }

    fn solve(&self, b: &mut [C64]) {
        let n = b.len();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            let v = b[k];
            b[k + 1] -= self.multipliers[k] * v;
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in k + 1..n {
                acc -= self.u[(k, c)] * b[c];
            }
            b[k] = acc / self.u[(k, k)];
        }
    }
}
