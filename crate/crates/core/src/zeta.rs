//! Power traces and the IPS-type zeta function.
//!
//! `C_r = 2^-N tr(Q_N^r)` and
//! `log zeta(u) = sum_r C_r u^r / r = -2^-N log det(I - u Q_N)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::global::{apply_in_place, Caps};
use crate::local::LocalOperator;
use crate::matrix::{vec_norm, C64, ONE, ZERO};
use crate::spectrum::SpectrumMultiset;
use crate::verify::VerificationReport;

/// `tr(Q_n)` as the grand sum of `T^(n-1)` with `T[i][j] = a_{ij}^{ij}`.
pub fn trace_path_sum(local: &LocalOperator, n: usize) -> C64 {
    assert!(n >= 1, "n must be positive");
    if n == 1 {
        return C64::new(2.0, 0.0);
    }
    let t = local.diagonal_transfer();
    // row vector (1, 1) pushed through n-1 copies of T
    let mut row = [ONE, ONE];
    for _ in 0..n - 1 {
        row = [
            row[0] * t[0][0] + row[1] * t[1][0],
            row[0] * t[0][1] + row[1] * t[1][1],
        ];
    }
    row[0] + row[1]
}

/// `tr(Q_n^r)` for `r = 1..=r_max`, accumulated from matrix-free powers
/// applied to every basis vector.
pub fn power_traces(
    local: &LocalOperator,
    n: usize,
    r_max: usize,
    caps: &Caps,
) -> Result<Vec<C64>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    caps.check_dense(n)?;
    let dim = 1usize << n;
    let traces = (0..dim)
        .into_par_iter()
        .fold(
            || (vec![ZERO; r_max], vec![ZERO; dim]),
            |(mut acc, mut v), b| {
                v.iter_mut().for_each(|z| *z = ZERO);
                v[b] = ONE;
                for slot in acc.iter_mut() {
                    apply_in_place(local, n, &mut v).expect("buffer length matches n");
                    *slot += v[b];
                }
                (acc, v)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![ZERO; r_max],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(traces)
}

/// `C_r = 2^-n tr(Q_n^r)`.
pub fn c_r(local: &LocalOperator, n: usize, r: usize, caps: &Caps) -> Result<C64> {
    if r == 0 {
        return Err(Error::InvalidInput("r must be at least 1".into()));
    }
    let traces = power_traces(local, n, r, caps)?;
    Ok(traces[r - 1] / (1u64 << n) as f64)
}

/// Growth-rate estimate of the spectral radius from 50 matrix-free power
/// steps on a fixed pseudo-random start, times a 1.1 safety factor.
pub fn spectral_radius_estimate(local: &LocalOperator, n: usize, caps: &Caps) -> Result<f64> {
    const STEPS: usize = 50;
    const BURN_IN: usize = 25;
    caps.check_matrix_free(n)?;
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_5bec);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut log_growth = 0.0;
    for step in 0..STEPS {
        let before = vec_norm(&v);
        apply_in_place(local, n, &mut v)?;
        let after = vec_norm(&v);
        if after == 0.0 || !after.is_finite() {
            return Ok(0.0);
        }
        if step >= BURN_IN {
            log_growth += (after / before).ln();
        }
        v.iter_mut().for_each(|z| *z /= after);
    }
    Ok(1.1 * (log_growth / (STEPS - BURN_IN) as f64).exp())
}

/// Truncated coefficients `C_1..C_R` of `log zeta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaSeries {
    pub n_sites: usize,
    pub r_max: usize,
    /// `coeffs[r - 1] = C_r`.
    pub coeffs: Vec<C64>,
    /// `1 / rho_hat`, the estimated convergence radius in `u`.
    pub radius_hint: f64,
    pub rho_hat: f64,
}

/// Truncated series value with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub log_zeta: C64,
    /// Tail bound, available when `rho_hat |u| < 1`.
    pub truncation_bound: Option<f64>,
}

impl SeriesValue {
    pub fn zeta(&self) -> C64 {
        self.log_zeta.exp()
    }
}

impl ZetaSeries {
    pub fn coefficient(&self, r: usize) -> C64 {
        self.coeffs[r - 1]
    }

    /// `sum_{r <= R} C_r u^r / r`.
    pub fn evaluate(&self, u: C64) -> SeriesValue {
        let mut power = ONE;
        let mut sum = ZERO;
        for (idx, c) in self.coeffs.iter().enumerate() {
            power *= u;
            sum += c * power / (idx + 1) as f64;
        }
        let x = self.rho_hat * u.norm();
        let truncation_bound = (x < 1.0).then(|| {
            let next = (self.r_max + 1) as f64;
            x.powi(self.r_max as i32 + 1) / (next * (1.0 - x))
        });
        SeriesValue {
            log_zeta: sum,
            truncation_bound,
        }
    }
}

pub fn zeta_log_series(
    local: &LocalOperator,
    n: usize,
    r_max: usize,
    caps: &Caps,
) -> Result<ZetaSeries> {
    if r_max == 0 {
        return Err(Error::InvalidInput("r_max must be at least 1".into()));
    }
    let scale = (1u64 << n) as f64;
    let coeffs = power_traces(local, n, r_max, caps)?
        .into_iter()
        .map(|t| t / scale)
        .collect();
    let rho_hat = spectral_radius_estimate(local, n, caps)?;
    Ok(ZetaSeries {
        n_sites: n,
        r_max,
        coeffs,
        radius_hint: if rho_hat > 0.0 {
            1.0 / rho_hat
        } else {
            f64::INFINITY
        },
        rho_hat,
    })
}

/// Determinant-form zeta value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaValue {
    pub log_zeta: C64,
    pub zeta: C64,
    /// `|u| >= 1 / rho`: the per-factor principal branch may differ from
    /// the exponentiated series.
    pub branch_ambiguous: bool,
}

/// `exp(-2^-n sum_j m_j log(1 - lambda_j u))` from a computed spectrum.
pub fn zeta_det_from_spectrum(spec: &SpectrumMultiset, n: usize, u: C64) -> Result<ZetaValue> {
    let scale = (1u64 << n) as f64;
    let mut log_det = ZERO;
    for &(lambda, m) in spec.entries() {
        let factor = ONE - lambda * u;
        if factor.norm() <= f64::EPSILON * 16.0 {
            return Err(Error::SingularFactor {
                lambda: format!("{lambda}"),
            });
        }
        log_det += factor.ln() * m as f64;
    }
    let log_zeta = -log_det / scale;
    Ok(ZetaValue {
        log_zeta,
        zeta: log_zeta.exp(),
        branch_ambiguous: spec.spectral_radius() * u.norm() >= 1.0,
    })
}

/// `det(I - u Q_n)^(-1/2^n)` via the dense spectrum.
pub fn zeta_det(local: &LocalOperator, n: usize, u: C64, caps: &Caps) -> Result<ZetaValue> {
    caps.check_eigen(n)?;
    if u == ZERO {
        return Ok(ZetaValue {
            log_zeta: ZERO,
            zeta: ONE,
            branch_ambiguous: false,
        });
    }
    let dense = crate::global::build_global_recursive(local, n, caps)?.into_dense()?;
    let opts = crate::spectrum::EigOptions {
        max_dim: 1 << n,
        ..Default::default()
    };
    let spec = crate::spectrum::eig_dense(&dense, &opts)?;
    zeta_det_from_spectrum(&spec, n, u)
}

/// `((1 + t^r) / 2)^(n-1)`.
pub fn theorem3_c_r(t: C64, n: usize, r: usize) -> C64 {
    assert!(n >= 1, "n must be positive");
    ((ONE + t.powu(r as u32)) * 0.5).powu((n - 1) as u32)
}

/// Symmetric binomial law `P(X_n = k) = C(n,k) / 2^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialWeights {
    pub n: usize,
    pub weights: Vec<f64>,
}

impl BinomialWeights {
    pub fn new(n: usize) -> Self {
        let mut weights = Vec::with_capacity(n + 1);
        let mut w = 0.5f64.powi(n as i32);
        for k in 0..=n {
            weights.push(w);
            w = w * (n - k) as f64 / (k + 1) as f64;
        }
        Self { n, weights }
    }

    /// Support of the signed walk `S_n = 2k - n` paired with the weights.
    pub fn signed(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(k, &w)| (2 * k as i64 - self.n as i64, w))
    }

    pub fn expectation(&self, f: impl Fn(usize) -> C64) -> C64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, &w)| f(k) * w)
            .sum()
    }
}

/// `-E[log(1 - t^X u)]` with `X ~ Binomial(n - 1, 1/2)`.
pub fn theorem3_log_zeta(t: C64, n: usize, u: C64) -> Result<C64> {
    assert!(n >= 1, "n must be positive");
    let weights = BinomialWeights::new(n - 1);
    let mut acc = ZERO;
    for (k, &w) in weights.weights.iter().enumerate() {
        let x = t.powu(k as u32) * u;
        let factor = ONE - x;
        if factor.norm() <= f64::EPSILON * 16.0 {
            return Err(Error::SingularFactor {
                lambda: format!("{}", t.powu(k as u32)),
            });
        }
        acc -= factor.ln() * w;
    }
    Ok(acc)
}

/// `-E[log(1 - exp(i S xi) u)]` with `S = S_{n-1}`.
pub fn qca_remark_log_zeta(xi: f64, n: usize, u: C64) -> C64 {
    let weights = BinomialWeights::new(n - 1);
    weights
        .signed()
        .map(|(s, w)| -(ONE - C64::from_polar(1.0, s as f64 * xi) * u).ln() * w)
        .sum()
}

/// Checks `C_r = (cos r xi)^(n-1)` for the rotation QCA up to `r_max`.
pub fn qca_remark_check(
    xi: f64,
    n: usize,
    r_max: usize,
    caps: &Caps,
) -> Result<VerificationReport> {
    const TOL: f64 = 1e-9;
    let local = LocalOperator::qca_rotation(xi);
    let series = zeta_log_series(&local, n, r_max, caps)?;
    let worst = series
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let r = (idx + 1) as f64;
            (c - C64::new((r * xi).cos().powi(n as i32 - 1), 0.0)).norm()
        })
        .fold(0.0, f64::max);
    Ok(VerificationReport::new("remark", n, TOL, worst)
        .with_note(format!("xi = {xi}, r <= {r_max}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::build_global_recursive;
    use std::f64::consts::PI;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn path_sum_examples() {
        assert_eq!(
            trace_path_sum(&LocalOperator::dk_form(1.0, 0.0), 3),
            re(2.0)
        );
        assert!((trace_path_sum(&LocalOperator::dk_form(0.5, 0.5), 3) - re(3.25)).norm() < 1e-15);
        let local = LocalOperator::dk_form(0.2, 0.7);
        assert!((trace_path_sum(&local, 2) - local.to_matrix().trace()).norm() < 1e-15);
        assert_eq!(trace_path_sum(&local, 1), re(2.0));
    }

    #[test]
    fn table_two_coefficients() {
        let local = LocalOperator::dk_form(1.0, 0.0);
        let caps = Caps::default();
        let want = [0.25, 0.5, 0.25, 1.0];
        for (r, w) in (1..=4).zip(want) {
            assert!((c_r(&local, 3, r, &caps).unwrap() - re(w)).norm() < 1e-12);
        }
    }

    #[test]
    fn c1_for_t_case_dk() {
        let c1 = c_r(&LocalOperator::dk_form(0.3, 0.6), 3, 1, &Caps::default()).unwrap();
        assert!((c1 - re(0.4225)).norm() < 1e-12);
        assert!((theorem3_c_r(re(0.3), 3, 1) - re(0.4225)).norm() < 1e-15);
        assert!((theorem3_c_r(re(0.3), 3, 2) - re(0.297025)).norm() < 1e-15);
        assert_eq!(theorem3_c_r(re(1.0), 7, 5), re(1.0));
        assert_eq!(theorem3_c_r(re(0.0), 4, 3), re(0.125));
    }

    #[test]
    fn one_site_series_is_geometric() {
        let s =
            zeta_log_series(&LocalOperator::dk_form(0.4, 0.1), 1, 30, &Caps::default()).unwrap();
        assert!(s.coeffs.iter().all(|c| *c == ONE));
        let v = s.evaluate(re(0.1));
        assert!((v.log_zeta + (1.0f64 - 0.1).ln()).norm() < 1e-14);
        assert_eq!(s.evaluate(ZERO).log_zeta, ZERO);
    }

    #[test]
    fn one_site_determinant() {
        let z = zeta_det(&LocalOperator::identity(), 1, re(0.5), &Caps::default()).unwrap();
        assert!((z.zeta - re(2.0)).norm() < 1e-14);
        let z = zeta_det(&LocalOperator::identity(), 3, ZERO, &Caps::default()).unwrap();
        assert_eq!(z.zeta, ONE);
    }

    #[test]
    fn series_matches_log_det_for_dk_one_zero() {
        let local = LocalOperator::dk_form(1.0, 0.0);
        let caps = Caps::default();
        let s = zeta_log_series(&local, 3, 40, &caps).unwrap();
        let u = re(0.1);
        // determinant computed directly from the dense matrix
        let m = build_global_recursive(&local, 3, &caps)
            .unwrap()
            .into_dense()
            .unwrap();
        let det = lu_det(&crate::matrix::CMatrix::identity(8).add(&m.scale(-u)));
        let want = -det.ln() / 8.0;
        assert!((s.evaluate(u).log_zeta - want).norm() < 1e-12);
    }

    #[test]
    fn det_and_series_agree_for_dk_half() {
        let local = LocalOperator::dk_form(0.5, 0.5);
        let caps = Caps::default();
        let u = re(0.2);
        let z = zeta_det(&local, 3, u, &caps).unwrap();
        let s = zeta_log_series(&local, 3, 60, &caps).unwrap().evaluate(u);
        assert!((z.zeta - s.zeta()).norm() < 1e-10);
        assert!(s.truncation_bound.unwrap() < 1e-30);
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        for n in [0usize, 1, 5, 30, 60] {
            let w = BinomialWeights::new(n);
            assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert_eq!(w.weights.len(), n + 1);
        }
        let signed: Vec<i64> = BinomialWeights::new(3).signed().map(|(s, _)| s).collect();
        assert_eq!(signed, vec![-3, -1, 1, 3]);
    }

    #[test]
    fn theorem3_log_zeta_examples() {
        let u = re(0.37);
        let v = theorem3_log_zeta(ONE, 5, u).unwrap();
        assert!((v + (ONE - u).ln()).norm() < 1e-15);
        assert_eq!(theorem3_log_zeta(re(0.3), 3, ZERO).unwrap(), ZERO);
        let v = theorem3_log_zeta(re(0.3), 3, re(0.5)).unwrap();
        let want = -0.25 * 0.5f64.ln() - 0.5 * 0.85f64.ln() - 0.25 * 0.955f64.ln();
        assert!((v - re(want)).norm() < 1e-15);
        assert!(matches!(
            theorem3_log_zeta(ONE, 3, ONE),
            Err(Error::SingularFactor { .. })
        ));
    }

    #[test]
    fn remark_examples() {
        let caps = Caps::default();
        let s = zeta_log_series(&LocalOperator::qca_rotation(0.0), 4, 5, &caps).unwrap();
        assert!(s.coeffs.iter().all(|c| (c - ONE).norm() < 1e-15));
        let c1 = c_r(&LocalOperator::qca_rotation(PI / 3.0), 4, 1, &caps).unwrap();
        assert!((c1 - re(0.125)).norm() < 1e-12);
        let c2 = c_r(&LocalOperator::qca_rotation(PI / 2.0), 3, 2, &caps).unwrap();
        assert!((c2 - ONE).norm() < 1e-12);
        let report = qca_remark_check(PI / 3.0, 4, 10, &caps).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn spectral_radius_hint() {
        let caps = Caps::default();
        let rho = spectral_radius_estimate(&LocalOperator::dk_form(0.4, 0.6), 6, &caps).unwrap();
        assert!((rho - 1.1).abs() < 1e-3, "{rho}");
        // DK(0,0) kills everything except the last site
        let rho = spectral_radius_estimate(&LocalOperator::dk_form(0.0, 0.0), 4, &caps).unwrap();
        assert!((rho - 1.1).abs() < 1e-3);
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    fn lu_det(m: &crate::matrix::CMatrix) -> C64 {
        let n = m.nrows();
        let mut a = m.clone();
        let mut det = ONE;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].norm().total_cmp(&a[(y, k)].norm()))
                .unwrap();
            if p != k {
                for c in 0..n {
                    let tmp = a[(k, c)];
                    a[(k, c)] = a[(p, c)];
                    a[(p, c)] = tmp;
                }
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for r in k + 1..n {
                let f = a[(r, k)] / pivot;
                for c in k..n {
                    let v = a[(k, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
        det
    }
}
