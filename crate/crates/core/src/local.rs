//! Nearest-neighbour local operators.
//!
//! A local operator is a 4x4 table `a[(k,l)][(i,j)]` of transition
//! weights from the pair state `(i,j)` to `(k,l)`. Row index is
//! `2k + l`, column index is `2i + j`. The right site never changes,
//! so every entry with `j != l` is zero.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, C64, ONE, ZERO};

/// Classification of a local operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OperatorClass {
    /// Deterministic: every weight is 0 or 1.
    Ca,
    /// Probabilistic: transposed column-stochastic.
    Pca,
    /// Quantum: both column blocks unitary.
    Qca,
    General,
}

impl fmt::Display for OperatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorClass::Ca => "CA",
            OperatorClass::Pca => "PCA",
            OperatorClass::Qca => "QCA",
            OperatorClass::General => "GENERAL",
        };
        f.write_str(s)
    }
}

#[inline]
pub(crate) fn pair_index(a: u8, b: u8) -> usize {
    2 * a as usize + b as usize
}

/// Validated 4x4 local operator.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    entries: [C64; 16],
    label: Option<String>,
}

impl LocalOperator {
    /// Builds from 16 entries in row-major `(k,l) x (i,j)` order.
    pub fn new(entries: [C64; 16]) -> Result<Self> {
        for k in 0..2u8 {
            for l in 0..2u8 {
                for i in 0..2u8 {
                    for j in 0..2u8 {
                        let v = entries[4 * pair_index(k, l) + pair_index(i, j)];
                        if j != l && v != ZERO {
                            return Err(Error::SparsityViolation {
                                k,
                                l,
                                i,
                                j,
                                value: format!("{v}"),
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            entries,
            label: None,
        })
    }

    /// Builds from the eight admissible weights `a_kl^ij` with `j == l`.
    /// The closure receives `(k, i, j)` and returns `a[(k,j)][(i,j)]`.
    pub fn from_admissible(mut weight: impl FnMut(u8, u8, u8) -> C64) -> Self {
        let mut entries = [ZERO; 16];
        for k in 0..2u8 {
            for i in 0..2u8 {
                for j in 0..2u8 {
                    entries[4 * pair_index(k, j) + pair_index(i, j)] = weight(k, i, j);
                }
            }
        }
        Self {
            entries,
            label: None,
        }
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if m.nrows() != 4 || m.ncols() != 4 {
            return Err(Error::InvalidInput(format!(
                "local operator must be 4x4, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut entries = [ZERO; 16];
        entries.copy_from_slice(m.as_slice());
        Self::new(entries)
    }

    pub fn identity() -> Self {
        Self::from_admissible(|k, i, _| if k == i { ONE } else { ZERO }).with_label("identity")
    }

    /// Local operator with the Domany-Kinzel layout for arbitrary real
    /// `p`, `q`. No range check: values outside `[0,1]` give a
    /// non-stochastic operator with unit column sums.
    pub fn dk_form(p: f64, q: f64) -> Self {
        let re = |x: f64| C64::new(x, 0.0);
        let mut entries = [ZERO; 16];
        let mut set = |k, l, i, j, v| entries[4 * pair_index(k, l) + pair_index(i, j)] = v;
        set(0, 0, 0, 0, ONE);
        set(0, 0, 1, 0, re(1.0 - p));
        set(0, 1, 0, 1, re(1.0 - p));
        set(0, 1, 1, 1, re(1.0 - q));
        set(1, 0, 1, 0, re(p));
        set(1, 1, 0, 1, re(p));
        set(1, 1, 1, 1, re(q));
        Self {
            entries,
            label: Some(format!("dk({p},{q})")),
        }
    }

    /// Rotation-type quantum local operator `Q_QCA,1(xi, xi)`: both
    /// column blocks are `[[cos, -sin], [sin, cos]]`.
    pub fn qca_rotation(xi: f64) -> Self {
        let (s, c) = xi.sin_cos();
        Self::from_admissible(|k, i, _| {
            let v = match (k, i) {
                (0, 0) | (1, 1) => c,
                (0, 1) => -s,
                _ => s,
            };
            C64::new(v, 0.0)
        })
        .with_label(format!("qca1({xi})"))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// `a[(k,l)][(i,j)]`.
    #[inline]
    pub fn a(&self, k: u8, l: u8, i: u8, j: u8) -> C64 {
        self.entries[4 * pair_index(k, l) + pair_index(i, j)]
    }

    pub fn entries(&self) -> &[C64; 16] {
        &self.entries
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_rows(4, 4, self.entries.to_vec())
    }

    /// The 2x2 block acting on the left site when the right site is `j`:
    /// `[[a_{0j}^{0j}, a_{0j}^{1j}], [a_{1j}^{0j}, a_{1j}^{1j}]]`.
    pub fn column_block(&self, j: u8) -> [[C64; 2]; 2] {
        [
            [self.a(0, j, 0, j), self.a(0, j, 1, j)],
            [self.a(1, j, 0, j), self.a(1, j, 1, j)],
        ]
    }

    /// Diagonal transfer matrix `T[i][j] = a_{ij}^{ij}`.
    pub fn diagonal_transfer(&self) -> [[C64; 2]; 2] {
        [
            [self.a(0, 0, 0, 0), self.a(0, 1, 0, 1)],
            [self.a(1, 0, 1, 0), self.a(1, 1, 1, 1)],
        ]
    }

    /// Scalings `(a10^10 - a10^00, a11^11 - a11^01)` of the second block
    /// in the spectral recursion.
    pub fn recursion_scalings(&self) -> (C64, C64) {
        (
            self.a(1, 0, 1, 0) - self.a(1, 0, 0, 0),
            self.a(1, 1, 1, 1) - self.a(1, 1, 0, 1),
        )
    }

    /// Common value `t` when both recursion scalings agree within `tol`.
    pub fn t_parameter(&self, tol: f64) -> Option<C64> {
        let (a, b) = self.recursion_scalings();
        ((a - b).norm() <= tol).then_some((a + b) * 0.5)
    }

    /// Worst deviation of the four column sums from 1.
    pub fn column_sum_defect(&self) -> f64 {
        (0..4)
            .map(|c| ((0..4).map(|r| self.entries[4 * r + c]).sum::<C64>() - ONE).norm())
            .fold(0.0, f64::max)
    }

    pub fn classify(&self, tol: f64) -> OperatorClass {
        if self.is_ca(tol) {
            OperatorClass::Ca
        } else if self.is_pca(tol) {
            OperatorClass::Pca
        } else if self.is_qca(tol) {
            OperatorClass::Qca
        } else {
            OperatorClass::General
        }
    }

    fn is_ca(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|z| z.im.abs() <= tol && (z.re.abs() <= tol || (z.re - 1.0).abs() <= tol))
    }

    fn is_pca(&self, tol: f64) -> bool {
        let in_unit = self
            .entries
            .iter()
            .all(|z| z.im.abs() <= tol && z.re >= -tol && z.re <= 1.0 + tol);
        in_unit && self.column_sum_defect() <= tol
    }

    fn is_qca(&self, tol: f64) -> bool {
        (0..2u8).all(|j| {
            let b = self.column_block(j);
            let n0 = b[0][0].norm_sqr() + b[1][0].norm_sqr();
            let n1 = b[0][1].norm_sqr() + b[1][1].norm_sqr();
            let inner = b[0][0] * b[0][1].conj() + b[1][0] * b[1][1].conj();
            (n0 - 1.0).abs() <= tol && (n1 - 1.0).abs() <= tol && inner.norm() <= tol
        })
    }

    /// Random deterministic rule: each pair state `(i, j)` is sent to
    /// `(k, j)` with `k` a fair coin.
    pub fn random_ca<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let targets: [u8; 4] = std::array::from_fn(|_| u8::from(rng.gen::<bool>()));
        Self::from_admissible(|k, i, j| {
            if targets[pair_index(i, j)] == k {
                ONE
            } else {
                ZERO
            }
        })
        .with_label("random-ca")
    }

    /// Random transposed-stochastic operator: each column pair is
    /// `(x, 1 - x)` with `x` uniform.
    pub fn random_pca<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut cols = [0.0; 4];
        for c in cols.iter_mut() {
            *c = rng.gen::<f64>();
        }
        Self::from_admissible(|k, i, j| {
            let x = cols[pair_index(i, j)];
            C64::new(if k == 0 { x } else { 1.0 - x }, 0.0)
        })
        .with_label("random-pca")
    }

    /// Random quantum operator: two independent Haar-distributed 2x2
    /// unitaries in the column blocks.
    pub fn random_qca<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let blocks = [haar_u2(rng), haar_u2(rng)];
        Self::from_admissible(|k, i, j| blocks[j as usize][k as usize][i as usize])
            .with_label("random-qca")
    }

    /// Random operator with independent standard complex Gaussian weights.
    pub fn random_general<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_admissible(|_, _, _| complex_gaussian(rng)).with_label("random-general")
    }

    /// Random real operator with unit column sums satisfying
    /// `a10^10 - a10^00 = a11^11 - a11^01 = t`.
    pub fn random_t_condition<R: Rng + ?Sized>(rng: &mut R, t: f64) -> Self {
        let b0: f64 = rng.gen_range(-0.5..0.5);
        let b1: f64 = rng.gen_range(-0.5..0.5);
        // second-row weights; the first row is fixed by the column sums
        let lower = |i: u8, j: u8| match (i, j) {
            (0, 0) => b0,
            (1, 0) => b0 + t,
            (0, 1) => b1,
            _ => b1 + t,
        };
        Self::from_admissible(|k, i, j| {
            let v = lower(i, j);
            C64::new(if k == 1 { v } else { 1.0 - v }, 0.0)
        })
        .with_label(format!("random-t({t})"))
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random element of U(2): a global phase times an SU(2) matrix
/// whose parameters are uniform on the 3-sphere.
fn haar_u2<R: Rng + ?Sized>(rng: &mut R) -> [[C64; 2]; 2] {
    let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let alpha = C64::new(g[0], g[1]) / norm;
    let beta = C64::new(g[2], g[3]) / norm;
    let phase = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
    [
        [alpha * phase, -beta.conj() * phase],
        [beta * phase, alpha.conj() * phase],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn allowed_ones() -> [C64; 16] {
        let mut e = [ZERO; 16];
        for r in 0..4 {
            for c in 0..4 {
                if r % 2 == c % 2 {
                    e[4 * r + c] = ONE;
                }
            }
        }
        e
    }

    #[test]
    fn allowed_pattern_is_accepted() {
        let e = allowed_ones();
        assert_eq!(e.iter().filter(|z| **z != ZERO).count(), 8);
        assert!(LocalOperator::new(e).is_ok());
    }

    #[test]
    fn forbidden_slot_is_rejected() {
        let mut e = [ZERO; 16];
        // a[(0,0)][(0,1)]
        e[1] = C64::new(0.5, 0.0);
        match LocalOperator::new(e) {
            Err(Error::SparsityViolation { k, l, i, j, .. }) => {
                assert_eq!((k, l, i, j), (0, 0, 0, 1))
            }
            other => panic!("expected sparsity violation, got {other:?}"),
        }
    }

    #[test]
    fn dk_half_half_entries_and_class() {
        let op = LocalOperator::dk_form(0.5, 0.5);
        let h = C64::new(0.5, 0.0);
        assert_eq!(op.a(0, 0, 0, 0), ONE);
        assert_eq!(op.a(0, 0, 1, 0), h);
        assert_eq!(op.a(0, 1, 0, 1), h);
        assert_eq!(op.a(0, 1, 1, 1), h);
        assert_eq!(op.a(1, 0, 1, 0), h);
        assert_eq!(op.a(1, 1, 0, 1), h);
        assert_eq!(op.a(1, 1, 1, 1), h);
        assert_eq!(op.a(1, 0, 0, 0), ZERO);
        assert!(LocalOperator::new(*op.entries()).is_ok());
        assert_eq!(op.classify(1e-12), OperatorClass::Pca);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            LocalOperator::dk_form(1.0, 0.0).classify(1e-12),
            OperatorClass::Ca
        );
        assert_eq!(
            LocalOperator::qca_rotation(PI / 3.0).classify(1e-12),
            OperatorClass::Qca
        );
        assert_eq!(LocalOperator::identity().classify(1e-12), OperatorClass::Ca);
        // q > 1 leaves the stochastic class but keeps unit column sums
        let op = LocalOperator::dk_form(0.7, 1.4);
        assert_eq!(op.classify(1e-12), OperatorClass::General);
        assert!(op.column_sum_defect() < 1e-15);
    }

    #[test]
    fn random_generators_land_in_their_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            assert_eq!(
                LocalOperator::random_pca(&mut rng).classify(1e-12),
                OperatorClass::Pca
            );
            assert_eq!(
                LocalOperator::random_qca(&mut rng).classify(1e-12),
                OperatorClass::Qca
            );
            assert_eq!(
                LocalOperator::random_general(&mut rng).classify(1e-12),
                OperatorClass::General
            );
            let t = rng.gen_range(-1.0..1.0);
            let op = LocalOperator::random_t_condition(&mut rng, t);
            assert!((op.t_parameter(1e-12).unwrap() - C64::new(t, 0.0)).norm() < 1e-12);
            assert!(op.column_sum_defect() < 1e-12);
        }
    }

    #[test]
    fn dk_t_parameter() {
        let op = LocalOperator::dk_form(0.3, 0.6);
        let t = op.t_parameter(1e-12).unwrap();
        assert!((t.re - 0.3).abs() < 1e-15);
        assert!(LocalOperator::dk_form(0.3, 0.5)
            .t_parameter(1e-12)
            .is_none());
    }
}
