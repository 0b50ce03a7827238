//! Global operators `Q_N` on the N-site path.
//!
//! `Q_N = (I ⊗ Q) (I ⊗ Q ⊗ I) ... (Q ⊗ I)`: the factor acting on sites
//! (0,1) is rightmost and acts on the state first. `Q_1 = I_2`.
//!
//! Three constructions are provided and checked against each other:
//! the literal Kronecker product, the block recursion
//! `Q_{N+1} = (I_2 ⊗ Q_N)(Q ⊗ I)` written out in 4x4 blocks, and a
//! matrix-free sweep over adjacent pairs.

use crate::error::{Error, Result};
use crate::local::LocalOperator;
use crate::matrix::{CMatrix, SparseMatrix, C64};

/// Size limits, expressed as site counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest N for which a dense `2^N x 2^N` matrix is built.
    pub dense: usize,
    /// Largest N for dense eigen-decomposition.
    pub eigen: usize,
    /// Largest N for matrix-free application.
    pub matrix_free: usize,
}

impl Caps {
    pub const EIGEN_HARD_LIMIT: usize = 12;

    pub fn check_dense(&self, n: usize) -> Result<()> {
        check("dense construction", n, self.dense)
    }

    pub fn check_eigen(&self, n: usize) -> Result<()> {
        check(
            "dense eigensolve",
            n,
            self.eigen.min(Self::EIGEN_HARD_LIMIT),
        )
    }

    pub fn check_matrix_free(&self, n: usize) -> Result<()> {
        check("matrix-free application", n, self.matrix_free)
    }
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            dense: 14,
            eigen: 10,
            matrix_free: 26,
        }
    }
}

fn check(what: &'static str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::SizeCapExceeded { what, n, cap })
    } else {
        Ok(())
    }
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidInput("global operator needs n >= 1".into()))
    } else {
        Ok(())
    }
}

/// Quadrants of a dense global operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub e: CMatrix,
    pub f: CMatrix,
    pub g: CMatrix,
    pub h: CMatrix,
}

#[derive(Debug, Clone)]
pub struct GlobalOperator {
    n_sites: usize,
    local: LocalOperator,
    dense: Option<CMatrix>,
}

impl GlobalOperator {
    /// Handle for matrix-free use only.
    pub fn matrix_free(local: &LocalOperator, n: usize) -> Result<Self> {
        check_sites(n)?;
        Ok(Self {
            n_sites: n,
            local: local.clone(),
            dense: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn local(&self) -> &LocalOperator {
        &self.local
    }

    pub fn dense(&self) -> Result<&CMatrix> {
        self.dense.as_ref().ok_or(Error::DenseUnavailable)
    }

    pub fn into_dense(self) -> Result<CMatrix> {
        self.dense.ok_or(Error::DenseUnavailable)
    }

    /// E (top-left), F (top-right), G (bottom-left), H (bottom-right).
    pub fn blocks(&self) -> Result<Blocks> {
        block_views(self.dense()?)
    }

    pub fn apply(&self, state: &[C64]) -> Result<Vec<C64>> {
        apply_matrix_free(&self.local, self.n_sites, state)
    }
}

/// Quadrant views of a square matrix of even dimension (or 2x2 identity
/// style 1-site operators).
pub fn block_views(m: &CMatrix) -> Result<Blocks> {
    let dim = m.nrows();
    if !m.is_square() || dim < 2 || !dim.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "block views need a square matrix of even dimension, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let h = dim / 2;
    Ok(Blocks {
        e: m.submatrix(0, 0, h, h),
        f: m.submatrix(0, h, h, h),
        g: m.submatrix(h, 0, h, h),
        h: m.submatrix(h, h, h, h),
    })
}

/// Ordered Kronecker product of the pair factors.
pub fn build_global_kronecker(
    local: &LocalOperator,
    n: usize,
    caps: &Caps,
) -> Result<GlobalOperator> {
    check_sites(n)?;
    caps.check_dense(n)?;
    let dim = 1usize << n;
    let mut acc = CMatrix::identity(dim);
    if n >= 2 {
        let q = SparseMatrix::from_dense(&local.to_matrix());
        for x in 0..n - 1 {
            let factor = SparseMatrix::identity(1 << x)
                .kron(&q)
                .kron(&SparseMatrix::identity(1 << (n - 2 - x)));
            acc = factor.mul_dense(&acc);
        }
    }
    Ok(GlobalOperator {
        n_sites: n,
        local: local.clone(),
        dense: Some(acc),
    })
}

/// Block recursion starting from `Q_1 = I_2`.
pub fn build_global_recursive(
    local: &LocalOperator,
    n: usize,
    caps: &Caps,
) -> Result<GlobalOperator> {
    check_sites(n)?;
    caps.check_dense(n)?;
    let mut q = CMatrix::identity(2);
    for m in 1..n {
        q = recursion_step(local, &q, m);
    }
    Ok(GlobalOperator {
        n_sites: n,
        local: local.clone(),
        dense: Some(q),
    })
}

/// `Q_{m+1}` from `Q_m`, laid out as sixteen scaled copies of E, F, G, H.
fn recursion_step(local: &LocalOperator, q_m: &CMatrix, m: usize) -> CMatrix {
    let b = block_views(q_m).expect("Q_m has even dimension");
    let s = 1usize << (m - 1);
    let a = |k, l, i, j| local.a(k, l, i, j);
    // (row block, col block, scale, source block)
    let layout: [(usize, usize, C64, &CMatrix); 16] = [
        (0, 0, a(0, 0, 0, 0), &b.e),
        (0, 1, a(0, 1, 0, 1), &b.f),
        (0, 2, a(0, 0, 1, 0), &b.e),
        (0, 3, a(0, 1, 1, 1), &b.f),
        (1, 0, a(0, 0, 0, 0), &b.g),
        (1, 1, a(0, 1, 0, 1), &b.h),
        (1, 2, a(0, 0, 1, 0), &b.g),
        (1, 3, a(0, 1, 1, 1), &b.h),
        (2, 0, a(1, 0, 0, 0), &b.e),
        (2, 1, a(1, 1, 0, 1), &b.f),
        (2, 2, a(1, 0, 1, 0), &b.e),
        (2, 3, a(1, 1, 1, 1), &b.f),
        (3, 0, a(1, 0, 0, 0), &b.g),
        (3, 1, a(1, 1, 0, 1), &b.h),
        (3, 2, a(1, 0, 1, 0), &b.g),
        (3, 3, a(1, 1, 1, 1), &b.h),
    ];
    let mut out = CMatrix::zeros(4 * s, 4 * s);
    for (rb, cb, scale, src) in layout {
        out.set_block(rb * s, cb * s, src, scale);
    }
    out
}

/// `Q_n * state` by sweeping the local operator over pairs (0,1), (1,2), ...
pub fn apply_matrix_free(local: &LocalOperator, n: usize, state: &[C64]) -> Result<Vec<C64>> {
    let mut out = state.to_vec();
    apply_in_place(local, n, &mut out)?;
    Ok(out)
}

/// In-place variant of [`apply_matrix_free`]; uses no scratch beyond the
/// caller's buffer.
pub fn apply_in_place(local: &LocalOperator, n: usize, state: &mut [C64]) -> Result<()> {
    check_sites(n)?;
    let expected = 1usize.checked_shl(n as u32).ok_or(Error::SizeCapExceeded {
        what: "matrix-free application",
        n,
        cap: 63,
    })?;
    if state.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: state.len(),
        });
    }
    let blocks = [local.column_block(0), local.column_block(1)];
    for x in 0..n.saturating_sub(1) {
        let left = 1usize << (n - 1 - x);
        let right = left >> 1;
        for base in 0..expected {
            if base & (left | right) != 0 {
                continue;
            }
            for (j, block) in blocks.iter().enumerate() {
                let i0 = base | if j == 1 { right } else { 0 };
                let i1 = i0 | left;
                let (v0, v1) = (state[i0], state[i1]);
                state[i0] = block[0][0] * v0 + block[0][1] * v1;
                state[i1] = block[1][0] * v0 + block[1][1] * v1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Configuration;
    use crate::matrix::{ONE, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(n: usize, idx: usize) -> Vec<C64> {
        let mut v = vec![ZERO; 1 << n];
        v[idx] = ONE;
        v
    }

    #[test]
    fn one_site_is_identity() {
        let local = LocalOperator::random_general(&mut ChaCha8Rng::seed_from_u64(1));
        let caps = Caps::default();
        for g in [
            build_global_kronecker(&local, 1, &caps).unwrap(),
            build_global_recursive(&local, 1, &caps).unwrap(),
        ] {
            assert_eq!(g.dense().unwrap(), &CMatrix::identity(2));
        }
        let state = vec![C64::new(0.3, -1.0), C64::new(2.0, 0.5)];
        assert_eq!(apply_matrix_free(&local, 1, &state).unwrap(), state);
    }

    #[test]
    fn two_sites_is_local() {
        let local = LocalOperator::random_general(&mut ChaCha8Rng::seed_from_u64(2));
        let caps = Caps::default();
        assert_eq!(
            build_global_kronecker(&local, 2, &caps)
                .unwrap()
                .dense()
                .unwrap(),
            &local.to_matrix()
        );
        assert_eq!(
            build_global_recursive(&local, 2, &caps)
                .unwrap()
                .dense()
                .unwrap(),
            &local.to_matrix()
        );
    }

    #[test]
    fn three_site_column_expansion() {
        let local = LocalOperator::random_general(&mut ChaCha8Rng::seed_from_u64(3));
        let g = build_global_kronecker(&local, 3, &Caps::default()).unwrap();
        let col = g.dense().unwrap().column(0b001);
        let a = |k, l, i, j| local.a(k, l, i, j);
        let expected = [
            (0b001, a(0, 0, 0, 0) * a(0, 1, 0, 1)),
            (0b011, a(0, 0, 0, 0) * a(1, 1, 0, 1)),
            (0b101, a(1, 0, 0, 0) * a(0, 1, 0, 1)),
            (0b111, a(1, 0, 0, 0) * a(1, 1, 0, 1)),
        ];
        for (idx, v) in col.iter().enumerate() {
            let want = expected
                .iter()
                .find(|(i, _)| *i == idx)
                .map_or(ZERO, |(_, w)| *w);
            assert!((v - want).norm() < 1e-14, "row {idx}: {v} vs {want}");
        }
    }

    #[test]
    fn dk_one_zero_maps_001_to_011() {
        let local = LocalOperator::dk_form(1.0, 0.0);
        let from = Configuration::from_bits(&[0, 0, 1]).unwrap().index() as usize;
        let to = Configuration::from_bits(&[0, 1, 1]).unwrap().index() as usize;
        let out = apply_matrix_free(&local, 3, &basis(3, from)).unwrap();
        assert_eq!(out, basis(3, to));
    }

    #[test]
    fn dk_two_site_top_left_block() {
        let (p, q) = (0.37, 0.81);
        let g = build_global_recursive(&LocalOperator::dk_form(p, q), 2, &Caps::default()).unwrap();
        let b = g.blocks().unwrap();
        let want = CMatrix::diagonal(&[ONE, C64::new(1.0 - p, 0.0)]);
        assert!(b.e.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn identity_blocks_for_one_site() {
        let g = build_global_recursive(&LocalOperator::identity(), 1, &Caps::default()).unwrap();
        let b = g.blocks().unwrap();
        assert_eq!(b.e[(0, 0)], ONE);
        assert_eq!(b.h[(0, 0)], ONE);
        assert_eq!(b.f[(0, 0)], ZERO);
        assert_eq!(b.g[(0, 0)], ZERO);
    }

    #[test]
    fn matrix_free_handle_has_no_blocks() {
        let g = GlobalOperator::matrix_free(&LocalOperator::identity(), 4).unwrap();
        assert_eq!(g.blocks().unwrap_err(), Error::DenseUnavailable);
    }

    #[test]
    fn length_mismatch_and_caps() {
        let local = LocalOperator::identity();
        assert_eq!(
            apply_matrix_free(&local, 3, &[ZERO; 4]).unwrap_err(),
            Error::LengthMismatch {
                expected: 8,
                got: 4
            }
        );
        let caps = Caps {
            dense: 4,
            ..Caps::default()
        };
        assert!(matches!(
            build_global_kronecker(&local, 5, &caps),
            Err(Error::SizeCapExceeded { n: 5, cap: 4, .. })
        ));
        assert!(matches!(
            build_global_recursive(&local, 5, &caps),
            Err(Error::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn dense_columns_keep_last_site() {
        let local = LocalOperator::random_general(&mut ChaCha8Rng::seed_from_u64(4));
        let m = build_global_recursive(&local, 4, &Caps::default())
            .unwrap()
            .into_dense()
            .unwrap();
        for r in 0..16 {
            for c in 0..16 {
                if (r & 1) != (c & 1) {
                    assert_eq!(m[(r, c)], ZERO);
                }
            }
        }
    }
}
