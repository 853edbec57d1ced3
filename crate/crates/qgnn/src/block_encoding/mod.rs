//! Block-encodings: 1-sparse parts, linear combinations, products and
//! polynomial eigenvalue transforms.
//!
//! Every encoding lives on local wires ordered `[flags, work, data]`.
//! Flags are post-selected to zero. Work wires are clean scratch: every
//! constructor returns them to zero on every branch, so parents may share
//! them between children.

mod lcu;
mod one_sparse;
mod qsvt;

pub use lcu::{lcu_combine, product_block_encoding, sparse_matrix_encoding};
pub use one_sparse::{one_sparse_block_encoding, one_sparse_block_encoding_with, AngleMode, ANGLE_BITS};
pub use qsvt::{qsvt_transform, reference_qsvt_complex, reference_qsvt_scalar, QsvtPhases, QsvtSpec, MAX_QSVT_DEGREE};

use crate::error::{Error, Result};
use crate::sim::RegisterLayout;
use crate::{CMatrix, Circ, C64};

/// Unitary circuit whose ancilla-zero block is `A / alpha`.
#[derive(Clone, Debug)]
pub struct BlockEncoding {
    circuit: Circ,
    flags: usize,
    work: usize,
    data: usize,
    alpha: f64,
    epsilon: f64,
}

impl BlockEncoding {
    /// Wraps a circuit on `flags + work + data` wires.
    pub fn new(circuit: Circ, flags: usize, work: usize, alpha: f64, epsilon: f64) -> Result<Self> {
        let n = circuit.n_wires();
        if flags + work > n {
            return Err(Error::Incompatible(format!("{} ancillas on a {n}-wire circuit", flags + work)));
        }
        if !(alpha.is_finite() && alpha >= 1.0 - 1e-12) {
            return Err(Error::Inadmissible(format!("subnormalisation {alpha} below 1")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Inadmissible(format!("tolerance {epsilon}")));
        }
        Ok(Self { circuit, flags, work, data: n - flags - work, alpha, epsilon })
    }

    /// A unitary on the data wires alone, as a trivial encoding.
    pub fn from_unitary(circuit: Circ) -> Self {
        let data = circuit.n_wires();
        Self { circuit, flags: 0, work: 0, data, alpha: 1.0, epsilon: 0.0 }
    }

    pub fn circuit(&self) -> &Circ {
        &self.circuit
    }

    pub fn flag_width(&self) -> usize {
        self.flags
    }

    pub fn work_width(&self) -> usize {
        self.work
    }

    pub fn data_width(&self) -> usize {
        self.data
    }

    pub fn ancilla_width(&self) -> usize {
        self.flags + self.work
    }

    pub fn n_wires(&self) -> usize {
        self.flags + self.work + self.data
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Registers `flag`, `work`, `data` in local wire order.
    pub fn local_layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new(&[("flag", self.flags), ("work", self.work), ("data", self.data)])
    }

    /// Local-to-global wire map. Ancilla slices may be wider than needed;
    /// their leading wires are used.
    pub fn wire_map(&self, flag: &[usize], work: &[usize], data: &[usize]) -> Result<Vec<usize>> {
        if flag.len() < self.flags || work.len() < self.work || data.len() != self.data {
            return Err(Error::Incompatible(format!(
                "encoding needs flag {}, work {}, data {}; got {}, {}, {}",
                self.flags,
                self.work,
                self.data,
                flag.len(),
                work.len(),
                data.len()
            )));
        }
        let mut map = flag[..self.flags].to_vec();
        map.extend_from_slice(&work[..self.work]);
        map.extend_from_slice(data);
        Ok(map)
    }

    /// Same encoding with the circuit inverted; the block becomes `A†/alpha`.
    pub fn adjoint(&self) -> Self {
        Self { circuit: self.circuit.inverse(), ..self.clone() }
    }
}

/// `(⟨0|_anc ⊗ I) U (|0⟩_anc ⊗ I)`, one simulation per data basis state.
pub fn extract_encoded_block(be: &BlockEncoding) -> Result<CMatrix> {
    let dim = 1usize << be.data;
    let total = 1usize << be.n_wires();
    let mut block = CMatrix::zeros(dim, dim);
    let mut amps = vec![C64::new(0.0, 0.0); total];
    for j in 0..dim {
        amps.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        amps[j] = C64::new(1.0, 0.0);
        be.circuit.run(&mut amps)?;
        for r in 0..dim {
            block[(r, j)] = amps[r];
        }
    }
    Ok(block)
}

/// Largest singular value, via the eigenvalues of `M†M`.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let g = m.adjoint().matmul(m);
    let n = g.rows();
    // M†M is Hermitian; embed as a real symmetric 2n×2n matrix.
    let real = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = g[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    real.symmetric_eigenvalues().iter().fold(0.0f64, |a, &v| a.max(v)).max(0.0).sqrt()
}
