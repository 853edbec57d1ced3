use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::{cone, czero, Real};

use super::gate::{apply_op, GateOp};

/// Ordered gate list over a fixed number of wires.
#[derive(Clone, Debug)]
pub struct Circuit<T: Real> {
    n_wires: usize,
    ops: Vec<GateOp<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new(n_wires: usize) -> Self {
        Self { n_wires, ops: Vec::new() }
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn ops(&self) -> &[GateOp<T>] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp<T>) -> Result<()> {
        op.validate(self.n_wires)?;
        self.ops.push(op);
        Ok(())
    }

    /// Appends another circuit over the same wires.
    pub fn append(&mut self, other: &Circuit<T>) -> Result<()> {
        for op in &other.ops {
            self.push(op.clone())?;
        }
        Ok(())
    }

    /// Appends `other` after renaming its wire `w` to `map[w]`.
    pub fn append_mapped(&mut self, other: &Circuit<T>, map: &[usize]) -> Result<()> {
        assert_eq!(map.len(), other.n_wires, "wire map length");
        for op in &other.ops {
            self.push(op.remap(map))?;
        }
        Ok(())
    }

    /// Appends `other` with extra controls on every op.
    pub fn append_controlled(&mut self, other: &Circuit<T>, map: &[usize], controls: &[(usize, bool)]) -> Result<()> {
        for op in &other.ops {
            self.push(op.remap(map).controlled(controls))?;
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        Self { n_wires: self.n_wires, ops: self.ops.iter().rev().map(GateOp::inverse).collect() }
    }

    /// Applies the circuit to a raw amplitude array.
    pub fn run(&self, amps: &mut [crate::scalar::Amp<T>]) -> Result<()> {
        for op in &self.ops {
            apply_op(amps, self.n_wires, op)?;
        }
        Ok(())
    }

    /// Full unitary, column by column. Only sensible for small circuits.
    pub fn unitary(&self) -> Result<Matrix<T>> {
        let dim = 1usize << self.n_wires;
        let mut cols = Vec::with_capacity(dim);
        for c in 0..dim {
            let mut v = vec![czero(); dim];
            v[c] = cone();
            self.run(&mut v)?;
            cols.push(v);
        }
        Ok(Matrix::from_fn(dim, dim, |r, c| cols[c][r]))
    }
}
