use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{czero, Amp, Real};
use num_traits::Zero;

/// Unitarity tolerance for gate blocks.
pub const UNITARY_TOL: f64 = 1e-10;

/// Unitarity tolerance for scalar `T`: `UNITARY_TOL`, widened to a few
/// hundred ulps for single precision.
pub fn unitary_tol<T: Real>() -> T {
    T::lit(UNITARY_TOL).max(T::epsilon() * T::lit(256.0))
}

/// Largest dense block dimension accepted by [`GateOp::unitary`].
pub const MAX_DENSE_DIM: usize = 1 << 10;

/// What a gate does to its target wires.
#[derive(Clone, Debug)]
pub enum OpKind<T: Real> {
    /// Dense unitary block.
    Unitary(Matrix<T>),
    /// Basis permutation: target value `k` moves to `table[k]`.
    Permutation(Vec<usize>),
    /// Diagonal phases indexed by the target value.
    Diagonal(Vec<Amp<T>>),
    /// Uniformly controlled block: `blocks[s]` acts when the selector wires
    /// read `s`. `None` is the identity.
    Multiplexed { selectors: Vec<usize>, blocks: Vec<Option<Matrix<T>>> },
}

/// A (possibly controlled) operation on explicit wires.
///
/// Targets are listed most significant first. Controls carry the value they
/// require, so `|0⟩`-controlled terms are expressed directly.
#[derive(Clone, Debug)]
pub struct GateOp<T: Real> {
    pub kind: OpKind<T>,
    pub targets: Vec<usize>,
    pub controls: Vec<(usize, bool)>,
}

impl<T: Real> GateOp<T> {
    pub fn unitary(block: Matrix<T>, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if block.rows() != dim || block.cols() != dim {
            return Err(Error::Wiring(format!(
                "block is {}x{} but {} targets need {dim}",
                block.rows(),
                block.cols(),
                targets.len()
            )));
        }
        if dim > MAX_DENSE_DIM {
            return Err(Error::Wiring(format!("dense block dimension {dim} exceeds {MAX_DENSE_DIM}")));
        }
        check_unitary(&block)?;
        Ok(Self { kind: OpKind::Unitary(block), targets, controls: Vec::new() })
    }

    pub fn permutation(table: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if table.len() != dim {
            return Err(Error::Wiring(format!("permutation table has {} entries, need {dim}", table.len())));
        }
        let mut seen = vec![false; dim];
        for &t in &table {
            if t >= dim || seen[t] {
                return Err(Error::Wiring("permutation table is not a bijection".into()));
            }
            seen[t] = true;
        }
        Ok(Self { kind: OpKind::Permutation(table), targets, controls: Vec::new() })
    }

    /// `|x⟩|y⟩ ↦ |x⟩|y ⊕ f(x)⟩` with `x` on `inputs` and `y` on `outputs`.
    pub fn xor_oracle(inputs: Vec<usize>, outputs: Vec<usize>, f: impl Fn(usize) -> usize) -> Result<Self> {
        let wo = outputs.len();
        let omask = (1usize << wo) - 1;
        let dim = 1usize << (inputs.len() + wo);
        let table = (0..dim)
            .map(|k| {
                let x = k >> wo;
                let y = k & omask;
                (x << wo) | (y ^ (f(x) & omask))
            })
            .collect();
        let mut targets = inputs;
        targets.extend(outputs);
        Self::permutation(table, targets)
    }

    pub fn diagonal(phases: Vec<Amp<T>>, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if phases.len() != dim {
            return Err(Error::Wiring(format!("diagonal has {} entries, need {dim}", phases.len())));
        }
        let tol = unitary_tol::<T>();
        if let Some(bad) = phases.iter().find(|z| (z.norm() - T::one()).abs() > tol) {
            return Err(Error::NonUnitary { defect: (bad.norm() - T::one()).abs().to_f64_lossy() });
        }
        Ok(Self { kind: OpKind::Diagonal(phases), targets, controls: Vec::new() })
    }

    pub fn multiplexed(selectors: Vec<usize>, blocks: Vec<Option<Matrix<T>>>, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if blocks.len() != 1usize << selectors.len() {
            return Err(Error::Wiring(format!(
                "{} blocks for {} selector wires",
                blocks.len(),
                selectors.len()
            )));
        }
        if dim > MAX_DENSE_DIM {
            return Err(Error::Wiring(format!("dense block dimension {dim} exceeds {MAX_DENSE_DIM}")));
        }
        for b in blocks.iter().flatten() {
            if b.rows() != dim || b.cols() != dim {
                return Err(Error::Wiring("multiplexed block shape".into()));
            }
            check_unitary(b)?;
        }
        Ok(Self { kind: OpKind::Multiplexed { selectors, blocks }, targets, controls: Vec::new() })
    }

    /// Adds controls; each requires its wire to read the given value.
    pub fn controlled(mut self, controls: &[(usize, bool)]) -> Self {
        self.controls.extend_from_slice(controls);
        self
    }

    pub fn inverse(&self) -> Self {
        let kind = match &self.kind {
            OpKind::Unitary(m) => OpKind::Unitary(m.adjoint()),
            OpKind::Permutation(t) => {
                let mut inv = vec![0; t.len()];
                for (k, &v) in t.iter().enumerate() {
                    inv[v] = k;
                }
                OpKind::Permutation(inv)
            }
            OpKind::Diagonal(d) => OpKind::Diagonal(d.iter().map(|z| z.conj()).collect()),
            OpKind::Multiplexed { selectors, blocks } => OpKind::Multiplexed {
                selectors: selectors.clone(),
                blocks: blocks.iter().map(|b| b.as_ref().map(Matrix::adjoint)).collect(),
            },
        };
        Self { kind, targets: self.targets.clone(), controls: self.controls.clone() }
    }

    /// Renames every wire through `map`.
    pub fn remap(&self, map: &[usize]) -> Self {
        let kind = match &self.kind {
            OpKind::Multiplexed { selectors, blocks } => OpKind::Multiplexed {
                selectors: selectors.iter().map(|&w| map[w]).collect(),
                blocks: blocks.clone(),
            },
            k => k.clone(),
        };
        Self {
            kind,
            targets: self.targets.iter().map(|&w| map[w]).collect(),
            controls: self.controls.iter().map(|&(w, v)| (map[w], v)).collect(),
        }
    }

    /// All wires the op touches, for validation.
    pub fn wires(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.targets.clone();
        w.extend(self.controls.iter().map(|c| c.0));
        if let OpKind::Multiplexed { selectors, .. } = &self.kind {
            w.extend(selectors);
        }
        w
    }

    pub(crate) fn validate(&self, n_wires: usize) -> Result<()> {
        let mut w = self.wires();
        if let Some(&bad) = w.iter().find(|&&x| x >= n_wires) {
            return Err(Error::Wiring(format!("wire {bad} outside {n_wires}-wire layout")));
        }
        w.sort_unstable();
        if w.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::Wiring("wire collision between targets, selectors and controls".into()));
        }
        Ok(())
    }
}

/// Controls that fire when `wires` (big-endian) read `value`.
pub fn value_controls(wires: &[usize], value: usize) -> Vec<(usize, bool)> {
    let n = wires.len();
    wires.iter().enumerate().map(|(b, &w)| (w, (value >> (n - 1 - b)) & 1 == 1)).collect()
}

fn check_unitary<T: Real>(m: &Matrix<T>) -> Result<()> {
    let defect = m.unitarity_defect();
    if defect > unitary_tol::<T>() {
        return Err(Error::NonUnitary { defect: defect.to_f64_lossy() });
    }
    Ok(())
}

#[inline]
fn bit(n_wires: usize, wire: usize) -> usize {
    1usize << (n_wires - 1 - wire)
}

fn offsets(n_wires: usize, wires: &[usize]) -> Vec<usize> {
    let m = wires.len();
    (0..1usize << m)
        .map(|k| {
            wires
                .iter()
                .enumerate()
                .filter(|(j, _)| (k >> (m - 1 - j)) & 1 == 1)
                .fold(0, |acc, (_, &w)| acc | bit(n_wires, w))
        })
        .collect()
}

/// Applies `op` in place to an amplitude array over `n_wires` wires.
pub(crate) fn apply_op<T: Real>(amps: &mut [Amp<T>], n_wires: usize, op: &GateOp<T>) -> Result<()> {
    op.validate(n_wires)?;
    let mut fixed = 0usize;
    let mut ctrl_val = 0usize;
    for &(w, v) in &op.controls {
        fixed |= bit(n_wires, w);
        if v {
            ctrl_val |= bit(n_wires, w);
        }
    }
    let toffs = offsets(n_wires, &op.targets);
    for &w in &op.targets {
        fixed |= bit(n_wires, w);
    }
    let soffs = match &op.kind {
        OpKind::Multiplexed { selectors, .. } => {
            for &w in selectors {
                fixed |= bit(n_wires, w);
            }
            offsets(n_wires, selectors)
        }
        _ => vec![0],
    };
    let dim = toffs.len();
    let mut scratch = vec![czero::<T>(); dim];
    let mut free = 0usize;
    loop {
        let base = free | ctrl_val;
        match &op.kind {
            OpKind::Unitary(m) => dense(amps, base, &toffs, m, &mut scratch),
            OpKind::Permutation(table) => {
                for (k, &o) in toffs.iter().enumerate() {
                    scratch[k] = amps[base + o];
                }
                for (k, &dst) in table.iter().enumerate() {
                    amps[base + toffs[dst]] = scratch[k];
                }
            }
            OpKind::Diagonal(d) => {
                for (k, &o) in toffs.iter().enumerate() {
                    amps[base + o] = amps[base + o] * d[k];
                }
            }
            OpKind::Multiplexed { blocks, .. } => {
                for (s, &so) in soffs.iter().enumerate() {
                    if let Some(m) = &blocks[s] {
                        dense(amps, base + so, &toffs, m, &mut scratch);
                    }
                }
            }
        }
        free = ((free | fixed).wrapping_add(1)) & !fixed;
        if free == 0 || free >= amps.len() {
            break;
        }
    }
    Ok(())
}

#[inline]
fn dense<T: Real>(amps: &mut [Amp<T>], base: usize, toffs: &[usize], m: &Matrix<T>, scratch: &mut [Amp<T>]) {
    let mut any = false;
    for (k, &o) in toffs.iter().enumerate() {
        scratch[k] = amps[base + o];
        any |= !scratch[k].is_zero();
    }
    // Sparse states (basis inputs, block extraction) leave most groups empty.
    if !any {
        return;
    }
    for (r, &o) in toffs.iter().enumerate() {
        let row = m.row(r);
        let mut acc = czero();
        for (a, s) in row.iter().zip(scratch.iter()) {
            acc = acc + *a * *s;
        }
        amps[base + o] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hadamard, pauli_x};
    use num_complex::Complex;

    fn basis(n: usize, k: usize) -> Vec<Complex<f64>> {
        let mut v = vec![Complex::new(0.0, 0.0); 1 << n];
        v[k] = Complex::new(1.0, 0.0);
        v
    }

    #[test]
    fn non_unitary_block_rejected() {
        let m = Matrix::<f64>::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(GateOp::unitary(m, vec![0]), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn collision_rejected() {
        let op = GateOp::unitary(pauli_x::<f64>(), vec![0]).unwrap().controlled(&[(0, true)]);
        let mut v = basis(2, 0);
        assert!(matches!(apply_op(&mut v, 2, &op), Err(Error::Wiring(_))));
    }

    #[test]
    fn zero_valued_control() {
        // X on wire 1 when wire 0 reads 0: |00> -> |01>, |10> untouched.
        let op = GateOp::unitary(pauli_x::<f64>(), vec![1]).unwrap().controlled(&[(0, false)]);
        let mut v = basis(2, 0);
        apply_op(&mut v, 2, &op).unwrap();
        assert_eq!(v, basis(2, 1));
        let mut w = basis(2, 2);
        apply_op(&mut w, 2, &op).unwrap();
        assert_eq!(w, basis(2, 2));
    }

    #[test]
    fn permutation_moves_values() {
        // Increment mod 4 on two wires.
        let op = GateOp::<f64>::permutation(vec![1, 2, 3, 0], vec![0, 1]).unwrap();
        let mut v = basis(2, 3);
        apply_op(&mut v, 2, &op).unwrap();
        assert_eq!(v, basis(2, 0));
        let inv = op.inverse();
        apply_op(&mut v, 2, &inv).unwrap();
        assert_eq!(v, basis(2, 3));
    }

    #[test]
    fn xor_oracle_writes_function() {
        let op = GateOp::<f64>::xor_oracle(vec![0, 1], vec![2, 3], |x| (x * 3) % 4).unwrap();
        let mut v = basis(4, 0b1000);
        apply_op(&mut v, 4, &op).unwrap();
        assert_eq!(v, basis(4, 0b1010));
    }

    #[test]
    fn multiplexed_selects_block() {
        let op = GateOp::multiplexed(vec![0], vec![None, Some(pauli_x::<f64>())], vec![1]).unwrap();
        let mut v = basis(2, 0b10);
        apply_op(&mut v, 2, &op).unwrap();
        assert_eq!(v, basis(2, 0b11));
        let mut w = basis(2, 0b00);
        apply_op(&mut w, 2, &op).unwrap();
        assert_eq!(w, basis(2, 0b00));
    }

    #[test]
    fn target_order_is_msb_first() {
        // Dense X⊗I on targets [2, 0] flips wire 2.
        let xi = pauli_x::<f64>().kron(&Matrix::identity(2));
        let op = GateOp::unitary(xi, vec![2, 0]).unwrap();
        let mut v = basis(3, 0);
        apply_op(&mut v, 3, &op).unwrap();
        assert_eq!(v, basis(3, 0b001));
    }

    #[test]
    fn hadamard_on_all_wires_of_zero_wire_layout_edge() {
        let op = GateOp::unitary(hadamard::<f64>(), vec![0]).unwrap();
        let mut v = basis(1, 0);
        apply_op(&mut v, 1, &op).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((v[0].re - h).abs() < 1e-15 && (v[1].re - h).abs() < 1e-15);
    }
}
