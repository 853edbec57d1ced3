//! Amplitude encoding, the layered weight ansatz and the idealised activation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RMatrix;
use crate::linalg::{ry, rz, Matrix};
use crate::sim::{Circuit, GateOp, RegisterLayout, StateVector};
use crate::{CMatrix, State, C64};

/// Largest register the ansatz is built for.
pub const MAX_PQC_QUBITS: usize = 10;

/// Smallest `b` with `2^b ≥ n` (0 for `n ≤ 1`).
pub fn bits_for(n: usize) -> usize {
    let mut b = 0;
    while (1usize << b) < n {
        b += 1;
    }
    b
}

/// Writes `X_{ik} / ‖X‖_F` at basis `(i, k)` of registers `reg_i`, `reg_k`.
/// Every other register is left at zero.
pub fn prepare_feature_state(x: &RMatrix, layout: &RegisterLayout, reg_i: &str, reg_k: &str) -> Result<State> {
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroFeatures);
    }
    let (cap_i, cap_k) = (1usize << layout.width(reg_i)?, 1usize << layout.width(reg_k)?);
    if x.nrows() > cap_i {
        return Err(Error::DimensionOverflow { dim: x.nrows(), capacity: cap_i });
    }
    if x.ncols() > cap_k {
        return Err(Error::DimensionOverflow { dim: x.ncols(), capacity: cap_k });
    }
    let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
    for i in 0..x.nrows() {
        for k in 0..x.ncols() {
            amps[layout.compose(&[(reg_i, i), (reg_k, k)])?] = C64::new(x[(i, k)] / norm, 0.0);
        }
    }
    StateVector::from_amplitudes(layout.clone(), amps)
}

/// Parameters of the layered ansatz.
///
/// Each layer applies `R_y` then `R_z` on every wire, followed by a ring of
/// `exp(-iθ Z⊗Z / 2)` entanglers between neighbouring wires (none on one
/// wire, a single pair on two). All-zero angles give the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqcParams {
    pub layers: usize,
    pub angles: Vec<f64>,
}

/// Number of ring entanglers per layer.
pub fn ring_pairs(n_qubits: usize) -> Vec<(usize, usize)> {
    match n_qubits {
        0 | 1 => vec![],
        2 => vec![(0, 1)],
        n => (0..n).map(|w| (w, (w + 1) % n)).collect(),
    }
}

pub fn angles_per_layer(n_qubits: usize) -> usize {
    2 * n_qubits + ring_pairs(n_qubits).len()
}

impl PqcParams {
    pub fn zeros(layers: usize, n_qubits: usize) -> Self {
        Self { layers, angles: vec![0.0; layers * angles_per_layer(n_qubits)] }
    }

    pub fn random(layers: usize, n_qubits: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles = (0..layers * angles_per_layer(n_qubits))
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        Self { layers, angles }
    }

    pub fn expected_angles(&self, n_qubits: usize) -> usize {
        self.layers * angles_per_layer(n_qubits)
    }
}

fn zz<T: crate::Real>(theta: T) -> Matrix<T> {
    let half = theta / T::lit(2.0);
    let m = num_complex::Complex::from_polar(T::one(), -half);
    let p = num_complex::Complex::from_polar(T::one(), half);
    Matrix::diagonal(&[m, p, p, m])
}

/// Ansatz as a circuit on wires `0..n_qubits`.
pub fn pqc_circuit(p: &PqcParams, n_qubits: usize) -> Result<Circuit<f64>> {
    if n_qubits > MAX_PQC_QUBITS {
        return Err(Error::DimensionOverflow { dim: 1 << n_qubits, capacity: 1 << MAX_PQC_QUBITS });
    }
    let expected = p.expected_angles(n_qubits);
    if p.angles.len() != expected {
        return Err(Error::AngleCountMismatch { expected, got: p.angles.len() });
    }
    if p.angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::Config("non-finite ansatz angle".into()));
    }
    let mut c = Circuit::new(n_qubits);
    let mut it = p.angles.iter().copied();
    for _ in 0..p.layers {
        for w in 0..n_qubits {
            let (ay, az) = (it.next().unwrap(), it.next().unwrap());
            c.push(GateOp::unitary(rz(az).matmul(&ry(ay)), vec![w])?)?;
        }
        for (a, b) in ring_pairs(n_qubits) {
            c.push(GateOp::unitary(zz(it.next().unwrap()), vec![a, b])?)?;
        }
    }
    Ok(c)
}

/// Dense ansatz unitary on `n_qubits` wires.
pub fn build_pqc_unitary(p: &PqcParams, n_qubits: usize) -> Result<CMatrix> {
    pqc_circuit(p, n_qubits)?.unitary()
}

/// Elementwise nonlinearity applied by the idealised activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    #[default]
    None,
}

impl Activation {
    pub fn apply_real(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::None => x,
        }
    }

    /// Real and imaginary parts are mapped independently.
    pub fn apply(self, z: C64) -> C64 {
        C64::new(self.apply_real(z.re), self.apply_real(z.im))
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "none" => Ok(Activation::None),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Applies `σ` to every amplitude and renormalises. Stands in for a
/// nonlinear amplitude transformation circuit, which is not simulated.
pub fn apply_idealized_activation(state: &State, f: Activation) -> Result<State> {
    if f == Activation::None {
        return Ok(state.clone());
    }
    let amps: Vec<C64> = state.amplitudes().iter().map(|&z| f.apply(z)).collect();
    let mut out = StateVector::from_amplitudes(state.layout().clone(), amps)?;
    if out.norm() == 0.0 {
        return Err(Error::ZeroActivation);
    }
    out.normalize()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use std::f64::consts::PI;

    #[test]
    fn feature_state_examples() {
        let l = RegisterLayout::new(&[("i", 1), ("k", 1)]).unwrap();
        let s = prepare_feature_state(&RMatrix::identity(2, 2), &l, "i", "k").unwrap();
        let h = 0.5f64.sqrt();
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15 && (s.amplitudes()[3].re - h).abs() < 1e-15);
        let x = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let s = prepare_feature_state(&x, &l, "i", "k").unwrap();
        assert_eq!(s.amplitudes()[0].re, 1.0);
        assert!(matches!(prepare_feature_state(&RMatrix::zeros(2, 2), &l, "i", "k"), Err(Error::ZeroFeatures)));
        assert!(matches!(
            prepare_feature_state(&RMatrix::identity(3, 3), &l, "i", "k"),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn zero_angles_give_identity() {
        for n in 1..=4 {
            let u = build_pqc_unitary(&PqcParams::zeros(2, n), n).unwrap();
            assert!(u.max_abs_diff(&Matrix::identity(1 << n)) < 1e-15);
        }
    }

    #[test]
    fn single_ry_pi() {
        let p = PqcParams { layers: 1, angles: vec![PI, 0.0] };
        let u = build_pqc_unitary(&p, 1).unwrap();
        let expect = Matrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(u.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn random_params_unitary() {
        for n in 1..=5 {
            let u = build_pqc_unitary(&PqcParams::random(3, n, n as u64), n).unwrap();
            assert!(u.is_unitary(1e-10));
        }
    }

    #[test]
    fn angle_count_checked() {
        let p = PqcParams { layers: 1, angles: vec![0.0; 3] };
        assert!(matches!(build_pqc_unitary(&p, 2), Err(Error::AngleCountMismatch { expected: 5, got: 3 })));
    }

    #[test]
    fn relu_example() {
        let l = RegisterLayout::new(&[("q", 1)]).unwrap();
        let s = StateVector::from_amplitudes(l, vec![C64::new(0.8, 0.0), C64::new(-0.6, 0.0)]).unwrap();
        let out = apply_idealized_activation(&s, Activation::Relu).unwrap();
        assert_eq!(out.amplitudes(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(apply_idealized_activation(&s, Activation::None).unwrap(), s);
        let basis = StateVector::basis(RegisterLayout::new(&[("q", 2)]).unwrap(), 2).unwrap();
        assert_eq!(apply_idealized_activation(&basis, Activation::Tanh).unwrap(), basis);
        let neg = StateVector::from_amplitudes(
            RegisterLayout::new(&[("q", 1)]).unwrap(),
            vec![C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(apply_idealized_activation(&neg, Activation::Relu), Err(Error::ZeroActivation)));
    }

    #[test]
    fn ansatz_is_smooth() {
        // Central differences at h and h/2 agree, entry by entry.
        let n = 2;
        let base = PqcParams::random(2, n, 17);
        for a in [0, 3, 7] {
            let d = |h: f64| {
                let mut p = base.clone();
                p.angles[a] += h;
                let up = build_pqc_unitary(&p, n).unwrap();
                p.angles[a] -= 2.0 * h;
                let dn = build_pqc_unitary(&p, n).unwrap();
                up.sub(&dn).scale(C64::new(0.5 / h, 0.0))
            };
            let (d1, d2) = (d(1e-3), d(5e-4));
            for r in 0..4 {
                for c in 0..4 {
                    let (x, y) = (d1[(r, c)], d2[(r, c)]);
                    if y.norm() > 1e-3 {
                        assert!((x - y).norm() / y.norm() < 0.05);
                    }
                }
            }
        }
    }
}
