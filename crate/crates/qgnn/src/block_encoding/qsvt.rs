use super::{extract_encoded_block, lcu_combine, BlockEncoding};
use crate::error::{Error, Result};
use crate::linalg::{hadamard, Matrix};
use crate::sim::GateOp;
use crate::{Circ, C64};

/// Largest polynomial degree built as a circuit.
pub const MAX_QSVT_DEGREE: usize = 8;

/// Phase lists defining the transform.
///
/// A definite list of `K + 1` phases gives a degree-`K` polynomial of parity
/// `K mod 2`. `Mixed` sums an even and an odd list through a two-term LCU,
/// so its block is `(P_even + P_odd) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub enum QsvtPhases {
    Definite(Vec<f64>),
    Mixed { even: Vec<f64>, odd: Vec<f64> },
}

impl QsvtPhases {
    pub fn degree(&self) -> usize {
        match self {
            QsvtPhases::Definite(p) => p.len().saturating_sub(1),
            QsvtPhases::Mixed { even, odd } => even.len().max(odd.len()).saturating_sub(1),
        }
    }

    /// `Some(true)` for odd, `Some(false)` for even, `None` when mixed.
    pub fn parity(&self) -> Option<bool> {
        match self {
            QsvtPhases::Definite(p) => Some(p.len() % 2 == 0),
            QsvtPhases::Mixed { .. } => None,
        }
    }

    /// Value the transformed block applies to eigenvalue `x`.
    pub fn block_value(&self, x: f64) -> f64 {
        match self {
            QsvtPhases::Definite(p) => reference_qsvt_scalar(p, x),
            QsvtPhases::Mixed { even, odd } => 0.5 * (reference_qsvt_scalar(even, x) + reference_qsvt_scalar(odd, x)),
        }
    }

    fn validate(&self) -> Result<()> {
        let lists: Vec<&Vec<f64>> = match self {
            QsvtPhases::Definite(p) => vec![p],
            QsvtPhases::Mixed { even, odd } => {
                if even.len() % 2 != 1 || odd.len() % 2 != 0 {
                    return Err(Error::Inadmissible("mixed phases need an even and an odd list".into()));
                }
                vec![even, odd]
            }
        };
        for p in lists {
            if p.is_empty() {
                return Err(Error::Inadmissible("empty phase list".into()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Inadmissible("non-finite phase".into()));
            }
        }
        if self.degree() > MAX_QSVT_DEGREE {
            return Err(Error::Inadmissible(format!("degree {} above {MAX_QSVT_DEGREE}", self.degree())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct QsvtSpec {
    pub phases: QsvtPhases,
    pub encoding: BlockEncoding,
}

/// Top-left entry of `e^{iφ₀Z} Π_k R(x) e^{iφ_k Z}` with
/// `R(x) = [[x, √(1−x²)], [√(1−x²), −x]]`.
pub fn reference_qsvt_complex(phases: &[f64], x: f64) -> C64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let r = Matrix::from_real(2, 2, &[x, s, s, -x]);
    let ez = |phi: f64| Matrix::diagonal(&[C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi)]);
    let mut m = ez(phases.first().copied().unwrap_or(0.0));
    for &phi in phases.iter().skip(1) {
        m = m.matmul(&r).matmul(&ez(phi));
    }
    m[(0, 0)]
}

/// Polynomial induced by the phases: the real part of
/// [`reference_qsvt_complex`].
pub fn reference_qsvt_scalar(phases: &[f64], x: f64) -> f64 {
    reference_qsvt_complex(phases, x).re
}

/// Applies the phase polynomial to the eigenvalues of the encoded block.
///
/// The block must be real symmetric. The circuit alternates `U` and `U†`
/// with reflections `e^{iφ(2Π−I)}` about the all-zero ancilla space, and
/// takes the real part through one extra flag that runs the phases with
/// both signs.
pub fn qsvt_transform(spec: &QsvtSpec) -> Result<BlockEncoding> {
    spec.phases.validate()?;
    let block = extract_encoded_block(&spec.encoding)?;
    let defect = block.max_abs_diff(&block.transpose()).max(block.as_slice().iter().fold(0.0, |a, z| a.max(z.im.abs())));
    if defect > 1e-10 {
        return Err(Error::Asymmetric { defect });
    }
    match &spec.phases {
        QsvtPhases::Definite(p) => definite_circuit(p, &spec.encoding),
        QsvtPhases::Mixed { even, odd } => {
            let e = definite_circuit(even, &spec.encoding)?;
            let o = definite_circuit(odd, &spec.encoding)?;
            lcu_combine(&[e, o], &[1.0, 1.0])
        }
    }
}

fn definite_circuit(phases: &[f64], u: &BlockEncoding) -> Result<BlockEncoding> {
    let k = phases.len() - 1;
    let anc = u.ancilla_width();
    // Wires: [h, u flags, u work, data].
    let n = 1 + u.n_wires();
    let h = 0;
    let map: Vec<usize> = (1..n).collect();
    let reflect_wires: Vec<usize> = (0..1 + anc).collect();
    let reflection = |phi: f64| -> Result<Gate> {
        let dim = 1usize << (1 + anc);
        let phases = (0..dim)
            .map(|idx| {
                let sign_h = if idx >> anc == 0 { 1.0 } else { -1.0 };
                let sign_pi = if idx & ((1 << anc) - 1) == 0 { 1.0 } else { -1.0 };
                C64::from_polar(1.0, sign_h * sign_pi * phi)
            })
            .collect();
        GateOp::diagonal(phases, reflect_wires.clone())
    };
    let forward = u.circuit().clone();
    let backward = forward.inverse();

    let mut c = Circ::new(n);
    c.push(GateOp::unitary(hadamard(), vec![h])?)?;
    c.push(reflection(phases[k])?)?;
    for step in (1..=k).rev() {
        let v = if (k - step) % 2 == 0 { &forward } else { &backward };
        c.append_mapped(v, &map)?;
        c.push(reflection(phases[step - 1])?)?;
    }
    c.push(GateOp::unitary(hadamard(), vec![h])?)?;
    let epsilon = if u.epsilon() > 0.0 { 4.0 * k as f64 * u.epsilon().sqrt() } else { 0.0 };
    BlockEncoding::new(c, 1 + u.flag_width(), u.work_width(), 1.0, epsilon)
}

type Gate = crate::Gate;
