use std::f64::consts::PI;

use super::BlockEncoding;
use crate::encode::bits_for;
use crate::error::{Error, Result};
use crate::linalg::ry;
use crate::sim::GateOp;
use crate::sparse::OneSparsePart;
use crate::Circ;

/// Width of the register holding `θ/π` in fixed point.
pub const ANGLE_BITS: usize = 8;

/// How the angle register is turned into a rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AngleMode {
    /// Bitwise rotations plus a per-column residual rotation; exact.
    #[default]
    Exact,
    /// Bitwise rotations only; rounding error is declared in `epsilon`.
    Quantized,
}

/// Encodes a 1-sparse part with `alpha = 1`. Exact mode.
pub fn one_sparse_block_encoding(part: &OneSparsePart) -> Result<BlockEncoding> {
    one_sparse_block_encoding_with(part, AngleMode::Exact)
}

/// `U = O_c · O_A`, where `O_A` computes `θ_j = arccos(v_j)` into the angle
/// register, rotates the flag by `R_y(2θ_j)` bit by bit, and uncomputes.
///
/// Wires: flag (1), work = angle register ([`ANGLE_BITS`]), data. Parts of
/// non power-of-two size are padded with zero-valued fixed points.
pub fn one_sparse_block_encoding_with(part: &OneSparsePart, mode: AngleMode) -> Result<BlockEncoding> {
    if let Some(&v) = part.values.iter().find(|v| !(v.abs() <= 1.0 + 1e-12)) {
        return Err(Error::ValueOutOfRange { value: v });
    }
    let n = bits_for(part.dim()).max(1);
    let dim = 1usize << n;
    let mut perm: Vec<usize> = (0..dim).collect();
    perm[..part.dim()].copy_from_slice(&part.perm);
    let mut values = vec![0.0; dim];
    values[..part.dim()].copy_from_slice(&part.values);

    let theta: Vec<f64> = values.iter().map(|v| v.clamp(-1.0, 1.0).acos()).collect();
    let scale = (1usize << ANGLE_BITS) as f64;
    let codes: Vec<usize> =
        theta.iter().map(|t| ((t / PI * scale).round() as usize).min((1 << ANGLE_BITS) - 1)).collect();

    let flag = 0;
    let work: Vec<usize> = (1..=ANGLE_BITS).collect();
    let data: Vec<usize> = (1 + ANGLE_BITS..1 + ANGLE_BITS + n).collect();
    let mut c = Circ::new(1 + ANGLE_BITS + n);
    let load = GateOp::xor_oracle(data.clone(), work.clone(), |j| codes[j])?;
    c.push(load.clone())?;
    for (b, &w) in work.iter().enumerate() {
        c.push(GateOp::unitary(ry(PI * 0.5f64.powi(b as i32)), vec![flag])?.controlled(&[(w, true)]))?;
    }
    c.push(load.inverse())?;

    let quantized = |j: usize| PI * codes[j] as f64 / scale;
    let epsilon = match mode {
        AngleMode::Exact => {
            let blocks = (0..dim)
                .map(|j| {
                    let r = theta[j] - quantized(j);
                    (r != 0.0).then(|| ry(2.0 * r))
                })
                .collect();
            c.push(GateOp::multiplexed(data.clone(), blocks, vec![flag])?)?;
            0.0
        }
        AngleMode::Quantized => (0..dim).map(|j| (values[j] - quantized(j).cos()).abs()).fold(0.0, f64::max),
    };
    if perm.iter().enumerate().any(|(j, &r)| j != r) {
        c.push(GateOp::permutation(perm, data)?)?;
    }
    BlockEncoding::new(c, 1, ANGLE_BITS, 1.0, epsilon)
}
