use super::{one_sparse_block_encoding, BlockEncoding};
use crate::encode::bits_for;
use crate::error::{Error, Result};
use crate::graph::RMatrix;
use crate::linalg::loader_unitary;
use crate::sim::{value_controls, GateOp};
use crate::sparse::{one_sparse_decompose, OneSparseDecomposition, OneSparsePart};
use crate::{Circ, C64};

/// `Σ_l c_l A_l` from encodings of `A_l`.
///
/// The prepare state has amplitudes `√(|c_l| α_l / Σ|c| α)`; negative
/// coefficients become a phase flip on their branch. The result has
/// `alpha = Σ_l |c_l| α_l` and a select register of `⌈log₂ count⌉` flags
/// placed before the children's flags.
pub fn lcu_combine(encodings: &[BlockEncoding], coefficients: &[f64]) -> Result<BlockEncoding> {
    if encodings.is_empty() {
        return Err(Error::Incompatible("empty linear combination".into()));
    }
    if encodings.len() != coefficients.len() {
        return Err(Error::Incompatible(format!(
            "{} encodings, {} coefficients",
            encodings.len(),
            coefficients.len()
        )));
    }
    if let Some(&c) = coefficients.iter().find(|c| !c.is_finite() || **c == 0.0) {
        return Err(Error::InvalidCoefficient(c));
    }
    let data = encodings[0].data_width();
    if encodings.iter().any(|e| e.data_width() != data) {
        return Err(Error::Incompatible("data widths differ".into()));
    }
    let sel = bits_for(encodings.len());
    let child_flags = encodings.iter().map(BlockEncoding::flag_width).max().unwrap_or(0);
    let work = encodings.iter().map(BlockEncoding::work_width).max().unwrap_or(0);
    let flags = sel + child_flags;

    let weights: Vec<f64> = encodings.iter().zip(coefficients).map(|(e, c)| c.abs() * e.alpha()).collect();
    let alpha: f64 = weights.iter().sum();
    let epsilon = encodings.iter().zip(coefficients).map(|(e, c)| c.abs() * e.epsilon()).sum();

    let sel_wires: Vec<usize> = (0..sel).collect();
    let flag_wires: Vec<usize> = (sel..flags).collect();
    let work_wires: Vec<usize> = (flags..flags + work).collect();
    let data_wires: Vec<usize> = (flags + work..flags + work + data).collect();
    let mut c = Circ::new(flags + work + data);

    let prep = if sel > 0 {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << sel];
        for (a, w) in amps.iter_mut().zip(&weights) {
            *a = C64::new((w / alpha).sqrt(), 0.0);
        }
        Some(GateOp::unitary(loader_unitary(&amps), sel_wires.clone())?)
    } else {
        None
    };
    if let Some(p) = &prep {
        c.push(p.clone())?;
    }
    for (l, (e, &coef)) in encodings.iter().zip(coefficients).enumerate() {
        let map = e.wire_map(&flag_wires, &work_wires, &data_wires)?;
        let controls = value_controls(&sel_wires, l);
        c.append_controlled(e.circuit(), &map, &controls)?;
        if coef < 0.0 {
            let flip = vec![C64::new(-1.0, 0.0); 1 << data];
            c.push(GateOp::diagonal(flip, data_wires.clone())?.controlled(&controls))?;
        }
    }
    if let Some(p) = &prep {
        c.push(p.inverse())?;
    }
    BlockEncoding::new(c, flags, work, alpha, epsilon)
}

/// Encoding of `A·B`: applies `b`, then `a`. Flags are disjoint, work is
/// shared; `alpha = α_a α_b`.
pub fn product_block_encoding(a: &BlockEncoding, b: &BlockEncoding) -> Result<BlockEncoding> {
    if a.data_width() != b.data_width() {
        return Err(Error::Incompatible("data widths differ".into()));
    }
    let (fa, fb) = (a.flag_width(), b.flag_width());
    let work = a.work_width().max(b.work_width());
    let data = a.data_width();
    let flags_a: Vec<usize> = (0..fa).collect();
    let flags_b: Vec<usize> = (fa..fa + fb).collect();
    let work_wires: Vec<usize> = (fa + fb..fa + fb + work).collect();
    let data_wires: Vec<usize> = (fa + fb + work..fa + fb + work + data).collect();
    let mut c = Circ::new(fa + fb + work + data);
    c.append_mapped(b.circuit(), &b.wire_map(&flags_b, &work_wires, &data_wires)?)?;
    c.append_mapped(a.circuit(), &a.wire_map(&flags_a, &work_wires, &data_wires)?)?;
    let epsilon = a.alpha() * b.epsilon() + b.alpha() * a.epsilon();
    BlockEncoding::new(c, fa + fb, work, a.alpha() * b.alpha(), epsilon)
}

/// Decomposes `m` into 1-sparse parts and sums their encodings with unit
/// weights, so the block is `m / part_count`. The zero matrix gets a
/// single all-zero part.
pub fn sparse_matrix_encoding(m: &RMatrix) -> Result<(BlockEncoding, OneSparseDecomposition)> {
    let mut decomposition = one_sparse_decompose(m);
    if decomposition.parts.is_empty() {
        let n = decomposition.dim;
        decomposition.parts.push(OneSparsePart { perm: (0..n).collect(), values: vec![0.0; n], support: vec![false; n] });
    }
    let parts = decomposition.parts.iter().map(one_sparse_block_encoding).collect::<Result<Vec<_>>>()?;
    let be = lcu_combine(&parts, &vec![1.0; parts.len()])?;
    Ok((be, decomposition))
}
