//! Message passing: a message state `ψ(x_i, x_j) = Σ_p w_p |p⟩` selects
//! among a family of feature unitaries `U_p`.
//!
//! After uncomputing `ψ` and projecting its register to zero, a matched
//! branch carries `Σ_p |w_p|² U_p x_j`. The message therefore enters only
//! through the magnitudes `|w_p|²`; the phases of `w_p` are lost. This is
//! narrower than a classical MPNN, where the message is an arbitrary vector
//! added to the aggregate.
//!
//! Layer registers: `i`, `j`, `k` (addresses), `m1` (feature of `k`),
//! `m2`, `m3` (message).

use serde::{Deserialize, Serialize};

use crate::block_encoding::{lcu_combine, BlockEncoding};
use crate::classical::{mpnn_reference_update, pad, row_state, CDense, MessageWeights};
use crate::encode::{bits_for, build_pqc_unitary, PqcParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{loader_unitary, pauli_x, ry, Matrix};
use crate::qgat::LaidOutCircuit;
use crate::sim::RegisterLayout;
use crate::sparse::{one_sparse_decompose, OneSparsePart};
use crate::{CMatrix, Circ, Gate, State, C64};

/// The unitaries `U_p` acting on the feature register.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpFamily {
    /// `U_(a, q) = S^a D_q` with `S` the cyclic shift and `D_q` the Walsh
    /// sign pattern `(−1)^{popcount(k & q)}`; `p = a·2^f + q`.
    #[default]
    GeneralizedPermutations,
    Identity,
    /// `R_y(θ_p)` on the top feature wire; missing entries are identity.
    Rotations { angles: Vec<f64> },
    /// Explicit unitaries; missing entries are identity.
    #[serde(skip)]
    Custom(Vec<CMatrix>),
}

impl UpFamily {
    /// Exactly `count` unitaries of dimension `dim`.
    pub fn unitaries(&self, dim: usize, count: usize) -> Result<Vec<CMatrix>> {
        let mut out: Vec<CMatrix> = match self {
            UpFamily::GeneralizedPermutations => (0..count).map(|p| shift_sign(dim, p / dim, p % dim)).collect(),
            UpFamily::Identity => Vec::new(),
            UpFamily::Rotations { angles } => {
                angles.iter().map(|&a| ry(a).kron(&Matrix::identity(dim / 2))).collect()
            }
            UpFamily::Custom(us) => us.clone(),
        };
        if out.len() > count {
            return Err(Error::Config(format!("{} message unitaries for {count} message values", out.len())));
        }
        if out.iter().any(|u| u.rows() != dim) {
            return Err(Error::Config(format!("message unitaries must act on dimension {dim}")));
        }
        if let Some(bad) = out.iter().find(|u| !u.is_unitary(1e-10)) {
            return Err(Error::NonUnitary { defect: bad.unitarity_defect() });
        }
        out.resize(count, Matrix::identity(dim));
        Ok(out)
    }
}

fn shift_sign(dim: usize, a: usize, q: usize) -> CMatrix {
    Matrix::from_fn(dim, dim, |r, c| {
        if r == (c + a) % dim {
            C64::new(if (c & q).count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpnnConfig {
    /// Applied to the sender features.
    pub u_a: PqcParams,
    /// Applied to the receiver features.
    pub u_b: PqcParams,
    /// Joint transform on both message registers.
    pub joint: PqcParams,
    pub family: UpFamily,
    /// Parts of the plain adjacency.
    pub parts: Vec<OneSparsePart>,
    /// Adds `x_j` itself as one more branch.
    pub include_self: bool,
    /// Drops entries that only complete a part to a permutation.
    pub mask_completion: bool,
}

/// Width of the feature register and of each message register.
pub fn feature_bits(g: &Graph) -> usize {
    bits_for(g.num_features()).max(1)
}

pub fn address_bits(g: &Graph) -> usize {
    bits_for(g.num_nodes()).max(1)
}

impl MpnnConfig {
    pub fn random(g: &Graph, seed: u64) -> Self {
        let fb = feature_bits(g);
        Self {
            u_a: PqcParams::random(1, fb, seed),
            u_b: PqcParams::random(1, fb, seed.wrapping_add(1)),
            joint: PqcParams::random(1, 2 * fb, seed.wrapping_add(2)),
            family: UpFamily::GeneralizedPermutations,
            parts: one_sparse_decompose(&g.adjacency()).parts,
            include_self: false,
            mask_completion: false,
        }
    }

    /// Message circuits that leave every `ψ` at `|0⟩`, with the given family.
    pub fn trivial(g: &Graph, family: UpFamily) -> Self {
        let fb = feature_bits(g);
        Self {
            u_a: PqcParams::zeros(1, fb),
            u_b: PqcParams::zeros(1, fb),
            joint: PqcParams::zeros(1, 2 * fb),
            family,
            parts: one_sparse_decompose(&g.adjacency()).parts,
            include_self: false,
            mask_completion: false,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.parts.iter().any(|p| p.dim() != n) {
            return Err(Error::Config("decomposition size differs from the graph".into()));
        }
        if self.parts.is_empty() && !self.include_self {
            return Err(Error::Config("layer has no branches".into()));
        }
        Ok(())
    }
}

/// Per-pair message states and the family, padded to register sizes.
struct MessageTable {
    a: usize,
    fb: usize,
    /// `psi[i][j]` over `2^(2 fb)` message values, for every address pair.
    psi: Vec<Vec<Vec<C64>>>,
    unitaries: Vec<CMatrix>,
}

impl MessageTable {
    fn new(cfg: &MpnnConfig, g: &Graph) -> Result<Self> {
        let (a, fb) = (address_bits(g), feature_bits(g));
        let x = pad(g.features(), g.num_nodes(), 1 << fb)?;
        let ua = build_pqc_unitary(&cfg.u_a, fb)?;
        let ub = build_pqc_unitary(&cfg.u_b, fb)?;
        let joint = build_pqc_unitary(&cfg.joint, 2 * fb)?;
        let mut e0 = vec![C64::new(0.0, 0.0); 1 << fb];
        e0[0] = C64::new(1.0, 0.0);
        let mut senders = vec![e0.clone(); 1 << a];
        let mut receivers = vec![e0; 1 << a];
        for i in 0..g.num_nodes() {
            let s = row_state(&x, i)?;
            senders[i] = ua.matvec(&s);
            receivers[i] = ub.matvec(&s);
        }
        let psi = senders
            .iter()
            .map(|s| {
                receivers
                    .iter()
                    .map(|r| joint.matvec(&s.iter().flat_map(|x| r.iter().map(move |y| x * y)).collect::<Vec<_>>()))
                    .collect()
            })
            .collect();
        let unitaries = cfg.family.unitaries(1 << fb, 1 << (2 * fb))?;
        Ok(Self { a, fb, psi, unitaries })
    }

    fn weights(&self, n: usize) -> MessageWeights {
        (0..n).map(|i| (0..n).map(|j| self.psi[i][j].iter().map(|w| w.norm_sqr()).collect()).collect()).collect()
    }
}

/// `|w^{ij}_p|²` for every node pair.
pub fn message_weights(cfg: &MpnnConfig, g: &Graph) -> Result<MessageWeights> {
    Ok(MessageTable::new(cfg, g)?.weights(g.num_nodes()))
}

/// The family as used by the layer, padded with identities.
pub fn message_unitaries(cfg: &MpnnConfig, g: &Graph) -> Result<Vec<CMatrix>> {
    let fb = feature_bits(g);
    cfg.family.unitaries(1 << fb, 1 << (2 * fb))
}

/// `Σ|i⟩|j⟩|0⟩ ↦ Σ|i⟩|j⟩|ψ(x_i, x_j)⟩` on `[i, j, m2, m3]`.
pub fn build_message_unitary(cfg: &MpnnConfig, g: &Graph) -> Result<LaidOutCircuit> {
    let mt = MessageTable::new(cfg, g)?;
    let layout = RegisterLayout::new(&[("i", mt.a), ("j", mt.a), ("m2", mt.fb), ("m3", mt.fb)])?;
    let mut selectors = layout.wire_vec("i")?;
    selectors.extend(layout.wire_vec("j")?);
    let mut targets = layout.wire_vec("m2")?;
    targets.extend(layout.wire_vec("m3")?);
    let blocks = mt.psi.iter().flat_map(|row| row.iter().map(|v| Some(loader_unitary(v)))).collect();
    let mut c = Circ::new(layout.total_qubits());
    c.push(Gate::multiplexed(selectors, blocks, targets)?)?;
    Ok(LaidOutCircuit { circuit: c, layout })
}

struct LayerWires {
    valid: Option<usize>,
    message: Vec<usize>,
    i: Vec<usize>,
    j: Vec<usize>,
    k: Vec<usize>,
    m1: Vec<usize>,
}

fn cnot(control: usize, target: usize) -> Result<Gate> {
    Ok(Gate::unitary(pauli_x(), vec![target])?.controlled(&[(control, true)]))
}

fn padded_perm(part: &OneSparsePart, dim: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..dim).collect();
    perm[..part.dim()].copy_from_slice(&part.perm);
    perm
}

/// `O_c†` on `i`, then on the branches with `i = j` and `k = j`: load
/// `ψ(x_{c(j)}, x_j)`, apply `Σ_p |p⟩⟨p| ⊗ U_p`, unload. Every other branch is
/// only relabelled, so its amplitudes are copied untouched.
fn append_selective(c: &mut Circ, part: &OneSparsePart, mt: &MessageTable, w: &LayerWires, mask: bool) -> Result<()> {
    let d = 1usize << mt.a;
    let perm = padded_perm(part, d);
    let mut inv = vec![0; d];
    for (j, &r) in perm.iter().enumerate() {
        inv[r] = j;
    }
    c.push(Gate::permutation(inv, w.i.clone())?)?;
    let compare: Vec<Gate> =
        w.j.iter().zip(&w.i).chain(w.j.iter().zip(&w.k)).map(|(&s, &t)| cnot(s, t)).collect::<Result<_>>()?;
    for g in &compare {
        c.push(g.clone())?;
    }
    let matched: Vec<(usize, bool)> = w.i.iter().chain(&w.k).map(|&q| (q, false)).collect();

    let loaders = (0..d)
        .map(|j| if j < part.dim() { Some(loader_unitary(&mt.psi[perm[j]][j])) } else { None })
        .collect();
    let load = Gate::multiplexed(w.j.clone(), loaders, w.message.clone())?.controlled(&matched);
    let multi = Gate::multiplexed(w.message.clone(), mt.unitaries.iter().cloned().map(Some).collect(), w.m1.clone())?
        .controlled(&matched);
    c.push(load.clone())?;
    c.push(multi)?;
    c.push(load.inverse())?;
    if let (true, Some(valid)) = (mask, w.valid) {
        let support = part.support.clone();
        c.push(
            Gate::xor_oracle(w.j.clone(), vec![valid], move |j| usize::from(!support.get(j).copied().unwrap_or(true)))?
                .controlled(&matched),
        )?;
    }
    for g in compare.iter().rev() {
        c.push(g.clone())?;
    }
    Ok(())
}

/// The selective step for part `l` alone, `O_c` restored, on
/// `[m2, m3, i, j, k, m1]`.
pub fn build_selective_lcu(cfg: &MpnnConfig, g: &Graph, l: usize) -> Result<LaidOutCircuit> {
    let mt = MessageTable::new(cfg, g)?;
    let part = cfg.parts.get(l).ok_or_else(|| Error::Config(format!("part {l} does not exist")))?;
    let layout =
        RegisterLayout::new(&[("m2", mt.fb), ("m3", mt.fb), ("i", mt.a), ("j", mt.a), ("k", mt.a), ("m1", mt.fb)])?;
    let mut message = layout.wire_vec("m2")?;
    message.extend(layout.wire_vec("m3")?);
    let w = LayerWires {
        valid: None,
        message,
        i: layout.wire_vec("i")?,
        j: layout.wire_vec("j")?,
        k: layout.wire_vec("k")?,
        m1: layout.wire_vec("m1")?,
    };
    let mut c = Circ::new(layout.total_qubits());
    append_selective(&mut c, part, &mt, &w, false)?;
    c.push(Gate::permutation(padded_perm(part, 1 << mt.a), w.i.clone())?)?;
    Ok(LaidOutCircuit { circuit: c, layout })
}

/// One part as a block encoding. Flags `[valid]` when masking, work
/// `[m2, m3]`, data `[i, j, k, m1]`.
fn mpnn_part_encoding(part: &OneSparsePart, mt: &MessageTable, mask: bool) -> Result<BlockEncoding> {
    let (a, fb) = (mt.a, mt.fb);
    let flags = usize::from(mask);
    let range = |s: usize, len: usize| (s..s + len).collect::<Vec<usize>>();
    let d0 = flags + 2 * fb;
    let w = LayerWires {
        valid: mask.then_some(0),
        message: range(flags, 2 * fb),
        i: range(d0, a),
        j: range(d0 + a, a),
        k: range(d0 + 2 * a, a),
        m1: range(d0 + 3 * a, fb),
    };
    let mut c = Circ::new(d0 + 3 * a + fb);
    append_selective(&mut c, part, mt, &w, mask)?;
    BlockEncoding::new(c, flags, 2 * fb, 1.0, 0.0)
}

/// Uniform LCU over the parts, plus the identity when `include_self`.
pub fn mpnn_layer_encoding(g: &Graph, cfg: &MpnnConfig) -> Result<BlockEncoding> {
    cfg.validate(g.num_nodes())?;
    let mt = MessageTable::new(cfg, g)?;
    let mut encodings = Vec::new();
    for part in &cfg.parts {
        encodings.push(mpnn_part_encoding(part, &mt, cfg.mask_completion)?);
    }
    if cfg.include_self {
        encodings.push(BlockEncoding::from_unitary(Circ::new(3 * mt.a + mt.fb)));
    }
    lcu_combine(&encodings, &vec![1.0; encodings.len()])
}

#[derive(Clone, Debug)]
pub struct MpnnOutput {
    /// `Σ_j |j⟩^⊗3 |h_j⟩`, normalised, on `[i, j, k, m1]`.
    pub state: State,
    /// Row `j` is `h_j`, normalised jointly over rows.
    pub features: CDense,
    pub success_probability: f64,
    pub qubits: usize,
}

/// Input layout `[flag, work, i, j, k, m1]` for a layer encoding.
pub fn mpnn_layout(g: &Graph, be: &BlockEncoding) -> Result<RegisterLayout> {
    let (a, fb) = (address_bits(g), feature_bits(g));
    RegisterLayout::new(&[
        ("flag", be.flag_width()),
        ("work", be.work_width()),
        ("i", a),
        ("j", a),
        ("k", a),
        ("m1", fb),
    ])
}

/// `(1/N) Σ_{i,j} |i⟩|j⟩ Σ_k |k⟩|x_k⟩ / ‖X‖` over real nodes.
pub fn mpnn_input_state(g: &Graph, layout: &RegisterLayout) -> Result<State> {
    let x = g.features();
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroFeatures);
    }
    let n = g.num_nodes();
    let scale = norm * n as f64;
    let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for f in 0..x.ncols() {
                    let idx = layout.compose(&[("i", i), ("j", j), ("k", k), ("m1", f)])?;
                    amps[idx] = C64::new(x[(k, f)] / scale, 0.0);
                }
            }
        }
    }
    State::from_amplitudes(layout.clone(), amps)
}

pub fn apply_message_passing_layer(g: &Graph, cfg: &MpnnConfig) -> Result<MpnnOutput> {
    let be = mpnn_layer_encoding(g, cfg)?;
    let layout = mpnn_layout(g, &be)?;
    let mut s = mpnn_input_state(g, &layout)?;
    let mut data = layout.wire_vec("i")?;
    data.extend(layout.wire_vec("j")?);
    data.extend(layout.wire_vec("k")?);
    data.extend(layout.wire_vec("m1")?);
    let mut c = Circ::new(layout.total_qubits());
    c.append_mapped(be.circuit(), &be.wire_map(&layout.wire_vec("flag")?, &layout.wire_vec("work")?, &data)?)?;
    s.apply_circuit(&c)?;

    let (selected, p_anc) = s.postselect_zero(&["flag", "work"])?;
    let mut out = selected.zero_branch(&["i", "j", "k", "m1"])?;
    let dl = out.layout().clone();
    for (idx, z) in out.amplitudes_mut().iter_mut().enumerate() {
        let (i, j, k) = (dl.extract(idx, "i")?, dl.extract(idx, "j")?, dl.extract(idx, "k")?);
        if i != j || j != k {
            *z = C64::new(0.0, 0.0);
        }
    }
    let p_diag = out.norm().powi(2);
    if p_diag < crate::sim::POSTSELECT_FLOOR {
        return Err(Error::PostselectionImpossible { probability: p_diag * p_anc });
    }
    out.normalize()?;
    let fb = feature_bits(g);
    let mut features = CDense::zeros(g.num_nodes(), 1 << fb);
    for j in 0..g.num_nodes() {
        for f in 0..1usize << fb {
            features[(j, f)] = out.amplitudes()[dl.compose(&[("i", j), ("j", j), ("k", j), ("m1", f)])?];
        }
    }
    Ok(MpnnOutput { state: out, features, success_probability: p_anc * p_diag, qubits: layout.total_qubits() })
}

/// Classical update with the same weights and family.
pub fn mpnn_layer_reference(g: &Graph, cfg: &MpnnConfig) -> Result<CDense> {
    let mt = MessageTable::new(cfg, g)?;
    let x = pad(g.features(), g.num_nodes(), 1 << mt.fb)?;
    Ok(mpnn_reference_update(
        &x,
        &cfg.parts,
        &mt.weights(g.num_nodes()),
        &mt.unitaries,
        cfg.include_self,
        cfg.mask_completion,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_graph, RMatrix};
    use crate::sim::fidelity;
    use proptest::prelude::*;

    fn flat(m: &CDense) -> Vec<C64> {
        m.iter().copied().collect()
    }

    fn ring(n: usize, seed: u64) -> Graph {
        let x = random_graph(n, 0.0, 3, 2, seed).features().clone();
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(x, &edges, vec![None; n]).unwrap()
    }

    #[test]
    fn family_is_unitary_and_distinct() {
        let us = UpFamily::GeneralizedPermutations.unitaries(4, 16).unwrap();
        for (p, u) in us.iter().enumerate() {
            assert!(u.is_unitary(1e-12));
            for v in &us[..p] {
                assert!(u.max_abs_diff(v) > 0.5);
            }
        }
        let two = UpFamily::GeneralizedPermutations.unitaries(2, 4).unwrap();
        assert!(two[1].max_abs_diff(&crate::linalg::pauli_z()) < 1e-15);
        assert!(two[2].max_abs_diff(&pauli_x()) < 1e-15);
        assert!(UpFamily::Rotations { angles: vec![0.1; 5] }.unitaries(2, 4).is_err());
    }

    #[test]
    fn message_amplitudes_match_tensor_product() {
        let g = random_graph(3, 0.5, 3, 2, 5);
        let cfg = MpnnConfig::random(&g, 4);
        let m = build_message_unitary(&cfg, &g).unwrap();
        let fb = feature_bits(&g);
        let x = pad(g.features(), 3, 1 << fb).unwrap();
        let (ua, ub) = (build_pqc_unitary(&cfg.u_a, fb).unwrap(), build_pqc_unitary(&cfg.u_b, fb).unwrap());
        let joint = build_pqc_unitary(&cfg.joint, 2 * fb).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let l = &m.layout;
                let mut s = State::basis(l.clone(), l.compose(&[("i", i), ("j", j)]).unwrap()).unwrap();
                s.apply_circuit(&m.circuit).unwrap();
                let (s_i, r_j) = (ua.matvec(&row_state(&x, i).unwrap()), ub.matvec(&row_state(&x, j).unwrap()));
                let want = joint.matvec(&s_i.iter().flat_map(|a| r_j.iter().map(move |b| a * b)).collect::<Vec<_>>());
                for (p, w) in want.iter().enumerate() {
                    let got = s.amplitudes()[l.compose(&[("i", i), ("j", j), ("m2", p >> fb), ("m3", p & ((1 << fb) - 1))]).unwrap()];
                    assert!((got - w).norm() < 1e-10);
                }
                s.apply_circuit(&m.circuit.inverse()).unwrap();
                assert!((s.amplitudes()[l.compose(&[("i", i), ("j", j)]).unwrap()].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trivial_pqcs_give_product_pattern() {
        let x = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let g = Graph::new(x, &[(0, 1)], vec![None; 2]).unwrap();
        let w = message_weights(&MpnnConfig::trivial(&g, UpFamily::Identity), &g).unwrap();
        // |x_i⟩|x_j⟩ with basis features: all weight on p = 2·i + j.
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(w[i][j][2 * i + j], 1.0);
            }
        }
    }

    #[test]
    fn non_matching_branches_are_untouched() {
        let g = ring(4, 2);
        let cfg = MpnnConfig::random(&g, 3);
        let sel = build_selective_lcu(&cfg, &g, 0).unwrap();
        let l = &sel.layout;
        let perm = &cfg.parts[0].perm;
        let mut amps = vec![C64::new(0.0, 0.0); l.dim()];
        for (idx, z) in amps.iter_mut().enumerate() {
            if l.extract(idx, "m2").unwrap() == 0 && l.extract(idx, "m3").unwrap() == 0 {
                *z = C64::new((idx as f64 * 0.37).sin(), (idx as f64 * 0.11).cos());
            }
        }
        let mut s = State::from_amplitudes(l.clone(), amps.clone()).unwrap();
        s.normalize().unwrap();
        let before = s.clone();
        s.apply_circuit(&sel.circuit).unwrap();
        let mut changed = 0;
        for idx in 0..l.dim() {
            let (i, j, k) = (l.extract(idx, "i").unwrap(), l.extract(idx, "j").unwrap(), l.extract(idx, "k").unwrap());
            let matching = j < 4 && i == perm[j] && k == j;
            if matching {
                changed += usize::from(s.amplitudes()[idx] != before.amplitudes()[idx]);
            } else {
                assert_eq!(s.amplitudes()[idx], before.amplitudes()[idx]);
            }
        }
        assert!(changed > 0);
    }

    #[test]
    fn identity_family_is_identity_on_diagonal() {
        let g = ring(4, 1);
        let cfg = MpnnConfig { family: UpFamily::Identity, ..MpnnConfig::random(&g, 8) };
        let out = apply_message_passing_layer(&g, &cfg).unwrap();
        let want = crate::classical::complexify(&pad(g.features(), 4, 4).unwrap());
        assert!(fidelity(&flat(&out.features), &flat(&want)) > 1.0 - 1e-12);
    }

    #[test]
    fn single_edge_two_unitaries() {
        let x = RMatrix::from_row_slice(2, 2, &[0.6, 0.8, 1.0, 0.2]);
        let g = Graph::new(x, &[(0, 1)], vec![None; 2]).unwrap();
        let family = UpFamily::Custom(vec![Matrix::identity(2), pauli_x()]);
        let cfg = MpnnConfig { family, ..MpnnConfig::random(&g, 11) };
        let out = apply_message_passing_layer(&g, &cfg).unwrap();
        // U_1 = X and every other U_p is the identity.
        let w = message_weights(&cfg, &g).unwrap();
        let mut want = CDense::zeros(2, 2);
        for j in 0..2 {
            let i = 1 - j;
            let x1 = w[i][j][1];
            let xj = [g.features()[(j, 0)], g.features()[(j, 1)]];
            want[(j, 0)] = C64::new((1.0 - x1) * xj[0] + x1 * xj[1], 0.0);
            want[(j, 1)] = C64::new((1.0 - x1) * xj[1] + x1 * xj[0], 0.0);
        }
        assert!(fidelity(&flat(&out.features), &flat(&want)) > 1.0 - 1e-12);
        assert!(fidelity(&flat(&out.features), &flat(&mpnn_layer_reference(&g, &cfg).unwrap())) > 1.0 - 1e-12);
    }

    #[test]
    fn ring_matches_reference() {
        let g = ring(8, 4);
        let cfg = MpnnConfig::random(&g, 21);
        assert_eq!(cfg.parts.len(), 2);
        let out = apply_message_passing_layer(&g, &cfg).unwrap();
        assert!(fidelity(&flat(&out.features), &flat(&mpnn_layer_reference(&g, &cfg).unwrap())) > 1.0 - 1e-9);
    }

    #[test]
    fn masking_and_self_branch() {
        let g = random_graph(5, 0.4, 3, 2, 9);
        for (mask, include_self) in [(false, false), (true, false), (true, true)] {
            let cfg = MpnnConfig { mask_completion: mask, include_self, ..MpnnConfig::random(&g, 13) };
            let out = apply_message_passing_layer(&g, &cfg).unwrap();
            let f = fidelity(&flat(&out.features), &flat(&mpnn_layer_reference(&g, &cfg).unwrap()));
            assert!(f > 1.0 - 1e-9, "mask={mask} self={include_self}: {f}");
        }
    }

    #[test]
    fn output_is_normalized_sum_of_part_outputs() {
        let g = ring(4, 6);
        let cfg = MpnnConfig::random(&g, 5);
        let whole = mpnn_layer_reference(&g, &cfg).unwrap();
        let mut sum = CDense::zeros(4, 4);
        for part in &cfg.parts {
            let one = MpnnConfig { parts: vec![part.clone()], ..cfg.clone() };
            let out = apply_message_passing_layer(&g, &one).unwrap();
            // Rescale the normalised output back to its reference norm.
            sum += out.features * C64::new(mpnn_layer_reference(&g, &one).unwrap().norm(), 0.0);
        }
        let out = apply_message_passing_layer(&g, &cfg).unwrap();
        assert!(fidelity(&flat(&out.features), &flat(&sum)) > 1.0 - 1e-10);
        assert!(fidelity(&flat(&whole), &flat(&sum)) > 1.0 - 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn relabelling_permutes_rows(seed in 0u64..1000, shift in 1usize..4) {
            let g = ring(4, seed);
            let perm: Vec<usize> = (0..4).map(|i| (i + shift) % 4).collect();
            let cfg = MpnnConfig::random(&g, seed);
            let gp = g.permuted(&perm).unwrap();
            let cfgp = MpnnConfig { parts: cfg.parts.iter().map(|p| p.relabeled(&perm)).collect(), ..cfg.clone() };
            let a = apply_message_passing_layer(&g, &cfg).unwrap().features;
            let b = apply_message_passing_layer(&gp, &cfgp).unwrap().features;
            for j in 0..4 {
                for f in 0..4 {
                    prop_assert!((a[(j, f)] - b[(perm[j], f)]).norm() < 1e-10);
                }
            }
        }
    }
}
