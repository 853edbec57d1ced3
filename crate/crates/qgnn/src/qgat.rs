//! Graph attention: the swap-test attention oracle with phase estimation,
//! selective copy, the per-part diagonal oracle, conditional rotation and
//! the LCU-assembled attention layer.
//!
//! Oracle registers: `i`, `j` (addresses), `m1` (stored score, `t` bits),
//! `anc` (swap ancilla), `f1`, `f2` (key and query copies), `qpe` (`t`
//! bits). Per pair the swap test leaves `sin θ|0⟩|u⟩ + cos θ|1⟩|v⟩` with
//! `sin²θ = (1 + |⟨k|q⟩|²)/2`, so `|⟨k|q⟩|² = −cos 2θ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::block_encoding::{lcu_combine, BlockEncoding};
use crate::classical::{attention_table, dense, gat_reference_update, pad, row_state, CDense, ScoreConvention};
use crate::encode::{bits_for, build_pqc_unitary, pqc_circuit, PqcParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{complete_unitary, hadamard, inner, loader_unitary, pauli_x, ry, Matrix};
use crate::sim::{value_controls, RegisterLayout};
use crate::sparse::{one_sparse_decompose, OneSparsePart};
use crate::{Circ, Gate, State, C64};

pub const MIN_PHASE_BITS: usize = 2;
pub const MAX_PHASE_BITS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpeMode {
    /// Writes the rounded eigenphase of each Grover eigenvector directly.
    #[default]
    IdealizedQpe,
    /// Controlled powers of the Grover operator and an inverse Fourier
    /// transform.
    FullCircuitQpe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionOracleConfig {
    pub u_k: PqcParams,
    pub u_q: PqcParams,
    /// Width of the score and phase registers.
    pub t: usize,
    pub mode: QpeMode,
    pub convention: ScoreConvention,
}

impl AttentionOracleConfig {
    pub fn random(g: &Graph, t: usize, seed: u64) -> Self {
        let fb = feature_bits(g);
        Self {
            u_k: PqcParams::random(1, fb, seed),
            u_q: PqcParams::random(1, fb, seed.wrapping_add(1)),
            t,
            mode: QpeMode::IdealizedQpe,
            convention: ScoreConvention::MagnitudeSquared,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_PHASE_BITS..=MAX_PHASE_BITS).contains(&self.t) {
            return Err(Error::Config(format!("t must be in {MIN_PHASE_BITS}..={MAX_PHASE_BITS}, got {}", self.t)));
        }
        if self.mode == QpeMode::FullCircuitQpe && self.convention != ScoreConvention::MagnitudeSquared {
            return Err(Error::Config("the phase-estimation circuit only yields magnitude-squared scores".into()));
        }
        Ok(())
    }
}

/// Width of the feature registers.
pub fn feature_bits(g: &Graph) -> usize {
    bits_for(g.num_features()).max(1)
}

/// Width of each address register.
pub fn address_bits(g: &Graph) -> usize {
    bits_for(g.num_nodes()).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionScoreRecord {
    pub i: usize,
    pub j: usize,
    /// `⟨k_i|q_j⟩`.
    pub overlap: C64,
    pub theta: f64,
    /// Convention value before rounding.
    pub exact: f64,
    pub code: usize,
    /// Decoded `code`.
    pub stored: f64,
}

/// Keys and queries for every address, padded addresses carrying `|0⟩`.
#[derive(Clone, Debug)]
struct PairTable {
    a: usize,
    fb: usize,
    t: usize,
    nodes: usize,
    convention: ScoreConvention,
    mode: QpeMode,
    keys: Vec<Vec<C64>>,
    queries: Vec<Vec<C64>>,
}

impl PairTable {
    fn new(cfg: &AttentionOracleConfig, g: &Graph) -> Result<Self> {
        cfg.validate()?;
        let (a, fb) = (address_bits(g), feature_bits(g));
        let x = pad(g.features(), g.num_nodes(), 1 << fb)?;
        let (uk, uq) = (build_pqc_unitary(&cfg.u_k, fb)?, build_pqc_unitary(&cfg.u_q, fb)?);
        let mut e0 = vec![C64::new(0.0, 0.0); 1 << fb];
        e0[0] = C64::new(1.0, 0.0);
        let mut keys = vec![e0.clone(); 1 << a];
        let mut queries = vec![e0; 1 << a];
        for i in 0..g.num_nodes() {
            let s = row_state(&x, i)?;
            keys[i] = uk.matvec(&s);
            queries[i] = uq.matvec(&s);
        }
        let table = Self { a, fb, t: cfg.t, nodes: g.num_nodes(), convention: cfg.convention, mode: cfg.mode, keys, queries };
        if cfg.mode == QpeMode::FullCircuitQpe {
            table.check_representable()?;
        }
        Ok(table)
    }

    fn dim(&self) -> usize {
        1 << self.a
    }

    fn overlap(&self, i: usize, j: usize) -> C64 {
        inner(&self.keys[i], &self.queries[j])
    }

    fn theta(&self, i: usize, j: usize) -> f64 {
        let m = self.overlap(i, j).norm_sqr().min(1.0);
        ((1.0 + m) / 2.0).sqrt().min(1.0).asin()
    }

    /// `round(2^t θ/π) mod 2^t`, the phase index of the `e^{2iθ}` branch.
    fn y_plus(&self, i: usize, j: usize) -> usize {
        ((self.theta(i, j) / PI * (1 << self.t) as f64).round() as usize) % (1 << self.t)
    }

    fn code(&self, i: usize, j: usize) -> usize {
        let v = self.convention.exact(&self.keys[i], &self.queries[j]);
        self.convention.encode(v, self.t)
    }

    fn check_representable(&self) -> Result<()> {
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let y = self.theta(i, j) / PI * (1 << self.t) as f64;
                if (y - y.round()).abs() > 1e-9 {
                    return Err(Error::PhaseResolution { t: self.t });
                }
            }
        }
        Ok(())
    }

    /// Swap-test output on `(anc, f1, f2)`.
    fn psi(&self, i: usize, j: usize) -> Vec<C64> {
        let kq = kron_vec(&self.keys[i], &self.queries[j]);
        let qk = kron_vec(&self.queries[j], &self.keys[i]);
        let mut v: Vec<C64> = kq.iter().zip(&qk).map(|(a, b)| (a + b) * 0.5).collect();
        v.extend(kq.iter().zip(&qk).map(|(a, b)| (a - b) * 0.5));
        v
    }

    /// Grover eigenvectors `(g ± i b)/√2` in the swap-test plane, or the
    /// swap-test state itself when `cos θ = 0`.
    fn eigenvectors(&self, i: usize, j: usize) -> Vec<Vec<C64>> {
        let psi = self.psi(i, j);
        let half = psi.len() / 2;
        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let (s, c) = (norm(&psi[..half]), norm(&psi[half..]));
        if c < 1e-12 {
            return vec![psi];
        }
        let gb: Vec<C64> = psi.iter().enumerate().map(|(k, z)| if k < half { z / s } else { C64::new(0.0, 0.0) }).collect();
        let bb: Vec<C64> = psi.iter().enumerate().map(|(k, z)| if k < half { C64::new(0.0, 0.0) } else { z / c }).collect();
        let h = 0.5f64.sqrt();
        let plus = gb.iter().zip(&bb).map(|(g, b)| (g + C64::i() * b) * h).collect();
        let minus = gb.iter().zip(&bb).map(|(g, b)| (g - C64::i() * b) * h).collect();
        vec![plus, minus]
    }

    fn records(&self) -> Vec<AttentionScoreRecord> {
        let mut out = Vec::with_capacity(self.nodes * self.nodes);
        for i in 0..self.nodes {
            for j in 0..self.nodes {
                let exact = self.convention.exact(&self.keys[i], &self.queries[j]);
                let code = self.code(i, j);
                out.push(AttentionScoreRecord {
                    i,
                    j,
                    overlap: self.overlap(i, j),
                    theta: self.theta(i, j),
                    exact,
                    code,
                    stored: self.convention.decode(code, self.t),
                });
            }
        }
        out
    }
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn cnot(control: usize, target: usize) -> Result<Gate> {
    Ok(Gate::unitary(pauli_x(), vec![target])?.controlled(&[(control, true)]))
}

fn h_gate(w: usize) -> Result<Gate> {
    Gate::unitary(hadamard(), vec![w])
}

/// Global wires of the oracle registers.
#[derive(Clone, Debug)]
struct OracleWires {
    i: Vec<usize>,
    j: Vec<usize>,
    m1: Vec<usize>,
    anc: usize,
    f1: Vec<usize>,
    f2: Vec<usize>,
    qpe: Vec<usize>,
}

impl OracleWires {
    fn from_layout(l: &RegisterLayout) -> Result<Self> {
        Ok(Self {
            i: l.wire_vec("i")?,
            j: l.wire_vec("j")?,
            m1: l.wire_vec("m1")?,
            anc: l.wires("anc")?.start,
            f1: l.wire_vec("f1")?,
            f2: l.wire_vec("f2")?,
            qpe: l.wire_vec("qpe")?,
        })
    }

    fn plane(&self) -> Vec<usize> {
        let mut w = vec![self.anc];
        w.extend(&self.f1);
        w.extend(&self.f2);
        w
    }

    fn pair(&self) -> Vec<usize> {
        let mut w = self.i.clone();
        w.extend(&self.j);
        w
    }
}

/// `H_anc · Σ |anc, i, j⟩⟨…| ⊗ P · H_anc`, where `P` loads `k_i ⊗ q_j` when
/// `anc = 0` and `q_j ⊗ k_i` when `anc = 1`.
fn append_swap_test(c: &mut Circ, pt: &PairTable, w: &OracleWires) -> Result<()> {
    let d = pt.dim();
    let loaders_k: Vec<Matrix<f64>> = pt.keys.iter().map(|v| loader_unitary(v)).collect();
    let loaders_q: Vec<Matrix<f64>> = pt.queries.iter().map(|v| loader_unitary(v)).collect();
    let mut blocks = Vec::with_capacity(2 * d * d);
    for anc in 0..2 {
        for i in 0..d {
            for j in 0..d {
                blocks.push(Some(if anc == 0 {
                    loaders_k[i].kron(&loaders_q[j])
                } else {
                    loaders_q[j].kron(&loaders_k[i])
                }));
            }
        }
    }
    let mut selectors = vec![w.anc];
    selectors.extend(w.pair());
    let mut targets = w.f1.clone();
    targets.extend(&w.f2);
    c.push(h_gate(w.anc)?)?;
    c.push(Gate::multiplexed(selectors, blocks, targets)?)?;
    c.push(h_gate(w.anc)?)
}

/// `G = U C₂ U† C₁` with `C₁ = Z_anc` and `C₂ = I − 2|0⟩⟨0|` on the plane.
fn append_grover(c: &mut Circ, pt: &PairTable, w: &OracleWires) -> Result<()> {
    let mut u = Circ::new(c.n_wires());
    append_swap_test(&mut u, pt, w)?;
    let plane = w.plane();
    c.push(Gate::diagonal(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)], vec![w.anc])?)?;
    c.append(&u.inverse())?;
    let mut reflect = vec![C64::new(1.0, 0.0); 1 << plane.len()];
    reflect[0] = C64::new(-1.0, 0.0);
    c.push(Gate::diagonal(reflect, plane)?)?;
    c.append(&u)
}

fn qft_matrix(t: usize) -> Matrix<f64> {
    let n = 1usize << t;
    let s = 1.0 / (n as f64).sqrt();
    Matrix::from_fn(n, n, |y, x| C64::from_polar(s, 2.0 * PI * ((x * y) % n) as f64 / n as f64))
}

/// Writes the eigenphase index of each Grover eigenvector into `qpe`.
fn append_qpe(c: &mut Circ, pt: &PairTable, w: &OracleWires) -> Result<()> {
    match pt.mode {
        QpeMode::IdealizedQpe => {
            let d = pt.dim();
            let plane = w.plane();
            let pdim = 1usize << plane.len();
            let mut blocks = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    blocks.push(Some(complete_unitary(pdim, &pt.eigenvectors(i, j))));
                }
            }
            let basis = Gate::multiplexed(w.pair(), blocks, plane.clone())?;
            let mut inputs = w.pair();
            inputs.extend(&plane);
            let pw = plane.len();
            let (a, t) = (pt.a, pt.t);
            let write = Gate::xor_oracle(inputs, w.qpe.clone(), |x| {
                let (i, j, v) = (x >> (a + pw), (x >> pw) & ((1 << a) - 1), x & (pdim - 1));
                let y = pt.y_plus(i, j);
                match v {
                    0 => y,
                    1 => ((1 << t) - y) % (1 << t),
                    _ => 0,
                }
            })?;
            c.push(basis.inverse())?;
            c.push(write)?;
            c.push(basis)
        }
        QpeMode::FullCircuitQpe => {
            let mut g = Circ::new(c.n_wires());
            append_grover(&mut g, pt, w)?;
            let map: Vec<usize> = (0..c.n_wires()).collect();
            for &q in &w.qpe {
                c.push(h_gate(q)?)?;
            }
            for (b, &q) in w.qpe.iter().enumerate() {
                for _ in 0..1usize << (pt.t - 1 - b) {
                    c.append_controlled(&g, &map, &[(q, true)])?;
                }
            }
            c.push(Gate::unitary(qft_matrix(pt.t).adjoint(), w.qpe.clone())?)
        }
    }
}

/// Writes the score code into `m1`. The idealised variant is keyed on the
/// address pair; the circuit variant reads the phase register.
fn score_write(pt: &PairTable, w: &OracleWires) -> Result<Gate> {
    match pt.mode {
        QpeMode::IdealizedQpe => {
            let a = pt.a;
            Gate::xor_oracle(w.pair(), w.m1.clone(), |x| pt.code(x >> a, x & ((1 << a) - 1)))
        }
        QpeMode::FullCircuitQpe => {
            let t = pt.t;
            Gate::xor_oracle(w.qpe.clone(), w.m1.clone(), |y| {
                ScoreConvention::MagnitudeSquared.encode(-(2.0 * PI * y as f64 / (1 << t) as f64).cos(), t)
            })
        }
    }
}

/// Swap test, phase estimation, score write, then both undone.
fn append_oracle(c: &mut Circ, pt: &PairTable, w: &OracleWires) -> Result<()> {
    let n = c.n_wires();
    let mut u = Circ::new(n);
    append_swap_test(&mut u, pt, w)?;
    let mut q = Circ::new(n);
    append_qpe(&mut q, pt, w)?;
    c.append(&u)?;
    c.append(&q)?;
    c.push(score_write(pt, w)?)?;
    c.append(&q.inverse())?;
    c.append(&u.inverse())
}

/// A circuit together with the layout it acts on.
#[derive(Clone, Debug)]
pub struct LaidOutCircuit {
    pub circuit: Circ,
    pub layout: RegisterLayout,
}

/// The parallel swap test on `[i, j, anc, f1, f2]`.
pub fn build_swap_test_unitary(cfg: &AttentionOracleConfig, g: &Graph) -> Result<LaidOutCircuit> {
    let pt = PairTable::new(cfg, g)?;
    let layout = RegisterLayout::new(&[("i", pt.a), ("j", pt.a), ("anc", 1), ("f1", pt.fb), ("f2", pt.fb)])?;
    let w = swap_wires(&layout)?;
    let mut c = Circ::new(layout.total_qubits());
    append_swap_test(&mut c, &pt, &w)?;
    Ok(LaidOutCircuit { circuit: c, layout })
}

fn swap_wires(layout: &RegisterLayout) -> Result<OracleWires> {
    Ok(OracleWires {
        i: layout.wire_vec("i")?,
        j: layout.wire_vec("j")?,
        m1: Vec::new(),
        anc: layout.wires("anc")?.start,
        f1: layout.wire_vec("f1")?,
        f2: layout.wire_vec("f2")?,
        qpe: Vec::new(),
    })
}

/// Probability that the swap ancilla reads 0 on the pair `(i, j)`.
pub fn swap_zero_probability(u: &LaidOutCircuit, i: usize, j: usize) -> Result<f64> {
    let mut s = State::basis(u.layout.clone(), u.layout.compose(&[("i", i), ("j", j)])?)?;
    s.apply_circuit(&u.circuit)?;
    s.zero_probability(&["anc"])
}

/// `G = U C₂ U† C₁` on the swap-test layout.
pub fn build_grover_operator(u: &LaidOutCircuit) -> Result<Circ> {
    let w = swap_wires(&u.layout)?;
    let mut plane = vec![w.anc];
    plane.extend(&w.f1);
    plane.extend(&w.f2);
    let mut c = Circ::new(u.circuit.n_wires());
    c.push(Gate::diagonal(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)], vec![w.anc])?)?;
    c.append(&u.circuit.inverse())?;
    let mut reflect = vec![C64::new(1.0, 0.0); 1 << plane.len()];
    reflect[0] = C64::new(-1.0, 0.0);
    c.push(Gate::diagonal(reflect, plane)?)?;
    c.append(&u.circuit)?;
    Ok(c)
}

/// Eigenphases of `G` restricted to the plane spanned by the two
/// ancilla branches of `U|i, j, 0⟩`, plus the leakage of that plane under
/// `G`.
pub fn grover_pair_phases(u: &LaidOutCircuit, g: &Circ, i: usize, j: usize) -> Result<([f64; 2], f64)> {
    let layout = &u.layout;
    let mut psi = State::basis(layout.clone(), layout.compose(&[("i", i), ("j", j)])?)?;
    psi.apply_circuit(&u.circuit)?;
    let mut branches = Vec::new();
    for anc in [false, true] {
        let mut b = psi.clone();
        let mask = layout.mask(&["anc"])?;
        for (idx, z) in b.amplitudes_mut().iter_mut().enumerate() {
            if (idx & mask != 0) != anc {
                *z = C64::new(0.0, 0.0);
            }
        }
        if b.norm() > 1e-12 {
            b.normalize()?;
            branches.push(b);
        }
    }
    let images: Vec<State> = branches
        .iter()
        .map(|b| {
            let mut s = b.clone();
            s.apply_circuit(g)?;
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let k = branches.len();
    let mut m = vec![vec![C64::new(0.0, 0.0); k]; k];
    let mut leak = 0.0f64;
    for c in 0..k {
        let mut rest = images[c].amplitudes().to_vec();
        for r in 0..k {
            m[r][c] = branches[r].inner_product(&images[c])?;
            for (z, b) in rest.iter_mut().zip(branches[r].amplitudes()) {
                *z -= m[r][c] * b;
            }
        }
        leak = leak.max(rest.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    let phases = if k == 1 {
        let p = m[0][0].arg();
        [p, -p]
    } else {
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (tr * tr - det * 4.0).sqrt();
        [((tr + disc) / 2.0).arg(), ((tr - disc) / 2.0).arg()]
    };
    Ok((phases, leak))
}

/// The full attention oracle on `[i, j, m1, anc, f1, f2, qpe]`.
#[derive(Clone, Debug)]
pub struct AttentionOracle {
    pub circuit: Circ,
    pub layout: RegisterLayout,
    pub records: Vec<AttentionScoreRecord>,
    pub config: AttentionOracleConfig,
}

/// Modal `m1` outcome on one address pair.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReadout {
    pub i: usize,
    pub j: usize,
    pub code: usize,
    pub probability: f64,
}

pub fn oracle_layout(a: usize, fb: usize, t: usize) -> Result<RegisterLayout> {
    RegisterLayout::new(&[("i", a), ("j", a), ("m1", t), ("anc", 1), ("f1", fb), ("f2", fb), ("qpe", t)])
}

pub fn run_attention_oracle(cfg: &AttentionOracleConfig, g: &Graph) -> Result<AttentionOracle> {
    let pt = PairTable::new(cfg, g)?;
    let layout = oracle_layout(pt.a, pt.fb, pt.t)?;
    let mut c = Circ::new(layout.total_qubits());
    append_oracle(&mut c, &pt, &OracleWires::from_layout(&layout)?)?;
    Ok(AttentionOracle { circuit: c, layout, records: pt.records(), config: cfg.clone() })
}

impl AttentionOracle {
    /// Runs the oracle on the uniform superposition of node pairs. Returns
    /// the modal score code per pair and the total weight left on any
    /// nonzero work register (`anc`, `f1`, `f2`, `qpe`).
    pub fn readout(&self, nodes: usize) -> Result<(Vec<OracleReadout>, f64)> {
        let l = &self.layout;
        let mut amps = vec![C64::new(0.0, 0.0); l.dim()];
        let amp = C64::new(1.0 / nodes as f64, 0.0);
        for i in 0..nodes {
            for j in 0..nodes {
                amps[l.compose(&[("i", i), ("j", j)])?] = amp;
            }
        }
        let mut s = State::from_amplitudes(l.clone(), amps)?;
        s.apply_circuit(&self.circuit)?;
        let work = l.mask(&["anc", "f1", "f2", "qpe"])?;
        let t = l.width("m1")?;
        let mut dist = vec![vec![0.0; 1 << t]; nodes * nodes];
        let mut residual = 0.0;
        for (idx, z) in s.amplitudes().iter().enumerate() {
            let p = z.norm_sqr();
            if p == 0.0 {
                continue;
            }
            if idx & work != 0 {
                residual += p;
                continue;
            }
            let (i, j) = (l.extract(idx, "i")?, l.extract(idx, "j")?);
            if i < nodes && j < nodes {
                dist[i * nodes + j][l.extract(idx, "m1")?] += p * (nodes * nodes) as f64;
            }
        }
        let readouts = dist
            .iter()
            .enumerate()
            .map(|(pair, d)| {
                let (code, &probability) =
                    d.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty distribution");
                OracleReadout { i: pair / nodes, j: pair % nodes, code, probability }
            })
            .collect();
        Ok((readouts, residual))
    }
}

/// On branches with `k = j`, copies `m1` into `m2` by XOR. Compare-then-copy:
/// `k ⊕= j`, copy controlled on `k = 0`, undo; depth independent of the
/// address width.
fn append_selective_copy(c: &mut Circ, j: &[usize], k: &[usize], m1: &[usize], m2: &[usize]) -> Result<()> {
    let compare: Vec<Gate> = j.iter().zip(k).map(|(&a, &b)| cnot(a, b)).collect::<Result<_>>()?;
    for g in &compare {
        c.push(g.clone())?;
    }
    let zero: Vec<(usize, bool)> = k.iter().map(|&w| (w, false)).collect();
    for (&src, &dst) in m1.iter().zip(m2) {
        let mut controls = zero.clone();
        controls.push((src, true));
        c.push(Gate::unitary(pauli_x(), vec![dst])?.controlled(&controls))?;
    }
    for g in compare.iter().rev() {
        c.push(g.clone())?;
    }
    Ok(())
}

pub fn selective_copy_layout(addr_width: usize, value_width: usize) -> Result<RegisterLayout> {
    RegisterLayout::new(&[("j", addr_width), ("k", addr_width), ("m1", value_width), ("m2", value_width)])
}

/// Constant-depth selective copy on `[j, k, m1, m2]`.
pub fn build_selective_copy(addr_width: usize, value_width: usize) -> Result<Circ> {
    let l = selective_copy_layout(addr_width, value_width)?;
    let mut c = Circ::new(l.total_qubits());
    append_selective_copy(&mut c, &l.wire_vec("j")?, &l.wire_vec("k")?, &l.wire_vec("m1")?, &l.wire_vec("m2")?)?;
    Ok(c)
}

/// Reference cascade: one multi-controlled copy per address value.
pub fn build_selective_copy_cascade(addr_width: usize, value_width: usize) -> Result<Circ> {
    let l = selective_copy_layout(addr_width, value_width)?;
    let (j, k, m1, m2) = (l.wire_vec("j")?, l.wire_vec("k")?, l.wire_vec("m1")?, l.wire_vec("m2")?);
    let mut c = Circ::new(l.total_qubits());
    for v in 0..1usize << addr_width {
        for (&src, &dst) in m1.iter().zip(&m2) {
            let mut controls = value_controls(&j, v);
            controls.extend(value_controls(&k, v));
            controls.push((src, true));
            c.push(Gate::unitary(pauli_x(), vec![dst])?.controlled(&controls))?;
        }
    }
    Ok(c)
}

/// Rotates `rot` to `â|0⟩ + √(1−â²)|1⟩` for the score stored on `value`.
pub fn conditional_rotation_op(value: &[usize], rot: usize, convention: ScoreConvention) -> Result<Gate> {
    let t = value.len();
    let blocks = (0..1usize << t).map(|m| Some(ry(2.0 * convention.decode(m, t).clamp(-1.0, 1.0).acos()))).collect();
    Gate::multiplexed(value.to_vec(), blocks, vec![rot])
}

/// [`conditional_rotation_op`] on `[m, rot]`.
pub fn conditional_rotation_encode(t: usize, convention: ScoreConvention) -> Result<LaidOutCircuit> {
    let layout = RegisterLayout::new(&[("m", t), ("rot", 1)])?;
    let mut c = Circ::new(layout.total_qubits());
    c.push(conditional_rotation_op(&layout.wire_vec("m")?, layout.wires("rot")?.start, convention)?)?;
    Ok(LaidOutCircuit { circuit: c, layout })
}

/// How the per-part score is produced inside the layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatBackend {
    /// Oracle, copy and uncompute folded into one reversible table on
    /// `(i, j, k) → m2`. Identical action, fewer qubits.
    #[default]
    Compiled,
    /// The full oracle with its work registers.
    Oracle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GatLayerConfig {
    /// Parts of the plain adjacency (no self loops).
    pub parts: Vec<OneSparsePart>,
    pub u_w: PqcParams,
    /// Weight of the identity branch.
    pub r: f64,
    /// Adds the identity part, so `â(x_j, x_j) x_j` joins the sum.
    pub include_self: bool,
    pub backend: GatBackend,
}

impl GatLayerConfig {
    pub fn for_graph(g: &Graph, u_w: PqcParams, r: f64) -> Self {
        Self { parts: one_sparse_decompose(&g.adjacency()).parts, u_w, r, include_self: false, backend: GatBackend::Compiled }
    }

    /// Parts summed by the layer, the identity part last when included.
    pub fn active_parts(&self, n: usize) -> Vec<OneSparsePart> {
        let mut parts = self.parts.clone();
        if self.include_self {
            parts.push(OneSparsePart::identity(n));
        }
        parts
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::Config(format!("identity weight r = {} must be finite and non-negative", self.r)));
        }
        if self.parts.iter().any(|p| p.dim() != n) {
            return Err(Error::Config("decomposition size differs from the graph".into()));
        }
        if self.r == 0.0 && self.active_parts(n).is_empty() {
            return Err(Error::Config("layer has no branches".into()));
        }
        Ok(())
    }
}

/// Wires of one part's local circuit.
struct PartWires {
    i: Vec<usize>,
    j: Vec<usize>,
    k: Vec<usize>,
    m2: Vec<usize>,
    oracle: Option<OracleWires>,
}

fn padded_perm(part: &OneSparsePart, dim: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..dim).collect();
    perm[..part.dim()].copy_from_slice(&part.perm);
    perm
}

/// `O_c` on `i`, the score of `(i, j)` copied into `m2`, then `O_c†`, so
/// `|j⟩^⊗3|0⟩ ↦ |j⟩^⊗3|â(x_{c(j)}, x_j)⟩`. Branches
/// with `k ≠ j` keep `m2 = 0`. Self-inverse.
fn append_o_diagonal(c: &mut Circ, perm: &[usize], pt: &PairTable, w: &PartWires) -> Result<()> {
    let oc = Gate::permutation(perm.to_vec(), w.i.clone())?;
    c.push(oc.clone())?;
    match &w.oracle {
        None => {
            let a = pt.a;
            let mut inputs = w.i.clone();
            inputs.extend(&w.j);
            inputs.extend(&w.k);
            let mask = (1usize << a) - 1;
            c.push(Gate::xor_oracle(inputs, w.m2.clone(), |x| {
                let (i, j, k) = (x >> (2 * a), (x >> a) & mask, x & mask);
                if j == k {
                    pt.code(i, j)
                } else {
                    0
                }
            })?)?;
        }
        Some(ow) => {
            let mut o = Circ::new(c.n_wires());
            append_oracle(&mut o, pt, ow)?;
            c.append(&o)?;
            append_selective_copy(c, &w.j, &w.k, &ow.m1, &w.m2)?;
            c.append(&o.inverse())?;
        }
    }
    c.push(oc.inverse())
}

/// The diagonal score oracle for part `l` on
/// `[i, j, k, m1, m2, anc, f1, f2, qpe]` with the full attention oracle.
pub fn build_o_diagonal(g: &Graph, layer: &GatLayerConfig, att: &AttentionOracleConfig, l: usize) -> Result<LaidOutCircuit> {
    let pt = PairTable::new(att, g)?;
    let parts = layer.active_parts(g.num_nodes());
    let part = parts.get(l).ok_or_else(|| Error::Config(format!("part {l} does not exist")))?;
    let (a, t) = (pt.a, pt.t);
    let layout = RegisterLayout::new(&[
        ("i", a),
        ("j", a),
        ("k", a),
        ("m1", t),
        ("m2", t),
        ("anc", 1),
        ("f1", pt.fb),
        ("f2", pt.fb),
        ("qpe", t),
    ])?;
    let w = PartWires {
        i: layout.wire_vec("i")?,
        j: layout.wire_vec("j")?,
        k: layout.wire_vec("k")?,
        m2: layout.wire_vec("m2")?,
        oracle: Some(OracleWires::from_layout(&layout)?),
    };
    let mut c = Circ::new(layout.total_qubits());
    append_o_diagonal(&mut c, &padded_perm(part, pt.dim()), &pt, &w)?;
    Ok(LaidOutCircuit { circuit: c, layout })
}

/// Encoding of `M_l`: maps `|c(j)⟩^⊗3 y` to `â(x_{c(j)}, x_j) |j⟩^⊗3 y` on
/// supported entries. Local wires: flags `[rot, valid]`, work `m2` (plus the
/// oracle registers), data `[i, j, k, feat]`.
fn gat_part_encoding(part: &OneSparsePart, pt: &PairTable, backend: GatBackend) -> Result<BlockEncoding> {
    let (a, fb, t) = (pt.a, pt.fb, pt.t);
    let oracle_width = match backend {
        GatBackend::Compiled => 0,
        GatBackend::Oracle => t + 1 + 2 * fb + t,
    };
    let work = t + oracle_width;
    let n = 2 + work + 3 * a + fb;
    let (rot, valid) = (0, 1);
    let range = |s: usize, len: usize| (s..s + len).collect::<Vec<usize>>();
    let m2 = range(2, t);
    let data0 = 2 + work;
    let w = PartWires {
        i: range(data0, a),
        j: range(data0 + a, a),
        k: range(data0 + 2 * a, a),
        m2: m2.clone(),
        oracle: match backend {
            GatBackend::Compiled => None,
            GatBackend::Oracle => {
                let s = 2 + t;
                Some(OracleWires {
                    i: range(data0, a),
                    j: range(data0 + a, a),
                    m1: range(s, t),
                    anc: s + t,
                    f1: range(s + t + 1, fb),
                    f2: range(s + t + 1 + fb, fb),
                    qpe: range(s + t + 1 + 2 * fb, t),
                })
            }
        },
    };
    let perm = padded_perm(part, pt.dim());
    let inv = {
        let mut inv = vec![0; perm.len()];
        for (j, &r) in perm.iter().enumerate() {
            inv[r] = j;
        }
        inv
    };
    let mut c = Circ::new(n);
    for reg in [&w.i, &w.j, &w.k] {
        c.push(Gate::permutation(inv.clone(), reg.clone())?)?;
    }
    append_o_diagonal(&mut c, &perm, pt, &w)?;
    c.push(conditional_rotation_op(&m2, rot, pt.convention)?)?;
    let support = part.support.clone();
    c.push(Gate::xor_oracle(w.k.clone(), vec![valid], |k| usize::from(!support.get(k).copied().unwrap_or(false)))?)?;
    append_o_diagonal(&mut c, &perm, pt, &w)?;
    BlockEncoding::new(c, 2, work, 1.0, 0.0)
}

/// `(Σ_l M_l + r I) / α` as one LCU.
pub fn gat_layer_encoding(g: &Graph, layer: &GatLayerConfig, att: &AttentionOracleConfig) -> Result<BlockEncoding> {
    layer.validate(g.num_nodes())?;
    let pt = PairTable::new(att, g)?;
    let mut encodings = Vec::new();
    let mut coefficients = Vec::new();
    for part in layer.active_parts(g.num_nodes()) {
        encodings.push(gat_part_encoding(&part, &pt, layer.backend)?);
        coefficients.push(1.0);
    }
    if layer.r > 0.0 {
        encodings.push(BlockEncoding::from_unitary(Circ::new(3 * pt.a + pt.fb)));
        // Alone, r·I is encoded as I: the output is normalised anyway.
        coefficients.push(if encodings.len() == 1 { 1.0 } else { layer.r });
    }
    lcu_combine(&encodings, &coefficients)
}

#[derive(Clone, Debug)]
pub struct GatOutput {
    /// `Σ_j |j⟩^⊗3 |x'_j⟩`, normalised, on `[i, j, k, feat]`.
    pub state: State,
    /// Row `j` is `x'_j`, normalised jointly over rows.
    pub features: CDense,
    /// Ancilla post-selection times the address-diagonal projection.
    pub success_probability: f64,
    pub qubits: usize,
}

/// Prepares `Σ_i |i⟩^⊗3 U_w|x_i⟩`, applies the layer encoding, post-selects
/// the ancillas and projects the addresses onto their diagonal.
pub fn apply_graph_attention_layer(g: &Graph, layer: &GatLayerConfig, att: &AttentionOracleConfig) -> Result<GatOutput> {
    let be = gat_layer_encoding(g, layer, att)?;
    let (a, fb) = (address_bits(g), feature_bits(g));
    let layout = RegisterLayout::new(&[
        ("flag", be.flag_width()),
        ("work", be.work_width()),
        ("i", a),
        ("j", a),
        ("k", a),
        ("feat", fb),
    ])?;
    let x = g.features();
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroFeatures);
    }
    let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
    for i in 0..x.nrows() {
        for f in 0..x.ncols() {
            amps[layout.compose(&[("i", i), ("j", i), ("k", i), ("feat", f)])?] = C64::new(x[(i, f)] / norm, 0.0);
        }
    }
    let mut s = State::from_amplitudes(layout.clone(), amps)?;
    let feat = layout.wire_vec("feat")?;
    let mut c = Circ::new(layout.total_qubits());
    c.append_mapped(&pqc_circuit(&layer.u_w, fb)?, &feat)?;
    let mut data = layout.wire_vec("i")?;
    data.extend(layout.wire_vec("j")?);
    data.extend(layout.wire_vec("k")?);
    data.extend(&feat);
    c.append_mapped(be.circuit(), &be.wire_map(&layout.wire_vec("flag")?, &layout.wire_vec("work")?, &data)?)?;
    s.apply_circuit(&c)?;

    let (selected, p_anc) = s.postselect_zero(&["flag", "work"])?;
    let mut out = selected.zero_branch(&["i", "j", "k", "feat"])?;
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
    let n = g.num_nodes();
    let mut features = CDense::zeros(n, 1 << fb);
    for j in 0..n {
        for f in 0..1usize << fb {
            features[(j, f)] = out.amplitudes()[dl.compose(&[("i", j), ("j", j), ("k", j), ("feat", f)])?];
        }
    }
    Ok(GatOutput { state: out, features, success_probability: p_anc * p_diag, qubits: layout.total_qubits() })
}

/// Classical update with the same convention and rounding.
pub fn gat_layer_reference(g: &Graph, layer: &GatLayerConfig, att: &AttentionOracleConfig) -> Result<CDense> {
    att.validate()?;
    let fb = feature_bits(g);
    let x = pad(g.features(), g.num_nodes(), 1 << fb)?;
    let scores = attention_table(
        &x,
        &build_pqc_unitary(&att.u_k, fb)?,
        &build_pqc_unitary(&att.u_q, fb)?,
        att.convention,
        Some(att.t),
    )?;
    let u_w = build_pqc_unitary(&layer.u_w, fb)?;
    Ok(gat_reference_update(&x, &layer.active_parts(g.num_nodes()), &scores, layer.r, &u_w))
}

/// `dense` re-exported for callers comparing against the reference.
pub fn dense_weight(p: &PqcParams, bits: usize) -> Result<CDense> {
    Ok(dense(&build_pqc_unitary(p, bits)?))
}
