//! Invariant suites over the bundled fixtures. `qgnn verify` runs these;
//! every check is deterministic for a given seed.

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::block_encoding::{
    extract_encoded_block, one_sparse_block_encoding, product_block_encoding, qsvt_transform, sparse_matrix_encoding,
    QsvtPhases, QsvtSpec,
};
use crate::classical::{
    complexify, gcn_forward, gcn_forward_naive, lgc_forward, lgc_forward_naive, sgc_forward, sgc_forward_naive,
    CDense, LgcFilter,
};
use crate::encode::{Activation, PqcParams};
use crate::error::{Error, Result};
use crate::fixtures::bundled;
use crate::graph::{normalized_adjacency, Graph, RMatrix};
use crate::qgat::{apply_graph_attention_layer, gat_layer_reference, run_attention_oracle, AttentionOracleConfig, GatLayerConfig};
use crate::qgcn::{
    adjacency_encoding, feature_bits, feature_state, laplacian_encoding, node_bits, run_layer, run_quantum_lgc,
    run_quantum_sgc, run_two_layer_qgcn, vectorize, weight_matrix, QgcnConfig, QgcnModel,
};
use crate::qmpnn::{apply_message_passing_layer, mpnn_layer_reference, MpnnConfig, UpFamily};
use crate::sim::fidelity;
use crate::{CMatrix, State, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    BlockEnc,
    Gcn,
    Sgc,
    Lgc,
    Gat,
    Mpnn,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [Suite::BlockEnc, Suite::Gcn, Suite::Sgc, Suite::Lgc, Suite::Gat, Suite::Mpnn];

    pub fn name(self) -> &'static str {
        match self {
            Suite::BlockEnc => "blockenc",
            Suite::Gcn => "gcn",
            Suite::Sgc => "sgc",
            Suite::Lgc => "lgc",
            Suite::Gat => "gat",
            Suite::Mpnn => "mpnn",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`; expected blockenc, gcn, sgc, lgc, gat, mpnn or all")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, what: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), pass: value <= limit, detail: format!("{what} {value:.3e} (limit {limit:.0e})") }
    }

    /// Passes when `1 − fidelity ≤ limit`.
    pub fn fidelity(name: impl Into<String>, f: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            pass: 1.0 - f <= limit,
            detail: format!("fidelity {f:.15} (1 - f = {:.3e}, limit {limit:.0e})", 1.0 - f),
        }
    }

    fn failed(name: impl Into<String>, e: &Error) -> Self {
        Self { name: name.into(), pass: false, detail: format!("error: {e}") }
    }
}

/// Knobs for [`run_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Score register width for the attention checks.
    pub phase_bits: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 7, phase_bits: 6 }
    }
}

/// Runs one suite, or every suite for [`Suite::All`]. A check that errors
/// is reported as failed rather than aborting the run.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<Check> {
    if suite == Suite::All {
        return Suite::EACH.iter().flat_map(|&s| run_suite(s, opts)).collect();
    }
    let mut out = Vec::new();
    for (name, g) in bundled() {
        let prefix = format!("{suite}/{name}");
        match fixture_checks(suite, &prefix, &g, opts) {
            Ok(mut checks) => out.append(&mut checks),
            Err(e) => out.push(Check::failed(prefix, &e)),
        }
    }
    if suite == Suite::Gat {
        let g = bundled()[1].1.clone();
        let edgeless = Graph::new(g.features().clone(), &[], g.labels().to_vec()).expect("same nodes");
        match gat_layer_check("gat/edgeless/layer", &edgeless, opts) {
            Ok(c) => out.push(c),
            Err(e) => out.push(Check::failed("gat/edgeless/layer", &e)),
        }
    }
    out
}

fn fixture_checks(suite: Suite, prefix: &str, g: &Graph, opts: &VerifyOptions) -> Result<Vec<Check>> {
    match suite {
        Suite::BlockEnc => blockenc_checks(prefix, g, opts.seed),
        Suite::Gcn => gcn_checks(prefix, g, opts.seed),
        Suite::Sgc => sgc_checks(prefix, g, opts.seed),
        Suite::Lgc => lgc_checks(prefix, g, opts.seed),
        Suite::Gat => gat_checks(prefix, g, opts),
        Suite::Mpnn => mpnn_checks(prefix, g, opts.seed),
        Suite::All => unreachable!("expanded by run_suite"),
    }
}

fn to_c(m: &RMatrix, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |r, c| if r < m.nrows() && c < m.ncols() { C64::new(m[(r, c)], 0.0) } else { C64::new(0.0, 0.0) })
}

fn scaled_block(be: &crate::block_encoding::BlockEncoding) -> Result<CMatrix> {
    Ok(extract_encoded_block(be)?.scale(C64::new(be.alpha(), 0.0)))
}

/// `V f(Λ) Vᵀ` for a real symmetric block.
pub fn spectral_apply(block: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = block.rows();
    let eig = SymmetricEigen::new(RMatrix::from_fn(n, n, |r, c| block[(r, c)].re));
    let d = RMatrix::from_diagonal(&eig.eigenvalues.map(&f));
    let m = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    to_c(&m, n)
}

fn blockenc_checks(prefix: &str, g: &Graph, seed: u64) -> Result<Vec<Check>> {
    let a = normalized_adjacency(g);
    let (be, parts) = sparse_matrix_encoding(&a)?;
    let dim = 1usize << be.data_width();
    let mut one_sparse = 0.0f64;
    for part in &parts.parts {
        let pe = one_sparse_block_encoding(part)?;
        let want = to_c(&part.to_matrix(), 1 << pe.data_width());
        one_sparse = one_sparse.max(scaled_block(&pe)?.max_abs_diff(&want));
    }
    let lcu = scaled_block(&be)?.max_abs_diff(&to_c(&a, dim));
    let product = scaled_block(&product_block_encoding(&be, &be)?)?.max_abs_diff(&to_c(&(&a * &a), dim));

    let l = laplacian_encoding(g)?;
    let under = extract_encoded_block(&l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.1..3.1)).collect();
    let spec = QsvtSpec { phases: QsvtPhases::Definite(phases.clone()), encoding: l };
    let got = extract_encoded_block(&qsvt_transform(&spec)?)?;
    let qsvt = got.max_abs_diff(&spectral_apply(&under, |x| spec.phases.block_value(x)));
    Ok(vec![
        Check::at_most(format!("{prefix}/one-sparse"), "max deviation", one_sparse, 1e-9),
        Check::at_most(format!("{prefix}/lcu"), "max deviation", lcu, 1e-9),
        Check::at_most(format!("{prefix}/product"), "max deviation", product, 1e-9),
        Check::at_most(format!("{prefix}/qsvt"), "max deviation", qsvt, 1e-8),
    ])
}

fn state_fidelity(state: &State, m: &CDense, g: &Graph) -> Result<f64> {
    Ok(fidelity(state.amplitudes(), &vectorize(m, node_bits(g), feature_bits(g))?))
}

fn max_dev(a: &CDense, b: &CDense) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn matrix_fidelity(a: &CDense, b: &CDense) -> f64 {
    let va: Vec<C64> = a.iter().copied().collect();
    let vb: Vec<C64> = b.iter().copied().collect();
    fidelity(&va, &vb)
}

fn gcn_checks(prefix: &str, g: &Graph, seed: u64) -> Result<Vec<Check>> {
    let fb = feature_bits(g);
    let cfg = QgcnConfig { activation: Activation::Relu, ..QgcnConfig::random(g, QgcnModel::Gcn, seed) };
    let w0 = weight_matrix(&cfg.weights[0], fb)?;
    let w1 = weight_matrix(&cfg.weights[1], fb)?;

    let (one, _, _) = run_layer(&feature_state(g)?, &adjacency_encoding(g)?, &cfg.weights[0])?;
    let x = complexify(&crate::classical::pad(g.features(), g.num_nodes(), 1 << fb)?);
    let want = complexify(&normalized_adjacency(g)) * x * &w0;
    let layer = state_fidelity(&one, &want, g)?;

    let two = run_two_layer_qgcn(g, &cfg)?;
    let forward = gcn_forward(g, &[w0.clone(), w1.clone()], Activation::Relu)?;
    let two_layer = state_fidelity(&two.state, &forward.renormalized_output, g)?;
    let naive = max_dev(&gcn_forward_naive(g, &[w0, w1], Activation::Relu)?, &forward.output);
    Ok(vec![
        Check::fidelity(format!("{prefix}/layer"), layer, 1e-10),
        Check::fidelity(format!("{prefix}/two-layer"), two_layer, 1e-9),
        Check::at_most(format!("{prefix}/naive"), "max deviation", naive, 1e-12),
    ])
}

fn sgc_checks(prefix: &str, g: &Graph, seed: u64) -> Result<Vec<Check>> {
    let cfg = QgcnConfig::random(g, QgcnModel::Sgc, seed);
    let theta = weight_matrix(&cfg.weights[0], feature_bits(g))?;
    let out = run_quantum_sgc(g, &cfg)?;
    let pre = sgc_forward(g, cfg.k, &theta)?.pre_softmax;
    let want_p = pre.norm_squared() / (out.alpha.powi(2) * g.features().norm_squared());
    let naive = max_dev(&sgc_forward_naive(g, cfg.k, &theta)?, &pre);
    Ok(vec![
        Check::fidelity(format!("{prefix}/state"), state_fidelity(&out.state, &pre, g)?, 1e-9),
        Check::at_most(format!("{prefix}/probability"), "deviation", (out.success_probability - want_p).abs(), 1e-9),
        Check::at_most(format!("{prefix}/naive"), "max deviation", naive, 1e-12),
    ])
}

fn lgc_checks(prefix: &str, g: &Graph, seed: u64) -> Result<Vec<Check>> {
    let fb = feature_bits(g);
    let theta = PqcParams::random(1, fb, seed);
    let w = weight_matrix(&theta, fb)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases = QsvtPhases::Definite((0..4).map(|_| rng.gen_range(-3.1..3.1)).collect());
    let out = run_quantum_lgc(g, &phases, &theta)?;
    let filter = LgcFilter::Phases { phases, alpha: out.alpha };
    let want = lgc_forward(g, &filter, &w)?;
    let coeffs = LgcFilter::Coefficients(vec![0.5, -0.3, 0.1]);
    let naive = max_dev(&lgc_forward_naive(g, &coeffs, &w)?, &lgc_forward(g, &coeffs, &w)?);
    Ok(vec![
        Check::fidelity(format!("{prefix}/state"), state_fidelity(&out.state, &want, g)?, 1e-8),
        Check::at_most(format!("{prefix}/naive"), "max deviation", naive, 1e-12),
    ])
}

fn gat_layer_check(name: &str, g: &Graph, opts: &VerifyOptions) -> Result<Check> {
    let layer = GatLayerConfig::for_graph(g, PqcParams::random(1, crate::qgat::feature_bits(g), opts.seed), 0.5);
    let att = AttentionOracleConfig::random(g, opts.phase_bits, opts.seed);
    let out = apply_graph_attention_layer(g, &layer, &att)?;
    Ok(Check::fidelity(name, matrix_fidelity(&out.features, &gat_layer_reference(g, &layer, &att)?), 1e-9))
}

fn gat_checks(prefix: &str, g: &Graph, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let att = AttentionOracleConfig::random(g, opts.phase_bits, opts.seed);
    let oracle = run_attention_oracle(&att, g)?;
    let (readouts, residual) = oracle.readout(g.num_nodes())?;
    let wrong = readouts
        .iter()
        .zip(&oracle.records)
        .filter(|(r, rec)| r.code != att.convention.encode(rec.exact, att.t) || (r.probability - 1.0).abs() > 1e-9)
        .count();
    Ok(vec![
        Check {
            name: format!("{prefix}/scores"),
            pass: wrong == 0,
            detail: format!("{wrong} of {} pairs mis-stored", readouts.len()),
        },
        Check::at_most(format!("{prefix}/uncompute"), "work-register weight", residual, 1e-12),
        gat_layer_check(&format!("{prefix}/layer"), g, opts)?,
    ])
}

fn mpnn_checks(prefix: &str, g: &Graph, seed: u64) -> Result<Vec<Check>> {
    let cfg = MpnnConfig::random(g, seed);
    let out = apply_message_passing_layer(g, &cfg)?;
    let layer = matrix_fidelity(&out.features, &mpnn_layer_reference(g, &cfg)?);
    let id = MpnnConfig { family: UpFamily::Identity, ..cfg };
    let dim = 1usize << crate::qmpnn::feature_bits(g);
    let x = complexify(&crate::classical::pad(g.features(), g.num_nodes(), dim)?);
    let identity = matrix_fidelity(&apply_message_passing_layer(g, &id)?.features, &x);
    Ok(vec![
        Check::fidelity(format!("{prefix}/layer"), layer, 1e-9),
        Check::fidelity(format!("{prefix}/identity-family"), identity, 1e-12),
    ])
}
