//! Subcommand pipelines. Each builds a [`Report`]; rendering and exit codes
//! are left to `main`.

use qgnn::block_encoding::QsvtPhases;
use qgnn::classical::{
    cross_entropy_cost, gcn_forward, lgc_forward, sgc_forward, softmax_rows, CDense, LgcFilter, ScoreConvention,
};
use qgnn::encode::{bits_for, Activation, PqcParams};
use qgnn::graph::{load_graph, Graph, GraphFormat};
use qgnn::qgat::{apply_graph_attention_layer, gat_layer_reference, AttentionOracleConfig, GatBackend, GatLayerConfig, QpeMode};
use qgnn::qgcn::{
    estimate_cost_with_shots, feature_bits, hoeffding_shots, run_quantum_lgc, run_quantum_sgc, run_two_layer_qgcn,
    state_loader, state_matrix, toy_task, train_finite_difference, vectorize, weight_matrix, CostMode, QgcnConfig,
    QgcnModel, QgcnOutput,
};
use qgnn::qmpnn::{apply_message_passing_layer, mpnn_layer_reference, MpnnConfig, UpFamily};
use qgnn::resources::{tradeoff_report, QuantumVariant, ScenarioInputs};
use qgnn::sim::RegisterLayout;
use qgnn::verify::{matrix_fidelity, run_suite, Check, Suite, VerifyOptions};
use qgnn::{State, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{
    ActivationArg, BackendArg, ConventionArg, FamilyArg, InputFormat, ModelArg, QpeArg, RunMode, Settings, VariantArg,
};
use crate::report::{Cost, Report};
use crate::CliError;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const DEFAULT_EPSILON: f64 = 0.1;
const DEFAULT_DELTA: f64 = 0.05;

fn load(s: &Settings) -> Result<Graph, CliError> {
    let path = s.graph_path()?;
    let format = match (s.input_format.unwrap_or(InputFormat::Json), &s.features) {
        (InputFormat::Json, _) => GraphFormat::Json,
        (InputFormat::Tsv, Some(f)) => GraphFormat::EdgeListTsv { features_csv: f.clone() },
        (InputFormat::Tsv, None) => return Err(CliError::Config("--input-format tsv needs --features".into())),
    };
    Ok(load_graph(path, &format)?)
}

fn weights(g: &Graph, s: &Settings, count: usize, seed: u64) -> Vec<PqcParams> {
    let layers = s.layers.unwrap_or(1);
    (0..count).map(|l| PqcParams::random(layers, feature_bits(g), seed.wrapping_add(l as u64))).collect()
}

fn activation(a: Option<ActivationArg>, default: Activation) -> Activation {
    match a {
        Some(ActivationArg::Relu) => Activation::Relu,
        Some(ActivationArg::Tanh) => Activation::Tanh,
        Some(ActivationArg::None) => Activation::None,
        None => default,
    }
}

fn qgcn_config(g: &Graph, s: &Settings, model: QgcnModel, seed: u64) -> QgcnConfig {
    let count = if model == QgcnModel::Gcn { 2 } else { 1 };
    let default_activation = if model == QgcnModel::Gcn { Activation::Relu } else { Activation::None };
    QgcnConfig {
        k: s.k.unwrap_or(2),
        weights: weights(g, s, count, seed),
        activation: activation(s.activation, default_activation),
        epsilon: s.epsilon.unwrap_or(DEFAULT_EPSILON),
        delta: s.delta.unwrap_or(DEFAULT_DELTA),
        shots: s.shots,
        cost_mode: match s.mode {
            Some(RunMode::Sampled) => CostMode::Sampled,
            _ => CostMode::Exact,
        },
        ..QgcnConfig::random(g, model, seed)
    }
}

/// One-hot labels over `cols` columns; `None` without labels or when a
/// class has no column.
fn label_matrix(g: &Graph, cols: usize) -> Option<CDense> {
    let mut y = CDense::zeros(g.num_nodes(), cols);
    let mut any = false;
    for (i, l) in g.labels().iter().enumerate() {
        if let Some(c) = *l {
            if c >= cols {
                return None;
            }
            y[(i, c)] = C64::new(1.0, 0.0);
            any = true;
        }
    }
    any.then_some(y)
}

fn matrix_state(m: &CDense) -> Result<State, CliError> {
    let (ib, kb) = (bits_for(m.nrows()).max(1), bits_for(m.ncols()).max(1));
    let layout = RegisterLayout::new(&[("i", ib), ("k", kb)])?;
    let mut amps = vectorize(m, ib, kb)?;
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= norm);
    Ok(State::from_amplitudes(layout, amps)?)
}

/// Cost of `output` (nodes × columns) against the labels, plus the
/// cross entropy of the classical reference.
fn cost(g: &Graph, s: &Settings, seed: u64, output: &CDense, reference: &CDense) -> Result<Option<Cost>, CliError> {
    let Some(y) = label_matrix(g, output.ncols()) else { return Ok(None) };
    let out = matrix_state(output)?;
    let label = matrix_state(&y)?;
    let inner_product = match s.mode {
        Some(RunMode::Sampled) => {
            let shots = match s.shots {
                Some(n) => n,
                None => hoeffding_shots(s.epsilon.unwrap_or(DEFAULT_EPSILON), s.delta.unwrap_or(DEFAULT_DELTA))?,
            };
            estimate_cost_with_shots(&state_loader(&out)?, &state_loader(&label)?, shots, seed)?
        }
        _ => -out.inner_product(&label)?.re,
    };
    let classes = g.num_classes();
    let cross_entropy = if classes <= reference.ncols() && g.labels().iter().any(Option::is_some) {
        let logits = reference.columns(0, classes).map(|z| z.re);
        Some(cross_entropy_cost(&softmax_rows(&logits), g)?)
    } else {
        None
    };
    Ok(Some(Cost { inner_product, cross_entropy }))
}

fn tolerance(s: &Settings) -> f64 {
    s.tolerance.unwrap_or(DEFAULT_TOLERANCE)
}

fn convolution_report(
    command: &str,
    g: &Graph,
    s: &Settings,
    seed: u64,
    out: QgcnOutput,
    reference: &CDense,
) -> Result<Report, CliError> {
    let output = state_matrix(&out.state, g.num_nodes(), 1 << feature_bits(g))?;
    let mut r = Report::new(command, Some(seed));
    let f = matrix_fidelity(&output, reference);
    r.fidelity = Some(f);
    r.postselect_probability = Some(out.success_probability);
    r.qubits = Some(out.qubits);
    r.cost = cost(g, s, seed, &output, reference)?;
    r.assertions.push(Check::fidelity("fidelity", f, tolerance(s)));
    Ok(r)
}

pub fn run_gcn(s: &Settings) -> Result<Report, CliError> {
    let g = load(s)?;
    let seed = s.seed()?;
    let cfg = qgcn_config(&g, s, QgcnModel::Gcn, seed);
    let fb = feature_bits(&g);
    let ws = cfg.weights.iter().map(|w| weight_matrix(w, fb)).collect::<Result<Vec<_>, _>>()?;
    let reference = gcn_forward(&g, &ws, cfg.activation)?.renormalized_output;
    let out = run_two_layer_qgcn(&g, &cfg)?;
    convolution_report("run-gcn", &g, s, seed, out, &reference)
}

pub fn run_sgc(s: &Settings) -> Result<Report, CliError> {
    let g = load(s)?;
    let seed = s.seed()?;
    let cfg = qgcn_config(&g, s, QgcnModel::Sgc, seed);
    let reference = sgc_forward(&g, cfg.k, &weight_matrix(&cfg.weights[0], feature_bits(&g))?)?.pre_softmax;
    let out = run_quantum_sgc(&g, &cfg)?;
    convolution_report("run-sgc", &g, s, seed, out, &reference)
}

/// Explicit phases, or `degree + 1` uniform phases drawn from the seed.
fn phases(s: &Settings, seed: u64) -> QsvtPhases {
    match &s.phases {
        Some(p) => QsvtPhases::Definite(p.clone()),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            QsvtPhases::Definite((0..=s.degree.unwrap_or(2)).map(|_| rng.gen_range(-3.1..3.1)).collect())
        }
    }
}

pub fn run_lgc(s: &Settings) -> Result<Report, CliError> {
    let g = load(s)?;
    let seed = s.seed()?;
    let theta = weights(&g, s, 1, seed).remove(0);
    let phases = phases(s, seed);
    if matches!(&phases, QsvtPhases::Definite(p) if p.is_empty()) {
        return Err(CliError::Config("--phases must not be empty".into()));
    }
    let out = run_quantum_lgc(&g, &phases, &theta)?;
    let filter = LgcFilter::Phases { phases, alpha: out.alpha };
    let reference = lgc_forward(&g, &filter, &weight_matrix(&theta, feature_bits(&g))?)?;
    convolution_report("run-lgc", &g, s, seed, out, &reference)
}

fn layer_report(
    command: &str,
    g: &Graph,
    s: &Settings,
    seed: u64,
    features: &CDense,
    reference: &CDense,
    probability: f64,
    qubits: usize,
) -> Result<Report, CliError> {
    let mut r = Report::new(command, Some(seed));
    let f = matrix_fidelity(features, reference);
    r.fidelity = Some(f);
    r.postselect_probability = Some(probability);
    r.qubits = Some(qubits);
    r.cost = cost(g, s, seed, features, reference)?;
    r.assertions.push(Check::fidelity("fidelity", f, tolerance(s)));
    Ok(r)
}

pub fn run_gat(s: &Settings) -> Result<Report, CliError> {
    let g = load(s)?;
    let seed = s.seed()?;
    let fb = qgnn::qgat::feature_bits(&g);
    let mut layer = GatLayerConfig::for_graph(&g, PqcParams::random(s.layers.unwrap_or(1), fb, seed.wrapping_add(2)), s.r.unwrap_or(0.5));
    layer.include_self = s.include_self.unwrap_or(false);
    layer.backend = match s.backend {
        Some(BackendArg::Oracle) => GatBackend::Oracle,
        _ => GatBackend::Compiled,
    };
    let mut att = AttentionOracleConfig::random(&g, s.t.unwrap_or(6), seed);
    if let Some(c) = s.convention {
        att.convention = match c {
            ConventionArg::MagnitudeSquared => ScoreConvention::MagnitudeSquared,
            ConventionArg::SignedReal => ScoreConvention::SignedReal,
        };
    }
    if let Some(q) = s.qpe {
        att.mode = match q {
            QpeArg::Idealized => QpeMode::IdealizedQpe,
            QpeArg::Full => QpeMode::FullCircuitQpe,
        };
    }
    att.validate()?;
    let out = apply_graph_attention_layer(&g, &layer, &att)?;
    let reference = gat_layer_reference(&g, &layer, &att)?;
    layer_report("run-gat", &g, s, seed, &out.features, &reference, out.success_probability, out.qubits)
}

pub fn run_mpnn(s: &Settings) -> Result<Report, CliError> {
    let g = load(s)?;
    let seed = s.seed()?;
    let mut cfg = MpnnConfig::random(&g, seed);
    cfg.family = match s.family {
        Some(FamilyArg::Identity) => UpFamily::Identity,
        _ => UpFamily::GeneralizedPermutations,
    };
    cfg.mask_completion = s.mask.unwrap_or(false);
    cfg.include_self = s.include_self.unwrap_or(false);
    let out = apply_message_passing_layer(&g, &cfg)?;
    let reference = mpnn_layer_reference(&g, &cfg)?;
    layer_report("run-mpnn", &g, s, seed, &out.features, &reference, out.success_probability, out.qubits)
}

/// Trains on `--graph`, or on the bundled four-node toy task when absent.
pub fn train(s: &Settings) -> Result<Report, CliError> {
    let g = match s.graph {
        Some(_) => load(s)?,
        None => toy_task(),
    };
    let seed = s.seed()?;
    let model = match s.model {
        Some(ModelArg::Gcn) => QgcnModel::Gcn,
        _ => QgcnModel::Sgc,
    };
    let cfg = qgcn_config(&g, s, model, seed);
    let epochs = s.epochs.unwrap_or(30);
    let lr = s.learning_rate.unwrap_or(0.5);
    let t = train_finite_difference(&g, &cfg, epochs, lr)?;
    let first = t.costs[0];
    let best = t.best_cost();
    let mut r = Report::new("train", Some(seed));
    r.training = Some(json!({
        "model": model,
        "epochs": epochs,
        "learning_rate": lr,
        "costs": t.costs,
        "best_cost": best,
        "weights": t.weights,
    }));
    r.assertions.push(Check {
        name: "cost-decreases".into(),
        pass: best <= first,
        detail: format!("initial {first:.6}, best {best:.6}"),
    });
    Ok(r)
}

fn scenario(s: &Settings) -> Result<ScenarioInputs, CliError> {
    let mut x = match (&s.preset, s.n) {
        (Some(p), _) => ScenarioInputs::preset(p)?,
        (None, Some(n)) => ScenarioInputs::new(n, s.c.unwrap_or(1.0), s.s.unwrap_or(2.0), s.d.unwrap_or(1.0), 2.0),
        (None, None) => return Err(CliError::Config("estimate needs --preset or --n".into())),
    };
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut x.n, s.n);
    set(&mut x.c, s.c);
    set(&mut x.s, s.s);
    set(&mut x.d, s.d);
    set(&mut x.k, s.k.map(|k| k as f64));
    set(&mut x.eps1, s.eps1);
    set(&mut x.eps2, s.eps2);
    set(&mut x.eps, s.epsilon);
    set(&mut x.delta, s.delta);
    if s.edges.is_some() {
        x.edges = s.edges;
    }
    x.validate()?;
    Ok(x)
}

/// The tradeoff table and its rendering in the requested format.
pub fn estimate(s: &Settings) -> Result<(Report, Option<String>), CliError> {
    let x = scenario(s)?;
    let variant = match s.variant {
        Some(VariantArg::Lgc) => QuantumVariant::Lgc,
        _ => QuantumVariant::Sgc,
    };
    let table = tradeoff_report(&x, variant)?;
    let rendered = match s.format {
        Some(crate::config::OutputFormat::Csv) => Some(table.to_csv()?),
        Some(crate::config::OutputFormat::Text) => Some(table.to_text()),
        _ => None,
    };
    let mut r = Report::new("estimate", None);
    r.resources = Some(serde_json::to_value(&table).expect("table serialises"));
    Ok((r, rendered))
}

pub fn verify(suite: Suite, s: &Settings) -> Result<Report, CliError> {
    let opts = VerifyOptions { seed: s.seed()?, phase_bits: s.t.unwrap_or(VerifyOptions::default().phase_bits) };
    let mut r = Report::new(&format!("verify {suite}"), Some(opts.seed));
    r.assertions = run_suite(suite, &opts);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_matrix_rejects_missing_columns() {
        let g = qgnn::fixtures::triangle();
        assert!(label_matrix(&g, 1).is_none());
        let y = label_matrix(&g, 4).unwrap();
        assert_eq!(y.iter().filter(|z| z.re == 1.0).count(), 3);
    }

    #[test]
    fn drawn_phases_follow_degree() {
        let s = Settings { degree: Some(3), ..Settings::default() };
        assert_eq!(phases(&s, 7).degree(), 3);
        assert_eq!(phases(&s, 7), phases(&s, 7));
    }

    #[test]
    fn scenario_flags_override_preset() {
        let s = Settings { preset: Some("tiny".into()), c: Some(8.0), ..Settings::default() };
        let x = scenario(&s).unwrap();
        assert_eq!(x.c, 8.0);
        assert_eq!(x.n, 4.0);
        assert!(scenario(&Settings::default()).is_err());
    }
}
