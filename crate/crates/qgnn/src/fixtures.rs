//! Bundled test graphs. The JSON copies under `fixtures/` are generated from
//! these and checked against them.

use serde_json::{json, Value};

use crate::classical::{argmax_rows, gcn_forward, lgc_forward, sgc_forward, CDense, LgcFilter};
use crate::encode::{Activation, PqcParams};
use crate::error::Result;
use crate::graph::{graph_laplacian, normalized_adjacency, random_graph, Graph, RMatrix};
use crate::qgcn::{feature_bits, weight_matrix};

pub const NAMES: [&str; 4] = ["path2", "triangle", "star4", "random8"];

pub const RANDOM8_SEED: u64 = 7;

pub fn path2() -> Graph {
    let x = RMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.3, 1.0]);
    Graph::new(x, &[(0, 1)], vec![Some(0), Some(1)]).expect("valid fixture")
}

pub fn triangle() -> Graph {
    let x = RMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.5, 0.4, 1.0]);
    Graph::new(x, &[(0, 1), (1, 2), (0, 2)], vec![Some(0), Some(1), Some(1)]).expect("valid fixture")
}

pub fn star4() -> Graph {
    let x = RMatrix::from_row_slice(4, 2, &[1.0, 1.0, 0.9, 0.1, 0.2, 0.8, 0.7, -0.3]);
    Graph::new(x, &[(0, 1), (0, 2), (0, 3)], vec![Some(0), Some(0), Some(1), Some(1)]).expect("valid fixture")
}

pub fn random8() -> Graph {
    random_graph(8, 0.35, 4, 2, RANDOM8_SEED)
}

pub fn by_name(name: &str) -> Option<Graph> {
    match name {
        "path2" => Some(path2()),
        "triangle" => Some(triangle()),
        "star4" => Some(star4()),
        "random8" => Some(random8()),
        _ => None,
    }
}

pub fn bundled() -> Vec<(&'static str, Graph)> {
    NAMES.iter().map(|&n| (n, by_name(n).expect("listed fixture"))).collect()
}

/// Seed of the ansatz weights behind the golden outputs.
pub const GOLDEN_SEED: u64 = 7;

/// Filter coefficients of the golden polynomial convolution.
pub const GOLDEN_LGC_COEFFICIENTS: [f64; 3] = [0.5, -0.3, 0.1];

fn real_rows(m: &RMatrix) -> Value {
    Value::from((0..m.nrows()).map(|r| m.row(r).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn complex_rows(m: &CDense) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|r| m.row(r).iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )
}

/// Classical oracle outputs for a fixture: `Â`, `L`, and the pre-softmax
/// outputs of the SGC (`K = 2`), two-layer GCN (relu) and polynomial
/// filter forwards with seeded ansatz weights.
pub fn golden(g: &Graph) -> Result<Value> {
    let fb = feature_bits(g);
    let theta = weight_matrix(&PqcParams::random(1, fb, GOLDEN_SEED), fb)?;
    let w1 = weight_matrix(&PqcParams::random(1, fb, GOLDEN_SEED + 1), fb)?;
    let sgc = sgc_forward(g, 2, &theta)?;
    let gcn = gcn_forward(g, &[theta.clone(), w1], Activation::Relu)?;
    let lgc = lgc_forward(g, &LgcFilter::Coefficients(GOLDEN_LGC_COEFFICIENTS.to_vec()), &theta)?;
    Ok(json!({
        "schema": 1,
        "seed": GOLDEN_SEED,
        "normalized_adjacency": real_rows(&normalized_adjacency(g)),
        "laplacian": real_rows(&graph_laplacian(g).matrix),
        "sgc": {
            "k": 2,
            "pre_softmax": complex_rows(&sgc.pre_softmax),
            "predictions": argmax_rows(&sgc.probabilities),
        },
        "gcn": {
            "activation": Activation::Relu,
            "output": complex_rows(&gcn.output),
        },
        "lgc": {
            "coefficients": GOLDEN_LGC_COEFFICIENTS,
            "output": complex_rows(&lgc),
        },
    }))
}

/// Pretty-printed golden file contents.
pub fn golden_json(g: &Graph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&golden(g)?).expect("golden values serialise") + "\n")
}
