//! Exact classical forwards for every variant, used as oracles.
//!
//! Each forward has a matrix form and a loop form; tests check that they
//! agree. Complex matrices appear because the weight operators are the same
//! unitaries the circuits use.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::block_encoding::QsvtPhases;
use crate::encode::Activation;
use crate::error::{Error, Result};
use crate::graph::{graph_laplacian, normalized_adjacency, Graph, RMatrix};
use crate::sparse::OneSparsePart;
use crate::{CMatrix, C64};

pub type CDense = DMatrix<C64>;

pub fn complexify(m: &RMatrix) -> CDense {
    m.map(|v| C64::new(v, 0.0))
}

pub fn dense(m: &CMatrix) -> CDense {
    CDense::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

/// Zero-pads `x` to `rows × cols`.
pub fn pad(x: &RMatrix, rows: usize, cols: usize) -> Result<RMatrix> {
    if x.nrows() > rows || x.ncols() > cols {
        return Err(Error::DimensionOverflow { dim: x.nrows().max(x.ncols()), capacity: rows.min(cols) });
    }
    Ok(RMatrix::from_fn(rows, cols, |r, c| if r < x.nrows() && c < x.ncols() { x[(r, c)] } else { 0.0 }))
}

fn frobenius_normalized(m: &CDense) -> Result<CDense> {
    let n = m.norm();
    if n == 0.0 {
        return Err(Error::ZeroActivation);
    }
    Ok(m.unscale(n))
}

fn activate(m: &CDense, f: Activation) -> CDense {
    m.map(|z| f.apply(z))
}

/// Per-layer pre-activations and the final pre-softmax output.
#[derive(Clone, Debug)]
pub struct GcnForward {
    pub pre_activation: Vec<CDense>,
    pub output: CDense,
    /// Output when every hidden layer is normalised before and after `σ`,
    /// as the simulator does.
    pub renormalized_output: CDense,
}

fn check_chain(x: &RMatrix, weights: &[CDense]) -> Result<RMatrix> {
    let first = weights.first().ok_or_else(|| Error::Incompatible("no weight matrices".into()))?;
    for w in weights.windows(2) {
        if w[0].ncols() != w[1].nrows() {
            return Err(Error::Incompatible("weight shapes do not chain".into()));
        }
    }
    pad(x, x.nrows(), first.nrows())
}

/// `H⁽ˡ⁺¹⁾ = σ(Â H⁽ˡ⁾ W⁽ˡ⁾)` with no `σ` after the last layer.
pub fn gcn_forward(g: &Graph, weights: &[CDense], activation: Activation) -> Result<GcnForward> {
    let x = complexify(&check_chain(g.features(), weights)?);
    let a = complexify(&normalized_adjacency(g));
    let mut h = x.clone();
    let mut h_renorm = x;
    let mut pre = Vec::with_capacity(weights.len());
    let last = weights.len() - 1;
    for (l, w) in weights.iter().enumerate() {
        let z = &a * &h * w;
        let z_renorm = &a * &h_renorm * w;
        if l < last {
            h = activate(&z, activation);
            h_renorm = frobenius_normalized(&activate(&frobenius_normalized(&z_renorm)?, activation))?;
        } else {
            h = z.clone();
            h_renorm = z_renorm;
        }
        pre.push(z);
    }
    Ok(GcnForward { pre_activation: pre, output: h, renormalized_output: h_renorm })
}

fn naive_matmul(a: &CDense, b: &CDense) -> CDense {
    let mut out = CDense::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..a.ncols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `Â` entry by entry from degrees.
fn naive_adjacency(g: &Graph) -> CDense {
    let n = g.num_nodes();
    let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64 + 1.0).collect();
    let mut a = CDense::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = C64::new(1.0 / deg[i], 0.0);
    }
    for &(u, v) in g.edges() {
        let w = C64::new(1.0 / (deg[u] * deg[v]).sqrt(), 0.0);
        a[(u, v)] = w;
        a[(v, u)] = w;
    }
    a
}

/// Loop form of [`gcn_forward`]'s plain output.
pub fn gcn_forward_naive(g: &Graph, weights: &[CDense], activation: Activation) -> Result<CDense> {
    let x = complexify(&check_chain(g.features(), weights)?);
    let a = naive_adjacency(g);
    let mut h = x;
    for (l, w) in weights.iter().enumerate() {
        let z = naive_matmul(&naive_matmul(&a, &h), w);
        h = if l + 1 < weights.len() {
            let mut act = z.clone();
            for v in act.iter_mut() {
                *v = C64::new(activation.apply_real(v.re), activation.apply_real(v.im));
            }
            act
        } else {
            z
        };
    }
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct SgcForward {
    pub pre_softmax: CDense,
    /// Row softmax of the real part.
    pub probabilities: RMatrix,
}

/// `S^K X Θ` with `S = Â`.
pub fn sgc_forward(g: &Graph, k: usize, theta: &CDense) -> Result<SgcForward> {
    if k == 0 {
        return Err(Error::Inadmissible("K must be at least 1".into()));
    }
    let x = complexify(&pad(g.features(), g.num_nodes(), theta.nrows())?);
    let s = complexify(&normalized_adjacency(g));
    let mut h = x;
    for _ in 0..k {
        h = &s * h;
    }
    let pre = h * theta;
    let probabilities = softmax_rows(&pre.map(|z| z.re));
    Ok(SgcForward { pre_softmax: pre, probabilities })
}

pub fn sgc_forward_naive(g: &Graph, k: usize, theta: &CDense) -> Result<CDense> {
    let x = complexify(&pad(g.features(), g.num_nodes(), theta.nrows())?);
    let s = naive_adjacency(g);
    let mut h = x;
    for _ in 0..k {
        h = naive_matmul(&s, &h);
    }
    Ok(naive_matmul(&h, theta))
}

/// Spectral filter for the polynomial convolution.
#[derive(Clone, Debug, PartialEq)]
pub enum LgcFilter {
    /// `Σ_i α_i Lⁱ`.
    Coefficients(Vec<f64>),
    /// The phase polynomial applied to `L / alpha`, as in the circuit.
    Phases { phases: QsvtPhases, alpha: f64 },
}

const MAX_FILTER_DEGREE: usize = 8;

impl LgcFilter {
    fn degree(&self) -> usize {
        match self {
            LgcFilter::Coefficients(c) => c.len().saturating_sub(1),
            LgcFilter::Phases { phases, .. } => phases.degree(),
        }
    }

    /// Monomial coefficients of the filter as a polynomial in `L`.
    pub fn monomial_coefficients(&self) -> Result<Vec<f64>> {
        match self {
            LgcFilter::Coefficients(c) => Ok(c.clone()),
            LgcFilter::Phases { phases, alpha } => {
                // Interpolate at Chebyshev nodes, then rescale x = λ/α.
                let d = phases.degree();
                let nodes: Vec<f64> =
                    (0..=d).map(|i| ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * d + 2) as f64).cos()).collect();
                let v = RMatrix::from_fn(d + 1, d + 1, |r, c| nodes[r].powi(c as i32));
                let rhs = nalgebra::DVector::from_iterator(d + 1, nodes.iter().map(|&x| phases.block_value(x)));
                let c = v.lu().solve(&rhs).ok_or_else(|| Error::Inadmissible("singular interpolation".into()))?;
                Ok(c.iter().enumerate().map(|(i, ci)| ci / alpha.powi(i as i32)).collect())
            }
        }
    }
}

/// `P(L) X Θ` with `L` from [`graph_laplacian`].
pub fn lgc_forward(g: &Graph, filter: &LgcFilter, theta: &CDense) -> Result<CDense> {
    if filter.degree() > MAX_FILTER_DEGREE {
        return Err(Error::Inadmissible(format!("filter degree above {MAX_FILTER_DEGREE}")));
    }
    let l = graph_laplacian(g).matrix;
    let x = pad(g.features(), g.num_nodes(), theta.nrows())?;
    let p = match filter {
        LgcFilter::Coefficients(c) => {
            let n = l.nrows();
            let mut acc = RMatrix::zeros(n, n);
            let mut power = RMatrix::identity(n, n);
            for &ci in c {
                acc += &power * ci;
                power = &power * &l;
            }
            acc
        }
        LgcFilter::Phases { phases, alpha } => {
            let eig = (&l / *alpha).symmetric_eigen();
            let d = RMatrix::from_diagonal(&eig.eigenvalues.map(|v| phases.block_value(v)));
            &eig.eigenvectors * d * eig.eigenvectors.transpose()
        }
    };
    Ok(complexify(&(p * x)) * theta)
}

/// Loop form of [`lgc_forward`] through monomial coefficients.
pub fn lgc_forward_naive(g: &Graph, filter: &LgcFilter, theta: &CDense) -> Result<CDense> {
    let l = complexify(&graph_laplacian(g).matrix);
    let x = complexify(&pad(g.features(), g.num_nodes(), theta.nrows())?);
    let mut acc = CDense::zeros(x.nrows(), x.ncols());
    let mut term = x;
    for c in filter.monomial_coefficients()? {
        for (a, t) in acc.iter_mut().zip(term.iter()) {
            *a += t * c;
        }
        term = naive_matmul(&l, &term);
    }
    Ok(naive_matmul(&acc, theta))
}

/// How a stored attention score is derived from key and query states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreConvention {
    /// `|⟨k|q⟩|²` in `[0, 1]`, unsigned fixed point.
    #[default]
    MagnitudeSquared,
    /// `Re⟨k|q⟩` in `[-1, 1]`, two's complement fixed point.
    SignedReal,
}

impl ScoreConvention {
    pub fn exact(self, key: &[C64], query: &[C64]) -> f64 {
        let ip = crate::linalg::inner(key, query);
        match self {
            ScoreConvention::MagnitudeSquared => ip.norm_sqr(),
            ScoreConvention::SignedReal => ip.re,
        }
    }

    fn levels(self, t: usize) -> f64 {
        match self {
            ScoreConvention::MagnitudeSquared => ((1usize << t) - 1) as f64,
            ScoreConvention::SignedReal => ((1usize << (t - 1)) - 1) as f64,
        }
    }

    /// `t`-bit code of `v`, clamped to the representable range.
    pub fn encode(self, v: f64, t: usize) -> usize {
        let q = self.levels(t);
        match self {
            ScoreConvention::MagnitudeSquared => (v.clamp(0.0, 1.0) * q).round() as usize,
            ScoreConvention::SignedReal => {
                let m = (v.clamp(-1.0, 1.0) * q).round() as i64;
                (m.rem_euclid(1i64 << t)) as usize
            }
        }
    }

    pub fn decode(self, code: usize, t: usize) -> f64 {
        let q = self.levels(t);
        match self {
            ScoreConvention::MagnitudeSquared => code as f64 / q,
            ScoreConvention::SignedReal => {
                let m = if code >= 1 << (t - 1) { code as i64 - (1i64 << t) } else { code as i64 };
                (m as f64 / q).max(-1.0)
            }
        }
    }

    pub fn round(self, v: f64, t: usize) -> f64 {
        self.decode(self.encode(v, t), t)
    }
}

/// Normalised row `i` of `x` as a state.
pub fn row_state(x: &RMatrix, i: usize) -> Result<Vec<C64>> {
    let row = x.row(i);
    let n = row.norm();
    if n == 0.0 {
        return Err(Error::ZeroFeatures);
    }
    Ok(row.iter().map(|v| C64::new(v / n, 0.0)).collect())
}

/// `scores[(i, j)] = a(x_i, x_j)`, keys from `u_k x̂_i`, queries from
/// `u_q x̂_j`; rounded to `t` bits when given.
pub fn attention_table(
    x: &RMatrix,
    u_k: &CMatrix,
    u_q: &CMatrix,
    convention: ScoreConvention,
    t: Option<usize>,
) -> Result<RMatrix> {
    let n = x.nrows();
    let keys = (0..n).map(|i| Ok(u_k.matvec(&row_state(x, i)?))).collect::<Result<Vec<_>>>()?;
    let queries = (0..n).map(|i| Ok(u_q.matvec(&row_state(x, i)?))).collect::<Result<Vec<_>>>()?;
    Ok(RMatrix::from_fn(n, n, |i, j| {
        let v = convention.exact(&keys[i], &queries[j]);
        t.map_or(v, |t| convention.round(v, t))
    }))
}

/// `x'_j = U_w (r x_j + Σ_l a(x_{c(j,l)}, x_j) x_{c(j,l)})` over supported
/// entries of every part. Matrix form.
pub fn gat_reference_update(x: &RMatrix, parts: &[OneSparsePart], scores: &RMatrix, r: f64, u_w: &CMatrix) -> CDense {
    let n = x.nrows();
    let mut m = RMatrix::identity(n, n) * r;
    for p in parts {
        for j in 0..n {
            if p.support[j] {
                m[(j, p.perm[j])] += scores[(p.perm[j], j)];
            }
        }
    }
    complexify(&(m * x)) * dense(u_w).transpose()
}

/// Loop form of [`gat_reference_update`].
pub fn gat_reference_update_naive(
    x: &RMatrix,
    parts: &[OneSparsePart],
    scores: &RMatrix,
    r: f64,
    u_w: &CMatrix,
) -> CDense {
    let (n, f) = (x.nrows(), x.ncols());
    let mut out = CDense::zeros(n, f);
    for j in 0..n {
        let mut v: Vec<f64> = (0..f).map(|c| r * x[(j, c)]).collect();
        for p in parts {
            let i = p.perm[j];
            if p.support[j] {
                for (c, vc) in v.iter_mut().enumerate() {
                    *vc += scores[(i, j)] * x[(i, c)];
                }
            }
        }
        for row in 0..f {
            let mut acc = C64::new(0.0, 0.0);
            for (c, vc) in v.iter().enumerate() {
                acc += u_w[(row, c)] * vc;
            }
            out[(j, row)] = acc;
        }
    }
    out
}

/// Message weights `|w_p^{ij}|²`, indexed `[i][j][p]`.
pub type MessageWeights = Vec<Vec<Vec<f64>>>;

/// `h_j = Σ_l Σ_p |w_p^{(c(j,l), j)}|² U_p x_j (+ x_j)`.
///
/// With `mask_completion`, entries added only to complete a part to a
/// permutation are skipped. Matrix form.
pub fn mpnn_reference_update(
    x: &RMatrix,
    parts: &[OneSparsePart],
    weights: &MessageWeights,
    unitaries: &[CMatrix],
    include_self: bool,
    mask_completion: bool,
) -> CDense {
    let (n, f) = (x.nrows(), x.ncols());
    let ups: Vec<CDense> = unitaries.iter().map(dense).collect();
    let mut out = CDense::zeros(n, f);
    for j in 0..n {
        let mut mix = if include_self { CDense::identity(f, f) } else { CDense::zeros(f, f) };
        for p in parts {
            if mask_completion && !p.support[j] {
                continue;
            }
            for (wp, up) in weights[p.perm[j]][j].iter().zip(&ups) {
                mix += up * C64::new(*wp, 0.0);
            }
        }
        let xj = CDense::from_fn(f, 1, |r, _| C64::new(x[(j, r)], 0.0));
        let hj = mix * xj;
        for r in 0..f {
            out[(j, r)] = hj[(r, 0)];
        }
    }
    out
}

pub fn mpnn_reference_update_naive(
    x: &RMatrix,
    parts: &[OneSparsePart],
    weights: &MessageWeights,
    unitaries: &[CMatrix],
    include_self: bool,
    mask_completion: bool,
) -> CDense {
    let (n, f) = (x.nrows(), x.ncols());
    let mut out = CDense::zeros(n, f);
    for j in 0..n {
        for row in 0..f {
            let mut acc = if include_self { C64::new(x[(j, row)], 0.0) } else { C64::new(0.0, 0.0) };
            for p in parts {
                if mask_completion && !p.support[j] {
                    continue;
                }
                for (q, u) in unitaries.iter().enumerate() {
                    let w = weights[p.perm[j]][j][q];
                    for c in 0..f {
                        acc += u[(row, c)] * x[(j, c)] * w;
                    }
                }
            }
            out[(j, row)] = acc;
        }
    }
    out
}

/// Textbook form `h_j = x_j + Σ_{i ∈ N(j)} ψ(x_i, x_j)`, for contrast only.
pub fn mpnn_textbook_update(g: &Graph, message: impl Fn(&[f64], &[f64]) -> Vec<f64>) -> RMatrix {
    let x = g.features();
    let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect();
    let mut out = x.clone();
    for j in 0..x.nrows() {
        for i in g.neighbours(j) {
            for (c, m) in message(&rows[i], &rows[j]).into_iter().enumerate() {
                out[(j, c)] += m;
            }
        }
    }
    out
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(m: &RMatrix) -> RMatrix {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.iter_mut().for_each(|v| *v = (*v - max).exp());
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    out
}

/// Row-wise argmax; ties go to the lowest index.
pub fn argmax_rows(m: &RMatrix) -> Vec<usize> {
    m.row_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// `−Σ_{s labelled} ln Z[s, y_s]`.
pub fn cross_entropy_cost(predictions: &RMatrix, g: &Graph) -> Result<f64> {
    for (s, row) in predictions.row_iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || row.iter().any(|v| *v < 0.0) {
            return Err(Error::Inadmissible(format!("prediction row {s} is not a distribution")));
        }
    }
    let mut cost = 0.0;
    for (s, label) in g.labels().iter().enumerate() {
        if let Some(y) = label {
            let z = predictions[(s, *y)];
            if z == 0.0 {
                return Err(Error::InfiniteCost);
            }
            cost -= z.ln();
        }
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{build_pqc_unitary, PqcParams};
    use crate::graph::random_graph;
    use crate::sparse::one_sparse_decompose;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &CDense, b: &CDense) -> f64 {
        (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn random_unitary_dense(dim: usize, seed: u64) -> CDense {
        dense(&crate::linalg::random_unitary(dim, &mut ChaCha8Rng::seed_from_u64(seed)))
    }

    fn path2() -> Graph {
        Graph::new(RMatrix::identity(2, 2), &[(0, 1)], vec![Some(0), Some(1)]).unwrap()
    }

    /// Rows of `m` moved to `perm[i]`.
    fn permute_rows(m: &CDense, perm: &[usize]) -> CDense {
        let mut out = m.clone();
        for (i, &p) in perm.iter().enumerate() {
            out.set_row(p, &m.row(i));
        }
        out
    }

    fn random_perm(n: usize, seed: u64) -> Vec<usize> {
        use rand::seq::SliceRandom;
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        p
    }

    #[test]
    fn gcn_trivial_cases() {
        let g = Graph::new(RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]), &[], vec![None; 2]).unwrap();
        let out = gcn_forward(&g, &[CDense::identity(2, 2)], Activation::None).unwrap();
        assert_eq!(out.output, complexify(g.features()));
        let out = gcn_forward(&path2(), &[CDense::identity(2, 2)], Activation::None).unwrap();
        assert!(max_diff(&out.output, &complexify(&RMatrix::from_element(2, 2, 0.5))) < 1e-15);
    }

    #[test]
    fn gcn_matches_naive() {
        for seed in 0..5 {
            let g = random_graph(7, 0.4, 3, 2, seed);
            let ws = [random_unitary_dense(4, seed), random_unitary_dense(4, seed + 100)];
            for act in [Activation::None, Activation::Relu, Activation::Tanh] {
                let fast = gcn_forward(&g, &ws, act).unwrap().output;
                assert!(max_diff(&fast, &gcn_forward_naive(&g, &ws, act).unwrap()) < 1e-12);
            }
        }
    }

    #[test]
    fn relu_renormalized_is_parallel_to_plain() {
        let g = random_graph(6, 0.5, 2, 2, 9);
        let ws = [random_unitary_dense(2, 1), random_unitary_dense(2, 2)];
        let f = gcn_forward(&g, &ws, Activation::Relu).unwrap();
        let a = frobenius_normalized(&f.output).unwrap();
        let b = frobenius_normalized(&f.renormalized_output).unwrap();
        assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn sgc_cases() {
        let g = Graph::new(RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]), &[], vec![None; 2]).unwrap();
        let out = sgc_forward(&g, 1, &CDense::identity(2, 2)).unwrap();
        assert_eq!(out.pre_softmax, complexify(g.features()));
        let g = random_graph(8, 0.3, 3, 2, 4);
        let theta = random_unitary_dense(4, 5);
        let sgc = sgc_forward(&g, 2, &theta).unwrap().pre_softmax;
        let gcn = gcn_forward(&g, &[CDense::identity(4, 4), theta.clone()], Activation::None).unwrap().output;
        assert!(max_diff(&sgc, &gcn) < 1e-12);
        assert!(max_diff(&sgc, &sgc_forward_naive(&g, 2, &theta).unwrap()) < 1e-12);
    }

    #[test]
    fn lgc_cases() {
        let g = path2();
        let theta = random_unitary_dense(2, 6);
        let x = complexify(g.features());
        let out = lgc_forward(&g, &LgcFilter::Coefficients(vec![1.0]), &theta).unwrap();
        assert!(max_diff(&out, &(&x * &theta)) < 1e-14);
        let l = complexify(&graph_laplacian(&g).matrix);
        let out = lgc_forward(&g, &LgcFilter::Coefficients(vec![0.0, 1.0]), &theta).unwrap();
        assert!(max_diff(&out, &(l * &x * &theta)) < 1e-14);
    }

    #[test]
    fn lgc_phase_forms_agree() {
        let g = random_graph(6, 0.5, 3, 2, 8);
        let theta = random_unitary_dense(4, 7);
        for phases in [
            QsvtPhases::Definite(vec![0.3, -1.1, 0.4, 2.0]),
            QsvtPhases::Mixed { even: vec![0.2, 0.5, -0.3], odd: vec![1.0, 0.1] },
        ] {
            let filter = LgcFilter::Phases { phases, alpha: 3.0 };
            let a = lgc_forward(&g, &filter, &theta).unwrap();
            let b = lgc_forward_naive(&g, &filter, &theta).unwrap();
            assert!(max_diff(&a, &b) < 1e-10);
        }
        let filter = LgcFilter::Coefficients(vec![0.5, -0.2, 0.7]);
        assert!(max_diff(&lgc_forward(&g, &filter, &theta).unwrap(), &lgc_forward_naive(&g, &filter, &theta).unwrap()) < 1e-12);
    }

    #[test]
    fn score_codes() {
        let m = ScoreConvention::MagnitudeSquared;
        assert_eq!(m.round(1.0, 6), 1.0);
        assert_eq!(m.round(0.0, 6), 0.0);
        assert_eq!(m.encode(0.5, 3), 4);
        let s = ScoreConvention::SignedReal;
        assert_eq!(s.round(-1.0, 6), -1.0);
        assert_eq!(s.round(1.0, 6), 1.0);
        assert_eq!(s.encode(-1.0 / 3.0, 3), 7);
        assert_eq!(s.decode(7, 3), -1.0 / 3.0);
    }

    #[test]
    fn identical_features_give_unit_scores() {
        let x = RMatrix::from_row_slice(3, 2, &[0.6, 0.8, 0.6, 0.8, 0.6, 0.8]);
        let u = crate::linalg::random_unitary(2, &mut ChaCha8Rng::seed_from_u64(1));
        let t = attention_table(&x, &u, &u, ScoreConvention::MagnitudeSquared, Some(6)).unwrap();
        assert!(t.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gat_edgeless_is_transform() {
        let x = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]);
        let u = crate::linalg::random_unitary(2, &mut ChaCha8Rng::seed_from_u64(2));
        let out = gat_reference_update(&x, &[], &RMatrix::zeros(2, 2), 1.0, &u);
        assert!(max_diff(&out, &(complexify(&x) * dense(&u).transpose())) < 1e-15);
    }

    #[test]
    fn gat_and_mpnn_match_naive() {
        let g = random_graph(8, 0.4, 3, 2, 21);
        let x = pad(g.features(), 8, 4).unwrap();
        let parts = one_sparse_decompose(&g.adjacency()).parts;
        let uk = build_pqc_unitary(&PqcParams::random(1, 2, 1), 2).unwrap();
        let uq = build_pqc_unitary(&PqcParams::random(1, 2, 2), 2).unwrap();
        let uw = build_pqc_unitary(&PqcParams::random(1, 2, 3), 2).unwrap();
        let scores = attention_table(&x, &uk, &uq, ScoreConvention::SignedReal, Some(6)).unwrap();
        let a = gat_reference_update(&x, &parts, &scores, 0.5, &uw);
        assert!(max_diff(&a, &gat_reference_update_naive(&x, &parts, &scores, 0.5, &uw)) < 1e-12);

        let ups: Vec<CMatrix> = (0..3).map(|s| crate::linalg::random_unitary(4, &mut ChaCha8Rng::seed_from_u64(s))).collect();
        let weights: MessageWeights =
            (0..8).map(|i| (0..8).map(|j| vec![0.2 + 0.01 * i as f64, 0.3, 0.5 - 0.01 * j as f64]).collect()).collect();
        for (s, m) in [(false, false), (true, true)] {
            let a = mpnn_reference_update(&x, &parts, &weights, &ups, s, m);
            let b = mpnn_reference_update_naive(&x, &parts, &weights, &ups, s, m);
            assert!(max_diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn mpnn_identity_family_is_identity() {
        let x = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let parts = vec![OneSparsePart { perm: vec![1, 0], values: vec![1.0, 1.0], support: vec![true; 2] }];
        let weights: MessageWeights = vec![vec![vec![0.25, 0.75]; 2]; 2];
        let ups = vec![CMatrix::identity(2), CMatrix::identity(2)];
        let out = mpnn_reference_update(&x, &parts, &weights, &ups, false, false);
        assert!(max_diff(&out, &complexify(&x)) < 1e-15);
        let ups = vec![CMatrix::identity(2), crate::linalg::pauli_x()];
        let out = mpnn_reference_update(&x, &parts, &weights, &ups, false, false);
        let want = RMatrix::from_row_slice(2, 2, &[0.25 + 1.5, 0.5 + 0.75, 0.75 + 3.0, 1.0 + 2.25]);
        assert!(max_diff(&out, &complexify(&want)) < 1e-15);
    }

    #[test]
    fn textbook_mpnn_sums_neighbours() {
        let out = mpnn_textbook_update(&path2(), |xi, _| xi.to_vec());
        assert_eq!(out, RMatrix::from_element(2, 2, 1.0));
    }

    #[test]
    fn softmax_argmax_and_cost() {
        let p = softmax_rows(&RMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 1.0, 5.0, 5.0]));
        assert_eq!(argmax_rows(&p), vec![0, 1]);
        let g = Graph::new(RMatrix::identity(3, 3), &[], vec![Some(0), Some(1), Some(0)]).unwrap();
        let uniform = RMatrix::from_element(3, 2, 0.5);
        assert!((cross_entropy_cost(&uniform, &g).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-12);
        let onehot = RMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(cross_entropy_cost(&onehot, &g).unwrap(), 0.0);
        let wrong = RMatrix::from_row_slice(3, 2, &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(cross_entropy_cost(&wrong, &g), Err(Error::InfiniteCost)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn forwards_are_permutation_equivariant(seed in 0u64..1000, pseed in 0u64..1000) {
            let g = random_graph(7, 0.4, 3, 2, seed);
            let perm = random_perm(7, pseed);
            let gp = g.permuted(&perm).unwrap();
            let ws = [random_unitary_dense(4, seed), random_unitary_dense(4, seed + 1)];
            for act in [Activation::None, Activation::Tanh] {
                let a = gcn_forward(&g, &ws, act).unwrap();
                let b = gcn_forward(&gp, &ws, act).unwrap();
                prop_assert!(max_diff(&permute_rows(&a.output, &perm), &b.output) < 1e-12);
                prop_assert!(max_diff(&permute_rows(&a.renormalized_output, &perm), &b.renormalized_output) < 1e-12);
            }
            let a = sgc_forward(&g, 2, &ws[0]).unwrap().pre_softmax;
            let b = sgc_forward(&gp, 2, &ws[0]).unwrap().pre_softmax;
            prop_assert!(max_diff(&permute_rows(&a, &perm), &b) < 1e-12);
            let filter = LgcFilter::Phases { phases: QsvtPhases::Definite(vec![0.1, 0.7, -0.4]), alpha: 2.0 };
            let a = lgc_forward(&g, &filter, &ws[0]).unwrap();
            let b = lgc_forward(&gp, &filter, &ws[0]).unwrap();
            prop_assert!(max_diff(&permute_rows(&a, &perm), &b) < 1e-12);

            let x = pad(g.features(), 7, 4).unwrap();
            let xp = pad(gp.features(), 7, 4).unwrap();
            let parts = one_sparse_decompose(&g.adjacency()).parts;
            let parts_p: Vec<OneSparsePart> = parts.iter().map(|p| p.relabeled(&perm)).collect();
            let u = dense(&crate::linalg::random_unitary(4, &mut ChaCha8Rng::seed_from_u64(seed)));
            let uc = CMatrix::from_fn(4, 4, |r, c| u[(r, c)]);
            let s = attention_table(&x, &uc, &uc, ScoreConvention::MagnitudeSquared, Some(6)).unwrap();
            let sp = attention_table(&xp, &uc, &uc, ScoreConvention::MagnitudeSquared, Some(6)).unwrap();
            let a = gat_reference_update(&x, &parts, &s, 0.5, &uc);
            let b = gat_reference_update(&xp, &parts_p, &sp, 0.5, &uc);
            prop_assert!(max_diff(&permute_rows(&a, &perm), &b) < 1e-12);

            let w: MessageWeights = (0..7).map(|i| (0..7).map(|j| vec![s[(i, j)], 1.0 - s[(i, j)]]).collect()).collect();
            let mut wp: MessageWeights = w.clone();
            for i in 0..7 {
                for j in 0..7 {
                    wp[perm[i]][perm[j]] = w[i][j].clone();
                }
            }
            let ups = vec![CMatrix::identity(4), uc.clone()];
            let a = mpnn_reference_update(&x, &parts, &w, &ups, true, false);
            let b = mpnn_reference_update(&xp, &parts_p, &wp, &ups, true, false);
            prop_assert!(max_diff(&permute_rows(&a, &perm), &b) < 1e-12);
        }
    }
}
