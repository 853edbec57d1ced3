//! Leading-order resource estimates for quantum SGC/LGC and their classical
//! counterparts.
//!
//! Units: all constants are 1, logarithms are base 2 and doubly-logarithmic
//! factors are dropped. The numbers compare regimes; they are not gate
//! counts.
//!
//! Every estimate keeps two values. `*_general` sums every term of the
//! general formula at the chosen ancilla counts. The headline value keeps
//! only the leading-order terms: a logarithmic term is dropped next to any
//! polynomial term, and `lg A` is dropped next to `lg B` when every symbol
//! of `A` also appears in `B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn lg(x: f64) -> f64 {
    x.log2()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInputs {
    /// Nodes.
    pub n: f64,
    /// Features per node.
    pub c: f64,
    /// Maximum nonzeros per row or column of the propagation matrix.
    pub s: f64,
    /// Average degree.
    pub d: f64,
    /// Propagation steps (LGC polynomial degree).
    pub k: f64,
    /// Edge count; must equal `n·d` when given.
    #[serde(default)]
    pub edges: Option<f64>,
    /// Data-encoding precision.
    pub eps1: f64,
    /// Block-encoding precision.
    pub eps2: f64,
    /// Cost-estimation precision.
    pub eps: f64,
    /// Cost-estimation failure probability.
    pub delta: f64,
    /// Data-encoding ancillas for the custom regime.
    #[serde(default)]
    pub n_anc: Option<f64>,
    /// Block-encoding ancillas for the custom regime.
    #[serde(default)]
    pub n_anc_prime: Option<f64>,
}

impl ScenarioInputs {
    pub fn new(n: f64, c: f64, s: f64, d: f64, k: f64) -> Self {
        Self { n, c, s, d, k, edges: None, eps1: 0.01, eps2: 0.01, eps: 0.01, delta: 0.05, n_anc: None, n_anc_prime: None }
    }

    /// `N = 2^20`, `C = 2^7`, `s = 16`, `d = 8`, `K = 2`.
    pub fn paper_large() -> Self {
        Self::new((1u64 << 20) as f64, 128.0, 16.0, 8.0, 2.0)
    }

    pub fn tiny() -> Self {
        Self::new(4.0, 2.0, 2.0, 1.0, 2.0)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-large" => Ok(Self::paper_large()),
            "tiny" => Ok(Self::tiny()),
            other => Err(Error::Config(format!("unknown preset {other:?} (expected paper-large or tiny)"))),
        }
    }

    /// Precision factors set to 1: `lg(1/ε₁) = lg(1/ε₂) = 1/ε² = 1`.
    pub fn at_unit_precision(&self) -> Self {
        Self { eps1: 0.5, eps2: 0.5, eps: 1.0, ..self.clone() }
    }

    pub fn edge_count(&self) -> f64 {
        self.edges.unwrap_or(self.n * self.d)
    }

    /// `N lg N · s lg s`, the largest useful block-encoding ancilla count.
    pub fn block_size(&self) -> f64 {
        self.n * lg(self.n) * self.s * lg(self.s)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("N", self.n),
            ("C", self.c),
            ("s", self.s),
            ("d", self.d),
            ("K", self.k),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps", self.eps),
            ("delta", self.delta),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Inadmissible(format!("{name} = {v} must be positive and finite")));
        }
        if self.n < 2.0 || self.s < 2.0 {
            return Err(Error::Inadmissible("N and s must be at least 2".into()));
        }
        if self.eps1 >= 1.0 || self.eps2 >= 1.0 || self.delta >= 1.0 {
            return Err(Error::Inadmissible("eps1, eps2 and delta must be below 1".into()));
        }
        if let Some(e) = self.edges {
            if (e - self.n * self.d).abs() > 1e-9 * e.abs().max(1.0) {
                return Err(Error::Inadmissible(format!("|E| = {e} differs from N·d = {}", self.n * self.d)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    MinDepth,
    MinQubits,
    Moderate,
    Custom,
}

impl Regime {
    pub const PRESETS: [Regime; 3] = [Regime::MinDepth, Regime::Moderate, Regime::MinQubits];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantumVariant {
    Sgc,
    Lgc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalVariant {
    Gcn,
    Sgc,
    Lgc,
}

/// Asymptotic class of one additive term.
#[derive(Clone, Debug, PartialEq)]
enum Order {
    /// `lg` of a product of the named symbols.
    Log(&'static [char]),
    Poly,
}

#[derive(Clone, Debug)]
struct Term {
    value: f64,
    order: Order,
}

impl Term {
    fn poly(value: f64) -> Self {
        Self { value, order: Order::Poly }
    }

    fn log(value: f64, symbols: &'static [char]) -> Self {
        Self { value, order: Order::Log(symbols) }
    }
}

fn general(terms: &[Term]) -> f64 {
    terms.iter().map(|t| t.value).sum()
}

fn leading(terms: &[Term]) -> f64 {
    let any_poly = terms.iter().any(|t| t.order == Order::Poly);
    let mut kept = 0.0;
    for (idx, t) in terms.iter().enumerate() {
        let keep = match &t.order {
            Order::Poly => true,
            Order::Log(_) if any_poly => false,
            Order::Log(a) => !terms.iter().enumerate().any(|(other, u)| match &u.order {
                Order::Log(b) if other != idx => {
                    let subset = a.iter().all(|x| b.contains(x));
                    let same = subset && b.iter().all(|x| a.contains(x));
                    subset && (!same || other < idx)
                }
                _ => false,
            }),
        };
        if keep {
            kept += t.value;
        }
    }
    kept
}

/// An ancilla count with its leading-order logarithm.
#[derive(Clone, Debug)]
struct Ancillas {
    count: f64,
    /// `lg(count)` after dropping constants and doubly-logarithmic factors.
    log: f64,
    order: Order,
}

fn ancillas(x: &ScenarioInputs, regime: Regime) -> Result<(Ancillas, Ancillas)> {
    let nc = x.n * x.c;
    let block = x.block_size();
    let lg_block = lg(x.n) + lg(x.s);
    let pair = match regime {
        Regime::MinQubits => (
            Ancillas { count: lg(nc), log: 1.0, order: Order::Log(&['N', 'C']) },
            Ancillas { count: lg(x.n), log: 1.0, order: Order::Log(&['N']) },
        ),
        Regime::MinDepth => (
            Ancillas { count: nc, log: lg(nc), order: Order::Poly },
            Ancillas { count: block, log: lg_block, order: Order::Poly },
        ),
        // Square roots, raised to the minimum on tiny inputs.
        Regime::Moderate => (
            Ancillas { count: nc.sqrt().max(lg(nc)), log: lg(nc), order: Order::Poly },
            Ancillas { count: block.sqrt().max(lg(x.n)), log: lg_block, order: Order::Poly },
        ),
        Regime::Custom => {
            let (a, b) = x
                .n_anc
                .zip(x.n_anc_prime)
                .ok_or_else(|| Error::Inadmissible("custom regime needs n_anc and n_anc_prime".into()))?;
            (Ancillas { count: a, log: lg(a), order: Order::Poly }, Ancillas { count: b, log: lg(b), order: Order::Poly })
        }
    };
    let (a, b) = (&pair.0, &pair.1);
    if !(a.count >= lg(nc) * (1.0 - 1e-12) && a.count <= nc * (1.0 + 1e-12)) {
        return Err(Error::Inadmissible(format!("n_anc = {} outside [lg(NC), NC] = [{}, {nc}]", a.count, lg(nc))));
    }
    if !(b.count >= lg(x.n) * (1.0 - 1e-12) && b.count <= block * (1.0 + 1e-12)) {
        return Err(Error::Inadmissible(format!(
            "n_anc' = {} outside [lg N, N lg N s lg s] = [{}, {block}]",
            b.count,
            lg(x.n)
        )));
    }
    Ok(pair)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub variant: QuantumVariant,
    pub regime: Regime,
    pub n_anc: f64,
    pub n_anc_prime: f64,
    /// Leading-order single-pass depth.
    pub depth: f64,
    /// Every term of the depth formula.
    pub depth_general: f64,
    pub qubits: f64,
    pub qubits_general: f64,
    /// `depth · lg(1/δ)/ε²`, the cost estimation with repetitions.
    pub total_time: f64,
    /// Classical baseline at the same inputs.
    pub classical_time: f64,
    pub classical_space: f64,
    pub depth_formula: String,
    pub qubits_formula: String,
}

fn depth_terms(x: &ScenarioInputs, variant: QuantumVariant, a: &Ancillas, b: &Ancillas) -> Vec<Term> {
    let nc = x.n * x.c;
    let encode = nc * lg(1.0 / x.eps1) * a.log / a.count;
    let reps = match variant {
        QuantumVariant::Sgc => 1.0,
        QuantumVariant::Lgc => x.k,
    };
    let block = reps * x.block_size() * lg(1.0 / x.eps2) * b.log / b.count;
    let mut terms = vec![
        match a.order {
            Order::Poly if a.count == nc => Term::log(encode, &['N', 'C']),
            _ => Term::poly(encode),
        },
        match b.order {
            Order::Poly if b.count == x.block_size() => Term::log(block, &['N', 's']),
            _ => Term::poly(block),
        },
    ];
    if variant == QuantumVariant::Lgc {
        let extra = x.k * b.count;
        terms.push(match b.order {
            Order::Log(_) => Term::log(extra, &['N']),
            Order::Poly => Term::poly(extra),
        });
    }
    terms
}

fn qubit_terms(x: &ScenarioInputs, a: &Ancillas, b: &Ancillas) -> Vec<Term> {
    vec![
        Term::log(lg(x.n * x.c), &['N', 'C']),
        Term { value: a.count, order: a.order.clone() },
        Term { value: b.count, order: b.order.clone() },
    ]
}

fn formulas(variant: QuantumVariant, regime: Regime) -> (String, String) {
    let depth = match (variant, regime) {
        (QuantumVariant::Sgc, Regime::MinDepth) => "lg(1/eps1)·lg(NC) + lg(1/eps2)·lg(Ns)",
        (QuantumVariant::Sgc, Regime::MinQubits) => "NC·lg(1/eps1)/lg(NC) + N·s·lg s·lg(1/eps2)",
        (QuantumVariant::Sgc, Regime::Moderate) => "√(NC)·lg(1/eps1)·lg(NC) + √(N lg N·s lg s)·lg(1/eps2)·lg(Ns)",
        (QuantumVariant::Lgc, Regime::MinDepth) => "K·N lg N·s lg s",
        (QuantumVariant::Lgc, Regime::MinQubits) => "NC·lg(1/eps1)/lg(NC) + K·N·s·lg s·lg(1/eps2)",
        (QuantumVariant::Lgc, Regime::Moderate) => {
            "√(NC)·lg(1/eps1)·lg(NC) + K·√(N lg N·s lg s)·lg(1/eps2)·lg(Ns) + K·√(N lg N·s lg s)"
        }
        (QuantumVariant::Sgc, Regime::Custom) => {
            "NC·lg(1/eps1)·lg(n_anc)/n_anc + N lg N·s lg s·lg(1/eps2)·lg(n_anc')/n_anc'"
        }
        (QuantumVariant::Lgc, Regime::Custom) => {
            "NC·lg(1/eps1)·lg(n_anc)/n_anc + K·N lg N·s lg s·lg(1/eps2)·lg(n_anc')/n_anc' + K·n_anc'"
        }
    };
    let qubits = match regime {
        Regime::MinDepth => "NC + N lg N·s lg s",
        Regime::MinQubits => "lg(NC)",
        Regime::Moderate => "√(NC) + √(N lg N·s lg s)",
        Regime::Custom => "lg(NC) + n_anc + n_anc'",
    };
    (depth.into(), qubits.into())
}

fn estimate_quantum(x: &ScenarioInputs, variant: QuantumVariant, regime: Regime) -> Result<ResourceProfile> {
    x.validate()?;
    let (a, b) = ancillas(x, regime)?;
    let dt = depth_terms(x, variant, &a, &b);
    let qt = qubit_terms(x, &a, &b);
    let exact = regime == Regime::Custom;
    let depth = if exact { general(&dt) } else { leading(&dt) };
    let qubits = if exact { general(&qt) } else { leading(&qt) };
    let classical = estimate_classical(
        x,
        match variant {
            QuantumVariant::Sgc => ClassicalVariant::Sgc,
            QuantumVariant::Lgc => ClassicalVariant::Lgc,
        },
    )?;
    let (depth_formula, qubits_formula) = formulas(variant, regime);
    Ok(ResourceProfile {
        variant,
        regime,
        n_anc: a.count,
        n_anc_prime: b.count,
        depth,
        depth_general: general(&dt),
        qubits,
        qubits_general: general(&qt),
        total_time: depth * lg(1.0 / x.delta) / (x.eps * x.eps),
        classical_time: classical.time,
        classical_space: classical.space,
        depth_formula,
        qubits_formula,
    })
}

pub fn estimate_quantum_sgc(x: &ScenarioInputs, regime: Regime) -> Result<ResourceProfile> {
    estimate_quantum(x, QuantumVariant::Sgc, regime)
}

pub fn estimate_quantum_lgc(x: &ScenarioInputs, regime: Regime) -> Result<ResourceProfile> {
    estimate_quantum(x, QuantumVariant::Lgc, regime)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalProfile {
    pub variant: ClassicalVariant,
    pub time: f64,
    pub space: f64,
    pub time_formula: String,
    pub space_formula: String,
}

pub fn estimate_classical(x: &ScenarioInputs, variant: ClassicalVariant) -> Result<ClassicalProfile> {
    x.validate()?;
    let (n, c, k, e) = (x.n, x.c, x.k, x.edge_count());
    let (time, space, tf, sf) = match variant {
        ClassicalVariant::Gcn => {
            (k * (n * c * c + e * c), e + k * c * c + k * n * c, "K(NC² + |E|C)", "|E| + KC² + KNC")
        }
        ClassicalVariant::Sgc => (e * c + n * c * c, e + n * c + c * c, "|E|C + NC²", "|E| + NC + C²"),
        ClassicalVariant::Lgc => (k * e * c + n * c * c, e + k * n * c + c * c, "K|E|C + NC²", "|E| + KNC + C²"),
    };
    Ok(ClassicalProfile { variant, time, space, time_formula: tf.into(), space_formula: sf.into() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub profile: ResourceProfile,
    /// Fewer qubits than the classical space.
    pub space_advantage: bool,
    /// Lower cost-estimation time than the classical time.
    pub time_advantage: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub inputs: ScenarioInputs,
    pub variant: QuantumVariant,
    pub rows: Vec<TradeoffRow>,
    pub classical: ClassicalProfile,
}

pub fn tradeoff_report(x: &ScenarioInputs, variant: QuantumVariant) -> Result<TradeoffReport> {
    let rows = Regime::PRESETS
        .iter()
        .map(|&r| {
            let profile = estimate_quantum(x, variant, r)?;
            Ok(TradeoffRow {
                space_advantage: profile.qubits < profile.classical_space,
                time_advantage: profile.total_time < profile.classical_time,
                profile,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let classical = estimate_classical(
        x,
        match variant {
            QuantumVariant::Sgc => ClassicalVariant::Sgc,
            QuantumVariant::Lgc => ClassicalVariant::Lgc,
        },
    )?;
    Ok(TradeoffReport { inputs: x.clone(), variant, rows, classical })
}

impl TradeoffReport {
    /// One header line and one row per regime, then the classical row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record(["regime", "depth", "qubits", "total_time", "space_advantage", "time_advantage"]).map_err(io)?;
        for r in &self.rows {
            let p = &r.profile;
            w.write_record([
                serde_json::to_value(p.regime).map(|v| v.as_str().unwrap_or_default().to_string()).unwrap_or_default(),
                p.depth.to_string(),
                p.qubits.to_string(),
                p.total_time.to_string(),
                r.space_advantage.to_string(),
                r.time_advantage.to_string(),
            ])
            .map_err(io)?;
        }
        w.write_record(["classical", "", &self.classical.space.to_string(), &self.classical.time.to_string(), "", ""])
            .map_err(io)?;
        String::from_utf8(w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?)
            .map_err(|e| Error::Config(format!("csv: {e}")))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<12} {:>14} {:>14} {:>14}  advantage\n", "regime", "depth", "qubits", "total time");
        for r in &self.rows {
            let p = &r.profile;
            let tag = serde_json::to_value(p.regime).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            let adv = match (r.space_advantage, r.time_advantage) {
                (true, true) => "space, time",
                (true, false) => "space",
                (false, true) => "time",
                (false, false) => "-",
            };
            out += &format!("{tag:<12} {:>14.6e} {:>14.6e} {:>14.6e}  {adv}\n", p.depth, p.qubits, p.total_time);
        }
        out += &format!(
            "{:<12} {:>14} {:>14.6e} {:>14.6e}\n",
            "classical", "-", self.classical.space, self.classical.time
        );
        out
    }
}

/// Closed forms of the comparison tables at unit precision: (time, space).
pub fn table_closed_form(x: &ScenarioInputs, variant: QuantumVariant, regime: Regime) -> Option<(f64, f64)> {
    let (n, c, s, k) = (x.n, x.c, x.s, x.k);
    let nc = n * c;
    let l = lg(1.0 / x.delta);
    match (variant, regime) {
        (QuantumVariant::Sgc, Regime::MinDepth) => Some((l * (lg(nc) + lg(n * s)), nc + n * lg(n) * s * lg(s))),
        (QuantumVariant::Sgc, Regime::MinQubits) => Some((l * (nc / lg(nc) + n * s * lg(s)), lg(nc))),
        (QuantumVariant::Lgc, Regime::MinQubits) => Some((nc / lg(nc) + k * n * s * lg(s), lg(nc))),
        _ => None,
    }
}
