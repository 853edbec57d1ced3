use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::vec_norm;
use crate::scalar::{cone, czero, Amp, Real};

use super::circuit::Circuit;
use super::gate::{apply_op, GateOp};
use super::layout::RegisterLayout;

/// Norm drift tolerated after public operations.
pub const NORM_TOL: f64 = 1e-12;

/// Below this the all-zero outcome counts as impossible.
pub const POSTSELECT_FLOOR: f64 = 1e-14;

/// Amplitudes over a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    layout: RegisterLayout,
    amps: Vec<Amp<T>>,
}

impl<T: Real> StateVector<T> {
    /// Computational basis state `|index⟩`.
    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let dim = layout.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amps = vec![czero(); dim];
        amps[index] = cone();
        Ok(Self { layout, amps })
    }

    /// Wraps raw amplitudes without renormalising.
    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<Amp<T>>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::LayoutMismatch);
        }
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Amp<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Amp<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Amp<T>> {
        self.amps
    }

    pub fn norm(&self) -> T {
        vec_norm(&self.amps)
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalize(&mut self) -> Result<T> {
        let n = self.norm();
        if n <= T::zero() {
            return Err(Error::PostselectionImpossible { probability: 0.0 });
        }
        for a in &mut self.amps {
            *a = *a / n;
        }
        Ok(n)
    }

    pub fn apply_gate(&mut self, op: &GateOp<T>) -> Result<()> {
        apply_op(&mut self.amps, self.layout.total_qubits(), op)
    }

    pub fn apply_circuit(&mut self, c: &Circuit<T>) -> Result<()> {
        if c.n_wires() != self.layout.total_qubits() {
            return Err(Error::Wiring(format!(
                "circuit has {} wires, layout {}",
                c.n_wires(),
                self.layout.total_qubits()
            )));
        }
        c.run(&mut self.amps)
    }

    /// Squared norm of the branch where every named register reads zero.
    pub fn zero_probability(&self, registers: &[&str]) -> Result<T> {
        let mask = self.layout.mask(registers)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr()))
    }

    /// Projects the named registers onto `|0…0⟩` without renormalising.
    pub fn project_zero(&self, registers: &[&str]) -> Result<Self> {
        let mask = self.layout.mask(registers)?;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &a)| if i & mask == 0 { a } else { czero() })
            .collect();
        Ok(Self { layout: self.layout.clone(), amps })
    }

    /// Projects onto the all-zero outcome of `registers` and renormalises.
    pub fn postselect_zero(&self, registers: &[&str]) -> Result<(Self, T)> {
        if registers.is_empty() {
            return Err(Error::EmptyRegisterList);
        }
        let mut out = self.project_zero(registers)?;
        let p = out.norm().powi(2);
        if p < T::lit(POSTSELECT_FLOOR) {
            return Err(Error::PostselectionImpossible { probability: p.to_f64_lossy() });
        }
        let n = p.sqrt();
        for a in &mut out.amps {
            *a = *a / n;
        }
        Ok((out, p))
    }

    /// Amplitudes of the branch where every register outside `keep` reads
    /// zero, as a state on `keep` alone (in the given order). Not
    /// renormalised.
    pub fn zero_branch(&self, keep: &[&str]) -> Result<Self> {
        let widths: Vec<(&str, usize)> = keep.iter().map(|r| Ok((*r, self.layout.width(r)?))).collect::<Result<_>>()?;
        let sub = RegisterLayout::new(&widths)?;
        let mut amps = vec![czero(); sub.dim()];
        for (idx, a) in amps.iter_mut().enumerate() {
            let values: Vec<(&str, usize)> =
                keep.iter().map(|r| Ok((*r, sub.extract(idx, r)?))).collect::<Result<_>>()?;
            *a = self.amps[self.layout.compose(&values)?];
        }
        Ok(Self { layout: sub, amps })
    }

    /// Places this state into `layout`, whose other registers start at zero.
    pub fn embed(&self, layout: &RegisterLayout) -> Result<Self> {
        let mut amps = vec![czero(); layout.dim()];
        let names: Vec<(&str, usize)> = self.layout.registers().collect();
        for (idx, &a) in self.amps.iter().enumerate() {
            let mut values = Vec::with_capacity(names.len());
            for &(r, w) in &names {
                if layout.width(r)? != w {
                    return Err(Error::LayoutMismatch);
                }
                values.push((r, self.layout.extract(idx, r)?));
            }
            amps[layout.compose(&values)?] = a;
        }
        Ok(Self { layout: layout.clone(), amps })
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &Self) -> Result<Amp<T>> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(crate::linalg::inner(&self.amps, &other.amps))
    }

    /// Born distribution of the joint value of `registers`, concatenated in
    /// the given order.
    pub fn probabilities(&self, registers: &[&str]) -> Result<Vec<T>> {
        if registers.is_empty() {
            return Err(Error::EmptyRegisterList);
        }
        let widths: Vec<usize> = registers.iter().map(|r| self.layout.width(r)).collect::<Result<_>>()?;
        let total: usize = widths.iter().sum();
        let mut probs = vec![T::zero(); 1usize << total];
        for (i, a) in self.amps.iter().enumerate() {
            let mut key = 0usize;
            for (r, w) in registers.iter().zip(&widths) {
                key = (key << w) | self.layout.extract(i, r)?;
            }
            probs[key] = probs[key] + a.norm_sqr();
        }
        Ok(probs)
    }

    /// Seeded shot sampling of `registers`; returns outcome → count.
    pub fn sample_measurement(&self, registers: &[&str], shots: u64, seed: u64) -> Result<BTreeMap<usize, u64>> {
        if shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        let probs: Vec<f64> = self.probabilities(registers)?.into_iter().map(|p| p.to_f64_lossy()).collect();
        let total: f64 = probs.iter().sum();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p / total;
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.gen();
            let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            *counts.entry(k).or_insert(0) += 1;
        }
        Ok(counts)
    }
}

/// `|⟨a|b⟩|²` for unit vectors.
pub fn fidelity<T: Real>(a: &[Amp<T>], b: &[Amp<T>]) -> T {
    crate::linalg::inner(a, b).norm_sqr() / (vec_norm(a).powi(2) * vec_norm(b).powi(2))
}
