use std::ops::Range;

use crate::error::{Error, Result};

/// Default simulator width when `QGNN_MAX_QUBITS` is unset.
pub const DEFAULT_MAX_QUBITS: usize = 26;

/// Simulator width cap, read from `QGNN_MAX_QUBITS` on every call.
pub fn max_qubits() -> usize {
    std::env::var("QGNN_MAX_QUBITS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&q| q > 0 && q < 48)
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Register {
    name: String,
    width: usize,
    offset: usize,
}

/// Ordered named registers over a flat wire list.
///
/// Wire 0 is the most significant bit of a basis index. Within a register
/// the first wire is the most significant bit of the register value.
/// Zero-width registers are allowed and own no wires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    regs: Vec<Register>,
    total: usize,
}

impl RegisterLayout {
    pub fn new<S: AsRef<str>>(registers: &[(S, usize)]) -> Result<Self> {
        Self::with_limit(registers, max_qubits())
    }

    pub fn with_limit<S: AsRef<str>>(registers: &[(S, usize)], limit: usize) -> Result<Self> {
        let mut regs: Vec<Register> = Vec::with_capacity(registers.len());
        let mut offset = 0;
        for (name, width) in registers {
            let name = name.as_ref();
            if regs.iter().any(|r| r.name == name) {
                return Err(Error::DuplicateRegister(name.to_string()));
            }
            regs.push(Register { name: name.to_string(), width: *width, offset });
            offset += width;
        }
        if offset > limit {
            return Err(Error::QubitBudget { requested: offset, max: limit });
        }
        Ok(Self { regs, total: offset })
    }

    pub fn total_qubits(&self) -> usize {
        self.total
    }

    pub fn dim(&self) -> usize {
        1usize << self.total
    }

    pub fn wires(&self, name: &str) -> Result<Range<usize>> {
        self.regs
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.offset..r.offset + r.width)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn wire_vec(&self, name: &str) -> Result<Vec<usize>> {
        Ok(self.wires(name)?.collect())
    }

    pub fn width(&self, name: &str) -> Result<usize> {
        Ok(self.wires(name)?.len())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.regs.iter().any(|r| r.name == name)
    }

    pub fn registers(&self) -> impl Iterator<Item = (&str, usize)> {
        self.regs.iter().map(|r| (r.name.as_str(), r.width))
    }

    /// Value of register `name` inside basis index `index`.
    pub fn extract(&self, index: usize, name: &str) -> Result<usize> {
        let w = self.wires(name)?;
        let shift = self.total - w.end;
        Ok((index >> shift) & ((1usize << w.len()) - 1))
    }

    /// Basis index with the given register values; unnamed registers are 0.
    pub fn compose(&self, values: &[(&str, usize)]) -> Result<usize> {
        let mut idx = 0usize;
        for (name, value) in values {
            let w = self.wires(name)?;
            if *value >= (1usize << w.len()) {
                return Err(Error::IndexOutOfRange { index: *value, dim: 1usize << w.len() });
            }
            idx |= value << (self.total - w.end);
        }
        Ok(idx)
    }

    /// Bit mask of the wires of `names` inside a basis index.
    pub fn mask(&self, names: &[&str]) -> Result<usize> {
        let mut m = 0usize;
        for name in names {
            let w = self.wires(name)?;
            let width = w.len();
            if width > 0 {
                m |= ((1usize << width) - 1) << (self.total - w.end);
            }
        }
        Ok(m)
    }
}
