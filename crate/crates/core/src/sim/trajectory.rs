use alloc::string::String;
use alloc::vec::Vec;

use super::ModelTier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Time,
    X,
    P,
    ReAlphaTrap,
    ImAlphaTrap,
    ReAlphaProbe,
    ImAlphaProbe,
    R,
    Phi,
    YMeas,
}

impl ColumnKind {
    pub const ALL: [ColumnKind; 10] = [
        ColumnKind::Time,
        ColumnKind::X,
        ColumnKind::P,
        ColumnKind::ReAlphaTrap,
        ColumnKind::ImAlphaTrap,
        ColumnKind::ReAlphaProbe,
        ColumnKind::ImAlphaProbe,
        ColumnKind::R,
        ColumnKind::Phi,
        ColumnKind::YMeas,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ColumnKind::Time => "t",
            ColumnKind::X => "x",
            ColumnKind::P => "p",
            ColumnKind::ReAlphaTrap => "re_alpha_t",
            ColumnKind::ImAlphaTrap => "im_alpha_t",
            ColumnKind::ReAlphaProbe => "re_alpha_p",
            ColumnKind::ImAlphaProbe => "im_alpha_p",
            ColumnKind::R => "R",
            ColumnKind::Phi => "phi",
            ColumnKind::YMeas => "y_meas",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            ColumnKind::Time => "s",
            ColumnKind::X | ColumnKind::R | ColumnKind::YMeas => "m",
            ColumnKind::P => "kg*m/s",
            ColumnKind::Phi => "rad",
            _ => "sqrt(photons)",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub kind: ColumnKind,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub model: ModelTier,
    pub seed: u64,
    pub index: u64,
    pub dt: f64,
    pub record_stride: usize,
    /// Digest of the parameter set, filled in by whoever owns serialization.
    pub params_digest: String,
}

/// Uniformly sampled time series of state variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample_rate: f64,
    pub columns: Vec<Column>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(sample_rate: f64, meta: TrajectoryMeta) -> Self {
        Self { sample_rate, columns: Vec::new(), meta }
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn column(&self, kind: ColumnKind) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.kind == kind).map(|c| c.values.as_slice())
    }

    pub fn require(&self, kind: ColumnKind) -> Result<&[f64]> {
        self.column(kind).ok_or(Error::MissingColumn(kind.name()))
    }

    /// Adds or replaces a column; lengths must agree.
    pub fn set_column(&mut self, kind: ColumnKind, values: Vec<f64>) -> Result<()> {
        if !self.columns.is_empty() && values.len() != self.len() {
            return Err(Error::InvalidParameter { name: "column", reason: "length differs from the other columns" });
        }
        match self.columns.iter_mut().find(|c| c.kind == kind) {
            Some(c) => c.values = values,
            None => self.columns.push(Column { kind, values }),
        }
        Ok(())
    }

    /// Equal column lengths and finite values throughout.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidParameter { name: "sample_rate", reason: "must be positive" });
        }
        for c in &self.columns {
            if c.values.len() != n {
                return Err(Error::InvalidParameter { name: "column", reason: "length differs from the other columns" });
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter { name: "column", reason: "contains non-finite values" });
            }
        }
        Ok(())
    }

    pub(crate) fn from_records<const N: usize, const K: usize>(
        sample_rate: f64,
        meta: TrajectoryMeta,
        dt_record: f64,
        kinds: [ColumnKind; K],
        records: &[[f64; N]],
        map: impl Fn(&[f64; N]) -> [f64; K],
    ) -> Self {
        let mut columns: Vec<Column> = Vec::with_capacity(K + 1);
        columns.push(Column {
            kind: ColumnKind::Time,
            values: (0..records.len()).map(|i| i as f64 * dt_record).collect(),
        });
        for kind in kinds {
            columns.push(Column { kind, values: Vec::with_capacity(records.len()) });
        }
        for r in records {
            for (c, v) in columns[1..].iter_mut().zip(map(r)) {
                c.values.push(v);
            }
        }
        Self { sample_rate, columns, meta }
    }
}
