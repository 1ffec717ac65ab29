//! Residual bookkeeping shared by every checking module.

use crate::manifold::TangentPoint;

/// One checked relation: the worst residual over the samples and where it occurred.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub id: String,
    pub name: String,
    /// Where the relation comes from, in words.
    pub anchor: String,
    /// `None` when skipped or when every evaluation failed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: Option<TangentPoint>,
    /// Some inputs came from finite differences.
    pub fd: bool,
    pub skipped: Option<String>,
    pub error: Option<String>,
}

impl ResidualEntry {
    pub fn new(id: &str, name: &str, anchor: &str, tolerance: f64) -> ResidualEntry {
        ResidualEntry {
            id: id.into(),
            name: name.into(),
            anchor: anchor.into(),
            residual: None,
            tolerance,
            pass: true,
            witness: None,
            fd: false,
            skipped: None,
            error: None,
        }
    }

    /// Folds one sample into the running maximum; NaN always wins.
    pub fn record(&mut self, r: f64, pt: &TangentPoint) {
        let worse = match self.residual {
            None => true,
            Some(old) => r > old || (r.is_nan() && !old.is_nan()),
        };
        if worse {
            self.residual = Some(r);
            self.witness = Some(pt.clone());
        }
        self.settle();
    }

    pub fn fail(&mut self, msg: String) {
        if self.error.is_none() {
            self.error = Some(msg);
        }
        self.settle();
    }

    pub fn skip(&mut self, reason: String) {
        self.skipped = Some(reason);
        self.residual = None;
        self.witness = None;
        self.settle();
    }

    fn settle(&mut self) {
        self.pass = if self.skipped.is_some() {
            true
        } else if self.error.is_some() {
            false
        } else {
            matches!(self.residual, Some(r) if r <= self.tolerance)
        };
    }

    /// A single finished measurement.
    pub fn measured(id: &str, name: &str, anchor: &str, residual: f64, tolerance: f64, witness: Option<TangentPoint>) -> ResidualEntry {
        let mut e = ResidualEntry::new(id, name, anchor, tolerance);
        e.residual = Some(residual);
        e.witness = witness;
        e.settle();
        e
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub seed: u64,
    pub samples: usize,
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, id: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Accumulates `max|Σ terms| / (1 + max|term|)` over tensor components.
#[derive(Clone, Copy, Debug, Default)]
pub struct Residual {
    num: f64,
    scale: f64,
}

impl Residual {
    pub fn new() -> Residual {
        Residual::default()
    }

    /// One component of a relation `Σ terms = 0`.
    pub fn push(&mut self, terms: &[f64]) {
        let mut s = 0.0;
        for t in terms {
            s += t;
            self.scale = self.scale.max(t.abs());
        }
        if s.is_nan() {
            self.num = f64::NAN;
        } else if !self.num.is_nan() {
            self.num = self.num.max(s.abs());
        }
    }

    /// Shortcut for `lhs = rhs`.
    pub fn eq(&mut self, lhs: f64, rhs: f64) {
        self.push(&[lhs, -rhs]);
    }

    pub fn value(&self) -> f64 {
        self.num / (1.0 + self.scale)
    }
}
