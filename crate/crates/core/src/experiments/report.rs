use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticEstimate;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// A value stated by the theory being reproduced.
    Reference,
    /// Immediate from the definitions.
    Direct,
    /// Computed by an independent method (closed form, quadrature, direct solve).
    Oracle,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Reference => "reference",
            Provenance::Direct => "direct",
            Provenance::Oracle => "oracle",
        }
    }
}

/// One expectation compared against an observed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
    pub deviation: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `|observed − expected| ≤ tolerance`.
    pub fn close(
        name: impl Into<String>,
        expected: f64,
        observed: f64,
        tolerance: f64,
        provenance: Provenance,
    ) -> Self {
        let deviation = (observed - expected).abs();
        Self { name: name.into(), expected, observed, tolerance, provenance, deviation, passed: deviation <= tolerance }
    }

    /// Passes when `observed ≥ bound`; the deviation is the shortfall.
    pub fn at_least(name: impl Into<String>, bound: f64, observed: f64, provenance: Provenance) -> Self {
        let deviation = (bound - observed).max(0.0);
        Self {
            name: name.into(),
            expected: bound,
            observed,
            tolerance: 0.0,
            provenance,
            deviation,
            passed: observed >= bound,
        }
    }

    /// Passes when `observed ≤ bound`; the deviation is the excess.
    pub fn at_most(name: impl Into<String>, bound: f64, observed: f64, provenance: Provenance) -> Self {
        let deviation = (observed - bound).max(0.0);
        Self {
            name: name.into(),
            expected: bound,
            observed,
            tolerance: 0.0,
            provenance,
            deviation,
            passed: observed <= bound,
        }
    }

    /// Passes when `lo ≤ observed ≤ hi`; `expected` holds the midpoint.
    pub fn within(name: impl Into<String>, lo: f64, hi: f64, observed: f64, provenance: Provenance) -> Self {
        let deviation = (lo - observed).max(observed - hi).max(0.0);
        Self {
            name: name.into(),
            expected: 0.5 * (lo + hi),
            observed,
            tolerance: 0.5 * (hi - lo),
            provenance,
            deviation,
            passed: observed >= lo && observed <= hi,
        }
    }

    /// A yes/no fact, recorded as `1` (true) or `0`.
    pub fn holds(name: impl Into<String>, observed: bool, provenance: Provenance) -> Self {
        let v = if observed { 1.0 } else { 0.0 };
        Self {
            name: name.into(),
            expected: 1.0,
            observed: v,
            tolerance: 0.0,
            provenance,
            deviation: 1.0 - v,
            passed: observed,
        }
    }
}

/// One row of a ladder table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub n: u64,
    pub value: f64,
    pub extrapolated: Option<f64>,
    pub expected: Option<f64>,
    pub provenance: Option<Provenance>,
    pub pass: Option<bool>,
}

/// A quantity tabulated over the ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), rows: Vec::new() }
    }

    /// Raw values per level with no expectation attached.
    pub fn from_values(name: impl Into<String>, values: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let rows = values
            .into_iter()
            .map(|(n, value)| Row { n, value, extrapolated: None, expected: None, provenance: None, pass: None })
            .collect();
        Self { name: name.into(), rows }
    }

    /// Values per level, the extrapolated limit on the finest row, and the
    /// expected value on every row.
    pub fn against(
        name: impl Into<String>,
        values: impl IntoIterator<Item = (u64, f64)>,
        extrapolated: Option<f64>,
        expected: f64,
        provenance: Provenance,
        tolerance: f64,
    ) -> Self {
        let mut table = Self::from_values(name, values);
        let last = table.rows.len().saturating_sub(1);
        for (i, row) in table.rows.iter_mut().enumerate() {
            row.expected = Some(expected);
            row.provenance = Some(provenance);
            if i == last {
                row.extrapolated = extrapolated;
                row.pass = extrapolated.map(|e| (e - expected).abs() <= tolerance);
            }
        }
        table
    }

    /// CSV with header `N,value,extrapolated,expected,provenance,pass` and
    /// numbers printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value,extrapolated,expected,provenance,pass\n");
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                format_number(r.value),
                opt(r.extrapolated),
                opt(r.expected),
                r.provenance.map(Provenance::label).unwrap_or_default(),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
            ));
        }
        out
    }
}

/// A real number with 17 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// A labelled asymptotic estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedEstimate {
    pub name: String,
    pub estimate: AsymptoticEstimate,
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub levels: Vec<u64>,
    pub tables: Vec<Table>,
    pub estimates: Vec<NamedEstimate>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub runtime_seconds: f64,
}

impl Report {
    pub fn new(name: impl Into<String>, levels: Vec<u64>) -> Self {
        Self {
            name: name.into(),
            levels,
            tables: Vec::new(),
            estimates: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn estimate(&mut self, name: impl Into<String>, estimate: AsymptoticEstimate) {
        self.estimates.push(NamedEstimate { name: name.into(), estimate });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}
