//! Non-dominated filtering of sweep records.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::SweepRecord;
use crate::error::{Error, Result};

/// A quantity to minimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    D1All,
    Runtime,
    MemBits,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::D1All => "d1_all",
            Objective::Runtime => "runtime",
            Objective::MemBits => "mem_bits",
        }
    }

    /// Value of the objective; records without an accuracy score rank last on `D1All`.
    pub fn value(self, record: &SweepRecord) -> f64 {
        match self {
            Objective::D1All => record.d1_all.unwrap_or(f64::INFINITY),
            Objective::Runtime => record.runtime_s,
            Objective::MemBits => record.mem_bits_packed as f64,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d1_all" | "d1" => Ok(Objective::D1All),
            "runtime" | "runtime_s" => Ok(Objective::Runtime),
            "mem_bits" | "mem_bits_packed" => Ok(Objective::MemBits),
            _ => Err(Error::invalid(format!(
                "unknown objective '{s}' (expected d1_all, runtime or mem_bits)"
            ))),
        }
    }
}

/// Parses a comma-separated objective list.
pub fn parse_objectives(list: &str) -> Result<Vec<Objective>> {
    list.split(',').map(str::parse).collect()
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &SweepRecord, b: &SweepRecord, objectives: &[Objective]) -> bool {
    let mut better = false;
    for o in objectives {
        match o.value(a).total_cmp(&o.value(b)) {
            Ordering::Greater => return false,
            Ordering::Less => better = true,
            Ordering::Equal => {}
        }
    }
    better
}

/// Records no other record dominates, ordered by the first objective.
pub fn pareto_front(records: &[SweepRecord], objectives: &[Objective]) -> Result<Vec<SweepRecord>> {
    if records.is_empty() {
        return Err(Error::invalid("pareto front of an empty record set"));
    }
    if objectives.len() < 2 {
        return Err(Error::invalid("pareto front needs at least two objectives"));
    }
    let mut front: Vec<SweepRecord> = records
        .iter()
        .filter(|r| !records.iter().any(|o| dominates(o, r, objectives)))
        .cloned()
        .collect();
    let first = objectives[0];
    front.sort_by(|a, b| first.value(a).total_cmp(&first.value(b)));
    Ok(front)
}
