use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ring::Triple;

use super::table::{RowSel, RowSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// Route rows by how many incomplete attributes they are missing.
    Low,
    /// Route rows by how many incomplete attributes they have observed.
    High,
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionMode::Low => "low",
            PartitionMode::High => "high",
        })
    }
}

/// Disjoint row-id sets covering the table, built once from the immutable
/// missingness masks.
#[derive(Clone, Debug)]
pub struct PartitionSet {
    pub mode: PartitionMode,
    pub mattrs: Vec<usize>,
    pub complete: Vec<u32>,
    pub all_missing: Vec<u32>,
    /// Indexed by attribute; empty for attributes outside `mattrs`.
    pub exactly_one: Vec<Vec<u32>>,
    pub multi: Vec<u32>,
    /// Per attribute, the rows an update touches outside `complete` and
    /// `all_missing`: rows missing the attribute (low) or observing it (high).
    streams: Vec<Vec<u32>>,
    /// Aggregate over `complete`; never changes during a run.
    pub cached_triple: Triple,
}

impl PartitionSet {
    pub fn row_count(&self) -> usize {
        self.complete.len()
            + self.all_missing.len()
            + self.multi.len()
            + self.exactly_one.iter().map(Vec::len).sum::<usize>()
    }

    /// Precomputed per-attribute stream. In low mode these are the rows
    /// missing `attr` that are not all-missing; in high mode the incomplete
    /// rows observing `attr`.
    pub fn stream(&self, attr: usize) -> &[u32] {
        &self.streams[attr]
    }
}

/// Routes each row by its missing (low) or observed (high) count among
/// `mattrs`, and caches the aggregate over fully observed rows. The source
/// must already hold initial imputations.
pub fn partition<S: RowSource + ?Sized>(source: &S, mattrs: &[usize], mode: PartitionMode) -> Result<PartitionSet> {
    let m = source.space().len();
    let k = mattrs.len();
    let mut complete = Vec::new();
    let mut all_missing = Vec::new();
    let mut exactly_one = vec![Vec::new(); m];
    let mut multi = Vec::new();
    let mut streams = vec![Vec::new(); m];

    for r in 0..source.row_count() {
        let row = r as u32;
        let missing = mattrs.iter().filter(|&&a| source.is_missing(a, r)).count();
        if missing == 0 {
            complete.push(row);
            continue;
        }
        if missing == k {
            all_missing.push(row);
            continue;
        }
        let counted = match mode {
            PartitionMode::Low => missing,
            PartitionMode::High => k - missing,
        };
        if counted == 1 {
            let a = mattrs
                .iter()
                .copied()
                .find(|&a| source.is_missing(a, r) == (mode == PartitionMode::Low))
                .expect("one counted attribute");
            exactly_one[a].push(row);
        } else {
            multi.push(row);
        }
        for &a in mattrs {
            let take = match mode {
                PartitionMode::Low => source.is_missing(a, r),
                PartitionMode::High => !source.is_missing(a, r),
            };
            if take {
                streams[a].push(row);
            }
        }
    }

    let cached_triple = source.aggregate(RowSel::Ids(&complete))?;
    Ok(PartitionSet {
        mode,
        mattrs: mattrs.to_vec(),
        complete,
        all_missing,
        exactly_one,
        multi,
        streams,
        cached_triple,
    })
}

/// Low mode: every row missing `attr`, all-missing rows included, ascending.
/// High mode: incomplete rows observing `attr`.
pub fn rows_missing_in<S: RowSource + ?Sized>(source: &S, p: &PartitionSet, attr: usize) -> Vec<u32> {
    match p.mode {
        PartitionMode::Low => {
            let mut rows: Vec<u32> = p.stream(attr).to_vec();
            rows.extend(
                p.all_missing
                    .iter()
                    .copied()
                    .filter(|&r| source.is_missing(attr, r as usize)),
            );
            rows.sort_unstable();
            rows
        }
        PartitionMode::High => p.stream(attr).to_vec(),
    }
}
