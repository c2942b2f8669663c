//! Cofactor aggregation over tree-shaped joins of normalized tables.
//!
//! Each table is grouped by its join keys into partial triples; children are
//! folded into parents with the ring product, so the join itself is never
//! built. [`materialize`] builds it anyway, as a reference.

mod keyed;
mod plan;
mod source;
mod spec;

pub use keyed::{combine, partial_aggregate, KeyedTriples};
pub use plan::{aggregate_join, materialize, JoinPlan, NamedTable};
pub use source::JoinedSource;
pub use spec::{JoinEdge, JoinSpec, TableSelection};
