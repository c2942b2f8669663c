//! The generalized cofactor ring.
//!
//! A [`Triple`] aggregates `SUM(1)`, `SUM(Xi)` and `SUM(Xi*Xj)` over a set of
//! rows. Categorical attributes are kept as relations keyed by category
//! codes, so `SUM(Xi) GROUP BY Xj` and `SUM(1) GROUP BY Xi, Xj` live in the
//! same structure without one-hot expansion. [`to_dense`] performs that
//! expansion once the aggregate is small.

mod aggregate;
mod dense;
mod relation;
mod space;
mod triple;

pub use aggregate::{aggregate, aggregate_chunked, Aggregator, CHUNK_ROWS};
pub use dense::{to_dense, ColumnLayout, DenseCofactor};
pub use relation::{Key, RelationValue, PRUNE_EPS};
pub use space::{AttrKind, AttrSpace, Value};
pub use triple::Triple;
