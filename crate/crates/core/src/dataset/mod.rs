//! Columnar tables with missingness masks, CSV I/O, initial imputation and
//! row partitioning by missing/observed counts.

mod bitmap;
mod csvio;
mod impute;
mod partition;
mod schema;
mod table;

pub use bitmap::Bitmap;
pub use csvio::{load_csv, mask_path, read_csv, write_csv, write_table, LoadOptions, WriteOptions};
pub use impute::{initial_impute, mode, pairwise_sum};
pub use partition::{partition, rows_missing_in, PartitionMode, PartitionSet};
pub use schema::{ColumnDef, Role, Schema};
pub use table::{Column, ColumnData, RowSel, RowSource, Table};
