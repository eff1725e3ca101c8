//! Quarterly/monthly data model, CSV ingestion and elementary transforms.

mod dataset;
mod dates;
mod panel;
mod schema;
mod transform;

pub use dataset::{load_macro, MacroDataset};
pub use dates::{MonthIndex, QuarterIndex};
pub use panel::{load_firm_panel, FirmPanel, FirmRecord};
pub use schema::{default_labels, normalize_label, parse_key_values, FirmSchema, MacroSchema};
pub use transform::{align_last_month, load_series, yoy_change, DatedSeries, MonthlySeries, QuarterlySeries};
