//! Sign and zero restrictions on the impact matrix, imposed by rotating the
//! Cholesky factor of each reduced-form covariance draw.

mod draws;
mod restrictions;
mod rotation;

pub use draws::{extract_shocks, identify, IdentifyOptions, StructuralDraw, StructuralDrawSet};
pub use restrictions::{paper_restrictions, Cell, RestrictionSet, PAPER_SHOCKS};
pub use rotation::{draw_rotation, log_importance_weight};
