mod eval;
mod field;
mod grid;
mod io;
mod norms;
mod smoothing;

pub use eval::{eval_at, eval_point, ShiftEvaluator};
pub use field::SpectralField;
pub use grid::{
    linear_index_map, pointwise_sup, standard_grid_size, GridSample, COMPOSE_OVERSAMPLE, NORM_OVERSAMPLE,
};
pub use io::{field_to_string, parse_field, write_field};
pub use norms::{cr_norm, cr_norms, multi_indices, norms_from_sups, order_sups, seminorm};
pub use smoothing::{smooth_project, OperatorKind, OperatorSpec};

pub(crate) use field::cnorm;
pub(crate) use grid::grid_coords;
pub(crate) use io::{read_field, LineReader};
