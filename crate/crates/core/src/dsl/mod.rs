//! The map-definition language: expressions, piecewise maps, parsing,
//! exact images, and altering-function checks.

pub mod expr;
pub mod parse;
pub mod phi;
pub mod piecewise;
pub mod range;

pub use expr::Expr;
pub use parse::{parse_expr, parse_map, parse_mapfile, MapFile, ParseError};
pub use phi::{check_beg_abbas_phi, check_phi_membership};
pub use piecewise::{AlteringFunction, MapError, Piece, PiecewiseMap};
pub use range::{range_of, RangeSet};
