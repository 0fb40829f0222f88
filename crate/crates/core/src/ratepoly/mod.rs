//! Rate-region polytopes: H-representations over named rates, projection,
//! redundancy removal, vertex enumeration and union-of-polytopes estimates.

pub mod lp;
mod polytope;
mod region;

pub use polytope::{is_subset, same_vertices, Inequality, RatePolytope, GEOM_TOL, MAX_VERTEX_DIM};
pub use region::{
    direction_grid, region_compare, sweep_union, sweep_union_indexed, with_workers, CompareReport, CompareVerdict,
    RegionEstimate, DIRECTION_GRID_VERSION,
};
