//! Planar domains: cell rasters with zero-measure obstructions, and their
//! scanline sections along a symmetrization direction.

mod raster;
mod sectioned;

pub use raster::{Axis, Edge, Grid, RasterDomain, Vertex};
pub use sectioned::{
    css, equal_measure_disk, normalize_angle, rasterize, section, section_with,
    steiner_symmetrize, symm_difference_measure, RasterizeOptions, RasterizeReport, Rasterized,
    SectionOptions, SectionedDomain,
};
