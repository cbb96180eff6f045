pub mod geometry;
pub mod griddata;
pub mod embed;
pub mod raster;
pub mod scenesim;
pub mod timewarp;
