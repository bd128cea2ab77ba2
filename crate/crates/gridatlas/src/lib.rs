//! gridatlas: one gridded world-population dataset, many maps.
//!
//! The crate turns a single lon/lat population raster plus vector basemap
//! layers into a family of thematic map representations (proportional
//! symbols, choropleths, density-equalizing cartograms, dot density,
//! Dorling circles, potential surfaces with isolines, link graphs, hex
//! extrusions, coastal masks, glocal indices, demographic voids, Tobler
//! linemaps) and the grid statistics behind them — deterministically, with
//! a provenance record in every artifact.

pub mod analysis;
pub mod cartogram;
pub mod classify;
pub mod commands;
pub mod config;
pub mod error;
pub mod grid;
pub mod render;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Engine version embedded in provenance blocks.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
