//! OFDM numerology, resource grids and the time/frequency transforms.

mod config;
mod grid;
mod qpsk;
pub(crate) mod transform;

pub use config::{make_config, Modulation, OfdmConfig, TABLE_ROWS};
pub use grid::{build_grid, ResourceGrid, SubcarrierLayout};
pub use qpsk::{demap_qpsk, map_qpsk, random_bits};
pub use transform::{demodulate, modulate, TimeSignal};
