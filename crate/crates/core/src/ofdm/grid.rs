use std::sync::Arc;

use num_complex::Complex64;

use super::qpsk::{map_qpsk, random_bits};
use super::OfdmConfig;
use crate::seed::rng_for;
use crate::{Error, Result};

/// Which FFT bins carry pilots, data, or nothing.
///
/// The active band is contiguous and centred on DC, with DC itself left empty.
/// Bins are listed in ascending frequency order (negative frequencies first);
/// pilots sit on every `pilot_stride`-th entry of that list starting with the
/// lowest frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierLayout {
    fft_size: usize,
    active: Vec<usize>,
    pilots: Vec<usize>,
    data: Vec<usize>,
    guards: Vec<usize>,
}

impl SubcarrierLayout {
    pub fn new(config: &OfdmConfig) -> Result<Self> {
        config.validate()?;
        let n = config.fft_size;
        let usable = config.usable_subcarriers();
        let below = usable - usable / 2;
        let above = usable / 2;
        let active: Vec<usize> = (1..=below).rev().map(|k| n - k).chain(1..=above).collect();
        let mut pilots = Vec::with_capacity(config.pilot_count());
        let mut data = Vec::with_capacity(config.data_count());
        for (i, &bin) in active.iter().enumerate() {
            if i % config.pilot_stride == 0 {
                pilots.push(bin);
            } else {
                data.push(bin);
            }
        }
        let mut is_active = vec![false; n];
        for &b in &active {
            is_active[b] = true;
        }
        let guards = (0..n).filter(|&b| !is_active[b]).collect();
        Ok(Self {
            fft_size: n,
            active,
            pilots,
            data,
            guards,
        })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Active bins in ascending frequency order.
    pub fn active_bins(&self) -> &[usize] {
        &self.active
    }

    pub fn pilot_bins(&self) -> &[usize] {
        &self.pilots
    }

    pub fn data_bins(&self) -> &[usize] {
        &self.data
    }

    pub fn guard_bins(&self) -> &[usize] {
        &self.guards
    }
}

/// Frequency-domain cells of one frame, `n_symbols` rows of `fft_size` bins in
/// natural FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_symbols: usize,
    cells: Vec<Complex64>,
    layout: Arc<SubcarrierLayout>,
}

impl ResourceGrid {
    pub fn zeros(n_symbols: usize, layout: Arc<SubcarrierLayout>) -> Self {
        Self {
            n_symbols,
            cells: vec![Complex64::default(); n_symbols * layout.fft_size()],
            layout,
        }
    }

    pub fn from_cells(
        n_symbols: usize,
        cells: Vec<Complex64>,
        layout: Arc<SubcarrierLayout>,
    ) -> Result<Self> {
        if cells.len() != n_symbols * layout.fft_size() {
            return Err(Error::invalid(format!(
                "grid needs {} cells, got {}",
                n_symbols * layout.fft_size(),
                cells.len()
            )));
        }
        Ok(Self {
            n_symbols,
            cells,
            layout,
        })
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn fft_size(&self) -> usize {
        self.layout.fft_size()
    }

    pub fn layout(&self) -> &SubcarrierLayout {
        &self.layout
    }

    pub fn shared_layout(&self) -> Arc<SubcarrierLayout> {
        Arc::clone(&self.layout)
    }

    pub fn symbol(&self, m: usize) -> &[Complex64] {
        let n = self.fft_size();
        &self.cells[m * n..(m + 1) * n]
    }

    pub fn symbol_mut(&mut self, m: usize) -> &mut [Complex64] {
        let n = self.fft_size();
        &mut self.cells[m * n..(m + 1) * n]
    }

    pub fn cells(&self) -> &[Complex64] {
        &self.cells
    }

    pub fn symbols(&self) -> impl Iterator<Item = &[Complex64]> {
        self.cells.chunks_exact(self.fft_size())
    }

    /// Data cells in (symbol, ascending frequency) order.
    pub fn data_cells(&self) -> Vec<Complex64> {
        self.gather(self.layout.data_bins())
    }

    pub fn pilot_cells(&self) -> Vec<Complex64> {
        self.gather(self.layout.pilot_bins())
    }

    fn gather(&self, bins: &[usize]) -> Vec<Complex64> {
        self.symbols()
            .flat_map(|sym| bins.iter().map(move |&b| sym[b]))
            .collect()
    }

    pub fn same_layout(&self, other: &ResourceGrid) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout
    }

    pub fn total_power(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Places `data` on the data cells and seeded QPSK pilots on the pilot cells.
///
/// The pilot sequence depends only on `pilot_seed` and the layout, so a
/// receiver holding the seed can regenerate it.
pub fn build_grid(
    config: &OfdmConfig,
    data: &[Complex64],
    pilot_seed: u64,
) -> Result<ResourceGrid> {
    let layout = Arc::new(SubcarrierLayout::new(config)?);
    let expected = config.n_symbols * layout.data_bins().len();
    if data.len() != expected {
        return Err(Error::invalid(format!(
            "expected {expected} data symbols, got {}",
            data.len()
        )));
    }
    let n_pilots = config.n_symbols * layout.pilot_bins().len();
    let pilot_bits = random_bits(&mut rng_for(pilot_seed), 2 * n_pilots);
    let pilots = map_qpsk(&pilot_bits)?;

    let mut grid = ResourceGrid::zeros(config.n_symbols, Arc::clone(&layout));
    let per_sym_data = layout.data_bins().len();
    let per_sym_pilot = layout.pilot_bins().len();
    for m in 0..config.n_symbols {
        let sym = grid.symbol_mut(m);
        for (&bin, &v) in layout
            .data_bins()
            .iter()
            .zip(&data[m * per_sym_data..(m + 1) * per_sym_data])
        {
            sym[bin] = v;
        }
        for (&bin, &v) in layout
            .pilot_bins()
            .iter()
            .zip(&pilots[m * per_sym_pilot..(m + 1) * per_sym_pilot])
        {
            sym[bin] = v;
        }
    }
    Ok(grid)
}
