//! Spatial-frequency diagnostics of gridded effort measurements.
//!
//! A 2-D discrete Fourier transform of the settled efforts over the x-y
//! grid (mean removed) exposes the magnet-pitch periodicity; the peak bin
//! per axis converts to a dominant spatial wavelength.

use rustfft::{num_complex::Complex64, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("grid of {nx} x {ny} points needs {expected} values, got {got}")]
    BadShape {
        nx: usize,
        ny: usize,
        expected: usize,
        got: usize,
    },
    #[error("grid spacing must be strictly positive, got {0}")]
    BadSpacing(f64),
    #[error("grid is not uniform / complete: {0}")]
    NonUniformGrid(String),
}

/// Scalar samples on a uniformly spaced x-y grid, row-major with x fastest.
#[derive(Debug, Clone)]
pub struct GridScan {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing (m), identical on both axes.
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl GridScan {
    pub fn new(nx: usize, ny: usize, spacing: f64, values: Vec<f64>) -> Result<Self, SpectrumError> {
        if spacing <= 0.0 || !spacing.is_finite() {
            return Err(SpectrumError::BadSpacing(spacing));
        }
        if values.len() != nx * ny {
            return Err(SpectrumError::BadShape {
                nx,
                ny,
                expected: nx * ny,
                got: values.len(),
            });
        }
        Ok(GridScan {
            nx,
            ny,
            spacing,
            values,
        })
    }
}

/// Magnitude spectrum plus the per-axis dominant wavelengths.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub nx: usize,
    pub ny: usize,
    /// |FFT| magnitudes, same layout as the input grid.
    pub magnitude: Vec<f64>,
    /// Dominant wavelength along x (m), if any non-DC energy exists.
    pub dominant_wavelength_x: Option<f64>,
    /// Dominant wavelength along y (m).
    pub dominant_wavelength_y: Option<f64>,
    /// Wavelength resolution: neighbouring-bin wavelengths at the peak.
    pub bin_width_x: f64,
    pub bin_width_y: f64,
}

/// Mean-removed 2-D Fourier magnitude of a grid scan with the dominant
/// spatial wavelength per axis.
pub fn spatial_spectrum(grid: &GridScan) -> Result<SpectrumResult, SpectrumError> {
    let (nx, ny) = (grid.nx, grid.ny);
    if grid.values.len() != nx * ny {
        return Err(SpectrumError::BadShape {
            nx,
            ny,
            expected: nx * ny,
            got: grid.values.len(),
        });
    }
    let n = (nx * ny) as f64;
    let mean = grid.values.iter().sum::<f64>() / n;
    let max_dev = grid
        .values
        .iter()
        .map(|v| (v - mean).abs())
        .fold(0.0, f64::max);
    // A constant grid has no spectrum; don't let rounding residue of the
    // mean subtraction masquerade as one.
    if max_dev <= 1e-12 * (mean.abs() + 1.0) {
        return Ok(SpectrumResult {
            nx,
            ny,
            magnitude: vec![0.0; nx * ny],
            dominant_wavelength_x: None,
            dominant_wavelength_y: None,
            bin_width_x: 0.0,
            bin_width_y: 0.0,
        });
    }

    let mut data: Vec<Complex64> = grid
        .values
        .iter()
        .map(|v| Complex64::new(v - mean, 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    let fft_x = planner.plan_fft_forward(nx);
    for row in data.chunks_exact_mut(nx) {
        fft_x.process(row);
    }
    let fft_y = planner.plan_fft_forward(ny);
    let mut column = vec![Complex64::new(0.0, 0.0); ny];
    for ix in 0..nx {
        for iy in 0..ny {
            column[iy] = data[iy * nx + ix];
        }
        fft_y.process(&mut column);
        for iy in 0..ny {
            data[iy * nx + ix] = column[iy];
        }
    }
    let magnitude: Vec<f64> = data.iter().map(|c| c.norm()).collect();

    // Marginal magnitude per axis; DC excluded, only unique frequencies.
    let peak_axis = |len: usize, marginal: &dyn Fn(usize) -> f64| -> Option<usize> {
        let half = len / 2;
        let mut best = None;
        let mut best_mag = 0.0;
        for k in 1..=half {
            let m = marginal(k);
            if m > best_mag {
                best_mag = m;
                best = Some(k);
            }
        }
        best
    };
    let marginal_x = |kx: usize| (0..ny).map(|iy| magnitude[iy * nx + kx]).sum::<f64>();
    let marginal_y = |ky: usize| (0..nx).map(|ix| magnitude[ky * nx + ix]).sum::<f64>();
    let kx = peak_axis(nx, &marginal_x);
    let ky = peak_axis(ny, &marginal_y);

    let wavelength = |len: usize, k: usize| len as f64 * grid.spacing / k as f64;
    let bin_width = |len: usize, k: usize| {
        // Distance to the nearest neighbouring-bin wavelength.
        let w = wavelength(len, k);
        let w_next = wavelength(len, k + 1);
        (w - w_next).abs().max(if k > 1 {
            (wavelength(len, k - 1) - w).abs()
        } else {
            w
        })
    };

    Ok(SpectrumResult {
        nx,
        ny,
        magnitude,
        dominant_wavelength_x: kx.map(|k| wavelength(nx, k)),
        dominant_wavelength_y: ky.map(|k| wavelength(ny, k)),
        bin_width_x: kx.map(|k| bin_width(nx, k)).unwrap_or(0.0),
        bin_width_y: ky.map(|k| bin_width(ny, k)).unwrap_or(0.0),
    })
}
