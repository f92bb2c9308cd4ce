//! Physical-optics route to the coupling matrix.
//!
//! The imaging chain is modeled as an ideal two-lens relay: SLM plane ->
//! Fourier transform -> diffractive element in the Fourier plane -> inverse
//! transform -> camera plane, with optional free-space legs handled by
//! angular-spectrum propagation. A diffractive element whose period spans
//! `grid_side + 2 * pad` frequency samples shifts the image by whole pixels
//! per diffraction order, which is the matched-spacing condition that turns
//! the relay into a local coupling kernel.
//!
//! Column `j` of the matrix is obtained by illuminating pixel `j` alone,
//! pushing it through the chain and integrating the arriving amplitude over
//! every destination pixel. Real gratings are never perfectly aligned with
//! the pixel raster; the sub-period offset each pixel's light sees drifts
//! across the array. `shift_per_pixel` reproduces that walk-off and is what
//! makes same-offset weights vary from node to node.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::topology::CouplingMatrix;

pub type Complex64 = Complex<f64>;

/// Sampled complex field on a square grid with physical sample pitch.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    side: usize,
    pitch: f64,
    data: Vec<Complex64>,
}

impl FieldGrid {
    pub fn new(side: usize, pitch: f64, data: Vec<Complex64>) -> Result<Self> {
        if side == 0 || data.len() != side * side {
            return Err(Error::InvalidArgument(format!(
                "field data length {} does not match side {side}",
                data.len()
            )));
        }
        if !pitch.is_finite() || pitch <= 0.0 {
            return Err(Error::InvalidArgument("field pitch must be positive".into()));
        }
        if let Some(i) = data.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidField(i));
        }
        Ok(FieldGrid { side, pitch, data })
    }

    pub fn zeros(side: usize, pitch: f64) -> Result<Self> {
        FieldGrid::new(side, pitch, vec![Complex64::new(0.0, 0.0); side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.side + col] = value;
    }

    /// Total power `sum |E|^2 * pitch^2`.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.pitch * self.pitch
    }
}

/// Forward/inverse 2-D FFT pair of a fixed square size.
struct Fft2 {
    side: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { side, fwd: planner.plan_fft_forward(side), inv: planner.plan_fft_inverse(side) }
    }

    fn transform_rows(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for row in data.chunks_exact_mut(self.side) {
            fft.process_with_scratch(row, &mut scratch);
        }
    }

    fn transpose(&self, data: &mut [Complex64]) {
        let n = self.side;
        for r in 0..n {
            for c in (r + 1)..n {
                data.swap(r * n + c, c * n + r);
            }
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.transform_rows(data, &self.fwd);
        self.transpose(data);
        self.transform_rows(data, &self.fwd);
        self.transpose(data);
    }

    /// Inverse transform including the 1/N^2 normalization.
    fn inverse(&self, data: &mut [Complex64]) {
        self.transform_rows(data, &self.inv);
        self.transpose(data);
        self.transform_rows(data, &self.inv);
        self.transpose(data);
        let scale = 1.0 / (self.side * self.side) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Signed spatial frequency (cycles per unit length) of FFT bin `index`.
fn fft_frequency(index: usize, n: usize, pitch: f64) -> f64 {
    let k = if index <= n / 2 { index as isize } else { index as isize - n as isize };
    k as f64 / (n as f64 * pitch)
}

/// Propagate a field over `distance` through free space via the angular
/// spectrum: every plane-wave component gains a phase
/// `exp(i 2 pi z sqrt(1/lambda^2 - fx^2 - fy^2))`, while evanescent
/// components (negative root argument) are removed. Power in the
/// propagating band is conserved exactly.
pub fn angular_spectrum_propagate(
    field: &FieldGrid,
    distance: f64,
    wavelength: f64,
) -> Result<FieldGrid> {
    if !distance.is_finite() || distance < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "propagation distance {distance} must be >= 0"
        )));
    }
    if !wavelength.is_finite() || wavelength <= 0.0 {
        return Err(Error::InvalidArgument("wavelength must be positive".into()));
    }
    if distance == 0.0 {
        return Ok(field.clone());
    }
    let n = field.side();
    let fft = Fft2::new(n);
    let mut data = field.data().to_vec();
    fft.forward(&mut data);

    let inv_lambda_sq = 1.0 / (wavelength * wavelength);
    for row in 0..n {
        let fy = fft_frequency(row, n, field.pitch());
        for col in 0..n {
            let fx = fft_frequency(col, n, field.pitch());
            let arg = inv_lambda_sq - fx * fx - fy * fy;
            let idx = row * n + col;
            if arg > 0.0 {
                let phase = 2.0 * std::f64::consts::PI * distance * arg.sqrt();
                data[idx] *= Complex64::from_polar(1.0, phase);
            } else {
                data[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }
    fft.inverse(&mut data);
    FieldGrid::new(n, field.pitch(), data)
}

/// Transmission profile of the diffractive element in the Fourier plane.
#[derive(Debug, Clone, PartialEq)]
pub enum DoeMask {
    /// No element; the relay images each pixel onto itself.
    Flat,
    /// Phase-only element: `side x side` samples of one spatial period in
    /// radians, evaluated with periodic bilinear interpolation.
    Phase { profile: Vec<f64>, side: usize },
    /// Idealized grating given directly by its diffraction orders as
    /// `(mx, my, coefficient)`. Band-limited by construction, so couplings
    /// stop exactly at the highest listed order.
    Orders { coefficients: Vec<(i32, i32, Complex64)> },
}

impl DoeMask {
    /// Binary 0/pi grating, separable in x and y, with the phase-pi segment
    /// covering `transition` of each period. The hard edges spread power
    /// into many orders and make the sampled order weights sensitive to
    /// sub-period alignment, which is what drives coupling heterogeneity.
    pub fn binary_grating(transition: f64, profile_side: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&transition) || transition == 0.0 {
            return Err(Error::InvalidArgument("grating transition must lie in (0, 1)".into()));
        }
        if profile_side < 4 {
            return Err(Error::InvalidArgument("profile side must be >= 4".into()));
        }
        let step = |u: f64| -> f64 {
            if u < transition {
                std::f64::consts::PI
            } else {
                0.0
            }
        };
        let mut profile = Vec::with_capacity(profile_side * profile_side);
        for r in 0..profile_side {
            for c in 0..profile_side {
                let y = r as f64 / profile_side as f64;
                let x = c as f64 / profile_side as f64;
                // Sum of the two binary phases, wrapped to {0, pi}.
                let phase = (step(x) + step(y)) % (2.0 * std::f64::consts::PI);
                profile.push(phase);
            }
        }
        Ok(DoeMask::Phase { profile, side: profile_side })
    }

    /// Ideal uniform fan-out onto the 3x3 neighbor orders.
    pub fn orders_3x3() -> Self {
        let mut coefficients = Vec::with_capacity(9);
        for my in -1..=1 {
            for mx in -1..=1 {
                coefficients.push((mx, my, Complex64::new(1.0 / 3.0, 0.0)));
            }
        }
        DoeMask::Orders { coefficients }
    }

    /// Highest diffraction order the mask can feed, when known in advance.
    pub fn declared_max_order(&self) -> Option<usize> {
        match self {
            DoeMask::Flat => Some(0),
            DoeMask::Phase { .. } => None,
            DoeMask::Orders { coefficients } => Some(
                coefficients
                    .iter()
                    .map(|&(mx, my, _)| mx.unsigned_abs().max(my.unsigned_abs()) as usize)
                    .max()
                    .unwrap_or(0),
            ),
        }
    }

    /// Complex transmission at a position inside one period, both
    /// coordinates in period units `[0, 1)`.
    pub fn transmission(&self, pos_x: f64, pos_y: f64) -> Complex64 {
        match self {
            DoeMask::Flat => Complex64::new(1.0, 0.0),
            DoeMask::Phase { profile, side } => {
                let s = *side as f64;
                let x = pos_x.rem_euclid(1.0) * s;
                let y = pos_y.rem_euclid(1.0) * s;
                let (x0, y0) = (x.floor() as usize % side, y.floor() as usize % side);
                let (x1, y1) = ((x0 + 1) % side, (y0 + 1) % side);
                let (tx, ty) = (x - x.floor(), y - y.floor());
                let p = |r: usize, c: usize| profile[r * side + c];
                let phase = p(y0, x0) * (1.0 - tx) * (1.0 - ty)
                    + p(y0, x1) * tx * (1.0 - ty)
                    + p(y1, x0) * (1.0 - tx) * ty
                    + p(y1, x1) * tx * ty;
                Complex64::from_polar(1.0, phase)
            }
            DoeMask::Orders { coefficients } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(mx, my, c) in coefficients {
                    let phase =
                        2.0 * std::f64::consts::PI * (mx as f64 * pos_x + my as f64 * pos_y);
                    acc += c * Complex64::from_polar(1.0, phase);
                }
                acc
            }
        }
    }
}

/// Geometry and element description of the optical coupling setup.
#[derive(Debug, Clone)]
pub struct OpticalSystemSpec {
    /// Illumination wavelength (m).
    pub wavelength: f64,
    /// SLM pixel pitch (m).
    pub slm_pitch: f64,
    /// Nodes per grid side; the network has `grid_side^2` nodes.
    pub grid_side: usize,
    /// Field samples per SLM pixel (>= 2 to resolve pixel edges).
    pub samples_per_pixel: usize,
    /// Guard band of dark pixels around the active array.
    pub pad_pixels: usize,
    pub mask: DoeMask,
    /// Sub-period walk-off of the element relative to the pixel raster, in
    /// period fractions per pixel step (x, y).
    pub shift_per_pixel: (f64, f64),
    /// Free-space legs before and after the relay (m).
    pub propagation_distances: [f64; 2],
    /// Pupil acceptance: diffraction orders beyond this Chebyshev radius
    /// miss the relay aperture and are dropped.
    pub aperture_orders: usize,
    /// Couplings below this fraction of their column maximum are zeroed.
    pub threshold_rel: f64,
}

impl Default for OpticalSystemSpec {
    fn default() -> Self {
        OpticalSystemSpec {
            wavelength: 661.2e-9,
            slm_pitch: 12.5e-6,
            grid_side: 30,
            samples_per_pixel: 4,
            pad_pixels: 4,
            mask: DoeMask::binary_grating(0.232, 64).expect("valid default grating"),
            shift_per_pixel: (0.618_033_988_749_895, 0.414_213_562_373_095),
            propagation_distances: [0.0, 0.0],
            aperture_orders: 1,
            threshold_rel: 1e-4,
        }
    }
}

impl OpticalSystemSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.wavelength.is_finite() || self.wavelength <= 0.0 {
            return Err(Error::InvalidArgument("wavelength must be positive".into()));
        }
        if !self.slm_pitch.is_finite() || self.slm_pitch <= 0.0 {
            return Err(Error::InvalidArgument("slm_pitch must be positive".into()));
        }
        if self.grid_side == 0 {
            return Err(Error::InvalidArgument("grid_side must be >= 1".into()));
        }
        if self.samples_per_pixel < 2 {
            return Err(Error::Sampling(
                "samples_per_pixel must be >= 2 to resolve pixel edges".into(),
            ));
        }
        if self.aperture_orders > self.pad_pixels {
            return Err(Error::Sampling(format!(
                "aperture of {} orders needs a guard band of at least {} pixels (pad_pixels = {})",
                self.aperture_orders, self.aperture_orders, self.pad_pixels
            )));
        }
        if let Some(max_order) = self.mask.declared_max_order() {
            if max_order > self.pad_pixels {
                return Err(Error::Sampling(format!(
                    "mask feeds order {max_order} beyond the {}-pixel guard band",
                    self.pad_pixels
                )));
            }
        }
        if !(self.threshold_rel > 0.0 && self.threshold_rel < 1.0) {
            return Err(Error::InvalidArgument("threshold_rel must lie in (0, 1)".into()));
        }
        let field_pitch = self.slm_pitch / self.samples_per_pixel as f64;
        let field_side = self.field_side();
        let z_limit = field_side as f64 * field_pitch * field_pitch / self.wavelength;
        for (k, &z) in self.propagation_distances.iter().enumerate() {
            if !z.is_finite() || z < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "propagation distance {k} must be >= 0"
                )));
            }
            if z > z_limit {
                return Err(Error::Sampling(format!(
                    "propagation distance {z} exceeds the aliasing-safe limit {z_limit:.3e} \
                     for this grid"
                )));
            }
        }
        Ok(())
    }

    /// Padded pixel count per side; also the element period in frequency
    /// samples (the matched-spacing condition).
    pub fn padded_side(&self) -> usize {
        self.grid_side + 2 * self.pad_pixels
    }

    /// Field samples per side.
    pub fn field_side(&self) -> usize {
        self.padded_side() * self.samples_per_pixel
    }
}

/// Sub-period element offset seen by the pixel at `(row, col)`.
fn pixel_shift(spec: &OpticalSystemSpec, row: usize, col: usize) -> (f64, f64) {
    (
        (col as f64 * spec.shift_per_pixel.0).rem_euclid(1.0),
        (row as f64 * spec.shift_per_pixel.1).rem_euclid(1.0),
    )
}

/// Propagate a single-pixel probe through the relay and integrate the
/// arriving amplitude over every destination pixel within the aperture.
/// Returns `(dest_node, magnitude)` pairs before thresholding.
fn probe_column(
    spec: &OpticalSystemSpec,
    fft: &Fft2,
    probe_row: usize,
    probe_col: usize,
) -> Result<Vec<(usize, f64)>> {
    let g = spec.grid_side;
    let s = spec.samples_per_pixel;
    let pad = spec.pad_pixels;
    let m = spec.field_side();
    let period = spec.padded_side() as f64;
    let field_pitch = spec.slm_pitch / s as f64;

    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for r in 0..s {
        let row = (pad + probe_row) * s + r;
        for c in 0..s {
            let col = (pad + probe_col) * s + c;
            data[row * m + col] = Complex64::new(1.0, 0.0);
        }
    }

    if spec.propagation_distances[0] > 0.0 {
        let field = FieldGrid::new(m, field_pitch, data)?;
        data = angular_spectrum_propagate(&field, spec.propagation_distances[0], spec.wavelength)?
            .data()
            .to_vec();
    }

    fft.forward(&mut data);
    let (shift_x, shift_y) = pixel_shift(spec, probe_row, probe_col);
    for row in 0..m {
        let pos_y = row as f64 / period - shift_y;
        for col in 0..m {
            let pos_x = col as f64 / period - shift_x;
            data[row * m + col] *= spec.mask.transmission(pos_x, pos_y);
        }
    }
    fft.inverse(&mut data);

    if spec.propagation_distances[1] > 0.0 {
        let field = FieldGrid::new(m, field_pitch, data)?;
        data = angular_spectrum_propagate(&field, spec.propagation_distances[1], spec.wavelength)?
            .data()
            .to_vec();
    }

    let aperture = spec.aperture_orders as isize;
    let norm = (s * s) as f64;
    let mut out = Vec::new();
    for dr in -aperture..=aperture {
        let dest_row = probe_row as isize + dr;
        if dest_row < 0 || dest_row >= g as isize {
            continue;
        }
        for dc in -aperture..=aperture {
            let dest_col = probe_col as isize + dc;
            if dest_col < 0 || dest_col >= g as isize {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..s {
                let row = (pad + dest_row as usize) * s + r;
                for c in 0..s {
                    let col = (pad + dest_col as usize) * s + c;
                    acc += data[row * m + col];
                }
            }
            let dest = dest_row as usize * g + dest_col as usize;
            out.push((dest, acc.norm() / norm));
        }
    }
    Ok(out)
}

/// Compute the coupling matrix of the modeled setup by probing every pixel.
pub fn compute_doe_matrix(spec: &OpticalSystemSpec) -> Result<CouplingMatrix> {
    spec.validate()?;
    let g = spec.grid_side;
    let fft = Fft2::new(spec.field_side());

    let columns: Vec<Result<Vec<(usize, f64)>>> =
        (0..g * g).into_par_iter().map(|j| probe_column(spec, &fft, j / g, j % g)).collect();

    let mut triplets = Vec::new();
    let mut max_radius = 0usize;
    for (j, column) in columns.into_iter().enumerate() {
        let column = column?;
        let col_max = column.iter().map(|&(_, w)| w).fold(0.0f64, f64::max);
        if col_max <= 0.0 {
            continue;
        }
        let floor = spec.threshold_rel * col_max;
        for (i, w) in column {
            if w >= floor {
                let dr = (i / g) as isize - (j / g) as isize;
                let dc = (i % g) as isize - (j % g) as isize;
                max_radius = max_radius.max(dr.abs().max(dc.abs()) as usize);
                triplets.push((i, j, w));
            }
        }
    }
    CouplingMatrix::from_triplets(g, max_radius, &triplets)
}
