//! 2D discrete Fourier transforms and Hermitian-symmetry tools.
//!
//! All symmetry math is index-exact on *uncentered* spectra, where the
//! mirror of bin `(k, l)` is `((M - k) % M, (N - l) % N)`. Centering is a
//! presentation convenience: a centered spectrum carries the DC bin at
//! `(M / 2, N / 2)` and [`mirror_index`] accounts for it.

use std::cell::RefCell;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

use crate::error::{Result, SfwError};

/// Absolute tolerance used for "Hermitian" and "real" checks on unit-scale data.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Row-major 2D grid of real or complex scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T> {
    height: usize,
    width: usize,
    values: Vec<T>,
}

pub type RealPlane = Plane<f64>;
pub type ComplexPlane = Plane<Complex64>;

impl<T: Copy> Plane<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(SfwError::Dimension(format!(
                "plane must be non-empty, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(SfwError::Size {
                what: "plane values",
                expected: height * width,
                actual: values.len(),
            });
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.values[row * self.width + col] = value;
    }
}

impl RealPlane {
    /// I.i.d. `N(0, sigma^2)` samples drawn from a seeded ChaCha stream.
    pub fn gaussian(height: usize, width: usize, sigma: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma.max(0.0))
            .map_err(|e| SfwError::InvalidParameter(e.to_string()))?;
        let values = (0..height * width).map(|_| normal.sample(&mut rng)).collect();
        Self::new(height, width, values)
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SfwError::NonFinite("plane"))
        }
    }
}

impl ComplexPlane {
    /// Largest absolute imaginary part across the grid.
    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn real_part(&self) -> RealPlane {
        Plane {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| v.re).collect(),
        }
    }
}

/// Complex frequency-domain grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
    centered: bool,
    hermitian: bool,
}

impl Spectrum {
    /// Builds an uncentered spectrum with the Hermitian flag cleared.
    pub fn new(height: usize, width: usize, values: Vec<Complex64>) -> Result<Self> {
        let plane = Plane::new(height, width, values)?;
        Ok(Self {
            height,
            width,
            values: plane.values,
            centered: false,
            hermitian: false,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![Complex64::new(0.0, 0.0); height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        self.hermitian = false;
        &mut self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Whether the spectrum was produced by [`hermitian_project`] and not
    /// modified through a mutable accessor since.
    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.hermitian = false;
        self.values[row * self.width + col] = value;
    }

    /// Coordinates of the conjugate-mirror partner of `(row, col)` in this
    /// spectrum's own indexing convention.
    pub fn mirror(&self, row: usize, col: usize) -> (usize, usize) {
        (
            mirror_index(row, self.height, self.centered),
            mirror_index(col, self.width, self.centered),
        )
    }

    /// Bin holding the DC component.
    pub fn dc(&self) -> (usize, usize) {
        if self.centered {
            (self.height / 2, self.width / 2)
        } else {
            (0, 0)
        }
    }

    fn same_shape(&self, other: &Spectrum) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Mirror partner of index `i` along an axis of length `n`.
///
/// Uncentered: `(n - i) % n`. Centered with the floor shift `h = n / 2`:
/// `(2h - i) mod n`.
pub fn mirror_index(i: usize, n: usize, centered: bool) -> usize {
    if centered {
        let h = n / 2;
        (2 * h + n - i) % n
    } else {
        (n - i) % n
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn transform_in_place(height: usize, width: usize, data: &mut [Complex64], dir: Direction) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let (row_fft, col_fft) = match dir {
            Direction::Forward => (planner.plan_fft_forward(width), planner.plan_fft_forward(height)),
            Direction::Inverse => (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height)),
        };
        // rows are contiguous
        row_fft.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for c in 0..width {
            for r in 0..height {
                column[r] = data[r * width + c];
            }
            col_fft.process(&mut column);
            for r in 0..height {
                data[r * width + c] = column[r];
            }
        }
    });
}

/// Unnormalized forward 2D DFT. The result is uncentered.
pub fn dft2<T>(plane: &Plane<T>) -> Result<Spectrum>
where
    T: Copy + Into<Complex64>,
{
    let mut values: Vec<Complex64> = plane.values.iter().map(|&v| v.into()).collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SfwError::NonFinite("plane"));
    }
    transform_in_place(plane.height, plane.width, &mut values, Direction::Forward);
    Ok(Spectrum {
        height: plane.height,
        width: plane.width,
        values,
        centered: false,
        hermitian: false,
    })
}

/// Forward DFT of a real plane.
pub fn dft2_real(plane: &RealPlane) -> Result<Spectrum> {
    plane.check_finite()?;
    dft2(plane)
}

/// Inverse 2D DFT with the `1 / (M N)` normalization.
///
/// A centered spectrum is rejected; shift it back first.
pub fn idft2(spec: &Spectrum) -> Result<ComplexPlane> {
    if spec.centered {
        return Err(SfwError::Dimension(
            "idft2 expects an uncentered spectrum".into(),
        ));
    }
    let mut values = spec.values.clone();
    transform_in_place(spec.height, spec.width, &mut values, Direction::Inverse);
    let scale = 1.0 / (spec.height * spec.width) as f64;
    for v in &mut values {
        *v *= scale;
    }
    Plane::new(spec.height, spec.width, values)
}

/// Target convention for [`shift`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    ToCentered,
    ToUncentered,
}

/// Floor-based quadrant swap moving DC between `(0, 0)` and `(M/2, N/2)`.
pub fn shift(spec: &Spectrum, direction: ShiftDirection) -> Spectrum {
    let (h, w) = (spec.height, spec.width);
    let (dh, dw) = (h / 2, w / 2);
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        for c in 0..w {
            match direction {
                ShiftDirection::ToCentered => {
                    out[((r + dh) % h) * w + (c + dw) % w] = spec.values[r * w + c];
                }
                ShiftDirection::ToUncentered => {
                    out[r * w + c] = spec.values[((r + dh) % h) * w + (c + dw) % w];
                }
            }
        }
    }
    Spectrum {
        height: h,
        width: w,
        values: out,
        centered: direction == ShiftDirection::ToCentered,
        hermitian: spec.hermitian,
    }
}

/// Centers an uncentered spectrum; a no-op copy if already centered.
pub fn centered(spec: &Spectrum) -> Spectrum {
    if spec.centered {
        spec.clone()
    } else {
        shift(spec, ShiftDirection::ToCentered)
    }
}

/// Uncenters a centered spectrum; a no-op copy if already uncentered.
pub fn uncentered(spec: &Spectrum) -> Spectrum {
    if spec.centered {
        shift(spec, ShiftDirection::ToUncentered)
    } else {
        spec.clone()
    }
}

/// Projects onto the Hermitian-symmetric subspace by averaging every bin with
/// the conjugate of its mirror. Self-conjugate bins get an exactly zero
/// imaginary part. The map is linear and idempotent.
pub fn hermitian_project(spec: &Spectrum) -> Spectrum {
    let (h, w) = (spec.height, spec.width);
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        let mr = mirror_index(r, h, spec.centered);
        for c in 0..w {
            let mc = mirror_index(c, w, spec.centered);
            let v = spec.values[r * w + c];
            out[r * w + c] = if mr == r && mc == c {
                Complex64::new(v.re, 0.0)
            } else {
                (v + spec.values[mr * w + mc].conj()) * 0.5
            };
        }
    }
    Spectrum {
        height: h,
        width: w,
        values: out,
        centered: spec.centered,
        hermitian: true,
    }
}

/// All bins that are their own mirror, in uncentered coordinates, sorted.
pub fn self_conjugate_points(height: usize, width: usize) -> Vec<(usize, usize)> {
    let rows: Vec<usize> = if height % 2 == 0 && height > 1 {
        vec![0, height / 2]
    } else {
        vec![0]
    };
    let cols: Vec<usize> = if width % 2 == 0 && width > 1 {
        vec![0, width / 2]
    } else {
        vec![0]
    };
    let mut points: Vec<(usize, usize)> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect();
    points.sort_unstable();
    points
}

/// Largest `|F[mirror(k)] - conj(F[k])|` over all bins.
pub fn max_mirror_deviation(spec: &Spectrum) -> f64 {
    let (h, w) = (spec.height, spec.width);
    let mut worst = 0.0f64;
    for r in 0..h {
        let mr = mirror_index(r, h, spec.centered);
        for c in 0..w {
            let mc = mirror_index(c, w, spec.centered);
            let d = (spec.values[mr * w + mc] - spec.values[r * w + c].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// True iff the mirror equality holds everywhere within `tol`.
pub fn is_hermitian(spec: &Spectrum, tol: f64) -> bool {
    max_mirror_deviation(spec) <= tol
}

/// Mean per-bin power of the DFT of i.i.d. `N(0, sigma^2)` planes, averaged
/// over `trials` seeded draws. Its expectation is `M * N * sigma^2`.
pub fn empirical_spectrum_variance(
    seed: u64,
    height: usize,
    width: usize,
    sigma: f64,
    trials: usize,
) -> Result<f64> {
    if trials == 0 {
        return Err(SfwError::InvalidParameter("trials must be >= 1".into()));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(SfwError::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| SfwError::InvalidParameter(e.to_string()))?;
    let mut total = 0.0;
    for _ in 0..trials {
        let values: Vec<f64> = (0..height * width).map(|_| normal.sample(&mut rng)).collect();
        let spec = dft2(&Plane::new(height, width, values)?)?;
        total += spec.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    Ok(total / (trials * height * width) as f64)
}

/// Elementwise sum, used to check linearity of the projection.
pub fn add(a: &Spectrum, b: &Spectrum) -> Result<Spectrum> {
    if !a.same_shape(b) || a.centered != b.centered {
        return Err(SfwError::Dimension("spectrum shapes differ".into()));
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
    Ok(Spectrum {
        height: a.height,
        width: a.width,
        values,
        centered: a.centered,
        hermitian: false,
    })
}
