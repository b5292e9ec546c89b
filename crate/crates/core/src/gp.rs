//! Exact Gaussian-process regression on the one-dimensional answer axis
//! `a ∈ [0, 1]`.
//!
//! The kernel is a squared exponential with an additive noise term on the
//! training diagonal. Posteriors are evaluated on a fixed grid and the
//! uncertainty of a concept is the area of the ±2 standard deviation band,
//! split at `a = 0.5` into the part covering negative samples and the part
//! covering positive samples.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of grid nodes on `[0, 1]` (spacing 0.01).
pub const GRID_LEN: usize = 101;

/// Grid spacing on the answer axis.
pub const GRID_STEP: f64 = 0.01;

/// The 101 bin centres `k / 100` for `k = 0..=100`.
pub fn answer_grid() -> Vec<f64> {
    (0..GRID_LEN).map(|k| k as f64 / 100.0).collect()
}

/// Squared-exponential kernel hyperparameters. They are fixed, never learned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            length_scale: 0.1,
            signal_variance: 1.0,
            noise_variance: 0.025,
        }
    }
}

impl KernelParams {
    pub fn new(length_scale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let params = Self {
            length_scale,
            signal_variance,
            noise_variance,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("length_scale", self.length_scale),
            ("signal_variance", self.signal_variance),
            ("noise_variance", self.noise_variance),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidKernel { name, value });
            }
        }
        Ok(())
    }

    /// Noise-free covariance between two locations.
    #[inline]
    pub(crate) fn covariance(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        self.signal_variance * libm::exp(-(d * d) / (2.0 * self.length_scale * self.length_scale))
    }
}

/// Evaluates `σ_f · exp(−(a_m − a_n)² / 2l²)`, adding `σ_n` when both
/// arguments are the same training index.
pub fn kernel_eval(a_m: f64, a_n: f64, params: &KernelParams, same_index: bool) -> Result<f64> {
    params.validate()?;
    check_unit("kernel argument", a_m)?;
    check_unit("kernel argument", a_n)?;
    let mut k = params.covariance(a_m, a_n);
    if same_index {
        k += params.noise_variance;
    }
    Ok(k)
}

/// One training point: a bin centre and the value observed there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub location: f64,
    pub value: f64,
}

/// Posterior mean and latent-function variance on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorCurve {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl PosteriorCurve {
    /// The zero-mean prior evaluated on `grid`.
    pub fn prior(grid: &[f64], params: &KernelParams) -> Self {
        Self {
            grid: grid.to_vec(),
            mean: vec![0.0; grid.len()],
            variance: vec![params.signal_variance; grid.len()],
        }
    }

    pub fn std_dev(&self) -> impl Iterator<Item = f64> + '_ {
        self.variance.iter().map(|v| libm::sqrt(*v))
    }
}

/// Exact GP regression with zero prior mean.
///
/// The training covariance carries `σ_n` on its diagonal; the test
/// diagonal does not, so the returned variance describes the latent
/// function rather than a noisy new observation.
pub fn gp_posterior(
    obs: &[Observation],
    grid: &[f64],
    params: &KernelParams,
) -> Result<PosteriorCurve> {
    params.validate()?;
    for o in obs {
        check_unit("observation location", o.location)?;
    }
    for (i, o) in obs.iter().enumerate() {
        if obs[..i].iter().any(|p| p.location == o.location) {
            return Err(Error::DuplicateLocation(o.location));
        }
    }
    if obs.is_empty() {
        return Ok(PosteriorCurve::prior(grid, params));
    }

    let n = obs.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut k = params.covariance(obs[i].location, obs[j].location);
            if i == j {
                k += params.noise_variance;
            }
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    let chol = Cholesky::factor(gram, n)?;

    let y: Vec<f64> = obs.iter().map(|o| o.value).collect();
    let alpha = chol.solve(&y);

    let mut mean = Vec::with_capacity(grid.len());
    let mut variance = Vec::with_capacity(grid.len());
    let mut k_star = vec![0.0; n];
    for &x in grid {
        for (k, o) in k_star.iter_mut().zip(obs) {
            *k = params.covariance(x, o.location);
        }
        mean.push(dot(&k_star, &alpha));
        let v = chol.forward(&k_star);
        let var = params.signal_variance - dot(&v, &v);
        variance.push(if var > 0.0 { var } else { 0.0 });
    }

    Ok(PosteriorCurve {
        grid: grid.to_vec(),
        mean,
        variance,
    })
}

/// Band uncertainty over the two halves of the answer axis.
///
/// `lower` covers `[0, 0.5]` (answers on negative samples) and `upper`
/// covers `[0.5, 1]` (answers on positive samples).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UncertaintySplit {
    pub lower: f64,
    pub upper: f64,
}

impl UncertaintySplit {
    pub fn total(&self) -> f64 {
        self.lower + self.upper
    }

    /// `max(u⁻, u⁺)`.
    pub fn dominant(&self) -> f64 {
        self.lower.max(self.upper)
    }

    /// Ground-truth bit of the dominant half: `false` when `u⁻` is the
    /// maximum (ties go to the negative half), `true` otherwise.
    pub fn dominant_gt(&self) -> bool {
        self.upper > self.lower
    }
}

/// Integrand used for the band area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandMeasure {
    /// `4·∫ √var da`: area of the ±2σ band.
    #[default]
    StdDev,
    /// `4·∫ var da`: the literal variance integral, for comparison.
    Variance,
}

/// Trapezoidal integral of the band over each half of `[0, 1]`.
///
/// The grid must be uniform, start at 0, end at 1 and have an odd number of
/// nodes so that 0.5 is a node.
pub fn band_integrals(curve: &PosteriorCurve, measure: BandMeasure) -> Result<UncertaintySplit> {
    let grid = &curve.grid;
    let n = grid.len();
    if n < 3 || n.is_multiple_of(2) || curve.variance.len() != n || grid[0] != 0.0 || grid[n - 1] != 1.0 {
        return Err(Error::InvalidGrid);
    }
    let segments = n - 1;
    let step = 1.0 / segments as f64;
    if grid
        .iter()
        .enumerate()
        .any(|(k, x)| (x - k as f64 * step).abs() > 1e-9)
    {
        return Err(Error::InvalidGrid);
    }

    let band: Vec<f64> = match measure {
        BandMeasure::StdDev => curve.std_dev().collect(),
        BandMeasure::Variance => curve.variance.clone(),
    };
    let mid = segments / 2;
    let trapezoid = |values: &[f64]| {
        let last = values.len() - 1;
        let interior: f64 = values[1..last].iter().sum();
        interior + 0.5 * (values[0] + values[last])
    };
    // 4·h·Σ with h = 1/segments, arranged so that a constant band integrates exactly.
    let lower = 4.0 * trapezoid(&band[..=mid]) / segments as f64;
    let upper = 4.0 * trapezoid(&band[mid..]) / segments as f64;
    Ok(UncertaintySplit { lower, upper })
}

/// Uncertainty of the zero-observation prior.
pub fn prior_split(params: &KernelParams, measure: BandMeasure) -> Result<UncertaintySplit> {
    band_integrals(&PosteriorCurve::prior(&answer_grid(), params), measure)
}

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor stored row-major.
struct Cholesky {
    l: Vec<f64>,
    n: usize,
}

impl Cholesky {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::Conditioning { pivot: j });
            }
            let d = libm::sqrt(d);
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
            for k in j + 1..n {
                a[j * n + k] = 0.0;
            }
        }
        Ok(Self { l: a, n })
    }

    /// Solves `L x = b`.
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s = b[i] - dot(row, &x[..i]);
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Solves `L Lᵀ x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}
