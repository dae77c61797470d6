//! Independent checks of the exact extraction.
//!
//! * [`detect_knots_by_sampling`] finds knots from floating-point forward
//!   passes on a uniform grid, without looking at any spline.
//! * [`check_sawtooth`] verifies the alternating-slope, equal-extrema shape
//!   that the tight constructions rely on.
//! * [`stress_bound`] runs seeded random networks through the exact
//!   extraction and records the largest knot count seen.

use num_bigint::BigUint;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_knots_core::rational::{self, Rational};
use relu_knots_core::{Architecture, DenseLayer, LinearSpline, ScalarInputNetwork, Tightness};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("sampling interval must satisfy low < high")]
    EmptyInterval,
    #[error("at least 3 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("tolerance must be a nonnegative finite number, got {0}")]
    BadTolerance(f64),
    #[error("sawtooth check needs at least 2 breakpoints, found {0}")]
    TooFewBreakpoints(usize),
    #[error("knot bound requires scalar input")]
    NonScalarInput,
}

/// Relative threshold on second differences, scaled by the largest
/// magnitude seen on the grid.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    low: Rational,
    high: Rational,
    samples: usize,
    tolerance: f64,
}

impl SamplingConfig {
    pub fn new(
        low: Rational,
        high: Rational,
        samples: usize,
        tolerance: f64,
    ) -> Result<Self, VerifyError> {
        if low >= high {
            return Err(VerifyError::EmptyInterval);
        }
        if samples < 3 {
            return Err(VerifyError::TooFewSamples(samples));
        }
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(VerifyError::BadTolerance(tolerance));
        }
        Ok(Self {
            low,
            high,
            samples,
            tolerance,
        })
    }

    /// `[-1, n₁]`, which contains every knot of the tight constructions.
    pub fn for_first_width(n1: usize, samples: usize) -> Result<Self, VerifyError> {
        Self::new(
            rational::int(-1),
            rational::int(n1 as i64),
            samples,
            DEFAULT_TOLERANCE,
        )
    }

    pub fn low(&self) -> &Rational {
        &self.low
    }

    pub fn high(&self) -> &Rational {
        &self.high
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Distance between neighbouring grid points.
    pub fn grid_step(&self) -> f64 {
        (rational::to_f64(&self.high) - rational::to_f64(&self.low)) / (self.samples - 1) as f64
    }

    fn grid(&self) -> Vec<f64> {
        let low = rational::to_f64(&self.low);
        let step = self.grid_step();
        (0..self.samples).map(|i| low + step * i as f64).collect()
    }
}

/// Network weights as `f64`, evaluated without any exact arithmetic.
struct FloatNetwork {
    layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
}

impl FloatNetwork {
    fn new(net: &ScalarInputNetwork) -> Self {
        let convert = |l: &DenseLayer| {
            (
                l.weights()
                    .iter()
                    .map(|r| r.iter().map(rational::to_f64).collect())
                    .collect(),
                l.biases().iter().map(rational::to_f64).collect(),
            )
        };
        let mut layers: Vec<_> = net.hidden_layers().iter().map(convert).collect();
        layers.push(convert(net.output_layer()));
        Self { layers }
    }

    fn eval(&self, x: f64) -> Vec<f64> {
        let mut act = vec![x];
        let last = self.layers.len() - 1;
        for (i, (w, b)) in self.layers.iter().enumerate() {
            act = w
                .iter()
                .zip(b)
                .map(|(row, b)| {
                    let z = row.iter().zip(&act).fold(*b, |acc, (w, v)| acc + w * v);
                    if i < last {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
        }
        act
    }
}

/// Approximate knot locations of the network's outputs (union over outputs),
/// found from second differences of floating-point samples.
///
/// A flag at a single grid node is reported at that node; flags at two
/// neighbouring nodes mean a knot strictly inside the cell between them and
/// are reported at the cell midpoint. Complete when neighbouring knots are
/// more than two grid steps apart.
pub fn detect_knots_by_sampling(net: &ScalarInputNetwork, cfg: &SamplingConfig) -> Vec<f64> {
    let float_net = FloatNetwork::new(net);
    let grid = cfg.grid();
    let values: Vec<Vec<f64>> = grid.iter().map(|&x| float_net.eval(x)).collect();
    let scale = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = cfg.tolerance * scale;

    let n = grid.len();
    let mut flagged = vec![false; n];
    for i in 1..n - 1 {
        flagged[i] = (0..values[i].len()).any(|k| {
            let second = values[i + 1][k] - 2.0 * values[i][k] + values[i - 1][k];
            second.abs() > threshold
        });
    }

    let mut knots = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if !flagged[i] {
            i += 1;
            continue;
        }
        if i + 1 < n - 1 && flagged[i + 1] {
            knots.push(0.5 * (grid[i] + grid[i + 1]));
            i += 2;
        } else {
            knots.push(grid[i]);
            i += 1;
        }
    }
    knots
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub exact_knots: usize,
    pub detected_knots: usize,
    pub grid_step: f64,
    /// Largest distance between a detection and its exact knot.
    pub max_error: f64,
    pub agree: bool,
}

/// Pairs detections with the exact knots lying inside the sampling interval
/// in sorted order; agreement requires equal counts and every pair within
/// one grid step.
pub fn compare_with_exact(
    detected: &[f64],
    exact: &[Rational],
    cfg: &SamplingConfig,
) -> OracleComparison {
    let inside: Vec<f64> = exact
        .iter()
        .filter(|x| *x >= &cfg.low && *x <= &cfg.high)
        .map(rational::to_f64)
        .collect();
    let step = cfg.grid_step();
    let max_error = detected
        .iter()
        .zip(&inside)
        .map(|(d, e)| (d - e).abs())
        .fold(0.0, f64::max);
    OracleComparison {
        exact_knots: inside.len(),
        detected_knots: detected.len(),
        grid_step: step,
        max_error,
        agree: detected.len() == inside.len() && max_error <= step,
    }
}

/// Sampling oracle against the exact output knots of `net`.
pub fn oracle_agreement(
    net: &ScalarInputNetwork,
    exact_knots: &[Rational],
    cfg: &SamplingConfig,
) -> OracleComparison {
    compare_with_exact(&detect_knots_by_sampling(net, cfg), exact_knots, cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SawtoothVerdict {
    pub alternating_slopes: bool,
    pub equal_minima: bool,
    pub equal_maxima: bool,
    /// `(min, max)` over the knots, as exact strings.
    pub range: (String, String),
    pub knots: usize,
}

impl SawtoothVerdict {
    pub fn passed(&self) -> bool {
        self.alternating_slopes && self.equal_minima && self.equal_maxima
    }
}

/// Slopes strictly alternate in sign over all pieces (both rays included)
/// and all local minima share one value, as do all local maxima.
pub fn check_sawtooth(f: &LinearSpline) -> Result<SawtoothVerdict, VerifyError> {
    if f.knot_count() < 2 {
        return Err(VerifyError::TooFewBreakpoints(f.knot_count()));
    }
    let slopes = f.slopes();
    let alternating_slopes = slopes.iter().all(|s| !s.is_zero())
        && slopes
            .windows(2)
            .all(|w| w[0].is_positive() != w[1].is_positive());
    let values = f.knot_values();
    // A knot is a local minimum when the slope turns from negative to positive.
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match (slopes[i].is_negative(), slopes[i + 1].is_positive()) {
            (true, true) => minima.push(v),
            (false, false) if slopes[i].is_positive() && slopes[i + 1].is_negative() => {
                maxima.push(v)
            }
            _ => {}
        }
    }
    let all_equal = |xs: &[&Rational]| xs.windows(2).all(|w| w[0] == w[1]);
    let (lo, hi) = f.knot_value_range().expect("at least two knots");
    Ok(SawtoothVerdict {
        alternating_slopes,
        equal_minima: all_equal(&minima),
        equal_maxima: all_equal(&maxima),
        range: (lo.to_string(), hi.to_string()),
        knots: f.knot_count(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StressReport {
    pub widths: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub bound: String,
    pub max_observed: usize,
    /// Trials whose output exceeded the bound. Always zero unless the bound
    /// is wrong.
    pub violations: usize,
    pub tightness: String,
    /// `bound - max_observed` for architectures known not to be tight.
    pub gap: Option<String>,
    pub note: &'static str,
}

pub const STRESS_NOTE: &str =
    "randomized search: a positive gap is evidence that the bound is unattainable, not a proof";

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    rational::ratio(rng.random_range(-100..=100), rng.random_range(1..=10))
}

fn random_layer(rng: &mut ChaCha8Rng, inputs: usize, neurons: usize) -> DenseLayer {
    let weights = (0..neurons)
        .map(|_| (0..inputs).map(|_| random_rational(rng)).collect())
        .collect();
    let biases = (0..neurons).map(|_| random_rational(rng)).collect();
    DenseLayer::new(weights, biases).expect("positive sizes")
}

/// Random network for `arch`; trial `index` under `seed` is reproducible on
/// its own, independent of other trials.
pub fn random_network(arch: &Architecture, seed: u64, index: u64) -> ScalarInputNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut inputs = 1;
    let mut hidden = Vec::with_capacity(arch.depth());
    for &n in arch.widths() {
        hidden.push(random_layer(&mut rng, inputs, n));
        inputs = n;
    }
    let output = random_layer(&mut rng, inputs, arch.output_dim());
    ScalarInputNetwork::new(hidden, output).expect("consistent widths")
}

pub fn stress_bound(
    arch: &Architecture,
    trials: usize,
    seed: u64,
) -> Result<StressReport, VerifyError> {
    let bound = arch.knot_bound().map_err(|_| VerifyError::NonScalarInput)?;
    let counts =
        (0..trials as u64).map(|i| random_network(arch, seed, i).knot_report().output_knots);
    let (max_observed, violations) = counts.fold((0usize, 0usize), |(max, bad), c| {
        (max.max(c), bad + usize::from(BigUint::from(c) > bound))
    });
    let tightness = arch.tightness();
    let gap = (tightness == Tightness::NotTight && BigUint::from(max_observed) <= bound)
        .then(|| (&bound - BigUint::from(max_observed)).to_string());
    Ok(StressReport {
        widths: arch.widths().to_vec(),
        trials,
        seed,
        bound: bound.to_string(),
        max_observed,
        violations,
        tightness: tightness.to_string(),
        gap,
        note: STRESS_NOTE,
    })
}
