//! Networks whose output has exactly the maximal number of knots.
//!
//! The construction chains sawtooth waves. The first hidden layer is combined
//! into a sawtooth with `n₁` knots; each further hidden layer but the last
//! folds every monotone segment of the incoming sawtooth into `n_i` new
//! teeth, so the knot count follows `m_i = (n_i + 1)·m_{i-1} + n_i`. The last
//! hidden layer only needs two (or more) neurons with opposite orientation:
//! one keeps the upper knots of the incoming wave, the other the lower ones,
//! and each cuts every segment once at its own threshold.
//!
//! A [`SawtoothWitness`] records which combination of a layer's neurons
//! forms the sawtooth fed to the next layer.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::bounds::{ineligibility_reason, recurrence_step, Architecture, IneligibilityReason};
use crate::network::{DenseLayer, ScalarInputNetwork};
use crate::rational::{int, ratio, sign_power, Rational};
use crate::spline::LinearSpline;

/// Multiplier applied to the incoming sawtooth by the last hidden layer.
/// Any positive value works; 7 reproduces the reference example network.
pub const OUTPUT_SCALE: i64 = 7;

/// Multiplier applied to the first-layer combination so that its oscillation
/// spans a unit range.
pub const FIRST_LAYER_SCALE: i64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("layer {layer} needs at least {required} neurons, got {width}")]
    TooNarrow {
        layer: usize,
        width: usize,
        required: usize,
    },
    #[error("incoming sawtooth has an empty oscillation range")]
    DegenerateRange,
    #[error("architecture cannot attain the knot bound: {0}")]
    Ineligible(IneligibilityReason),
    #[error("knot bound is only defined for scalar input")]
    NonScalarInput,
    #[error("output {output} has {found} knots, expected {expected}")]
    KnotCancellation {
        output: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SawtoothWitness {
    /// Weights on the layer's neuron outputs whose combination is the sawtooth.
    pub combination_weights: Vec<Rational>,
    pub expected_knots: usize,
    /// `(min, max)` of the sawtooth over its knots.
    pub oscillation_range: (Rational, Rational),
}

impl SawtoothWitness {
    /// The sawtooth as an exact spline, given the layer's neuron splines.
    pub fn combine(&self, neurons: &[LinearSpline]) -> LinearSpline {
        LinearSpline::affine_combine(self.combination_weights.iter().zip(neurons), &int(0))
    }

    fn range_width(&self) -> Result<Rational, ConstructError> {
        let (lo, hi) = &self.oscillation_range;
        if hi <= lo {
            return Err(ConstructError::DegenerateRange);
        }
        Ok(hi - lo)
    }
}

/// `3/2, -1, 1, -1, 1, …`: cumulative sums starting from `-1` alternate
/// between `1/2` and `-1/2`.
pub fn alternating_weights(n: usize) -> Vec<Rational> {
    (1..=n)
        .map(|j| match j {
            1 => ratio(3, 2),
            j if j % 2 == 0 => int(-1),
            _ => int(1),
        })
        .collect()
}

/// `-1` for the third neuron (1-based), which faces backwards; `1` otherwise.
fn orientation(k: usize) -> Rational {
    if k == 3 {
        int(-1)
    } else {
        int(1)
    }
}

fn first_layer_params(n1: usize) -> DenseLayer {
    let weights = (1..=n1).map(|j| alloc::vec![orientation(j)]).collect();
    let biases = (1..=n1)
        .map(|j| {
            let j = j as i64;
            if j == 3 {
                int(j - 1)
            } else {
                int(1 - j)
            }
        })
        .collect();
    DenseLayer::new(weights, biases).expect("n1 >= 1")
}

/// First hidden layer whose neurons place knots at `x = 0, …, n1 - 1` and can
/// be combined into a sawtooth oscillating between 4 and 5.
pub fn build_first_layer_sawtooth(
    n1: usize,
) -> Result<(DenseLayer, SawtoothWitness), ConstructError> {
    if n1 < 3 {
        return Err(ConstructError::TooNarrow {
            layer: 1,
            width: n1,
            required: 3,
        });
    }
    let scale = int(FIRST_LAYER_SCALE);
    let witness = SawtoothWitness {
        combination_weights: alternating_weights(n1)
            .into_iter()
            .map(|a| a * &scale)
            .collect(),
        expected_knots: n1,
        // the j = 3 neuron contributes the constant 2 (doubled): values alternate 4, 5, 4, …
        oscillation_range: (int(4), int(5)),
    };
    Ok((first_layer_params(n1), witness))
}

/// Hidden layer turning the incoming sawtooth into one with
/// `(n_i + 1)·m + n_i` knots, where `m` is the incoming count.
///
/// Neuron `k` computes `σ(±(ĝ - (2k - 1)/(2n_i + 1)))` with `ĝ` the incoming
/// sawtooth rescaled to oscillate in `[0, 1]`; the third neuron is reversed.
/// The new sawtooth oscillates between `4/(2n_i + 1)` and `5/(2n_i + 1)`
/// with consecutive knot values differing by `±1/(2n_i + 1)`.
pub fn build_inductive_layer(
    prev: &SawtoothWitness,
    n_i: usize,
) -> Result<(DenseLayer, SawtoothWitness), ConstructError> {
    build_inductive_layer_at(prev, n_i, 2)
}

fn build_inductive_layer_at(
    prev: &SawtoothWitness,
    n_i: usize,
    layer: usize,
) -> Result<(DenseLayer, SawtoothWitness), ConstructError> {
    if n_i < 3 {
        return Err(ConstructError::TooNarrow {
            layer,
            width: n_i,
            required: 3,
        });
    }
    let width = prev.range_width()?;
    let g_min = &prev.oscillation_range.0;
    let denom = 2 * n_i as i64 + 1;
    let mut weights = Vec::with_capacity(n_i);
    let mut biases = Vec::with_capacity(n_i);
    for k in 1..=n_i {
        let sign = orientation(k);
        weights.push(
            prev.combination_weights
                .iter()
                .map(|a| a / &width * &sign)
                .collect(),
        );
        let gamma = ratio(2 * k as i64 - 1, denom);
        biases.push(-(g_min / &width + gamma) * &sign);
    }
    let witness = SawtoothWitness {
        combination_weights: alternating_weights(n_i),
        expected_knots: (n_i + 1) * prev.expected_knots + n_i,
        oscillation_range: (ratio(4, denom), ratio(5, denom)),
    };
    Ok((
        DenseLayer::new(weights, biases).expect("shape is consistent"),
        witness,
    ))
}

/// Last hidden layer: neuron `k` computes
/// `σ((-1)^{k-1}·s·(g - t_k))` with `s = OUTPUT_SCALE`, `g` the incoming
/// sawtooth and `t_k = g_min + k·(g_max - g_min)/(n_l + 1)`.
pub fn build_final_layer(prev: &SawtoothWitness, n_l: usize) -> Result<DenseLayer, ConstructError> {
    build_final_layer_at(prev, n_l, 0)
}

fn build_final_layer_at(
    prev: &SawtoothWitness,
    n_l: usize,
    layer: usize,
) -> Result<DenseLayer, ConstructError> {
    if n_l < 2 {
        return Err(ConstructError::TooNarrow {
            layer,
            width: n_l,
            required: 2,
        });
    }
    let width = prev.range_width()?;
    let g_min = &prev.oscillation_range.0;
    let scale = int(OUTPUT_SCALE);
    let steps = int(n_l as i64 + 1);
    let mut weights = Vec::with_capacity(n_l);
    let mut biases = Vec::with_capacity(n_l);
    for k in 1..=n_l {
        let sign = sign_power(k - 1);
        weights.push(
            prev.combination_weights
                .iter()
                .map(|a| &scale * &sign * a)
                .collect(),
        );
        let threshold = g_min + &width * int(k as i64) / &steps;
        biases.push(-(&sign * &scale * threshold));
    }
    Ok(DenseLayer::new(weights, biases).expect("shape is consistent"))
}

/// Output layer with weights `(-1)^{j+k}` and biases `k - 1` (1-based).
fn output_layer(inputs: usize, p: usize) -> DenseLayer {
    let weights = (1..=p)
        .map(|k| (1..=inputs).map(|j| sign_power(j + k)).collect())
        .collect();
    let biases = (0..p).map(|k| int(k as i64)).collect();
    DenseLayer::new(weights, biases).expect("p >= 1")
}

/// A tight network together with the sawtooth witnesses of its hidden
/// layers (all but the last when the depth exceeds one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TightConstruction {
    pub network: ScalarInputNetwork,
    pub witnesses: Vec<SawtoothWitness>,
}

/// Builds a network whose every output has exactly `arch.knot_bound()` knots.
pub fn build_tight_network(arch: &Architecture) -> Result<ScalarInputNetwork, ConstructError> {
    build_tight_construction(arch).map(|c| c.network)
}

pub fn build_tight_construction(arch: &Architecture) -> Result<TightConstruction, ConstructError> {
    let bound = arch
        .knot_bound()
        .map_err(|_| ConstructError::NonScalarInput)?;
    if let Some(reason) = ineligibility_reason(arch.widths()) {
        return Err(ConstructError::Ineligible(reason));
    }
    let widths = arch.widths();
    let mut hidden = Vec::with_capacity(widths.len());
    let mut witnesses = Vec::new();
    if let [n1] = widths {
        // Distinct knots at 0..n1-1 are all a single layer needs.
        hidden.push(first_layer_params(*n1));
    } else {
        let (layer, mut witness) = build_first_layer_sawtooth(widths[0])?;
        hidden.push(layer);
        for (i, &n) in widths.iter().enumerate().take(widths.len() - 1).skip(1) {
            let (layer, next) = build_inductive_layer_at(&witness, n, i + 1)?;
            hidden.push(layer);
            witnesses.push(witness);
            witness = next;
        }
        hidden.push(build_final_layer_at(
            &witness,
            widths[widths.len() - 1],
            widths.len(),
        )?);
        witnesses.push(witness);
    }
    let network = ScalarInputNetwork::new(
        hidden,
        output_layer(widths[widths.len() - 1], arch.output_dim()),
    )
    .expect("construction is well-formed");

    let expected = bound.to_usize().unwrap_or(usize::MAX);
    let trace = network.extract();
    for (output, f) in trace.output_splines.components().iter().enumerate() {
        if f.knot_count() != expected {
            return Err(ConstructError::KnotCancellation {
                output,
                expected,
                found: f.knot_count(),
            });
        }
    }
    Ok(TightConstruction { network, witnesses })
}

/// The reference six-three-two network with two outputs, written out
/// parameter by parameter rather than through the layer builders.
pub fn reference_example_network() -> ScalarInputNetwork {
    let (n1, n2, n3, p) = (6usize, 3usize, 2usize, 2usize);
    let alpha = |j: usize| -> Rational {
        if j == 1 {
            ratio(3, 2)
        } else if j % 2 == 0 {
            int(-1)
        } else {
            int(1)
        }
    };
    let w1: Vec<Rational> = (1..=n1)
        .map(|k| if k == 3 { int(-1) } else { int(1) })
        .collect();
    let b1: Vec<Rational> = (1..=n1)
        .map(|k| {
            if k == 3 {
                int(k as i64 - 1)
            } else {
                int(1 - k as i64)
            }
        })
        .collect();
    let layer1 = DenseLayer::new(w1.iter().map(|w| alloc::vec![w.clone()]).collect(), b1).unwrap();

    let w2 = (1..=n2)
        .map(|k| (1..=n1).map(|j| int(2) * &w1[k - 1] * alpha(j)).collect())
        .collect();
    let b2 = (1..=n2)
        .map(|k| (int(-4) - ratio(2 * k as i64 - 1, 2 * n2 as i64 + 1)) * &w1[k - 1])
        .collect();
    let layer2 = DenseLayer::new(w2, b2).unwrap();

    let w3 = (1..=n3)
        .map(|k| {
            (1..=n2)
                .map(|j| int(7) * sign_power(k - 1) * alpha(j))
                .collect()
        })
        .collect();
    let b3 = (1..=n3)
        .map(|k| sign_power(k - 1) * (int(-4) - ratio(k as i64, n3 as i64 + 1)))
        .collect();
    let layer3 = DenseLayer::new(w3, b3).unwrap();

    let w4 = (1..=p)
        .map(|k| (1..=n3).map(|j| sign_power(j + k)).collect())
        .collect();
    let b4 = (1..=p).map(|k| int(k as i64 - 1)).collect();
    let output = DenseLayer::new(w4, b4).unwrap();

    ScalarInputNetwork::new(alloc::vec![layer1, layer2, layer3], output).unwrap()
}

/// Number of knots predicted by the recurrence for `widths`, as a machine
/// integer.
pub fn predicted_knots(widths: &[usize]) -> Option<usize> {
    widths
        .iter()
        .try_fold(BigUint::from(0u8), |m, &n| Some(recurrence_step(&m, n)))?
        .to_usize()
}
