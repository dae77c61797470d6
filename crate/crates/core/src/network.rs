//! Fully connected ReLU networks with scalar input and their exact spline
//! extraction.

use alloc::vec::Vec;

use num_bigint::BigUint;
use thiserror::Error;

use crate::bounds::{Architecture, Tightness};
use crate::rational::{self, Rational};
use crate::spline::{LinearSpline, VectorSpline};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("layer has no neurons")]
    EmptyLayer,
    #[error("row {row} has {found} weights, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer has {rows} neurons but {biases} biases")]
    BiasCount { rows: usize, biases: usize },
    #[error("a network needs at least one hidden layer")]
    NoHiddenLayers,
    #[error("{layer} takes {found} inputs, expected {expected}")]
    WidthMismatch {
        layer: LayerId,
        expected: usize,
        found: usize,
    },
}

/// Identifies a layer in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerId {
    /// 1-based hidden layer index.
    Hidden(usize),
    Output,
}

impl core::fmt::Display for LayerId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LayerId::Hidden(i) => write!(f, "hidden layer {i}"),
            LayerId::Output => f.write_str("output layer"),
        }
    }
}

/// An affine map `ℝ^{inputs} → ℝ^{neurons}`; row `k` of `weights` feeds
/// neuron `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseLayer {
    weights: Vec<Vec<Rational>>,
    biases: Vec<Rational>,
}

impl DenseLayer {
    pub fn new(weights: Vec<Vec<Rational>>, biases: Vec<Rational>) -> Result<Self, NetworkError> {
        let Some(first) = weights.first() else {
            return Err(NetworkError::EmptyLayer);
        };
        let expected = first.len();
        if expected == 0 {
            return Err(NetworkError::RaggedRow {
                row: 0,
                expected: 1,
                found: 0,
            });
        }
        if let Some((row, r)) = weights
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != expected)
        {
            return Err(NetworkError::RaggedRow {
                row,
                expected,
                found: r.len(),
            });
        }
        if biases.len() != weights.len() {
            return Err(NetworkError::BiasCount {
                rows: weights.len(),
                biases: biases.len(),
            });
        }
        Ok(Self { weights, biases })
    }

    pub fn weights(&self) -> &[Vec<Rational>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Rational] {
        &self.biases
    }

    pub fn neurons(&self) -> usize {
        self.weights.len()
    }

    pub fn inputs(&self) -> usize {
        self.weights[0].len()
    }

    fn apply(&self, input: &[Rational]) -> Vec<Rational> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| rational::affine_sum(b, row.iter().zip(input)))
            .collect()
    }

    /// Row `k` applied to the input splines, without activation.
    fn combine_splines(&self, inputs: &[LinearSpline]) -> Vec<LinearSpline> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| LinearSpline::affine_combine(row.iter().zip(inputs), b))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarInputNetwork {
    hidden_layers: Vec<DenseLayer>,
    output_layer: DenseLayer,
}

impl ScalarInputNetwork {
    pub fn new(
        hidden_layers: Vec<DenseLayer>,
        output_layer: DenseLayer,
    ) -> Result<Self, NetworkError> {
        if hidden_layers.is_empty() {
            return Err(NetworkError::NoHiddenLayers);
        }
        let mut width = 1;
        for (i, layer) in hidden_layers.iter().enumerate() {
            if layer.inputs() != width {
                return Err(NetworkError::WidthMismatch {
                    layer: LayerId::Hidden(i + 1),
                    expected: width,
                    found: layer.inputs(),
                });
            }
            width = layer.neurons();
        }
        if output_layer.inputs() != width {
            return Err(NetworkError::WidthMismatch {
                layer: LayerId::Output,
                expected: width,
                found: output_layer.inputs(),
            });
        }
        Ok(Self {
            hidden_layers,
            output_layer,
        })
    }

    pub fn hidden_layers(&self) -> &[DenseLayer] {
        &self.hidden_layers
    }

    pub fn output_layer(&self) -> &DenseLayer {
        &self.output_layer
    }

    pub fn depth(&self) -> usize {
        self.hidden_layers.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.hidden_layers.iter().map(DenseLayer::neurons).collect()
    }

    pub fn output_dim(&self) -> usize {
        self.output_layer.neurons()
    }

    pub fn architecture(&self) -> Architecture {
        Architecture::new(self.widths(), self.output_dim())
    }

    /// Exact forward pass.
    pub fn evaluate(&self, x: &Rational) -> Vec<Rational> {
        let mut activations = alloc::vec![x.clone()];
        for layer in &self.hidden_layers {
            activations = layer
                .apply(&activations)
                .iter()
                .map(rational::relu)
                .collect();
        }
        self.output_layer.apply(&activations)
    }

    /// The exact splines computed by every neuron and output.
    pub fn extract(&self) -> ExtractionTrace {
        let mut inputs = alloc::vec![LinearSpline::line(rational::one(), rational::zero())];
        let mut per_layer = Vec::with_capacity(self.hidden_layers.len());
        for layer in &self.hidden_layers {
            let neurons: Vec<LinearSpline> = layer
                .combine_splines(&inputs)
                .iter()
                .map(LinearSpline::relu)
                .collect();
            per_layer.push(VectorSpline::new(neurons.clone()).expect("layers are nonempty"));
            inputs = neurons;
        }
        let outputs = VectorSpline::new(self.output_layer.combine_splines(&inputs))
            .expect("layers are nonempty");
        let per_layer_knot_union = per_layer.iter().map(VectorSpline::knot_union).collect();
        ExtractionTrace {
            per_layer_neuron_splines: per_layer,
            output_splines: outputs,
            per_layer_knot_union,
        }
    }

    pub fn knot_report(&self) -> KnotReport {
        KnotReport::from_trace(&self.architecture(), &self.extract())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionTrace {
    /// Post-activation splines of every neuron, one entry per hidden layer.
    pub per_layer_neuron_splines: Vec<VectorSpline>,
    pub output_splines: VectorSpline,
    /// Sorted, deduplicated knot locations over each hidden layer's neurons.
    pub per_layer_knot_union: Vec<Vec<Rational>>,
}

impl ExtractionTrace {
    pub fn layer_knot_counts(&self) -> Vec<usize> {
        self.per_layer_knot_union.iter().map(Vec::len).collect()
    }

    pub fn output_knot_union(&self) -> Vec<Rational> {
        self.output_splines.knot_union()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotReport {
    pub layer_knot_counts: Vec<usize>,
    pub per_output_knots: Vec<usize>,
    /// Distinct knot locations over all outputs.
    pub output_knots: usize,
    pub bound: BigUint,
    pub meets_bound: bool,
    pub tightness: Tightness,
}

impl KnotReport {
    pub fn from_trace(arch: &Architecture, trace: &ExtractionTrace) -> Self {
        let bound = arch.knot_bound().expect("networks have scalar input");
        let output_knots = trace.output_knot_union().len();
        Self {
            layer_knot_counts: trace.layer_knot_counts(),
            per_output_knots: trace
                .output_splines
                .components()
                .iter()
                .map(LinearSpline::knot_count)
                .collect(),
            output_knots,
            meets_bound: BigUint::from(output_knots) == bound,
            bound,
            tightness: arch.tightness(),
        }
    }
}
