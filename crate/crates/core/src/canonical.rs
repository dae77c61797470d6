//! Rewriting a one-hidden-layer network so that every ReLU faces forward.
//!
//! Using `σ(z) = σ(-z) + z`, each neuron `σ(w·x + b)` with `w < 0` becomes
//! `|w|·σ(x - x_j) + w·x + b` with `x_j = -b/w`, so output `k` takes the form
//!
//! ```text
//! y_k(x) = Σ_j s_kj · σ(x - x_j) + c1_k · x + c0_k
//! ```
//!
//! with `s_kj = w2_kj·|w1_j|`, `c1_k = Σ_{w1_j<0} w2_kj·w1_j` and
//! `c0_k = Σ_{w1_j<0} w2_kj·b1_j + b2_k`.
//!
//! Neurons with zero input weight output the constant `σ(b1_j)`; they are
//! folded into `c0_k` and reported in [`CanonicalShallowForm::folded_neurons`].

use alloc::vec::Vec;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::network::ScalarInputNetwork;
use crate::rational::{self, Rational};
use crate::spline::{LinearSpline, VectorSpline};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalError {
    #[error("forward-facing form requires exactly one hidden layer, network has {0}")]
    Depth(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalShallowForm {
    /// Ray origins `x_j`, ascending. Ties keep the original neuron order.
    pub knot_locations: Vec<Rational>,
    /// `s_kj`, one row per output, columns aligned with `knot_locations`.
    pub ray_slopes: Vec<Vec<Rational>>,
    pub line_slope: Vec<Rational>,
    pub line_intercept: Vec<Rational>,
    /// Original (0-based) indices of hidden neurons with zero input weight.
    pub folded_neurons: Vec<usize>,
    /// Original (0-based) hidden neuron index for each column.
    pub source_neurons: Vec<usize>,
}

impl CanonicalShallowForm {
    pub fn from_network(net: &ScalarInputNetwork) -> Result<Self, CanonicalError> {
        let [hidden] = net.hidden_layers() else {
            return Err(CanonicalError::Depth(net.depth()));
        };
        let out = net.output_layer();
        let p = out.neurons();
        let mut line_slope = alloc::vec![rational::zero(); p];
        let mut line_intercept: Vec<Rational> = out.biases().to_vec();
        let mut folded_neurons = Vec::new();
        let mut columns: Vec<(Rational, usize)> = Vec::new();

        for (j, (w_row, b)) in hidden.weights().iter().zip(hidden.biases()).enumerate() {
            let w = &w_row[0];
            if w.is_zero() {
                let constant = rational::relu(b);
                for (k, row) in out.weights().iter().enumerate() {
                    line_intercept[k] += &row[j] * &constant;
                }
                folded_neurons.push(j);
                continue;
            }
            if w.is_negative() {
                for (k, row) in out.weights().iter().enumerate() {
                    line_slope[k] += &row[j] * w;
                    line_intercept[k] += &row[j] * b;
                }
            }
            columns.push((-(b / w), j));
        }
        // stable: equal locations keep neuron order
        columns.sort_by(|a, b| a.0.cmp(&b.0));

        let ray_slopes = out
            .weights()
            .iter()
            .map(|row| {
                columns
                    .iter()
                    .map(|&(_, j)| &row[j] * hidden.weights()[j][0].abs())
                    .collect()
            })
            .collect();
        let (knot_locations, source_neurons) = columns.into_iter().unzip();
        Ok(Self {
            knot_locations,
            ray_slopes,
            line_slope,
            line_intercept,
            folded_neurons,
            source_neurons,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.line_slope.len()
    }

    pub fn eval(&self, x: &Rational) -> Vec<Rational> {
        let rays: Vec<Rational> = self
            .knot_locations
            .iter()
            .map(|xj| rational::relu(&(x - xj)))
            .collect();
        self.ray_slopes
            .iter()
            .zip(self.line_slope.iter().zip(&self.line_intercept))
            .map(|(row, (c1, c0))| {
                rational::affine_sum(c0, row.iter().zip(&rays).chain(core::iter::once((c1, x))))
            })
            .collect()
    }

    /// The same function as exact splines.
    pub fn to_splines(&self) -> VectorSpline {
        let components = self
            .ray_slopes
            .iter()
            .zip(self.line_slope.iter().zip(&self.line_intercept))
            .map(|(row, (c1, c0))| {
                LinearSpline::from_parts(
                    c1.clone(),
                    c0.clone(),
                    self.knot_locations.iter().cloned().zip(row.iter().cloned()),
                )
            })
            .collect();
        VectorSpline::new(components).expect("output layer is nonempty")
    }
}

pub fn to_forward_facing(net: &ScalarInputNetwork) -> Result<CanonicalShallowForm, CanonicalError> {
    CanonicalShallowForm::from_network(net)
}
