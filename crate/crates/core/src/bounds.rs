//! The closed-form knot bound for an architecture, its layer recurrence,
//! tightness eligibility and parameter counts.
//!
//! For hidden widths `n₁ … n_l` the output of a scalar-input ReLU network has
//! at most
//!
//! ```text
//! Σ_{i=1..l} n_i · Π_{j=i+1..l} (n_j + 1)
//! ```
//!
//! knots, independent of the output dimension. Layer by layer the same
//! number is obtained from `m_i = (n_i + 1)·m_{i-1} + n_i` with `m_0 = 0`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("the knot bound only holds for scalar input, got input dimension {0}")]
    NonScalarInput(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    widths: Vec<usize>,
    output_dim: usize,
    input_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArchitectureError {
    #[error("an architecture needs at least one hidden layer")]
    NoHiddenLayers,
    #[error("hidden layer {layer} has width 0")]
    ZeroWidth { layer: usize },
    #[error("output dimension must be positive")]
    ZeroOutput,
    #[error("input dimension must be positive")]
    ZeroInput,
}

impl Architecture {
    /// Scalar-input architecture. Panics on invalid widths; see
    /// [`Architecture::try_new`] for the checked form.
    pub fn new(widths: Vec<usize>, output_dim: usize) -> Self {
        Self::try_new(widths, output_dim, 1).expect("invalid architecture")
    }

    pub fn try_new(
        widths: Vec<usize>,
        output_dim: usize,
        input_dim: usize,
    ) -> Result<Self, ArchitectureError> {
        if widths.is_empty() {
            return Err(ArchitectureError::NoHiddenLayers);
        }
        if let Some(layer) = widths.iter().position(|&n| n == 0) {
            return Err(ArchitectureError::ZeroWidth { layer: layer + 1 });
        }
        if output_dim == 0 {
            return Err(ArchitectureError::ZeroOutput);
        }
        if input_dim == 0 {
            return Err(ArchitectureError::ZeroInput);
        }
        Ok(Self {
            widths,
            output_dim,
            input_dim,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn require_scalar_input(&self) -> Result<(), BoundsError> {
        if self.input_dim == 1 {
            Ok(())
        } else {
            Err(BoundsError::NonScalarInput(self.input_dim))
        }
    }

    /// The closed-form bound on the number of output knots.
    pub fn knot_bound(&self) -> Result<BigUint, BoundsError> {
        self.require_scalar_input()?;
        let mut total = BigUint::zero();
        for (i, &n) in self.widths.iter().enumerate() {
            let tail: BigUint = self.widths[i + 1..]
                .iter()
                .map(|&m| BigUint::from(m + 1))
                .product();
            total += BigUint::from(n) * tail;
        }
        Ok(total)
    }

    /// Bounds after each hidden layer, obtained by folding
    /// [`recurrence_step`]. The last entry equals [`Architecture::knot_bound`].
    pub fn prefix_bounds(&self) -> Result<Vec<BigUint>, BoundsError> {
        self.require_scalar_input()?;
        let mut m = BigUint::zero();
        Ok(self
            .widths
            .iter()
            .map(|&n| {
                m = recurrence_step(&m, n);
                m.clone()
            })
            .collect())
    }

    /// Product of the widths, the leading-order approximation of the bound.
    pub fn approx_bound(&self) -> Result<BigUint, BoundsError> {
        self.require_scalar_input()?;
        Ok(self.widths.iter().map(|&n| BigUint::from(n)).product())
    }

    /// Number of weights and biases: `(q + 1)·n₁ + Σ (n_i + 1)·n_{i+1} + (n_l + 1)·p`.
    pub fn param_count(&self) -> BigUint {
        let mut count = BigUint::from(self.input_dim + 1) * self.widths[0];
        for w in self.widths.windows(2) {
            count += BigUint::from(w[0] + 1) * w[1];
        }
        count += BigUint::from(self.widths[self.widths.len() - 1] + 1) * self.output_dim;
        count
    }

    pub fn tightness(&self) -> Tightness {
        tightness_eligibility(&self.widths)
    }
}

/// One layer of the knot recurrence: `(n + 1)·m_prev + n`.
pub fn recurrence_step(m_prev: &BigUint, width: usize) -> BigUint {
    m_prev * BigUint::from(width + 1) + BigUint::from(width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tightness {
    /// A network of this shape attaining the bound exists and can be built.
    Tight,
    /// No network of this shape attains the bound.
    NotTight,
    Unknown,
}

impl Tightness {
    pub fn as_str(self) -> &'static str {
        match self {
            Tightness::Tight => "Tight",
            Tightness::NotTight => "NotTight",
            Tightness::Unknown => "Unknown",
        }
    }
}

impl core::fmt::Display for Tightness {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tight when all hidden layers but the last have at least three neurons and
/// the last has at least two (any single-layer network is tight). Not tight
/// for deeper networks with a narrower layer.
pub fn tightness_eligibility(widths: &[usize]) -> Tightness {
    let Some((&last, inner)) = widths.split_last() else {
        return Tightness::Unknown;
    };
    if inner.is_empty() {
        return if last >= 1 {
            Tightness::Tight
        } else {
            Tightness::Unknown
        };
    }
    if inner.iter().any(|&n| n < 3) || last == 1 {
        Tightness::NotTight
    } else if last >= 2 {
        Tightness::Tight
    } else {
        Tightness::Unknown
    }
}

/// Why [`tightness_eligibility`] rejected an architecture, or `None` if it is
/// tight.
pub fn ineligibility_reason(widths: &[usize]) -> Option<IneligibilityReason> {
    match tightness_eligibility(widths) {
        Tightness::Tight => None,
        Tightness::Unknown => Some(IneligibilityReason::Unknown),
        Tightness::NotTight => {
            let (&last, inner) = widths.split_last()?;
            match inner.iter().position(|&n| n < 3) {
                Some(i) => Some(IneligibilityReason::NarrowInnerLayer {
                    layer: i + 1,
                    width: inner[i],
                }),
                None => {
                    debug_assert_eq!(last, 1);
                    Some(IneligibilityReason::SingleFinalNeuron)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IneligibilityReason {
    #[error(
        "hidden layer {layer} has n_{layer} = {width} < 3 neurons; a sawtooth \
         with alternating slopes cannot be formed, so the bound is not attainable"
    )]
    NarrowInnerLayer { layer: usize, width: usize },
    #[error(
        "the final hidden layer has n_l = 1 neuron; one neuron cannot both keep every \
         incoming knot and create new ones, so the bound is not attainable"
    )]
    SingleFinalNeuron,
    #[error("tightness of this architecture is not established")]
    Unknown,
}
