//! The network JSON schema.
//!
//! ```json
//! { "p": 1,
//!   "hidden_layers": [ { "weights": [["1"], ["-1/2"]], "biases": ["0", "3/4"] } ],
//!   "output_layer": { "weights": [["1", "1"]], "biases": ["0"] } }
//! ```
//!
//! Rationals are strings `"num/den"`, or `"num"` for integers; plain JSON
//! integers are accepted on input. Output is always reduced.

use std::fmt;

use relu_knots_core::rational::{self, Rational};
use relu_knots_core::{DenseLayer, NetworkError, ScalarInputNetwork};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A rational that serializes as its exact string form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactString(pub Rational);

impl Serialize for ExactString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ExactString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RationalVisitor;

        impl Visitor<'_> for RationalVisitor {
            type Value = ExactString;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string like \"-3/4\" or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExactString, E> {
                rational::parse(v).map(ExactString).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExactString, E> {
                Ok(ExactString(rational::int(v)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExactString, E> {
                Ok(ExactString(Rational::from_integer(v.into())))
            }
        }

        deserializer.deserialize_any(RationalVisitor)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub weights: Vec<Vec<ExactString>>,
    pub biases: Vec<ExactString>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub p: usize,
    pub hidden_layers: Vec<LayerFile>,
    pub output_layer: LayerFile,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LoadError {
    fn schema(path: impl Into<String>, message: impl fmt::Display) -> Self {
        LoadError::Schema {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

fn layer_from_file(file: &LayerFile, path: &str) -> Result<DenseLayer, LoadError> {
    let unwrap = |v: &[ExactString]| v.iter().map(|r| r.0.clone()).collect::<Vec<_>>();
    let weights = file.weights.iter().map(|row| unwrap(row)).collect();
    DenseLayer::new(weights, unwrap(&file.biases)).map_err(|e| match e {
        NetworkError::EmptyLayer => {
            LoadError::schema(format!("{path}.weights"), "layer has no neurons")
        }
        NetworkError::RaggedRow {
            row,
            expected,
            found,
        } => LoadError::schema(
            format!("{path}.weights[{row}]"),
            format!("expected {expected} weights, found {found}"),
        ),
        NetworkError::BiasCount { rows, biases } => LoadError::schema(
            format!("{path}.biases"),
            format!("expected {rows} biases, found {biases}"),
        ),
        other => LoadError::schema(path, other),
    })
}

impl NetworkFile {
    pub fn from_network(net: &ScalarInputNetwork) -> Self {
        let layer = |l: &DenseLayer| LayerFile {
            weights: l
                .weights()
                .iter()
                .map(|row| row.iter().cloned().map(ExactString).collect())
                .collect(),
            biases: l.biases().iter().cloned().map(ExactString).collect(),
        };
        NetworkFile {
            p: net.output_dim(),
            hidden_layers: net.hidden_layers().iter().map(layer).collect(),
            output_layer: layer(net.output_layer()),
        }
    }

    pub fn to_network(&self) -> Result<ScalarInputNetwork, LoadError> {
        if self.hidden_layers.is_empty() {
            return Err(LoadError::schema(
                "hidden_layers",
                "at least one hidden layer is required",
            ));
        }
        let mut hidden = Vec::with_capacity(self.hidden_layers.len());
        let mut width = 1;
        for (i, file) in self.hidden_layers.iter().enumerate() {
            let path = format!("hidden_layers[{i}]");
            let layer = layer_from_file(file, &path)?;
            check_inputs(&layer, width, &path)?;
            width = layer.neurons();
            hidden.push(layer);
        }
        let output = layer_from_file(&self.output_layer, "output_layer")?;
        check_inputs(&output, width, "output_layer")?;
        if output.neurons() != self.p {
            return Err(LoadError::schema(
                "p",
                format!(
                    "p = {} but output_layer has {} rows",
                    self.p,
                    output.neurons()
                ),
            ));
        }
        Ok(ScalarInputNetwork::new(hidden, output).expect("shapes checked above"))
    }
}

fn check_inputs(layer: &DenseLayer, expected: usize, path: &str) -> Result<(), LoadError> {
    if layer.inputs() == expected {
        return Ok(());
    }
    Err(LoadError::schema(
        format!("{path}.weights[0]"),
        format!(
            "layer takes {} inputs, expected {expected}{}",
            layer.inputs(),
            if expected == 1 { " (scalar input)" } else { "" }
        ),
    ))
}

pub fn parse_network(json: &str) -> Result<ScalarInputNetwork, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let file: NetworkFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        LoadError::schema(if path == "." { "$".into() } else { path }, e.into_inner())
    })?;
    file.to_network()
}

pub fn load_network(path: &std::path::Path) -> Result<ScalarInputNetwork, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_network(&text)
}

pub fn network_to_json(net: &ScalarInputNetwork) -> String {
    serde_json::to_string_pretty(&NetworkFile::from_network(net)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use relu_knots_core::construct::reference_example_network;
    use relu_knots_core::rational::{int, ratio};

    #[test]
    fn round_trips_reference_network() {
        let net = reference_example_network();
        let json = network_to_json(&net);
        assert!(json.contains("\"-29/7\""));
        assert_eq!(parse_network(&json).unwrap(), net);
    }

    #[test]
    fn accepts_integers_and_unreduced_strings() {
        let net = parse_network(
            r#"{"p": 1, "hidden_layers": [{"weights": [[2], ["-4/6"]], "biases": ["0", 1]}],
                "output_layer": {"weights": [["1", "1"]], "biases": ["0"]}}"#,
        )
        .unwrap();
        assert_eq!(net.hidden_layers()[0].weights()[1][0], ratio(-2, 3));
        assert_eq!(net.hidden_layers()[0].biases()[1], int(1));
    }

    fn schema_error(json: &str) -> (String, String) {
        match parse_network(json).unwrap_err() {
            LoadError::Schema { path, message } => (path, message),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_rational_reports_path() {
        let (path, message) = schema_error(
            r#"{"p": 1, "hidden_layers": [{"weights": [["1"], ["x"]], "biases": ["0", "0"]}],
                "output_layer": {"weights": [["1", "1"]], "biases": ["0"]}}"#,
        );
        assert_eq!(path, "hidden_layers[0].weights[1][0]");
        assert!(message.contains("invalid rational"), "{message}");

        let (path, _) = schema_error(
            r#"{"p": 1, "hidden_layers": [{"weights": [["1"]], "biases": ["1/0"]}],
                "output_layer": {"weights": [["1"]], "biases": ["0"]}}"#,
        );
        assert_eq!(path, "hidden_layers[0].biases[0]");
    }

    #[test]
    fn shape_errors_report_path() {
        let (path, _) = schema_error(
            r#"{"p": 1, "hidden_layers": [{"weights": [["1"], ["1"]], "biases": ["0"]}],
                "output_layer": {"weights": [["1", "1"]], "biases": ["0"]}}"#,
        );
        assert_eq!(path, "hidden_layers[0].biases");

        let (path, message) = schema_error(
            r#"{"p": 1, "hidden_layers": [{"weights": [["1", "2"]], "biases": ["0"]}],
                "output_layer": {"weights": [["1"]], "biases": ["0"]}}"#,
        );
        assert_eq!(path, "hidden_layers[0].weights[0]");
        assert!(message.contains("scalar input"));

        let (path, _) = schema_error(
            r#"{"p": 1, "hidden_layers": [{"weights": [["1"], ["1"]], "biases": ["0", "0"]}],
                "output_layer": {"weights": [["1", "1"], ["1"]], "biases": ["0", "0"]}}"#,
        );
        assert_eq!(path, "output_layer.weights[1]");

        let (path, _) = schema_error(
            r#"{"p": 3, "hidden_layers": [{"weights": [["1"]], "biases": ["0"]}],
                "output_layer": {"weights": [["1"]], "biases": ["0"]}}"#,
        );
        assert_eq!(path, "p");

        let (path, _) = schema_error(
            r#"{"p": 1, "hidden_layers": [], "output_layer": {"weights": [["1"]], "biases": ["0"]}}"#,
        );
        assert_eq!(path, "hidden_layers");
    }

    #[test]
    fn missing_and_unknown_fields() {
        let (path, message) = schema_error(r#"{"p": 1, "hidden_layers": []}"#);
        assert_eq!(path, "$");
        assert!(message.contains("output_layer"), "{message}");
        let (path, _) = schema_error(
            r#"{"p": 1, "hidden_layers": [{"weights": [["1"]], "biases": ["0"], "extra": 1}],
                "output_layer": {"weights": [["1"]], "biases": ["0"]}}"#,
        );
        assert_eq!(path, "hidden_layers[0].extra");
    }
}
