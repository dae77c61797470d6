use proptest::prelude::*;
use relu_knots_core::construct::reference_example_network;
use relu_knots_core::rational::{int, ratio};
use relu_knots_core::{DenseLayer, Rational, ScalarInputNetwork};

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-100i64..=100, 1i64..=10).prop_map(|(n, d)| ratio(n, d))
}

fn arb_layer(inputs: usize, neurons: usize) -> impl Strategy<Value = DenseLayer> {
    (
        proptest::collection::vec(proptest::collection::vec(arb_rational(), inputs), neurons),
        proptest::collection::vec(arb_rational(), neurons),
    )
        .prop_map(|(w, b)| DenseLayer::new(w, b).unwrap())
}

fn arb_network() -> impl Strategy<Value = ScalarInputNetwork> {
    (proptest::collection::vec(1usize..=4, 1..=3), 1usize..=2).prop_flat_map(|(widths, p)| {
        let mut inputs = 1;
        let layers: Vec<_> = widths
            .iter()
            .map(|&n| {
                let l = arb_layer(inputs, n);
                inputs = n;
                l
            })
            .collect();
        (layers, arb_layer(inputs, p))
            .prop_map(|(hidden, out)| ScalarInputNetwork::new(hidden, out).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extraction_agrees_with_forward_pass(net in arb_network(), xs in proptest::collection::vec(arb_rational(), 50)) {
        let trace = net.extract();
        for x in &xs {
            prop_assert_eq!(net.evaluate(x), trace.output_splines.eval(x));
        }
        // knots of every layer too
        for knots in &trace.per_layer_knot_union {
            for x in knots {
                prop_assert_eq!(net.evaluate(x), trace.output_splines.eval(x));
            }
        }
    }

    #[test]
    fn knot_counts_respect_layer_budget_and_bound(net in arb_network()) {
        let trace = net.extract();
        let counts = trace.layer_knot_counts();
        let widths = net.widths();
        let mut prev = 0usize;
        for (&m, &n) in counts.iter().zip(&widths) {
            prop_assert!(m <= (n + 1) * prev + n, "layer count {} exceeds budget from {} with width {}", m, prev, n);
            prev = m;
        }
        let report = net.knot_report();
        prop_assert!(num_bigint::BigUint::from(report.output_knots) <= report.bound);
        // the output layer cannot create knots
        let last = trace.per_layer_knot_union.last().unwrap();
        for k in trace.output_knot_union() {
            prop_assert!(last.binary_search(&k).is_ok());
        }
    }

    #[test]
    fn trace_shapes_match_network(net in arb_network()) {
        let trace = net.extract();
        prop_assert_eq!(trace.per_layer_neuron_splines.len(), net.depth());
        for (splines, n) in trace.per_layer_neuron_splines.iter().zip(net.widths()) {
            prop_assert_eq!(splines.len(), n);
            let mut union = splines.knot_union();
            union.dedup();
            prop_assert!(union.windows(2).all(|w| w[0] < w[1]));
        }
        prop_assert_eq!(trace.output_splines.len(), net.output_dim());
    }
}

#[test]
fn reference_network_forward_pass() {
    // hand evaluation of the reference parameters
    let net = reference_example_network();
    assert_eq!(net.evaluate(&int(0)), vec![ratio(2, 3), ratio(1, 3)]);
    assert_eq!(net.evaluate(&int(-1)), vec![ratio(25, 6), ratio(-19, 6)]);
    assert_eq!(net.evaluate(&ratio(5, 2)), vec![ratio(5, 12), ratio(7, 12)]);
}

#[test]
fn reference_network_knot_counts() {
    let net = reference_example_network();
    let trace = net.extract();
    assert_eq!(trace.layer_knot_counts(), vec![6, 27, 83]);
    assert_eq!(
        trace.per_layer_knot_union[0],
        (0..6).map(int).collect::<Vec<_>>()
    );
    let report = net.knot_report();
    assert_eq!(report.output_knots, 83);
    assert_eq!(report.per_output_knots, vec![83, 83]);
    assert!(report.meets_bound);
    assert_eq!(trace.output_splines.components()[0].knots().len(), 83);
}

#[test]
fn reference_network_dense_agreement() {
    let net = reference_example_network();
    let trace = net.extract();
    for i in -300..=1000 {
        let x = ratio(i, 137);
        assert_eq!(net.evaluate(&x), trace.output_splines.eval(&x));
    }
}
