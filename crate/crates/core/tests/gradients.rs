mod common;

use common::grad::{agent_networks, worst_relative_error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snla::nnopt::DenseNet;

#[test]
fn all_agent_network_shapes_pass_finite_differences() {
    let nets = agent_networks();
    assert_eq!(nets.len(), 4);
    for (name, net) in &nets {
        let err = worst_relative_error(net, 100, 5);
        assert!(err < 1e-4, "{name}: worst relative error {err:e}");
    }
}

#[test]
fn small_deep_network_passes_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = DenseNet::new(&[3, 7, 5, 6, 2], &mut rng).unwrap();
    let err = worst_relative_error(&net, 60, 1);
    assert!(err < 1e-6, "{err:e}");
}
