//! Shared fixtures for the criterion benchmarks.

use drm_core::network::init_params;
use drm_core::problems::named_problem;
use drm_core::{Activation, EllipticProblem, InitScheme, NetworkArch, NetworkParams, SampleBatch};

/// A network with its parameters, a problem and a batch to evaluate on.
pub struct Fixture {
    pub arch: NetworkArch,
    pub params: NetworkParams,
    pub problem: EllipticProblem,
    pub batch: SampleBatch,
}

/// Uniform-width tanh network on a named problem with `n` interior and
/// boundary samples.
pub fn fixture(problem: &str, depth: usize, width: usize, n: usize) -> Fixture {
    let problem = named_problem(problem, None).expect("named problem");
    let arch =
        NetworkArch::uniform(problem.dim(), depth, width, Activation::Tanh, 4.0).expect("arch");
    let params = init_params(&arch, InitScheme::UniformScaled, 1);
    let batch = SampleBatch::draw(problem.domain(), n, n, 2).expect("batch");
    Fixture {
        arch,
        params,
        problem,
        batch,
    }
}
