//! Shared setup for the benchmarks.

use crestim::{fixtures, FemSolution, Mesh};

/// The cantilever fixture refined `levels` times, with its solution.
pub fn cantilever(levels: usize) -> (Mesh, FemSolution) {
    let f = fixtures::cantilever_sensor().refined(levels);
    let sol = f.solve().expect("fixture solves");
    (f.mesh, sol)
}
