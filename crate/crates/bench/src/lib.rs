//! Fixtures shared by the kernel benchmarks in `benches/`.

use carleman_core::field_kit::{make_grid, FnSpec, Grid};
use carleman_core::identity::{random_case, RandomCase};
use carleman_core::solver::WaveState;
use carleman_core::SymMatrix;

/// First `count` cases of the randomized identity suite.
pub fn identity_cases(count: usize) -> Vec<RandomCase> {
    (0..count).map(|i| random_case(7, i).expect("suite case")).collect()
}

/// Symmetric `n × n` matrix with entries `cos(i + 2j) + cos(j + 2i)`.
pub fn test_matrix(n: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let (a, b) = (i as f64, j as f64);
            m.set(i, j, (a + 2.0 * b).cos() + (b + 2.0 * a).cos());
        }
    }
    m
}

/// Square 2-D grid with `cells` cells per side and a smooth bump as data.
pub fn wave_fixture(cells: usize) -> (Grid, WaveState) {
    let dx = 2.0 / cells as f64;
    let grid = make_grid(&[(-1.0, 1.0), (-1.0, 1.0)], dx, 0.5 * dx, 1.0, None).expect("grid");
    let bump = FnSpec::SpatialBump { center: vec![0.0, 0.0], radius: 0.5, power: 4 };
    let state = WaveState::from_fns(&grid, &bump, &FnSpec::constant(0.0));
    (grid, state)
}
