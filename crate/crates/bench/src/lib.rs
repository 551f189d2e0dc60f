//! Fixtures shared by the benchmarks.

use palm_core::models::{simulate_lgcp, simulate_thomas};
use palm_core::{rng, GridPartition, LgcpParams, PointPattern, ThomasParams, Window};

/// LGCP pattern with about 300 points on the unit square.
pub fn lgcp_pattern(seed: u64) -> PointPattern {
    let grid = GridPartition::new(Window::unit_square(), 32, 32).unwrap();
    let p = LgcpParams::from_intensity(300.0, 1.0, 0.1).unwrap();
    simulate_lgcp(&p, None, &grid, &mut rng::from_seed(seed)).unwrap()
}

/// Thomas pattern with about 300 points on the unit square.
pub fn thomas_pattern(seed: u64) -> PointPattern {
    let p = ThomasParams::new(10.0, 30.0, 0.0025).unwrap();
    simulate_thomas(&p, &Window::unit_square(), &mut rng::from_seed(seed)).unwrap()
}
