//! Fixtures shared by the benchmarks in `benches/`.

use shapeflow::interval_flow::{Interval, IntervalUnion};
use shapeflow::shapes::{self, Builtin};
use shapeflow::RasterDomain;

/// Unit disk on a grid of cell size `h`.
pub fn disk(h: f64) -> RasterDomain {
    let b = Builtin::Disk { r: 1.0 };
    b.build(b.default_grid(h, 0.125).unwrap()).unwrap()
}

/// Default notched rectangle on a box that holds all its symmetrals.
pub fn notched(h: f64) -> RasterDomain {
    let b = Builtin::by_name("notched").unwrap();
    b.build(b.default_grid(h, 0.125).unwrap()).unwrap()
}

/// L-shape with arm length 1.
pub fn l_shape(h: f64) -> RasterDomain {
    shapes::l_shape(shapes::centered_grid(1.1, 1.1, h).unwrap(), 1.0)
}

/// `n` intervals of varying length and spacing, so the flow has `n - 1`
/// merge events at distinct times.
pub fn comb(n: usize) -> IntervalUnion {
    let mut x = 0.0;
    let parts = (0..n)
        .map(|k| {
            let len = 0.5 + 0.37 * ((k * 7) % 11) as f64 / 11.0;
            let i = Interval::new(x, x + len).unwrap();
            x += len + 0.2 + 0.8 * ((k * 5) % 13) as f64 / 13.0;
            i
        })
        .collect();
    IntervalUnion::new(parts).unwrap()
}
