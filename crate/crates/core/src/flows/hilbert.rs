//! Hilbert curve on a `2^k × 2^k` lattice of subsquares.
//!
//! The curve of order `k` visits subsquare `d` on the parameter interval
//! `[d/4^k, (d+1)/4^k]` and starts in the lower-left subsquare, ending in
//! the lower-right one.

use crate::sections::Axis;

pub const MAX_ORDER: u32 = 15;

fn rot(n: u64, x: &mut u64, y: &mut u64, rx: bool, ry: bool) {
    if !ry {
        if rx {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

/// Position along the curve of subsquare `(x, y)` on a lattice of side `n = 2^k`.
pub fn xy2d(n: u64, mut x: u64, mut y: u64) -> u64 {
    let mut d = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = x & s > 0;
        let ry = y & s > 0;
        d += s * s * ((3 * rx as u64) ^ ry as u64);
        rot(n, &mut x, &mut y, rx, ry);
        s /= 2;
    }
    d
}

/// Subsquare visited at position `d`.
pub fn d2xy(n: u64, d: u64) -> (u64, u64) {
    let (mut x, mut y) = (0, 0);
    let mut t = d;
    let mut s = 1;
    while s < n {
        let rx = 1 & (t / 2) > 0;
        let ry = 1 & (t ^ rx as u64) > 0;
        rot(s, &mut x, &mut y, rx, ry);
        x += s * rx as u64;
        y += s * ry as u64;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

/// Curve of order `k` laid over a square of `side` grid cells, optionally
/// mirrored so that it starts at another corner.
#[derive(Debug, Clone, Copy)]
pub struct Subdivision {
    n: u64,
    side: u64,
    flip_x: bool,
    flip_y: bool,
}

impl Subdivision {
    pub fn new(order: u32, side: u64, flip_x: bool, flip_y: bool) -> Self {
        Self {
            n: 1 << order,
            side: side.max(1),
            flip_x,
            flip_y,
        }
    }

    fn index(&self, a: u64, b: u64) -> u64 {
        let a = if self.flip_x { self.n - 1 - a } else { a };
        let b = if self.flip_y { self.n - 1 - b } else { b };
        xy2d(self.n, a, b)
    }

    /// Subsquare rows or columns meeting the open grid interval `(u, u+1)`.
    fn span(&self, u: i64) -> Option<(u64, u64)> {
        if u < 0 || u as u64 >= self.side {
            return None;
        }
        let u = u as u64;
        let lo = u * self.n / self.side;
        let hi = ((u + 1) * self.n).div_ceil(self.side) - 1;
        Some((lo, hi))
    }

    /// Subsquare columns adjacent to the grid line `x = u`.
    fn adjacent(&self, u: i64) -> Vec<u64> {
        if u < 0 || u as u64 > self.side {
            return Vec::new();
        }
        let num = u as u64 * self.n;
        let a = num / self.side;
        let mut out = Vec::with_capacity(2);
        if num.is_multiple_of(self.side) {
            if a > 0 {
                out.push(a - 1);
            }
            if a < self.n {
                out.push(a);
            }
        } else {
            out.push(a);
        }
        out
    }

    /// Smallest prefix length whose subsquares cover grid cell `(u, v)` of the square.
    pub fn cell_cover(&self, u: i64, v: i64) -> u64 {
        let (Some((a0, a1)), Some((b0, b1))) = (self.span(u), self.span(v)) else {
            return u64::MAX;
        };
        let mut worst = 0;
        for b in b0..=b1 {
            for a in a0..=a1 {
                worst = worst.max(self.index(a, b) + 1);
            }
        }
        worst
    }

    /// Smallest prefix length covering a unit face: the segment from `(u, v)`
    /// to `(u, v+1)` for [`Axis::X`], from `(u, v)` to `(u+1, v)` for [`Axis::Y`].
    pub fn face_cover(&self, u: i64, v: i64, axis: Axis) -> u64 {
        let (line, along) = match axis {
            Axis::X => (u, v),
            Axis::Y => (v, u),
        };
        let Some((c0, c1)) = self.span(along) else {
            return u64::MAX;
        };
        let sides = self.adjacent(line);
        if sides.is_empty() {
            return u64::MAX;
        }
        let mut worst = 0;
        for c in c0..=c1 {
            let best = sides
                .iter()
                .map(|&s| match axis {
                    Axis::X => self.index(s, c) + 1,
                    Axis::Y => self.index(c, s) + 1,
                })
                .min()
                .unwrap();
            worst = worst.max(best);
        }
        worst
    }
}
