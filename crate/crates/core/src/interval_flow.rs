//! Continuous Steiner symmetrization on the line.
//!
//! A single interval `]a,b[` flows by contracting its center towards the
//! origin at rate `e^{-t}` while keeping its length. A finite union of
//! disjoint intervals flows part by part until two parts touch; touching
//! parts merge and keep flowing as one interval. At `t = ∞` every union
//! becomes the centered interval `]-L/2, L/2[` of the same total length.
//!
//! Everything here is parametrized by the contraction factor `s = e^{-t}`:
//! a part's center at factor `s` is `s · c_ref`, where `c_ref` is the
//! center it would have at `s = 1`. Collision conditions are linear in
//! `s`, and the reference center of a merged part is the length-weighted
//! mean of the reference centers of its constituents, so the whole event
//! sequence is computable in exact rational arithmetic (see [`exact`]).

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open interval `]a,b[` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "interval endpoints must be finite, got ]{a},{b}["
            )));
        }
        if a >= b {
            return Err(Error::InvalidInput(format!(
                "interval requires a < b, got ]{a},{b}["
            )));
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    #[inline]
    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    #[inline]
    pub fn contains(&self, y: f64) -> bool {
        self.a < y && y < self.b
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.a, i.b]
    }
}

/// Finite union of pairwise disjoint open intervals, sorted by lower endpoint.
///
/// Consecutive parts are separated by a gap of positive length; two
/// intervals that touch are one interval.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a union from parts that must already be sorted and strictly disjoint.
    pub fn new(parts: Vec<Interval>) -> Result<Self> {
        for w in parts.windows(2) {
            if w[0].b >= w[1].a {
                return Err(Error::InvalidInput(format!(
                    "parts ]{},{}[ and ]{},{}[ are not strictly separated",
                    w[0].a, w[0].b, w[1].a, w[1].b
                )));
            }
        }
        Ok(Self { parts })
    }

    /// Sorts the given intervals and merges any that overlap or touch.
    pub fn normalized(mut parts: Vec<Interval>) -> Self {
        parts.sort_by(|x, y| x.a.total_cmp(&y.a));
        let mut out: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match out.last_mut() {
                Some(last) if p.a <= last.b => last.b = last.b.max(p.b),
                _ => out.push(p),
            }
        }
        Self { parts: out }
    }

    pub fn single(i: Interval) -> Self {
        Self { parts: vec![i] }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.parts.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.parts.iter().any(|p| p.contains(y))
    }

    /// Point-set inclusion `self ⊆ other`, allowing endpoints to differ by `tol`.
    pub fn is_subset_of(&self, other: &IntervalUnion, tol: f64) -> bool {
        self.parts.iter().all(|p| {
            other
                .parts
                .iter()
                .any(|q| q.a <= p.a + tol && p.b <= q.b + tol)
        })
    }

    /// Signed depth of `y`: distance to the nearest endpoint when inside a
    /// part, minus the distance to the nearest part otherwise.
    /// Returns `-∞` for the empty union.
    pub fn depth(&self, y: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for p in &self.parts {
            let d = (y - p.a).min(p.b - y);
            if d > best {
                best = d;
            }
        }
        best
    }

    /// Index of the part containing `y`, or of the nearest part.
    pub fn nearest_part(&self, y: f64) -> Option<usize> {
        let mut best = None;
        let mut best_depth = f64::NEG_INFINITY;
        for (k, p) in self.parts.iter().enumerate() {
            let d = (y - p.a).min(p.b - y);
            if d > best_depth {
                best_depth = d;
                best = Some(k);
            }
        }
        best
    }

    /// Maximal endpoint distance between two unions with the same number of parts.
    pub fn max_endpoint_distance(&self, other: &IntervalUnion) -> Option<f64> {
        if self.len() != other.len() {
            return None;
        }
        Some(
            self.parts
                .iter()
                .zip(&other.parts)
                .map(|(p, q)| (p.a - q.a).abs().max((p.b - q.b).abs()))
                .fold(0.0, f64::max),
        )
    }
}

impl TryFrom<Vec<Interval>> for IntervalUnion {
    type Error = Error;

    fn try_from(parts: Vec<Interval>) -> Result<Self> {
        IntervalUnion::new(parts)
    }
}

impl From<IntervalUnion> for Vec<Interval> {
    fn from(u: IntervalUnion) -> Self {
        u.parts
    }
}

/// Merge of two adjacent parts during a flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEvent {
    /// Collision time, always positive.
    pub t_star: f64,
    /// Index of the left part in the part list just before the merge.
    pub left_index: usize,
    /// Always `left_index + 1`.
    pub right_index: usize,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidInput(format!(
            "flow time must be nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Contraction factor `e^{-t}`; `t = ∞` maps to 0.
#[inline]
pub fn contraction(t: f64) -> f64 {
    (-t).exp()
}

/// Maps a user-facing `tau ∈ [0,1]` to flow time `t = -ln(1 - tau)`.
pub fn reparametrize(tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!(
            "tau must lie in [0,1], got {tau}"
        )));
    }
    Ok(-(1.0 - tau).ln())
}

/// Flows a single interval for time `t` (`t = ∞` allowed).
pub fn flow_interval(i: Interval, t: f64) -> Result<Interval> {
    check_time(t)?;
    let s = contraction(t);
    let (a, b) = (i.a, i.b);
    // ]a,b[ -> ](a - b + s(a+b))/2, (b - a + s(a+b))/2[
    Ok(Interval {
        a: 0.5 * (a - b + s * (a + b)),
        b: 0.5 * (b - a + s * (a + b)),
    })
}

/// Time at which two flowing disjoint intervals `left`, `right` first touch.
///
/// `None` is only possible if the intervals already overlap, which is
/// rejected, so valid inputs always produce `Some(t*)` with `t* > 0`.
pub fn collision_time(left: Interval, right: Interval) -> Result<Option<f64>> {
    if left.b >= right.a {
        return Err(Error::InvalidInput(format!(
            "collision_time requires b1 < a2, got ]{},{}[ and ]{},{}[",
            left.a, left.b, right.a, right.b
        )));
    }
    let s = collision_factor(
        left.length(),
        left.center(),
        right.length(),
        right.center(),
    );
    Ok(if s >= 1.0 { None } else { Some(-s.ln()) })
}

fn collision_factor<S: Num + Clone>(l1: S, c1: S, l2: S, c2: S) -> S {
    let two = S::one() + S::one();
    (l1 + l2) / (two * (c2 - c1))
}

/// Flows a union for time `t` (`t = ∞` allowed).
pub fn flow_union(u: &IntervalUnion, t: f64) -> Result<IntervalUnion> {
    Ok(flow_union_with_events(u, t)?.0)
}

/// Flows a union for time `t` and reports the merge events that occurred.
pub fn flow_union_with_events(
    u: &IntervalUnion,
    t: f64,
) -> Result<(IntervalUnion, Vec<FlowEvent>)> {
    check_time(t)?;
    Ok(flow_union_scaled(u, contraction(t)))
}

/// Flows a union to contraction factor `s = e^{-t} ∈ [0,1]`.
///
/// Taking `s` directly avoids the logarithm round trip when the caller
/// already works in `tau = 1 - s`.
pub fn flow_union_at_factor(u: &IntervalUnion, s: f64) -> Result<IntervalUnion> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidInput(format!(
            "contraction factor must lie in [0,1], got {s}"
        )));
    }
    Ok(flow_union_scaled(u, s).0)
}

fn flow_union_scaled(u: &IntervalUnion, s: f64) -> (IntervalUnion, Vec<FlowEvent>) {
    let input: Vec<(f64, f64)> = u.parts.iter().map(|p| (p.a, p.b)).collect();
    let (out, merges) = evolve(&input, &s);
    let events = merges
        .into_iter()
        .map(|m| FlowEvent {
            t_star: -m.factor.ln(),
            left_index: m.left_index,
            right_index: m.left_index + 1,
        })
        .collect();
    // Merging only ever joins parts whose flowed images touch, and flowing
    // preserves order, so the output is sorted; a zero gap between parts
    // can only arise from rounding and is absorbed by normalization.
    let parts = out.into_iter().map(|(a, b)| Interval { a, b }).collect();
    (IntervalUnion::normalized(parts), events)
}

#[derive(Debug, Clone)]
struct Part<S> {
    len: S,
    c_ref: S,
}

#[derive(Debug, Clone)]
struct Merge<S> {
    factor: S,
    left_index: usize,
}

/// Event-driven evolution of sorted disjoint parts `(a,b)` to factor `s`.
fn evolve<S>(input: &[(S, S)], s: &S) -> (Vec<(S, S)>, Vec<Merge<S>>)
where
    S: Num + Clone + PartialOrd,
{
    let two = S::one() + S::one();
    let mut parts: Vec<Part<S>> = input
        .iter()
        .map(|(a, b)| Part {
            len: b.clone() - a.clone(),
            c_ref: (a.clone() + b.clone()) / two.clone(),
        })
        .collect();
    let mut merges = Vec::new();

    loop {
        // Earliest collision = largest factor among adjacent pairs.
        let mut best: Option<(usize, S)> = None;
        for j in 0..parts.len().saturating_sub(1) {
            let f = collision_factor(
                parts[j].len.clone(),
                parts[j].c_ref.clone(),
                parts[j + 1].len.clone(),
                parts[j + 1].c_ref.clone(),
            );
            if best.as_ref().is_none_or(|(_, g)| f > *g) {
                best = Some((j, f));
            }
        }
        match best {
            Some((j, f)) if f >= *s => {
                let right = parts.remove(j + 1);
                let left = &mut parts[j];
                let len = left.len.clone() + right.len.clone();
                left.c_ref = (left.len.clone() * left.c_ref.clone() + right.len * right.c_ref)
                    / len.clone();
                left.len = len;
                merges.push(Merge {
                    factor: f,
                    left_index: j,
                });
            }
            _ => break,
        }
    }

    let out = parts
        .into_iter()
        .map(|p| {
            let c = s.clone() * p.c_ref;
            let half = p.len / two.clone();
            (c.clone() - half.clone(), c + half)
        })
        .collect();
    (out, merges)
}

/// Exact rational evolution, used as an independent check on the
/// floating-point path.
pub mod exact {
    use num_bigint::BigInt;
    use num_rational::BigRational;

    use crate::error::{Error, Result};

    pub type Rational = BigRational;

    pub fn rational(num: i64, den: i64) -> Rational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Flows sorted, strictly disjoint parts `(a,b)` to contraction factor `s ∈ [0,1]`.
    ///
    /// Returns the flowed parts and the factors at which merges happened.
    pub fn flow_at_factor(
        parts: &[(Rational, Rational)],
        s: &Rational,
    ) -> Result<(Vec<(Rational, Rational)>, Vec<Rational>)> {
        let zero = rational(0, 1);
        let one = rational(1, 1);
        if *s < zero || *s > one {
            return Err(Error::InvalidInput(
                "contraction factor must lie in [0,1]".into(),
            ));
        }
        for (a, b) in parts {
            if a >= b {
                return Err(Error::InvalidInput("interval requires a < b".into()));
            }
        }
        for w in parts.windows(2) {
            if w[0].1 >= w[1].0 {
                return Err(Error::InvalidInput(
                    "parts are not strictly separated".into(),
                ));
            }
        }
        let (out, merges) = super::evolve(parts, s);
        Ok((out, merges.into_iter().map(|m| m.factor).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn union(v: &[(f64, f64)]) -> IntervalUnion {
        IntervalUnion::new(v.iter().map(|&(a, b)| iv(a, b)).collect()).unwrap()
    }

    #[test]
    fn interval_rejects_degenerate() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn union_rejects_touching_parts() {
        assert!(IntervalUnion::new(vec![iv(0.0, 1.0), iv(1.0, 2.0)]).is_err());
        assert!(IntervalUnion::new(vec![iv(1.0, 2.0), iv(-1.0, 0.0)]).is_err());
        let n = IntervalUnion::normalized(vec![iv(1.0, 2.0), iv(0.0, 1.0), iv(3.0, 4.0)]);
        assert_eq!(n, union(&[(0.0, 2.0), (3.0, 4.0)]));
    }

    #[test]
    fn flow_interval_examples() {
        assert_eq!(flow_interval(iv(1.0, 3.0), 0.0).unwrap(), iv(1.0, 3.0));
        assert_eq!(flow_interval(iv(1.0, 3.0), f64::INFINITY).unwrap(), iv(-1.0, 1.0));
        let r = flow_interval(iv(1.0, 3.0), LN_2).unwrap();
        assert!((r.a() - 0.0).abs() < 1e-15 && (r.b() - 2.0).abs() < 1e-15);
        assert!(flow_interval(iv(1.0, 3.0), -1.0).is_err());
        assert!(flow_interval(iv(1.0, 3.0), f64::NAN).is_err());
    }

    #[test]
    fn collision_time_examples() {
        let t = collision_time(iv(-3.0, -1.0), iv(1.0, 3.0)).unwrap().unwrap();
        assert!((t - LN_2).abs() < 1e-15);
        let t = collision_time(iv(0.0, 1.0), iv(2.0, 3.0)).unwrap().unwrap();
        assert!((t - LN_2).abs() < 1e-15);
        assert!(collision_time(iv(0.0, 1.0), iv(1.0, 2.0)).is_err());
        assert!(collision_time(iv(0.0, 2.0), iv(1.0, 3.0)).is_err());
    }

    #[test]
    fn collision_time_tiny_gap_touches() {
        let (l, r) = (iv(0.0, 1.0), iv(1.0001, 2.0));
        let t = collision_time(l, r).unwrap().unwrap();
        assert!(t > 0.0);
        let (fl, fr) = (flow_interval(l, t).unwrap(), flow_interval(r, t).unwrap());
        assert!((fl.b() - fr.a()).abs() < 1e-12);

        // independent check: bisection on the gap of the flowed pair
        let gap = |t: f64| flow_interval(r, t).unwrap().a() - flow_interval(l, t).unwrap().b();
        let (mut lo, mut hi) = (0.0, 1.0);
        assert!(gap(lo) > 0.0 && gap(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((t - lo).abs() < 1e-12);
    }

    #[test]
    fn flow_union_examples() {
        let u = union(&[(-3.0, -1.0), (1.0, 3.0)]);
        assert_eq!(flow_union(&u, f64::INFINITY).unwrap(), union(&[(-2.0, 2.0)]));
        let (r, ev) = flow_union_with_events(&u, LN_2).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.parts()[0].a() + 2.0).abs() < 1e-15);
        assert!((r.parts()[0].b() - 2.0).abs() < 1e-15);
        assert_eq!(ev.len(), 1);
        assert!((ev[0].t_star - LN_2).abs() < 1e-15);
        assert_eq!((ev[0].left_index, ev[0].right_index), (0, 1));

        let r = flow_union(&union(&[(1.0, 3.0)]), LN_2).unwrap();
        assert!((r.parts()[0].a()).abs() < 1e-15 && (r.parts()[0].b() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn just_before_collision_parts_stay_apart() {
        let u = union(&[(-3.0, -1.0), (1.0, 3.0)]);
        let r = flow_union(&u, LN_2 * (1.0 - 1e-9)).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn empty_union_flows_to_empty() {
        let e = IntervalUnion::empty();
        assert!(flow_union(&e, 1.0).unwrap().is_empty());
        assert!(flow_union(&e, f64::INFINITY).unwrap().is_empty());
    }

    #[test]
    fn symmetric_union_is_not_fixed() {
        let u = union(&[(-3.0, -1.0), (1.0, 3.0)]);
        let r = flow_union(&u, 0.1).unwrap();
        assert_ne!(r, u);
        let c = union(&[(-1.5, 1.5)]);
        assert_eq!(flow_union(&c, 0.7).unwrap(), c);
    }

    #[test]
    fn simultaneous_triple_collision_merges_in_one_event_time() {
        // Three unit intervals centered at -2, 0, 2 with gaps 1 collide together.
        let u = union(&[(-2.5, -1.5), (-0.5, 0.5), (1.5, 2.5)]);
        let t_star = collision_time(iv(-2.5, -1.5), iv(-0.5, 0.5)).unwrap().unwrap();
        let (r, ev) = flow_union_with_events(&u, t_star).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.total_length() - 3.0).abs() < 1e-14);
        assert_eq!(ev.len(), 2);
        assert!((ev[0].t_star - ev[1].t_star).abs() < 1e-14);
    }

    #[test]
    fn reparametrize_examples() {
        assert_eq!(reparametrize(0.0).unwrap(), 0.0);
        assert_eq!(reparametrize(1.0).unwrap(), f64::INFINITY);
        assert!((reparametrize(0.5).unwrap() - LN_2).abs() < 1e-15);
        assert!(reparametrize(-0.1).is_err());
        assert!(reparametrize(1.1).is_err());
    }

    #[test]
    fn exact_mode_is_exact() {
        use exact::*;
        let parts = vec![
            (rational(-3, 1), rational(-1, 1)),
            (rational(1, 1), rational(3, 1)),
            (rational(7, 2), rational(9, 2)),
        ];
        let total = rational(5, 1);
        for s in [rational(0, 1), rational(1, 3), rational(1, 2), rational(9, 10), rational(1, 1)] {
            let (out, _) = flow_at_factor(&parts, &s).unwrap();
            let len: Rational = out.iter().map(|(a, b)| b - a).sum();
            assert_eq!(len, total);
        }
        let (out, merges) = flow_at_factor(&parts, &rational(0, 1)).unwrap();
        assert_eq!(out, vec![(rational(-5, 2), rational(5, 2))]);
        assert_eq!(merges.len(), 2);
    }

    #[test]
    fn exact_and_float_paths_agree() {
        use exact::*;
        let fparts = [(-3.0, -1.25), (0.5, 1.0), (2.0, 5.0)];
        let rparts: Vec<_> = [(-12, -5), (2, 4), (8, 20)]
            .iter()
            .map(|&(a, b)| (rational(a, 4), rational(b, 4)))
            .collect();
        for (num, den) in [(1, 1), (3, 4), (1, 2), (1, 5), (0, 1)] {
            let s_f = num as f64 / den as f64;
            let (r_out, _) = flow_at_factor(&rparts, &rational(num, den)).unwrap();
            let f_out = flow_union_at_factor(&union(&fparts), s_f).unwrap();
            assert_eq!(r_out.len(), f_out.len());
            for ((a, b), p) in r_out.iter().zip(f_out.parts()) {
                let to_f = |r: &Rational| {
                    use num_traits::ToPrimitive;
                    r.to_f64().unwrap()
                };
                assert!((to_f(a) - p.a()).abs() < 1e-14);
                assert!((to_f(b) - p.b()).abs() < 1e-14);
            }
        }
    }

    fn arb_union() -> impl Strategy<Value = IntervalUnion> {
        prop::collection::vec((0.01f64..2.0, 0.01f64..2.0), 1..6).prop_map(|v| {
            let mut x = -5.0;
            let mut parts = Vec::new();
            for (gap, len) in v {
                x += gap;
                parts.push(Interval::new(x, x + len).unwrap());
                x += len;
            }
            IntervalUnion::new(parts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn length_is_preserved(u in arb_union(), t in 0.0f64..6.0) {
            let r = flow_union(&u, t).unwrap();
            prop_assert!((r.total_length() - u.total_length()).abs() < 1e-12);
        }

        #[test]
        fn semigroup(u in arb_union(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
            let once = flow_union(&u, s + t).unwrap();
            let twice = flow_union(&flow_union(&u, s).unwrap(), t).unwrap();
            prop_assert!(once.is_subset_of(&twice, 1e-12) && twice.is_subset_of(&once, 1e-12));
        }

        #[test]
        fn single_interval_center_scales(a in -5.0f64..5.0, len in 0.01f64..3.0, t in 0.0f64..5.0) {
            let i = Interval::new(a, a + len).unwrap();
            let r = flow_interval(i, t).unwrap();
            prop_assert!((r.center() - (-t).exp() * i.center()).abs() < 1e-13);
            prop_assert!((r.length() - len).abs() < 1e-13);
        }
    }
}
