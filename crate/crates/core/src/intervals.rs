//! Interval bookkeeping on the real line and on the circle.
//!
//! Every interval carries its own open/closed flags. Coverage of a closed set
//! by a union of open sets is decided by an exact set difference, so a point
//! where two open arcs merely touch is reported as a gap.

use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = x > self.lo || (x == self.lo && self.lo_closed);
        let below = x < self.hi || (x == self.hi && self.hi_closed);
        above && below
    }

    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    /// A representative member: the midpoint, or the single point of a
    /// degenerate closed interval.
    pub fn representative(&self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + 0.5 * (self.hi - self.lo)
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if self.lo < other.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if self.hi > other.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }

    /// Part of `self` strictly left of `other`.
    fn left_of(&self, other: &Interval) -> Interval {
        let ray = Interval::new(f64::NEG_INFINITY, other.lo, false, !other.lo_closed);
        self.intersect(&ray)
    }

    /// Part of `self` strictly right of `other`.
    fn right_of(&self, other: &Interval) -> Interval {
        let ray = Interval::new(other.hi, f64::INFINITY, !other.hi_closed, false);
        self.intersect(&ray)
    }
}

/// Sorted, pairwise disjoint union of non-empty intervals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        let mut items: Vec<Interval> = iter.into_iter().filter(|i| !i.is_empty()).collect();
        // Closed lower ends sort first so that merging keeps the larger set.
        items.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut out: Vec<Interval> = Vec::with_capacity(items.len());
        for next in items {
            match out.last_mut() {
                Some(cur)
                    if next.lo < cur.hi
                        || (next.lo == cur.hi && (next.lo_closed || cur.hi_closed)) =>
                {
                    if next.hi > cur.hi {
                        cur.hi = next.hi;
                        cur.hi_closed = next.hi_closed;
                    } else if next.hi == cur.hi {
                        cur.hi_closed |= next.hi_closed;
                    }
                }
                _ => out.push(next),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    /// `self \ other`.
    pub fn difference(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for a in &self.intervals {
            let mut rest = *a;
            for b in &other.intervals {
                if b.lo > rest.hi {
                    break;
                }
                let left = rest.left_of(b);
                if !left.is_empty() {
                    out.push(left);
                }
                rest = rest.right_of(b);
                if rest.is_empty() {
                    break;
                }
            }
            if !rest.is_empty() {
                out.push(rest);
            }
        }
        IntervalUnion { intervals: out }
    }

    pub fn intersection(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                let c = a.intersect(b);
                if !c.is_empty() {
                    out.push(c);
                }
            }
        }
        IntervalUnion::from_intervals(out)
    }

    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.difference(other).is_empty()
    }

    /// Bridges gaps no wider than `gap`. Only ever grows the set.
    pub fn bridge_gaps(&self, gap: f64) -> IntervalUnion {
        let mut out: Vec<Interval> = Vec::with_capacity(self.intervals.len());
        for next in &self.intervals {
            match out.last_mut() {
                Some(cur) if next.lo - cur.hi <= gap => {
                    cur.hi = next.hi;
                    cur.hi_closed = next.hi_closed;
                }
                _ => out.push(*next),
            }
        }
        IntervalUnion { intervals: out }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// A subset of the circle, stored as an [`IntervalUnion`] inside `[0, 2π]`.
///
/// Arcs that cross angle zero are split into `[start, 2π)` and `[0, end]`;
/// the seam at `2π` is always open so each circle point has one
/// representation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AngularIntervalSet {
    set: IntervalUnion,
}

impl AngularIntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            set: IntervalUnion::from_intervals([Interval::new(0.0, TAU, true, false)]),
        }
    }

    /// Counter-clockwise arc from `start` spanning `span` radians.
    pub fn arc(start: f64, span: f64, start_closed: bool, end_closed: bool) -> Self {
        Self::from_arcs([(start, span, start_closed, end_closed)])
    }

    pub fn from_arcs<I>(arcs: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64, bool, bool)>,
    {
        let mut pieces = Vec::new();
        for (start, span, start_closed, end_closed) in arcs {
            push_arc(&mut pieces, start, span, start_closed, end_closed);
        }
        Self {
            set: IntervalUnion::from_intervals(pieces),
        }
    }

    pub fn union(&self, other: &AngularIntervalSet) -> AngularIntervalSet {
        Self {
            set: IntervalUnion::from_intervals(
                self.set.intervals().iter().chain(other.set.intervals()).copied(),
            ),
        }
    }

    pub fn difference(&self, other: &AngularIntervalSet) -> AngularIntervalSet {
        Self {
            set: self.set.difference(&other.set),
        }
    }

    pub fn intersection(&self, other: &AngularIntervalSet) -> AngularIntervalSet {
        Self {
            set: self.set.intersection(&other.set),
        }
    }

    pub fn is_subset_of(&self, other: &AngularIntervalSet) -> bool {
        self.set.is_subset_of(&other.set)
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.set.contains(normalize_angle(theta))
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn is_full(&self) -> bool {
        Self::full().is_subset_of(self)
    }

    pub fn measure(&self) -> f64 {
        self.set.measure()
    }

    pub fn intervals(&self) -> &[Interval] {
        self.set.intervals()
    }

    /// Bridges gaps no wider than `gap` radians, including the one across
    /// the seam at angle zero.
    pub fn bridge_gaps(&self, gap: f64) -> AngularIntervalSet {
        let mut set = self.set.bridge_gaps(gap);
        if let (Some(first), Some(last)) = (set.intervals.first(), set.intervals.last()) {
            if set.intervals.len() > 1 && first.lo + (TAU - last.hi) <= gap {
                let mut pieces = set.intervals.clone();
                pieces[0].lo = 0.0;
                pieces[0].lo_closed = true;
                let n = pieces.len();
                pieces[n - 1].hi = TAU;
                pieces[n - 1].hi_closed = false;
                set = IntervalUnion::from_intervals(pieces);
            }
        }
        Self { set }
    }
}

fn push_arc(out: &mut Vec<Interval>, start: f64, span: f64, start_closed: bool, end_closed: bool) {
    if !(span >= 0.0) {
        return;
    }
    if span >= TAU {
        out.push(Interval::new(0.0, TAU, true, false));
        return;
    }
    let s = normalize_angle(start);
    let e = s + span;
    if e < TAU {
        out.push(Interval::new(s, e, start_closed, end_closed));
    } else {
        out.push(Interval::new(s, TAU, start_closed, false));
        out.push(Interval::new(0.0, e - TAU, true, end_closed));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn touching_open_intervals_leave_a_gap() {
        let u = IntervalUnion::from_intervals([Interval::open(0.0, 1.0), Interval::open(1.0, 2.0)]);
        assert_eq!(u.intervals().len(), 2);
        let need = IntervalUnion::from_intervals([Interval::closed(0.5, 1.5)]);
        let gap = need.difference(&u);
        assert_eq!(gap.intervals(), &[Interval::closed(1.0, 1.0)]);
    }

    #[test]
    fn closed_end_meets_open_start() {
        let u = IntervalUnion::from_intervals([
            Interval::new(0.0, 1.0, false, true),
            Interval::open(1.0, 2.0),
        ]);
        assert_eq!(u.intervals(), &[Interval::open(0.0, 2.0)]);
    }

    #[test]
    fn difference_splits() {
        let a = IntervalUnion::from_intervals([Interval::closed(0.0, 10.0)]);
        let b = IntervalUnion::from_intervals([Interval::open(2.0, 3.0), Interval::open(5.0, 12.0)]);
        let d = a.difference(&b);
        assert_eq!(
            d.intervals(),
            &[Interval::closed(0.0, 2.0), Interval::closed(3.0, 5.0)]
        );
    }

    #[test]
    fn closed_cover_by_open_needs_overlap() {
        let need = IntervalUnion::from_intervals([Interval::closed(0.0, 1.0)]);
        let cov = IntervalUnion::from_intervals([Interval::open(-0.1, 0.6), Interval::open(0.5, 1.1)]);
        assert!(need.is_subset_of(&cov));
        let cov = IntervalUnion::from_intervals([Interval::open(0.0, 1.1)]);
        assert!(!need.is_subset_of(&cov));
    }

    #[test]
    fn arc_across_seam() {
        let s = AngularIntervalSet::arc(-PI / 2.0, PI, true, true);
        assert_eq!(s.intervals().len(), 2);
        assert!(s.contains(0.0));
        assert!(s.contains(1.0));
        assert!(s.contains(-1.0));
        assert!(!s.contains(PI));
        assert!((s.measure() - PI).abs() < 1e-15);
    }

    #[test]
    fn open_arcs_covering_full_circle() {
        let cov = AngularIntervalSet::from_arcs([
            (0.0 - 0.1, PI + 0.2, false, false),
            (PI - 0.1, PI + 0.2, false, false),
        ]);
        assert!(AngularIntervalSet::full().is_subset_of(&cov));
        assert!(cov.is_full());
        let cov = AngularIntervalSet::from_arcs([(0.0, PI, false, false), (PI, PI, false, false)]);
        let gap = AngularIntervalSet::full().difference(&cov);
        assert_eq!(gap.intervals().len(), 2);
        assert!(gap.contains(0.0) && gap.contains(PI));
    }

    #[test]
    fn bridging_across_seam() {
        let s = AngularIntervalSet::from_arcs([(0.001, 3.0, true, true), (3.5, TAU - 3.5 - 0.001, true, true)]);
        let b = s.bridge_gaps(0.01);
        assert!(b.contains(0.0));
        assert!(!b.contains(3.2));
    }
}
