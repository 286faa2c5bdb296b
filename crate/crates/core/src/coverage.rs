//! 1-coverage of the closed region by the union of open sensing disks.
//!
//! # Method
//!
//! Let `U` be the union of the open disks and `R` the closed rectangle.
//! `U` is open, so `R \ U` is closed. If `R \ U` is non-empty, pick a point
//! `p` in it. Either `p` lies on a sensing circle, or `p` sits in a connected
//! component of `R` minus all closed disks; the closure of that component
//! reaches either the rectangle boundary or a sensing circle, and every
//! limit point of uncovered points is itself uncovered because `U` is open.
//! So an uncovered point exists iff one exists on `∂R` or on some circle
//! `C(i)` inside `R`. A point of `C(i)` is never covered by sensor `i`, so
//! the arc test only consults the other sensors.
//!
//! The checker therefore verifies:
//!
//! 1. each closed edge of `R` lies in the union of the open chord intervals
//!    cut by the disks, and
//! 2. for every sensor `i`, the part of `C(i)` inside `R` lies in the union
//!    of the open arcs cut by the other disks.
//!
//! # Tolerance
//!
//! A point counts as covered only at distance `< r_s - tau` from a sensor, so
//! the whole test runs with disks of radius `r_s - tau`. When that verdict
//! is "uncovered", the test is repeated at radius `r_s + tau`; if the
//! verdict flips, the report is flagged marginal.
//!
//! The grid oracle in [`sample_coverage_oracle`] shares no code with the
//! arc machinery beyond the point-in-disk predicate.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::deployment::Deployment;
use crate::geometry::{
    circle_rect_angular_intervals, circle_within_disk_arc, covered_arc_by_equal_disk,
    disk_segment_closed_interval, disk_segment_covered_interval, Point, Rectangle,
};
use crate::intervals::{AngularIntervalSet, Interval, IntervalUnion};
use crate::spatial::SpatialGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("grid too coarse to be meaningful: step {step} must be in (0, r_s = {r_s})")]
    GridTooCoarse { step: f64, r_s: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub covered: bool,
    pub witness: Option<Point>,
    /// The verdict flips somewhere inside the `±tau` band.
    pub marginal: bool,
}

impl CoverageReport {
    fn covered() -> Self {
        Self {
            covered: true,
            witness: None,
            marginal: false,
        }
    }

    fn uncovered(witness: Point, marginal: bool) -> Self {
        Self {
            covered: false,
            witness: Some(witness),
            marginal,
        }
    }
}

/// Some sensor is at distance `< r_s - tau` from `p`.
pub fn is_point_covered(p: Point, d: &Deployment) -> bool {
    let reach = d.r_s() - d.tau();
    d.sensors().iter().any(|v| v.dist(&p) < reach)
}

pub fn check_coverage(d: &Deployment) -> CoverageReport {
    if d.is_empty() {
        return CoverageReport::uncovered(d.region().center(), false);
    }
    let strict = ArcEngine::new(d, d.r_s() - d.tau());
    let verdict = strict.verdict();
    match verdict {
        None => CoverageReport::covered(),
        Some(w) => {
            let relaxed = ArcEngine::new(d, d.r_s() + d.tau());
            let marginal = relaxed.verdict().is_none() || !w.verified;
            CoverageReport::uncovered(w.point, marginal)
        }
    }
}

/// Brute-force check of the grid `(i step, j step)` clipped to the closed
/// region, with the far boundary row and column always included. An
/// uncovered answer is definitive; a covered one holds up to the grid
/// resolution.
pub fn sample_coverage_oracle(d: &Deployment, step: f64) -> Result<CoverageReport, CoverageError> {
    let region = d.region();
    sample_window(d, Point::new(0.0, 0.0), Point::new(region.a, region.b), step)
}

/// [`sample_coverage_oracle`] restricted to the window `[lo, hi]` (clipped to
/// the region), with grid lines anchored at `lo`.
pub fn sample_coverage_oracle_window(
    d: &Deployment,
    lo: Point,
    hi: Point,
    step: f64,
) -> Result<CoverageReport, CoverageError> {
    let region = d.region();
    let lo = region.clamp(lo);
    let hi = region.clamp(hi);
    sample_window(d, lo, hi, step)
}

fn sample_window(d: &Deployment, lo: Point, hi: Point, step: f64) -> Result<CoverageReport, CoverageError> {
    if !(step > 0.0 && step < d.r_s()) {
        return Err(CoverageError::GridTooCoarse { step, r_s: d.r_s() });
    }
    let xs = grid_axis(lo.x, hi.x, step);
    let ys = grid_axis(lo.y, hi.y, step);
    let reach = d.r_s() - d.tau();
    let grid = d.grid(d.r_s());
    let sensors = d.sensors();
    let covered = |p: Point| grid.candidates(p, reach).any(|j| sensors[j].dist(&p) < reach);
    let witness = ys.par_iter().find_map_first(|&y| {
        xs.iter()
            .map(|&x| Point::new(x, y))
            .find(|&p| !covered(p))
    });
    Ok(match witness {
        Some(p) => CoverageReport::uncovered(p, false),
        None => CoverageReport::covered(),
    })
}

fn grid_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).floor() as usize;
    let mut axis: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).filter(|&v| v <= hi).collect();
    if axis.last().is_none_or(|&v| v < hi) {
        axis.push(hi);
    }
    axis
}

/// An uncovered point of the closed region inside the closed disk of radius
/// `r_s` around `center`, or `None` when the region is covered.
pub fn uncovered_witness_in_disk(d: &Deployment, center: Point) -> Option<Point> {
    let region = d.region();
    let r_s = d.r_s();
    if d.is_empty() {
        let p = region.clamp(center);
        return (p.dist(&center) <= r_s).then_some(p);
    }
    let engine = ArcEngine::new(d, r_s - d.tau());
    engine.verdict()?;
    if let Some(p) = engine.witness_near(center, r_s) {
        return Some(p);
    }
    sample_disk(&engine, center, r_s, r_s / 500.0)
}

fn sample_disk(engine: &ArcEngine<'_>, center: Point, r: f64, step: f64) -> Option<Point> {
    let n = (r / step).ceil() as i64;
    let region = engine.region;
    let rows: Vec<i64> = (-n..=n).collect();
    rows.par_iter().find_map_first(|&j| {
        (-n..=n).find_map(|i| {
            let p = Point::new(center.x + i as f64 * step, center.y + j as f64 * step);
            (region.contains(p) && p.dist(&center) <= r && !engine.covered_by_any(p)).then_some(p)
        })
    })
}

#[derive(Clone, Copy, Debug)]
struct Witness {
    point: Point,
    /// Passed the direct point-in-disk recheck.
    verified: bool,
}

/// Perimeter test at a fixed disk radius.
struct ArcEngine<'a> {
    sensors: &'a [Point],
    region: Rectangle,
    radius: f64,
    angular_slack: f64,
    grid: SpatialGrid,
}

impl<'a> ArcEngine<'a> {
    fn new(d: &'a Deployment, radius: f64) -> Self {
        Self {
            sensors: d.sensors(),
            region: d.region(),
            radius,
            angular_slack: d.tau() / radius,
            grid: d.grid(radius),
        }
    }

    fn covered_by_any(&self, p: Point) -> bool {
        self.grid
            .candidates(p, self.radius)
            .any(|j| self.sensors[j].dist(&p) < self.radius)
    }

    fn edge_gaps(&self, (p0, p1): (Point, Point)) -> IntervalUnion {
        let covering = self
            .sensors
            .iter()
            .filter_map(|c| disk_segment_covered_interval(*c, self.radius, p0, p1));
        IntervalUnion::from_intervals([Interval::closed(0.0, 1.0)])
            .difference(&IntervalUnion::from_intervals(covering))
    }

    fn arc_gaps(&self, i: usize) -> AngularIntervalSet {
        let c = self.sensors[i];
        let needed = circle_rect_angular_intervals(c, self.radius, &self.region).bridge_gaps(self.angular_slack);
        if needed.is_empty() {
            return needed;
        }
        let covering = AngularIntervalSet::from_arcs(
            self.grid
                .candidates(c, 2.0 * self.radius)
                .filter(|&j| j != i)
                .filter_map(|j| covered_arc_by_equal_disk(c, self.sensors[j], self.radius))
                .map(|(start, span)| (start, span, false, false)),
        );
        needed.difference(&covering)
    }

    fn edge_witness(&self, (p0, p1): (Point, Point), gaps: &IntervalUnion) -> Option<Witness> {
        let point_at = |t: f64| {
            self.region
                .clamp(Point::new(p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)))
        };
        pick_witness(gaps.intervals(), |t, _| point_at(t), |p| !self.covered_by_any(p))
    }

    fn arc_witness(&self, i: usize, gaps: &AngularIntervalSet) -> Option<Witness> {
        let c = self.sensors[i];
        pick_witness(
            gaps.intervals(),
            |theta, nudge| {
                let rho = self.radius * (1.0 + 4.0 * nudge as f64 * f64::EPSILON);
                self.region.clamp(Point::at_angle(c, rho, theta))
            },
            |p| !self.covered_by_any(p),
        )
    }

    /// First uncovered point: edges in order, then sensor circles by id.
    fn verdict(&self) -> Option<Witness> {
        for edge in self.region.edges() {
            let gaps = self.edge_gaps(edge);
            if let Some(w) = self.edge_witness(edge, &gaps) {
                return Some(w);
            }
        }
        (0..self.sensors.len()).into_par_iter().find_map_first(|i| {
            let gaps = self.arc_gaps(i);
            self.arc_witness(i, &gaps)
        })
    }

    /// Verified uncovered point within distance `reach` of `center`, drawn
    /// from the boundary gaps and circle gaps that meet that disk.
    fn witness_near(&self, center: Point, reach: f64) -> Option<Point> {
        let inside = |p: Point| p.dist(&center) <= reach && !self.covered_by_any(p);
        for edge in self.region.edges() {
            let Some(window) = disk_segment_closed_interval(center, reach, edge.0, edge.1) else {
                continue;
            };
            let gaps = self
                .edge_gaps(edge)
                .intersection(&IntervalUnion::from_intervals([window]));
            let (p0, p1) = edge;
            let found = pick_witness(
                gaps.intervals(),
                |t, _| {
                    self.region
                        .clamp(Point::new(p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)))
                },
                inside,
            );
            if let Some(w) = found.filter(|w| w.verified) {
                return Some(w.point);
            }
        }
        let mut near: Vec<usize> = self.grid.candidates(center, reach + self.radius).collect();
        near.sort_unstable();
        near.into_iter().find_map(|i| {
            let c = self.sensors[i];
            let window = circle_within_disk_arc(c, self.radius, center, reach);
            if window.is_empty() {
                return None;
            }
            let gaps = self.arc_gaps(i).intersection(&window);
            pick_witness(
                gaps.intervals(),
                |theta, nudge| {
                    let rho = self.radius * (1.0 + 4.0 * nudge as f64 * f64::EPSILON);
                    self.region.clamp(Point::at_angle(c, rho, theta))
                },
                inside,
            )
            .filter(|w| w.verified)
            .map(|w| w.point)
        })
    }
}

const PROBE_FRACTIONS: [f64; 5] = [0.5, 0.25, 0.75, 0.125, 0.875];
const NUDGES: u32 = 4;

/// Scans gap pieces in order and returns the first probe point that passes
/// `accept`. If every probe fails, the first piece's midpoint is returned
/// unverified.
fn pick_witness(
    pieces: &[Interval],
    point_at: impl Fn(f64, u32) -> Point,
    accept: impl Fn(Point) -> bool,
) -> Option<Witness> {
    let first = pieces.first()?;
    for piece in pieces {
        let probes: Vec<f64> = if piece.lo == piece.hi {
            vec![piece.lo]
        } else {
            PROBE_FRACTIONS
                .iter()
                .map(|f| piece.lo + f * (piece.hi - piece.lo))
                .collect()
        };
        for t in probes {
            for nudge in 0..=NUDGES {
                let p = point_at(t, nudge);
                if accept(p) {
                    return Some(Witness { point: p, verified: true });
                }
            }
        }
    }
    Some(Witness {
        point: point_at(first.representative(), 0),
        verified: false,
    })
}
