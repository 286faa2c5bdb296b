//! Explicit communication paths built the way the connectivity argument
//! builds them.
//!
//! From the current node `u` towards the target `v`:
//!
//! * `w` is where the segment `u -> v` leaves the sensing circle `C(u)`;
//!   `u` does not cover `w`, so some other sensor `x` does, and
//!   `|xv| <= |xw| + |wv| < |uw| + |wv| = |uv|`.
//! * If `u` and `x` are out of range, `C(u)` and `C(x)` meet at two points
//!   `s`, `t`. With `r_c >= √(2+√3) r_s` and pairwise spacing `>= r_s`, at
//!   least one of them lies in the region; the sensor `y` covering it is in
//!   range of both `u` and `x`. (The supporting argument bounds `|st| < r_s`
//!   and then rules out `|uy| >= r_c` through angles of at least 150° at the
//!   shared intersection point; only its conclusion is checked here.)
//!
//! Each step strictly shrinks the distance to `v`, so the walk never
//! revisits a node and ends within `n` steps. Every broken expectation is
//! reported as a falsification error carrying enough context to reproduce.

use serde::Serialize;
use thiserror::Error;

use crate::commgraph::check_spacing;
use crate::coverage::check_coverage;
use crate::deployment::Deployment;
use crate::geometry::{circle_circle_intersection, point_on_circle_toward, Point};
use crate::spatial::SpatialGrid;

/// `√(2+√3)`, the sufficient ratio `r_c / r_s`.
pub fn bound_constant() -> f64 {
    (2.0 + 3f64.sqrt()).sqrt()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("sensor id {0} out of range")]
    NoSuchSensor(usize),
    #[error("coverage hypothesis violated: no sensor covers ({x}, {y})")]
    CoverageHypothesisViolated { x: f64, y: f64 },
    #[error("progress guarantee violated: next node {x_id} is not closer to {v_id} than {u_id}")]
    ProgressViolated { u_id: usize, x_id: usize, v_id: usize },
    #[error("relay geometry guarantee violated: neither intersection of C({u_id}) and C({x_id}) lies in the region")]
    RelayGeometryViolated { u_id: usize, x_id: usize },
    #[error("relay range guarantee violated: best relay {y_id} between {u_id} and {x_id} needs range {needed} >= r_c")]
    RelayBoundViolated {
        u_id: usize,
        x_id: usize,
        y_id: usize,
        needed: f64,
    },
    #[error("route from {from} to {to} did not terminate within {limit} steps")]
    NonTermination { from: usize, to: usize, limit: usize },
}

impl RoutingError {
    /// True for errors that contradict the theorem rather than the caller's
    /// input.
    pub fn is_falsification(&self) -> bool {
        !matches!(self, RoutingError::Precondition(_) | RoutingError::NoSuchSensor(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Relay {
    /// Intersection point of `C(u)` and `C(x)` that the relay covers.
    pub t: Point,
    /// The other intersection point.
    pub s: Point,
    pub y_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MacroStep {
    pub from_id: usize,
    pub w: Point,
    pub x_id: usize,
    pub relay: Option<Relay>,
    /// Ids appended to the path: `[x]` or `[y, x]`.
    pub hop_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteTrace {
    pub source_id: usize,
    pub dest_id: usize,
    pub steps: Vec<MacroStep>,
    pub path: Vec<usize>,
}

/// Route builder over a deployment whose hypotheses were checked once.
pub struct Router<'a> {
    d: &'a Deployment,
    grid: SpatialGrid,
    cover_reach: f64,
}

impl<'a> Router<'a> {
    pub fn new(d: &'a Deployment) -> Result<Self, RoutingError> {
        if !d.region_valid() {
            return Err(RoutingError::Precondition("region sides must be at least r_s".into()));
        }
        if d.r_c() < bound_constant() * d.r_s() - d.tau() {
            return Err(RoutingError::Precondition(format!(
                "r_c = {} is below √(2+√3)·r_s = {}",
                d.r_c(),
                bound_constant() * d.r_s()
            )));
        }
        let spacing = check_spacing(d);
        if !spacing.ok {
            return Err(RoutingError::Precondition(format!(
                "{} sensor pairs closer than r_s",
                spacing.violating_pairs.len()
            )));
        }
        if !check_coverage(d).covered {
            return Err(RoutingError::Precondition("region is not 1-covered".into()));
        }
        Ok(Self::unchecked(d))
    }

    /// Skips the hypothesis checks; falsification errors still fire.
    pub fn unchecked(d: &'a Deployment) -> Self {
        Self {
            d,
            grid: d.grid(d.r_s()),
            cover_reach: d.r_s() - d.tau(),
        }
    }

    fn pos(&self, id: usize) -> Result<Point, RoutingError> {
        self.d.sensor(id).map_err(|_| RoutingError::NoSuchSensor(id))
    }

    /// Sensors covering `p`, ascending by id.
    fn covering(&self, p: Point) -> Vec<usize> {
        let sensors = self.d.sensors();
        let mut ids: Vec<usize> = self
            .grid
            .candidates(p, self.cover_reach)
            .filter(|&j| sensors[j].dist(&p) < self.cover_reach)
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn next_hop(&self, u_id: usize, v_id: usize) -> Result<MacroStep, RoutingError> {
        let u = self.pos(u_id)?;
        let v = self.pos(v_id)?;
        let d = self.d;
        let r_c = d.r_c();
        if u.dist(&v) < r_c {
            return Err(RoutingError::Precondition(format!(
                "sensors {u_id} and {v_id} are already in range"
            )));
        }
        let region = d.region();
        let sensors = d.sensors();

        let w = region.clamp(
            point_on_circle_toward(u, d.r_s(), v)
                .map_err(|e| RoutingError::Precondition(e.to_string()))?,
        );
        let x_id = self
            .covering(w)
            .into_iter()
            .filter(|&j| j != u_id)
            .min_by(|&a, &b| sensors[a].dist(&v).total_cmp(&sensors[b].dist(&v)).then(a.cmp(&b)))
            .ok_or(RoutingError::CoverageHypothesisViolated { x: w.x, y: w.y })?;
        let x = sensors[x_id];
        if !(x.dist(&v) < u.dist(&v)) {
            return Err(RoutingError::ProgressViolated { u_id, x_id, v_id });
        }
        if u.dist(&x) < r_c {
            return Ok(MacroStep {
                from_id: u_id,
                w,
                x_id,
                relay: None,
                hop_ids: vec![x_id],
            });
        }

        let meets = circle_circle_intersection(u, x, d.r_s(), d.tau()).points();
        // (worst hop, relay id, covered intersection point, the other one)
        let mut best: Option<(f64, usize, Point, Point)> = None;
        let mut uncovered_inside: Option<Point> = None;
        for (k, &p) in meets.iter().enumerate() {
            if !region.contains_with_slack(p, d.tau()) {
                continue;
            }
            let t = region.clamp(p);
            let other = if meets.len() == 2 { meets[1 - k] } else { p };
            let relay = self
                .covering(t)
                .into_iter()
                .filter(|&j| j != u_id && j != x_id)
                .map(|j| (u.dist(&sensors[j]).max(sensors[j].dist(&x)), j))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            match relay {
                Some((worse, y_id)) if best.is_none_or(|(b, ..)| worse < b) => {
                    best = Some((worse, y_id, t, other));
                }
                Some(_) => {}
                None => {
                    uncovered_inside.get_or_insert(t);
                }
            }
        }
        let Some((worse, y_id, t, s)) = best else {
            return Err(match uncovered_inside {
                Some(t) => RoutingError::CoverageHypothesisViolated { x: t.x, y: t.y },
                None => RoutingError::RelayGeometryViolated { u_id, x_id },
            });
        };
        if worse >= r_c {
            return Err(RoutingError::RelayBoundViolated {
                u_id,
                x_id,
                y_id,
                needed: worse,
            });
        }
        Ok(MacroStep {
            from_id: u_id,
            w,
            x_id,
            relay: Some(Relay { t, s, y_id }),
            hop_ids: vec![y_id, x_id],
        })
    }

    pub fn build_route(&self, u_id: usize, v_id: usize) -> Result<RouteTrace, RoutingError> {
        let v = self.pos(v_id)?;
        self.pos(u_id)?;
        let limit = self.d.len();
        let mut path = vec![u_id];
        let mut steps = Vec::new();
        let mut frontier = u_id;
        while frontier != v_id {
            if self.d.sensors()[frontier].dist(&v) < self.d.r_c() {
                path.push(v_id);
                break;
            }
            if steps.len() >= limit {
                return Err(RoutingError::NonTermination {
                    from: u_id,
                    to: v_id,
                    limit,
                });
            }
            let step = self.next_hop(frontier, v_id)?;
            path.extend_from_slice(&step.hop_ids);
            frontier = step.x_id;
            steps.push(step);
        }
        Ok(RouteTrace {
            source_id: u_id,
            dest_id: v_id,
            steps,
            path,
        })
    }
}

pub fn next_hop(u_id: usize, v_id: usize, d: &Deployment) -> Result<MacroStep, RoutingError> {
    Router::new(d)?.next_hop(u_id, v_id)
}

pub fn build_route(u_id: usize, v_id: usize, d: &Deployment) -> Result<RouteTrace, RoutingError> {
    Router::new(d)?.build_route(u_id, v_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rectangle;

    #[test]
    fn bound_constant_forms_agree() {
        let alt = (6f64.sqrt() + 2f64.sqrt()) / 2.0;
        assert!((bound_constant() - alt).abs() <= 1e-15);
        assert!((bound_constant() - 1.9318516525781366).abs() <= 1e-15);
        assert!(bound_constant() > 3f64.sqrt());
        assert!(bound_constant() < 2.0);
    }

    #[test]
    fn direct_hop_on_axis() {
        let d = Deployment::new(
            vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(1.5, 0.0)],
            1.0,
            bound_constant(),
            Rectangle::new(10.0, 10.0).unwrap(),
            None,
        )
        .unwrap();
        let step = Router::unchecked(&d).next_hop(0, 1).unwrap();
        assert_eq!(step.w, Point::new(1.0, 0.0));
        assert_eq!(step.x_id, 2);
        assert!(step.relay.is_none());
        assert_eq!(step.hop_ids, vec![2]);
    }

    #[test]
    fn relay_when_x_out_of_range() {
        // x sits just under 2 r_s away; the upper intersection point of the
        // two circles is covered by a relay sensor above the axis.
        let d = Deployment::new(
            vec![
                Point::new(1.0, 1.0),
                Point::new(8.0, 1.0),
                Point::new(2.95, 1.0),
                Point::new(1.95, 1.9),
            ],
            1.0,
            bound_constant(),
            Rectangle::new(10.0, 10.0).unwrap(),
            None,
        )
        .unwrap();
        let step = Router::unchecked(&d).next_hop(0, 1).unwrap();
        assert_eq!(step.x_id, 2);
        let relay = step.relay.unwrap();
        assert_eq!(relay.y_id, 3);
        assert!(relay.t.dist(&relay.s) < 1.0);
        assert_eq!(step.hop_ids, vec![3, 2]);
    }

    #[test]
    fn missing_cover_is_a_falsification() {
        let d = Deployment::new(
            vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0)],
            1.0,
            bound_constant(),
            Rectangle::new(10.0, 10.0).unwrap(),
            None,
        )
        .unwrap();
        let err = Router::unchecked(&d).next_hop(0, 1).unwrap_err();
        assert!(matches!(err, RoutingError::CoverageHypothesisViolated { .. }));
        assert!(err.is_falsification());
        assert!(!Router::new(&d).is_err_and(|e| e.is_falsification()));
    }

    #[test]
    fn trivial_routes() {
        let d = Deployment::new(
            vec![Point::new(0.5, 0.5), Point::new(1.5, 0.5)],
            1.0,
            bound_constant(),
            Rectangle::new(2.0, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let r = Router::new(&d).unwrap();
        assert_eq!(r.build_route(0, 0).unwrap().path, vec![0]);
        assert_eq!(r.build_route(0, 1).unwrap().path, vec![0, 1]);
        assert!(matches!(r.next_hop(0, 1), Err(RoutingError::Precondition(_))));
    }

    #[test]
    fn preconditions_are_checked() {
        let region = Rectangle::new(2.0, 1.0).unwrap();
        let pts = vec![Point::new(0.5, 0.5), Point::new(1.5, 0.5)];
        let low_rc = Deployment::new(pts.clone(), 1.0, 1.5, region, None).unwrap();
        assert!(matches!(Router::new(&low_rc), Err(RoutingError::Precondition(_))));
        let close = Deployment::new(vec![Point::new(0.5, 0.5), Point::new(1.0, 0.5), Point::new(1.5, 0.5)], 1.0, 2.0, region, None)
            .unwrap();
        assert!(matches!(Router::new(&close), Err(RoutingError::Precondition(_))));
    }
}
