//! Turning any covering deployment into a spacing-compliant covering one.
//!
//! While some pair is closer than `r_s`, the closest pair is picked and its
//! higher-id member removed. Everything that becomes uncovered was covered
//! only by the removed sensor, so it lies inside that sensor's disk. Holes
//! are patched one at a time by placing a sensor on an uncovered point. A
//! patch sits on an uncovered spot, so it is at least `r_s` from every
//! sensor present, patches are pairwise at least `r_s` apart, and none sits
//! at the removed position (the partner covers it). At most six such points
//! fit in the disk, which bounds the patches per removal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::commgraph::check_spacing;
use crate::coverage::{check_coverage, uncovered_witness_in_disk};
use crate::deployment::{Deployment, DeploymentError};
use crate::geometry::Point;

/// Most patches a single removal can require.
pub const MAX_ADDITIONS_PER_STEP: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RedistributeError {
    #[error("input not covering")]
    NotCovering,
    #[error("region sides must be at least r_s")]
    RegionInvalid,
    #[error("patch bound violated: removing sensor {removed_id} needed more than {MAX_ADDITIONS_PER_STEP} patches")]
    PatchBoundViolated { removed_id: usize },
    #[error("removing sensor {removed_id} left an uncovered point outside its disk")]
    CoverageLost { removed_id: usize },
    #[error(transparent)]
    Deployment(#[from] DeploymentError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RedistributionStep {
    /// Id in the deployment as it was when the step began.
    pub removed_id: usize,
    pub removed_pos: Point,
    pub partner_id: usize,
    pub added: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RedistributionResult {
    pub final_deployment: Deployment,
    pub steps: Vec<RedistributionStep>,
    pub iterations: usize,
}

impl RedistributionResult {
    pub fn max_additions(&self) -> usize {
        self.steps.iter().map(|s| s.added.len()).max().unwrap_or(0)
    }
}

pub fn redistribute(d: &Deployment) -> Result<RedistributionResult, RedistributeError> {
    if !d.region_valid() {
        return Err(RedistributeError::RegionInvalid);
    }
    if !check_coverage(d).covered {
        return Err(RedistributeError::NotCovering);
    }
    let mut current = d.clone();
    let mut steps = Vec::new();
    while let Some(pair) = check_spacing(&current).violating_pairs.first().cloned() {
        let (partner_id, removed_id) = (pair.first, pair.second);
        let removed_pos = current.sensor(removed_id)?;
        current = current.without_sensor(removed_id)?;
        let mut added = Vec::new();
        while let Some(p) = uncovered_witness_in_disk(&current, removed_pos) {
            if added.len() == MAX_ADDITIONS_PER_STEP {
                return Err(RedistributeError::PatchBoundViolated { removed_id });
            }
            current = current.with_sensor(p)?;
            added.push(p);
        }
        if !check_coverage(&current).covered {
            return Err(RedistributeError::CoverageLost { removed_id });
        }
        steps.push(RedistributionStep {
            removed_id,
            removed_pos,
            partner_id,
            added,
        });
    }
    let iterations = steps.len();
    Ok(RedistributionResult {
        final_deployment: current,
        steps,
        iterations,
    })
}

/// Candidate draws per packing trial in [`max_packing_in_disk`].
pub const PACKING_SAMPLES_PER_TRIAL: usize = 256;

/// Largest greedy packing found, over `trials` runs, of points in the closed
/// disk of radius `r` (center excluded) with pairwise distance `>= r`.
pub fn max_packing_in_disk(r: f64, trials: usize, rng_seed: u64) -> usize {
    max_packing_in_disk_with(r, trials, PACKING_SAMPLES_PER_TRIAL, rng_seed)
}

/// Trial `k` draws from ChaCha8 seeded with `rng_seed` on stream `k`.
pub fn max_packing_in_disk_with(r: f64, trials: usize, samples_per_trial: usize, rng_seed: u64) -> usize {
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(trial);
            greedy_packing(&mut rng, r, samples_per_trial).len()
        })
        .max()
        .unwrap_or(0)
}

fn greedy_packing(rng: &mut ChaCha8Rng, r: f64, samples: usize) -> Vec<Point> {
    let center_band = 1e-9 * r;
    let mut kept: Vec<Point> = Vec::with_capacity(8);
    for _ in 0..samples {
        let rho = r * rng.gen_range(0.0..=1.0f64).sqrt();
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        if rho <= center_band {
            continue;
        }
        let p = Point::new(rho * theta.cos(), rho * theta.sin());
        if kept.iter().all(|q| q.dist(&p) >= r) {
            kept.push(p);
        }
    }
    kept
}

/// The regular hexagon inscribed in the circle of radius `r` about the
/// origin; neighbouring vertices are exactly `r` apart.
pub fn hexagon_packing(r: f64) -> Vec<Point> {
    (0..6)
        .map(|k| Point::at_angle(Point::new(0.0, 0.0), r, k as f64 * std::f64::consts::PI / 3.0))
        .collect()
}

/// Points in the closed disk of radius `r` about the origin, off-center,
/// pairwise at least `r` apart, all up to `tol`.
pub fn is_valid_packing(points: &[Point], r: f64, tol: f64) -> bool {
    let origin = Point::new(0.0, 0.0);
    let placed = points.iter().all(|p| {
        let d = p.dist(&origin);
        d > tol && d <= r + tol
    });
    let spaced = points
        .iter()
        .enumerate()
        .all(|(i, p)| points[i + 1..].iter().all(|q| p.dist(q) >= r - tol));
    placed && spaced
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rectangle;

    #[test]
    fn compliant_input_is_a_fixpoint() {
        let d = Deployment::new(vec![Point::new(0.5, 0.5)], 1.0, 2.0, Rectangle::new(1.0, 1.0).unwrap(), None).unwrap();
        let r = redistribute(&d).unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.final_deployment, d);
    }

    #[test]
    fn redundant_sensor_is_dropped() {
        let d = Deployment::new(
            vec![Point::new(0.5, 0.5), Point::new(0.6, 0.5)],
            1.0,
            2.0,
            Rectangle::new(1.0, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let r = redistribute(&d).unwrap();
        assert_eq!(r.steps.len(), 1);
        let s = &r.steps[0];
        assert_eq!((s.removed_id, s.partner_id), (1, 0));
        assert_eq!(s.removed_pos, Point::new(0.6, 0.5));
        assert!(s.added.is_empty());
        assert_eq!(r.final_deployment.sensors(), &[Point::new(0.5, 0.5)]);
    }

    #[test]
    fn rejects_uncovered_or_invalid_input() {
        let d = Deployment::new(vec![Point::new(0.0, 0.0)], 1.0, 2.0, Rectangle::new(1.0, 1.0).unwrap(), None).unwrap();
        assert_eq!(redistribute(&d), Err(RedistributeError::NotCovering));
        let d = Deployment::new(vec![Point::new(0.25, 0.25)], 1.0, 2.0, Rectangle::new(0.5, 0.5).unwrap(), None).unwrap();
        assert_eq!(redistribute(&d), Err(RedistributeError::RegionInvalid));
    }

    #[test]
    fn patches_a_real_hole() {
        // A chain of close pairs in a 3x1 strip: dropping the middle
        // sensors opens a gap between the two outer ones.
        let d = Deployment::new(
            vec![
                Point::new(0.3, 0.5),
                Point::new(1.2, 0.5),
                Point::new(1.9, 0.5),
                Point::new(2.7, 0.5),
            ],
            1.0,
            2.0,
            Rectangle::new(3.0, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let r = redistribute(&d).unwrap();
        assert!(check_spacing(&r.final_deployment).ok);
        assert!(check_coverage(&r.final_deployment).covered);
        assert!(r.max_additions() <= MAX_ADDITIONS_PER_STEP);
        assert!(r.steps.iter().any(|s| !s.added.is_empty()));
        assert_eq!(r.steps[0].removed_id, 2);
        for step in &r.steps {
            for p in &step.added {
                assert!(p.dist(&step.removed_pos) <= 1.0 + 1e-9);
            }
        }
        assert!(redistribute(&r.final_deployment).unwrap().steps.is_empty());
    }

    #[test]
    fn hexagon_is_a_valid_six_packing() {
        let hex = hexagon_packing(1.0);
        assert!(is_valid_packing(&hex, 1.0, 1e-12));
        for k in 0..6 {
            let d = hex[k].dist(&hex[(k + 1) % 6]);
            assert!((d - 1.0).abs() < 1e-12);
        }
        let mut with_center = hex.clone();
        with_center.push(Point::new(0.0, 0.0));
        assert!(!is_valid_packing(&with_center, 1.0, 1e-12));
    }

    #[test]
    fn packing_search_examples() {
        assert_eq!(max_packing_in_disk_with(1.0, 1, 1, 42), 1);
        let found = max_packing_in_disk(1.0, 2000, 42);
        assert!((1..=6).contains(&found));
        assert_eq!(found, max_packing_in_disk(1.0, 2000, 42));
    }
}
