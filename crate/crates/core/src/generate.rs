//! Seeded deployment generators.
//!
//! All randomness comes from ChaCha8 seeded with `GenSpec::seed` through
//! `seed_from_u64`; independent draws use separate ChaCha streams
//! (`set_stream(k)`), so output depends only on the `GenSpec` and never on
//! evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::check_coverage;
use crate::deployment::{Deployment, DeploymentError};
use crate::geometry::{Point, Rectangle, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("spacing factor must be positive and finite (got {0})")]
    BadSpacingFactor(f64),
    #[error("jitter amplitude must be non-negative and finite (got {0})")]
    BadJitter(f64),
    #[error("patience must be at least 1")]
    BadPatience,
    #[error("target intensity must be positive and finite (got {0})")]
    BadIntensity(f64),
    #[error("could not place injected sensor {0} inside the region")]
    InjectionFailed(usize),
    #[error(transparent)]
    Deployment(#[from] DeploymentError),
}

fn default_patience() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum GenKind {
    /// Triangular lattice of pitch `spacing_factor * r_s`.
    TriangularLattice { spacing_factor: f64 },
    /// Lattice with each point displaced by at most `jitter * r_s`.
    JitteredLattice { spacing_factor: f64, jitter: f64 },
    /// Random sequential placement with pairwise distance at least `r_s`.
    HardcoreRandom {
        #[serde(default = "default_patience")]
        patience: usize,
        /// Sensors per unit area at which placement stops early.
        #[serde(default)]
        target_intensity: Option<f64>,
    },
    /// Covering lattice with `pairs` extra sensors, each closer than `r_s`
    /// to an existing one.
    AdversarialPairs { spacing_factor: f64, pairs: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub region: Rectangle,
    pub r_s: f64,
    pub r_c: f64,
    #[serde(flatten)]
    pub kind: GenKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl GenSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn tol(&self) -> Result<Tolerance, GenerateError> {
        match self.tolerance {
            Some(t) => Ok(Tolerance::new(t, self.r_s).map_err(DeploymentError::from)?),
            None => Ok(Tolerance::default_for(self.r_s)),
        }
    }

    fn validate(&self) -> Result<(), GenerateError> {
        Rectangle::new(self.region.a, self.region.b).map_err(DeploymentError::from)?;
        let factor_ok = |f: f64| f > 0.0 && f.is_finite();
        match self.kind {
            GenKind::TriangularLattice { spacing_factor } | GenKind::AdversarialPairs { spacing_factor, .. } => {
                if !factor_ok(spacing_factor) {
                    return Err(GenerateError::BadSpacingFactor(spacing_factor));
                }
            }
            GenKind::JitteredLattice { spacing_factor, jitter } => {
                if !factor_ok(spacing_factor) {
                    return Err(GenerateError::BadSpacingFactor(spacing_factor));
                }
                if !(jitter >= 0.0 && jitter.is_finite()) {
                    return Err(GenerateError::BadJitter(jitter));
                }
            }
            GenKind::HardcoreRandom { patience, target_intensity } => {
                if patience == 0 {
                    return Err(GenerateError::BadPatience);
                }
                if let Some(t) = target_intensity {
                    if !factor_ok(t) {
                        return Err(GenerateError::BadIntensity(t));
                    }
                }
            }
        }
        Ok(())
    }
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

pub fn generate(spec: &GenSpec) -> Result<Deployment, GenerateError> {
    spec.validate()?;
    let tol = spec.tol()?;
    let empty = Deployment::new(Vec::new(), spec.r_s, spec.r_c, spec.region, Some(tol))?;
    let sensors = match spec.kind {
        GenKind::TriangularLattice { spacing_factor } => {
            covering_lattice(&empty, spacing_factor * spec.r_s, Point::new(0.0, 0.0), spec.r_s)?
        }
        GenKind::JitteredLattice { spacing_factor, jitter } => {
            // Covering at the shrunken radius survives any move within the
            // amplitude.
            let amplitude = jitter * spec.r_s;
            let frame = if amplitude < 0.5 * spec.r_s {
                let r = spec.r_s - amplitude;
                Deployment::new(Vec::new(), r, spec.r_c, spec.region, Some(Tolerance::default_for(r)))?
            } else {
                empty.clone()
            };
            let base = covering_lattice(&frame, spacing_factor * spec.r_s, Point::new(0.0, 0.0), spec.r_s)?;
            jitter_points(base, amplitude, spec)
        }
        GenKind::HardcoreRandom { patience, target_intensity } => {
            let cap = target_intensity.map(|t| (t * spec.region.area()).ceil() as usize);
            hardcore_points(spec, patience, cap)
        }
        GenKind::AdversarialPairs { spacing_factor, pairs } => {
            let pitch = spacing_factor * spec.r_s;
            let mut rng = stream(spec.seed, 0);
            let origin = Point::new(
                rng.gen_range(0.0..pitch),
                rng.gen_range(0.0..pitch * 3f64.sqrt() / 2.0),
            );
            let base = covering_lattice(&empty, pitch, origin, spec.r_s)?;
            inject_pairs(base, pairs, spec)?
        }
    };
    Ok(empty.with_points(sensors)?)
}

impl Deployment {
    fn with_points(&self, sensors: Vec<Point>) -> Result<Deployment, DeploymentError> {
        Deployment::new(sensors, self.r_s(), self.r_c(), self.region(), Some(self.tolerance()))
    }
}

/// Triangular lattice through `origin` with the given pitch: points inside
/// the closed region, and the projections onto the region of the points in
/// a one-pitch band around it.
fn lattice_layers(region: Rectangle, pitch: f64, origin: Point, slack: f64) -> (Vec<Point>, Vec<Point>) {
    let row = pitch * 3f64.sqrt() / 2.0;
    let j_lo = ((-pitch - origin.y) / row).floor() as i64;
    let j_hi = ((region.b + pitch - origin.y) / row).ceil() as i64;
    let mut inside = Vec::new();
    let mut band = Vec::new();
    for j in j_lo..=j_hi {
        let y = origin.y + j as f64 * row;
        let shift = if j.rem_euclid(2) == 1 { 0.5 * pitch } else { 0.0 };
        let i_lo = ((-pitch - origin.x - shift) / pitch).floor() as i64;
        let i_hi = ((region.a + pitch - origin.x - shift) / pitch).ceil() as i64;
        for i in i_lo..=i_hi {
            let p = Point::new(origin.x + shift + i as f64 * pitch, y);
            if region.contains_with_slack(p, slack) {
                inside.push(region.clamp(p));
            } else if region.contains_with_slack(p, pitch) {
                band.push(region.clamp(p));
            }
        }
    }
    (inside, band)
}

/// Lattice clipped to the region, then completed along the boundary: while
/// the checker finds an uncovered point, a projected band point covering it
/// is added, preferring points at least `r_s` from all others and then the
/// nearest. Projection onto a convex set never increases the
/// distance to points of that set, so for pitch below `√3 r_s` the full
/// projected band covers whatever the clipped lattice misses.
fn covering_lattice(frame: &Deployment, pitch: f64, origin: Point, spacing: f64) -> Result<Vec<Point>, GenerateError> {
    let tau = frame.tau();
    let (mut points, band) = lattice_layers(frame.region(), pitch, origin, tau);
    dedup_within(&mut points, tau);
    let reach = frame.r_s() - tau;
    let mut current = frame.with_points(points.clone())?;
    let mut used = vec![false; band.len()];
    loop {
        let report = check_coverage(&current);
        let Some(w) = report.witness else { break };
        let pick = band
            .iter()
            .enumerate()
            .filter(|&(k, q)| !used[k] && q.dist(&w) < reach)
            .filter(|(_, q)| points.iter().all(|p| p.dist(q) >= tau))
            .map(|(k, q)| (points.iter().any(|p| p.dist(q) < spacing), q.dist(&w), k, q))
            .min_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)))
            .map(|(_, _, k, q)| (k, q));
        let Some((k, q)) = pick else { break };
        used[k] = true;
        points.push(*q);
        current = frame.with_points(points.clone())?;
    }
    Ok(points)
}

fn dedup_within(points: &mut Vec<Point>, tau: f64) {
    let mut kept: Vec<Point> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if kept.iter().all(|q| q.dist(&p) >= tau) {
            kept.push(p);
        }
    }
    *points = kept;
}

const JITTER_ATTEMPTS: usize = 8;

/// Displaces points one at a time, keeping each move only if the point stays
/// in the region and at least `r_s` from every other point. A final pass
/// drops any point still too close to an earlier one.
fn jitter_points(mut points: Vec<Point>, amplitude: f64, spec: &GenSpec) -> Vec<Point> {
    let region = spec.region;
    let r_s = spec.r_s;
    for k in 0..points.len() {
        if amplitude == 0.0 {
            break;
        }
        let mut rng = stream(spec.seed, k as u64);
        for _ in 0..JITTER_ATTEMPTS {
            let rho = amplitude * rng.gen_range(0.0..=1.0f64).sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let cand = Point::new(points[k].x + rho * theta.cos(), points[k].y + rho * theta.sin());
            if !region.contains(cand) {
                continue;
            }
            let clear = points
                .iter()
                .enumerate()
                .all(|(m, q)| m == k || q.dist(&cand) >= r_s);
            if clear {
                points[k] = cand;
                break;
            }
        }
    }
    let mut kept: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if kept.iter().all(|q| q.dist(&p) >= r_s) {
            kept.push(p);
        }
    }
    kept
}

fn hardcore_points(spec: &GenSpec, patience: usize, cap: Option<usize>) -> Vec<Point> {
    let mut rng = stream(spec.seed, 0);
    let region = spec.region;
    let mut kept: Vec<Point> = Vec::new();
    let mut misses = 0;
    while misses < patience && cap.is_none_or(|c| kept.len() < c) {
        let cand = Point::new(rng.gen_range(0.0..=region.a), rng.gen_range(0.0..=region.b));
        if kept.iter().all(|q| q.dist(&cand) >= spec.r_s) {
            kept.push(cand);
            misses = 0;
        } else {
            misses += 1;
        }
    }
    kept
}

const INJECTION_ATTEMPTS: usize = 64;

fn inject_pairs(mut points: Vec<Point>, pairs: usize, spec: &GenSpec) -> Result<Vec<Point>, GenerateError> {
    if points.is_empty() && pairs > 0 {
        return Err(GenerateError::InjectionFailed(0));
    }
    let base = points.len();
    let tau = spec.tol()?.tau();
    for m in 0..pairs {
        let mut rng = stream(spec.seed, 1 + m as u64);
        let mut placed = false;
        for _ in 0..INJECTION_ATTEMPTS {
            let anchor = points[rng.gen_range(0..base)];
            let rho = spec.r_s * rng.gen_range(0.01..0.99);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let cand = Point::new(anchor.x + rho * theta.cos(), anchor.y + rho * theta.sin());
            if spec.region.contains(cand) && points.iter().all(|q| q.dist(&cand) >= 16.0 * tau) {
                points.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(GenerateError::InjectionFailed(m));
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commgraph::check_spacing;
    use crate::coverage::sample_coverage_oracle;

    fn spec(kind: GenKind) -> GenSpec {
        GenSpec {
            region: Rectangle::new(10.0, 10.0).unwrap(),
            r_s: 1.0,
            r_c: 2.0,
            kind,
            seed: 7,
            tolerance: None,
        }
    }

    #[test]
    fn unit_lattice_covers_and_is_spaced() {
        let d = generate(&spec(GenKind::TriangularLattice { spacing_factor: 1.0 })).unwrap();
        assert!(check_coverage(&d).covered);
        assert!(check_spacing(&d).ok);
        assert!(sample_coverage_oracle(&d, 1.0 / 200.0).unwrap().covered);
    }

    #[test]
    fn wide_lattice_leaves_holes() {
        let d = generate(&spec(GenKind::TriangularLattice { spacing_factor: 1.8 })).unwrap();
        assert!(!check_coverage(&d).covered);
        assert!(!sample_coverage_oracle(&d, 1.0 / 200.0).unwrap().covered);
    }

    #[test]
    fn boundary_completion_covers_odd_sizes() {
        let mut s = spec(GenKind::TriangularLattice { spacing_factor: 1.7 });
        s.region = Rectangle::new(7.3, 4.1).unwrap();
        let d = generate(&s).unwrap();
        assert!(check_coverage(&d).covered);
        assert!(sample_coverage_oracle(&d, 1.0 / 100.0).unwrap().covered);
    }

    #[test]
    fn adversarial_pairs_inject_violations() {
        let d = generate(&spec(GenKind::AdversarialPairs { spacing_factor: 1.0, pairs: 5 })).unwrap();
        let base = d.len() - 5;
        let report = check_spacing(&d);
        let injected = report
            .violating_pairs
            .iter()
            .filter(|v| v.second >= base)
            .map(|v| v.second)
            .collect::<std::collections::BTreeSet<_>>();
        assert_eq!(injected.len(), 5);
        assert!(report.violating_pairs.len() >= 5);
        assert!(check_coverage(&d).covered);
    }

    #[test]
    fn jittered_lattice_is_always_spaced() {
        for seed in 0..20 {
            let s = spec(GenKind::JitteredLattice { spacing_factor: 1.3, jitter: 0.4 }).with_seed(seed);
            let d = generate(&s).unwrap();
            assert!(check_spacing(&d).ok, "seed {seed}");
        }
    }

    #[test]
    fn hardcore_is_spaced_and_saturates() {
        let d = generate(&spec(GenKind::HardcoreRandom { patience: 5000, target_intensity: None })).unwrap();
        assert!(check_spacing(&d).ok);
        assert!(d.len() > 40);
        let capped = generate(&spec(GenKind::HardcoreRandom { patience: 5000, target_intensity: Some(0.2) })).unwrap();
        assert_eq!(capped.len(), 20);
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(GenKind::JitteredLattice { spacing_factor: 1.5, jitter: 0.25 }).with_seed(99);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(generate(&s).unwrap(), generate(&s.with_seed(100)).unwrap());
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(
            generate(&spec(GenKind::TriangularLattice { spacing_factor: 0.0 })),
            Err(GenerateError::BadSpacingFactor(_))
        ));
        assert!(matches!(
            generate(&spec(GenKind::JitteredLattice { spacing_factor: 1.0, jitter: -0.1 })),
            Err(GenerateError::BadJitter(_))
        ));
        assert!(matches!(
            generate(&spec(GenKind::HardcoreRandom { patience: 0, target_intensity: None })),
            Err(GenerateError::BadPatience)
        ));
    }

    #[test]
    fn spec_json_shape() {
        let s = spec(GenKind::JitteredLattice { spacing_factor: 1.5, jitter: 0.25 });
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["kind"], "jittered_lattice");
        assert_eq!(v["params"]["jitter"], 0.25);
        let back: GenSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
