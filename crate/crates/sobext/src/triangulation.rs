//! The hyperbolic triangulation machinery: annular Whitney sectors and their
//! images, boundary marks, hyperbolic geodesics in the disk and exterior
//! models, piecewise hyperbolic geodesics through the approximation family,
//! hyperbolic triangles with degenerate-case classification, coincidence
//! classes with ancestors and family chains, cut-point detection and the
//! ball-separation probe.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::ModelDomain;
use crate::conformal::{wrap_angle, ApproximationFamily, DiskMap, ExteriorMap};
use crate::geometry::{
    dedup_points, diam_point_set, Point, Polyline, PolygonalDomain,
};
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A boundary mark: prevertex angle on the unit circle and its image.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Mark {
    pub angle: f64,
    pub point: Point,
    /// arc-length station along the boundary walk
    pub station: f64,
}

/// Whitney sectors of the disk and their boundary marks per annulus level.
#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    pub k0: u32,
    pub kmax: u32,
    /// marks[k-1][j-1] is the mark x_k^(j), j = 1..=2^(k+k0+1)
    pub marks: Vec<Vec<Mark>>,
    pub max_gap: f64,
    pub lambda_max: f64,
    pub diam: f64,
}

pub fn sector_count(k: u32, k0: u32) -> usize {
    1usize << (k + k0 + 1)
}

pub fn mark_angle(k: u32, k0: u32, j: usize) -> f64 {
    j as f64 * std::f64::consts::PI * 2f64.powi(-((k + k0) as i32))
}

impl WhitneyDecomposition {
    pub fn mark(&self, k: u32, j: usize) -> &Mark {
        let n = sector_count(k, self.k0);
        &self.marks[(k - 1) as usize][(j + n - 1) % n]
    }

    /// Model-side sector D_k^(j): radial interval x angular interval.
    pub fn sector_bounds(&self, k: u32, j: usize) -> ((f64, f64), (f64, f64)) {
        let r = if k == 1 {
            (0.0, 0.5)
        } else {
            (1.0 - 2f64.powi(1 - k as i32), 1.0 - 2f64.powi(-(k as i32)))
        };
        let a0 = mark_angle(k, self.k0, j - 1);
        let a1 = mark_angle(k, self.k0, j);
        (r, (a0, a1))
    }

    /// Interior sample points of the image Q_k^(j) under the disk map.
    pub fn sector_image_samples(&self, m: &DiskMap, k: u32, j: usize, n: usize) -> Vec<Point> {
        let ((r0, r1), (a0, a1)) = self.sector_bounds(k, j);
        let mut out = Vec::with_capacity(n * n);
        for ri in 0..n {
            for ai in 0..n {
                let r = r0 + (r1 - r0) * (ri as f64 + 0.5) / n as f64;
                let a = a0 + (a1 - a0) * (ai as f64 + 0.5) / n as f64;
                out.push(m.evaluate(Point::new(r * a.cos(), r * a.sin())));
            }
        }
        out
    }

    /// Whitney constant estimate for the image of sector (k, j).
    pub fn sector_whitney_lambda(&self, m: &DiskMap, k: u32, j: usize) -> f64 {
        let samples = self.sector_image_samples(m, k, j, 5);
        let diam = diam_point_set(&samples);
        let dist = samples
            .iter()
            .map(|p| m.domain.dist_to_boundary(*p))
            .fold(f64::INFINITY, f64::min);
        // inscribed-disk radius from the deepest sample against the sector
        // image boundary, proxied by distance to the domain boundary and the
        // sample cloud extent
        let ((r0, r1), (a0, a1)) = self.sector_bounds(k, j);
        let centre = Point::new(
            0.5 * (r0 + r1) * (0.5 * (a0 + a1)).cos(),
            0.5 * (r0 + r1) * (0.5 * (a0 + a1)).sin(),
        );
        let model_inr = 0.5 * (r1 - r0).min((a1 - a0) * 0.5 * (r0 + r1));
        let c_img = m.evaluate(centre);
        let edge_img = m.evaluate(Point::new(
            (0.5 * (r0 + r1) + model_inr) * (0.5 * (a0 + a1)).cos(),
            (0.5 * (r0 + r1) + model_inr) * (0.5 * (a0 + a1)).sin(),
        ));
        let inr = c_img.dist(edge_img);
        (diam / inr.max(1e-300))
            .max(diam / dist.max(1e-300))
            .max(dist / diam.max(1e-300))
            .max(1.0)
    }
}

/// Smallest k0 <= 16 such that all adjacent mark gaps stay below
/// delta * diam over the probed levels; reports the achieved gap.
pub fn select_k0(m: &DiskMap, delta: f64) -> Result<(u32, f64)> {
    if !(0.0..1.0).contains(&delta) && delta < 2.0 {
        // delta >= 2 means every gap passes trivially; delta <= 0 is invalid
        if delta <= 0.0 {
            return Err(Error::InvalidDomain("delta must be positive".into()));
        }
    }
    let diam = m.domain.diameter();
    let k_probe = 4;
    for k0 in 1..=16u32 {
        let mut worst: f64 = 0.0;
        for k in 1..=k_probe {
            let n = sector_count(k, k0);
            let pts: Vec<Point> = (0..n)
                .map(|j| m.boundary_point(mark_angle(k, k0, j)))
                .collect();
            for j in 0..n {
                worst = worst.max(pts[j].dist(pts[(j + 1) % n]));
            }
        }
        if worst <= delta * diam {
            return Ok((k0, worst));
        }
    }
    Err(Error::Resolution(format!(
        "no k0 <= 16 achieves mark gaps below {delta} diam"
    )))
}

/// Builds marks for all levels k = 1..=kmax and runs Whitney-type checks on
/// a sample of sector images.
pub fn build_decomposition(
    m: &DiskMap,
    k0: u32,
    kmax: u32,
    delta: f64,
) -> Result<WhitneyDecomposition> {
    if kmax < 2 {
        return Err(Error::InvalidDomain("kmax must be >= 2".into()));
    }
    let diam = m.domain.diameter();
    let mut marks = Vec::new();
    let mut max_gap = 0.0f64;
    for k in 1..=kmax {
        let n = sector_count(k, k0);
        let level: Vec<Mark> = (1..=n)
            .map(|j| {
                let angle = mark_angle(k, k0, j);
                let station = m.boundary_table.station(angle);
                Mark {
                    angle,
                    point: m.boundary_table.walk.point_at(station),
                    station,
                }
            })
            .collect();
        for j in 0..n {
            max_gap = max_gap.max(level[j].point.dist(level[(j + 1) % n].point));
        }
        marks.push(level);
    }
    if max_gap > delta * diam * 1.5 {
        return Err(Error::Resolution(format!(
            "mark gap {max_gap:.3e} exceeds delta diam; increase k0"
        )));
    }
    let mut dec = WhitneyDecomposition {
        k0,
        kmax,
        marks,
        max_gap,
        lambda_max: 0.0,
    diam,
    };
    // Whitney check over a sample of sectors
    let mut lambda_max = 0.0f64;
    for k in 1..=kmax.min(5) {
        let n = sector_count(k, k0);
        let step = (n / 16).max(1);
        for j in (1..=n).step_by(step) {
            lambda_max = lambda_max.max(dec.sector_whitney_lambda(m, k, j));
        }
    }
    if !lambda_max.is_finite() || lambda_max > 1e4 {
        return Err(Error::Invariant(format!(
            "Whitney-type check failed: lambda {lambda_max:.3e}"
        )));
    }
    dec.lambda_max = lambda_max;
    Ok(dec)
}

/// Circular-arc (or straight) support of a hyperbolic geodesic in a model
/// domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GeodesicArc {
    Segment {
        a: Point,
        b: Point,
    },
    Circle {
        center: Point,
        radius: f64,
        a0: f64,
        a1: f64,
    },
}

/// A hyperbolic geodesic in the unit-disk or exterior model: the arc of the
/// generalized circle through the endpoints that meets the unit circle
/// orthogonally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelGeodesic {
    pub model: ModelDomain,
    pub a: Point,
    pub b: Point,
    pub arc: GeodesicArc,
}

pub fn model_geodesic(a: Point, b: Point, model: ModelDomain) -> Result<ModelGeodesic> {
    if a.dist(b) == 0.0 {
        return Err(Error::Degenerate("geodesic endpoints coincide".into()));
    }
    // orthogonality: |c|^2 = r^2 + 1 forces 2 c . a = |a|^2 + 1, same for b
    let ka = a.x * a.x + a.y * a.y + 1.0;
    let kb = b.x * b.x + b.y * b.y + 1.0;
    let det = 2.0 * (a.x * b.y - a.y * b.x);
    let arc = if det.abs() < 1e-12 * ka.max(kb) {
        // collinear with the origin: straight chord / radial segment
        GeodesicArc::Segment { a, b }
    } else {
        let cx = (ka * b.y - kb * a.y) / det;
        let cy = (kb * a.x - ka * b.x) / det;
        let center = Point::new(cx, cy);
        let radius = (cx * cx + cy * cy - 1.0).max(0.0).sqrt();
        let a0 = (a.y - cy).atan2(a.x - cx);
        let mut a1 = (b.y - cy).atan2(b.x - cx);
        // two candidate arcs; take the one whose midpoint stays in the model
        let mid_of = |t0: f64, t1: f64| -> Point {
            let tm = 0.5 * (t0 + t1);
            Point::new(cx + radius * tm.cos(), cy + radius * tm.sin())
        };
        let mut alt = a1;
        if a1 > a0 {
            alt -= TWO_PI;
        } else {
            alt += TWO_PI;
        }
        let m1 = mid_of(a0, a1).dist(Point::new(0.0, 0.0));
        let m2 = mid_of(a0, alt).dist(Point::new(0.0, 0.0));
        let inside_first = match model {
            ModelDomain::Disk => m1 <= m2,
            ModelDomain::Exterior => m1 >= m2,
        };
        if !inside_first {
            a1 = alt;
        }
        GeodesicArc::Circle {
            center,
            radius,
            a0,
            a1,
        }
    };
    Ok(ModelGeodesic { model, a, b, arc })
}

impl ModelGeodesic {
    /// `n + 1` points from `a` to `b` along the geodesic.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        match &self.arc {
            GeodesicArc::Segment { a, b } => {
                (0..=n).map(|i| a.lerp(*b, i as f64 / n as f64)).collect()
            }
            GeodesicArc::Circle {
                center,
                radius,
                a0,
                a1,
            } => (0..=n)
                .map(|i| {
                    let t = a0 + (a1 - a0) * i as f64 / n as f64;
                    Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
                })
                .collect(),
        }
    }

    /// Point at the middle of the arc.
    pub fn midpoint(&self) -> Point {
        self.sample(2)[1]
    }

    /// Sub-arc between parameter fractions `t0 <= t1` in [0, 1].
    pub fn subarc_sample(&self, t0: f64, t1: f64, n: usize) -> Vec<Point> {
        let full = self.sample(256);
        let poly = Polyline::open(dedup_points(full)).unwrap();
        let len = poly.length();
        (0..=n)
            .map(|i| poly.point_at(len * (t0 + (t1 - t0) * i as f64 / n as f64)))
            .collect()
    }

    /// Orthogonality defect |(|c|^2 - r^2 - 1)| of the supporting circle.
    pub fn orthogonality_defect(&self) -> f64 {
        match &self.arc {
            GeodesicArc::Segment { .. } => 0.0,
            GeodesicArc::Circle { center, radius, .. } => {
                (center.x * center.x + center.y * center.y - radius * radius - 1.0).abs()
            }
        }
    }
}

/// A maximal run of a piecewise hyperbolic geodesic inside one complement
/// component (component index 1 = unbounded) or along the boundary
/// (component 0, `on_boundary` set).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicPiece {
    pub component: usize,
    pub on_boundary: bool,
    pub polyline: Polyline,
}

/// Arc-length limit of hyperbolic geodesics in the exteriors of the nested
/// Jordan approximations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiecewiseHyperbolicGeodesic {
    pub labels: (f64, f64),
    pub endpoints: (Point, Point),
    pub polyline: Polyline,
    pub convergence_log: Vec<f64>,
    pub sup_steps: Vec<f64>,
    pub converged: bool,
    pub constant: bool,
    pub pieces: Vec<GeodesicPiece>,
}

#[derive(Debug, Clone, Copy)]
pub struct GeodesicOptions {
    pub tol: f64,
    pub samples: usize,
    /// use only odd levels (uniqueness cross-check)
    pub odd_levels_only: bool,
}

impl GeodesicOptions {
    pub fn for_domain(d: &PolygonalDomain) -> GeodesicOptions {
        GeodesicOptions {
            tol: 2e-3 * d.diameter(),
            samples: 48,
            odd_levels_only: false,
        }
    }
}

/// Model angle of the boundary point of level `n` corresponding to circle
/// parameter `t` (via the level's vertex parameter table). Only called when
/// the level has an exterior map.
fn level_model_angle(level: &crate::conformal::FamilyLevel, t: f64) -> f64 {
    let params = &level.params;
    let n = params.len();
    let t = wrap_angle(t);
    // params are increasing apart from wrap; find bracketing vertex pair
    let mut idx = n - 1;
    for i in 0..n {
        if params[i] > t {
            idx = if i == 0 { n - 1 } else { i - 1 };
            break;
        }
    }
    let p0 = params[idx];
    let p1 = params[(idx + 1) % n] + if (idx + 1) % n == 0 { TWO_PI } else { 0.0 };
    let p1 = if p1 <= p0 { p0 + (TWO_PI / n as f64) } else { p1 };
    let frac = ((t - p0) / (p1 - p0)).clamp(0.0, 1.0);
    // station of the bracketing vertices along the level polygon
    let acc = level.dn.outer.cumulative_lengths();
    let s0 = acc[idx];
    let s1 = if idx + 1 < acc.len() { acc[idx + 1] } else { acc[idx] };
    level
        .ext
        .as_ref()
        .expect("level_model_angle requires an exterior map")
        .theta_at_station(s0 + frac * (s1 - s0))
}

/// Hyperbolic geodesic of the exterior of one approximation level joining
/// the level points at circle parameters `t0`, `t1`. When the model angles
/// are too crowded to resolve (deep slit blades), the geodesic hugs the
/// level curve and is replaced by the shorter boundary walk between the
/// stations, which agrees with it to within the blade width.
fn level_geodesic(
    m: &DiskMap,
    level: &crate::conformal::FamilyLevel,
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<Polyline> {
    let r = level.radius;
    let x = m.evaluate(Point::new(r * t0.cos(), r * t0.sin()));
    let y = m.evaluate(Point::new(r * t1.cos(), r * t1.sin()));
    let ext = match &level.ext {
        Some(ext) => ext,
        None => return level_boundary_walk(level, t0, t1, x, y),
    };
    let th0 = level_model_angle(level, t0);
    let th1 = level_model_angle(level, t1);
    let a = Point::new(th0.cos(), th0.sin());
    let b = Point::new(th1.cos(), th1.sin());
    if a.dist(b) < 1e-7 {
        return level_boundary_walk(level, t0, t1, x, y);
    }
    let arc = model_geodesic(a, b, ModelDomain::Exterior)?;
    let model_pts = arc.sample(samples);
    let mut pts = Vec::with_capacity(samples + 1);
    pts.push(x);
    for p in model_pts.iter().take(samples).skip(1) {
        // push the model point slightly off the unit circle before inverting
        let r = p.dist(Point::new(0.0, 0.0)).max(1.0 + 1e-9);
        let scale = r / p.dist(Point::new(0.0, 0.0));
        pts.push(ext.invert(Point::new(p.x * scale, p.y * scale)));
    }
    pts.push(y);
    let direct = Polyline::open(dedup_points(pts))?;
    // crowding safeguard: the geodesic can never be much longer than the
    // walk between the stations; fall back when inversion went astray
    let walk = level_boundary_walk(level, t0, t1, x, y)?;
    if direct.length() > 3.0 * walk.length() + 1e-9 {
        return Ok(walk);
    }
    Ok(direct)
}

/// Shorter boundary-walk path of the level polygon between the stations of
/// circle parameters `t0`, `t1`, with the exact level points appended.
fn level_boundary_walk(
    level: &crate::conformal::FamilyLevel,
    t0: f64,
    t1: f64,
    x: Point,
    y: Point,
) -> Result<Polyline> {
    let outer = &level.dn.outer;
    let total = outer.length();
    let station_of = |t: f64| -> f64 {
        let params = &level.params;
        let n = params.len();
        let t = wrap_angle(t);
        let mut idx = n - 1;
        for i in 0..n {
            if params[i] > t {
                idx = if i == 0 { n - 1 } else { i - 1 };
                break;
            }
        }
        let acc = outer.cumulative_lengths();
        acc[idx]
    };
    let s0 = station_of(t0);
    let s1 = station_of(t1);
    let (lo, hi) = (s0.min(s1), s0.max(s1));
    let through = hi - lo;
    let around = total - through;
    let mut pts = vec![x];
    let steps = 48;
    if through <= around {
        for i in 1..steps {
            pts.push(outer.point_at(lo + through * i as f64 / steps as f64));
        }
    } else {
        for i in 1..steps {
            pts.push(outer.point_at((hi + around * i as f64 / steps as f64) % total));
        }
        pts.reverse();
        pts[0] = x;
    }
    pts.push(y);
    // orient from x to y
    if pts[0].dist(x) > pts.last().unwrap().dist(x) {
        pts.reverse();
    }
    Polyline::open(dedup_points(pts))
}

/// Builds the piecewise hyperbolic geodesic associated to two boundary
/// labels through the approximation family.
pub fn piecewise_geodesic(
    labels: (f64, f64),
    m: &DiskMap,
    fam: &ApproximationFamily,
    opts: &GeodesicOptions,
) -> Result<PiecewiseHyperbolicGeodesic> {
    let d = &m.domain;
    let x = m.boundary_point(labels.0);
    let y = m.boundary_point(labels.1);
    let diam = d.diameter();
    if x.dist(y) <= 3e-3 * diam {
        // constant curve
        let polyline = Polyline::open(vec![x, Point::new(x.x + 1e-12 * diam, x.y)])?;
        return Ok(PiecewiseHyperbolicGeodesic {
            labels,
            endpoints: (x, y),
            polyline: polyline.clone(),
            convergence_log: vec![0.0],
            sup_steps: vec![],
            converged: true,
            constant: true,
            pieces: vec![],
        });
    }
    let mut prev: Option<Polyline> = None;
    let mut lengths = Vec::new();
    let mut sup_steps = Vec::new();
    let mut converged = false;
    let mut last_curve: Option<Polyline> = None;
    for level in &fam.levels {
        if opts.odd_levels_only && level.n % 2 == 0 {
            continue;
        }
        let curve = level_geodesic(m, level, labels.0, labels.1, opts.samples)?;
        lengths.push(curve.length());
        if let Some(prev_curve) = &prev {
            let sup = prev_curve.sup_distance(&curve, opts.samples);
            sup_steps.push(sup);
            if sup < opts.tol {
                converged = true;
                last_curve = Some(curve);
                break;
            }
        }
        prev = Some(curve.clone());
        last_curve = Some(curve);
    }
    let polyline = last_curve.ok_or_else(|| Error::Convergence("no levels built".into()))?;
    if !converged {
        // a truncated family cannot refine further; accept a Cauchy tail
        // that reached its running minimum, and record the log
        let tail = sup_steps.last().copied().unwrap_or(f64::INFINITY);
        let min_step = sup_steps.iter().copied().fold(f64::INFINITY, f64::min);
        let acceptable =
            fam.truncated && tail <= (3.0 * min_step).max(4.0 * opts.tol) && tail < 0.05 * diam;
        if !acceptable {
            return Err(Error::Convergence(format!(
                "piecewise geodesic not Cauchy: last step {tail:.3e} (log {sup_steps:?})"
            )));
        }
    }
    let pieces = classify_pieces(&polyline, d);
    Ok(PiecewiseHyperbolicGeodesic {
        labels,
        endpoints: (x, y),
        polyline,
        convergence_log: lengths,
        sup_steps,
        converged,
        constant: false,
        pieces,
    })
}

/// Splits a complement curve into maximal runs per complement component and
/// boundary-running stretches.
pub fn classify_pieces(curve: &Polyline, d: &PolygonalDomain) -> Vec<GeodesicPiece> {
    let tol = 3e-3 * d.diameter();
    let samples = curve.resample(96);
    let mut runs: Vec<(bool, Vec<Point>)> = Vec::new(); // (on_boundary, pts)
    for p in samples {
        let on_b = d.dist_to_boundary(p) <= tol;
        match runs.last_mut() {
            Some((b, pts)) if *b == on_b => pts.push(p),
            _ => runs.push((on_b, vec![p])),
        }
    }
    let mut out = Vec::new();
    for (on_b, pts) in runs {
        if pts.len() < 2 {
            continue;
        }
        let poly = match Polyline::open(dedup_points(pts)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        if poly.length() < 2.0 * tol {
            continue;
        }
        out.push(GeodesicPiece {
            component: if on_b { 0 } else { 1 },
            on_boundary: on_b,
            polyline: poly,
        });
    }
    out
}

/// Subcurve quasiconvexity: largest ratio of subcurve length to endpoint
/// distance over sampled parameter pairs.
pub fn subcurve_constant(curve: &Polyline, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = curve.length();
    let mut worst = 1.0f64;
    for _ in 0..pairs {
        let s0 = rng.gen_range(0.0..len);
        let s1 = rng.gen_range(0.0..len);
        let (s0, s1) = (s0.min(s1), s0.max(s1));
        if s1 - s0 < 1e-6 * len {
            continue;
        }
        let a = curve.point_at(s0);
        let b = curve.point_at(s1);
        if a.dist(b) > 1e-9 * len {
            worst = worst.max((s1 - s0) / a.dist(b));
        }
    }
    worst
}

/// Identifier of the geodesic joining marks (j-1, j) at level k; k = 0 is
/// the outer ring.
pub type CurveId = (u32, u32);

/// One edge of the triangulation in the plane.
#[derive(Debug, Clone)]
pub struct EdgeCurve {
    pub id: CurveId,
    pub polyline: Polyline,
    pub endpoints: (Point, Point),
    pub pieces: Vec<GeodesicPiece>,
    pub mark_gap: f64,
    /// achieved sup-convergence bound of the underlying piecewise geodesic
    /// (zero for direct exterior geodesics)
    pub convergence_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegenerateCase {
    None,
    PointMeeting,
    PartialOverlap,
}

/// A hyperbolic triangle R_k^(j) bounded by gamma_k^(j) and its two
/// children, or a ring triangle at k = 0.
#[derive(Debug, Clone)]
pub struct HyperbolicTriangle {
    pub k: u32,
    pub j: u32,
    pub vertices: [Point; 3],
    pub edges: [CurveId; 3],
    /// closed loop: edge 0, reverse edge 2, reverse edge 1
    pub boundary: Polyline,
    pub degenerate: DegenerateCase,
    pub area: f64,
    pub active_component: Option<usize>,
}

/// How triangulation edges are produced.
pub enum GeodesicSource<'a> {
    /// Jordan domain: direct hyperbolic geodesics of the exterior map.
    Direct(&'a ExteriorMap),
    /// General domain: piecewise geodesics through the family.
    Family(&'a ApproximationFamily),
}

/// Key of a geodesic piece: (k, j, component index).
pub type PieceKey = (u32, u32, usize);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveClass {
    pub id: usize,
    pub members: Vec<PieceKey>,
    pub ancestor: PieceKey,
    /// forced artificial membership of gamma_{1,i}^{(1)} per the assembly
    pub forced: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ChainRegistry {
    pub classes: Vec<CurveClass>,
    pub class_of: BTreeMap<PieceKey, usize>,
    pub chains: BTreeMap<PieceKey, Vec<PieceKey>>,
    /// pairs whose sup-distance fell in the ambiguity band [tol, 2 tol)
    pub ambiguous_pairs: Vec<(PieceKey, PieceKey)>,
    pub tol: f64,
}

/// The assembled triangulation: every edge geodesic, the triangles of all
/// levels (ring included when available), and the coincidence registry.
pub struct Triangulation {
    pub k0: u32,
    pub kmax: u32,
    pub edges: BTreeMap<CurveId, EdgeCurve>,
    /// ring data when the k = 0 ring exists (slit-free assembly)
    pub ring: Option<RingData>,
    pub triangles: Vec<HyperbolicTriangle>,
    pub chains: ChainRegistry,
    /// recorded constant in l(gamma) <= C |marks gap|
    pub edge_length_constant: f64,
}

/// The k = 0 ring: midpoint marks of the level-1 arcs and the closing
/// geodesics between them.
#[derive(Debug, Clone)]
pub struct RingData {
    /// ring vertices z_0^(j), j = 1..=2^(k0+2)
    pub midpoints: Vec<Point>,
    /// gamma_0^(j) polylines joining z_0^(j) to z_0^(j+1)
    pub ring_edges: Vec<Polyline>,
    /// halves of gamma_1^(j): (first half to the midpoint, second half)
    pub level1_halves: Vec<(Polyline, Polyline)>,
}

fn direct_edge(
    em: &ExteriorMap,
    dec: &WhitneyDecomposition,
    k: u32,
    j: usize,
    samples: usize,
) -> Result<(Polyline, ModelGeodesic)> {
    let m0 = dec.mark(k, j - 1);
    let m1 = dec.mark(k, j);
    let th0 = em.theta_at_station(m0.station);
    let th1 = em.theta_at_station(m1.station);
    let a = Point::new(th0.cos(), th0.sin());
    let b = Point::new(th1.cos(), th1.sin());
    if a.dist(b) < 1e-12 {
        let poly = Polyline::open(vec![m0.point, m1.point.lerp(m0.point, 0.999)])?;
        let arc = ModelGeodesic {
            model: ModelDomain::Exterior,
            a,
            b,
            arc: GeodesicArc::Segment { a, b },
        };
        return Ok((poly, arc));
    }
    let arc = model_geodesic(a, b, ModelDomain::Exterior)?;
    let model_pts = arc.sample(samples);
    let mut pts = Vec::with_capacity(samples + 1);
    pts.push(m0.point);
    for p in model_pts.iter().take(samples).skip(1) {
        let r = p.dist(Point::new(0.0, 0.0));
        let scale = r.max(1.0 + 1e-9) / r;
        pts.push(em.invert(Point::new(p.x * scale, p.y * scale)));
    }
    pts.push(m1.point);
    Ok((Polyline::open(dedup_points(pts))?, arc))
}

/// Closed loop through edge0, then reversed edge2, then reversed edge1,
/// with consecutive duplicates removed.
fn triangle_loop(e0: &Polyline, e1: &Polyline, e2: &Polyline) -> Result<Polyline> {
    let mut pts: Vec<Point> = Vec::new();
    pts.extend(e0.vertices().iter().copied());
    pts.extend(e2.reversed().vertices().iter().copied());
    pts.extend(e1.reversed().vertices().iter().copied());
    let mut clean = dedup_points(pts);
    if clean.len() > 1 && clean[0].dist(*clean.last().unwrap()) < 1e-12 {
        clean.pop();
    }
    if clean.len() < 3 {
        clean.push(Point::new(clean[0].x + 1e-12, clean[0].y));
        clean.push(Point::new(clean[0].x, clean[0].y + 1e-12));
    }
    Polyline::closed(clean)
}

/// Degenerate classification by edge-overlap length and enclosed area,
/// relative to the triangle's own scale.
fn classify_triangle(
    e0: &Polyline,
    e1: &Polyline,
    e2: &Polyline,
    boundary: &Polyline,
    scale: f64,
) -> (DegenerateCase, f64) {
    let area = boundary.signed_area().abs();
    let lmax = e0.length().max(e1.length()).max(e2.length());
    if lmax <= 1e-6 * scale {
        return (DegenerateCase::PointMeeting, area);
    }
    if area > 5e-3 * lmax * lmax {
        return (DegenerateCase::None, area);
    }
    // near-zero area: all three edges covered by the union of the others?
    let tol = (5e-3 * lmax).max(1e-6 * scale);
    let covered = |e: &Polyline, f: &Polyline, g: &Polyline| -> bool {
        e.resample(24)
            .iter()
            .all(|p| f.dist_to(*p).min(g.dist_to(*p)) <= 3.0 * tol)
    };
    let all_covered = covered(e0, e1, e2) && covered(e1, e0, e2) && covered(e2, e0, e1);
    if all_covered {
        (DegenerateCase::PointMeeting, area)
    } else {
        (DegenerateCase::PartialOverlap, area)
    }
}

/// Builds all triangles R_k^(j) for k <= kmax - 1 plus the k = 0 ring when a
/// direct exterior map is available, along with the coincidence registry.
pub fn build_triangles(
    m: &DiskMap,
    dec: &WhitneyDecomposition,
    source: &GeodesicSource,
    opts: &GeodesicOptions,
) -> Result<Triangulation> {
    let d = &m.domain;
    let diam = d.diameter();
    // all edge ids at levels 1..=kmax
    let mut ids: Vec<CurveId> = Vec::new();
    for k in 1..=dec.kmax {
        for j in 1..=sector_count(k, dec.k0) {
            ids.push((k, j as u32));
        }
    }
    let edge_results: Vec<Result<EdgeCurve>> = ids
        .par_iter()
        .map(|(k, j)| -> Result<EdgeCurve> {
            let m0 = dec.mark(*k, *j as usize - 1);
            let m1 = dec.mark(*k, *j as usize);
            let gap = m0.point.dist(m1.point);
            let (polyline, bound) = match source {
                GeodesicSource::Direct(em) => {
                    if gap < 1e-9 * diam {
                        (
                            Polyline::open(vec![m0.point, m1.point.lerp(m0.point, 0.999)])?,
                            0.0,
                        )
                    } else {
                        (direct_edge(em, dec, *k, *j as usize, opts.samples)?.0, 0.0)
                    }
                }
                GeodesicSource::Family(fam) => {
                    let g = piecewise_geodesic((m0.angle, m1.angle), m, fam, opts)?;
                    let bound = g.sup_steps.last().copied().unwrap_or(0.0);
                    (g.polyline, bound)
                }
            };
            let pieces = classify_pieces(&polyline, d);
            Ok(EdgeCurve {
                id: (*k, *j),
                polyline,
                endpoints: (m0.point, m1.point),
                pieces,
                mark_gap: gap,
                convergence_bound: bound,
            })
        })
        .collect();
    let mut edges: BTreeMap<CurveId, EdgeCurve> = BTreeMap::new();
    for r in edge_results {
        let e = r?;
        edges.insert(e.id, e);
    }
    // recorded constant: l(gamma) <= C |gap|
    let mut edge_length_constant = 0.0f64;
    for e in edges.values() {
        if e.mark_gap > 1e-6 * diam {
            edge_length_constant = edge_length_constant.max(e.polyline.length() / e.mark_gap);
        }
    }
    // triangles for k = 1..=kmax-1
    let mut triangles = Vec::new();
    for k in 1..dec.kmax {
        let n = sector_count(k, dec.k0);
        for j in 1..=n {
            let e0 = &edges[&(k, j as u32)];
            let e1 = &edges[&(k + 1, (2 * j - 1) as u32)];
            let e2 = &edges[&(k + 1, (2 * j) as u32)];
            let boundary = triangle_loop(&e0.polyline, &e1.polyline, &e2.polyline)?;
            let (degenerate, area) =
                classify_triangle(&e0.polyline, &e1.polyline, &e2.polyline, &boundary, diam);
            let active_component = if degenerate == DegenerateCase::None {
                Some(1)
            } else {
                None
            };
            triangles.push(HyperbolicTriangle {
                k,
                j: j as u32,
                vertices: [e0.endpoints.0, e1.endpoints.1, e0.endpoints.1],
                edges: [(k, j as u32), (k + 1, (2 * j - 1) as u32), (k + 1, (2 * j) as u32)],
                boundary,
                degenerate,
                area,
                active_component,
            });
        }
    }
    // ring (direct source only): midpoints of the level-1 model arcs
    let ring = if let GeodesicSource::Direct(em) = source {
        Some(build_ring(m, em, dec, opts, &mut triangles)?)
    } else {
        None
    };
    // coincidence tolerance from the achieved convergence bound
    let achieved = edges
        .values()
        .map(|e| e.convergence_bound)
        .fold(0.0f64, f64::max);
    let chains = build_chains(&edges, dec, 3.0 * achieved.max(opts.tol));
    Ok(Triangulation {
        k0: dec.k0,
        kmax: dec.kmax,
        edges,
        ring,
        triangles,
        chains,
        edge_length_constant,
    })
}

fn build_ring(
    _m: &DiskMap,
    em: &ExteriorMap,
    dec: &WhitneyDecomposition,
    opts: &GeodesicOptions,
    triangles: &mut Vec<HyperbolicTriangle>,
) -> Result<RingData> {
    let n1 = sector_count(1, dec.k0);
    let mut arcs = Vec::with_capacity(n1);
    for j in 1..=n1 {
        arcs.push(direct_edge(em, dec, 1, j, opts.samples)?);
    }
    let midpoints_model: Vec<Point> = arcs.iter().map(|(_, arc)| arc.midpoint()).collect();
    let lift = |p: &Point| -> Point {
        let r = p.dist(Point::new(0.0, 0.0));
        let scale = r.max(1.0 + 1e-9) / r;
        Point::new(p.x * scale, p.y * scale)
    };
    let midpoints: Vec<Point> = midpoints_model.iter().map(|p| em.invert(lift(p))).collect();
    let mut ring_edges = Vec::with_capacity(n1);
    for j in 0..n1 {
        let a = midpoints_model[j];
        let b = midpoints_model[(j + 1) % n1];
        let arc = model_geodesic(lift(&a), lift(&b), ModelDomain::Exterior)?;
        let pts: Vec<Point> = arc
            .sample(opts.samples)
            .iter()
            .map(|p| em.invert(lift(p)))
            .collect();
        ring_edges.push(Polyline::open(dedup_points(pts))?);
    }
    let mut halves = Vec::with_capacity(n1);
    for (poly, _) in &arcs {
        let len = poly.length();
        halves.push((poly.subcurve(0.0, 0.5 * len)?, poly.subcurve(0.5 * len, len)?));
    }
    // ring triangles: gamma_0^(j), second half of gamma_1^(j), first half of
    // gamma_1^(j+1); vertices z_0^(j), z_1^(j), z_0^(j+1)
    for j in 0..n1 {
        let e0 = &ring_edges[j];
        let second_half_j = &halves[j].1;
        let first_half_next = &halves[(j + 1) % n1].0;
        // loop: z0^(j) -> (second half of arc j) -> z1^(j) -> (first half of
        // arc j+1) -> z0^(j+1) -> (reverse ring edge) -> z0^(j)
        let mut pts: Vec<Point> = Vec::new();
        pts.extend(second_half_j.vertices().iter().copied());
        pts.extend(first_half_next.vertices().iter().copied());
        pts.extend(e0.reversed().vertices().iter().copied());
        let mut clean = dedup_points(pts);
        if clean.len() > 1 && clean[0].dist(*clean.last().unwrap()) < 1e-12 {
            clean.pop();
        }
        let boundary = Polyline::closed(clean)?;
        let area = boundary.signed_area().abs();
        triangles.push(HyperbolicTriangle {
            k: 0,
            j: (j + 1) as u32,
            vertices: [
                midpoints[j],
                dec.mark(1, j + 1).point,
                midpoints[(j + 1) % n1],
            ],
            edges: [
                (0, (j + 1) as u32),
                (1, (j + 1) as u32),
                (1, ((j + 1) % n1 + 1) as u32),
            ],
            boundary,
            degenerate: DegenerateCase::None,
            area,
            active_component: Some(1),
        });
    }
    Ok(RingData {
        midpoints,
        ring_edges,
        level1_halves: halves,
    })
}

/// Mother of a piece key by index arithmetic.
pub fn mother_of(key: PieceKey) -> Option<PieceKey> {
    let (k, j, i) = key;
    if k <= 1 {
        return None;
    }
    Some((k - 1, j.div_ceil(2), i))
}

/// Sibling of a piece key (the other child of the same mother).
pub fn sibling_of(key: PieceKey) -> PieceKey {
    let (k, j, i) = key;
    let sib = if j % 2 == 1 { j + 1 } else { j - 1 };
    (k, sib, i)
}

fn build_chains(
    edges: &BTreeMap<CurveId, EdgeCurve>,
    dec: &WhitneyDecomposition,
    tol: f64,
) -> ChainRegistry {
    // collect non-trivial pieces per curve; component index 1 for open
    // complement runs, 0 for boundary-running stretches. Pieces shorter than
    // the coincidence tolerance cannot be classified and are left out.
    let mut pieces: Vec<(PieceKey, Polyline)> = Vec::new();
    for ((k, j), e) in edges {
        for p in &e.pieces {
            if p.polyline.length() >= 2.0 * tol {
                pieces.push(((*k, *j, p.component), p.polyline.clone()));
            }
        }
    }
    let n = pieces.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let mut ambiguous = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if pieces[a].0 .2 != pieces[b].0 .2 {
                continue;
            }
            // cheap bbox prefilter
            let da = pieces[a].1.dist_to(pieces[b].1.vertices()[0]);
            if da > 4.0 * tol {
                continue;
            }
            let sup = pieces[a].1.sup_distance(&pieces[b].1, 24);
            if sup < tol {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra] = rb;
                }
            } else if sup < 2.0 * tol {
                // the coincidence dichotomy only applies to pieces of
                // comparable extent; a mother overhanging its child is a
                // structural near-miss, not an ambiguity
                let (l1, l2) = (pieces[a].1.length(), pieces[b].1.length());
                let comparable =
                    l1.min(l2) >= 4.0 * tol && (l1 - l2).abs() <= 0.5 * l1.max(l2);
                if comparable {
                    ambiguous.push((pieces[a].0, pieces[b].0));
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for idx in 0..n {
        let root = find(&mut parent, idx);
        groups.entry(root).or_default().push(idx);
    }
    let mut classes = Vec::new();
    let mut class_of = BTreeMap::new();
    for (_, group) in groups {
        let mut members: Vec<PieceKey> = group.iter().map(|&i| pieces[i].0).collect();
        members.sort();
        // forced membership: a multi-member class containing a
        // first-generation piece adopts the artificial gamma_{1,i}^{(1)}
        let mut forced = false;
        if members.len() > 1 && members.iter().any(|(k, _, _)| *k == 1) {
            let i = members[0].2;
            if !members.contains(&(1, 1, i)) {
                members.insert(0, (1, 1, i));
            }
            forced = true;
        }
        let ancestor = members[0];
        let id = classes.len();
        for mkey in &members {
            class_of.insert(*mkey, id);
        }
        classes.push(CurveClass {
            id,
            members,
            ancestor,
            forced,
        });
    }
    // family chains: walk mothers/siblings within the class, then close with
    // the ancestor
    let mut chains = BTreeMap::new();
    let keys: Vec<PieceKey> = class_of.keys().copied().collect();
    for key in keys {
        let cid = class_of[&key];
        let members = &classes[cid].members;
        let mut chain = vec![key];
        let mut cur = key;
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > dec.kmax as usize + 4 {
                break;
            }
            let next = match mother_of(cur) {
                Some(mkey) if members.contains(&mkey) => Some(mkey),
                _ => {
                    let s = sibling_of(cur);
                    if members.contains(&s) && !chain.contains(&s) {
                        Some(s)
                    } else {
                        None
                    }
                }
            };
            match next {
                Some(nk) if !chain.contains(&nk) => {
                    chain.push(nk);
                    cur = nk;
                }
                _ => break,
            }
        }
        let ancestor = classes[cid].ancestor;
        if *chain.last().unwrap() != ancestor {
            chain.push(ancestor);
        }
        chain.reverse(); // gamma_1 = ancestor ... gamma_l = the piece itself
        chains.insert(key, chain);
    }
    ChainRegistry {
        classes,
        class_of,
        chains,
        ambiguous_pairs: ambiguous,
        tol,
    }
}

/// Sampled set of cut-points with preimage multiplicity and an H^1 estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutPointSet {
    /// representative points with two witness preimage angles each
    pub points: Vec<(Point, f64, f64)>,
    pub h1_estimate: f64,
    pub tolerance: f64,
    /// fraction of sampled piecewise geodesics whose interiors agree with
    /// the correspondence-based detection (1.0 when none were run)
    pub geodesic_agreement: f64,
}

/// Detects boundary points with multiple preimage angles by scanning the
/// boundary correspondence at `samples` stations, optionally cross-checking
/// with piecewise geodesics through the family.
pub fn detect_cut_points(
    m: &DiskMap,
    fam: Option<&ApproximationFamily>,
    samples: usize,
    tol_cut: f64,
) -> Result<CutPointSet> {
    if samples < 256 {
        return Err(Error::Resolution(
            "cut-point scan needs >= 256 samples".into(),
        ));
    }
    let walk_len = m.boundary_table.walk_length;
    // scan uniformly in arc length so corner singularities of the
    // correspondence cannot hide boundary stretches
    let pts: Vec<(f64, Point, f64)> = (0..samples)
        .map(|i| {
            let s = walk_len * i as f64 / samples as f64;
            let t = m.boundary_table.theta_at_station(s);
            (t, m.boundary_table.walk.point_at(s), s)
        })
        .collect();
    // a pair marks a cut-point when the two stations are far apart along the
    // walk yet the plane points nearly coincide
    let station_gap_min = (2.5 * tol_cut).max(8.0 * walk_len / samples as f64);
    let mut flagged = vec![false; samples];
    let mut reps: Vec<(Point, f64, f64)> = Vec::new();
    // spatial hash for pair search
    let cell = tol_cut.max(1e-9);
    let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, (_, p, _)) in pts.iter().enumerate() {
        buckets
            .entry(((p.x / cell).floor() as i64, (p.y / cell).floor() as i64))
            .or_default()
            .push(i);
    }
    for (i, (t1, p, s1)) in pts.iter().enumerate() {
        let bx = (p.x / cell).floor() as i64;
        let by = (p.y / cell).floor() as i64;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(bx + dx, by + dy)) {
                    for &j in list {
                        if j <= i {
                            continue;
                        }
                        let (t2, q, s2) = &pts[j];
                        let ds = (s2 - s1).rem_euclid(walk_len);
                        let ds = ds.min(walk_len - ds);
                        if ds >= station_gap_min && p.dist(*q) <= tol_cut {
                            if !flagged[i] {
                                reps.push((*p, *t1, *t2));
                            }
                            flagged[i] = true;
                            flagged[j] = true;
                        }
                    }
                }
            }
        }
    }
    // H^1 estimate: arc length of flagged runs along the walk, halved
    // because every cut point is visited from both sides
    let mut run_len = 0.0;
    for i in 0..samples {
        if flagged[i] && flagged[(i + 1) % samples] {
            let s0 = pts[i].2;
            let s1 = pts[(i + 1) % samples].2;
            let d = (s1 - s0).rem_euclid(walk_len);
            run_len += d.min(walk_len - d);
        }
    }
    let h1 = run_len / 2.0;
    // cross-check with a few piecewise geodesics between flagged labels
    let mut agreement = 1.0;
    if let Some(fam) = fam {
        if !reps.is_empty() {
            let mut agree = 0usize;
            let mut total = 0usize;
            for (p, t1, t2) in reps.iter().take(8) {
                let opts = GeodesicOptions::for_domain(&m.domain);
                // perturb labels slightly apart so the geodesic is nontrivial
                let d1 = wrap_angle(t1 + 0.02);
                let d2 = wrap_angle(t2 - 0.02);
                if let Ok(g) = piecewise_geodesic((d1, d2), m, fam, &opts) {
                    total += 1;
                    if g.polyline.dist_to(*p) <= 4.0 * tol_cut {
                        agree += 1;
                    }
                }
            }
            if total > 0 {
                agreement = agree as f64 / total as f64;
            }
        }
    }
    Ok(CutPointSet {
        points: reps,
        h1_estimate: h1,
        tolerance: tol_cut,
        geodesic_agreement: agreement,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallSeparationReport {
    pub trials: usize,
    pub all_hit: bool,
    pub smallest_c: f64,
}

/// Randomized detour probe for the ball-separation property: every sampled
/// competitor joining the geodesic's endpoints in the complement must meet
/// the dilated disk c B.
pub fn ball_separation_probe(
    d: &PolygonalDomain,
    geodesic: &Polyline,
    center: Point,
    radius: f64,
    trials: usize,
    seed: u64,
) -> Result<BallSeparationReport> {
    if geodesic.dist_to(center) > radius {
        return Err(Error::InvalidDomain(
            "disk does not meet the geodesic".into(),
        ));
    }
    let a = geodesic.vertices()[0];
    let b = *geodesic.vertices().last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diam = d.diameter();
    let candidates = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
    let mut needed_c = 1.0f64;
    let mut produced = 0usize;
    let mut attempts = 0usize;
    while produced < trials && attempts < trials * 40 {
        attempts += 1;
        // random detour through one or two complement via-points
        let vias: Vec<Point> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let ang = rng.gen_range(0.0..TWO_PI);
                let r = diam * (0.2 + 0.8 * rng.gen::<f64>());
                Point::new(center.x + r * ang.cos(), center.y + r * ang.sin())
            })
            .collect();
        let mut pts = vec![a];
        pts.extend(vias);
        pts.push(b);
        let path = match Polyline::open(dedup_points(pts)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        // must stay in the closed complement
        let probe = path.resample(64);
        if probe.iter().any(|p| d.contains(*p) && d.dist_to_boundary(*p) > 1e-6 * diam) {
            continue;
        }
        produced += 1;
        let min_dist = probe
            .iter()
            .map(|p| p.dist(center))
            .fold(f64::INFINITY, f64::min);
        let c_this = candidates
            .iter()
            .copied()
            .find(|c| min_dist <= c * radius)
            .unwrap_or(f64::INFINITY);
        needed_c = needed_c.max(c_this);
    }
    Ok(BallSeparationReport {
        trials: produced,
        all_hit: needed_c.is_finite(),
        smallest_c: needed_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{build_approximation_family, build_disk_map, build_exterior_map};
    use crate::geometry::shapes;

    #[test]
    fn sector_count_formula() {
        assert_eq!(sector_count(2, 1), 16);
        assert_eq!(sector_count(1, 1), 8);
    }

    #[test]
    fn select_k0_disk_matches_chord_formula() {
        let d = shapes::disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let delta = 0.5;
        let (k0, gap) = select_k0(&m, delta).unwrap();
        // chord-length oracle: need 2 sin(pi 2^{-(k+k0)} / 2) <= delta diam/2
        // for all k >= 1; worst case k = 1
        let oracle = (1..=16u32)
            .find(|k0| {
                (1..=4u32).all(|k| {
                    2.0 * (std::f64::consts::PI * 2f64.powi(-((k + k0) as i32)) / 2.0).sin()
                        <= delta * 2.0
                })
            })
            .unwrap();
        assert_eq!(k0, oracle, "gap achieved {gap}");
        // delta >= 2: k0 = 1 trivially
        let (k0big, _) = select_k0(&m, 2.0).unwrap();
        assert_eq!(k0big, 1);
    }

    #[test]
    fn select_k0_slit_disk_finite() {
        let d = shapes::slit_disk(64, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let (k0, gap) = select_k0(&m, 0.25).unwrap();
        assert!(k0 <= 16);
        assert!(gap <= 0.25 * d.diameter());
    }

    #[test]
    fn decomposition_disk_sector_geometry() {
        let d = shapes::disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let dec = build_decomposition(&m, 1, 3, 0.8).unwrap();
        // analytic sector: D_2^(j) has radial extent [1/2, 3/4]; its image
        // under a near-identity map keeps diam/dist ratios of the sector
        let lam = dec.sector_whitney_lambda(&m, 2, 3);
        // analytic: diam ~ sector diagonal, dist to boundary = 1/4
        assert!(lam < 8.0, "sector lambda {lam}");
        assert!(dec.max_gap <= 0.8 * d.diameter());
    }

    #[test]
    fn decomposition_square_whitney_stable() {
        let d = shapes::unit_square(0.01);
        let m1 = build_disk_map(&d, 0.02).unwrap();
        let m2 = build_disk_map(&d, 0.01).unwrap();
        let d1 = build_decomposition(&m1, 2, 4, 0.5).unwrap();
        let d2 = build_decomposition(&m2, 2, 4, 0.5).unwrap();
        assert!(d1.lambda_max < 100.0);
        let ratio = d1.lambda_max / d2.lambda_max;
        assert!(
            (0.85..=1.18).contains(&ratio),
            "lambda unstable under mesh halving: {} vs {}",
            d1.lambda_max,
            d2.lambda_max
        );
    }

    #[test]
    fn model_geodesic_diameter_and_quarter_arc() {
        // i to -i: the diameter segment
        let g = model_geodesic(Point::new(0.0, 1.0), Point::new(0.0, -1.0), ModelDomain::Disk)
            .unwrap();
        assert!(matches!(g.arc, GeodesicArc::Segment { .. }));
        // 1 to i: circle centered (1,1) radius 1
        let g = model_geodesic(Point::new(1.0, 0.0), Point::new(0.0, 1.0), ModelDomain::Disk)
            .unwrap();
        match &g.arc {
            GeodesicArc::Circle { center, radius, .. } => {
                assert!(center.dist(Point::new(1.0, 1.0)) < 1e-9);
                assert!((radius - 1.0).abs() < 1e-9);
            }
            _ => panic!("expected an arc"),
        }
        assert!(g.orthogonality_defect() < 1e-12);
        // all sampled points inside the closed disk
        for p in g.sample(64) {
            assert!(p.dist(Point::new(0.0, 0.0)) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn model_geodesic_exterior_symmetric_pair() {
        let th = 0.2f64;
        let a = Point::new(th.cos(), th.sin());
        let b = Point::new(th.cos(), -th.sin());
        let g = model_geodesic(a, b, ModelDomain::Exterior).unwrap();
        match &g.arc {
            GeodesicArc::Circle { center, radius, .. } => {
                assert!(center.y.abs() < 1e-9, "center on the real axis");
                let ortho = center.x * center.x - radius * radius - 1.0;
                assert!(ortho.abs() < 1e-9);
            }
            _ => panic!("expected an arc"),
        }
        for p in g.sample(64) {
            assert!(p.dist(Point::new(0.0, 0.0)) >= 1.0 - 1e-9);
        }
        assert!(model_geodesic(a, a, ModelDomain::Exterior).is_err());
    }

    #[test]
    fn piecewise_geodesic_disk_matches_exterior_arc() {
        let d = shapes::disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let fam = build_approximation_family(&m, 10, 0.05).unwrap();
        let opts = GeodesicOptions::for_domain(&d);
        let labels = (0.1, 0.6);
        let g = piecewise_geodesic(labels, &m, &fam, &opts).unwrap();
        // analytic oracle: the exterior geodesic arc between the two circle
        // points (the disk map is the identity up to table error)
        let a = m.boundary_point(labels.0);
        let b = m.boundary_point(labels.1);
        let arc = model_geodesic(a, b, ModelDomain::Exterior).unwrap();
        let oracle = Polyline::open(dedup_points(arc.sample(64))).unwrap();
        let sup = g.polyline.sup_distance(&oracle, 48);
        assert!(sup < 1e-2 * 2.0, "sup distance to analytic arc: {sup}");
        assert!(g.converged);
    }

    #[test]
    fn piecewise_geodesic_identical_labels_constant() {
        let d = shapes::disk(64, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let fam = build_approximation_family(&m, 4, 0.05).unwrap();
        let opts = GeodesicOptions::for_domain(&d);
        let g = piecewise_geodesic((1.0, 1.0), &m, &fam, &opts).unwrap();
        assert!(g.constant);
        assert!(g.polyline.length() < 1e-6);
    }

    #[test]
    fn piecewise_geodesic_slit_runs_along_slit() {
        let d = shapes::slit_disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let fam = build_approximation_family(&m, 10, 0.04).unwrap();
        let mut opts = GeodesicOptions::for_domain(&d);
        opts.tol = 4e-3 * d.diameter();
        // labels on the same slit side, images near (0.3,0) and (0.6,0)
        let probe = |target: Point| -> f64 {
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..4096 {
                let t = TWO_PI * i as f64 / 4096.0;
                let p = m.boundary_point(t);
                let dd = p.dist(target);
                if dd < best.0 {
                    best = (dd, t);
                }
            }
            best.1
        };
        let t1 = probe(Point::new(0.3, 0.0));
        let t2 = probe(Point::new(0.6, 0.0));
        let g = piecewise_geodesic((t1, t2), &m, &fam, &opts).unwrap();
        // the limit runs along the slit: H^1(curve on boundary) > 0
        let on_boundary: f64 = g
            .pieces
            .iter()
            .filter(|p| p.on_boundary)
            .map(|p| p.polyline.length())
            .sum();
        assert!(
            on_boundary > 0.15,
            "slit-running length {on_boundary}, pieces {:?}",
            g.pieces.len()
        );
    }

    #[test]
    fn triangles_disk_all_nondegenerate_singleton_classes() {
        let d = shapes::disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let em = build_exterior_map(&d, 0.02).unwrap();
        let dec = build_decomposition(&m, 1, 4, 0.8).unwrap();
        let opts = GeodesicOptions::for_domain(&d);
        let tri = build_triangles(&m, &dec, &GeodesicSource::Direct(&em), &opts).unwrap();
        assert!(tri
            .triangles
            .iter()
            .all(|t| t.degenerate == DegenerateCase::None));
        assert!(tri.chains.classes.iter().all(|c| c.members.len() == 1));
        for chain in tri.chains.chains.values() {
            assert!(chain.len() <= 2, "chain {:?}", chain);
        }
        // ring exists with 2^(k0+2) triangles at k = 0
        assert!(tri.ring.is_some());
        let ring_count = tri.triangles.iter().filter(|t| t.k == 0).count();
        assert_eq!(ring_count, sector_count(1, 1));
        // recorded edge-length constant is O(1) for the disk
        assert!(tri.edge_length_constant < 3.0, "C {}", tri.edge_length_constant);
    }

    #[test]
    fn triangles_slit_disk_degenerate_and_classes() {
        let d = shapes::slit_disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let fam = build_approximation_family(&m, 10, 0.04).unwrap();
        let dec = build_decomposition(&m, 2, 4, 0.5).unwrap();
        let mut opts = GeodesicOptions::for_domain(&d);
        opts.tol = 4e-3 * d.diameter();
        let tri = build_triangles(&m, &dec, &GeodesicSource::Family(&fam), &opts).unwrap();
        let degenerate = tri
            .triangles
            .iter()
            .filter(|t| t.degenerate != DegenerateCase::None)
            .count();
        assert!(degenerate > 0, "slit disk must have degenerate triangles");
        // classes along the slit have more than one member, and each
        // generation contributes at most two members (pairwise sup-distance
        // matrix oracle is what build_chains implements)
        let multi: Vec<_> = tri
            .chains
            .classes
            .iter()
            .filter(|c| c.members.iter().filter(|(k, _, _)| *k >= 1).count() > 1)
            .collect();
        assert!(!multi.is_empty(), "expected multi-member classes along the slit");
        for class in &tri.chains.classes {
            let mut per_gen: BTreeMap<u32, usize> = BTreeMap::new();
            for (k, _, _) in &class.members {
                *per_gen.entry(*k).or_default() += 1;
            }
            for (k, count) in per_gen {
                let cap = if k == 1 { 3 } else { 2 };
                assert!(
                    count <= cap,
                    "generation {k} has {count} members in class {:?}",
                    class.members
                );
            }
        }
    }

    #[test]
    fn cut_points_jordan_empty_slit_full() {
        let d = shapes::unit_square(0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let cp = detect_cut_points(&m, None, 4096, 0.02).unwrap();
        assert!(cp.h1_estimate < 0.05, "square H1 {}", cp.h1_estimate);
        let d = shapes::slit_disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let cp = detect_cut_points(&m, None, 8192, 0.015).unwrap();
        assert!(
            (cp.h1_estimate - 1.0).abs() < 0.05,
            "slit H1 {} should be within 5% of 1",
            cp.h1_estimate
        );
    }

    #[test]
    fn cut_points_notch_monotone() {
        // notch family: H^1 of the tolerance-detected cut set grows as the
        // notch narrows, reaching the slit length in the collapsed limit
        let mut values = Vec::new();
        for w in [0.12, 0.05, 0.015] {
            let d = shapes::notch_square(w, 0.6, 0.01);
            let m = build_disk_map(&d, 0.02).unwrap();
            let cp = detect_cut_points(&m, None, 4096, 0.03).unwrap();
            values.push(cp.h1_estimate);
        }
        assert!(
            values[0] <= values[1] + 0.02 && values[1] <= values[2] + 0.02,
            "H1 not monotone along the notch family: {values:?}"
        );
        assert!(values[2] > 0.3, "collapsed notch should be detected: {values:?}");
    }

    #[test]
    fn ball_separation_on_disk_exterior() {
        let d = shapes::disk(64, 0.01);
        let em = build_exterior_map(&d, 0.02).unwrap();
        let dec = {
            let m = build_disk_map(&d, 0.02).unwrap();
            build_decomposition(&m, 1, 3, 0.8).unwrap()
        };
        let m = build_disk_map(&d, 0.02).unwrap();
        let opts = GeodesicOptions::for_domain(&d);
        let tri = build_triangles(&m, &dec, &GeodesicSource::Direct(&em), &opts).unwrap();
        let edge = &tri.edges[&(1, 1)];
        let mid = edge.polyline.point_at(edge.polyline.length() / 2.0);
        let radius = 0.5 * d.dist_to_boundary(mid).max(0.05);
        let rep =
            ball_separation_probe(&d, &edge.polyline, mid, radius, 100, 42).unwrap();
        assert!(rep.all_hit, "needed c {}", rep.smallest_c);
        assert!(rep.smallest_c <= 8.0);
        // far disk rejected
        assert!(ball_separation_probe(
            &d,
            &edge.polyline,
            Point::new(5.0, 5.0),
            0.1,
            10,
            1
        )
        .is_err());
    }
}
