//! Decision procedures for the extension characterizations: quasiconvexity
//! constants of the complement, the overlap-free curve condition, the
//! weighted curve condition for exponents between 1 and 2, the inversion
//! swap between bounded and unbounded regions, and the constructive
//! open-path repair.
//!
//! All verdicts are at-resolution: a grid checker cannot certify an infimum
//! over all curves, so reports carry the grid spacing and sampling design.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    dedup_points, inner_distance, winding_number, ComplementRegion, GridGraph, PathRegion, Point,
    Polyline, PolygonalDomain, GRID_DIRS,
};
use crate::{Error, Result};

/// Quasiconvexity estimate of a region: the largest sampled ratio of inner
/// distance to Euclidean distance, with the realizing pair and path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiconvexityReport {
    pub constant_estimate: f64,
    pub worst_pair: ([f64; 2], [f64; 2]),
    pub witness_path: Polyline,
    pub sample_count: usize,
    pub resolution: f64,
}

/// Stratified pair sampler: half the pairs hug the boundary, a quarter
/// straddle slit structures, a quarter are uniform over the window.
fn sample_pairs(
    d: &PolygonalDomain,
    in_region: impl Fn(Point) -> bool,
    pairs: usize,
    seed: u64,
) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = d.bbox();
    let diam = d.diameter();
    let margin = 0.35 * diam;
    let rand_point = |rng: &mut ChaCha8Rng| -> Point {
        Point::new(
            rng.gen_range(lo.x - margin..hi.x + margin),
            rng.gen_range(lo.y - margin..hi.y + margin),
        )
    };
    let near_boundary = |rng: &mut ChaCha8Rng| -> Option<Point> {
        for _ in 0..64 {
            let p = rand_point(rng);
            if in_region(p) && d.dist_to_boundary(p) <= diam / 10.0 {
                return Some(p);
            }
        }
        None
    };
    let near_slit = |rng: &mut ChaCha8Rng| -> Option<Point> {
        if d.slits.is_empty() {
            return None;
        }
        // slits have zero width: sample points on the slit itself
        let s = &d.slits[rng.gen_range(0..d.slits.len())];
        let at = rng.gen_range(0.0..s.length());
        let p = s.point_at(at);
        if in_region(p) {
            Some(p)
        } else {
            None
        }
    };
    let uniform = |rng: &mut ChaCha8Rng| -> Option<Point> {
        for _ in 0..64 {
            let p = rand_point(rng);
            if in_region(p) {
                return Some(p);
            }
        }
        None
    };
    let mut out = Vec::with_capacity(pairs);
    let mut guard = 0;
    while out.len() < pairs && guard < pairs * 20 {
        guard += 1;
        let bucket = out.len() * 4 / pairs.max(1);
        let pick = |rng: &mut ChaCha8Rng| match bucket {
            0 | 1 => near_boundary(rng),
            2 => near_slit(rng).or_else(|| near_boundary(rng)),
            _ => uniform(rng),
        };
        if let (Some(a), Some(b)) = (pick(&mut rng), pick(&mut rng)) {
            if a.dist(b) > 1e-3 * diam {
                out.push((a, b));
            }
        }
    }
    out
}

/// Supremum of inner over Euclidean distance across sampled pairs of the
/// region, with the witness path of the worst pair.
pub fn quasiconvexity_constant(
    r: &ComplementRegion,
    pairs: usize,
    h: f64,
    seed: u64,
) -> Result<QuasiconvexityReport> {
    if pairs == 0 {
        return Err(Error::InvalidDomain("pairs must be >= 1".into()));
    }
    let d = &r.parent;
    let sampled = sample_pairs(d, |p| r.contains(p), pairs, seed);
    if sampled.is_empty() {
        return Err(Error::EmptyRegion("no complement pairs sampled".into()));
    }
    let region = PathRegion::Complement(d);
    let results: Vec<Result<(f64, (Point, Point), Polyline)>> = sampled
        .par_iter()
        .map(|(a, b)| {
            let r = inner_distance(*a, *b, &region, h)?;
            Ok((r.length / a.dist(*b), (*a, *b), r.witness))
        })
        .collect();
    let mut best: Option<(f64, (Point, Point), Polyline)> = None;
    for res in results {
        let (ratio, pair, path) = res?;
        if best.as_ref().map(|(r, _, _)| ratio > *r).unwrap_or(true) {
            best = Some((ratio, pair, path));
        }
    }
    let (constant_estimate, (a, b), witness_path) = best.unwrap();
    Ok(QuasiconvexityReport {
        constant_estimate,
        worst_pair: ([a.x, a.y], [b.x, b.y]),
        witness_path,
        sample_count: sampled.len(),
        resolution: h,
    })
}

/// Per-pair outcome of the curve-condition search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePairWitness {
    pub pair: ([f64; 2], [f64; 2]),
    pub admissible: bool,
    pub ratio: f64,
    pub boundary_overlap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveConditionReport {
    pub satisfied: bool,
    pub worst_ratio: f64,
    pub witnesses: Vec<CurvePairWitness>,
    pub c_max: f64,
    pub resolution: f64,
}

/// Grid graph over the closed complement in which edges running along the
/// boundary are deleted; transversal contacts through isolated nodes (and
/// slit endpoints) remain. Paths found here meet the boundary in a finite
/// set of nodes.
fn overlap_free_graph(d: &PolygonalDomain, h: f64) -> GridGraph {
    let region = PathRegion::Complement(d);
    let (blo, bhi) = d.bbox();
    let margin = 0.3 * d.diameter() + 4.0 * h;
    let lo = Point::new(blo.x - margin, blo.y - margin);
    let hi = Point::new(bhi.x + margin, bhi.y + margin);
    let mut graph = GridGraph::build(&region, lo, hi, h);
    let tol = 0.6 * h;
    // contact punctures: slit endpoints and outer vertices stay crossable
    let mut punctures: Vec<Point> = Vec::new();
    for s in &d.slits {
        punctures.push(s.vertices()[0]);
        punctures.push(*s.vertices().last().unwrap());
    }
    let near_puncture =
        |p: Point| punctures.iter().any(|q| q.dist(p) <= 2.0 * h);
    let nx = graph.nx;
    let ny = graph.ny;
    let mut kill: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let id = j * nx + i;
            if !graph.node_ok[id] {
                continue;
            }
            let a = graph.point(id);
            for (kdir, (di, dj)) in GRID_DIRS.iter().enumerate() {
                let ii = i as i64 + di;
                let jj = j as i64 + dj;
                if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                    continue;
                }
                let nid = jj as usize * nx + ii as usize;
                if !graph.node_ok[nid] {
                    continue;
                }
                let b = graph.point(nid);
                let mid = a.lerp(b, 0.5);
                let runs_along = d.on_boundary(a, tol)
                    && d.on_boundary(b, tol)
                    && d.on_boundary(mid, tol);
                if runs_along && !near_puncture(mid) {
                    kill.push((id, kdir));
                }
            }
        }
    }
    graph.remove_edges(&kill);
    graph
}

/// Checks the overlap-free curve condition over stratified sampled pairs:
/// every pair must admit a complement path of length at most c_max times
/// the Euclidean distance that meets the boundary in a finite set.
pub fn check_curve_condition(
    d: &PolygonalDomain,
    pairs: usize,
    h: f64,
    c_max: f64,
    seed: u64,
) -> Result<CurveConditionReport> {
    let graph = overlap_free_graph(d, h);
    let region = PathRegion::Complement(d);
    let sampled = sample_pairs(d, |p| !d.contains(p), pairs, seed);
    let mut witnesses = Vec::new();
    let mut worst: f64 = 1.0;
    let mut satisfied = true;
    for (a, b) in sampled {
        let src = graph.nearest_node(a);
        let dst = graph.nearest_node(b);
        let found = match (src, dst) {
            (Some(s), Some(t)) => graph.shortest_path(s, t),
            _ => None,
        };
        match found {
            Some((len, nodes)) => {
                let mut pts = vec![a];
                pts.extend(nodes.iter().map(|id| graph.point(*id)));
                pts.push(b);
                let path = Polyline::open(dedup_points(pts))?;
                let overlap = crate::geometry::boundary_overlap_length(&path, d).unwrap_or(0.0);
                let ratio = (len + 2.0 * h) / a.dist(b).max(1e-12);
                if ratio > worst {
                    worst = ratio;
                }
                let ok = ratio <= c_max && overlap <= 4.0 * h;
                if !ok {
                    satisfied = false;
                }
                witnesses.push(CurvePairWitness {
                    pair: ([a.x, a.y], [b.x, b.y]),
                    admissible: ok,
                    ratio,
                    boundary_overlap: overlap,
                });
            }
            None => {
                // no overlap-free path at this resolution: record the best
                // boundary-walking path as the failure witness
                satisfied = false;
                let fallback = inner_distance(a, b, &region, h);
                let (ratio, overlap) = match fallback {
                    Ok(r) => (
                        r.length / a.dist(b).max(1e-12),
                        crate::geometry::boundary_overlap_length(&r.witness, d).unwrap_or(0.0),
                    ),
                    Err(_) => (f64::INFINITY, f64::INFINITY),
                };
                worst = worst.max(ratio);
                witnesses.push(CurvePairWitness {
                    pair: ([a.x, a.y], [b.x, b.y]),
                    admissible: false,
                    ratio,
                    boundary_overlap: overlap,
                });
            }
        }
    }
    Ok(CurveConditionReport {
        satisfied,
        worst_ratio: worst,
        witnesses,
        c_max,
        resolution: h,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PPairResult {
    pub pair: ([f64; 2], [f64; 2]),
    pub weighted_length: f64,
    pub rhs_scale: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PConditionReport {
    pub p: f64,
    pub satisfied: bool,
    pub constant: f64,
    pub results: Vec<PPairResult>,
    pub resolution: f64,
}

/// Weighted shortest-path length between two complement points with weight
/// dist(z, boundary)^(1-p), capped at h^(1-p) near the boundary, computed
/// on a local window around the pair.
pub fn weighted_complement_length(
    d: &PolygonalDomain,
    a: Point,
    b: Point,
    p: f64,
    h: f64,
) -> Result<f64> {
    let region = PathRegion::Complement(d);
    let spread = 3.0 * a.dist(b) + 16.0 * h;
    let lo = Point::new(a.x.min(b.x) - spread, a.y.min(b.y) - spread);
    let hi = Point::new(a.x.max(b.x) + spread, a.y.max(b.y) + spread);
    let graph = GridGraph::build(&region, lo, hi, h);
    let src = graph
        .nearest_node(a)
        .ok_or_else(|| Error::Disconnected("no node near start".into()))?;
    let dst = graph
        .nearest_node(b)
        .ok_or_else(|| Error::Disconnected("no node near end".into()))?;
    let cap = h.powf(1.0 - p);
    let weight = |x: Point, y: Point| -> f64 {
        let mid = x.lerp(y, 0.5);
        let w = d.dist_to_boundary(mid).powf(1.0 - p).min(cap);
        w * x.dist(y)
    };
    let dist = graph.weighted_distances(&[(src, 0.0)], weight);
    let v = dist[dst];
    if !v.is_finite() {
        return Err(Error::Disconnected("pair not connected".into()));
    }
    Ok(v)
}

/// Checks the weighted curve condition for an exponent p in (1, 2) over
/// sampled pairs: weighted length <= C |x-y|^(2-p) with the recorded C.
pub fn check_p_condition(
    d: &PolygonalDomain,
    p: f64,
    pairs: usize,
    h: f64,
    c_max: f64,
    seed: u64,
) -> Result<PConditionReport> {
    if !(1.0 < p && p < 2.0) {
        return Err(Error::InvalidDomain("p must lie in (1, 2)".into()));
    }
    let sampled = sample_pairs(d, |q| !d.contains(q), pairs, seed);
    let results: Vec<Result<PPairResult>> = sampled
        .par_iter()
        .map(|(a, b)| {
            let w = weighted_complement_length(d, *a, *b, p, h)?;
            let rhs = a.dist(*b).powf(2.0 - p);
            Ok(PPairResult {
                pair: ([a.x, a.y], [b.x, b.y]),
                weighted_length: w,
                rhs_scale: rhs,
                ratio: w / rhs.max(1e-300),
            })
        })
        .collect();
    let mut out = Vec::new();
    let mut constant: f64 = 0.0;
    for r in results {
        let rr = r?;
        constant = constant.max(rr.ratio);
        out.push(rr);
    }
    Ok(PConditionReport {
        p,
        satisfied: constant <= c_max,
        constant,
        results: out,
        resolution: h,
    })
}

/// Explicit-pair variant used for the cusp sweep.
pub fn p_condition_pairs(
    d: &PolygonalDomain,
    p: f64,
    pairs: &[(Point, Point)],
    h: f64,
) -> Result<Vec<PPairResult>> {
    pairs
        .par_iter()
        .map(|(a, b)| {
            let w = weighted_complement_length(d, *a, *b, p, h)?;
            let rhs = a.dist(*b).powf(2.0 - p);
            Ok(PPairResult {
                pair: ([a.x, a.y], [b.x, b.y]),
                weighted_length: w,
                rhs_scale: rhs,
                ratio: w / rhs.max(1e-300),
            })
        })
        .collect()
}

/// The inversion image of a polygonal region about an interior point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertedRegion {
    pub center: [f64; 2],
    pub polylines: Vec<Polyline>,
    pub unbounded: bool,
}

pub fn invert_point(x: Point, y: Point) -> Point {
    let dx = y.x - x.x;
    let dy = y.y - x.y;
    let n2 = dx * dx + dy * dy;
    Point::new(x.x + dx / n2, x.y + dy / n2)
}

/// Applies the inversion swap about `x` (interior to the domain) to the
/// densified boundary polylines.
pub fn inversion_swap(d: &PolygonalDomain, x: Point) -> Result<InvertedRegion> {
    if !d.contains(x) {
        return Err(Error::InvalidDomain(
            "inversion center must be interior".into(),
        ));
    }
    let densify = d.diameter() / 512.0;
    let mut polylines = Vec::new();
    let mut all = vec![d.outer.densify(densify)];
    for s in &d.slits {
        all.push(s.densify(densify));
    }
    for poly in all {
        for v in poly.vertices() {
            if v.dist(x) < 1e-12 {
                return Err(Error::Degenerate("inversion center on the data".into()));
            }
        }
        let pts: Vec<Point> = poly.vertices().iter().map(|v| invert_point(x, *v)).collect();
        polylines.push(if poly.is_closed() {
            Polyline::closed(dedup_points(pts))?
        } else {
            Polyline::open(dedup_points(pts))?
        });
    }
    Ok(InvertedRegion {
        center: [x.x, x.y],
        polylines,
        unbounded: true,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRepairReport {
    pub repaired: Polyline,
    pub input_length: f64,
    pub output_length: f64,
    pub moved_waypoints: usize,
}

/// Constructive open-path repair: subdivides the path into short steps,
/// nudges boundary waypoints into the open region within the adjacent step
/// radius, and reconnects by segments. Fails with the location when no
/// interior point exists within reach (true slit contacts).
pub fn open_path_repair(
    path: &Polyline,
    region: &ComplementRegion,
    delta: f64,
) -> Result<PathRepairReport> {
    let d = &region.parent;
    let open_point = |p: Point| -> bool {
        // interior of the closed complement: strictly outside the closure
        winding_number(&d.outer, p) == 0 && d.outer.dist_to(p) > 1e-9 * d.diameter()
    };
    let boundary_diam = d.diameter();
    let step = (delta / 6.0) * boundary_diam;
    if step <= 0.0 {
        return Err(Error::InvalidDomain("delta must be positive".into()));
    }
    let ends = (path.vertices()[0], *path.vertices().last().unwrap());
    if !open_point(ends.0) || !open_point(ends.1) {
        return Err(Error::InvalidDomain(
            "path endpoints must be interior to the region".into(),
        ));
    }
    // already interior?
    let probe = path.densify(step.min(path.length() / 16.0).max(1e-9));
    if probe.vertices().iter().all(|p| open_point(*p)) {
        return Ok(PathRepairReport {
            repaired: path.clone(),
            input_length: path.length(),
            output_length: path.length(),
            moved_waypoints: 0,
        });
    }
    // subdivide into steps of length <= step
    let n = (path.length() / step).ceil().max(2.0) as usize;
    let stations: Vec<Point> = path.resample(n);
    let mut repaired: Vec<Point> = Vec::with_capacity(stations.len());
    let mut moved = 0usize;
    for (i, xi) in stations.iter().enumerate() {
        if i == 0 || i == stations.len() - 1 {
            repaired.push(*xi);
            continue;
        }
        if open_point(*xi) {
            repaired.push(*xi);
            continue;
        }
        let reach = stations[i - 1]
            .dist(*xi)
            .min(xi.dist(stations[i + 1]))
            .max(1e-12);
        let mut fixed = None;
        'search: for frac in [0.35, 0.6, 0.85, 1.0] {
            for dir in 0..24 {
                let t = 2.0 * std::f64::consts::PI * dir as f64 / 24.0;
                let cand = Point::new(
                    xi.x + frac * reach * t.cos(),
                    xi.y + frac * reach * t.sin(),
                );
                if open_point(cand) {
                    fixed = Some(cand);
                    break 'search;
                }
            }
        }
        match fixed {
            Some(c) => {
                moved += 1;
                repaired.push(c);
            }
            None => {
                return Err(Error::Disconnected(format!(
                    "no interior point within {reach:.3e} of ({:.4}, {:.4})",
                    xi.x, xi.y
                )))
            }
        }
    }
    let repaired = Polyline::open(dedup_points(repaired))?;
    Ok(PathRepairReport {
        input_length: path.length(),
        output_length: repaired.length(),
        moved_waypoints: moved,
        repaired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn quasiconvexity_disk_complement_near_half_pi() {
        let d = shapes::disk(128, 0.01);
        let region = ComplementRegion::closed(&d);
        // antipodal near-boundary pairs realize pi/2; the report's sup over
        // the stratified battery approaches it from below
        let rep = quasiconvexity_constant(&region, 48, 0.02, 7).unwrap();
        assert!(
            rep.constant_estimate < std::f64::consts::FRAC_PI_2 * 1.08,
            "estimate {}",
            rep.constant_estimate
        );
        assert!(rep.constant_estimate > 1.0);
        // witness path lives in the closed complement
        for p in rep.witness_path.resample(32) {
            assert!(!d.contains(p) || d.dist_to_boundary(p) < 0.03);
        }
    }

    #[test]
    fn quasiconvexity_monotone_in_samples() {
        let d = shapes::l_shape(0.01);
        let region = ComplementRegion::closed(&d);
        let small = quasiconvexity_constant(&region, 8, 0.04, 3).unwrap();
        let large = quasiconvexity_constant(&region, 32, 0.04, 3).unwrap();
        assert!(large.constant_estimate >= small.constant_estimate - 1e-12);
    }

    #[test]
    fn quasiconvexity_slit_disk_finite() {
        let d = shapes::slit_disk(64, 0.01);
        let region = ComplementRegion::closed(&d);
        let rep = quasiconvexity_constant(&region, 32, 0.02, 11).unwrap();
        assert!(rep.constant_estimate.is_finite());
        assert!(rep.constant_estimate < 6.0, "slit complement constant {}", rep.constant_estimate);
    }

    #[test]
    fn curve_condition_square_satisfied() {
        let d = shapes::unit_square(0.01);
        let rep = check_curve_condition(&d, 24, 0.02, 50.0, 5).unwrap();
        assert!(rep.satisfied, "worst ratio {}", rep.worst_ratio);
        assert!(rep.worst_ratio < 2.0);
        for w in &rep.witnesses {
            assert!(w.boundary_overlap <= 4.0 * 0.02);
        }
    }

    #[test]
    fn curve_condition_slit_disk_fails_on_slit_pairs() {
        let d = shapes::slit_disk(64, 0.01);
        let rep = check_curve_condition(&d, 24, 0.02, 50.0, 5).unwrap();
        assert!(!rep.satisfied, "slit disk must fail the curve condition");
        // the designated slit pair is unreachable without overlap
        let graph = overlap_free_graph(&d, 0.02);
        let a = graph.nearest_node(Point::new(0.25, 0.0)).unwrap();
        let b = graph.nearest_node(Point::new(0.5, 0.0)).unwrap();
        let path = graph.shortest_path(a, b);
        if let Some((len, _)) = path {
            assert!(len > 1.5, "slit pair admissible path length {len}");
        }
    }

    #[test]
    fn p_condition_square_satisfied_cusp_fails() {
        let d = shapes::unit_square(0.01);
        let rep = check_p_condition(&d, 1.5, 16, 0.02, 50.0, 9).unwrap();
        assert!(rep.satisfied, "square p-constant {}", rep.constant);

        // parabola cusp: ratio grows like t^(1-p) along the cusp pairs
        let cusp = shapes::parabola_cusp(192, 0.004);
        let ts = [0.2f64, 0.1, 0.05];
        let mut ratios = Vec::new();
        for t in ts {
            let h = (t * t / 8.0).min(0.004);
            let res = p_condition_pairs(
                &cusp,
                1.5,
                &[(Point::new(0.0, 0.0), Point::new(t, 0.0))],
                h,
            )
            .unwrap();
            ratios.push(res[0].ratio);
        }
        assert!(
            ratios[1] > 1.3 * ratios[0] && ratios[2] > 1.3 * ratios[1],
            "cusp ratios should grow by >= 1.3x per halving: {ratios:?}"
        );
        // the same domain passes the p = 1 analogue (curve condition)
        let rep = check_curve_condition(&cusp, 16, 0.01, 50.0, 13).unwrap();
        assert!(rep.satisfied, "cusp curve condition worst {}", rep.worst_ratio);
    }

    #[test]
    fn inversion_formula_and_involution() {
        assert!(invert_point(Point::new(0.0, 0.0), Point::new(2.0, 0.0))
            .dist(Point::new(0.5, 0.0)) < 1e-12);
        let d = shapes::disk(64, 0.01);
        let inv = inversion_swap(&d, Point::new(0.0, 0.0)).unwrap();
        // circle of radius 1 about center 0 stays radius 1 (up to chord
        // flattening of the densified polygon)
        for p in inv.polylines[0].vertices().iter().step_by(8) {
            assert!((p.dist(Point::new(0.0, 0.0)) - 1.0).abs() < 3e-3);
        }
        // involution on a scaled circle
        let two = {
            let pts = (0..64)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                    Point::new(2.0 * t.cos(), 2.0 * t.sin())
                })
                .collect();
            PolygonalDomain::new(Polyline::closed(pts).unwrap(), vec![], 0.01).unwrap()
        };
        let inv2 = inversion_swap(&two, Point::new(0.0, 0.0)).unwrap();
        for p in inv2.polylines[0].vertices().iter().step_by(8) {
            assert!((p.dist(Point::new(0.0, 0.0)) - 0.5).abs() < 2e-3);
        }
        let back: Vec<Point> = inv2.polylines[0]
            .vertices()
            .iter()
            .map(|p| invert_point(Point::new(0.0, 0.0), *p))
            .collect();
        for (q, orig) in back.iter().zip(two.outer.densify(two.diameter() / 512.0).vertices()) {
            assert!(q.dist(*orig) < 1e-10 * 2.0, "involution failed");
        }
    }

    #[test]
    fn path_repair_interior_untouched_offset_repaired() {
        let d = shapes::unit_square(0.01);
        let region = ComplementRegion::closed(&d);
        // already interior path
        let p = Polyline::open(vec![Point::new(-0.5, -0.5), Point::new(1.5, -0.5)]).unwrap();
        let rep = open_path_repair(&p, &region, 0.25).unwrap();
        assert_eq!(rep.moved_waypoints, 0);
        // path glued to the outer side of the square's top edge
        let glued = Polyline::open(vec![
            Point::new(-0.2, 1.1),
            Point::new(0.2, 1.0),
            Point::new(0.8, 1.0),
            Point::new(1.2, 1.1),
        ])
        .unwrap();
        let rep = open_path_repair(&glued, &region, 0.3).unwrap();
        assert!(rep.moved_waypoints > 0);
        assert!(rep.output_length <= 3.0 * rep.input_length);
        for q in rep.repaired.resample(64) {
            assert!(
                winding_number(&d.outer, q) == 0,
                "repaired path entered the domain"
            );
        }
        // true slit contact: no interior on the slit, repair fails
        let sd = shapes::slit_disk(64, 0.01);
        let sregion = ComplementRegion::closed(&sd);
        let through = Polyline::open(vec![
            Point::new(1.5, 0.0),
            Point::new(0.5, 0.0),
            Point::new(0.25, 0.0),
        ])
        .unwrap();
        assert!(open_path_repair(&through, &sregion, 0.05).is_err());
    }
}
