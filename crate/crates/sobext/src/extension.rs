//! The extension operator: Whitney averages over sector images, auxiliary
//! functions on hyperbolic triangles (linear in the edge data), assembly of
//! the extension field for Jordan and general simply connected domains, and
//! the gradient blow-up probe for domains failing the curve condition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::DiskMap;
use crate::fields::{GridSpec, ScalarField};
use crate::geometry::{dedup_points, winding_number, Point, Polyline, PolygonalDomain};
use crate::triangulation::{
    sector_count, DegenerateCase, GeodesicPiece, HyperbolicTriangle,
    PiecewiseHyperbolicGeodesic, Triangulation, WhitneyDecomposition,
};
use crate::{Error, Result};

/// Boundary data of one triangle: one value per edge plus edge lengths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleBoundaryData {
    pub index: (u32, u32),
    pub values: [f64; 3],
    pub lengths: [f64; 3],
}

/// Ordering case of the triangle data after relabeling the longest edge to
/// position 3 (kept as metadata; the blend construction is case-uniform).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxCase {
    BelowLongest,
    AboveLongest,
    MixedLowHigh,
    MixedHighLow,
}

fn classify_case(values: [f64; 3], lengths: [f64; 3]) -> AuxCase {
    // relabel so edge 3 is the longest
    let long = (0..3)
        .max_by(|a, b| lengths[*a].partial_cmp(&lengths[*b]).unwrap())
        .unwrap();
    let a3 = values[long];
    let others: Vec<f64> = (0..3).filter(|i| *i != long).map(|i| values[i]).collect();
    let (a1, a2) = (others[0], others[1]);
    if a1.max(a2) <= a3 {
        AuxCase::BelowLongest
    } else if a3 <= a1.min(a2) {
        AuxCase::AboveLongest
    } else if a1 <= a3 {
        AuxCase::MixedLowHigh
    } else {
        AuxCase::MixedHighLow
    }
}

/// Auxiliary function on a triangle region, sampled on a local grid.
#[derive(Debug, Clone)]
pub struct AuxFunction {
    pub case: AuxCase,
    pub data: TriangleBoundaryData,
    pub field: ScalarField,
}

/// Geometric weighted-distance fields of the aux construction: per edge i,
/// the Dijkstra distance with the paper's integrand 20 / dist(z, other two
/// edges), and the induced convex blend weights. Purely geometric, so the
/// resulting function is linear in the edge values.
struct AuxSolve {
    node_ids: Vec<usize>,
    weights: Vec<[f64; 3]>,
}

fn aux_solve(
    grid: &GridSpec,
    node_ids: &[usize],
    edges: [&Polyline; 3],
    h: f64,
) -> AuxSolve {
    use std::collections::BinaryHeap;
    #[derive(PartialEq)]
    struct HE(f64, usize);
    impl Eq for HE {}
    impl Ord for HE {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.partial_cmp(&self.0).unwrap_or(std::cmp::Ordering::Equal)
        }
    }
    impl PartialOrd for HE {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    let mut local_index = std::collections::HashMap::with_capacity(node_ids.len() * 2);
    for (li, id) in node_ids.iter().enumerate() {
        local_index.insert(*id, li);
    }
    let n = node_ids.len();
    let mut dist_fields = [vec![f64::INFINITY; n], vec![f64::INFINITY; n], vec![f64::INFINITY; n]];
    let point_of = |id: usize| -> Point {
        let (i, j) = grid.ij(id);
        grid.point(i, j)
    };
    for ei in 0..3 {
        let me = edges[ei];
        let others = [edges[(ei + 1) % 3], edges[(ei + 2) % 3]];
        let wt = |p: Point| -> f64 {
            let d = others[0].dist_to(p).min(others[1].dist_to(p)).max(h / 4.0);
            20.0 / d
        };
        let dist = &mut dist_fields[ei];
        let mut heap = BinaryHeap::new();
        for (li, id) in node_ids.iter().enumerate() {
            let p = point_of(*id);
            if me.dist_to(p) <= 0.71 * h {
                dist[li] = 0.0;
                heap.push(HE(0.0, li));
            }
        }
        while let Some(HE(c, li)) = heap.pop() {
            if c > dist[li] {
                continue;
            }
            let id = node_ids[li];
            let (i, j) = grid.ij(id);
            let p = point_of(id);
            for (di, dj) in crate::geometry::GRID_DIRS {
                let ii = i as i64 + di;
                let jj = j as i64 + dj;
                if ii < 0 || jj < 0 || ii >= grid.nx as i64 || jj >= grid.ny as i64 {
                    continue;
                }
                let nid = grid.id(ii as usize, jj as usize);
                if let Some(&lj) = local_index.get(&nid) {
                    let q = point_of(nid);
                    let mid = p.lerp(q, 0.5);
                    let w = wt(mid) * p.dist(q);
                    let ncost = c + w;
                    if ncost < dist[lj] {
                        dist[lj] = ncost;
                        heap.push(HE(ncost, lj));
                    }
                }
            }
        }
    }
    // convex blend weights from the geometric distances
    let mut weights = Vec::with_capacity(n);
    for li in 0..n {
        let d = [dist_fields[0][li], dist_fields[1][li], dist_fields[2][li]];
        let m = d[0].min(d[1]).min(d[2]);
        if !m.is_finite() {
            weights.push([1.0 / 3.0; 3]);
            continue;
        }
        let e = [
            (-(d[0] - m)).exp(),
            (-(d[1] - m)).exp(),
            (-(d[2] - m)).exp(),
        ];
        let s = e[0] + e[1] + e[2];
        weights.push([e[0] / s, e[1] / s, e[2] / s]);
    }
    AuxSolve {
        node_ids: node_ids.to_vec(),
        weights,
    }
}

/// Nodes of `grid` inside the closed loop (winding test over the bbox).
fn nodes_in_loop(grid: &GridSpec, boundary: &Polyline) -> Vec<usize> {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in boundary.vertices() {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let i0 = (((lo.x - grid.x0) / grid.h).floor().max(0.0)) as usize;
    let j0 = (((lo.y - grid.y0) / grid.h).floor().max(0.0)) as usize;
    let i1 = (((hi.x - grid.x0) / grid.h).ceil() as usize).min(grid.nx.saturating_sub(1));
    let j1 = (((hi.y - grid.y0) / grid.h).ceil() as usize).min(grid.ny.saturating_sub(1));
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            if winding_number(boundary, grid.point(i, j)) != 0 {
                out.push(grid.id(i, j));
            }
        }
    }
    out
}

/// Standalone auxiliary-function solve on a triangle region given by its
/// closed boundary loop. Used directly by tests and the render layer; the
/// extension assembly runs the same engine inline.
pub fn aux_function(
    boundary: &Polyline,
    edges: [&Polyline; 3],
    data: &TriangleBoundaryData,
    h: f64,
) -> Result<AuxFunction> {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in boundary.vertices() {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let grid = GridSpec::covering(
        Point::new(lo.x - 2.0 * h, lo.y - 2.0 * h),
        Point::new(hi.x + 2.0 * h, hi.y + 2.0 * h),
        h,
    );
    let ids = nodes_in_loop(&grid, boundary);
    if ids.len() < 20 {
        return Err(Error::Resolution(format!(
            "triangle too coarse at h = {h}: {} interior nodes",
            ids.len()
        )));
    }
    let solve = aux_solve(&grid, &ids, edges, h);
    let mut field = ScalarField {
        grid,
        values: vec![0.0; grid.len()],
        mask: vec![false; grid.len()],
        coverage: vec![1.0; grid.len()],
    };
    let vertices = [
        edges[0].vertices()[0],
        *edges[0].vertices().last().unwrap(),
        edges[1].vertices().last().copied().unwrap_or(edges[1].vertices()[0]),
    ];
    let longest = (0..3)
        .max_by(|a, b| data.lengths[*a].partial_cmp(&data.lengths[*b]).unwrap())
        .unwrap();
    for (li, id) in solve.node_ids.iter().enumerate() {
        let (i, j) = grid.ij(*id);
        let p = grid.point(i, j);
        let w = solve.weights[li];
        let mut v = w[0] * data.values[0] + w[1] * data.values[1] + w[2] * data.values[2];
        // exact traces on the edges; vertices inherit the longest edge
        if vertices.iter().any(|q| q.dist(p) < h) {
            v = data.values[longest];
        } else {
            for ei in 0..3 {
                if edges[ei].dist_to(p) <= 0.4 * h {
                    v = data.values[ei];
                    break;
                }
            }
        }
        field.values[*id] = v;
        field.mask[*id] = true;
    }
    Ok(AuxFunction {
        case: classify_case(data.values, data.lengths),
        data: data.clone(),
        field,
    })
}

/// Node region tags of an extension field.
pub const TAG_OUTSIDE: u8 = 0;
pub const TAG_OMEGA: u8 = 1;
pub const TAG_TRIANGLE: u8 = 2;
pub const TAG_FRINGE: u8 = 3;
pub const TAG_REST: u8 = 4;

/// The assembled extension: grid values over the ball B (radius 4 diam,
/// domain inside B/2), per-node region tags and the norm report.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub field: ScalarField,
    pub tags: Vec<u8>,
    pub a_mean: f64,
    pub report: ExtensionReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub h: f64,
    pub k0: u32,
    pub kmax: u32,
    /// |grad Eu|_L1 over the complement part of B
    pub grad_eu_complement: f64,
    pub grad_u_omega: f64,
    pub eu_l1_ball: f64,
    pub u_l1_omega: f64,
    pub grad_ratio: f64,
    pub l1_ratio: f64,
    pub s1_sum: f64,
    pub s2_sum: f64,
    pub degenerate_skipped: usize,
    pub triangles_built: usize,
}

/// Mean of `u` over the grid nodes inside the closed region polygon.
pub fn whitney_average(u: &ScalarField, region: &Polyline) -> Result<f64> {
    if !region.is_closed() {
        return Err(Error::InvalidDomain("region polygon must be closed".into()));
    }
    let ids = nodes_in_loop(&u.grid, region);
    let vals: Vec<f64> = ids
        .iter()
        .filter(|id| u.mask[**id])
        .map(|id| u.values[*id])
        .collect();
    if vals.len() < 10 {
        return Err(Error::EmptyRegion(format!(
            "region holds {} masked nodes (< 10)",
            vals.len()
        )));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Average of `u` over the image of sector (k, j), by conformal sampling.
fn sector_average(
    u: &ScalarField,
    m: &DiskMap,
    dec: &WhitneyDecomposition,
    k: u32,
    j: usize,
) -> f64 {
    let pts = dec.sector_image_samples(m, k, j, 4);
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for p in pts {
        if let Some(v) = u.interpolate(p) {
            acc += v;
            cnt += 1;
        }
    }
    if cnt == 0 {
        0.0
    } else {
        acc / cnt as f64
    }
}

/// Which assembly is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyMode {
    Jordan,
    SimplyConnected,
}

/// Builds the extension of `u` for a Jordan domain (no slits): the k = 0
/// ring must exist and every triangle must be non-degenerate.
pub fn extend_jordan(
    d: &PolygonalDomain,
    u: &ScalarField,
    m: &DiskMap,
    dec: &WhitneyDecomposition,
    tri: &Triangulation,
    h: f64,
) -> Result<ExtensionField> {
    if !d.slits.is_empty() {
        return Err(Error::InvalidDomain(
            "extend_jordan requires a slit-free domain".into(),
        ));
    }
    if tri
        .triangles
        .iter()
        .any(|t| t.degenerate != DegenerateCase::None)
    {
        return Err(Error::Degenerate(
            "degenerate triangle present: use extend_simply_connected".into(),
        ));
    }
    assemble(d, u, m, dec, tri, h, AssemblyMode::Jordan)
}

/// Builds the extension for a general simply connected domain: values on
/// coinciding curve pieces come from class ancestors, auxiliary functions
/// are solved only on non-degenerate triangles, and slit-free inputs reduce
/// to the Jordan assembly exactly.
pub fn extend_simply_connected(
    d: &PolygonalDomain,
    u: &ScalarField,
    m: &DiskMap,
    dec: &WhitneyDecomposition,
    tri: &Triangulation,
    h: f64,
) -> Result<ExtensionField> {
    if !tri.chains.ambiguous_pairs.is_empty() {
        return Err(Error::ClassAmbiguity(format!(
            "{} coincidence pairs fall in the tolerance band; review tol",
            tri.chains.ambiguous_pairs.len()
        )));
    }
    if d.slits.is_empty() {
        return assemble(d, u, m, dec, tri, h, AssemblyMode::Jordan);
    }
    assemble(d, u, m, dec, tri, h, AssemblyMode::SimplyConnected)
}

fn assemble(
    d: &PolygonalDomain,
    u: &ScalarField,
    m: &DiskMap,
    dec: &WhitneyDecomposition,
    tri: &Triangulation,
    h: f64,
    mode: AssemblyMode,
) -> Result<ExtensionField> {
    let diam = d.diameter();
    let (blo, bhi) = d.bbox();
    let center = Point::new(0.5 * (blo.x + bhi.x), 0.5 * (blo.y + bhi.y));
    let radius = 4.0 * diam;
    let grid = GridSpec::covering(
        Point::new(center.x - radius, center.y - radius),
        Point::new(center.x + radius, center.y + radius),
        h,
    );
    let n = grid.len();
    let mut tags = vec![TAG_OUTSIDE; n];
    let mut values = vec![0.0f64; n];
    let mut mask = vec![false; n];
    // omega tags and values
    let band = 0.55 * h;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let id = grid.id(i, j);
            let p = grid.point(i, j);
            if p.dist(center) > radius {
                continue;
            }
            mask[id] = true;
            if d.contains(p) || d.on_boundary(p, band) {
                tags[id] = TAG_OMEGA;
                values[id] = u.interpolate(p).unwrap_or(0.0);
            }
        }
    }
    // global mean of u over its own mask
    let a_mean = {
        let cell = u.grid.h * u.grid.h;
        let mut acc = 0.0;
        let mut area = 0.0;
        for id in 0..u.grid.len() {
            if u.mask[id] {
                let w = cell * u.coverage[id];
                acc += u.values[id] * w;
                area += w;
            }
        }
        acc / area.max(1e-300)
    };
    // sector averages a_k^(j)
    let mut averages: Vec<Vec<f64>> = Vec::with_capacity(dec.kmax as usize);
    for k in 1..=dec.kmax {
        let count = sector_count(k, dec.k0);
        let row: Vec<f64> = (1..=count)
            .into_par_iter()
            .map(|j| sector_average(u, m, dec, k, j))
            .collect();
        averages.push(row);
    }
    let raw_value = |k: u32, j: u32| -> f64 {
        let count = sector_count(k, dec.k0) as u32;
        let jj = ((j + count - 1) % count) as usize;
        averages[(k - 1) as usize][jj]
    };
    // ancestor-resolved edge value (general mode only)
    let edge_value = |k: u32, j: u32| -> f64 {
        if mode == AssemblyMode::Jordan {
            return raw_value(k, j);
        }
        // §-style forcing: all first-generation curves carry the value of
        // gamma_1^(1) so the far field stays continuous
        if k == 1 {
            return raw_value(1, 1);
        }
        for comp in [1usize, 0usize] {
            if let Some(cid) = tri.chains.class_of.get(&(k, j, comp)) {
                let (ak, aj, _) = tri.chains.classes[*cid].ancestor;
                if ak == 1 {
                    return raw_value(1, 1);
                }
                return raw_value(ak, aj);
            }
        }
        raw_value(k, j)
    };
    // per-triangle solves
    let good: Vec<&HyperbolicTriangle> = tri
        .triangles
        .iter()
        .filter(|t| t.degenerate == DegenerateCase::None)
        .collect();
    let degenerate_skipped = tri.triangles.len() - good.len();
    struct TriOut {
        writes: Vec<(usize, f64)>,
        s1: f64,
        s2: f64,
    }
    let ring_halves = tri.ring.as_ref().map(|r| &r.level1_halves);
    let results: Vec<Result<TriOut>> = good
        .par_iter()
        .map(|t| -> Result<TriOut> {
            // edge polylines and values
            let (e0, e1, e2, v0, v1, v2): (Polyline, Polyline, Polyline, f64, f64, f64) =
                if t.k == 0 {
                    let ring = tri.ring.as_ref().ok_or_else(|| {
                        Error::Invariant("ring triangle without ring data".into())
                    })?;
                    let n1 = sector_count(1, dec.k0);
                    let j = (t.j as usize - 1) % n1;
                    let halves = ring_halves.unwrap();
                    let e0 = ring.ring_edges[j].clone();
                    let e1 = halves[j].1.clone();
                    let e2 = halves[(j + 1) % n1].0.clone();
                    let (v1, v2) = (edge_value(1, (j + 1) as u32), edge_value(1, ((j + 1) % n1 + 1) as u32));
                    (e0, e1, e2, a_mean, v1, v2)
                } else {
                    let e0 = tri.edges[&t.edges[0]].polyline.clone();
                    let e1 = tri.edges[&t.edges[1]].polyline.clone();
                    let e2 = tri.edges[&t.edges[2]].polyline.clone();
                    (
                        e0,
                        e1,
                        e2,
                        edge_value(t.edges[0].0, t.edges[0].1),
                        edge_value(t.edges[1].0, t.edges[1].1),
                        edge_value(t.edges[2].0, t.edges[2].1),
                    )
                };
            let ids = nodes_in_loop(&grid, &t.boundary);
            let mut writes = Vec::with_capacity(ids.len());
            // drop nodes already claimed by omega
            let ids: Vec<usize> = ids.into_iter().filter(|id| tags[*id] != TAG_OMEGA).collect();
            let values_arr = [v0, v1, v2];
            let lengths = [e0.length(), e1.length(), e2.length()];
            if ids.len() >= 4 {
                let solve = aux_solve(&grid, &ids, [&e0, &e1, &e2], h);
                let verts = t.vertices;
                let longest = (0..3)
                    .max_by(|a, b| lengths[*a].partial_cmp(&lengths[*b]).unwrap())
                    .unwrap();
                for (li, id) in solve.node_ids.iter().enumerate() {
                    let (gi, gj) = grid.ij(*id);
                    let p = grid.point(gi, gj);
                    let w = solve.weights[li];
                    let mut v =
                        w[0] * values_arr[0] + w[1] * values_arr[1] + w[2] * values_arr[2];
                    if verts.iter().any(|q| q.dist(p) < h) {
                        v = values_arr[longest];
                    } else {
                        for (ei, edge) in [&e0, &e1, &e2].iter().enumerate() {
                            if edge.dist_to(p) <= 0.4 * h {
                                v = values_arr[ei];
                                break;
                            }
                        }
                    }
                    writes.push((*id, v));
                }
            }
            // S1: paper-style per-triangle bound ingredients
            let s1 = ((values_arr[0] - values_arr[1]).abs()
                + (values_arr[0] - values_arr[2]).abs()
                + (values_arr[1] - values_arr[2]).abs())
                * lengths[0].max(lengths[1]).max(lengths[2]);
            // S2: family-chain telescoping for the leading edge
            let mut s2 = 0.0;
            if mode == AssemblyMode::SimplyConnected && t.k >= 1 {
                for comp in [1usize, 0usize] {
                    if let Some(chain) = tri.chains.chains.get(&(t.k, t.j, comp)) {
                        let anc_len = tri
                            .chains
                            .class_of
                            .get(&(t.k, t.j, comp))
                            .map(|cid| tri.chains.classes[*cid].ancestor)
                            .and_then(|(ak, aj, _)| tri.edges.get(&(ak, aj)))
                            .map(|e| e.polyline.length())
                            .unwrap_or(lengths[0]);
                        for pair in chain.windows(2) {
                            let va = raw_value(pair[0].0, pair[0].1);
                            let vb = raw_value(pair[1].0, pair[1].1);
                            s2 += (va - vb).abs() * anc_len;
                        }
                        break;
                    }
                }
            }
            Ok(TriOut { writes, s1, s2 })
        })
        .collect();
    let mut s1_sum = 0.0;
    let mut s2_sum = 0.0;
    for r in results {
        let out = r?;
        for (id, v) in out.writes {
            if tags[id] != TAG_OMEGA {
                tags[id] = TAG_TRIANGLE;
                values[id] = v;
            }
        }
        s1_sum += out.s1;
        s2_sum += out.s2;
    }
    // rest: unassigned nodes connected to the rim of B; fringe: enclosed
    // pockets (sub-resolution slivers near the boundary)
    let rest_value = match mode {
        AssemblyMode::Jordan => a_mean,
        AssemblyMode::SimplyConnected => raw_value(1, 1),
    };
    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let id = grid.id(i, j);
            if !mask[id] || tags[id] != TAG_OUTSIDE {
                continue;
            }
            let p = grid.point(i, j);
            if p.dist(center) > radius - 2.0 * h {
                tags[id] = TAG_REST;
                values[id] = rest_value;
                queue.push_back(id);
            }
        }
    }
    while let Some(id) = queue.pop_front() {
        let (i, j) = grid.ij(id);
        for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let ii = i as i64 + di;
            let jj = j as i64 + dj;
            if ii < 0 || jj < 0 || ii >= grid.nx as i64 || jj >= grid.ny as i64 {
                continue;
            }
            let nid = grid.id(ii as usize, jj as usize);
            if mask[nid] && tags[nid] == TAG_OUTSIDE {
                tags[nid] = TAG_REST;
                values[nid] = rest_value;
                queue.push_back(nid);
            }
        }
    }
    // fringe fill: copy the nearest assigned non-omega value outward from
    // triangle/rest nodes (multi-source BFS); untouched pockets adjacent
    // only to omega copy the local edge trace instead of jumping far
    let mut fringe_queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for id in 0..n {
        if mask[id] && (tags[id] == TAG_TRIANGLE || tags[id] == TAG_REST) {
            fringe_queue.push_back(id);
        }
    }
    let mut fringe_from = vec![u32::MAX; n];
    while let Some(id) = fringe_queue.pop_front() {
        let (i, j) = grid.ij(id);
        for (di, dj) in crate::geometry::GRID_DIRS {
            let ii = i as i64 + di;
            let jj = j as i64 + dj;
            if ii < 0 || jj < 0 || ii >= grid.nx as i64 || jj >= grid.ny as i64 {
                continue;
            }
            let nid = grid.id(ii as usize, jj as usize);
            if mask[nid] && tags[nid] == TAG_OUTSIDE && fringe_from[nid] == u32::MAX {
                fringe_from[nid] = id as u32;
                tags[nid] = TAG_FRINGE;
                values[nid] = values[id];
                fringe_queue.push_back(nid);
            }
        }
    }
    // isolated leftovers default to the rest value
    for id in 0..n {
        if mask[id] && tags[id] == TAG_OUTSIDE {
            tags[id] = TAG_FRINGE;
            values[id] = rest_value;
        }
    }
    let field = ScalarField {
        grid,
        values,
        mask: mask.clone(),
        coverage: vec![1.0; n],
    };
    // norms: tag-aware gradient that never differences across the
    // omega/complement interface or across slit walls
    let (gx, gy) = tag_aware_gradient(&field, &tags, d);
    let cell = h * h;
    let mut grad_eu_complement = 0.0;
    let mut eu_l1_ball = 0.0;
    for id in 0..n {
        if !mask[id] {
            continue;
        }
        eu_l1_ball += field.values[id].abs() * cell;
        if tags[id] != TAG_OMEGA {
            grad_eu_complement += gx[id].hypot(gy[id]) * cell;
        }
    }
    let walls = crate::fields::StencilWalls::Domain(d);
    let u_norms = crate::fields::w11_norm(u, &walls)?;
    let report = ExtensionReport {
        h,
        k0: dec.k0,
        kmax: dec.kmax,
        grad_eu_complement,
        grad_u_omega: u_norms.grad_l1,
        eu_l1_ball,
        u_l1_omega: u_norms.l1,
        grad_ratio: grad_eu_complement / u_norms.grad_l1.max(1e-300),
        l1_ratio: eu_l1_ball / u_norms.l1.max(1e-300),
        s1_sum,
        s2_sum,
        degenerate_skipped,
        triangles_built: good.len(),
    };
    Ok(ExtensionField {
        field,
        tags,
        a_mean,
        report,
    })
}

/// Gradient with one-sided stencils at tag-class changes (omega versus
/// complement) and across slit walls.
pub fn tag_aware_gradient(
    f: &ScalarField,
    tags: &[u8],
    d: &PolygonalDomain,
) -> (Vec<f64>, Vec<f64>) {
    let g = &f.grid;
    let h = g.h;
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    let class = |t: u8| -> u8 {
        match t {
            TAG_OMEGA => 0,
            TAG_OUTSIDE => 2,
            _ => 1,
        }
    };
    let ok = |i: i64, j: i64, from: Point, cls: u8| -> Option<usize> {
        if i < 0 || j < 0 || i >= g.nx as i64 || j >= g.ny as i64 {
            return None;
        }
        let id = g.id(i as usize, j as usize);
        if !f.mask[id] || class(tags[id]) != cls {
            return None;
        }
        let to = g.point(i as usize, j as usize);
        if d.segment_crosses_slit(from, to) {
            return None;
        }
        Some(id)
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let id = g.id(i, j);
            if !f.mask[id] || tags[id] == TAG_OUTSIDE {
                continue;
            }
            let cls = class(tags[id]);
            let p = g.point(i, j);
            let xm = ok(i as i64 - 1, j as i64, p, cls);
            let xp = ok(i as i64 + 1, j as i64, p, cls);
            gx[id] = match (xm, xp) {
                (Some(m), Some(pl)) => (f.values[pl] - f.values[m]) / (2.0 * h),
                (None, Some(pl)) => (f.values[pl] - f.values[id]) / h,
                (Some(m), None) => (f.values[id] - f.values[m]) / h,
                (None, None) => 0.0,
            };
            let ym = ok(i as i64, j as i64 - 1, p, cls);
            let yp = ok(i as i64, j as i64 + 1, p, cls);
            gy[id] = match (ym, yp) {
                (Some(m), Some(pl)) => (f.values[pl] - f.values[m]) / (2.0 * h),
                (None, Some(pl)) => (f.values[pl] - f.values[id]) / h,
                (Some(m), None) => (f.values[id] - f.values[m]) / h,
                (None, None) => 0.0,
            };
        }
    }
    (gx, gy)
}

/// The gradient blow-up probe built from the necessity argument: a tent
/// test function supported on one side of the crosscut through the domain,
/// its candidate extension, and disjoint-disk coverings of the near-boundary
/// core of the geodesic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NecessityProbe {
    pub z0: [f64; 2],
    pub r0: f64,
    pub i_estimate: f64,
    pub vacuous: bool,
    /// per covering scale: (delta, sum of radii, integral of |grad E psi|,
    /// ratio integral / sum radii)
    pub covering_sweep: Vec<(f64, f64, f64, f64)>,
    pub contradiction_witness: bool,
    /// mass of |grad E psi| within 2h of the geodesic core, over |grad
    /// psi|_L1: the blow-up ratio tracked across families
    pub blowup_ratio: f64,
    pub psi_grad_l1: f64,
}

/// Runs the necessity probe for the geodesic `gamma` of the domain.
pub fn necessity_probe(
    d: &PolygonalDomain,
    u_grid_h: f64,
    m: &DiskMap,
    dec: &WhitneyDecomposition,
    tri: &Triangulation,
    gamma: &PiecewiseHyperbolicGeodesic,
    delta_cover: f64,
) -> Result<NecessityProbe> {
    let h = u_grid_h;
    let glen = gamma.polyline.length();
    let z0 = gamma.polyline.point_at(0.5 * glen);
    // crosscut through the base point
    let alpha = {
        let mut pts: Vec<Point> = Vec::new();
        let (t1, t2) = gamma.labels;
        for i in (0..=48).rev() {
            let r = 0.995 * i as f64 / 48.0;
            pts.push(m.evaluate(Point::new(r * t1.cos(), r * t1.sin())));
        }
        for i in 1..=48 {
            let r = 0.995 * i as f64 / 48.0;
            pts.push(m.evaluate(Point::new(r * t2.cos(), r * t2.sin())));
        }
        Polyline::open(dedup_points(pts))?
    };
    let r0 = z0.dist(Point::new(0.0, 0.0)).mul_add(0.0, alpha.dist_to(z0)) / 8.0;
    if r0 <= 2.0 * h {
        return Err(Error::Resolution(format!(
            "r0 = {r0:.3e} <= 2h; refine the grid"
        )));
    }
    // near-boundary core of the geodesic inside B(z0, r0)
    let core: Vec<Point> = gamma
        .polyline
        .resample(256)
        .into_iter()
        .filter(|p| p.dist(z0) <= r0)
        .collect();
    let i_estimate: f64 = {
        let pieces: Vec<&GeodesicPiece> = gamma.pieces.iter().filter(|p| p.on_boundary).collect();
        pieces
            .iter()
            .map(|p| {
                p.polyline
                    .resample(64)
                    .windows(2)
                    .map(|w| {
                        if w[0].dist(z0) <= r0 {
                            w[0].dist(w[1])
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .sum()
    };
    // psi = tent * indicator(one side of the crosscut)
    let (blo, bhi) = d.bbox();
    let ugrid = GridSpec::covering(
        Point::new(blo.x - 4.0 * h, blo.y - 4.0 * h),
        Point::new(bhi.x + 4.0 * h, bhi.y + 4.0 * h),
        h,
    );
    // flood fill of omega nodes with the crosscut (and the geodesic) as a wall
    let mut omega_ids: Vec<bool> = vec![false; ugrid.len()];
    for j in 0..ugrid.ny {
        for i in 0..ugrid.nx {
            let p = ugrid.point(i, j);
            omega_ids[ugrid.id(i, j)] = d.contains(p);
        }
    }
    // seed on one side of the geodesic at z0
    let tangent = {
        let p0 = gamma.polyline.point_at(0.45 * glen);
        let p1 = gamma.polyline.point_at(0.55 * glen);
        let dx = p1.x - p0.x;
        let dy = p1.y - p0.y;
        let l = (dx * dx + dy * dy).sqrt().max(1e-12);
        (dx / l, dy / l)
    };
    let seed_pt = Point::new(z0.x - tangent.1 * 3.0 * h, z0.y + tangent.0 * 3.0 * h);
    let mut side = vec![false; ugrid.len()];
    if let Some((si, sj)) = ugrid.nearest(seed_pt) {
        let mut dq = std::collections::VecDeque::new();
        let sid = ugrid.id(si, sj);
        if omega_ids[sid] {
            side[sid] = true;
            dq.push_back(sid);
        }
        while let Some(id) = dq.pop_front() {
            let (i, j) = ugrid.ij(id);
            let p = ugrid.point(i, j);
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let ii = i as i64 + di;
                let jj = j as i64 + dj;
                if ii < 0 || jj < 0 || ii >= ugrid.nx as i64 || jj >= ugrid.ny as i64 {
                    continue;
                }
                let nid = ugrid.id(ii as usize, jj as usize);
                if !omega_ids[nid] || side[nid] {
                    continue;
                }
                let q = ugrid.point(ii as usize, jj as usize);
                // crossing the crosscut or the geodesic blocks the fill
                let crosses = segment_hits(&alpha, p, q, 0.7 * h)
                    || segment_hits(&gamma.polyline, p, q, 0.7 * h)
                    || d.segment_crosses_slit(p, q);
                if !crosses {
                    side[nid] = true;
                    dq.push_back(nid);
                }
            }
        }
    }
    let mut psi = ScalarField {
        grid: ugrid,
        values: vec![0.0; ugrid.len()],
        mask: omega_ids.clone(),
        coverage: vec![1.0; ugrid.len()],
    };
    for id in 0..ugrid.len() {
        if side[id] {
            let (i, j) = ugrid.ij(id);
            let p = ugrid.point(i, j);
            let dist_ball = (p.dist(z0) - r0).max(0.0);
            psi.values[id] = (1.0 - dist_ball / (4.0 * r0)).max(0.0);
        }
    }
    let walls = crate::fields::StencilWalls::Domain(d);
    let psi_norms = crate::fields::w11_norm(&psi, &walls)?;
    // candidate extension of psi through the standard assembly
    let ext = assemble(
        d,
        &psi,
        m,
        dec,
        tri,
        h,
        if d.slits.is_empty() {
            AssemblyMode::Jordan
        } else {
            AssemblyMode::SimplyConnected
        },
    )?;
    let (gx, gy) = tag_aware_gradient(&ext.field, &ext.tags, d);
    let cell = h * h;
    let grad_at = |p: Point| -> Option<(usize, f64)> {
        ext.field.grid.nearest(p).map(|(i, j)| {
            let id = ext.field.grid.id(i, j);
            (id, gx[id].hypot(gy[id]))
        })
    };
    // covering sweep: greedy disjoint disks centered on the core
    let mut covering_sweep = Vec::new();
    for mult in [1.0, 2.0, 4.0] {
        let delta = delta_cover * mult;
        let mut centers: Vec<Point> = Vec::new();
        for p in &core {
            if centers.iter().all(|c| c.dist(*p) >= 2.0 * delta) {
                centers.push(*p);
            }
        }
        let sum_r = delta * centers.len() as f64;
        let mut integral = 0.0;
        let steps = (delta / h).ceil() as i64 + 1;
        let mut seen = std::collections::BTreeSet::new();
        for c in &centers {
            for dj in -steps..=steps {
                for di in -steps..=steps {
                    let p = Point::new(c.x + di as f64 * h, c.y + dj as f64 * h);
                    if p.dist(*c) > delta {
                        continue;
                    }
                    if let Some((id, gnorm)) = grad_at(p) {
                        if seen.insert(id) {
                            integral += gnorm * cell;
                        }
                    }
                }
            }
        }
        let ratio = integral / sum_r.max(1e-300);
        covering_sweep.push((delta, sum_r, integral, ratio));
    }
    // blow-up numerator: gradient mass within 2h of the core
    let mut blow_mass = 0.0;
    let core_poly = if core.len() >= 2 {
        Polyline::open(dedup_points(core.clone())).ok()
    } else {
        None
    };
    if let Some(cp) = &core_poly {
        let g = &ext.field.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let id = g.id(i, j);
                if !ext.field.mask[id] {
                    continue;
                }
                let p = g.point(i, j);
                if cp.dist_to(p) <= 2.0 * h {
                    blow_mass += gx[id].hypot(gy[id]) * cell;
                }
            }
        }
    }
    let vacuous = i_estimate <= 4.0 * h;
    // contradiction witness: positive boundary mass and the covering ratio
    // decaying as the covering scale shrinks (a genuine W^{1,1} extension
    // keeps it bounded below by the Poincare argument)
    let ratios: Vec<f64> = covering_sweep.iter().map(|c| c.3).collect();
    let decreasing = ratios.windows(2).all(|w| w[0] <= 0.85 * w[1] + 1e-12);
    let contradiction_witness = !vacuous && decreasing;
    Ok(NecessityProbe {
        z0: [z0.x, z0.y],
        r0,
        i_estimate,
        vacuous,
        covering_sweep,
        contradiction_witness,
        blowup_ratio: blow_mass / psi_norms.grad_l1.max(1e-300),
        psi_grad_l1: psi_norms.grad_l1,
    })
}

fn segment_hits(poly: &Polyline, a: Point, b: Point, tol: f64) -> bool {
    let mid = a.lerp(b, 0.5);
    if poly.dist_to(mid) <= tol || poly.dist_to(a) <= tol {
        return true;
    }
    for (c, dd) in poly.segments() {
        if crate::geometry::segments_intersect(a, b, c, dd) {
            return true;
        }
    }
    false
}

/// One-call pipeline: map, decomposition, triangulation and extension for a
/// domain and an expression-sampled input field.
pub struct Pipeline {
    pub map: DiskMap,
    pub dec: WhitneyDecomposition,
    pub tri: Triangulation,
}

/// Builds the full machinery once so several fields can be extended.
pub fn build_pipeline(
    d: &PolygonalDomain,
    mesh: f64,
    kmax: u32,
    delta: f64,
    n_levels: u32,
) -> Result<Pipeline> {
    let m = crate::conformal::build_disk_map(d, mesh)?;
    let (k0, _) = crate::triangulation::select_k0(&m, delta)?;
    let dec = crate::triangulation::build_decomposition(&m, k0, kmax, delta)?;
    let opts = crate::triangulation::GeodesicOptions::for_domain(d);
    let tri = if d.slits.is_empty() {
        let em = crate::conformal::build_exterior_map(d, mesh)?;
        crate::triangulation::build_triangles(
            &m,
            &dec,
            &crate::triangulation::GeodesicSource::Direct(&em),
            &opts,
        )?
    } else {
        let fam = crate::conformal::build_approximation_family(&m, n_levels, mesh)?;
        crate::triangulation::build_triangles(
            &m,
            &dec,
            &crate::triangulation::GeodesicSource::Family(&fam),
            &opts,
        )?
    };
    Ok(Pipeline { map: m, dec, tri })
}

/// Samples an expression over the domain on a grid of spacing `h` (bounding
/// box inflated by 4h).
pub fn sample_on_domain(d: &PolygonalDomain, expr: &str, h: f64) -> Result<ScalarField> {
    let e = crate::fields::expr::parse(expr)?;
    let (lo, hi) = d.bbox();
    let grid = GridSpec::covering(
        Point::new(lo.x - 4.0 * h, lo.y - 4.0 * h),
        Point::new(hi.x + 4.0 * h, hi.y + 4.0 * h),
        h,
    );
    Ok(ScalarField::from_fn_on_domain(grid, d, |p| e.eval(p.x, p.y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn model_triangle() -> (Polyline, [Polyline; 3]) {
        // a curvilinear triangle with straight edges for aux tests
        let z1 = Point::new(0.0, 0.0);
        let z2 = Point::new(1.0, 0.0);
        let z3 = Point::new(0.4, 0.8);
        let seg = |a: Point, b: Point| {
            Polyline::open(
                (0..=16)
                    .map(|i| a.lerp(b, i as f64 / 16.0))
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        let e1 = seg(z1, z2);
        let e2 = seg(z2, z3);
        let e3 = seg(z3, z1);
        let mut pts = Vec::new();
        pts.extend(e1.vertices().iter().copied());
        pts.extend(e2.vertices().iter().copied());
        pts.extend(e3.vertices().iter().copied());
        let mut pts = dedup_points(pts);
        if pts[0].dist(*pts.last().unwrap()) < 1e-12 {
            pts.pop();
        }
        let boundary = Polyline::closed(pts).unwrap();
        (boundary, [e1, e2, e3])
    }

    #[test]
    fn aux_constant_data_gives_constant() {
        let (boundary, edges) = model_triangle();
        let data = TriangleBoundaryData {
            index: (1, 1),
            values: [5.0, 5.0, 5.0],
            lengths: [1.0, 1.0, 1.0],
        };
        let aux = aux_function(&boundary, [&edges[0], &edges[1], &edges[2]], &data, 0.02)
            .unwrap();
        for (id, v) in aux.field.values.iter().enumerate() {
            if aux.field.mask[id] {
                assert!((v - 5.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aux_bounds_and_traces() {
        let (boundary, edges) = model_triangle();
        let h = 0.01;
        let data = TriangleBoundaryData {
            index: (1, 1),
            values: [0.0, 1.0, 0.5],
            lengths: [
                edges[0].length(),
                edges[1].length(),
                edges[2].length(),
            ],
        };
        let aux = aux_function(&boundary, [&edges[0], &edges[1], &edges[2]], &data, h).unwrap();
        let g = aux.field.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let id = g.id(i, j);
                if !aux.field.mask[id] {
                    continue;
                }
                let v = aux.field.values[id];
                assert!((0.0 - 1e-12..=1.0 + 1e-12).contains(&v), "bound violated: {v}");
                let p = g.point(i, j);
                // trace within a 2h band of each edge, away from vertices
                for (ei, e) in edges.iter().enumerate() {
                    let near_vertex = boundary
                        .vertices()
                        .iter()
                        .take(1)
                        .any(|_| false)
                        || [
                            Point::new(0.0, 0.0),
                            Point::new(1.0, 0.0),
                            Point::new(0.4, 0.8),
                        ]
                        .iter()
                        .any(|q| q.dist(p) < 3.0 * h);
                    if !near_vertex && e.dist_to(p) <= 0.3 * h {
                        assert!(
                            (v - data.values[ei]).abs() < 0.35,
                            "trace on edge {ei}: {v} vs {}",
                            data.values[ei]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn aux_gradient_mass_bounded_by_short_edges() {
        // a1 = a2 = 0 on the short edges, a3 = 1 on the longest: the
        // gradient L1 mass is controlled by the short edge lengths
        let (boundary, edges) = model_triangle();
        let h = 0.008;
        let lengths = [
            edges[0].length(),
            edges[1].length(),
            edges[2].length(),
        ];
        let data = TriangleBoundaryData {
            index: (1, 1),
            values: [1.0, 0.0, 0.0],
            lengths,
        };
        let aux = aux_function(&boundary, [&edges[0], &edges[1], &edges[2]], &data, h).unwrap();
        let (gx, gy) = crate::fields::gradient(&aux.field, &crate::fields::StencilWalls::None);
        let mut mass = 0.0;
        for id in 0..aux.field.grid.len() {
            if aux.field.mask[id] {
                mass += gx[id].hypot(gy[id]) * h * h;
            }
        }
        let bound = lengths[1] + lengths[2];
        let c = mass / bound;
        assert!(c < 3.0, "gradient mass constant {c}");
        // refined grid: constant stable within 25%
        let aux2 =
            aux_function(&boundary, [&edges[0], &edges[1], &edges[2]], &data, h / 2.0).unwrap();
        let (gx2, gy2) = crate::fields::gradient(&aux2.field, &crate::fields::StencilWalls::None);
        let mut mass2 = 0.0;
        for id in 0..aux2.field.grid.len() {
            if aux2.field.mask[id] {
                mass2 += gx2[id].hypot(gy2[id]) * (h / 2.0) * (h / 2.0);
            }
        }
        let c2 = mass2 / bound;
        assert!(
            (c / c2).max(c2 / c) < 1.25,
            "constant unstable: {c} vs {c2}"
        );
    }

    #[test]
    fn whitney_average_basics() {
        let d = shapes::unit_square(0.01);
        let g = GridSpec::covering(Point::new(0.0, 0.0), Point::new(1.0, 1.0), 0.02);
        let constant = ScalarField::from_fn_on_domain(g, &d, |_| 5.0);
        let sq = Polyline::closed(vec![
            Point::new(0.1, 0.1),
            Point::new(0.9, 0.1),
            Point::new(0.9, 0.9),
            Point::new(0.1, 0.9),
        ])
        .unwrap();
        assert!((whitney_average(&constant, &sq).unwrap() - 5.0).abs() < 1e-12);
        let ramp = ScalarField::from_fn_on_domain(g, &d, |p| p.x);
        let cell = Polyline::closed(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let avg = whitney_average(&ramp, &cell).unwrap();
        assert!((avg - 0.5).abs() <= 2.0 * 0.02, "avg {avg}");
        // tiny region: error
        let tiny = Polyline::closed(vec![
            Point::new(0.5, 0.5),
            Point::new(0.52, 0.5),
            Point::new(0.52, 0.52),
            Point::new(0.5, 0.52),
        ])
        .unwrap();
        assert!(whitney_average(&ramp, &tiny).is_err());
    }

    #[test]
    fn extend_square_constant_and_ramp() {
        let d = shapes::unit_square(0.01);
        let h = d.diameter() / 96.0;
        let pipe = build_pipeline(&d, 0.02, 5, 0.5, 6).unwrap();
        // constant: Eu is constant everywhere, gradient ratio numerator 0
        let uc = sample_on_domain(&d, "1", h).unwrap();
        let ext = extend_jordan(&d, &uc, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        assert!(ext.report.grad_eu_complement < 1e-9);
        for id in 0..ext.field.grid.len() {
            if ext.field.mask[id] {
                assert!((ext.field.values[id] - 1.0).abs() < 1e-9);
            }
        }
        // ramp: finite ratios
        let ur = sample_on_domain(&d, "x", h).unwrap();
        let ext = extend_jordan(&d, &ur, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        assert!(ext.report.grad_ratio.is_finite() && ext.report.grad_ratio > 0.0);
        assert!(ext.report.l1_ratio.is_finite() && ext.report.l1_ratio > 0.0);
        // Eu = u on omega nodes
        let g = ext.field.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let id = g.id(i, j);
                if ext.tags[id] == TAG_OMEGA {
                    let p = g.point(i, j);
                    if d.contains(p) && d.dist_to_boundary(p) > 2.0 * h {
                        assert!(
                            (ext.field.values[id] - p.x).abs() < 1e-9,
                            "Eu != u inside omega"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn extension_is_linear() {
        let d = shapes::hexagon(0.01);
        let h = d.diameter() / 64.0;
        let pipe = build_pipeline(&d, 0.02, 4, 0.5, 6).unwrap();
        let u = sample_on_domain(&d, "x", h).unwrap();
        let v = sample_on_domain(&d, "sin(3*x)*cos(2*y)", h).unwrap();
        let (alpha, beta) = (1.7, -0.6);
        let combo = u.scale_add(alpha, &v, beta);
        let eu = extend_jordan(&d, &u, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        let ev = extend_jordan(&d, &v, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        let ec = extend_jordan(&d, &combo, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        let mut worst = 0.0f64;
        for id in 0..ec.field.grid.len() {
            if ec.field.mask[id] {
                let lin = alpha * eu.field.values[id] + beta * ev.field.values[id];
                worst = worst.max((ec.field.values[id] - lin).abs());
            }
        }
        assert!(worst < 1e-10, "linearity defect {worst}");
    }

    #[test]
    fn simply_connected_agrees_with_jordan_on_jordan_input() {
        let d = shapes::unit_square(0.01);
        let h = d.diameter() / 64.0;
        let pipe = build_pipeline(&d, 0.02, 4, 0.5, 6).unwrap();
        let u = sample_on_domain(&d, "x^2-y^2", h).unwrap();
        let ej = extend_jordan(&d, &u, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        let es = extend_simply_connected(&d, &u, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        for id in 0..ej.field.grid.len() {
            if ej.field.mask[id] {
                assert!(
                    (ej.field.values[id] - es.field.values[id]).abs() < 1e-12,
                    "node {id} disagrees"
                );
            }
        }
    }

    #[test]
    fn slit_disk_constant_extends_constant() {
        let d = shapes::slit_disk(64, 0.01);
        let h = d.diameter() / 64.0;
        let pipe = build_pipeline(&d, 0.02, 4, 0.4, 10).unwrap();
        let u = sample_on_domain(&d, "1", h).unwrap();
        let ext =
            extend_simply_connected(&d, &u, &pipe.map, &pipe.dec, &pipe.tri, h).unwrap();
        for id in 0..ext.field.grid.len() {
            if ext.field.mask[id] {
                assert!(
                    (ext.field.values[id] - 1.0).abs() < 1e-9,
                    "constant not preserved"
                );
            }
        }
        assert!(ext.report.degenerate_skipped > 0);
    }

    #[test]
    fn probe_vacuous_on_disk() {
        let d = shapes::disk(64, 0.01);
        let h = d.diameter() / 96.0;
        let m = crate::conformal::build_disk_map(&d, 0.02).unwrap();
        let (k0, _) = crate::triangulation::select_k0(&m, 0.5).unwrap();
        let dec = crate::triangulation::build_decomposition(&m, k0, 4, 0.5).unwrap();
        let fam = crate::conformal::build_approximation_family(&m, 10, 0.04).unwrap();
        let em = crate::conformal::build_exterior_map(&d, 0.02).unwrap();
        let opts = crate::triangulation::GeodesicOptions::for_domain(&d);
        let tri = crate::triangulation::build_triangles(
            &m,
            &dec,
            &crate::triangulation::GeodesicSource::Direct(&em),
            &opts,
        )
        .unwrap();
        let g = crate::triangulation::piecewise_geodesic((0.2, 0.8), &m, &fam, &opts).unwrap();
        let probe = necessity_probe(&d, h, &m, &dec, &tri, &g, 4.0 * h).unwrap();
        assert!(probe.vacuous, "disk probe should be vacuous");
        assert!(!probe.contradiction_witness);
    }
}
