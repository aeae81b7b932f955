//! Planar primitives: points, polylines, polygonal domains with slits,
//! winding-number membership, inner (intrinsic) distances on a grid graph,
//! boundary-overlap measure and diameters.

use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;

use crate::{Error, Result};

pub mod shapes;

/// A point of the plane. Coordinates are dimensionless reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Squared distance from `p` to the segment `[a, b]`.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let vx = b.x - a.x;
    let vy = b.y - a.y;
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * vx, a.y + t * vy))
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Proper or improper intersection test for segments `[a,b]` and `[c,d]`.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| -> bool {
        cross(p, q, r).abs() < 1e-14
            && r.x >= p.x.min(q.x) - 1e-14
            && r.x <= p.x.max(q.x) + 1e-14
            && r.y >= p.y.min(q.y) - 1e-14
            && r.y <= p.y.max(q.y) + 1e-14
    };
    on(c, d, a) || on(c, d, b) || on(a, b, c) || on(a, b, d)
}

/// An ordered chain of vertices. Closed polylines store the first vertex once;
/// closure is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
    closed: bool,
}

impl Polyline {
    pub fn open(vertices: Vec<Point>) -> Result<Self> {
        Self::build(vertices, false)
    }

    pub fn closed(vertices: Vec<Point>) -> Result<Self> {
        Self::build(vertices, true)
    }

    fn build(vertices: Vec<Point>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidDomain("polyline needs >= 2 vertices".into()));
        }
        for p in &vertices {
            if !p.is_finite() {
                return Err(Error::InvalidDomain("non-finite vertex".into()));
            }
        }
        for w in vertices.windows(2) {
            if w[0].dist(w[1]) == 0.0 {
                return Err(Error::InvalidDomain(
                    "consecutive vertices must be distinct".into(),
                ));
            }
        }
        if closed && vertices[0].dist(*vertices.last().unwrap()) == 0.0 {
            return Err(Error::InvalidDomain(
                "closed polyline must not repeat its first vertex".into(),
            ));
        }
        Ok(Polyline { vertices, closed })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Segment list, including the implicit closing segment for closed chains.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let mut segs: Vec<(Point, Point)> =
            self.vertices.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed {
            segs.push((*self.vertices.last().unwrap(), self.vertices[0]));
        }
        segs
    }

    pub fn length(&self) -> f64 {
        self.segments().iter().map(|(a, b)| a.dist(*b)).sum()
    }

    /// Cumulative arc-length at each vertex (plus the closing vertex when closed).
    pub fn cumulative_lengths(&self) -> Vec<f64> {
        let mut acc = vec![0.0];
        for (a, b) in self.segments() {
            acc.push(acc.last().unwrap() + a.dist(b));
        }
        acc
    }

    /// Point at arc-length `s` from the start (clamped to [0, length]).
    pub fn point_at(&self, s: f64) -> Point {
        let segs = self.segments();
        let mut remaining = s.max(0.0);
        for (a, b) in &segs {
            let l = a.dist(*b);
            if remaining <= l {
                return a.lerp(*b, if l > 0.0 { remaining / l } else { 0.0 });
            }
            remaining -= l;
        }
        let (a, b) = *segs.last().unwrap();
        if self.closed {
            b
        } else {
            let _ = a;
            b
        }
    }

    /// Subcurve between arc-lengths `s0 <= s1`, as an open polyline.
    pub fn subcurve(&self, s0: f64, s1: f64) -> Result<Polyline> {
        let (s0, s1) = (s0.min(s1), s0.max(s1));
        let mut pts = vec![self.point_at(s0)];
        let acc = self.cumulative_lengths();
        let segs = self.segments();
        for (i, _) in segs.iter().enumerate() {
            let sv = acc[i + 1];
            if sv > s0 && sv < s1 {
                pts.push(self.point_at(sv));
            }
        }
        let last = self.point_at(s1);
        if last.dist(*pts.last().unwrap()) > 0.0 {
            pts.push(last);
        }
        if pts.len() < 2 {
            // degenerate subcurve; widen by an epsilon step
            pts.push(self.point_at(s1 + 1e-12));
            if pts[0].dist(pts[1]) == 0.0 {
                pts[1].x += 1e-12;
            }
        }
        Polyline::open(pts)
    }

    /// Resample to `n + 1` points spaced uniformly in arc length.
    pub fn resample(&self, n: usize) -> Vec<Point> {
        let total = self.length();
        (0..=n)
            .map(|i| self.point_at(total * i as f64 / n as f64))
            .collect()
    }

    /// Insert vertices so that no segment exceeds `max_seg`.
    pub fn densify(&self, max_seg: f64) -> Polyline {
        let mut out = Vec::new();
        for (a, b) in self.segments() {
            let l = a.dist(b);
            let k = (l / max_seg).ceil().max(1.0) as usize;
            for i in 0..k {
                out.push(a.lerp(b, i as f64 / k as f64));
            }
        }
        if !self.closed {
            out.push(*self.vertices.last().unwrap());
        }
        Polyline {
            vertices: out,
            closed: self.closed,
        }
    }

    /// Signed area (shoelace); positive for counterclockwise closed chains.
    pub fn signed_area(&self) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.segments() {
            s += a.x * b.y - b.x * a.y;
        }
        0.5 * s
    }

    pub fn reversed(&self) -> Polyline {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline {
            vertices: v,
            closed: self.closed,
        }
    }

    pub fn dist_to(&self, p: Point) -> f64 {
        self.segments()
            .iter()
            .map(|(a, b)| dist_point_segment(p, *a, *b))
            .fold(f64::INFINITY, f64::min)
    }

    /// True if the closed simple chain is traversed without self-intersection.
    pub fn is_simple(&self) -> bool {
        let segs = self.segments();
        let n = segs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1 && self.closed);
                if adjacent {
                    continue;
                }
                if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                    return false;
                }
            }
        }
        true
    }

    /// Symmetric sup (Hausdorff-like) distance between two sampled curves.
    pub fn sup_distance(&self, other: &Polyline, samples: usize) -> f64 {
        let a = self.resample(samples);
        let b = other.resample(samples);
        let one = a
            .iter()
            .map(|p| other.dist_to(*p))
            .fold(0.0f64, f64::max);
        let two = b.iter().map(|p| self.dist_to(*p)).fold(0.0f64, f64::max);
        one.max(two)
    }
}

/// Total length of a polyline; additive under concatenation.
pub fn polyline_length(p: &Polyline) -> f64 {
    p.length()
}

/// Winding number of `outer` around `p` (integer for points off the chain).
pub fn winding_number(outer: &Polyline, p: Point) -> i32 {
    let mut wn = 0i32;
    for (a, b) in outer.segments() {
        if a.y <= p.y {
            if b.y > p.y && cross(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && cross(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Simply connected planar domain: a simple counterclockwise outer polygon,
/// plus zero-width slit polylines attached to the outer boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonalDomain {
    pub outer: Polyline,
    pub slits: Vec<Polyline>,
    pub resolution_hint: f64,
}

impl PolygonalDomain {
    pub fn new(outer: Polyline, slits: Vec<Polyline>, resolution_hint: f64) -> Result<Self> {
        let mut outer = outer;
        if !outer.is_closed() {
            return Err(Error::InvalidDomain("outer polygon must be closed".into()));
        }
        if outer.signed_area() < 0.0 {
            outer = outer.reversed();
        }
        let d = PolygonalDomain {
            outer,
            slits,
            resolution_hint,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.outer.is_simple() {
            return Err(Error::InvalidDomain("outer polygon is not simple".into()));
        }
        if self.outer.signed_area() <= 0.0 {
            return Err(Error::InvalidDomain(
                "outer polygon must be counterclockwise".into(),
            ));
        }
        if !(self.resolution_hint.is_finite() && self.resolution_hint > 0.0) {
            return Err(Error::InvalidDomain("resolution_hint must be > 0".into()));
        }
        let diam = self.diameter();
        let tol = 1e-9 * diam;
        for (i, s) in self.slits.iter().enumerate() {
            if s.is_closed() {
                return Err(Error::InvalidDomain(format!("slit {i} must be open")));
            }
            if !s.is_simple() {
                return Err(Error::InvalidDomain(format!("slit {i} is not simple")));
            }
            let ends = [s.vertices()[0], *s.vertices().last().unwrap()];
            let attached = ends.iter().any(|e| self.outer.dist_to(*e) <= tol.max(1e-12));
            if !attached {
                return Err(Error::InvalidDomain(format!(
                    "slit {i} must touch the outer boundary at an endpoint \
                     (free-floating slits break simple connectivity)"
                )));
            }
            for p in s.vertices() {
                if winding_number(&self.outer, *p) == 0 && self.outer.dist_to(*p) > tol {
                    return Err(Error::InvalidDomain(format!(
                        "slit {i} leaves the closed domain"
                    )));
                }
            }
            for (j, other) in self.slits.iter().enumerate() {
                if j <= i {
                    continue;
                }
                for (a, b) in s.segments() {
                    for (c, d) in other.segments() {
                        if segments_intersect(a, b, c, d) {
                            let endpoint_touch = [a, b]
                                .iter()
                                .any(|p| [c, d].iter().any(|q| p.dist(*q) <= tol));
                            if !endpoint_touch {
                                return Err(Error::InvalidDomain(format!(
                                    "slits {j} and {i} intersect away from endpoints"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            outer: Vec<[f64; 2]>,
            #[serde(default)]
            slits: Vec<Vec<[f64; 2]>>,
            resolution_hint: f64,
        }
        let raw: Raw =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("domain json: {e}")))?;
        let outer = Polyline::closed(raw.outer.iter().map(|c| Point::new(c[0], c[1])).collect())?;
        let slits = raw
            .slits
            .iter()
            .map(|s| Polyline::open(s.iter().map(|c| Point::new(c[0], c[1])).collect()))
            .collect::<Result<Vec<_>>>()?;
        PolygonalDomain::new(outer, slits, raw.resolution_hint)
    }

    pub fn to_json(&self) -> String {
        let outer: Vec<[f64; 2]> = self.outer.vertices().iter().map(|p| [p.x, p.y]).collect();
        let slits: Vec<Vec<[f64; 2]>> = self
            .slits
            .iter()
            .map(|s| s.vertices().iter().map(|p| [p.x, p.y]).collect())
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "outer": outer,
            "slits": slits,
            "resolution_hint": self.resolution_hint,
        }))
        .unwrap()
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self
            .outer
            .vertices()
            .iter()
            .chain(self.slits.iter().flat_map(|s| s.vertices().iter()))
        {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Diameter of the closure, from outer vertices (slits lie inside).
    pub fn diameter(&self) -> f64 {
        diam_point_set(self.outer.vertices())
    }

    pub fn area(&self) -> f64 {
        self.outer.signed_area()
    }

    fn membership_tol(&self) -> f64 {
        1e-9 * self.diameter()
    }

    /// Strict interior test (off the slits, inside the outer polygon).
    pub fn contains(&self, p: Point) -> bool {
        if winding_number(&self.outer, p) == 0 {
            return false;
        }
        let tol = self.membership_tol();
        if self.outer.dist_to(p) <= tol {
            return false;
        }
        !self.slits.iter().any(|s| s.dist_to(p) <= tol)
    }

    /// Distance to the full boundary (outer polygon plus slits).
    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        let mut d = self.outer.dist_to(p);
        for s in &self.slits {
            d = d.min(s.dist_to(p));
        }
        d
    }

    /// Membership in the closed complement: not strictly interior.
    pub fn in_closed_complement(&self, p: Point) -> bool {
        !self.contains(p)
    }

    /// True when `p` lies within `tol` of the boundary.
    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        self.dist_to_boundary(p) <= tol
    }

    /// True when the segment `[a,b]` crosses a slit wall away from slit
    /// endpoints. Used to block grid edges tunnelling through zero-width
    /// walls.
    pub fn segment_crosses_slit(&self, a: Point, b: Point) -> bool {
        let tol = 1e-7 * self.diameter();
        for s in &self.slits {
            let tip_guard: Vec<Point> =
                vec![s.vertices()[0], *s.vertices().last().unwrap()];
            for (c, d) in s.segments() {
                if segments_intersect(a, b, c, d) {
                    let near_tip = tip_guard
                        .iter()
                        .any(|t| dist_point_segment(*t, a, b) <= tol);
                    if !near_tip {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// An interior point usable as a conformal base point: the vertex
    /// centroid when interior, otherwise the deepest point of a coarse grid.
    pub fn interior_base_point(&self) -> Point {
        let vs = self.outer.vertices();
        let c = Point::new(
            vs.iter().map(|p| p.x).sum::<f64>() / vs.len() as f64,
            vs.iter().map(|p| p.y).sum::<f64>() / vs.len() as f64,
        );
        let clearance = 0.02 * self.diameter();
        if self.contains(c) && self.dist_to_boundary(c) > clearance {
            return c;
        }
        let (lo, hi) = self.bbox();
        let n = 64;
        let mut best = (c, f64::NEG_INFINITY);
        for i in 1..n {
            for j in 1..n {
                let p = Point::new(
                    lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / n as f64,
                );
                if self.contains(p) {
                    let d = self.dist_to_boundary(p);
                    if d > best.1 {
                        best = (p, d);
                    }
                }
            }
        }
        best.0
    }

    /// The closed boundary walk with slits traversed on both sides, thickened
    /// by `eps` so the result is a simple (Jordan) polygon. Counterclockwise.
    ///
    /// Slit attachment points are assumed to sit on the outer polygon; the
    /// walk enters each slit where its attachment projects onto the outer
    /// chain, runs one side to the tip, caps the tip, and returns on the
    /// other side.
    pub fn doubled_boundary(&self, eps: f64) -> Result<Polyline> {
        if self.slits.is_empty() {
            return Ok(self.outer.clone());
        }
        // locate each slit's attachment on the outer chain by arc length
        let outer_len = self.outer.length();
        let mut inserts: Vec<(f64, Vec<Point>)> = Vec::new();
        for s in &self.slits {
            let e0 = s.vertices()[0];
            let e1 = *s.vertices().last().unwrap();
            let (attached, spine) = if self.outer.dist_to(e0) <= self.outer.dist_to(e1) {
                (e0, s.clone())
            } else {
                (e1, s.reversed())
            };
            // arc-length position of the attachment along the outer chain
            let mut best = (0.0f64, f64::INFINITY);
            let samples = 4096;
            for i in 0..samples {
                let t = outer_len * i as f64 / samples as f64;
                let q = self.outer.point_at(t);
                let d = q.dist(attached);
                if d < best.1 {
                    best = (t, d);
                }
            }
            inserts.push((best.0, slit_excursion(&spine, eps)));
        }
        inserts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        // walk the outer boundary, splicing excursions in at their stations
        let mut walk: Vec<Point> = Vec::new();
        let acc = self.outer.cumulative_lengths();
        let verts = self.outer.vertices();
        let mut station = 0usize;
        for i in 0..verts.len() {
            walk.push(verts[i]);
            let seg_end = acc[i + 1];
            while station < inserts.len() && inserts[station].0 <= seg_end {
                walk.extend(inserts[station].1.iter().copied());
                station += 1;
            }
        }
        while station < inserts.len() {
            walk.extend(inserts[station].1.iter().copied());
            station += 1;
        }
        // drop consecutive duplicates
        let mut cleaned: Vec<Point> = Vec::new();
        for p in walk {
            if cleaned.last().map(|q| q.dist(p) > eps * 1e-3).unwrap_or(true) {
                cleaned.push(p);
            }
        }
        if cleaned[0].dist(*cleaned.last().unwrap()) <= eps * 1e-3 {
            cleaned.pop();
        }
        Polyline::closed(cleaned)
    }
}

/// Two-sided excursion along a slit spine (attachment first), offset by `eps`
/// to the left of the walking direction, with a cap beyond the tip. The
/// attachment end is trimmed by 2 eps so the excursion stays strictly inside
/// the domain (the attachment sits on the outer boundary), and the sampling
/// is graded toward the tip so conformal solvers see bounded aspect ratios.
fn slit_excursion(spine: &Polyline, eps: f64) -> Vec<Point> {
    let len = spine.length();
    let trim = (2.0 * eps).min(0.1 * len);
    // stations from the attachment, geometrically refined near the tip
    let mut stations = vec![trim];
    let mut from_tip = Vec::new();
    let mut s = (20.0 * eps).min(0.2 * len);
    while s < 0.6 * (len - trim) {
        from_tip.push(len - s);
        s *= 1.5;
    }
    from_tip.reverse();
    stations.extend(from_tip);
    stations.push(len);
    stations.dedup_by(|a, b| (*a - *b).abs() < eps);
    let pts: Vec<Point> = stations.iter().map(|s| spine.point_at(*s)).collect();
    let side = Polyline::open(dedup_points(pts)).unwrap_or_else(|_| spine.clone());
    let down = offset_polyline_side(&side, eps);
    let rev = side.reversed();
    let up = offset_polyline_side(&rev, eps);
    let tip = *side.vertices().last().unwrap();
    let prev = side.vertices()[side.vertices().len() - 2];
    let dir_len = tip.dist(prev);
    let cap = Point::new(
        tip.x + (tip.x - prev.x) / dir_len * eps,
        tip.y + (tip.y - prev.y) / dir_len * eps,
    );
    let mut out = down;
    out.push(cap);
    out.extend(up);
    out
}

/// Offset every vertex of an open polyline to the left of the travel
/// direction by `eps` (averaged normals at interior vertices).
fn offset_polyline_side(p: &Polyline, eps: f64) -> Vec<Point> {
    let v = p.vertices();
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = if i == 0 {
            (v[0], v[1])
        } else if i == n - 1 {
            (v[n - 2], v[n - 1])
        } else {
            (v[i - 1], v[i + 1])
        };
        let len = a.dist(b);
        // left normal of direction a->b
        let nx = -(b.y - a.y) / len;
        let ny = (b.x - a.x) / len;
        out.push(Point::new(v[i].x + eps * nx, v[i].y + eps * ny));
    }
    out
}

/// Which part of the complement a [`ComplementRegion`] denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComplementKind {
    /// The full closed complement of the domain (boundary included).
    ClosedComplement,
    /// One open component of the interior of the complement;
    /// component index 1 is the unbounded one.
    OpenExteriorComponent,
}

/// A view of the complement of a polygonal domain.
#[derive(Debug, Clone)]
pub struct ComplementRegion {
    pub parent: PolygonalDomain,
    pub kind: ComplementKind,
    pub component_index: usize,
}

impl ComplementRegion {
    pub fn closed(parent: &PolygonalDomain) -> Self {
        ComplementRegion {
            parent: parent.clone(),
            kind: ComplementKind::ClosedComplement,
            component_index: 1,
        }
    }

    pub fn open_exterior(parent: &PolygonalDomain) -> Self {
        ComplementRegion {
            parent: parent.clone(),
            kind: ComplementKind::OpenExteriorComponent,
            component_index: 1,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match self.kind {
            ComplementKind::ClosedComplement => self.parent.in_closed_complement(p),
            ComplementKind::OpenExteriorComponent => {
                winding_number(&self.parent.outer, p) == 0
                    && self.parent.outer.dist_to(p) > self.parent.membership_tol()
            }
        }
    }
}

/// Length of the part of `p` that runs along the boundary of `d`, measured by
/// segment-on-segment overlap. Transversal touching contributes zero.
pub fn boundary_overlap_length(p: &Polyline, d: &PolygonalDomain) -> Result<f64> {
    let tol = 1e-6 * d.diameter();
    // reject paths that dive into the open domain
    let probe = p.densify(tol.max(p.length() / 4096.0));
    for q in probe.vertices() {
        if d.contains(*q) && d.dist_to_boundary(*q) > tol {
            return Err(Error::InvalidDomain(
                "path enters the open domain beyond tolerance".into(),
            ));
        }
    }
    let mut boundary_segs: Vec<(Point, Point)> = d.outer.segments();
    for s in &d.slits {
        boundary_segs.extend(s.segments());
    }
    let mut total = 0.0;
    for (a, b) in p.segments() {
        total += overlap_on_segments(a, b, &boundary_segs, tol);
    }
    Ok(total)
}

/// Length of the sub-intervals of `[a,b]` lying within `tol` of any boundary
/// segment (1D interval union along the segment parameter).
fn overlap_on_segments(a: Point, b: Point, segs: &[(Point, Point)], tol: f64) -> f64 {
    let len = a.dist(b);
    if len == 0.0 {
        return 0.0;
    }
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (c, d) in segs {
        // Parametrize [a,b]; a point a+t(b-a) is near [c,d] when both its
        // projection distance is <= tol. Sample-free approach: clip by the
        // slab of the supporting line of [c,d] when nearly parallel;
        // otherwise the overlap has length <= 2 tol and is ignorable.
        let ux = b.x - a.x;
        let uy = b.y - a.y;
        let vx = d.x - c.x;
        let vy = d.y - c.y;
        let vlen = c.dist(*d);
        if vlen == 0.0 {
            continue;
        }
        let sin = (ux * vy - uy * vx).abs() / (len * vlen);
        if sin > 0.05 {
            continue; // transversal: measure-zero contact
        }
        // nearly parallel: project both endpoints of [a,b] on [c,d]'s line
        let nd = |p: Point| ((p.x - c.x) * vy - (p.y - c.y) * vx) / vlen;
        let da = nd(a);
        let db = nd(b);
        if da.abs() > tol && db.abs() > tol && da.signum() == db.signum() {
            continue;
        }
        // parameter range of [a,b] whose projection falls inside [c,d]
        let proj = |p: Point| ((p.x - c.x) * vx + (p.y - c.y) * vy) / (vlen * vlen);
        let pa = proj(a);
        let pb = proj(b);
        let (plo, phi) = (pa.min(pb), pa.max(pb));
        let lo = plo.max(0.0);
        let hi = phi.min(1.0);
        if hi <= lo {
            continue;
        }
        // map back to t along [a,b]
        let t_of = |q: f64| {
            if (pb - pa).abs() < 1e-15 {
                0.0
            } else {
                ((q - pa) / (pb - pa)).clamp(0.0, 1.0)
            }
        };
        let t0 = t_of(lo).min(t_of(hi));
        let t1 = t_of(lo).max(t_of(hi));
        // check midpoint really is near the segment
        let mid = a.lerp(b, 0.5 * (t0 + t1));
        if dist_point_segment(mid, *c, *d) <= tol {
            intervals.push((t0, t1));
        }
    }
    if intervals.is_empty() {
        return 0.0;
    }
    intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut covered = 0.0;
    let mut cur = intervals[0];
    for iv in intervals.into_iter().skip(1) {
        if iv.0 <= cur.1 {
            cur.1 = cur.1.max(iv.1);
        } else {
            covered += cur.1 - cur.0;
            cur = iv;
        }
    }
    covered += cur.1 - cur.0;
    covered * len
}

/// Diameter of a point set by convex hull + rotating calipers.
pub fn diam_point_set(points: &[Point]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let hull = convex_hull(points);
    if hull.len() == 2 {
        return hull[0].dist(hull[1]);
    }
    let n = hull.len();
    let mut best = 0.0f64;
    let mut j = 1usize;
    for i in 0..n {
        let ni = (i + 1) % n;
        loop {
            let nj = (j + 1) % n;
            let cur = cross(hull[i], hull[ni], hull[j]);
            let nxt = cross(hull[i], hull[ni], hull[nj]);
            if nxt.abs() > cur.abs() {
                j = nj;
            } else {
                break;
            }
        }
        best = best.max(hull[i].dist(hull[j])).max(hull[ni].dist(hull[j]));
    }
    best
}

/// Andrew's monotone-chain convex hull.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.dist(*b) == 0.0);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], *p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], *p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Where a grid shortest-path query runs.
#[derive(Debug, Clone)]
pub enum PathRegion<'a> {
    /// Inside the (closed) domain; slits act as walls.
    Domain(&'a PolygonalDomain),
    /// The closed complement; the slit itself is walkable.
    Complement(&'a PolygonalDomain),
}

impl PathRegion<'_> {
    fn admits_node(&self, p: Point, tol: f64) -> bool {
        match self {
            PathRegion::Domain(d) => {
                (winding_number(&d.outer, p) != 0 || d.outer.dist_to(p) <= tol)
                    && d.outer.dist_to(p) >= -1.0
            }
            PathRegion::Complement(d) => !d.contains(p) || d.dist_to_boundary(p) <= tol,
        }
    }

    fn admits_edge(&self, a: Point, b: Point, tol: f64) -> bool {
        match self {
            PathRegion::Domain(d) => {
                if d.segment_crosses_slit(a, b) {
                    return false;
                }
                let mid = a.lerp(b, 0.5);
                winding_number(&d.outer, mid) != 0 || d.outer.dist_to(mid) <= tol
            }
            PathRegion::Complement(d) => {
                for t in [0.25, 0.5, 0.75] {
                    let q = a.lerp(b, t);
                    if d.contains(q) && d.dist_to_boundary(q) > tol {
                        return false;
                    }
                }
                true
            }
        }
    }

    fn domain(&self) -> &PolygonalDomain {
        match self {
            PathRegion::Domain(d) => d,
            PathRegion::Complement(d) => d,
        }
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}
impl Eq for HeapEntry {}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A grid graph over a rectangular window, restricted to a region predicate.
/// 8-connected with exact Euclidean edge weights.
pub struct GridGraph {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub node_ok: Vec<bool>,
    /// Per-node bitmask of admissible outgoing directions (8 neighbours).
    edge_ok: Vec<u8>,
}

pub const GRID_DIRS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

impl GridGraph {
    pub fn build(region: &PathRegion, lo: Point, hi: Point, h: f64) -> Self {
        let nx = ((hi.x - lo.x) / h).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / h).ceil() as usize + 1;
        let tol = 0.51 * h;
        let pt = |i: usize, j: usize| Point::new(lo.x + i as f64 * h, lo.y + j as f64 * h);
        let mut node_ok = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                node_ok[j * nx + i] = region.admits_node(pt(i, j), tol);
            }
        }
        let mut edge_ok = vec![0u8; nx * ny];
        let near_slit = |p: Point| {
            region
                .domain()
                .slits
                .iter()
                .any(|s| s.dist_to(p) <= 2.0 * h)
        };
        for j in 0..ny {
            for i in 0..nx {
                let id = j * nx + i;
                if !node_ok[id] {
                    continue;
                }
                let a = pt(i, j);
                let mut mask = 0u8;
                for (k, (di, dj)) in GRID_DIRS.iter().enumerate() {
                    let ii = i as i64 + di;
                    let jj = j as i64 + dj;
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    let nid = jj as usize * nx + ii as usize;
                    if !node_ok[nid] {
                        continue;
                    }
                    let b = pt(ii as usize, jj as usize);
                    // full edge test only near walls; plain membership suffices
                    // away from them
                    let ok = if near_slit(a) || near_slit(b) {
                        region.admits_edge(a, b, tol)
                    } else {
                        region.admits_edge(a, b, tol)
                    };
                    if ok {
                        mask |= 1 << k;
                    }
                }
                edge_ok[id] = mask;
            }
        }
        GridGraph {
            x0: lo.x,
            y0: lo.y,
            nx,
            ny,
            h,
            node_ok,
            edge_ok,
        }
    }

    pub fn point(&self, id: usize) -> Point {
        let i = id % self.nx;
        let j = id / self.nx;
        Point::new(self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        let i0 = ((p.x - self.x0) / self.h).round() as i64;
        let j0 = ((p.y - self.y0) / self.h).round() as i64;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..=3i64 {
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let i = i0 + di;
                    let j = j0 + dj;
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    let id = j as usize * self.nx + i as usize;
                    if self.node_ok[id] {
                        let d = self.point(id).dist(p);
                        if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                            best = Some((id, d));
                        }
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(id, _)| id)
    }

    /// Removes directed edges (node, direction index) together with their
    /// reverses.
    pub fn remove_edges(&mut self, edges: &[(usize, usize)]) {
        for &(id, k) in edges {
            self.edge_ok[id] &= !(1u8 << k);
            let (di, dj) = GRID_DIRS[k];
            let i = (id % self.nx) as i64 + di;
            let j = (id / self.nx) as i64 + dj;
            if i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny {
                let nid = j as usize * self.nx + i as usize;
                let rev = GRID_DIRS
                    .iter()
                    .position(|(a, b)| *a == -di && *b == -dj)
                    .unwrap();
                self.edge_ok[nid] &= !(1u8 << rev);
            }
        }
    }

    pub fn neighbours(&self, id: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let i = (id % self.nx) as i64;
        let j = (id / self.nx) as i64;
        let mask = self.edge_ok[id];
        GRID_DIRS
            .iter()
            .enumerate()
            .filter(move |(k, _)| mask & (1 << k) != 0)
            .map(move |(_, (di, dj))| {
                let nid = (j + dj) as usize * self.nx + (i + di) as usize;
                let w = ((di * di + dj * dj) as f64).sqrt() * self.h;
                (nid, w)
            })
    }

    /// Plain Dijkstra from `src` to `dst`; returns (distance, node path).
    pub fn shortest_path(&self, src: usize, dst: usize) -> Option<(f64, Vec<usize>)> {
        let n = self.nx * self.ny;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapEntry {
            cost: 0.0,
            node: src,
        });
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            if node == dst {
                break;
            }
            for (nb, w) in self.neighbours(node) {
                let nd = cost + w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    prev[nb] = node;
                    heap.push(HeapEntry { cost: nd, node: nb });
                }
            }
        }
        if !dist[dst].is_finite() {
            return None;
        }
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Some((dist[dst], path))
    }

    /// Multi-source weighted Dijkstra with per-edge weight function.
    pub fn weighted_distances<F>(&self, sources: &[(usize, f64)], weight: F) -> Vec<f64>
    where
        F: Fn(Point, Point) -> f64,
    {
        let n = self.nx * self.ny;
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for &(s, d0) in sources {
            if d0 < dist[s] {
                dist[s] = d0;
                heap.push(HeapEntry { cost: d0, node: s });
            }
        }
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            let a = self.point(node);
            for (nb, _) in self.neighbours(node) {
                let b = self.point(nb);
                let w = weight(a, b);
                let nd = cost + w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    heap.push(HeapEntry { cost: nd, node: nb });
                }
            }
        }
        dist
    }
}

/// Result of an inner-distance query.
#[derive(Debug, Clone)]
pub struct InnerDistance {
    pub length: f64,
    pub witness: Polyline,
}

/// Shortest-path length between `x` and `y` inside `region`, on an `h`-grid
/// with 8-connectivity, with a string-pulling post-pass that removes most of
/// the grid metric inflation.
pub fn inner_distance(x: Point, y: Point, region: &PathRegion, h: f64) -> Result<InnerDistance> {
    if h <= 0.0 {
        return Err(Error::InvalidDomain("h must be > 0".into()));
    }
    let d = region.domain();
    let (blo, bhi) = d.bbox();
    let margin = 0.25 * d.diameter() + 4.0 * h;
    let lo = Point::new(blo.x.min(x.x).min(y.x) - margin, blo.y.min(x.y).min(y.y) - margin);
    let hi = Point::new(bhi.x.max(x.x).max(y.x) + margin, bhi.y.max(x.y).max(y.y) + margin);
    let graph = GridGraph::build(region, lo, hi, h);
    let src = graph
        .nearest_node(x)
        .ok_or_else(|| Error::Disconnected("no grid node near start".into()))?;
    let dst = graph
        .nearest_node(y)
        .ok_or_else(|| Error::Disconnected("no grid node near end".into()))?;
    if src == dst {
        return Ok(InnerDistance {
            length: x.dist(y),
            witness: Polyline::open(vec![x, y.lerp(x, 1e-9)]).unwrap_or_else(|_| {
                Polyline::open(vec![x, Point::new(x.x + 1e-12, x.y)]).unwrap()
            }),
        });
    }
    let (_, node_path) = graph
        .shortest_path(src, dst)
        .ok_or_else(|| Error::Disconnected("endpoints not connected in region".into()))?;
    let mut pts: Vec<Point> = Vec::with_capacity(node_path.len() + 2);
    pts.push(x);
    pts.extend(node_path.iter().map(|&id| graph.point(id)));
    pts.push(y);
    let pts = string_pull(pts, region, h);
    let witness = Polyline::open(dedup_points(pts))?;
    Ok(InnerDistance {
        length: witness.length(),
        witness,
    })
}

/// Drops consecutive duplicate points (padding a lone survivor).
pub fn dedup_points(pts: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().map(|q| q.dist(p) > 0.0).unwrap_or(true) {
            out.push(p);
        }
    }
    if out.len() < 2 {
        let p = out[0];
        out.push(Point::new(p.x + 1e-12, p.y));
    }
    out
}

/// Iterative shortcutting: drop interior vertices whenever the straight
/// segment between their neighbours stays admissible. Removes the 8-connected
/// metric inflation on convex stretches.
fn string_pull(mut pts: Vec<Point>, region: &PathRegion, h: f64) -> Vec<Point> {
    let tol = 0.51 * h;
    let seg_ok = |a: Point, b: Point| -> bool {
        let steps = (a.dist(b) / (0.33 * h)).ceil().max(1.0) as usize;
        if let PathRegion::Domain(d) = region {
            if d.segment_crosses_slit(a, b) {
                return false;
            }
        }
        if let PathRegion::Complement(d) = region {
            // walking along the slit is allowed, crossing the outer wall is not
            for t in 1..steps {
                let q = a.lerp(b, t as f64 / steps as f64);
                if d.contains(q) && d.dist_to_boundary(q) > tol {
                    return false;
                }
            }
            return true;
        }
        for t in 1..steps {
            let q = a.lerp(b, t as f64 / steps as f64);
            if !region.admits_node(q, tol) {
                return false;
            }
        }
        true
    };
    for _pass in 0..6 {
        let mut changed = false;
        let mut out: Vec<Point> = Vec::with_capacity(pts.len());
        out.push(pts[0]);
        let mut i = 0usize;
        while i + 1 < pts.len() {
            // greedily reach as far forward as possible
            let mut j = pts.len() - 1;
            let mut hit = i + 1;
            while j > i + 1 {
                if seg_ok(pts[i], pts[j]) {
                    hit = j;
                    break;
                }
                j -= 1;
            }
            if hit > i + 1 {
                changed = true;
            }
            out.push(pts[hit]);
            i = hit;
        }
        pts = out;
        if !changed {
            break;
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn unit_square_perimeter() {
        let sq = shapes::unit_square(0.01);
        assert!((sq.outer.length() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn segment_3_4_5() {
        let p = Polyline::open(vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0)]).unwrap();
        assert_eq!(polyline_length(&p), 5.0);
    }

    #[test]
    fn random_polyline_matches_pairwise_sum() {
        // brute-force oracle: sum of consecutive pairwise distances
        let mut pts = Vec::new();
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            pts.push(Point::new(rng() * 10.0 - 5.0, rng() * 10.0 - 5.0));
        }
        let p = Polyline::open(pts.clone()).unwrap();
        let oracle: f64 = pts.windows(2).map(|w| w[0].dist(w[1])).sum();
        assert_eq!(p.length(), oracle);
    }

    #[test]
    fn length_invariant_under_vertex_insertion() {
        let p = Polyline::open(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(2.5, -0.25),
        ])
        .unwrap();
        let dense = p.densify(0.01);
        assert!((p.length() - dense.length()).abs() < 1e-12);
    }

    #[test]
    fn slit_overlap_quarter() {
        // path along the slit of the slit disk from (0.25,0) to (0.5,0)
        let d = shapes::slit_disk(64, 0.01);
        let path =
            Polyline::open(vec![Point::new(0.25, 0.0), Point::new(0.5, 0.0)]).unwrap();
        let l = boundary_overlap_length(&path, &d).unwrap();
        assert!((l - 0.25).abs() < 1e-3, "overlap {l}");
    }

    #[test]
    fn transversal_crossing_has_zero_overlap() {
        let d = shapes::unit_square(0.01);
        let path = Polyline::open(vec![
            Point::new(0.5, 1.5),
            Point::new(0.5, 1.0),
            Point::new(0.5, 1.2),
            Point::new(0.8, 1.4),
        ])
        .unwrap();
        let l = boundary_overlap_length(&path, &d).unwrap();
        assert!(l < 1e-9, "overlap {l}");
    }

    #[test]
    fn glued_edge_overlap_half_edge() {
        // path glued to half of the square's top edge (length 1), outside
        let d = shapes::unit_square(0.01);
        let path = Polyline::open(vec![
            Point::new(0.25, 1.0),
            Point::new(0.75, 1.0),
            Point::new(0.75, 1.3),
        ])
        .unwrap();
        // oracle: the exact overlapping sub-length is 0.5
        let l = boundary_overlap_length(&path, &d).unwrap();
        assert!((l - 0.5).abs() < 1e-6, "overlap {l}");
    }

    #[test]
    fn overlap_rejects_interior_path() {
        let d = shapes::unit_square(0.01);
        let path =
            Polyline::open(vec![Point::new(0.5, 0.5), Point::new(0.9, 0.5)]).unwrap();
        assert!(boundary_overlap_length(&path, &d).is_err());
    }

    #[test]
    fn overlap_additive_and_reparametrization_invariant() {
        let d = shapes::slit_disk(64, 0.01);
        let path =
            Polyline::open(vec![Point::new(0.1, 0.0), Point::new(0.9, 0.0)]).unwrap();
        let whole = boundary_overlap_length(&path, &d).unwrap();
        let a = Polyline::open(vec![Point::new(0.1, 0.0), Point::new(0.4, 0.0)]).unwrap();
        let b = Polyline::open(vec![Point::new(0.4, 0.0), Point::new(0.9, 0.0)]).unwrap();
        let parts = boundary_overlap_length(&a, &d).unwrap() + boundary_overlap_length(&b, &d).unwrap();
        assert!((whole - parts).abs() < 1e-9);
        let dense = path.densify(0.013);
        let re = boundary_overlap_length(&dense, &d).unwrap();
        assert!((whole - re).abs() < 1e-9);
    }

    #[test]
    fn inner_distance_convex_is_euclidean() {
        let d = shapes::unit_square(0.01);
        let region = PathRegion::Domain(&d);
        let h = 0.02;
        let x = Point::new(0.2, 0.2);
        let y = Point::new(0.8, 0.7);
        let r = inner_distance(x, y, &region, h).unwrap();
        assert!((r.length - x.dist(y)).abs() <= 2.0 * h, "len {}", r.length);
    }

    #[test]
    fn inner_distance_around_disk() {
        // closed complement of the unit disk: path from (1.01,0) to (-1.01,0)
        // must round the circle; analytic oracle ~ pi + 0.02
        let d = shapes::disk(96, 0.01);
        let region = PathRegion::Complement(&d);
        let h = 0.02;
        let x = Point::new(1.03, 0.0);
        let y = Point::new(-1.03, 0.0);
        let r = inner_distance(x, y, &region, h).unwrap();
        let oracle = std::f64::consts::PI * 1.03;
        assert!(
            (r.length - oracle).abs() < 0.08,
            "len {} vs oracle {oracle}",
            r.length
        );
    }

    #[test]
    fn inner_distance_l_shape_visibility_oracle() {
        // across the reentrant corner of the L-shape the geodesic bends at
        // the corner (2,1): oracle = |x-corner| + |corner-y|
        let d = shapes::l_shape(0.01);
        let region = PathRegion::Domain(&d);
        let x = Point::new(1.6, 0.5);
        let y = Point::new(0.5, 1.6);
        let corner = Point::new(1.0, 1.0);
        let oracle = x.dist(corner) + corner.dist(y);
        let r = inner_distance(x, y, &region, 0.02).unwrap();
        assert!(
            (r.length - oracle).abs() < 0.05,
            "len {} vs {oracle}",
            r.length
        );
    }

    #[test]
    fn inner_distance_lower_bound_and_triangle_inequality() {
        let d = shapes::l_shape(0.01);
        let region = PathRegion::Domain(&d);
        let h = 0.05;
        let pts = [
            Point::new(0.3, 0.3),
            Point::new(1.7, 0.4),
            Point::new(0.4, 1.7),
        ];
        let dxy = inner_distance(pts[0], pts[1], &region, h).unwrap().length;
        let dyz = inner_distance(pts[1], pts[2], &region, h).unwrap().length;
        let dxz = inner_distance(pts[0], pts[2], &region, h).unwrap().length;
        assert!(dxz <= dxy + dyz + 4.0 * h);
        assert!(dxy >= pts[0].dist(pts[1]) - 2.0 * h);
    }

    #[test]
    fn slit_blocks_domain_paths() {
        let d = shapes::slit_disk(96, 0.01);
        let region = PathRegion::Domain(&d);
        let h = 0.02;
        // across the slit: must round the tip at the origin
        let x = Point::new(0.5, 0.08);
        let y = Point::new(0.5, -0.08);
        let r = inner_distance(x, y, &region, h).unwrap();
        assert!(r.length > 0.9, "path should round the slit tip, got {}", r.length);
    }

    #[test]
    fn diameter_rotating_calipers() {
        let sq = shapes::unit_square(0.01);
        assert!((sq.diameter() - (2.0f64).sqrt()).abs() < 1e-12);
        let d = shapes::disk(128, 0.01);
        assert!((d.diameter() - 2.0).abs() < 2e-3);
    }

    #[test]
    fn doubled_boundary_is_simple_jordan() {
        let d = shapes::slit_disk(64, 0.01);
        let eps = 1e-4;
        let walk = d.doubled_boundary(eps).unwrap();
        assert!(walk.signed_area() > 0.0);
        assert!(walk.is_simple());
        // the walk must traverse the slit twice: total length ~ circle + 2 slit
        let expect = 2.0 * std::f64::consts::PI + 2.0;
        assert!(
            (walk.length() - expect).abs() < 0.2,
            "walk length {}",
            walk.length()
        );
    }

    #[test]
    fn domain_json_roundtrip() {
        let d = shapes::slit_disk(32, 0.02);
        let text = d.to_json();
        let back = PolygonalDomain::from_json(&text).unwrap();
        assert_eq!(d.outer.vertices().len(), back.outer.vertices().len());
        assert_eq!(d.slits.len(), back.slits.len());
    }

    #[test]
    fn free_floating_slit_rejected() {
        let outer = Polyline::closed(vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(4.0, 4.0),
            Point::new(0.0, 4.0),
        ])
        .unwrap();
        let slit =
            Polyline::open(vec![Point::new(1.0, 2.0), Point::new(2.0, 2.0)]).unwrap();
        assert!(PolygonalDomain::new(outer, vec![slit], 0.05).is_err());
    }
}
