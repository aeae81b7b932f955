//! Numerical conformal maps built with a zipper-type boundary osculation
//! scheme: interior disk maps for polygons-with-slits, exterior maps for
//! Jordan polygons, nested approximation families, and Whitney-type image
//! diagnostics.
//!
//! Every basic map in the composition is an explicit Möbius + square-root
//! geodesic slit map, so both the map and its inverse evaluate in O(steps)
//! floating-point operations with no iterative solves.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::geometry::{diam_point_set, Point, Polyline, PolygonalDomain};
use crate::{Error, Result};

pub fn c(p: Point) -> C {
    C::new(p.x, p.y)
}

pub fn pt(z: C) -> Point {
    Point::new(z.re, z.im)
}

/// One geodesic slit step: the hyperbolic geodesic in the upper half-plane
/// from 0 to `w` is opened onto the real line. `cpole` is the second real
/// intersection of the supporting circle (infinite when `w` is purely
/// imaginary); `d` is the height of the straightened slit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ZStep {
    #[serde(with = "f64_bits")]
    cpole: f64,
    d: f64,
}

/// Bit-exact float serialization; JSON has no encoding for infinities and
/// the map cache must regenerate bit-stable.
mod f64_bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(v.to_bits())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(f64::from_bits(u64::deserialize(d)?))
    }
}

impl ZStep {
    fn from_tip(w: C) -> ZStep {
        let n2 = w.norm_sqr();
        let cpole = if w.re.abs() < 1e-14 * w.norm() {
            f64::INFINITY
        } else {
            n2 / w.re
        };
        ZStep {
            cpole,
            d: n2 / w.im,
        }
    }

    #[inline]
    fn mobius(&self, z: C) -> C {
        if self.cpole.is_infinite() {
            z
        } else {
            z / (C::new(1.0, 0.0) - z / self.cpole)
        }
    }

    #[inline]
    fn mobius_inv(&self, z: C) -> C {
        if self.cpole.is_infinite() {
            z
        } else {
            z / (C::new(1.0, 0.0) + z / self.cpole)
        }
    }

    /// H minus the geodesic slit onto H; new tip goes to 0. The output is
    /// renormalized by 1/d so the local feature scale stays O(1) through
    /// long compositions (otherwise slit-hugging data overflows f64).
    #[inline]
    fn forward(&self, z: C) -> C {
        let v = self.mobius(z);
        // g(v) = v * sqrt(1 + d^2 / v^2), principal branch; cut lies on the
        // straightened slit so the formula is analytic off it
        let v2 = v * v;
        let s = (C::new(1.0, 0.0) + C::new(self.d * self.d, 0.0) / v2).sqrt();
        v * s / self.d
    }

    /// Interior-side real chase of a point already on the flattened
    /// boundary. At the slit base (v = 0) the interior limit is taken.
    #[inline]
    fn forward_real(&self, x: f64, interior_sign: f64) -> f64 {
        let v = if x.is_infinite() {
            if self.cpole.is_infinite() {
                return x;
            }
            -self.cpole
        } else if self.cpole.is_infinite() {
            x
        } else if (x - self.cpole).abs() < 1e-300 {
            return f64::INFINITY;
        } else {
            x / (1.0 - x / self.cpole)
        };
        if v == 0.0 {
            return interior_sign;
        }
        if v.is_infinite() {
            return v;
        }
        v.signum() * (v * v + self.d * self.d).sqrt() / self.d
    }

    /// Inverse of `forward`, analytic in H.
    #[inline]
    fn inverse(&self, z: C) -> C {
        let z = z * self.d;
        let z2 = z * z;
        let s = (C::new(1.0, 0.0) - C::new(self.d * self.d, 0.0) / z2).sqrt();
        self.mobius_inv(z * s)
    }
}

/// Composite zipper map of a Jordan data polygon onto the unit disk.
/// `forward` maps the interior of the data curve to D, `inverse` maps back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZipperMap {
    za: C,
    zb: C,
    steps: Vec<ZStep>,
    #[serde(with = "f64_bits")]
    zeta0: f64,
    flip: bool,
    probe: C,
    rot: C,
    /// step index that absorbed data point k (-1: handled by the initial
    /// map or skipped)
    absorbed_step: Vec<i32>,
    /// prevertex angle (in [0, 2pi)) of each input data point
    pub prevertex: Vec<f64>,
}

const INTERIOR_SIGN: f64 = -1.0;

fn phi1(z: C, za: C, zb: C) -> C {
    C::new(0.0, 1.0) * ((z - zb) / (z - za)).sqrt()
}

fn phi1_inv(v: C, za: C, zb: C) -> C {
    let u = -(v * v); // (v / i)^2
    (zb - u * za) / (C::new(1.0, 0.0) - u)
}

impl ZipperMap {
    /// Build the map from data points traversed counterclockwise (interior
    /// on the left) and an interior base point that is sent to 0.
    pub fn build(data: &[Point], base: Point) -> Result<ZipperMap> {
        let n = data.len();
        if n < 8 {
            return Err(Error::InvalidDomain("zipper needs >= 8 data points".into()));
        }
        let za = c(data[0]);
        let zb = c(data[1]);
        let mut steps: Vec<ZStep> = Vec::with_capacity(n);
        let mut probe = phi1(c(base), za, zb);
        if probe.im <= 0.0 {
            return Err(Error::Invariant(
                "base point mapped out of the half-plane".into(),
            ));
        }
        let scale = diam_point_set(data);
        let mut absorbed_step = vec![-1i32; n];
        for (k, p) in data.iter().enumerate().skip(2) {
            let mut w = phi1(c(*p), za, zb);
            for s in &steps {
                w = s.forward(w);
            }
            if !(w.re.is_finite() && w.im.is_finite()) || w.norm() < 1e-13 * scale || w.im <= 0.0
            {
                // degenerate data point at this stage; absorb nothing
                continue;
            }
            let step = ZStep::from_tip(w);
            absorbed_step[k] = steps.len() as i32;
            steps.push(step);
            probe = step.forward(probe);
            if !(probe.re.is_finite() && probe.im.is_finite()) || probe.im <= 0.0 {
                return Err(Error::Convergence(format!(
                    "zipper lost the base point at data index {k}"
                )));
            }
        }
        // closing: chase the first data point to its real station
        let mut zeta0 = f64::INFINITY;
        for s in &steps {
            zeta0 = s.forward_real(zeta0, INTERIOR_SIGN);
        }
        let mobius_f = |v: C| -> C {
            if zeta0.is_infinite() {
                v
            } else {
                v / (C::new(1.0, 0.0) - v / zeta0)
            }
        };
        let pm = mobius_f(probe);
        let flip = pm.re < 0.0;
        let pv = if flip { -1.0 / pm } else { pm };
        let probe_h = pv * pv;
        if probe_h.im <= 0.0 {
            return Err(Error::Convergence(
                "zipper closing failed to keep the base point interior".into(),
            ));
        }
        let mut map = ZipperMap {
            za,
            zb,
            steps,
            zeta0,
            flip,
            probe: probe_h,
            rot: C::new(1.0, 0.0),
            absorbed_step,
            prevertex: Vec::new(),
        };
        // prevertex chase for every data point
        let mut pv = Vec::with_capacity(n);
        for k in 0..n {
            pv.push(map.chase_boundary(data, k));
        }
        map.prevertex = pv;
        // rotation: positive real derivative at the origin; the map pair is
        // forward_new = rot * forward_old, inverse_new(z) = inverse_old(z/rot),
        // so rot must carry the full phase of the derivative estimate
        let eps = 1e-6;
        let d0 = (map.inverse(C::new(eps, 0.0)) - map.inverse(C::new(0.0, 0.0))) / eps;
        if d0.norm() > 0.0 {
            map.rot = d0 / d0.norm();
            // prevertices rotate with the map
            let dtheta = map.rot.arg();
            for t in map.prevertex.iter_mut() {
                *t = wrap_angle(*t + dtheta);
            }
        }
        Ok(map)
    }

    /// Interior of the data curve onto the unit disk.
    pub fn forward(&self, z: C) -> C {
        let mut v = phi1(z, self.za, self.zb);
        for s in &self.steps {
            v = s.forward(v);
        }
        let v = if self.zeta0.is_infinite() {
            v
        } else {
            v / (C::new(1.0, 0.0) - v / self.zeta0)
        };
        let v = if self.flip { -1.0 / v } else { v };
        let p = v * v;
        self.rot * (p - self.probe) / (p - self.probe.conj())
    }

    /// Unit disk onto the interior of the data curve.
    pub fn inverse(&self, zeta: C) -> C {
        let zu = zeta / self.rot;
        let p = (self.probe - zu * self.probe.conj()) / (C::new(1.0, 0.0) - zu);
        let mut v = p.sqrt(); // principal: H -> first quadrant
        if self.flip {
            v = -1.0 / v;
        }
        if !self.zeta0.is_infinite() {
            v = v / (C::new(1.0, 0.0) + v / self.zeta0);
        }
        for s in self.steps.iter().rev() {
            v = s.inverse(v);
        }
        phi1_inv(v, self.za, self.zb)
    }

    /// Prevertex of data point `k` by chasing its station on the real axis
    /// with interior-side limits.
    fn chase_boundary(&self, data: &[Point], k: usize) -> f64 {
        let (mut x, start) = if k == 0 {
            (f64::INFINITY, 0usize)
        } else if k == 1 {
            (0.0, 0usize)
        } else if self.absorbed_step[k] >= 0 {
            (0.0, self.absorbed_step[k] as usize + 1)
        } else {
            // skipped point: project its final image onto the axis
            let mut w = phi1(c(data[k]), self.za, self.zb);
            for s in &self.steps {
                w = s.forward(w);
            }
            (w.re, self.steps.len())
        };
        let mut first = true;
        for s in &self.steps[start..] {
            let hint = if first && x == 0.0 { INTERIOR_SIGN } else { 0.0 };
            x = s.forward_real(x, hint);
            first = false;
        }
        // closing map on the reals
        let v = if self.zeta0.is_infinite() {
            x
        } else if x.is_infinite() {
            -self.zeta0
        } else if (x - self.zeta0).abs() < 1e-300 {
            f64::INFINITY
        } else {
            x / (1.0 - x / self.zeta0)
        };
        let v = if self.flip {
            if v == 0.0 {
                f64::INFINITY
            } else if v.is_infinite() {
                0.0
            } else {
                -1.0 / v
            }
        } else {
            v
        };
        let p = if v.is_infinite() {
            f64::INFINITY
        } else {
            v * v
        };
        let zeta = if p.is_infinite() {
            self.rot
        } else {
            let pc = C::new(p, 0.0);
            self.rot * (pc - self.probe) / (pc - self.probe.conj())
        };
        wrap_angle(zeta.arg())
    }
}

pub fn wrap_angle(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = t % two_pi;
    if t < 0.0 {
        t += two_pi;
    }
    t
}

/// Monotone boundary correspondence: strictly increasing prevertex angles
/// matched with arc-length stations along the boundary walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryTable {
    /// prevertex angles, strictly increasing within one period
    pub thetas: Vec<f64>,
    /// arc-length station of each sample along the walk
    pub stations: Vec<f64>,
    /// the boundary walk the stations refer to
    pub walk: Polyline,
    pub walk_length: f64,
}

impl BoundaryTable {
    fn build(mut samples: Vec<(f64, f64)>, walk: Polyline) -> Result<BoundaryTable> {
        if samples.len() < 8 {
            return Err(Error::Convergence("boundary table too sparse".into()));
        }
        let walk_length = walk.length();
        // renumber stations so they increase with theta: find the sample with
        // smallest theta and unwrap stations from there
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total = samples.len();
        let base_station = samples[0].1;
        let mut thetas: Vec<f64> = Vec::with_capacity(total);
        let mut stations: Vec<f64> = Vec::with_capacity(total);
        for (t, s) in &samples {
            let sv = base_station + (s - base_station).rem_euclid(walk_length);
            thetas.push(*t);
            stations.push(sv);
        }
        // drop non-monotone glitches; crowded boundary stretches (deep slit
        // blades, pinched level curves) collapse many stations onto nearly
        // identical prevertex angles, so only a monotone skeleton survives
        let mut ct: Vec<f64> = Vec::with_capacity(total);
        let mut cs: Vec<f64> = Vec::with_capacity(total);
        for i in 0..thetas.len() {
            if ct.last().map(|lt| thetas[i] > *lt + 1e-12).unwrap_or(true)
                && cs.last().map(|ls| stations[i] >= *ls).unwrap_or(true)
            {
                ct.push(thetas[i]);
                cs.push(stations[i]);
            }
        }
        if ct.len() < 16 {
            return Err(Error::Convergence(format!(
                "boundary correspondence not monotone: kept {} of {total}",
                ct.len(),
            )));
        }
        Ok(BoundaryTable {
            thetas: ct,
            stations: cs,
            walk,
            walk_length,
        })
    }

    /// Station for a prevertex angle, by monotone cubic interpolation.
    pub fn station(&self, theta: f64) -> f64 {
        let t0 = self.thetas[0];
        let mut t = wrap_angle(theta);
        if t < t0 {
            t += 2.0 * std::f64::consts::PI;
        }
        let s = monotone_cubic(&self.thetas_ext(), &self.stations_ext(), t);
        s.rem_euclid(self.walk_length)
    }

    /// Boundary point for a prevertex angle.
    pub fn point(&self, theta: f64) -> Point {
        self.walk.point_at(self.station(theta))
    }

    /// Prevertex angle for a station (inverse interpolation).
    pub fn theta_at_station(&self, station: f64) -> f64 {
        let s0 = self.stations[0];
        let s = s0 + (station - s0).rem_euclid(self.walk_length);
        wrap_angle(monotone_cubic(&self.stations_ext(), &self.thetas_ext(), s))
    }

    fn thetas_ext(&self) -> Vec<f64> {
        let mut t = self.thetas.clone();
        t.push(self.thetas[0] + 2.0 * std::f64::consts::PI);
        t
    }

    fn stations_ext(&self) -> Vec<f64> {
        let mut s = self.stations.clone();
        s.push(self.stations[0] + self.walk_length);
        s
    }
}

/// Fritsch–Carlson monotone cubic interpolation on sorted knots.
fn monotone_cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = xs[lo + 1] - xs[lo];
    if h <= 0.0 {
        return ys[lo];
    }
    let d = (ys[lo + 1] - ys[lo]) / h;
    let slope = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            d
        } else {
            let dl = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]).max(1e-300);
            let dr = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]).max(1e-300);
            if dl * dr <= 0.0 {
                0.0
            } else {
                2.0 * dl * dr / (dl + dr)
            }
        }
    };
    let m0 = slope(lo);
    let m1 = slope(lo + 1);
    let t = (x - xs[lo]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    ys[lo] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * h * (t3 - 2.0 * t2 + t)
        + ys[lo + 1] * (-2.0 * t3 + 3.0 * t2)
        + m1 * h * (t3 - t2)
}

/// Conformal map of the unit disk onto a polygon-with-slits, with continuous
/// boundary extension encoded as a monotone prevertex table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskMap {
    pub domain: PolygonalDomain,
    pub base_point: Point,
    zipper: ZipperMap,
    pub boundary_table: BoundaryTable,
    pub mesh: f64,
}

/// Target spacing to data-point count, clamped to a workable range.
fn data_points(walk: &Polyline, mesh: f64) -> Vec<Point> {
    let len = walk.length();
    let n = ((len / mesh).ceil() as usize).clamp(192, 2048);
    let eff_mesh = len / n as f64;
    let dense = walk.densify(eff_mesh);
    dense.vertices().to_vec()
}

/// Builds the disk map of a polygon-with-slits. Slits are traversed on both
/// sides with an internal thickening of 1e-6 diam(domain), so the effective
/// domain is Jordan at that scale.
pub fn build_disk_map(d: &PolygonalDomain, mesh: f64) -> Result<DiskMap> {
    d.validate()?;
    // thickening graded with the mesh keeps slit-blade aspect ratios within
    // floating-point headroom while staying far below any working grid h
    let eps = (1e-6 * d.diameter()).max(5e-3 * mesh);
    let walk = d.doubled_boundary(eps)?;
    if walk.signed_area() <= 0.0 {
        return Err(Error::InvalidDomain(
            "boundary walk not counterclockwise".into(),
        ));
    }
    let base = d.interior_base_point();
    let data = data_points(&walk, mesh);
    let zipper = ZipperMap::build(&data, base)?;
    // stations of the data points along the walk
    let acc = station_index(&walk, &data);
    let samples: Vec<(f64, f64)> = zipper
        .prevertex
        .iter()
        .zip(acc.iter())
        .map(|(t, s)| (*t, *s))
        .collect();
    let boundary_table = BoundaryTable::build(samples, walk)?;
    Ok(DiskMap {
        domain: d.clone(),
        base_point: base,
        zipper,
        boundary_table,
        mesh,
    })
}

/// Arc-length stations of `data` points along `walk` (data comes from a
/// densified copy of the walk, so stations accumulate monotonically).
fn station_index(walk: &Polyline, data: &[Point]) -> Vec<f64> {
    let segs = walk.segments();
    let acc = walk.cumulative_lengths();
    let mut out = Vec::with_capacity(data.len());
    let mut seg_i = 0usize;
    let tol = 1e-9 * (1.0 + walk.length());
    for p in data {
        let mut tries = 0;
        loop {
            let (a, b) = segs[seg_i % segs.len()];
            let d = crate::geometry::dist_point_segment(*p, a, b);
            if d < tol || tries > segs.len() {
                let ab = a.dist(b);
                let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (ab * ab);
                out.push(acc[seg_i % segs.len()] + t.clamp(0.0, 1.0) * ab);
                break;
            }
            seg_i += 1;
            tries += 1;
        }
    }
    out
}

impl DiskMap {
    /// Evaluate the map at a point of the open disk.
    pub fn evaluate(&self, w: Point) -> Point {
        pt(self.zipper.inverse(c(w)))
    }

    /// Evaluate the inverse map at an interior point of the domain.
    pub fn invert(&self, z: Point) -> Point {
        pt(self.zipper.forward(c(z)))
    }

    /// Boundary point for a prevertex angle via the monotone table.
    pub fn boundary_point(&self, theta: f64) -> Point {
        self.boundary_table.point(theta)
    }

    /// Maximum relative discrete Cauchy-Riemann defect over a probe grid at
    /// the given finite-difference width.
    pub fn conformality_residual(&self, probes: usize, delta: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..probes {
            for j in 0..probes {
                let x = -0.85 + 1.7 * i as f64 / (probes - 1) as f64;
                let y = -0.85 + 1.7 * j as f64 / (probes - 1) as f64;
                if x * x + y * y > 0.85 * 0.85 {
                    continue;
                }
                let fx = (self.zipper.inverse(C::new(x + delta, y))
                    - self.zipper.inverse(C::new(x - delta, y)))
                    / (2.0 * delta);
                let fy = (self.zipper.inverse(C::new(x, y + delta))
                    - self.zipper.inverse(C::new(x, y - delta)))
                    / (2.0 * delta);
                let dbar = (fx + C::new(0.0, 1.0) * fy).norm() * 0.5;
                let dz = (fx - C::new(0.0, 1.0) * fy).norm() * 0.5;
                if dz > 0.0 {
                    worst = worst.max(dbar / dz);
                }
            }
        }
        worst
    }

    /// Serialize with a versioned header for the map cache.
    pub fn to_cache_json(&self) -> String {
        #[derive(Serialize)]
        struct Cache<'a> {
            header: &'a str,
            map: &'a DiskMap,
        }
        serde_json::to_string(&Cache {
            header: "CFMAP1",
            map: self,
        })
        .unwrap()
    }

    pub fn from_cache_json(text: &str) -> Result<DiskMap> {
        #[derive(Deserialize)]
        struct Cache {
            header: String,
            map: DiskMap,
        }
        let cache: Cache =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if cache.header != "CFMAP1" {
            return Err(Error::Parse("map cache missing CFMAP1 header".into()));
        }
        Ok(cache.map)
    }
}

/// Conformal map of the exterior of a Jordan polygon onto the exterior of
/// the closed unit disk, normalized by infinity -> infinity with positive
/// real derivative at infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExteriorMap {
    pub jordan_domain: PolygonalDomain,
    inv_center: Point,
    inner: ZipperMap,
    rot: C,
    pub boundary_table: BoundaryTable,
    pub farfield_constant: f64,
}

pub fn build_exterior_map(d: &PolygonalDomain, mesh: f64) -> Result<ExteriorMap> {
    if !d.slits.is_empty() {
        return Err(Error::InvalidDomain(
            "exterior maps require a Jordan polygon (no slits)".into(),
        ));
    }
    d.validate()?;
    let q = d.interior_base_point();
    let walk = d.outer.clone();
    let data = data_points(&walk, mesh);
    let inv = |p: Point| -> Point {
        let z = C::new(p.x - q.x, p.y - q.y);
        let w = 1.0 / z;
        Point::new(w.re, w.im)
    };
    let all_stations = station_index(&walk, &data);
    // drop consecutive duplicates of the inverted data together with their
    // stations so the correspondence stays aligned
    let mut inv_data: Vec<Point> = Vec::with_capacity(data.len());
    let mut stations: Vec<f64> = Vec::with_capacity(data.len());
    for (p, s) in data.iter().zip(all_stations) {
        let q_inv = inv(*p);
        if inv_data
            .last()
            .map(|last: &Point| last.dist(q_inv) > 0.0)
            .unwrap_or(true)
        {
            inv_data.push(q_inv);
            stations.push(s);
        }
    }
    let area = Polyline::closed(inv_data.clone())?.signed_area();
    if area < 0.0 {
        inv_data.reverse();
        stations.reverse();
    }
    let inner = ZipperMap::build(&inv_data, Point::new(0.0, 0.0))?;
    // derivative normalization at infinity: phi(z)/z -> L, want L real > 0
    let probe_radius = 50.0 * d.diameter();
    let raw = |z: C, zm: &ZipperMap| -> C {
        let w = C::new(1.0, 0.0) / (z - c(q));
        1.0 / zm.forward(w)
    };
    let zr = C::new(probe_radius, probe_radius * 0.3);
    let l = raw(zr, &inner) / zr;
    let rot = (l / l.norm()).conj();
    let farfield = (rot * l).norm();
    // boundary table: theta of data point k = arg(rot / zeta_k)
    let samples: Vec<(f64, f64)> = inner
        .prevertex
        .iter()
        .zip(stations.iter())
        .map(|(t, s)| {
            let zeta = C::from_polar(1.0, *t);
            (wrap_angle((rot / zeta).arg()), *s)
        })
        .collect();
    let boundary_table = BoundaryTable::build(samples, walk)?;
    Ok(ExteriorMap {
        jordan_domain: d.clone(),
        inv_center: q,
        inner,
        rot,
        boundary_table,
        farfield_constant: farfield,
    })
}

fn dedup(pts: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().map(|q| q.dist(p) > 0.0).unwrap_or(true) {
            out.push(p);
        }
    }
    out
}

impl ExteriorMap {
    /// Exterior of the polygon onto the exterior of the closed unit disk.
    pub fn evaluate(&self, z: Point) -> Point {
        let w = C::new(1.0, 0.0) / (c(z) - c(self.inv_center));
        pt(self.rot / self.inner.forward(w))
    }

    /// Inverse: exterior of the closed unit disk onto the polygon exterior.
    pub fn invert(&self, zeta: Point) -> Point {
        let w = self.inner.inverse(self.rot / c(zeta));
        pt(C::new(1.0, 0.0) / w + c(self.inv_center))
    }

    pub fn boundary_point(&self, theta: f64) -> Point {
        self.boundary_table.point(theta)
    }

    /// Model angle of a boundary station (inverse of the table).
    pub fn theta_at_station(&self, station: f64) -> f64 {
        self.boundary_table.theta_at_station(station)
    }
}

/// One level of the nested Jordan approximations D_n = phi(B(0, 1 - 2^-n)).
#[derive(Debug, Clone)]
pub struct FamilyLevel {
    pub n: u32,
    pub radius: f64,
    pub dn: PolygonalDomain,
    /// exterior map of the level; absent when prevertex crowding made the
    /// correspondence unresolvable (deep slit blades) -- geodesics then fall
    /// back to the level boundary walk
    pub ext: Option<ExteriorMap>,
    /// circle parameter of each dn outer vertex (for boundary labeling)
    pub params: Vec<f64>,
    pub quasiconvexity_estimate: f64,
}

/// Nested family of Jordan approximations with exterior maps per level.
/// `truncated` is set when deeper levels could not be built because the
/// boundary correspondence crowds below floating-point resolution (slit
/// blades); the family then stops at the last resolvable level.
pub struct ApproximationFamily {
    pub levels: Vec<FamilyLevel>,
    pub n_max: u32,
    pub truncated: bool,
}

pub fn build_approximation_family(
    m: &DiskMap,
    n_max: u32,
    mesh: f64,
) -> Result<ApproximationFamily> {
    if n_max < 2 {
        return Err(Error::InvalidDomain("n_max must be >= 2".into()));
    }
    let mut levels = Vec::new();
    let mut truncated = false;
    for n in 2..=n_max {
        let r = 1.0 - 2f64.powi(-(n as i32));
        let raw = 720usize;
        let mut traced: Vec<(f64, Point)> = Vec::with_capacity(raw);
        for i in 0..raw {
            let t = 2.0 * std::f64::consts::PI * i as f64 / raw as f64;
            traced.push((t, m.evaluate(Point::new(r * t.cos(), r * t.sin()))));
        }
        let mut cum = vec![0.0];
        for i in 1..=raw {
            let a = traced[i - 1].1;
            let b = traced[i % raw].1;
            cum.push(cum[i - 1] + a.dist(b));
        }
        let total = *cum.last().unwrap();
        let target = ((total / mesh).ceil() as usize).clamp(160, 768);
        let mut verts = Vec::with_capacity(target);
        let mut params = Vec::with_capacity(target);
        let mut j = 0usize;
        for i in 0..target {
            let s = total * i as f64 / target as f64;
            while j + 1 < cum.len() && cum[j + 1] < s {
                j += 1;
            }
            let t0 = traced[j].0;
            let seg = (cum[j + 1] - cum[j]).max(1e-300);
            let front = (s - cum[j]) / seg;
            let t = t0 + front * (2.0 * std::f64::consts::PI / raw as f64);
            verts.push(m.evaluate(Point::new(r * t.cos(), r * t.sin())));
            params.push(t);
        }
        let verts = dedup(verts);
        let traced_poly: Result<PolygonalDomain> = (|| {
            let poly = Polyline::closed(verts)?;
            PolygonalDomain::new(poly, vec![], m.domain.resolution_hint)
                .map_err(|e| Error::Convergence(format!("level {n} trace not Jordan: {e}")))
        })();
        let dn = match traced_poly {
            Ok(dn) => dn,
            Err(e) => {
                if levels.len() >= 3 {
                    truncated = true;
                    break;
                }
                return Err(e);
            }
        };
        let ext = match build_exterior_map(&dn, mesh) {
            Ok(ext) => Some(ext),
            Err(_) => {
                truncated = true;
                None
            }
        };
        if ext.is_none() && levels.len() < 2 {
            return Err(Error::Convergence(format!(
                "level {n} exterior map unresolvable before any level was built"
            )));
        }
        let qc = level_quasiconvexity(&dn);
        levels.push(FamilyLevel {
            n,
            radius: r,
            dn,
            ext,
            params,
            quasiconvexity_estimate: qc,
        });
    }
    // nesting check: vertices of D_n inside D_{n+1}
    for w in levels.windows(2) {
        let inner_level = &w[0];
        let outer_level = &w[1];
        let mut violations = 0usize;
        for v in inner_level.dn.outer.vertices() {
            if crate::geometry::winding_number(&outer_level.dn.outer, *v) == 0
                && outer_level.dn.outer.dist_to(*v) > 1e-3 * outer_level.dn.diameter()
            {
                violations += 1;
            }
        }
        if violations > inner_level.dn.outer.vertices().len() / 20 {
            return Err(Error::Invariant(format!(
                "approximation family not nested at level {}",
                outer_level.n
            )));
        }
    }
    Ok(ApproximationFamily { levels, n_max, truncated })
}

/// Cheap quasiconvexity estimate of the complement of a level polygon:
/// sampled boundary pairs joined along the shorter boundary arc.
fn level_quasiconvexity(d: &PolygonalDomain) -> f64 {
    let samples = d.outer.resample(64);
    let mut worst = 1.0f64;
    let n = samples.len();
    let acc: Vec<f64> = {
        let mut a = vec![0.0];
        for i in 1..n {
            a.push(a[i - 1] + samples[i - 1].dist(samples[i]));
        }
        a
    };
    let total = acc[n - 1];
    for i in (0..n).step_by(4) {
        for j in ((i + 4)..n).step_by(8) {
            let chord = samples[i].dist(samples[j]);
            if chord < 1e-9 {
                continue;
            }
            let along = (acc[j] - acc[i]).min(total - (acc[j] - acc[i]));
            worst = worst.max(along / chord);
        }
    }
    worst
}

impl ApproximationFamily {
    pub fn level(&self, n: u32) -> Option<&FamilyLevel> {
        self.levels.iter().find(|l| l.n == n)
    }
}

/// Whitney-type diagnostics of the image of a disk under a conformal map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitneyImageReport {
    pub lambda_in: f64,
    pub lambda_out: f64,
    pub bilipschitz_l: f64,
    pub dilation: f64,
}

/// Which model the Whitney disk lives in.
pub enum MapForWhitney<'a> {
    Disk(&'a DiskMap),
    Exterior(&'a ExteriorMap),
}

/// Checks that the disk B(center, radius) is Whitney-type in the source
/// model domain and reports the Whitney constant, dilation and biLipschitz
/// distortion of its image.
pub fn whitney_image_report(
    map: &MapForWhitney,
    center: Point,
    radius: f64,
) -> Result<WhitneyImageReport> {
    let norm = center.dist(Point::new(0.0, 0.0));
    let dist_source = match map {
        MapForWhitney::Disk(_) => 1.0 - norm - radius,
        MapForWhitney::Exterior(_) => norm - radius - 1.0,
    };
    if dist_source <= 0.0 {
        return Err(Error::InvalidDomain(
            "disk touches the model boundary: not Whitney-type".into(),
        ));
    }
    let diam_source = 2.0 * radius;
    let lambda_in = (diam_source / dist_source)
        .max(dist_source / diam_source)
        .max(1.0);
    let mut pts_src = Vec::new();
    for i in 0..24 {
        let t = 2.0 * std::f64::consts::PI * i as f64 / 24.0;
        pts_src.push(Point::new(
            center.x + radius * t.cos(),
            center.y + radius * t.sin(),
        ));
        pts_src.push(Point::new(
            center.x + 0.5 * radius * t.cos(),
            center.y + 0.5 * radius * t.sin(),
        ));
    }
    pts_src.push(center);
    let eval = |p: Point| -> Point {
        match map {
            MapForWhitney::Disk(m) => m.evaluate(p),
            MapForWhitney::Exterior(m) => m.invert(p),
        }
    };
    let img: Vec<Point> = pts_src.iter().map(|p| eval(*p)).collect();
    let diam_out = diam_point_set(&img);
    let dist_out = img
        .iter()
        .map(|p| match map {
            MapForWhitney::Disk(m) => m.domain.dist_to_boundary(*p),
            MapForWhitney::Exterior(m) => m.jordan_domain.dist_to_boundary(*p),
        })
        .fold(f64::INFINITY, f64::min);
    let img_center = eval(center);
    let inradius_out = img
        .iter()
        .take(48)
        .map(|p| img_center.dist(*p))
        .fold(f64::INFINITY, f64::min);
    let lambda_out = (diam_out / inradius_out.max(1e-300))
        .max(diam_out / dist_out.max(1e-300))
        .max(dist_out / diam_out.max(1e-300))
        .max(1.0);
    let mut ratios = Vec::new();
    for i in 0..pts_src.len() {
        for j in (i + 1)..pts_src.len() {
            let ds = pts_src[i].dist(pts_src[j]);
            if ds > radius * 0.05 {
                ratios.push(img[i].dist(img[j]) / ds);
            }
        }
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dilation = ratios[ratios.len() / 2];
    let bilipschitz_l = ratios
        .iter()
        .map(|r| (r / dilation).max(dilation / r))
        .fold(1.0f64, f64::max);
    Ok(WhitneyImageReport {
        lambda_in,
        lambda_out,
        bilipschitz_l,
        dilation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn disk_map_is_near_identity_on_64gon() {
        let d = shapes::disk(64, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        assert!(m.base_point.dist(Point::new(0.0, 0.0)) < 1e-6);
        let p = Point::new(0.3, 0.4);
        let img = m.evaluate(p);
        assert!(
            img.dist(p) < 1e-3,
            "phi(0.3,0.4) = ({}, {}) should be near identity",
            img.x,
            img.y
        );
    }

    #[test]
    fn square_map_residual_and_monotone_table() {
        let d = shapes::unit_square(0.01);
        let m = build_disk_map(&d, 0.01).unwrap();
        let res = m.conformality_residual(15, 1e-5);
        assert!(res < 1e-6, "residual {res}");
        for w in m.boundary_table.thetas.windows(2) {
            assert!(w[1] > w[0]);
        }
        // the table must cover all four sides
        let count = 64;
        let mut seen = [false; 4];
        for i in 0..count {
            let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            let p = m.boundary_point(t);
            if p.y.abs() < 1e-3 {
                seen[0] = true;
            }
            if (p.x - 1.0).abs() < 1e-3 {
                seen[1] = true;
            }
            if (p.y - 1.0).abs() < 1e-3 {
                seen[2] = true;
            }
            if p.x.abs() < 1e-3 {
                seen[3] = true;
            }
        }
        assert!(seen.iter().all(|s| *s), "sides seen: {seen:?}");
    }

    #[test]
    fn residual_decreases_under_probe_refinement() {
        let d = shapes::hexagon(0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let r1 = m.conformality_residual(9, 4e-4);
        let r2 = m.conformality_residual(9, 2e-4);
        assert!(
            r2 < 0.7 * r1 + 1e-12,
            "defect should shrink under halving: {r1} -> {r2}"
        );
    }

    #[test]
    fn round_trip_interior_points() {
        let d = shapes::l_shape(0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let mut s = 0x2545F4914F6CDD1Du64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        while checked < 200 {
            let p = Point::new(rng() * 2.0, rng() * 2.0);
            if !d.contains(p) || d.dist_to_boundary(p) < 0.03 {
                continue;
            }
            let w = m.invert(p);
            assert!(w.dist(Point::new(0.0, 0.0)) < 1.0 + 1e-9);
            let back = m.evaluate(w);
            assert!(
                back.dist(p) < 1e-6,
                "round trip failed at ({}, {}): got ({}, {})",
                p.x,
                p.y,
                back.x,
                back.y
            );
            checked += 1;
        }
    }

    #[test]
    fn slit_disk_table_traverses_slit_twice() {
        let d = shapes::slit_disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        // boundary-walk oracle: slit stations appear for two disjoint ranges
        // of prevertex angles
        let count = 2048;
        let mut on_slit_runs = 0;
        let mut prev_on = false;
        for i in 0..count {
            let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            let p = m.boundary_point(t);
            let on = p.y.abs() < 0.02 && p.x > 0.05 && p.x < 0.95;
            if on && !prev_on {
                on_slit_runs += 1;
            }
            prev_on = on;
        }
        assert!(
            on_slit_runs >= 2,
            "slit should be traversed twice, saw {on_slit_runs} runs"
        );
    }

    #[test]
    fn exterior_map_near_identity_on_64gon() {
        let d = shapes::disk(64, 0.01);
        let em = build_exterior_map(&d, 0.02).unwrap();
        let p = Point::new(2.0, 0.0);
        let img = em.evaluate(p);
        assert!(
            img.dist(p) < 1e-2,
            "exterior map at (2,0) gave ({}, {})",
            img.x,
            img.y
        );
        assert!((em.farfield_constant - 1.0).abs() < 0.05);
    }

    #[test]
    fn exterior_square_farfield_and_roundtrip() {
        let d = shapes::unit_square(0.01);
        let em = build_exterior_map(&d, 0.02).unwrap();
        assert!(em.farfield_constant > 0.0);
        let mut s = 77u64;
        let mut rng = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        while checked < 1000 {
            let zeta = Point::new(rng() * 8.0 - 4.0, rng() * 8.0 - 4.0);
            let r = zeta.dist(Point::new(0.0, 0.0));
            if r < 1.05 || r > 4.0 {
                continue;
            }
            let z = em.invert(zeta);
            let back = em.evaluate(z);
            assert!(
                back.dist(zeta) < 1e-6,
                "round trip failed: ({}, {}) -> ({}, {})",
                zeta.x,
                zeta.y,
                back.x,
                back.y
            );
            checked += 1;
        }
    }

    #[test]
    fn approximation_family_nests() {
        let d = shapes::disk(64, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let fam = build_approximation_family(&m, 5, 0.05).unwrap();
        assert_eq!(fam.levels.len(), 4);
        for level in &fam.levels {
            // concentric near-circles of radius ~ 1 - 2^-n
            for v in level.dn.outer.vertices().iter().step_by(16) {
                let r = v.dist(Point::new(0.0, 0.0));
                assert!(
                    (r - level.radius).abs() < 0.02,
                    "level {} vertex radius {r}",
                    level.n
                );
            }
        }
    }

    #[test]
    fn whitney_identity_map_reports_unit_distortion() {
        let d = shapes::disk(96, 0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        let r =
            whitney_image_report(&MapForWhitney::Disk(&m), Point::new(0.0, 0.0), 0.25).unwrap();
        assert!((r.dilation - 1.0).abs() < 0.05, "dilation {}", r.dilation);
        assert!(r.bilipschitz_l < 1.2, "L {}", r.bilipschitz_l);
    }

    #[test]
    fn whitney_rejects_boundary_touching_disk() {
        let d = shapes::unit_square(0.01);
        let m = build_disk_map(&d, 0.02).unwrap();
        assert!(
            whitney_image_report(&MapForWhitney::Disk(&m), Point::new(0.5, 0.0), 0.5).is_err()
        );
    }

    #[test]
    fn whitney_square_stable_under_mesh_halving() {
        let d = shapes::unit_square(0.01);
        let m1 = build_disk_map(&d, 0.02).unwrap();
        let m2 = build_disk_map(&d, 0.01).unwrap();
        let ctr = Point::new(0.0, 0.0);
        let r1 = whitney_image_report(&MapForWhitney::Disk(&m1), ctr, 0.25).unwrap();
        let r2 = whitney_image_report(&MapForWhitney::Disk(&m2), ctr, 0.25).unwrap();
        assert!((r1.lambda_out / r2.lambda_out - 1.0).abs() < 0.10);
        assert!((r1.bilipschitz_l / r2.bilipschitz_l - 1.0).abs() < 0.10);
    }

    #[test]
    fn map_cache_roundtrip_bitstable() {
        let d = shapes::hexagon(0.01);
        let m = build_disk_map(&d, 0.05).unwrap();
        let j1 = m.to_cache_json();
        let m2 = DiskMap::from_cache_json(&j1).unwrap();
        let j2 = m2.to_cache_json();
        assert_eq!(j1, j2);
        let m3 = build_disk_map(&d, 0.05).unwrap();
        assert_eq!(j1, m3.to_cache_json());
    }
}
