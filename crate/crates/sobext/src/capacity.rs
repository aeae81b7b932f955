//! Conformal capacity between continua via Dirichlet-energy minimization on
//! a grid, with the classical estimates used as numerical cross-checks:
//! Loewner lower bounds, two-sided ring-capacity bounds, conformal
//! invariance, inner-metric consequences of capacity lower bounds, boundary
//! proximity under exterior maps, and the annulus decomposition behind the
//! exterior Gehring-Hayman comparison.

use serde::{Deserialize, Serialize};

use crate::conformal::{DiskMap, ExteriorMap};
use crate::fields::{GridSpec, ScalarField};
use crate::geometry::{diam_point_set, PathRegion, Point, Polyline, PolygonalDomain};
use crate::{Error, Result};

/// Discrete capacity problem: region, source plate E (potential 1) and sink
/// plate F (potential 0), all as node masks over one grid.
#[derive(Debug, Clone)]
pub struct CapacityProblem {
    pub grid: GridSpec,
    pub region: Vec<bool>,
    pub e_mask: Vec<bool>,
    pub f_mask: Vec<bool>,
}

impl CapacityProblem {
    pub fn new(
        grid: GridSpec,
        region: Vec<bool>,
        e_mask: Vec<bool>,
        f_mask: Vec<bool>,
    ) -> Result<CapacityProblem> {
        let n = grid.len();
        if region.len() != n || e_mask.len() != n || f_mask.len() != n {
            return Err(Error::InvalidDomain("mask length mismatch".into()));
        }
        if !e_mask.iter().any(|m| *m) || !f_mask.iter().any(|m| *m) {
            return Err(Error::EmptyRegion("capacity plates must be nonempty".into()));
        }
        if e_mask.iter().zip(&f_mask).any(|(a, b)| *a && *b) {
            return Err(Error::InvalidDomain("plates E and F intersect".into()));
        }
        Ok(CapacityProblem {
            grid,
            region,
            e_mask,
            f_mask,
        })
    }

    /// Builds masks from point-membership predicates, fattening the plates
    /// to one-cell width so zero-width continua stay visible to the grid.
    pub fn from_predicates<R, E, F>(
        grid: GridSpec,
        region: R,
        e_set: E,
        f_set: F,
    ) -> Result<CapacityProblem>
    where
        R: Fn(Point) -> bool,
        E: Fn(Point) -> f64,
        F: Fn(Point) -> f64,
    {
        let mut reg = vec![false; grid.len()];
        let mut em = vec![false; grid.len()];
        let mut fm = vec![false; grid.len()];
        let fat = grid.h; // one-cell fattening radius, reported to callers
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let id = grid.id(i, j);
                let p = grid.point(i, j);
                if region(p) {
                    reg[id] = true;
                    if e_set(p) <= fat {
                        em[id] = true;
                    } else if f_set(p) <= fat {
                        fm[id] = true;
                    }
                }
            }
        }
        CapacityProblem::new(grid, reg, em, fm)
    }
}

/// Result of a capacity solve: the energy value, the discrete minimizer and
/// the final relative residual of the conjugate-gradient iteration.
#[derive(Debug, Clone)]
pub struct CapacityEstimate {
    pub value: f64,
    pub minimizer: ScalarField,
    pub residual: f64,
    pub fattening: f64,
}

/// Solves the discrete Dirichlet problem (5-point Laplacian, natural
/// boundary conditions on the region boundary, plates clamped to 1 and 0)
/// and returns the discrete energy.
pub fn conformal_capacity(p: &CapacityProblem) -> Result<CapacityEstimate> {
    let g = &p.grid;
    let n = g.len();
    // unknown numbering over free region nodes
    let mut index = vec![usize::MAX; n];
    let mut free: Vec<usize> = Vec::new();
    for id in 0..n {
        if p.region[id] && !p.e_mask[id] && !p.f_mask[id] {
            index[id] = free.len();
            free.push(id);
        }
    }
    if free.is_empty() {
        return Err(Error::EmptyRegion("no free nodes between plates".into()));
    }
    let nf = free.len();
    let neighbours = |id: usize| -> [Option<usize>; 4] {
        let (i, j) = g.ij(id);
        let mut out = [None; 4];
        if i + 1 < g.nx {
            out[0] = Some(g.id(i + 1, j));
        }
        if i > 0 {
            out[1] = Some(g.id(i - 1, j));
        }
        if j + 1 < g.ny {
            out[2] = Some(g.id(i, j + 1));
        }
        if j > 0 {
            out[3] = Some(g.id(i, j - 1));
        }
        out
    };
    // A x = b with A = graph Laplacian restricted to free nodes
    let mut diag = vec![0.0f64; nf];
    let mut b = vec![0.0f64; nf];
    for (row, &id) in free.iter().enumerate() {
        for nb in neighbours(id).into_iter().flatten() {
            if !p.region[nb] {
                continue; // natural boundary: missing neighbour drops out
            }
            diag[row] += 1.0;
            if p.e_mask[nb] {
                b[row] += 1.0;
            }
        }
        if diag[row] == 0.0 {
            diag[row] = 1.0;
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (row, &id) in free.iter().enumerate() {
            let mut acc = diag[row] * x[row];
            for nb in neighbours(id).into_iter().flatten() {
                if p.region[nb] && index[nb] != usize::MAX {
                    acc -= x[index[nb]];
                }
            }
            out[row] = acc;
        }
    };
    // Jacobi-preconditioned conjugate gradients
    let mut x = vec![0.5f64; nf];
    let mut r = vec![0.0f64; nf];
    apply(&x, &mut r);
    for i in 0..nf {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut pdir = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let b_norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut ap = vec![0.0f64; nf];
    let mut residual = f64::INFINITY;
    let max_iter = 40 * ((nf as f64).sqrt() as usize + 10);
    for _ in 0..max_iter {
        apply(&pdir, &mut ap);
        let p_ap: f64 = pdir.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if p_ap <= 0.0 {
            break;
        }
        let alpha = rz / p_ap;
        for i in 0..nf {
            x[i] += alpha * pdir[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        residual = r_norm / b_norm;
        if residual < 1e-8 {
            break;
        }
        for i in 0..nf {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..nf {
            pdir[i] = z[i] + beta * pdir[i];
        }
    }
    if !residual.is_finite() || residual > 1e-5 {
        return Err(Error::Convergence(format!(
            "capacity solver stalled at relative residual {residual:.2e}"
        )));
    }
    // assemble the potential field and its exact discrete energy
    let mut values = vec![0.0f64; n];
    for id in 0..n {
        if p.e_mask[id] {
            values[id] = 1.0;
        } else if index[id] != usize::MAX {
            values[id] = x[index[id]].clamp(0.0, 1.0);
        }
    }
    let mut energy = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let id = g.id(i, j);
            if !p.region[id] {
                continue;
            }
            if i + 1 < g.nx && p.region[id + 1] {
                let d = values[id + 1] - values[id];
                energy += d * d;
            }
            if j + 1 < g.ny && p.region[id + g.nx] {
                let d = values[id + g.nx] - values[id];
                energy += d * d;
            }
        }
    }
    let minimizer = ScalarField {
        grid: *g,
        values,
        mask: p.region.clone(),
        coverage: vec![1.0; n],
    };
    Ok(CapacityEstimate {
        value: energy,
        minimizer,
        residual,
        fattening: g.h,
    })
}

/// Energy of a given field under the same quadrature the solver uses; for
/// test functions this upper-bounds the discrete capacity.
pub fn dirichlet_energy(region: &[bool], field: &ScalarField) -> f64 {
    let g = &field.grid;
    let mut energy = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let id = g.id(i, j);
            if !region[id] {
                continue;
            }
            if i + 1 < g.nx && region[id + 1] {
                let d = field.values[id + 1] - field.values[id];
                energy += d * d;
            }
            if j + 1 < g.ny && region[id + g.nx] {
                let d = field.values[id + g.nx] - field.values[id];
                energy += d * d;
            }
        }
    }
    energy
}

/// Model domain for Loewner batteries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelDomain {
    Disk,
    Exterior,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoewnerCase {
    pub capacity: f64,
    pub log_term: f64,
    pub c_empirical: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoewnerReport {
    pub model: ModelDomain,
    pub cases: Vec<LoewnerCase>,
    pub c_min: f64,
    pub pass: bool,
}

/// Continuum given as a polyline plate for battery runs.
pub struct Continuum(pub Polyline);

/// Computes Cap(E, F, model) and the Loewner log term for each pair and
/// reports the smallest empirical ratio c = Cap / log-term.
pub fn loewner_check(
    pairs: &[(Continuum, Continuum)],
    model: ModelDomain,
    h: f64,
) -> Result<LoewnerReport> {
    let mut cases = Vec::new();
    for (e, f) in pairs {
        let cap = model_capacity(&e.0, &f.0, model, h)?;
        let de = e.0.length().max(diam_point_set(e.0.vertices()));
        let df = f.0.length().max(diam_point_set(f.0.vertices()));
        let dist = dist_between(&e.0, &f.0);
        let log_term = (1.0 + de.min(df) / dist.max(1e-12)).ln();
        cases.push(LoewnerCase {
            capacity: cap,
            log_term,
            c_empirical: if log_term > 0.0 { cap / log_term } else { f64::INFINITY },
        });
    }
    let c_min = cases
        .iter()
        .map(|c| c.c_empirical)
        .fold(f64::INFINITY, f64::min);
    Ok(LoewnerReport {
        model,
        cases,
        c_min,
        pass: c_min > 0.05,
    })
}

fn dist_between(a: &Polyline, b: &Polyline) -> f64 {
    let pa = a.resample(64);
    pa.iter().map(|p| b.dist_to(*p)).fold(f64::INFINITY, f64::min)
}

/// Capacity between two polyline plates in the unit-disk or exterior model.
pub fn model_capacity(e: &Polyline, f: &Polyline, model: ModelDomain, h: f64) -> Result<f64> {
    let (lo, hi, region): (Point, Point, Box<dyn Fn(Point) -> bool>) = match model {
        ModelDomain::Disk => (
            Point::new(-1.0, -1.0),
            Point::new(1.0, 1.0),
            Box::new(|p: Point| p.x * p.x + p.y * p.y <= 1.0),
        ),
        ModelDomain::Exterior => (
            Point::new(-8.0, -8.0),
            Point::new(8.0, 8.0),
            Box::new(|p: Point| p.x * p.x + p.y * p.y >= 1.0),
        ),
    };
    let grid = GridSpec::covering(lo, hi, h);
    let problem = CapacityProblem::from_predicates(
        grid,
        |p| region(p),
        |p| e.dist_to(p),
        |p| f.dist_to(p),
    )?;
    Ok(conformal_capacity(&problem)?.value)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RingBoundsReport {
    pub sigma: f64,
    pub capacity: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub upper_source: String,
    pub pass: bool,
}

/// Verifies the two-sided ring-capacity bounds for the ring between the
/// bounded continuum U0 and the unbounded side U1. The upper bound uses the
/// explicit Lipschitz test function when sigma >= 1/2 and the separating
/// annulus bound otherwise; the lower bound is the Loewner-type logarithm
/// with the empirical constant from `c_ref`.
pub fn ring_capacity_bounds(u0: &Polyline, u1: &Polyline, h: f64, c_ref: f64) -> Result<RingBoundsReport> {
    let d0 = diam_point_set(u0.vertices()).max(u0.length() * 0.5);
    let dist = dist_between(u0, u1);
    let sigma = d0 / dist.max(1e-12);
    // solve on a window containing both plates
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in u0.vertices().iter().chain(u1.vertices().iter()) {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let margin = 0.5 * (hi.x - lo.x + hi.y - lo.y).max(4.0 * h);
    lo = Point::new(lo.x - margin, lo.y - margin);
    hi = Point::new(hi.x + margin, hi.y + margin);
    let grid = GridSpec::covering(lo, hi, h);
    let problem = CapacityProblem::from_predicates(
        grid,
        |_| true,
        |p| u0.dist_to(p),
        |p| u1.dist_to(p),
    )?;
    let cap = conformal_capacity(&problem)?.value;
    let (upper, upper_source) = if sigma >= 0.5 {
        // energy of u(x) = clamp(1 - dist(x, U0)/dist(U0, U1), 0, 1)
        let mut test = ScalarField::constant(grid, 0.0);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let p = grid.point(i, j);
                test.values[grid.id(i, j)] =
                    (1.0 - u0.dist_to(p) / dist).clamp(0.0, 1.0);
            }
        }
        let region = vec![true; grid.len()];
        (dirichlet_energy(&region, &test), "test-function".to_string())
    } else {
        (
            2.0 * std::f64::consts::PI / (1.0 / sigma).ln(),
            "annulus".to_string(),
        )
    };
    let lower = c_ref * (1.0 + sigma).ln();
    Ok(RingBoundsReport {
        sigma,
        capacity: cap,
        lower_bound: lower,
        upper_bound: upper,
        upper_source,
        pass: cap >= lower * 0.99 && cap <= upper * 1.01,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub cap_source: f64,
    pub cap_image: f64,
    pub discrepancy: f64,
    pub pass: bool,
}

/// Conformal-invariance check: capacity of two radial plates in the disk
/// versus the capacity of their images in the target domain of a disk map.
pub fn invariance_check(
    m: &DiskMap,
    e: &Polyline,
    f: &Polyline,
    h_model: f64,
    tolerance: f64,
) -> Result<InvarianceReport> {
    let cap_source = model_capacity(e, f, ModelDomain::Disk, h_model)?;
    // image plates, mapped pointwise
    let map_plate = |p: &Polyline| -> Result<Polyline> {
        let pts: Vec<Point> = p.resample(128).iter().map(|q| m.evaluate(*q)).collect();
        Polyline::open(crate::geometry::dedup_points(pts))
    };
    let ei = map_plate(e)?;
    let fi = map_plate(f)?;
    let d = &m.domain;
    let (lo, hi) = d.bbox();
    let h_image = h_model * d.diameter() / 2.0;
    let grid = GridSpec::covering(lo, hi, h_image);
    let problem = CapacityProblem::from_predicates(
        grid,
        |p| d.contains(p) || d.dist_to_boundary(p) <= 0.51 * h_image,
        |p| ei.dist_to(p),
        |p| fi.dist_to(p),
    )?;
    let cap_image = conformal_capacity(&problem)?.value;
    let discrepancy = (cap_source - cap_image).abs() / cap_source.max(1e-12);
    Ok(InvarianceReport {
        cap_source,
        cap_image,
        discrepancy,
        pass: discrepancy <= tolerance,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerCapacityReport {
    pub capacity: f64,
    pub inner_diam_e: f64,
    pub inner_diam_f: f64,
    pub inner_dist: f64,
    pub implied_constant: f64,
    pub precondition_met: bool,
}

/// If Cap(E, F, region) >= c0, the inner diameters control the inner
/// distance; reports the implied constant.
pub fn inner_capacity_check(
    e: &Polyline,
    f: &Polyline,
    domain: &PolygonalDomain,
    c0: f64,
    h: f64,
) -> Result<InnerCapacityReport> {
    let (lo, hi) = domain.bbox();
    let grid = GridSpec::covering(lo, hi, h);
    let problem = CapacityProblem::from_predicates(
        grid,
        |p| domain.contains(p) || domain.dist_to_boundary(p) <= 0.51 * h,
        |p| e.dist_to(p),
        |p| f.dist_to(p),
    )?;
    let cap = conformal_capacity(&problem)?.value;
    let region = PathRegion::Domain(domain);
    let inner_diam = |p: &Polyline| -> Result<f64> {
        let samples = p.resample(8);
        let mut best = 0.0f64;
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                let d = crate::geometry::inner_distance(samples[i], samples[j], &region, h)?;
                best = best.max(d.length);
            }
        }
        Ok(best)
    };
    let de = inner_diam(e)?;
    let df = inner_diam(f)?;
    let mut dist = f64::INFINITY;
    for a in e.resample(6) {
        for b in f.resample(6) {
            let d = crate::geometry::inner_distance(a, b, &region, h)?;
            dist = dist.min(d.length);
        }
    }
    let met = cap >= c0;
    Ok(InnerCapacityReport {
        capacity: cap,
        inner_diam_e: de,
        inner_diam_f: df,
        inner_dist: dist,
        implied_constant: dist / de.min(df).max(1e-12),
        precondition_met: met,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UlkodistCase {
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    pub image_gap: f64,
    pub image_dist_to_circle: [f64; 2],
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UlkodistReport {
    pub delta1: f64,
    pub cases: Vec<UlkodistCase>,
    pub pass: bool,
}

/// Probes the boundary-proximity lemma for exterior maps: points close to
/// the boundary and to each other (relative to delta1 diam) must map within
/// 1/4 of each other and within 1/4 of the unit circle.
pub fn ulkodist_probe(
    em: &ExteriorMap,
    pairs: &[(Point, Point)],
    delta1: f64,
) -> Result<UlkodistReport> {
    let diam = em.jordan_domain.diameter();
    let mut cases = Vec::new();
    for (z1, z2) in pairs {
        if z1.dist(*z2) > delta1 * diam
            || em.jordan_domain.dist_to_boundary(*z1) > delta1 * diam
            || em.jordan_domain.dist_to_boundary(*z2) > delta1 * diam
        {
            return Err(Error::InvalidDomain(
                "ulkodist pair violates the closeness precondition".into(),
            ));
        }
        let w1 = em.evaluate(*z1);
        let w2 = em.evaluate(*z2);
        let gap = w1.dist(w2);
        let d1 = w1.dist(Point::new(0.0, 0.0)) - 1.0;
        let d2 = w2.dist(Point::new(0.0, 0.0)) - 1.0;
        cases.push(UlkodistCase {
            z1: [z1.x, z1.y],
            z2: [z2.x, z2.y],
            image_gap: gap,
            image_dist_to_circle: [d1, d2],
            pass: gap < 0.25 && d1 < 0.25 && d2 < 0.25,
        });
    }
    let pass = cases.iter().all(|c| c.pass);
    Ok(UlkodistReport {
        delta1,
        cases,
        pass,
    })
}

/// Dyadic conformal annulus around a boundary point in the exterior model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalAnnulus {
    pub center_model: [f64; 2],
    pub k: i32,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusSplit {
    pub k: i32,
    pub geodesic_length: f64,
    pub geodesic_diam: f64,
    pub dist_to_boundary: f64,
    pub competitor_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthTransferReport {
    pub splits: Vec<AnnulusSplit>,
    pub length_ratio: f64,
    pub comparability: f64,
    pub pass: bool,
}

/// Splits a geodesic and a competitor curve into dyadic conformal annuli
/// around the model image of `z1` and verifies the per-annulus length
/// comparisons, aggregating the exterior Gehring-Hayman conclusion.
pub fn length_transfer_check(
    em: &ExteriorMap,
    geodesic: &Polyline,
    competitor: &Polyline,
    z1: Point,
) -> Result<LengthTransferReport> {
    let w1 = em.evaluate(z1);
    // Gehring-Hayman hypothesis: the model image is not too far out
    let g_model: Vec<Point> = geodesic.resample(256).iter().map(|p| em.evaluate(*p)).collect();
    if g_model
        .iter()
        .any(|p| p.dist(Point::new(0.0, 0.0)) > 100.0)
    {
        return Err(Error::InvalidDomain(
            "geodesic image leaves B(0,100): hypothesis violated".into(),
        ));
    }
    let g_pts = geodesic.resample(256);
    let c_pts = competitor.resample(512);
    let annulus_of = |p: Point| -> i32 {
        let r = em.evaluate(p).dist(w1);
        if r <= 0.0 {
            i32::MIN
        } else {
            r.log2().ceil() as i32
        }
    };
    let mut splits = Vec::new();
    let kmin = -40;
    for k in kmin..8 {
        // geodesic piece in annulus k
        let mut gl = 0.0;
        let mut gpts: Vec<Point> = Vec::new();
        for w in g_pts.windows(2) {
            if annulus_of(w[0]) == k {
                gl += w[0].dist(w[1]);
                gpts.push(w[0]);
            }
        }
        if gpts.len() < 2 {
            continue;
        }
        let gd = diam_point_set(&gpts);
        let dist_bnd = gpts
            .iter()
            .map(|p| em.jordan_domain.dist_to_boundary(*p))
            .fold(f64::INFINITY, f64::min);
        // competitor crossing pieces in the same annulus
        let mut cl = 0.0;
        for w in c_pts.windows(2) {
            if annulus_of(w[0]) == k {
                cl += w[0].dist(w[1]);
            }
        }
        splits.push(AnnulusSplit {
            k,
            geodesic_length: gl,
            geodesic_diam: gd,
            dist_to_boundary: dist_bnd,
            competitor_length: cl,
        });
    }
    let total_g: f64 = splits.iter().map(|s| s.geodesic_length).sum();
    let total_c: f64 = competitor.length();
    let comparability = splits
        .iter()
        .filter(|s| s.geodesic_length > 0.0 && s.dist_to_boundary > 0.0)
        .map(|s| {
            let a = s.geodesic_length / s.dist_to_boundary;
            a.max(1.0 / a)
        })
        .fold(1.0f64, f64::max);
    Ok(LengthTransferReport {
        splits,
        length_ratio: total_g / total_c.max(1e-12),
        comparability,
        pass: total_g <= 100.0 * total_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn circle_plate(r: f64, n: usize) -> Polyline {
        let pts = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
        Polyline::closed(pts).unwrap()
    }

    #[test]
    fn annulus_capacity_matches_analytic() {
        // Cap between |x| = 1 and |x| = e is 2 pi / log(e) = 2 pi; the
        // analytic minimizer is u = log(|x|/1)/log(e)
        let rr = std::f64::consts::E;
        let h = 2.0 * rr / 512.0;
        let grid = GridSpec::covering(
            Point::new(-rr - 4.0 * h, -rr - 4.0 * h),
            Point::new(rr + 4.0 * h, rr + 4.0 * h),
            h,
        );
        let problem = CapacityProblem::from_predicates(
            grid,
            |p| {
                let r = p.dist(Point::new(0.0, 0.0));
                (1.0 - h..=rr + h).contains(&r)
            },
            |p| (p.dist(Point::new(0.0, 0.0)) - 1.0).abs(),
            |p| (p.dist(Point::new(0.0, 0.0)) - rr).abs(),
        )
        .unwrap();
        let est = conformal_capacity(&problem).unwrap();
        let analytic = 2.0 * std::f64::consts::PI;
        assert!(
            (est.value - analytic).abs() < 0.05 * analytic,
            "capacity {} vs {analytic}",
            est.value
        );
        // maximum principle
        for (id, v) in est.minimizer.values.iter().enumerate() {
            if est.minimizer.mask[id] {
                assert!((0.0..=1.0).contains(v));
            }
        }
        // reported value equals the energy of the reported minimizer
        let e2 = dirichlet_energy(&problem.region, &est.minimizer);
        assert!((e2 - est.value).abs() < 1e-12 * est.value.max(1.0));
    }

    #[test]
    fn annulus_error_shrinks_under_refinement() {
        let rr = std::f64::consts::E;
        let analytic = 2.0 * std::f64::consts::PI;
        let mut errs = Vec::new();
        for div in [128.0, 256.0] {
            let h = 2.0 * rr / div;
            let grid = GridSpec::covering(
                Point::new(-rr - 4.0 * h, -rr - 4.0 * h),
                Point::new(rr + 4.0 * h, rr + 4.0 * h),
                h,
            );
            let problem = CapacityProblem::from_predicates(
                grid,
                |p| {
                    let r = p.dist(Point::new(0.0, 0.0));
                    (1.0 - h..=rr + h).contains(&r)
                },
                |p| (p.dist(Point::new(0.0, 0.0)) - 1.0).abs(),
                |p| (p.dist(Point::new(0.0, 0.0)) - rr).abs(),
            )
            .unwrap();
            errs.push((conformal_capacity(&problem).unwrap().value - analytic).abs());
        }
        assert!(errs[1] < 0.6 * errs[0], "errors {errs:?}");
    }

    #[test]
    fn capacity_monotone_in_separation_and_region() {
        // plates approaching each other increase capacity
        let h = 0.02;
        let grid = GridSpec::covering(Point::new(-2.0, -2.0), Point::new(2.0, 2.0), h);
        let mut prev = 0.0;
        for gap in [1.2, 0.8, 0.4] {
            let e = Polyline::open(vec![
                Point::new(-0.2 - gap / 2.0, -0.3),
                Point::new(-gap / 2.0, 0.3),
            ])
            .unwrap();
            let f = Polyline::open(vec![
                Point::new(gap / 2.0, -0.3),
                Point::new(0.2 + gap / 2.0, 0.3),
            ])
            .unwrap();
            let cap = conformal_capacity(
                &CapacityProblem::from_predicates(
                    grid,
                    |_| true,
                    |p| e.dist_to(p),
                    |p| f.dist_to(p),
                )
                .unwrap(),
            )
            .unwrap()
            .value;
            assert!(cap > prev, "capacity should grow as plates approach");
            prev = cap;
        }
        // larger region: same plates inside the disk vs whole-plane window
        let e = Polyline::open(vec![Point::new(-0.5, 0.0), Point::new(-0.3, 0.0)]).unwrap();
        let f = Polyline::open(vec![Point::new(0.3, 0.0), Point::new(0.5, 0.0)]).unwrap();
        let small = model_capacity(&e, &f, ModelDomain::Disk, 0.02).unwrap();
        let grid = GridSpec::covering(Point::new(-3.0, -3.0), Point::new(3.0, 3.0), 0.02);
        let big = conformal_capacity(
            &CapacityProblem::from_predicates(grid, |_| true, |p| e.dist_to(p), |p| f.dist_to(p))
                .unwrap(),
        )
        .unwrap()
        .value;
        assert!(big >= small, "capacity must grow with the region");
    }

    #[test]
    fn far_small_sets_bounded_by_ring_bound() {
        let e = circle_plate(0.05, 32);
        let f = {
            let pts = (0..64)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                    Point::new(2.0 * t.cos(), 2.0 * t.sin())
                })
                .collect();
            Polyline::closed(pts).unwrap()
        };
        let r = ring_capacity_bounds(&e, &f, 0.02, 0.1).unwrap();
        assert!(r.sigma < 0.5);
        assert!(r.capacity <= r.upper_bound * 1.05, "cap {} upper {}", r.capacity, r.upper_bound);
        assert!(r.capacity >= r.lower_bound * 0.95);
    }

    #[test]
    fn ring_bounds_sigma_large_uses_test_function() {
        let e = Polyline::open(vec![Point::new(-1.0, 0.0), Point::new(1.0, 0.0)]).unwrap();
        let f = circle_plate(3.0, 96);
        let r = ring_capacity_bounds(&e, &f, 0.04, 0.1).unwrap();
        assert!(r.sigma >= 0.5);
        assert_eq!(r.upper_source, "test-function");
        assert!(r.capacity <= r.upper_bound * 1.05);
    }

    #[test]
    fn ring_capacity_vanishes_with_sigma() {
        let f = circle_plate(3.0, 96);
        let mut prev = f64::INFINITY;
        for diam in [0.8, 0.4, 0.2] {
            let e = Polyline::open(vec![
                Point::new(-diam / 2.0, 0.0),
                Point::new(diam / 2.0, 0.0),
            ])
            .unwrap();
            let r = ring_capacity_bounds(&e, &f, 0.04, 0.1).unwrap();
            assert!(r.capacity < prev, "capacity should shrink with sigma");
            prev = r.capacity;
        }
    }

    #[test]
    fn loewner_battery_disk_and_exterior() {
        let mk = |a: f64, b: f64, r0: f64, r1: f64| -> Continuum {
            Continuum(
                Polyline::open(vec![
                    Point::new(r0 * a.cos(), r0 * a.sin()),
                    Point::new(r1 * a.cos() + 0.0 * b, r1 * a.sin()),
                ])
                .unwrap(),
            )
        };
        // two radial segments of the disk at angle pi
        let pairs = vec![
            (mk(0.0, 0.0, 0.2, 0.9), mk(std::f64::consts::PI, 0.0, 0.2, 0.9)),
            (mk(0.5, 0.0, 0.3, 0.8), mk(2.5, 0.0, 0.3, 0.8)),
        ];
        let rep = loewner_check(&pairs, ModelDomain::Disk, 0.02).unwrap();
        assert!(rep.pass, "c_min {}", rep.c_min);
        let mk_ext = |a: f64, r0: f64, r1: f64| -> Continuum {
            Continuum(
                Polyline::open(vec![
                    Point::new(r0 * a.cos(), r0 * a.sin()),
                    Point::new(r1 * a.cos(), r1 * a.sin()),
                ])
                .unwrap(),
            )
        };
        let pairs = vec![
            (mk_ext(0.0, 1.2, 2.5), mk_ext(std::f64::consts::PI, 1.2, 2.5)),
            (mk_ext(1.0, 1.5, 3.0), mk_ext(4.0, 1.5, 3.0)),
        ];
        let rep = loewner_check(&pairs, ModelDomain::Exterior, 0.04).unwrap();
        assert!(rep.pass, "exterior c_min {}", rep.c_min);
    }

    #[test]
    fn tiny_far_sets_vanish_together() {
        let e = Continuum(
            Polyline::open(vec![Point::new(-2.9, -2.9), Point::new(-2.8, -2.9)]).unwrap(),
        );
        let f = Continuum(
            Polyline::open(vec![Point::new(2.8, 2.9), Point::new(2.9, 2.9)]).unwrap(),
        );
        let rep = loewner_check(&[(e, f)], ModelDomain::Exterior, 0.05).unwrap();
        assert!(rep.cases[0].log_term < 0.05);
        assert!(rep.cases[0].capacity < 0.9);
    }

    #[test]
    fn invariance_identity_is_exact() {
        let d = shapes::disk(96, 0.01);
        let m = crate::conformal::build_disk_map(&d, 0.02).unwrap();
        let e = Polyline::open(vec![Point::new(-0.6, 0.0), Point::new(-0.2, 0.0)]).unwrap();
        let f = Polyline::open(vec![Point::new(0.2, 0.0), Point::new(0.6, 0.0)]).unwrap();
        let rep = invariance_check(&m, &e, &f, 0.02, 0.10).unwrap();
        assert!(
            rep.pass,
            "identity discrepancy {}",
            rep.discrepancy
        );
    }

    #[test]
    fn inner_capacity_battery() {
        let d = shapes::disk(64, 0.02);
        // two arcs close together
        let arc = |a0: f64, a1: f64, r: f64| -> Polyline {
            let pts = (0..=16)
                .map(|i| {
                    let t = a0 + (a1 - a0) * i as f64 / 16.0;
                    Point::new(r * t.cos(), r * t.sin())
                })
                .collect();
            Polyline::open(pts).unwrap()
        };
        let rep =
            inner_capacity_check(&arc(0.0, 1.0, 0.7), &arc(1.4, 2.4, 0.7), &d, 0.3, 0.04)
                .unwrap();
        assert!(rep.precondition_met, "cap {}", rep.capacity);
        assert!(rep.implied_constant < 5.0, "constant {}", rep.implied_constant);
        // tiny far sets: precondition fails
        let rep2 = inner_capacity_check(
            &arc(0.0, 0.05, 0.2),
            &arc(std::f64::consts::PI, std::f64::consts::PI + 0.05, 0.9),
            &d,
            1.2,
            0.04,
        )
        .unwrap();
        assert!(!rep2.precondition_met);
    }

    #[test]
    fn ulkodist_disk_by_chords() {
        let d = shapes::disk(96, 0.01);
        let em = crate::conformal::build_exterior_map(&d, 0.02).unwrap();
        // identity-ish map: chord geometry says delta1 = 1/16 works
        let delta1 = 1.0 / 16.0;
        let diam = d.diameter();
        let mut pairs = Vec::new();
        for i in 0..8 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 8.0;
            let p1 = Point::new((1.0 + 0.01) * t.cos(), (1.0 + 0.01) * t.sin());
            let t2 = t + 0.4 * delta1 * diam;
            let p2 = Point::new((1.0 + 0.02) * t2.cos(), (1.0 + 0.02) * t2.sin());
            pairs.push((p1, p2));
        }
        pairs.push((pairs[0].0, pairs[0].0)); // z1 = z2 trivially passes
        let rep = ulkodist_probe(&em, &pairs, delta1).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn length_transfer_disk_exterior() {
        let d = shapes::disk(96, 0.01);
        let em = crate::conformal::build_exterior_map(&d, 0.02).unwrap();
        // short boundary-to-boundary arc vs a long detour
        let t0 = 0.0f64;
        let t1 = 0.35f64;
        let z1 = Point::new(t0.cos(), t0.sin());
        let _z2 = Point::new(t1.cos(), t1.sin());
        let arc: Vec<Point> = (0..=64)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / 64.0;
                let r = 1.0 + 0.17 * (std::f64::consts::PI * i as f64 / 64.0).sin();
                Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let geod = Polyline::open(arc).unwrap();
        let detour: Vec<Point> = (0..=64)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / 64.0;
                let r = 1.0 + 1.8 * (std::f64::consts::PI * i as f64 / 64.0).sin();
                Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let comp = Polyline::open(detour).unwrap();
        let rep = length_transfer_check(&em, &geod, &comp, z1).unwrap();
        assert!(rep.pass);
        assert!(rep.length_ratio < 1.0, "geodesic should be shorter");
        // gamma = Gamma gives ratios ~ 1
        let rep2 = length_transfer_check(&em, &geod, &geod, z1).unwrap();
        assert!((rep2.length_ratio - 1.0).abs() < 0.25);
    }
}
