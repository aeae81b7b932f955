//! The verification suite: every quantitative exit criterion of the
//! artifact, runnable through `sobext verify` and the `acceptance`
//! integration test. Each criterion prints one pass/fail line; empirical
//! constants are recorded in the details, never asserted against outside
//! values.

use serde::{Deserialize, Serialize};

use crate::capacity::{self, ModelDomain};
use crate::conditions;
use crate::conformal::{build_approximation_family, build_disk_map};
use crate::extension::{self, TriangleBoundaryData};
use crate::fields::GridSpec;
use crate::geometry::{dedup_points, shapes, Point, Polyline};
use crate::triangulation::{self, model_geodesic, GeodesicOptions};
use crate::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl CriterionResult {
    fn new(id: u32, name: &str, passed: bool, details: String) -> CriterionResult {
        CriterionResult {
            id,
            name: name.to_string(),
            passed,
            details,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:2} {:35} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details
        )
    }
}

/// Scope of a verification run: `quick` trims grid resolutions so the suite
/// stays test-friendly while exercising every criterion at its stated
/// tolerance structure; `full` runs the stated desk-scale resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyScope {
    Quick,
    Full,
}

pub fn run_all(seed: u64, scope: VerifyScope) -> Vec<CriterionResult> {
    let runners: Vec<(u32, &str, fn(u64, VerifyScope) -> Result<(bool, String)>)> = vec![
        (1, "jordan extension boundedness", c1_jordan_boundedness),
        (2, "linearity of the operator", c2_linearity),
        (3, "characterization consistency", c3_characterization),
        (4, "weighted-condition counterexample", c4_cusp),
        (5, "quasiconvexity oracle agreement", c5_quasiconvexity),
        (6, "conformal capacity", c6_capacity),
        (7, "auxiliary function", c7_aux),
        (8, "piecewise geodesics", c8_geodesics),
        (9, "cut points", c9_cut_points),
        (10, "gradient blow-up on the notch family", c10_blowup),
    ];
    let mut results = Vec::new();
    for (id, name, runner) in runners {
        let result = match runner(seed, scope) {
            Ok((passed, details)) => CriterionResult::new(id, name, passed, details),
            Err(e) => CriterionResult::new(id, name, false, format!("error: {e}")),
        };
        println!("{}", result.line());
        results.push(result);
    }
    results
}

struct JordanCase {
    name: &'static str,
    domain: crate::geometry::PolygonalDomain,
}

fn jordan_corpus() -> Vec<JordanCase> {
    vec![
        JordanCase {
            name: "square",
            domain: shapes::unit_square(0.01),
        },
        JordanCase {
            name: "l-shape",
            domain: shapes::l_shape(0.01),
        },
        JordanCase {
            name: "hexagon",
            domain: shapes::hexagon(0.01),
        },
    ]
}

const EXPRESSIONS: [&str; 3] = ["x", "x^2-y^2", "sin(3*x)*cos(2*y)"];

fn c1_jordan_boundedness(_seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    let (divs, ks) = match scope {
        VerifyScope::Full => (vec![128.0, 256.0], vec![6u32, 8u32]),
        VerifyScope::Quick => (vec![64.0, 128.0], vec![4u32, 6u32]),
    };
    let mut pass = true;
    let mut details = String::new();
    for case in jordan_corpus() {
        let d = &case.domain;
        let diam = d.diameter();
        let m = build_disk_map(d, diam / 96.0)?;
        let em = crate::conformal::build_exterior_map(d, diam / 96.0)?;
        let (k0, _) = triangulation::select_k0(&m, 0.5)?;
        for expr in EXPRESSIONS {
            let mut grad_ratios = Vec::new();
            let mut l1_ratios = Vec::new();
            for &k in &ks {
                let dec = triangulation::build_decomposition(&m, k0, k, 0.5)?;
                let opts = GeodesicOptions::for_domain(d);
                let tri = triangulation::build_triangles(
                    &m,
                    &dec,
                    &triangulation::GeodesicSource::Direct(&em),
                    &opts,
                )?;
                for &div in &divs {
                    let h = diam / div;
                    let u = extension::sample_on_domain(d, expr, h)?;
                    let ext = extension::extend_jordan(d, &u, &m, &dec, &tri, h)?;
                    if !(ext.report.grad_ratio.is_finite() && ext.report.l1_ratio.is_finite()) {
                        pass = false;
                    }
                    grad_ratios.push(ext.report.grad_ratio);
                    l1_ratios.push(ext.report.l1_ratio);
                }
            }
            let spread = |v: &[f64]| -> f64 {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(0.0f64, f64::max);
                hi / lo.max(1e-300)
            };
            let gs = spread(&grad_ratios);
            let ls = spread(&l1_ratios);
            if gs > 1.25 || ls > 1.25 {
                pass = false;
            }
            details.push_str(&format!(
                "{}/{expr}: grad {:.3} (x{:.2}), l1 {:.3} (x{:.2}); ",
                case.name, grad_ratios[0], gs, l1_ratios[0], ls
            ));
        }
    }
    Ok((pass, details))
}

fn c2_linearity(seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    use rand::{Rng, SeedableRng};
    let d = shapes::hexagon(0.01);
    let diam = d.diameter();
    let div = match scope {
        VerifyScope::Full => 96.0,
        VerifyScope::Quick => 64.0,
    };
    let h = diam / div;
    let pipe = extension::build_pipeline(&d, diam / 96.0, 5, 0.5, 6)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let mut worst: f64 = 0.0;
    for trial in 0..5 {
        let (e1, e2) = (
            EXPRESSIONS[trial % 3],
            EXPRESSIONS[(trial + 1) % 3],
        );
        let alpha = rng.gen_range(-2.0..2.0);
        let beta = rng.gen_range(-2.0..2.0);
        let u = extension::sample_on_domain(&d, e1, h)?;
        let v = extension::sample_on_domain(&d, e2, h)?;
        let combo = u.scale_add(alpha, &v, beta);
        let eu = extension::extend_jordan(&d, &u, &pipe.map, &pipe.dec, &pipe.tri, h)?;
        let ev = extension::extend_jordan(&d, &v, &pipe.map, &pipe.dec, &pipe.tri, h)?;
        let ec = extension::extend_jordan(&d, &combo, &pipe.map, &pipe.dec, &pipe.tri, h)?;
        for id in 0..ec.field.grid.len() {
            if ec.field.mask[id] {
                let lin = alpha * eu.field.values[id] + beta * ev.field.values[id];
                worst = worst.max((ec.field.values[id] - lin).abs());
            }
        }
    }
    Ok((worst < 1e-10, format!("max node defect {worst:.2e}")))
}

fn c3_characterization(seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    let div = match scope {
        VerifyScope::Full => 128.0,
        VerifyScope::Quick => 96.0,
    };
    let corpus: Vec<(&str, crate::geometry::PolygonalDomain, bool)> = vec![
        ("square", shapes::unit_square(0.01), true),
        ("hexagon", shapes::hexagon(0.01), true),
        ("l-shape", shapes::l_shape(0.01), true),
        ("disk", shapes::disk(64, 0.01), true),
        ("slit-disk", shapes::slit_disk(64, 0.01), false),
        ("slit-square", shapes::slit_square(0.01), false),
    ];
    let mut pass = true;
    let mut details = String::new();
    for (name, d, expect_sat) in corpus {
        let diam = d.diameter();
        let h = diam / div;
        let rep = conditions::check_curve_condition(&d, 24, h, 50.0, seed)?;
        let mut agree = rep.satisfied == expect_sat;
        if expect_sat {
            // stable extension ratios certify the positive side
            let pipe = extension::build_pipeline(&d, diam / 96.0, 5, 0.5, 6)?;
            let u = extension::sample_on_domain(&d, "x", h)?;
            let ext =
                extension::extend_jordan(&d, &u, &pipe.map, &pipe.dec, &pipe.tri, h)?;
            if !ext.report.grad_ratio.is_finite() {
                agree = false;
            }
        } else {
            // the necessity probe must emit a contradiction witness
            let pipe = extension::build_pipeline(&d, diam / 96.0, 4, 0.4, 10)?;
            let fam = build_approximation_family(&pipe.map, 10, diam / 48.0)?;
            let gamma = slit_probe_geodesic(&d, &pipe.map, &fam)?;
            let probe = extension::necessity_probe(
                &d,
                h,
                &pipe.map,
                &pipe.dec,
                &pipe.tri,
                &gamma,
                4.0 * h,
            )?;
            if !probe.contradiction_witness {
                agree = false;
            }
            details.push_str(&format!(
                "{name}: I~{:.3}, ratios {:?}; ",
                probe.i_estimate,
                probe
                    .covering_sweep
                    .iter()
                    .map(|c| (c.3 * 100.0).round() / 100.0)
                    .collect::<Vec<_>>()
            ));
        }
        if !agree {
            pass = false;
        }
        details.push_str(&format!("{name}:{} ", if agree { "ok" } else { "MISMATCH" }));
    }
    Ok((pass, details))
}

/// A piecewise geodesic running along the slit of a slit domain: labels of
/// two same-side points at one third and two thirds of the slit.
fn slit_probe_geodesic(
    d: &crate::geometry::PolygonalDomain,
    m: &crate::conformal::DiskMap,
    fam: &crate::conformal::ApproximationFamily,
) -> Result<triangulation::PiecewiseHyperbolicGeodesic> {
    let slit = &d.slits[0];
    let len = slit.length();
    let t1 = nearest_label(m, slit.point_at(0.3 * len));
    let t2 = nearest_label(m, slit.point_at(0.7 * len));
    let mut opts = GeodesicOptions::for_domain(d);
    opts.tol = 4e-3 * d.diameter();
    triangulation::piecewise_geodesic((t1, t2), m, fam, &opts)
}

fn nearest_label(m: &crate::conformal::DiskMap, target: Point) -> f64 {
    let samples = 4096;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..samples {
        let t = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
        let p = m.boundary_point(t);
        let dd = p.dist(target);
        if dd < best.0 {
            best = (dd, t);
        }
    }
    best.1
}

fn c4_cusp(seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    let cusp = shapes::parabola_cusp(192, 0.004);
    let ts: [f64; 3] = [0.2, 0.1, 0.05];
    let mut ratios = Vec::new();
    for t in ts {
        let h = (t * t / 8.0).min(0.004);
        let res = conditions::p_condition_pairs(
            &cusp,
            1.5,
            &[(Point::new(0.0, 0.0), Point::new(t, 0.0))],
            h,
        )?;
        ratios.push(res[0].ratio);
    }
    let growth1 = ratios[1] / ratios[0];
    let growth2 = ratios[2] / ratios[1];
    let curve_ok = {
        let pairs = match scope {
            VerifyScope::Full => 16,
            VerifyScope::Quick => 8,
        };
        conditions::check_curve_condition(&cusp, pairs, 0.01, 50.0, seed)?.satisfied
    };
    let pass = growth1 >= 1.3 && growth2 >= 1.3 && curve_ok;
    Ok((
        pass,
        format!(
            "ratios {ratios:.3?}, growth {growth1:.2}x/{growth2:.2}x, curve condition {}",
            if curve_ok { "holds" } else { "FAILS" }
        ),
    ))
}

fn c5_quasiconvexity(seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    use rand::{Rng, SeedableRng};
    let div = match scope {
        VerifyScope::Full => 512.0,
        VerifyScope::Quick => 256.0,
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x51);
    let mut pass = true;
    let mut worst_gap: f64 = 0.0;
    for poly_idx in 0..10u64 {
        let d = shapes::random_star_polygon(seed.wrapping_add(poly_idx), 10, 0.01);
        let diam = d.diameter();
        let h = diam / div;
        // shared pair set for both methods
        let mut pairs = Vec::new();
        while pairs.len() < 6 {
            let a = Point::new(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
            let b = Point::new(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
            if !d.contains(a) && !d.contains(b) && a.dist(b) > 0.3 {
                pairs.push((a, b));
            }
        }
        let region = crate::geometry::PathRegion::Complement(&d);
        let mut grid_c: f64 = 1.0;
        let mut oracle_c: f64 = 1.0;
        for (a, b) in &pairs {
            let grid_len = crate::geometry::inner_distance(*a, *b, &region, h)?.length;
            let oracle_len = visibility_oracle(&d, *a, *b);
            grid_c = grid_c.max(grid_len / a.dist(*b));
            oracle_c = oracle_c.max(oracle_len / a.dist(*b));
        }
        let gap = (grid_c / oracle_c - 1.0).abs();
        worst_gap = worst_gap.max(gap);
        if gap > 0.03 {
            pass = false;
        }
    }
    // disk complement estimate near pi/2 via antipodal pairs
    let d = shapes::disk(256, 0.01);
    let h = d.diameter() / div;
    let region = crate::geometry::PathRegion::Complement(&d);
    let eps = 2.5 * h;
    let r = crate::geometry::inner_distance(
        Point::new(1.0 + eps, 0.0),
        Point::new(-1.0 - eps, 0.0),
        &region,
        h,
    )?;
    let est = r.length / (2.0 + 2.0 * eps);
    let disk_gap = (est / std::f64::consts::FRAC_PI_2 - 1.0).abs();
    if disk_gap > 0.03 {
        pass = false;
    }
    Ok((
        pass,
        format!("worst polygon gap {worst_gap:.4}, disk estimate {est:.4} (pi/2 gap {disk_gap:.4})"),
    ))
}

/// Exact shortest path in the complement of a simple polygon via the
/// visibility graph over polygon vertices.
pub fn visibility_oracle(d: &crate::geometry::PolygonalDomain, a: Point, b: Point) -> f64 {
    let verts: Vec<Point> = d.outer.vertices().to_vec();
    let mut nodes = verts.clone();
    nodes.push(a);
    nodes.push(b);
    let n = nodes.len();
    let blocked = |p: Point, q: Point| -> bool {
        // a segment is admissible when it does not pass through the open
        // polygon: test interior points of the segment
        let steps = 64;
        for s in 1..steps {
            let z = p.lerp(q, s as f64 / steps as f64);
            if d.contains(z) && d.dist_to_boundary(z) > 1e-9 {
                return true;
            }
        }
        false
    };
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[n - 2] = 0.0;
    for _ in 0..n {
        let mut best = usize::MAX;
        for i in 0..n {
            if !done[i]
                && dist[i].is_finite()
                && (best == usize::MAX || dist[i] < dist[best])
            {
                best = i;
            }
        }
        if best == usize::MAX {
            break;
        }
        done[best] = true;
        if best == n - 1 {
            break;
        }
        for j in 0..n {
            if done[j] {
                continue;
            }
            let cand = dist[best] + nodes[best].dist(nodes[j]);
            if cand < dist[j] && !blocked(nodes[best], nodes[j]) {
                dist[j] = cand;
            }
        }
    }
    dist[n - 1]
}

fn c6_capacity(_seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    let div = match scope {
        VerifyScope::Full => 512.0,
        VerifyScope::Quick => 256.0,
    };
    // annulus within 5%
    let rr = std::f64::consts::E;
    let annulus_value = |h: f64| -> Result<f64> {
        let grid = GridSpec::covering(
            Point::new(-rr - 4.0 * h, -rr - 4.0 * h),
            Point::new(rr + 4.0 * h, rr + 4.0 * h),
            h,
        );
        let problem = capacity::CapacityProblem::from_predicates(
            grid,
            |p| (1.0 - h..=rr + h).contains(&p.dist(Point::new(0.0, 0.0))),
            |p| (p.dist(Point::new(0.0, 0.0)) - 1.0).abs(),
            |p| (p.dist(Point::new(0.0, 0.0)) - rr).abs(),
        )?;
        Ok(capacity::conformal_capacity(&problem)?.value)
    };
    let analytic = 2.0 * std::f64::consts::PI;
    let cap = annulus_value(2.0 * rr / div)?;
    let annulus_err = (cap - analytic).abs() / analytic;
    // conformal invariance on the square's disk map, decreasing under halving
    let d = shapes::unit_square(0.01);
    let m = build_disk_map(&d, 0.01)?;
    let e = Polyline::open(vec![Point::new(-0.6, 0.0), Point::new(-0.2, 0.0)]).unwrap();
    let f = Polyline::open(vec![Point::new(0.2, 0.0), Point::new(0.6, 0.0)]).unwrap();
    let coarse = capacity::invariance_check(&m, &e, &f, 0.04, 0.10)?;
    let fine = capacity::invariance_check(&m, &e, &f, 0.02, 0.10)?;
    let inv_ratio = fine.discrepancy / coarse.discrepancy.max(1e-12);
    // Loewner battery stability under refinement
    let battery = |h: f64| -> Result<f64> {
        let mk = |ang: f64, r0: f64, r1: f64| {
            capacity::Continuum(
                Polyline::open(vec![
                    Point::new(r0 * ang.cos(), r0 * ang.sin()),
                    Point::new(r1 * ang.cos(), r1 * ang.sin()),
                ])
                .unwrap(),
            )
        };
        let pairs = vec![
            (mk(0.0, 0.2, 0.9), mk(std::f64::consts::PI, 0.2, 0.9)),
            (mk(0.4, 0.3, 0.8), mk(2.4, 0.3, 0.8)),
            (mk(1.0, 0.1, 0.6), mk(4.2, 0.1, 0.6)),
        ];
        Ok(capacity::loewner_check(&pairs, ModelDomain::Disk, h)?.c_min)
    };
    let c_coarse = battery(0.04)?;
    let c_fine = battery(0.02)?;
    let loewner_stable = c_fine > 0.0
        && c_coarse > 0.0
        && (c_fine / c_coarse).max(c_coarse / c_fine) <= 1.2;
    let pass = annulus_err <= 0.05
        && fine.discrepancy <= 0.10
        && inv_ratio < 0.7
        && loewner_stable;
    Ok((
        pass,
        format!(
            "annulus err {:.3}%, invariance {:.3}->{:.3} (ratio {:.2}), loewner c {:.3}/{:.3}",
            100.0 * annulus_err,
            coarse.discrepancy,
            fine.discrepancy,
            inv_ratio,
            c_coarse,
            c_fine
        ),
    ))
}

fn c7_aux(seed: u64, _scope: VerifyScope) -> Result<(bool, String)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x7A);
    let mut pass = true;
    let mut worst_ratio: f64 = 1.0;
    let mut trace_misses = 0usize;
    for tri_idx in 0..20 {
        // random geodesic triangle in the disk model
        let base = rng.gen_range(0.0..std::f64::consts::TAU);
        let angles = [
            base,
            base + rng.gen_range(1.2..2.4),
            base + rng.gen_range(3.4..5.0),
        ];
        let pts: Vec<Point> = angles
            .iter()
            .map(|t| Point::new(0.9 * t.cos(), 0.9 * t.sin()))
            .collect();
        let mk_edge = |a: Point, b: Point| -> Polyline {
            let g = model_geodesic(a, b, ModelDomain::Disk).unwrap();
            Polyline::open(dedup_points(g.sample(24))).unwrap()
        };
        let e = [
            mk_edge(pts[0], pts[1]),
            mk_edge(pts[1], pts[2]),
            mk_edge(pts[2], pts[0]),
        ];
        let mut loop_pts = Vec::new();
        for edge in &e {
            loop_pts.extend(edge.vertices().iter().copied());
        }
        let mut loop_pts = dedup_points(loop_pts);
        if loop_pts[0].dist(*loop_pts.last().unwrap()) < 1e-12 {
            loop_pts.pop();
        }
        let boundary = Polyline::closed(loop_pts)?;
        let h = 0.02;
        for _ in 0..10 {
            let vals = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let data = TriangleBoundaryData {
                index: (tri_idx, 0),
                values: vals,
                lengths: [e[0].length(), e[1].length(), e[2].length()],
            };
            let aux = extension::aux_function(&boundary, [&e[0], &e[1], &e[2]], &data, h)?;
            let (lo, hi) = (
                vals.iter().copied().fold(f64::INFINITY, f64::min),
                vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            );
            let g = aux.field.grid;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let id = g.id(i, j);
                    if !aux.field.mask[id] {
                        continue;
                    }
                    let v = aux.field.values[id];
                    if !(lo - 1e-12..=hi + 1e-12).contains(&v) {
                        pass = false;
                    }
                    let p = g.point(i, j);
                    let near_vertex = pts.iter().any(|q| q.dist(p) < 3.0 * h);
                    if !near_vertex {
                        for (ei, edge) in e.iter().enumerate() {
                            if edge.dist_to(p) <= 0.3 * h
                                && (v - vals[ei]).abs() > 0.5 * (hi - lo) + 1e-9
                            {
                                trace_misses += 1;
                            }
                        }
                    }
                }
            }
        }
        // gradient-norm constant stability under h halving for one triple
        let data = TriangleBoundaryData {
            index: (tri_idx, 1),
            values: [0.0, 0.0, 1.0],
            lengths: [e[0].length(), e[1].length(), e[2].length()],
        };
        let mass = |h: f64| -> Result<f64> {
            let aux = extension::aux_function(&boundary, [&e[0], &e[1], &e[2]], &data, h)?;
            let (gx, gy) =
                crate::fields::gradient(&aux.field, &crate::fields::StencilWalls::None);
            let mut m = 0.0;
            for id in 0..aux.field.grid.len() {
                if aux.field.mask[id] {
                    m += gx[id].hypot(gy[id]) * h * h;
                }
            }
            Ok(m)
        };
        let bound: f64 = e[0].length().min(e[1].length()) + e[0].length().min(e[2].length());
        let c1 = mass(h)? / bound;
        let c2 = mass(h / 2.0)? / bound;
        let ratio = (c1 / c2).max(c2 / c1);
        worst_ratio = worst_ratio.max(ratio);
        if ratio > 1.25 {
            pass = false;
        }
    }
    if trace_misses > 0 {
        pass = false;
    }
    Ok((
        pass,
        format!("trace misses {trace_misses}, worst norm-constant ratio {worst_ratio:.3}"),
    ))
}

fn c8_geodesics(seed: u64, _scope: VerifyScope) -> Result<(bool, String)> {
    let mut pass = true;
    let mut details = String::new();
    for (name, d) in [
        ("disk", shapes::disk(96, 0.01)),
        ("square", shapes::unit_square(0.01)),
    ] {
        let diam = d.diameter();
        let m = build_disk_map(&d, diam / 96.0)?;
        let fam = build_approximation_family(&m, 10, diam / 48.0)?;
        let opts = GeodesicOptions::for_domain(&d);
        let labels = (0.3, 0.9);
        let g = triangulation::piecewise_geodesic(labels, &m, &fam, &opts)?;
        // length increments Cauchy by n_max = 10
        let len_steps: Vec<f64> = g
            .convergence_log
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .collect();
        let cauchy = g.converged
            && len_steps
                .last()
                .map(|s| *s < opts.tol)
                .unwrap_or(false);
        // subcurve constant stable under family deepening
        let c_full = triangulation::subcurve_constant(&g.polyline, 100, seed);
        let fam8 = build_approximation_family(&m, 8, diam / 48.0)?;
        let g8 = triangulation::piecewise_geodesic(labels, &m, &fam8, &opts)?;
        let c_8 = triangulation::subcurve_constant(&g8.polyline, 100, seed);
        let stable = (c_full / c_8).max(c_8 / c_full) <= 1.2;
        // odd-subsequence rebuild within 2 tol
        let mut odd_opts = opts;
        odd_opts.odd_levels_only = true;
        let g_odd = triangulation::piecewise_geodesic(labels, &m, &fam, &odd_opts)?;
        let sup = g.polyline.sup_distance(&g_odd.polyline, 64);
        let unique_ok = sup < 2.0 * opts.tol;
        if !(cauchy && stable && unique_ok) {
            pass = false;
        }
        details.push_str(&format!(
            "{name}: cauchy {} c_rec {:.2}/{:.2} odd-sup {:.2e}; ",
            cauchy, c_full, c_8, sup
        ));
    }
    Ok((pass, details))
}

fn c9_cut_points(_seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    let samples = match scope {
        VerifyScope::Full => 8192,
        VerifyScope::Quick => 4096,
    };
    let mut pass = true;
    let mut details = String::new();
    // slit disk: within 5% of the slit length
    let d = shapes::slit_disk(96, 0.01);
    let m = build_disk_map(&d, 0.02)?;
    let cp = triangulation::detect_cut_points(&m, None, samples, 0.015)?;
    let slit_err = (cp.h1_estimate - 1.0).abs();
    if slit_err > 0.05 {
        pass = false;
    }
    details.push_str(&format!("slit H1 {:.4}; ", cp.h1_estimate));
    // Jordan corpus: empty
    for case in jordan_corpus() {
        let m = build_disk_map(&case.domain, case.domain.diameter() / 96.0)?;
        let cp = triangulation::detect_cut_points(&m, None, samples, 0.015)?;
        if cp.h1_estimate > 0.02 * case.domain.diameter() {
            pass = false;
            details.push_str(&format!("{} H1 {:.4}! ", case.name, cp.h1_estimate));
        }
    }
    // notch family: monotone in w with the collapsed end detected
    let mut values = Vec::new();
    for w in [0.12, 0.05, 0.015] {
        let d = shapes::notch_square(w, 0.6, 0.01);
        let m = build_disk_map(&d, 0.02)?;
        let cp = triangulation::detect_cut_points(&m, None, samples, 0.03)?;
        values.push(cp.h1_estimate);
    }
    let monotone = values[0] <= values[1] + 0.02 && values[1] <= values[2] + 0.02;
    if !monotone || values[2] < 0.3 {
        pass = false;
    }
    details.push_str(&format!("notch H1 {values:.3?}"));
    Ok((pass, details))
}

fn c10_blowup(_seed: u64, scope: VerifyScope) -> Result<(bool, String)> {
    let div = match scope {
        VerifyScope::Full => 128.0,
        VerifyScope::Quick => 96.0,
    };
    let mut ratios = Vec::new();
    for w in [0.1, 0.05, 0.025] {
        let d = shapes::notch_square(w, 0.6, 0.01);
        let diam = d.diameter();
        let h = diam / div;
        let pipe = extension::build_pipeline(&d, diam / 96.0, 5, 0.5, 6)?;
        let fam = build_approximation_family(&pipe.map, 9, diam / 48.0)?;
        // geodesic across the notch near its closed end
        let t1 = nearest_label(&pipe.map, Point::new(0.5 - w / 2.0, 0.55));
        let t2 = nearest_label(&pipe.map, Point::new(0.5 + w / 2.0, 0.55));
        let mut opts = GeodesicOptions::for_domain(&d);
        opts.tol = 4e-3 * diam;
        let gamma = triangulation::piecewise_geodesic((t1, t2), &pipe.map, &fam, &opts)?;
        let probe = extension::necessity_probe(
            &d,
            h,
            &pipe.map,
            &pipe.dec,
            &pipe.tri,
            &gamma,
            4.0 * h,
        )?;
        ratios.push(probe.blowup_ratio);
    }
    let monotone = ratios[0] < ratios[1] && ratios[1] < ratios[2];
    let total = ratios[2] / ratios[0].max(1e-300);
    let pass = monotone && total >= 1.5;
    Ok((
        pass,
        format!("blow-up ratios {ratios:.4?}, total growth {total:.2}x"),
    ))
}
