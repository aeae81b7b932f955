//! Grid scalar fields over masked rectangular windows: sampling of analytic
//! expressions, L1/W^{1,1} norms with coverage-weighted quadrature,
//! Poincaré-inequality checks and line-restriction total-variation checks.

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, PolygonalDomain};
use crate::{Error, Result};

pub mod expr;

/// Uniform node grid: node (i, j) sits at (x0 + i h, y0 + j h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl GridSpec {
    pub fn covering(lo: Point, hi: Point, h: f64) -> GridSpec {
        GridSpec {
            x0: lo.x,
            y0: lo.y,
            nx: ((hi.x - lo.x) / h).ceil() as usize + 1,
            ny: ((hi.y - lo.y) / h).ceil() as usize + 1,
            h,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    pub fn id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, id: usize) -> (usize, usize) {
        (id % self.nx, id / self.nx)
    }

    pub fn nearest(&self, p: Point) -> Option<(usize, usize)> {
        let i = ((p.x - self.x0) / self.h).round();
        let j = ((p.y - self.y0) / self.h).round();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            None
        } else {
            Some((i as usize, j as usize))
        }
    }
}

/// Grid-sampled scalar function with a region mask and per-node quadrature
/// weights (cell coverage fractions in [0, 1]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub coverage: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: GridSpec, c: f64) -> ScalarField {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
            mask: vec![true; grid.len()],
            coverage: vec![1.0; grid.len()],
        }
    }

    /// Sample `f` on the nodes; mask and coverage from the domain, with the
    /// coverage fraction of each node cell estimated by 4x4 supersampling.
    pub fn from_fn_on_domain<F: Fn(Point) -> f64>(
        grid: GridSpec,
        d: &PolygonalDomain,
        f: F,
    ) -> ScalarField {
        let mut values = vec![0.0; grid.len()];
        let mut mask = vec![false; grid.len()];
        let mut coverage = vec![0.0; grid.len()];
        let h = grid.h;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let id = grid.id(i, j);
                let p = grid.point(i, j);
                let near = d.dist_to_boundary(p) <= 0.75 * h * std::f64::consts::SQRT_2;
                let inside = d.contains(p);
                if !inside && !near {
                    continue;
                }
                let cov = if !near {
                    1.0
                } else {
                    let mut hits = 0u32;
                    for a in 0..4 {
                        for b in 0..4 {
                            let q = Point::new(
                                p.x + h * ((a as f64 + 0.5) / 4.0 - 0.5),
                                p.y + h * ((b as f64 + 0.5) / 4.0 - 0.5),
                            );
                            if d.contains(q) {
                                hits += 1;
                            }
                        }
                    }
                    hits as f64 / 16.0
                };
                if cov > 0.0 || inside {
                    mask[id] = true;
                    coverage[id] = if inside { cov.max(1.0 / 16.0) } else { cov };
                    values[id] = f(p);
                }
            }
        }
        ScalarField {
            grid,
            values,
            mask,
            coverage,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.id(i, j)]
    }

    /// Bilinear interpolation of masked node values; falls back to the
    /// nearest masked node when a corner is unmasked.
    pub fn interpolate(&self, p: Point) -> Option<f64> {
        let g = &self.grid;
        let fx = (p.x - g.x0) / g.h;
        let fy = (p.y - g.y0) / g.h;
        if fx < 0.0 || fy < 0.0 || fx > (g.nx - 1) as f64 || fy > (g.ny - 1) as f64 {
            return None;
        }
        let i = (fx.floor() as usize).min(g.nx - 2);
        let j = (fy.floor() as usize).min(g.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let ids = [
            g.id(i, j),
            g.id(i + 1, j),
            g.id(i, j + 1),
            g.id(i + 1, j + 1),
        ];
        let ws = [
            (1.0 - tx) * (1.0 - ty),
            tx * (1.0 - ty),
            (1.0 - tx) * ty,
            tx * ty,
        ];
        let mut num = 0.0;
        let mut den = 0.0;
        for (id, w) in ids.iter().zip(ws) {
            if self.mask[*id] {
                num += self.values[*id] * w;
                den += w;
            }
        }
        if den > 0.0 {
            Some(num / den)
        } else {
            None
        }
    }

    pub fn scale_add(&self, alpha: f64, other: &ScalarField, beta: f64) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(a, b)| *a && *b)
            .collect();
        ScalarField {
            grid: self.grid,
            values,
            mask,
            coverage: self.coverage.clone(),
        }
    }
}

/// Norms of a field over its mask. `w11 = l1 + grad_l1` exactly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormReport {
    pub l1: f64,
    pub grad_l1: f64,
    pub w11: f64,
    pub mask_area: f64,
}

/// Extra wall information for gradient stencils: differences across slit
/// walls are suppressed (the two sides are distinct boundary pieces).
pub enum StencilWalls<'a> {
    None,
    Domain(&'a PolygonalDomain),
}

impl StencilWalls<'_> {
    fn blocked(&self, a: Point, b: Point) -> bool {
        match self {
            StencilWalls::None => false,
            StencilWalls::Domain(d) => d.segment_crosses_slit(a, b),
        }
    }
}

/// Central-difference gradient with one-sided stencils at mask edges and
/// across blocked walls. Returns (d/dx, d/dy) node arrays.
pub fn gradient(f: &ScalarField, walls: &StencilWalls) -> (Vec<f64>, Vec<f64>) {
    let g = &f.grid;
    let h = g.h;
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    let ok = |i: i64, j: i64, from: Point| -> Option<usize> {
        if i < 0 || j < 0 || i >= g.nx as i64 || j >= g.ny as i64 {
            return None;
        }
        let id = g.id(i as usize, j as usize);
        if !f.mask[id] {
            return None;
        }
        let to = g.point(i as usize, j as usize);
        if walls.blocked(from, to) {
            return None;
        }
        Some(id)
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let id = g.id(i, j);
            if !f.mask[id] {
                continue;
            }
            let p = g.point(i, j);
            let xm = ok(i as i64 - 1, j as i64, p);
            let xp = ok(i as i64 + 1, j as i64, p);
            gx[id] = match (xm, xp) {
                (Some(m), Some(pl)) => (f.values[pl] - f.values[m]) / (2.0 * h),
                (None, Some(pl)) => (f.values[pl] - f.values[id]) / h,
                (Some(m), None) => (f.values[id] - f.values[m]) / h,
                (None, None) => 0.0,
            };
            let ym = ok(i as i64, j as i64 - 1, p);
            let yp = ok(i as i64, j as i64 + 1, p);
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

/// L1 and W^{1,1} norms over the mask with coverage-weighted node quadrature.
pub fn w11_norm(f: &ScalarField, walls: &StencilWalls) -> Result<NormReport> {
    let cell = f.grid.h * f.grid.h;
    if !f.mask.iter().any(|m| *m) {
        return Err(Error::EmptyRegion("w11_norm: empty mask".into()));
    }
    let (gx, gy) = gradient(f, walls);
    let mut l1 = 0.0;
    let mut grad_l1 = 0.0;
    let mut area = 0.0;
    for id in 0..f.grid.len() {
        if !f.mask[id] {
            continue;
        }
        let w = cell * f.coverage[id];
        l1 += f.values[id].abs() * w;
        grad_l1 += gx[id].hypot(gy[id]) * w;
        area += w;
    }
    Ok(NormReport {
        l1,
        grad_l1,
        w11: l1 + grad_l1,
        mask_area: area,
    })
}

/// Sample an analytic expression over a grid (full mask, unit coverage).
pub fn sample_expression(text: &str, grid: GridSpec) -> Result<ScalarField> {
    let e = expr::parse(text)?;
    let mut values = vec![0.0; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.point(i, j);
            let v = e.eval(p.x, p.y);
            if !v.is_finite() {
                return Err(Error::Degenerate(format!(
                    "expression singular at ({:.3},{:.3})",
                    p.x, p.y
                )));
            }
            values[grid.id(i, j)] = v;
        }
    }
    Ok(ScalarField {
        grid,
        values,
        mask: vec![true; grid.len()],
        coverage: vec![1.0; grid.len()],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareReport {
    pub mean_oscillation: f64,
    pub mean_gradient: f64,
    pub diam: f64,
    pub c_emp: f64,
    pub pass: bool,
}

/// Empirical (1,1)-Poincaré constant of `f` over the sub-mask `region`:
/// mean |v - mean(v)| over diam * mean |grad v|. Zero-gradient fields pass
/// vacuously.
pub fn poincare_check(
    f: &ScalarField,
    region: &[bool],
    diam: f64,
    ceiling: f64,
    walls: &StencilWalls,
) -> Result<PoincareReport> {
    let cell = f.grid.h * f.grid.h;
    let mut area = 0.0;
    let mut mean = 0.0;
    for id in 0..f.grid.len() {
        if region[id] && f.mask[id] {
            let w = cell * f.coverage[id];
            mean += f.values[id] * w;
            area += w;
        }
    }
    if area == 0.0 {
        return Err(Error::EmptyRegion("poincare_check: empty region".into()));
    }
    mean /= area;
    let (gx, gy) = gradient(f, walls);
    let mut osc = 0.0;
    let mut grad = 0.0;
    for id in 0..f.grid.len() {
        if region[id] && f.mask[id] {
            let w = cell * f.coverage[id];
            osc += (f.values[id] - mean).abs() * w;
            grad += gx[id].hypot(gy[id]) * w;
        }
    }
    osc /= area;
    grad /= area;
    let c_emp = if grad > 0.0 { osc / (diam * grad) } else { 0.0 };
    Ok(PoincareReport {
        mean_oscillation: osc,
        mean_gradient: grad,
        diam,
        c_emp,
        pass: c_emp <= ceiling,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineDirection {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineTvReport {
    pub lines_checked: usize,
    pub lines_passed: usize,
    pub pass_fraction: f64,
    pub flagged_lines: Vec<usize>,
}

/// Checks that along sampled grid lines the total variation of node values is
/// controlled by the integral of the directional derivative. A numeric
/// surrogate for absolute continuity on lines.
pub fn line_tv_check(
    f: &ScalarField,
    direction: LineDirection,
    lines: usize,
    walls: &StencilWalls,
) -> LineTvReport {
    let g = &f.grid;
    let (gx, gy) = gradient(f, walls);
    let count = match direction {
        LineDirection::Horizontal => g.ny,
        LineDirection::Vertical => g.nx,
    };
    let step = (count / lines.max(1)).max(1);
    let mut checked = 0;
    let mut passed = 0;
    let mut flagged = Vec::new();
    let mut range = 0.0f64;
    for id in 0..g.len() {
        if f.mask[id] {
            range = range.max(f.values[id].abs());
        }
    }
    let mut line_idx = 0;
    while line_idx < count {
        let mut tv = 0.0;
        let mut integral = 0.0;
        let mut nodes = 0usize;
        let n_along = match direction {
            LineDirection::Horizontal => g.nx,
            LineDirection::Vertical => g.ny,
        };
        for t in 0..n_along {
            let (i, j) = match direction {
                LineDirection::Horizontal => (t, line_idx),
                LineDirection::Vertical => (line_idx, t),
            };
            let id = g.id(i, j);
            if !f.mask[id] {
                continue;
            }
            nodes += 1;
            let deriv = match direction {
                LineDirection::Horizontal => gx[id],
                LineDirection::Vertical => gy[id],
            };
            integral += deriv.abs() * g.h;
            if t + 1 < n_along {
                let (i2, j2) = match direction {
                    LineDirection::Horizontal => (t + 1, j),
                    LineDirection::Vertical => (i, t + 1),
                };
                let id2 = g.id(i2, j2);
                if f.mask[id2] {
                    // raw node variation: a genuine W^{1,1} restriction is
                    // absolutely continuous, so jumps that the (wall-aware)
                    // derivative cannot account for flag the line
                    tv += (f.values[id2] - f.values[id]).abs();
                }
            }
        }
        if nodes >= 4 {
            checked += 1;
            let tol = 0.04 * range + 4.0 * g.h * (integral / (nodes as f64 * g.h)).max(1.0);
            if tv <= 1.05 * integral + tol {
                passed += 1;
            } else {
                flagged.push(line_idx);
            }
        }
        line_idx += step;
    }
    LineTvReport {
        lines_checked: checked,
        lines_passed: passed,
        pass_fraction: if checked > 0 {
            passed as f64 / checked as f64
        } else {
            1.0
        },
        flagged_lines: flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn grid01(h: f64) -> GridSpec {
        GridSpec::covering(Point::new(0.0, 0.0), Point::new(1.0, 1.0), h)
    }

    #[test]
    fn constant_field_norms() {
        let d = shapes::unit_square(0.01);
        let f = ScalarField::from_fn_on_domain(grid01(0.01), &d, |_| 1.0);
        let r = w11_norm(&f, &StencilWalls::None).unwrap();
        assert!((r.l1 - 1.0).abs() < 0.02, "l1 {}", r.l1);
        assert!(r.grad_l1 < 1e-12);
        assert_eq!(r.w11, r.l1 + r.grad_l1);
    }

    #[test]
    fn linear_field_norms() {
        let h = 0.01;
        let d = shapes::unit_square(h);
        let f = ScalarField::from_fn_on_domain(grid01(h), &d, |p| p.x);
        let r = w11_norm(&f, &StencilWalls::None).unwrap();
        assert!((r.l1 - 0.5).abs() <= 2.0 * h, "l1 {}", r.l1);
        assert!((r.grad_l1 - 1.0).abs() <= 2.0 * h, "grad {}", r.grad_l1);
        assert!((r.w11 - 1.5).abs() <= 4.0 * h);
    }

    #[test]
    fn refinement_halves_error() {
        let d = shapes::unit_square(0.01);
        let mut errs = Vec::new();
        for h in [0.02, 0.01] {
            let f = ScalarField::from_fn_on_domain(grid01(h), &d, |p| p.x * p.x);
            let r = w11_norm(&f, &StencilWalls::None).unwrap();
            // analytic: l1 = 1/3, grad_l1 = 1
            errs.push(((r.l1 - 1.0 / 3.0).abs() + (r.grad_l1 - 1.0).abs()).max(1e-9));
        }
        assert!(
            errs[1] < errs[0] * 0.8,
            "errors did not shrink: {errs:?}"
        );
    }

    #[test]
    fn sample_expression_pointwise() {
        let g = grid01(0.05);
        let f = sample_expression("sin(3*x)*cos(2*y)", g).unwrap();
        let mut s = 7u64;
        for _ in 0..20 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            let i = (s >> 33) as usize % g.nx;
            let j = (s >> 13) as usize % g.ny;
            let p = g.point(i, j);
            assert_eq!(f.get(i, j), (3.0 * p.x).sin() * (2.0 * p.y).cos());
        }
    }

    #[test]
    fn norm_homogeneity_and_triangle() {
        let h = 0.02;
        let d = shapes::unit_square(h);
        let f = ScalarField::from_fn_on_domain(grid01(h), &d, |p| p.x - 0.3 * p.y);
        let g2 = ScalarField::from_fn_on_domain(grid01(h), &d, |p| (2.0 * p.y).sin());
        let rf = w11_norm(&f, &StencilWalls::None).unwrap();
        let scaled = f.scale_add(-2.5, &f, 0.0);
        let rs = w11_norm(&scaled, &StencilWalls::None).unwrap();
        assert!((rs.w11 - 2.5 * rf.w11).abs() < 1e-9 * (1.0 + rs.w11));
        let sum = f.scale_add(1.0, &g2, 1.0);
        let rsum = w11_norm(&sum, &StencilWalls::None).unwrap();
        let rg = w11_norm(&g2, &StencilWalls::None).unwrap();
        assert!(rsum.w11 <= rf.w11 + rg.w11 + 4.0 * h * rsum.mask_area + 1e-9);
    }

    #[test]
    fn poincare_constant_field_vacuous() {
        let d = shapes::unit_square(0.02);
        let f = ScalarField::from_fn_on_domain(grid01(0.02), &d, |_| 3.25);
        let region = f.mask.clone();
        let r = poincare_check(&f, &region, 2f64.sqrt(), 10.0, &StencilWalls::None).unwrap();
        assert!(r.pass && r.c_emp == 0.0);
    }

    #[test]
    fn poincare_linear_on_disk() {
        // u = x on the unit disk: mean 0, mean |x| = 4/(3 pi) * ... computed
        // against the analytic value: (1/area) Int |x| dA = 4/(3 pi) over unit
        // disk; |grad| = 1; diam = 2 => C = 2/(3 pi) / ... just check against
        // the directly integrated oracle within 5%.
        let h = 0.01;
        let d = shapes::disk(256, h);
        let g = GridSpec::covering(Point::new(-1.0, -1.0), Point::new(1.0, 1.0), h);
        let f = ScalarField::from_fn_on_domain(g, &d, |p| p.x);
        let region = f.mask.clone();
        let r = poincare_check(&f, &region, 2.0, 10.0, &StencilWalls::None).unwrap();
        let oracle = 4.0 / (3.0 * std::f64::consts::PI) / 2.0;
        assert!(
            (r.c_emp - oracle).abs() < 0.05 * oracle,
            "c_emp {} oracle {oracle}",
            r.c_emp
        );
    }

    #[test]
    fn line_tv_smooth_passes_step_flagged() {
        let g = grid01(0.01);
        let smooth = sample_expression("sin(3*x)*cos(2*y)", g).unwrap();
        let r = line_tv_check(&smooth, LineDirection::Horizontal, 32, &StencilWalls::None);
        assert_eq!(r.pass_fraction, 1.0);
        // step across a slit wall: the wall-aware derivative cannot account
        // for the jump, so exactly the lines crossing the slit get flagged
        let d = shapes::slit_square(0.01);
        let mut step = ScalarField::from_fn_on_domain(g, &d, |p| if p.x > 0.5 { 10.0 } else { 0.0 });
        step.coverage.iter_mut().for_each(|c| *c = 1.0);
        let walls = StencilWalls::Domain(&d);
        let r = line_tv_check(&step, LineDirection::Horizontal, 32, &walls);
        assert!(r.pass_fraction < 0.9, "slit-crossing lines should fail: {}", r.pass_fraction);
        for line in &r.flagged_lines {
            let y = g.point(0, *line).y;
            assert!(y < 0.62, "flagged line at y={y} should cross the slit");
        }
    }

    #[test]
    fn expression_parse_errors() {
        assert!(sample_expression("sin(", grid01(0.5)).is_err());
        assert!(sample_expression("1/(x-x)", grid01(0.5)).is_err());
    }
}
