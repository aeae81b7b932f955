//! Generators for the domain corpus used in tests, the verification suite and
//! the guide: squares, disks, L-shapes, hexagons, slit disks, notch families
//! and the parabola-cusp domain.

use super::{Point, Polyline, PolygonalDomain};

/// Unit square [0,1]^2.
pub fn unit_square(h: f64) -> PolygonalDomain {
    PolygonalDomain::new(
        Polyline::closed(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap(),
        vec![],
        h,
    )
    .unwrap()
}

/// Regular n-gon approximation of the unit disk.
pub fn disk(n: usize, h: f64) -> PolygonalDomain {
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            Point::new(t.cos(), t.sin())
        })
        .collect();
    PolygonalDomain::new(Polyline::closed(pts).unwrap(), vec![], h).unwrap()
}

/// Regular hexagon of circumradius 1.
pub fn hexagon(h: f64) -> PolygonalDomain {
    disk_like(6, 1.0, h)
}

fn disk_like(n: usize, r: f64, h: f64) -> PolygonalDomain {
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    PolygonalDomain::new(Polyline::closed(pts).unwrap(), vec![], h).unwrap()
}

/// L-shape: [0,2]^2 minus the closed upper-right quadrant [1,2]x[1,2].
pub fn l_shape(h: f64) -> PolygonalDomain {
    PolygonalDomain::new(
        Polyline::closed(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ])
        .unwrap(),
        vec![],
        h,
    )
    .unwrap()
}

/// The slit disk: unit disk minus the radial segment {(x, 0) | 0 <= x <= 1}.
/// The slit attaches to the circle at (1, 0).
pub fn slit_disk(n: usize, h: f64) -> PolygonalDomain {
    let outer = disk(n, h).outer;
    let slit = Polyline::open(vec![Point::new(1.0, 0.0), Point::new(0.0, 0.0)]).unwrap();
    PolygonalDomain::new(outer, vec![slit], h).unwrap()
}

/// Unit square with a radial slit from the midpoint of the bottom edge.
pub fn slit_square(h: f64) -> PolygonalDomain {
    let outer = unit_square(h).outer;
    let slit = Polyline::open(vec![Point::new(0.5, 0.0), Point::new(0.5, 0.6)]).unwrap();
    PolygonalDomain::new(outer, vec![slit], h).unwrap()
}

/// Notch family: the unit square with a rectangular indentation of width `w`
/// and depth `depth` cut upward from the bottom edge at x = 0.5. As `w` tends
/// to zero the indentation collapses onto a slit of length `depth`.
pub fn notch_square(w: f64, depth: f64, h: f64) -> PolygonalDomain {
    assert!(w > 0.0 && w < 0.5 && depth > 0.0 && depth < 1.0);
    PolygonalDomain::new(
        Polyline::closed(vec![
            Point::new(0.0, 0.0),
            Point::new(0.5 - w / 2.0, 0.0),
            Point::new(0.5 - w / 2.0, depth),
            Point::new(0.5 + w / 2.0, depth),
            Point::new(0.5 + w / 2.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap(),
        vec![],
        h,
    )
    .unwrap()
}

/// Parabola-cusp domain: the unit disk minus the two-sided cusp spike
/// { x >= 0, |y| <= x^2 }. The spike pinches the complement onto the
/// positive real axis with width ~ x^2, the geometry driving the weighted
/// curve-condition counterexample.
pub fn parabola_cusp(n: usize, h: f64) -> PolygonalDomain {
    // spike walls meet the circle where x^2 + x^4 = 1
    let x2 = (5.0f64.sqrt() - 1.0) / 2.0;
    let xc = x2.sqrt();
    let m = n.max(96);
    let mut pts: Vec<Point> = Vec::new();
    // circle from the upper junction counterclockwise around to the lower
    // junction (the long way, over the top)
    let a_up = (x2).atan2(xc);
    let a_dn = (-x2).atan2(xc) + 2.0 * std::f64::consts::PI;
    let arcs = n.max(96);
    for i in 0..=arcs {
        let t = a_up + (a_dn - a_up) * i as f64 / arcs as f64;
        pts.push(Point::new(t.cos(), t.sin()));
    }
    // lower spike wall inward to the tip (sampling graded toward the tip)
    for i in 1..m {
        let f = 1.0 - i as f64 / m as f64;
        let x = xc * f * f;
        pts.push(Point::new(x, -x * x));
    }
    pts.push(Point::new(0.0, 0.0));
    // upper spike wall back out to the circle
    for i in 1..m {
        let f = i as f64 / m as f64;
        let x = xc * f * f;
        pts.push(Point::new(x, x * x));
    }
    PolygonalDomain::new(Polyline::closed(pts).unwrap(), vec![], h).unwrap()
}

/// Random simple star-shaped polygon around the origin (for oracle batteries).
pub fn random_star_polygon(seed: u64, n: usize, h: f64) -> PolygonalDomain {
    let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut rng = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let r = 0.5 + 0.5 * rng();
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    PolygonalDomain::new(Polyline::closed(pts).unwrap(), vec![], h).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_domains_validate() {
        unit_square(0.01).validate().unwrap();
        disk(64, 0.01).validate().unwrap();
        hexagon(0.01).validate().unwrap();
        l_shape(0.01).validate().unwrap();
        slit_disk(64, 0.01).validate().unwrap();
        slit_square(0.01).validate().unwrap();
        notch_square(0.05, 0.6, 0.01).validate().unwrap();
        parabola_cusp(128, 0.005).validate().unwrap();
        for seed in 0..5 {
            random_star_polygon(seed, 12, 0.01).validate().unwrap();
        }
    }

    #[test]
    fn notch_collapses_to_slit() {
        let d = notch_square(0.01, 0.6, 0.005);
        assert!(d.contains(Point::new(0.2, 0.5)));
        assert!(!d.contains(Point::new(0.5, 0.3)));
    }
}
