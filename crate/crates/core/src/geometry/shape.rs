use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Domain description. Rectangles and boxes have a corner at the origin,
/// disks and balls are centered at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainKind {
    Rectangle { a: f64, b: f64 },
    Disk { radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
    DiskUnion { centers: Vec<[f64; 2]>, radii: Vec<f64> },
    Box { a: f64, b: f64, c: f64 },
    Ball { radius: f64 },
}

impl DomainKind {
    pub fn dim(&self) -> usize {
        match self {
            DomainKind::Box { .. } | DomainKind::Ball { .. } => 3,
            _ => 2,
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            DomainKind::Rectangle { .. }
            | DomainKind::Disk { .. }
            | DomainKind::Box { .. }
            | DomainKind::Ball { .. } => true,
            DomainKind::Polygon { vertices } => polygon_is_convex(vertices),
            DomainKind::DiskUnion { centers, radii } => {
                centers.len() == 1
                    || (1..centers.len()).all(|i| {
                        dist2(centers[i], centers[0]) < 1e-24 && (radii[i] - radii[0]).abs() < 1e-12
                    })
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self {
            DomainKind::Rectangle { a, b } => {
                pos(*a, "a")?;
                pos(*b, "b")
            }
            DomainKind::Disk { radius } | DomainKind::Ball { radius } => pos(*radius, "radius"),
            DomainKind::Box { a, b, c } => {
                pos(*a, "a")?;
                pos(*b, "b")?;
                pos(*c, "c")
            }
            DomainKind::Polygon { vertices } => validate_polygon(vertices),
            DomainKind::DiskUnion { centers, radii } => {
                if centers.is_empty() || centers.len() != radii.len() {
                    return Err(Error::InvalidDomain(
                        "disk union needs matching non-empty centers and radii".into(),
                    ));
                }
                for r in radii {
                    pos(*r, "radius")?;
                }
                if centers.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidDomain("non-finite disk center".into()));
                }
                Ok(())
            }
        }
    }

    /// Closed-form measure where available.
    pub fn exact_measure(&self) -> Option<f64> {
        match self {
            DomainKind::Rectangle { a, b } => Some(a * b),
            DomainKind::Disk { radius } => Some(PI * radius * radius),
            DomainKind::Box { a, b, c } => Some(a * b * c),
            DomainKind::Ball { radius } => Some(4.0 / 3.0 * PI * radius.powi(3)),
            DomainKind::Polygon { vertices } => Some(shoelace(vertices).abs()),
            DomainKind::DiskUnion { centers, radii } if centers.len() == 1 => {
                Some(PI * radii[0] * radii[0])
            }
            DomainKind::DiskUnion { .. } => None,
        }
    }

    /// Boundary length (2D) or area (3D) where available.
    pub fn exact_perimeter(&self) -> Option<f64> {
        match self {
            DomainKind::Rectangle { a, b } => Some(2.0 * (a + b)),
            DomainKind::Disk { radius } => Some(2.0 * PI * radius),
            DomainKind::Box { a, b, c } => Some(2.0 * (a * b + b * c + a * c)),
            DomainKind::Ball { radius } => Some(4.0 * PI * radius * radius),
            DomainKind::Polygon { vertices } => {
                let n = vertices.len();
                Some((0..n).map(|i| dist2(vertices[i], vertices[(i + 1) % n]).sqrt()).sum())
            }
            DomainKind::DiskUnion { radii, .. } => Some(radii.iter().map(|r| 2.0 * PI * r).sum()),
        }
    }

    /// Centroid where it is known in closed form.
    pub fn exact_centroid(&self) -> Option<Point> {
        match self {
            DomainKind::Rectangle { a, b } => Some([0.5 * a, 0.5 * b, 0.0]),
            DomainKind::Box { a, b, c } => Some([0.5 * a, 0.5 * b, 0.5 * c]),
            DomainKind::Disk { .. } | DomainKind::Ball { .. } => Some([0.0; 3]),
            DomainKind::Polygon { vertices } => {
                let area = shoelace(vertices);
                let n = vertices.len();
                let (mut cx, mut cy) = (0.0, 0.0);
                for i in 0..n {
                    let p = vertices[i];
                    let q = vertices[(i + 1) % n];
                    let w = p[0] * q[1] - q[0] * p[1];
                    cx += (p[0] + q[0]) * w;
                    cy += (p[1] + q[1]) * w;
                }
                Some([cx / (6.0 * area), cy / (6.0 * area), 0.0])
            }
            DomainKind::DiskUnion { .. } => None,
        }
    }

    /// Signed distance, negative inside. Exact for all kinds except disk
    /// unions, where the interior magnitude is a lower bound.
    pub fn sdf(&self, p: &Point) -> f64 {
        match self {
            DomainKind::Rectangle { a, b } => box_sdf(&[p[0], p[1]], &[*a, *b]),
            DomainKind::Box { a, b, c } => box_sdf(p, &[*a, *b, *c]),
            DomainKind::Disk { radius } => (p[0] * p[0] + p[1] * p[1]).sqrt() - radius,
            DomainKind::Ball { radius } => norm(p) - radius,
            DomainKind::Polygon { vertices } => {
                let q = [p[0], p[1]];
                let n = vertices.len();
                let d = (0..n)
                    .map(|i| seg_dist(q, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                if point_in_polygon(q, vertices) {
                    -d
                } else {
                    d
                }
            }
            DomainKind::DiskUnion { centers, radii } => centers
                .iter()
                .zip(radii)
                .map(|(c, r)| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Distance along +/- `axis` from an interior point to the first boundary
    /// crossing within `max`, and the outward normal there.
    pub fn exit(&self, p: &Point, axis: usize, sign: f64, max: f64) -> Option<(f64, Point)> {
        let mut d = [0.0; 3];
        d[axis] = sign;
        match self {
            DomainKind::Rectangle { a, b } => slab_exit(p, axis, sign, &[*a, *b, 0.0], max),
            DomainKind::Box { a, b, c } => slab_exit(p, axis, sign, &[*a, *b, *c], max),
            DomainKind::Disk { radius } | DomainKind::Ball { radius } => {
                let c = [0.0; 3];
                sphere_exit(p, &d, &c, *radius, max)
            }
            DomainKind::Polygon { vertices } => {
                let n = vertices.len();
                let mut best: Option<(f64, Point)> = None;
                for i in 0..n {
                    let u = vertices[i];
                    let v = vertices[(i + 1) % n];
                    if let Some(t) = ray_segment(p, &d, u, v) {
                        if t > 0.0 && t <= max * (1.0 + 1e-12) && best.is_none_or(|b| t < b.0) {
                            let e = [v[0] - u[0], v[1] - u[1]];
                            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                            let mut nrm = [e[1] / len, -e[0] / len, 0.0];
                            if shoelace(vertices) < 0.0 {
                                nrm = [-nrm[0], -nrm[1], 0.0];
                            }
                            best = Some((t, nrm));
                        }
                    }
                }
                best
            }
            DomainKind::DiskUnion { centers, radii } => {
                let mut intervals: Vec<(f64, f64, usize)> = Vec::new();
                for (k, (c, r)) in centers.iter().zip(radii).enumerate() {
                    let c3 = [c[0], c[1], 0.0];
                    if let Some((t0, t1)) = sphere_interval(p, &d, &c3, *r) {
                        intervals.push((t0, t1, k));
                    }
                }
                let mut reach = 0.0;
                let mut owner = usize::MAX;
                loop {
                    let mut grown = false;
                    for &(t0, t1, k) in &intervals {
                        if t0 <= reach + 1e-14 && t1 > reach + 1e-14 {
                            reach = t1;
                            owner = k;
                            grown = true;
                        }
                    }
                    if !grown {
                        break;
                    }
                }
                if owner == usize::MAX || reach > max * (1.0 + 1e-12) {
                    return None;
                }
                let c = centers[owner];
                let q = [p[0] + reach * d[0], p[1] + reach * d[1]];
                let nrm = [(q[0] - c[0]) / radii[owner], (q[1] - c[1]) / radii[owner], 0.0];
                Some((reach, nrm))
            }
        }
    }

    /// Support function: max of n.x over the closed domain.
    pub fn support(&self, n: &Point) -> f64 {
        match self {
            DomainKind::Rectangle { a, b } => n[0].max(0.0) * a + n[1].max(0.0) * b,
            DomainKind::Box { a, b, c } => {
                n[0].max(0.0) * a + n[1].max(0.0) * b + n[2].max(0.0) * c
            }
            DomainKind::Disk { radius } | DomainKind::Ball { radius } => radius * norm(n),
            DomainKind::Polygon { vertices } => vertices
                .iter()
                .map(|v| n[0] * v[0] + n[1] * v[1])
                .fold(f64::NEG_INFINITY, f64::max),
            DomainKind::DiskUnion { centers, radii } => centers
                .iter()
                .zip(radii)
                .map(|(c, r)| n[0] * c[0] + n[1] * c[1] + r * norm(n))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Axis-aligned bounding box.
    pub fn bbox(&self) -> (Point, Point) {
        match self {
            DomainKind::Rectangle { a, b } => ([0.0; 3], [*a, *b, 0.0]),
            DomainKind::Box { a, b, c } => ([0.0; 3], [*a, *b, *c]),
            DomainKind::Disk { radius } => ([-radius, -radius, 0.0], [*radius, *radius, 0.0]),
            DomainKind::Ball { radius } => ([-radius; 3], [*radius; 3]),
            DomainKind::Polygon { vertices } => {
                let mut lo = [f64::INFINITY, f64::INFINITY, 0.0];
                let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
            DomainKind::DiskUnion { centers, radii } => {
                let mut lo = [f64::INFINITY, f64::INFINITY, 0.0];
                let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0];
                for (c, r) in centers.iter().zip(radii) {
                    for k in 0..2 {
                        lo[k] = lo[k].min(c[k] - r);
                        hi[k] = hi[k].max(c[k] + r);
                    }
                }
                (lo, hi)
            }
        }
    }
}

pub(crate) fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub(crate) fn dist(p: &Point, q: &Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

fn dist2(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
}

fn box_sdf(p: &[f64], ext: &[f64]) -> f64 {
    let mut outside = 0.0;
    let mut inside = f64::NEG_INFINITY;
    for k in 0..ext.len() {
        let d = (-p[k]).max(p[k] - ext[k]);
        outside += d.max(0.0).powi(2);
        inside = inside.max(d);
    }
    if outside > 0.0 {
        outside.sqrt()
    } else {
        inside
    }
}

fn slab_exit(p: &Point, axis: usize, sign: f64, ext: &Point, max: f64) -> Option<(f64, Point)> {
    let t = if sign > 0.0 { ext[axis] - p[axis] } else { p[axis] };
    if t > 0.0 && t <= max * (1.0 + 1e-12) {
        let mut n = [0.0; 3];
        n[axis] = sign;
        Some((t, n))
    } else {
        None
    }
}

fn sphere_interval(p: &Point, d: &Point, c: &Point, r: f64) -> Option<(f64, f64)> {
    let q = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
    let b = q[0] * d[0] + q[1] * d[1] + q[2] * d[2];
    let cc = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] - r * r;
    let disc = b * b - cc;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

fn sphere_exit(p: &Point, d: &Point, c: &Point, r: f64, max: f64) -> Option<(f64, Point)> {
    let (_, t) = sphere_interval(p, d, c, r)?;
    if t > 0.0 && t <= max * (1.0 + 1e-12) {
        let q = [p[0] + t * d[0] - c[0], p[1] + t * d[1] - c[1], p[2] + t * d[2] - c[2]];
        Some((t, [q[0] / r, q[1] / r, q[2] / r]))
    } else {
        None
    }
}

fn ray_segment(p: &Point, d: &Point, u: [f64; 2], v: [f64; 2]) -> Option<f64> {
    let e = [v[0] - u[0], v[1] - u[1]];
    let den = d[0] * e[1] - d[1] * e[0];
    if den.abs() < 1e-300 {
        return None;
    }
    let w = [u[0] - p[0], u[1] - p[1]];
    let t = (w[0] * e[1] - w[1] * e[0]) / den;
    let s = (w[0] * d[1] - w[1] * d[0]) / den;
    if (-1e-12..=1.0 + 1e-12).contains(&s) {
        Some(t)
    } else {
        None
    }
}

fn seg_dist(p: [f64; 2], u: [f64; 2], v: [f64; 2]) -> f64 {
    let e = [v[0] - u[0], v[1] - u[1]];
    let w = [p[0] - u[0], p[1] - u[1]];
    let t = ((w[0] * e[0] + w[1] * e[1]) / (e[0] * e[0] + e[1] * e[1])).clamp(0.0, 1.0);
    dist2(p, [u[0] + t * e[0], u[1] + t * e[1]]).sqrt()
}

fn point_in_polygon(p: [f64; 2], vs: &[[f64; 2]]) -> bool {
    let n = vs.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vs[i], vs[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn shoelace(vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    0.5 * (0..n)
        .map(|i| {
            let p = vs[i];
            let q = vs[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn polygon_is_convex(vs: &[[f64; 2]]) -> bool {
    let n = vs.len();
    let mut sign = 0.0;
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let c = vs[(i + 2) % n];
        let cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cr.abs() < 1e-14 {
            continue;
        }
        if sign == 0.0 {
            sign = cr.signum();
        } else if cr.signum() != sign {
            return false;
        }
    }
    true
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn validate_polygon(vs: &[[f64; 2]]) -> Result<()> {
    let n = vs.len();
    if n < 3 {
        return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
    }
    if vs.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidDomain("non-finite polygon vertex".into()));
    }
    if shoelace(vs).abs() < 1e-14 {
        return Err(Error::InvalidDomain("degenerate polygon".into()));
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(vs[i], vs[(i + 1) % n], vs[j], vs[(j + 1) % n]) {
                return Err(Error::InvalidDomain("self-intersecting polygon".into()));
            }
        }
    }
    Ok(())
}
