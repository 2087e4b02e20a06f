use serde::{Deserialize, Serialize};

use super::grid::{DomainGrid, Link};
use super::shape::Point;
use crate::error::{Error, Result};

/// Subset of the interior nodes of a grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    pub fn from_fn<F: Fn(usize) -> bool>(n: usize, f: F) -> Self {
        Self { bits: (0..n).map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn union_with(&mut self, other: &Mask) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    pub fn intersect(&self, other: &Mask) -> Mask {
        Mask { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect() }
    }

    pub fn minus(&self, other: &Mask) -> Mask {
        Mask { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && !*b).collect() }
    }

    pub fn complement(&self) -> Mask {
        Mask { bits: self.bits.iter().map(|a| !a).collect() }
    }

    pub fn is_subset(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

/// Hyperplane `{x : normal . x = offset}` with unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Point,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let mut n = normal;
        for c in n.iter_mut() {
            if c.abs() < 1e-15 {
                *c = 0.0;
            }
        }
        let len = super::shape::norm(&n);
        if !(len.is_finite() && len > 0.0 && offset.is_finite()) {
            return Err(Error::param("hyperplane needs a finite non-zero normal"));
        }
        Ok(Self { normal: [n[0] / len, n[1] / len, n[2] / len], offset })
    }

    /// Plane through `p` with the given normal.
    pub fn through(normal: Point, p: &Point) -> Result<Self> {
        let h = Self::new(normal, 0.0)?;
        let off = h.normal[0] * p[0] + h.normal[1] * p[1] + h.normal[2] * p[2];
        Ok(Self { offset: off, ..h })
    }

    pub fn flipped(&self) -> Self {
        Self { normal: [-self.normal[0], -self.normal[1], -self.normal[2]], offset: -self.offset }
    }

    pub fn signed(&self, p: &Point) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] - self.offset
    }

    pub fn reflect(&self, p: &Point) -> Point {
        let s = 2.0 * self.signed(p);
        [p[0] - s * self.normal[0], p[1] - s * self.normal[1], p[2] - s * self.normal[2]]
    }
}

/// Reflect a set of points.
pub fn reflect_points(points: &[Point], plane: &Hyperplane) -> Vec<Point> {
    points.iter().map(|p| plane.reflect(p)).collect()
}

/// Reflect the node positions of a mask lying on one side of the plane.
pub fn reflect_mask(grid: &DomainGrid, mask: &Mask, plane: &Hyperplane) -> Result<Vec<Point>> {
    let tol = 1e-9 * grid.h;
    let (mut pos, mut neg) = (false, false);
    for i in mask.iter() {
        let s = plane.signed(&grid.pos(i));
        pos |= s > tol;
        neg |= s < -tol;
    }
    if pos && neg {
        return Err(Error::StraddlesHyperplane);
    }
    Ok(mask.iter().map(|i| plane.reflect(&grid.pos(i))).collect())
}

/// Nodes nearest to the given points, with the number of points whose
/// nearest lattice point is not an interior node.
pub fn rasterize(grid: &DomainGrid, points: &[Point]) -> (Mask, usize) {
    let mut m = Mask::empty(grid.len());
    let mut missed = 0;
    for p in points {
        match grid.nearest_node(p) {
            Some(i) => m.set(i, true),
            None => missed += 1,
        }
    }
    (m, missed)
}

/// Component of the domain cut off by a hyperplane whose reflection is a
/// proper subset of the rest of the domain.
#[derive(Clone, Debug)]
pub struct SmallerSide {
    pub plane: Hyperplane,
    pub components: Vec<Mask>,
    pub union: Mask,
}

/// Containment slack for reflected points, as a fraction of the spacing.
pub const CONTAINMENT_SLACK: f64 = 1e-6;

/// Test whether the plane is an interior reflection hyperplane with smaller
/// side on the positive side of its normal.
///
/// A component C of the positive side qualifies when every node of C and every
/// boundary point attached to C reflects into the closed domain, and the
/// raster measure of the rest of the domain exceeds that of C by at least one
/// cell.
pub fn interior_reflection_test(grid: &DomainGrid, plane: &Hyperplane) -> Result<Option<SmallerSide>> {
    let n = grid.len();
    let tol = 1e-9 * grid.h;
    let signs: Vec<i8> = (0..n)
        .map(|i| {
            let s = plane.signed(&grid.pos(i));
            if s > tol {
                1
            } else if s < -tol {
                -1
            } else {
                0
            }
        })
        .collect();
    let npos = signs.iter().filter(|s| **s > 0).count();
    let nneg = signs.iter().filter(|s| **s < 0).count();
    if npos == 0 || nneg == 0 {
        return Err(Error::HyperplaneMissesDomain);
    }
    let non_on_plane = n - signs.iter().filter(|s| **s == 0).count();
    let positive = Mask::from_fn(n, |i| signs[i] > 0);
    let slack = CONTAINMENT_SLACK * grid.h;
    let mut accepted = Vec::new();
    for comp in grid.components(&positive) {
        let size = comp.count();
        let rest = non_on_plane - size;
        if rest < size + 1 {
            continue;
        }
        let mut ok = true;
        'outer: for i in comp.iter() {
            let q = plane.reflect(&grid.pos(i));
            if grid.sdf(&q) > slack {
                ok = false;
                break;
            }
            for l in &grid.links[i] {
                if let Link::Boundary(b) = *l {
                    let bp = &grid.boundary[b as usize];
                    if plane.signed(&bp.pos) <= 0.0 {
                        continue;
                    }
                    let q = plane.reflect(&bp.pos);
                    if grid.sdf(&q) > slack {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if ok {
            accepted.push(comp);
        }
    }
    if accepted.is_empty() {
        return Ok(None);
    }
    let mut union = Mask::empty(n);
    for c in &accepted {
        union.union_with(c);
    }
    Ok(Some(SmallerSide { plane: *plane, components: accepted, union }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainKind, DomainSpec};

    fn disk() -> DomainGrid {
        DomainGrid::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.05)).unwrap()
    }

    #[test]
    fn cap_of_disk_is_admitted() {
        let g = disk();
        let p = Hyperplane::new([1.0, 0.0, 0.0], 0.3).unwrap();
        let s = interior_reflection_test(&g, &p).unwrap().unwrap();
        assert_eq!(s.components.len(), 1);
        assert!(interior_reflection_test(&g, &p.flipped()).unwrap().is_none());
    }

    #[test]
    fn symmetry_line_is_not_proper() {
        let g = disk();
        let p = Hyperplane::new([1.0, 0.0, 0.0], 0.0).unwrap();
        assert!(interior_reflection_test(&g, &p).unwrap().is_none());
    }

    #[test]
    fn plane_outside_is_an_error() {
        let g = disk();
        let p = Hyperplane::new([1.0, 0.0, 0.0], 2.0).unwrap();
        assert!(matches!(interior_reflection_test(&g, &p), Err(Error::HyperplaneMissesDomain)));
    }

    #[test]
    fn straddling_mask_is_rejected() {
        let g = disk();
        let p = Hyperplane::new([1.0, 0.0, 0.0], 0.0).unwrap();
        assert!(matches!(reflect_mask(&g, &Mask::full(g.len()), &p), Err(Error::StraddlesHyperplane)));
    }
}
