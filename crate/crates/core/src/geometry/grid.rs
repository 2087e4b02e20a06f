use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::mask::Mask;
use super::shape::{DomainKind, Point};
use crate::error::{Error, Result};

/// Smallest admissible ghost-point fraction.
pub const THETA_MIN: f64 = 1e-3;
/// Minimum number of interior nodes.
pub const MIN_NODES: usize = 100;
/// Nodes closer than this fraction of a cell to the boundary count as boundary nodes.
const ON_BOUNDARY: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub domain: DomainKind,
    pub resolution: f64,
}

impl DomainSpec {
    pub fn new(domain: DomainKind, resolution: f64) -> Self {
        Self { domain, resolution }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// Neighbor of an interior node in one lattice direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    Node(u32),
    Boundary(u32),
    None,
}

/// Intersection of a lattice edge with the boundary.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint {
    pub pos: Point,
    pub normal: Point,
    /// Distance from the owning node as a fraction of the spacing.
    pub theta: f64,
    pub node: u32,
    pub dir: u8,
}

/// Vertex lattice `i * h` restricted to the domain interior.
#[derive(Clone, Debug)]
pub struct DomainGrid {
    pub spec: DomainSpec,
    pub dim: usize,
    pub h: f64,
    pub nodes: Vec<[i32; 3]>,
    pub links: Vec<[Link; 6]>,
    pub boundary: Vec<BoundaryPoint>,
    /// Dual-cell measure of each node.
    pub weights: Vec<f64>,
    lo: [i32; 3],
    ext: [usize; 3],
    index: Vec<u32>,
}

pub(crate) const DIRS: [[i32; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

impl DomainGrid {
    pub fn new(spec: &DomainSpec) -> Result<Self> {
        spec.domain.validate()?;
        let h = spec.resolution;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidDomain(format!("resolution must be positive, got {h}")));
        }
        let dim = spec.dim();
        let shape = &spec.domain;
        let (blo, bhi) = shape.bbox();
        let mut lo = [0i32; 3];
        let mut ext = [1usize; 3];
        for k in 0..dim {
            lo[k] = (blo[k] / h).floor() as i32 - 1;
            let hi = (bhi[k] / h).ceil() as i32 + 1;
            ext[k] = (hi - lo[k] + 1) as usize;
        }
        let total = ext[0]
            .checked_mul(ext[1])
            .and_then(|v| v.checked_mul(ext[2]))
            .filter(|&v| v < 400_000_000)
            .ok_or_else(|| Error::InvalidDomain("resolution too fine for the lattice".into()))?;
        let mut index = vec![u32::MAX; total];
        let mut nodes = Vec::new();
        for kk in 0..ext[2] {
            for jj in 0..ext[1] {
                for ii in 0..ext[0] {
                    let ijk = [lo[0] + ii as i32, lo[1] + jj as i32, lo[2] + kk as i32];
                    let p = Self::pos_of(&ijk, h, dim);
                    if shape.sdf(&p) < -ON_BOUNDARY * h {
                        index[ii + ext[0] * (jj + ext[1] * kk)] = nodes.len() as u32;
                        nodes.push(ijk);
                    }
                }
            }
        }
        if nodes.len() < MIN_NODES {
            return Err(Error::EmptyInterior { nodes: nodes.len(), required: MIN_NODES });
        }
        let mut grid = DomainGrid {
            spec: spec.clone(),
            dim,
            h,
            nodes,
            links: Vec::new(),
            boundary: Vec::new(),
            weights: Vec::new(),
            lo,
            ext,
            index,
        };
        grid.build_links();
        let comps = grid.components(&Mask::full(grid.len())).len();
        if comps > 1 {
            return Err(Error::Disconnected { components: comps });
        }
        grid.build_weights();
        Ok(grid)
    }

    fn pos_of(ijk: &[i32; 3], h: f64, dim: usize) -> Point {
        let z = if dim == 3 { ijk[2] as f64 * h } else { 0.0 };
        [ijk[0] as f64 * h, ijk[1] as f64 * h, z]
    }

    fn build_links(&mut self) {
        let n = self.nodes.len();
        let nd = 2 * self.dim;
        let mut links = vec![[Link::None; 6]; n];
        let mut boundary = Vec::new();
        for i in 0..n {
            let ijk = self.nodes[i];
            let p = self.pos(i);
            for (d, dir) in DIRS.iter().enumerate().take(nd) {
                let q = [ijk[0] + dir[0], ijk[1] + dir[1], ijk[2] + dir[2]];
                if let Some(j) = self.lookup(&q) {
                    links[i][d] = Link::Node(j as u32);
                } else {
                    let axis = d / 2;
                    let sign = dir[axis] as f64;
                    let (t, normal) = match self.spec.domain.exit(&p, axis, sign, self.h) {
                        Some(v) => v,
                        None => {
                            let mut nrm = [0.0; 3];
                            nrm[axis] = sign;
                            (self.h, nrm)
                        }
                    };
                    let theta = (t / self.h).clamp(THETA_MIN, 1.0);
                    let mut pos = p;
                    pos[axis] += sign * t.min(self.h);
                    links[i][d] = Link::Boundary(boundary.len() as u32);
                    boundary.push(BoundaryPoint { pos, normal, theta, node: i as u32, dir: d as u8 });
                }
            }
        }
        self.links = links;
        self.boundary = boundary;
    }

    fn build_weights(&mut self) {
        let h = self.h;
        self.weights = (0..self.len())
            .map(|i| {
                let mut w = 1.0;
                for axis in 0..self.dim {
                    let mut len = 0.0;
                    for d in [2 * axis, 2 * axis + 1] {
                        len += match self.links[i][d] {
                            Link::Node(_) => 0.5 * h,
                            Link::Boundary(b) => self.boundary[b as usize].theta * h,
                            Link::None => 0.0,
                        };
                    }
                    w *= len;
                }
                w
            })
            .collect();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cell volume h^d.
    pub fn cell(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn pos(&self, i: usize) -> Point {
        Self::pos_of(&self.nodes[i], self.h, self.dim)
    }

    pub fn lookup(&self, ijk: &[i32; 3]) -> Option<usize> {
        let mut off = 0usize;
        let mut stride = 1usize;
        for k in 0..3 {
            let r = ijk[k] - self.lo[k];
            if r < 0 || r as usize >= self.ext[k] {
                return None;
            }
            off += r as usize * stride;
            stride *= self.ext[k];
        }
        match self.index[off] {
            u32::MAX => None,
            v => Some(v as usize),
        }
    }

    /// Lattice index nearest to a point.
    pub fn nearest_index(&self, p: &Point) -> [i32; 3] {
        let mut ijk = [0i32; 3];
        for k in 0..self.dim {
            ijk[k] = (p[k] / self.h).round() as i32;
        }
        ijk
    }

    /// Interior node nearest to a point, if that lattice point is interior.
    pub fn nearest_node(&self, p: &Point) -> Option<usize> {
        self.lookup(&self.nearest_index(p))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.spec.domain.sdf(p) < 0.0
    }

    pub fn sdf(&self, p: &Point) -> f64 {
        self.spec.domain.sdf(p)
    }

    /// Raster measure from the dual-cell weights.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Measure-weighted centroid of the raster.
    pub fn centroid(&self) -> Point {
        let mut c = [0.0; 3];
        let mut m = 0.0;
        for i in 0..self.len() {
            let p = self.pos(i);
            let w = self.weights[i];
            for k in 0..3 {
                c[k] += w * p[k];
            }
            m += w;
        }
        [c[0] / m, c[1] / m, c[2] / m]
    }

    /// Connected components of a node subset under lattice adjacency.
    pub fn components(&self, mask: &Mask) -> Vec<Mask> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if !mask.get(s) || label[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut comp = Mask::empty(n);
            label[s] = id;
            queue.push_back(s);
            while let Some(i) = queue.pop_front() {
                comp.set(i, true);
                for l in &self.links[i] {
                    if let Link::Node(j) = *l {
                        let j = j as usize;
                        if mask.get(j) && label[j] == usize::MAX {
                            label[j] = id;
                            queue.push_back(j);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Nodes inside the domain at distance at least `margin` from the boundary.
    pub fn interior_with_margin(&self, margin: f64) -> Mask {
        let mut m = Mask::empty(self.len());
        for i in 0..self.len() {
            if self.sdf(&self.pos(i)) <= -margin {
                m.set(i, true);
            }
        }
        m
    }

    /// Multilinear interpolation of a nodal field, with boundary values
    /// supplied by `ghost` at lattice points outside the interior.
    pub fn interpolate<F: Fn(&Point) -> f64>(&self, values: &[f64], p: &Point, ghost: F) -> f64 {
        let h = self.h;
        let mut base = [0i32; 3];
        let mut frac = [0.0; 3];
        for k in 0..self.dim {
            let s = p[k] / h;
            let f = s.floor();
            base[k] = f as i32;
            frac[k] = s - f;
        }
        let corners = 1usize << self.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut ijk = base;
            let mut w = 1.0;
            for k in 0..self.dim {
                if (c >> k) & 1 == 1 {
                    ijk[k] += 1;
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w == 0.0 {
                continue;
            }
            let v = match self.lookup(&ijk) {
                Some(i) => values[i],
                None => ghost(&Self::pos_of(&ijk, h, self.dim)),
            };
            acc += w * v;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_measure_is_exact() {
        let g = DomainGrid::new(&DomainSpec::new(DomainKind::Rectangle { a: 1.0, b: 1.0 }, 0.05)).unwrap();
        assert_eq!(g.len(), 19 * 19);
        assert!((g.measure() - 1.0).abs() < 1e-12);
        assert!(g.boundary.iter().all(|b| (b.theta - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_domains() {
        let tiny = DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.5);
        assert!(matches!(DomainGrid::new(&tiny), Err(Error::EmptyInterior { .. })));
        let far = DomainSpec::new(
            DomainKind::DiskUnion { centers: vec![[-3.0, 0.0], [3.0, 0.0]], radii: vec![1.0, 1.0] },
            0.05,
        );
        assert!(matches!(DomainGrid::new(&far), Err(Error::Disconnected { components: 2 })));
    }

    #[test]
    fn disk_boundary_points_lie_on_circle() {
        let g = DomainGrid::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.03)).unwrap();
        for b in &g.boundary {
            let r = (b.pos[0].powi(2) + b.pos[1].powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }
}
