use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::grid::DomainGrid;
use super::mask::{interior_reflection_test, Hyperplane, Mask};
use super::shape::Point;
use crate::error::{Error, Result};

/// Sampling of the hyperplane family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasConfig {
    /// Number of normal directions on the circle (2D). In 3D the 26 lattice
    /// directions are always used.
    pub angles: usize,
    /// Offsets per direction.
    pub offsets: usize,
}

impl AtlasConfig {
    pub fn default_for(dim: usize) -> Self {
        if dim == 3 {
            Self { angles: 26, offsets: 64 }
        } else {
            Self { angles: 64, offsets: 128 }
        }
    }
}

/// Unit normals sampled by the atlas.
pub fn atlas_directions(dim: usize, angles: usize) -> Vec<Point> {
    if dim == 3 {
        let mut out = Vec::new();
        for a in -1i32..=1 {
            for b in -1i32..=1 {
                for c in -1i32..=1 {
                    if (a, b, c) != (0, 0, 0) {
                        let v = [a as f64, b as f64, c as f64];
                        let l = super::shape::norm(&v);
                        out.push([v[0] / l, v[1] / l, v[2] / l]);
                    }
                }
            }
        }
        out
    } else {
        (0..angles)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / angles as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AtlasPlane {
    pub direction: usize,
    pub offset_index: usize,
    pub plane: Hyperplane,
    /// Plane meets the raster.
    pub meets: bool,
    /// Interior reflection hyperplane with smaller side along the normal.
    pub admitted: bool,
    /// Admitted and every parallel plane further along the normal is admitted.
    pub sliding: bool,
    pub cap_nodes: usize,
}

/// Sampled interior reflection hyperplanes and the unions of their smaller sides.
#[derive(Clone, Debug)]
pub struct ReflectionAtlas {
    pub config: AtlasConfig,
    pub planes: Vec<AtlasPlane>,
    /// Union of all smaller sides.
    pub sigma: Mask,
    /// Union of the smaller sides of sliding-admissible planes.
    pub sigma_prime: Mask,
}

impl ReflectionAtlas {
    /// Nodes outside the relevant union: sigma for convex domains, sigma' otherwise.
    pub fn admissible(&self, convex: bool) -> Mask {
        if convex {
            self.sigma.complement()
        } else {
            self.sigma_prime.complement()
        }
    }

    pub fn admitted(&self) -> impl Iterator<Item = &AtlasPlane> {
        self.planes.iter().filter(|p| p.admitted)
    }
}

pub fn reflection_atlas(grid: &DomainGrid, config: &AtlasConfig) -> Result<ReflectionAtlas> {
    if config.offsets < 2 || (grid.dim == 2 && config.angles < 4) {
        return Err(Error::param("atlas needs at least 4 angles and 2 offsets"));
    }
    let dirs = atlas_directions(grid.dim, config.angles);
    let n = grid.len();
    let per_dir: Vec<(Vec<AtlasPlane>, Mask, Mask)> = dirs
        .par_iter()
        .enumerate()
        .map(|(d, nrm)| {
            let hi = grid.spec.domain.support(nrm);
            let lo = -grid.spec.domain.support(&[-nrm[0], -nrm[1], -nrm[2]]);
            let step = (hi - lo) / config.offsets as f64;
            let mut sigma = Mask::empty(n);
            let mut sigma_p = Mask::empty(n);
            let mut planes = Vec::with_capacity(config.offsets);
            let mut all_above = true;
            for k in (0..config.offsets).rev() {
                let off = lo + (k as f64 + 0.5) * step;
                let plane = Hyperplane::new(*nrm, off).expect("unit normal");
                let mut rec = AtlasPlane {
                    direction: d,
                    offset_index: k,
                    plane,
                    meets: true,
                    admitted: false,
                    sliding: false,
                    cap_nodes: 0,
                };
                match interior_reflection_test(grid, &plane) {
                    Err(_) => rec.meets = false,
                    Ok(Some(side)) => {
                        rec.admitted = true;
                        rec.sliding = all_above;
                        rec.cap_nodes = side.union.count();
                        sigma.union_with(&side.union);
                        if all_above {
                            sigma_p.union_with(&side.union);
                        }
                    }
                    Ok(None) => all_above = false,
                }
                planes.push(rec);
            }
            planes.reverse();
            (planes, sigma, sigma_p)
        })
        .collect();
    let mut sigma = Mask::empty(n);
    let mut sigma_prime = Mask::empty(n);
    let mut planes = Vec::new();
    for (p, s, sp) in per_dir {
        planes.extend(p);
        sigma.union_with(&s);
        sigma_prime.union_with(&sp);
    }
    Ok(ReflectionAtlas { config: *config, planes, sigma, sigma_prime })
}
