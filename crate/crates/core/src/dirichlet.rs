//! Dirichlet eigenpairs of the Laplacian: closed forms on rectangles, boxes
//! and the radial sector of the ball, lattice eigenvectors elsewhere.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DomainGrid, DomainKind, DomainSpec, Point};
use crate::linalg::{dense_eigen, lanczos_smallest, Solver};

/// Relative gap below which eigenvalues are grouped into one level.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Node count below which the dense eigensolver is used.
pub const DENSE_MAX: usize = 3000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    AnalyticRectangle,
    AnalyticBox,
    /// Radially symmetric modes of the ball only.
    RadialBall,
    NumericGrid,
}

/// A distinct eigenvalue, its multiplicity and the index of its first mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Level {
    pub lambda: f64,
    pub multiplicity: usize,
    pub start: usize,
}

#[derive(Clone, Debug)]
enum Modes {
    Sine { ext: Vec<f64>, index: Vec<[u32; 3]> },
    Radial { radius: f64 },
    Grid { vectors: Vec<Vec<f64>> },
}

/// First `M` Dirichlet eigenpairs in ascending order.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub source: BasisSource,
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    pub levels: Vec<Level>,
    modes: Modes,
}

/// Evaluator of one eigenfunction.
#[derive(Clone, Copy)]
pub struct Eigenfunction<'a> {
    basis: &'a EigenBasis,
    pub index: usize,
}

impl Eigenfunction<'_> {
    pub fn eval(&self, grid: &DomainGrid, p: &Point) -> f64 {
        self.basis.eval(grid, self.index, p)
    }
}

/// Sine-product modes `(m, n[, l])` of an axis-aligned box with
/// eigenvalue at most `cap`, ascending.
pub(crate) fn sine_modes_below(ext: &[f64], cap: f64) -> Vec<(f64, [u32; 3])> {
    let mut out = Vec::new();
    let w: Vec<f64> = ext.iter().map(|e| (PI / e).powi(2)).collect();
    let mut idx = [1u32, 1, 1];
    let d = ext.len();
    loop {
        let lam: f64 = (0..d).map(|k| w[k] * (idx[k] as f64).powi(2)).sum();
        if lam <= cap {
            out.push((lam, idx));
            idx[0] += 1;
            continue;
        }
        let mut k = 0;
        loop {
            if idx[k] == 1 {
                k += 1;
                if k == d {
                    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    return out;
                }
                continue;
            }
            idx[k] = 1;
            if k + 1 == d {
                out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                return out;
            }
            idx[k + 1] += 1;
            break;
        }
    }
}

/// Value of the sine-product mode at `p` on the box `[0, ext]`.
pub(crate) fn sine_mode(ext: &[f64], idx: &[u32; 3], p: &Point) -> f64 {
    let mut v = 1.0;
    for (k, e) in ext.iter().enumerate() {
        v *= (2.0 / e).sqrt() * (PI * idx[k] as f64 * p[k] / e).sin();
    }
    v
}

fn group_levels(vals: &[f64]) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match levels.last_mut() {
            Some(l) if (v - l.lambda).abs() < DEGENERACY_TOL * v => l.multiplicity += 1,
            _ => levels.push(Level { lambda: v, multiplicity: 1, start: i }),
        }
    }
    levels
}

fn box_extents(kind: &DomainKind) -> Option<Vec<f64>> {
    match *kind {
        DomainKind::Rectangle { a, b } => Some(vec![a, b]),
        DomainKind::Box { a, b, c } => Some(vec![a, b, c]),
        _ => None,
    }
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Whether the modes span the whole Dirichlet space up to truncation.
    pub fn is_complete(&self) -> bool {
        self.source != BasisSource::RadialBall
    }

    pub fn lambda0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn function(&self, k: usize) -> Eigenfunction<'_> {
        Eigenfunction { basis: self, index: k }
    }

    /// Box extents for the analytic sources.
    pub(crate) fn sine_extents(&self) -> Option<&[f64]> {
        match &self.modes {
            Modes::Sine { ext, .. } => Some(ext),
            _ => None,
        }
    }

    pub(crate) fn ball_radius(&self) -> Option<f64> {
        match self.modes {
            Modes::Radial { radius } => Some(radius),
            _ => None,
        }
    }

    /// Nodal vectors of the numeric source, normalized in the uniform
    /// lattice inner product.
    pub fn grid_vectors(&self) -> Option<&[Vec<f64>]> {
        match &self.modes {
            Modes::Grid { vectors } => Some(vectors),
            _ => None,
        }
    }

    /// Value of mode `k` at `p`; numeric modes are interpolated with zero
    /// boundary values.
    pub fn eval(&self, grid: &DomainGrid, k: usize, p: &Point) -> f64 {
        match &self.modes {
            Modes::Sine { ext, index } => sine_mode(ext, &index[k], p),
            Modes::Radial { radius } => {
                let r = crate::geometry::norm(p);
                let kr = (k + 1) as f64 * PI / radius;
                let c = 1.0 / (2.0 * PI * radius).sqrt();
                if r < 1e-12 * radius {
                    c * kr
                } else {
                    c * (kr * r).sin() / r
                }
            }
            Modes::Grid { vectors } => grid.interpolate(&vectors[k], p, |_| 0.0),
        }
    }

    /// Mode `k` sampled at the interior nodes.
    pub fn values(&self, grid: &DomainGrid, k: usize) -> Vec<f64> {
        match &self.modes {
            Modes::Grid { vectors } => vectors[k].clone(),
            _ => (0..grid.len()).map(|i| self.eval(grid, k, &grid.pos(i))).collect(),
        }
    }

    /// Counting function: number of returned eigenvalues not exceeding `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.eigenvalues.iter().filter(|v| **v <= lambda).count()
    }
}

/// Principal eigenvalue and its positive eigenfunction.
pub fn lambda0(basis: &EigenBasis) -> (f64, Eigenfunction<'_>) {
    (basis.lambda0(), basis.function(0))
}

/// First `m` Dirichlet eigenpairs of the domain.
pub fn dirichlet_basis(grid: &DomainGrid, m: usize) -> Result<EigenBasis> {
    if m == 0 {
        return Err(Error::param("basis size must be at least 1"));
    }
    if let Some(ext) = box_extents(&grid.spec.domain) {
        let mut cap = ext.iter().map(|e| (PI / e).powi(2)).sum::<f64>() * 2.0;
        let modes = loop {
            let modes = sine_modes_below(&ext, cap);
            if modes.len() > m {
                break modes;
            }
            cap *= 2.0;
        };
        let mut modes = modes;
        modes.truncate(m);
        let eigenvalues: Vec<f64> = modes.iter().map(|p| p.0).collect();
        let source = if ext.len() == 2 { BasisSource::AnalyticRectangle } else { BasisSource::AnalyticBox };
        return Ok(EigenBasis {
            source,
            dim: ext.len(),
            levels: group_levels(&eigenvalues),
            eigenvalues,
            modes: Modes::Sine { ext, index: modes.into_iter().map(|p| p.1).collect() },
        });
    }
    if let DomainKind::Ball { radius } = grid.spec.domain {
        let eigenvalues: Vec<f64> = (1..=m).map(|n| (n as f64 * PI / radius).powi(2)).collect();
        return Ok(EigenBasis {
            source: BasisSource::RadialBall,
            dim: 3,
            levels: group_levels(&eigenvalues),
            eigenvalues,
            modes: Modes::Radial { radius },
        });
    }
    numeric_basis(grid, m, None)
}

/// Lattice eigenpairs of the ghost-point Laplacian.
pub fn numeric_basis(grid: &DomainGrid, m: usize, solver: Option<&Solver>) -> Result<EigenBasis> {
    if grid.dim != 2 {
        return Err(Error::Unsupported("numeric eigenbases are limited to planar domains".into()));
    }
    if m == 0 {
        return Err(Error::param("basis size must be at least 1"));
    }
    let n = grid.len();
    if n < 10 * m {
        return Err(Error::param(format!("{m} eigenpairs need at least {} interior nodes, grid has {n}", 10 * m)));
    }
    let owned;
    let solver = match solver {
        Some(s) => s,
        None => {
            owned = Solver::new(grid)?;
            &owned
        }
    };
    let (vals, mut vecs) = if n < DENSE_MAX {
        dense_eigen(&solver.op, m)?
    } else {
        lanczos_smallest(n, m, 1e-12, |x: &mut [f64]| solver.apply_inverse(x))?
    };
    let scale = 1.0 / grid.cell().sqrt();
    for v in vecs.iter_mut() {
        let s: f64 = v.iter().sum();
        let sign = if s < 0.0 { -scale } else { scale };
        v.iter_mut().for_each(|x| *x *= sign);
    }
    if vals.len() > 1 && vals[1] - vals[0] < DEGENERACY_TOL * vals[1] {
        return Err(Error::not_converged("eigenbasis", "principal eigenvalue is not simple"));
    }
    if vecs[0].iter().any(|x| *x <= 0.0) {
        return Err(Error::not_converged("eigenbasis", "ground state changes sign"));
    }
    Ok(EigenBasis {
        source: BasisSource::NumericGrid,
        dim: grid.dim,
        levels: group_levels(&vals),
        eigenvalues: vals,
        modes: Modes::Grid { vectors: vecs },
    })
}

const MAGIC: &[u8; 8] = b"KRNEIG01";

/// Cache key derived from the domain description and the basis size.
pub fn cache_key(spec: &DomainSpec, m: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(spec).unwrap_or_default().as_bytes());
    h.update((m as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

impl EigenBasis {
    /// Write a numeric basis: magic, key, dim, nodes, count, spacing, then
    /// eigenvalues and vectors as little-endian f64.
    pub fn save(&self, grid: &DomainGrid, path: &Path) -> Result<()> {
        let buf = self.to_bytes(grid)?;
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self, grid: &DomainGrid) -> Result<Vec<u8>> {
        let vectors = self
            .grid_vectors()
            .ok_or_else(|| Error::Unsupported("only numeric bases are cached".into()))?;
        let mut buf = Vec::with_capacity(48 + 8 * self.len() * (grid.len() + 1));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&cache_key(&grid.spec, self.len()).to_le_bytes());
        for v in [grid.dim as u64, grid.len() as u64, self.len() as u64] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&grid.h.to_le_bytes());
        for v in &self.eigenvalues {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for vec in vectors {
            for v in vec {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(buf)
    }

    /// Read a basis written by [`EigenBasis::save`] for the same grid and size.
    pub fn load(grid: &DomainGrid, m: usize, path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let word = |i: usize| -> Result<[u8; 8]> {
            buf.get(8 * i..8 * i + 8)
                .map(|s| s.try_into().expect("slice of 8"))
                .ok_or_else(|| Error::CacheMismatch("truncated file".into()))
        };
        if &word(0)? != MAGIC {
            return Err(Error::CacheMismatch("bad magic".into()));
        }
        let key = u64::from_le_bytes(word(1)?);
        let dim = u64::from_le_bytes(word(2)?) as usize;
        let n = u64::from_le_bytes(word(3)?) as usize;
        let count = u64::from_le_bytes(word(4)?) as usize;
        let h = f64::from_le_bytes(word(5)?);
        if key != cache_key(&grid.spec, m) || dim != grid.dim || n != grid.len() || count != m || h != grid.h {
            return Err(Error::CacheMismatch("header does not match the grid".into()));
        }
        if buf.len() != 8 * (6 + m * (n + 1)) {
            return Err(Error::CacheMismatch("unexpected length".into()));
        }
        let f = |i: usize| f64::from_le_bytes(buf[8 * i..8 * i + 8].try_into().expect("slice of 8"));
        let eigenvalues: Vec<f64> = (0..m).map(|k| f(6 + k)).collect();
        let vectors = (0..m).map(|k| (0..n).map(|i| f(6 + m + k * n + i)).collect()).collect();
        Ok(EigenBasis {
            source: BasisSource::NumericGrid,
            dim,
            levels: group_levels(&eigenvalues),
            eigenvalues,
            modes: Modes::Grid { vectors },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(kind: DomainKind, h: f64) -> DomainGrid {
        DomainGrid::new(&DomainSpec::new(kind, h)).unwrap()
    }

    #[test]
    fn unit_square_levels() {
        let g = grid(DomainKind::Rectangle { a: 1.0, b: 1.0 }, 0.05);
        let b = dirichlet_basis(&g, 6).unwrap();
        assert!((b.lambda0() - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(b.levels[1].multiplicity, 2);
        assert!((b.levels[1].lambda - 5.0 * PI * PI).abs() < 1e-12);
        let (_, psi) = lambda0(&b);
        let v = psi.eval(&g, &[0.25, 0.5, 0.0]);
        assert!((v - 2.0 * (PI / 4.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn unit_cube_ground_state() {
        let g = grid(DomainKind::Box { a: 1.0, b: 1.0, c: 1.0 }, 0.1);
        let b = dirichlet_basis(&g, 10).unwrap();
        assert!((b.lambda0() - 3.0 * PI * PI).abs() < 1e-12);
        assert_eq!(b.levels[1].multiplicity, 3);
    }

    #[test]
    fn sine_modes_are_complete_below_cap() {
        let ext = [1.0, 0.7];
        let modes = sine_modes_below(&ext, 400.0);
        let mut brute = 0;
        for m in 1..40 {
            for n in 1..40 {
                if PI * PI * ((m * m) as f64 + (n * n) as f64 / 0.49) <= 400.0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(modes.len(), brute);
        assert!(modes.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn numeric_disk_is_orthonormal_and_positive() {
        let g = grid(DomainKind::Disk { radius: 1.0 }, 0.05);
        let b = dirichlet_basis(&g, 6).unwrap();
        assert_eq!(b.source, BasisSource::NumericGrid);
        let v = b.grid_vectors().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let ip: f64 = v[i].iter().zip(&v[j]).map(|(a, c)| a * c).sum::<f64>() * g.cell();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-8, "{i} {j} {ip}");
            }
        }
        assert!(v[0].iter().all(|x| *x > 0.0));
        assert_eq!(b.levels[1].multiplicity, 2);
        assert!((b.lambda0() - 5.783_185_962_946_784).abs() < 0.01 * 5.78);
    }

    #[test]
    fn cache_roundtrip() {
        let g = grid(DomainKind::Disk { radius: 1.0 }, 0.08);
        let b = dirichlet_basis(&g, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("basis.bin");
        b.save(&g, &p).unwrap();
        let c = EigenBasis::load(&g, 4, &p).unwrap();
        assert_eq!(b.eigenvalues, c.eigenvalues);
        assert_eq!(b.grid_vectors().unwrap(), c.grid_vectors().unwrap());
        assert!(matches!(EigenBasis::load(&g, 5, &p), Err(Error::CacheMismatch(_))));
    }

    #[test]
    fn too_many_modes_is_rejected() {
        let g = grid(DomainKind::Disk { radius: 1.0 }, 0.1);
        assert!(dirichlet_basis(&g, g.len()).is_err());
        assert!(dirichlet_basis(&g, 0).is_err());
    }
}
