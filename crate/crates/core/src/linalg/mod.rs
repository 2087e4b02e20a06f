//! Sparse shifted Laplacian on a grid, preconditioned conjugate gradients and
//! shift-invert Lanczos.

mod lanczos;

pub use lanczos::{dense_eigen, lanczos_smallest};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, DomainGrid, DomainKind, Link};

/// Largest 3D system factored directly.
const CHOLESKY_MAX_3D: usize = 80_000;

/// Options for iterative solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 20_000 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Symmetric ghost-point discretization of `-Laplace` with Dirichlet data,
/// in CSR form.
pub struct Operator {
    pub n: usize,
    rowptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    pub diag: Vec<f64>,
    pub max_diag: f64,
}

impl Operator {
    pub fn new(grid: &DomainGrid) -> Self {
        let n = grid.len();
        let ih2 = 1.0 / (grid.h * grid.h);
        let mut rowptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = vec![0.0; n];
        rowptr.push(0);
        for i in 0..n {
            let mut d = 0.0;
            let mut row: Vec<(u32, f64)> = Vec::with_capacity(7);
            for l in &grid.links[i] {
                match *l {
                    Link::Node(j) => {
                        d += ih2;
                        row.push((j, -ih2));
                    }
                    Link::Boundary(b) => d += ih2 / grid.boundary[b as usize].theta,
                    Link::None => {}
                }
            }
            row.push((i as u32, d));
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            diag[i] = d;
            rowptr.push(cols.len());
        }
        let max_diag = diag.iter().cloned().fold(0.0, f64::max);
        Self { n, rowptr, cols, vals, diag, max_diag }
    }

    /// y = (L + z) x
    pub fn apply(&self, z: f64, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = z * x[i];
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = acc;
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                let j = self.cols[k] as usize;
                if j <= i {
                    t.push(Triplet::new(i, j, self.vals[k]));
                }
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                a[i * n + self.cols[k] as usize] = self.vals[k];
            }
        }
        a
    }
}

/// Right-hand side contributed by Dirichlet data `g` at the boundary points.
pub fn boundary_rhs<F: Fn(&BoundaryPoint) -> f64>(grid: &DomainGrid, g: F) -> Vec<f64> {
    let ih2 = 1.0 / (grid.h * grid.h);
    let mut b = vec![0.0; grid.len()];
    for bp in &grid.boundary {
        b[bp.node as usize] += g(bp) * ih2 / bp.theta;
    }
    b
}

/// Discrete principal Dirichlet eigenpair; the vector has unit Euclidean norm.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

/// Operator together with its factorization and cached ground state.
pub struct Solver {
    pub op: Operator,
    chol: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
    ground: OnceLock<GroundState>,
    aligned: Option<(Vec<f64>, Vec<[i32; 3]>, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Solver {
    pub fn new(grid: &DomainGrid) -> Result<Self> {
        let op = Operator::new(grid);
        let chol = if grid.dim == 2 || grid.len() <= CHOLESKY_MAX_3D {
            let a = op.to_faer()?;
            Some(a.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?)
        } else {
            None
        };
        let aligned = aligned_extents(grid).map(|ext| (ext, grid.nodes.clone(), grid.h));
        Ok(Self { op, chol, ground: OnceLock::new(), aligned })
    }

    pub fn n(&self) -> usize {
        self.op.n
    }

    pub fn has_factorization(&self) -> bool {
        self.chol.is_some()
    }

    /// x = L^{-1} b using the factorization.
    pub fn apply_inverse(&self, b: &mut [f64]) -> Result<()> {
        let chol = self.chol.as_ref().ok_or_else(|| Error::Unsupported("no factorization".into()))?;
        let n = b.len();
        chol.solve_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
        Ok(())
    }

    /// Principal eigenpair of L, computed once.
    pub fn ground_state(&self) -> Result<&GroundState> {
        if let Some(g) = self.ground.get() {
            return Ok(g);
        }
        let g = self.compute_ground_state()?;
        Ok(self.ground.get_or_init(|| g))
    }

    /// Seed the cached ground state from a basis computed on the same operator.
    pub fn seed_ground_state(&self, lambda: f64, vector: Vec<f64>) {
        let nrm = dot(&vector, &vector).sqrt();
        let v = vector.iter().map(|x| x / nrm).collect();
        let _ = self.ground.set(GroundState { lambda, vector: v });
    }

    fn compute_ground_state(&self) -> Result<GroundState> {
        if let Some((ext, nodes, h)) = &self.aligned {
            let mut lam = 0.0;
            for &e in ext {
                let s = (std::f64::consts::PI * h / (2.0 * e)).sin();
                lam += 4.0 * s * s / (h * h);
            }
            let mut v: Vec<f64> = nodes
                .iter()
                .map(|ijk| {
                    ext.iter()
                        .enumerate()
                        .map(|(k, e)| (std::f64::consts::PI * ijk[k] as f64 * h / e).sin())
                        .product()
                })
                .collect();
            let nrm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= nrm);
            return Ok(GroundState { lambda: lam, vector: v });
        }
        let n = self.n();
        let (vals, vecs) = if n < 3000 {
            dense_eigen(&self.op, 1)?
        } else if self.chol.is_some() {
            lanczos_smallest(n, 1, 1e-13, |x: &mut [f64]| self.apply_inverse(x))?
        } else {
            let opts = SolveOptions { tol: 1e-14, max_iter: 50_000 };
            lanczos_smallest(n, 1, 1e-11, |x: &mut [f64]| {
                let (y, _) = self.pcg(0.0, x, None, &opts)?;
                x.copy_from_slice(&y);
                Ok(())
            })?
        };
        Ok(GroundState { lambda: vals[0], vector: vecs.into_iter().next().unwrap() })
    }

    /// Solve (L + z) x = b. For z < 0 the ground state is deflated.
    pub fn solve(&self, z: f64, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveStats)> {
        if !z.is_finite() {
            return Err(Error::param("non-finite shift"));
        }
        if z < 0.0 {
            let gs = self.ground_state()?;
            if -z >= gs.lambda * (1.0 - 1e-13) {
                return Err(Error::param(format!(
                    "shift {z} reaches the principal eigenvalue {}",
                    gs.lambda
                )));
            }
            self.pcg(z, b, Some(gs), opts)
        } else {
            self.pcg(z, b, None, opts)
        }
    }

    /// The factorization of L stops paying off once the shift dominates
    /// the low end of the spectrum.
    fn factor_preconditions(&self, z: f64) -> bool {
        self.chol.is_some() && z <= (10.0 * self.op.max_diag).sqrt()
    }

    fn precondition(&self, z: f64, r: &[f64], out: &mut [f64]) -> Result<()> {
        if self.factor_preconditions(z) {
            out.copy_from_slice(r);
            self.apply_inverse(out)
        } else {
            for i in 0..r.len() {
                out[i] = r[i] / (self.op.diag[i] + z);
            }
            Ok(())
        }
    }

    fn pcg(
        &self,
        z: f64,
        b: &[f64],
        deflate: Option<&GroundState>,
        opts: &SolveOptions,
    ) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.n();
        let bnorm = dot(b, b).sqrt();
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], SolveStats::default()));
        }
        let mut x = vec![0.0; n];
        let mut aw = vec![0.0; n];
        let mut mu = 0.0;
        if let Some(gs) = deflate {
            self.op.apply(z, &gs.vector, &mut aw);
            mu = dot(&gs.vector, &aw);
            let c = dot(&gs.vector, b) / mu;
            for i in 0..n {
                x[i] = c * gs.vector[i];
            }
        }
        let mut r = vec![0.0; n];
        self.op.apply(z, &x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut zv = vec![0.0; n];
        self.precondition(z, &r, &mut zv)?;
        let project = |v: &mut [f64]| {
            if let Some(gs) = deflate {
                let c = dot(&aw, v) / mu;
                for i in 0..v.len() {
                    v[i] -= c * gs.vector[i];
                }
            }
        };
        let mut p = zv.clone();
        project(&mut p);
        let mut rz = dot(&r, &zv);
        let mut q = vec![0.0; n];
        let mut res = dot(&r, &r).sqrt() / bnorm;
        for it in 0..opts.max_iter {
            if res <= opts.tol {
                return Ok((x, SolveStats { iterations: it, residual: res }));
            }
            self.op.apply(z, &p, &mut q);
            let pq = dot(&p, &q);
            if pq <= 0.0 {
                return Err(Error::not_converged("pcg", "operator not positive definite"));
            }
            let a = rz / pq;
            for i in 0..n {
                x[i] += a * p[i];
                r[i] -= a * q[i];
            }
            if let Some(gs) = deflate {
                let c = dot(&gs.vector, &r) / mu;
                for i in 0..n {
                    x[i] += c * gs.vector[i];
                    r[i] -= c * aw[i];
                }
            }
            res = dot(&r, &r).sqrt() / bnorm;
            self.precondition(z, &r, &mut zv)?;
            let rz_new = dot(&r, &zv);
            let beta = rz_new / rz;
            rz = rz_new;
            project(&mut zv);
            for i in 0..n {
                p[i] = zv[i] + beta * p[i];
            }
        }
        if res <= opts.tol {
            return Ok((x, SolveStats { iterations: opts.max_iter, residual: res }));
        }
        Err(Error::not_converged("pcg", format!("relative residual {res:.3e} after {} iterations", opts.max_iter)))
    }
}

/// Side lengths when the domain is a rectangle or box whose sides are
/// multiples of the spacing, so that discrete eigenvectors are sampled sines.
fn aligned_extents(grid: &DomainGrid) -> Option<Vec<f64>> {
    let ext = match grid.spec.domain {
        DomainKind::Rectangle { a, b } => vec![a, b],
        DomainKind::Box { a, b, c } => vec![a, b, c],
        _ => return None,
    };
    let ok = ext.iter().all(|e| {
        let r = e / grid.h;
        (r - r.round()).abs() < 1e-9
    });
    if ok {
        Some(ext)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    #[test]
    fn operator_is_symmetric() {
        let g = DomainGrid::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.1)).unwrap();
        let op = Operator::new(&g);
        let a = op.to_dense();
        let n = op.n;
        for i in 0..n {
            for j in 0..n {
                assert_eq!(a[i * n + j], a[j * n + i]);
            }
        }
    }

    #[test]
    fn constant_data_reproduces_constant() {
        let g = DomainGrid::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.05)).unwrap();
        let s = Solver::new(&g).unwrap();
        let b = boundary_rhs(&g, |_| 2.5);
        let (x, _) = s.solve(0.0, &b, &SolveOptions::default()).unwrap();
        assert!(x.iter().all(|v| (v - 2.5).abs() < 1e-10));
    }

    #[test]
    fn aligned_ground_state_matches_dense() {
        let g = DomainGrid::new(&DomainSpec::new(DomainKind::Rectangle { a: 1.0, b: 0.6 }, 0.05)).unwrap();
        let s = Solver::new(&g).unwrap();
        let gs = s.ground_state().unwrap();
        let (vals, _) = dense_eigen(&s.op, 1).unwrap();
        assert!((gs.lambda - vals[0]).abs() < 1e-9 * vals[0]);
    }

    #[test]
    fn deflated_solve_near_threshold() {
        let g = DomainGrid::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.05)).unwrap();
        let s = Solver::new(&g).unwrap();
        let lam = s.ground_state().unwrap().lambda;
        let b = boundary_rhs(&g, |_| 1.0);
        let z = -lam * 0.9999;
        let (x, st) = s.solve(z, &b, &SolveOptions::default()).unwrap();
        let mut r = vec![0.0; x.len()];
        s.op.apply(z, &x, &mut r);
        let err: f64 = r.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * dot(&b, &b).sqrt(), "{err} after {}", st.iterations);
        assert!(st.iterations < 200);
        assert!(s.solve(-lam * 1.0001, &b, &SolveOptions::default()).is_err());
    }
}
