//! Regular part of the Dirichlet resolvent kernel.
//!
//! For a source x0 and spectral parameter xi the regular part h solves
//! `(-Laplace + z) h = 0` in the domain with `h = G^z(., x0)` on the
//! boundary, `z = -xi`. On the positive branch the real and imaginary parts
//! of the kernel are handled separately. In 2D the zero-energy problem uses
//! the logarithmic kernel instead.

mod norm;

pub use norm::{green_norm_sq, green_norm_sq_with, lattice_correction, GreenNorm, NormRoute};

use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::cli::format::csv_row;
use crate::dirichlet::{dirichlet_basis, BasisSource, EigenBasis};
use crate::error::{Error, Result};
use crate::geometry::{dist, DomainGrid, DomainSpec, Point};
use crate::linalg::{boundary_rhs, SolveOptions, SolveStats, Solver};
use crate::specfun::{green_im, green_re, log_kernel, Branch, SpectralParameter};

/// Minimum distance of a source from the boundary, in grid spacings.
pub const SOURCE_MARGIN: f64 = 2.0;
/// Positive-branch shifts must stay below this fraction of the lattice
/// principal eigenvalue.
pub const THRESHOLD_GUARD: f64 = 1.0 - 1e-13;

/// Grid, eigenbasis and factored operator shared by all solves on one domain.
pub struct Problem {
    pub grid: DomainGrid,
    pub basis: EigenBasis,
    pub solver: Solver,
    pub opts: SolveOptions,
}

impl Problem {
    pub fn new(spec: &DomainSpec, m: usize) -> Result<Self> {
        let grid = DomainGrid::new(spec)?;
        let solver = Solver::new(&grid)?;
        let basis = if grid.dim == 2 && !matches!(grid.spec.domain, crate::geometry::DomainKind::Rectangle { .. }) {
            crate::dirichlet::numeric_basis(&grid, m, Some(&solver))?
        } else {
            dirichlet_basis(&grid, m)?
        };
        Self::from_parts(grid, basis, solver)
    }

    pub fn from_parts(grid: DomainGrid, basis: EigenBasis, solver: Solver) -> Result<Self> {
        if basis.source == BasisSource::NumericGrid {
            let v = basis.grid_vectors().expect("numeric basis has vectors");
            solver.seed_ground_state(basis.lambda0(), v[0].clone());
        }
        Ok(Self { grid, basis, solver, opts: SolveOptions::default() })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// Principal eigenvalue of the lattice operator; positive-branch
    /// parameters must stay below it.
    pub fn lambda0(&self) -> Result<f64> {
        Ok(self.solver.ground_state()?.lambda)
    }

    /// Source points must lie inside at distance at least two spacings.
    pub fn check_source(&self, x0: &Point) -> Result<()> {
        if x0.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("non-finite source point"));
        }
        let d = self.grid.sdf(x0);
        if d >= 0.0 {
            return Err(Error::OutsideDomain(x0[..self.dim()].to_vec()));
        }
        if -d < SOURCE_MARGIN * self.grid.h * (1.0 - 1e-9) {
            return Err(Error::param(format!(
                "source {:?} is {:.3e} from the boundary, below {SOURCE_MARGIN} spacings",
                &x0[..self.dim()],
                -d
            )));
        }
        Ok(())
    }

    pub fn check_parameter(&self, p: &SpectralParameter) -> Result<()> {
        if p.branch == Branch::PositiveXi {
            let lam = self.lambda0()?;
            if p.y * p.y >= lam * THRESHOLD_GUARD {
                return Err(Error::param(format!(
                    "y^2 = {:.6e} is not below the principal eigenvalue {lam:.6e}",
                    p.y * p.y
                )));
            }
        }
        if self.dim() == 2 && p.y == 0.0 {
            return Err(Error::param("2D regular part at y = 0 is the logarithmic problem"));
        }
        Ok(())
    }
}

/// Boundary data a field was computed with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryData {
    /// Free kernel, negative branch.
    Kernel,
    /// Real part of the free kernel, positive branch.
    KernelReal,
    /// Imaginary part of the free kernel, positive branch.
    KernelImag,
    /// `-(ln(r/2) + gamma) / (2 pi)`, 2D zero energy.
    Logarithmic,
}

/// Solution of one boundary-value problem for a fixed source.
#[derive(Clone, Debug)]
pub struct HField {
    pub dim: usize,
    pub x0: Point,
    pub param: Option<SpectralParameter>,
    pub data: BoundaryData,
    pub values: Vec<f64>,
    /// Value at the source. For the logarithmic problem this is scaled by
    /// 2 pi, which is the 2D threshold coupling.
    pub coincidence: f64,
    /// Gradient in the first argument at the source, same scaling as
    /// `coincidence`.
    pub gradient: Point,
    pub stats: SolveStats,
}

fn data_value(dim: usize, data: BoundaryData, p: Option<&SpectralParameter>, r: f64) -> f64 {
    match data {
        BoundaryData::Logarithmic => log_kernel(r),
        BoundaryData::Kernel | BoundaryData::KernelReal => green_re(dim, p.expect("parameter"), r),
        BoundaryData::KernelImag => green_im(dim, p.expect("parameter"), r),
    }
}

impl HField {
    /// Boundary data at `q`.
    pub fn boundary_value(&self, q: &Point) -> f64 {
        data_value(self.dim, self.data, self.param.as_ref(), dist(q, &self.x0))
    }

    /// Interpolated field value, using the boundary data as the extension
    /// outside the interior.
    pub fn eval(&self, grid: &DomainGrid, q: &Point) -> f64 {
        grid.interpolate(&self.values, q, |g| self.boundary_value(g))
    }

    fn scale(&self) -> f64 {
        if self.data == BoundaryData::Logarithmic {
            2.0 * PI
        } else {
            1.0
        }
    }

    /// Gradient of `x0 -> h(x0, x0)`, twice the first-argument gradient.
    pub fn diagonal_gradient(&self) -> Point {
        [2.0 * self.gradient[0], 2.0 * self.gradient[1], 2.0 * self.gradient[2]]
    }

    /// Max-norm of the discrete residual relative to the max-norm of the
    /// right-hand side.
    pub fn residual(&self, problem: &Problem) -> f64 {
        let z = self.param.map(|p| p.z()).unwrap_or(0.0);
        let b = boundary_rhs(&problem.grid, |bp| self.boundary_value(&bp.pos));
        let mut r = vec![0.0; b.len()];
        problem.solver.op.apply(z, &self.values, &mut r);
        let num = r.iter().zip(&b).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        let den = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        num / den.max(f64::MIN_POSITIVE)
    }

    /// Node coordinates and values as CSV.
    pub fn write_csv(&self, grid: &DomainGrid, path: &Path) -> Result<()> {
        let mut out = String::from(if self.dim == 2 { "x,y,value\n" } else { "x,y,z,value\n" });
        for (i, v) in self.values.iter().enumerate() {
            let p = grid.pos(i);
            let mut row = p[..self.dim].to_vec();
            row.push(*v);
            out.push_str(&csv_row(&row));
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Fourth-order centered gradient of an interpolated field.
fn gradient_at<F: Fn(&Point) -> f64>(dim: usize, h: f64, x0: &Point, f: F) -> Point {
    let mut g = [0.0; 3];
    for (k, gk) in g.iter_mut().enumerate().take(dim) {
        let at = |s: f64| {
            let mut q = *x0;
            q[k] += s * h;
            f(&q)
        };
        *gk = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
    }
    g
}

fn solve_field(
    problem: &Problem,
    x0: &Point,
    param: Option<SpectralParameter>,
    data: BoundaryData,
) -> Result<HField> {
    problem.check_source(x0)?;
    let dim = problem.dim();
    let z = param.map(|p| p.z()).unwrap_or(0.0);
    let b = boundary_rhs(&problem.grid, |bp| data_value(dim, data, param.as_ref(), dist(&bp.pos, x0)));
    let (values, stats) = problem.solver.solve(z, &b, &problem.opts)?;
    let mut f = HField { dim, x0: *x0, param, data, values, coincidence: 0.0, gradient: [0.0; 3], stats };
    let s = f.scale();
    f.coincidence = s * f.eval(&problem.grid, x0);
    let g = gradient_at(dim, problem.grid.h, x0, |q| f.eval(&problem.grid, q));
    f.gradient = [s * g[0], s * g[1], s * g[2]];
    Ok(f)
}

/// Regular part h(., x0) on the negative branch, its real part on the
/// positive branch.
pub fn solve_h(problem: &Problem, x0: &Point, p: &SpectralParameter) -> Result<HField> {
    problem.check_parameter(p)?;
    let data = match p.branch {
        Branch::NegativeXi => BoundaryData::Kernel,
        Branch::PositiveXi => BoundaryData::KernelReal,
    };
    solve_field(problem, x0, Some(*p), data)
}

/// Imaginary part of the regular part on the positive branch.
pub fn solve_h_imag(problem: &Problem, x0: &Point, p: &SpectralParameter) -> Result<HField> {
    if p.branch != Branch::PositiveXi {
        return Err(Error::param("the imaginary part vanishes on the negative branch"));
    }
    problem.check_parameter(p)?;
    solve_field(problem, x0, Some(*p), BoundaryData::KernelImag)
}

/// Harmonic field with logarithmic boundary data, 2D only. Its coincidence
/// value is the threshold coupling `lim_{y -> 0} (ln y + 2 pi h)`.
pub fn solve_f0(problem: &Problem, x0: &Point) -> Result<HField> {
    if problem.dim() != 2 {
        return Err(Error::Unsupported("the logarithmic problem is planar".into()));
    }
    solve_field(problem, x0, None, BoundaryData::Logarithmic)
}

/// Coincidence value h(x0, x0, y), without keeping the field.
pub fn h_diag(problem: &Problem, x0: &Point, p: &SpectralParameter) -> Result<f64> {
    Ok(solve_h(problem, x0, p)?.coincidence)
}

/// y-derivative of the coincidence value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DhDy {
    /// From the norm identity.
    pub value: f64,
    pub norm: GreenNorm,
    /// Centered difference of coincidence values, when requested.
    pub finite_difference: Option<f64>,
    /// Relative disagreement of the two.
    pub residual: Option<f64>,
}

/// Singular-kernel contribution to the y-derivative at the source:
/// `d/dy` of the free kernel's regular expansion at r = 0 (real part).
fn kernel_slope(dim: usize, p: &SpectralParameter) -> f64 {
    match (dim, p.branch) {
        (2, _) => -1.0 / (2.0 * PI * p.y),
        (_, Branch::NegativeXi) => -1.0 / (4.0 * PI),
        (_, Branch::PositiveXi) => 0.0,
    }
}

/// Identity-based derivative from a known squared norm.
pub fn dh_dy_from_norm(dim: usize, p: &SpectralParameter, norm: f64) -> f64 {
    let sign = match p.branch {
        Branch::NegativeXi => 1.0,
        Branch::PositiveXi => -1.0,
    };
    sign * 2.0 * p.y * norm + kernel_slope(dim, p)
}

/// `d/dy h(x0, x0, y)` (negative branch) or `d/dy Re h(x0, x0, i y)`
/// (positive branch) from the squared norm of the Dirichlet kernel,
/// optionally checked against a centered difference.
pub fn dh_dy(problem: &Problem, x0: &Point, p: &SpectralParameter, cross_check: bool) -> Result<DhDy> {
    if p.y <= 0.0 {
        return Err(Error::param("the y-derivative needs y > 0"));
    }
    problem.check_parameter(p)?;
    let norm = green_norm_sq(problem, x0, p)?;
    let value = dh_dy_from_norm(problem.dim(), p, norm.value);
    let (mut fd, mut residual) = (None, None);
    if cross_check {
        let mut d = 1e-3 * p.y;
        if p.branch == Branch::PositiveXi {
            let gap = problem.lambda0()? - p.y * p.y;
            d = d.min(1e-3 * gap / (2.0 * p.y));
        }
        let hp = h_diag(problem, x0, &SpectralParameter::new(p.branch, p.y + d)?)?;
        let hm = h_diag(problem, x0, &SpectralParameter::new(p.branch, p.y - d)?)?;
        let v = (hp - hm) / (2.0 * d);
        fd = Some(v);
        residual = Some((value - v).abs() / v.abs().max(f64::MIN_POSITIVE));
    }
    Ok(DhDy { value, norm, finite_difference: fd, residual })
}

/// Gradient of `x0 -> h(x0, x0, .)`.
pub fn grad_h_diag(problem: &Problem, x0: &Point, p: &SpectralParameter) -> Result<Point> {
    Ok(solve_h(problem, x0, p)?.diagonal_gradient())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainKind;
    use crate::specfun::{i0, k0};

    fn disk(h: f64) -> Problem {
        Problem::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, h), 4).unwrap()
    }

    #[test]
    fn disk_center_matches_separation_of_variables() {
        let pb = disk(0.02);
        for y in [0.5, 2.0] {
            let h = h_diag(&pb, &[0.0; 3], &SpectralParameter::negative(y).unwrap()).unwrap();
            let want = k0(y) / (2.0 * PI * i0(y));
            assert!((h - want).abs() < 5e-3 * want, "{y}: {h} {want}");
        }
    }

    #[test]
    fn logarithmic_center_value() {
        let pb = disk(0.05);
        let f = solve_f0(&pb, &[0.0; 3]).unwrap();
        assert!((f.coincidence - (2f64.ln() - crate::specfun::EULER_GAMMA)).abs() < 1e-10);
        assert!(f.residual(&pb) < 1e-10);
    }

    #[test]
    fn source_too_close_to_boundary() {
        let pb = disk(0.05);
        let p = SpectralParameter::negative(1.0).unwrap();
        assert!(solve_h(&pb, &[0.95, 0.0, 0.0], &p).is_err());
        assert!(matches!(solve_h(&pb, &[1.5, 0.0, 0.0], &p), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn positive_branch_limit_is_enforced() {
        let pb = disk(0.05);
        let lam = pb.lambda0().unwrap();
        assert!(solve_h(&pb, &[0.0; 3], &SpectralParameter::positive(lam.sqrt()).unwrap()).is_err());
        assert!(solve_h(&pb, &[0.0; 3], &SpectralParameter::positive((0.9 * lam).sqrt()).unwrap()).is_ok());
    }
}
