//! Spectral condition of the point interaction, its principal root, the
//! charge of the rank-one resolvent correction and the eigenfunction.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{dist, Point};
use crate::helmholtz::{green_norm_sq, solve_f0, solve_h, HField, Problem};
use crate::specfun::{green_re, log_kernel, Branch, SpectralParameter};

/// Couplings closer than this to the threshold are treated as equal to it.
pub const ZERO_XI_TOL: f64 = 1e-10;
/// Relative bracket width at which bisection hands over to Newton.
const NEWTON_HANDOVER: f64 = 1e-3;

/// Coupling constant; infinity is the unperturbed Dirichlet Laplacian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    Finite(f64),
    Infinite,
}

impl Coupling {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() {
            Err(Error::param("coupling is NaN"))
        } else if alpha.is_infinite() {
            Ok(Coupling::Infinite)
        } else {
            Ok(Coupling::Finite(alpha))
        }
    }

    pub fn finite(&self) -> Result<f64> {
        match *self {
            Coupling::Finite(a) => Ok(a),
            Coupling::Infinite => Err(Error::param("no eigenvalue below the threshold at infinite coupling")),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Coupling::Finite(a) => a,
            Coupling::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiBranch {
    NegativeXi,
    ZeroXi,
    PositiveXi,
}

/// Principal eigenvalue for one source position and coupling.
#[derive(Clone, Debug, Serialize)]
pub struct PrincipalEigenvalue {
    pub x0: Point,
    pub alpha: f64,
    pub xi: f64,
    pub y: f64,
    pub branch: XiBranch,
    pub alpha_threshold: f64,
    /// Lattice principal Dirichlet eigenvalue.
    pub lambda0: f64,
    /// Spectral function at the root.
    pub residual: f64,
    /// Final bracket in y.
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// Root from pure bisection, when requested.
    pub bisection_xi: Option<f64>,
    /// Squared kernel norm at the root, the slope of the spectral function in xi.
    pub norm: Option<f64>,
}

/// Threshold coupling at which the principal eigenvalue is zero:
/// `-h(x0, x0, 0)` in 3D, the logarithmic coincidence value in 2D.
pub fn alpha_threshold(problem: &Problem, x0: &Point) -> Result<f64> {
    if problem.dim() == 2 {
        Ok(solve_f0(problem, x0)?.coincidence)
    } else {
        Ok(-solve_h(problem, x0, &SpectralParameter::negative(0.0)?)?.coincidence)
    }
}

/// Spectral function Phi(xi), strictly decreasing on `(-inf, lambda0)`,
/// whose zero is the principal eigenvalue.
///
/// 3D: `y/(4 pi) + alpha + h` for xi <= 0, `alpha + Re h` for xi > 0.
/// 2D: `ln y + 2 pi h - alpha`, with the real part for xi > 0 and the
/// threshold value `alpha* - alpha` at xi = 0.
pub fn spectral_function(problem: &Problem, x0: &Point, alpha: f64, xi: f64) -> Result<f64> {
    let p = SpectralParameter::from_xi(xi)?;
    phi(problem, x0, alpha, &p)
}

fn phi(problem: &Problem, x0: &Point, alpha: f64, p: &SpectralParameter) -> Result<f64> {
    if problem.dim() == 2 {
        if p.y == 0.0 {
            return Ok(solve_f0(problem, x0)?.coincidence - alpha);
        }
        let h = solve_h(problem, x0, p)?.coincidence;
        Ok(p.y.ln() + 2.0 * PI * h - alpha)
    } else {
        let h = solve_h(problem, x0, p)?.coincidence;
        Ok(match p.branch {
            Branch::NegativeXi => p.y / (4.0 * PI) + alpha + h,
            Branch::PositiveXi => alpha + h,
        })
    }
}

/// d Phi / d y along the branch, from the kernel norm.
fn phi_slope(dim: usize, p: &SpectralParameter, norm: f64) -> f64 {
    let c = if dim == 2 { 4.0 * PI } else { 2.0 };
    match p.branch {
        Branch::NegativeXi => c * p.y * norm,
        Branch::PositiveXi => -c * p.y * norm,
    }
}

struct Scalar<'a> {
    problem: &'a Problem,
    x0: &'a Point,
    alpha: f64,
    branch: Branch,
    evaluations: usize,
}

impl Scalar<'_> {
    /// Spectral function as a function of y, increasing in y.
    fn g(&mut self, y: f64) -> Result<f64> {
        self.evaluations += 1;
        let v = phi(self.problem, self.x0, self.alpha, &SpectralParameter::new(self.branch, y)?)?;
        Ok(match self.branch {
            Branch::NegativeXi => v,
            Branch::PositiveXi => -v,
        })
    }
}

fn sign_table(samples: &[(f64, f64)]) -> String {
    samples.iter().map(|(y, v)| format!("y={y:.6e}:{v:+.3e}")).collect::<Vec<_>>().join(" ")
}

/// Bracket `[lo, hi]` in y with g(lo) <= 0 < g(hi).
fn bracket(s: &mut Scalar, alpha_star: f64, lambda0: f64) -> Result<(f64, f64, f64, f64)> {
    let mut table = Vec::new();
    match s.branch {
        Branch::NegativeXi => {
            let (mut lo, mut glo) = if s.problem.dim() == 3 {
                (0.0, s.alpha - alpha_star)
            } else {
                let mut lo = 1e-8;
                let mut glo = s.g(lo)?;
                table.push((lo, glo));
                while glo > 0.0 {
                    lo *= 1e-8;
                    if lo < 1e-300 {
                        return Err(Error::Bracket(sign_table(&table)));
                    }
                    glo = s.g(lo)?;
                    table.push((lo, glo));
                }
                (lo, glo)
            };
            let mut hi = 4.0 * PI * (s.alpha.abs() + alpha_star.abs() + 10.0);
            let mut ghi = s.g(hi)?;
            table.push((hi, ghi));
            while ghi <= 0.0 {
                if ghi < 0.0 && hi > lo {
                    lo = hi;
                    glo = ghi;
                }
                hi *= 4.0;
                if !hi.is_finite() || hi > 1e150 {
                    return Err(Error::Bracket(sign_table(&table)));
                }
                ghi = s.g(hi)?;
                table.push((hi, ghi));
            }
            Ok((lo, glo, hi, ghi))
        }
        Branch::PositiveXi => {
            let glo = -(alpha_star - s.alpha).abs();
            let mut lo = 0.0;
            let mut glo = glo;
            for k in 1..=13 {
                let hi = (lambda0 * (1.0 - 10f64.powi(-k))).sqrt();
                let ghi = s.g(hi)?;
                table.push((hi, ghi));
                if ghi > 0.0 {
                    return Ok((lo, glo, hi, ghi));
                }
                lo = hi;
                glo = ghi;
            }
            Err(Error::Bracket(sign_table(&table)))
        }
    }
}

/// Principal eigenvalue `xi(alpha) < lambda0` for a source at `x0`.
pub fn principal_eigenvalue(problem: &Problem, x0: &Point, alpha: Coupling) -> Result<PrincipalEigenvalue> {
    principal_eigenvalue_with(problem, x0, alpha, false)
}

/// As [`principal_eigenvalue`], optionally repeating the root search by
/// pure bisection.
pub fn principal_eigenvalue_with(
    problem: &Problem,
    x0: &Point,
    alpha: Coupling,
    verify: bool,
) -> Result<PrincipalEigenvalue> {
    let alpha = alpha.finite()?;
    let dim = problem.dim();
    let alpha_star = alpha_threshold(problem, x0)?;
    let lambda0 = problem.lambda0()?;
    let mut out = PrincipalEigenvalue {
        x0: *x0,
        alpha,
        xi: 0.0,
        y: 0.0,
        branch: XiBranch::ZeroXi,
        alpha_threshold: alpha_star,
        lambda0,
        residual: 0.0,
        bracket: (0.0, 0.0),
        evaluations: 1,
        bisection_xi: None,
        norm: None,
    };
    if (alpha - alpha_star).abs() < ZERO_XI_TOL {
        out.residual = if dim == 2 { alpha_star - alpha } else { alpha - alpha_star };
        out.bisection_xi = verify.then_some(0.0);
        return Ok(out);
    }
    let negative = if dim == 3 { alpha < alpha_star } else { alpha > alpha_star };
    let branch = if negative { Branch::NegativeXi } else { Branch::PositiveXi };
    let mut s = Scalar { problem, x0, alpha, branch, evaluations: 1 };
    let (lo0, glo0, hi0, ghi0) = bracket(&mut s, alpha_star, lambda0)?;
    let (mut lo, mut hi) = (lo0, hi0);
    let (mut glo, mut ghi) = (glo0, ghi0);
    while hi - lo > NEWTON_HANDOVER * hi {
        let mid = 0.5 * (lo + hi);
        let g = s.g(mid)?;
        if g > 0.0 {
            hi = mid;
            ghi = g;
        } else {
            lo = mid;
            glo = g;
        }
    }
    let mut y = lo - glo * (hi - lo) / (ghi - glo);
    let mut gy = s.g(y)?;
    let mut norm = None;
    for _ in 0..60 {
        if gy > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let p = SpectralParameter::new(branch, y)?;
        let n = green_norm_sq(problem, x0, &p)?.value;
        norm = Some(n);
        let slope = phi_slope(dim, &p, n) * if branch == Branch::PositiveXi { -1.0 } else { 1.0 };
        let mut next = y - gy / slope;
        if !(next > lo && next < hi) || !slope.is_finite() || slope <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        let step = (next - y).abs();
        y = next;
        gy = s.g(y)?;
        if step <= 1e-14 * y.max(1e-300) || gy == 0.0 {
            break;
        }
    }
    if gy.abs() > 1e-8 {
        return Err(Error::not_converged("principal eigenvalue", format!("residual {gy:.3e} at y = {y:.6e}")));
    }
    out.y = y;
    out.xi = if negative { -y * y } else { y * y };
    out.branch = if negative { XiBranch::NegativeXi } else { XiBranch::PositiveXi };
    out.residual = gy.abs();
    out.bracket = (lo, hi);
    out.norm = norm;
    if verify {
        let (mut a, mut b) = (lo0, hi0);
        while b - a > 1e-12 * b {
            let mid = 0.5 * (a + b);
            if s.g(mid)? > 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        let yb = 0.5 * (a + b);
        out.bisection_xi = Some(if negative { -yb * yb } else { yb * yb });
    }
    out.evaluations = s.evaluations;
    if out.xi >= lambda0 {
        return Err(Error::not_converged("principal eigenvalue", "root reached the Dirichlet threshold"));
    }
    Ok(out)
}

/// Samples of sign(Phi) on a xi grid, for the uniqueness check.
pub fn sign_changes(problem: &Problem, x0: &Point, alpha: f64, xis: &[f64]) -> Result<usize> {
    let mut prev: Option<f64> = None;
    let mut count = 0;
    for &xi in xis {
        let v = spectral_function(problem, x0, alpha, xi)?;
        if let Some(p) = prev {
            if (p > 0.0) != (v > 0.0) {
                count += 1;
            }
        }
        prev = Some(v);
    }
    Ok(count)
}

/// Coefficient of the singular term of the perturbed resolvent at shift z.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Charge {
    pub z: f64,
    pub q: f64,
    /// Denominator of q; it vanishes at the pole z = -xi.
    pub denominator: f64,
}

/// Charge `q_z`: `1 / (alpha + sqrt(z)/(4 pi) + h)` in 3D and
/// `2 pi / (alpha - ln sqrt(z) - 2 pi h)` in 2D. The imaginary parts of the
/// logarithm and of h cancel for `-lambda0 < z < 0`.
pub fn charge(problem: &Problem, x0: &Point, alpha: Coupling, z: f64) -> Result<Charge> {
    let alpha = match alpha {
        Coupling::Infinite => return Ok(Charge { z, q: 0.0, denominator: f64::INFINITY }),
        Coupling::Finite(a) => a,
    };
    let v = spectral_function(problem, x0, alpha, -z)?;
    let (num, den) = if problem.dim() == 2 { (2.0 * PI, -v) } else { (1.0, v) };
    if den.abs() <= 1e-12 {
        return Err(Error::param(format!("shift {z} is at the pole of the charge")));
    }
    Ok(Charge { z, q: num / den, denominator: den })
}

fn parameter_for_shift(z: f64) -> Result<SpectralParameter> {
    SpectralParameter::from_xi(-z)
}

/// Real part of the Dirichlet kernel `G0^z(., x0)` at the nodes, from the
/// free kernel minus the regular part. The node at the source, if any,
/// is reported separately and holds zero.
pub fn dirichlet_kernel(problem: &Problem, x0: &Point, z: f64) -> Result<(Vec<f64>, Option<usize>, HField)> {
    let p = parameter_for_shift(z)?;
    let dim = problem.dim();
    let field =
        if dim == 2 && p.y == 0.0 { solve_f0(problem, x0)? } else { solve_h(problem, x0, &p)? };
    let mut source = None;
    let g: Vec<f64> = (0..problem.grid.len())
        .map(|i| {
            let r = dist(&problem.grid.pos(i), x0);
            if r < 1e-12 * problem.grid.h {
                source = Some(i);
                return 0.0;
            }
            let free = if dim == 2 && p.y == 0.0 { log_kernel(r) } else { green_re(dim, &p, r) };
            free - field.values[i]
        })
        .collect();
    Ok((g, source, field))
}

/// Eigenfunction at the pole, normalized in L2 away from the source.
#[derive(Clone, Debug)]
pub struct Eigenfunction {
    pub values: Vec<f64>,
    /// Nodes within two spacings of the source, left out of the normalization.
    pub excluded: Vec<bool>,
    /// Max residual outside the five-spacing ball, relative to the max of |u| there.
    pub residual: f64,
    /// Relative L2 distance to the lattice kernel outside the five-spacing ball.
    pub lattice_distance: f64,
    /// u > 0 at every node outside the exclusion ball.
    pub positive: bool,
}

/// `u = G0^{-xi}(., x0)` at the principal eigenvalue.
///
/// The residual applies the continuum operator to the free kernel, where
/// it vanishes identically, and the lattice operator to the regular part.
pub fn eigenfunction(problem: &Problem, pe: &PrincipalEigenvalue) -> Result<Eigenfunction> {
    let grid = &problem.grid;
    let z = -pe.xi;
    let (mut u, _, field) = dirichlet_kernel(problem, &pe.x0, z)?;
    let h = grid.h;
    let excluded: Vec<bool> = (0..grid.len()).map(|i| dist(&grid.pos(i), &pe.x0) < 2.0 * h).collect();
    let far: Vec<bool> = (0..grid.len()).map(|i| dist(&grid.pos(i), &pe.x0) > 5.0 * h).collect();
    let l2: f64 = u.iter().zip(&excluded).filter(|(_, e)| !**e).map(|(v, _)| v * v).sum::<f64>() * grid.cell();
    let scale = 1.0 / l2.sqrt();
    u.iter_mut().for_each(|v| *v *= scale);

    let b = crate::linalg::boundary_rhs(grid, |bp| field.boundary_value(&bp.pos));
    let mut ah = vec![0.0; grid.len()];
    problem.solver.op.apply(z, &field.values, &mut ah);
    let umax = u.iter().zip(&far).filter(|(_, f)| **f).map(|(v, _)| v.abs()).fold(0.0, f64::max);
    let residual = ah
        .iter()
        .zip(&b)
        .zip(&far)
        .filter(|(_, f)| **f)
        .map(|((a, c), _)| (a - c).abs() * scale)
        .fold(0.0, f64::max)
        / umax.max(f64::MIN_POSITIVE);

    let lattice_distance = if -z < problem.lambda0()? * crate::helmholtz::THRESHOLD_GUARD {
        let node = grid.nearest_node(&pe.x0).ok_or_else(|| Error::OutsideDomain(pe.x0.to_vec()))?;
        let mut rhs = vec![0.0; grid.len()];
        rhs[node] = 1.0 / grid.cell();
        let (g, _) = problem.solver.solve(z, &rhs, &problem.opts)?;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..grid.len() {
            if far[i] {
                let a = g[i] * scale;
                num += (a - u[i]).powi(2);
                den += u[i] * u[i];
            }
        }
        (num / den).sqrt()
    } else {
        f64::NAN
    };
    let positive = u.iter().zip(&excluded).all(|(v, e)| *e || *v > 0.0);
    Ok(Eigenfunction { values: u, excluded, residual, lattice_distance, positive })
}

/// Perturbed resolvent applied to a nodal field.
#[derive(Clone, Debug)]
pub struct ResolventField {
    pub values: Vec<f64>,
    /// Unperturbed part `(L + z)^{-1} phi` in the truncated basis.
    pub free: Vec<f64>,
    /// Multiple of `G0^z(., x0)` added to the free part.
    pub coefficient: f64,
    pub charge: Charge,
    /// Node at the source, where the kernel is singular and set to zero.
    pub source: Option<usize>,
}

/// `R0 phi + q (R0 phi)(x0) G0^z(., x0)` with `R0` expanded in the eigenbasis.
pub fn apply_resolvent(problem: &Problem, x0: &Point, alpha: Coupling, z: f64, phi: &[f64]) -> Result<ResolventField> {
    let grid = &problem.grid;
    if phi.len() != grid.len() {
        return Err(Error::param("field length does not match the grid"));
    }
    let basis = &problem.basis;
    if !basis.is_complete() {
        return Err(Error::Unsupported("resolvent expansion needs a complete eigenbasis".into()));
    }
    let charge = charge(problem, x0, alpha, z)?;
    let mut free = vec![0.0; grid.len()];
    let mut at_x0 = 0.0;
    for k in 0..basis.len() {
        let lam = basis.eigenvalues[k];
        if (lam + z).abs() <= 1e-12 * lam {
            return Err(Error::param(format!("shift {z} is at a Dirichlet eigenvalue")));
        }
        let psi = basis.values(grid, k);
        let c: f64 = psi.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() * grid.cell() / (lam + z);
        for (f, p) in free.iter_mut().zip(&psi) {
            *f += c * p;
        }
        at_x0 += c * basis.eval(grid, k, x0);
    }
    let coefficient = charge.q * at_x0;
    let mut values = free.clone();
    let mut source = None;
    if coefficient != 0.0 {
        let (g, s, _) = dirichlet_kernel(problem, x0, z)?;
        source = s;
        for (v, gi) in values.iter_mut().zip(&g) {
            *v += coefficient * gi;
        }
    }
    Ok(ResolventField { values, free, coefficient, charge, source })
}

/// L2 norm of a nodal field in the lattice inner product, skipping one node.
pub fn field_norm(problem: &Problem, v: &[f64], skip: Option<usize>) -> f64 {
    let s: f64 = v.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(_, x)| x * x).sum();
    (s * problem.grid.cell()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainKind, DomainSpec};

    fn disk() -> Problem {
        Problem::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.05), 6).unwrap()
    }

    #[test]
    fn threshold_gives_zero() {
        let pb = disk();
        let a = alpha_threshold(&pb, &[0.0; 3]).unwrap();
        let pe = principal_eigenvalue(&pb, &[0.0; 3], Coupling::Finite(a)).unwrap();
        assert_eq!(pe.branch, XiBranch::ZeroXi);
        assert_eq!(pe.xi, 0.0);
    }

    #[test]
    fn planar_orientation() {
        let pb = disk();
        let x0 = [0.2, 0.1, 0.0];
        let a = alpha_threshold(&pb, &x0).unwrap();
        let up = principal_eigenvalue_with(&pb, &x0, Coupling::Finite(a + 1.0), true).unwrap();
        let down = principal_eigenvalue_with(&pb, &x0, Coupling::Finite(a - 1.0), true).unwrap();
        assert!(up.xi < 0.0 && down.xi > 0.0 && down.xi < pb.lambda0().unwrap());
        for pe in [&up, &down] {
            assert!(pe.residual < 1e-8);
            let b = pe.bisection_xi.unwrap();
            assert!((b - pe.xi).abs() <= 1e-10 * pe.xi.abs(), "{b} {}", pe.xi);
        }
    }

    #[test]
    fn infinite_coupling() {
        let pb = disk();
        assert!(principal_eigenvalue(&pb, &[0.0; 3], Coupling::Infinite).is_err());
        let c = charge(&pb, &[0.0; 3], Coupling::Infinite, 1.0).unwrap();
        assert_eq!(c.q, 0.0);
        let psi0 = pb.basis.values(&pb.grid, 0);
        let r = apply_resolvent(&pb, &[0.0; 3], Coupling::Infinite, 1.0, &psi0).unwrap();
        let lam = pb.basis.lambda0();
        for (a, b) in r.values.iter().zip(&psi0) {
            assert!((a - b / (lam + 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_eigenfunction_is_positive() {
        let pb = disk();
        let x0 = [0.3, 0.0, 0.0];
        let a = alpha_threshold(&pb, &x0).unwrap();
        let pe = principal_eigenvalue(&pb, &x0, Coupling::Finite(a + 0.5)).unwrap();
        let u = eigenfunction(&pb, &pe).unwrap();
        assert!(u.positive);
        assert!(u.residual < 1e-4);
        assert!(u.lattice_distance < 1e-2, "{}", u.lattice_distance);
    }
}
