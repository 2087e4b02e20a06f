//! Squared L2 norm of the Dirichlet kernel `G0^z(., x0)`.

use gauss_quad::GaussLegendre;
use serde::Serialize;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use super::Problem;
use crate::dirichlet::{sine_mode, sine_modes_below, BasisSource};
use crate::error::{Error, Result};
use crate::geometry::{norm, Point};
use crate::specfun::{Branch, SpectralParameter};

/// How the norm was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormRoute {
    /// Sine-product expansion with a Weyl tail.
    EigenSum,
    /// Radial expansion at the center of a ball.
    RadialSum,
    /// Lattice resolvent applied to a discrete delta, with the
    /// short-wavelength lattice correction removed.
    LatticeResolvent,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GreenNorm {
    pub value: f64,
    pub route: NormRoute,
    /// Truncation tail (expansions) or lattice correction (resolvent).
    pub tail: f64,
}

/// `||G0^z(., x0)||^2`, choosing the expansion where one is complete and
/// the lattice resolvent otherwise. Positive-branch parameters always use
/// the lattice so that the pole sits at the lattice principal eigenvalue.
pub fn green_norm_sq(problem: &Problem, x0: &Point, p: &SpectralParameter) -> Result<GreenNorm> {
    let route = match (problem.basis.source, p.branch) {
        (BasisSource::AnalyticRectangle, Branch::NegativeXi) => NormRoute::EigenSum,
        (BasisSource::RadialBall, Branch::NegativeXi) if norm(x0) < 1e-12 => NormRoute::RadialSum,
        _ => NormRoute::LatticeResolvent,
    };
    green_norm_sq_with(problem, x0, p, route)
}

pub fn green_norm_sq_with(problem: &Problem, x0: &Point, p: &SpectralParameter, route: NormRoute) -> Result<GreenNorm> {
    problem.check_source(x0)?;
    problem.check_parameter(p)?;
    let z = p.z();
    match route {
        NormRoute::EigenSum => eigen_sum(problem, x0, z),
        NormRoute::RadialSum => radial_sum(problem, x0, z),
        NormRoute::LatticeResolvent => lattice_norm(problem, x0, z),
    }
}

fn eigen_sum(problem: &Problem, x0: &Point, z: f64) -> Result<GreenNorm> {
    let ext = problem
        .basis
        .sine_extents()
        .ok_or_else(|| Error::Unsupported("eigen-sum needs an analytic basis".into()))?;
    if ext.len() != 2 {
        return Err(Error::Unsupported("eigen-sum with a Weyl tail is planar".into()));
    }
    let lam0 = problem.basis.lambda0();
    if z <= -lam0 {
        return Err(Error::param("shift at or beyond the principal eigenvalue"));
    }
    let mut cap = 1e3 * lam0 + 4.0 * z.abs();
    loop {
        let sum: f64 = sine_modes_below(ext, cap)
            .iter()
            .map(|(lam, idx)| {
                let v = sine_mode(ext, idx, x0);
                v * v / ((lam + z) * (lam + z))
            })
            .sum();
        let tail = 1.0 / (4.0 * PI * (cap + z));
        if tail < 1e-3 * sum || cap > 2e7 * lam0 {
            if tail > 1e-2 * sum {
                return Err(Error::not_converged("eigen-sum", format!("tail {tail:.3e} against {sum:.3e}")));
            }
            return Ok(GreenNorm { value: sum + tail, route: NormRoute::EigenSum, tail });
        }
        cap *= 4.0;
    }
}

fn radial_sum(problem: &Problem, x0: &Point, z: f64) -> Result<GreenNorm> {
    let r = problem
        .basis
        .ball_radius()
        .ok_or_else(|| Error::Unsupported("radial sum needs a ball".into()))?;
    if norm(x0) > 1e-12 * r {
        return Err(Error::Unsupported("radial sum is exact only at the center".into()));
    }
    if z <= -(PI / r).powi(2) {
        return Err(Error::param("shift at or beyond the principal eigenvalue"));
    }
    let m = 200_000usize;
    let c = 1.0 / (2.0 * PI * r);
    let mut sum = 0.0;
    for n in (1..=m).rev() {
        let k2 = (n as f64 * PI / r).powi(2);
        sum += c * k2 / ((k2 + z) * (k2 + z));
    }
    let kc = (m as f64 + 0.5) * PI / r;
    let tail = (1.0 / kc - 2.0 * z / (3.0 * kc.powi(3))) / (2.0 * PI * PI);
    Ok(GreenNorm { value: sum + tail, route: NormRoute::RadialSum, tail })
}

fn lattice_norm(problem: &Problem, x0: &Point, z: f64) -> Result<GreenNorm> {
    let grid = &problem.grid;
    let dim = grid.dim;
    let h = grid.h;
    let cell = grid.cell();
    let mut base = [0i32; 3];
    let mut frac = [0.0; 3];
    for k in 0..dim {
        let s = x0[k] / h;
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            base[k] = r as i32;
        } else {
            base[k] = s.floor() as i32;
            frac[k] = s - s.floor();
        }
    }
    let mut total = 0.0;
    for c in 0..(1usize << dim) {
        let mut ijk = base;
        let mut w = 1.0;
        for k in 0..dim {
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
        let node = grid.lookup(&ijk).ok_or_else(|| Error::OutsideDomain(x0[..dim].to_vec()))?;
        let mut b = vec![0.0; grid.len()];
        b[node] = 1.0 / cell;
        let (x, _) = problem.solver.solve(z, &b, &problem.opts)?;
        total += w * x.iter().map(|v| v * v).sum::<f64>() * cell;
    }
    let corr = lattice_correction(dim, h, z.abs() * h * h);
    Ok(GreenNorm { value: total - corr, route: NormRoute::LatticeResolvent, tail: corr })
}

/// `t^2 - 4 sin^2(t/2)` without cancellation.
fn dispersion_defect(t: f64) -> f64 {
    if t.abs() < 0.1 {
        let t2 = t * t;
        let t4 = t2 * t2;
        t4 * (1.0 / 12.0 - t2 * (1.0 / 360.0 - t2 * (1.0 / 20160.0 - t2 / 1_814_400.0)))
    } else {
        let s = (0.5 * t).sin();
        t * t - 4.0 * s * s
    }
}

fn legendre(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n).expect("positive order"))
        .as_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (*x, *w))
        .collect()
}

fn rules() -> &'static (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    static R: OnceLock<(Vec<(f64, f64)>, Vec<(f64, f64)>)> = OnceLock::new();
    R.get_or_init(|| (legendre(32), legendre(16)))
}

/// Radial integral over `t in (0, pi)` on geometric panels, accurate for
/// integrands concentrated near `sqrt(s)`.
fn radial<F: Fn(f64) -> f64>(s: f64, f: F) -> f64 {
    let (_, rule) = rules();
    let lo = if s > 0.0 { 1e-4 * s.sqrt() } else { 1e-12 };
    let panels = ((PI / lo).ln() / 3f64.ln()).ceil().max(1.0) as usize;
    let (a, b) = (lo.ln(), PI.ln());
    let w = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let (p0, p1) = (a + k as f64 * w, a + (k + 1) as f64 * w);
        for (x, wt) in rule {
            let u = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * x;
            let t = u.exp();
            acc += 0.5 * (p1 - p0) * wt * t * f(t);
        }
    }
    acc
}

fn defect_2d(s: f64) -> f64 {
    let (ang, _) = rules();
    let mut acc = 0.0;
    for (u, wu) in ang {
        let q = 1.0 + u * u;
        let inner = radial(s, |t| {
            let (a1, a2) = (t * u, t);
            let b = q * t * t + s;
            let d = dispersion_defect(a1) + dispersion_defect(a2);
            let a = b - d;
            t * d * (a + b) / (a * a * b * b)
        });
        let outside = 1.0 / (2.0 * q * (q * PI * PI + s));
        acc += wu * (inner - outside);
    }
    4.0 * acc
}

fn defect_3d(s: f64) -> f64 {
    let (ang, _) = rules();
    let mut acc = 0.0;
    for (u, wu) in ang {
        for (v, wv) in ang {
            let q = 1.0 + u * u + v * v;
            let inner = radial(s, |t| {
                let b = q * t * t + s;
                let d = dispersion_defect(t * u) + dispersion_defect(t * v) + dispersion_defect(t);
                let a = b - d;
                t * t * d * (a + b) / (a * a * b * b)
            });
            let x = (s / q).sqrt() / PI;
            let at = if x < 1e-8 { 1.0 / (q * PI) } else { x.atan() / (q * s).sqrt() };
            let outside = (PI / (q * PI * PI + s) + at) / (2.0 * q);
            acc += wu * wv * (inner - outside);
        }
    }
    6.0 * acc
}

/// Difference between the lattice and continuum squared norms of the
/// whole-space kernel, `s = (shift) h^2` in lattice units.
pub fn lattice_correction(dim: usize, h: f64, s: f64) -> f64 {
    let s = s.abs();
    if dim == 2 {
        h * h / (4.0 * PI * PI) * defect_2d(s)
    } else {
        h / (8.0 * PI.powi(3)) * defect_3d(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force lattice integral minus the continuum value, on a
    /// midpoint grid over the Brillouin zone.
    fn brute_2d(s: f64, n: usize) -> f64 {
        let w = 2.0 * PI / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = -PI + (i as f64 + 0.5) * w;
                let b = -PI + (j as f64 + 0.5) * w;
                let e = 4.0 * ((0.5 * a).sin().powi(2) + (0.5 * b).sin().powi(2)) + s;
                acc += w * w / (e * e);
            }
        }
        acc - PI / s
    }

    #[test]
    fn planar_defect_matches_brute_force() {
        let s = 0.3;
        let d = defect_2d(s);
        let b = brute_2d(s, 1200);
        assert!((d - b).abs() < 1e-6, "{d} {b}");
    }

    #[test]
    fn defect_is_finite_and_smooth_in_s() {
        let a = defect_3d(1e-4);
        let b = defect_3d(2e-4);
        assert!(a.is_finite() && b.is_finite());
        assert!((a - b).abs() < 1e-2 * a.abs().max(1.0));
        assert!((defect_3d(0.0) - defect_3d(1e-12)).abs() < 1e-4);
    }

    #[test]
    fn defect_expansion_is_accurate() {
        for t in [0.01, 0.05, 0.099, 0.1, 0.5] {
            let direct = t * t - 4.0 * (0.5 * t as f64).sin().powi(2);
            let want = t.powi(4) / 12.0;
            assert!((dispersion_defect(t) - direct).abs() <= 1e-12 * want.max(1e-30) + 1e-17);
        }
    }
}
