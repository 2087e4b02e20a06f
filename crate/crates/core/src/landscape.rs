//! Principal eigenvalue as a function of the interaction site: lattice maps,
//! gradients, the reflection monotonicity audit and the minimizer.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::cli::format::csv_row;
use crate::error::{Error, Result};
use crate::geometry::{
    interior_reflection_test, DomainGrid, Hyperplane, Mask, Point, ReflectionAtlas, SmallerSide,
};
use crate::helmholtz::{green_norm_sq, solve_h, HField, Problem};
use crate::spectral::{principal_eigenvalue, Coupling, PrincipalEigenvalue, XiBranch};
use crate::specfun::SpectralParameter;

/// Distance of map samples from the boundary, in grid spacings.
pub const MAP_MARGIN: f64 = 3.0;
/// Analytic gradients with a smaller denominator fall back to differences.
pub const DENOMINATOR_GUARD: f64 = 1e-8;

/// Spectral parameter at a computed root.
pub fn root_parameter(pe: &PrincipalEigenvalue) -> Result<SpectralParameter> {
    SpectralParameter::from_xi(pe.xi)
}

/// Analytic gradient of the principal eigenvalue in the source position.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct XiGradient {
    pub gradient: Point,
    /// Gradient of `x0 -> h(x0, x0)` (real part on the positive branch).
    pub h_gradient: Point,
    /// `1/(4 pi) + dh/dy`, `d Re h/dy`, or the planar analogues with the
    /// `1/y` term; equals a constant multiple of `y ||G0||^2`.
    pub denominator: f64,
    pub norm: f64,
}

/// `grad xi` from the implicit function theorem applied to the spectral
/// condition. With `xi = -/+ y^2`:
/// 3D, xi < 0: `2 y grad h / (1/(4 pi) + dh/dy)`;
/// 3D, xi > 0: `-2 y grad Re h / (d Re h/dy)`;
/// 2D, xi < 0: `4 pi y grad h / (1/y + 2 pi dh/dy)`;
/// 2D, xi > 0: `-4 pi y grad Re h / (1/y + 2 pi d Re h/dy)`.
pub fn xi_gradient(problem: &Problem, pe: &PrincipalEigenvalue, field: &HField) -> Result<XiGradient> {
    if pe.branch == XiBranch::ZeroXi {
        return Err(Error::Unsupported("analytic gradient at the threshold".into()));
    }
    let p = root_parameter(pe)?;
    let n = match pe.norm {
        Some(n) => n,
        None => green_norm_sq(problem, &pe.x0, &p)?.value,
    };
    let dim = problem.dim();
    let c = if dim == 2 { 4.0 * std::f64::consts::PI } else { 2.0 };
    let (factor, den) = match pe.branch {
        XiBranch::NegativeXi => (c * p.y, c * p.y * n),
        _ => (-c * p.y, -c * p.y * n),
    };
    let gh = field.diagonal_gradient();
    let mut g = [0.0; 3];
    for k in 0..dim {
        g[k] = factor * gh[k] / den;
    }
    Ok(XiGradient { gradient: g, h_gradient: gh, denominator: den, norm: n })
}

#[derive(Clone, Debug, Serialize)]
pub struct LandscapeSample {
    pub node: usize,
    pub point: Point,
    pub xi: f64,
    pub branch: Option<XiBranch>,
    pub residual: f64,
    pub analytic_gradient: Option<Point>,
    pub fd_gradient: Option<Point>,
    /// Analytic gradient was replaced by the difference gradient.
    pub fallback: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LandscapeMap {
    pub alpha: f64,
    pub spacing: f64,
    pub lambda0: f64,
    pub dim: usize,
    pub samples: Vec<LandscapeSample>,
}

impl LandscapeMap {
    pub fn ok(&self) -> impl Iterator<Item = &LandscapeSample> {
        self.samples.iter().filter(|s| s.error.is_none())
    }

    /// Gradient used for reporting: analytic unless flagged.
    pub fn gradient(&self, i: usize) -> Option<Point> {
        let s = &self.samples[i];
        if s.fallback {
            s.fd_gradient
        } else {
            s.analytic_gradient.or(s.fd_gradient)
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let d = self.dim;
        let axes = ["x", "y", "z"];
        let mut head: Vec<String> = axes[..d].iter().map(|a| a.to_string()).collect();
        head.push("xi".into());
        head.extend(axes[..d].iter().map(|a| format!("dxi_d{a}")));
        head.extend(axes[..d].iter().map(|a| format!("fd_d{a}")));
        let mut out = head.join(",");
        out.push('\n');
        for s in &self.samples {
            let mut row = s.point[..d].to_vec();
            row.push(if s.error.is_none() { s.xi } else { f64::NAN });
            let ga = s.analytic_gradient.unwrap_or([f64::NAN; 3]);
            let gf = s.fd_gradient.unwrap_or([f64::NAN; 3]);
            row.extend_from_slice(&ga[..d]);
            row.extend_from_slice(&gf[..d]);
            out.push_str(&csv_row(&row));
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Sample nodes on a lattice of the given spacing anchored at the node
/// nearest the centroid, at least [`MAP_MARGIN`] spacings from the boundary.
/// The spacing is rounded to a multiple of the grid spacing.
pub fn map_lattice(grid: &DomainGrid, spacing: f64) -> Result<(usize, Vec<(usize, [i32; 3])>)> {
    if !(spacing.is_finite() && spacing >= 2.0 * grid.h * (1.0 - 1e-9)) {
        return Err(Error::param(format!("lattice spacing {spacing} is below two grid spacings")));
    }
    let step = (spacing / grid.h).round().max(2.0) as i32;
    let c = grid.centroid();
    let anchor = grid.nearest_index(&c);
    let inner = grid.interior_with_margin(MAP_MARGIN * grid.h);
    let mut out = Vec::new();
    for i in 0..grid.len() {
        if !inner.get(i) {
            continue;
        }
        let ijk = grid.nodes[i];
        let mut off = [0i32; 3];
        let mut on = true;
        for k in 0..grid.dim {
            let d = ijk[k] - anchor[k];
            if d.rem_euclid(step) != 0 {
                on = false;
                break;
            }
            off[k] = d / step;
        }
        if on {
            out.push((i, off));
        }
    }
    if out.is_empty() {
        return Err(Error::param("sample lattice has no interior points"));
    }
    Ok((step as usize, out))
}

fn sample(problem: &Problem, node: usize, alpha: Coupling) -> LandscapeSample {
    let point = problem.grid.pos(node);
    let mut s = LandscapeSample {
        node,
        point,
        xi: f64::NAN,
        branch: None,
        residual: f64::NAN,
        analytic_gradient: None,
        fd_gradient: None,
        fallback: false,
        error: None,
    };
    let run = || -> Result<(PrincipalEigenvalue, Option<XiGradient>)> {
        let pe = principal_eigenvalue(problem, &point, alpha)?;
        if pe.branch == XiBranch::ZeroXi {
            return Ok((pe, None));
        }
        let field = solve_h(problem, &point, &root_parameter(&pe)?)?;
        let g = xi_gradient(problem, &pe, &field)?;
        Ok((pe, Some(g)))
    };
    match run() {
        Ok((pe, g)) => {
            s.xi = pe.xi;
            s.branch = Some(pe.branch);
            s.residual = pe.residual;
            if let Some(g) = g {
                s.fallback = g.denominator.abs() < DENOMINATOR_GUARD;
                s.analytic_gradient = Some(g.gradient);
            } else {
                s.fallback = true;
            }
        }
        Err(e) => s.error = Some(e.to_string()),
    }
    s
}

/// Principal eigenvalue over a lattice of source positions, with analytic
/// and difference gradients.
pub fn eigenvalue_map(problem: &Problem, alpha: Coupling, spacing: f64) -> Result<LandscapeMap> {
    alpha.finite()?;
    let grid = &problem.grid;
    let (step, pts) = map_lattice(grid, spacing)?;
    let mut samples: Vec<LandscapeSample> = pts.par_iter().map(|(node, _)| sample(problem, *node, alpha)).collect();
    let offsets: Vec<[i32; 3]> = pts.iter().map(|p| p.1).collect();
    let index: std::collections::HashMap<[i32; 3], usize> = offsets.iter().enumerate().map(|(i, o)| (*o, i)).collect();
    let s = step as f64 * grid.h;
    for i in 0..samples.len() {
        if samples[i].error.is_some() {
            continue;
        }
        let mut g = [0.0; 3];
        let mut ok = true;
        for k in 0..grid.dim {
            let mut plus = offsets[i];
            plus[k] += 1;
            let mut minus = offsets[i];
            minus[k] -= 1;
            let val = |o: &[i32; 3]| index.get(o).map(|&j| &samples[j]).filter(|t| t.error.is_none()).map(|t| t.xi);
            let x = samples[i].xi;
            g[k] = match (val(&plus), val(&minus)) {
                (Some(a), Some(b)) => (a - b) / (2.0 * s),
                (Some(a), None) => (a - x) / s,
                (None, Some(b)) => (x - b) / s,
                (None, None) => {
                    ok = false;
                    0.0
                }
            };
        }
        if ok {
            samples[i].fd_gradient = Some(g);
        }
    }
    Ok(LandscapeMap {
        alpha: alpha.value(),
        spacing: s,
        lambda0: problem.lambda0()?,
        dim: grid.dim,
        samples,
    })
}

/// Reflection difference `u(x) = h(x, x0) - h(x^P, x0)` on the smaller side.
#[derive(Clone, Debug, Serialize)]
pub struct ReflectionDiff {
    pub plane: Hyperplane,
    pub x0: Point,
    pub param: SpectralParameter,
    #[serde(skip)]
    pub side: Mask,
    pub side_nodes: usize,
    #[serde(skip)]
    pub u: Vec<(usize, f64)>,
    pub min_u: f64,
    /// Points on the plane and `n . grad u` there.
    pub hopf: Vec<(Point, f64)>,
    pub min_hopf: f64,
}

/// Snap a point onto a lattice point of the plane when one is nearby.
pub fn snap_to_plane(grid: &DomainGrid, plane: &Hyperplane, x0: &Point) -> Result<Point> {
    let tol = 1e-9 * grid.h;
    if plane.signed(x0).abs() <= tol {
        return Ok(*x0);
    }
    let s = plane.signed(x0);
    let proj = [x0[0] - s * plane.normal[0], x0[1] - s * plane.normal[1], x0[2] - s * plane.normal[2]];
    let ijk = grid.nearest_index(&proj);
    let q = [ijk[0] as f64 * grid.h, ijk[1] as f64 * grid.h, ijk[2] as f64 * grid.h];
    let mut q2 = q;
    for c in q2.iter_mut().skip(grid.dim) {
        *c = 0.0;
    }
    if plane.signed(&q2).abs() <= tol {
        Ok(q2)
    } else if s.abs() <= grid.h {
        Ok(proj)
    } else {
        Err(Error::param("source is not on the hyperplane"))
    }
}

/// Reflection difference for an admitted plane and a source on it.
pub fn reflection_difference(
    problem: &Problem,
    x0: &Point,
    plane: &Hyperplane,
    p: &SpectralParameter,
) -> Result<ReflectionDiff> {
    let grid = &problem.grid;
    let side = interior_reflection_test(grid, plane)?
        .ok_or_else(|| Error::param("hyperplane is not an interior reflection hyperplane"))?;
    let x0 = snap_to_plane(grid, plane, x0)?;
    let field = solve_h(problem, &x0, p)?;
    reflection_difference_from(problem, &field, &side)
}

pub(crate) fn reflection_difference_from(problem: &Problem, field: &HField, side: &SmallerSide) -> Result<ReflectionDiff> {
    let grid = &problem.grid;
    let plane = side.plane;
    let u: Vec<(usize, f64)> = side
        .union
        .iter()
        .map(|i| {
            let x = grid.pos(i);
            (i, field.values[i] - field.eval(grid, &plane.reflect(&x)))
        })
        .collect();
    let min_u = u.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let h = grid.h;
    let n = plane.normal;
    let mut hopf = Vec::new();
    let ueval = |q: &Point| field.eval(grid, q) - field.eval(grid, &plane.reflect(q));
    for q in plane_points(grid, &plane, &side.union) {
        let a = [q[0] + h * n[0], q[1] + h * n[1], q[2] + h * n[2]];
        let b = [q[0] + 2.0 * h * n[0], q[1] + 2.0 * h * n[1], q[2] + 2.0 * h * n[2]];
        if grid.sdf(&b) > -h {
            continue;
        }
        let d = (4.0 * ueval(&a) - ueval(&b)) / (2.0 * h);
        hopf.push((q, d));
    }
    let min_hopf = hopf.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(ReflectionDiff {
        plane,
        x0: field.x0,
        param: field.param.expect("regular part with a spectral parameter"),
        side: side.union.clone(),
        side_nodes: side.union.count(),
        u,
        min_u,
        hopf,
        min_hopf,
    })
}

/// Points of the plane inside the domain adjacent to the smaller side: the
/// projections of side nodes within one spacing of the plane, deduplicated on
/// the lattice.
fn plane_points(grid: &DomainGrid, plane: &Hyperplane, side: &Mask) -> Vec<Point> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for i in side.iter() {
        let x = grid.pos(i);
        let s = plane.signed(&x);
        if s > grid.h * 1.5 {
            continue;
        }
        let q = [x[0] - s * plane.normal[0], x[1] - s * plane.normal[1], x[2] - s * plane.normal[2]];
        if grid.sdf(&q) > -grid.h {
            continue;
        }
        let key: Vec<i64> = q.iter().map(|c| (c / grid.h * 1e6).round() as i64).collect();
        if seen.insert(key) {
            out.push(q);
        }
    }
    out
}

/// One audited (hyperplane, source) pair.
#[derive(Clone, Debug, Serialize)]
pub struct AuditPair {
    pub plane: Hyperplane,
    pub x0: Point,
    pub xi: f64,
    pub branch: XiBranch,
    /// `n . grad xi` from the analytic gradient.
    pub n_grad_xi: f64,
    /// `n . grad_x h(x, x0)` at the source.
    pub n_grad_h: f64,
    /// Directional difference of xi along the normal.
    pub n_grad_xi_fd: f64,
    pub denominator: f64,
    pub min_u: f64,
    pub min_hopf: f64,
    pub hopf_samples: usize,
    /// Sign of `n . grad xi` agrees with that of `n . grad h` times the
    /// positive denominator ratio.
    pub chain_consistent: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub alpha: f64,
    pub pairs: Vec<AuditPair>,
    pub passed: usize,
    pub failed: usize,
    pub worst_n_grad_xi: f64,
    pub worst_u: f64,
    pub worst_hopf: f64,
    pub errors: Vec<String>,
}

/// Options for choosing audited pairs.
#[derive(Clone, Copy, Debug)]
pub struct AuditOptions {
    pub pairs: usize,
    pub points_per_plane: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { pairs: 16, points_per_plane: 2 }
    }
}

/// Lattice vector parallel to a unit normal with entries in {-1, 0, 1} and
/// at most two non-zero entries, so reflections map nodes to nodes.
fn lattice_direction(n: &Point) -> Option<[i32; 3]> {
    let mut v = [0i32; 3];
    for k in 0..3 {
        if n[k].abs() > 1e-9 {
            v[k] = n[k].signum() as i32;
        }
    }
    let nz = v.iter().filter(|c| **c != 0).count();
    if nz == 0 || nz > 2 {
        return None;
    }
    let len = (nz as f64).sqrt();
    let ok = (0..3).all(|k| (n[k] - v[k] as f64 / len).abs() < 1e-9);
    ok.then_some(v)
}

/// Admitted planes to audit: lattice-exact snaps of the atlas planes first,
/// then the atlas planes themselves, spread over directions and offsets.
pub fn audit_planes(grid: &DomainGrid, atlas: &ReflectionAtlas, wanted: usize) -> Vec<SmallerSide> {
    let mut exact = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for ap in atlas.admitted() {
        let Some(v) = lattice_direction(&ap.plane.normal) else { continue };
        let len = ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as f64).sqrt();
        let k = (ap.plane.offset * len / grid.h).round() as i64;
        if !seen.insert((v, k)) {
            continue;
        }
        let Ok(plane) = Hyperplane::new([v[0] as f64, v[1] as f64, v[2] as f64], k as f64 * grid.h / len) else {
            continue;
        };
        if let Ok(Some(side)) = interior_reflection_test(grid, &plane) {
            exact.push((ap.direction, side));
        }
    }
    let mut pool: Vec<(usize, SmallerSide)> = if exact.is_empty() {
        atlas
            .admitted()
            .filter_map(|ap| interior_reflection_test(grid, &ap.plane).ok().flatten().map(|s| (ap.direction, s)))
            .collect()
    } else {
        exact
    };
    pool.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.plane.offset.total_cmp(&b.1.plane.offset)));
    let mut by_dir: std::collections::BTreeMap<usize, Vec<SmallerSide>> = std::collections::BTreeMap::new();
    for (d, s) in pool {
        by_dir.entry(d).or_default().push(s);
    }
    let mut out = Vec::new();
    let dirs = by_dir.len();
    let mut used: Vec<Vec<bool>> = by_dir.values().map(|l| vec![false; l.len()]).collect();
    let mut round = 0;
    while out.len() < wanted {
        let mut any = false;
        for (j, list) in by_dir.values().enumerate() {
            let m = list.len();
            if round >= m {
                continue;
            }
            let t = (0.5 + (round * dirs + j) as f64 * 0.618_033_988_749_895).fract();
            let mut pick = ((t * m as f64) as usize).min(m - 1);
            while used[j][pick] {
                pick = (pick + 1) % m;
            }
            used[j][pick] = true;
            out.push(list[pick].clone());
            any = true;
            if out.len() >= wanted {
                break;
            }
        }
        if !any {
            break;
        }
        round += 1;
    }
    out
}

/// Source points on a plane: lattice points of the plane far enough inside
/// that the normal difference steps stay clear of the source margin.
fn sources_on_plane(grid: &DomainGrid, plane: &Hyperplane, side: &Mask, count: usize) -> Vec<Point> {
    let margin = (MAP_MARGIN + 1.5) * grid.h;
    let mut pts: Vec<Point> = (0..grid.len())
        .map(|i| grid.pos(i))
        .filter(|x| plane.signed(x).abs() <= 1e-9 * grid.h && grid.sdf(x) <= -margin)
        .collect();
    if pts.is_empty() {
        pts = plane_points(grid, plane, side).into_iter().filter(|q| grid.sdf(q) <= -margin).collect();
    }
    if pts.len() <= count {
        return pts;
    }
    (0..count).map(|k| pts[(2 * k + 1) * pts.len() / (2 * count)]).collect()
}

/// Check strict monotonicity of xi across admitted hyperplanes.
pub fn monotonicity_audit(
    problem: &Problem,
    alpha: Coupling,
    atlas: &ReflectionAtlas,
    options: &AuditOptions,
) -> Result<AuditReport> {
    alpha.finite()?;
    let grid = &problem.grid;
    let planes = audit_planes(grid, atlas, options.pairs.div_ceil(options.points_per_plane.max(1)) * 2);
    let mut jobs = Vec::new();
    for side in &planes {
        for x0 in sources_on_plane(grid, &side.plane, &side.union, options.points_per_plane) {
            jobs.push((side.clone(), x0));
        }
        if jobs.len() >= options.pairs {
            break;
        }
    }
    let results: Vec<Result<AuditPair>> = jobs.par_iter().map(|(side, x0)| audit_pair(problem, alpha, side, x0)).collect();
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(p) => pairs.push(p),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let passed = pairs.iter().filter(|p| p.pass).count();
    let failed = pairs.len() - passed + errors.len();
    Ok(AuditReport {
        alpha: alpha.value(),
        worst_n_grad_xi: pairs.iter().map(|p| p.n_grad_xi).fold(f64::INFINITY, f64::min),
        worst_u: pairs.iter().map(|p| p.min_u).fold(f64::INFINITY, f64::min),
        worst_hopf: pairs.iter().map(|p| p.min_hopf).fold(f64::INFINITY, f64::min),
        pairs,
        passed,
        failed,
        errors,
    })
}

fn audit_pair(problem: &Problem, alpha: Coupling, side: &SmallerSide, x0: &Point) -> Result<AuditPair> {
    let grid = &problem.grid;
    let plane = side.plane;
    let n = plane.normal;
    let pe = principal_eigenvalue(problem, x0, alpha)?;
    let p = root_parameter(&pe)?;
    let field = solve_h(problem, x0, &p)?;
    let g = xi_gradient(problem, &pe, &field)?;
    let dot = |a: &Point| a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
    let n_grad_xi = dot(&g.gradient);
    let n_grad_h = dot(&field.gradient);
    let rd = reflection_difference_from(problem, &field, side)?;
    let step = match lattice_direction(&n) {
        Some(v) => grid.h * ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as f64).sqrt(),
        None => grid.h,
    };
    let shifted = |s: f64| [x0[0] + s * n[0], x0[1] + s * n[1], x0[2] + s * n[2]];
    let xp = principal_eigenvalue(problem, &shifted(step), alpha)?.xi;
    let xm = principal_eigenvalue(problem, &shifted(-step), alpha)?.xi;
    let n_grad_xi_fd = (xp - xm) / (2.0 * step);
    let ratio = g.denominator.signum() * if pe.branch == XiBranch::NegativeXi { 1.0 } else { -1.0 };
    let chain_consistent = n_grad_xi.signum() == (n_grad_h * ratio).signum();
    let pass = n_grad_xi > 0.0 && n_grad_h > 0.0 && rd.min_u > 0.0 && rd.min_hopf > 0.0 && chain_consistent && n_grad_xi_fd > 0.0;
    Ok(AuditPair {
        plane,
        x0: pe.x0,
        xi: pe.xi,
        branch: pe.branch,
        n_grad_xi,
        n_grad_h,
        n_grad_xi_fd,
        denominator: g.denominator,
        min_u: rd.min_u,
        min_hopf: rd.min_hopf,
        hopf_samples: rd.hopf.len(),
        chain_consistent,
        pass,
    })
}

/// Lattice minimizer and whether it lies in the admissible region.
#[derive(Clone, Debug, Serialize)]
pub struct MinimumVerdict {
    pub point: Point,
    pub node: usize,
    pub xi: f64,
    pub convex: bool,
    /// Minimizer lies outside Sigma (convex) or Sigma' (otherwise).
    pub admissible: bool,
    /// Distance to the nearest admissible node, zero when admissible.
    pub distance: f64,
    /// Distance to the raster centroid.
    pub centroid_distance: f64,
    pub admissible_nodes: usize,
}

pub fn locate_minimum(grid: &DomainGrid, map: &LandscapeMap, atlas: &ReflectionAtlas) -> Result<MinimumVerdict> {
    let best = map
        .ok()
        .min_by(|a, b| a.xi.total_cmp(&b.xi).then(a.node.cmp(&b.node)))
        .ok_or_else(|| Error::not_converged("landscape", "no successful samples"))?;
    let convex = grid.spec.domain.is_convex();
    let region = atlas.admissible(convex);
    let admissible = region.get(best.node);
    let distance = if admissible {
        0.0
    } else {
        region.iter().map(|i| crate::geometry::dist(&grid.pos(i), &best.point)).fold(f64::INFINITY, f64::min)
    };
    Ok(MinimumVerdict {
        point: best.point,
        node: best.node,
        xi: best.xi,
        convex,
        admissible,
        distance,
        centroid_distance: crate::geometry::dist(&best.point, &grid.centroid()),
        admissible_nodes: region.count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{reflection_atlas, AtlasConfig, DomainKind, DomainSpec};

    fn disk(h: f64) -> Problem {
        Problem::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, h), 4).unwrap()
    }

    #[test]
    fn reflection_difference_is_positive() {
        let pb = disk(0.05);
        let plane = Hyperplane::new([1.0, 0.0, 0.0], 0.3).unwrap();
        let p = SpectralParameter::negative(1.0).unwrap();
        let rd = reflection_difference(&pb, &[0.3, 0.0, 0.0], &plane, &p).unwrap();
        assert!(rd.min_u > 0.0);
        assert!(!rd.hopf.is_empty() && rd.min_hopf > 0.0);
        let center = Hyperplane::new([1.0, 0.0, 0.0], 0.0).unwrap();
        assert!(reflection_difference(&pb, &[0.0; 3], &center, &p).is_err());
    }

    #[test]
    fn map_center_gradient_vanishes() {
        let pb = disk(0.05);
        let m = eigenvalue_map(&pb, Coupling::Finite(0.0), 0.25).unwrap();
        let c = m.samples.iter().find(|s| crate::geometry::norm(&s.point) < 1e-12).unwrap();
        let g = c.analytic_gradient.unwrap();
        assert!(g[0].abs() < 1e-5 && g[1].abs() < 1e-5);
        let atlas = reflection_atlas(&pb.grid, &AtlasConfig { angles: 16, offsets: 32 }).unwrap();
        let v = locate_minimum(&pb.grid, &m, &atlas).unwrap();
        assert!(v.admissible && v.centroid_distance < 1e-12);
    }
}
