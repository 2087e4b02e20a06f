use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::format::{csv_row, sci};
use super::{stage, Failure, Outputs};
use crate::dirichlet::BasisSource;
use crate::geometry::{reflection_atlas, DomainGrid, Point, ReflectionAtlas};
use crate::helmholtz::{dh_dy, solve_h, solve_h_imag, Problem};
use crate::landscape::{eigenvalue_map, locate_minimum, monotonicity_audit, AuditOptions};
use crate::spectral::{
    apply_resolvent, charge, eigenfunction, field_norm, principal_eigenvalue_with, Coupling, XiBranch,
};
use crate::specfun::SpectralParameter;

type Outcome = std::result::Result<(), Failure>;

pub(crate) fn problem(cfg: &RunConfig) -> std::result::Result<Problem, Failure> {
    let mut pb = stage("basis", Problem::new(&cfg.spec(), cfg.basis_size))?;
    pb.opts.tol = cfg.tolerances.solver;
    Ok(pb)
}

/// Configured source, or the raster centroid.
pub(crate) fn source(cfg: &RunConfig, pb: &Problem) -> std::result::Result<Point, Failure> {
    let x0 = cfg.source().unwrap_or_else(|| pb.grid.centroid());
    pb.check_source(&x0).map_err(|e| Failure::Config(format!("x0: {e}")))?;
    Ok(x0)
}

fn coords(p: &Point, dim: usize) -> Vec<f64> {
    p[..dim].to_vec()
}

fn header(dim: usize, rest: &[&str]) -> String {
    let mut h: Vec<&str> = ["x", "y", "z"][..dim].to_vec();
    h.extend_from_slice(rest);
    let mut s = h.join(",");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct LevelRow {
    lambda: f64,
    multiplicity: usize,
    start: usize,
}

pub(crate) fn basis(cfg: &RunConfig, out: &mut Outputs) -> Outcome {
    let pb = problem(cfg)?;
    let lam_h = stage("lambda0", pb.lambda0())?;
    let b = &pb.basis;
    let mut csv = String::from("index,lambda\n");
    for (k, l) in b.eigenvalues.iter().enumerate() {
        csv.push_str(&format!("{k},{}\n", sci(*l)));
    }
    let levels: Vec<LevelRow> =
        b.levels.iter().map(|l| LevelRow { lambda: l.lambda, multiplicity: l.multiplicity, start: l.start }).collect();
    out.json(
        "basis.json",
        &json!({
            "source": b.source,
            "complete": b.is_complete(),
            "nodes": pb.grid.len(),
            "resolution": pb.grid.h,
            "eigenvalues": b.eigenvalues,
            "levels": levels,
            "lambda0_lattice": lam_h,
        }),
    );
    out.text("basis.csv", csv);
    if b.source == BasisSource::NumericGrid {
        out.bytes("basis.bin", stage("basis", b.to_bytes(&pb.grid))?);
    }
    Ok(())
}

pub(crate) fn h_eval(cfg: &RunConfig, out: &mut Outputs) -> Outcome {
    let pb = problem(cfg)?;
    let x0 = source(cfg, &pb)?;
    let mut csv = String::from("xi,y,h_re,h_im,dh_dy,norm\n");
    let mut rows = Vec::new();
    let params = cfg
        .h_eval
        .y
        .iter()
        .map(|y| SpectralParameter::negative(*y))
        .chain(cfg.h_eval.positive_y.iter().map(|y| SpectralParameter::positive(*y)));
    for p in params {
        let p = stage("h-eval", p)?;
        stage("h-eval", pb.check_parameter(&p))?;
        let re = stage("h-eval", solve_h(&pb, &x0, &p))?;
        let im = if p.branch == crate::specfun::Branch::PositiveXi {
            stage("h-eval", solve_h_imag(&pb, &x0, &p))?.coincidence
        } else {
            0.0
        };
        let (d, n) = if p.y > 0.0 {
            let d = stage("dh-dy", dh_dy(&pb, &x0, &p, false))?;
            (d.value, d.norm.value)
        } else {
            (f64::NAN, f64::NAN)
        };
        let xi = -p.z();
        csv.push_str(&csv_row(&[xi, p.y, re.coincidence, im, d, n]));
        rows.push(json!({"xi": xi, "y": p.y, "h_re": re.coincidence, "h_im": im, "dh_dy": d, "norm": n,
            "residual": re.residual(&pb)}));
    }
    out.text("h_eval.csv", csv);
    out.json("h_eval.json", &json!({"x0": coords(&x0, pb.dim()), "rows": rows}));
    out.text(
        "h_eval.gp",
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'y'\nset ylabel 'h(x0,x0)'\n\
         plot 'h_eval.csv' using 2:3 with linespoints title 'Re h'\n"
            .into(),
    );
    Ok(())
}

pub(crate) fn solve(cfg: &RunConfig, out: &mut Outputs) -> Outcome {
    let pb = problem(cfg)?;
    let x0 = source(cfg, &pb)?;
    let lam = stage("lambda0", pb.lambda0())?;
    if cfg.alpha.0 == Coupling::Infinite {
        out.json(
            "solve.json",
            &json!({"alpha": "inf", "x0": coords(&x0, pb.dim()), "xi": lam, "branch": "dirichlet", "lambda0": lam}),
        );
        return Ok(());
    }
    let pe = stage("root", principal_eigenvalue_with(&pb, &x0, cfg.alpha.0, true))?;
    let ef = if pe.branch == XiBranch::ZeroXi && pb.dim() == 2 {
        None
    } else {
        Some(stage("eigenfunction", eigenfunction(&pb, &pe))?)
    };
    let mut v = serde_json::to_value(&pe).expect("serializes");
    let m = v.as_object_mut().expect("object");
    m.insert("x0".into(), json!(coords(&x0, pb.dim())));
    m.insert(
        "eigenfunction".into(),
        match &ef {
            Some(e) => json!({"residual": e.residual, "lattice_distance": e.lattice_distance, "positive": e.positive}),
            None => serde_json::Value::Null,
        },
    );
    out.json("solve.json", &v);
    if let Some(e) = ef {
        let dim = pb.dim();
        let mut csv = header(dim, &["u"]);
        for i in 0..pb.grid.len() {
            let mut row = coords(&pb.grid.pos(i), dim);
            row.push(e.values[i]);
            csv.push_str(&csv_row(&row));
        }
        out.text("eigenfunction.csv", csv);
    }
    Ok(())
}

fn atlas(cfg: &RunConfig, grid: &DomainGrid) -> std::result::Result<ReflectionAtlas, Failure> {
    stage("atlas", reflection_atlas(grid, &cfg.atlas_config()))
}

pub(crate) fn landscape(cfg: &RunConfig, out: &mut Outputs) -> Outcome {
    let pb = problem(cfg)?;
    let map = stage("landscape", eigenvalue_map(&pb, cfg.alpha.0, cfg.spacing()))?;
    let at = atlas(cfg, &pb.grid)?;
    let verdict = stage("minimum", locate_minimum(&pb.grid, &map, &at))?;
    let dim = pb.dim();
    let axes = ["x", "y", "z"];
    let mut cols = vec!["xi".to_string()];
    cols.extend(axes[..dim].iter().map(|a| format!("dxi_d{a}")));
    cols.extend(axes[..dim].iter().map(|a| format!("fd_d{a}")));
    let cols: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut csv = header(dim, &cols);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for s in &map.samples {
        let mut row = coords(&s.point, dim);
        row.push(if s.error.is_none() { s.xi } else { f64::NAN });
        let ga = s.analytic_gradient.unwrap_or([f64::NAN; 3]);
        let gf = s.fd_gradient.unwrap_or([f64::NAN; 3]);
        row.extend_from_slice(&ga[..dim]);
        row.extend_from_slice(&gf[..dim]);
        csv.push_str(&csv_row(&row));
        if let Some(e) = &s.error {
            failures.push(json!({"x0": coords(&s.point, dim), "error": e}));
        }
        if let (Some(a), Some(f)) = (s.analytic_gradient, s.fd_gradient) {
            for k in 0..dim {
                worst = worst.max((a[k] - f[k]).abs());
            }
        }
    }
    out.text("landscape.csv", csv);
    out.json(
        "landscape.json",
        &json!({
            "alpha": cfg.alpha,
            "spacing": map.spacing,
            "lambda0": map.lambda0,
            "samples": map.samples.len(),
            "fallbacks": map.samples.iter().filter(|s| s.fallback).count(),
            "failures": failures,
            "max_gradient_difference": worst,
            "minimum": verdict,
        }),
    );
    let script = if dim == 2 {
        "set datafile separator ','\nset key autotitle columnhead\nset view map\nset size ratio -1\n\
         splot 'landscape.csv' using 1:2:3 with points palette pointtype 5 notitle\n"
    } else {
        "set datafile separator ','\nset key autotitle columnhead\n\
         splot 'landscape.csv' using 1:2:3:4 with points palette pointtype 7 notitle\n"
    };
    out.text("landscape.gp", script.into());
    Ok(())
}

pub(crate) fn sigma(cfg: &RunConfig, out: &mut Outputs) -> Outcome {
    let grid = stage("grid", DomainGrid::new(&cfg.spec()))?;
    let at = atlas(cfg, &grid)?;
    let convex = grid.spec.domain.is_convex();
    let adm = at.admissible(convex);
    let dim = grid.dim;
    let mut csv = header(dim, &["sigma", "sigma_prime", "admissible"]);
    for i in 0..grid.len() {
        let mut s = csv_row(&coords(&grid.pos(i), dim));
        s.pop();
        let flag = |b: bool| if b { 1 } else { 0 };
        csv.push_str(&format!("{s},{},{},{}\n", flag(at.sigma.get(i)), flag(at.sigma_prime.get(i)), flag(adm.get(i))));
    }
    let complement: Vec<f64> = {
        let n = adm.count().max(1) as f64;
        let mut c = [0.0; 3];
        for i in adm.iter() {
            let p = grid.pos(i);
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        coords(&c, dim)
    };
    out.text("sigma.csv", csv);
    out.json(
        "sigma.json",
        &json!({
            "convex": convex,
            "nodes": grid.len(),
            "planes": at.planes.len(),
            "admitted": at.admitted().count(),
            "sliding": at.planes.iter().filter(|p| p.sliding).count(),
            "sigma_nodes": at.sigma.count(),
            "sigma_prime_nodes": at.sigma_prime.count(),
            "admissible_nodes": adm.count(),
            "admissible_centroid": complement,
            "atlas": at.config,
        }),
    );
    out.text(
        "sigma.gp",
        "set datafile separator ','\nset key autotitle columnhead\nset size ratio -1\n\
         plot 'sigma.csv' using 1:2:($5) with points palette pointtype 5 notitle\n"
            .into(),
    );
    Ok(())
}

pub(crate) fn audit(cfg: &RunConfig, out: &mut Outputs) -> Outcome {
    let pb = problem(cfg)?;
    let at = atlas(cfg, &pb.grid)?;
    let opts = AuditOptions { pairs: cfg.audit.pairs, points_per_plane: cfg.audit.points_per_plane };
    let report = stage("audit", monotonicity_audit(&pb, cfg.alpha.0, &at, &opts))?;
    out.json("audit.json", &report);
    if report.failed > 0 || report.pairs.len() < cfg.audit.pairs {
        return Err(Failure::Verification(format!(
            "{} of {} audited pairs failed, {} requested",
            report.failed,
            report.pairs.len() + report.errors.len(),
            cfg.audit.pairs
        )));
    }
    Ok(())
}

pub(crate) fn resolvent(cfg: &RunConfig, out: &mut Outputs) -> Outcome {
    let pb = problem(cfg)?;
    let x0 = source(cfg, &pb)?;
    let lam = stage("lambda0", pb.lambda0())?;
    let zs: Vec<f64> = if cfg.resolvent.z.is_empty() {
        let n = cfg.resolvent.points.max(1);
        (0..n).map(|k| -lam + 3.0 * lam * (k as f64 + 0.5) / n as f64).collect()
    } else {
        cfg.resolvent.z.clone()
    };
    let interior = pb.grid.interior_with_margin(0.0);
    let phi: Vec<f64> = (0..pb.grid.len()).map(|i| if interior.get(i) { 1.0 } else { 0.0 }).collect();
    let phi_norm = field_norm(&pb, &phi, None);
    let mut csv = String::from("z,q,resolvent_norm,coefficient\n");
    let mut skipped = Vec::new();
    for z in zs {
        let row = charge(&pb, &x0, cfg.alpha.0, z)
            .and_then(|_| apply_resolvent(&pb, &x0, cfg.alpha.0, z, &phi))
            .map(|r| [z, r.charge.q, field_norm(&pb, &r.values, r.source) / phi_norm, r.coefficient]);
        match row {
            Ok(r) => csv.push_str(&csv_row(&r)),
            Err(crate::Error::InvalidParameter(m)) => {
                csv.push_str(&csv_row(&[z, f64::NAN, f64::NAN, f64::NAN]));
                skipped.push(json!({"z": z, "reason": m}));
            }
            Err(e) => return stage("resolvent", Err(e)),
        }
    }
    let pole = match cfg.alpha.0 {
        Coupling::Finite(_) => Some(-stage("root", principal_eigenvalue_with(&pb, &x0, cfg.alpha.0, false))?.xi),
        Coupling::Infinite => None,
    };
    out.text("resolvent.csv", csv);
    out.json(
        "resolvent.json",
        &json!({"x0": coords(&x0, pb.dim()), "alpha": cfg.alpha, "lambda0": lam, "pole_z": pole, "skipped": skipped}),
    );
    out.text(
        "resolvent.gp",
        "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 'z'\n\
         plot 'resolvent.csv' using 1:3 with linespoints title '|R phi|/|phi|'\n"
            .into(),
    );
    Ok(())
}
