//! Oracle and invariant suite run by `krein verify`.

use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;

use super::commands::{problem, source};
use super::config::RunConfig;
use super::{execute, Command, Failure, Outputs};
use crate::geometry::{norm, reflection_atlas, AtlasConfig, DomainKind, Point};
use crate::helmholtz::{dh_dy, Problem};
use crate::landscape::{eigenvalue_map, locate_minimum, monotonicity_audit, AuditOptions};
use crate::spectral::{
    alpha_threshold, charge, eigenfunction, principal_eigenvalue, sign_changes, spectral_function, Coupling,
    XiBranch,
};
use crate::specfun::{bessel_i0, bessel_i1, bessel_k0, bessel_k1, SpectralParameter, EULER_GAMMA};

#[derive(Serialize)]
struct Suite {
    name: &'static str,
    pass: bool,
    detail: Value,
}

type Check = crate::Result<(bool, Value)>;

/// K0 by the trapezoid rule on `int_0^inf exp(-x cosh t) dt`, which is
/// spectrally accurate for this integrand.
fn k0_integral(x: f64) -> f64 {
    let step: f64 = 0.02;
    let mut acc = 0.5 * (-x).exp();
    let mut t = step;
    loop {
        let v = (-x * t.cosh()).exp();
        acc += v;
        if v < 1e-300 || t > 40.0 {
            break;
        }
        t += step;
    }
    acc * step
}

fn specfun_suite() -> Check {
    let mut worst_w = 0.0f64;
    let mut worst_k = 0.0f64;
    for x in [0.01, 0.3, 1.0, 2.0, 5.0, 20.0, 60.0] {
        let w = bessel_i0(x)? * bessel_k1(x)? + bessel_i1(x)? * bessel_k0(x)?;
        worst_w = worst_w.max((w * x - 1.0).abs());
        let k = bessel_k0(x)?;
        worst_k = worst_k.max(((k - k0_integral(x)) / k).abs());
    }
    Ok((worst_w < 1e-12 && worst_k < 1e-12, json!({"wronskian": worst_w, "k0_integral": worst_k})))
}

fn threshold_suite(cfg: &RunConfig, pb: &Problem, x0: &Point) -> Check {
    let a = alpha_threshold(pb, x0)?;
    let lam = pb.lambda0()?;
    let phi = spectral_function(pb, x0, a, 0.0)?;
    let oracle = match (&cfg.domain, norm(x0) < 1e-12) {
        (DomainKind::Disk { radius }, true) => Some(radius.ln() + 2f64.ln() - EULER_GAMMA),
        (DomainKind::Ball { radius }, true) => Some(-1.0 / (4.0 * PI * radius)),
        _ => None,
    };
    let oracle_err = oracle.map(|o| (a - o).abs() / o.abs().max(1.0));
    let pe = principal_eigenvalue(pb, x0, Coupling::Finite(a))?;
    let pass = phi.abs() <= cfg.tolerances.root
        && pe.xi.abs() <= 1e-6 * lam
        && oracle_err.is_none_or(|e| e <= cfg.tolerances.oracle);
    Ok((pass, json!({"alpha_threshold": a, "oracle": oracle, "oracle_error": oracle_err, "xi": pe.xi})))
}

fn uniqueness_suite(pb: &Problem, x0: &Point) -> Check {
    let a0 = alpha_threshold(pb, x0)?;
    let lam = pb.lambda0()?;
    let xis: Vec<f64> = (0..40).map(|k| -20.0 * lam + 21.0 * lam * (k as f64 + 0.5) / 40.0).filter(|x| *x < lam).collect();
    let mut roots = Vec::new();
    let mut counts = Vec::new();
    for k in -4..=4 {
        let a = a0 + 0.5 * k as f64;
        counts.push(sign_changes(pb, x0, a, &xis)?);
        roots.push(principal_eigenvalue(pb, x0, Coupling::Finite(a))?.xi);
    }
    let sign = if pb.dim() == 3 { 1.0 } else { -1.0 };
    let monotone = roots.windows(2).all(|w| sign * (w[1] - w[0]) > 0.0);
    let unique = counts.iter().all(|c| *c <= 1);
    Ok((monotone && unique, json!({"roots": roots, "sign_changes": counts})))
}

fn identity_suite(cfg: &RunConfig, pb: &Problem, x0: &Point) -> Check {
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for y in [0.5, 1.0] {
        let d = dh_dy(pb, x0, &SpectralParameter::negative(y)?, true)?;
        let r = d.residual.unwrap_or(f64::INFINITY);
        worst = worst.max(r);
        rows.push(json!({"y": y, "identity": d.value, "finite_difference": d.finite_difference}));
    }
    Ok((worst <= cfg.tolerances.oracle, json!({"worst": worst, "rows": rows})))
}

fn eigen_suites(cfg: &RunConfig, pb: &Problem, x0: &Point) -> crate::Result<Vec<Suite>> {
    let alpha = match cfg.alpha.0 {
        Coupling::Finite(a) => a,
        Coupling::Infinite => return Ok(Vec::new()),
    };
    let pe = principal_eigenvalue(pb, x0, Coupling::Finite(alpha))?;
    let mut out = Vec::new();
    if !(pe.branch == XiBranch::ZeroXi && pb.dim() == 2) {
        let e = eigenfunction(pb, &pe)?;
        let pos_ok = pe.xi >= 0.0 || e.positive;
        out.push(Suite {
            name: "eigenfunction",
            pass: e.residual < 1e-4 && pos_ok,
            detail: json!({"xi": pe.xi, "residual": e.residual, "positive": e.positive}),
        });
    }
    let z = -pe.xi;
    let dz = 1e-4 * pe.lambda0;
    let below = charge(pb, x0, cfg.alpha.0, z - dz)?;
    let above = charge(pb, x0, cfg.alpha.0, z + dz)?;
    let flips = below.denominator.signum() != above.denominator.signum();
    out.push(Suite {
        name: "charge_pole",
        pass: flips && pe.residual.abs() <= cfg.tolerances.root.max(1e-8),
        detail: json!({"pole_z": z, "denominator_below": below.denominator, "denominator_above": above.denominator,
            "root_residual": pe.residual}),
    });
    Ok(out)
}

fn geometry_suites(cfg: &RunConfig, pb: &Problem) -> crate::Result<Vec<Suite>> {
    let alpha = match cfg.alpha.0 {
        Coupling::Finite(_) => cfg.alpha.0,
        Coupling::Infinite => return Ok(Vec::new()),
    };
    let base = cfg.atlas_config();
    let small = AtlasConfig { angles: base.angles.min(32), offsets: base.offsets.min(64) };
    let atlas = reflection_atlas(&pb.grid, &small)?;
    let report = monotonicity_audit(pb, alpha, &atlas, &AuditOptions { pairs: 4, points_per_plane: 2 })?;
    let mut out = vec![Suite {
        name: "monotonicity_audit",
        pass: report.failed == 0 && !report.pairs.is_empty(),
        detail: json!({"pairs": report.pairs.len(), "failed": report.failed, "worst_n_grad_xi": report.worst_n_grad_xi,
            "worst_u": report.worst_u, "worst_hopf": report.worst_hopf}),
    }];
    let map = eigenvalue_map(pb, alpha, cfg.spacing().max(2.0 * pb.grid.h))?;
    let v = locate_minimum(&pb.grid, &map, &atlas)?;
    out.push(Suite {
        name: "localization",
        pass: v.admissible,
        detail: json!({"minimizer": v.point[..pb.dim()].to_vec(), "admissible": v.admissible, "distance": v.distance}),
    });
    Ok(out)
}

fn record(suites: &mut Vec<Suite>, name: &'static str, r: Check) {
    let (pass, detail) = match r {
        Ok(v) => v,
        Err(e) => (false, json!({"error": e.to_string()})),
    };
    suites.push(Suite { name, pass, detail });
}

fn record_many(suites: &mut Vec<Suite>, name: &'static str, r: crate::Result<Vec<Suite>>) {
    match r {
        Ok(v) => suites.extend(v),
        Err(e) => suites.push(Suite { name, pass: false, detail: json!({"error": e.to_string()}) }),
    }
}

pub(crate) fn verify(cfg: &RunConfig, out: &mut Outputs) -> std::result::Result<(), Failure> {
    let pb = problem(cfg)?;
    let x0 = source(cfg, &pb)?;
    let mut suites = Vec::new();
    record(&mut suites, "special_functions", specfun_suite());
    record(&mut suites, "threshold", threshold_suite(cfg, &pb, &x0));
    record(&mut suites, "uniqueness_monotonicity", uniqueness_suite(&pb, &x0));
    record(&mut suites, "norm_identity", identity_suite(cfg, &pb, &x0));
    record_many(&mut suites, "eigenfunction", eigen_suites(cfg, &pb, &x0));
    record_many(&mut suites, "geometry", geometry_suites(cfg, &pb));

    let roundtrip = RunConfig::from_json(&cfg.resolved().to_string())
        .map(|c| c.resolved() == cfg.resolved())
        .unwrap_or(false);
    suites.push(Suite { name: "config_roundtrip", pass: roundtrip, detail: Value::Null });

    let a = execute(Command::Solve, cfg);
    let b = execute(Command::Solve, cfg);
    let same = a.1.is_ok() && b.1.is_ok() && a.0.get("solve.json").is_some() && a.0.get("solve.json") == b.0.get("solve.json");
    suites.push(Suite { name: "determinism", pass: same, detail: Value::Null });

    let failed: Vec<&str> = suites.iter().filter(|s| !s.pass).map(|s| s.name).collect();
    out.json(
        "verify.json",
        &json!({"suites": suites, "passed": suites.len() - failed.len(), "failed": failed.len(), "pass": failed.is_empty()}),
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join(", ")))
    }
}
