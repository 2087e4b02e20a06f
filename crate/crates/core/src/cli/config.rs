//! Run configuration. Lengths are dimensionless multiples of the domain
//! scale; the planar logarithm uses the same unit.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{AtlasConfig, DomainKind, DomainSpec, Point};
use crate::spectral::Coupling;

/// Coupling as written in a config: a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alpha(pub Coupling);

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Coupling::Finite(a) => s.serialize_f64(a),
            Coupling::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) if n.as_f64().is_some_and(f64::is_finite) => {
                Ok(Alpha(Coupling::Finite(n.as_f64().expect("checked"))))
            }
            serde_json::Value::String(t) if matches!(t.as_str(), "inf" | "+inf" | "infinity") => {
                Ok(Alpha(Coupling::Infinite))
            }
            _ => Err(serde::de::Error::custom("alpha must be a finite number or \"inf\"")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Root residual and threshold agreement.
    pub root: f64,
    /// Relative residual of the linear solves.
    pub solver: f64,
    /// Relative agreement with analytic oracles.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { root: 1e-10, solver: 1e-8, oracle: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HEvalOptions {
    /// Decay rates on the negative branch, `xi = -y^2`.
    pub y: Vec<f64>,
    /// Wave numbers on the positive branch, `xi = y^2 < lambda0`.
    #[serde(default)]
    pub positive_y: Vec<f64>,
}

impl Default for HEvalOptions {
    fn default() -> Self {
        Self { y: vec![0.25, 0.5, 1.0, 2.0, 4.0], positive_y: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventOptions {
    /// Shifts `z`; when empty, a grid over `(-lambda0, 2 lambda0)`.
    #[serde(default)]
    pub z: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    12
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self { z: Vec::new(), points: default_points() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub pairs: usize,
    pub points_per_plane: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { pairs: 16, points_per_plane: 2 }
    }
}

fn default_basis() -> usize {
    6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainKind,
    /// Grid spacing.
    pub resolution: f64,
    pub alpha: Alpha,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_basis")]
    pub basis_size: usize,
    /// Landscape lattice spacing; defaults to four grid spacings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atlas: Option<AtlasConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub h_eval: HEvalOptions,
    #[serde(default)]
    pub resolvent: ResolventOptions,
    #[serde(default)]
    pub audit: AuditConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return bad("resolution must be positive");
        }
        let t = &self.tolerances;
        if ![t.root, t.solver, t.oracle].iter().all(|v| v.is_finite() && *v > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.basis_size == 0 {
            return bad("basis_size must be positive");
        }
        if let Some(s) = self.lattice_spacing {
            if !(s.is_finite() && s > 0.0) {
                return bad("lattice_spacing must be positive");
            }
        }
        if let Some(x) = &self.x0 {
            if x.len() != self.domain.dim() || !x.iter().all(|c| c.is_finite()) {
                return bad("x0 must have one finite coordinate per dimension");
            }
        }
        if let Some(a) = &self.atlas {
            if a.angles == 0 || a.offsets == 0 {
                return bad("atlas resolutions must be positive");
            }
        }
        if self.h_eval.y.iter().chain(&self.h_eval.positive_y).any(|y| !(y.is_finite() && *y >= 0.0)) {
            return bad("h_eval wave numbers must be non-negative");
        }
        if self.resolvent.z.iter().any(|z| !z.is_finite()) {
            return bad("resolvent shifts must be finite");
        }
        if self.audit.pairs == 0 || self.audit.points_per_plane == 0 {
            return bad("audit sizes must be positive");
        }
        Ok(())
    }

    pub fn spec(&self) -> DomainSpec {
        DomainSpec::new(self.domain.clone(), self.resolution)
    }

    pub fn source(&self) -> Option<Point> {
        self.x0.as_ref().map(|x| {
            let mut p = [0.0; 3];
            p[..x.len()].copy_from_slice(x);
            p
        })
    }

    pub fn spacing(&self) -> f64 {
        self.lattice_spacing.unwrap_or(4.0 * self.resolution)
    }

    pub fn atlas_config(&self) -> AtlasConfig {
        self.atlas.unwrap_or_else(|| AtlasConfig::default_for(self.domain.dim()))
    }

    /// Canonical JSON of the resolved configuration.
    pub fn resolved(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.lattice_spacing = Some(self.spacing());
        c.atlas = Some(self.atlas_config());
        serde_json::to_value(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": "inf"}"#;

    #[test]
    fn resolved_config_roundtrips() {
        let cfg = RunConfig::from_json(TEXT).unwrap();
        assert_eq!(cfg.alpha, Alpha(Coupling::Infinite));
        let back = RunConfig::from_json(&cfg.resolved().to_string()).unwrap();
        assert_eq!(back.spacing(), cfg.spacing());
        assert_eq!(back.atlas_config(), cfg.atlas_config());
        assert_eq!(back.domain, cfg.domain);
        assert_eq!(back.alpha, cfg.alpha);
        assert_eq!(RunConfig::from_json(&back.resolved().to_string()).unwrap(), back);
    }

    #[test]
    fn rejects_bad_values() {
        for t in [
            r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": "big"}"#,
            r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": -1, "alpha": 0}"#,
            r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": 0, "x0": [0]}"#,
            r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": 0, "tolerances": {"root": 0, "solver": 1, "oracle": 1}}"#,
            r#"{"domain": {"kind": "disk", "radius": 1.0}, "resolution": 0.05, "alpha": 0, "colour": 1}"#,
        ] {
            assert!(matches!(RunConfig::from_json(t), Err(Error::Config(_))), "{t}");
        }
    }
}
