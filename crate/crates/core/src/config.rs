//! Run configuration, read from TOML.

use crate::error::{Error, Result};
use crate::fluxes::FluxMode;
use crate::mesh::BoundaryKind;
use crate::physics::PhysParams;
use crate::time::Integrator;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Manufactured,
    Random,
    StaticBubble,
    RisingBubble,
    InflowOutflow,
    FreeStream,
}

impl CaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::Manufactured => "manufactured",
            CaseKind::Random => "random",
            CaseKind::StaticBubble => "static_bubble",
            CaseKind::RisingBubble => "rising_bubble",
            CaseKind::InflowOutflow => "inflow_outflow",
            CaseKind::FreeStream => "free_stream",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mapping {
    Identity,
    /// `x_d += amplitude * prod_k sin(pi (x_k - lo_k) / (hi_k - lo_k))` over all three directions.
    Sinusoidal { amplitude: f64 },
}

impl Default for Mapping {
    fn default() -> Self {
        Mapping::Identity
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryTags {
    pub x_minus: BoundaryKind,
    pub x_plus: BoundaryKind,
    pub y_minus: BoundaryKind,
    pub y_plus: BoundaryKind,
    #[serde(default = "periodic")]
    pub z_minus: BoundaryKind,
    #[serde(default = "periodic")]
    pub z_plus: BoundaryKind,
}

fn periodic() -> BoundaryKind {
    BoundaryKind::Periodic
}

impl BoundaryTags {
    pub fn all(kind: BoundaryKind) -> Self {
        Self { x_minus: kind, x_plus: kind, y_minus: kind, y_plus: kind, z_minus: kind, z_plus: kind }
    }

    pub fn as_array(&self) -> [BoundaryKind; 6] {
        [self.x_minus, self.x_plus, self.y_minus, self.y_plus, self.z_minus, self.z_plus]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Element counts of a Cartesian box; ignored when `file` is set.
    #[serde(default)]
    pub counts: Option<[usize; 3]>,
    #[serde(default)]
    pub lo: Option<[f64; 3]>,
    #[serde(default)]
    pub hi: Option<[f64; 3]>,
    /// Mesh file in the `ESPDG-MESH` format, relative to the config file.
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub mapping: Mapping,
    #[serde(default)]
    pub boundary: Option<BoundaryTags>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case: CaseKind,
    /// Physical parameters; each case has a default set.
    #[serde(default)]
    pub params: Option<PhysParams>,
    pub mesh: MeshConfig,
    pub degrees: [usize; 3],
    pub flux_mode: FluxMode,
    pub kappa_beta: f64,
    pub integrator: Integrator,
    pub dt: f64,
    pub t_final: f64,
    /// Steps between diagnostics rows.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Steps between field snapshots; 0 writes only the initial and final fields.
    #[serde(default)]
    pub snapshot_cadence: usize,
    #[serde(default)]
    pub seed: u64,
    /// Stop once `max |dq/dt|` falls below this value.
    #[serde(default)]
    pub steady_tol: Option<f64>,
    /// Inflow speed of the inflow/outflow case.
    #[serde(default)]
    pub inflow_speed: Option<f64>,
    /// Initial pressure of the rising-bubble case.
    #[serde(default)]
    pub initial_pressure: InitialPressure,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPressure {
    #[default]
    Zero,
    /// `p` balances the weight of the fluid column above each point.
    Hydrostatic,
}

fn default_cadence() -> usize {
    10
}

impl CaseConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: CaseConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(f), Some(dir)) = (&cfg.mesh.file, path.parent()) {
            let p = dir.join(f);
            cfg.mesh.file = Some(p.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt: must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("t_final: must be non-negative, got {}", self.t_final)));
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence: must be at least 1".into()));
        }
        if !(self.kappa_beta >= 0.0) {
            return Err(Error::Config(format!("kappa_beta: must be non-negative, got {}", self.kappa_beta)));
        }
        if let Integrator::Imex { order } = self.integrator {
            if order != 1 && order != 2 {
                return Err(Error::Config(format!("integrator.order: must be 1 or 2, got {order}")));
            }
        }
        if self.degrees.iter().any(|&n| n == 0) {
            return Err(Error::Config(format!("degrees: must be positive, got {:?}", self.degrees)));
        }
        if self.mesh.file.is_none() {
            if self.mesh.counts.is_none() || self.mesh.boundary.is_none() {
                return Err(Error::Config("mesh: a Cartesian mesh needs counts and boundary".into()));
            }
            if self.mesh.counts.is_some_and(|c| c.contains(&0)) {
                return Err(Error::Config("mesh.counts: must be positive".into()));
            }
        }
        if self.initial_pressure == InitialPressure::Hydrostatic && self.case != CaseKind::RisingBubble {
            return Err(Error::Config(format!("initial_pressure: hydrostatic is only available for rising_bubble, not {}", self.case.name())));
        }
        if let Some(p) = &self.params {
            p.validate().map_err(|e| Error::Config(format!("params: {e}")))?;
        }
        Ok(())
    }

    /// Number of time steps needed to reach `t_final`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
case = "static_bubble"
degrees = [2, 2, 1]
flux_mode = "ers"
kappa_beta = 1.0
integrator = { kind = "imex", order = 1 }
dt = 1e-5
t_final = 2.0
steady_tol = 1e-7

[mesh]
counts = [16, 16, 1]
lo = [0.0, 0.0, 0.0]
hi = [1.0, 1.0, 1.0]
boundary = { x_minus = "periodic", x_plus = "periodic", y_minus = "periodic", y_plus = "periodic" }
"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = CaseConfig::parse(TEXT).unwrap();
        assert_eq!(cfg.case, CaseKind::StaticBubble);
        assert_eq!(cfg.integrator, Integrator::Imex { order: 1 });
        assert_eq!(cfg.cadence, 10);
        assert_eq!(cfg.n_steps(), 200_000);
        let again = CaseConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = TEXT.replace("dt = 1e-5", "dt = -1.0");
        assert!(CaseConfig::parse(&bad).unwrap_err().to_string().contains("dt"));
        let bad = TEXT.replace("flux_mode = \"ers\"", "flux_mode = \"roe\"");
        let msg = CaseConfig::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("flux_mode") && msg.contains("line"), "{msg}");
        let bad = TEXT.replace("order = 1", "order = 3");
        assert!(CaseConfig::parse(&bad).is_err());
    }
}
