//! Experiment configuration, read from TOML.

use serde::{Deserialize, Serialize};
use spiralwave_core::core_profile::{hagan_c1, ProfileOptions};
use spiralwave_core::greens::ImageTruncation;
use spiralwave_core::motion::{EpsilonPolicy, Law, MotionParams, OrbitOptions, StepControl};
use spiralwave_core::pde_sim::{PhaseSeed, SimParams};
use spiralwave_core::wavenumber::MIN_WALL_DISTANCE;
use spiralwave_core::{Point, RectDomain, Spiral};
use std::path::Path;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Canonical,
    NearField,
    Uniform,
    BCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpiralSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_charge")]
    pub n: i32,
}

fn default_charge() -> i32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub h: f64,
    pub refine: bool,
    pub tol_per_100: f64,
    pub max_halvings: usize,
    /// Integrate each listed spiral on its own instead of as one system.
    pub independent: bool,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        let c = StepControl::default();
        IntegrationSpec {
            t_start: 0.0,
            t_end: 2000.0,
            h: c.h,
            refine: c.refine,
            tol_per_100: c.tol_per_100,
            max_halvings: c.max_halvings,
            independent: false,
        }
    }
}

impl IntegrationSpec {
    pub fn step_control(&self) -> StepControl {
        StepControl { h: self.h, refine: self.refine, tol_per_100: self.tol_per_100, max_halvings: self.max_halvings }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_snapshot_interval")]
    pub snapshot_interval: usize,
    /// Chosen from the twist when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_seed: Option<PhaseSeed>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Moving-average window for velocities, in snapshots.
    #[serde(default = "default_window")]
    pub velocity_window: usize,
    /// Largest core displacement between snapshots still counted as the same core.
    #[serde(default = "default_max_jump")]
    pub max_jump: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<[f64; 2]>,
    /// Write a field dump every this many snapshots (0 = never).
    #[serde(default)]
    pub dump_every: usize,
}

fn default_dx() -> f64 {
    0.5
}
fn default_snapshot_interval() -> usize {
    200
}
fn default_threshold() -> f64 {
    0.4
}
fn default_window() -> usize {
    21
}
fn default_max_jump() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    /// Match where the numerical track crosses the closed quartic curve.
    Curve,
    /// Start both from the initial positions.
    Initial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSpec {
    pub transient: f64,
    pub anchor: AnchorMode,
    /// Curve size as a fraction of the mean side length.
    pub curve_fraction: f64,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec { transient: 50.0, anchor: AnchorMode::Curve, curve_fraction: 0.45 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreensKind {
    MhNeumann,
    MhDirichlet,
    LaplaceNeumann,
    LaplaceDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreensSpec {
    pub kind: GreensKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub source: [f64; 2],
    #[serde(default = "default_samples")]
    pub nx: usize,
    #[serde(default = "default_samples")]
    pub ny: usize,
}

fn default_samples() -> usize {
    41
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QList {
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub svg: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { svg: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub q: f64,
    #[serde(default = "default_law")]
    pub law: LawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub btilde: Option<f64>,
    /// Overrides the computed core constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spirals: Vec<SpiralSpec>,
    /// Defaults to the wall-distance rule for one spiral and the pair rule otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonPolicy>,
    #[serde(default)]
    pub truncation: ImageTruncation,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greens: Option<GreensSpec>,
    /// Twists tabulated by the `k` command (defaults to `q`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_table: Option<QList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<QList>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

fn default_law() -> LawKind {
    LawKind::Uniform
}

fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(HarnessError::Validation(msg.into()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| HarnessError::Validation("config is not UTF-8".into()))?;
        Ok((Self::from_toml(text)?, bytes))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let dom = self.dom();
        dom.validate()?;
        if !(self.q > 0.0 && self.q < 1.0) {
            return validation(format!("q must lie in (0, 1), got {}", self.q));
        }
        match (self.law, self.btilde) {
            (LawKind::BCorrected, None) => return validation("law b_corrected needs btilde"),
            (LawKind::BCorrected, Some(b)) if !b.is_finite() => return validation("btilde must be finite"),
            (LawKind::BCorrected, _) => {}
            (_, Some(_)) => return validation("btilde is only used by law b_corrected"),
            _ => {}
        }
        if let Some(c1) = self.c1 {
            if !c1.is_finite() {
                return validation("c1 must be finite");
            }
        }
        for (i, s) in self.spirals.iter().enumerate() {
            let p = Point::new(s.x, s.y);
            if !p.is_finite() || dom.wall_distance(p) < MIN_WALL_DISTANCE {
                return validation(format!(
                    "spiral {} at ({}, {}) must lie at least {MIN_WALL_DISTANCE} inside the domain",
                    i + 1,
                    s.x,
                    s.y
                ));
            }
            if s.n != 1 && s.n != -1 {
                return validation(format!("spiral {} has charge {}, expected +1 or -1", i + 1, s.n));
            }
        }
        let it = &self.integration;
        if !(it.h > 0.0 && it.t_start.is_finite() && it.t_end.is_finite()) {
            return validation("integration needs finite times and a positive step");
        }
        if let Some(sim) = &self.sim {
            self.sim_params(sim).validate()?;
            if sim.velocity_window < 3 || sim.velocity_window % 2 == 0 {
                return validation("velocity_window must be odd and at least 3");
            }
            if !(sim.max_jump > 0.0) {
                return validation("max_jump must be positive");
            }
        }
        let cs = &self.compare;
        if !(cs.transient >= 0.0 && cs.curve_fraction > 0.0 && cs.curve_fraction < 0.5) {
            return validation("compare needs transient >= 0 and 0 < curve_fraction < 0.5");
        }
        if let Some(g) = &self.greens {
            if g.nx < 2 || g.ny < 2 {
                return validation("greens needs at least 2x2 samples");
            }
            let mh = matches!(g.kind, GreensKind::MhNeumann | GreensKind::MhDirichlet);
            match g.kappa {
                Some(k) if mh && !(k > 0.0 && k.is_finite()) => return validation("kappa must be positive"),
                None if mh => return validation("modified-Helmholtz kinds need kappa"),
                _ => {}
            }
        }
        if let Some(s) = &self.scan {
            if let Some(q) = s.q.iter().find(|q| !(**q > 0.0 && **q <= 0.5)) {
                return validation(format!("scan twist {q} outside (0, 0.5]"));
            }
        }
        Ok(())
    }

    pub fn dom(&self) -> RectDomain {
        RectDomain { lx: self.domain.lx, ly: self.domain.ly }
    }

    pub fn spirals(&self) -> Vec<Spiral> {
        self.spirals.iter().map(|s| Spiral::new(s.x, s.y, s.n)).collect()
    }

    pub fn c1(&self) -> f64 {
        self.c1.unwrap_or_else(hagan_c1)
    }

    pub fn law(&self) -> Law {
        match self.law {
            LawKind::Canonical => Law::Canonical,
            LawKind::NearField => Law::NearField,
            LawKind::Uniform => Law::Uniform,
            LawKind::BCorrected => Law::BCorrected { btilde: self.btilde.unwrap_or(0.0) },
        }
    }

    pub fn eps_policy(&self, n_spirals: usize) -> EpsilonPolicy {
        self.epsilon.unwrap_or(if n_spirals <= 1 {
            EpsilonPolicy::SingleSpiralWalls
        } else {
            EpsilonPolicy::SymmetricPair
        })
    }

    pub fn motion_params(&self, q: f64, n_spirals: usize) -> MotionParams {
        MotionParams {
            q,
            dom: self.dom(),
            c1: self.c1(),
            law: self.law(),
            eps_policy: self.eps_policy(n_spirals),
            trunc: self.truncation,
        }
    }

    pub fn sim_params(&self, sim: &SimSpec) -> SimParams {
        SimParams {
            q: self.q,
            dx: sim.dx,
            dt: sim.dt,
            t_end: sim.t_end,
            snapshot_interval: sim.snapshot_interval,
            phase_seed: sim.phase_seed.unwrap_or_else(|| PhaseSeed::for_twist(self.q, self.spirals.len())),
            threshold: sim.threshold,
        }
    }

    pub fn require_spirals(&self) -> Result<Vec<Spiral>> {
        if self.spirals.is_empty() {
            return validation("config lists no spirals");
        }
        Ok(self.spirals())
    }
}
