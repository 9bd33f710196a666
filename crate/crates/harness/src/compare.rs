//! Side-by-side comparison of a PDE run with the asymptotic law.

use serde::{Deserialize, Serialize};
use spiralwave_core::motion::{integrate_with, velocities, MotionParams, StepRule, Termination, TrajectoryRecord};
use spiralwave_core::pde_sim::{estimate_velocity, simulate, track, Snapshot, Track};
use spiralwave_core::{Point, Spiral};

use crate::config::{AnchorMode, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// One spiral at one shared time stamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSample {
    pub t: f64,
    pub spiral: usize,
    pub numerical: Point,
    pub asymptotic: Option<Point>,
    /// Smoothed velocity of the tracked core.
    pub numerical_velocity: Option<Point>,
    /// Law velocity evaluated at the tracked positions.
    pub law_velocity: Option<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    Curve,
    Initial,
    /// Curve matching was requested but the track never reached the curve.
    NoCrossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub kind: AnchorKind,
    pub t: f64,
    pub positions: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub anchor: Anchor,
    pub transient_cutoff: f64,
    pub resampling: String,
    pub velocity_window: usize,
    /// Time range covered by both series.
    pub overlap: (f64, f64),
    pub velocity_samples: usize,
    pub rms_velocity_deviation: f64,
    pub rms_numerical_speed: f64,
    pub relative_velocity_deviation: f64,
    pub max_divergence: f64,
    pub final_divergence: f64,
    /// Largest `|x1 + x2 - (lx, ly)|` of the tracked pair, in grid cells.
    pub symmetry_violation_cells: Option<f64>,
    pub asymptotic_termination: Vec<Termination>,
    pub law_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub samples: Vec<CompareSample>,
    pub summary: CompareSummary,
    #[serde(skip)]
    pub tracks: Vec<Track>,
    #[serde(skip)]
    pub asymptotic_record: Vec<TrajectoryRecord>,
}

impl ComparisonReport {
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.samples.iter().filter(|s| s.spiral == 0).map(|s| s.t).collect();
        t.dedup();
        t
    }

    /// Positions of every spiral at each shared time stamp.
    pub fn series(&self, asymptotic: bool) -> Vec<(f64, Vec<Option<Point>>)> {
        let n = self.tracks.len();
        let mut out: Vec<(f64, Vec<Option<Point>>)> = Vec::new();
        for s in &self.samples {
            if s.spiral == 0 {
                out.push((s.t, vec![None; n]));
            }
            let row = out.last_mut().expect("spiral 0 comes first");
            row.1[s.spiral] = if asymptotic { s.asymptotic } else { Some(s.numerical) };
        }
        out
    }
}

/// Linear interpolation of a sampled path at `t` (times increasing).
pub fn interpolate(times: &[f64], values: &[Point], t: f64) -> Option<Point> {
    if times.is_empty() || t < times[0] || t > *times.last().unwrap() {
        return None;
    }
    let i = times.partition_point(|&s| s <= t);
    if i == times.len() {
        return Some(*values.last().unwrap());
    }
    if i == 0 {
        return Some(values[0]);
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    Some(values[i - 1] * (1.0 - w) + values[i] * w)
}

/// Signed level of the closed curve `(x-cx)^4 + (y-cy)^4 = R^4`, as a length.
fn curve_level(cfg: &ExperimentConfig, p: Point) -> f64 {
    let dom = cfg.dom();
    let c = dom.center();
    let r = cfg.compare.curve_fraction * 0.5 * (dom.lx + dom.ly);
    ((p.x - c.x).powi(4) + (p.y - c.y).powi(4)).powf(0.25) - r
}

/// First time a track passes from inside to outside the curve.
fn curve_crossing(cfg: &ExperimentConfig, tr: &Track) -> Option<f64> {
    for i in 1..tr.times.len() {
        let a = curve_level(cfg, tr.positions[i - 1]);
        let b = curve_level(cfg, tr.positions[i]);
        if a < 0.0 && b >= 0.0 {
            let w = a / (a - b);
            return Some(tr.times[i - 1] + w * (tr.times[i] - tr.times[i - 1]));
        }
    }
    None
}

/// Picks, for every seeded spiral, the track that starts closest to it.
fn match_tracks(spirals: &[Spiral], tracks: &[Track], t0: f64, max_dist: f64) -> Result<Vec<Track>> {
    let mut used = vec![false; tracks.len()];
    let mut out = Vec::with_capacity(spirals.len());
    for (l, s) in spirals.iter().enumerate() {
        let best = tracks
            .iter()
            .enumerate()
            .filter(|(i, tr)| !used[*i] && tr.winding == s.charge && tr.times.first() == Some(&t0))
            .map(|(i, tr)| (tr.positions[0].dist(s.pos), i))
            .filter(|(d, _)| *d <= max_dist)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((_, i)) => {
                used[i] = true;
                out.push(tracks[i].clone());
            }
            None => {
                return Err(HarnessError::Numerical(format!("no core was detected near seeded spiral {}", l + 1)));
            }
        }
    }
    Ok(out)
}

fn integrate_leg(spirals: &[Spiral], p: &MotionParams, t0: f64, t1: f64, h: f64) -> Result<TrajectoryRecord> {
    Ok(integrate_with(spirals, p, t0, t1, StepRule::Fixed(h), |_, _| true)?)
}

/// Runs the PDE, tracks the cores and sets the asymptotic law beside them.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let sim = cfg.sim.as_ref().ok_or_else(|| HarnessError::Validation("comparison requires sim params".into()))?;
    let spirals = cfg.require_spirals()?;
    cfg.validate()?;
    let dom = cfg.dom();
    let params = cfg.sim_params(sim);
    let out = simulate(&spirals, &dom, &params, cfg.c1(), None, |_, _| true)?;
    compare_snapshots(cfg, &spirals, &out.snapshots)
}

/// The comparison proper, from already computed snapshots.
pub fn compare_snapshots(cfg: &ExperimentConfig, spirals: &[Spiral], snapshots: &[Snapshot]) -> Result<ComparisonReport> {
    let sim = cfg.sim.as_ref().ok_or_else(|| HarnessError::Validation("comparison requires sim params".into()))?;
    let dom = cfg.dom();
    let t0 = snapshots.first().map(|s| s.t).ok_or_else(|| HarnessError::Numerical("no snapshots".into()))?;
    let set = track(snapshots, sim.max_jump, sim.dx);
    let tracks = match_tracks(spirals, &set.tracks, t0, 2.0 + 2.0 * sim.dx)?;

    // Time stamps where every tracked core is known.
    let t_last = tracks.iter().map(|tr| *tr.times.last().unwrap()).fold(f64::INFINITY, f64::min);
    let stamps: Vec<f64> = tracks[0].times.iter().copied().filter(|&t| t <= t_last).collect();
    let at = |l: usize, t: f64| interpolate(&tracks[l].times, &tracks[l].positions, t).expect("inside track");

    let crossing = match cfg.compare.anchor {
        AnchorMode::Curve => tracks.iter().filter_map(|tr| curve_crossing(cfg, tr)).filter(|&t| t <= t_last).reduce(f64::min),
        AnchorMode::Initial => None,
    };
    let anchor = match (cfg.compare.anchor, crossing) {
        (AnchorMode::Curve, Some(t)) => {
            Anchor { kind: AnchorKind::Curve, t, positions: (0..tracks.len()).map(|l| at(l, t)).collect() }
        }
        (mode, _) => Anchor {
            kind: if mode == AnchorMode::Curve { AnchorKind::NoCrossing } else { AnchorKind::Initial },
            t: t0,
            positions: spirals.iter().map(|s| s.pos).collect(),
        },
    };

    let mp = cfg.motion_params(cfg.q, spirals.len());
    let start: Vec<Spiral> =
        spirals.iter().zip(&anchor.positions).map(|(s, &p)| Spiral { pos: p, charge: s.charge }).collect();
    let h = cfg.integration.h;
    let mut legs = Vec::new();
    if anchor.t > t0 {
        legs.push(integrate_leg(&start, &mp, anchor.t, t0, h)?);
    }
    if anchor.t < t_last {
        legs.push(integrate_leg(&start, &mp, anchor.t, t_last, h)?);
    }
    // Merge the legs into one increasing series.
    let mut a_times = Vec::new();
    let mut a_pos: Vec<Vec<Point>> = vec![Vec::new(); spirals.len()];
    for leg in &legs {
        let mut idx: Vec<usize> = (0..leg.times.len()).collect();
        if leg.times.len() > 1 && leg.times[1] < leg.times[0] {
            idx.reverse();
        }
        for i in idx {
            if a_times.last().is_some_and(|&l: &f64| leg.times[i] <= l) {
                continue;
            }
            a_times.push(leg.times[i]);
            for (l, p) in leg.positions[i].iter().enumerate() {
                a_pos[l].push(*p);
            }
        }
    }

    // Smoothed numerical velocities on the shared stamps.
    let window = sim.velocity_window;
    let mut num_vel: Vec<Vec<(f64, Point)>> = Vec::new();
    for l in 0..tracks.len() {
        let pos: Vec<Point> = stamps.iter().map(|&t| at(l, t)).collect();
        num_vel.push(estimate_velocity(&stamps, &pos, window).unwrap_or_default());
    }
    let vel_at = |l: usize, t: f64| num_vel[l].iter().find(|(s, _)| *s == t).map(|v| v.1);

    let mut samples = Vec::new();
    let mut law_failures = 0;
    let (mut sum_dev, mut sum_speed, mut n_vel) = (0.0, 0.0, 0usize);
    let (mut max_div, mut final_div) = (0.0f64, 0.0f64);
    let mut overlap = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sym: Option<f64> = None;
    for &t in &stamps {
        let here: Vec<Spiral> = (0..tracks.len()).map(|l| Spiral { pos: at(l, t), charge: spirals[l].charge }).collect();
        let has_vel = (0..tracks.len()).all(|l| vel_at(l, t).is_some());
        let law = if has_vel {
            match velocities(&here, &mp) {
                Ok(v) => Some(v),
                Err(_) => {
                    law_failures += 1;
                    None
                }
            }
        } else {
            None
        };
        if here.len() == 2 {
            let s = (here[0].pos + here[1].pos - Point::new(dom.lx, dom.ly)).norm() / sim.dx;
            sym = Some(sym.map_or(s, |m| m.max(s)));
        }
        let mut div = None;
        for l in 0..tracks.len() {
            let asym = interpolate(&a_times, &a_pos[l], t);
            let nv = vel_at(l, t);
            let lv = law.as_ref().map(|v| v[l]);
            if let Some(a) = asym {
                let d = a.dist(here[l].pos);
                div = Some(div.map_or(d, |m: f64| m.max(d)));
            }
            if let (Some(nv), Some(lv)) = (nv, lv) {
                if t > cfg.compare.transient {
                    sum_dev += (nv - lv).dot(nv - lv);
                    sum_speed += nv.dot(nv);
                    n_vel += 1;
                }
            }
            samples.push(CompareSample {
                t,
                spiral: l,
                numerical: here[l].pos,
                asymptotic: asym,
                numerical_velocity: nv,
                law_velocity: lv,
            });
        }
        if let Some(d) = div {
            max_div = max_div.max(d);
            final_div = d;
            overlap = (overlap.0.min(t), overlap.1.max(t));
        }
    }
    if n_vel == 0 {
        return Err(HarnessError::Numerical(format!(
            "no velocity samples after t = {}; run longer or shorten the window",
            cfg.compare.transient
        )));
    }
    let rms_dev = (sum_dev / n_vel as f64).sqrt();
    let rms_speed = (sum_speed / n_vel as f64).sqrt();
    let summary = CompareSummary {
        anchor,
        transient_cutoff: cfg.compare.transient,
        resampling: "asymptotic series linearly interpolated onto PDE snapshot times".into(),
        velocity_window: window,
        overlap,
        velocity_samples: n_vel,
        rms_velocity_deviation: rms_dev,
        rms_numerical_speed: rms_speed,
        relative_velocity_deviation: if rms_speed > 0.0 { rms_dev / rms_speed } else { f64::INFINITY },
        max_divergence: max_div,
        final_divergence: final_div,
        symmetry_violation_cells: sym,
        asymptotic_termination: legs.iter().map(|l| l.termination.clone()).collect(),
        law_failures,
    };
    Ok(ComparisonReport { samples, summary, tracks, asymptotic_record: legs })
}
