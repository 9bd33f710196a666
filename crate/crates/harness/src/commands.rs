//! One function per CLI subcommand. Each writes its files into the output
//! directory and finishes with `manifest.json`.

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use spiralwave_core::core_profile::{compute_c1, solve_core_amplitude};
use spiralwave_core::greens::{laplace_grad, mh_eval, Boundary};
use spiralwave_core::motion::{eval_epsilon, find_periodic_orbit, integrate, TrajectoryRecord};
use spiralwave_core::pde_sim::{measure_rotation_rate, simulate, track, write_field};
use spiralwave_core::wavenumber::{near_field_k, solve_canonical, uniform_k, SpiralConfig};
use spiralwave_core::{Point, Spiral};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::compare::{compare_snapshots, ComparisonReport};
use crate::config::{ExperimentConfig, GreensKind};
use crate::error::{HarnessError, Result};
use crate::plot::{series_svg, trajectory_svg, LineStyle, PathRecord, SeriesRecord};
use crate::scan::{diagnostics, run_bifurcation_scan, write_scan_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Core,
    Greens,
    K,
    Trajectory,
    Orbit,
    Simulate,
    Compare,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Core => "core",
            Command::Greens => "greens",
            Command::K => "k",
            Command::Trajectory => "trajectory",
            Command::Orbit => "orbit",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Scan => "scan",
        }
    }
}

/// Collects output files so the manifest can list them.
struct Out {
    dir: PathBuf,
    files: Vec<String>,
}

impl Out {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Out { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut w = self.create(name)?;
        w.write_all(body.as_bytes())?;
        Ok(w.flush()?)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let body = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Io(e.to_string()))?;
        self.text(name, &(body + "\n"))
    }

    fn csv(&mut self, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
        Ok(csv::Writer::from_writer(self.create(name)?))
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Runs `cmd` and writes its outputs plus a manifest into `out_dir`.
/// `config_bytes` is the config file as read, for the manifest hash.
pub fn run(cmd: Command, cfg: &ExperimentConfig, config_bytes: &[u8], out_dir: &Path) -> Result<()> {
    cfg.validate()?;
    let mut out = Out::new(out_dir)?;
    let c1_used = match cmd {
        Command::Core => run_core(cfg, &mut out)?,
        Command::Greens => run_greens(cfg, &mut out)?,
        Command::K => run_k(cfg, &mut out)?,
        Command::Trajectory => run_trajectory(cfg, &mut out)?,
        Command::Orbit => run_orbit(cfg, &mut out)?,
        Command::Simulate => run_simulate(cfg, &mut out)?,
        Command::Compare => run_compare_cmd(cfg, &mut out)?,
        Command::Scan => run_scan(cfg, &mut out)?,
    };
    let manifest = json!({
        "command": cmd.name(),
        "config_sha256": hex_digest(config_bytes),
        "versions": {
            "spiralwave": env!("CARGO_PKG_VERSION"),
            "spiralwave-core": spiralwave_core::VERSION,
        },
        "c1": c1_used,
        "outputs": out.files,
    });
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Io(e.to_string()))?;
    fs::write(out.dir.join("manifest.json"), body + "\n")?;
    Ok(())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn run_core(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let opts = cfg.profile.unwrap_or_default();
    let prof = solve_core_amplitude(&opts)?;
    let c1 = compute_c1(&prof)?;
    let mut w = out.csv("profile.csv")?;
    w.write_record(["r", "f"])?;
    for (r, f) in prof.r_nodes.iter().zip(&prof.f_values) {
        w.write_record([num(*r), num(*f)])?;
    }
    w.flush()?;
    out.json(
        "constants.json",
        &json!({
            "c1": c1,
            "slope_at_zero": prof.slope_at_zero,
            "far_field_a": prof.far_field_a,
            "residual": prof.residual,
            "iterations": prof.iterations,
            "r_max": opts.r_max,
            "n_nodes": opts.n_nodes,
        }),
    )?;
    Ok(c1)
}

fn run_greens(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let g = cfg.greens.ok_or_else(|| HarnessError::Validation("greens command needs a [greens] section".into()))?;
    let dom = cfg.dom();
    let src = Point::new(g.source[0], g.source[1]);
    let mut w = out.csv("greens.csv")?;
    w.write_record(["x", "y", "value", "grad_x", "grad_y"])?;
    // Cell-centred samples keep clear of the walls.
    for j in 0..g.ny {
        for i in 0..g.nx {
            let x = Point::new((i as f64 + 0.5) * dom.lx / g.nx as f64, (j as f64 + 0.5) * dom.ly / g.ny as f64);
            if x.dist(src) < 1e-9 * dom.lx.max(dom.ly) {
                continue;
            }
            let (value, grad) = match g.kind {
                GreensKind::MhNeumann | GreensKind::MhDirichlet => {
                    let bc = if g.kind == GreensKind::MhNeumann { Boundary::Neumann } else { Boundary::Dirichlet };
                    let e = mh_eval(bc, x, src, g.kappa.unwrap_or(1.0), &dom, &cfg.truncation)?;
                    (e.value, e.grad)
                }
                GreensKind::LaplaceNeumann => (None, laplace_grad(Boundary::Neumann, x, src, &dom, &cfg.truncation)?),
                GreensKind::LaplaceDirichlet => {
                    (None, laplace_grad(Boundary::Dirichlet, x, src, &dom, &cfg.truncation)?)
                }
            };
            w.write_record([num(x.x), num(x.y), opt(value), num(grad.x), num(grad.y)])?;
        }
    }
    w.flush()?;
    Ok(cfg.c1())
}

fn run_k(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let spirals = cfg.require_spirals()?;
    let dom = cfg.dom();
    let eps = eval_epsilon(&spirals, &dom, &cfg.eps_policy(spirals.len()))?;
    let qs = cfg.k_table.as_ref().map(|t| t.q.clone()).unwrap_or_else(|| vec![cfg.q]);
    let mut w = out.csv("k.csv")?;
    w.write_record(["q", "eps", "k_canonical", "k_near_field", "k_uniform", "note"])?;
    for q in qs {
        let sc = SpiralConfig { spirals: spirals.clone(), q, dom, c1: cfg.c1(), trunc: cfg.truncation };
        let mut notes = Vec::new();
        let can = solve_canonical(&sc).map_err(|e| notes.push(format!("canonical: {e}"))).ok();
        let near = near_field_k(spirals.len(), q, eps, dom.area()).map_err(|e| notes.push(format!("near field: {e}"))).ok();
        let uni = can.as_ref().and_then(|c| uniform_k(&sc, eps, c).map_err(|e| notes.push(format!("uniform: {e}"))).ok());
        w.write_record([num(q), num(eps), opt(can.map(|c| c.k)), opt(near), opt(uni), notes.join("; ")])?;
    }
    w.flush()?;
    Ok(cfg.c1())
}

fn trajectory_csv(out: &mut Out, name: &str, rec: &TrajectoryRecord) -> Result<()> {
    let mut w = out.csv(name)?;
    let n = rec.charges.len();
    let mut head = vec!["t".to_string()];
    for l in 1..=n {
        head.push(format!("x_{l}"));
        head.push(format!("y_{l}"));
    }
    head.push("k".into());
    head.push("eps".into());
    w.write_record(&head)?;
    for i in 0..rec.times.len() {
        let mut row = vec![num(rec.times[i])];
        for p in &rec.positions[i] {
            row.push(num(p.x));
            row.push(num(p.y));
        }
        row.push(num(rec.k_series[i]));
        row.push(num(rec.eps_series[i]));
        w.write_record(&row)?;
    }
    Ok(w.flush()?)
}

fn paths_of(rec: &TrajectoryRecord, style: LineStyle) -> Vec<PathRecord> {
    (0..rec.charges.len())
        .map(|l| PathRecord { points: rec.positions.iter().map(|p| p[l]).collect(), style })
        .collect()
}

fn run_trajectory(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let spirals = cfg.require_spirals()?;
    let it = cfg.integration;
    let groups: Vec<Vec<Spiral>> =
        if it.independent { spirals.iter().map(|s| vec![*s]).collect() } else { vec![spirals.clone()] };
    let mut paths = Vec::new();
    let mut ends = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        let p = cfg.motion_params(cfg.q, group.len());
        let rec = integrate(group, &p, it.t_start, it.t_end, &it.step_control())?;
        let name = if groups.len() == 1 { "trajectory.csv".to_string() } else { format!("trajectory_{}.csv", g + 1) };
        trajectory_csv(out, &name, &rec)?;
        paths.extend(paths_of(&rec, LineStyle::Solid));
        ends.push(json!({ "file": name, "termination": rec.termination, "t_final": rec.times.last(), "h": rec.h }));
    }
    out.json("summary.json", &ends)?;
    if cfg.outputs.svg {
        out.text("trajectory.svg", &trajectory_svg(&cfg.dom(), &paths))?;
    }
    Ok(cfg.c1())
}

fn run_orbit(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let opts = cfg.orbit.clone().unwrap_or_default();
    let res = find_periodic_orbit(&cfg.motion_params(cfg.q, 1), &opts)?;
    out.json("orbit.json", &json!({ "q": cfg.q, "orbit_found": res.is_some(), "orbit": res }))?;
    if let Some(o) = &res {
        let mut w = out.csv("orbit.csv")?;
        w.write_record(["x", "y"])?;
        for p in &o.loop_points {
            w.write_record([num(p.x), num(p.y)])?;
        }
        w.flush()?;
        if cfg.outputs.svg {
            let path = PathRecord { points: o.loop_points.clone(), style: LineStyle::Solid };
            out.text("orbit.svg", &trajectory_svg(&cfg.dom(), &[path]))?;
        }
    }
    Ok(cfg.c1())
}

fn run_simulate(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let sim = cfg.sim.as_ref().ok_or_else(|| HarnessError::Validation("simulate needs a [sim] section".into()))?;
    let spirals = cfg.require_spirals()?;
    let dom = cfg.dom();
    let params = cfg.sim_params(sim);
    let probe = sim.probe.map(|p| Point::new(p[0], p[1]));
    let mut dumps: Vec<(String, std::io::Result<()>)> = Vec::new();
    let mut count = 0usize;
    let dir = out.dir.clone();
    let res = simulate(&spirals, &dom, &params, cfg.c1(), probe, |grid, _| {
        if sim.dump_every > 0 && count % sim.dump_every == 0 {
            let name = format!("fields/field_{count:05}.cglf");
            let r = fs::create_dir_all(dir.join("fields"))
                .and_then(|_| File::create(dir.join(&name)))
                .and_then(|f| write_field(grid, BufWriter::new(f)));
            dumps.push((name, r));
        }
        count += 1;
        true
    })?;
    for (name, r) in dumps {
        r?;
        out.files.push(name);
    }
    let set = track(&res.snapshots, sim.max_jump, sim.dx);
    let mut w = out.csv("tracks.csv")?;
    w.write_record(["t", "id", "x", "y", "winding", "min_modulus"])?;
    // Time-major rows, ordered by track id within a snapshot.
    let mut rows: Vec<(f64, usize, usize)> = Vec::new();
    for (k, tr) in set.tracks.iter().enumerate() {
        rows.extend(tr.times.iter().enumerate().map(|(i, &t)| (t, k, i)));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(set.tracks[a.1].id.cmp(&set.tracks[b.1].id)));
    for (t, k, i) in rows {
        let tr = &set.tracks[k];
        let p = tr.positions[i];
        w.write_record([num(t), tr.id.to_string(), num(p.x), num(p.y), tr.winding.to_string(), num(tr.min_modulus[i])])?;
    }
    w.flush()?;
    let omega = if probe.is_some() {
        let after: Vec<_> = res.probe.iter().copied().filter(|s| s.0 >= cfg.compare.transient).collect();
        let mut pw = out.csv("probe.csv")?;
        pw.write_record(["t", "re", "im"])?;
        for (t, (a, b)) in &res.probe {
            pw.write_record([num(*t), num(*a), num(*b)])?;
        }
        pw.flush()?;
        measure_rotation_rate(&after).ok()
    } else {
        None
    };
    out.json(
        "summary.json",
        &json!({
            "t_final": res.final_grid.t,
            "steps_per_snapshot": sim.snapshot_interval,
            "dt": params.dt(),
            "max_modulus_after_transient": res.max_modulus_after_transient,
            "rotation_rate": omega,
            "events": set.events,
        }),
    )?;
    if cfg.outputs.svg {
        let paths: Vec<PathRecord> = set
            .tracks
            .iter()
            .map(|t| PathRecord { points: t.positions.clone(), style: LineStyle::Dashed })
            .collect();
        out.text("tracks.svg", &trajectory_svg(&dom, &paths))?;
    }
    Ok(cfg.c1())
}

/// Writes the per-sample table of a comparison.
pub fn write_compare_csv<W: Write>(report: &ComparisonReport, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["t", "spiral", "x_num", "y_num", "x_asym", "y_asym", "vx_num", "vy_num", "vx_law", "vy_law"])?;
    for s in &report.samples {
        let (ax, ay) = (s.asymptotic.map(|p| p.x), s.asymptotic.map(|p| p.y));
        let (nx, ny) = (s.numerical_velocity.map(|p| p.x), s.numerical_velocity.map(|p| p.y));
        let (lx, ly) = (s.law_velocity.map(|p| p.x), s.law_velocity.map(|p| p.y));
        w.write_record([
            num(s.t),
            (s.spiral + 1).to_string(),
            num(s.numerical.x),
            num(s.numerical.y),
            opt(ax),
            opt(ay),
            opt(nx),
            opt(ny),
            opt(lx),
            opt(ly),
        ])?;
    }
    Ok(w.flush()?)
}

fn run_compare_cmd(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let sim = cfg.sim.as_ref().ok_or_else(|| HarnessError::Validation("comparison requires sim params".into()))?;
    let spirals = cfg.require_spirals()?;
    let res = simulate(&spirals, &cfg.dom(), &cfg.sim_params(sim), cfg.c1(), None, |_, _| true)?;
    let report = compare_snapshots(cfg, &spirals, &res.snapshots)?;
    write_compare_csv(&report, out.create("compare.csv")?)?;
    out.json("compare.json", &report.summary)?;
    if cfg.outputs.svg {
        let mut paths = Vec::new();
        for asym in [false, true] {
            let series = report.series(asym);
            for l in 0..report.tracks.len() {
                let points = series.iter().filter_map(|(_, p)| p[l]).collect();
                let style = if asym { LineStyle::Solid } else { LineStyle::Dashed };
                paths.push(PathRecord { points, style });
            }
        }
        out.text("compare_trajectories.svg", &trajectory_svg(&cfg.dom(), &paths))?;
        let speed = |v: Option<Point>| v.map(|p| p.norm());
        let mut series = Vec::new();
        for l in 0..report.tracks.len() {
            let pick = |f: &dyn Fn(&crate::compare::CompareSample) -> Option<f64>| -> Vec<(f64, f64)> {
                report.samples.iter().filter(|s| s.spiral == l).filter_map(|s| f(s).map(|v| (s.t, v))).collect()
            };
            series.push(SeriesRecord {
                label: format!("spiral {} PDE", l + 1),
                samples: pick(&|s| speed(s.numerical_velocity)),
                style: LineStyle::Dashed,
            });
            series.push(SeriesRecord {
                label: format!("spiral {} law", l + 1),
                samples: pick(&|s| speed(s.law_velocity)),
                style: LineStyle::Solid,
            });
        }
        out.text("compare_speed.svg", &series_svg("speed", &series))?;
    }
    Ok(cfg.c1())
}

fn run_scan(cfg: &ExperimentConfig, out: &mut Out) -> Result<f64> {
    let qs = cfg.scan.as_ref().map(|s| s.q.clone()).unwrap_or_default();
    let rows = run_bifurcation_scan(&qs, cfg)?;
    write_scan_csv(&rows, out.create("scan.csv")?)?;
    out.json("scan.json", &json!({ "rows": rows, "diagnostics": diagnostics(&rows) }))?;
    Ok(cfg.c1())
}
