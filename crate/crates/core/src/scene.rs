//! TOML scene descriptions, world assembly and the frame-writing driver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Rotation3;
use serde::Deserialize;

use crate::audit::audit_separation;
use crate::barrier::BarrierParams;
use crate::error::{Error, Result};
use crate::friction::FrictionParams;
use crate::io::{frame_mesh, read_obj, read_tet, write_obj};
use crate::math::Vec3;
use crate::mesh::{
    MembraneKind, ParticleMaterial, RodMaterial, ShellMaterial, SimMesh, VolumeMaterial,
};
use crate::shapes;
use crate::solver::{check_separation, Simulator, SolverConfig, StepStats, WorldState};
use crate::strain_limit::{singular_values, StrainLimitParams};

/// Scenes up to this many nodes get the quadratic all-pairs audit at load.
pub const EXHAUSTIVE_AUDIT_NODES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnconvergedPolicy {
    Abort,
    #[default]
    Warn,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub h: f64,
    pub frames: usize,
    pub substeps: usize,
    pub dhat: f64,
    pub gravity: [f64; 3],
    pub newton_tol: f64,
    pub max_newton: usize,
    pub kappa: Option<f64>,
    pub s_conservative: f64,
    pub on_unconverged: UnconvergedPolicy,
    pub output: Option<String>,
    pub deterministic: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            h: 0.04,
            frames: 100,
            substeps: 1,
            dhat: 1e-3,
            gravity: [0.0, -9.81, 0.0],
            newton_tol: 1e-2,
            max_newton: 200,
            kappa: None,
            s_conservative: 0.1,
            on_unconverged: UnconvergedPolicy::Warn,
            output: None,
            deterministic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionSection {
    pub mu: f64,
    #[serde(default = "default_epsv")]
    pub epsv: f64,
    #[serde(default = "one")]
    pub lagged_iterations: usize,
}

fn default_epsv() -> f64 {
    1e-3
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrainLimitSection {
    pub s: f64,
    #[serde(default = "unit")]
    pub shat: f64,
    #[serde(default = "default_kappa_s")]
    pub kappa_s: f64,
    #[serde(default = "default_kappa_s_max")]
    pub kappa_s_max: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_kappa_s() -> f64 {
    1e3
}

fn default_kappa_s_max() -> f64 {
    1e5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Shell,
    Rod,
    Particles,
    Volume,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MembraneChoice {
    #[default]
    Stvk,
    NeoHookean,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Grid { n: usize, size: f64 },
    Icosphere { radius: f64, level: usize },
    Box { size: [f64; 3], cells: [usize; 3] },
    Plane { half: f64 },
    Points { positions: Vec<[f64; 3]> },
    Polyline { points: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub name: String,
    pub kind: ObjectKind,
    /// Mesh file relative to the scene file (`.obj`, or `.tet` for volumes).
    pub mesh: Option<String>,
    pub shape: Option<ShapeConfig>,
    #[serde(default)]
    pub translate: [f64; 3],
    /// Euler angles in degrees, applied before the translation.
    #[serde(default)]
    pub rotate_deg: [f64; 3],
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Move the whole object at `kinematic_velocity`.
    #[serde(default)]
    pub kinematic: bool,
    #[serde(default)]
    pub kinematic_velocity: [f64; 3],
    /// Object-local node indices held fixed.
    #[serde(default)]
    pub pinned: Vec<usize>,
    pub density: Option<f64>,
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub thickness: Option<f64>,
    pub radius: Option<f64>,
    /// Obstacle offset.
    pub xi: Option<f64>,
    #[serde(default)]
    pub membrane: MembraneChoice,
    #[serde(default = "unit")]
    pub membrane_scale: f64,
    #[serde(default = "unit")]
    pub bending_scale: f64,
    #[serde(default)]
    pub strain_limited: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub sim: SimSection,
    pub friction: Option<FrictionSection>,
    pub strain_limit: Option<StrainLimitSection>,
    #[serde(default, rename = "object")]
    pub objects: Vec<ObjectConfig>,
}

impl SceneConfig {
    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.sim;
        SolverConfig {
            h: s.h,
            gravity: Vec3::from(s.gravity),
            newton_tol: s.newton_tol,
            max_newton: s.max_newton,
            barrier: BarrierParams {
                dhat: s.dhat,
                kappa: s.kappa.unwrap_or(1.0),
                s_conservative: s.s_conservative,
            },
            kappa: s.kappa,
            friction: self
                .friction
                .as_ref()
                .map_or(FrictionParams::default(), |f| FrictionParams {
                    mu: f.mu,
                    epsv: f.epsv,
                    lagged_iterations: f.lagged_iterations,
                }),
            strain_limit: self.strain_limit.as_ref().map(|l| StrainLimitParams {
                s: l.s,
                shat: l.shat,
                kappa_s_init: l.kappa_s,
                kappa_s_max: l.kappa_s_max,
            }),
            project_hessian: true,
        }
    }
}

/// A loaded, validated world.
#[derive(Debug, Clone)]
pub struct Scene {
    pub config: SceneConfig,
    pub mesh: SimMesh,
    pub state: WorldState,
    pub solver: SolverConfig,
    pub base_dir: PathBuf,
}

impl Scene {
    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(self.mesh.clone(), self.state.clone(), self.solver)
    }
}

pub fn parse_scene_config(text: &str, path: &Path) -> Result<SceneConfig> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Parse {
            path: path.to_path_buf(),
            message: "scene file not found".into(),
        },
        _ => Error::Io(e),
    })?;
    let cfg = parse_scene_config(&text, path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    build_scene(cfg, &base)
}

struct Geometry {
    verts: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    lines: Vec<[usize; 2]>,
    tets: Vec<[usize; 4]>,
}

fn object_geometry(o: &ObjectConfig, base: &Path) -> Result<Geometry> {
    let mut g = Geometry {
        verts: Vec::new(),
        faces: Vec::new(),
        lines: Vec::new(),
        tets: Vec::new(),
    };
    match (&o.mesh, &o.shape) {
        (Some(file), None) => {
            let p = base.join(file);
            if o.kind == ObjectKind::Volume {
                let t = read_tet(&p)?;
                g.verts = t.vertices;
                g.tets = t.tets;
            } else {
                let m = read_obj(&p)?;
                g.verts = m.vertices;
                g.faces = m.faces;
                g.lines = m.lines;
            }
        }
        (None, Some(shape)) => match shape {
            ShapeConfig::Grid { n, size } => (g.verts, g.faces) = shapes::grid(*n, *size, 0.0),
            ShapeConfig::Icosphere { radius, level } => {
                (g.verts, g.faces) = shapes::icosphere(Vec3::zeros(), *radius, *level)
            }
            ShapeConfig::Box { size, cells } => {
                let h = Vec3::from(*size) * 0.5;
                (g.verts, g.tets) = shapes::box_tets(-h, h, *cells);
            }
            ShapeConfig::Plane { half } => (g.verts, g.faces) = shapes::plane(*half, 0.0),
            ShapeConfig::Points { positions } => {
                g.verts = positions.iter().map(|p| Vec3::from(*p)).collect()
            }
            ShapeConfig::Polyline { points } => {
                g.verts = points.iter().map(|p| Vec3::from(*p)).collect();
                g.lines = (1..g.verts.len()).map(|i| [i - 1, i]).collect();
            }
        },
        _ => {
            return Err(Error::InvalidParameter(format!(
                "object `{}` needs exactly one of `mesh` or `shape`",
                o.name
            )))
        }
    }
    let r = o.rotate_deg.map(f64::to_radians);
    let rot = Rotation3::from_euler_angles(r[0], r[1], r[2]);
    let t = Vec3::from(o.translate);
    for v in g.verts.iter_mut() {
        *v = rot * (*v * o.scale) + t;
    }
    Ok(g)
}

/// Assemble mesh and state from a parsed configuration and run the initial
/// feasibility audit.
pub fn build_scene(cfg: SceneConfig, base: &Path) -> Result<Scene> {
    let solver = cfg.solver_config();
    solver.validate()?;
    if cfg.sim.substeps == 0 {
        return Err(Error::InvalidParameter(
            "substeps must be at least 1".into(),
        ));
    }
    let mut mesh = SimMesh::new();
    let mut kin: Vec<(std::ops::Range<usize>, Vec3)> = Vec::new();
    let mut vel: Vec<(std::ops::Range<usize>, Vec3)> = Vec::new();
    let mut pinned: Vec<usize> = Vec::new();
    for o in &cfg.objects {
        let g = object_geometry(o, base)?;
        let range = match o.kind {
            ObjectKind::Shell => {
                let mut m = ShellMaterial::cotton();
                m.density = o.density.unwrap_or(m.density);
                m.young = o.young.unwrap_or(m.young);
                m.poisson = o.poisson.unwrap_or(m.poisson);
                m.thickness = o.thickness.unwrap_or(m.thickness);
                m.membrane = match o.membrane {
                    MembraneChoice::Stvk => MembraneKind::StVK,
                    MembraneChoice::NeoHookean => MembraneKind::NeoHookean,
                };
                m.membrane_scale = o.membrane_scale;
                m.bending_scale = o.bending_scale;
                m.strain_limited = o.strain_limited;
                mesh.add_shell(&o.name, &g.verts, &g.faces, &m)?
            }
            ObjectKind::Rod => {
                let m = RodMaterial {
                    density: o.density.unwrap_or(1000.0),
                    young: o.young.unwrap_or(1e8),
                    radius: o.radius.unwrap_or(1e-3),
                };
                mesh.add_rod(&o.name, &g.verts, &g.lines, &m)?
            }
            ObjectKind::Particles => {
                let m = ParticleMaterial {
                    density: o.density.unwrap_or(1600.0),
                    radius: o.radius.unwrap_or(1e-3),
                };
                mesh.add_particles(&o.name, &g.verts, &m)
            }
            ObjectKind::Volume => {
                let m = VolumeMaterial {
                    density: o.density.unwrap_or(1000.0),
                    young: o.young.unwrap_or(1e6),
                    poisson: o.poisson.unwrap_or(0.4),
                };
                mesh.add_volume(&o.name, &g.verts, &g.tets, &m)?
            }
            ObjectKind::Obstacle => {
                mesh.add_obstacle(&o.name, &g.verts, &g.faces, o.xi.unwrap_or(0.0))?
            }
        };
        if o.kind == ObjectKind::Obstacle || o.kinematic {
            kin.push((range.clone(), Vec3::from(o.kinematic_velocity)));
        } else {
            vel.push((range.clone(), Vec3::from(o.velocity)));
        }
        for &p in &o.pinned {
            if p >= range.len() {
                return Err(Error::InvalidParameter(format!(
                    "object `{}`: pinned node {p} out of range",
                    o.name
                )));
            }
            pinned.push(range.start + p);
        }
    }
    let mut state = WorldState::at_rest(&mesh);
    for (r, v) in vel {
        for i in r {
            state.v[i] = v;
        }
    }
    for (r, v) in kin {
        for i in r {
            state.kinematic[i] = true;
            state.kinematic_velocity[i] = v;
        }
    }
    for i in pinned {
        state.kinematic[i] = true;
        state.kinematic_velocity[i] = Vec3::zeros();
        state.v[i] = Vec3::zeros();
    }
    initial_audit(&mesh, &state, &solver)?;
    Ok(Scene {
        config: cfg,
        mesh,
        state,
        solver,
        base_dir: base.to_path_buf(),
    })
}

/// Reject initial states with a pair at or inside its offset, or a
/// strain-limited triangle at or beyond its limit.
pub fn initial_audit(mesh: &SimMesh, state: &WorldState, solver: &SolverConfig) -> Result<()> {
    if mesh.n_nodes() <= EXHAUSTIVE_AUDIT_NODES {
        let a = audit_separation(mesh, &state.x, &state.kinematic, 0.0);
        if a.violations > 0 {
            let p = a.worst.expect("a violation has a pair");
            return Err(Error::InitialIntersection(format!(
                "{} pair {:?} has gap {:e} to its offset {}",
                p.kind.name(),
                p.active_nodes(),
                a.min_gap.unwrap_or(0.0),
                p.xi
            )));
        }
    } else {
        check_separation(mesh, &state.x, &state.kinematic, solver.barrier.dhat)?;
    }
    if let Some(sl) = &solver.strain_limit {
        for (i, t) in mesh.strain_limited_triangles().iter().enumerate() {
            let s = singular_values(t, &state.x)[0];
            if !(s < sl.s) {
                return Err(Error::InitialIntersection(format!(
                    "triangle {i} starts at stretch {s} beyond limit {}",
                    sl.s
                )));
            }
        }
    }
    Ok(())
}

/// Header of the per-step statistics table.
pub const STATS_HEADER: &str =
    "step,time,newton_iterations,converged,contacts,min_gap,max_stretch,kappa,kappa_s,alpha_min,energies";

pub fn stats_record(s: &StepStats, time: f64) -> String {
    let mut e = String::new();
    for (i, v) in s.energies.iter().enumerate() {
        if i > 0 {
            e.push(';');
        }
        let _ = write!(e, "{v:e}");
    }
    format!(
        "{},{},{},{},{},{},{},{:e},{:e},{:e},{}",
        s.step,
        time,
        s.newton_iterations,
        s.converged,
        s.contacts,
        s.min_gap.map_or(String::new(), |g| format!("{g:e}")),
        s.max_stretch,
        s.kappa,
        s.kappa_s,
        s.alpha_min,
        e
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frames_written: usize,
    pub steps: usize,
    pub unconverged_steps: usize,
}

/// Run `frames` frames, writing `frame_NNNNN.obj` (frame 0 is the initial
/// state) and `stats.csv` into `out` when given.
pub fn run_scene(
    scene: &Scene,
    frames: usize,
    out: Option<&Path>,
    mut on_step: impl FnMut(&StepStats),
) -> Result<RunSummary> {
    let mut sim = scene.simulator()?;
    let mut stats_text = String::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_obj(
            &dir.join(frame_name(0)),
            &frame_mesh(&sim.mesh, &sim.state.x),
        )?;
        stats_text.push_str(STATS_HEADER);
        stats_text.push('\n');
    }
    let mut summary = RunSummary {
        frames_written: usize::from(out.is_some()),
        steps: 0,
        unconverged_steps: 0,
    };
    for frame in 1..=frames {
        for _ in 0..scene.config.sim.substeps {
            let st = sim.step()?;
            summary.steps += 1;
            if out.is_some() {
                stats_text.push_str(&stats_record(&st, sim.state.time));
                stats_text.push('\n');
            }
            on_step(&st);
            if !st.converged {
                summary.unconverged_steps += 1;
                if scene.config.sim.on_unconverged == UnconvergedPolicy::Abort {
                    if let Some(dir) = out {
                        fs::write(dir.join("stats.csv"), &stats_text)?;
                    }
                    return Err(Error::Unconverged {
                        step: st.step,
                        iterations: st.newton_iterations,
                    });
                }
            }
        }
        if let Some(dir) = out {
            write_obj(
                &dir.join(frame_name(frame)),
                &frame_mesh(&sim.mesh, &sim.state.x),
            )?;
            summary.frames_written += 1;
        }
    }
    if let Some(dir) = out {
        fs::write(dir.join("stats.csv"), stats_text)?;
    }
    Ok(summary)
}

pub fn frame_name(frame: usize) -> String {
    format!("frame_{frame:05}.obj")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_particle_scene() {
        let text = r#"
            [sim]
            h = 0.01
            [[object]]
            name = "p"
            kind = "particles"
            shape = { type = "points", positions = [[0.0, 1.0, 0.0]] }
        "#;
        let cfg = parse_scene_config(text, Path::new("m.toml")).unwrap();
        let scene = build_scene(cfg, Path::new(".")).unwrap();
        assert_eq!(scene.mesh.n_nodes(), 1);
        let s = run_scene(&scene, 3, None, |_| {}).unwrap();
        assert_eq!(s.steps, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_scene_config("[sim]\nhh = 1\n", Path::new("x.toml")).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }
}
