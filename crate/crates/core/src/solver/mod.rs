//! Implicit Euler time stepping by projected Newton on the incremental
//! potential, with CCD-filtered backtracking line search.

pub mod linsolve;

use nalgebra::{SMatrix, SVector};

use crate::accd::max_step;
use crate::barrier::{
    contact_energy, contact_grad_hess, initial_kappa, offset_barrier_derivs, BarrierParams,
    KappaAdapter,
};
use crate::broadphase::{active_pairs, candidate_pairs_ccd};
use crate::distance::{pair_distance, PrimitivePair};
use crate::elasticity::{
    bending_energy, fixed_corotated_tet_energy, membrane_energy, rod_stretch_energy, TriangleRest,
};
use crate::error::{Error, Result};
use crate::friction::{
    build_lagged_contacts, friction_energy, friction_local, FrictionParams, LaggedContact,
};
use crate::math::Vec3;
use crate::mesh::SimMesh;
use crate::strain_limit::{
    max_stretch, singular_values, sl_potential, sl_triangle, strain_feasible, KappaSAdapter,
    StrainLimitParams,
};

use linsolve::{solve_spd, LowerTriplets};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub h: f64,
    pub gravity: Vec3,
    /// Stop when `|dx|_inf / h` falls below this (m/s).
    pub newton_tol: f64,
    pub max_newton: usize,
    /// `kappa` inside is replaced by the adaptive value at every step.
    pub barrier: BarrierParams,
    /// Fixed initial contact stiffness; `None` derives it from the masses.
    pub kappa: Option<f64>,
    pub friction: FrictionParams,
    pub strain_limit: Option<StrainLimitParams>,
    pub project_hessian: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 0.04,
            gravity: Vec3::new(0.0, -9.81, 0.0),
            newton_tol: 1e-2,
            max_newton: 200,
            barrier: BarrierParams::default(),
            kappa: None,
            friction: FrictionParams::default(),
            strain_limit: None,
            project_hessian: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.h
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "newton tolerance must be positive".into(),
            ));
        }
        if self.friction.mu < 0.0 || !(self.friction.epsv > 0.0) {
            return Err(Error::InvalidParameter(
                "friction needs mu >= 0 and epsv > 0".into(),
            ));
        }
        let mut b = self.barrier;
        b.kappa = self.kappa.unwrap_or(1.0);
        b.validate()?;
        if let Some(sl) = &self.strain_limit {
            sl.validate()?;
        }
        Ok(())
    }
}

/// Positions, velocities and scripted motion of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    /// Nodes whose trajectory is prescribed.
    pub kinematic: Vec<bool>,
    /// Constant velocity of each kinematic node.
    pub kinematic_velocity: Vec<Vec3>,
    pub time: f64,
    pub step: usize,
}

impl WorldState {
    /// Rest positions, zero velocity; massless nodes become static
    /// kinematic nodes.
    pub fn at_rest(mesh: &SimMesh) -> Self {
        let n = mesh.n_nodes();
        Self {
            x: mesh.rest.clone(),
            v: vec![Vec3::zeros(); n],
            kinematic: mesh.mass.iter().map(|&m| m <= 0.0).collect(),
            kinematic_velocity: vec![Vec3::zeros(); n],
            time: 0.0,
            step: 0,
        }
    }
}

/// Snapshot handed to the per-iterate hook after each accepted update.
#[derive(Debug)]
pub struct IterateInfo<'a> {
    pub step: usize,
    pub iteration: usize,
    pub x: &'a [Vec3],
    pub energy: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub kappa_s: f64,
    pub pairs: &'a [PrimitivePair],
    /// The update also advanced scripted nodes; such updates need not
    /// lower the energy.
    pub scripted: bool,
}

pub type IterateHook = Box<dyn FnMut(&IterateInfo<'_>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub step: usize,
    pub newton_iterations: usize,
    pub converged: bool,
    /// Incremental potential after each accepted free-node update.
    pub energies: Vec<f64>,
    pub alpha_min: f64,
    pub contacts: usize,
    /// Smallest `d - xi` over active pairs at the end of the step.
    pub min_gap: Option<f64>,
    pub max_stretch: f64,
    pub kappa: f64,
    pub kappa_s: f64,
    pub regularized: bool,
}

struct Assembly<'a> {
    grad: Vec<f64>,
    hess: LowerTriplets,
    dof: &'a [usize],
    /// Prescribed displacement of the scripted nodes, if any.
    kin_dx: Option<&'a [Vec3]>,
    /// `H_fk dx_k`, the free rows' response to the scripted motion.
    coupling: Vec<f64>,
}

impl<'a> Assembly<'a> {
    fn new(dof: &'a [usize], n_free: usize, kin_dx: Option<&'a [Vec3]>) -> Self {
        Self {
            grad: vec![0.0; 3 * dof.len()],
            hess: LowerTriplets::new(3 * n_free),
            dof,
            kin_dx,
            coupling: vec![0.0; 3 * dof.len()],
        }
    }

    fn add<const N: usize>(
        &mut self,
        nodes: &[usize],
        g: &SVector<f64, N>,
        h: &SMatrix<f64, N, N>,
    ) {
        for (a, &na) in nodes.iter().enumerate() {
            for k in 0..3 {
                self.grad[3 * na + k] += g[3 * a + k];
            }
            let ra = self.dof[na];
            if ra == usize::MAX {
                continue;
            }
            for (b, &nb) in nodes.iter().enumerate() {
                let rb = self.dof[nb];
                if rb == usize::MAX {
                    if let Some(kd) = self.kin_dx {
                        for i in 0..3 {
                            for j in 0..3 {
                                self.coupling[3 * na + i] += h[(3 * a + i, 3 * b + j)] * kd[nb][j];
                            }
                        }
                    }
                    continue;
                }
                if rb > ra {
                    continue;
                }
                for i in 0..3 {
                    for j in 0..3 {
                        self.hess
                            .push(3 * ra + i, 3 * rb + j, h[(3 * a + i, 3 * b + j)]);
                    }
                }
            }
        }
    }
}

/// Terms of the incremental potential that stay fixed during one Newton
/// solve.
struct Potential<'a> {
    mesh: &'a SimMesh,
    free: &'a [bool],
    x_hat: &'a [Vec3],
    x_prev: &'a [Vec3],
    h: f64,
    barrier: BarrierParams,
    sl: Option<(&'a StrainLimitParams, f64, &'a [TriangleRest])>,
    lagged: &'a [LaggedContact],
    eps_f: f64,
    project: bool,
}

impl Potential<'_> {
    fn energy(&self, x: &[Vec3], pairs: &[PrimitivePair]) -> Result<f64> {
        let m = self.mesh;
        let h2 = self.h * self.h;
        let mut inertia = 0.0;
        for i in 0..x.len() {
            if self.free[i] {
                inertia += 0.5 * m.mass[i] * (x[i] - self.x_hat[i]).norm_squared();
            }
        }
        let mut psi = 0.0;
        for s in &m.shells {
            psi += membrane_energy(&s.rest, x, &s.model, false)?.energy;
        }
        for hg in &m.hinges {
            psi += bending_energy(hg, x, false)?.energy;
        }
        for r in &m.rods {
            psi += rod_stretch_energy(r, x, false).energy;
        }
        for t in &m.tets {
            psi += fixed_corotated_tet_energy(&t.rest, x, t.lambda, t.mu, false).energy;
        }
        if let Some((p, ks, tris)) = self.sl {
            psi += sl_potential(tris, x, p, ks)?;
        }
        let mut b = 0.0;
        for pair in pairs {
            b += contact_energy(pair, x, &self.barrier)?;
        }
        let d = friction_energy(self.lagged, x, self.x_prev, self.eps_f);
        Ok(inertia + h2 * psi + b + d)
    }

    fn assemble(&self, x: &[Vec3], pairs: &[PrimitivePair], asm: &mut Assembly) -> Result<()> {
        let m = self.mesh;
        let h2 = self.h * self.h;
        let pr = self.project;
        for i in 0..x.len() {
            if self.free[i] {
                let r = (x[i] - self.x_hat[i]) * m.mass[i];
                let d = asm.dof[i];
                for k in 0..3 {
                    asm.grad[3 * i + k] += r[k];
                    asm.hess.push(3 * d + k, 3 * d + k, m.mass[i]);
                }
            }
        }
        for s in &m.shells {
            let l = membrane_energy(&s.rest, x, &s.model, pr)?;
            asm.add(&s.rest.nodes, &(l.grad * h2), &(l.hess * h2));
        }
        for hg in &m.hinges {
            let l = bending_energy(hg, x, pr)?;
            asm.add(&hg.nodes, &(l.grad * h2), &(l.hess * h2));
        }
        for r in &m.rods {
            let l = rod_stretch_energy(r, x, pr);
            asm.add(&r.nodes, &(l.grad * h2), &(l.hess * h2));
        }
        for t in &m.tets {
            let l = fixed_corotated_tet_energy(&t.rest, x, t.lambda, t.mu, pr);
            asm.add(&t.rest.nodes, &(l.grad * h2), &(l.hess * h2));
        }
        if let Some((p, ks, tris)) = self.sl {
            for t in tris {
                if let Some(l) = sl_triangle(t, x, p, ks, pr)? {
                    asm.add(&t.nodes, &(l.grad * h2), &(l.hess * h2));
                }
            }
        }
        for pair in pairs {
            if let Some(l) = contact_grad_hess(pair, x, &self.barrier, pr)? {
                add_stencil(asm, pair.active_nodes(), &l.grad, &l.hess);
            }
        }
        for c in self.lagged {
            let (_, g, hs) = friction_local(c, x, self.x_prev, self.eps_f);
            add_stencil(asm, c.pair.active_nodes(), &g, &hs);
        }
        Ok(())
    }
}

fn add_stencil(
    asm: &mut Assembly,
    nodes: &[usize],
    g: &SVector<f64, 12>,
    h: &SMatrix<f64, 12, 12>,
) {
    match nodes.len() {
        2 => asm.add::<6>(
            nodes,
            &g.fixed_rows::<6>(0).into(),
            &h.fixed_view::<6, 6>(0, 0).into(),
        ),
        3 => asm.add::<9>(
            nodes,
            &g.fixed_rows::<9>(0).into(),
            &h.fixed_view::<9, 9>(0, 0).into(),
        ),
        _ => asm.add::<12>(nodes, g, h),
    }
}

/// Smallest `d - xi` over `pairs`.
pub fn min_gap(pairs: &[PrimitivePair], x: &[Vec3]) -> Option<f64> {
    pairs
        .iter()
        .map(|p| pair_distance(p, x).d_sq.sqrt() - p.xi)
        .min_by(f64::total_cmp)
}

/// Reject configurations where some pair is within its offset.
pub fn check_separation(mesh: &SimMesh, x: &[Vec3], kinematic: &[bool], dhat: f64) -> Result<()> {
    for p in active_pairs(mesh, x, dhat, kinematic) {
        let d_sq = pair_distance(&p, x).d_sq;
        if !(d_sq > p.xi * p.xi) {
            return Err(Error::InitialIntersection(format!(
                "{} pair {:?} at distance {} within offset {}",
                p.kind.name(),
                p.active_nodes(),
                d_sq.max(0.0).sqrt(),
                p.xi
            )));
        }
    }
    Ok(())
}

pub struct Simulator {
    pub mesh: SimMesh,
    pub state: WorldState,
    pub config: SolverConfig,
    kappa: KappaAdapter,
    kappa_s: Option<KappaSAdapter>,
    sl_tris: Vec<TriangleRest>,
    hook: Option<IterateHook>,
}

impl Simulator {
    /// Validate the configuration and the initial state.
    pub fn new(mesh: SimMesh, state: WorldState, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = mesh.n_nodes();
        if state.x.len() != n
            || state.v.len() != n
            || state.kinematic.len() != n
            || state.kinematic_velocity.len() != n
        {
            return Err(Error::InvalidParameter(
                "state size does not match the mesh".into(),
            ));
        }
        for i in 0..n {
            if !state.kinematic[i] && !(mesh.mass[i] > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "free node {i} has no mass"
                )));
            }
        }
        check_separation(&mesh, &state.x, &state.kinematic, config.barrier.dhat)?;
        let sl_tris = if config.strain_limit.is_some() {
            mesh.strain_limited_triangles()
        } else {
            Vec::new()
        };
        if let Some(sl) = &config.strain_limit {
            for t in &sl_tris {
                let s = singular_values(t, &state.x)[0];
                if !(s < sl.s) {
                    return Err(Error::StrainLimitBreach {
                        sigma: s,
                        limit: sl.s,
                    });
                }
            }
        }
        let kappa0 = match config.kappa {
            Some(k) => k,
            None => {
                let masses: Vec<f64> = mesh.mass.iter().copied().filter(|&m| m > 0.0).collect();
                let mean_mass = masses.iter().sum::<f64>() / masses.len().max(1) as f64;
                let xi = if mesh.points.is_empty() {
                    0.0
                } else {
                    mesh.points.iter().map(|p| p.xi).sum::<f64>() / mesh.points.len() as f64
                };
                let xi = 0.5 * xi;
                let dhat = config.barrier.dhat;
                // Also make the layer carry a mean node's weight at half depth.
                let d = xi + 0.5 * dhat;
                let (b1, _) = offset_barrier_derivs(d * d, xi, dhat)?;
                let weight = config.h * config.h * mean_mass * config.gravity.norm();
                initial_kappa(mean_mass, xi, dhat).max(weight / (-2.0 * d * b1))
            }
        };
        Ok(Self {
            kappa: KappaAdapter::new(kappa0),
            kappa_s: config.strain_limit.as_ref().map(KappaSAdapter::new),
            sl_tris,
            mesh,
            state,
            config,
            hook: None,
        })
    }

    pub fn set_hook(&mut self, hook: IterateHook) {
        self.hook = Some(hook);
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.kappa
    }

    pub fn kappa_s(&self) -> f64 {
        self.kappa_s.as_ref().map_or(0.0, |k| k.kappa_s)
    }

    pub fn strain_limited_triangles(&self) -> &[TriangleRest] {
        &self.sl_tris
    }

    fn barrier(&self) -> BarrierParams {
        let mut b = self.config.barrier;
        b.kappa = self.kappa.kappa;
        b
    }

    /// Active contact pairs at the current state.
    pub fn active_pairs(&self) -> Vec<PrimitivePair> {
        active_pairs(
            &self.mesh,
            &self.state.x,
            self.config.barrier.dhat,
            &self.state.kinematic,
        )
    }

    /// Normal force magnitude (N) of every active pair at the current state.
    pub fn contact_forces(&self) -> Result<Vec<(PrimitivePair, f64)>> {
        let pairs = self.active_pairs();
        let lagged = build_lagged_contacts(&pairs, &self.state.x, &self.barrier(), 1.0)?;
        let h2 = self.config.h * self.config.h;
        Ok(lagged
            .into_iter()
            .map(|c| (c.pair, c.lambda / h2))
            .collect())
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<StepStats> {
        let cfg = self.config;
        let h = cfg.h;
        let n = self.mesh.n_nodes();
        let x_prev = self.state.x.clone();
        let free: Vec<bool> = self.state.kinematic.iter().map(|k| !k).collect();
        let mut dof = vec![usize::MAX; n];
        let mut n_free = 0;
        for i in 0..n {
            if free[i] {
                dof[i] = n_free;
                n_free += 1;
            }
        }
        let x_hat: Vec<Vec3> = (0..n)
            .map(|i| x_prev[i] + self.state.v[i] * h + cfg.gravity * (h * h))
            .collect();
        let target: Vec<Vec3> = (0..n)
            .map(|i| x_prev[i] + self.state.kinematic_velocity[i] * h)
            .collect();

        self.kappa.reset();
        if let Some(k) = self.kappa_s.as_mut() {
            k.reset();
        }
        let mut stats = StepStats {
            step: self.state.step,
            newton_iterations: 0,
            converged: false,
            energies: Vec::new(),
            alpha_min: 1.0,
            contacts: 0,
            min_gap: None,
            max_stretch: 0.0,
            kappa: self.kappa.kappa,
            kappa_s: self.kappa_s(),
            regularized: false,
        };

        let mut x = x_prev.clone();
        let friction_on = cfg.friction.mu > 0.0;
        let outer = if friction_on {
            cfg.friction.lagged_iterations.max(1)
        } else {
            1
        };
        let mut lagged: Vec<LaggedContact> = Vec::new();
        for _ in 0..outer {
            if friction_on {
                let pairs = active_pairs(&self.mesh, &x, cfg.barrier.dhat, &self.state.kinematic);
                lagged = build_lagged_contacts(&pairs, &x, &self.barrier(), cfg.friction.mu)?;
            }
            stats.converged = self.newton(
                &mut x, &x_prev, &x_hat, &target, &free, &dof, n_free, &lagged, &mut stats,
            )?;
        }

        let pairs = active_pairs(&self.mesh, &x, cfg.barrier.dhat, &self.state.kinematic);
        stats.contacts = pairs.len();
        stats.min_gap = min_gap(&pairs, &x);
        stats.max_stretch = max_stretch(&self.sl_tris, &x);
        stats.kappa = self.kappa.kappa;
        stats.kappa_s = self.kappa_s();
        for i in 0..n {
            self.state.v[i] = if free[i] {
                (x[i] - x_prev[i]) / h
            } else {
                self.state.kinematic_velocity[i]
            };
        }
        self.state.x = x;
        self.state.time += h;
        self.state.step += 1;
        Ok(stats)
    }

    #[allow(clippy::too_many_arguments)]
    fn newton(
        &mut self,
        x: &mut Vec<Vec3>,
        x_prev: &[Vec3],
        x_hat: &[Vec3],
        target: &[Vec3],
        free: &[bool],
        dof: &[usize],
        n_free: usize,
        lagged: &[LaggedContact],
        stats: &mut StepStats,
    ) -> Result<bool> {
        let cfg = self.config;
        let h = cfg.h;
        let n = x.len();
        let kinematic = &self.state.kinematic.clone();
        let s_cons = cfg.barrier.s_conservative;
        let mut on_target = (0..n).all(|i| free[i] || x[i] == target[i]);
        let mut pairs = active_pairs(&self.mesh, x, cfg.barrier.dhat, kinematic);

        for it in 0..cfg.max_newton {
            stats.newton_iterations += 1;
            // Until the scripted nodes reach their targets, their remaining
            // displacement is part of the step and the free nodes solve for
            // the linear response to it.
            let kin_dx: Option<Vec<Vec3>> = (!on_target).then(|| {
                (0..n)
                    .map(|i| {
                        if free[i] {
                            Vec3::zeros()
                        } else {
                            target[i] - x[i]
                        }
                    })
                    .collect()
            });

            let ks = self.kappa_s.as_ref().map_or(0.0, |k| k.kappa_s);
            let pot = Potential {
                mesh: &self.mesh,
                free,
                x_hat,
                x_prev,
                h,
                barrier: self.barrier(),
                sl: cfg
                    .strain_limit
                    .as_ref()
                    .map(|p| (p, ks, self.sl_tris.as_slice())),
                lagged,
                eps_f: cfg.friction.epsv * h,
                project: cfg.project_hessian,
            };
            let mut asm = Assembly::new(dof, n_free, kin_dx.as_deref());
            pot.assemble(x, &pairs, &mut asm)?;
            let mut rhs = vec![0.0; 3 * n_free];
            for i in 0..n {
                if free[i] {
                    for k in 0..3 {
                        rhs[3 * dof[i] + k] = -asm.grad[3 * i + k] - asm.coupling[3 * i + k];
                    }
                }
            }
            let (sol, shift) = solve_spd(&asm.hess, &rhs)?;
            stats.regularized |= shift > 0.0;
            let mut dx = kin_dx.clone().unwrap_or_else(|| vec![Vec3::zeros(); n]);
            let mut inf: f64 = 0.0;
            for i in 0..n {
                if free[i] {
                    let d = 3 * dof[i];
                    dx[i] = Vec3::new(sol[d], sol[d + 1], sol[d + 2]);
                    inf = inf.max(dx[i].amax());
                }
            }
            if on_target && inf / h < cfg.newton_tol {
                return Ok(true);
            }

            let cands = candidate_pairs_ccd(x, &dx, &self.mesh, kinematic);
            let mut alpha = max_step(&cands, x, &dx, s_cons)?.min(1.0);
            let scripted = !on_target;
            let (x_new, pairs_new, e_new) = if scripted {
                // Prescribed motion: only feasibility limits the step.
                loop {
                    if alpha < 1e-14 {
                        return Err(Error::LineSearchUnderflow {
                            alpha,
                            iteration: it,
                        });
                    }
                    let xt: Vec<Vec3> = (0..n)
                        .map(|i| {
                            if !free[i] && alpha >= 1.0 {
                                target[i]
                            } else {
                                x[i] + dx[i] * alpha
                            }
                        })
                        .collect();
                    let feasible = cfg
                        .strain_limit
                        .as_ref()
                        .is_none_or(|p| strain_feasible(&self.sl_tris, &xt, p.s));
                    if feasible {
                        let pt = active_pairs(&self.mesh, &xt, cfg.barrier.dhat, kinematic);
                        if let Ok(et) = pot.energy(&xt, &pt) {
                            on_target = alpha >= 1.0;
                            break (xt, pt, et);
                        }
                    }
                    alpha *= 0.5;
                }
            } else {
                let e0 = pot.energy(x, &pairs)?;
                loop {
                    if alpha < 1e-14 {
                        return Err(Error::LineSearchUnderflow {
                            alpha,
                            iteration: it,
                        });
                    }
                    let xt: Vec<Vec3> = (0..n).map(|i| x[i] + dx[i] * alpha).collect();
                    let feasible = cfg
                        .strain_limit
                        .as_ref()
                        .is_none_or(|p| strain_feasible(&self.sl_tris, &xt, p.s));
                    if feasible {
                        let pt = active_pairs(&self.mesh, &xt, cfg.barrier.dhat, kinematic);
                        if let Ok(et) = pot.energy(&xt, &pt) {
                            if et < e0 {
                                break (xt, pt, et);
                            }
                        }
                    }
                    alpha *= 0.5;
                }
            };
            stats.alpha_min = stats.alpha_min.min(alpha);
            stats.energies.push(e_new);
            *x = x_new;
            pairs = pairs_new;

            self.kappa.update(min_gap(&pairs, x));
            if let (Some(k), Some(p)) = (self.kappa_s.as_mut(), cfg.strain_limit.as_ref()) {
                let gaps: Vec<f64> = self
                    .sl_tris
                    .iter()
                    .map(|t| p.s - singular_values(t, x)[0])
                    .collect();
                k.update(&gaps);
            }
            if let Some(hook) = self.hook.as_mut() {
                hook(&IterateInfo {
                    step: self.state.step,
                    iteration: it,
                    x,
                    energy: e_new,
                    alpha,
                    kappa: self.kappa.kappa,
                    kappa_s: self.kappa_s.as_ref().map_or(0.0, |k| k.kappa_s),
                    pairs: &pairs,
                    scripted,
                });
            }
        }
        Ok(false)
    }
}
