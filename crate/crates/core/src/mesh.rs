//! Mixed-codimension simulation mesh: elastic elements, contact primitives
//! with thickness offsets, and lumped masses.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::elasticity::bending::bending_stiffness;
use crate::elasticity::mass::{particle_volume, rod_volume};
use crate::elasticity::{lame, Hinge, MembraneModel, RodSegment, TetRest, TriangleRest};
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::strain_limit::AnisoParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembraneKind {
    StVK,
    NeoHookean,
    Orthotropic(AnisoParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellMaterial {
    pub density: f64,
    pub young: f64,
    pub poisson: f64,
    pub thickness: f64,
    /// Multiplier on the membrane modulus.
    pub membrane_scale: f64,
    /// Multiplier on the plate bending constant.
    pub bending_scale: f64,
    pub membrane: MembraneKind,
    pub strain_limited: bool,
}

impl ShellMaterial {
    /// Cotton: 472.6 kg/m^3, 0.318 mm.
    pub fn cotton() -> Self {
        Self {
            density: 472.6,
            young: 0.8e6,
            poisson: 0.243,
            thickness: 0.318e-3,
            membrane_scale: 1.0,
            bending_scale: 1.0,
            membrane: MembraneKind::StVK,
            strain_limited: false,
        }
    }

    fn membrane_model(&self) -> MembraneModel {
        let e = self.young * self.membrane_scale;
        match self.membrane {
            MembraneKind::StVK => MembraneModel::stvk(e, self.poisson),
            MembraneKind::NeoHookean => MembraneModel::neo_hookean(e, self.poisson),
            MembraneKind::Orthotropic(p) => MembraneModel::Orthotropic(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodMaterial {
    pub density: f64,
    pub young: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleMaterial {
    pub density: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeMaterial {
    pub density: f64,
    pub young: f64,
    pub poisson: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellElement {
    pub rest: TriangleRest,
    pub model: MembraneModel,
    pub strain_limited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetElement {
    pub rest: TetRest,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKind {
    Surface,
    RodNode,
    Particle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    pub node: usize,
    pub xi: f64,
    pub kind: PointKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEdge {
    pub nodes: [usize; 2],
    pub xi: f64,
    pub rod: bool,
    pub rest_len_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactFace {
    pub nodes: [usize; 3],
    pub xi: f64,
}

/// Named node/face ranges of one scene object, used for output.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRange {
    pub name: String,
    pub nodes: Range<usize>,
    pub faces: Vec<[usize; 3]>,
    pub lines: Vec<[usize; 2]>,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct SimMesh {
    pub rest: Vec<Vec3>,
    pub mass: Vec<f64>,
    pub shells: Vec<ShellElement>,
    pub hinges: Vec<Hinge>,
    pub rods: Vec<RodSegment>,
    pub tets: Vec<TetElement>,
    pub points: Vec<ContactPoint>,
    pub edges: Vec<ContactEdge>,
    pub faces: Vec<ContactFace>,
    pub objects: Vec<ObjectRange>,
    /// Sum of element masses `rho V`.
    pub total_mass: f64,
}

impl SimMesh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_nodes(&self) -> usize {
        self.rest.len()
    }

    fn push_nodes(&mut self, v: &[Vec3]) -> usize {
        let base = self.rest.len();
        self.rest.extend_from_slice(v);
        self.mass.resize(self.rest.len(), 0.0);
        base
    }

    fn add_mass(&mut self, nodes: &[usize], m: f64) {
        self.total_mass += m;
        let share = m / nodes.len() as f64;
        for &n in nodes {
            self.mass[n] += share;
        }
    }

    fn add_surface_primitives(&mut self, faces: &[[usize; 3]], xi: f64, base: usize) {
        let mut verts: Vec<usize> = faces.iter().flatten().map(|&n| n + base).collect();
        verts.sort_unstable();
        verts.dedup();
        for node in verts {
            self.points.push(ContactPoint {
                node,
                xi,
                kind: PointKind::Surface,
            });
        }
        let mut edges: Vec<[usize; 2]> = Vec::new();
        for f in faces {
            for k in 0..3 {
                let (a, b) = (f[k] + base, f[(k + 1) % 3] + base);
                edges.push([a.min(b), a.max(b)]);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        for e in edges {
            let rest_len_sq = (self.rest[e[1]] - self.rest[e[0]]).norm_squared();
            self.edges.push(ContactEdge {
                nodes: e,
                xi,
                rod: false,
                rest_len_sq,
            });
        }
        for f in faces {
            self.faces.push(ContactFace {
                nodes: f.map(|n| n + base),
                xi,
            });
        }
    }

    /// Add a thin shell with membrane and hinge-bending elasticity.
    pub fn add_shell(
        &mut self,
        name: &str,
        verts: &[Vec3],
        faces: &[[usize; 3]],
        mat: &ShellMaterial,
    ) -> Result<Range<usize>> {
        check_faces(faces, verts.len(), name)?;
        let base = self.push_nodes(verts);
        let model = mat.membrane_model();
        for (i, f) in faces.iter().enumerate() {
            let nodes = f.map(|n| n + base);
            let rest = TriangleRest::new(nodes, &self.rest, mat.thickness, self.shells.len() + i)?;
            self.add_mass(&nodes, mat.density * rest.volume());
            self.shells.push(ShellElement {
                rest,
                model,
                strain_limited: mat.strain_limited,
            });
        }
        let kb = bending_stiffness(mat.young, mat.poisson, mat.thickness) * mat.bending_scale;
        if kb > 0.0 {
            for h in hinge_stencils(faces) {
                let nodes = h.map(|n| n + base);
                let idx = self.hinges.len();
                self.hinges.push(Hinge::new(nodes, &self.rest, kb, idx)?);
            }
        }
        self.add_surface_primitives(faces, mat.thickness, base);
        let range = base..self.rest.len();
        self.objects.push(ObjectRange {
            name: name.to_string(),
            nodes: range.clone(),
            faces: faces.iter().map(|f| f.map(|n| n + base)).collect(),
            lines: Vec::new(),
            points: Vec::new(),
        });
        Ok(range)
    }

    /// Add a rod polyline set (stretching only).
    pub fn add_rod(
        &mut self,
        name: &str,
        verts: &[Vec3],
        edges: &[[usize; 2]],
        mat: &RodMaterial,
    ) -> Result<Range<usize>> {
        let base = self.push_nodes(verts);
        let xi = 2.0 * mat.radius;
        let mut used = Vec::new();
        for (i, e) in edges.iter().enumerate() {
            if e[0] >= verts.len() || e[1] >= verts.len() || e[0] == e[1] {
                return Err(Error::InvalidParameter(format!("{name}: bad rod edge {i}")));
            }
            let nodes = e.map(|n| n + base);
            let seg = RodSegment::new(nodes, &self.rest, mat.young, mat.radius, self.rods.len())?;
            self.add_mass(
                &nodes,
                mat.density * rod_volume(seg.rest_length, mat.radius),
            );
            self.rods.push(seg);
            self.edges.push(ContactEdge {
                nodes,
                xi,
                rod: true,
                rest_len_sq: seg.rest_length * seg.rest_length,
            });
            used.extend(nodes);
        }
        used.sort_unstable();
        used.dedup();
        for node in used {
            self.points.push(ContactPoint {
                node,
                xi,
                kind: PointKind::RodNode,
            });
        }
        let range = base..self.rest.len();
        self.objects.push(ObjectRange {
            name: name.to_string(),
            nodes: range.clone(),
            faces: Vec::new(),
            lines: edges.iter().map(|e| e.map(|n| n + base)).collect(),
            points: Vec::new(),
        });
        Ok(range)
    }

    /// Add free particles (spheres of the given radius).
    pub fn add_particles(
        &mut self,
        name: &str,
        centers: &[Vec3],
        mat: &ParticleMaterial,
    ) -> Range<usize> {
        let base = self.push_nodes(centers);
        let v = particle_volume(mat.radius);
        for i in 0..centers.len() {
            self.add_mass(&[base + i], mat.density * v);
            self.points.push(ContactPoint {
                node: base + i,
                xi: 2.0 * mat.radius,
                kind: PointKind::Particle,
            });
        }
        let range = base..self.rest.len();
        self.objects.push(ObjectRange {
            name: name.to_string(),
            nodes: range.clone(),
            faces: Vec::new(),
            lines: Vec::new(),
            points: range.clone().collect(),
        });
        range
    }

    /// Add a tetrahedral volume; its boundary surface gets zero offset.
    pub fn add_volume(
        &mut self,
        name: &str,
        verts: &[Vec3],
        tets: &[[usize; 4]],
        mat: &VolumeMaterial,
    ) -> Result<Range<usize>> {
        let base = self.push_nodes(verts);
        let (lambda, mu) = lame(mat.young, mat.poisson);
        for (i, t) in tets.iter().enumerate() {
            if t.iter().any(|&n| n >= verts.len()) {
                return Err(Error::InvalidParameter(format!("{name}: bad tet {i}")));
            }
            let nodes = t.map(|n| n + base);
            let rest = TetRest::new(nodes, &self.rest, self.tets.len())?;
            self.add_mass(&nodes, mat.density * rest.volume);
            self.tets.push(TetElement { rest, lambda, mu });
        }
        let boundary = boundary_faces(tets);
        self.add_surface_primitives(&boundary, 0.0, base);
        let range = base..self.rest.len();
        self.objects.push(ObjectRange {
            name: name.to_string(),
            nodes: range.clone(),
            faces: boundary.iter().map(|f| f.map(|n| n + base)).collect(),
            lines: Vec::new(),
            points: Vec::new(),
        });
        Ok(range)
    }

    /// Add a massless collision surface, meant to be driven kinematically.
    pub fn add_obstacle(
        &mut self,
        name: &str,
        verts: &[Vec3],
        faces: &[[usize; 3]],
        xi: f64,
    ) -> Result<Range<usize>> {
        check_faces(faces, verts.len(), name)?;
        let base = self.push_nodes(verts);
        self.add_surface_primitives(faces, xi, base);
        let range = base..self.rest.len();
        self.objects.push(ObjectRange {
            name: name.to_string(),
            nodes: range.clone(),
            faces: faces.iter().map(|f| f.map(|n| n + base)).collect(),
            lines: Vec::new(),
            points: Vec::new(),
        });
        Ok(range)
    }

    /// Shell triangles under strain limiting.
    pub fn strain_limited_triangles(&self) -> Vec<TriangleRest> {
        self.shells
            .iter()
            .filter(|s| s.strain_limited)
            .map(|s| s.rest)
            .collect()
    }
}

fn check_faces(faces: &[[usize; 3]], n: usize, name: &str) -> Result<()> {
    for (i, f) in faces.iter().enumerate() {
        if f.iter().any(|&k| k >= n) || f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::InvalidParameter(format!("{name}: bad face {i}")));
        }
    }
    Ok(())
}

/// Hinge stencils `[e0, e1, opp0, opp1]` for every interior edge shared by
/// exactly two faces.
pub fn hinge_stencils(faces: &[[usize; 3]]) -> Vec<[usize; 4]> {
    let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            map.entry((a.min(b), a.max(b)))
                .or_default()
                .push(f[(k + 2) % 3]);
        }
    }
    map.into_iter()
        .filter(|(_, opp)| opp.len() == 2)
        .map(|((a, b), opp)| [a, b, opp[0], opp[1]])
        .collect()
}

/// Faces of a tet mesh that belong to exactly one tet, outward oriented.
pub fn boundary_faces(tets: &[[usize; 4]]) -> Vec<[usize; 3]> {
    let mut count: BTreeMap<[usize; 3], (usize, [usize; 3])> = BTreeMap::new();
    for t in tets {
        // Outward for a positively oriented tet.
        let fs = [
            [t[0], t[2], t[1]],
            [t[0], t[1], t[3]],
            [t[0], t[3], t[2]],
            [t[1], t[2], t[3]],
        ];
        for f in fs {
            let mut key = f;
            key.sort_unstable();
            let e = count.entry(key).or_insert((0, f));
            e.0 += 1;
        }
    }
    count
        .into_values()
        .filter(|(c, _)| *c == 1)
        .map(|(_, f)| f)
        .collect()
}
