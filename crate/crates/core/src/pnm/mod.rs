//! Pore-network model: extraction, Hagen–Poiseuille pressure solve,
//! Darcy permeability and flux-weighted particle tortuosity.

mod solver;

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::poreseg::{DistanceMap, LabeledPoreSpace};
use crate::stats::{summarize, Histogram, Summary};
use crate::voxel::{forward_offsets_26, Dims};
use crate::{m2_to_darcy, FluidProps, UM};

pub use solver::{bicg, dense_solve, CsrMatrix, SolveError, SolveStats};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PnmError {
    #[error("no inlet-to-outlet path through the network")]
    NoSpanningPath,
    #[error("network is disconnected: {0}")]
    DisconnectedNetwork(String),
    #[error("pressure solve failed: {0}")]
    SolverDiverged(#[from] SolveError),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no positive inlet flux to seed particles")]
    NoFlow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPore {
    pub id: u32,
    /// µm
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// µm
    pub r: f64,
    /// Reservoir node added for pores that span the whole sample.
    #[serde(default, skip_serializing_if = "std::ops::Not::not", rename = "virtual")]
    pub is_virtual: bool,
}

impl NetworkPore {
    pub fn centre(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throat {
    pub a: u32,
    pub b: u32,
    /// radius, µm
    pub r: f64,
    /// length, µm
    pub l: f64,
    /// conductance, m³/(Pa·s)
    pub g: f64,
}

/// Pores (ids 1..=N, stored in id order) joined by throats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoreNetwork {
    pub pores: Vec<NetworkPore>,
    pub throats: Vec<Throat>,
    pub inlet: Vec<u32>,
    pub outlet: Vec<u32>,
}

/// Throat hydraulic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductanceModel {
    /// Multiplier on the circular-tube conductance.
    pub shape_factor: f64,
}

impl Default for ConductanceModel {
    fn default() -> Self {
        ConductanceModel { shape_factor: 1.0 }
    }
}

/// Hagen–Poiseuille conductance `π r⁴ / (8 µ L)` in m³/(Pa·s) for radius and
/// length given in µm.
pub fn throat_conductance(radius_um: f64, length_um: f64, props: &FluidProps) -> f64 {
    throat_conductance_si(radius_um * UM, length_um * UM, props.dynamic_viscosity)
}

/// Same, with SI inputs.
pub fn throat_conductance_si(radius_m: f64, length_m: f64, viscosity: f64) -> f64 {
    std::f64::consts::PI * radius_m.powi(4) / (8.0 * viscosity * length_m)
}

impl PoreNetwork {
    /// Validates ids, throat endpoints and positivity.
    pub fn new(pores: Vec<NetworkPore>, throats: Vec<Throat>, inlet: Vec<u32>, outlet: Vec<u32>) -> Result<Self, PnmError> {
        for (k, p) in pores.iter().enumerate() {
            if p.id as usize != k + 1 {
                return Err(PnmError::InvalidNetwork(format!("pore at position {k} has id {}", p.id)));
            }
        }
        let n = pores.len() as u32;
        for t in &throats {
            if t.a == t.b || t.a == 0 || t.b == 0 || t.a > n || t.b > n {
                return Err(PnmError::InvalidNetwork(format!("bad throat endpoints {}-{}", t.a, t.b)));
            }
            if !(t.g > 0.0 && t.l > 0.0) || !t.g.is_finite() {
                return Err(PnmError::InvalidNetwork(format!("throat {}-{} needs g > 0 and l > 0", t.a, t.b)));
            }
        }
        for &id in inlet.iter().chain(&outlet) {
            if id == 0 || id > n {
                return Err(PnmError::InvalidNetwork(format!("boundary pore {id} does not exist")));
            }
        }
        if let Some(id) = inlet.iter().find(|i| outlet.contains(i)) {
            return Err(PnmError::InvalidNetwork(format!("pore {id} is both inlet and outlet")));
        }
        Ok(PoreNetwork { pores, throats, inlet, outlet })
    }

    pub fn pore(&self, id: u32) -> &NetworkPore {
        &self.pores[id as usize - 1]
    }

    pub fn real_pore_count(&self) -> usize {
        self.pores.iter().filter(|p| !p.is_virtual).count()
    }

    fn neighbours(&self) -> Vec<Vec<(usize, u32)>> {
        let mut nb = vec![Vec::new(); self.pores.len() + 1];
        for (k, t) in self.throats.iter().enumerate() {
            nb[t.a as usize].push((k, t.b));
            nb[t.b as usize].push((k, t.a));
        }
        nb
    }

    pub fn has_spanning_path(&self) -> bool {
        let nb = self.neighbours();
        let mut seen = vec![false; self.pores.len() + 1];
        let mut queue: VecDeque<u32> = self.inlet.iter().copied().collect();
        for &i in &self.inlet {
            seen[i as usize] = true;
        }
        let mut is_out = vec![false; self.pores.len() + 1];
        for &o in &self.outlet {
            is_out[o as usize] = true;
        }
        while let Some(p) = queue.pop_front() {
            if is_out[p as usize] {
                return true;
            }
            for &(_, q) in &nb[p as usize] {
                if !seen[q as usize] {
                    seen[q as usize] = true;
                    queue.push_back(q);
                }
            }
        }
        false
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, PnmError> {
        let raw: PoreNetwork = serde_json::from_str(text).map_err(|e| PnmError::InvalidNetwork(e.to_string()))?;
        PoreNetwork::new(raw.pores, raw.throats, raw.inlet, raw.outlet)
    }
}

/// Sample block used for the Darcy conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGeometry {
    pub area_m2: f64,
    pub length_m: f64,
}

impl SampleGeometry {
    pub fn from_dims(dims: Dims, voxel_size_um: f64) -> Self {
        let vs = voxel_size_um * UM;
        SampleGeometry { area_m2: dims.nx as f64 * dims.ny as f64 * vs * vs, length_m: dims.nz as f64 * vs }
    }
}

/// One network pore per label and one throat per adjacent label pair.
///
/// Throat radius is the largest distance value over the voxels on either side
/// of the shared boundary; throat length is the centroid distance minus both
/// pore radii, clamped to one voxel. A pore touching both the inlet and the
/// outlet face is kept as an inlet pore and joined to a virtual outlet node
/// by its own conductance over its z extent, using the radius of a cylinder
/// with the pore's volume and extent.
///
/// Networks without an inlet-to-outlet path are returned as they are;
/// [`solve_pressure`] reports them as [`PnmError::NoSpanningPath`].
pub fn extract_network(
    lps: &LabeledPoreSpace,
    dmap: &DistanceMap,
    props: &FluidProps,
    model: ConductanceModel,
) -> Result<PoreNetwork, PnmError> {
    let d = lps.dims();
    if dmap.dims() != d {
        return Err(PnmError::InvalidArgument("distance map and labels differ in size".into()));
    }
    let vs = lps.voxel_size();
    let labels = lps.labels();
    let mut boundary_r: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let fwd = forward_offsets_26();
    for i in 0..d.len() {
        let a = labels[i];
        if a == 0 {
            continue;
        }
        let (x, y, z) = d.coords(i);
        for &o in &fwd {
            if let Some(j) = d.offset(x, y, z, o) {
                let b = labels[j];
                if b != 0 && b != a {
                    let e = boundary_r.entry((a.min(b), a.max(b))).or_insert(0.0);
                    *e = e.max(dmap.get(i)).max(dmap.get(j));
                }
            }
        }
    }
    let mut pores: Vec<NetworkPore> = lps
        .pores()
        .iter()
        .map(|p| NetworkPore {
            id: p.id,
            x: p.centroid_um[0],
            y: p.centroid_um[1],
            z: p.centroid_um[2],
            r: p.max_inscribed_radius,
            is_virtual: false,
        })
        .collect();
    let mut throats: Vec<Throat> = boundary_r
        .iter()
        .map(|(&(a, b), &r)| {
            let pa = &pores[a as usize - 1];
            let pb = &pores[b as usize - 1];
            let l = (dist(&pa.centre(), &pb.centre()) - pa.r - pb.r).max(vs);
            Throat { a, b, r, l, g: model.shape_factor * throat_conductance(r, l, props) }
        })
        .collect();
    let mut inlet = Vec::new();
    let mut outlet = Vec::new();
    let z_top = d.nz as f64 * vs;
    for p in lps.pores() {
        match (p.touches_inlet, p.touches_outlet) {
            (true, true) => {
                inlet.push(p.id);
                let id = pores.len() as u32 + 1;
                let l = p.z_extent as f64 * vs;
                // radius of the cylinder with the pore's volume and length;
                // the inscribed radius is biased low by up to a voxel diagonal
                let r = vs * (p.voxel_count as f64 / (PI * p.z_extent as f64)).sqrt();
                pores.push(NetworkPore {
                    id,
                    x: p.centroid_um[0],
                    y: p.centroid_um[1],
                    z: z_top,
                    r,
                    is_virtual: true,
                });
                throats.push(Throat { a: p.id, b: id, r, l, g: model.shape_factor * throat_conductance(r, l, props) });
                outlet.push(id);
            }
            (true, false) => inlet.push(p.id),
            (false, true) => outlet.push(p.id),
            _ => {}
        }
    }
    PoreNetwork::new(pores, throats, inlet, outlet)
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rtol: f64,
    /// Iteration cap as a multiple of the unknown count.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: 1e-12, max_iter_factor: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureSolution {
    pub p_in: f64,
    pub p_out: f64,
    /// Pa, indexed by `id − 1`.
    pub pore_pressure: Vec<f64>,
    /// m³/s, signed a → b, in throat order.
    pub throat_flux: Vec<f64>,
    /// Net flow leaving the inlet pores.
    pub inflow: f64,
    /// Net flow entering the outlet pores.
    pub outflow: f64,
    /// `Q`, the mean of inflow and outflow.
    pub total_flux: f64,
    /// Relative residual of the linear solve.
    pub residual: f64,
    pub iterations: usize,
    /// Largest |Σ signed flux| over interior pores divided by max |throat flux|.
    pub mass_imbalance: f64,
    /// Pores with no path to any boundary pore; pinned to `p_out`, zero flux.
    pub isolated: Vec<u32>,
}

pub fn solve_pressure(net: &PoreNetwork, p_in: f64, p_out: f64) -> Result<PressureSolution, PnmError> {
    solve_pressure_with(net, p_in, p_out, SolverOptions::default())
}

/// Solves `Σ_j g_ij (P_i − P_j) = 0` at interior pores with inlet and
/// outlet pores held at `p_in` and `p_out`.
pub fn solve_pressure_with(
    net: &PoreNetwork,
    p_in: f64,
    p_out: f64,
    opts: SolverOptions,
) -> Result<PressureSolution, PnmError> {
    if p_in == p_out || !p_in.is_finite() || !p_out.is_finite() {
        return Err(PnmError::InvalidArgument("P_in and P_out must differ".into()));
    }
    if net.inlet.is_empty() || net.outlet.is_empty() {
        return Err(PnmError::DisconnectedNetwork("network has no inlet or no outlet pores".into()));
    }
    if !net.has_spanning_path() {
        return Err(PnmError::NoSpanningPath);
    }
    let n = net.pores.len();
    let nb = net.neighbours();
    let mut fixed: Vec<Option<f64>> = vec![None; n + 1];
    for &i in &net.inlet {
        fixed[i as usize] = Some(p_in);
    }
    for &o in &net.outlet {
        fixed[o as usize] = Some(p_out);
    }
    // interior pores reachable from a boundary pore
    let mut reached = vec![false; n + 1];
    let mut queue: VecDeque<u32> = VecDeque::new();
    for id in 1..=n as u32 {
        if fixed[id as usize].is_some() {
            reached[id as usize] = true;
            queue.push_back(id);
        }
    }
    while let Some(p) = queue.pop_front() {
        for &(_, q) in &nb[p as usize] {
            if !reached[q as usize] {
                reached[q as usize] = true;
                queue.push_back(q);
            }
        }
    }
    let isolated: Vec<u32> = (1..=n as u32).filter(|&i| !reached[i as usize]).collect();
    let mut unknown = vec![usize::MAX; n + 1];
    let mut order = Vec::new();
    for id in 1..=n {
        if fixed[id].is_none() && reached[id] {
            unknown[id] = order.len();
            order.push(id);
        }
    }
    let m = order.len();
    let mut trip = Vec::with_capacity(4 * net.throats.len());
    let mut rhs = vec![0.0; m];
    for t in &net.throats {
        for (p, q) in [(t.a as usize, t.b as usize), (t.b as usize, t.a as usize)] {
            let row = unknown[p];
            if row == usize::MAX {
                continue;
            }
            trip.push((row, row, t.g));
            match fixed[q] {
                Some(pq) => rhs[row] += t.g * pq,
                None => trip.push((row, unknown[q], -t.g)),
            }
        }
    }
    let mut pressure = vec![p_out; n];
    for id in 1..=n {
        if let Some(v) = fixed[id] {
            pressure[id - 1] = v;
        }
    }
    let mut stats = SolveStats { iterations: 0, relative_residual: 0.0 };
    if m > 0 {
        let a = CsrMatrix::from_triplets(m, trip);
        let mut x = vec![0.5 * (p_in + p_out); m];
        stats = bicg(&a, &rhs, &mut x, opts.rtol, (opts.max_iter_factor * m).max(10))?;
        for (k, &id) in order.iter().enumerate() {
            pressure[id - 1] = x[k];
        }
    }
    let flux: Vec<f64> = net
        .throats
        .iter()
        .map(|t| t.g * (pressure[t.a as usize - 1] - pressure[t.b as usize - 1]))
        .collect();
    let is_in = |id: u32| fixed[id as usize] == Some(p_in) && net.inlet.contains(&id);
    let is_out = |id: u32| net.outlet.contains(&id);
    let (mut inflow, mut outflow) = (0.0, 0.0);
    for (t, &q) in net.throats.iter().zip(&flux) {
        if is_in(t.a) && !is_in(t.b) {
            inflow += q;
        }
        if is_in(t.b) && !is_in(t.a) {
            inflow -= q;
        }
        if is_out(t.b) && !is_out(t.a) {
            outflow += q;
        }
        if is_out(t.a) && !is_out(t.b) {
            outflow -= q;
        }
    }
    let max_flux = flux.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let mut balance = vec![0.0; n + 1];
    for (t, &q) in net.throats.iter().zip(&flux) {
        balance[t.a as usize] -= q;
        balance[t.b as usize] += q;
    }
    let worst = order.iter().map(|&id| balance[id].abs()).fold(0.0, f64::max);
    Ok(PressureSolution {
        p_in,
        p_out,
        pore_pressure: pressure,
        throat_flux: flux,
        inflow,
        outflow,
        total_flux: 0.5 * (inflow + outflow),
        residual: stats.relative_residual,
        iterations: stats.iterations,
        mass_imbalance: if max_flux > 0.0 { worst / max_flux } else { 0.0 },
        isolated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Permeability {
    pub k_m2: f64,
    pub k_darcy: f64,
}

/// Darcy permeability `k = Q µ L / (A ΔP)`.
pub fn permeability(
    sol: &PressureSolution,
    sample: SampleGeometry,
    props: &FluidProps,
    delta_p: f64,
) -> Result<Permeability, PnmError> {
    if !(delta_p > 0.0) {
        return Err(PnmError::InvalidArgument(format!("ΔP must be positive, got {delta_p}")));
    }
    let k = sol.total_flux * props.dynamic_viscosity * sample.length_m / (sample.area_m2 * delta_p);
    Ok(Permeability { k_m2: k, k_darcy: m2_to_darcy(k) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TortuosityDistribution {
    /// Completed particles, in particle-index order.
    pub tortuosity: Vec<f64>,
    pub summary: Summary,
    pub histogram: Histogram,
    pub trapped: usize,
    /// Particles that crossed each throat.
    pub throat_passages: Vec<usize>,
    pub n_particles: usize,
    pub seed: u64,
}

struct Walk {
    tortuosity: Option<f64>,
    throats: Vec<usize>,
}

fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Releases `n_particles` at the inlet (probability ∝ inlet flux) and moves
/// each through outgoing throats with probability ∝ throat flux until it
/// reaches an outlet pore. Tortuosity is the centroid path length over the
/// straight start-to-end distance. Each particle draws from its own ChaCha
/// stream `(seed, index)`, so results do not depend on scheduling.
pub fn particle_tortuosity(
    net: &PoreNetwork,
    sol: &PressureSolution,
    n_particles: usize,
    seed: u64,
) -> Result<TortuosityDistribution, PnmError> {
    if n_particles == 0 {
        return Err(PnmError::InvalidArgument("n_particles must be ≥ 1".into()));
    }
    let n = net.pores.len();
    let mut out_edges: Vec<Vec<(usize, u32, f64)>> = vec![Vec::new(); n + 1];
    for (k, (t, &q)) in net.throats.iter().zip(&sol.throat_flux).enumerate() {
        if q > 0.0 {
            out_edges[t.a as usize].push((k, t.b, q));
        } else if q < 0.0 {
            out_edges[t.b as usize].push((k, t.a, -q));
        }
    }
    let mut is_outlet = vec![false; n + 1];
    for &o in &net.outlet {
        is_outlet[o as usize] = true;
    }
    let starts: Vec<u32> = net.inlet.clone();
    let start_w: Vec<f64> = starts.iter().map(|&i| out_edges[i as usize].iter().map(|e| e.2).sum()).collect();
    if !(start_w.iter().sum::<f64>() > 0.0) {
        return Err(PnmError::NoFlow);
    }
    let walks: Vec<Walk> = (0..n_particles)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let start = starts[pick(&start_w, rng.random::<f64>())];
            let mut at = start;
            let mut length = 0.0;
            let mut used = Vec::new();
            for _ in 0..=n {
                if is_outlet[at as usize] {
                    let chord = dist(&net.pore(start).centre(), &net.pore(at).centre());
                    let t = if chord > 0.0 { Some((length / chord).max(1.0)) } else { None };
                    return Walk { tortuosity: t, throats: used };
                }
                let edges = &out_edges[at as usize];
                if edges.is_empty() {
                    break;
                }
                let w: Vec<f64> = edges.iter().map(|e| e.2).collect();
                let (k, next, _) = edges[pick(&w, rng.random::<f64>())];
                length += dist(&net.pore(at).centre(), &net.pore(next).centre());
                used.push(k);
                at = next;
            }
            Walk { tortuosity: None, throats: used }
        })
        .collect();
    let mut passages = vec![0usize; net.throats.len()];
    let mut values = Vec::with_capacity(n_particles);
    let mut trapped = 0;
    for w in &walks {
        match w.tortuosity {
            Some(t) => {
                values.push(t);
                for &k in &w.throats {
                    passages[k] += 1;
                }
            }
            None => trapped += 1,
        }
    }
    let hi = values.iter().copied().fold(1.0, f64::max);
    Ok(TortuosityDistribution {
        summary: summarize(&values),
        histogram: Histogram::uniform(&values, 1.0, if hi > 1.0 { hi } else { 1.0 + 1e-9 }, 20),
        tortuosity: values,
        trapped,
        throat_passages: passages,
        n_particles,
        seed,
    })
}

/// `pore_id,x_um,y_um,z_um,pressure_pa`
pub fn pressures_csv(net: &PoreNetwork, sol: &PressureSolution) -> String {
    let mut s = String::from("pore_id,x_um,y_um,z_um,pressure_pa\n");
    for (p, v) in net.pores.iter().zip(&sol.pore_pressure) {
        s.push_str(&format!("{},{},{},{},{}\n", p.id, p.x, p.y, p.z, v));
    }
    s
}

/// `pore_a,pore_b,conductance,flux_m3_per_s`
pub fn fluxes_csv(net: &PoreNetwork, sol: &PressureSolution) -> String {
    let mut s = String::from("pore_a,pore_b,conductance,flux_m3_per_s\n");
    for (t, q) in net.throats.iter().zip(&sol.throat_flux) {
        s.push_str(&format!("{},{},{},{}\n", t.a, t.b, t.g, q));
    }
    s
}

/// Synthetic networks for tests and benchmarks.
pub mod fixtures {
    use super::*;

    fn pore(id: u32, x: f64, y: f64, z: f64) -> NetworkPore {
        NetworkPore { id, x, y, z, r: 1.0, is_virtual: false }
    }

    fn throat(net: &[NetworkPore], a: u32, b: u32, g: f64) -> Throat {
        let l = dist(&net[a as usize - 1].centre(), &net[b as usize - 1].centre());
        Throat { a, b, r: 1.0, l, g }
    }

    /// Pores on the z axis at spacing 10 µm, unit conductances.
    pub fn chain(n: usize) -> PoreNetwork {
        let pores: Vec<NetworkPore> = (0..n).map(|i| pore(i as u32 + 1, 0.0, 0.0, 10.0 * i as f64)).collect();
        let throats = (1..n as u32).map(|i| throat(&pores, i, i + 1, 1.0)).collect();
        PoreNetwork::new(pores, throats, vec![1], vec![n as u32]).expect("valid chain")
    }

    /// Inlet 1 splits into two mirror-image branches (2 and 3) that rejoin at
    /// outlet 4; all conductances equal.
    pub fn symmetric_y() -> PoreNetwork {
        let pores = vec![
            pore(1, 0.0, 0.0, 0.0),
            pore(2, -10.0, 0.0, 10.0),
            pore(3, 10.0, 0.0, 10.0),
            pore(4, 0.0, 0.0, 20.0),
        ];
        let throats = vec![
            throat(&pores, 1, 2, 1.0),
            throat(&pores, 1, 3, 1.0),
            throat(&pores, 2, 4, 1.0),
            throat(&pores, 3, 4, 1.0),
        ];
        PoreNetwork::new(pores, throats, vec![1], vec![4]).expect("valid Y")
    }

    /// `n` pores scattered in a 100 µm cube, each joined to its 4 nearest
    /// neighbours with log-uniform conductances over three decades. Inlet =
    /// bottom 10 % in z, outlet = top 10 %. A z-sorted backbone guarantees a
    /// spanning path.
    pub fn random_network(n: usize, seed: u64) -> PoreNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0])
            .collect();
        pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
        let pores: Vec<NetworkPore> =
            pts.iter().enumerate().map(|(i, p)| pore(i as u32 + 1, p[0], p[1], p[2])).collect();
        let mut pairs = std::collections::BTreeSet::new();
        for i in 0..n {
            let mut d: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (dist(&pts[i], &pts[j]), j)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(_, j) in d.iter().take(4) {
                pairs.insert((i.min(j) + 1, i.max(j) + 1));
            }
            if i + 1 < n {
                pairs.insert((i + 1, i + 2));
            }
        }
        let throats = pairs
            .into_iter()
            .map(|(a, b)| {
                let g = 10f64.powf(-12.0 + 3.0 * rng.random::<f64>());
                throat(&pores, a as u32, b as u32, g)
            })
            .collect();
        let k = (n / 10).max(1);
        let inlet = (1..=k as u32).collect();
        let outlet = ((n - k + 1) as u32..=n as u32).collect();
        PoreNetwork::new(pores, throats, inlet, outlet).expect("valid random network")
    }
}
