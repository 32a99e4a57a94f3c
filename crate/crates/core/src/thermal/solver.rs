use serde::{Deserialize, Serialize};

use super::grid::{FaceCondition, Region, Side, ThermalGrid};
use crate::error::{Error, Result};

/// Relative residual `‖b − A·θ‖₂ / ‖b‖₂` at which the iterative solve stops.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalField {
    /// Cell-centre temperatures, °C, indexed `j * nr + i`.
    pub temperature: Vec<f64>,
    pub peak_temperature: f64,
    /// (r, z) of the hottest cell centre, metres.
    pub peak_location: (f64, f64),
    /// Volumetric sources plus imposed boundary heat flux, W.
    pub total_source_power: f64,
    /// Heat leaving through convective and fixed-temperature faces, W.
    pub boundary_flux_total: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl ThermalField {
    pub fn min_temperature(&self) -> f64 {
        self.temperature.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `|source − outflow| / source`, or the absolute imbalance when there is
    /// no source.
    pub fn energy_imbalance(&self) -> f64 {
        let d = (self.total_source_power - self.boundary_flux_total).abs();
        if self.total_source_power.abs() > 0.0 {
            d / self.total_source_power.abs()
        } else {
            d
        }
    }

    /// Temperatures on the faces of `side`, reconstructed from the boundary
    /// condition and the adjacent cell value.
    pub fn face_temperatures(&self, grid: &ThermalGrid, side: Side) -> Vec<f64> {
        let (nr, nz) = (grid.nr(), grid.nz());
        let cells: Vec<(usize, usize)> = match side {
            Side::RMin => (0..nz).map(|j| (0, j)).collect(),
            Side::RMax => (0..nz).map(|j| (nr - 1, j)).collect(),
            Side::ZMin => (0..nr).map(|i| (i, 0)).collect(),
            Side::ZMax => (0..nr).map(|i| (i, nz - 1)).collect(),
        };
        cells
            .into_iter()
            .map(|(i, j)| {
                let t = self.temperature[grid.index(i, j)];
                let (k, d) = face_distance(grid, i, j, side);
                match grid.boundary.side(side) {
                    FaceCondition::Adiabatic => t,
                    FaceCondition::FixedTemperature { temperature } => temperature,
                    FaceCondition::HeatFlux { flux } => t + flux * d / k,
                    FaceCondition::Convective { h, ambient } => {
                        // series resistance split: cell half-width then film
                        let g_cell = k / d;
                        (g_cell * t + h * ambient) / (g_cell + h)
                    }
                }
            })
            .collect()
    }
}

fn face_distance(grid: &ThermalGrid, i: usize, j: usize, side: Side) -> (f64, f64) {
    let p = grid.props_of(grid.region(i, j));
    match side {
        Side::RMin => (p.conductivity_r, grid.r_center(i) - grid.r_faces[i]),
        Side::RMax => (p.conductivity_r, grid.r_faces[i + 1] - grid.r_center(i)),
        Side::ZMin => (p.conductivity_z, grid.z_center(j) - grid.z_faces[j]),
        Side::ZMax => (p.conductivity_z, grid.z_faces[j + 1] - grid.z_center(j)),
    }
}

/// A boundary link from a cell to a prescribed temperature.
#[derive(Clone, Copy, Debug)]
struct BoundaryLink {
    cell: usize,
    conductance: f64,
    temperature: f64,
}

/// Five-point finite-volume operator in temperature-rise form `A·θ = b`,
/// `θ = T − reference`.
#[derive(Clone, Debug)]
pub(crate) struct Assembly {
    nr: usize,
    diag: Vec<f64>,
    /// Conductance between cell and its +r neighbour.
    east: Vec<f64>,
    /// Conductance between cell and its +z neighbour.
    north: Vec<f64>,
    /// Boundary-driven right-hand side (prescribed temperatures, imposed flux).
    boundary_rhs: Vec<f64>,
    links: Vec<BoundaryLink>,
    imposed_flux: f64,
    pub(crate) reference: f64,
    pub(crate) capacity: Vec<f64>,
}

impl Assembly {
    pub(crate) fn new(grid: &ThermalGrid) -> Result<Self> {
        grid.validate()?;
        let (nr, nz) = (grid.nr(), grid.nz());
        let n = grid.cells();
        let pi = std::f64::consts::PI;
        let mut diag = vec![0.0; n];
        let mut east = vec![0.0; n];
        let mut north = vec![0.0; n];
        let mut capacity = vec![0.0; n];

        for j in 0..nz {
            let dz = grid.z_faces[j + 1] - grid.z_faces[j];
            for i in 0..nr {
                let c = grid.index(i, j);
                let p = grid.props_of(grid.region(i, j));
                capacity[c] = p.heat_capacity * grid.volume(i, j);
                if i + 1 < nr {
                    let q = grid.props_of(grid.region(i + 1, j));
                    let rf = grid.r_faces[i + 1];
                    let area = 2.0 * pi * rf * dz;
                    // series half-cell resistances = harmonic-mean interface
                    let res = (rf - grid.r_center(i)) / (p.conductivity_r * area)
                        + (grid.r_center(i + 1) - rf) / (q.conductivity_r * area);
                    let g = 1.0 / res;
                    east[c] = g;
                    diag[c] += g;
                    diag[c + 1] += g;
                }
                if j + 1 < nz {
                    let q = grid.props_of(grid.region(i, j + 1));
                    let zf = grid.z_faces[j + 1];
                    let area = pi * (grid.r_faces[i + 1].powi(2) - grid.r_faces[i].powi(2));
                    let res = (zf - grid.z_center(j)) / (p.conductivity_z * area)
                        + (grid.z_center(j + 1) - zf) / (q.conductivity_z * area);
                    let g = 1.0 / res;
                    north[c] = g;
                    diag[c] += g;
                    diag[c + nr] += g;
                }
            }
        }

        let reference = [Side::RMax, Side::ZMin, Side::ZMax, Side::RMin]
            .into_iter()
            .find_map(|s| match grid.boundary.side(s) {
                FaceCondition::Convective { ambient, .. } => Some(ambient),
                FaceCondition::FixedTemperature { temperature } => Some(temperature),
                _ => None,
            });

        let mut links = Vec::new();
        let mut boundary_rhs = vec![0.0; n];
        let mut imposed_flux = 0.0;
        for side in [Side::RMin, Side::RMax, Side::ZMin, Side::ZMax] {
            let cond = grid.boundary.side(side);
            let face_cells: Vec<(usize, usize)> = match side {
                Side::RMin => (0..nz).map(|j| (0, j)).collect(),
                Side::RMax => (0..nz).map(|j| (nr - 1, j)).collect(),
                Side::ZMin => (0..nr).map(|i| (i, 0)).collect(),
                Side::ZMax => (0..nr).map(|i| (i, nz - 1)).collect(),
            };
            for (i, j) in face_cells {
                let area = match side {
                    Side::RMin => 2.0 * pi * grid.r_faces[i] * (grid.z_faces[j + 1] - grid.z_faces[j]),
                    Side::RMax => 2.0 * pi * grid.r_faces[i + 1] * (grid.z_faces[j + 1] - grid.z_faces[j]),
                    Side::ZMin | Side::ZMax => {
                        pi * (grid.r_faces[i + 1].powi(2) - grid.r_faces[i].powi(2))
                    }
                };
                if area == 0.0 {
                    continue;
                }
                let (k, d) = face_distance(grid, i, j, side);
                let c = grid.index(i, j);
                match cond {
                    FaceCondition::Adiabatic => {}
                    FaceCondition::HeatFlux { flux } => {
                        boundary_rhs[c] += flux * area;
                        imposed_flux += flux * area;
                    }
                    FaceCondition::FixedTemperature { temperature } => {
                        links.push(BoundaryLink {
                            cell: c,
                            conductance: k * area / d,
                            temperature,
                        });
                    }
                    FaceCondition::Convective { h, ambient } => {
                        if h > 0.0 {
                            links.push(BoundaryLink {
                                cell: c,
                                conductance: 1.0 / (d / (k * area) + 1.0 / (h * area)),
                                temperature: ambient,
                            });
                        }
                    }
                }
            }
        }
        let reference = match (reference, links.is_empty()) {
            (Some(r), false) => r,
            _ => {
                return Err(Error::InvalidInput(
                    "ill-posed thermal problem: no convective (h > 0) or fixed-temperature boundary".into(),
                ))
            }
        };
        for l in &links {
            diag[l.cell] += l.conductance;
            boundary_rhs[l.cell] += l.conductance * (l.temperature - reference);
        }

        Ok(Assembly {
            nr,
            diag,
            east,
            north,
            boundary_rhs,
            links,
            imposed_flux,
            reference,
            capacity,
        })
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    /// `y = (A + diag_shift)·x`.
    fn apply(&self, x: &[f64], shift: Option<&[f64]>, y: &mut [f64]) {
        let n = self.len();
        let nr = self.nr;
        for c in 0..n {
            let mut v = self.diag[c] * x[c];
            if let Some(s) = shift {
                v += s[c] * x[c];
            }
            if c % nr + 1 < nr {
                v -= self.east[c] * x[c + 1];
            }
            if c % nr > 0 {
                v -= self.east[c - 1] * x[c - 1];
            }
            if c + nr < n {
                v -= self.north[c] * x[c + nr];
            }
            if c >= nr {
                v -= self.north[c - nr] * x[c - nr];
            }
            y[c] = v;
        }
    }

    /// Per-cell source vector for `power` watts spread uniformly by volume
    /// over `region`.
    pub(crate) fn source(&self, grid: &ThermalGrid, power: f64, region: Region) -> Result<Vec<f64>> {
        let volume = grid.region_volume(region);
        if power != 0.0 && !(volume > 0.0) {
            return Err(Error::InvalidInput(format!("source region `{region}` has no cells")));
        }
        let mut s = vec![0.0; self.len()];
        if power == 0.0 {
            return Ok(s);
        }
        let density = power / volume;
        for j in 0..grid.nz() {
            for i in 0..grid.nr() {
                if grid.region(i, j) == region {
                    s[grid.index(i, j)] = density * grid.volume(i, j);
                }
            }
        }
        Ok(s)
    }

    /// Jacobi-preconditioned conjugate gradients for `(A + shift)·x = b`,
    /// warm-started from `x`.
    fn pcg(&self, b: &[f64], shift: Option<&[f64]>, x: &mut [f64]) -> Result<(f64, usize)> {
        let n = self.len();
        let bnorm = norm(b);
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok((0.0, 0));
        }
        let inv_diag: Vec<f64> = (0..n)
            .map(|c| 1.0 / (self.diag[c] + shift.map_or(0.0, |s| s[c])))
            .collect();
        let mut ax = vec![0.0; n];
        self.apply(x, shift, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let cap = 20 * n + 1000;
        let mut it = 0;
        loop {
            let rel = norm(&r) / bnorm;
            if rel <= RESIDUAL_TOLERANCE {
                break;
            }
            if it >= cap {
                return Err(Error::NonConvergence {
                    iterations: it,
                    residual: rel,
                });
            }
            self.apply(&p, shift, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for c in 0..n {
                x[c] += alpha * p[c];
                r[c] -= alpha * ap[c];
            }
            for c in 0..n {
                z[c] = r[c] * inv_diag[c];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for c in 0..n {
                p[c] = z[c] + beta * p[c];
            }
            it += 1;
        }
        // true residual, not the recursively updated one
        self.apply(x, shift, &mut ax);
        let true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        Ok((norm(&true_r) / bnorm, it))
    }

    fn field(&self, grid: &ThermalGrid, theta: &[f64], source_power: f64, residual: f64, iterations: usize) -> ThermalField {
        let temperature: Vec<f64> = theta.iter().map(|t| t + self.reference).collect();
        let (mut peak, mut at) = (f64::NEG_INFINITY, 0);
        for (c, &t) in temperature.iter().enumerate() {
            if t > peak {
                peak = t;
                at = c;
            }
        }
        let (i, j) = (at % grid.nr(), at / grid.nr());
        let outflow: f64 = self
            .links
            .iter()
            .map(|l| l.conductance * (temperature[l.cell] - l.temperature))
            .sum();
        ThermalField {
            temperature,
            peak_temperature: peak,
            peak_location: (grid.r_center(i), grid.z_center(j)),
            total_source_power: source_power + self.imposed_flux,
            boundary_flux_total: outflow,
            residual_norm: residual,
            iterations,
        }
    }

    pub(crate) fn steady(&self, grid: &ThermalGrid, source: &[f64]) -> Result<ThermalField> {
        let b: Vec<f64> = source.iter().zip(&self.boundary_rhs).map(|(s, r)| s + r).collect();
        let mut theta = vec![0.0; self.len()];
        let (res, it) = self.pcg(&b, None, &mut theta)?;
        Ok(self.field(grid, &theta, source.iter().sum(), res, it))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Steady conduction `∇·(k∇T) + Q = 0` with `source_power` watts spread
/// uniformly over `source_region`.
pub fn steady_state_solve(grid: &ThermalGrid, source_power: f64, source_region: Region) -> Result<ThermalField> {
    if !(source_power >= 0.0 && source_power.is_finite()) {
        return Err(Error::InvalidInput(format!("source power must be >= 0, got {source_power}")));
    }
    let asm = Assembly::new(grid)?;
    let source = asm.source(grid, source_power, source_region)?;
    asm.steady(grid, &source)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeScheme {
    /// Backward Euler; unconditionally stable.
    Implicit,
    /// Forward Euler; requires `dt ≤ min(C_i / A_ii)`.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransientFrame {
    pub time: f64,
    pub field: ThermalField,
}

/// Largest stable forward-Euler step for `grid`.
pub fn explicit_stability_limit(grid: &ThermalGrid) -> Result<f64> {
    let asm = Assembly::new(grid)?;
    Ok(asm
        .capacity
        .iter()
        .zip(&asm.diag)
        .map(|(c, d)| c / d)
        .fold(f64::INFINITY, f64::min))
}

/// Time-marches `ρc_p ∂T/∂t = ∇·(k∇T) + Q` from the reference (ambient)
/// temperature. Returns the initial state and one frame per step.
pub fn transient_solve(
    grid: &ThermalGrid,
    source_power: f64,
    source_region: Region,
    duration: f64,
    dt: f64,
    scheme: TimeScheme,
) -> Result<Vec<TransientFrame>> {
    if !(dt > 0.0 && duration >= 0.0) {
        return Err(Error::InvalidInput("need dt > 0 and duration >= 0".into()));
    }
    if !(source_power >= 0.0) {
        return Err(Error::InvalidInput(format!("source power must be >= 0, got {source_power}")));
    }
    let asm = Assembly::new(grid)?;
    if scheme == TimeScheme::Explicit {
        let limit = asm
            .capacity
            .iter()
            .zip(&asm.diag)
            .map(|(c, d)| c / d)
            .fold(f64::INFINITY, f64::min);
        if dt > limit {
            return Err(Error::InvalidInput(format!(
                "explicit step dt = {dt:e} s exceeds stability limit {limit:e} s"
            )));
        }
    }
    let source = asm.source(grid, source_power, source_region)?;
    let b: Vec<f64> = source.iter().zip(&asm.boundary_rhs).map(|(s, r)| s + r).collect();
    let n = asm.len();
    let total_source: f64 = source.iter().sum();
    let steps = (duration / dt).ceil() as usize;

    let mut theta = vec![0.0; n];
    let mut frames = vec![TransientFrame {
        time: 0.0,
        field: asm.field(grid, &theta, total_source, 0.0, 0),
    }];
    let shift: Vec<f64> = asm.capacity.iter().map(|c| c / dt).collect();
    let mut work = vec![0.0; n];
    for step in 1..=steps {
        let (res, it) = match scheme {
            TimeScheme::Implicit => {
                let rhs: Vec<f64> = (0..n).map(|c| b[c] + shift[c] * theta[c]).collect();
                asm.pcg(&rhs, Some(&shift), &mut theta)?
            }
            TimeScheme::Explicit => {
                asm.apply(&theta, None, &mut work);
                for c in 0..n {
                    theta[c] += (b[c] - work[c]) / shift[c];
                }
                (0.0, 1)
            }
        };
        frames.push(TransientFrame {
            time: step as f64 * dt,
            field: asm.field(grid, &theta, total_source, res, it),
        });
    }
    Ok(frames)
}
