use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{copper_fill_factor, MotorSpec, ThermalProps};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Winding,
    Core,
    Magnet,
    AirGap,
    Housing,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Winding,
        Region::Core,
        Region::Magnet,
        Region::AirGap,
        Region::Housing,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Winding => "winding",
            Region::Core => "core",
            Region::Magnet => "magnet",
            Region::AirGap => "air-gap",
            Region::Housing => "housing",
        })
    }
}

/// Possibly anisotropic conductivity and volumetric heat capacity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionProps {
    pub conductivity_r: f64,
    pub conductivity_z: f64,
    /// ρ·c_p, J/(m³·K).
    pub heat_capacity: f64,
}

impl RegionProps {
    pub fn isotropic(p: ThermalProps) -> Self {
        RegionProps {
            conductivity_r: p.conductivity,
            conductivity_z: p.conductivity,
            heat_capacity: p.density * p.specific_heat,
        }
    }

    /// Laminated copper/dielectric stack: parallel mixing in-plane (radial),
    /// series mixing across layers (axial).
    pub fn laminate(copper: ThermalProps, dielectric: ThermalProps, fill: f64) -> Self {
        let f = fill.clamp(0.0, 1.0);
        RegionProps {
            conductivity_r: f * copper.conductivity + (1.0 - f) * dielectric.conductivity,
            conductivity_z: 1.0 / (f / copper.conductivity + (1.0 - f) / dielectric.conductivity),
            heat_capacity: f * copper.density * copper.specific_heat
                + (1.0 - f) * dielectric.density * dielectric.specific_heat,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FaceCondition {
    Adiabatic,
    Convective { h: f64, ambient: f64 },
    FixedTemperature { temperature: f64 },
    /// Imposed heat flux into the domain, W/m².
    HeatFlux { flux: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    RMin,
    RMax,
    ZMin,
    ZMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    /// Face at the smallest radius; ignored (symmetry axis) when it is r = 0.
    pub r_min: FaceCondition,
    pub r_max: FaceCondition,
    pub z_min: FaceCondition,
    pub z_max: FaceCondition,
}

impl BoundarySpec {
    /// Convection to one ambient on every outer face.
    pub fn convective(h: f64, ambient: f64) -> Self {
        let c = FaceCondition::Convective { h, ambient };
        BoundarySpec {
            r_min: FaceCondition::Adiabatic,
            r_max: c,
            z_min: c,
            z_max: c,
        }
    }

    pub fn side(&self, side: Side) -> FaceCondition {
        match side {
            Side::RMin => self.r_min,
            Side::RMax => self.r_max,
            Side::ZMin => self.z_min,
            Side::ZMax => self.z_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nr: usize,
    pub nz: usize,
}

impl Resolution {
    pub const fn new(nr: usize, nz: usize) -> Self {
        Resolution { nr, nz }
    }
}

/// Axisymmetric (r, z) cell decomposition. Cell `(i, j)` spans
/// `r_faces[i]..r_faces[i+1]` and `z_faces[j]..z_faces[j+1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalGrid {
    pub r_faces: Vec<f64>,
    pub z_faces: Vec<f64>,
    pub region_map: Vec<Region>,
    pub props: [RegionProps; 5],
    pub boundary: BoundarySpec,
}

impl ThermalGrid {
    pub fn nr(&self) -> usize {
        self.r_faces.len() - 1
    }

    pub fn nz(&self) -> usize {
        self.z_faces.len() - 1
    }

    pub fn cells(&self) -> usize {
        self.nr() * self.nz()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nr() + i
    }

    pub fn region(&self, i: usize, j: usize) -> Region {
        self.region_map[self.index(i, j)]
    }

    pub fn props_of(&self, region: Region) -> RegionProps {
        self.props[region.index()]
    }

    pub fn r_center(&self, i: usize) -> f64 {
        0.5 * (self.r_faces[i] + self.r_faces[i + 1])
    }

    pub fn z_center(&self, j: usize) -> f64 {
        0.5 * (self.z_faces[j] + self.z_faces[j + 1])
    }

    /// Annular cell volume π(r_e² − r_w²)·dz.
    pub fn volume(&self, i: usize, j: usize) -> f64 {
        std::f64::consts::PI
            * (self.r_faces[i + 1].powi(2) - self.r_faces[i].powi(2))
            * (self.z_faces[j + 1] - self.z_faces[j])
    }

    pub fn region_volume(&self, region: Region) -> f64 {
        let mut v = 0.0;
        for j in 0..self.nz() {
            for i in 0..self.nr() {
                if self.region(i, j) == region {
                    v += self.volume(i, j);
                }
            }
        }
        v
    }

    pub fn regions_present(&self) -> Vec<Region> {
        Region::ALL
            .into_iter()
            .filter(|r| self.region_map.contains(r))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr() < 3 || self.nz() < 3 {
            return Err(Error::InvalidInput("thermal grid needs at least 3x3 cells".into()));
        }
        if self.region_map.len() != self.cells() {
            return Err(Error::invariant("thermal grid: region map must cover every cell"));
        }
        let increasing = |f: &[f64]| f.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.r_faces) || !increasing(&self.z_faces) || self.r_faces[0] < 0.0 {
            return Err(Error::invariant("thermal grid: faces must be strictly increasing, r >= 0"));
        }
        for p in &self.props {
            if !(p.conductivity_r > 0.0 && p.conductivity_z > 0.0 && p.heat_capacity > 0.0) {
                return Err(Error::invariant("thermal grid: conductivities and heat capacities > 0"));
            }
        }
        for side in [Side::RMin, Side::RMax, Side::ZMin, Side::ZMax] {
            match self.boundary.side(side) {
                FaceCondition::Convective { h, ambient } if !(h >= 0.0 && ambient.is_finite()) => {
                    return Err(Error::invariant("thermal grid: convection h >= 0"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Uniform single-material grid, mostly for verification problems.
    pub fn uniform(
        radius: (f64, f64),
        height: f64,
        resolution: Resolution,
        material: RegionProps,
        region: Region,
        boundary: BoundarySpec,
    ) -> Result<Self> {
        let r_faces = uniform_faces(radius.0, radius.1, resolution.nr);
        let z_faces = uniform_faces(0.0, height, resolution.nz);
        let mut props = [material; 5];
        props[region.index()] = material;
        let grid = ThermalGrid {
            region_map: vec![region; resolution.nr * resolution.nz],
            r_faces,
            z_faces,
            props,
            boundary,
        };
        grid.validate()?;
        Ok(grid)
    }
}

fn uniform_faces(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

/// Splits `n` cells among segments: one each, the rest by largest remainder
/// in proportion to segment length.
fn allocate(lengths: &[f64], n: usize) -> Option<Vec<usize>> {
    let k = lengths.len();
    if n < k {
        return None;
    }
    let total: f64 = lengths.iter().sum();
    let spare = (n - k) as f64;
    let ideal: Vec<f64> = lengths.iter().map(|l| spare * l / total).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| 1 + x.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &s in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[s] += 1;
        left -= 1;
    }
    Some(counts)
}

fn segmented_faces(breaks: &[f64], counts: &[usize]) -> Vec<f64> {
    let mut faces = vec![breaks[0]];
    for (s, &n) in counts.iter().enumerate() {
        let (a, b) = (breaks[s], breaks[s + 1]);
        for k in 1..=n {
            faces.push(if k == n { b } else { a + (b - a) * k as f64 / n as f64 });
        }
    }
    faces
}

/// What occupies one axial layer of the motor at radii inside the active band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layer {
    Cap,
    Core,
    Winding,
    Gap,
    Rotor,
}

fn axial_layers(spec: &MotorSpec) -> Vec<(Layer, f64)> {
    let g = &spec.geometry;
    let stator = [
        (Layer::Core, spec.yoke_thickness()),
        (Layer::Winding, spec.winding.stack_height()),
        (Layer::Gap, g.air_gap_axial),
    ];
    let cap_total = (g.overall_axial_length - g.stack_length()).max(0.0);
    let mut layers = Vec::new();
    if g.stator_count == 2 {
        layers.push((Layer::Cap, cap_total / 2.0));
        layers.extend(stator);
        layers.push((Layer::Rotor, g.rotor_axial_length));
        layers.extend(stator.iter().rev().copied());
        layers.push((Layer::Cap, cap_total / 2.0));
    } else {
        layers.push((Layer::Cap, cap_total / 2.0));
        layers.extend(stator);
        layers.push((Layer::Rotor, g.rotor_axial_length));
        layers.push((Layer::Cap, cap_total / 2.0));
    }
    layers.retain(|&(_, t)| t > 0.0);
    layers
}

/// Discretizes the motor cross-section: a housing hub inside the inner
/// diameter, the active band between inner and outer diameter, and the
/// housing wall outside it; end caps fill the remaining axial length.
pub fn build_grid(spec: &MotorSpec, resolution: Resolution, boundary: BoundarySpec) -> Result<ThermalGrid> {
    if resolution.nr < 3 || resolution.nz < 3 {
        return Err(Error::InvalidInput(format!(
            "thermal resolution must be at least 3x3, got {}x{}",
            resolution.nr, resolution.nz
        )));
    }
    let g = &spec.geometry;
    let (ri, ro) = (g.inner_radius(), g.outer_radius());
    let mut r_breaks = vec![0.0, ri, ro];
    if g.housing_wall > 0.0 {
        r_breaks.push(ro + g.housing_wall);
    }
    let r_lengths: Vec<f64> = r_breaks.windows(2).map(|w| w[1] - w[0]).collect();

    let layers = axial_layers(spec);
    let mut z_breaks = vec![0.0];
    for &(_, t) in &layers {
        z_breaks.push(z_breaks.last().unwrap() + t);
    }
    let z_lengths: Vec<f64> = layers.iter().map(|l| l.1).collect();

    let too_thin = |axis: &str, segments: usize, n: usize| {
        Error::InvalidInput(format!(
            "geometry too thin for resolution: {axis} has {segments} material segments but only {n} cells"
        ))
    };
    let r_counts = allocate(&r_lengths, resolution.nr).ok_or_else(|| too_thin("r", r_lengths.len(), resolution.nr))?;
    let z_counts = allocate(&z_lengths, resolution.nz).ok_or_else(|| too_thin("z", z_lengths.len(), resolution.nz))?;
    let r_faces = segmented_faces(&r_breaks, &r_counts);
    let z_faces = segmented_faces(&z_breaks, &z_counts);

    // radial segment of each cell: 0 hub, 1 active band, 2 housing wall
    let r_segment: Vec<usize> = r_counts
        .iter()
        .enumerate()
        .flat_map(|(s, &n)| std::iter::repeat_n(s, n))
        .collect();
    let z_layer: Vec<Layer> = z_counts
        .iter()
        .zip(&layers)
        .flat_map(|(&n, &(layer, _))| std::iter::repeat_n(layer, n))
        .collect();

    let mut region_map = Vec::with_capacity(resolution.nr * resolution.nz);
    for &layer in &z_layer {
        for &seg in &r_segment {
            region_map.push(match (seg, layer) {
                (1, Layer::Core) => Region::Core,
                (1, Layer::Winding) => Region::Winding,
                (1, Layer::Gap) => Region::AirGap,
                (1, Layer::Rotor) => Region::Magnet,
                _ => Region::Housing,
            });
        }
    }

    let m = &spec.materials;
    let mut props = [RegionProps::isotropic(m.housing); 5];
    props[Region::Winding.index()] = RegionProps::laminate(m.copper, m.dielectric, copper_fill_factor(spec));
    props[Region::Core.index()] = RegionProps::isotropic(m.core);
    props[Region::Magnet.index()] = RegionProps::isotropic(m.magnet);
    props[Region::AirGap.index()] = RegionProps::isotropic(m.air);
    props[Region::Housing.index()] = RegionProps::isotropic(m.housing);

    let grid = ThermalGrid {
        r_faces,
        z_faces,
        region_map,
        props,
        boundary,
    };
    grid.validate()?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_gives_every_segment_a_cell() {
        let counts = allocate(&[0.75, 3.12, 2.88, 0.25, 1.5, 0.25, 2.88, 3.12, 0.75], 16).unwrap();
        assert_eq!(counts.iter().sum::<usize>(), 16);
        assert!(counts.iter().all(|&c| c >= 1));
        assert!(allocate(&[1.0, 1.0, 1.0], 2).is_none());
    }

    #[test]
    fn laminate_conductivity_grows_with_fill() {
        let cu = ThermalProps {
            density: 8960.0,
            specific_heat: 385.0,
            conductivity: 390.0,
        };
        let diel = ThermalProps {
            density: 1900.0,
            specific_heat: 1100.0,
            conductivity: 0.4,
        };
        let a = RegionProps::laminate(cu, diel, 0.3);
        let b = RegionProps::laminate(cu, diel, 0.5);
        assert!(b.conductivity_r > a.conductivity_r);
        assert!(b.conductivity_z > a.conductivity_z);
        // rule of mixtures by hand at fill 0.5
        assert!((b.conductivity_r - (0.5 * 390.0 + 0.5 * 0.4)).abs() < 1e-12);
        assert!((b.conductivity_z - 1.0 / (0.5 / 390.0 + 0.5 / 0.4)).abs() < 1e-12);
    }

    #[test]
    fn faces_hit_segment_breaks_exactly() {
        let f = segmented_faces(&[0.0, 1.0, 3.0], &[2, 4]);
        assert_eq!(f, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
    }
}
