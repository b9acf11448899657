//! Discretizations of the compact sets that measures live on and are swept
//! onto: spheres, solid balls, annuli, boxes, and unions of these.
//!
//! Grids are deterministic. Solid shapes use a Cartesian lattice clipped to
//! the shape (cells keep their full lattice measure when the center is
//! inside; the boundary error vanishes under refinement). Spheres in ℝ³ use
//! equal-area latitude bands with midpoint quadrature weights; circles in ℝ²
//! use equally spaced points.

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for "cell center lies on/in the descriptor's set".
pub const DESCRIPTOR_TOL: f64 = 1e-12;

/// A location in ℝⁿ, n ∈ {2, 3}.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || coords.len() > 3 {
            return Err(Error::Geometry(format!(
                "points must have 2 or 3 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("point coordinates must be finite".into()));
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist(&self.coords, &other.coords)
    }

    /// Exact bit pattern of the coordinates, for exact-equality lookups.
    pub(crate) fn key(&self) -> PointKey {
        coords_key(&self.coords)
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point { coords: c.to_vec() }
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point { coords: c.to_vec() }
    }
}

pub(crate) type PointKey = [u64; 3];

pub(crate) fn coords_key(c: &[f64]) -> PointKey {
    let mut k = [0u64; 3];
    for (i, v) in c.iter().enumerate() {
        k[i] = v.to_bits();
    }
    k
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// The atom of discretization: a cell center plus the measure (volume,
/// surface area, or arc length) of the mesh cell it represents.
#[derive(Clone, Debug)]
pub struct Cell {
    pub center: Point,
    pub weight_measure: f64,
    /// Intrinsic dimension of the cell: n for solid grids, n−1 for
    /// sphere/circle grids. Drives the equivalent-ball self-energy rule.
    pub intrinsic_dim: usize,
}

/// Shape descriptor; serializable for experiment configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    Sphere { center: Vec<f64>, radius: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Union { parts: Vec<Shape> },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Sphere { center, .. } | Shape::Ball { center, .. } | Shape::Annulus { center, .. } => center.len(),
            Shape::Box { lo, .. } => lo.len(),
            Shape::Union { parts } => parts.first().map_or(0, Shape::dim),
        }
    }

    /// Exact measure (surface area / volume) of the described set, where a
    /// closed form exists. Unions assume disjoint parts.
    pub fn exact_measure(&self) -> f64 {
        match self {
            Shape::Sphere { center, radius } => match center.len() {
                2 => 2.0 * PI * radius,
                _ => 4.0 * PI * radius * radius,
            },
            Shape::Ball { center, radius } => ball_volume(center.len(), *radius),
            Shape::Annulus { center, r_in, r_out } => {
                ball_volume(center.len(), *r_out) - ball_volume(center.len(), *r_in)
            }
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            Shape::Union { parts } => parts.iter().map(Shape::exact_measure).sum(),
        }
    }

    /// Distance from `p` to the set described by the shape (0 when inside;
    /// for spheres, deviation from the defining equation).
    pub fn residual(&self, p: &[f64]) -> f64 {
        match self {
            Shape::Sphere { center, radius } => (dist(p, center) - radius).abs(),
            Shape::Ball { center, radius } => (dist(p, center) - radius).max(0.0),
            Shape::Annulus { center, r_in, r_out } => {
                let r = dist(p, center);
                (r_in - r).max(r - r_out).max(0.0)
            }
            Shape::Box { lo, hi } => {
                let mut m: f64 = 0.0;
                for i in 0..lo.len() {
                    m = m.max(lo[i] - p[i]).max(p[i] - hi[i]);
                }
                m.max(0.0)
            }
            Shape::Union { parts } => parts
                .iter()
                .map(|s| s.residual(p))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

pub(crate) fn ball_volume(n: usize, r: f64) -> f64 {
    match n {
        1 => 2.0 * r,
        2 => PI * r * r,
        _ => 4.0 / 3.0 * PI * r * r * r,
    }
}

/// An ordered collection of cells approximating a compact set.
#[derive(Clone, Debug)]
pub struct DiscretizedSet {
    cells: Vec<Cell>,
    dim: usize,
    descriptor: Shape,
    resolution: u32,
}

impl DiscretizedSet {
    /// Quasi-uniform grid on the sphere |x − center| = radius.
    ///
    /// In ℝ³ latitude bands of equal height carry `≈ N·(band area)/(4πR²)`
    /// cells each with `N ≈ resolution²/4`, so cell counts stay at desk
    /// scale through resolution 128. Weights are flat-patch midpoint
    /// quadrature weights `R²·Δθ·Δφ·sin θ_c`, which sum to the exact area up
    /// to O(Δθ²). In ℝ² the grid is `resolution` equally spaced points with
    /// exact arc weights.
    pub fn sphere(center: &Point, radius: f64, resolution: u32) -> Result<Self> {
        check_radius(radius)?;
        check_resolution(resolution)?;
        let n = center.dim();
        let descriptor = Shape::Sphere {
            center: center.coords().to_vec(),
            radius,
        };
        let cells = match n {
            2 => {
                let m = resolution as usize;
                let w = 2.0 * PI * radius / m as f64;
                (0..m)
                    .map(|j| {
                        let phi = 2.0 * PI * j as f64 / m as f64;
                        Cell {
                            center: Point {
                                coords: vec![
                                    center.coords()[0] + radius * phi.cos(),
                                    center.coords()[1] + radius * phi.sin(),
                                ],
                            },
                            weight_measure: w,
                            intrinsic_dim: 1,
                        }
                    })
                    .collect()
            }
            3 => {
                let target = ((resolution as usize * resolution as usize) / 4).max(2);
                let bands = ((target as f64 * PI).sqrt() / 2.0).round().max(1.0) as usize;
                let mut cells = Vec::with_capacity(target + bands);
                for b in 0..bands {
                    let t0 = PI * b as f64 / bands as f64;
                    let t1 = PI * (b + 1) as f64 / bands as f64;
                    let tc = 0.5 * (t0 + t1);
                    let frac = 0.5 * (t0.cos() - t1.cos());
                    let m_b = ((target as f64 * frac).round() as usize).max(1);
                    let dphi = 2.0 * PI / m_b as f64;
                    let stagger = 0.5 * (b % 2) as f64;
                    for j in 0..m_b {
                        let phi = dphi * (j as f64 + stagger);
                        cells.push(Cell {
                            center: Point {
                                coords: vec![
                                    center.coords()[0] + radius * tc.sin() * phi.cos(),
                                    center.coords()[1] + radius * tc.sin() * phi.sin(),
                                    center.coords()[2] + radius * tc.cos(),
                                ],
                            },
                            weight_measure: radius * radius * (t1 - t0) * dphi * tc.sin(),
                            intrinsic_dim: 2,
                        });
                    }
                }
                cells
            }
            d => {
                return Err(Error::Geometry(format!(
                    "sphere grids support ambient dimension 2 or 3, got {d}"
                )))
            }
        };
        Ok(DiscretizedSet {
            cells,
            dim: n,
            descriptor,
            resolution,
        })
    }

    /// Cartesian lattice of spacing `2·radius/resolution` clipped to the
    /// closed ball; each cell keeps the full lattice measure `hⁿ`.
    pub fn ball(center: &Point, radius: f64, resolution: u32) -> Result<Self> {
        check_radius(radius)?;
        check_resolution(resolution)?;
        let h = 2.0 * radius / resolution as f64;
        let descriptor = Shape::Ball {
            center: center.coords().to_vec(),
            radius,
        };
        let cells = lattice_cells(center.coords(), h, radius, |r2| r2 <= radius * radius);
        if cells.is_empty() {
            return Err(Error::Geometry("ball grid came out empty".into()));
        }
        Ok(DiscretizedSet {
            cells,
            dim: center.dim(),
            descriptor,
            resolution,
        })
    }

    /// Cartesian lattice clipped to `r_in ≤ |x − center| ≤ r_out`, spacing
    /// `2·r_out/resolution`.
    pub fn annulus(center: &Point, r_in: f64, r_out: f64, resolution: u32) -> Result<Self> {
        if !(r_in > 0.0 && r_in < r_out) {
            return Err(Error::Geometry(format!(
                "annulus requires 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}"
            )));
        }
        check_resolution(resolution)?;
        let h = 2.0 * r_out / resolution as f64;
        Self::annulus_with_spacing(center, r_in, r_out, h, resolution)
    }

    fn annulus_with_spacing(
        center: &Point,
        r_in: f64,
        r_out: f64,
        h: f64,
        resolution: u32,
    ) -> Result<Self> {
        let descriptor = Shape::Annulus {
            center: center.coords().to_vec(),
            r_in,
            r_out,
        };
        let cells = lattice_cells(center.coords(), h, r_out, |r2| {
            r2 >= r_in * r_in && r2 <= r_out * r_out
        });
        if cells.is_empty() {
            return Err(Error::Geometry(
                "annulus grid came out empty; raise the resolution".into(),
            ));
        }
        Ok(DiscretizedSet {
            cells,
            dim: center.dim(),
            descriptor,
            resolution,
        })
    }

    /// Cartesian lattice over an axis-aligned box, cubic cells of side
    /// `max extent / resolution`, centered per axis. Resolution 1 is allowed
    /// (a box can be a single cell).
    pub fn box_grid(lo: &Point, hi: &Point, resolution: u32) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        if lo.coords().iter().zip(hi.coords()).any(|(l, h)| l >= h) {
            return Err(Error::Geometry("box requires lo < hi per axis".into()));
        }
        if resolution < 1 {
            return Err(Error::Geometry("box resolution must be at least 1".into()));
        }
        let n = lo.dim();
        let extent: f64 = lo
            .coords()
            .iter()
            .zip(hi.coords())
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max);
        let h = extent / resolution as f64;
        let counts: Vec<usize> = lo
            .coords()
            .iter()
            .zip(hi.coords())
            .map(|(l, hi_c)| (((hi_c - l) / h).floor() as usize).max(1))
            .collect();
        // center the cell block per axis so narrow axes get mid-axis centers
        let offsets: Vec<f64> = (0..n)
            .map(|a| {
                let extent_a = hi.coords()[a] - lo.coords()[a];
                0.5 * (extent_a - counts[a] as f64 * h)
            })
            .collect();
        let mut cells = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let coords: Vec<f64> = (0..n)
                .map(|a| lo.coords()[a] + offsets[a] + (idx[a] as f64 + 0.5) * h)
                .collect();
            cells.push(Cell {
                center: Point { coords },
                weight_measure: h.powi(n as i32),
                intrinsic_dim: n,
            });
            // odometer increment
            let mut a = 0;
            loop {
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
                a += 1;
                if a == n {
                    return Ok(DiscretizedSet {
                        cells,
                        dim: n,
                        descriptor: Shape::Box {
                            lo: lo.coords().to_vec(),
                            hi: hi.coords().to_vec(),
                        },
                        resolution,
                    });
                }
            }
        }
    }

    /// Concatenate disjoint prebuilt grids into one set.
    pub fn union_of(parts: Vec<DiscretizedSet>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Geometry("union of no parts".into()));
        }
        let dim = parts[0].dim;
        if parts.iter().any(|p| p.dim != dim) {
            return Err(Error::Geometry("union parts must share the ambient dimension".into()));
        }
        let mut seen = HashSet::new();
        let mut cells = Vec::new();
        for p in &parts {
            for c in &p.cells {
                if !seen.insert(c.center.key()) {
                    return Err(Error::Geometry(
                        "union parts overlap: duplicate cell center".into(),
                    ));
                }
                cells.push(c.clone());
            }
        }
        let resolution = parts.iter().map(|p| p.resolution).max().unwrap();
        Ok(DiscretizedSet {
            cells,
            dim,
            descriptor: Shape::Union {
                parts: parts.into_iter().map(|p| p.descriptor).collect(),
            },
            resolution,
        })
    }

    /// Build a grid from a shape descriptor. Union descriptors apply the
    /// same resolution to every part.
    pub fn from_shape(shape: &Shape, resolution: u32) -> Result<Self> {
        match shape {
            Shape::Sphere { center, radius } => {
                Self::sphere(&Point::new(center.clone())?, *radius, resolution)
            }
            Shape::Ball { center, radius } => {
                Self::ball(&Point::new(center.clone())?, *radius, resolution)
            }
            Shape::Annulus { center, r_in, r_out } => {
                Self::annulus(&Point::new(center.clone())?, *r_in, *r_out, resolution)
            }
            Shape::Box { lo, hi } => Self::box_grid(
                &Point::new(lo.clone())?,
                &Point::new(hi.clone())?,
                resolution,
            ),
            Shape::Union { parts } => Self::union_of(
                parts
                    .iter()
                    .map(|s| Self::from_shape(s, resolution))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }

    /// Same descriptor at doubled resolution. Refinement is by descriptor,
    /// not by cell subdivision: coarse centers need not reappear.
    pub fn refine(&self) -> Result<Self> {
        Self::from_shape(&self.descriptor, self.resolution * 2)
    }

    /// Family of annulus grids `r_in ≤ |x−center| ≤ r_outs[j]` sharing one
    /// lattice, so the cell centers are nested exactly: every coarse center
    /// reappears bit-for-bit among the next level's centers. `resolution`
    /// fixes the spacing through the first level, `h = 2·r_outs[0]/resolution`.
    pub fn nested_annuli(
        center: &Point,
        r_in: f64,
        r_outs: &[f64],
        resolution: u32,
    ) -> Result<Vec<Self>> {
        if r_outs.is_empty() {
            return Err(Error::Geometry("nested family needs at least one radius".into()));
        }
        if r_outs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Geometry("nested radii must be strictly increasing".into()));
        }
        if !(r_in > 0.0 && r_in < r_outs[0]) {
            return Err(Error::Geometry("nested family requires 0 < r_in < r_outs[0]".into()));
        }
        check_resolution(resolution)?;
        let h = 2.0 * r_outs[0] / resolution as f64;
        r_outs
            .iter()
            .map(|&r_out| {
                let res = (2.0 * r_out / h).round() as u32;
                Self::annulus_with_spacing(center, r_in, r_out, h, res)
            })
            .collect()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn descriptor(&self) -> &Shape {
        &self.descriptor
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn total_weight(&self) -> f64 {
        self.cells.iter().map(|c| c.weight_measure).sum()
    }

    /// Index of the cell whose center equals `p` exactly (bitwise).
    pub fn center_index(&self, p: &Point) -> Option<usize> {
        let k = p.key();
        self.cells.iter().position(|c| c.center.key() == k)
    }

    /// Largest cell diameter, via the equivalent-ball radius: `2·ρ·√d`.
    pub fn max_cell_diameter(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                let d = c.intrinsic_dim;
                let rho = (c.weight_measure / ball_volume(d, 1.0)).powf(1.0 / d as f64);
                2.0 * rho * (d as f64).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest distance of a cell center from the descriptor's set; the
    /// construction invariant keeps this below [`DESCRIPTOR_TOL`].
    pub fn max_descriptor_residual(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| self.descriptor.residual(c.center.coords()))
            .fold(0.0, f64::max)
    }

    /// Check construction invariants: non-empty, distinct centers, positive
    /// weights, centers on the descriptor's set.
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Geometry("set has no cells".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.cells {
            if c.weight_measure <= 0.0 || !c.weight_measure.is_finite() {
                return Err(Error::Geometry("cell weight_measure must be positive".into()));
            }
            if !seen.insert(c.center.key()) {
                return Err(Error::Geometry("cell centers must be pairwise distinct".into()));
            }
        }
        let r = self.max_descriptor_residual();
        if r > DESCRIPTOR_TOL {
            return Err(Error::Geometry(format!(
                "cell center leaves the descriptor set by {r:.3e}"
            )));
        }
        Ok(())
    }

    /// Weighted centroid of the cell centers.
    pub fn centroid(&self) -> Point {
        let mut c = vec![0.0; self.dim];
        let total = self.total_weight();
        for cell in &self.cells {
            for (i, x) in cell.center.coords().iter().enumerate() {
                c[i] += cell.weight_measure * x / total;
            }
        }
        Point { coords: c }
    }

    /// Radius of the smallest origin-at-centroid ball containing all centers.
    pub fn bounding_radius(&self) -> f64 {
        let c = self.centroid();
        self.cells
            .iter()
            .map(|cell| cell.center.distance(&c))
            .fold(0.0, f64::max)
    }
}

/// Symmetric lattice around `center`: coordinates `center + (k+½)h` for all
/// integers k with |(k+½)h| ≤ reach. The coordinate of a given k does not
/// depend on the reach, which is what makes nested annulus families nest
/// bitwise.
fn lattice_cells(center: &[f64], h: f64, reach: f64, keep: impl Fn(f64) -> bool) -> Vec<Cell> {
    let n = center.len();
    let kmax = (reach / h + 0.5).ceil() as i64;
    let range: Vec<f64> = (-kmax..=kmax)
        .map(|k| (k as f64 + 0.5) * h)
        .filter(|o| o.abs() <= reach)
        .collect();
    let mut cells = Vec::new();
    let mut idx = vec![0usize; n];
    if range.is_empty() {
        return cells;
    }
    loop {
        let mut r2 = 0.0;
        for a in 0..n {
            let o = range[idx[a]];
            r2 += o * o;
        }
        if keep(r2) {
            let coords: Vec<f64> = (0..n).map(|a| center[a] + range[idx[a]]).collect();
            cells.push(Cell {
                center: Point { coords },
                weight_measure: h.powi(n as i32),
                intrinsic_dim: n,
            });
        }
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < range.len() {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == n {
                return cells;
            }
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::Geometry(format!("radius must be positive, got {radius}")))
    }
}

fn check_resolution(resolution: u32) -> Result<()> {
    if resolution >= 2 {
        Ok(())
    } else {
        Err(Error::Geometry(format!(
            "resolution must be at least 2, got {resolution}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin3() -> Point {
        Point::from([0.0, 0.0, 0.0])
    }

    #[test]
    fn sphere_area_close_to_exact() {
        let s = DiscretizedSet::sphere(&origin3(), 1.0, 16).unwrap();
        let err = (s.total_weight() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(err < 0.02, "area error {err}");
        s.validate().unwrap();
    }

    #[test]
    fn circle_grid_is_uniform() {
        let s = DiscretizedSet::sphere(&Point::from([0.0, 0.0]), 2.0, 8).unwrap();
        assert_eq!(s.len(), 8);
        for c in s.cells() {
            assert!((c.weight_measure - PI / 2.0).abs() < 1e-15);
        }
        s.validate().unwrap();
    }

    #[test]
    fn degenerate_radius_rejected() {
        assert!(DiscretizedSet::sphere(&origin3(), 0.0, 16).is_err());
        assert!(DiscretizedSet::ball(&origin3(), -1.0, 16).is_err());
    }

    #[test]
    fn ball_volume_close_to_exact() {
        let s = DiscretizedSet::ball(&origin3(), 1.0, 24).unwrap();
        let exact = 4.0 / 3.0 * PI;
        let err = (s.total_weight() - exact).abs() / exact;
        assert!(err < 0.02, "volume error {err}");
        s.validate().unwrap();
    }

    #[test]
    fn coarse_disk_lattice_matches_construction() {
        let s = DiscretizedSet::ball(&Point::from([0.0, 0.0]), 1.0, 2).unwrap();
        assert_eq!(s.len(), 4);
        for c in s.cells() {
            assert_eq!(c.weight_measure, 1.0);
            assert!(c.center.coords().iter().all(|x| x.abs() == 0.5));
        }
    }

    #[test]
    fn annulus_volumes() {
        let s = DiscretizedSet::annulus(&origin3(), 1.0, 2.0, 24).unwrap();
        let exact = 4.0 / 3.0 * PI * 7.0;
        assert!((s.total_weight() - exact).abs() / exact < 0.02);

        let s2 = DiscretizedSet::annulus(&Point::from([0.0, 0.0]), 1.0, 3.0, 32).unwrap();
        let exact2 = 8.0 * PI;
        assert!((s2.total_weight() - exact2).abs() / exact2 < 0.02);
    }

    #[test]
    fn empty_annulus_rejected() {
        assert!(DiscretizedSet::annulus(&origin3(), 1.0, 1.0, 16).is_err());
    }

    #[test]
    fn refine_doubles_resolution() {
        let s = DiscretizedSet::ball(&origin3(), 1.0, 8).unwrap();
        let f = s.refine().unwrap();
        assert_eq!(f.resolution(), 16);
        assert_eq!(f.descriptor(), s.descriptor());
        assert_eq!(f.refine().unwrap().resolution(), 32);
    }

    #[test]
    fn refined_sphere_area_error_strictly_smaller() {
        let exact = 4.0 * PI;
        let coarse = DiscretizedSet::sphere(&origin3(), 1.0, 16).unwrap();
        let fine = coarse.refine().unwrap();
        let e0 = (coarse.total_weight() - exact).abs();
        let e1 = (fine.total_weight() - exact).abs();
        assert!(e1 < e0, "refinement must shrink the area error: {e0} -> {e1}");
    }

    #[test]
    fn total_weight_error_monotone_under_refinement() {
        let exact_ball = 4.0 / 3.0 * PI;
        let mut s = DiscretizedSet::ball(&origin3(), 1.0, 16).unwrap();
        let mut prev = (s.total_weight() - exact_ball).abs();
        for _ in 0..2 {
            s = s.refine().unwrap();
            let e = (s.total_weight() - exact_ball).abs();
            assert!(e <= prev, "ball error not monotone: {prev} -> {e}");
            prev = e;
        }

        let lo = Point::from([0.0, 0.0, 0.0]);
        let hi = Point::from([1.0, 0.5, 0.25]);
        let mut b = DiscretizedSet::box_grid(&lo, &hi, 16).unwrap();
        let mut prev = (b.total_weight() - 0.125).abs();
        for _ in 0..2 {
            b = b.refine().unwrap();
            let e = (b.total_weight() - 0.125).abs();
            assert!(e <= prev, "box error not monotone: {prev} -> {e}");
            prev = e;
        }

        let mut a = DiscretizedSet::annulus(&Point::from([0.0, 0.0]), 1.0, 2.0, 16).unwrap();
        let exact_a = 3.0 * PI;
        let mut prev = (a.total_weight() - exact_a).abs();
        for _ in 0..2 {
            a = a.refine().unwrap();
            let e = (a.total_weight() - exact_a).abs();
            assert!(e <= prev, "annulus error not monotone: {prev} -> {e}");
            prev = e;
        }
    }

    #[test]
    fn centers_satisfy_descriptor() {
        for set in [
            DiscretizedSet::sphere(&origin3(), 1.5, 20).unwrap(),
            DiscretizedSet::ball(&Point::from([0.5, -0.25]), 2.0, 12).unwrap(),
            DiscretizedSet::annulus(&origin3(), 1.0, 2.5, 10).unwrap(),
        ] {
            assert!(set.max_descriptor_residual() <= DESCRIPTOR_TOL);
        }
    }

    #[test]
    fn nested_annuli_nest_bitwise() {
        let c = Point::from([0.0, 0.0]);
        let family = DiscretizedSet::nested_annuli(&c, 1.0, &[2.0, 4.0, 8.0], 16).unwrap();
        for w in family.windows(2) {
            let fine: HashSet<_> = w[1].cells().iter().map(|c| c.center.key()).collect();
            for cell in w[0].cells() {
                assert!(fine.contains(&cell.center.key()));
            }
        }
        assert!(family[0].len() < family[1].len() && family[1].len() < family[2].len());
    }

    #[test]
    fn union_rejects_duplicates() {
        let a = DiscretizedSet::ball(&Point::from([0.0, 0.0]), 1.0, 4).unwrap();
        let b = DiscretizedSet::ball(&Point::from([0.0, 0.0]), 1.0, 4).unwrap();
        assert!(DiscretizedSet::union_of(vec![a, b]).is_err());
    }

    #[test]
    fn union_concatenates_disjoint_parts() {
        let a = DiscretizedSet::ball(&Point::from([0.0, 0.0]), 0.5, 4).unwrap();
        let b = DiscretizedSet::annulus(&Point::from([0.0, 0.0]), 1.0, 2.0, 8).unwrap();
        let (la, lb) = (a.len(), b.len());
        let u = DiscretizedSet::union_of(vec![a, b]).unwrap();
        assert_eq!(u.len(), la + lb);
        u.validate().unwrap();
    }
}
