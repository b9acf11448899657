//! Discrete positive measures on discretized sets: potentials, mutual
//! energies, and the symmetric positive-definite energy (Gram) matrices that
//! turn sweeping into a nonnegative quadratic program.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use ndarray::Array2;

use crate::geometry::{DiscretizedSet, Point};
use crate::kernels::Kernel;
use crate::linalg;
use crate::{Error, Result};

/// Nonnegative weights attached to the cells of a discretized set.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    support: Arc<DiscretizedSet>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Arc<DiscretizedSet>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.len() {
            return Err(Error::Measure(format!(
                "weights length {} does not match cell count {}",
                weights.len(),
                support.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Measure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        Ok(DiscreteMeasure { support, weights })
    }

    pub fn zero(support: Arc<DiscretizedSet>) -> Self {
        let weights = vec![0.0; support.len()];
        DiscreteMeasure { support, weights }
    }

    /// Uniform density: weights proportional to cell measures, normalized to
    /// the requested total mass.
    pub fn uniform(support: Arc<DiscretizedSet>, total_mass: f64) -> Result<Self> {
        if !(total_mass >= 0.0) || !total_mass.is_finite() {
            return Err(Error::Measure(format!("invalid total mass {total_mass}")));
        }
        let total = support.total_weight();
        let weights = support
            .cells()
            .iter()
            .map(|c| total_mass * c.weight_measure / total)
            .collect();
        Ok(DiscreteMeasure { support, weights })
    }

    /// A single unit-weight cell of the given set.
    pub fn unit_cell(support: Arc<DiscretizedSet>, index: usize, mass: f64) -> Result<Self> {
        if index >= support.len() {
            return Err(Error::Measure(format!("cell index {index} out of range")));
        }
        let mut weights = vec![0.0; support.len()];
        weights[index] = mass;
        Self::new(support, weights)
    }

    pub fn support(&self) -> &Arc<DiscretizedSet> {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| *w == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.support.clone(),
            self.weights.iter().map(|w| w * factor).collect(),
        )
    }

    /// Convex/positive combination on a shared support.
    pub fn linear_combination(a: f64, mu: &Self, b: f64, nu: &Self) -> Result<Self> {
        if mu.support.len() != nu.support.len() {
            return Err(Error::Measure("supports differ".into()));
        }
        let weights = mu
            .weights
            .iter()
            .zip(&nu.weights)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(mu.support.clone(), weights)
    }

    /// Potential U(x) = Σᵢ wᵢ κ(x, cᵢ). When x coincides with a support
    /// center (exactly), that term uses the cell-averaged self-energy, so
    /// potentials at support points agree with Gram-matrix rows.
    pub fn potential(&self, kernel: &Kernel, x: &Point) -> Result<f64> {
        if x.dim() != self.support.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.support.dim(),
                got: x.dim(),
            });
        }
        let key = x.key();
        let mut s = 0.0;
        for (w, cell) in self.weights.iter().zip(self.support.cells()) {
            if *w == 0.0 {
                continue;
            }
            let k = if cell.center.key() == key {
                kernel.cell_self_energy(cell)?
            } else {
                kernel.eval(x, &cell.center)?
            };
            s += w * k;
        }
        Ok(s)
    }

    /// Energy ‖μ‖² = I(μ, μ).
    pub fn energy(&self, kernel: &Kernel) -> Result<f64> {
        mutual_energy(self, self, kernel)
    }

    /// CSV serialization: `x1..xn, cell_measure, weight` with full
    /// 17-significant-digit floats.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let n = self.support.dim();
        let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(out, "{},cell_measure,weight", header.join(","))?;
        for (w, cell) in self.weights.iter().zip(self.support.cells()) {
            let coords: Vec<String> = cell
                .center
                .coords()
                .iter()
                .map(|c| format!("{c:.16e}"))
                .collect();
            writeln!(
                out,
                "{},{:.16e},{:.16e}",
                coords.join(","),
                cell.weight_measure,
                w
            )?;
        }
        Ok(())
    }
}

/// Mutual energy I(μ, ν) by the double sum, with the cell-averaged
/// self-energy on exactly coincident centers. The summation order is fixed
/// by a canonical ordering of the arguments, so I(μ, ν) == I(ν, μ) exactly.
pub fn mutual_energy(mu: &DiscreteMeasure, nu: &DiscreteMeasure, kernel: &Kernel) -> Result<f64> {
    if mu.support.dim() != nu.support.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.support.dim(),
            got: nu.support.dim(),
        });
    }
    let (a, b) = if canonical_le(mu, nu) { (mu, nu) } else { (nu, mu) };
    let mut total = 0.0;
    for (wi, ci) in a.weights.iter().zip(a.support.cells()) {
        if *wi == 0.0 {
            continue;
        }
        let ki = ci.center.key();
        let mut row = 0.0;
        for (vj, cj) in b.weights.iter().zip(b.support.cells()) {
            if *vj == 0.0 {
                continue;
            }
            let k = if cj.center.key() == ki {
                // coincident centers across possibly different grids: use the
                // symmetric average of the two cells' self-energies
                0.5 * (kernel.cell_self_energy(ci)? + kernel.cell_self_energy(cj)?)
            } else {
                kernel.eval(&ci.center, &cj.center)?
            };
            row += vj * k;
        }
        total += wi * row;
    }
    Ok(total)
}

/// Deterministic total order on measures (content-based, no addresses), used
/// to canonicalize the double-sum order in [`mutual_energy`].
fn canonical_le(a: &DiscreteMeasure, b: &DiscreteMeasure) -> bool {
    use std::cmp::Ordering;
    match a.support.len().cmp(&b.support.len()) {
        Ordering::Less => return true,
        Ordering::Greater => return false,
        Ordering::Equal => {}
    }
    for (ca, cb) in a.support.cells().iter().zip(b.support.cells()) {
        match ca.center.key().cmp(&cb.center.key()) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    for (wa, wb) in a.weights.iter().zip(&b.weights) {
        match wa.to_bits().cmp(&wb.to_bits()) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    true
}

/// Dense symmetric matrix of the energy inner product on a set's cells.
///
/// Off-diagonal entries are kernel evaluations between cell centers; the
/// diagonal is the cell-averaged self-energy. The upper triangle is mirrored
/// so the matrix is symmetric bitwise. Strict positive definiteness is
/// verified eagerly (smallest eigenvalue) for sets of at most 200 cells and
/// by Cholesky success otherwise.
pub struct GramMatrix {
    entries: Array2<f64>,
    kernel_tag: String,
    set_tag: String,
    min_eig: Option<f64>,
    chol: OnceLock<Arc<linalg::Cholesky>>,
    // columns of G⁻¹, cached on demand; repeated sweeps onto one set keep
    // hitting the same near-boundary active cells
    inv_columns: std::sync::RwLock<std::collections::HashMap<usize, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for GramMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GramMatrix")
            .field("size", &self.entries.nrows())
            .field("kernel", &self.kernel_tag)
            .field("set", &self.set_tag)
            .field("min_eig", &self.min_eig)
            .finish()
    }
}

/// Eigenvalue verification threshold: full check up to this size.
const EIG_CHECK_LIMIT: usize = 200;

impl GramMatrix {
    /// Wrap an explicit symmetric positive-definite matrix. Sweeping
    /// assembles its own matrices; this is for solver-level problems built
    /// directly from numbers.
    pub fn from_entries(entries: Array2<f64>, tag: &str) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Measure("matrix must be square".into()));
        }
        let gram = GramMatrix {
            entries,
            kernel_tag: tag.to_string(),
            set_tag: tag.to_string(),
            min_eig: None,
            chol: OnceLock::new(),
            inv_columns: Default::default(),
        };
        gram.verify_positive_definite()?;
        Ok(gram)
    }

    pub fn assemble(set: &Arc<DiscretizedSet>, kernel: &Kernel) -> Result<Self> {
        if set.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: set.dim(),
            });
        }
        for cell in set.cells() {
            kernel.check_domain(cell.center.coords())?;
        }
        let m = set.len();
        let mut entries = match kernel {
            Kernel::Riesz { .. } | Kernel::GreenBall2 { .. } => {
                let mut g = Array2::zeros((m, m));
                for i in 0..m {
                    let ci = set.cells()[i].center.coords();
                    for j in i + 1..m {
                        g[(i, j)] = kernel.eval_radial(ci, set.cells()[j].center.coords());
                    }
                }
                g
            }
            Kernel::GreenAlphaBall { alpha, dim, exterior, .. } => {
                green_alpha_entries(set, *alpha, *dim, exterior)?
            }
        };
        for i in 0..m {
            entries[(i, i)] = kernel.cell_self_energy(&set.cells()[i])?;
            for j in i + 1..m {
                entries[(j, i)] = entries[(i, j)];
            }
        }
        let mut gram = GramMatrix {
            entries,
            kernel_tag: kernel.tag(),
            set_tag: format!("{:?}@res{}", set_kind(set), set.resolution()),
            min_eig: None,
            chol: OnceLock::new(),
            inv_columns: Default::default(),
        };
        if m <= EIG_CHECK_LIMIT {
            let chol = gram.cholesky()?;
            let lam = linalg::min_eigenvalue(&gram.entries, &chol, 60);
            if !(lam > 0.0) {
                return Err(Error::IllConditioned { size: m, pivot: 0 });
            }
            gram.min_eig = Some(lam);
        }
        Ok(gram)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn kernel_tag(&self) -> &str {
        &self.kernel_tag
    }

    pub fn set_tag(&self) -> &str {
        &self.set_tag
    }

    /// Smallest eigenvalue, available for sets of at most 200 cells.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.min_eig
    }

    /// Cached Cholesky factor; failure reports an ill-conditioned
    /// discretization.
    pub(crate) fn cholesky(&self) -> Result<Arc<linalg::Cholesky>> {
        if let Some(c) = self.chol.get() {
            return Ok(c.clone());
        }
        let c = Arc::new(linalg::cholesky(&self.entries)?);
        let _ = self.chol.set(c.clone());
        Ok(self.chol.get().expect("just set").clone())
    }

    /// Verify positive definiteness by factorization (used for large sets).
    pub fn verify_positive_definite(&self) -> Result<()> {
        self.cholesky().map(|_| ())
    }

    /// Column i of G⁻¹, cached across solves on this matrix.
    pub(crate) fn inverse_column(&self, i: usize) -> Result<Arc<Vec<f64>>> {
        if let Some(c) = self.inv_columns.read().unwrap().get(&i) {
            return Ok(c.clone());
        }
        let chol = self.cholesky()?;
        let mut e = vec![0.0; self.size()];
        e[i] = 1.0;
        let col = Arc::new(chol.solve(&e));
        self.inv_columns.write().unwrap().insert(i, col.clone());
        Ok(col)
    }

    pub fn matvec(&self, w: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.entries, w)
    }

    /// Quadratic form wᵀ G w.
    pub fn quad_form(&self, w: &[f64]) -> f64 {
        linalg::dot(w, &self.matvec(w))
    }
}

fn set_kind(set: &DiscretizedSet) -> &'static str {
    match set.descriptor() {
        crate::geometry::Shape::Sphere { .. } => "sphere",
        crate::geometry::Shape::Ball { .. } => "ball",
        crate::geometry::Shape::Annulus { .. } => "annulus",
        crate::geometry::Shape::Box { .. } => "box",
        crate::geometry::Shape::Union { .. } => "union",
    }
}

/// Off-diagonal α-Green entries: Riesz part minus the symmetrized exterior
/// correction B·Wᵀ, where row i of B holds the Riesz kernel from cell i to
/// the annulus cells and row i of W the swept weights of cell i's Dirac.
fn green_alpha_entries(
    set: &DiscretizedSet,
    alpha: f64,
    dim: usize,
    exterior: &crate::kernels::ExteriorSweep,
) -> Result<Array2<f64>> {
    use crate::kernels::riesz_of_r2;
    let beta = dim as f64 - alpha;
    let m = set.len();
    let ext_cells = exterior.annulus().cells();
    let me = ext_cells.len();

    let mut b_mat = Array2::zeros((m, me));
    let mut w_mat = Array2::zeros((m, me));
    for i in 0..m {
        let ci = set.cells()[i].center.coords();
        let w = exterior.swept_weights(ci)?;
        for k in 0..me {
            b_mat[(i, k)] = riesz_of_r2(
                crate::geometry::dist_sq(ci, ext_cells[k].center.coords()),
                beta,
            );
            w_mat[(i, k)] = w[k];
        }
    }
    let corr = b_mat.dot(&w_mat.t());

    let mut g = Array2::zeros((m, m));
    for i in 0..m {
        let ci = set.cells()[i].center.coords();
        for j in i + 1..m {
            let riesz = riesz_of_r2(
                crate::geometry::dist_sq(ci, set.cells()[j].center.coords()),
                beta,
            );
            g[(i, j)] = riesz - 0.5 * (corr[(i, j)] + corr[(j, i)]);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn two_cell_set() -> Arc<DiscretizedSet> {
        // Two cells distance 1 apart, equal measures, via a box grid.
        let lo = Point::from([0.0, -0.25, -0.25]);
        let hi = Point::from([2.0, 0.25, 0.25]);
        let s = DiscretizedSet::box_grid(&lo, &hi, 2).unwrap();
        assert_eq!(s.len(), 2);
        Arc::new(s)
    }

    #[test]
    fn zero_measure_has_zero_potential() {
        let s = Arc::new(DiscretizedSet::ball(&Point::from([0.0, 0.0, 0.0]), 1.0, 4).unwrap());
        let mu = DiscreteMeasure::zero(s);
        let v = mu
            .potential(&Kernel::newtonian(), &Point::from([3.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn single_cell_potential() {
        let s = two_cell_set();
        let k = Kernel::riesz(1.0, 3).unwrap();
        let mu = DiscreteMeasure::unit_cell(s.clone(), 0, 2.0).unwrap();
        // cell 0 center is (0.5, 0, 0); evaluate 2 away along x
        let x = Point::from([2.5, 0.0, 0.0]);
        let v = mu.potential(&k, &x).unwrap();
        assert!((v - 2.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn sphere_mean_value_property() {
        // Uniform unit mass on the unit sphere behaves like a point charge
        // outside: U(x) = 1/|x|.
        let k = Kernel::newtonian();
        let x = Point::from([0.0, 0.0, 2.0]);
        let mut errs = Vec::new();
        for res in [32, 64] {
            let s = Arc::new(
                DiscretizedSet::sphere(&Point::from([0.0, 0.0, 0.0]), 1.0, res).unwrap(),
            );
            let mu = DiscreteMeasure::uniform(s, 1.0).unwrap();
            let v = mu.potential(&k, &x).unwrap();
            errs.push((v - 0.5).abs() / 0.5);
        }
        assert!(errs[0] < 0.01, "rel err {} at res 32", errs[0]);
        assert!(errs[1] < 0.005, "rel err {} at res 64", errs[1]);
    }

    #[test]
    fn mutual_energy_symmetry_and_zero() {
        let s = Arc::new(DiscretizedSet::ball(&Point::from([0.0, 0.0, 0.0]), 1.0, 4).unwrap());
        let k = Kernel::newtonian();
        let mu = DiscreteMeasure::uniform(s.clone(), 1.0).unwrap();
        let off = Arc::new(DiscretizedSet::sphere(&Point::from([0.0, 0.0, 0.0]), 3.0, 8).unwrap());
        let nu = DiscreteMeasure::uniform(off, 2.0).unwrap();
        let a = mutual_energy(&mu, &nu, &k).unwrap();
        let b = mutual_energy(&nu, &mu, &k).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());

        let z = DiscreteMeasure::zero(s);
        assert_eq!(mutual_energy(&mu, &z, &k).unwrap(), 0.0);
    }

    #[test]
    fn energy_strictly_positive_for_nonzero() {
        let s = Arc::new(DiscretizedSet::ball(&Point::from([0.0, 0.0, 0.0]), 1.0, 6).unwrap());
        let k = Kernel::newtonian();
        let gram = GramMatrix::assemble(&s, &k).unwrap();
        let lam = gram.min_eigenvalue().unwrap();
        assert!(lam > 0.0);
        let mu = DiscreteMeasure::uniform(s, 1.0).unwrap();
        assert!(mu.energy(&k).unwrap() > 0.0);
    }

    #[test]
    fn gram_two_cell_example() {
        let s = two_cell_set();
        let k = Kernel::riesz(1.0, 3).unwrap();
        let g = GramMatrix::assemble(&s, &k).unwrap();
        assert_eq!(g.entries()[(0, 1)], 1.0); // centers distance 1 apart
        assert_eq!(g.entries()[(0, 0)].to_bits(), g.entries()[(1, 1)].to_bits());
    }

    #[test]
    fn gram_is_bitwise_symmetric() {
        let s = Arc::new(DiscretizedSet::sphere(&Point::from([0.0, 0.0, 0.0]), 1.0, 12).unwrap());
        let g = GramMatrix::assemble(&s, &Kernel::newtonian()).unwrap();
        let e = g.entries();
        for i in 0..g.size() {
            for j in 0..g.size() {
                assert_eq!(e[(i, j)].to_bits(), e[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn single_cell_gram_is_self_energy() {
        let lo = Point::from([0.0, 0.0, 0.0]);
        let one = Arc::new(DiscretizedSet::box_grid(&lo, &Point::from([0.5, 0.5, 0.5]), 1).unwrap());
        assert_eq!(one.len(), 1);
        let k = Kernel::newtonian();
        let g = GramMatrix::assemble(&one, &k).unwrap();
        let se = k.cell_self_energy(&one.cells()[0]).unwrap();
        assert_eq!(g.entries()[(0, 0)].to_bits(), se.to_bits());
    }

    #[test]
    fn potential_linear_in_weights() {
        let s = Arc::new(DiscretizedSet::ball(&Point::from([0.0, 0.0, 0.0]), 1.0, 5).unwrap());
        let k = Kernel::newtonian();
        let mu = DiscreteMeasure::uniform(s.clone(), 1.0).unwrap();
        let nu = DiscreteMeasure::unit_cell(s.clone(), 3, 0.7).unwrap();
        let combo = DiscreteMeasure::linear_combination(2.0, &mu, 3.0, &nu).unwrap();
        let x = Point::from([0.0, 0.0, 4.0]);
        let lhs = combo.potential(&k, &x).unwrap();
        let rhs = 2.0 * mu.potential(&k, &x).unwrap() + 3.0 * nu.potential(&k, &x).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn double_sum_matches_gram_quadratic_form() {
        let s = Arc::new(DiscretizedSet::ball(&Point::from([0.0, 0.0, 0.0]), 1.0, 5).unwrap());
        let k = Kernel::newtonian();
        let gram = GramMatrix::assemble(&s, &k).unwrap();
        let mu = DiscreteMeasure::uniform(s.clone(), 1.3).unwrap();
        let nu = DiscreteMeasure::unit_cell(s.clone(), 2, 0.9).unwrap();
        let direct = mutual_energy(&mu, &nu, &k).unwrap();
        let via_gram = linalg::dot(mu.weights(), &gram.matvec(nu.weights()));
        assert!(
            (direct - via_gram).abs() <= 1e-10 * direct.abs().max(1.0),
            "double sum {direct} vs Gram {via_gram}"
        );
    }

    #[test]
    fn energy_norm_bounded_below_by_min_eig() {
        let s = Arc::new(DiscretizedSet::sphere(&Point::from([0.0, 0.0, 0.0]), 1.0, 10).unwrap());
        let k = Kernel::newtonian();
        let gram = GramMatrix::assemble(&s, &k).unwrap();
        let lam = gram.min_eigenvalue().unwrap();
        let mu = DiscreteMeasure::uniform(s, 1.0).unwrap();
        let w = mu.weights();
        let norm2 = gram.quad_form(w);
        let w2 = linalg::dot(w, w);
        assert!(norm2 >= 0.99 * lam * w2);
    }

    #[test]
    fn csv_round_shape() {
        let s = Arc::new(DiscretizedSet::ball(&Point::from([0.0, 0.0]), 1.0, 3).unwrap());
        let mu = DiscreteMeasure::uniform(s, 1.0).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,cell_measure,weight");
        assert_eq!(lines.count(), mu.support().len());
    }
}
