//! Symmetric lower-semicontinuous kernels: Riesz kernels `|x−y|^{α−n}` on
//! ℝⁿ, the reflection 2-Green kernel of a ball, and the fractional α-Green
//! kernel of a ball built numerically by sweeping Dirac measures onto the
//! truncated complement with respect to the Riesz kernel.
//!
//! Evaluation goes through `|x−y|` and symmetric sub-expressions only, so
//! `eval(k, x, y) == eval(k, y, x)` holds bitwise. Gram diagonals come from
//! the equivalent-ball rule: the average of the kernel over two independent
//! points of a ball with the same measure as the cell.

mod exterior;
mod pair_mean;

pub use exterior::{ExteriorConfig, ExteriorSweep};
pub use pair_mean::pair_mean_inverse_distance;

use std::sync::Arc;

use crate::geometry::{ball_volume, dist_sq, Cell, Point};
use crate::{Error, Result};

/// A symmetric positive-definite kernel descriptor.
#[derive(Clone, Debug)]
pub enum Kernel {
    /// `|x−y|^{α−n}` on ℝⁿ, 0 < α ≤ 2, α < n.
    Riesz { alpha: f64, dim: usize },
    /// The 2-Green kernel of the ball B(0, R) in ℝⁿ, n ≥ 3, by the
    /// reflection formula.
    GreenBall2 { radius: f64, dim: usize },
    /// The fractional α-Green kernel of B(0, R), 1 < α < 2, defined as the
    /// Riesz kernel minus the potential of the Dirac at y swept onto the
    /// (truncated) complement of the ball.
    GreenAlphaBall {
        alpha: f64,
        radius: f64,
        dim: usize,
        exterior: Arc<ExteriorSweep>,
    },
}

impl Kernel {
    pub fn riesz(alpha: f64, dim: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Kernel(format!(
                "Riesz kernels are implemented for n in {{2, 3}}, got {dim}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 2.0 && alpha < dim as f64) {
            return Err(Error::Kernel(format!(
                "Riesz order must satisfy 0 < alpha <= 2 and alpha < n, got alpha={alpha}, n={dim}"
            )));
        }
        Ok(Kernel::Riesz { alpha, dim })
    }

    /// The Newtonian kernel 1/|x−y| on ℝ³.
    pub fn newtonian() -> Self {
        Kernel::Riesz { alpha: 2.0, dim: 3 }
    }

    pub fn green_ball(radius: f64, dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Kernel(format!(
                "the reflection 2-Green kernel needs n >= 3, got {dim}"
            )));
        }
        if dim > 3 {
            return Err(Error::Kernel(format!(
                "ambient dimensions above 3 are out of scope, got {dim}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Kernel(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Kernel::GreenBall2 { radius, dim })
    }

    pub fn green_alpha_ball(alpha: f64, radius: f64, dim: usize, ext: ExteriorConfig) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Kernel(format!(
                "alpha-Green kernels are implemented for n in {{2, 3}}, got {dim}"
            )));
        }
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Kernel(format!(
                "alpha-Green order must lie in (1, 2), got {alpha}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Kernel(format!("ball radius must be positive, got {radius}")));
        }
        let exterior = Arc::new(ExteriorSweep::new(alpha, dim, radius, ext)?);
        Ok(Kernel::GreenAlphaBall {
            alpha,
            radius,
            dim,
            exterior,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::Riesz { dim, .. }
            | Kernel::GreenBall2 { dim, .. }
            | Kernel::GreenAlphaBall { dim, .. } => *dim,
        }
    }

    /// Every implemented kernel is symmetric.
    pub const fn symmetric(&self) -> bool {
        true
    }

    /// Exponent β in the leading singularity r^{−β}.
    pub(crate) fn singularity_exponent(&self) -> f64 {
        match self {
            Kernel::Riesz { alpha, dim } | Kernel::GreenAlphaBall { alpha, dim, .. } => {
                *dim as f64 - alpha
            }
            Kernel::GreenBall2 { dim, .. } => *dim as f64 - 2.0,
        }
    }

    /// Short identifier used to tag Gram matrices and output files.
    pub fn tag(&self) -> String {
        match self {
            Kernel::Riesz { alpha, dim } => format!("riesz(alpha={alpha},n={dim})"),
            Kernel::GreenBall2 { radius, dim } => format!("green2(R={radius},n={dim})"),
            Kernel::GreenAlphaBall {
                alpha, radius, dim, exterior,
            } => format!(
                "green-alpha(alpha={alpha},R={radius},n={dim},r_out={},ext_res={})",
                exterior.r_out(),
                exterior.resolution()
            ),
        }
    }

    /// Kernel value at (x, y); +∞ on the diagonal. Green variants require
    /// both points strictly inside the open ball.
    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        let n = self.dim();
        if x.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.dim() });
        }
        if y.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.dim() });
        }
        self.check_domain(x.coords())?;
        self.check_domain(y.coords())?;
        match self {
            Kernel::Riesz { .. } | Kernel::GreenBall2 { .. } => {
                Ok(self.eval_radial(x.coords(), y.coords()))
            }
            Kernel::GreenAlphaBall { alpha, dim, exterior, .. } => {
                let riesz = riesz_of_r2(dist_sq(x.coords(), y.coords()), *dim as f64 - alpha);
                // One-sided corrections agree in the continuum; averaging
                // keeps the discrete evaluation symmetric exactly.
                let corr = if x.key() == y.key() {
                    exterior.sweep_potential(x.coords(), x.coords())?
                } else {
                    0.5 * (exterior.sweep_potential(y.coords(), x.coords())?
                        + exterior.sweep_potential(x.coords(), y.coords())?)
                };
                Ok(riesz - corr)
            }
        }
    }

    /// Points must lie strictly inside the open ball for Green variants.
    pub(crate) fn check_domain(&self, p: &[f64]) -> Result<()> {
        match self {
            Kernel::Riesz { .. } => Ok(()),
            Kernel::GreenBall2 { radius, .. } | Kernel::GreenAlphaBall { radius, .. } => {
                let r2: f64 = p.iter().map(|c| c * c).sum();
                if r2 < radius * radius {
                    Ok(())
                } else {
                    Err(Error::Kernel(format!(
                        "point at |x| = {:.6} lies outside the open ball of radius {radius}",
                        r2.sqrt()
                    )))
                }
            }
        }
    }

    /// Closed-form kernels (Riesz, reflection 2-Green) on raw coordinates;
    /// the caller has already validated dimensions and domain membership.
    pub(crate) fn eval_radial(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Riesz { alpha, dim } => {
                riesz_of_r2(dist_sq(x, y), *dim as f64 - alpha)
            }
            Kernel::GreenBall2 { radius, dim } => {
                let beta = *dim as f64 - 2.0;
                let lead = riesz_of_r2(dist_sq(x, y), beta);
                // (R/|y|)^{n−2} |x − R²y/|y|²|^{2−n} rewritten through
                // s = |x|²|y|² − 2R²⟨x,y⟩ + R⁴, which is symmetric in (x, y)
                // and handles y = 0 without a branch.
                let r2 = radius * radius;
                let s = sum_sq(x) * sum_sq(y) - 2.0 * r2 * dot_sym(x, y) + r2 * r2;
                lead - riesz_of_r2(s / r2, beta)
            }
            Kernel::GreenAlphaBall { .. } => {
                unreachable!("alpha-Green evaluation needs the exterior sweep; use eval()")
            }
        }
    }

    /// Average of the kernel over two independent points of a model cell of
    /// the same measure as `cell` (the equivalent-ball rule); the smooth
    /// correction of the Green variants is evaluated at the cell center.
    pub fn cell_self_energy(&self, cell: &Cell) -> Result<f64> {
        let beta = self.singularity_exponent();
        let d = cell.intrinsic_dim;
        if beta >= d as f64 {
            return Err(Error::Kernel(format!(
                "cell-averaged self-energy diverges: kernel singularity r^-{beta} on {d}-dimensional cells"
            )));
        }
        self.check_domain(cell.center.coords())?;
        let rho = (cell.weight_measure / ball_volume(d, 1.0)).powf(1.0 / d as f64);
        let lead = pair_mean_inverse_distance(d, beta)? * rho.powf(-beta);
        match self {
            Kernel::Riesz { .. } => Ok(lead),
            Kernel::GreenBall2 { radius, dim } => {
                let c2 = sum_sq(cell.center.coords());
                let s = (radius * radius - c2) / radius;
                Ok(lead - s.powf(2.0 - *dim as f64))
            }
            Kernel::GreenAlphaBall { exterior, .. } => {
                let c = cell.center.coords();
                Ok(lead - exterior.sweep_potential(c, c)?)
            }
        }
    }
}

#[inline]
pub(crate) fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

#[inline]
fn dot_sym(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// r^{−β} from r², with the common β handled without `powf`.
#[inline]
pub(crate) fn riesz_of_r2(r2: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        1.0 / r2.sqrt()
    } else if beta == 2.0 {
        1.0 / r2
    } else {
        r2.powf(-0.5 * beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiscretizedSet;

    #[test]
    fn riesz_direct_value() {
        let k = Kernel::riesz(1.0, 3).unwrap();
        let v = k
            .eval(&Point::from([0.0, 0.0, 0.0]), &Point::from([0.0, 0.0, 2.0]))
            .unwrap();
        assert_eq!(v, 0.25);
    }

    #[test]
    fn diagonal_is_infinite() {
        let x = Point::from([0.3, -0.1, 0.2]);
        for k in [Kernel::newtonian(), Kernel::green_ball(1.0, 3).unwrap()] {
            assert_eq!(k.eval(&x, &x).unwrap(), f64::INFINITY);
        }
    }

    #[test]
    fn green_ball_reflection_value() {
        let k = Kernel::green_ball(1.0, 3).unwrap();
        let v = k
            .eval(&Point::from([0.0, 0.0, 0.0]), &Point::from([0.0, 0.0, 0.5]))
            .unwrap();
        assert!((v - 1.0).abs() < 1e-14, "got {v}");
    }

    #[test]
    fn green_ball_vanishes_toward_boundary() {
        let k = Kernel::green_ball(1.0, 3).unwrap();
        let x = Point::from([0.2, 0.1, -0.3]);
        let g0 = k.eval(&x, &Point::from([0.5, 0.0, 0.0])).unwrap();
        // four approach directions, distance 1e-3 from the boundary
        let dirs: [[f64; 3]; 4] = [
            [1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.577350269, 0.577350269, 0.577350269],
            [0.0, 0.6, -0.8],
        ];
        for d in dirs {
            let y = Point::from([0.999 * d[0], 0.999 * d[1], 0.999 * d[2]]);
            let g = k.eval(&x, &y).unwrap();
            assert!(g > 0.0);
            assert!(g / g0 < 1e-2, "boundary ratio {}", g / g0);
        }
    }

    #[test]
    fn green_ball_rejects_outside_points() {
        let k = Kernel::green_ball(1.0, 3).unwrap();
        let inside = Point::from([0.1, 0.0, 0.0]);
        let outside = Point::from([1.5, 0.0, 0.0]);
        assert!(k.eval(&inside, &outside).is_err());
    }

    #[test]
    fn invalid_orders_rejected() {
        assert!(Kernel::riesz(2.5, 3).is_err());
        assert!(Kernel::riesz(2.0, 2).is_err()); // alpha < n fails
        assert!(Kernel::riesz(0.0, 3).is_err());
        assert!(Kernel::green_ball(1.0, 2).is_err());
    }

    #[test]
    fn bitwise_symmetry_on_random_pairs() {
        // deterministic quasi-random points via splitmix
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64
        };
        let kernels = [
            Kernel::riesz(1.0, 3).unwrap(),
            Kernel::newtonian(),
            Kernel::green_ball(1.0, 3).unwrap(),
        ];
        for k in &kernels {
            for _ in 0..1000 {
                let p = Point::from([0.5 * next() - 0.25, 0.5 * next() - 0.25, 0.5 * next() - 0.25]);
                let q = Point::from([0.5 * next() - 0.25, 0.5 * next() - 0.25, 0.5 * next() - 0.25]);
                let a = k.eval(&p, &q).unwrap();
                let b = k.eval(&q, &p).unwrap();
                assert_eq!(a.to_bits(), b.to_bits());
                assert!(a > 0.0);
            }
        }
    }

    #[test]
    fn offdiagonal_continuity() {
        let k = Kernel::riesz(1.0, 3).unwrap();
        let x = Point::from([0.0, 0.0, 0.0]);
        let y = Point::from([1.0, 0.3, -0.2]);
        let target = k.eval(&x, &y).unwrap();
        let y_near = Point::from([1.0 + 1e-6, 0.3, -0.2]);
        let v = k.eval(&x, &y_near).unwrap();
        assert!((v - target).abs() / target < 1e-5);
        let y_nearer = Point::from([1.0 + 1e-9, 0.3, -0.2]);
        let v2 = k.eval(&x, &y_nearer).unwrap();
        assert!((v2 - target).abs() / target < 1e-8);
    }

    #[test]
    fn riesz_decay_at_infinity() {
        let k = Kernel::riesz(1.0, 3).unwrap();
        let grid = DiscretizedSet::ball(&Point::from([0.0, 0.0, 0.0]), 1.0, 6).unwrap();
        let mut prev = f64::INFINITY;
        let mut last = 0.0;
        let mut first = 0.0;
        for (i, far) in [1e2, 1e3, 1e4].into_iter().enumerate() {
            let y = Point::from([far, 0.0, 0.0]);
            let sup = grid
                .cells()
                .iter()
                .map(|c| k.eval(&c.center, &y).unwrap())
                .fold(0.0, f64::max);
            assert!(sup < prev, "sup must decrease toward infinity");
            prev = sup;
            if i == 0 {
                first = sup;
            }
            last = sup;
        }
        assert!(last < 1e-4 * first);
    }

    #[test]
    fn self_energy_equivalent_ball_rule() {
        let k = Kernel::riesz(1.0, 3).unwrap();
        let cell = |v: f64| Cell {
            center: Point::from([0.0, 0.0, 0.0]),
            weight_measure: v,
            intrinsic_dim: 3,
        };
        // coefficient * rho^{-2} with rho = (3v/4pi)^{1/3}
        let v = 0.37;
        let rho = (3.0 * v / (4.0 * std::f64::consts::PI)).powf(1.0 / 3.0);
        let expect = 2.25 * rho.powf(-2.0);
        let got = k.cell_self_energy(&cell(v)).unwrap();
        assert!((got - expect).abs() / expect < 1e-12);

        // equal measures give equal self-energies
        assert_eq!(
            k.cell_self_energy(&cell(0.2)).unwrap(),
            k.cell_self_energy(&cell(0.2)).unwrap()
        );
        // halving the measure strictly increases the self-energy
        assert!(k.cell_self_energy(&cell(0.1)).unwrap() > k.cell_self_energy(&cell(0.2)).unwrap());
    }

    #[test]
    fn self_energy_divergent_combination_rejected() {
        // alpha=1 in R^3 on surface cells: r^{-2} average over a disk diverges
        let k = Kernel::riesz(1.0, 3).unwrap();
        let cell = Cell {
            center: Point::from([0.0, 0.0, 1.0]),
            weight_measure: 0.1,
            intrinsic_dim: 2,
        };
        assert!(k.cell_self_energy(&cell).is_err());
    }
}
