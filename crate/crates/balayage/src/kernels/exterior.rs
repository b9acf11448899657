//! Exterior Riesz sweeps backing the fractional α-Green kernel.
//!
//! The α-Green kernel of the ball B(0, R) subtracts from the Riesz kernel
//! the potential of the unit Dirac at the source swept onto the complement
//! of the ball. The complement is truncated to the annulus R ≤ |z| ≤ r_out
//! and discretized once; each source's swept measure is one nonnegative
//! quadratic program on that grid and is cached by the exact source
//! coordinates, since Gram assembly reuses every column's sweep.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::geometry::{coords_key, DiscretizedSet, Point, PointKey};
use crate::kernels::{riesz_of_r2, Kernel};
use crate::measures::GramMatrix;
use crate::solver::{self, SolveOptions};
use crate::{Error, Result};

/// Truncation and discretization of the ball complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExteriorConfig {
    /// Truncation radius of the complement; at least 4·R.
    pub r_out: f64,
    /// Lattice resolution of the annulus grid (spacing 2·r_out/resolution).
    pub resolution: u32,
}

/// Shared state for sweeping Dirac measures onto the truncated complement.
///
/// The cache maps exact source coordinates to the swept weight vector; reads
/// are concurrent, insertion takes the write lock.
pub struct ExteriorSweep {
    annulus: Arc<DiscretizedSet>,
    riesz: Kernel,
    ball_radius: f64,
    r_out: f64,
    resolution: u32,
    beta: f64,
    gram: OnceLock<Arc<GramMatrix>>,
    cache: RwLock<HashMap<PointKey, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for ExteriorSweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExteriorSweep")
            .field("r_out", &self.r_out)
            .field("resolution", &self.resolution)
            .field("cells", &self.annulus.len())
            .field("cached_sources", &self.cache.read().unwrap().len())
            .finish()
    }
}

impl ExteriorSweep {
    pub(crate) fn new(alpha: f64, dim: usize, ball_radius: f64, cfg: ExteriorConfig) -> Result<Self> {
        if cfg.r_out < 4.0 * ball_radius {
            return Err(Error::Kernel(format!(
                "exterior truncation radius must be at least 4R = {}, got {}",
                4.0 * ball_radius,
                cfg.r_out
            )));
        }
        let center = Point::new(vec![0.0; dim])?;
        let annulus = Arc::new(DiscretizedSet::annulus(
            &center,
            ball_radius,
            cfg.r_out,
            cfg.resolution,
        )?);
        Ok(ExteriorSweep {
            annulus,
            riesz: Kernel::riesz(alpha, dim)?,
            ball_radius,
            r_out: cfg.r_out,
            resolution: cfg.resolution,
            beta: dim as f64 - alpha,
            gram: OnceLock::new(),
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn annulus(&self) -> &Arc<DiscretizedSet> {
        &self.annulus
    }

    pub fn r_out(&self) -> f64 {
        self.r_out
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    fn gram(&self) -> Result<Arc<GramMatrix>> {
        if let Some(g) = self.gram.get() {
            return Ok(g.clone());
        }
        let g = Arc::new(GramMatrix::assemble(&self.annulus, &self.riesz)?);
        let _ = self.gram.set(g.clone());
        Ok(self.gram.get().expect("just set").clone())
    }

    /// Swept weights of the unit Dirac at `source` (inside the open ball).
    pub fn swept_weights(&self, source: &[f64]) -> Result<Arc<Vec<f64>>> {
        let r2: f64 = source.iter().map(|c| c * c).sum();
        if r2 >= self.ball_radius * self.ball_radius {
            return Err(Error::Kernel(format!(
                "exterior sweep source at |x| = {:.6} must lie inside the ball of radius {}",
                r2.sqrt(),
                self.ball_radius
            )));
        }
        let key = coords_key(source);
        if let Some(w) = self.cache.read().unwrap().get(&key) {
            return Ok(w.clone());
        }
        let gram = self.gram()?;
        let b: Vec<f64> = self
            .annulus
            .cells()
            .iter()
            .map(|c| self.riesz.eval_radial(source, c.center.coords()))
            .collect();
        let sol = solver::solve(&gram, &b, &SolveOptions::default())?;
        if !sol.converged {
            return Err(Error::NonConvergence {
                iterations: sol.iterations,
                min_stationarity: sol.kkt.min_stationarity,
                complementarity: sol.kkt.complementarity,
            });
        }
        let w = Arc::new(sol.weights);
        self.cache.write().unwrap().insert(key, w.clone());
        Ok(w)
    }

    /// Potential of the swept Dirac at `source`, evaluated at `at`.
    pub fn sweep_potential(&self, source: &[f64], at: &[f64]) -> Result<f64> {
        let w = self.swept_weights(source)?;
        let mut s = 0.0;
        for (wk, cell) in w.iter().zip(self.annulus.cells()) {
            s += wk * riesz_of_r2(crate::geometry::dist_sq(at, cell.center.coords()), self.beta);
        }
        Ok(s)
    }

    /// Total mass of the swept Dirac at `source`.
    pub fn swept_mass(&self, source: &[f64]) -> Result<f64> {
        Ok(self.swept_weights(source)?.iter().sum())
    }
}
