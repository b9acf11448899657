//! Deterministic nonnegativity-constrained quadratic programming:
//! minimize ½ wᵀGw − bᵀw subject to w ≥ 0, for symmetric positive-definite
//! G. This is the discrete Gauss-functional minimization behind sweeping;
//! the KKT conditions are the discrete potential-equality statement
//! (stationarity vanishes on the support, is nonnegative off it).
//!
//! The method is projected gradient with an adaptive two-point
//! (Barzilai–Borwein) step, a monotone backtracking safeguard, and an
//! active-set polish: once the support stabilizes, the equality-constrained
//! system on the inferred support is solved by Cholesky and the KKT
//! conditions are certified; if they fail, iteration resumes. Everything is
//! single-threaded, with fixed accumulation order, so runs are reproducible
//! bit for bit.


use ndarray::Array2;

use crate::linalg::{self, dot};
use crate::measures::GramMatrix;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Relative KKT tolerance (scaled by max(1, max|bᵢ|)).
    pub tol_kkt: f64,
    /// Iteration cap; 0 means the default 50·m.
    pub max_iter: usize,
    /// Optional feasible starting point (clipped to the cone); defaults to 0.
    pub start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_kkt: 1e-8,
            max_iter: 0,
            start: None,
        }
    }
}

/// Stationarity and complementarity measures at a point.
#[derive(Clone, Copy, Debug)]
pub struct KktReport {
    /// minᵢ wᵢ (0 for any iterate; negative only for externally supplied w).
    pub min_weight: f64,
    /// minᵢ (Gw − b)ᵢ; at the solution this is ≥ −tol·scale.
    pub min_stationarity: f64,
    /// |wᵀ(Gw − b)|; at the solution this is ≤ tol·scale·Σw.
    pub complementarity: f64,
}

#[derive(Clone, Debug)]
pub struct NnqpSolution {
    pub weights: Vec<f64>,
    /// ½ wᵀGw − bᵀw at the returned point.
    pub objective: f64,
    pub kkt: KktReport,
    pub iterations: usize,
    pub converged: bool,
    /// Cells with both |stationarity| and weight at tolerance level:
    /// boundary-degenerate, reported rather than resolved.
    pub degenerate: Vec<usize>,
    /// Objective after each accepted iteration (non-increasing).
    pub objective_trace: Vec<f64>,
}

/// Scale for the relative KKT thresholds.
fn kkt_scale(b: &[f64]) -> f64 {
    b.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

pub fn kkt_report(gram: &GramMatrix, b: &[f64], w: &[f64]) -> KktReport {
    let g = residual(gram, b, w);
    KktReport {
        min_weight: w.iter().copied().fold(f64::INFINITY, f64::min),
        min_stationarity: g.iter().copied().fold(f64::INFINITY, f64::min),
        complementarity: dot(w, &g).abs(),
    }
}

fn residual(gram: &GramMatrix, b: &[f64], w: &[f64]) -> Vec<f64> {
    let mut g = gram.matvec(w);
    for (gi, bi) in g.iter_mut().zip(b) {
        *gi -= bi;
    }
    g
}

/// Minimize ½ wᵀGw − bᵀw over w ≥ 0.
///
/// Returns the unique minimizer when the KKT conditions certify within
/// `tol_kkt`; otherwise `converged` is false and the caller decides.
pub fn solve(gram: &GramMatrix, b: &[f64], opts: &SolveOptions) -> Result<NnqpSolution> {
    let m = gram.size();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.len() });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Measure("right-hand side must be finite".into()));
    }
    if !(opts.tol_kkt > 0.0) {
        return Err(Error::Config {
            field: "tolerances.tol_kkt".into(),
            message: "must be positive".into(),
        });
    }
    let max_iter = if opts.max_iter == 0 { 50 * m.max(1) } else { opts.max_iter };
    let scale = kkt_scale(b);
    let tol = opts.tol_kkt;

    let mut w: Vec<f64> = match &opts.start {
        Some(s) => {
            if s.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: s.len() });
            }
            s.iter().map(|v| v.max(0.0)).collect()
        }
        None => vec![0.0; m],
    };
    let mut g = residual(gram, b, &w);
    let mut obj = 0.5 * (dot(&w, &g) - dot(&w, b));

    let mut trace = Vec::new();
    let mut prev_step: Option<(Vec<f64>, Vec<f64>)> = None; // (Δw, Δg)
    let mut prev_support: Option<Vec<usize>> = None;
    let mut last_polished: Option<Vec<usize>> = None;
    let mut polish_cache = PolishCache::default();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        iterations = iter;
        let sum_w: f64 = w.iter().sum();
        let min_stat = g.iter().copied().fold(f64::INFINITY, f64::min);
        let comp = dot(&w, &g).abs();
        if min_stat >= -tol * scale && comp <= tol * scale * sum_w {
            converged = true;
            break;
        }

        let support: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0).collect();
        if prev_support.as_deref() == Some(&support)
            && last_polished.as_deref() != Some(&support)
            && !support.is_empty()
        {
            last_polished = Some(support.clone());
            if let Some((refined, z)) = polish_cache.refine_support(gram, b, support.clone())? {
                let mut w_cand = vec![0.0; m];
                for (&i, &zi) in refined.iter().zip(&z) {
                    w_cand[i] = zi;
                }
                let g_cand = residual(gram, b, &w_cand);
                let obj_cand = 0.5 * (dot(&w_cand, &g_cand) - dot(&w_cand, b));
                if obj_cand <= obj + 1e-12 * (1.0 + obj.abs()) {
                    w = w_cand;
                    g = g_cand;
                    obj = obj_cand;
                    trace.push(obj);
                    prev_support = Some((0..m).filter(|&i| w[i] > 0.0).collect());
                    prev_step = None;
                    continue;
                }
            }
        }

        // Two-point (Barzilai–Borwein) step; exact Cauchy step when no
        // history is available. Δg = GΔw, so the denominator is positive.
        let tau0 = match &prev_step {
            Some((dw, dg)) => {
                let num = dot(dw, dw);
                let den = dot(dw, dg);
                if den > 0.0 && num > 0.0 {
                    num / den
                } else {
                    cauchy_step(gram, &g)
                }
            }
            None => cauchy_step(gram, &g),
        };

        let mut tau = tau0;
        let mut accepted = false;
        for _ in 0..60 {
            let w_new: Vec<f64> = w
                .iter()
                .zip(&g)
                .map(|(wi, gi)| (wi - tau * gi).max(0.0))
                .collect();
            if w_new == w {
                break; // no movement possible along this direction
            }
            let g_new = residual(gram, b, &w_new);
            let obj_new = 0.5 * (dot(&w_new, &g_new) - dot(&w_new, b));
            if obj_new <= obj + 1e-14 * (1.0 + obj.abs()) {
                let dw: Vec<f64> = w_new.iter().zip(&w).map(|(a, c)| a - c).collect();
                let dg: Vec<f64> = g_new.iter().zip(&g).map(|(a, c)| a - c).collect();
                prev_step = Some((dw, dg));
                w = w_new;
                g = g_new;
                obj = obj_new;
                trace.push(obj);
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        prev_support = Some(support);
        if !accepted {
            // direction exhausted; allow one polish retry on the current
            // support before giving up
            if last_polished.as_deref() == prev_support.as_deref() {
                break;
            }
            last_polished = None;
        }
    }

    let sum_w: f64 = w.iter().sum();
    let kkt = KktReport {
        min_weight: w.iter().copied().fold(f64::INFINITY, f64::min),
        min_stationarity: g.iter().copied().fold(f64::INFINITY, f64::min),
        complementarity: dot(&w, &g).abs(),
    };
    if !converged {
        converged = kkt.min_stationarity >= -tol * scale && kkt.complementarity <= tol * scale * sum_w;
    }
    let degenerate = (0..m)
        .filter(|&i| g[i].abs() <= tol * scale && w[i] <= tol * sum_w)
        .collect();
    Ok(NnqpSolution {
        objective: obj,
        kkt,
        iterations,
        converged,
        degenerate,
        objective_trace: trace,
        weights: w,
    })
}

fn cauchy_step(gram: &GramMatrix, g: &[f64]) -> f64 {
    let gg = dot(g, g);
    if gg == 0.0 {
        return 1.0;
    }
    let gqg = dot(g, &gram.matvec(g));
    if gqg > 0.0 {
        gg / gqg
    } else {
        1.0
    }
}

/// Equality-constrained solves on an inferred support. Negative components
/// of the equality solution are dropped from the support and the system is
/// re-solved (Lawson–Hanson style), so one polish call lands on a feasible
/// vertex instead of bouncing back to gradient iterations. Small active
/// sets go through a dual (Schur complement) update of the cached full
/// factor, reusing cached columns of G⁻¹; large ones refactor the support
/// submatrix directly.
#[derive(Default)]
struct PolishCache {
    full_y: Option<Vec<f64>>, // G⁻¹ b, reused across polishes of one solve
}

impl PolishCache {
    fn refine_support(
        &mut self,
        gram: &GramMatrix,
        b: &[f64],
        mut support: Vec<usize>,
    ) -> Result<Option<(Vec<usize>, Vec<f64>)>> {
        for _ in 0..60 {
            if support.is_empty() {
                return Ok(None);
            }
            let z = self.solve_on_support(gram, b, &support)?;
            if z.iter().all(|v| *v >= 0.0) {
                return Ok(Some((support, z)));
            }
            let kept: Vec<usize> = support
                .iter()
                .zip(&z)
                .filter(|(_, zi)| **zi >= 0.0)
                .map(|(i, _)| *i)
                .collect();
            if kept.len() == support.len() {
                return Ok(Some((support, z)));
            }
            support = kept;
        }
        Ok(None)
    }

    fn solve_on_support(
        &mut self,
        gram: &GramMatrix,
        b: &[f64],
        support: &[usize],
    ) -> Result<Vec<f64>> {
        let m = gram.size();
        let s = support.len();
        let k = m - s;
        if k == 0 {
            let chol = gram.cholesky()?;
            return Ok(chol.solve(b));
        }
        // dual path: z = (G⁻¹b − G⁻¹ E_A λ)_S with (G⁻¹)_AA λ = (G⁻¹b)_A;
        // cached inverse columns make this k dot products plus a k×k solve
        let dual_cost = (k as f64).powi(3) / 3.0 + (k as f64) * (m as f64);
        let primal_cost = (s as f64).powi(3) / 3.0;
        if dual_cost < primal_cost {
            let chol = gram.cholesky()?;
            if self.full_y.is_none() {
                self.full_y = Some(chol.solve(b));
            }
            let y = self.full_y.as_ref().unwrap();
            let mut on_support = vec![false; m];
            for &i in support {
                on_support[i] = true;
            }
            let active: Vec<usize> = (0..m).filter(|&i| !on_support[i]).collect();
            let cols = active
                .iter()
                .map(|&a| gram.inverse_column(a))
                .collect::<Result<Vec<_>>>()?;
            let mut mat = Array2::zeros((k, k));
            for i in 0..k {
                for j in 0..k {
                    mat[(i, j)] = cols[j][active[i]];
                }
            }
            let mchol = linalg::cholesky(&mat)?;
            let ya: Vec<f64> = active.iter().map(|&a| y[a]).collect();
            let lam = mchol.solve(&ya);
            let z: Vec<f64> = support
                .iter()
                .map(|&i| {
                    let mut v = y[i];
                    for (cj, lj) in cols.iter().zip(&lam) {
                        v -= cj[i] * lj;
                    }
                    v
                })
                .collect();
            return Ok(z);
        }
        // primal path: factor the support submatrix directly
        let mut sub = Array2::zeros((s, s));
        let e = gram.entries();
        for (ii, &i) in support.iter().enumerate() {
            for (jj, &j) in support.iter().enumerate() {
                sub[(ii, jj)] = e[(i, j)];
            }
        }
        let chol = linalg::cholesky(&sub)?;
        let bs: Vec<f64> = support.iter().map(|&i| b[i]).collect();
        Ok(chol.solve(&bs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn gram2(a: f64, b_: f64, c: f64) -> GramMatrix {
        GramMatrix::from_entries(array![[a, b_], [b_, c]], "test").unwrap()
    }

    #[test]
    fn one_variable_interior() {
        let g = GramMatrix::from_entries(array![[2.0]], "test").unwrap();
        let sol = solve(&g, &[4.0], &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.weights[0] - 2.0).abs() < 1e-12);
        assert!((sol.objective + 4.0).abs() < 1e-12);
    }

    #[test]
    fn one_variable_active() {
        let g = GramMatrix::from_entries(array![[2.0]], "test").unwrap();
        let sol = solve(&g, &[-1.0], &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.weights[0], 0.0);
        assert!((sol.kkt.min_stationarity - 1.0).abs() < 1e-15);
        assert_eq!(sol.kkt.complementarity, 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn two_variable_interior() {
        let g = gram2(2.0, 1.0, 2.0);
        let sol = solve(&g, &[1.0, 1.0], &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        for w in &sol.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn kkt_report_on_exact_solutions() {
        let g = GramMatrix::from_entries(array![[2.0]], "test").unwrap();
        let r = kkt_report(&g, &[4.0], &[2.0]);
        assert_eq!(r.min_weight, 2.0);
        assert_eq!(r.min_stationarity, 0.0);
        assert_eq!(r.complementarity, 0.0);

        let r0 = kkt_report(&g, &[3.0], &[0.0]);
        assert_eq!(r0.min_stationarity, -3.0);
    }

    #[test]
    fn perturbing_zero_coordinate_degrades_complementarity() {
        // at w = 0 with b = [-1], stationarity is g = 1; complementarity of
        // w = [eps] grows by eps·|g| to first order
        let g = GramMatrix::from_entries(array![[2.0]], "test").unwrap();
        let b = [-1.0];
        let base = kkt_report(&g, &b, &[0.0]).complementarity;
        assert_eq!(base, 0.0);
        let eps = 1e-6;
        let pert = kkt_report(&g, &b, &[eps]).complementarity;
        let g_at_zero = 1.0;
        assert!((pert - eps * g_at_zero).abs() < 1e-11, "first-order growth, got {pert}");
    }

    #[test]
    fn monotone_objective_trace() {
        let g = gram2(3.0, 1.0, 2.0);
        let sol = solve(&g, &[5.0, -2.0], &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        for pair in sol.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-13 * (1.0 + pair[0].abs()));
        }
    }

    #[test]
    fn uniqueness_from_different_starts() {
        let g = gram2(2.5, 0.7, 1.8);
        let b = [1.0, -0.4];
        let a = solve(&g, &b, &SolveOptions::default()).unwrap();
        let start: Vec<f64> = b.iter().map(|v| v.max(0.0) * 1.5).collect();
        let c = solve(
            &g,
            &b,
            &SolveOptions {
                start: Some(start),
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in a.weights.iter().zip(&c.weights) {
            assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0));
        }
    }

    #[test]
    fn positive_homogeneity() {
        let g = gram2(2.0, 0.5, 3.0);
        let b = [2.0, 1.0];
        let sol1 = solve(&g, &b, &SolveOptions::default()).unwrap();
        let sb: Vec<f64> = b.iter().map(|v| 7.5 * v).collect();
        let sol2 = solve(&g, &sb, &SolveOptions::default()).unwrap();
        for (x, y) in sol1.weights.iter().zip(&sol2.weights) {
            assert!((7.5 * x - y).abs() <= 1e-10 * (7.5 * x).abs().max(1.0));
        }
    }
}
