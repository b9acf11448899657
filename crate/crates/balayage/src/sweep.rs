//! Sweeping operators: balayage of measures onto discretized sets,
//! equilibrium measures, Dirac sweeps, the integral representation, the
//! energy symmetry relation, monotone refinement sequences, and
//! minimal-mass verification against feasible witnesses.
//!
//! Sweeping a source ω onto a target A solves the nonnegative quadratic
//! program with the target's Gram matrix G and right-hand side
//! bᵢ = U^ω(cellᵢ). The KKT conditions of that program are the discrete
//! defining equality of balayage: stationarity vanishes on charged cells
//! (the swept potential matches U^ω there) and is nonnegative on the rest
//! of the target; off the target the swept potential is dominated by U^ω.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::geometry::{DiscretizedSet, Point};
use crate::kernels::Kernel;
use crate::measures::{mutual_energy, DiscreteMeasure, GramMatrix};
use crate::solver::{self, KktReport, NnqpSolution, SolveOptions};
use crate::{Error, Result};

/// Frostman constant of the implemented kernels: the maximum principle
/// holds with h = 1. Kept explicit so mass-bound violations are reported
/// against a stated constant.
pub const FROSTMAN_H: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub solve: SolveOptions,
    /// Maximum-principle constant in the bound `mass ≤ h·source·(1+tol)`.
    pub frostman_h: f64,
    /// Relative slack in the mass bound, covering discretization error.
    pub mass_tol_rel: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solve: SolveOptions::default(),
            frostman_h: FROSTMAN_H,
            mass_tol_rel: 1e-3,
        }
    }
}

/// A source to be swept: either a discrete measure on a grid or a finite
/// combination of point (Dirac) masses. Point masses carry no cell, so
/// their potentials are exact kernel evaluations and their energy is
/// infinite.
#[derive(Clone, Debug)]
pub enum Source {
    Measure(DiscreteMeasure),
    Diracs(Vec<(Point, f64)>),
}

impl Source {
    pub fn dirac(x: Point) -> Self {
        Source::Diracs(vec![(x, 1.0)])
    }

    pub fn diracs(points: Vec<(Point, f64)>) -> Self {
        Source::Diracs(points)
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Source::Measure(m) => Some(m.support().dim()),
            Source::Diracs(pts) => pts.first().map(|(p, _)| p.dim()),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Source::Measure(m) => m.total_mass(),
            Source::Diracs(pts) => pts.iter().map(|(_, w)| w).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Source::Measure(m) => m.is_zero(),
            Source::Diracs(pts) => pts.iter().all(|(_, w)| *w == 0.0),
        }
    }

    pub fn potential(&self, kernel: &Kernel, x: &Point) -> Result<f64> {
        match self {
            Source::Measure(m) => m.potential(kernel, x),
            Source::Diracs(pts) => {
                let mut s = 0.0;
                for (p, w) in pts {
                    if *w != 0.0 {
                        s += w * kernel.eval(p, x)?;
                    }
                }
                Ok(s)
            }
        }
    }

    /// I(σ, μ) against a discrete measure; for Dirac sources this is the
    /// weighted sum of the measure's potential at the points.
    pub fn mutual_energy_with(&self, mu: &DiscreteMeasure, kernel: &Kernel) -> Result<f64> {
        match self {
            Source::Measure(m) => mutual_energy(m, mu, kernel),
            Source::Diracs(pts) => {
                let mut s = 0.0;
                for (p, w) in pts {
                    if *w != 0.0 {
                        s += w * mu.potential(kernel, p)?;
                    }
                }
                Ok(s)
            }
        }
    }

    /// Energy I(σ, σ); infinite for nonzero point masses.
    pub fn energy(&self, kernel: &Kernel) -> Result<f64> {
        match self {
            Source::Measure(m) => m.energy(kernel),
            Source::Diracs(pts) => Ok(if pts.iter().any(|(_, w)| *w > 0.0) {
                f64::INFINITY
            } else {
                0.0
            }),
        }
    }
}

impl From<DiscreteMeasure> for Source {
    fn from(m: DiscreteMeasure) -> Self {
        Source::Measure(m)
    }
}

/// Solver diagnostics carried alongside a swept measure.
#[derive(Clone, Debug)]
pub struct SolveDiagnostics {
    pub objective: f64,
    pub kkt: KktReport,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: Vec<usize>,
}

impl From<&NnqpSolution> for SolveDiagnostics {
    fn from(s: &NnqpSolution) -> Self {
        SolveDiagnostics {
            objective: s.objective,
            kkt: s.kkt,
            iterations: s.iterations,
            converged: s.converged,
            degenerate: s.degenerate.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub swept: DiscreteMeasure,
    pub diagnostics: SolveDiagnostics,
    pub source_mass: f64,
    pub swept_mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SourceRelation {
    Disjoint,
    OnTarget,
}

/// A target set with its assembled Gram matrix; reuses the matrix and its
/// factorization across many sweeps onto the same set.
pub struct SweepOperator {
    target: Arc<DiscretizedSet>,
    kernel: Kernel,
    gram: Arc<GramMatrix>,
}

impl SweepOperator {
    pub fn new(target: Arc<DiscretizedSet>, kernel: Kernel) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::Geometry("cannot sweep onto an empty target".into()));
        }
        let gram = Arc::new(GramMatrix::assemble(&target, &kernel)?);
        Ok(SweepOperator { target, kernel, gram })
    }

    pub fn target(&self) -> &Arc<DiscretizedSet> {
        &self.target
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn gram(&self) -> &Arc<GramMatrix> {
        &self.gram
    }

    fn relation(&self, source: &Source) -> Result<SourceRelation> {
        let keys: HashSet<_> = self
            .target
            .cells()
            .iter()
            .map(|c| c.center.key())
            .collect();
        match source {
            Source::Measure(m) => {
                let mut on = 0usize;
                let mut off = 0usize;
                for (w, cell) in m.weights().iter().zip(m.support().cells()) {
                    if *w == 0.0 {
                        continue;
                    }
                    if keys.contains(&cell.center.key()) {
                        on += 1;
                    } else {
                        off += 1;
                    }
                }
                match (on, off) {
                    (0, _) => Ok(SourceRelation::Disjoint),
                    (_, 0) => Ok(SourceRelation::OnTarget),
                    _ => Err(Error::MixedOverlap),
                }
            }
            Source::Diracs(pts) => {
                if pts
                    .iter()
                    .any(|(p, w)| *w != 0.0 && keys.contains(&p.key()))
                {
                    Err(Error::SourceOnTarget)
                } else {
                    Ok(SourceRelation::Disjoint)
                }
            }
        }
    }

    /// Sweep a source onto the target (the balayage ω ↦ ω^A).
    pub fn sweep_source(&self, source: &Source, opts: &SweepOptions) -> Result<SweepResult> {
        if source.is_zero() {
            return Err(Error::ZeroSource);
        }
        if let Some(d) = source.dim() {
            if d != self.target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.target.dim(),
                    got: d,
                });
            }
        }
        self.relation(source)?;
        let b = self
            .target
            .cells()
            .iter()
            .map(|c| source.potential(&self.kernel, &c.center))
            .collect::<Result<Vec<f64>>>()?;
        self.sweep_raw(&b, source.total_mass(), opts)
    }

    pub fn sweep(&self, omega: &DiscreteMeasure, opts: &SweepOptions) -> Result<SweepResult> {
        self.sweep_source(&Source::Measure(omega.clone()), opts)
    }

    /// Sweep the unit Dirac at `x`; errors when `x` is a target cell center.
    pub fn dirac_sweep(&self, x: &Point, opts: &SweepOptions) -> Result<SweepResult> {
        self.sweep_source(&Source::dirac(x.clone()), opts)
    }

    fn sweep_raw(&self, b: &[f64], source_mass: f64, opts: &SweepOptions) -> Result<SweepResult> {
        let sol = solver::solve(&self.gram, b, &opts.solve)?;
        if !sol.converged {
            return Err(Error::NonConvergence {
                iterations: sol.iterations,
                min_stationarity: sol.kkt.min_stationarity,
                complementarity: sol.kkt.complementarity,
            });
        }
        let swept_mass: f64 = sol.weights.iter().sum();
        let bound = opts.frostman_h * source_mass * (1.0 + opts.mass_tol_rel);
        if swept_mass > bound {
            return Err(Error::MassBound { swept: swept_mass, bound });
        }
        if !(swept_mass > 0.0) {
            return Err(Error::Measure(
                "swept mass vanished for a nonzero source on a target of positive capacity".into(),
            ));
        }
        let diagnostics = SolveDiagnostics::from(&sol);
        Ok(SweepResult {
            swept: DiscreteMeasure::new(self.target.clone(), sol.weights)?,
            diagnostics,
            source_mass,
            swept_mass,
        })
    }

    /// Equilibrium (capacitary) measure: unit target potential; the total
    /// mass equals the energy and is the capacity of the target.
    pub fn equilibrium(&self, opts: &SweepOptions) -> Result<Equilibrium> {
        let b = vec![1.0; self.target.len()];
        let sol = solver::solve(&self.gram, &b, &opts.solve)?;
        if !sol.converged {
            return Err(Error::NonConvergence {
                iterations: sol.iterations,
                min_stationarity: sol.kkt.min_stationarity,
                complementarity: sol.kkt.complementarity,
            });
        }
        let mass: f64 = sol.weights.iter().sum();
        let energy = self.gram.quad_form(&sol.weights);
        if (mass - energy).abs() > 1e-8 * mass {
            return Err(Error::Measure(format!(
                "equilibrium normalization failed: mass {mass} vs energy {energy}"
            )));
        }
        let diagnostics = SolveDiagnostics::from(&sol);
        Ok(Equilibrium {
            measure: DiscreteMeasure::new(self.target.clone(), sol.weights)?,
            capacity: mass,
            energy,
            diagnostics,
        })
    }

    /// Superposition of Dirac sweeps Σⱼ ωⱼ·(ε_{yⱼ})^A — the integral
    /// representation of the balayage of a source concentrated off the
    /// target.
    pub fn integral_representation(
        &self,
        source: &Source,
        opts: &SweepOptions,
    ) -> Result<DiscreteMeasure> {
        if source.is_zero() {
            return Err(Error::ZeroSource);
        }
        if self.relation(source)? != SourceRelation::Disjoint {
            return Err(Error::Measure(
                "integral representation requires a source concentrated off the target".into(),
            ));
        }
        let atoms: Vec<(Point, f64)> = match source {
            Source::Diracs(pts) => pts.clone(),
            Source::Measure(m) => m
                .weights()
                .iter()
                .zip(m.support().cells())
                .filter(|(w, _)| **w != 0.0)
                .map(|(w, c)| (c.center.clone(), *w))
                .collect(),
        };
        let mut acc = vec![0.0; self.target.len()];
        for (p, w) in &atoms {
            if *w == 0.0 {
                continue;
            }
            let part = self.dirac_sweep(p, opts)?;
            for (a, pw) in acc.iter_mut().zip(part.swept.weights()) {
                *a += w * pw;
            }
        }
        DiscreteMeasure::new(self.target.clone(), acc)
    }

    /// Relative defect of the energy symmetry relation
    /// I(ω^A, λ) = I(λ^A, ω) for sources off the target.
    pub fn verify_symmetry(
        &self,
        omega: &Source,
        lambda: &Source,
        opts: &SweepOptions,
    ) -> Result<f64> {
        for s in [omega, lambda] {
            if self.relation(s)? != SourceRelation::Disjoint {
                return Err(Error::Measure(
                    "symmetry verification requires sources off the target".into(),
                ));
            }
        }
        let swept_omega = self.sweep_source(omega, opts)?.swept;
        let swept_lambda = self.sweep_source(lambda, opts)?.swept;
        let a = lambda.mutual_energy_with(&swept_omega, &self.kernel)?;
        let b = omega.mutual_energy_with(&swept_lambda, &self.kernel)?;
        Ok((a - b).abs() / a.abs().max(b.abs()).max(1.0))
    }

    /// Feasible-witness construction: ν qualifies for the minimal-mass class
    /// when U^ν ≥ U^ω on every target cell, within the KKT tolerance.
    pub fn gamma_witness(
        &self,
        omega: &Source,
        candidate: Source,
        opts: &SweepOptions,
    ) -> Result<GammaWitness> {
        let mut margin = f64::INFINITY;
        let mut scale = 1.0_f64;
        for c in self.target.cells() {
            let u_omega = omega.potential(&self.kernel, &c.center)?;
            let u_wit = candidate.potential(&self.kernel, &c.center)?;
            margin = margin.min(u_wit - u_omega);
            scale = scale.max(u_omega.abs());
        }
        if margin < -opts.solve.tol_kkt * scale {
            return Err(Error::InfeasibleWitness { margin });
        }
        Ok(GammaWitness {
            source: candidate,
            feasibility_margin: margin,
        })
    }

    /// Minimal-mass, minimal-potential, and minimal-norm verification of a
    /// sweep against feasible witnesses, evaluated at 50 shell probes.
    pub fn gamma_mass_check(
        &self,
        omega: &Source,
        witnesses: Vec<GammaWitness>,
        opts: &SweepOptions,
    ) -> Result<GammaMassReport> {
        let result = self.sweep_source(omega, opts)?;
        let probes = probe_shell(&self.target, 50);
        let swept_energy = self.gram.quad_form(result.swept.weights());
        let mut reports = Vec::new();
        for witness in witnesses {
            let mass = witness.source.total_mass();
            let energy = witness.source.energy(&self.kernel)?;
            let mut min_potential_margin = f64::INFINITY;
            for p in &probes {
                let u_sweep = result.swept.potential(&self.kernel, p)?;
                let u_wit = witness.source.potential(&self.kernel, p)?;
                min_potential_margin = min_potential_margin.min(u_wit - u_sweep);
            }
            let mass_ok = result.swept_mass <= mass * (1.0 + 1e-6);
            let potential_ok = min_potential_margin >= -1e-6 * 1.0_f64.max(result.swept_mass);
            let norm_ok = swept_energy.sqrt() <= energy.sqrt() * (1.0 + 1e-6);
            reports.push(WitnessReport {
                feasibility_margin: witness.feasibility_margin,
                mass,
                energy,
                min_potential_margin,
                mass_ok,
                potential_ok,
                norm_ok,
            });
        }
        let all_ok = reports.iter().all(|r| r.mass_ok && r.potential_ok && r.norm_ok);
        Ok(GammaMassReport {
            swept_mass: result.swept_mass,
            swept_energy,
            witnesses: reports,
            all_ok,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub measure: DiscreteMeasure,
    /// Total mass of the equilibrium measure = its energy = the capacity.
    pub capacity: f64,
    pub energy: f64,
    pub diagnostics: SolveDiagnostics,
}

/// A source whose potential dominates the swept source's potential on the
/// target (a member of the minimal-mass comparison class).
#[derive(Clone, Debug)]
pub struct GammaWitness {
    pub source: Source,
    /// min over target cells of U^ν − U^ω; nonnegative up to tolerance.
    pub feasibility_margin: f64,
}

#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub feasibility_margin: f64,
    pub mass: f64,
    pub energy: f64,
    /// min over probes of U^witness − U^sweep.
    pub min_potential_margin: f64,
    pub mass_ok: bool,
    pub potential_ok: bool,
    pub norm_ok: bool,
}

#[derive(Clone, Debug)]
pub struct GammaMassReport {
    pub swept_mass: f64,
    pub swept_energy: f64,
    pub witnesses: Vec<WitnessReport>,
    pub all_ok: bool,
}

// ---- functional entry points over one-off operators ----

pub fn sweep(
    omega: &DiscreteMeasure,
    target: &Arc<DiscretizedSet>,
    kernel: &Kernel,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    SweepOperator::new(target.clone(), kernel.clone())?.sweep(omega, opts)
}

pub fn dirac_sweep(
    x: &Point,
    target: &Arc<DiscretizedSet>,
    kernel: &Kernel,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    SweepOperator::new(target.clone(), kernel.clone())?.dirac_sweep(x, opts)
}

pub fn equilibrium(
    target: &Arc<DiscretizedSet>,
    kernel: &Kernel,
    opts: &SweepOptions,
) -> Result<Equilibrium> {
    SweepOperator::new(target.clone(), kernel.clone())?.equilibrium(opts)
}

pub fn integral_representation(
    source: &Source,
    target: &Arc<DiscretizedSet>,
    kernel: &Kernel,
    opts: &SweepOptions,
) -> Result<DiscreteMeasure> {
    SweepOperator::new(target.clone(), kernel.clone())?.integral_representation(source, opts)
}

pub fn verify_symmetry(
    omega: &Source,
    lambda: &Source,
    target: &Arc<DiscretizedSet>,
    kernel: &Kernel,
    opts: &SweepOptions,
) -> Result<f64> {
    SweepOperator::new(target.clone(), kernel.clone())?.verify_symmetry(omega, lambda, opts)
}

/// One level of a monotone refinement sequence.
#[derive(Clone, Debug)]
pub struct RefinementLevel {
    pub resolution: u32,
    pub cells: usize,
    pub swept_mass: f64,
    /// Swept potential at each probe point.
    pub potentials: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RefinementSequence {
    pub levels: Vec<RefinementLevel>,
}

impl RefinementSequence {
    /// Rows: levels, columns: probes.
    pub fn potentials_matrix(&self) -> Vec<Vec<f64>> {
        self.levels.iter().map(|l| l.potentials.clone()).collect()
    }
}

/// Sweep onto each member of a nested family K₁ ⊂ K₂ ⊂ … and evaluate the
/// swept potentials at the probes. The family must nest as point sets
/// (coarse cell centers appear among fine ones exactly), as produced by
/// [`DiscretizedSet::nested_annuli`].
pub fn refinement_sequence(
    source: &Source,
    targets: &[Arc<DiscretizedSet>],
    kernel: &Kernel,
    probes: &[Point],
    opts: &SweepOptions,
) -> Result<RefinementSequence> {
    if targets.is_empty() {
        return Err(Error::Geometry(
            "refinement sequence needs at least one target".into(),
        ));
    }
    for pair in targets.windows(2) {
        let fine: HashSet<_> = pair[1].cells().iter().map(|c| c.center.key()).collect();
        if !pair[0]
            .cells()
            .iter()
            .all(|c| fine.contains(&c.center.key()))
        {
            return Err(Error::NotNested);
        }
    }
    let mut levels = Vec::with_capacity(targets.len());
    for target in targets {
        let op = SweepOperator::new(target.clone(), kernel.clone())?;
        let result = op.sweep_source(source, opts)?;
        let potentials = probes
            .iter()
            .map(|p| result.swept.potential(kernel, p))
            .collect::<Result<Vec<f64>>>()?;
        levels.push(RefinementLevel {
            resolution: target.resolution(),
            cells: target.len(),
            swept_mass: result.swept_mass,
            potentials,
        });
    }
    Ok(RefinementSequence { levels })
}

/// Quasi-random (Halton) probe points in a shell around the target,
/// excluding a guard distance of one cell diameter.
pub fn probe_shell(set: &DiscretizedSet, count: usize) -> Vec<Point> {
    let centroid = set.centroid();
    let rmax = set.bounding_radius();
    let guard = set.max_cell_diameter();
    let lo = rmax + guard;
    let hi = lo + 0.75 * rmax.max(1.0);
    let c = centroid.coords();
    (1..=count)
        .map(|i| {
            let r = lo + (hi - lo) * halton(i, 5);
            let coords = match set.dim() {
                2 => {
                    let phi = 2.0 * PI * halton(i, 2);
                    vec![c[0] + r * phi.cos(), c[1] + r * phi.sin()]
                }
                _ => {
                    let theta = (1.0 - 2.0 * halton(i, 2)).acos();
                    let phi = 2.0 * PI * halton(i, 3);
                    vec![
                        c[0] + r * theta.sin() * phi.cos(),
                        c[1] + r * theta.sin() * phi.sin(),
                        c[2] + r * theta.cos(),
                    ]
                }
            };
            Point::new(coords).expect("finite probe coordinates")
        })
        .collect()
}

/// Radical-inverse (van der Corput / Halton) sequence member.
pub(crate) fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> Point {
        Point::from([0.0, 0.0, 0.0])
    }

    fn unit_sphere(res: u32) -> Arc<DiscretizedSet> {
        Arc::new(DiscretizedSet::sphere(&origin(), 1.0, res).unwrap())
    }

    #[test]
    fn sweep_is_projection_fixed_point_on_target() {
        let target = unit_sphere(12);
        let k = Kernel::newtonian();
        let omega = DiscreteMeasure::uniform(target.clone(), 1.0).unwrap();
        let out = sweep(&omega, &target, &k, &SweepOptions::default()).unwrap();
        for (a, b) in out.swept.weights().iter().zip(omega.weights()) {
            assert!(
                (a - b).abs() <= 1e-8 * b.max(1e-12),
                "fixed point violated: {a} vs {b}"
            );
        }
    }

    #[test]
    fn zero_source_rejected() {
        let target = unit_sphere(8);
        let omega = DiscreteMeasure::zero(target.clone());
        match sweep(&omega, &target, &Kernel::newtonian(), &SweepOptions::default()) {
            Err(Error::ZeroSource) => {}
            other => panic!("expected ZeroSource, got {other:?}"),
        }
    }

    #[test]
    fn mixed_overlap_rejected() {
        let target = unit_sphere(8);
        let off = DiscretizedSet::ball(&Point::from([0.0, 0.0, 3.0]), 0.2, 2).unwrap();
        let mix = Arc::new(
            DiscretizedSet::union_of(vec![(*target).clone(), off]).unwrap(),
        );
        let mut w = vec![0.0; mix.len()];
        w[0] = 0.5;
        w[mix.len() - 1] = 0.5;
        let omega = DiscreteMeasure::new(mix, w).unwrap();
        match sweep(&omega, &target, &Kernel::newtonian(), &SweepOptions::default()) {
            Err(Error::MixedOverlap) => {}
            other => panic!("expected MixedOverlap, got {other:?}"),
        }
    }

    #[test]
    fn newtonian_hitting_mass() {
        let target = unit_sphere(32);
        let k = Kernel::newtonian();
        let opts = SweepOptions::default();
        let out = dirac_sweep(&Point::from([0.0, 0.0, 2.0]), &target, &k, &opts).unwrap();
        assert!((out.swept_mass - 0.5).abs() < 0.01, "mass {}", out.swept_mass);
        assert!(out.swept_mass <= 1.0 + 1e-3);
    }

    #[test]
    fn dirac_on_center_rejected() {
        let target = unit_sphere(8);
        let x = target.cells()[0].center.clone();
        match dirac_sweep(&x, &target, &Kernel::newtonian(), &SweepOptions::default()) {
            Err(Error::SourceOnTarget) => {}
            other => panic!("expected SourceOnTarget, got {other:?}"),
        }
    }

    #[test]
    fn equilibrium_capacity_and_normalization() {
        let target = unit_sphere(32);
        let eq = equilibrium(&target, &Kernel::newtonian(), &SweepOptions::default()).unwrap();
        assert!((eq.capacity - 1.0).abs() < 0.02, "capacity {}", eq.capacity);
        assert!((eq.capacity - eq.energy).abs() <= 1e-8 * eq.capacity);
    }

    #[test]
    fn equilibrium_single_cell() {
        let lo = Point::from([0.0, 0.0, 0.0]);
        let hi = Point::from([0.5, 0.5, 0.5]);
        let one = Arc::new(DiscretizedSet::box_grid(&lo, &hi, 1).unwrap());
        assert_eq!(one.len(), 1);
        let k = Kernel::newtonian();
        let g11 = k.cell_self_energy(&one.cells()[0]).unwrap();
        let eq = equilibrium(&one, &k, &SweepOptions::default()).unwrap();
        assert!((eq.capacity - 1.0 / g11).abs() < 1e-10);
    }

    #[test]
    fn circle_equilibrium_is_uniform() {
        // rotational symmetry of the grid carries to the weights
        let target = Arc::new(DiscretizedSet::sphere(&Point::from([0.0, 0.0]), 1.0, 24).unwrap());
        let k = Kernel::riesz(1.5, 2).unwrap();
        let eq = equilibrium(&target, &k, &SweepOptions::default()).unwrap();
        let w0 = eq.measure.weights()[0];
        for w in eq.measure.weights() {
            assert!((w - w0).abs() <= 1e-6 * w0);
        }
    }

    #[test]
    fn far_dirac_approaches_equilibrium_shape() {
        let target = unit_sphere(24);
        let k = Kernel::newtonian();
        let opts = SweepOptions::default();
        let far = dirac_sweep(&Point::from([0.0, 0.0, 1e3]), &target, &k, &opts).unwrap();
        let eq = equilibrium(&target, &k, &opts).unwrap();
        let a = far.swept.weights();
        let b = eq.measure.weights();
        let dot = crate::linalg::dot(a, b);
        let cos = dot / (crate::linalg::dot(a, a).sqrt() * crate::linalg::dot(b, b).sqrt());
        assert!(cos > 0.999, "cosine similarity {cos}");
    }

    #[test]
    fn representation_single_dirac_exact() {
        let target = unit_sphere(16);
        let k = Kernel::newtonian();
        let opts = SweepOptions::default();
        let y = Point::from([0.0, 0.0, 2.5]);
        let rep = integral_representation(&Source::dirac(y.clone()), &target, &k, &opts).unwrap();
        let direct = dirac_sweep(&y, &target, &k, &opts).unwrap();
        for (a, b) in rep.weights().iter().zip(direct.swept.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn representation_scales_linearly() {
        let target = unit_sphere(16);
        let k = Kernel::newtonian();
        let opts = SweepOptions::default();
        let y = Point::from([0.0, 0.0, 2.5]);
        let rep1 =
            integral_representation(&Source::diracs(vec![(y.clone(), 1.0)]), &target, &k, &opts)
                .unwrap();
        let rep3 =
            integral_representation(&Source::diracs(vec![(y, 3.0)]), &target, &k, &opts).unwrap();
        for (a, b) in rep1.weights().iter().zip(rep3.weights()) {
            assert!((3.0 * a - b).abs() <= 1e-10 * b.abs().max(1e-12));
        }
    }

    #[test]
    fn symmetry_residual_identical_and_scale_invariant() {
        let target = unit_sphere(16);
        let k = Kernel::newtonian();
        let opts = SweepOptions::default();
        let omega = Source::dirac(Point::from([0.0, 0.0, 2.0]));
        let lambda = Source::dirac(Point::from([0.0, 0.9, -3.0]));
        let r_same = verify_symmetry(&omega, &omega, &target, &k, &opts).unwrap();
        assert!(r_same <= 1e-10);
        let r = verify_symmetry(&omega, &lambda, &target, &k, &opts).unwrap();
        let lambda10 = Source::diracs(vec![(Point::from([0.0, 0.9, -3.0]), 10.0)]);
        let r_scaled = verify_symmetry(&omega, &lambda10, &target, &k, &opts).unwrap();
        assert!((r - r_scaled).abs() <= 1e-10);
    }

    #[test]
    fn refinement_rejects_non_nested() {
        let a = unit_sphere(8);
        let b = unit_sphere(16); // band construction does not nest
        let omega = Source::dirac(Point::from([0.0, 0.0, 3.0]));
        match refinement_sequence(
            &omega,
            &[a, b],
            &Kernel::newtonian(),
            &[Point::from([0.0, 0.0, 5.0])],
            &SweepOptions::default(),
        ) {
            Err(Error::NotNested) => {}
            other => panic!("expected NotNested, got {other:?}"),
        }
    }

    #[test]
    fn refinement_single_target_single_row() {
        let a = unit_sphere(12);
        let omega = Source::dirac(Point::from([0.0, 0.0, 3.0]));
        let probes = probe_shell(&a, 5);
        let seq = refinement_sequence(
            &omega,
            &[a],
            &Kernel::newtonian(),
            &probes,
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(seq.levels.len(), 1);
        assert_eq!(seq.levels[0].potentials.len(), 5);
    }

    #[test]
    fn gamma_witnesses_dominate() {
        let target = unit_sphere(16);
        let k = Kernel::newtonian();
        let opts = SweepOptions::default();
        let omega = Source::dirac(Point::from([0.0, 0.0, 2.0]));
        let op = SweepOperator::new(target.clone(), k.clone()).unwrap();

        // the source itself is always feasible
        let w1 = op.gamma_witness(&omega, omega.clone(), &opts).unwrap();
        // scaled equilibrium, c = max of the source potential on the target
        let eq = op.equilibrium(&opts).unwrap();
        let c = target
            .cells()
            .iter()
            .map(|cell| omega.potential(&k, &cell.center).unwrap())
            .fold(0.0_f64, f64::max);
        let w2 = op
            .gamma_witness(&omega, Source::Measure(eq.measure.scaled(c).unwrap()), &opts)
            .unwrap();
        let report = op.gamma_mass_check(&omega, vec![w1, w2], &opts).unwrap();
        assert!(report.all_ok, "{report:?}");

        // convex combinations of the source and its sweep stay feasible and
        // interpolate the masses
        let swept = op.sweep_source(&omega, &opts).unwrap();
        let combo_mass = 0.5 * omega.total_mass() + 0.5 * swept.swept_mass;
        assert!(report.swept_mass <= combo_mass * (1.0 + 1e-6));
    }

    #[test]
    fn infeasible_witness_rejected() {
        let target = unit_sphere(12);
        let k = Kernel::newtonian();
        let opts = SweepOptions::default();
        let omega = Source::dirac(Point::from([0.0, 0.0, 2.0]));
        let tiny = Source::diracs(vec![(Point::from([0.0, 0.0, 2.0]), 1e-6)]);
        let op = SweepOperator::new(target.clone(), k.clone()).unwrap();
        match op.gamma_witness(&omega, tiny, &opts) {
            Err(Error::InfeasibleWitness { .. }) => {}
            other => panic!("expected InfeasibleWitness, got {other:?}"),
        }
    }

    #[test]
    fn probe_shell_outside_guard() {
        let target = unit_sphere(16);
        let probes = probe_shell(&target, 50);
        assert_eq!(probes.len(), 50);
        let guard = target.max_cell_diameter();
        for p in &probes {
            let r = p.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!(r >= 1.0 + guard - 1e-12);
        }
    }
}
