//! Batch execution of configured experiments: runs the named command across
//! the listed resolutions and writes result CSVs, a structured-text
//! diagnostics sidecar, and probe-potential plot data. Reruns with an
//! identical configuration produce bitwise-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::ExperimentConfig;
use crate::geometry::Point;
use crate::green;
use crate::sweep::{self, SweepOperator, SweepResult};
use crate::{Error, Result};

#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
}

/// Full 17-significant-digit float formatting for exact round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Map an error to the process exit code: 2 for configuration/validation
/// problems, 3 for numerical failures (non-convergence, breakdown,
/// mass-bound violations).
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } | Error::IllConditioned { .. } | Error::MassBound { .. } => 3,
        _ => 2,
    }
}

struct OutputSet {
    dir: PathBuf,
    prefix: String,
    files: Vec<PathBuf>,
    diagnostics: String,
}

impl OutputSet {
    fn new(dir: &Path, prefix: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            prefix: prefix.to_string(),
            files: Vec::new(),
            diagnostics: String::new(),
        })
    }

    fn write(&mut self, suffix: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(format!("{}_{suffix}", self.prefix));
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.diagnostics, "{key} = {value}");
    }

    fn finish(mut self) -> Result<RunOutcome> {
        let diag = std::mem::take(&mut self.diagnostics);
        self.write("diagnostics.txt", &diag)?;
        Ok(RunOutcome { files: self.files })
    }
}

fn diag_sweep(out: &mut OutputSet, label: &str, r: &SweepResult) {
    out.note(&format!("{label}.iterations"), r.diagnostics.iterations);
    out.note(&format!("{label}.converged"), r.diagnostics.converged);
    out.note(&format!("{label}.objective"), fmt_f64(r.diagnostics.objective));
    out.note(
        &format!("{label}.min_stationarity"),
        fmt_f64(r.diagnostics.kkt.min_stationarity),
    );
    out.note(
        &format!("{label}.complementarity"),
        fmt_f64(r.diagnostics.kkt.complementarity),
    );
    out.note(
        &format!("{label}.degenerate_cells"),
        r.diagnostics.degenerate.len(),
    );
}

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let mut out = OutputSet::new(out_dir, &config.output_prefix())?;
    out.note("command", &config.command);
    match config.command.as_str() {
        "sweep" => run_sweep(config, &mut out)?,
        "equilibrium" => run_equilibrium(config, &mut out)?,
        "represent" => run_represent(config, &mut out)?,
        "symmetry" => run_symmetry(config, &mut out)?,
        "refine" => run_refine(config, &mut out)?,
        "green-demo" => run_green_demo(config, &mut out)?,
        "mass-curve" => run_mass_curve(config, &mut out)?,
        other => {
            return Err(Error::Config {
                field: "command".into(),
                message: format!("unknown command `{other}`"),
            })
        }
    }
    out.finish()
}

fn measure_csv(measure: &crate::measures::DiscreteMeasure) -> String {
    let mut buf = Vec::new();
    measure.write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("ascii csv")
}

fn potentials_csv(
    probes: &[Point],
    values: &[f64],
) -> String {
    let n = probes.first().map_or(0, |p| p.dim());
    let mut s = String::new();
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let _ = writeln!(s, "{},potential", header.join(","));
    for (p, v) in probes.iter().zip(values) {
        let coords: Vec<String> = p.coords().iter().map(|c| fmt_f64(*c)).collect();
        let _ = writeln!(s, "{},{}", coords.join(","), fmt_f64(*v));
    }
    s
}

fn run_sweep(config: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let kernel = config.build_kernel()?;
    let source = config.build_source("source")?;
    let opts = config.sweep_options();
    let mut summary = String::from(
        "resolution,cells,source_mass,swept_mass,mass_margin,objective,min_stationarity,complementarity,iterations\n",
    );
    for &res in config.resolutions.as_ref().unwrap() {
        let target = config.build_target(res)?;
        let op = SweepOperator::new(target.clone(), kernel.clone())?;
        let result = op.sweep_source(&source, &opts)?;
        let _ = writeln!(
            summary,
            "{res},{},{},{},{},{},{},{},{}",
            target.len(),
            fmt_f64(result.source_mass),
            fmt_f64(result.swept_mass),
            fmt_f64(result.source_mass - result.swept_mass),
            fmt_f64(result.diagnostics.objective),
            fmt_f64(result.diagnostics.kkt.min_stationarity),
            fmt_f64(result.diagnostics.kkt.complementarity),
            result.diagnostics.iterations,
        );
        out.write(&format!("measure_res{res}.csv"), &measure_csv(&result.swept))?;
        let probes = sweep::probe_shell(&target, config.probe_count());
        let values = probes
            .iter()
            .map(|p| result.swept.potential(&kernel, p))
            .collect::<Result<Vec<_>>>()?;
        out.write(
            &format!("potentials_res{res}.csv"),
            &potentials_csv(&probes, &values),
        )?;
        diag_sweep(out, &format!("res{res}"), &result);
    }
    out.write("summary.csv", &summary)
}

fn run_equilibrium(config: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let kernel = config.build_kernel()?;
    let opts = config.sweep_options();
    let mut summary =
        String::from("resolution,cells,capacity,energy,normalization_gap,iterations\n");
    for &res in config.resolutions.as_ref().unwrap() {
        let target = config.build_target(res)?;
        let op = SweepOperator::new(target.clone(), kernel.clone())?;
        let eq = op.equilibrium(&opts)?;
        let _ = writeln!(
            summary,
            "{res},{},{},{},{},{}",
            target.len(),
            fmt_f64(eq.capacity),
            fmt_f64(eq.energy),
            fmt_f64((eq.capacity - eq.energy).abs()),
            eq.diagnostics.iterations,
        );
        out.write(&format!("measure_res{res}.csv"), &measure_csv(&eq.measure))?;
        out.note(&format!("res{res}.capacity"), fmt_f64(eq.capacity));
    }
    out.write("summary.csv", &summary)
}

fn run_represent(config: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let kernel = config.build_kernel()?;
    let source = config.build_source("source")?;
    let opts = config.sweep_options();
    let mut summary =
        String::from("resolution,cells,sup_discrepancy,mass_direct,mass_represented\n");
    for &res in config.resolutions.as_ref().unwrap() {
        let target = config.build_target(res)?;
        let op = SweepOperator::new(target.clone(), kernel.clone())?;
        let direct = op.sweep_source(&source, &opts)?;
        let represented = op.integral_representation(&source, &opts)?;
        let probes = sweep::probe_shell(&target, config.probe_count());
        let mut sup_ref = 0.0_f64;
        let mut sup_diff = 0.0_f64;
        for p in &probes {
            let ud = direct.swept.potential(&kernel, p)?;
            let ur = represented.potential(&kernel, p)?;
            sup_ref = sup_ref.max(ud.abs());
            sup_diff = sup_diff.max((ud - ur).abs());
        }
        let disc = sup_diff / sup_ref;
        let _ = writeln!(
            summary,
            "{res},{},{},{},{}",
            target.len(),
            fmt_f64(disc),
            fmt_f64(direct.swept_mass),
            fmt_f64(represented.total_mass()),
        );
        out.write(
            &format!("measure_res{res}.csv"),
            &measure_csv(&represented),
        )?;
        diag_sweep(out, &format!("res{res}.direct"), &direct);
    }
    out.write("summary.csv", &summary)
}

fn run_symmetry(config: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let kernel = config.build_kernel()?;
    let omega = config.build_source("source")?;
    let lambda = config.build_source("lambda")?;
    let opts = config.sweep_options();
    let mut summary = String::from("resolution,cells,residual\n");
    for &res in config.resolutions.as_ref().unwrap() {
        let target = config.build_target(res)?;
        let op = SweepOperator::new(target.clone(), kernel.clone())?;
        let residual = op.verify_symmetry(&omega, &lambda, &opts)?;
        let _ = writeln!(summary, "{res},{},{}", target.len(), fmt_f64(residual));
        out.note(&format!("res{res}.residual"), fmt_f64(residual));
    }
    out.write("summary.csv", &summary)
}

fn run_refine(config: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let kernel = config.build_kernel()?;
    let source = config.build_source("source")?;
    let opts = config.sweep_options();
    let r = config.refine.as_ref().expect("validated");
    let center = Point::new(r.center.clone())?;
    let family = crate::geometry::DiscretizedSet::nested_annuli(
        &center,
        r.r_in,
        &r.r_outs,
        r.resolution,
    )?;
    let family: Vec<Arc<_>> = family.into_iter().map(Arc::new).collect();
    let probes = sweep::probe_shell(family.last().unwrap(), config.probe_count());
    let seq = sweep::refinement_sequence(&source, &family, &kernel, &probes, &opts)?;
    let mut summary = String::from("level,resolution,cells,swept_mass,min_potential_delta\n");
    for (j, level) in seq.levels.iter().enumerate() {
        let min_delta = if j == 0 {
            0.0
        } else {
            level
                .potentials
                .iter()
                .zip(&seq.levels[j - 1].potentials)
                .map(|(fine, coarse)| fine - coarse)
                .fold(f64::INFINITY, f64::min)
        };
        let _ = writeln!(
            summary,
            "{j},{},{},{},{}",
            level.resolution,
            level.cells,
            fmt_f64(level.swept_mass),
            fmt_f64(min_delta),
        );
        out.write(
            &format!("potentials_level{j}.csv"),
            &potentials_csv(&probes, &level.potentials),
        )?;
    }
    out.write("summary.csv", &summary)
}

fn run_green_demo(config: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let exp = config.build_green()?;
    let mut summary = String::from(
        "resolution,r_out,core_cells,exterior_cells,green_mass,mass_margin,crosscheck_discrepancy,core_mass_union,exterior_mass,union_total_mass\n",
    );
    let rows = green::frostman_crosscheck(&exp)?;
    for row in &rows {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{}",
            row.resolution,
            fmt_f64(row.r_out),
            row.core_cells,
            row.exterior_cells,
            fmt_f64(row.core_mass_green),
            fmt_f64(1.0 - row.core_mass_green),
            fmt_f64(row.discrepancy),
            fmt_f64(row.core_mass_union),
            fmt_f64(row.exterior_mass),
            fmt_f64(row.union_total_mass),
        );
    }
    // truncation sensitivity: double r_out once at the coarsest resolution
    let mut doubled = exp.clone();
    doubled.r_out = 2.0 * exp.r_out;
    doubled.resolutions = vec![exp.resolutions[0]];
    let far = green::frostman_crosscheck(&doubled)?;
    for row in &far {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{}",
            row.resolution,
            fmt_f64(row.r_out),
            row.core_cells,
            row.exterior_cells,
            fmt_f64(row.core_mass_green),
            fmt_f64(1.0 - row.core_mass_green),
            fmt_f64(row.discrepancy),
            fmt_f64(row.core_mass_union),
            fmt_f64(row.exterior_mass),
            fmt_f64(row.union_total_mass),
        );
    }
    out.note(
        "truncation_delta.green_mass",
        fmt_f64((far[0].core_mass_green - rows[0].core_mass_green).abs()),
    );
    out.note(
        "truncation_delta.union_total_mass",
        fmt_f64((far[0].union_total_mass - rows[0].union_total_mass).abs()),
    );
    out.write("summary.csv", &summary)
}

fn run_mass_curve(config: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let exp = config.build_green()?;
    let fractions = config
        .green
        .as_ref()
        .and_then(|g| g.fractions.clone())
        .expect("validated");
    let rows = green::mass_curve(&exp, &fractions)?;
    let mut summary = String::from("fraction,core_radius,swept_mass,mass_margin\n");
    for row in &rows {
        let _ = writeln!(
            summary,
            "{},{},{},{}",
            fmt_f64(row.fraction),
            fmt_f64(row.core_radius),
            fmt_f64(row.swept_mass),
            fmt_f64(row.mass_margin),
        );
    }
    out.write("summary.csv", &summary)
}
