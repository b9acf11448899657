// Temporary tuning probe for acceptance configurations (removed later).
use std::sync::Arc;
use std::time::Instant;

use balayage::geometry::{DiscretizedSet, Point};
use balayage::green::{frostman_crosscheck, GreenExperiment};
use balayage::kernels::Kernel;
use balayage::sweep::{
    probe_shell, refinement_sequence, Source, SweepOperator, SweepOptions,
};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    let opts = SweepOptions::default();

    if which == "sym" || which == "all" {
        println!("== symmetry: Newtonian n=3 unit sphere ==");
        for res in [32u32, 64] {
            let t0 = Instant::now();
            let target =
                Arc::new(DiscretizedSet::sphere(&Point::from([0.0, 0.0, 0.0]), 1.0, res).unwrap());
            let op = SweepOperator::new(target, Kernel::newtonian()).unwrap();
            for (x, y) in [
                ([0.0, 0.0, 1.08], [0.0, 0.0, -3.0]),
                ([1.07, 0.0, 0.0], [0.0, -2.5, 0.3]),
                ([0.0, 1.09, 0.0], [1.5, 1.5, 1.5]),
            ] {
                let a = Source::dirac(Point::from(x));
                let b = Source::dirac(Point::from(y));
                let r = op.verify_symmetry(&a, &b, &opts).unwrap();
                println!("  res={res} x={x:?}: residual={r:.3e}");
            }
            println!("  ({:.2?})", t0.elapsed());
        }
        println!("== symmetry: Riesz alpha=1 n=2 unit disk ==");
        for res in [32u32, 64] {
            let t0 = Instant::now();
            let target =
                Arc::new(DiscretizedSet::ball(&Point::from([0.0, 0.0]), 1.0, res).unwrap());
            let op = SweepOperator::new(target, Kernel::riesz(1.0, 2).unwrap()).unwrap();
            for (x, y) in [
                ([0.0, 1.05], [0.0, -3.0]),
                ([1.06, 0.0], [-2.5, 0.3]),
                ([0.0, -1.08], [1.5, 1.5]),
            ] {
                let a = Source::dirac(Point::from(x));
                let b = Source::dirac(Point::from(y));
                let r = op.verify_symmetry(&a, &b, &opts).unwrap();
                println!("  res={res} x={x:?}: residual={r:.3e}");
            }
            println!("  ({:.2?})", t0.elapsed());
        }
    }

    if which == "rep" || which == "all" {
        println!("== representation: Newtonian n=3 unit sphere ==");
        let srcs2 = vec![
            (Point::from([0.0, 0.0, 1.04]), 0.6),
            (Point::from([0.0, 0.0, 3.0]), 0.4),
        ];
        let srcs5 = vec![
            (Point::from([0.0, 0.0, 1.04]), 0.3),
            (Point::from([1.05, 0.0, 0.0]), 0.2),
            (Point::from([0.0, -2.0, 0.5]), 0.2),
            (Point::from([2.0, 2.0, 2.0]), 0.2),
            (Point::from([0.0, 0.0, -4.0]), 0.1),
        ];
        for (name, srcs) in [("2-dirac", srcs2), ("5-dirac", srcs5)] {
            for res in [32u32, 64, 128] {
                let t0 = Instant::now();
                let target = Arc::new(
                    DiscretizedSet::sphere(&Point::from([0.0, 0.0, 0.0]), 1.0, res).unwrap(),
                );
                let op = SweepOperator::new(target.clone(), Kernel::newtonian()).unwrap();
                let source = Source::diracs(srcs.clone());
                let direct = op.sweep_source(&source, &opts).unwrap();
                let rep = op.integral_representation(&source, &opts).unwrap();
                let probes = probe_shell(&target, 50);
                let mut sup_ref = 0.0_f64;
                let mut sup_diff = 0.0_f64;
                for p in &probes {
                    let ud = direct.swept.potential(op.kernel(), p).unwrap();
                    let ur = rep.potential(op.kernel(), p).unwrap();
                    sup_ref = sup_ref.max(ud.abs());
                    sup_diff = sup_diff.max((ud - ur).abs());
                }
                let zeros = direct.swept.weights().iter().filter(|w| **w == 0.0).count();
                println!(
                    "  {name} res={res}: disc={:.3e} zeros={zeros} mass_dir={:.5} ({:.2?})",
                    sup_diff / sup_ref,
                    direct.swept_mass,
                    t0.elapsed()
                );
            }
        }
    }

    if which == "refine" || which == "all" {
        println!("== refinement: alpha=1 n=2 nested annuli 1..(2,4,8) ==");
        let t0 = Instant::now();
        let family = DiscretizedSet::nested_annuli(
            &Point::from([0.0, 0.0]),
            1.0,
            &[2.0, 4.0, 8.0],
            16,
        )
        .unwrap();
        let family: Vec<Arc<_>> = family.into_iter().map(Arc::new).collect();
        for f in &family {
            println!("  level cells={} res={}", f.len(), f.resolution());
        }
        let probes = probe_shell(family.last().unwrap(), 50);
        let kernel = Kernel::riesz(1.0, 2).unwrap();
        let source = Source::dirac(Point::from([0.5, 0.0]));
        let seq = refinement_sequence(&source, &family, &kernel, &probes, &opts).unwrap();
        for (j, level) in seq.levels.iter().enumerate() {
            let min_delta = if j == 0 {
                0.0
            } else {
                level
                    .potentials
                    .iter()
                    .zip(&seq.levels[j - 1].potentials)
                    .map(|(f, c)| f - c)
                    .fold(f64::INFINITY, f64::min)
            };
            println!(
                "  level {j}: mass={:.5} min_potential_delta={:.3e}",
                level.swept_mass, min_delta
            );
        }
        println!("  ({:.2?})", t0.elapsed());
    }

    if which == "green" || which == "all" {
        println!("== green crosscheck res 24/48 ==");
        let t0 = Instant::now();
        let exp = GreenExperiment {
            resolutions: vec![24, 48],
            ..GreenExperiment::default_plane()
        };
        for row in frostman_crosscheck(&exp).unwrap() {
            println!(
                "  res={} core={} ext={} disc={:.4e} green_mass={:.5} union_core={:.5} ext_mass={:.5} total={:.5}",
                row.resolution,
                row.core_cells,
                row.exterior_cells,
                row.discrepancy,
                row.core_mass_green,
                row.core_mass_union,
                row.exterior_mass,
                row.union_total_mass
            );
        }
        println!("  ({:.2?})", t0.elapsed());
        let t1 = Instant::now();
        let mut far = exp.clone();
        far.r_out = 8.0;
        far.resolutions = vec![24];
        let far_row = &frostman_crosscheck(&far).unwrap()[0];
        println!(
            "  r_out=8 res=24: total={:.5} ext_mass={:.5} ({:.2?})",
            far_row.union_total_mass, far_row.exterior_mass, t1.elapsed()
        );
    }
}
