use std::sync::Arc;
use std::time::Instant;
use balayage::geometry::{DiscretizedSet, Point};
use balayage::kernels::Kernel;
use balayage::sweep::{Source, SweepOperator, SweepOptions};

fn main() {
    let opts = SweepOptions { mass_tol_rel: 0.1, ..Default::default() };
    // union grid of the res-48 crosscheck
    let core = DiscretizedSet::ball(&Point::from([0.0, 0.0]), 0.45, 22).unwrap();
    let ann = DiscretizedSet::annulus(&Point::from([0.0, 0.0]), 1.0, 4.0, 48).unwrap();
    println!("core={} ann={}", core.len(), ann.len());
    let union = Arc::new(DiscretizedSet::union_of(vec![core, ann]).unwrap());
    let t0 = Instant::now();
    let op = SweepOperator::new(union, Kernel::riesz(1.5, 2).unwrap()).unwrap();
    println!("assembly: {:.2?}", t0.elapsed());
    let t1 = Instant::now();
    let sw = op.sweep_source(&Source::dirac(Point::from([0.7, 0.0])), &opts).unwrap();
    let zeros = sw.swept.weights().iter().filter(|w| **w == 0.0).count();
    println!(
        "union sweep: {:.2?}, iterations={}, zeros={}, mass={:.5}",
        t1.elapsed(),
        sw.diagnostics.iterations,
        zeros,
        sw.swept_mass
    );
}
