//! Grid-convergence check for a run configuration: solves every
//! (initial, energy) point on the configured radial grid, then on grids with
//! halved steps and doubled R_max, and reports the largest relative change of
//! any cross section.
//!
//! cargo run --release --example grid_convergence -- run.toml [initial,slope,max ...]
//!
//! Extra arguments add growing-step grids to compare against the base grid.

use std::time::Instant;

use ccmol::propagator::StepRule;
use ccmol::{Engine, RadialGrid, RunConfig, ScanResult};

fn worst_change(base: &ScanResult, other: &ScanResult) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for (a, b) in base.results.iter().zip(&other.results) {
        for (x, y) in a.table.rows.iter().zip(&b.table.rows) {
            let rel = ((x.sigma - y.sigma) / x.sigma).abs();
            if rel > worst.0 {
                worst = (rel, format!("{} -> {} at {:e} K", a.initial, x.final_cms, a.e_kelvin));
            }
        }
    }
    worst
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().ok_or("usage: grid_convergence <config.toml> [initial,slope,max ...]")?;
    let config = RunConfig::from_file(path.as_ref())?;
    let engine = Engine::new(config.clone())?;
    let energies = config.energies_kelvin();
    let points: Vec<_> =
        engine.initial_states()?.into_iter().flat_map(|i| energies.iter().map(move |&e| (i, e))).collect();

    let base = engine.grid;
    let mut variants = vec![
        ("half step".to_owned(), RadialGrid { step: base.step.halved(), ..base }),
        ("2 R_max".to_owned(), RadialGrid { r_max: 2.0 * base.r_max, ..base }),
    ];
    for item in &args[1..] {
        let v: Vec<f64> = item.split(',').map(str::parse).collect::<Result<_, _>>()?;
        let [initial, slope, max] = v[..] else { return Err(format!("bad grid {item}").into()) };
        variants.push((item.clone(), RadialGrid { step: StepRule::Growing { initial, slope, max }, ..base }));
    }

    let t = Instant::now();
    let reference = engine.run_points(&points, &base);
    println!(
        "base: {} sectors, {:.1} s, unitarity defect {:.1e}",
        base.boundaries().len() - 1,
        t.elapsed().as_secs_f64(),
        reference.max_unitarity_defect()
    );
    for (name, grid) in &variants {
        let t = Instant::now();
        let scan = engine.run_points(&points, grid);
        let (rel, at) = worst_change(&reference, &scan);
        println!(
            "{name}: {} sectors, {:.1} s, worst relative change {rel:.2e} ({at})",
            grid.boundaries().len() - 1,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
