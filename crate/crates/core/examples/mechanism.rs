//! Qualitative mechanism checks for a potential preset, as used when tuning
//! `h2h2-model-calibrated`: inelastic ordering of (1002), (1200), (1000) at
//! 1e-6 K, their dominant final states, the rise of σ_inel(1200) across the
//! opening of (1002), and the vibrational-family trends of the initial-state
//! scan.
//!
//! cargo run --release --example mechanism -- [preset] [j_total_max]

use ccmol::{initial_cms_scan, Engine, RunConfig};

fn config(preset: &str, j_max: u32, v_max: u32, energies: &str, initial: &str) -> RunConfig {
    RunConfig::from_toml(&format!(
        "[pes]\npreset = \"{preset}\"\n[basis]\nv_max = {v_max}\nj_max = 2\n[energies]\nlist_K = [{energies}]\n\
         [scattering]\nj_total_max = {j_max}\ninitial = [{initial}]\n"
    ))
    .expect("valid configuration")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let preset = args.first().map_or("h2h2-model-calibrated", String::as_str);
    let j_max: u32 = args.get(1).map_or(Ok(4), |s| s.parse())?;

    let c = config(preset, j_max, 1, "1e-6, 25.0, 50.0", "\"(1002)\", \"(1200)\", \"(1000)\"");
    let engine = Engine::new(c.clone())?;
    let points: Vec<_> = engine
        .initial_states()?
        .into_iter()
        .flat_map(|i| c.energies_kelvin().into_iter().map(move |e| (i, e)))
        .collect();
    let scan = engine.run_points(&points, &engine.grid);
    for w in &scan.warnings {
        println!("warning: {w}");
    }
    for r in &scan.results {
        let dominant = r.table.dominant_inelastic().map_or("-".to_owned(), |d| d.final_cms.label());
        println!(
            "{} at {:e} K: σ_el {:.4e}, σ_inel {:.4e} Å², dominant final {dominant}",
            r.initial,
            r.e_kelvin,
            r.table.elastic(),
            r.table.total_inelastic()
        );
    }

    // families need v up to 3
    let labels: Vec<String> = ["(1000)", "(2000)", "(3000)", "(1002)", "(2002)", "(3002)"].map(String::from).to_vec();
    let quoted: Vec<String> = labels.iter().map(|l| format!("\"{l}\"")).collect();
    let c = config(preset, j_max, 3, "1e-6", &quoted.join(", "));
    for row in initial_cms_scan(&c, &labels, 1e-6)? {
        println!("{} {}: σ_inel {:.4e} Å²", row.family, row.initial, row.sigma_inelastic);
    }
    Ok(())
}
