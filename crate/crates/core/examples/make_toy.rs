//! Regenerates the bundled toy benchmark under `data/toy/`.
//!
//! cargo run -p qsarbench --example make_toy -- data/toy

use std::fmt::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qsarbench::synth::{classification_labels, clustered_series, regression_values, SynthConfig};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/toy".into()));
    std::fs::create_dir_all(&dir)?;

    // potency in mixed units; actives at or below 1 uM
    let mols = clustered_series(&SynthConfig {
        series: 8,
        per_series: 50,
        seed: 101,
    });
    let labels = classification_labels(&mols, 101);
    let mut rng = ChaCha20Rng::seed_from_u64(102);
    let mut cls = String::from("smiles,potency,unit\n");
    for (m, &y) in mols.iter().zip(&labels) {
        let log_um: f64 = if y > 0.5 {
            rng.random_range(-2.0..0.0)
        } else {
            rng.random_range(0.05..2.0)
        };
        let um = 10f64.powf(log_um);
        if rng.random::<bool>() {
            writeln!(cls, "{},{:.4},uM", m.smiles, um).unwrap();
        } else {
            writeln!(cls, "{},{:.1},nM", m.smiles, um * 1000.0).unwrap();
        }
    }
    std::fs::write(dir.join("toy_potency.csv"), cls)?;

    let mols = clustered_series(&SynthConfig {
        series: 6,
        per_series: 50,
        seed: 201,
    });
    let values = regression_values(&mols, 201, 0.3);
    let mut reg = String::from("smiles,value\n");
    for (m, v) in mols.iter().zip(&values) {
        writeln!(reg, "{},{:.3}", m.smiles, v).unwrap();
    }
    std::fs::write(dir.join("toy_logd.csv"), reg)?;
    Ok(())
}
