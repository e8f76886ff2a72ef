//! Regenerate the bundled fixtures: `cargo run -p neuroneval-cli --example make_fixtures`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Result;
use neuroneval::metaeval::synthetic;
use neuroneval_cli::matrix::{self, Matrix};

fn main() -> Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");

    let pets = root.join("pets");
    fs::create_dir_all(&pets)?;
    matrix::write_csv(
        &pets.join("activations.csv"),
        &Matrix::new(
            vec!["pets".into()],
            vec![vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]],
        )?,
    )?;
    matrix::write_csv(
        &pets.join("concepts.csv"),
        &Matrix::new(
            ["dog", "cat", "pet", "animal"].map(String::from).to_vec(),
            vec![
                vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
                vec![1.0; 6],
            ],
        )?,
    )?;
    let one = |c: &str| BTreeMap::from([("pets".to_string(), c.to_string())]);
    matrix::write_pairs(&pets.join("truth.csv"), &one("pet"))?;
    matrix::write_pairs(&pets.join("supplied.csv"), &one("animal"))?;

    let synth = root.join("confounded");
    fs::create_dir_all(&synth)?;
    let s = synthetic::confounded(0)?;
    matrix::write_rawf32(
        &synth.join("activations.f32"),
        &Matrix::from_activations(&s.activations)?,
    )?;
    matrix::write_csv(
        &synth.join("concepts.csv"),
        &Matrix::from_concepts(&s.concepts)?,
    )?;
    matrix::write_pairs(&synth.join("truth.csv"), &s.truth)?;
    Ok(())
}
