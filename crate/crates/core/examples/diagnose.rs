//! Heuristic classification of a few measures by ball growth and
//! isocapacity, through the report pipeline the binary uses.

use conformal_spectra::cli::{run, Command, CommandOptions, RunConfig};
use conformal_spectra::measure::{MeasureKind, MeasureSpec};

fn main() -> conformal_spectra::Result<()> {
    let dir = std::env::temp_dir().join("confspec-diagnose-example");
    let cases = [
        ("gen:icosphere:3", MeasureSpec::uniform()),
        ("gen:icosphere:3", MeasureSpec { kind: MeasureKind::Atomic, atoms: Some(vec![(0, 0.3)]), ..MeasureSpec::uniform() }),
        ("gen:disk:10", MeasureSpec::boundary()),
    ];
    for (mesh, measure) in cases {
        let config = RunConfig {
            command: Command::Diagnose,
            mesh: mesh.into(),
            measure,
            options: CommandOptions::default(),
            seed: 0,
            output_dir: dir.clone(),
        };
        let out = run(&config)?;
        println!("{mesh:<16} {:?}: {}", config.measure.kind, out.summary);
    }
    println!("reports in {}", dir.display());
    Ok(())
}
