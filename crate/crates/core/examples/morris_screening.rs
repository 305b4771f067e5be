//! Morris one-at-a-time screening of y = 1 + 2·x1 + 0.001·x3 + 0.5·x1·x2.

use uqflow::dist::SeededStream;
use uqflow::screening::{classify, elementary_effects, moat_design, Thresholds};

fn main() -> uqflow::Result<()> {
    let names: Vec<String> = ["x1", "x2", "x3"].map(String::from).to_vec();
    let ranges = [(0.0, 1.0), (-1.0, 1.0), (0.0, 1.0)];
    let design = moat_design(names.len(), 20, 4, SeededStream::new(11))?;
    let table = elementary_effects(
        |x| Ok(1.0 + 2.0 * x[0] + 0.001 * x[2] + 0.5 * x[0] * x[1]),
        &design,
        &names,
        &ranges,
    )?;
    let classes = classify(&table, &Thresholds::default())?;
    eprintln!("{} model evaluations", design.evaluations());
    table.write_csv(&classes, std::io::stdout().lock())
}
