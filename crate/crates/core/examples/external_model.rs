//! The external-model protocol: each evaluation launches the command, writes
//! one JSON line {"params":{...}} to its stdin and reads {"qoi": v} back.
//! Here the "simulation" is an awk one-liner computing a·b.

use uqflow::models::ExternalModel;

fn main() -> uqflow::Result<()> {
    let script = r#"awk '{
        match($0, /"a":[-+0-9.eE]+/); a = substr($0, RSTART + 4, RLENGTH - 4) + 0
        match($0, /"b":[-+0-9.eE]+/); b = substr($0, RSTART + 4, RLENGTH - 4) + 0
        printf "{\"qoi\": %.17g}\n", a * b
    }'"#;
    let mut model = ExternalModel::new(vec!["sh".into(), "-c".into(), script.into()], vec!["a".into(), "b".into()]);
    model.timeout_secs = 5.0;
    for row in [[1.5, 2.0], [3.0, -0.25], [1e-3, 7.0]] {
        println!("request {}  ->  {}", model.request(&row)?, model.evaluate(&row)?);
    }
    Ok(())
}
