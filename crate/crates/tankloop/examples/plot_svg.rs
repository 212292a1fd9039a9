//! Rendering a comparison run to CSV files and a two-panel SVG.
//!
//! Runs the level PI and PID fixtures with a shared noise stream and
//! writes the traces to an out/ directory next to the working
//! directory: one CSV per controller plus a single SVG overlaying both
//! responses and both controller outputs.

use std::fs;
use tankloop::{builtin, emit_csv, emit_plot, run_pair};

fn main() -> Result<(), tankloop::Error> {
    let pi = builtin("level-pi").unwrap();
    let pid = builtin("level-pid").unwrap();
    let (pi_trace, pid_trace) = run_pair(&pi, &pid)?;

    let dir = std::path::Path::new("out");
    fs::create_dir_all(dir)?;

    let mut written = Vec::new();
    for (name, trace) in [("level-pi", &pi_trace), ("level-pid", &pid_trace)] {
        let path = dir.join(format!("{name}.csv"));
        fs::write(&path, emit_csv(trace))?;
        written.push(path);
    }

    let svg = emit_plot(&[("level-pi", &pi_trace), ("level-pid", &pid_trace)])?;
    let svg_path = dir.join("level-pi_vs_level-pid.svg");
    fs::write(&svg_path, &svg)?;
    written.push(svg_path);

    for path in &written {
        println!("wrote {} ({} bytes)", path.display(), fs::metadata(path)?.len());
    }
    Ok(())
}
