//! Golden-file snapshot of the comparison plot. Guards the SVG emitter
//! against accidental output drift; regenerate deliberately with
//! `REGEN_GOLDEN=1 cargo test --test golden` after reviewing the change.

use std::path::PathBuf;
use tankloop::{builtin, emit_plot, run_pair};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/level_compare.svg")
}

#[test]
fn comparison_plot_matches_the_snapshot() {
    let pi = builtin("level-pi").unwrap();
    let pid = builtin("level-pid").unwrap();
    let (pi_trace, pid_trace) = run_pair(&pi, &pid).unwrap();
    let svg = emit_plot(&[("level-pi", &pi_trace), ("level-pid", &pid_trace)]).unwrap();

    // Both responses must actually be in the picture.
    assert_eq!(svg.matches("pv-trace").count(), 2);
    assert!(svg.contains("level-pi") && svg.contains("level-pid"));

    let path = golden_path();
    if std::env::var_os("REGEN_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &svg).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .expect("golden snapshot missing; establish it with REGEN_GOLDEN=1 cargo test --test golden");
    assert_eq!(svg, expected, "plot output drifted from {}", path.display());
}
