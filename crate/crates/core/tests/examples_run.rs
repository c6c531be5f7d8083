//! Every example builds and runs to completion.

use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 7] = [
    "gaussian_family",
    "annealing_paths",
    "bregman_losses",
    "annealed_estimation",
    "named_estimators",
    "theory_predictions",
    "experiment_sweep",
];

fn examples_dir() -> PathBuf {
    // target/<profile>/deps/<this test> -> target/<profile>/examples
    let exe = std::env::current_exe().expect("test executable path");
    exe.parent().and_then(|p| p.parent()).expect("profile dir").join("examples")
}

#[test]
fn all_examples_run() {
    let dir = examples_dir();
    if EXAMPLES.iter().any(|n| !dir.join(n).exists()) {
        // a filtered `cargo test --test` run does not build examples
        let status = Command::new(env!("CARGO"))
            .args(["build", "--examples", "-p", "annealed-bregman"])
            .status()
            .expect("spawn cargo");
        assert!(status.success(), "building examples failed");
    }
    for name in EXAMPLES {
        let path = dir.join(name);
        assert!(path.exists(), "example binary {} not built", path.display());
        let out = Command::new(&path).output().expect("spawn example");
        assert!(
            out.status.success(),
            "{name} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}
