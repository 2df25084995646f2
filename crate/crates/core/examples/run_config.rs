//! Drive a configured run from code, as the `expflow` binary does.

use expflow::cli::{exit_code_for, parse_config, run};

const CONFIG: &str = r#"
command = "sphere-ode"
seed = 1

[speed]
name = "H^alpha"
alpha = 2.0
dim = 2

[geometry]
shape = "icosphere"

[sphere_ode]
r0 = 1.0
t1 = 0.5
"#;

fn main() {
    let out = std::env::temp_dir().join("expflow-run-config");
    let _ = std::fs::remove_dir_all(&out);
    let overrides = vec![format!("output_dir = {:?}", out.display().to_string())];
    let code = match parse_config(CONFIG, &overrides).and_then(|cfg| run(&cfg)) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    println!("exit {code}, artifacts in {}", out.display());
}
