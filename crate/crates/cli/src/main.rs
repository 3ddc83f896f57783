use std::process::ExitCode;

use mwdg_cli::{parse_args, run_sweep, sweep_csv, USAGE};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match parse_args(&argv) {
        Ok(cfg) => cfg,
        Err(message) => {
            if message.is_empty() {
                // help requested
                print!("{USAGE}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {message}");
            return ExitCode::FAILURE;
        }
    };
    print!("{}", cfg.describe());

    if let Some(path) = &cfg.manifest {
        if let Err(e) = std::fs::write(path, cfg.manifest_json()) {
            eprintln!("error: writing manifest {path}: {e}");
            return ExitCode::FAILURE;
        }
    }

    let rows = run_sweep(&cfg);
    if cfg.trace {
        for row in &rows {
            if let Ok(stats) = &row.stats {
                for (step, dof) in stats.dof_history.iter().enumerate() {
                    eprintln!(
                        "trace N={} eps={:e} step {}: dof {}",
                        row.level, row.epsilon, step, dof
                    );
                }
            }
        }
    }
    let csv = sweep_csv(&cfg, &rows);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv) {
                eprintln!("error: writing table {path}: {e}");
                return ExitCode::FAILURE;
            }
            println!("wrote {path}");
        }
        None => print!("{csv}"),
    }

    let failures = rows.iter().filter(|r| r.stats.is_err()).count();
    for row in &rows {
        if let Err(e) = &row.stats {
            eprintln!("run failed (N={}, eps={:e}): {e}", row.level, row.epsilon);
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
