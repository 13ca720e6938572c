use std::process::ExitCode;

use momentum_qng::cli::{parse_args, run_command};

fn main() -> ExitCode {
    let result = parse_args(std::env::args_os()).and_then(run_command);
    match result {
        Ok(out) => {
            println!("results written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                print!("{e}");
            } else {
                eprintln!("{e}");
            }
            ExitCode::from(code as u8)
        }
    }
}
