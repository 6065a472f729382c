use std::process::ExitCode;

fn main() -> ExitCode {
    match cachesim::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // clap help/version exits are not failures
            if let Some(clap_err) = err.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return if clap_err.use_stderr() {
                    ExitCode::FAILURE
                } else {
                    ExitCode::SUCCESS
                };
            }
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
