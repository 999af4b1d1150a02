use std::process::ExitCode;

fn main() -> ExitCode {
    // TEXF_THREADS caps internal parallelism; results do not depend on the
    // thread count, only wall time does.
    if let Ok(raw) = std::env::var("TEXF_THREADS") {
        if let Ok(threads) = raw.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        } else {
            eprintln!("error: TEXF_THREADS must be a positive integer, got `{raw}`");
            return ExitCode::from(2);
        }
    }
    match texture_fields::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
