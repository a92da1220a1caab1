use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let mut err = std::io::stderr();
    let code = qudos_cli::main_with(std::env::args_os(), std::env::var(qudos_cli::SEED_ENV).ok(), &mut out, &mut err);
    if out.flush().is_err() && code == 0 {
        std::process::exit(qudos_cli::EXIT_CHECK_FAILED);
    }
    std::process::exit(code);
}
