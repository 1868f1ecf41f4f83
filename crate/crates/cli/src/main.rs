mod app;
mod args;
mod commands;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = match app::run(argv) {
        Ok(_) => 0,
        Err(app::CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
