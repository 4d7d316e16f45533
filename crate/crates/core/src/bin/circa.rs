fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CIRCA_LOG")).init();
    let stdout = std::io::stdout();
    let code = circa::cli::main_with(std::env::args_os(), &mut stdout.lock());
    std::process::exit(code);
}
