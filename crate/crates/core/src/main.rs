fn main() -> std::process::ExitCode {
    meanopt::cli::main_from_env()
}
