fn main() -> std::process::ExitCode {
    simpact_cli::run()
}
