fn main() -> std::process::ExitCode {
    alrank::cli::main()
}
