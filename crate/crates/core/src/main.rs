fn main() -> std::process::ExitCode {
    qbo::cli::main()
}
