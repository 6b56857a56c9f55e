fn main() -> std::process::ExitCode {
    distla::cli::main()
}
