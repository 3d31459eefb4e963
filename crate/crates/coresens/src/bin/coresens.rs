fn main() -> std::process::ExitCode {
    coresens::cli::main()
}
