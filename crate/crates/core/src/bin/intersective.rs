fn main() -> std::process::ExitCode {
    intersective::cli::main()
}
