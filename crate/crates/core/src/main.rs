fn main() -> std::process::ExitCode {
    lsscatter::cli::run()
}
