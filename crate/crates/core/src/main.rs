fn main() -> std::process::ExitCode {
    entity_linker::cli::run()
}
