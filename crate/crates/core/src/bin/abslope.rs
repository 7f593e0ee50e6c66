fn main() -> std::process::ExitCode {
    abslope::cli::main_with_args(std::env::args_os())
}
