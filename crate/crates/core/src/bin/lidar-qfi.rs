fn main() {
    std::process::exit(lidar_qfi::cli_runner::run(std::env::args_os()));
}
