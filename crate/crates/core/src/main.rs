fn main() {
    std::process::exit(gripper_label::cli::run(std::env::args_os()));
}
