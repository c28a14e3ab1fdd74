fn main() {
    std::process::exit(ammfee::run_command(std::env::args_os()));
}
