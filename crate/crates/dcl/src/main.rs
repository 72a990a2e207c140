fn main() {
    std::process::exit(dcl::config::run_cli());
}
