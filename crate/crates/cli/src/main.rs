fn main() {
    std::process::exit(ccm_select::run(std::env::args_os()));
}
