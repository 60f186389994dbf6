fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(ostrowski_core::cli::run(&args));
}
