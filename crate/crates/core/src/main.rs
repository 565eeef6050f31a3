fn main() {
    std::process::exit(poi_conflate::cli::run(std::env::args_os()));
}
