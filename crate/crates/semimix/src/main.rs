//! Thin binary: all behaviour lives in the library.

fn main() {
    std::process::exit(semimix::cli::run());
}
