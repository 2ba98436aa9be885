fn main() {
    std::process::exit(qverify::cli::dispatch(std::env::args_os()));
}
