fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(hilbert_workbench::workbench::main_with_args(&args));
}
