fn main() {
    std::process::exit(pagesmith::workbench::main_with_args(std::env::args_os()));
}
