use std::thread;

// Answers and error reports walk terms recursively; deep lists need room.
const STACK_BYTES: usize = 256 * 1024 * 1024;

fn main() {
    let code = thread::Builder::new()
        .stack_size(STACK_BYTES)
        .spawn(|| {
            let mut io = mathlog_cli::Io::std();
            mathlog_cli::run(std::env::args_os(), &mut io)
        })
        .expect("spawn interpreter thread")
        .join()
        .unwrap_or(mathlog_cli::EXIT_ERROR);
    std::process::exit(code);
}
