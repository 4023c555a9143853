use std::io::Write;

fn main() {
    if let Some(n) = std::env::var(rabi_cli::THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore failure: a pool may already exist
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = rabi_cli::run(std::env::args_os(), &mut out, &mut stderr.lock());
    let _ = out.flush();
    std::process::exit(code);
}
