use clap::Parser;

use projpart::cli::{self, Cli};

fn main() {
    let cli = Cli::parse();

    let workers = cli
        .workers
        .or_else(|| std::env::var("PROJPART_WORKERS").ok().and_then(|w| w.parse().ok()));
    if let Some(w) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }

    match cli::run(&cli).and_then(|report| cli::emit(&cli, &report)) {
        Ok(()) => {}
        Err(err) => {
            let record = cli::error_record(&err);
            eprintln!("{}", serde_json::to_string(&record).expect("error record"));
            std::process::exit(1);
        }
    }
}
