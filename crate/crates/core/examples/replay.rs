//! Prints stream input lines for one record of a corpus, root at the
//! origin, canonical joint order.
//!
//! ```text
//! cargo run --example replay -- corpus.jsonl [record-index]
//! ```

use std::process::ExitCode;

use kinemo::dataset::load_corpus;
use kinemo::streaming::FrameMessage;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.first() else {
        eprintln!("usage: replay <corpus.jsonl> [record-index]");
        return ExitCode::from(2);
    };
    let index: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let corpus = match load_corpus(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let Some(rec) = corpus.records.get(index) else {
        eprintln!("error: corpus has {} records", corpus.len());
        return ExitCode::from(2);
    };
    for msg in FrameMessage::replay(&rec.sequence, Some(rec.emotion.name())) {
        println!("{}", serde_json::to_string(&msg).expect("frame serializes"));
    }
    ExitCode::SUCCESS
}
