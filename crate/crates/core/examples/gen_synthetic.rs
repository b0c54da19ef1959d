//! Regenerates `data/synthetic_posts.jsonl` from the synthetic generator.

use std::fs::File;
use std::io::BufWriter;

use needscope::corpus::write_dump;
use needscope::synth::{synthetic_posts, SYNTHETIC_SEED};

fn main() -> std::io::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_posts.jsonl");
    let mut out = BufWriter::new(File::create(path)?);
    write_dump(&mut out, &synthetic_posts(SYNTHETIC_SEED))?;
    println!("wrote {path}");
    Ok(())
}
