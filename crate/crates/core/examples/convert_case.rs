//! Converts a MATPOWER case file to the native JSON format.
//!
//! Usage: cargo run --example convert_case -- <in.m> <out.json>

use std::path::Path;

use gridrisk::caseio::{read_case, serialize_native_case};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 3 {
        eprintln!("usage: convert_case <in.m> <out.json>");
        std::process::exit(2);
    }
    let doc = read_case(Path::new(&args[1]))?;
    for w in &doc.metadata.warnings {
        eprintln!("warning: {w}");
    }
    std::fs::write(&args[2], serialize_native_case(&doc)?)?;
    Ok(())
}
