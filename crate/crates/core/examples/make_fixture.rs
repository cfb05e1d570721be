//! Regenerate the bundled synthetic shoebox dataset.
//!
//! Usage: `cargo run --example make_fixture -- [OUT_DIR]`

use std::path::PathBuf;

use rirfit::fixture::{write_fixture, FixtureSpec};

fn main() -> rirfit::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures/shoebox"));
    let ds = write_fixture(&out, &FixtureSpec::shoebox())?;
    println!("wrote {} entries to {}", ds.index.entries.len(), out.display());
    Ok(())
}
