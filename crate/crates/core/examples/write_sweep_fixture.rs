//! Regenerates `fixtures/sweep/` from the seeded generator.

use std::path::Path;

use recjust::axioms::{EDGE_HEADER, NODE_HEADER};
use recjust::eval::{mixed_type_fixture, users_to_text, SWEEP_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sweep");
    std::fs::create_dir_all(&dir)?;
    let (g, users) = mixed_type_fixture(SWEEP_SEED)?;
    std::fs::write(dir.join("nodes.tsv"), format!("{NODE_HEADER}{}", g.to_node_text()))?;
    std::fs::write(dir.join("edges.tsv"), format!("{EDGE_HEADER}{}", g.to_edge_text()))?;
    std::fs::write(dir.join("users.tsv"), users_to_text(&users))?;
    println!("{} nodes, {} edges, {} users", g.node_count(), g.edge_count(), users.len());
    Ok(())
}
