//! Generate a layout, save it as JSON, reload it and label it; the
//! structure file round-trips the same way.

use dnc::cluster::{label_rrhs, BlockStructure};
use dnc::netgen::{generate_layout, AreaGeometry, NetworkLayout};

fn main() -> dnc::Result<()> {
    let dir = std::env::temp_dir().join("dnc-layout-io");
    std::fs::create_dir_all(&dir)?;
    let layout = generate_layout(AreaGeometry::circle(1500.0, 1.0)?, 80, 60, 21)?;
    let path = dir.join("layout.json");
    std::fs::write(&path, layout.to_json()?)?;
    let back = NetworkLayout::from_json(&std::fs::read_to_string(&path)?)?;
    assert_eq!(back, layout);

    let s = label_rrhs(&back, 1000.0, 120.0)?;
    let spath = dir.join("structure.json");
    std::fs::write(&spath, s.to_json()?)?;
    let s2 = BlockStructure::from_json(&std::fs::read_to_string(&spath)?)?;
    assert_eq!(s2.new_of_old, s.new_of_old);
    println!("layout and structure written to {}", dir.display());
    println!(
        "{} RRHs, {} diagonal blocks, {} cut nodes",
        back.n_rrh(),
        s.layer_stats()[0].diag_blocks,
        s.root.boundary.len()
    );
    Ok(())
}
