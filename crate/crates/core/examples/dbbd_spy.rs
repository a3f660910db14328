//! Label a layout with two nested grids, permute the sparsified detection
//! matrix to nested DBBD form and write its sparsity pattern for a spy plot.
//!
//! Usage: `cargo run --example dbbd_spy [out.csv]`

use dnc::channel::{generate_channel, sparsify, transmit};
use dnc::cluster::{label_rrhs, nest_labelling, permute_to_dbbd, verify_dbbd};
use dnc::detect::build_a_hat;
use dnc::netgen::{generate_layout, AreaGeometry};

fn main() -> dnc::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "dbbd_pattern.csv".into());
    let d0 = 150.0;
    let layout = generate_layout(AreaGeometry::rectangle(6000.0, 6000.0, 1.0)?, 300, 300, 1)?;
    let powers = vec![1e8; layout.n_user()];
    let ch = generate_channel(&layout, 3.7, d0, &powers, 1.0, 2)?;
    let y = transmit(&ch, 3);
    let (h_hat, _) = sparsify(&ch);
    let a = build_a_hat(&h_hat, &powers, 1.0, 0.0);

    let s = label_rrhs(&layout, 2000.0, d0)?;
    let s = nest_labelling(&s, &layout, 1000.0, d0)?;
    for st in s.layer_stats() {
        println!(
            "layer {}: side {} m, {} diagonal blocks, mean N_d {:.1}, mean N_b {:.1}",
            st.layer, st.side, st.diag_blocks, st.n_d, st.n_b
        );
    }
    let sys = permute_to_dbbd(&a, &s, &y.y)?;
    let report = verify_dbbd(&sys);
    println!(
        "nnz {}, DBBD violations {}",
        a.nnz(),
        report.violations.len()
    );
    std::fs::write(&out, sys.pattern_csv())?;
    println!("pattern written to {out}");
    Ok(())
}
