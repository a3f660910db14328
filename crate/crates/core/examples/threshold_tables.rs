//! Distance thresholds and sparsity for the two reference sweeps: growing
//! network radius at ρ* = 0.95, and growing ρ* at r = 10 km.

use dnc::threshold::{
    expected_sparsity, solve_threshold, threshold_large_r, ThresholdQuery, UserLoad,
};

fn main() -> dnc::Result<()> {
    println!("r_km,rho,d0_m,sparsity_pct,closed_form_m");
    for r_km in [5.0, 10.0, 15.0, 20.0] {
        let q = ThresholdQuery::standard(0.95, r_km * 1e3, UserLoad::Density(10.0));
        let d0 = solve_threshold(&q)?;
        let closed = threshold_large_r(&q)?.finite_r;
        println!(
            "{r_km},0.95,{d0:.1},{:.3},{closed:.1}",
            100.0 * expected_sparsity(d0, q.r)
        );
    }
    for rho in [0.90, 0.93, 0.96, 0.99] {
        let q = ThresholdQuery::standard(rho, 10e3, UserLoad::Density(10.0));
        let d0 = solve_threshold(&q)?;
        let closed = threshold_large_r(&q)?.finite_r;
        println!(
            "10,{rho},{d0:.1},{:.3},{closed:.1}",
            100.0 * expected_sparsity(d0, q.r)
        );
    }
    Ok(())
}
