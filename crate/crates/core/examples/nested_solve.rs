//! End-to-end detection: sparsify, cluster on two layers, solve with every
//! computing mode and compare against a dense solve.

use dnc::channel::{generate_channel, sparsify, transmit};
use dnc::cluster::{label_rrhs, nest_labelling, permute_to_dbbd};
use dnc::detect::{build_a_hat, compute_n1};
use dnc::netgen::{generate_layout, AreaGeometry, PdfKind};
use dnc::planner::{Mode, PoolProfile};
use dnc::solver;

fn main() -> dnc::Result<()> {
    let d0 = 200.0;
    let g = AreaGeometry::circle(4000.0, 1.0)?;
    let layout = generate_layout(g, 500, 400, 11)?;
    let powers = vec![1e8; layout.n_user()];
    let ch = generate_channel(&layout, 3.7, d0, &powers, 1.0, 12)?;
    let y = transmit(&ch, 13);
    let (h_hat, _) = sparsify(&ch);
    let n1 = compute_n1(d0, 3.7, &g, &powers, PdfKind::Approx)?;
    let a = build_a_hat(&h_hat, &powers, 1.0, n1);

    let s = nest_labelling(&label_rrhs(&layout, 2700.0, d0)?, &layout, 1300.0, d0)?;
    let sys = permute_to_dbbd(&a, &s, &y.y)?;
    let reference = solver::dense_reference(&a, &y.y)?;
    for mode in [Mode::Mode1, Mode::Mode2, Mode::Mode3] {
        let (omega, trace) = solver::solve(&sys, 4, mode)?;
        let omega = sys.unpermute(&omega);
        let (x_hat, _) = solver::detect_from_omega(&omega, &h_hat, &powers)?;
        println!(
            "{}: relative error {:.2e}, flops {}, model time {:.3e}, x_hat {}",
            mode.name(),
            solver::vector_relative_error(&omega, &reference),
            trace.total_flops(),
            trace.critical_path_model_time(&PoolProfile::single(0.0)),
            &solver::checksum(&x_hat)[..16]
        );
    }
    Ok(())
}
