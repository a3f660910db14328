//! Monte Carlo SINR ratio of the sparsified detector against the analytic
//! lower bound on a small disk network.

use dnc::detect::{sinr_ratio_sweep, Scenario};
use dnc::netgen::{AreaGeometry, PdfKind};
use dnc::threshold::{sinr_ratio_lower_bound, ThresholdQuery, UserLoad};

fn main() -> dnc::Result<()> {
    let radius = 2000.0;
    let scenario = Scenario {
        geometry: AreaGeometry::circle(radius, 1.0)?,
        n_rrh: 120,
        n_user: 100,
        alpha: 3.7,
        power: 1e8,
        n0: 1.0,
        pdf: PdfKind::Approx,
        users_per_trial: Some(10),
    };
    let d0s = [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0];
    let (est, _) = sinr_ratio_sweep(&scenario, &d0s, 60, 7)?;
    let q = ThresholdQuery::standard(0.9, radius, UserLoad::Count(scenario.n_user));
    println!("d0,rho_hat,std_error,bound");
    for e in est {
        let bound = sinr_ratio_lower_bound(e.d0, &q)?;
        println!("{},{:.4},{:.4},{:.4}", e.d0, e.ratio, e.std_error, bound);
    }
    Ok(())
}
