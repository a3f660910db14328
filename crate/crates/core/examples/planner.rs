//! Optimal cluster sizes and computing modes for a few BBU-pool profiles,
//! with the cost model evaluated on a labelled layout.

use dnc::cluster::{label_rrhs, nest_labelling};
use dnc::netgen::{generate_layout, AreaGeometry};
use dnc::planner::{self, cost_model, CostQuery, PoolProfile};
use num_rational::Rational64;

fn main() -> dnc::Result<()> {
    let q = |a, b| Rational64::new(a, b);
    for s in [q(0, 1), q(1, 5), q(3, 7), q(1, 1)] {
        let p = planner::optimal_single_layer(s);
        println!(
            "single layer s={s}: {:?}, z1={}, order {}",
            p.mode, p.z1, p.order
        );
    }
    for (s1, s2) in [
        (q(0, 1), q(0, 1)),
        (q(1, 1), q(1, 1)),
        (q(1, 1), q(0, 1)),
        (q(1, 2), q(1, 4)),
    ] {
        let p = planner::optimal_two_layer(s1, s2);
        println!(
            "two layers s=({s1},{s2}): {:?}, z=({},{}), order {}",
            p.mode, p.z1, p.z2, p.order
        );
    }

    let (n, beta, d0) = (4096, 10.0, 100.0);
    let plan = planner::plan_two_layer(q(0, 1), q(0, 1), n, d0, beta)?;
    let side = (n as f64 / (beta * 1e-6)).sqrt();
    let layout = generate_layout(AreaGeometry::rectangle(side, side, 1.0)?, n, n, 5)?;
    let s = nest_labelling(
        &label_rrhs(&layout, plan.sides[0], d0)?,
        &layout,
        plan.sides[1],
        d0,
    )?;
    let l1 = 1.0 + beta * 1e-6 * std::f64::consts::PI * (2.0 * d0).powi(2);
    let cq = CostQuery {
        profile: PoolProfile::single(0.0),
        mode: plan.mode,
        layers: 2,
        l1,
        l2: l1,
        units_cap: None,
    };
    let cost = cost_model(&s, &cq)?;
    println!(
        "N={n}: sides {:?}, model time {:.3e} vs dense {:.3e}",
        plan.sides,
        cost.model_time,
        planner::dense_baseline(n)
    );
    Ok(())
}
