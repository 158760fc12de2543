//! Slit-plane diagonal kernel against the wedge series (opening 2π, Bessel
//! expansion evaluated independently).

use benedicks::geometry::{BenedicksDomain, Point};
use benedicks::pde::{kernel_field, Grid, HeatOptions};
use std::sync::Arc;

const WEDGE: [(f64, f64); 4] = [
    (10.0, 0.010_701_322_334_183_656),
    (20.0, 0.00381409483238668),
    (50.0, 0.000917128077413214),
    (100.0, 3.085_434_519_900_039e-4),
];

#[test]
fn diagonal_kernel_matches_the_wedge_series() {
    let grid = Arc::new(Grid::build(&BenedicksDomain::slit_plane(), 40.0, 0.1).unwrap());
    let x = Point::new(vec![0.0, 2.0]).unwrap();
    let ts: Vec<f64> = WEDGE.iter().map(|w| w.0).collect();
    let opts = HeatOptions {
        dt: 0.01,
        dt_growth: 0.02,
        ..HeatOptions::default()
    };
    let run = kernel_field(&grid, &x, &ts, &opts, None).unwrap();
    let mut pde = Vec::new();
    for (t, exact) in WEDGE {
        let v = run.value(t, &x).unwrap();
        // The error grows with t: the slit tip is first order in dx.
        assert!((v - exact).abs() / exact < 0.025, "t = {t}: {v} vs {exact}");
        pde.push(v);
    }
    let slope = |a: f64, b: f64| (b / a).ln() / 10f64.ln();
    let exact = slope(WEDGE[0].1, WEDGE[3].1);
    assert!((slope(pde[0], pde[3]) - exact).abs() < 0.01, "{exact}");
}
