mod support;

use dicke_core::DickeParams;
use support::langevin::{compare, Oracle, ORACLE_POINTS};

#[test]
fn simulated_periodograms_match_analytic_spectra() {
    let p = DickeParams::canonical();
    let o = Oracle::default();
    for point in ORACLE_POINTS {
        let c = compare(&p, point, 0.0, &o);
        assert!(c.z().abs() <= 3.0, "{point:?}: exact {} simulated {} +- {}", c.exact, c.simulated, c.std_err);
    }
}

#[test]
fn oracle_rejects_a_rotated_quadrature() {
    // Same trajectories compared against the conjugate quadrature must fail.
    let p = DickeParams::canonical();
    let o = Oracle::default();
    let c = compare(&p, ORACLE_POINTS[5], std::f64::consts::FRAC_PI_2, &o);
    assert!(c.z().abs() > 10.0, "z = {}", c.z());
}
