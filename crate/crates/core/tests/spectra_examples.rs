use dicke_core::fluctuations::{build_system, eigenvalues};
use dicke_core::spectra::{fluorescence, homodyne, optimal_squeezing, transmission};
use dicke_core::{mu_tilde, DickeParams, PhaseTag};

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Local maxima on the positive half-line with their FWHM.
fn peaks(x: &[f64], y: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for k in 1..y.len() - 1 {
        if x[k] > 0.0 && y[k] > y[k - 1] && y[k] >= y[k + 1] {
            let half = 0.5 * y[k];
            let mut l = k;
            while l > 0 && y[l] > half {
                l -= 1;
            }
            let mut r = k;
            while r < y.len() - 1 && y[r] > half {
                r += 1;
            }
            let lerp = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
            out.push((x[k], y[k], lerp(r, r - 1) - lerp(l, l + 1)));
        }
    }
    out
}

#[test]
fn fluorescence_peaks_follow_eigenvalues() {
    let p = DickeParams::canonical();
    let x = grid(-3.0, 3.0, 120_001);
    let s = fluorescence(&p, 0.4, &x).unwrap();
    let found = peaks(&x, &s.values);
    assert_eq!(found.len(), 2, "{found:?}");
    let ev = eigenvalues(&build_system(&p, 0.4, PhaseTag::Normal).unwrap());
    // The photonic peak is isolated enough for a clean half maximum; the
    // atomic one sits on the tail of its neighbour, which widens its
    // half-maximum width by about 25%.
    for (pair, width_tol) in [(ev.photonic, 0.1), (ev.atomic, 0.3)] {
        let e = pair[0];
        let (pos, _, fwhm) = found
            .iter()
            .copied()
            .min_by(|a, b| (a.0 - e.im.abs()).abs().total_cmp(&(b.0 - e.im.abs()).abs()))
            .unwrap();
        assert!((pos - e.im.abs()).abs() <= 0.02 * e.im.abs(), "{pos} vs {e}");
        assert!((fwhm + 2.0 * e.re).abs() <= width_tol * 2.0 * e.re.abs(), "{fwhm} vs {e}");
        assert!((pos - e.im.abs()).abs() <= -0.5 * e.re * 2.0);
    }
}

#[test]
fn transmission_peaks_align_with_fluorescence() {
    // Both spectra resolve the same two branch resonances, within
    // 3% of the eigenvalue frequency and of one another.
    let p = DickeParams::canonical();
    let x = grid(-3.0, 3.0, 60_001);
    let f = peaks(&x, &fluorescence(&p, 0.4, &x).unwrap().values);
    let t = transmission(&p, 0.4, &x).unwrap();
    let mut tp = peaks(&x, &t.values);
    tp.sort_by(|a, b| b.1.total_cmp(&a.1));
    let ev = eigenvalues(&build_system(&p, 0.4, PhaseTag::Normal).unwrap());
    let freqs = [ev.photonic[0].im.abs(), ev.atomic[0].im.abs()];
    for (pos, _, _) in tp.iter().take(2) {
        let best = f.iter().map(|q| (q.0 - pos).abs() / q.0).fold(f64::INFINITY, f64::min);
        assert!(best <= 0.03, "{pos}");
        let eig = freqs.iter().map(|w| (w - pos).abs() / w).fold(f64::INFINITY, f64::min);
        assert!(eig <= 0.03, "{pos}");
    }
}

#[test]
fn far_above_threshold_photonic_peak_is_bare_cavity() {
    let p = DickeParams::canonical();
    let l = 5.0 * p.lambda_c();
    let x = grid(0.0, 3.0, 60_001);
    let s = fluorescence(&p, l, &x).unwrap();
    let found = peaks(&x, &s.values);
    let (pos, _, fwhm) = found
        .iter()
        .copied()
        .min_by(|a, b| (a.0 - 1.0).abs().total_cmp(&(b.0 - 1.0).abs()))
        .unwrap();
    assert!((pos - 1.0).abs() < 0.05, "{pos}");
    assert!((fwhm - 0.4).abs() < 0.04, "{fwhm}");
}

#[test]
fn transmission_peak_at_zero_grows_near_threshold() {
    let p = DickeParams::canonical();
    let lc = p.lambda_c();
    let heights: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|e| transmission(&p, lc * (1.0 - e), &[0.0]).unwrap().values[0])
        .collect();
    assert!(heights[0] < heights[1] && heights[1] < heights[2], "{heights:?}");
}

#[test]
fn squeezing_switches_branch_with_quadrature() {
    let p = DickeParams::canonical();
    let ev = eigenvalues(&build_system(&p, 0.49, PhaseTag::Normal).unwrap());
    let at = ev.atomic[0].im.abs();
    let ph = ev.photonic[0].im.abs();
    let s0 = homodyne(&p, 0.49, 0.0, &[at, ph]).unwrap();
    let s1 = homodyne(&p, 0.49, std::f64::consts::FRAC_PI_2, &[at, ph]).unwrap();
    assert!(s0.values[0] < 0.0, "{:?}", s0.values);
    assert!(s1.values[1] < 0.0, "{:?}", s1.values);
}

#[test]
fn atomic_resonance_squeezing_deepens_above_threshold() {
    let p = DickeParams::canonical();
    let mut last = 0.0;
    for f in [1.5, 2.5, 4.0] {
        let l = f * p.lambda_c();
        let mu = mu_tilde(&p, l, PhaseTag::Superradiant).unwrap();
        let ev = eigenvalues(&build_system(&p, l, PhaseTag::Superradiant).unwrap());
        let nu = ev.atomic[0].im.abs();
        assert!((nu - p.omega0 / mu).abs() < 0.05 * nu);
        let v = homodyne(&p, l, 0.0, &[nu]).unwrap().values[0];
        assert!(v < last && v >= -0.25, "{f}: {v}");
        last = v;
    }
    assert!(last < -0.24);
}

#[test]
fn optimal_squeezing_approaches_perfect_near_threshold() {
    let p = DickeParams::canonical();
    let lc = p.lambda_c();
    let target = (p.kappa / p.omega).atan() + std::f64::consts::FRAC_PI_2;
    let mut prev = f64::INFINITY;
    for e in [1e-2, 1e-3, 1e-4, 1e-6] {
        let o = optimal_squeezing(&p, lc * (1.0 - e)).unwrap();
        let gap = (o.theta_min.unwrap() - target).abs();
        assert!(gap < prev);
        prev = gap;
        assert!(o.s_min > -0.25);
    }
    assert!(prev < 1e-5);
    assert!(optimal_squeezing(&p, lc * (1.0 - 1e-6)).unwrap().s_min < -0.2499);
}
