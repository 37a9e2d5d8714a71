use fisherlab_web::{legendre_report, power_law_report, spectrum_report};

#[test]
fn spectrum_of_the_oscillator() {
    let v = spectrum_report(&[2], &[-4.0], 3).unwrap();
    let alphas: Vec<f64> = v.states.iter().map(|s| s.alpha).collect();
    // α_n = 4(2n + 1) at ω = 1
    for (n, a) in alphas.iter().enumerate() {
        assert!((a - 4.0 * (2 * n + 1) as f64).abs() < 1e-4, "{alphas:?}");
    }
    assert_eq!(v.x.len(), v.u.len());
    assert!(v.x.len() <= 2 * 400 + 1);
    assert!(v.states.iter().all(|s| s.psi.len() == v.x.len()));
    assert_eq!(v.states[2].nodes, 2);
    // the plot window must contain the classical turning points of the top level
    let turning = (2.0f64 * 2.5).sqrt();
    assert!(v.x[0] < -turning && *v.x.last().unwrap() > turning);
}

#[test]
fn spectrum_rejects_bad_input() {
    assert!(spectrum_report(&[2], &[4.0], 1).is_err());
    assert!(spectrum_report(&[2, 4], &[-4.0], 1).is_err());
    assert!(spectrum_report(&[2], &[-4.0], 0).is_err());
}

#[test]
fn power_law_for_the_quartic() {
    let v = power_law_report(4, -1.0, 6, 0).unwrap();
    assert_eq!(v.points.len(), 6);
    assert!((v.alpha_fit.exponent_fit - 1.0 / 3.0).abs() < 1e-4);
    assert!((v.fisher_fit.exponent_fit + 0.5).abs() < 1e-3);
    assert!(v.constants.product_residual < 1e-3);
    assert!(power_law_report(3, -1.0, 6, 0).is_err());
}

#[test]
fn legendre_tangent_matches_the_moment() {
    let v = legendre_report(&[2, 4], &[-4.0, -1.0], 4, 0, 0.5, 9).unwrap();
    assert_eq!(v.curve.len(), 9);
    assert!((v.slope_numeric - v.slope_predicted).abs() < 1e-4 * v.moment.abs().max(1.0));
    // α is concave in each multiplier
    for w in v.curve.windows(3) {
        let second = w[0].alpha - 2.0 * w[1].alpha + w[2].alpha;
        assert!(second <= 1e-9, "{second}");
    }
}

#[test]
fn legendre_curve_skips_nonconfining_samples() {
    // λ₂ = -4 ± 8 crosses zero, which leaves no confining term
    let v = legendre_report(&[2], &[-4.0], 2, 0, 2.0, 9).unwrap();
    assert!(v.curve.len() < 9);
    assert!(v.curve.iter().all(|c| c.lambda < 0.0));
}
