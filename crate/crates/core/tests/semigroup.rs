use cauchy_gap::functions::{
    make_linear, make_power_family, make_quadratic, make_random_test, SmoothFunction, Vector,
};
use cauchy_gap::semigroup::{
    deficit, project, trajectory, variance_representation_check, RadialFunction, TimeControls,
};
use cauchy_gap::spectral::{closed_form_gap, range_tag, Discretization, RangeTag};
use cauchy_gap::MeasureParams;
use proptest::prelude::*;

fn p(n: usize, beta: f64) -> MeasureParams {
    MeasureParams::new(n, beta).unwrap()
}

fn bumped(f: SmoothFunction, ell: usize) -> RadialFunction {
    let n = f.dim();
    RadialFunction::from_smooth(&f.times_bump(Vector::zeros(n), 1.0, 2.0), ell)
        .unwrap()
        .with_support(2.0, &[1.0])
}

fn line_bump(seed: u64) -> RadialFunction {
    RadialFunction::from_line(&make_random_test(1, seed, 4, 2.0).unwrap())
        .unwrap()
        .with_support(2.0, &[1.0])
}

/// |deficit − time integral| within the tail bound plus 1e−3 relative.
fn assert_consistent(f: &RadialFunction, q: &MeasureParams, range: RangeTag) {
    let d = deficit(
        f,
        q,
        range,
        &Discretization::default(),
        &TimeControls::default(),
    )
    .unwrap();
    let allowed = d.tail_bound + 1e-3 * d.deficit.abs();
    assert!(
        d.discrepancy <= allowed,
        "{range} n={} beta={}: deficit {} vs time integral {}",
        q.n(),
        q.beta(),
        d.deficit,
        d.time_integral
    );
}

#[test]
fn deficit_equals_time_integral_upper() {
    assert_consistent(&line_bump(3), &p(1, 2.0), RangeTag::Upper);
    assert_consistent(
        &bumped(make_linear(&[1.0, 0.0, 0.0]).unwrap(), 1),
        &p(3, 5.0),
        RangeTag::Upper,
    );
}

#[test]
fn deficit_equals_time_integral_mid() {
    assert_consistent(
        &bumped(make_quadratic(3, 1.0, 0.0), 0),
        &p(3, 3.8),
        RangeTag::Mid,
    );
    assert_consistent(
        &bumped(make_linear(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1),
        &p(4, 4.5),
        RangeTag::Mid,
    );
}

#[test]
fn deficit_equals_time_integral_lower() {
    let q = p(2, 2.5);
    assert_consistent(
        &bumped(make_linear(&[1.0, 0.0]).unwrap(), 1),
        &q,
        RangeTag::Lower,
    );
    assert_consistent(&bumped(make_quadratic(2, 1.0, 0.0), 0), &q, RangeTag::Lower);
}

#[test]
fn one_d_upper_deficit_is_a_hessian_integral() {
    let q = p(1, 2.0);
    let d = deficit(
        &line_bump(3),
        &q,
        RangeTag::Upper,
        &Discretization::default(),
        &TimeControls::default(),
    )
    .unwrap();
    let hess = d.one_d_hessian_integral.unwrap();
    assert!(hess < 0.0);
    assert!(
        (hess - d.deficit).abs() <= 1e-3 * d.deficit.abs(),
        "{hess} vs {}",
        d.deficit
    );
}

#[test]
fn variance_representation_with_unbounded_function() {
    // f = (1+|x|²)^0.3 has infinite support; the rule absorbs its growth.
    let q = p(2, 4.0);
    let f = RadialFunction::from_smooth(&make_power_family(2, 0.3), 0).unwrap();
    let c = variance_representation_check(
        &f,
        6.0,
        &q,
        &Discretization::default(),
        &TimeControls::default(),
    )
    .unwrap();
    assert!(
        (c.lhs - c.rhs).abs() <= c.tail_bound + 1e-3 * c.lhs,
        "{} vs {}",
        c.lhs,
        c.rhs
    );
}

#[test]
fn variance_decays_along_the_trajectory() {
    let q = p(3, 3.0);
    let f = bumped(make_quadratic(3, 1.0, -0.5), 0);
    let proj = project(&f, &q, &Discretization::new(256, 1e-3).unwrap()).unwrap();
    let tr = trajectory(&q, &proj.initial, 2.0, 1e-2, &proj.problems).unwrap();
    let var: Vec<f64> = tr.nodes.iter().map(|o| o.variance()).collect();
    assert!(var.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    // Var(P_t f) ≤ e^{−2λ₁t}Var(f), up to the time discretisation.
    let rate = (var[0] / var[var.len() - 1]).ln() / (2.0 * 2.0);
    let gap = closed_form_gap(&q).0;
    assert!(rate >= gap * (1.0 - 1e-3), "{rate} vs {gap}");
}

#[test]
fn wrong_range_is_rejected() {
    let f = bumped(make_linear(&[1.0, 0.0]).unwrap(), 1);
    assert!(deficit(
        &f,
        &p(2, 2.5),
        RangeTag::Upper,
        &Discretization::new(128, 1e-3).unwrap(),
        &TimeControls::default()
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The Poincaré inequality itself: λ₁Var(f) − ∫Γ(f)dμ ≤ 0.
    #[test]
    fn deficit_is_nonpositive(seed in any::<u64>(), beta in 0.55f64..6.0) {
        let q = p(1, beta);
        let time = TimeControls { t_end: Some(0.01), dt: 1e-3, ..TimeControls::default() };
        let disc = Discretization::new(128, 1e-3).unwrap();
        let d = deficit(&line_bump(seed), &q, range_tag(&q), &disc, &time).unwrap();
        prop_assert!(d.deficit <= 1e-10, "{}", d.deficit);
    }

    #[test]
    fn radial_deficit_is_nonpositive(n in 2usize..=4, offset in 0.05f64..5.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let q = p(n, n as f64 / 2.0 + offset);
        let time = TimeControls { t_end: Some(0.01), dt: 1e-3, ..TimeControls::default() };
        let disc = Discretization::new(128, 1e-3).unwrap();
        let f = bumped(make_quadratic(n, a, b), 0);
        let d = deficit(&f, &q, range_tag(&q), &disc, &time).unwrap();
        prop_assert!(d.deficit <= 1e-10, "{}", d.deficit);
    }
}
