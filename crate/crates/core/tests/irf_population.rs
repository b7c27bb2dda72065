//! Estimators against the closed-form population responses at T = 1e6.

use irfkit::irf::{
    dlm, dlm_innovation, lp, lp_iv, lp_leads, lp_residual_adjusted, nonlinear_lp, Estimator, IrfResult, IrfSpec,
    Regime,
};
use irfkit::{closed_form_irf, simulate, DgpSpec, Series};

const T: usize = 1_000_000;

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Paths {
    lp: IrfResult,
    leads: IrfResult,
    dlm: IrfResult,
    innov: IrfResult,
    r: Vec<f64>,
    r_star: Vec<f64>,
    y: Series,
    x: Series,
}

fn run(spec: &DgpSpec, h: usize) -> Paths {
    let d = simulate(spec).unwrap();
    let (y, x) = (d.y(), d.x());
    let mut base = IrfSpec::new(Estimator::Lp, h);
    if matches!(spec.kind, irfkit::DgpKind::Extended { .. }) {
        base = base.control(y, 1).shock_lags(1);
    }
    Paths {
        lp: lp(y, x, &base).unwrap(),
        leads: lp_leads(y, x, &base.with_estimator(Estimator::LpLeads)).unwrap(),
        dlm: dlm(y, x, &IrfSpec::new(Estimator::Dlm, h).dlm_lags(50)).unwrap(),
        innov: dlm_innovation(y, x, &IrfSpec::new(Estimator::DlmInnovation, h).dlm_lags(50)).unwrap(),
        r: closed_form_irf(spec, h, true).unwrap(),
        r_star: closed_form_irf(spec, h, false).unwrap(),
        y: y.clone(),
        x: x.clone(),
    }
}

fn check_propositions(p: &Paths, tag: &str) {
    assert!(max_gap(&p.leads.point, &p.dlm.point) < 0.02, "{tag}: leads {:?} dlm {:?}", p.leads.point, p.dlm.point);
    assert!(max_gap(&p.innov.point, &p.lp.point) < 0.02, "{tag}: innov {:?} lp {:?}", p.innov.point, p.lp.point);
    assert!(max_gap(&p.dlm.point, &p.r_star) < 0.02, "{tag}: dlm {:?} R* {:?}", p.dlm.point, p.r_star);
    assert!(max_gap(&p.innov.point, &p.r) < 0.02, "{tag}: innov {:?} R {:?}", p.innov.point, p.r);
    let impacts = [p.lp.point[0], p.leads.point[0], p.dlm.point[0], p.innov.point[0]];
    let spread = impacts.iter().cloned().fold(f64::MIN, f64::max) - impacts.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.02, "{tag}: impacts {impacts:?}");
}

#[test]
fn simple_dgp_propositions() {
    for (i, gamma) in [-0.5, 0.0, 0.2, 0.5].into_iter().enumerate() {
        let p = run(&DgpSpec::simple(1.5, gamma, T, 100 + i as u64), 10);
        assert!((p.lp.point[0] - p.dlm.point[0]).abs() < 0.01);
        if gamma == 0.0 {
            assert!(max_gap(&p.lp.point, &p.dlm.point) < 0.01);
        } else {
            check_propositions(&p, &format!("simple gamma={gamma}"));
        }
        let diff = p.lp.point[1] - p.dlm.point[1];
        if gamma == 0.2 {
            assert!(diff.abs() > 0.25);
        }
        if gamma > 0.0 {
            assert!(diff > 0.0);
        } else if gamma < 0.0 {
            assert!(diff < 0.0);
        }
    }
}

#[test]
fn extended_dgp_propositions() {
    for (i, gamma) in [0.0, 0.2, 0.5].into_iter().enumerate() {
        let spec = DgpSpec::extended(0.9, 1.5, 1.0, gamma, T, 200 + i as u64);
        let p = run(&spec, 10);
        check_propositions(&p, &format!("extended gamma={gamma}"));
        assert!(max_gap(&p.lp.point, &p.r) < 0.02, "lp {:?} R {:?}", p.lp.point, p.r);
        assert!(max_gap(&p.leads.point, &p.r_star) < 0.02);
        if gamma == 0.2 {
            for h in 1..=3 {
                assert!(p.lp.point[h] > p.dlm.point[h]);
            }
            let implied = &p.innov.auxiliary["implied_dlm"];
            assert!(max_gap(implied, &p.dlm.point) < 0.02, "{implied:?}");
            let ra_spec = IrfSpec::new(Estimator::LpResidualAdjusted, 2).control(&p.y, 1).shock_lags(1);
            let ra = lp_residual_adjusted(&p.y, &p.x, &ra_spec).unwrap();
            assert!((ra.point[1] - p.lp.point[1]).abs() < 0.03);
            assert!((ra.point[1] - p.r_star[1]).abs() > 0.25);
            assert!(ra.warnings[0].contains("does not"), "{:?}", ra.warnings);
        }
    }
}

#[test]
fn lp_iv_with_and_without_leads() {
    let d = simulate(&DgpSpec::iv(2.0, 0.5, 0.2, T, 31)).unwrap();
    let (y, g, z, x) = (d.y(), d.get("g").unwrap(), d.get("z").unwrap(), d.x());
    let plain = lp_iv(y, g, z, &IrfSpec::new(Estimator::LpIv, 4)).unwrap();
    assert!((plain.point[0] - 2.0).abs() < 0.02, "{:?}", plain.point);
    assert!((plain.point[1] - 0.4).abs() < 0.02, "{:?}", plain.point);
    let mut spec = IrfSpec::new(Estimator::LpIvLeads, 4);
    spec.lead_series = Some(x.clone());
    let leads = lp_iv(y, g, z, &spec).unwrap();
    assert!((leads.point[0] - 2.0).abs() < 0.02);
    for h in 1..=4 {
        assert!(leads.point[h].abs() < 0.02, "h={h}: {:?}", leads.point);
    }
}

#[test]
fn nonlinear_paths_on_regime_switching_dgp() {
    let n = 200_000;
    let d = simulate(&DgpSpec::simple(1.0, 0.0, n, 41)).unwrap();
    let x = d.x();
    let state: Vec<f64> = (0..n).map(|t| ((t / 50) % 2) as f64).collect();
    let y: Vec<f64> = (0..n)
        .map(|t| {
            let s = if t == 0 { 0.0 } else { state[t - 1] };
            (if s == 1.0 { 2.0 } else { 0.5 }) * x.values()[t] + d.get("u").unwrap().values()[t]
        })
        .collect();
    let y = Series::new("y", y).unwrap();
    let state = Series::new("s", state).unwrap();
    let nl = nonlinear_lp(&y, x, &state, &IrfSpec::new(Estimator::NonlinearLp, 2)).unwrap();
    assert!((nl.path(Regime::A).unwrap().point[0] - 2.0).abs() < 0.02);
    assert!((nl.path(Regime::B).unwrap().point[0] - 0.5).abs() < 0.02);
    assert!(!nl.fixed_state);

    let mut fixed = IrfSpec::new(Estimator::NonlinearLp, 2).leads(irfkit::LeadsRule::ConservativeH);
    fixed.state_leads = true;
    let nl = nonlinear_lp(&y, x, &state, &fixed).unwrap();
    assert!(nl.fixed_state);
    assert_eq!(nl.paths[0].label, "fixed-state A");
    assert!((nl.path(Regime::A).unwrap().point[0] - 2.0).abs() < 0.02);
}
