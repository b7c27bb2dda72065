//! Simulation batteries behind `irfkit replicate`.

use rayon::prelude::*;
use serde::Serialize;

use irfkit::irf::{dlm, dlm_innovation, lp, lp_iv, lp_leads, lp_residual_adjusted, Estimator, IrfSpec, LeadsRule};
use irfkit::{
    cholesky_irf, closed_form_irf, fit_var, simulate, simulate_replicate, varx_irf, DgpSpec, Error, Result, Series,
};

pub const FIGURES: [&str; 7] = ["fig1", "fig2", "figB1", "figB2", "figB3", "figB4", "figB5"];

const RHO: f64 = 0.9;
const B0: f64 = 1.5;
const B1: f64 = 1.0;
const GAMMA: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct FigureOptions {
    pub seed: u64,
    pub length: usize,
    pub horizon: usize,
    pub dlm_lags: usize,
    pub replications: usize,
    /// Observed shock for figB3.
    pub shock: Option<Series>,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            length: 1_000_000,
            horizon: 20,
            dlm_lags: 50,
            replications: 10_000,
            shock: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub id: String,
    pub legend: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Figure {
    pub id: String,
    pub title: String,
    pub curves: Vec<Curve>,
    pub warnings: Vec<String>,
}

impl Figure {
    fn new(id: &str, title: &str) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            curves: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn push(&mut self, id: &str, legend: &str, values: Vec<f64>) {
        self.curves.push(Curve {
            id: id.into(),
            legend: legend.into(),
            values,
        });
    }

    fn absorb(&mut self, warnings: &[String]) {
        for w in warnings {
            if !self.warnings.contains(w) {
                self.warnings.push(w.clone());
            }
        }
    }

    pub fn curve(&self, id: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.id == id)
    }
}

pub fn is_known(id: &str) -> bool {
    FIGURES.contains(&id)
}

pub fn replicate(id: &str, opts: &FigureOptions) -> Result<Figure> {
    match id {
        "fig1" => fig1(opts),
        "fig2" => fig2(opts),
        "figB1" => fig_b1(opts),
        "figB2" => fig_b2(opts),
        "figB3" => fig_b3(opts),
        "figB4" => fig_b4(opts),
        "figB5" => fig_b5(opts),
        other => Err(Error::Parameter(format!(
            "unknown figure '{other}'; valid ids: {}",
            FIGURES.join(", ")
        ))),
    }
}

fn extended(gamma: f64, opts: &FigureOptions) -> Result<(Series, Series)> {
    let d = simulate(&DgpSpec::extended(RHO, B0, B1, gamma, opts.length, opts.seed))?;
    Ok((d.y().clone(), d.x().clone()))
}

/// LP specification with one lag of the outcome and of the shock.
fn lp_spec(estimator: Estimator, y: &Series, h: usize) -> IrfSpec {
    IrfSpec::new(estimator, h).control(y, 1).shock_lags(1)
}

fn fig1(opts: &FigureOptions) -> Result<Figure> {
    let h = opts.horizon;
    let mut fig = Figure::new("fig1", "Simulated responses using local projections");
    let (y0, x0) = extended(0.0, opts)?;
    let r = lp(&y0, &x0, &lp_spec(Estimator::Lp, &y0, h))?;
    fig.absorb(&r.warnings);
    fig.push("gamma0_no_leads", "gamma=0, no leads", r.point);
    let (y, x) = extended(GAMMA, opts)?;
    let r = lp(&y, &x, &lp_spec(Estimator::Lp, &y, h))?;
    fig.absorb(&r.warnings);
    fig.push("gamma02_no_leads", "gamma=0.2, no leads", r.point);
    let r = lp_leads(&y, &x, &lp_spec(Estimator::LpLeads, &y, h))?;
    fig.absorb(&r.warnings);
    fig.push("gamma02_leads", "gamma=0.2, leads", r.point);
    Ok(fig)
}

fn fig2(opts: &FigureOptions) -> Result<Figure> {
    let h = opts.horizon;
    let spec = |e| IrfSpec::new(e, h).dlm_lags(opts.dlm_lags.max(h));
    let mut fig = Figure::new("fig2", "Simulated responses using distributed lag models");
    let (y0, x0) = extended(0.0, opts)?;
    fig.push("gamma0_dlm", "gamma=0, DLM", dlm(&y0, &x0, &spec(Estimator::Dlm))?.point);
    let (y, x) = extended(GAMMA, opts)?;
    fig.push("gamma02_dlm", "gamma=0.2, DLM", dlm(&y, &x, &spec(Estimator::Dlm))?.point);
    fig.push(
        "gamma02_dlm_innovations",
        "gamma=0.2, DLM on estimated innovations",
        dlm_innovation(&y, &x, &spec(Estimator::DlmInnovation))?.point,
    );
    Ok(fig)
}

fn fig_b1(opts: &FigureOptions) -> Result<Figure> {
    let h = opts.horizon;
    let mut fig = Figure::new("figB1", "VAR responses to the shock innovation");
    for (gamma, tag, label) in [(0.0, "gamma0", "gamma=0"), (GAMMA, "gamma02", "gamma=0.2")] {
        let (y, x) = extended(gamma, opts)?;
        let l = lp(&y, &x, &lp_spec(Estimator::Lp, &y, h))?;
        fig.push(&format!("lp_y_{tag}"), &format!("LP, {label}"), l.point);
        let fit = fit_var(&[x.clone(), y.clone()], 1)?;
        let out = cholesky_irf(&fit, h, x.name(), &[], 0.95)?;
        for (name, r) in out {
            fig.absorb(&r.warnings);
            fig.push(&format!("var_{name}_{tag}"), &format!("VAR, response of {name}, {label}"), r.point);
        }
    }
    fig.curves.sort_by_key(|c| c.id.starts_with("var_x"));
    Ok(fig)
}

fn fig_b2(opts: &FigureOptions) -> Result<Figure> {
    let h = opts.horizon;
    let mut fig = Figure::new("figB2", "Shock as an endogenous or an exogenous VAR variable");
    for (gamma, tag, label) in [(0.0, "gamma0", "gamma=0"), (GAMMA, "gamma02", "gamma=0.2")] {
        let (y, x) = extended(gamma, opts)?;
        let fit = fit_var(&[x.clone(), y.clone()], 1)?;
        let endog = cholesky_irf(&fit, h, x.name(), &[], 0.95)?;
        let y_resp = endog.into_iter().find(|(n, _)| n == y.name()).expect("outcome response").1;
        fig.push(&format!("var_endogenous_{tag}"), &format!("endogenous shock, {label}"), y_resp.point);
        let exog = varx_irf(std::slice::from_ref(&y), &x, 1, h, h, 0.95)?;
        fig.absorb(&exog[0].1.warnings);
        fig.push(
            &format!("var_exogenous_{tag}"),
            &format!("exogenous shock, {label}"),
            exog[0].1.point.clone(),
        );
    }
    Ok(fig)
}

fn fig_b3(opts: &FigureOptions) -> Result<Figure> {
    let shock = opts.shock.as_ref().ok_or_else(|| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "figB3 simulates the outcome around an observed shock series; supply it with --shock-csv \
             (and --shock-column if the file has several value columns)",
        ))
    })?;
    if opts.replications == 0 {
        return Err(Error::Parameter("figB3 needs at least one replication".into()));
    }
    let h = opts.horizon;
    let spec = DgpSpec::external_shock(shock.clone(), RHO, B0, B1, opts.seed);
    spec.validate()?;
    let theory = closed_form_irf(&spec, h, false)?;
    let per_rep: Vec<[Vec<f64>; 3]> = (0..opts.replications as u64)
        .into_par_iter()
        .map(|r| {
            let d = simulate_replicate(&spec, r)?;
            let (y, x) = (d.y(), d.x());
            let base = lp_spec(Estimator::Lp, y, h);
            let one = base.with_estimator(Estimator::LpLeads).leads(LeadsRule::Fixed { leads: 1 });
            let many = base.with_estimator(Estimator::LpLeads).leads(LeadsRule::Fixed { leads: h });
            Ok([
                lp(y, x, &base)?.point,
                lp_leads(y, x, &one)?.point,
                lp_leads(y, x, &many)?.point,
            ])
        })
        .collect::<Result<_>>()?;
    let mean = |k: usize| -> Vec<f64> {
        let mut acc = vec![0.0; h + 1];
        for rep in &per_rep {
            for (a, v) in acc.iter_mut().zip(&rep[k]) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / per_rep.len() as f64).collect()
    };
    let mut fig = Figure::new("figB3", "Simulated responses to an observed shock series");
    fig.push("theory", "response to a serially uncorrelated shock", theory);
    fig.push("lp_no_leads", "LP, no leads", mean(0));
    fig.push("lp_one_lead", "LP, one lead", mean(1));
    fig.push("lp_h_leads", &format!("LP, {h} leads"), mean(2));
    Ok(fig)
}

fn fig_b4(opts: &FigureOptions) -> Result<Figure> {
    let h = opts.horizon;
    let mut fig = Figure::new("figB4", "Local projections with instrumental variables");
    let bench = simulate(&DgpSpec::iv(2.0, 1.0, 0.0, opts.length, opts.seed))?;
    let ols_spec = IrfSpec::new(Estimator::Lp, h);
    fig.push(
        "benchmark",
        "no endogeneity, no persistence",
        lp(bench.y(), bench.get("g")?, &ols_spec)?.point,
    );
    for (gamma, panel) in [(0.0, "a"), (GAMMA, "b")] {
        let d = simulate(&DgpSpec::iv(2.0, 0.5, gamma, opts.length, opts.seed))?;
        let (y, g, z) = (d.y(), d.get("g")?, d.get("z")?);
        let label = if gamma == 0.0 { "gamma=0" } else { "gamma=0.2" };
        fig.push(&format!("{panel}_ols"), &format!("LP by OLS, {label}"), lp(y, g, &ols_spec)?.point);
        let iv = lp_iv(y, g, z, &IrfSpec::new(Estimator::LpIv, h))?;
        fig.absorb(&iv.warnings);
        fig.push(&format!("{panel}_iv"), &format!("LP-IV, {label}"), iv.point);
        if gamma != 0.0 {
            let mut spec = IrfSpec::new(Estimator::LpIvLeads, h);
            spec.lead_series = Some(d.x().clone());
            let r = lp_iv(y, g, z, &spec)?;
            fig.absorb(&r.warnings);
            fig.push(&format!("{panel}_iv_leads"), &format!("LP-IV with shock leads, {label}"), r.point);
        }
    }
    Ok(fig)
}

fn fig_b5(opts: &FigureOptions) -> Result<Figure> {
    let h = opts.horizon;
    let mut fig = Figure::new("figB5", "Local projections on AR-adjusted shocks");
    let (y0, x0) = extended(0.0, opts)?;
    let r = lp_residual_adjusted(&y0, &x0, &lp_spec(Estimator::LpResidualAdjusted, &y0, h))?;
    fig.absorb(&r.warnings);
    fig.push("gamma0_adjusted", "gamma=0, adjusted shock and its lag", r.point);
    let (y, x) = extended(GAMMA, opts)?;
    let r = lp_residual_adjusted(&y, &x, &lp_spec(Estimator::LpResidualAdjusted, &y, h))?;
    fig.push("gamma02_adjusted", "gamma=0.2, adjusted shock and its lag", r.point);
    let spec = IrfSpec::new(Estimator::LpResidualAdjusted, h).control(&y, 1);
    let r = lp_residual_adjusted(&y, &x, &spec)?;
    fig.push("gamma02_adjusted_no_lag", "gamma=0.2, adjusted shock only", r.point);
    Ok(fig)
}
