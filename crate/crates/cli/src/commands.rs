use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use irfkit::diagnostics::TestResult;
use irfkit::irf::{nonlinear_lp, BandwidthRule, NonlinearIrf, Regime, StateTiming};
use irfkit::tscore::{write_csv, LoadedData};
use irfkit::{
    acf, box_pierce, cholesky_irf, cumulative_multiplier, fit_var, ljung_box, load_csv, panel_serial_test,
    simulate_replicate, varx_irf, CsvSchema, DgpKind, DgpSpec, Estimator, IrfResult, IrfSpec, LeadsRule, NaPolicy,
    Series, RNG_ALGORITHM,
};

use crate::args::*;
use crate::figures::{self, FigureOptions};
use crate::{CliError, CliResult};

/// Normal critical value for the 95% correlogram band.
const BAND_CRITICAL: f64 = 1.959963984540054;

#[derive(Default)]
struct Report {
    outputs: Vec<String>,
    warnings: Vec<String>,
    seed: Option<u64>,
    extra: BTreeMap<String, Value>,
}

struct Writer {
    dir: PathBuf,
    report: Report,
}

impl Writer {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            report: Report::default(),
        })
    }

    fn file(&mut self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        self.report.outputs.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.file(name, text)
    }

    fn warn(&mut self, warnings: &[String]) {
        for w in warnings {
            if !self.report.warnings.contains(w) {
                eprintln!("warning: {w}");
                self.report.warnings.push(w.clone());
            }
        }
    }

    fn finish(mut self, command: &str, config: &impl Serialize) -> CliResult<()> {
        let mut config = serde_json::to_value(config)?;
        if let Value::Object(map) = &mut config {
            map.insert("command".into(), json!(command));
        }
        let mut manifest = json!({
            "tool": "irfkit",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "seed": self.report.seed,
            "rng": RNG_ALGORITHM,
            "outputs": self.report.outputs,
            "warnings": self.report.warnings,
        });
        for (k, v) in std::mem::take(&mut self.report.extra) {
            manifest[k] = v;
        }
        self.json("manifest.json", &manifest)
    }
}

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Test(a) => test(a),
        Command::Simulate(a) => simulate(a),
        Command::Irf(a) => irf(a),
        Command::Multiplier(a) => multiplier(a),
        Command::Replicate(a) => replicate(a),
        Command::Run(_) => Err(CliError::Usage("nested run".into())),
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn na_policy(p: NaPolicyArg) -> NaPolicy {
    match p {
        NaPolicyArg::Reject => NaPolicy::Reject,
        NaPolicyArg::DropRows => NaPolicy::DropRows,
    }
}

fn schema(period: &Option<String>, entity: &Option<String>, values: &[String]) -> CsvSchema {
    let mut s = CsvSchema::infer().with_values(values.iter().cloned());
    if let Some(p) = period {
        s = s.with_period(p.clone());
    }
    if let Some(e) = entity {
        s = s.with_entity(e.clone());
    }
    s
}

fn load_series(path: &Path, period: &Option<String>, policy: NaPolicyArg) -> CliResult<Vec<Series>> {
    Ok(load_csv(path, &schema(period, &None, &[]), na_policy(policy))?.into_series()?)
}

fn find<'a>(series: &'a [Series], name: &str) -> CliResult<&'a Series> {
    series.iter().find(|s| s.name() == name).ok_or_else(|| {
        let names: Vec<&str> = series.iter().map(|s| s.name()).collect();
        CliError::Data(format!("column '{name}' not found; available: {}", names.join(", ")))
    })
}

// ---- test -----------------------------------------------------------------

#[derive(Serialize)]
struct SeriesReport {
    name: String,
    nobs: usize,
    tests: Vec<TestResult>,
}

fn test(a: &TestArgs) -> CliResult<()> {
    let loaded = load_csv(&a.input, &schema(&a.period, &a.entity, &a.columns), na_policy(a.na_policy))?;
    let mut w = Writer::new(&a.output.out)?;
    let mut reports = Vec::new();
    match loaded.data {
        LoadedData::Panel(panel) => {
            for var in panel.variables() {
                let tests = a
                    .lags
                    .iter()
                    .map(|&m| panel_serial_test(&panel, var, m))
                    .collect::<irfkit::Result<Vec<_>>>()?;
                let nobs = panel.variable(var)?.iter().map(|s| s.len()).sum();
                reports.push(SeriesReport {
                    name: var.clone(),
                    nobs,
                    tests,
                });
            }
        }
        LoadedData::Series(series) => {
            for s in &series {
                let tests = a
                    .lags
                    .iter()
                    .map(|&m| match a.kind {
                        TestKindArg::LjungBox => ljung_box(s, m),
                        TestKindArg::BoxPierce => box_pierce(s, m),
                    })
                    .collect::<irfkit::Result<Vec<_>>>()?;
                let c = acf(s, a.acf_lags.min(s.len() - 1))?;
                let mut csv = String::from("lag,acf,bartlett_se,band_lo,band_hi\n");
                for k in 1..=c.acf.len() {
                    let (lo, hi) = c.band(k, BAND_CRITICAL);
                    csv.push_str(&format!("{k},{:?},{:?},{lo:?},{hi:?}\n", c.acf[k - 1], c.bartlett_se[k - 1]));
                }
                w.file(&format!("correlogram_{}.csv", file_stem(s.name())), csv)?;
                reports.push(SeriesReport {
                    name: s.name().to_string(),
                    nobs: s.len(),
                    tests,
                });
            }
        }
    }
    let mut csv = String::from("series,test,lags,statistic,dof,p_value\n");
    for r in &reports {
        for t in &r.tests {
            let kind = serde_json::to_value(t.kind)?;
            csv.push_str(&format!(
                "{},{},{},{:?},{},{:?}\n",
                r.name,
                kind.as_str().unwrap_or(""),
                t.lags_tested,
                t.statistic,
                t.dof,
                t.p_value
            ));
        }
    }
    w.file("test_report.csv", csv)?;
    w.json("test_report.json", &json!({ "series": reports }))?;
    w.finish("test", a)
}

// ---- simulate -------------------------------------------------------------

fn dgp_from_args(a: &SimulateArgs) -> CliResult<DgpSpec> {
    if let Some(p) = &a.spec {
        let text = fs::read_to_string(p).map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display())))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid DGP spec: {e}")));
    }
    let spec = match a.dgp {
        DgpArg::Simple => DgpSpec {
            kind: DgpKind::Simple {
                delta: a.delta,
                gamma: a.gamma,
                sigma_u: a.sigma_u,
                sigma_eps: a.sigma_eps,
            },
            length: a.length,
            seed: a.seed,
        },
        DgpArg::Extended => DgpSpec {
            kind: DgpKind::Extended {
                rho: a.rho,
                b0: a.b0,
                b1: a.b1,
                gamma: a.gamma,
                sigma_u: a.sigma_u,
                sigma_eps: a.sigma_eps,
            },
            length: a.length,
            seed: a.seed,
        },
        DgpArg::Iv => DgpSpec::iv(a.beta, a.lambda, a.gamma, a.length, a.seed),
        DgpArg::ExternalShock => {
            let shock = read_shock(a.shock_csv.as_deref(), a.shock_column.as_deref(), "external-shock")?;
            let mut s = DgpSpec::external_shock(shock, a.rho, a.b0, a.b1, a.seed);
            if let DgpKind::ExternalShock { sigma_u, .. } = &mut s.kind {
                *sigma_u = a.sigma_u;
            }
            s
        }
    };
    Ok(spec)
}

fn read_shock(path: Option<&Path>, column: Option<&str>, what: &str) -> CliResult<Series> {
    let path = path.ok_or_else(|| CliError::Data(format!("{what} needs an observed shock series: pass --shock-csv")))?;
    let series = load_series(path, &None, NaPolicyArg::Reject)?;
    match column {
        Some(c) => Ok(find(&series, c)?.clone()),
        None => Ok(series[0].clone()),
    }
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let spec = dgp_from_args(a)?;
    let data = simulate_replicate(&spec, a.replicate)?;
    let mut w = Writer::new(&a.output.out)?;
    w.report.seed = Some(spec.seed);
    let mut body = Vec::new();
    write_csv(&mut body, &LoadedData::Series(data.series.clone()))?;
    let mut text = format!(
        "# irfkit simulate\n# seed: {}\n# replicate: {}\n# rng: {RNG_ALGORITHM}\n# spec: {}\n",
        spec.seed,
        a.replicate,
        serde_json::to_string(&spec)?
    );
    text.push_str(std::str::from_utf8(&body).expect("utf-8 csv"));
    w.file("simulated.csv", text)?;
    w.report.extra.insert("spec".into(), serde_json::to_value(&spec)?);
    w.finish("simulate", a)
}

// ---- irf ------------------------------------------------------------------

fn parse_control(s: &str) -> CliResult<(String, usize)> {
    match s.split_once(':') {
        Some((name, lags)) => {
            let lags = lags
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("control '{s}': lag count must be an integer")))?;
            Ok((name.trim().to_string(), lags))
        }
        None => Ok((s.trim().to_string(), 4)),
    }
}

fn lead_rule(a: &IrfArgs) -> CliResult<Option<LeadsRule>> {
    let base = match a.leads.as_deref().map(str::trim) {
        None => None,
        Some("h") | Some("conservative") | Some("conservative-h") => Some(LeadsRule::ConservativeH),
        Some(n) => Some(LeadsRule::Fixed {
            leads: n
                .parse()
                .map_err(|_| CliError::Usage(format!("--leads '{n}': expected \"h\" or a lead count")))?,
        }),
    };
    match (base, a.lead_cap) {
        (_, None) => Ok(base),
        (None | Some(LeadsRule::ConservativeH), Some(max)) => Ok(Some(LeadsRule::Capped { max })),
        (Some(_), Some(_)) => Err(CliError::Usage("--lead-cap applies to the \"h\" lead rule only".into())),
    }
}

fn irf_spec(a: &IrfArgs, estimator: Estimator, data: &[Series]) -> CliResult<IrfSpec> {
    let mut spec = IrfSpec::new(estimator, a.horizon).shock_lags(a.shock_lags);
    for c in &a.controls {
        let (name, lags) = parse_control(c)?;
        spec = spec.control(find(data, &name)?, lags);
    }
    if let Some(rule) = lead_rule(a)? {
        spec.leads = Some(rule);
    }
    if let Some(b) = a.nw_bandwidth {
        spec.bandwidth = BandwidthRule::Fixed { bandwidth: b };
    }
    spec.ci_level = a.ci_level;
    spec.pad_tail_leads = a.pad_tail_leads;
    spec.comparable_sample = a.comparable_sample;
    spec.trend = a.trend;
    spec.dlm_lags = a.dlm_lags;
    spec.shock_ar_order = a.shock_ar_order;
    spec.state_leads = a.state_leads;
    spec.state_timing = match a.state_timing {
        StateTimingArg::Lagged => StateTiming::Lagged,
        StateTimingArg::Current => StateTiming::Current,
    };
    if let Some(l) = &a.lead_series {
        spec.lead_series = Some(find(data, l)?.clone());
    }
    if let Some(z) = &a.instrument {
        spec.instrument = Some(find(data, z)?.clone());
    }
    if let Some(s) = &a.state {
        spec.state = Some(find(data, s)?.clone());
    }
    Ok(spec)
}

fn irf(a: &IrfArgs) -> CliResult<()> {
    let estimator = Estimator::from_str(&a.estimator).map_err(CliError::from)?;
    let data = load_series(&a.input, &a.period, a.na_policy)?;
    let y = find(&data, &a.y)?;
    let shock = find(&data, &a.shock)?;
    let spec = irf_spec(a, estimator, &data)?;
    let mut w = Writer::new(&a.output.out)?;
    match estimator {
        Estimator::NonlinearLp => {
            let state = spec
                .state
                .as_ref()
                .ok_or_else(|| CliError::Usage("nonlinear-lp needs --state".into()))?;
            let nl: NonlinearIrf = nonlinear_lp(y, shock, state, &spec)?;
            w.warn(&nl.warnings);
            for u in &nl.undefined {
                w.warn(&[format!("{} path undefined: {}", u.label, u.reason)]);
            }
            w.json("irf.json", &nl)?;
            for regime in [Regime::A, Regime::B] {
                if let Ok(r) = nl.to_irf(regime) {
                    w.file(&format!("irf_{regime:?}.csv"), r.to_csv())?;
                }
            }
        }
        Estimator::VarEndog | Estimator::VarX => {
            spec.validate()?;
            let extras: Vec<Series> =
                a.var_variables.iter().map(|n| find(&data, n).cloned()).collect::<CliResult<_>>()?;
            let out = if estimator == Estimator::VarEndog {
                let mut vars = vec![shock.clone(), y.clone()];
                vars.extend(extras);
                let fit = fit_var(&vars, a.var_lags)?;
                w.report
                    .extra
                    .insert("spectral_radius".into(), json!(fit.spectral_radius));
                cholesky_irf(&fit, a.horizon, shock.name(), &[], a.ci_level)?
            } else {
                let mut ys = vec![y.clone()];
                ys.extend(extras);
                varx_irf(&ys, shock, a.var_lags, a.exog_lags.unwrap_or(a.horizon), a.horizon, a.ci_level)?
            };
            let mut responses = BTreeMap::new();
            for (name, r) in &out {
                w.warn(&r.warnings);
                w.file(&format!("irf_{}.csv", file_stem(name)), r.to_csv())?;
                responses.insert(name.clone(), r);
            }
            w.json(
                "irf.json",
                &json!({ "estimator": estimator, "impulse": shock.name(), "responses": responses }),
            )?;
        }
        _ => {
            let r: IrfResult = irfkit::estimate(y, shock, &spec)?;
            w.warn(&r.warnings);
            w.json("irf.json", &r)?;
            w.file("irf.csv", r.to_csv())?;
        }
    }
    w.finish("irf", a)
}

// ---- multiplier -----------------------------------------------------------

fn read_irf(path: &Path, regime: Option<&str>, response: Option<&str>) -> CliResult<IrfResult> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{} is not valid JSON: {e}", path.display())))?;
    if value.get("paths").is_some() {
        let nl: NonlinearIrf = serde_json::from_value(value)?;
        let regime = match regime {
            Some("A") | Some("a") => Regime::A,
            Some("B") | Some("b") => Regime::B,
            _ => {
                return Err(CliError::Usage(format!(
                    "{} holds state-dependent paths; choose one with --regime A or --regime B",
                    path.display()
                )))
            }
        };
        return Ok(nl.to_irf(regime)?);
    }
    if let Some(responses) = value.get("responses") {
        let name = response.ok_or_else(|| {
            CliError::Usage(format!("{} holds VAR responses; choose one with --response", path.display()))
        })?;
        let r = responses
            .get(name)
            .ok_or_else(|| CliError::Data(format!("{} has no response '{name}'", path.display())))?;
        return Ok(serde_json::from_value(r.clone())?);
    }
    Ok(serde_json::from_value(value)?)
}

fn multiplier(a: &MultiplierArgs) -> CliResult<()> {
    let num = read_irf(&a.num, a.regime.as_deref(), a.response.as_deref())?;
    let den = read_irf(&a.den, a.regime.as_deref(), a.response.as_deref())?;
    let m = match a.tolerance {
        Some(t) => irfkit::irf::cumulative_multiplier_with_tolerance(&num, &den, t)?,
        None => cumulative_multiplier(&num, &den)?,
    };
    let mut w = Writer::new(&a.output.out)?;
    if !m.undefined.is_empty() {
        w.warn(&[format!("multiplier undefined at horizons {:?}", m.undefined)]);
    }
    let mut csv = String::from("h,value\n");
    for (h, v) in m.horizons.iter().zip(&m.values) {
        match v {
            Some(v) => csv.push_str(&format!("{h},{v:?}\n")),
            None => csv.push_str(&format!("{h},NA\n")),
        }
    }
    w.json("multiplier.json", &m)?;
    w.file("multiplier.csv", csv)?;
    w.finish("multiplier", a)
}

// ---- replicate ------------------------------------------------------------

fn replicate(a: &ReplicateArgs) -> CliResult<()> {
    if !figures::is_known(&a.figure) {
        return Err(CliError::Usage(format!(
            "unknown figure '{}'; valid ids: {}",
            a.figure,
            figures::FIGURES.join(", ")
        )));
    }
    let shock = match (&a.shock_csv, a.figure.as_str()) {
        (Some(p), _) => Some(read_shock(Some(p), a.shock_column.as_deref(), "figB3")?),
        (None, "figB3") => {
            return Err(CliError::Data(
                "figB3 simulates the outcome around an observed shock series, which is not bundled; \
                 pass it with --shock-csv (and --shock-column)"
                    .into(),
            ))
        }
        _ => None,
    };
    let opts = FigureOptions {
        seed: a.seed,
        length: a.length,
        horizon: a.horizon,
        dlm_lags: a.dlm_lags,
        replications: a.replications,
        shock,
    };
    let fig = figures::replicate(&a.figure, &opts)?;
    let mut w = Writer::new(&a.output.out)?;
    w.report.seed = Some(a.seed);
    w.warn(&fig.warnings);
    let mut curves = Vec::new();
    for c in &fig.curves {
        let mut csv = String::from("h,value\n");
        for (h, v) in c.values.iter().enumerate() {
            csv.push_str(&format!("{h},{v:?}\n"));
        }
        let file = format!("{}_{}.csv", fig.id, c.id);
        w.file(&file, csv)?;
        curves.push(json!({ "curve": c.id, "legend": c.legend, "file": file }));
    }
    w.report.extra.insert("figure".into(), json!({ "id": fig.id, "title": fig.title }));
    w.report.extra.insert("curves".into(), Value::Array(curves));
    w.finish("replicate", a)
}
