//! Seeded simulators for the three linear data-generating processes and their
//! closed-form impulse responses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tscore::Series;

/// Periods simulated and discarded before the returned sample.
pub const BURN_IN: usize = 1000;

/// Name of the generator recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64, stream = replicate)";

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpKind {
    /// `y = delta x + u`, `x = gamma x(-1) + eps`.
    Simple {
        delta: f64,
        gamma: f64,
        #[serde(default = "one")]
        sigma_u: f64,
        #[serde(default = "one")]
        sigma_eps: f64,
    },
    /// `y = rho y(-1) + b0 x + b1 x(-1) + u`, `x = gamma x(-1) + eps`.
    Extended {
        rho: f64,
        b0: f64,
        b1: f64,
        gamma: f64,
        #[serde(default = "one")]
        sigma_u: f64,
        #[serde(default = "one")]
        sigma_eps: f64,
    },
    /// `y = beta g + u`, `u = m + a`, `g = lambda x + (1 - lambda) m`,
    /// `z = x + nu`, `x = gamma x(-1) + eps`.
    Iv { beta: f64, lambda: f64, gamma: f64 },
    /// Extended outcome equation driven by a given shock path.
    ExternalShock {
        shock: Series,
        rho: f64,
        b0: f64,
        b1: f64,
        #[serde(default = "one")]
        sigma_u: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    #[serde(flatten)]
    pub kind: DgpKind,
    pub length: usize,
    pub seed: u64,
}

impl DgpSpec {
    pub fn simple(delta: f64, gamma: f64, length: usize, seed: u64) -> Self {
        Self {
            kind: DgpKind::Simple {
                delta,
                gamma,
                sigma_u: 1.0,
                sigma_eps: 1.0,
            },
            length,
            seed,
        }
    }

    pub fn extended(rho: f64, b0: f64, b1: f64, gamma: f64, length: usize, seed: u64) -> Self {
        Self {
            kind: DgpKind::Extended {
                rho,
                b0,
                b1,
                gamma,
                sigma_u: 1.0,
                sigma_eps: 1.0,
            },
            length,
            seed,
        }
    }

    pub fn iv(beta: f64, lambda: f64, gamma: f64, length: usize, seed: u64) -> Self {
        Self {
            kind: DgpKind::Iv {
                beta,
                lambda,
                gamma,
            },
            length,
            seed,
        }
    }

    /// Outcome equation `y = rho y(-1) + b0 x + b1 x(-1) + u` on a fixed shock.
    /// The sample length is the length of the shock.
    pub fn external_shock(shock: Series, rho: f64, b0: f64, b1: f64, seed: u64) -> Self {
        let length = shock.len();
        Self {
            kind: DgpKind::ExternalShock {
                shock,
                rho,
                b0,
                b1,
                sigma_u: 1.0,
            },
            length,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        if self.length < 10 {
            return bad(format!("sample length {} is below 10", self.length));
        }
        let stationary = |name: &str, v: f64| -> Result<()> {
            if !(v.abs() < 1.0) {
                return Err(Error::Spec(format!("|{name}| = {} must be below 1", v.abs())));
            }
            Ok(())
        };
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Spec(format!("{name} = {v} must be positive")));
            }
            Ok(())
        };
        let finite = |name: &str, v: f64| -> Result<()> {
            if !v.is_finite() {
                return Err(Error::Spec(format!("{name} = {v} is not finite")));
            }
            Ok(())
        };
        match &self.kind {
            DgpKind::Simple {
                delta,
                gamma,
                sigma_u,
                sigma_eps,
            } => {
                finite("delta", *delta)?;
                stationary("gamma", *gamma)?;
                positive("sigma_u", *sigma_u)?;
                positive("sigma_eps", *sigma_eps)?;
            }
            DgpKind::Extended {
                rho,
                b0,
                b1,
                gamma,
                sigma_u,
                sigma_eps,
            } => {
                stationary("rho", *rho)?;
                finite("b0", *b0)?;
                finite("b1", *b1)?;
                stationary("gamma", *gamma)?;
                positive("sigma_u", *sigma_u)?;
                positive("sigma_eps", *sigma_eps)?;
            }
            DgpKind::Iv {
                beta,
                lambda,
                gamma,
            } => {
                finite("beta", *beta)?;
                finite("lambda", *lambda)?;
                stationary("gamma", *gamma)?;
            }
            DgpKind::ExternalShock {
                shock,
                rho,
                b0,
                b1,
                sigma_u,
            } => {
                stationary("rho", *rho)?;
                finite("b0", *b0)?;
                finite("b1", *b1)?;
                positive("sigma_u", *sigma_u)?;
                if shock.len() != self.length {
                    return bad(format!(
                        "external shock '{}' has {} observations, spec length is {}",
                        shock.name(),
                        shock.len(),
                        self.length
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Simulated series in a fixed order together with the generating spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedData {
    pub spec: DgpSpec,
    pub replicate: u64,
    pub series: Vec<Series>,
}

impl SimulatedData {
    pub fn get(&self, name: &str) -> Result<&Series> {
        self.series
            .iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Structural(format!("simulated data has no series '{name}'")))
    }

    pub fn y(&self) -> &Series {
        &self.series[0]
    }

    pub fn x(&self) -> &Series {
        self.get("x").expect("every process has x")
    }
}

/// Simulates replicate 0 of `spec`.
pub fn simulate(spec: &DgpSpec) -> Result<SimulatedData> {
    simulate_replicate(spec, 0)
}

/// Simulates one replicate. Replicates share the seed and draw from distinct
/// generator streams, so they are independent and individually reproducible.
pub fn simulate_replicate(spec: &DgpSpec, replicate: u64) -> Result<SimulatedData> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(replicate);
    let n = spec.length;
    let total = n + BURN_IN;
    let mut draw = move || -> f64 { rng.sample(StandardNormal) };

    let series = match &spec.kind {
        DgpKind::Simple {
            delta,
            gamma,
            sigma_u,
            sigma_eps,
        } => {
            let (mut y, mut x, mut e, mut u) = buffers4(n);
            let mut x_prev = 0.0;
            for t in 0..total {
                let eps = sigma_eps * draw();
                let ut = sigma_u * draw();
                let xt = gamma * x_prev + eps;
                if t >= BURN_IN {
                    y.push(delta * xt + ut);
                    x.push(xt);
                    e.push(eps);
                    u.push(ut);
                }
                x_prev = xt;
            }
            named(vec![("y", y), ("x", x), ("eps", e), ("u", u)])?
        }
        DgpKind::Extended {
            rho,
            b0,
            b1,
            gamma,
            sigma_u,
            sigma_eps,
        } => {
            let (mut y, mut x, mut e, mut u) = buffers4(n);
            let (mut x_prev, mut y_prev) = (0.0, 0.0);
            for t in 0..total {
                let eps = sigma_eps * draw();
                let ut = sigma_u * draw();
                let xt = gamma * x_prev + eps;
                let yt = rho * y_prev + b0 * xt + b1 * x_prev + ut;
                if t >= BURN_IN {
                    y.push(yt);
                    x.push(xt);
                    e.push(eps);
                    u.push(ut);
                }
                x_prev = xt;
                y_prev = yt;
            }
            named(vec![("y", y), ("x", x), ("eps", e), ("u", u)])?
        }
        DgpKind::Iv {
            beta,
            lambda,
            gamma,
        } => {
            let cap = || Vec::with_capacity(n);
            let (mut y, mut x, mut e, mut u) = buffers4(n);
            let (mut g, mut z, mut m, mut a, mut nu) = (cap(), cap(), cap(), cap(), cap());
            let mut x_prev = 0.0;
            for t in 0..total {
                let eps = draw();
                let mt = draw();
                let at = draw();
                let nut = draw();
                let xt = gamma * x_prev + eps;
                let ut = mt + at;
                let gt = lambda * xt + (1.0 - lambda) * mt;
                if t >= BURN_IN {
                    y.push(beta * gt + ut);
                    x.push(xt);
                    e.push(eps);
                    u.push(ut);
                    g.push(gt);
                    z.push(xt + nut);
                    m.push(mt);
                    a.push(at);
                    nu.push(nut);
                }
                x_prev = xt;
            }
            named(vec![
                ("y", y),
                ("x", x),
                ("eps", e),
                ("u", u),
                ("g", g),
                ("z", z),
                ("m", m),
                ("a", a),
                ("nu", nu),
            ])?
        }
        DgpKind::ExternalShock {
            shock,
            rho,
            b0,
            b1,
            sigma_u,
        } => {
            // burn-in runs the outcome on noise alone, the shock path is used verbatim
            let mut y_prev = 0.0;
            for _ in 0..BURN_IN {
                y_prev = rho * y_prev + sigma_u * draw();
            }
            let xs = shock.values();
            let (mut y, mut u) = (Vec::with_capacity(n), Vec::with_capacity(n));
            let mut x_prev = 0.0;
            for &xt in xs {
                let ut = sigma_u * draw();
                let yt = rho * y_prev + b0 * xt + b1 * x_prev + ut;
                y.push(yt);
                u.push(ut);
                x_prev = xt;
                y_prev = yt;
            }
            named(vec![("y", y), ("x", xs.to_vec()), ("u", u)])?
        }
    };
    Ok(SimulatedData {
        spec: spec.clone(),
        replicate,
        series,
    })
}

fn buffers4(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    )
}

fn named(cols: Vec<(&str, Vec<f64>)>) -> Result<Vec<Series>> {
    cols.into_iter().map(|(n, v)| Series::new(n, v)).collect()
}

/// Population response of `y` to a unit shock at horizons `0..=horizon`.
///
/// With `persistent` the shock follows its own AR(1) path `gamma^j` after
/// impact; otherwise the shock path is `(1, 0, 0, ...)`.
pub fn closed_form_irf(spec: &DgpSpec, horizon: usize, persistent: bool) -> Result<Vec<f64>> {
    let (rho, b0, b1, gamma) = match &spec.kind {
        DgpKind::Simple { delta, gamma, .. } => (0.0, *delta, 0.0, *gamma),
        DgpKind::Extended {
            rho, b0, b1, gamma, ..
        } => (*rho, *b0, *b1, *gamma),
        DgpKind::ExternalShock { rho, b0, b1, .. } if !persistent => (*rho, *b0, *b1, 0.0),
        DgpKind::ExternalShock { .. } => {
            return Err(Error::Unsupported(
                "an external shock has no closed-form persistence path".into(),
            ))
        }
        DgpKind::Iv { .. } => {
            return Err(Error::Unsupported(
                "closed-form responses are defined for the simple and extended processes".into(),
            ))
        }
    };
    let xi = |j: usize| -> f64 {
        if persistent {
            gamma.powi(j as i32)
        } else if j == 0 {
            1.0
        } else {
            0.0
        }
    };
    let mut r = Vec::with_capacity(horizon + 1);
    r.push(b0);
    for h in 1..=horizon {
        r.push(rho * r[h - 1] + b0 * xi(h) + b1 * xi(h - 1));
    }
    Ok(r)
}
