//! Function parameters: the slowly varying class M, regularly varying
//! interpolation parameters built from it, and sampling-based checks of
//! their variation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// t^theta * prod_j max(1, L_j(t))^{r_j}, L_1 = log t, L_j = log L_{j-1}.
    LogPower {
        theta: f64,
        exps: Vec<f64>,
    },
    /// t^a * base(t^b) for t >= 1, base(1) below.
    Theta {
        a: f64,
        b: f64,
        base: Box<FunctionParameter>,
    },
    Reciprocal(Box<FunctionParameter>),
    /// zeta(t) * chi(eta(t) / zeta(t)).
    Reiterated(Box<[FunctionParameter; 3]>),
    Custom {
        order: f64,
        label: String,
        f: Callable,
    },
}

/// An evaluable positive function on [1, inf) with a declared order of
/// regular variation. Order 0 members are the slowly varying class M.
#[derive(Clone)]
pub struct FunctionParameter {
    kind: Kind,
}

impl fmt::Debug for FunctionParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunctionParameter({self})")
    }
}

impl fmt::Display for FunctionParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::LogPower { theta, exps } => {
                let mut parts = Vec::new();
                if *theta != 0.0 {
                    parts.push(format!("t^{}", theta));
                }
                for (j, r) in exps.iter().enumerate() {
                    if *r == 0.0 {
                        continue;
                    }
                    let name = "log".repeat(j + 1);
                    if *r == 1.0 {
                        parts.push(name);
                    } else {
                        parts.push(format!("{name}^{r}"));
                    }
                }
                if parts.is_empty() {
                    write!(f, "1")
                } else {
                    write!(f, "{}", parts.join("*"))
                }
            }
            Kind::Theta { a, b, base } => write!(f, "theta({a},{b},{base})"),
            Kind::Reciprocal(base) => write!(f, "1/({base})"),
            Kind::Reiterated(p) => write!(f, "reit({},{},{})", p[0], p[1], p[2]),
            Kind::Custom { label, order, .. } => write!(f, "custom[{label};{order}]"),
        }
    }
}

/// Serializable record of a log-power family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub kind: String,
    pub exponents: Vec<f64>,
    pub order: f64,
}

impl FunctionParameter {
    pub fn one() -> Self {
        Self::log_power(0.0, Vec::new())
    }

    /// t^theta times iterated-log powers with exponents r_1, r_2, ...
    pub fn log_power(theta: f64, exps: Vec<f64>) -> Self {
        let mut exps = exps;
        while exps.last() == Some(&0.0) {
            exps.pop();
        }
        FunctionParameter { kind: Kind::LogPower { theta, exps } }
    }

    /// (log t)^r with the value 1 where log t < 1.
    pub fn log(r: f64) -> Self {
        Self::log_power(0.0, vec![r])
    }

    pub fn power(theta: f64) -> Self {
        Self::log_power(theta, Vec::new())
    }

    /// A user-supplied parameter with declared order of variation.
    pub fn custom<F>(label: &str, order: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FunctionParameter { kind: Kind::Custom { order, label: label.to_string(), f: Arc::new(f) } }
    }

    /// t^a * base(t^b) for t >= 1 and base(1) for t < 1.
    pub fn theta(a: f64, b: f64, base: FunctionParameter) -> Self {
        FunctionParameter { kind: Kind::Theta { a, b, base: Box::new(base) } }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let t = if t < 1.0 { 1.0 } else { t };
        match &self.kind {
            Kind::LogPower { theta, exps } => {
                let mut v = if *theta == 0.0 { 1.0 } else { t.powf(*theta) };
                let mut l = t.ln();
                for r in exps {
                    let level = l.max(1.0);
                    if *r != 0.0 {
                        v *= level.powf(*r);
                    }
                    l = level.ln();
                }
                v
            }
            Kind::Theta { a, b, base } => t.powf(*a) * base.evaluate(t.powf(*b)),
            Kind::Reciprocal(base) => 1.0 / base.evaluate(t),
            Kind::Reiterated(p) => {
                let z = p[0].evaluate(t);
                z * p[2].evaluate(p[1].evaluate(t) / z)
            }
            Kind::Custom { f, .. } => f(t),
        }
    }

    pub fn order(&self) -> f64 {
        match &self.kind {
            Kind::LogPower { theta, .. } => *theta,
            Kind::Theta { a, b, base } => a + b * base.order(),
            Kind::Reciprocal(base) => -base.order(),
            Kind::Reiterated(p) => {
                let (z, e, c) = (p[0].order(), p[1].order(), p[2].order());
                z + c * (e - z)
            }
            Kind::Custom { order, .. } => *order,
        }
    }

    /// Log-power exponents (r_1, r_2, ...) when the parameter is a family member.
    pub fn exponents(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::LogPower { exps, .. } => Some(exps),
            _ => None,
        }
    }

    pub fn is_log_power(&self) -> bool {
        matches!(self.kind, Kind::LogPower { .. })
    }

    pub fn is_one(&self) -> bool {
        matches!(&self.kind, Kind::LogPower { theta, exps } if *theta == 0.0 && exps.is_empty())
    }

    pub fn to_record(&self) -> Result<ParamRecord> {
        match &self.kind {
            Kind::LogPower { theta, exps } => Ok(ParamRecord { kind: "log-power".into(), exponents: exps.clone(), order: *theta }),
            _ => Err(Error::Unsupported(format!("only log-power members serialize, got {self}"))),
        }
    }

    pub fn from_record(rec: &ParamRecord) -> Result<Self> {
        if rec.kind != "log-power" {
            return Err(Error::Parse(format!("unknown parameter kind '{}'", rec.kind)));
        }
        Ok(Self::log_power(rec.order, rec.exponents.clone()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_record()?).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let rec: ParamRecord = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_record(&rec)
    }

    /// Parses expressions such as `1`, `log^1.5`, `t^0.25*log`, `log*loglog^-1`.
    pub fn parse(expr: &str) -> Result<Self> {
        let expr = expr.trim();
        if expr.is_empty() {
            return Err(Error::Parse("empty parameter expression".into()));
        }
        let mut theta = 0.0;
        let mut exps: Vec<f64> = Vec::new();
        for term in expr.split('*') {
            let term = term.trim();
            let (base, pow) = match term.split_once('^') {
                Some((b, p)) => {
                    let p = p.trim().trim_start_matches('{').trim_end_matches('}');
                    let p: f64 = p.parse().map_err(|_| Error::Parse(format!("bad exponent in '{term}'")))?;
                    (b.trim(), p)
                }
                None => (term, 1.0),
            };
            if base == "1" {
                continue;
            }
            if base == "t" {
                theta += pow;
                continue;
            }
            let level = if !base.is_empty() && base.len() % 3 == 0 && base == "log".repeat(base.len() / 3) {
                base.len() / 3
            } else if let Some(n) = base.strip_prefix("log") {
                n.parse::<usize>().ok().filter(|n| *n >= 1).ok_or_else(|| Error::Parse(format!("unknown factor '{base}'")))?
            } else {
                return Err(Error::Parse(format!("unknown factor '{base}'")));
            };
            if exps.len() < level {
                exps.resize(level, 0.0);
            }
            exps[level - 1] += pow;
        }
        Ok(Self::log_power(theta, exps))
    }
}

/// 1/phi for phi in class M.
pub fn reciprocal(phi: &FunctionParameter) -> Result<FunctionParameter> {
    if phi.order() != 0.0 {
        return Err(Error::InvalidParameter(format!("reciprocal within class M needs order 0, {phi} has order {}", phi.order())));
    }
    Ok(match &phi.kind {
        Kind::LogPower { theta, exps } => FunctionParameter::log_power(-theta, exps.iter().map(|r| -r).collect()),
        Kind::Reciprocal(base) => (**base).clone(),
        _ => FunctionParameter { kind: Kind::Reciprocal(Box::new(phi.clone())) },
    })
}

/// psi(t) = t^{eps/(eps+delta)} phi(t^{1/(eps+delta)}) for t >= 1, phi(1) below.
pub fn make_theta_psi(phi: &FunctionParameter, eps: f64, delta: f64) -> Result<FunctionParameter> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("eps and delta must be positive, got {eps}, {delta}")));
    }
    if phi.order() != 0.0 {
        return Err(Error::InvalidParameter(format!("{phi} is not in class M")));
    }
    Ok(FunctionParameter::theta(eps / (eps + delta), 1.0 / (eps + delta), phi.clone()))
}

/// Geometric grid 2^j, j = 0..=40, used by the hypothesis and variation checks.
pub fn default_grid() -> Vec<f64> {
    (0..=40).map(|j| 2f64.powi(j)).collect()
}

/// Lower-bound slack for zeta and chi relative to their value at t = 1.
const REITERATE_FLOOR: f64 = 8.0;

/// Checks the reiteration hypothesis on the sample grid:
/// zeta/eta and 1/zeta, 1/chi stay bounded relative to their values at t = 1.
pub fn check_reiterate_hypothesis(zeta: &FunctionParameter, eta: &FunctionParameter, chi: &FunctionParameter, grid: &[f64]) -> Result<()> {
    let c = (zeta.evaluate(1.0) / eta.evaluate(1.0)).max(1.0);
    let z1 = zeta.evaluate(1.0);
    let c1 = chi.evaluate(1.0);
    for &t in grid {
        let (z, e, x) = (zeta.evaluate(t), eta.evaluate(t), chi.evaluate(t));
        if !(z > 0.0 && e > 0.0 && x > 0.0) || !(z.is_finite() && e.is_finite() && x.is_finite()) {
            return Err(Error::Hypothesis { t, what: "non-positive or non-finite value".into() });
        }
        if z > c * e * (1.0 + 1e-12) {
            return Err(Error::Hypothesis { t, what: format!("zeta/eta = {} exceeds {c}", z / e) });
        }
        if z * REITERATE_FLOOR < z1 {
            return Err(Error::Hypothesis { t, what: "zeta is not bounded below".into() });
        }
        if x * REITERATE_FLOOR < c1 {
            return Err(Error::Hypothesis { t, what: "chi is not bounded below".into() });
        }
    }
    Ok(())
}

/// psi(t) = zeta(t) chi(eta(t)/zeta(t)), after checking the hypothesis on the default grid.
pub fn reiterate(zeta: &FunctionParameter, eta: &FunctionParameter, chi: &FunctionParameter) -> Result<FunctionParameter> {
    check_reiterate_hypothesis(zeta, eta, chi, &default_grid())?;
    Ok(FunctionParameter { kind: Kind::Reiterated(Box::new([zeta.clone(), eta.clone(), chi.clone()])) })
}

/// Tolerance schedule for `check_variation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// deviation(t) <= c / log t.
    InverseLog(f64),
    /// Fit c on the first half of the grid, then test the second half
    /// against 1.25 * c / log t.
    Fitted,
    /// Analytic constant for log-power members, `Fitted` otherwise.
    Auto,
}

#[derive(Debug, Clone)]
pub struct VariationRow {
    pub lambda: f64,
    pub max_deviation: f64,
    pub constant: f64,
    pub worst_t: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct VariationReport {
    pub order: f64,
    pub rows: Vec<VariationRow>,
}

impl VariationReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn deviation(phi: &FunctionParameter, lambda: f64, t: f64) -> f64 {
    (phi.evaluate(lambda * t) / phi.evaluate(t) - lambda.powf(phi.order())).abs()
}

/// Reports max |phi(lambda t)/phi(t) - lambda^order| over the grid tail
/// (t >= e) against a c / log t schedule.
pub fn check_variation(phi: &FunctionParameter, lambdas: &[f64], grid: &[f64], schedule: Schedule) -> VariationReport {
    let order = phi.order();
    let tail: Vec<f64> = grid.iter().copied().filter(|t| *t >= std::f64::consts::E).collect();
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let sched = match (schedule, phi.exponents()) {
                (Schedule::Auto, Some(exps)) => {
                    let total: f64 = exps.iter().map(|r| r.abs()).sum();
                    Schedule::InverseLog(1.25 * total * lambda.ln().abs() * lambda.powf(order) + 1e-12)
                }
                (Schedule::Auto, None) => Schedule::Fitted,
                (s, _) => s,
            };
            let (test, constant) = match sched {
                Schedule::InverseLog(c) => (&tail[..], c),
                _ => {
                    let half = tail.len() / 2;
                    let c = tail[..half].iter().map(|&t| deviation(phi, lambda, t) * t.ln()).fold(0.0, f64::max);
                    (&tail[half..], 1.25 * c + 1e-12)
                }
            };
            let mut max_dev: f64 = 0.0;
            let mut worst_t = f64::NAN;
            let mut pass = true;
            for &t in test {
                let d = deviation(phi, lambda, t);
                if d > max_dev || worst_t.is_nan() {
                    max_dev = max_dev.max(d);
                    worst_t = t;
                }
                if d > constant / t.ln() {
                    pass = false;
                }
            }
            VariationRow { lambda, max_deviation: max_dev, constant, worst_t, pass }
        })
        .collect();
    VariationReport { order, rows }
}
