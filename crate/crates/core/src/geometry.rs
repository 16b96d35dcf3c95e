//! Contact charts on the thermodynamic phase space and Legendre submanifolds
//! generated by fundamental equations.
//!
//! A simple chart with `d` intensive/extensive pairs has `2d + 1`
//! coordinates ordered as `(x_1..x_{d-1}, T, y_1..y_{d-1}, S, U)` and carries
//! the contact form `dU - T dS + sum_i x_i dy_i`. Composite charts are
//! products of simple ones; their contact form is the sum of the factors'.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{central_step, ridders_derivative};

/// One simple factor of a contact chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFactor {
    d: usize,
    names: Vec<String>,
}

impl ChartFactor {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        2 * self.d + 1
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn temperature_offset(&self) -> usize {
        self.d - 1
    }

    pub fn entropy_offset(&self) -> usize {
        2 * self.d - 1
    }

    pub fn energy_offset(&self) -> usize {
        2 * self.d
    }
}

/// Darboux chart of a (possibly composite) thermodynamic phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactChart {
    factors: Vec<ChartFactor>,
}

impl ContactChart {
    /// A simple chart. `names` must list `2d + 1` unique identifiers with
    /// `T`, `S` and `U` in their canonical slots.
    pub fn new<S: Into<String>>(d: usize, names: Vec<S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if d == 0 {
            return Err(Error::Domain("a contact chart needs d >= 1".into()));
        }
        if names.len() != 2 * d + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * d + 1,
                got: names.len(),
            });
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Domain("chart coordinate names must be unique".into()));
        }
        for (slot, want) in [(d - 1, "T"), (2 * d - 1, "S"), (2 * d, "U")] {
            if names[slot] != want {
                return Err(Error::Domain(format!(
                    "coordinate {slot} must be `{want}`, found `{}`",
                    names[slot]
                )));
            }
        }
        Ok(Self {
            factors: vec![ChartFactor { d, names }],
        })
    }

    /// `(T, S, U)`: a body described by temperature, entropy and energy.
    pub fn body() -> Self {
        Self::new(1, vec!["T", "S", "U"]).expect("static chart")
    }

    /// `(P, T, V, S, U)`: a simple gas at fixed mole number.
    pub fn simple_gas() -> Self {
        Self::new(2, vec!["P", "T", "V", "S", "U"]).expect("static chart")
    }

    pub fn factors(&self) -> &[ChartFactor] {
        &self.factors
    }

    /// Total number of coordinates.
    pub fn dim(&self) -> usize {
        self.factors.iter().map(ChartFactor::dim).sum()
    }

    /// Number of intensive/extensive pairs summed over factors.
    pub fn d(&self) -> usize {
        self.factors.iter().map(ChartFactor::d).sum()
    }

    pub fn names(&self) -> Vec<&str> {
        self.factors.iter().flat_map(|f| f.names.iter().map(String::as_str)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| *n == name)
    }

    fn offsets(&self) -> impl Iterator<Item = (usize, &ChartFactor)> {
        self.factors.iter().scan(0, |off, f| {
            let o = *off;
            *off += f.dim();
            Some((o, f))
        })
    }

    /// Global indices of every factor's temperature coordinate.
    pub fn temperature_indices(&self) -> Vec<usize> {
        self.offsets().map(|(o, f)| o + f.temperature_offset()).collect()
    }

    /// Global indices of every factor's entropy coordinate.
    pub fn entropy_indices(&self) -> Vec<usize> {
        self.offsets().map(|(o, f)| o + f.entropy_offset()).collect()
    }

    /// Global indices of every factor's internal-energy coordinate.
    pub fn energy_indices(&self) -> Vec<usize> {
        self.offsets().map(|(o, f)| o + f.energy_offset()).collect()
    }
}

impl fmt::Display for ContactChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.names().join(", "))
    }
}

/// Product chart `a x b`; names of `b` that collide with names already in
/// `a` receive a `_2` suffix (then `_3`, ... if still taken).
pub fn composite_chart(a: &ContactChart, b: &ContactChart) -> ContactChart {
    let mut taken: HashSet<String> = a.names().into_iter().map(str::to_owned).collect();
    let mut factors = a.factors.clone();
    for factor in &b.factors {
        let mut renamed = Vec::with_capacity(factor.names.len());
        for name in &factor.names {
            let mut candidate = name.clone();
            let mut k = 2;
            while taken.contains(&candidate) {
                candidate = format!("{name}_{k}");
                k += 1;
            }
            taken.insert(candidate.clone());
            renamed.push(candidate);
        }
        factors.push(ChartFactor {
            d: factor.d,
            names: renamed,
        });
    }
    ContactChart { factors }
}

/// A tangent vector to the phase space: base point and components, both in
/// chart order.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentThermo {
    pub base: Vec<f64>,
    pub delta: Vec<f64>,
}

impl TangentThermo {
    pub fn new(base: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if base.len() != delta.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                got: delta.len(),
            });
        }
        Ok(Self { base, delta })
    }
}

/// Contact form `dU - T dS + sum x_i dy_i` (summed over factors) evaluated
/// on `v`.
pub fn contact_form(chart: &ContactChart, v: &TangentThermo) -> Result<f64> {
    contact_form_parts(chart, &v.base, &v.delta)
}

pub(crate) fn contact_form_parts(chart: &ContactChart, base: &[f64], delta: &[f64]) -> Result<f64> {
    let n = chart.dim();
    for len in [base.len(), delta.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mut total = 0.0;
    for (o, f) in chart.offsets() {
        let d = f.d;
        let t = base[o + d - 1];
        if !(t > 0.0) {
            return Err(Error::NonPositiveTemperature(t));
        }
        let mut value = delta[o + 2 * d] - t * delta[o + 2 * d - 1];
        for i in 0..d - 1 {
            value += base[o + i] * delta[o + d + i];
        }
        total += value;
    }
    Ok(total)
}

type ScalarFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], f64) -> (Vec<f64>, f64) + Send + Sync>;
type DomainFn = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;

/// A fundamental equation `U = phi(y_1..y_{d-1}, S)`.
#[derive(Clone)]
pub struct FundamentalEquation {
    n_y: usize,
    phi: ScalarFn,
    gradient: Option<GradientFn>,
    domain: DomainFn,
}

impl fmt::Debug for FundamentalEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FundamentalEquation")
            .field("n_y", &self.n_y)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl FundamentalEquation {
    /// `n_y` is the number of extensive variables besides `S` (that is `d - 1`).
    pub fn new<F>(n_y: usize, phi: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            n_y,
            phi: Arc::new(phi),
            gradient: None,
            domain: Arc::new(|_, _| true),
        }
    }

    /// Analytic gradient returning `(d phi / d y, d phi / d S)`.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64], f64) -> (Vec<f64>, f64) + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// Restricts the admissible `(y, S)`; positivity of `T` is always checked.
    pub fn with_domain<D>(mut self, domain: D) -> Self
    where
        D: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(domain);
        self
    }

    /// Same equation with the analytic gradient dropped, so that state
    /// equations fall back to finite differences.
    pub fn finite_difference(&self) -> Self {
        Self {
            gradient: None,
            ..self.clone()
        }
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, y: &[f64], s: f64) -> f64 {
        (self.phi)(y, s)
    }

    pub fn in_domain(&self, y: &[f64], s: f64) -> bool {
        (self.domain)(y, s)
    }

    /// Central-difference gradient with relative step `max(|c|,1) eps^(1/3)`.
    pub fn fd_gradient(&self, y: &[f64], s: f64) -> (Vec<f64>, f64) {
        let mut work = y.to_vec();
        let mut dy = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            let h = central_step(y[i]);
            work[i] = y[i] + h;
            let up = (self.phi)(&work, s);
            work[i] = y[i] - h;
            let down = (self.phi)(&work, s);
            work[i] = y[i];
            dy.push((up - down) / (2.0 * h));
        }
        let h = central_step(s);
        let ds = ((self.phi)(y, s + h) - (self.phi)(y, s - h)) / (2.0 * h);
        (dy, ds)
    }

    /// Analytic gradient when available, finite differences otherwise.
    pub fn gradient(&self, y: &[f64], s: f64) -> (Vec<f64>, f64) {
        match &self.gradient {
            Some(g) => g(y, s),
            None => self.fd_gradient(y, s),
        }
    }

    /// Largest relative mismatch between the analytic gradient and central
    /// differences over `samples`; `None` when no analytic gradient is set.
    pub fn gradient_mismatch(&self, samples: &[(Vec<f64>, f64)]) -> Option<f64> {
        let g = self.gradient.as_ref()?;
        let mut worst = 0.0_f64;
        for (y, s) in samples {
            let (ay, as_) = g(y, *s);
            let (fy, fs) = self.fd_gradient(y, *s);
            for (a, f) in ay.iter().chain(std::iter::once(&as_)).zip(fy.iter().chain(std::iter::once(&fs))) {
                worst = worst.max((a - f).abs() / a.abs().max(1e-300));
            }
        }
        Some(worst)
    }
}

/// State equations: the chart point `(x = -grad_y phi, T = d phi/dS, y, S, U = phi)`.
pub fn state_equations(phi: &FundamentalEquation, y: &[f64], s: f64) -> Result<Vec<f64>> {
    if y.len() != phi.n_y {
        return Err(Error::DimensionMismatch {
            expected: phi.n_y,
            got: y.len(),
        });
    }
    if !phi.in_domain(y, s) {
        return Err(Error::Domain(format!(
            "(y, S) = ({y:?}, {s}) outside the fundamental equation's domain"
        )));
    }
    let (dy, ds) = phi.gradient(y, s);
    if !(ds > 0.0) {
        return Err(Error::NonPositiveTemperature(ds));
    }
    let u = phi.value(y, s);
    let mut point = Vec::with_capacity(2 * phi.n_y + 3);
    point.extend(dy.iter().map(|g| -g));
    point.push(ds);
    point.extend_from_slice(y);
    point.push(s);
    point.push(u);
    Ok(point)
}

type ParamFn = Arc<dyn Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync>;

/// A parametrized patch `(y, S) -> chart point` of a (candidate) Legendre
/// submanifold.
#[derive(Clone)]
pub struct LegendrePatch {
    chart: ContactChart,
    n_y: usize,
    param: ParamFn,
}

impl fmt::Debug for LegendrePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LegendrePatch").field("chart", &self.chart).finish()
    }
}

impl LegendrePatch {
    /// Patch generated by the state equations of `phi` on a simple chart.
    pub fn from_fundamental(chart: ContactChart, phi: FundamentalEquation) -> Result<Self> {
        if chart.factors().len() != 1 || chart.d() != phi.n_y() + 1 {
            return Err(Error::DimensionMismatch {
                expected: chart.d(),
                got: phi.n_y() + 1,
            });
        }
        let n_y = phi.n_y();
        Ok(Self {
            chart,
            n_y,
            param: Arc::new(move |y, s| state_equations(&phi, y, s)),
        })
    }

    /// Patch from an arbitrary parametrization (used to build perturbed,
    /// non-Legendre maps).
    pub fn from_map<F>(chart: ContactChart, n_y: usize, map: F) -> Self
    where
        F: Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            chart,
            n_y,
            param: Arc::new(map),
        }
    }

    pub fn chart(&self) -> &ContactChart {
        &self.chart
    }

    pub fn point(&self, y: &[f64], s: f64) -> Result<Vec<f64>> {
        (self.param)(y, s)
    }

    /// Largest `|theta|` over the coordinate tangent directions of the
    /// parametrization at `(y, S)`. Zero certifies the Legendre property.
    pub fn pullback_residual(&self, y: &[f64], s: f64) -> Result<f64> {
        if y.len() != self.n_y {
            return Err(Error::DimensionMismatch {
                expected: self.n_y,
                got: y.len(),
            });
        }
        let base = self.point(y, s)?;
        let mut worst = 0.0_f64;
        let mut params: Vec<f64> = y.to_vec();
        params.push(s);
        // theta at the base point is linear, so theta of the tangent is the
        // derivative of theta(point) along each parameter.
        for j in 0..params.len() {
            let h0 = 0.1 * params[j].abs().max(0.1);
            let mut p = params.clone();
            let along = |e: f64| -> Result<f64> {
                p[j] = params[j] + e;
                let (yk, sk) = p.split_at(self.n_y);
                let point = self.point(yk, sk[0])?;
                let delta: Vec<f64> = point.iter().zip(&base).map(|(a, b)| a - b).collect();
                contact_form_parts(&self.chart, &base, &delta)
            };
            let (value, _) = ridders_derivative(along, 0.0, h0)?;
            worst = worst.max(value.abs());
        }
        Ok(worst)
    }
}
