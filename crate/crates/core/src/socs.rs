//! Second-order constrained systems `(L, C_K, C_V)`.
//!
//! Kinematic constraints are functions on second-order jets, variational
//! constraints are stored as annihilator rows and the admissible variations
//! are recovered as a nullspace. Lagrangian derivatives are taken by finite
//! differences so that any closure can serve as a Lagrangian.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::ContactChart;
use crate::numeric::{central_step, d1_five_point, d2_five_point, least_squares, nullspace};

/// A point `(q, q', q'')` of the second-order tangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
}

impl Jet2 {
    pub fn new(q: Vec<f64>, qdot: Vec<f64>, qddot: Vec<f64>) -> Result<Self> {
        for len in [qdot.len(), qddot.len()] {
            if len != q.len() {
                return Err(Error::DimensionMismatch {
                    expected: q.len(),
                    got: len,
                });
            }
        }
        Ok(Self { q, qdot, qddot })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

pub type LagrangianFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type ScalarTangentFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type JetFn = Arc<dyn Fn(&Jet2) -> Vec<f64> + Send + Sync>;
type RowsFn = Arc<dyn Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;
type CovectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type AccelFn = Arc<dyn Fn(&[f64], &[f64]) -> (DMatrix<f64>, DVector<f64>) + Send + Sync>;

/// Equations `w^a(q, q', q'') = 0`.
#[derive(Clone)]
pub struct KinematicConstraints {
    w: Option<JetFn>,
}

impl KinematicConstraints {
    pub fn none() -> Self {
        Self { w: None }
    }

    pub fn new<F>(w: F) -> Self
    where
        F: Fn(&Jet2) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { w: Some(Arc::new(w)) }
    }

    pub fn eval(&self, jet: &Jet2) -> Vec<f64> {
        self.w.as_ref().map_or_else(Vec::new, |w| w(jet))
    }
}

/// Linear conditions `v^b_i(q, q') dq^i = 0`, one row per condition.
#[derive(Clone)]
pub struct VariationalConstraints {
    rows: Option<RowsFn>,
}

impl VariationalConstraints {
    pub fn none() -> Self {
        Self { rows: None }
    }

    pub fn new<F>(rows: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            rows: Some(Arc::new(rows)),
        }
    }

    pub fn matrix(&self, n: usize, q: &[f64], qdot: &[f64]) -> DMatrix<f64> {
        self.rows.as_ref().map_or_else(|| DMatrix::zeros(0, n), |r| r(q, qdot))
    }
}

/// Heat exchanged with the environment per unit time.
///
/// A genuine one-form on `Q` is contracted with the velocity; rate laws such
/// as Newton cooling depend only on the state and are given directly.
#[derive(Clone)]
pub enum HeatForm {
    Zero,
    Covector(CovectorFn),
    Rate(ScalarTangentFn),
}

impl HeatForm {
    pub fn covector<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        HeatForm::Covector(Arc::new(f))
    }

    pub fn rate<F>(f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        HeatForm::Rate(Arc::new(f))
    }

    pub fn rate_at(&self, q: &[f64], qdot: &[f64]) -> f64 {
        match self {
            HeatForm::Zero => 0.0,
            HeatForm::Covector(f) => f(q).iter().zip(qdot).map(|(a, b)| a * b).sum(),
            HeatForm::Rate(f) => f(q, qdot),
        }
    }
}

/// Which coordinates enter the entropy balance.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondLawPolicy {
    /// Entropy coordinates summed into the total entropy.
    pub entropy_indices: Vec<usize>,
    /// Temperature at which heat is exchanged with the environment.
    pub temperature_index: usize,
    pub tolerance: f64,
}

impl SecondLawPolicy {
    pub fn new(entropy_indices: Vec<usize>, temperature_index: usize) -> Self {
        Self {
            entropy_indices,
            temperature_index,
            tolerance: 1e-8,
        }
    }
}

/// Orthonormal basis of the admissible variations at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationBasis {
    pub columns: DMatrix<f64>,
}

impl VariationBasis {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }
}

/// A second-order constrained system with heat exchange and a Second-Law
/// policy. The first `mech_dim` coordinates are mechanical; the rest are
/// thermodynamic coordinates laid out as in `chart`.
#[derive(Clone)]
pub struct SOCSystem {
    pub name: String,
    n: usize,
    mech_dim: usize,
    lagrangian: LagrangianFn,
    ck: KinematicConstraints,
    cv: VariationalConstraints,
    heat: HeatForm,
    energy: ScalarTangentFn,
    second_law: Option<SecondLawPolicy>,
    chart: Option<ContactChart>,
    accel: Option<AccelFn>,
    pivot_tol: f64,
    fd_step: f64,
    force_tol: f64,
}

impl fmt::Debug for SOCSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SOCSystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("mech_dim", &self.mech_dim)
            .field("chart", &self.chart)
            .field("second_law", &self.second_law)
            .finish()
    }
}

impl SOCSystem {
    /// Unconstrained system with Lagrangian `lagrangian`; the energy defaults
    /// to `q' . dL/dq' - L` by finite differences.
    pub fn new<L>(name: impl Into<String>, n: usize, mech_dim: usize, lagrangian: L) -> Result<Self>
    where
        L: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        if mech_dim > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mech_dim,
            });
        }
        let lagrangian: LagrangianFn = Arc::new(lagrangian);
        let energy = lagrangian_energy(lagrangian.clone());
        Ok(Self {
            name: name.into(),
            n,
            mech_dim,
            lagrangian,
            ck: KinematicConstraints::none(),
            cv: VariationalConstraints::none(),
            heat: HeatForm::Zero,
            energy,
            second_law: None,
            chart: None,
            accel: None,
            pivot_tol: 1e-10,
            fd_step: 1e-2,
            force_tol: 1e-8,
        })
    }

    /// Thermo-mechanical system on `M x T` with `L = L_mec - sum U`, the sum
    /// running over the energy coordinates of `chart`.
    pub fn thermo_mechanical<L>(name: impl Into<String>, mech_dim: usize, chart: ContactChart, l_mec: L) -> Result<Self>
    where
        L: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        let n = mech_dim + chart.dim();
        let energies: Vec<usize> = chart.energy_indices().iter().map(|i| mech_dim + i).collect();
        let lagrangian = move |q: &[f64], qd: &[f64]| l_mec(&q[..mech_dim], &qd[..mech_dim]) - energies.iter().map(|&i| q[i]).sum::<f64>();
        let mut sys = Self::new(name, n, mech_dim, lagrangian)?;
        sys.chart = Some(chart);
        Ok(sys)
    }

    pub fn with_kinematic(mut self, ck: KinematicConstraints) -> Self {
        self.ck = ck;
        self
    }

    pub fn with_variational(mut self, cv: VariationalConstraints) -> Self {
        self.cv = cv;
        self
    }

    pub fn with_heat(mut self, heat: HeatForm) -> Self {
        self.heat = heat;
        self
    }

    pub fn with_energy<E>(mut self, energy: E) -> Self
    where
        E: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.energy = Arc::new(energy);
        self
    }

    pub fn with_second_law(mut self, policy: SecondLawPolicy) -> Self {
        self.second_law = Some(policy);
        self
    }

    pub fn with_chart(mut self, chart: ContactChart) -> Result<Self> {
        if self.mech_dim + chart.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n - self.mech_dim,
                got: chart.dim(),
            });
        }
        self.chart = Some(chart);
        Ok(self)
    }

    /// Acceleration-level form `A(q, q') q'' = b(q, q')` of the kinematic
    /// constraints, used to solve for ideal constrained motion.
    pub fn with_acceleration_constraints<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> (DMatrix<f64>, DVector<f64>) + Send + Sync + 'static,
    {
        self.accel = Some(Arc::new(f));
        self
    }

    pub fn with_pivot_tolerance(mut self, tol: f64) -> Self {
        self.pivot_tol = tol;
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn with_force_tolerance(mut self, tol: f64) -> Self {
        self.force_tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mech_dim(&self) -> usize {
        self.mech_dim
    }

    pub fn chart(&self) -> Option<&ContactChart> {
        self.chart.as_ref()
    }

    pub fn second_law(&self) -> Option<&SecondLawPolicy> {
        self.second_law.as_ref()
    }

    pub fn heat(&self) -> &HeatForm {
        &self.heat
    }

    pub fn lagrangian(&self, q: &[f64], qdot: &[f64]) -> f64 {
        (self.lagrangian)(q, qdot)
    }

    pub fn energy(&self, q: &[f64], qdot: &[f64]) -> f64 {
        (self.energy)(q, qdot)
    }

    pub fn heat_rate(&self, q: &[f64], qdot: &[f64]) -> f64 {
        self.heat.rate_at(q, qdot)
    }

    pub fn variational_matrix(&self, q: &[f64], qdot: &[f64]) -> DMatrix<f64> {
        self.cv.matrix(self.n, q, qdot)
    }

    /// `|L - (L_mec - sum U)|` at a tangent vector; zero when `L` respects
    /// the split `Q = M x T`.
    pub fn split_residual<F>(&self, l_mec: F, q: &[f64], qdot: &[f64]) -> Result<f64>
    where
        F: Fn(&[f64], &[f64]) -> f64,
    {
        let chart = self
            .chart
            .as_ref()
            .ok_or_else(|| Error::Domain("system has no thermodynamic chart".into()))?;
        let u: f64 = chart.energy_indices().iter().map(|&i| q[self.mech_dim + i]).sum();
        let m = self.mech_dim;
        Ok((self.lagrangian(q, qdot) - (l_mec(&q[..m], &qdot[..m]) - u)).abs())
    }

    fn check_jet(&self, jet: &Jet2) -> Result<()> {
        if jet.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: jet.dim(),
            });
        }
        Ok(())
    }

    fn acceleration_constraints(&self, q: &[f64], qdot: &[f64]) -> Option<(DMatrix<f64>, DVector<f64>)> {
        self.accel.as_ref().map(|f| f(q, qdot))
    }
}

/// Energy `q' . dL/dq' - L`, the derivative taken along the velocity ray.
pub fn lagrangian_energy(lagrangian: LagrangianFn) -> ScalarTangentFn {
    Arc::new(move |q: &[f64], qdot: &[f64]| {
        let l0 = lagrangian(q, qdot);
        let scaled = |e: f64| -> f64 {
            let v: Vec<f64> = qdot.iter().map(|x| x * (1.0 + e)).collect();
            lagrangian(q, &v)
        };
        d1_five_point(scaled, 1e-2) - l0
    })
}

/// `w(jet)`.
pub fn kinematic_residual(sys: &SOCSystem, jet: &Jet2) -> Result<Vec<f64>> {
    sys.check_jet(jet)?;
    Ok(sys.ck.eval(jet))
}

/// Orthonormal basis of `C_V(v)` at `v = (q, q')`.
pub fn variation_basis(sys: &SOCSystem, q: &[f64], qdot: &[f64]) -> VariationBasis {
    VariationBasis {
        columns: nullspace(&sys.variational_matrix(q, qdot), sys.pivot_tol),
    }
}

/// Euler-Lagrange covector `d/dt(dL/dq') - dL/dq` at a jet.
pub fn el_residual(sys: &SOCSystem, jet: &Jet2) -> Result<DVector<f64>> {
    sys.check_jet(jet)?;
    let n = sys.n;
    let h = sys.fd_step;
    let l = |q: &[f64], v: &[f64]| -> f64 { sys.lagrangian(q, v) };
    let l0 = l(&jet.q, &jet.qdot);
    if !l0.is_finite() {
        return Err(Error::NonFinite(format!("Lagrangian at q = {:?}", jet.q)));
    }
    let mut out = DVector::zeros(n);
    let mut qs = vec![0.0; n];
    let mut vs = vec![0.0; n];
    for i in 0..n {
        let hr = h * jet.qdot[i].abs().max(1.0);
        // d/ds of dL/dq'_i along (q + s q', q' + s q'').
        let dldv_along = |s: f64| -> f64 {
            let mut qs = vec![0.0; n];
            let mut vs = vec![0.0; n];
            for k in 0..n {
                qs[k] = jet.q[k] + s * jet.qdot[k];
                vs[k] = jet.qdot[k] + s * jet.qddot[k];
            }
            let base = vs[i];
            d1_five_point(
                |r| {
                    vs[i] = base + r;
                    let value = l(&qs, &vs);
                    vs[i] = base;
                    value
                },
                hr,
            )
        };
        let dt_momentum = d1_five_point(dldv_along, h);
        let hq = h * jet.q[i].abs().max(1.0);
        qs.copy_from_slice(&jet.q);
        vs.copy_from_slice(&jet.qdot);
        let qi = jet.q[i];
        let dldq = d1_five_point(
            |r| {
                qs[i] = qi + r;
                l(&qs, &vs)
            },
            hq,
        );
        let r = dt_momentum - dldq;
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("Euler-Lagrange residual component {i}")));
        }
        out[i] = r;
    }
    Ok(out)
}

/// Largest `|<R, d>|` over unit admissible variations `d`; zero when no
/// variation is admissible.
pub fn dalembert_violation(sys: &SOCSystem, jet: &Jet2) -> Result<f64> {
    let r = el_residual(sys, jet)?;
    let basis = variation_basis(sys, &jet.q, &jet.qdot);
    if basis.dim() == 0 {
        return Ok(0.0);
    }
    Ok((basis.columns.transpose() * r).norm())
}

/// Multipliers `lambda` with `R = sum_b lambda_b v^b`.
pub fn constraint_force(sys: &SOCSystem, jet: &Jet2) -> Result<DVector<f64>> {
    let r = el_residual(sys, jet)?;
    let vmat = sys.variational_matrix(&jet.q, &jet.qdot);
    let (lambda, residual) = least_squares(&vmat.transpose(), &r);
    if residual > sys.force_tol * r.norm().max(1.0) {
        return Err(Error::InconsistentJet { residual });
    }
    Ok(lambda)
}

/// Acceleration of ideal constrained motion: `R(q'') = V^T lambda` together
/// with the acceleration-level kinematic constraints.
pub fn ideal_acceleration(sys: &SOCSystem, q: &[f64], qdot: &[f64]) -> Result<Vec<f64>> {
    let n = sys.n;
    let zero = Jet2::new(q.to_vec(), qdot.to_vec(), vec![0.0; n])?;
    let c = el_residual(sys, &zero)?;
    // R is affine in q''; recover the mass matrix column by column.
    let mut mass = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let jet = Jet2::new(q.to_vec(), qdot.to_vec(), e)?;
        let col = el_residual(sys, &jet)? - &c;
        mass.set_column(j, &col);
    }
    let vmat = sys.variational_matrix(q, qdot);
    let (a, b) = sys
        .acceleration_constraints(q, qdot)
        .unwrap_or_else(|| (DMatrix::zeros(0, n), DVector::zeros(0)));
    let m_v = vmat.nrows();
    let m_a = a.nrows();
    let size = n + m_v;
    let mut kkt = DMatrix::zeros(n + m_a, size);
    kkt.view_mut((0, 0), (n, n)).copy_from(&mass);
    kkt.view_mut((0, n), (n, m_v)).copy_from(&(-vmat.transpose()));
    kkt.view_mut((n, 0), (m_a, n)).copy_from(&a);
    let mut rhs = DVector::zeros(n + m_a);
    rhs.rows_mut(0, n).copy_from(&(-c));
    rhs.rows_mut(n, m_a).copy_from(&b);
    let (sol, residual) = least_squares(&kkt, &rhs);
    if residual > 1e-8 * rhs.norm().max(1.0) {
        return Err(Error::InconsistentJet { residual });
    }
    Ok(sol.rows(0, n).iter().copied().collect())
}

type ConfigVecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ConfigRowsFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Nonholonomic system: velocities annihilated by the rows `A(q)`.
pub fn nonholonomic_embed<L, D>(n: usize, lagrangian: L, dist_rows: D) -> Result<SOCSystem>
where
    L: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    D: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
{
    let rows: ConfigRowsFn = Arc::new(dist_rows);
    let h = 1e-3;
    let rows_ck = rows.clone();
    let ck = KinematicConstraints::new(move |jet: &Jet2| {
        let a = rows_ck(&jet.q);
        let v = DVector::from_column_slice(&jet.qdot);
        let mut out: Vec<f64> = (&a * &v).iter().copied().collect();
        let along = |s: f64, k: usize| -> f64 {
            let qs: Vec<f64> = jet.q.iter().zip(&jet.qdot).map(|(q, v)| q + s * v).collect();
            let vs: Vec<f64> = jet.qdot.iter().zip(&jet.qddot).map(|(v, a)| v + s * a).collect();
            (rows_ck(&qs) * DVector::from_vec(vs))[k]
        };
        for k in 0..a.nrows() {
            out.push(d1_five_point(|s| along(s, k), h));
        }
        out
    });
    let rows_cv = rows.clone();
    let rows_acc = rows;
    let sys = SOCSystem::new("nonholonomic", n, n, lagrangian)?
        .with_kinematic(ck)
        .with_variational(VariationalConstraints::new(move |q, _| rows_cv(q)))
        .with_acceleration_constraints(move |q, qdot| {
            let a = rows_acc(q);
            let v = DVector::from_column_slice(qdot);
            let drift = DVector::from_fn(a.nrows(), |k, _| {
                d1_five_point(
                    |s| {
                        let qs: Vec<f64> = q.iter().zip(qdot).map(|(q, v)| q + s * v).collect();
                        (rows_acc(&qs) * &v)[k]
                    },
                    h,
                )
            });
            (a, -drift)
        });
    Ok(sys)
}

fn fd_jacobian(g: &ConfigVecFn, q: &[f64]) -> DMatrix<f64> {
    let m = g(q).len();
    let n = q.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut work = q.to_vec();
    for j in 0..n {
        let h = central_step(q[j]);
        work[j] = q[j] + h;
        let up = g(&work);
        work[j] = q[j] - h;
        let down = g(&work);
        work[j] = q[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

/// Holonomic system on the level set `g(q) = 0`. The Jacobian of `g` must
/// have full row rank at `probe`.
pub fn holonomic_embed<L, G>(n: usize, lagrangian: L, submanifold_eqs: G, probe: &[f64]) -> Result<SOCSystem>
where
    L: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    if probe.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: probe.len(),
        });
    }
    let g: ConfigVecFn = Arc::new(submanifold_eqs);
    let jac = fd_jacobian(&g, probe);
    let m = jac.nrows();
    let rank = m - nullspace(&jac.transpose(), 1e-10).ncols();
    if rank < m {
        return Err(Error::RankDeficient { rank, expected: m });
    }
    let h = 1e-3;
    let g_ck = g.clone();
    let ck = KinematicConstraints::new(move |jet: &Jet2| {
        let mut out = g_ck(&jet.q);
        let jac = fd_jacobian(&g_ck, &jet.q);
        out.extend((&jac * DVector::from_column_slice(&jet.qdot)).iter());
        let m = out.len() / 2;
        for k in 0..m {
            out.push(d2_five_point(
                |s| {
                    let qs: Vec<f64> = (0..jet.q.len())
                        .map(|i| jet.q[i] + s * jet.qdot[i] + 0.5 * s * s * jet.qddot[i])
                        .collect();
                    g_ck(&qs)[k]
                },
                h,
            ));
        }
        out
    });
    let g_cv = g.clone();
    let g_acc = g;
    SOCSystem::new("holonomic", n, n, lagrangian).map(|sys| {
        sys.with_kinematic(ck)
            .with_variational(VariationalConstraints::new(move |q, _| fd_jacobian(&g_cv, q)))
            .with_acceleration_constraints(move |q, qdot| {
                let jac = fd_jacobian(&g_acc, q);
                let curvature = DVector::from_fn(jac.nrows(), |k, _| {
                    d2_five_point(
                        |s| {
                            let qs: Vec<f64> = q.iter().zip(qdot).map(|(q, v)| q + s * v).collect();
                            g_acc(&qs)[k]
                        },
                        h,
                    )
                });
                (jac, -curvature)
            })
    })
}
