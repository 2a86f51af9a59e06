//! Self-contained bipartite machines: a system and an agent coupled by a
//! time-independent interaction, with the structural checks that make the
//! exchanged energy interpretable as work.
//!
//! Joint operators act on `system ⊗ agent`, with the system as factor 0.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::operator::{
    commutator, expectation, reduce, tensor, trace_norm, DensityMatrix, HermitianSpectrum,
    Matrix, Operator, UnitaryOperator,
};
use crate::report::CheckReport;

/// Relative agreement required between the two algebraic forms of the mean work.
pub const WORK_CROSS_CHECK_TOL: f64 = 1e-10;

/// One machine instance: Hamiltonians, interaction, initial states, duration and action unit.
#[derive(Clone, Debug)]
pub struct BipartiteModel {
    h_s: Operator,
    h_a: Operator,
    v: Operator,
    rho_s: DensityMatrix,
    sigma_a: DensityMatrix,
    tau: f64,
    hbar: f64,
    total_spectrum: OnceLock<HermitianSpectrum>,
    agent_spectrum: OnceLock<HermitianSpectrum>,
    system_spectrum: OnceLock<HermitianSpectrum>,
}

impl BipartiteModel {
    pub fn new(
        h_s: Operator,
        h_a: Operator,
        v: Operator,
        rho_s: DensityMatrix,
        sigma_a: DensityMatrix,
        tau: f64,
        hbar: f64,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::param("hbar", format!("must be positive, got {hbar}")));
        }
        h_s.ensure_hermitian()?;
        h_a.ensure_hermitian()?;
        v.ensure_hermitian()?;
        let (ds, da) = (h_s.dim(), h_a.dim());
        if rho_s.dim() != ds || sigma_a.dim() != da || v.dim() != ds * da {
            return Err(Error::DimensionMismatch(format!(
                "system {ds}, agent {da}, interaction {}, rho_s {}, sigma_a {}",
                v.dim(),
                rho_s.dim(),
                sigma_a.dim()
            )));
        }
        let h_s = h_s.with_dims(vec![ds])?;
        let h_a = h_a.with_dims(vec![da])?;
        let v = v.with_dims(vec![ds, da])?;
        Ok(BipartiteModel {
            h_s,
            h_a,
            v,
            rho_s,
            sigma_a,
            tau,
            hbar,
            total_spectrum: OnceLock::new(),
            agent_spectrum: OnceLock::new(),
            system_spectrum: OnceLock::new(),
        })
    }

    /// Same Hamiltonians, different initial states (spectral caches are kept).
    pub fn with_states(&self, rho_s: DensityMatrix, sigma_a: DensityMatrix) -> Result<Self> {
        if rho_s.dim() != self.system_dim() || sigma_a.dim() != self.agent_dim() {
            return Err(Error::DimensionMismatch("replacement states".into()));
        }
        let mut m = self.clone();
        m.rho_s = rho_s;
        m.sigma_a = sigma_a;
        Ok(m)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        let mut m = self.clone();
        m.tau = tau;
        Ok(m)
    }

    pub fn h_s(&self) -> &Operator {
        &self.h_s
    }
    pub fn h_a(&self) -> &Operator {
        &self.h_a
    }
    pub fn v(&self) -> &Operator {
        &self.v
    }
    pub fn rho_s(&self) -> &DensityMatrix {
        &self.rho_s
    }
    pub fn sigma_a(&self) -> &DensityMatrix {
        &self.sigma_a
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn system_dim(&self) -> usize {
        self.h_s.dim()
    }
    pub fn agent_dim(&self) -> usize {
        self.h_a.dim()
    }

    /// `H_S ⊗ 1 + 1 ⊗ H_A`.
    pub fn h_free(&self) -> Operator {
        let ds = self.system_dim();
        let da = self.agent_dim();
        &tensor(&self.h_s, &Operator::identity(da)) + &tensor(&Operator::identity(ds), &self.h_a)
    }

    /// `H_0 + V`.
    pub fn h_total(&self) -> Operator {
        &self.h_free() + &self.v
    }

    pub fn initial_joint(&self) -> DensityMatrix {
        DensityMatrix::assume(tensor(self.rho_s.operator(), self.sigma_a.operator()))
    }

    fn total_spectrum(&self) -> &HermitianSpectrum {
        self.total_spectrum.get_or_init(|| {
            HermitianSpectrum::of(&self.h_total()).expect("validated Hermitian at construction")
        })
    }

    fn agent_spectrum(&self) -> &HermitianSpectrum {
        self.agent_spectrum
            .get_or_init(|| HermitianSpectrum::of(&self.h_a).expect("validated Hermitian"))
    }

    fn system_spectrum(&self) -> &HermitianSpectrum {
        self.system_spectrum
            .get_or_init(|| HermitianSpectrum::of(&self.h_s).expect("validated Hermitian"))
    }

    pub fn total_propagator(&self, t: f64) -> UnitaryOperator {
        self.total_spectrum().propagator(t, self.hbar)
    }

    pub fn agent_propagator(&self, t: f64) -> UnitaryOperator {
        self.agent_spectrum().propagator(t, self.hbar)
    }

    pub fn system_propagator(&self, t: f64) -> UnitaryOperator {
        self.system_spectrum().propagator(t, self.hbar)
    }

    /// Interaction block `V_ab` acting on the agent, for system indices `a`, `b`.
    fn interaction_block(&self, a: usize, b: usize) -> Matrix {
        let da = self.agent_dim();
        self.v.matrix().view((a * da, b * da), (da, da)).into_owned()
    }
}

/// Joint and reduced states at one time.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub time: f64,
    pub theta: DensityMatrix,
    pub rho_s_final: DensityMatrix,
    pub sigma_a_final: DensityMatrix,
    /// The system evolved by `H_S` alone over the same time.
    pub rho_s_free: DensityMatrix,
}

/// Agent state freely evolved by `H_A` to time `t` (switch-on reference time 0).
pub fn sigma_free(model: &BipartiteModel, t: f64) -> DensityMatrix {
    model.sigma_a.evolve(&model.agent_propagator(t))
}

/// System state freely evolved by `H_S` to time `t`.
pub fn rho_free(model: &BipartiteModel, t: f64) -> DensityMatrix {
    model.rho_s.evolve(&model.system_propagator(t))
}

/// Evolve `rho_s ⊗ sigma_a` by the full Hamiltonian to time `t`.
pub fn evolve_total(model: &BipartiteModel, t: f64) -> EvolutionResult {
    let theta = model.initial_joint().evolve(&model.total_propagator(t));
    let rho_s_final = reduce(&theta, 0).expect("joint state has two factors");
    let sigma_a_final = reduce(&theta, 1).expect("joint state has two factors");
    EvolutionResult {
        time: t,
        theta,
        rho_s_final,
        sigma_a_final,
        rho_s_free: rho_free(model, t),
    }
}

/// Frobenius norm of `[V, E_kl ⊗ sigma]`, maximised over all system matrix units.
///
/// Linearity in the system state makes the matrix-unit basis a complete test of
/// "for every system state". The Frobenius norm bounds the operator norm from above.
fn max_matrix_unit_commutator(model: &BipartiteModel, sigma: &Matrix) -> f64 {
    let ds = model.system_dim();
    // left[a][k] = V_ak sigma, right[l][b] = sigma V_lb
    let mut left = vec![Vec::with_capacity(ds); ds];
    let mut right = vec![Vec::with_capacity(ds); ds];
    for a in 0..ds {
        for k in 0..ds {
            let block = model.interaction_block(a, k);
            left[a].push(&block * sigma);
            right[a].push(sigma * &block);
        }
    }
    let mut worst = 0.0_f64;
    for k in 0..ds {
        for l in 0..ds {
            // Blocks of [V, E_kl ⊗ σ]: (a,l) = V_ak σ for a≠k, (k,b) = -σ V_lb for b≠l,
            // and (k,l) = V_kk σ - σ V_ll.
            let mut sq = 0.0;
            for a in 0..ds {
                if a != k {
                    sq += left[a][k].norm_squared();
                }
            }
            for b in 0..ds {
                if b != l {
                    sq += right[l][b].norm_squared();
                }
            }
            sq += (&left[k][k] - &right[l][l]).norm_squared();
            worst = worst.max(sq.sqrt());
        }
    }
    worst
}

/// Switch-on condition: `[V, rho ⊗ sigma_A(t)] = 0` for every system state and every sampled `t <= 0`.
pub fn check_condition1(model: &BipartiteModel, t_samples: &[f64], tol: f64) -> CheckReport {
    const NAME: &str = "condition1";
    if let Some(&bad) = t_samples.iter().find(|&&t| t > 0.0) {
        return CheckReport::inapplicable(NAME, format!("sample time {bad} is after switch-on"));
    }
    if t_samples.is_empty() {
        return CheckReport::inapplicable(NAME, "no sample times");
    }
    let mut worst = 0.0_f64;
    let mut worst_t = 0.0;
    for &t in t_samples {
        let sigma_t = sigma_free(model, t);
        let r = max_matrix_unit_commutator(model, sigma_t.matrix());
        if r > worst {
            worst = r;
            worst_t = t;
        }
    }
    CheckReport::within(NAME, worst, tol).with_detail(format!(
        "max Frobenius residual over {} samples at t={worst_t}",
        t_samples.len()
    ))
}

/// Trace-norm distance between the joint evolution of `rho_s ⊗ sigma_a` and the
/// product of the free evolutions, at a time `t <= 0`.
pub fn check_factorization(model: &BipartiteModel, t: f64, tol: f64) -> CheckReport {
    const NAME: &str = "factorization";
    if t > 0.0 {
        return CheckReport::inapplicable(NAME, format!("time {t} is after switch-on"));
    }
    let joint = evolve_total(model, t).theta;
    let product = tensor(rho_free(model, t).operator(), sigma_free(model, t).operator());
    let residual = trace_norm(&(joint.operator() - &product));
    CheckReport::within(NAME, residual, tol).with_detail(format!("t={t}"))
}

/// `|tr (H_S + H_A) Theta(tau) - tr (H_S + H_A) Theta(0)|`.
pub fn check_avg_energy_conservation(model: &BipartiteModel, tol: f64) -> CheckReport {
    let h0 = model.h_free();
    let before = expectation(&h0, &model.initial_joint()).expect("Hermitian");
    let after = expectation(&h0, &evolve_total(model, model.tau).theta).expect("Hermitian");
    CheckReport::within("avg_energy_conservation", (after - before).abs(), tol)
}

/// `[V, Theta(t)] = 0` for every sampled `t >= tau`.
pub fn check_switch_off(model: &BipartiteModel, t_samples: &[f64], tol: f64) -> CheckReport {
    const NAME: &str = "switch_off";
    if let Some(&bad) = t_samples.iter().find(|&&t| t < model.tau) {
        return CheckReport::inapplicable(NAME, format!("sample time {bad} precedes tau"));
    }
    if t_samples.is_empty() {
        return CheckReport::inapplicable(NAME, "no sample times");
    }
    let worst = t_samples
        .iter()
        .map(|&t| {
            let theta = evolve_total(model, t).theta;
            commutator(&model.v, theta.operator())
                .expect("same joint dimension")
                .frobenius_norm()
        })
        .fold(0.0_f64, f64::max);
    CheckReport::within(NAME, worst, tol)
}

/// Mean work `tr H_S (rho_S - rho_S'(tau))`.
///
/// Also evaluates `tr H_S (rho_S(tau) - rho_S'(tau))` and fails if the two disagree.
pub fn mean_work(model: &BipartiteModel) -> Result<f64> {
    let evo = evolve_total(model, model.tau);
    work_from_evolution(model, &evo)
}

pub(crate) fn work_from_evolution(model: &BipartiteModel, evo: &EvolutionResult) -> Result<f64> {
    let final_energy = expectation(&model.h_s, &evo.rho_s_final)?;
    let initial = expectation(&model.h_s, &model.rho_s)? - final_energy;
    let free_ref = expectation(&model.h_s, &evo.rho_s_free)? - final_energy;
    let scale = crate::operator::operator_norm(&model.h_s).max(1.0);
    if (initial - free_ref).abs() > WORK_CROSS_CHECK_TOL * scale {
        return Err(Error::Numerical(format!(
            "work forms disagree: {initial:e} vs {free_ref:e}"
        )));
    }
    Ok(initial)
}

/// `W / tau`.
pub fn mean_power(model: &BipartiteModel) -> Result<f64> {
    Ok(mean_work(model)? / model.tau)
}

/// Mean energy gained by the agent, `tr H_A (sigma_A'(tau) - sigma_A)`.
pub fn agent_energy_gain(model: &BipartiteModel) -> Result<f64> {
    let evo = evolve_total(model, model.tau);
    Ok(expectation(&model.h_a, &evo.sigma_a_final)? - expectation(&model.h_a, &model.sigma_a)?)
}

/// When the interaction commutes with `H_S + H_A` and the switch-on condition
/// holds, the joint evolution must stay a product of free evolutions.
pub fn check_conservation_triviality(
    model: &BipartiteModel,
    condition1_samples: &[f64],
    t_samples: &[f64],
    tol: f64,
) -> CheckReport {
    const NAME: &str = "conservation_triviality";
    let comm = commutator(&model.h_free(), &model.v)
        .expect("same joint dimension")
        .frobenius_norm();
    if comm > tol {
        return CheckReport::inapplicable(
            NAME,
            format!("[H_S + H_A, V] is nonzero (Frobenius {comm:e})"),
        );
    }
    let c1 = check_condition1(model, condition1_samples, tol);
    if !c1.passed {
        return CheckReport::inapplicable(
            NAME,
            format!("switch-on condition fails (residual {:e})", c1.residual),
        );
    }
    let mut worst = 0.0_f64;
    for &t in t_samples {
        if !(t > 0.0 && t <= model.tau) {
            return CheckReport::inapplicable(NAME, format!("sample {t} outside (0, tau]"));
        }
        let joint = evolve_total(model, t).theta;
        let product = tensor(rho_free(model, t).operator(), sigma_free(model, t).operator());
        worst = worst.max(trace_norm(&(joint.operator() - &product)));
    }
    CheckReport::within(NAME, worst, tol)
}

/// `||sigma_A - sigma_A(-tau)||_1`.
pub fn agent_delay_distance(model: &BipartiteModel) -> f64 {
    let delayed = sigma_free(model, -model.tau);
    trace_norm(&(model.sigma_a.operator() - delayed.operator()))
}
