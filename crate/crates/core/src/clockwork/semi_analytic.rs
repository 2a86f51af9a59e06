//! Quadrature over the clock wavefunction: each clock position contributes
//! a dressed copy of the transit unitary.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::bounds::{BoundInputs, BoundReport, QslChainInputs, QslChainReport, SEMI_ANALYTIC_TOL};
use crate::error::{Error, Result};
use crate::operator::{
    expectation, operator_norm, trace_norm, DensityMatrix, HermitianSpectrum, Matrix, Operator,
    UnitaryOperator,
};
use crate::report::CheckReport;

use super::profile::{dressed_unitary, effective_unitary, InteractionProfile};
use super::wavefunction::ClockState;

/// A system driven by a clock particle of speed `nu` moving past the profile.
#[derive(Clone, Debug)]
pub struct ClockMachineSpec {
    h_s: Operator,
    rho_s: DensityMatrix,
    profile: InteractionProfile,
    clock: ClockState,
    nu: f64,
    hbar: f64,
    steps: usize,
    system: HermitianSpectrum,
    transit: OnceLock<UnitaryOperator>,
}

impl ClockMachineSpec {
    /// `steps` is the number of midpoint cells used for the time-ordered transit unitary.
    pub fn new(
        h_s: Operator,
        rho_s: DensityMatrix,
        profile: InteractionProfile,
        clock: ClockState,
        nu: f64,
        hbar: f64,
        steps: usize,
    ) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::param("nu", format!("must be positive, got {nu}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::param("hbar", format!("must be positive, got {hbar}")));
        }
        if steps == 0 {
            return Err(Error::param("steps", "must be positive"));
        }
        let d = h_s.dim();
        if rho_s.dim() != d || profile.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "system {d}, state {}, profile {}",
                rho_s.dim(),
                profile.dim()
            )));
        }
        let system = HermitianSpectrum::of(&h_s)?;
        Ok(ClockMachineSpec {
            h_s,
            rho_s,
            profile,
            clock,
            nu,
            hbar,
            steps,
            system,
            transit: OnceLock::new(),
        })
    }

    pub fn h_s(&self) -> &Operator {
        &self.h_s
    }

    pub fn rho_s(&self) -> &DensityMatrix {
        &self.rho_s
    }

    pub fn profile(&self) -> &InteractionProfile {
        &self.profile
    }

    pub fn clock(&self) -> &ClockState {
        &self.clock
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub(crate) fn system_spectrum(&self) -> &HermitianSpectrum {
        &self.system
    }

    /// Time for every clock component to clear the profile.
    pub fn tau(&self) -> f64 {
        (self.clock.width() + self.profile.width()) / self.nu
    }

    /// Same machine with a different system state.
    pub fn with_rho_s(&self, rho_s: DensityMatrix) -> Result<Self> {
        if rho_s.dim() != self.h_s.dim() {
            return Err(Error::DimensionMismatch("replacement system state".into()));
        }
        let mut s = self.clone();
        s.rho_s = rho_s;
        Ok(s)
    }

    /// Transit unitary for a clock starting at the origin.
    pub fn transit_unitary(&self) -> Result<&UnitaryOperator> {
        if let Some(u) = self.transit.get() {
            return Ok(u);
        }
        let u = effective_unitary(&self.profile, &self.h_s, self.hbar, self.nu, self.steps)?;
        Ok(self.transit.get_or_init(|| u))
    }

    /// `e^{-i H_S tau/hbar} rho_S e^{i H_S tau/hbar}`.
    pub fn free_system_state(&self) -> DensityMatrix {
        self.rho_s.evolve(&self.system.propagator(self.tau(), self.hbar))
    }

    /// Largest `|psi(x)| ||V_S(x)||_F` over the clock grid at and before the start.
    ///
    /// Zero whenever the wavefunction sits entirely left of the profile.
    pub fn switch_on_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (_, psi) in self.clock.components() {
            for (j, a) in psi.amplitudes().iter().enumerate() {
                if a.norm() == 0.0 {
                    continue;
                }
                let v = self.profile.sample(psi.position(j)).frobenius_norm();
                worst = worst.max(a.norm() * v);
            }
        }
        worst
    }
}

/// Iterate `(weight, dressed transit unitary)` over all clock components and grid points.
fn for_each_dressed(
    spec: &ClockMachineSpec,
    mut f: impl FnMut(f64, &UnitaryOperator),
) -> Result<()> {
    let u = spec.transit_unitary()?;
    for (p, psi) in spec.clock.components() {
        let weights = psi.simpson_density();
        for (j, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let ux = dressed_unitary(u, psi.position(j), &spec.system, spec.hbar, spec.nu);
            f(p * w, &ux);
        }
    }
    Ok(())
}

/// Final reduced system state after the clock has passed.
pub fn final_system_state(spec: &ClockMachineSpec) -> Result<DensityMatrix> {
    let d = spec.h_s.dim();
    let mut acc = Matrix::zeros(d, d);
    let rho = spec.rho_s.matrix();
    for_each_dressed(spec, |w, ux| {
        let m = ux.matrix();
        acc += (m * rho * m.adjoint()).scale(w);
    })?;
    let free = spec.system.propagator(spec.tau(), spec.hbar);
    let out = Operator::from_parts(acc, vec![d]).conjugate_by(free.operator());
    Ok(DensityMatrix::assume(out))
}

/// `sum_i p_i int |psi_i(x)|^2 tr[H_S U e^{i x H_S/(nu hbar)} rho e^{-i x H_S/(nu hbar)} U^dagger] dx`.
pub fn final_energy(spec: &ClockMachineSpec) -> Result<f64> {
    let u = spec.transit_unitary()?.matrix().clone();
    let h = spec.h_s.matrix();
    let rho = spec.rho_s.operator();
    let mut total = 0.0;
    for (p, psi) in spec.clock.components() {
        let weights = psi.simpson_density();
        for (j, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let back = spec.system.propagator(-psi.position(j) / spec.nu, spec.hbar);
            let shifted = rho.conjugate_by(back.operator());
            let e = (h * &u * shifted.matrix() * u.adjoint()).trace().re;
            total += p * w * e;
        }
    }
    Ok(total)
}

/// Mean extracted work `tr H_S (rho_S - rho_S')`, cross-checked against [`final_energy`].
pub fn mean_work(spec: &ClockMachineSpec) -> Result<f64> {
    let initial = expectation(&spec.h_s, &spec.rho_s)?;
    let by_state = initial - expectation(&spec.h_s, &final_system_state(spec)?)?;
    let by_energy = initial - final_energy(spec)?;
    let scale = operator_norm(&spec.h_s).max(1.0);
    if (by_state - by_energy).abs() > 1e-10 * scale {
        return Err(Error::Numerical(format!(
            "work routes disagree: {by_state} vs {by_energy}"
        )));
    }
    Ok(by_state)
}

/// `tau Delta H_A >= pi hbar`, the clock uncertainty relation.
pub fn check_clock_uncertainty(spec: &ClockMachineSpec, tol: f64) -> CheckReport {
    let dh = spec.clock.fluctuation(spec.hbar, spec.nu);
    CheckReport::at_most(
        "clock_uncertainty",
        PI * spec.hbar,
        spec.tau() * dh,
        tol,
    )
}

/// Bound report for the clock-driven machine.
///
/// The switch-on condition is checked structurally through [`ClockMachineSpec::switch_on_residual`].
pub fn verify_clock(spec: &ClockMachineSpec, tol: f64) -> Result<BoundReport> {
    let work = mean_work(spec)?;
    let residual = spec.switch_on_residual();
    Ok(BoundReport::from_inputs(BoundInputs {
        work,
        tau: spec.tau(),
        hbar: spec.hbar,
        h_s_norm: operator_norm(&spec.h_s),
        delta_h_a: spec.clock.fluctuation(spec.hbar, spec.nu),
        comm_norm: spec.clock.commutator_trace_norm(spec.hbar, spec.nu),
        condition1_ok: residual <= SEMI_ANALYTIC_TOL,
        condition1_residual: residual,
        tolerance: tol,
    }))
}

/// Speed-limit chain for the clock-driven machine.
///
/// After the transit the clock has moved by at least its own width, so the delayed
/// and undelayed clock states have disjoint supports and their trace distance is 2.
pub fn clock_qsl_chain(spec: &ClockMachineSpec, tol: f64) -> Result<QslChainReport> {
    let work = mean_work(spec)?;
    let deviation = trace_norm(
        &(final_system_state(spec)?.operator() - spec.free_system_state().operator()),
    );
    let inputs = QslChainInputs {
        tau: spec.tau(),
        hbar: spec.hbar,
        agent_delay_distance: 2.0,
        comm_norm: spec.clock.commutator_trace_norm(spec.hbar, spec.nu),
        system_deviation: deviation,
        work,
        h_s_norm: operator_norm(&spec.h_s),
    };
    Ok(QslChainReport::evaluate(inputs, tol))
}
