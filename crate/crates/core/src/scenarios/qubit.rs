//! A qubit flipped by an ideal clock passing a narrow interaction bump.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::SEMI_ANALYTIC_TOL;
use crate::clockwork::{
    build_vs_from_unitary, check_clock_uncertainty, optimal_wavefunction, verify_clock,
    ClockMachineSpec, ClockState, LatticeClock, RaisedCosine,
};
use crate::error::{Error, Result};
use crate::operator::{DensityMatrix, Operator, UnitaryOperator};
use crate::report::CheckReport;

use super::{odd_points, positive, LabeledDistribution, ScenarioOutcome, ScenarioResult, ScenarioSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitParams {
    /// Half the level splitting: the system Hamiltonian is `diag(-C, C)`.
    pub level_scale: f64,
    /// Width of the clock wavefunction's support.
    pub clock_width: f64,
    /// Width of the interaction bump relative to `clock_width`.
    pub profile_ratio: f64,
    pub grid_points: usize,
    /// Midpoint cells in the time-ordered transit product.
    pub steps: usize,
    pub speed: f64,
    /// Lattice cells per clock width used for the clock energy distributions.
    pub distribution_cells: usize,
}

impl Default for QubitParams {
    fn default() -> Self {
        QubitParams {
            level_scale: 1.0,
            clock_width: 1.0,
            profile_ratio: 0.01,
            grid_points: 2001,
            steps: 4096,
            speed: 1.0,
            distribution_cells: 100,
        }
    }
}

impl QubitParams {
    pub fn validate(&self) -> Result<()> {
        positive("level_scale", self.level_scale)?;
        positive("clock_width", self.clock_width)?;
        positive("profile_ratio", self.profile_ratio)?;
        positive("speed", self.speed)?;
        odd_points("grid_points", self.grid_points, 3)?;
        if self.steps == 0 {
            return Err(Error::param("steps", "must be positive"));
        }
        let cells = self.distribution_cells;
        if cells == 0 || cells % 2 == 1 || (self.grid_points - 1) % cells != 0 {
            return Err(Error::param(
                "distribution_cells",
                format!(
                    "must be even and divide grid_points - 1 = {}, got {cells}",
                    self.grid_points - 1
                ),
            ));
        }
        Ok(())
    }
}

/// Excited qubit, optimal clock, bump built so the transit applies `sigma_x`.
pub fn qubit_machine(p: &QubitParams, hbar: f64) -> Result<ClockMachineSpec> {
    let c = p.level_scale;
    let h = Operator::from_real_diagonal(&[-c, c]);
    let flip = UnitaryOperator::new(Operator::pauli_x())?;
    let window = RaisedCosine::new(p.profile_ratio * p.clock_width)?;
    let profile = build_vs_from_unitary(&flip, window, &h, hbar, p.speed)?;
    let psi = optimal_wavefunction(p.clock_width, p.grid_points)?;
    ClockMachineSpec::new(
        h,
        DensityMatrix::basis(2, 1),
        profile,
        ClockState::pure(psi),
        p.speed,
        hbar,
        p.steps,
    )
}

pub(super) fn run(spec: &ScenarioSpec, p: &QubitParams) -> Result<ScenarioResult> {
    let hbar = spec.hbar;
    let machine = qubit_machine(p, hbar)?;
    let report = verify_clock(&machine, spec.tol("bound", SEMI_ANALYTIC_TOL))?;
    let c = p.level_scale;
    let sat = report.saturation_fluctuation.unwrap_or(f64::INFINITY);
    let predicted = 1.0 / (PI * (1.0 + p.profile_ratio));
    let tau_min = PI * hbar / report.delta_h_a;
    let timescale = hbar / (2.0 * c);

    let lattice = LatticeClock::new(
        4 * p.distribution_cells + 1,
        p.clock_width / p.distribution_cells as f64,
        -2.0 * p.clock_width,
    )?;
    let clock0 = lattice.clock_state(&machine)?;
    let before = lattice.momentum_distribution(&clock0, hbar, p.speed)?;
    let after = lattice.semi_analytic_final_distribution(&machine)?;
    let gain = after.mean() - before.mean();

    let checks = vec![
        CheckReport::within(
            "work_maximal",
            (report.work - 2.0 * c).abs(),
            spec.tol("work_maximal", 1e-6),
        ),
        CheckReport::at_most(
            "saturation_ceiling",
            sat,
            1.0 / PI,
            spec.tol("saturation_ceiling", 1e-9),
        ),
        CheckReport::within(
            "saturation_prediction",
            (sat - predicted).abs(),
            spec.tol("saturation_prediction", 1e-4),
        )
        .with_detail(format!("predicted={predicted:.17e}")),
        check_clock_uncertainty(&machine, spec.tol("clock_uncertainty", 1e-6)),
        CheckReport::within(
            "min_time_identity",
            (PI * report.tau / tau_min - 1.0 / sat).abs() * sat,
            spec.tol("min_time_identity", 1e-6),
        )
        .with_detail(format!(
            "tau_min={tau_min:.17e} tau_min/timescale={:.17e}",
            tau_min / timescale
        )),
        CheckReport::within(
            "detectability_ratio",
            (tau_min / timescale - 2.0 * PI * c / report.delta_h_a).abs(),
            spec.tol("detectability_ratio", 1e-12),
        ),
        CheckReport::within(
            "clock_energy_gain",
            (gain - report.work).abs(),
            spec.tol("clock_energy_gain", 1e-4 * report.work.abs().max(1.0)),
        ),
    ];
    let distributions = vec![
        LabeledDistribution {
            label: "clock_before".into(),
            distribution: before,
        },
        LabeledDistribution {
            label: "clock_after".into(),
            distribution: after,
        },
    ];
    Ok(ScenarioResult {
        outcome: ScenarioOutcome::assemble(spec, report, checks, None, Vec::new()),
        distributions,
    })
}
