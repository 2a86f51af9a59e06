//! Two oscillators exchanging quanta through a coupling that is simply on for a
//! fixed time. Not autonomous: the switching is imposed from outside.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::{verify, VerifyOptions};
use crate::distribution::EnergyDistribution;
use crate::error::{Error, Result};
use crate::machine::{evolve_total, BipartiteModel};
use crate::operator::{commutator, expectation, tensor, DensityMatrix, Matrix, Operator, C64};
use crate::report::CheckReport;

use super::{positive, LabeledDistribution, ScenarioOutcome, ScenarioResult, ScenarioSpec, SeriesPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwinParams {
    pub omega: f64,
    pub coupling: f64,
    /// Fock-basis populations of the system oscillator, indexed by quantum number.
    pub system_populations: Vec<f64>,
    /// Fock-basis populations of the storage oscillator.
    pub storage_populations: Vec<f64>,
    /// Highest Fock number kept; defaults to total excitation + 1.
    pub truncation: Option<usize>,
    /// Interaction times; defaults to `tau_points` equally spaced times up to `pi hbar / g`.
    pub taus: Option<Vec<f64>>,
    pub tau_points: usize,
}

impl Default for TwinParams {
    fn default() -> Self {
        TwinParams {
            omega: 1.0,
            coupling: 1.0,
            system_populations: vec![0.0, 1.0],
            storage_populations: vec![1.0],
            truncation: None,
            taus: None,
            tau_points: 50,
        }
    }
}

fn validate_populations(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::param(name, "need non-negative populations"));
    }
    if p.iter().sum::<f64>() <= 0.0 {
        return Err(Error::param(name, "populations sum to zero"));
    }
    Ok(())
}

fn highest_occupied(p: &[f64]) -> usize {
    p.iter().rposition(|x| *x > 0.0).unwrap_or(0)
}

impl TwinParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("coupling", self.coupling)?;
        validate_populations("system_populations", &self.system_populations)?;
        validate_populations("storage_populations", &self.storage_populations)?;
        if let Some(taus) = &self.taus {
            if taus.is_empty() {
                return Err(Error::param("taus", "empty list"));
            }
            for t in taus {
                positive("taus", *t)?;
            }
        } else if self.tau_points == 0 {
            return Err(Error::param("tau_points", "must be positive"));
        }
        Ok(())
    }

    fn times(&self, hbar: f64) -> Vec<f64> {
        match &self.taus {
            Some(t) => t.clone(),
            None => {
                let period = PI * hbar / self.coupling;
                (1..=self.tau_points)
                    .map(|k| period * k as f64 / self.tau_points as f64)
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    pub omega: f64,
    pub couplings: Vec<f64>,
    pub system_populations: Vec<f64>,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            omega: 1.0,
            couplings: vec![1.0, 2.0, 4.0, 8.0],
            system_populations: vec![0.0, 1.0],
        }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        if self.couplings.is_empty() {
            return Err(Error::param("couplings", "empty list"));
        }
        for g in &self.couplings {
            positive("couplings", *g)?;
        }
        validate_populations("system_populations", &self.system_populations)
    }
}

fn lowering(levels: usize) -> Operator {
    let mut m = Matrix::zeros(levels, levels);
    for n in 1..levels {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::from_matrix(m).expect("square")
}

fn populations_state(p: &[f64], levels: usize) -> Result<DensityMatrix> {
    let mut full = vec![0.0; levels];
    full[..p.len()].copy_from_slice(p);
    let total: f64 = full.iter().sum();
    DensityMatrix::diagonal(&full.iter().map(|x| x / total).collect::<Vec<_>>())
}

/// Resonant oscillators `hbar omega a^dagger a`, `hbar omega b^dagger b` with
/// exchange coupling `g (a^dagger b + a b^dagger)`, truncated at Fock number `truncation`.
///
/// Also returns the residual `max |[N_a + N_b, V]|`, which must vanish for the
/// truncation to be exact.
pub fn oscillator_pair(
    omega: f64,
    coupling: f64,
    system_populations: &[f64],
    storage_populations: &[f64],
    truncation: Option<usize>,
    tau: f64,
    hbar: f64,
) -> Result<(BipartiteModel, f64)> {
    let excitation = highest_occupied(system_populations) + highest_occupied(storage_populations);
    let truncation = truncation.unwrap_or(excitation + 1);
    if excitation >= truncation {
        return Err(Error::ExcitationOverflow {
            excitation,
            truncation,
        });
    }
    if system_populations.len() > truncation + 1 || storage_populations.len() > truncation + 1 {
        return Err(Error::ExcitationOverflow {
            excitation: system_populations.len().max(storage_populations.len()) - 1,
            truncation,
        });
    }
    let levels = truncation + 1;
    let a = lowering(levels);
    let n = &a.adjoint() * &a;
    let h = n.scale_real(hbar * omega);
    let id = Operator::identity(levels);
    let hop = tensor(&a.adjoint(), &a);
    let v = (&hop + &hop.adjoint()).scale_real(coupling);
    let total_number = &tensor(&n, &id) + &tensor(&id, &n);
    let conservation = commutator(&total_number, &v)?.max_abs_entry();
    let model = BipartiteModel::new(
        h.clone(),
        h,
        v,
        populations_state(system_populations, levels)?,
        populations_state(storage_populations, levels)?,
        tau,
        hbar,
    )?;
    Ok((model, conservation))
}

/// `(<H_S> - <H_W>)(1 - cos(2 g tau / hbar)) / 2`.
fn closed_form(model: &BipartiteModel, coupling: f64) -> Result<f64> {
    let gap = expectation(model.h_s(), model.rho_s())? - expectation(model.h_a(), model.sigma_a())?;
    Ok(gap * (1.0 - (2.0 * coupling * model.tau() / model.hbar()).cos()) / 2.0)
}

pub(super) fn run_twin(spec: &ScenarioSpec, p: &TwinParams) -> Result<ScenarioResult> {
    let hbar = spec.hbar;
    let peak_tau = PI * hbar / (2.0 * p.coupling);
    let (peak, conservation) = oscillator_pair(
        p.omega,
        p.coupling,
        &p.system_populations,
        &p.storage_populations,
        p.truncation,
        peak_tau,
        hbar,
    )?;
    let tol = spec.tol("closed_form", 1e-10);

    let mut series = Vec::new();
    let mut worst = 0.0_f64;
    for tau in p.times(hbar) {
        let m = peak.with_tau(tau)?;
        let report = verify(&m, &VerifyOptions::for_model(&m))?;
        worst = worst.max((report.work - closed_form(&m, p.coupling)?).abs());
        series.push(SeriesPoint { param: tau, report });
    }
    let peak_report = verify(&peak, &VerifyOptions::for_model(&peak))?;
    let gap = closed_form(&peak, p.coupling)?;
    let short = peak.with_tau(1e-4 * hbar / p.coupling)?;
    let short_work = crate::machine::mean_work(&short)?;

    let checks = vec![
        CheckReport::within(
            "number_conservation",
            conservation,
            spec.tol("number_conservation", 1e-12),
        ),
        CheckReport::within("closed_form", worst, tol),
        CheckReport::within(
            "peak_work",
            (peak_report.work - gap).abs(),
            spec.tol("peak_work", 1e-10),
        ),
        CheckReport::within("short_time_work", short_work.abs(), spec.tol("short_time_work", 1e-6)),
    ];

    let evo = evolve_total(&peak, peak_tau);
    let distributions = vec![
        LabeledDistribution {
            label: "storage_before".into(),
            distribution: EnergyDistribution::of(peak.h_a(), peak.sigma_a())?,
        },
        LabeledDistribution {
            label: "storage_after".into(),
            distribution: EnergyDistribution::of(peak.h_a(), &evo.sigma_a_final)?,
        },
    ];
    Ok(ScenarioResult {
        outcome: ScenarioOutcome::assemble(spec, peak_report, checks, Some("tau"), series),
        distributions,
    })
}

pub(super) fn run_control(spec: &ScenarioSpec, p: &ControlParams) -> Result<ScenarioResult> {
    let hbar = spec.hbar;
    let mean_quanta: f64 = {
        let total: f64 = p.system_populations.iter().sum();
        p.system_populations
            .iter()
            .enumerate()
            .map(|(n, x)| n as f64 * x / total)
            .sum()
    };
    let mut series = Vec::new();
    let mut formula_gap = 0.0_f64;
    let mut slope_gap = 0.0_f64;
    let mut fluctuation = 0.0_f64;
    let mut unflagged = 0usize;
    let mut first_slope = None;
    for &g in &p.couplings {
        let tau = PI * hbar / (2.0 * g);
        let (model, _) = oscillator_pair(p.omega, g, &p.system_populations, &[1.0], None, tau, hbar)?;
        let report = verify(&model, &VerifyOptions::for_model(&model))?;
        let expected = 2.0 * g * p.omega * mean_quanta / PI;
        formula_gap = formula_gap.max((report.power - expected).abs() / expected.max(1.0));
        let slope = report.power / g;
        let s0 = *first_slope.get_or_insert(slope);
        slope_gap = slope_gap.max((slope - s0).abs() / s0.abs().max(1e-300));
        fluctuation = fluctuation.max(report.delta_h_a);
        if !(report.expected_violation && !report.condition1_ok) {
            unflagged += 1;
        }
        series.push(SeriesPoint { param: g, report });
    }
    let checks = vec![
        CheckReport::within("power_formula", formula_gap, spec.tol("power_formula", 1e-10)),
        CheckReport::within("linear_growth", slope_gap, spec.tol("linear_growth", 1e-10)),
        CheckReport::within("storage_fluctuation", fluctuation, spec.tol("storage_fluctuation", 1e-12)),
        CheckReport::within("violation_flagged", unflagged as f64, 0.0)
            .with_detail("every coupling must report condition1_ok = false and an expected violation"),
    ];
    let headline = series[0].report.clone();
    Ok(ScenarioResult {
        outcome: ScenarioOutcome::assemble(spec, headline, checks, Some("coupling"), series),
        distributions: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{run_scenario, ScenarioParams};
    use super::*;

    #[test]
    fn default_twin_hits_closed_form() {
        let spec = ScenarioSpec::new("twin", 1.0, ScenarioParams::TwinOscillator(TwinParams::default()));
        let r = run_scenario(&spec).unwrap().outcome;
        assert!(r.pass, "{:#?}", r.checks);
        assert!(!r.autonomous);
        assert!((r.bound_report.work - 1.0).abs() < 1e-10);
        assert_eq!(r.series.len(), 50);
    }

    #[test]
    fn two_quanta_against_one() {
        // |2><2| against |1><1|: the 3-excitation sector is closed under the coupling
        let (m, cons) = oscillator_pair(1.0, 0.7, &[0.0, 0.0, 1.0], &[0.0, 1.0], None, 0.9, 1.0).unwrap();
        assert!(cons < 1e-12);
        let w = crate::machine::mean_work(&m).unwrap();
        let expected = (2.0 - 1.0) * (1.0 - (2.0 * 0.7 * 0.9f64).cos()) / 2.0;
        assert!((w - expected).abs() < 1e-10, "{w} vs {expected}");
    }

    #[test]
    fn overflow_is_reported() {
        let e = oscillator_pair(1.0, 1.0, &[0.0, 0.0, 1.0], &[0.0, 1.0], Some(3), 1.0, 1.0).unwrap_err();
        assert!(matches!(e, Error::ExcitationOverflow { excitation: 3, truncation: 3 }));
    }

    #[test]
    fn control_power_doubles_with_coupling() {
        let spec = ScenarioSpec::new(
            "control",
            1.0,
            ScenarioParams::NonautonomousControl(ControlParams::default()),
        );
        let r = run_scenario(&spec).unwrap().outcome;
        assert!(r.pass, "{:#?}", r.checks);
        for pair in r.series.windows(2) {
            assert!((pair[1].report.power / pair[0].report.power - 2.0).abs() < 1e-9);
        }
        assert!(r.series.iter().all(|s| s.report.rhs_fluctuation == 0.0 && s.report.expected_violation));
    }
}
