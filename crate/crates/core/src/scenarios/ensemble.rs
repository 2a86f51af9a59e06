//! Randomised clock machines: every draw must respect both power bounds and the
//! speed-limit chain; a subsample is rebuilt on a lattice as an independent oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    check_commutator_fluctuation_relation, check_qsl_chain, verify, BoundReport, VerifyOptions,
    SEMI_ANALYTIC_TOL,
};
use crate::clockwork::{
    build_vs_from_unitary, clock_qsl_chain, final_energy, lattice_model, optimal_wavefunction,
    random_admissible, verify_clock, ClockMachineSpec, ClockState, InteractionProfile,
    LatticeClock, RaisedCosine,
};
use crate::clockwork::mean_work as clockwork_work;
use crate::error::{Error, Result};
use crate::machine::{check_condition1, evolve_total, mean_work};
use crate::operator::{expectation, DensityMatrix};
use crate::random::{
    random_density, random_hermitian, random_ket, random_unitary_near_identity,
};
use crate::report::CheckReport;

use super::{positive, ScenarioOutcome, ScenarioResult, ScenarioSpec, SeriesPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    pub seed: Option<u64>,
    pub models: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub clock_width_min: f64,
    pub clock_width_max: f64,
    pub profile_width_min: f64,
    pub profile_width_max: f64,
    /// Number of sine modes in each random clock wavefunction.
    pub modes: usize,
    pub steps: usize,
    /// Spacing of the lattice oracle; all widths are drawn as multiples of it.
    pub lattice_dx: f64,
    /// Clock grid points per lattice cell.
    pub grid_refinement: usize,
    pub lattice_margin: f64,
    pub lattice_subsample: usize,
    /// Random `(H, sigma)` pairs for the commutator-fluctuation relation.
    pub relation_pairs: usize,
    pub relation_dim_max: usize,
    /// Lattice spacings for the convergence study (each half the previous).
    pub convergence_dx: Vec<f64>,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            seed: None,
            models: 200,
            dim_min: 2,
            dim_max: 6,
            clock_width_min: 0.25,
            clock_width_max: 1.0,
            profile_width_min: 0.125,
            profile_width_max: 0.5,
            modes: 6,
            steps: 64,
            lattice_dx: 1.0 / 32.0,
            grid_refinement: 8,
            lattice_margin: 0.125,
            lattice_subsample: 20,
            relation_pairs: 1000,
            relation_dim_max: 16,
            convergence_dx: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        }
    }
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            return Err(Error::param("seed", "required for random scenarios"));
        }
        if self.models == 0 {
            return Err(Error::param("models", "must be at least 1"));
        }
        if self.dim_min < 2 || self.dim_max < self.dim_min {
            return Err(Error::param("dim_min", "need 2 <= dim_min <= dim_max"));
        }
        positive("lattice_dx", self.lattice_dx)?;
        positive("clock_width_min", self.clock_width_min)?;
        positive("profile_width_min", self.profile_width_min)?;
        positive("lattice_margin", self.lattice_margin)?;
        if self.clock_width_max < self.clock_width_min {
            return Err(Error::param("clock_width_max", "below clock_width_min"));
        }
        if self.profile_width_max < self.profile_width_min {
            return Err(Error::param("profile_width_max", "below profile_width_min"));
        }
        if self.clock_width_min < 2.0 * self.lattice_dx || self.profile_width_min < self.lattice_dx {
            return Err(Error::param("lattice_dx", "coarser than the smallest widths"));
        }
        if self.grid_refinement == 0 || self.modes == 0 || self.steps == 0 {
            return Err(Error::param("grid_refinement", "grid_refinement, modes and steps must be positive"));
        }
        if self.lattice_subsample > self.models {
            return Err(Error::param("lattice_subsample", "larger than the ensemble"));
        }
        if self.relation_pairs > 0 && self.relation_dim_max < 2 {
            return Err(Error::param("relation_dim_max", "must be at least 2"));
        }
        for dx in &self.convergence_dx {
            positive("convergence_dx", *dx)?;
        }
        Ok(())
    }
}

/// Independent random stream per draw, so parallel execution is reproducible.
fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn snapped<R: Rng>(rng: &mut R, lo: f64, hi: f64, quantum: f64) -> f64 {
    let lo_q = (lo / quantum).ceil() as u64;
    let hi_q = ((hi / quantum).floor() as u64).max(lo_q);
    rng.random_range(lo_q..=hi_q) as f64 * quantum
}

fn draw_machine(p: &EnsembleParams, hbar: f64, seed: u64, index: usize) -> Result<ClockMachineSpec> {
    let mut rng = stream(seed, index as u64);
    let d = rng.random_range(p.dim_min..=p.dim_max);
    let h_scale = rng.random_range(0.5..2.0);
    let h = random_hermitian(&mut rng, d, h_scale);
    let max_phase = rng.random_range(0.1..3.0);
    let target = random_unitary_near_identity(&mut rng, d, max_phase);
    let rank = rng.random_range(1..=d);
    let rho = random_density(&mut rng, d, rank);
    let clock_width = snapped(&mut rng, p.clock_width_min, p.clock_width_max, p.lattice_dx);
    let profile_width = snapped(&mut rng, p.profile_width_min, p.profile_width_max, p.lattice_dx);
    let mut cells = (clock_width / p.lattice_dx).round() as usize * p.grid_refinement;
    if cells % 2 == 1 {
        cells *= 2;
    }
    let points = cells + 1;
    let components = rng.random_range(1..=2usize);
    let mut clock = Vec::with_capacity(components);
    for _ in 0..components {
        let w = rng.random_range(0.2..1.0);
        clock.push((w, random_admissible(&mut rng, clock_width, points, p.modes)?));
    }
    let profile =
        build_vs_from_unitary(&target, RaisedCosine::new(profile_width)?, &h, hbar, 1.0)?;
    ClockMachineSpec::new(h, rho, profile, ClockState::mixture(clock)?, 1.0, hbar, p.steps)
}

struct LatticeCheck {
    condition1: CheckReport,
    chain_ok: bool,
    chain_worst: f64,
    bound: BoundReport,
    gap: f64,
}

fn lattice_oracle(spec: &ClockMachineSpec, p: &EnsembleParams, tol: f64) -> Result<LatticeCheck> {
    let lattice = LatticeClock::for_spec(spec, p.lattice_dx, p.lattice_margin)?;
    let model = lattice_model(spec, &lattice)?;
    let samples = lattice.condition1_samples(spec);
    let condition1 = check_condition1(&model, &samples, 1e-10);
    let chain = check_qsl_chain(&model, tol)?;
    let chain_worst = chain.links().iter().map(|c| c.residual).fold(f64::NEG_INFINITY, f64::max);
    let options = VerifyOptions {
        condition1_samples: samples,
        condition1_tol: 1e-10,
        bound_tol: tol,
    };
    let bound = verify(&model, &options)?;
    let gap = (mean_work(&model)? - clockwork_work(spec)?).abs();
    Ok(LatticeCheck {
        condition1,
        chain_ok: chain.all_hold(),
        chain_worst,
        bound,
        gap,
    })
}

/// Lattice and quadrature final system energies at one lattice spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub dx: f64,
    pub lattice_energy: f64,
    pub semi_analytic_energy: f64,
    pub gap: f64,
}

/// Fixed two-level machine with a non-commuting oscillating profile and a coherent
/// system state, solved both ways at each lattice spacing. The quadrature grid and
/// the transit product are tied to the same spacing.
pub fn lattice_convergence(seed: u64, dxs: &[f64], hbar: f64) -> Result<Vec<ConvergencePoint>> {
    let mut rng = stream(seed, u64::MAX);
    let h = random_hermitian(&mut rng, 2, 1.5);
    let a = random_hermitian(&mut rng, 2, 1.5);
    let b = random_hermitian(&mut rng, 2, 1.0);
    let ket = random_ket(&mut rng, 2);
    let rho = DensityMatrix::pure(&ket)?;
    let (clock_width, profile_width) = (0.5, 0.5);
    dxs.iter()
        .map(|&dx| {
            let cells = (clock_width / dx).round() as usize;
            let psi = optimal_wavefunction(clock_width, cells + 1)?;
            let profile =
                InteractionProfile::modulated(RaisedCosine::new(profile_width)?, a.clone(), b.clone(), 7.0)?;
            let steps = (profile_width / dx).round() as usize;
            let spec = ClockMachineSpec::new(
                h.clone(),
                rho.clone(),
                profile,
                ClockState::pure(psi),
                1.0,
                hbar,
                steps,
            )?;
            let lattice = LatticeClock::for_spec(&spec, dx, 0.25)?;
            let model = lattice_model(&spec, &lattice)?;
            let evo = evolve_total(&model, model.tau());
            let lattice_energy = expectation(spec.h_s(), &evo.rho_s_final)?;
            let semi_analytic_energy = final_energy(&spec)?;
            Ok(ConvergencePoint {
                dx,
                lattice_energy,
                semi_analytic_energy,
                gap: (lattice_energy - semi_analytic_energy).abs(),
            })
        })
        .collect()
}

fn worst<'a>(reports: impl Iterator<Item = &'a CheckReport>) -> f64 {
    reports.map(|c| c.residual).fold(f64::NEG_INFINITY, f64::max)
}

pub(super) fn run(spec: &ScenarioSpec, p: &EnsembleParams) -> Result<ScenarioResult> {
    let seed = p.seed.expect("validated");
    let hbar = spec.hbar;
    let tol = spec.tol("bound", SEMI_ANALYTIC_TOL);
    let lattice_tol = spec.tol("lattice", p.lattice_dx * p.lattice_dx);

    let draws: Vec<Result<(BoundReport, Vec<CheckReport>, Option<LatticeCheck>)>> = (0..p.models)
        .into_par_iter()
        .map(|i| {
            let machine = draw_machine(p, hbar, seed, i)?;
            let report = verify_clock(&machine, tol)?;
            let chain = clock_qsl_chain(&machine, tol)?;
            let links = chain.links().into_iter().cloned().collect();
            let lattice = if i < p.lattice_subsample {
                Some(lattice_oracle(&machine, p, lattice_tol)?)
            } else {
                None
            };
            Ok((report, links, lattice))
        })
        .collect();

    let mut series = Vec::with_capacity(p.models);
    let mut links = Vec::new();
    let mut lattice = Vec::new();
    for (i, d) in draws.into_iter().enumerate() {
        let (report, l, lat) = d?;
        series.push(SeriesPoint {
            param: i as f64,
            report,
        });
        links.extend(l);
        lattice.extend(lat);
    }

    let commutator_margin = series
        .iter()
        .map(|s| s.report.power.abs() - s.report.rhs_commutator)
        .fold(f64::NEG_INFINITY, f64::max);
    let ordering_margin = series
        .iter()
        .map(|s| s.report.rhs_commutator - s.report.rhs_fluctuation)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut checks = vec![
        CheckReport::within("commutator_bound_all", commutator_margin, tol),
        CheckReport::within("bound_ordering_all", ordering_margin, tol),
        CheckReport::within("qsl_chain_all", worst(links.iter()), tol),
    ];

    if !lattice.is_empty() {
        let c1_worst = worst(lattice.iter().map(|l| &l.condition1));
        checks.push(CheckReport::within("lattice_condition1", c1_worst, 1e-10));
        let chain_worst = lattice.iter().map(|l| l.chain_worst).fold(f64::NEG_INFINITY, f64::max);
        let mut chain = CheckReport::within("lattice_qsl_chain", chain_worst, lattice_tol);
        chain.passed &= lattice.iter().all(|l| l.chain_ok);
        checks.push(chain);
        let unbounded = lattice.iter().filter(|l| !(l.bound.bound_holds && l.bound.condition1_ok)).count();
        checks.push(CheckReport::within("lattice_bounds", unbounded as f64, 0.0));
        let gap = lattice.iter().map(|l| l.gap).fold(0.0_f64, f64::max);
        checks.push(CheckReport::within(
            "lattice_work_gap",
            gap,
            spec.tol("lattice_work_gap", 10.0 * p.lattice_dx * p.lattice_dx),
        ));
    }

    if p.relation_pairs > 0 {
        let relation: Vec<Result<CheckReport>> = (0..p.relation_pairs)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed ^ 0x005e_ed0f_ba5e, i as u64);
                let n = rng.random_range(2..=p.relation_dim_max);
                let scale = rng.random_range(0.1..10.0);
                let h = random_hermitian(&mut rng, n, scale);
                let rank = rng.random_range(1..=n);
                let sigma = random_density(&mut rng, n, rank);
                check_commutator_fluctuation_relation(&h, &sigma)
            })
            .collect();
        let relation = relation.into_iter().collect::<Result<Vec<_>>>()?;
        let mut c = CheckReport::within(
            "commutator_fluctuation_relation",
            worst(relation.iter()),
            spec.tol("commutator_fluctuation_relation", 1e-10),
        );
        c.passed &= relation.iter().all(|r| r.passed);
        checks.push(c);
    }

    if p.convergence_dx.len() >= 2 {
        let points = lattice_convergence(seed, &p.convergence_dx, hbar)?;
        let ratios: Vec<f64> = points.windows(2).map(|w| w[0].gap / w[1].gap).collect();
        let off = ratios
            .iter()
            .map(|r| (3.0 - r).max(r - 5.0))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(
            CheckReport::within("lattice_convergence_order", off, 0.0)
                .with_detail(format!("gap ratios {ratios:?}")),
        );
    }

    let headline = series
        .iter()
        .max_by(|a, b| {
            let key = |s: &SeriesPoint| s.report.saturation_commutator.unwrap_or(f64::INFINITY);
            key(a).total_cmp(&key(b))
        })
        .map(|s| s.report.clone())
        .expect("at least one model");
    Ok(ScenarioResult {
        outcome: ScenarioOutcome::assemble(spec, headline, checks, Some("model"), series),
        distributions: Vec::new(),
    })
}
