//! An interaction that commutes with the free Hamiltonian can do nothing to a
//! machine satisfying the switch-on condition.

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{verify, VerifyOptions};
use crate::clockwork::LatticeClock;
use crate::error::{Error, Result};
use crate::machine::{check_conservation_triviality, mean_work, BipartiteModel};
use crate::operator::{tensor, DensityMatrix, Matrix, Operator, C64};
use crate::random::{random_density, random_hermitian};
use crate::report::CheckReport;

use super::{positive, ScenarioOutcome, ScenarioResult, ScenarioSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrivialityParams {
    pub seed: Option<u64>,
    pub system_dim: usize,
    /// Ring size (odd).
    pub sites: usize,
    pub dx: f64,
    pub speed: f64,
    /// Width of the clock packet in lattice cells.
    pub clock_cells: usize,
    /// Interaction time in lattice cells of travel.
    pub tau_cells: usize,
    pub coupling: f64,
    /// Strength of the position-local term that breaks the commutation in the control.
    pub perturbation: f64,
}

impl Default for TrivialityParams {
    fn default() -> Self {
        TrivialityParams {
            seed: None,
            system_dim: 3,
            sites: 41,
            dx: 0.125,
            speed: 1.0,
            clock_cells: 10,
            tau_cells: 12,
            coupling: 1.0,
            perturbation: 1.0,
        }
    }
}

impl TrivialityParams {
    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            return Err(Error::param("seed", "required for random scenarios"));
        }
        if self.system_dim < 2 {
            return Err(Error::param("system_dim", "must be at least 2"));
        }
        positive("dx", self.dx)?;
        positive("speed", self.speed)?;
        positive("coupling", self.coupling)?;
        if self.sites % 2 == 0 || self.sites < 2 * self.system_dim + 3 {
            return Err(Error::param("sites", "must be odd and exceed twice the system dimension"));
        }
        if self.clock_cells < self.system_dim + 2 {
            return Err(Error::param("clock_cells", "too few cells to confine the packet"));
        }
        if self.tau_cells == 0 || self.clock_cells + self.tau_cells + 2 >= self.sites {
            return Err(Error::param("tau_cells", "packet must travel without wrapping"));
        }
        Ok(())
    }
}

/// Solve `A c = b` for small dense complex systems.
fn solve(a: Matrix, b: DVector<C64>) -> Result<DVector<C64>> {
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular overlap system".into()))
}

/// Commuting model, its position-local perturbation, and the zero-interaction member.
///
/// System levels are tuned so each `|s>|k_s>` lies at joint energy zero; the interaction
/// projects onto those pairs, so it commutes with `H_S + H_A`. The clock packet is
/// confined and orthogonal to every `|k_s>`, which makes the switch-on condition exact.
pub fn triviality_models(
    p: &TrivialityParams,
    hbar: f64,
) -> Result<(BipartiteModel, BipartiteModel, BipartiteModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed.expect("validated"));
    let d = p.system_dim;
    let lattice = LatticeClock::new(p.sites, p.dx, 0.0)?;
    let k = lattice.wave_numbers();
    let zero_mode = (p.sites - 1) / 2;
    let modes: Vec<usize> = sample(&mut rng, p.sites - 1, d)
        .into_iter()
        .map(|i| if i >= zero_mode { i + 1 } else { i })
        .collect();
    let energies: Vec<f64> = modes.iter().map(|&m| -p.speed * hbar * k[m]).collect();
    let h_s = Operator::from_real_diagonal(&energies);
    let waves: Vec<DVector<C64>> = modes.iter().map(|&m| lattice.plane_wave(m)).collect();

    // packet on sites start..=start + clock_cells, built from d + 1 sine modes
    let start = 1usize;
    let c = p.clock_cells;
    let basis: Vec<DVector<C64>> = (1..=d + 1)
        .map(|n| {
            DVector::from_fn(p.sites, |j, _| {
                if j < start || j > start + c {
                    C64::new(0.0, 0.0)
                } else {
                    let u = (j - start) as f64 / c as f64;
                    C64::new((n as f64 * std::f64::consts::PI * u).sin(), 0.0)
                }
            })
        })
        .collect();
    let overlap = Matrix::from_fn(d, d + 1, |s, n| waves[s].dotc(&basis[n]));
    let coeffs = solve(
        overlap.columns(0, d).into_owned(),
        -overlap.column(d).into_owned(),
    )?;
    let mut psi = basis[d].clone();
    for n in 0..d {
        psi += &basis[n] * coeffs[n];
    }
    let norm = psi.norm();
    psi /= C64::new(norm, 0.0);
    let sigma = DensityMatrix::pure(&psi)?;

    let mut v = Operator::zeros(d * p.sites).with_dims(vec![d, p.sites])?;
    for (s, w) in waves.iter().enumerate() {
        let proj = Operator::matrix_unit(d, s, s);
        let wave = Operator::outer(w, w);
        v = &v + &tensor(&proj, &wave).scale_real(p.coupling);
    }
    let h_a = lattice.momentum(hbar).scale_real(p.speed);
    let rho = random_density(&mut rng, d, d);
    let tau = p.tau_cells as f64 * p.dx / p.speed;
    let commuting = BipartiteModel::new(h_s.clone(), h_a.clone(), v.clone(), rho.clone(), sigma.clone(), tau, hbar)?;

    // local kick on the first site right of the packet, which it crosses during the transit
    let site = start + c + 1;
    let mut local = Matrix::zeros(p.sites, p.sites);
    local[(site, site)] = C64::new(1.0, 0.0);
    let kick_scale = rng.random_range(0.5..1.0) * p.perturbation;
    let kick = random_hermitian(&mut rng, d, kick_scale);
    let bump = tensor(&kick, &Operator::from_matrix(local)?);
    let perturbed =
        BipartiteModel::new(h_s.clone(), h_a.clone(), &v + &bump, rho.clone(), sigma.clone(), tau, hbar)?;
    let free = BipartiteModel::new(h_s, h_a, Operator::zeros(d * p.sites), rho, sigma, tau, hbar)?;
    Ok((commuting, perturbed, free))
}

pub(super) fn run(spec: &ScenarioSpec, p: &TrivialityParams) -> Result<ScenarioResult> {
    let (commuting, perturbed, free) = triviality_models(p, spec.hbar)?;
    let tol = spec.tol("triviality", 1e-10);
    let options = VerifyOptions::for_model(&commuting);
    let t_samples: Vec<f64> = (1..=4).map(|i| commuting.tau() * i as f64 / 4.0).collect();
    let report = verify(&commuting, &options)?;
    let checks = vec![
        check_conservation_triviality(&commuting, &options.condition1_samples, &t_samples, tol),
        CheckReport::within("work_zero", mean_work(&commuting)?.abs(), spec.tol("work_zero", 1e-10)),
        check_conservation_triviality(
            &commuting,
            &options.condition1_samples,
            &[commuting.tau()],
            spec.tol("factorization", 1e-10),
        )
        .named("factorization"),
        CheckReport::exceeds(
            "perturbed_work",
            mean_work(&perturbed)?.abs(),
            spec.tol("perturbed_work", 1e-4),
        ),
        check_conservation_triviality(
            &free,
            &options.condition1_samples,
            &[free.tau()],
            spec.tol("zero_interaction", 1e-10),
        )
        .named("zero_interaction"),
    ];
    Ok(ScenarioResult {
        outcome: ScenarioOutcome::assemble(spec, report, checks, None, Vec::new()),
        distributions: Vec::new(),
    })
}
