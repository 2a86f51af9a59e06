//! Finite ring discretisation of the clock, turning a clock machine into a
//! [`BipartiteModel`] that can be propagated exactly.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::distribution::EnergyDistribution;
use crate::error::{Error, Result};
use crate::machine::{evolve_total, BipartiteModel, EvolutionResult};
use crate::operator::{DensityMatrix, Matrix, Operator, C64};

use super::profile::dressed_unitary;
use super::semi_analytic::ClockMachineSpec;
use super::wavefunction::ClockWavefunction;

/// Relative slack when deciding that a length is a whole number of lattice cells.
const COMMENSURATE_TOL: f64 = 1e-9;

/// `sites` points `x_j = origin + j dx` on a ring (odd `sites`).
///
/// The clock Hamiltonian is `nu P` with `P` diagonal in the discrete Fourier basis,
/// so free evolution over `n dx / nu` is an exact shift by `n` sites.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeClock {
    sites: usize,
    dx: f64,
    origin: f64,
}

fn whole_cells(length: f64, dx: f64, what: &str) -> Result<usize> {
    let n = (length / dx).round();
    if (length / dx - n).abs() > COMMENSURATE_TOL * n.max(1.0) {
        return Err(Error::param(
            what,
            format!("{length} is not a whole number of lattice cells of {dx}"),
        ));
    }
    Ok(n as usize)
}

impl LatticeClock {
    pub fn new(sites: usize, dx: f64, origin: f64) -> Result<Self> {
        if sites < 3 || sites % 2 == 0 {
            return Err(Error::param("sites", format!("need an odd count >= 3, got {sites}")));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::param("dx", "must be positive"));
        }
        Ok(LatticeClock { sites, dx, origin })
    }

    /// Ring covering the clock, the profile and `margin` on either side.
    ///
    /// Clock width, profile width and margin must be whole numbers of cells.
    pub fn for_spec(spec: &ClockMachineSpec, dx: f64, margin: f64) -> Result<Self> {
        let c = whole_cells(spec.clock().width(), dx, "clock_width")?;
        let p = whole_cells(spec.profile().width(), dx, "profile_width")?;
        let m = whole_cells(margin, dx, "margin")?;
        // packet ends on [profile, profile + clock]; it must not reach the left margin again
        let mut sites = m + c + p + c + m + 1;
        if sites % 2 == 0 {
            sites += 1;
        }
        let lattice = LatticeClock::new(sites, dx, -((c + m) as f64) * dx)?;
        lattice.check_transit_fits(spec)?;
        Ok(lattice)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn length(&self) -> f64 {
        self.sites as f64 * self.dx
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dx
    }

    /// Nearest site to `x`, if `x` is on the lattice.
    fn site_of(&self, x: f64) -> Option<usize> {
        let r = (x - self.origin) / self.dx;
        let j = r.round();
        ((r - j).abs() < 1e-6 && j >= 0.0 && (j as usize) < self.sites).then_some(j as usize)
    }

    /// Wave numbers `2 pi m / (M dx)` for `m = -(M-1)/2 ..= (M-1)/2`.
    pub fn wave_numbers(&self) -> Vec<f64> {
        let half = (self.sites as i64 - 1) / 2;
        (-half..=half)
            .map(|m| 2.0 * PI * m as f64 / self.length())
            .collect()
    }

    /// Columns are the plane waves `e^{i k_m x_j} / sqrt(M)`.
    fn fourier(&self) -> Matrix {
        let k = self.wave_numbers();
        let norm = 1.0 / (self.sites as f64).sqrt();
        Matrix::from_fn(self.sites, self.sites, |j, m| {
            C64::new(0.0, k[m] * self.position(j)).exp() * norm
        })
    }

    /// Plane wave `e^{i k_m x_j} / sqrt(M)` for the `m`-th entry of [`Self::wave_numbers`].
    pub fn plane_wave(&self, m: usize) -> DVector<C64> {
        let k = self.wave_numbers()[m];
        let norm = 1.0 / (self.sites as f64).sqrt();
        DVector::from_fn(self.sites, |j, _| C64::new(0.0, k * self.position(j)).exp() * norm)
    }

    /// Spectral momentum `P = F diag(hbar k) F^dagger`.
    pub fn momentum(&self, hbar: f64) -> Operator {
        let f = self.fourier();
        let mut scaled = f.clone();
        for (m, k) in self.wave_numbers().into_iter().enumerate() {
            for z in scaled.column_mut(m).iter_mut() {
                *z *= hbar * k;
            }
        }
        Operator::from_parts(scaled * f.adjoint(), vec![self.sites]).hermitian_part()
    }

    /// Lattice vector for a clock wavefunction; its grid must refine the lattice.
    pub fn embed(&self, psi: &ClockWavefunction) -> Result<DVector<C64>> {
        let ratio = whole_cells(self.dx, psi.dx(), "lattice dx")?;
        let start = self
            .site_of(-psi.width())
            .ok_or_else(|| Error::WrapAround("clock support is not on the lattice".into()))?;
        let cells = (psi.len() - 1) / ratio;
        if start + cells >= self.sites {
            return Err(Error::WrapAround("clock support overruns the lattice".into()));
        }
        let mut v = DVector::zeros(self.sites);
        for c in 0..=cells {
            v[start + c] = psi.amplitudes()[c * ratio] * self.dx.sqrt();
        }
        let norm = v.norm();
        Ok(v / C64::new(norm, 0.0))
    }

    /// Clock state on the lattice.
    pub fn clock_state(&self, spec: &ClockMachineSpec) -> Result<DensityMatrix> {
        let mut m = Matrix::zeros(self.sites, self.sites);
        for (p, psi) in spec.clock().components() {
            let v = self.embed(psi)?;
            m += (&v * v.adjoint()).scale(*p);
        }
        DensityMatrix::new(Operator::from_parts(m, vec![self.sites]))
    }

    /// `sum_j V_S(x_j) (x) |j><j|`.
    pub fn interaction(&self, spec: &ClockMachineSpec) -> Operator {
        let d = spec.h_s().dim();
        let m = self.sites;
        let mut v = Matrix::zeros(d * m, d * m);
        for j in 0..m {
            let vs = spec.profile().sample(self.position(j));
            for a in 0..d {
                for b in 0..d {
                    v[(a * m + j, b * m + j)] = vs.matrix()[(a, b)];
                }
            }
        }
        Operator::from_parts(v, vec![d, m])
    }

    /// The transit must end before the packet wraps around the ring.
    pub fn check_transit_fits(&self, spec: &ClockMachineSpec) -> Result<()> {
        let leading_edge_end = spec.profile().width() + spec.clock().width();
        if self.site_of(-spec.clock().width()).is_none() {
            return Err(Error::WrapAround("clock start is off the lattice".into()));
        }
        if leading_edge_end >= self.position(self.sites - 1) {
            return Err(Error::WrapAround(format!(
                "packet reaches {leading_edge_end} but the ring ends at {}",
                self.position(self.sites - 1)
            )));
        }
        let spare = self.length() - (spec.clock().width() + spec.profile().width());
        if spare <= 0.0 {
            return Err(Error::WrapAround("ring shorter than clock plus profile".into()));
        }
        Ok(())
    }

    /// Commensurate times `-n dx / nu <= 0` for which the packet stays on the ring left of the start.
    pub fn condition1_samples(&self, spec: &ClockMachineSpec) -> Vec<f64> {
        let left = -spec.clock().width() - self.origin;
        let n = (left / self.dx + 1e-9).floor() as usize;
        (0..=n).map(|k| -(k as f64) * self.dx / spec.nu()).collect()
    }

    /// Energies `nu hbar k_m` and probabilities `<k_m|sigma|k_m>`.
    pub fn momentum_distribution(&self, sigma: &DensityMatrix, hbar: f64, nu: f64) -> Result<EnergyDistribution> {
        if sigma.dim() != self.sites {
            return Err(Error::DimensionMismatch("agent state vs lattice".into()));
        }
        let f = self.fourier();
        let rho_k = f.adjoint() * sigma.matrix() * &f;
        let energies = self.wave_numbers().into_iter().map(|k| nu * hbar * k).collect();
        let probabilities = (0..self.sites).map(|m| rho_k[(m, m)].re.max(0.0)).collect();
        EnergyDistribution::new(energies, probabilities)
    }

    /// Clock energy distribution after the transit, from the dressed-unitary quadrature
    /// sampled at the lattice sites (no lattice dynamics involved).
    pub fn semi_analytic_final_distribution(&self, spec: &ClockMachineSpec) -> Result<EnergyDistribution> {
        let d = spec.h_s().dim();
        let u = spec.transit_unitary()?;
        let rho = crate::operator::HermitianSpectrum::of(spec.rho_s().operator())?;
        let f = self.fourier();
        let mut probs = vec![0.0; self.sites];
        for (p, psi) in spec.clock().components() {
            let amps = self.embed(psi)?;
            // dressed unitaries at the occupied sites
            let occupied: Vec<(usize, Matrix)> = (0..self.sites)
                .filter(|&j| amps[j].norm() > 0.0)
                .map(|j| {
                    let ux = dressed_unitary(u, self.position(j), spec.system_spectrum(), spec.hbar(), spec.nu());
                    (j, ux.matrix().clone())
                })
                .collect();
            for (r, &lambda) in rho.values().iter().enumerate() {
                if lambda <= 0.0 {
                    continue;
                }
                let ket = rho.vectors().column(r);
                for a in 0..d {
                    let mut g = DVector::<C64>::zeros(self.sites);
                    for (j, ux) in &occupied {
                        g[*j] = amps[*j] * (ux.row(a) * ket)[(0, 0)];
                    }
                    let gk = f.adjoint() * g;
                    for m in 0..self.sites {
                        probs[m] += p * lambda * gk[m].norm_sqr();
                    }
                }
            }
        }
        let energies = self.wave_numbers().into_iter().map(|k| spec.nu() * spec.hbar() * k).collect();
        EnergyDistribution::new(energies, probs)
    }
}

/// Exact finite-dimensional model of the clock machine on `lattice`.
pub fn lattice_model(spec: &ClockMachineSpec, lattice: &LatticeClock) -> Result<BipartiteModel> {
    lattice.check_transit_fits(spec)?;
    let h_a = lattice.momentum(spec.hbar()).scale_real(spec.nu());
    BipartiteModel::new(
        spec.h_s().clone(),
        h_a,
        lattice.interaction(spec),
        spec.rho_s().clone(),
        lattice.clock_state(spec)?,
        spec.tau(),
        spec.hbar(),
    )
}

/// Propagate the lattice model through one transit.
pub fn lattice_simulate(spec: &ClockMachineSpec, lattice: &LatticeClock) -> Result<(BipartiteModel, EvolutionResult)> {
    let model = lattice_model(spec, lattice)?;
    let evo = evolve_total(&model, model.tau());
    Ok((model, evo))
}
