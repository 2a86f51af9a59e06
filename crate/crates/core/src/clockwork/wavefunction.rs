//! Clock wavefunctions confined to `[-width, 0]` on a uniform grid.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operator::{trace_norm, Matrix, Operator, C64};

/// Minimum grid size accepted by the variational solver.
pub const MIN_VARIATIONAL_POINTS: usize = 16;

/// Amplitudes `psi(x_j)` at `x_j = -width + j dx`, `j = 0..n`, with `x_{n-1} = 0`.
///
/// Normalised so that `sum |psi_j|^2 dx = 1`; both endpoints vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockWavefunction {
    width: f64,
    dx: f64,
    amplitudes: Vec<C64>,
}

impl ClockWavefunction {
    /// Validate and normalise raw samples. The point count must be odd (Simpson quadrature).
    pub fn new(width: f64, amplitudes: Vec<C64>) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::param("width", format!("must be positive, got {width}")));
        }
        let n = amplitudes.len();
        if n < 3 || n % 2 == 0 {
            return Err(Error::param(
                "points",
                format!("need an odd count of at least 3, got {n}"),
            ));
        }
        let dx = width / (n - 1) as f64;
        let peak = amplitudes.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if peak == 0.0 {
            return Err(Error::param("amplitudes", "identically zero"));
        }
        let edge = amplitudes[0].norm().max(amplitudes[n - 1].norm());
        if edge > 1e-12 * peak {
            return Err(Error::param(
                "amplitudes",
                format!("must vanish at the support boundary (edge/peak = {:e})", edge / peak),
            ));
        }
        let mut amplitudes = amplitudes;
        amplitudes[0] = C64::new(0.0, 0.0);
        amplitudes[n - 1] = C64::new(0.0, 0.0);
        let norm = (amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
        for z in amplitudes.iter_mut() {
            *z /= norm;
        }
        Ok(ClockWavefunction {
            width,
            dx,
            amplitudes,
        })
    }

    /// Sample `f(x)` on `[-width, 0]`.
    pub fn from_fn(width: f64, points: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        if points < 3 {
            return Err(Error::param("points", format!("need at least 3, got {points}")));
        }
        let dx = width / (points - 1) as f64;
        let amps = (0..points).map(|j| f(-width + j as f64 * dx)).collect();
        ClockWavefunction::new(width, amps)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn position(&self, j: usize) -> f64 {
        -self.width + j as f64 * self.dx
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.position(j))
    }

    /// Multiply by `e^{i k x}`.
    pub fn boosted(&self, k: f64) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, z)| z * C64::new(0.0, k * self.position(j)).exp())
            .collect();
        ClockWavefunction {
            width: self.width,
            dx: self.dx,
            amplitudes,
        }
    }

    /// `|<self|other>|` for wavefunctions on the same grid.
    pub fn overlap(&self, other: &ClockWavefunction) -> Result<f64> {
        if self.len() != other.len() || (self.width - other.width).abs() > 1e-12 {
            return Err(Error::DimensionMismatch("wavefunction grids differ".into()));
        }
        let w = trapezoid_weights(self.len(), self.dx);
        Ok(inner(&w, &self.amplitudes, &other.amplitudes).norm())
    }

    /// Fourth-order finite-difference derivative (second order below five points).
    pub fn derivative(&self) -> Vec<C64> {
        derivative(&self.amplitudes, self.dx)
    }

    /// Composite Simpson weights for `|psi|^2`, renormalised so they integrate this state to one.
    pub fn simpson_density(&self) -> Vec<f64> {
        let w = simpson_weights(self.len(), self.dx);
        let dens: Vec<f64> = self
            .amplitudes
            .iter()
            .zip(&w)
            .map(|(z, wj)| wj * z.norm_sqr())
            .collect();
        let total: f64 = dens.iter().sum();
        dens.into_iter().map(|d| d / total).collect()
    }
}

fn derivative(f: &[C64], dx: f64) -> Vec<C64> {
    let n = f.len();
    let mut d = vec![C64::new(0.0, 0.0); n];
    if n < 3 {
        return d;
    }
    if n < 5 {
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
        for j in 1..n - 1 {
            d[j] = (f[j + 1] - f[j - 1]) / (2.0 * dx);
        }
        return d;
    }
    let h = 12.0 * dx;
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / h;
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / h;
    for j in 2..n - 2 {
        d[j] = (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / h;
    }
    d
}

pub(crate) fn trapezoid_weights(n: usize, dx: f64) -> Vec<f64> {
    let mut w = vec![dx; n];
    w[0] = 0.5 * dx;
    w[n - 1] = 0.5 * dx;
    w
}

/// Composite Simpson weights for an odd number of points.
pub(crate) fn simpson_weights(n: usize, dx: f64) -> Vec<f64> {
    debug_assert!(n % 2 == 1 && n >= 3);
    (0..n)
        .map(|j| {
            let c = if j == 0 || j == n - 1 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * dx / 3.0
        })
        .collect()
}

fn inner(w: &[f64], a: &[C64], b: &[C64]) -> C64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), wj)| x.conj() * y * *wj)
        .sum()
}

/// First two moments of the clock Hamiltonian `nu P` in a pure state: `(<H>, <H^2>)`.
fn momentum_moments(psi: &ClockWavefunction, hbar: f64, nu: f64) -> (f64, f64) {
    let d = psi.derivative();
    let w = trapezoid_weights(psi.len(), psi.dx);
    // P psi = -i hbar psi'
    let mean = (inner(&w, &psi.amplitudes, &d) * C64::new(0.0, -hbar * nu)).re;
    let second = inner(&w, &d, &d).re * (hbar * nu).powi(2);
    (mean, second)
}

/// `nu^2 hbar^2 (int |psi'|^2 + (int psi* psi')^2)`, the variance of `nu P`.
pub fn clock_energy_variance(psi: &ClockWavefunction, hbar: f64, nu: f64) -> f64 {
    let d = psi.derivative();
    let w = trapezoid_weights(psi.len(), psi.dx);
    let kinetic = inner(&w, &d, &d).re;
    let drift = inner(&w, &psi.amplitudes, &d);
    let var = (nu * hbar).powi(2) * (kinetic + (drift * drift).re);
    var.max(0.0)
}

/// `sqrt(2/L) sin(-pi x / L)` on `[-L, 0]`.
pub fn optimal_wavefunction(width: f64, points: usize) -> Result<ClockWavefunction> {
    let norm = (2.0 / width).sqrt();
    ClockWavefunction::from_fn(width, points, |x| {
        C64::new(norm * (-PI * x / width).sin(), 0.0)
    })
}

/// Lowest eigenpair of the Dirichlet second-difference operator on `[-width, 0]`.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub wavefunction: ClockWavefunction,
    /// Minimum of `int r'^2 dx` subject to `int r^2 dx = 1` on the grid.
    pub eigenvalue: f64,
}

/// Minimise `int r'(x)^2 dx` over real `r` with `r(-width) = r(0) = 0` and unit norm.
///
/// The discrete functional is the quadratic form of `-D^2` (second differences with
/// pinned ends); its ground state is found by inverse iteration with a tridiagonal solve.
pub fn variational_minimize(width: f64, points: usize) -> Result<GroundState> {
    if points < MIN_VARIATIONAL_POINTS {
        return Err(Error::GridTooCoarse {
            points,
            min: MIN_VARIATIONAL_POINTS,
        });
    }
    if points % 2 == 0 {
        return Err(Error::param("points", "odd point count required"));
    }
    if !(width > 0.0) {
        return Err(Error::param("width", "must be positive"));
    }
    let dx = width / (points - 1) as f64;
    let m = points - 2;
    let diag = 2.0 / (dx * dx);
    let off = -1.0 / (dx * dx);

    let mut x = vec![1.0; m];
    normalize(&mut x);
    let mut eigenvalue = 0.0;
    for _ in 0..500 {
        let mut y = solve_symmetric_tridiagonal(diag, off, &x);
        normalize(&mut y);
        // Rayleigh quotient of the updated vector
        let mut ty = 0.0;
        for i in 0..m {
            let mut v = diag * y[i];
            if i > 0 {
                v += off * y[i - 1];
            }
            if i + 1 < m {
                v += off * y[i + 1];
            }
            ty += y[i] * v;
        }
        let change = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        x = y;
        eigenvalue = ty;
        if change < 1e-15 {
            break;
        }
    }
    let mut amps = Vec::with_capacity(points);
    amps.push(C64::new(0.0, 0.0));
    amps.extend(x.iter().map(|&v| C64::new(v.abs(), 0.0)));
    amps.push(C64::new(0.0, 0.0));
    Ok(GroundState {
        wavefunction: ClockWavefunction::new(width, amps)?,
        eigenvalue,
    })
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

/// Thomas algorithm for a constant-coefficient symmetric tridiagonal system.
fn solve_symmetric_tridiagonal(diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let denom = diag - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Random admissible wavefunction: a sine series on `[-width, 0]` with complex
/// Gaussian coefficients decaying as `1/n^2`.
pub fn random_admissible<R: Rng + ?Sized>(
    rng: &mut R,
    width: f64,
    points: usize,
    modes: usize,
) -> Result<ClockWavefunction> {
    let coeffs: Vec<C64> = (1..=modes.max(1))
        .map(|n| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) / (n * n) as f64
        })
        .collect();
    ClockWavefunction::from_fn(width, points, |x| {
        let u = -x / width;
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * PI * u).sin())
            .sum()
    })
}

/// Gaussian centred in the support, shifted down so it vanishes at both ends.
pub fn truncated_gaussian(width: f64, points: usize, spread: f64) -> Result<ClockWavefunction> {
    let centre = -0.5 * width;
    let g = |x: f64| (-(x - centre).powi(2) / (2.0 * spread * spread)).exp();
    let edge = g(0.0);
    ClockWavefunction::from_fn(width, points, |x| C64::new((g(x) - edge).max(0.0), 0.0))
}

/// Flat plateau with smooth shoulders: `1 - (1 - sin(pi u))^4`, `u = -x / width`.
pub fn flat_top(width: f64, points: usize) -> Result<ClockWavefunction> {
    ClockWavefunction::from_fn(width, points, |x| {
        let s = (PI * (-x / width)).sin().max(0.0);
        C64::new(1.0 - (1.0 - s).powi(4), 0.0)
    })
}

/// Agent state: a finite ensemble `sum_i p_i |psi_i><psi_i|` of confined wavefunctions.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockState {
    components: Vec<(f64, ClockWavefunction)>,
}

impl ClockState {
    pub fn pure(psi: ClockWavefunction) -> Self {
        ClockState {
            components: vec![(1.0, psi)],
        }
    }

    /// Weights must be positive; they are normalised to sum to one. All components share one grid.
    pub fn mixture(components: Vec<(f64, ClockWavefunction)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("components", "empty ensemble"));
        }
        if components.iter().any(|(p, _)| !(*p > 0.0)) {
            return Err(Error::param("weights", "must be positive"));
        }
        let (w0, n0) = (components[0].1.width, components[0].1.len());
        if components
            .iter()
            .any(|(_, c)| c.len() != n0 || (c.width - w0).abs() > 1e-12)
        {
            return Err(Error::param("components", "must share one grid"));
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        Ok(ClockState {
            components: components.into_iter().map(|(p, c)| (p / total, c)).collect(),
        })
    }

    pub fn components(&self) -> &[(f64, ClockWavefunction)] {
        &self.components
    }

    /// Support width of the ensemble.
    pub fn width(&self) -> f64 {
        self.components[0].1.width
    }

    pub fn grid_points(&self) -> usize {
        self.components[0].1.len()
    }

    pub fn dx(&self) -> f64 {
        self.components[0].1.dx
    }

    /// `Delta H_A` for `H_A = nu P`.
    pub fn fluctuation(&self, hbar: f64, nu: f64) -> f64 {
        let mut mean = 0.0;
        let mut second = 0.0;
        for (p, psi) in &self.components {
            let (m, s) = momentum_moments(psi, hbar, nu);
            mean += p * m;
            second += p * s;
        }
        (second - mean * mean).max(0.0).sqrt()
    }

    /// `||[nu P, sigma]||_1`, evaluated exactly on the span of `{psi_i, P psi_i}`.
    pub fn commutator_trace_norm(&self, hbar: f64, nu: f64) -> f64 {
        let n = self.grid_points();
        let w = trapezoid_weights(n, self.dx());
        let scale = C64::new(0.0, -hbar * nu);
        let psis: Vec<&[C64]> = self.components.iter().map(|(_, c)| c.amplitudes()).collect();
        let phis: Vec<Vec<C64>> = self
            .components
            .iter()
            .map(|(_, c)| c.derivative().into_iter().map(|z| z * scale).collect())
            .collect();

        // Weighted Gram-Schmidt over the spanning vectors.
        let mut basis: Vec<Vec<C64>> = Vec::new();
        let candidates = psis.iter().map(|v| v.to_vec()).chain(phis.iter().cloned());
        for mut v in candidates {
            let original = inner(&w, &v, &v).re.sqrt();
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(&w, q, &v);
                    for (vj, qj) in v.iter_mut().zip(q) {
                        *vj -= c * qj;
                    }
                }
            }
            let norm = inner(&w, &v, &v).re.sqrt();
            if norm > 1e-10 * original.max(1e-300) {
                for vj in v.iter_mut() {
                    *vj /= norm;
                }
                basis.push(v);
            }
        }
        let r = basis.len();
        let mut m = Matrix::zeros(r, r);
        for (i, (p, _)) in self.components.iter().enumerate() {
            let qa_phi: Vec<C64> = basis.iter().map(|q| inner(&w, q, &phis[i])).collect();
            let qa_psi: Vec<C64> = basis.iter().map(|q| inner(&w, q, psis[i])).collect();
            for a in 0..r {
                for b in 0..r {
                    m[(a, b)] += (qa_phi[a] * qa_psi[b].conj() - qa_psi[a] * qa_phi[b].conj()) * *p;
                }
            }
        }
        let op = Operator::from_parts(m, vec![r]);
        trace_norm(&op)
    }

    /// Mean of `nu P`.
    pub fn mean_energy(&self, hbar: f64, nu: f64) -> f64 {
        self.components
            .iter()
            .map(|(p, psi)| p * momentum_moments(psi, hbar, nu).0)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optimal_state_peak_and_variance() {
        let psi = optimal_wavefunction(1.0, 2001).unwrap();
        let mid = psi.len() / 2;
        assert!((psi.position(mid) + 0.5).abs() < 1e-15);
        assert!((psi.amplitudes()[mid].re - 2f64.sqrt()).abs() < 1e-6);
        let var = clock_energy_variance(&psi, 1.0, 1.0);
        assert!((var - PI * PI).abs() < 1e-4, "variance {var}");
        // real wavefunction: no mean momentum
        assert!(ClockState::pure(psi).mean_energy(1.0, 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_converges_at_fourth_order() {
        let err = |n| (clock_energy_variance(&optimal_wavefunction(1.0, n).unwrap(), 1.0, 1.0) - PI * PI).abs();
        let ratio = err(51) / err(101);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio} err {}", err(101));
    }

    #[test]
    fn boost_shifts_mean_not_variance() {
        let psi = optimal_wavefunction(0.7, 801).unwrap();
        let base = clock_energy_variance(&psi, 1.0, 1.0);
        for k in [-5.0, 2.0, 13.0] {
            let boosted = psi.boosted(k);
            let v = clock_energy_variance(&boosted, 1.0, 1.0);
            assert!((v - base).abs() < 1e-3 * base, "k={k}: {v} vs {base}");
            let mean = ClockState::pure(boosted).mean_energy(1.0, 1.0);
            assert!((mean - k).abs() < 1e-3 * k.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_bad_grids_and_edges() {
        assert!(ClockWavefunction::from_fn(1.0, 10, |_| C64::new(0.0, 0.0)).is_err());
        assert!(ClockWavefunction::from_fn(1.0, 11, |_| C64::new(1.0, 0.0)).is_err());
        assert!(ClockWavefunction::from_fn(-1.0, 11, |x| C64::new(x.sin(), 0.0)).is_err());
        assert!(matches!(
            variational_minimize(1.0, 15),
            Err(Error::GridTooCoarse { points: 15, min: 16 })
        ));
    }

    #[test]
    fn variational_ground_state_is_sine() {
        let gs = variational_minimize(1.0, 2001).unwrap();
        let opt = optimal_wavefunction(1.0, 2001).unwrap();
        assert!(gs.wavefunction.overlap(&opt).unwrap() > 1.0 - 1e-10);
        assert!(gs
            .wavefunction
            .amplitudes()
            .iter()
            .all(|z| z.re >= 0.0 && z.im == 0.0));
        assert!((gs.eigenvalue - PI * PI).abs() < 1e-4);
    }

    #[test]
    fn variational_eigenvalue_second_order() {
        let err = |n| (variational_minimize(2.0, n).unwrap().eigenvalue - (PI / 2.0).powi(2)).abs();
        let ratio = err(101) / err(201);
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn commutator_norm_of_pure_state_is_twice_fluctuation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let psi = random_admissible(&mut rng, 0.8, 401, 6).unwrap();
            let state = ClockState::pure(psi);
            let dh = state.fluctuation(1.0, 1.0);
            let cn = state.commutator_trace_norm(1.0, 1.0);
            assert!((cn - 2.0 * dh).abs() < 1e-8 * dh, "{cn} vs {}", 2.0 * dh);
        }
    }

    #[test]
    fn mixture_commutator_below_twice_fluctuation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a = random_admissible(&mut rng, 1.0, 401, 5).unwrap();
        let b = random_admissible(&mut rng, 1.0, 401, 5).unwrap();
        let state = ClockState::mixture(vec![(0.3, a), (0.7, b)]).unwrap();
        let dh = state.fluctuation(1.0, 1.0);
        let cn = state.commutator_trace_norm(1.0, 1.0);
        assert!(cn <= 2.0 * dh + 1e-10);
        assert!(cn > 0.0);
    }

    #[test]
    fn every_admissible_state_respects_the_sine_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let psi = random_admissible(&mut rng, 1.0, 1001, 8).unwrap();
            let dh = clock_energy_variance(&psi, 1.0, 1.0).sqrt();
            assert!(dh >= PI * (1.0 - 1e-5), "{dh}");
        }
        let g = truncated_gaussian(1.0, 1001, 0.15).unwrap();
        assert!(clock_energy_variance(&g, 1.0, 1.0).sqrt() > PI * 1.05);
        let f = flat_top(1.0, 1001).unwrap();
        assert!(clock_energy_variance(&f, 1.0, 1.0).sqrt() > PI * 1.05);
    }
}
