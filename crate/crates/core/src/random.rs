//! Random operators and states for ensembles and property tests.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::operator::{DensityMatrix, Matrix, Operator, UnitaryOperator, C64};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Gaussian unitary ensemble member rescaled to operator norm `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Operator {
    let g = ginibre(rng, n, n);
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let h = Operator::from_parts(h, vec![n]);
    let norm = crate::operator::operator_norm(&h);
    if norm == 0.0 {
        h
    } else {
        h.scale_real(scale / norm)
    }
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase of R's diagonal removed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> UnitaryOperator {
    let qr = ginibre(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOperator::assume(Operator::from_parts(q, vec![n]))
}

/// `exp(-i K)` for a random Hermitian `K` with operator norm `max_phase`; keeps
/// every eigenphase strictly inside `(-pi, pi)` when `max_phase < pi`.
pub fn random_unitary_near_identity<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_phase: f64,
) -> UnitaryOperator {
    let k = random_hermitian(rng, n, max_phase);
    crate::operator::propagator(&k, 1.0, 1.0).expect("GUE sample is Hermitian")
}

pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<C64> {
    let v = DVector::from_fn(n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Random state of the given rank (Ginibre construction `G G† / tr`).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, n, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::assume(Operator::from_parts(m / tr, vec![n]))
}
