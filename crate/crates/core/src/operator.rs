//! Dense complex operators on finite-dimensional, possibly composite, Hilbert spaces.
//!
//! Everything here is a pure function of immutable inputs. Spectral functions of
//! Hermitian operators go through a Hermitian eigendecomposition; the trace norm
//! and operator norm of non-Hermitian inputs use singular values.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;

const I: C64 = C64::new(0.0, 1.0);

static HERMITIAN_TOL_BITS: AtomicU64 = AtomicU64::new(1e-12_f64.to_bits());
static UNITARY_TOL_BITS: AtomicU64 = AtomicU64::new(1e-10_f64.to_bits());

/// Eigenvalues of a density matrix may dip this far below zero.
pub const STATE_EIGENVALUE_TOL: f64 = 1e-12;
/// Trace of a density matrix must equal one to this tolerance.
pub const STATE_TRACE_TOL: f64 = 1e-12;
/// Eigenphases closer than this to -pi (from above) are ambiguous and rejected.
pub const BRANCH_CUT_GUARD: f64 = 1e-9;

/// Current Hermiticity tolerance (max-abs entry of `A - A†`).
pub fn hermitian_tolerance() -> f64 {
    f64::from_bits(HERMITIAN_TOL_BITS.load(Ordering::Relaxed))
}

/// Current unitarity tolerance (max-abs entry of `U†U - I`).
pub fn unitary_tolerance() -> f64 {
    f64::from_bits(UNITARY_TOL_BITS.load(Ordering::Relaxed))
}

/// Override the global Hermiticity and unitarity tolerances.
pub fn set_tolerances(hermitian: f64, unitary: f64) {
    HERMITIAN_TOL_BITS.store(hermitian.to_bits(), Ordering::Relaxed);
    UNITARY_TOL_BITS.store(unitary.to_bits(), Ordering::Relaxed);
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// A square complex matrix together with the dimensions of the tensor factors
/// of the space it acts on.
#[derive(Clone, PartialEq)]
pub struct Operator {
    matrix: Matrix,
    dims: Vec<usize>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dims={:?}){}", self.dims, self.matrix)
    }
}

impl Operator {
    pub fn new(matrix: Matrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let product: usize = dims.iter().product();
        if dims.is_empty() || product != matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} do not multiply to side length {}",
                dims,
                matrix.nrows()
            )));
        }
        Ok(Operator { matrix, dims })
    }

    /// Single-factor operator.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        let n = matrix.nrows();
        Operator::new(matrix, vec![n])
    }

    pub(crate) fn from_parts(matrix: Matrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.nrows());
        Operator { matrix, dims }
    }

    pub fn from_row_slice(n: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        Operator::from_matrix(Matrix::from_row_slice(n, n, entries))
    }

    pub fn identity(n: usize) -> Self {
        Operator::from_parts(Matrix::identity(n, n), vec![n])
    }

    pub fn zeros(n: usize) -> Self {
        Operator::from_parts(Matrix::zeros(n, n), vec![n])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let d = DVector::from_iterator(n, diag.iter().map(|&x| C64::new(x, 0.0)));
        Operator::from_parts(Matrix::from_diagonal(&d), vec![n])
    }

    /// Outer product `|ket><bra|`.
    pub fn outer(ket: &DVector<C64>, bra: &DVector<C64>) -> Self {
        let n = ket.len();
        Operator::from_parts(ket * bra.adjoint(), vec![n])
    }

    /// Matrix unit `E_kl = |k><l|` on an `n`-dimensional space.
    pub fn matrix_unit(n: usize, k: usize, l: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        m[(k, l)] = C64::new(1.0, 0.0);
        Operator::from_parts(m, vec![n])
    }

    pub fn pauli_x() -> Self {
        Operator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn pauli_y() -> Self {
        let z = C64::new(0.0, 0.0);
        Operator::from_parts(Matrix::from_row_slice(2, 2, &[z, -I, I, z]), vec![2])
    }

    pub fn pauli_z() -> Self {
        Operator::from_real_diagonal(&[1.0, -1.0])
    }

    fn from_real_rows(n: usize, entries: &[f64]) -> Self {
        let m = Matrix::from_row_iterator(n, n, entries.iter().map(|&x| C64::new(x, 0.0)));
        Operator::from_parts(m, vec![n])
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Side length of the matrix.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix, different factor structure.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Operator::new(self.matrix, dims)
    }

    pub fn adjoint(&self) -> Self {
        Operator::from_parts(self.matrix.adjoint(), self.dims.clone())
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Operator::from_parts(&self.matrix * factor, self.dims.clone())
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// Max-abs entry of `A - A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= hermitian_tolerance()
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_defect();
        let tolerance = hermitian_tolerance();
        if deviation <= tolerance {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation,
                tolerance,
            })
        }
    }

    /// `(A + A†)/2`, used to scrub rounding noise from results that are Hermitian in exact arithmetic.
    pub fn hermitian_part(&self) -> Self {
        Operator::from_parts(
            (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0),
            self.dims.clone(),
        )
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Operator::from_parts(
            &u.matrix * &self.matrix * u.matrix.adjoint(),
            self.dims.clone(),
        )
    }

    fn check_same_size(&self, other: &Operator, what: &str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator addition dimension mismatch");
        Operator::from_parts(&self.matrix + &rhs.matrix, self.dims.clone())
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator subtraction dimension mismatch");
        Operator::from_parts(&self.matrix - &rhs.matrix, self.dims.clone())
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator product dimension mismatch");
        Operator::from_parts(&self.matrix * &rhs.matrix, self.dims.clone())
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::from_parts(-&self.matrix, self.dims.clone())
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        op.ensure_hermitian()?;
        let tr = op.trace();
        if (tr.re - 1.0).abs() > STATE_TRACE_TOL || tr.im.abs() > STATE_TRACE_TOL {
            return Err(Error::NotAState(format!("trace is {tr}")));
        }
        let min = HermitianSpectrum::of(&op.hermitian_part())?
            .values()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -STATE_EIGENVALUE_TOL {
            return Err(Error::NotAState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix(op))
    }

    /// Wrap an operator known to be a state (e.g. the output of a unitary evolution).
    pub(crate) fn assume(op: Operator) -> Self {
        DensityMatrix(op.hermitian_part())
    }

    /// `|psi><psi|` for a (not necessarily normalized) ket.
    pub fn pure(ket: &DVector<C64>) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::NotAState("zero ket".into()));
        }
        let k = ket / C64::new(norm, 0.0);
        Ok(DensityMatrix(Operator::outer(&k, &k)))
    }

    /// Computational basis state `|k><k|` in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Self {
        DensityMatrix(Operator::matrix_unit(n, k, k))
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        DensityMatrix::new(Operator::from_real_diagonal(probs))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix(Operator::identity(n).scale_real(1.0 / n as f64))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn matrix(&self) -> &Matrix {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn dims(&self) -> &[usize] {
        self.0.dims()
    }

    /// `U rho U†`.
    pub fn evolve(&self, u: &UnitaryOperator) -> Self {
        DensityMatrix::assume(self.0.conjugate_by(u.operator()))
    }
}

/// A validated unitary operator.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator(Operator);

impl UnitaryOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let deviation = unitarity_defect(&op);
        let tolerance = unitary_tolerance();
        if deviation > tolerance {
            return Err(Error::NotUnitary {
                deviation,
                tolerance,
            });
        }
        Ok(UnitaryOperator(op))
    }

    pub(crate) fn assume(op: Operator) -> Self {
        UnitaryOperator(op)
    }

    pub fn identity(n: usize) -> Self {
        UnitaryOperator(Operator::identity(n))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn matrix(&self) -> &Matrix {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn adjoint(&self) -> Self {
        UnitaryOperator(self.0.adjoint())
    }

    /// Product `self * other`, applied right to left.
    pub fn then_after(&self, other: &UnitaryOperator) -> Self {
        UnitaryOperator(&self.0 * &other.0)
    }

    /// Max-abs entry of `U†U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }
}

fn unitarity_defect(op: &Operator) -> f64 {
    let n = op.dim();
    max_abs(&(op.matrix().adjoint() * op.matrix() - Matrix::identity(n, n)))
}

/// Eigendecomposition `H = V diag(values) V†` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    values: DVector<f64>,
    vectors: Matrix,
    dims: Vec<usize>,
}

impl HermitianSpectrum {
    pub fn of(h: &Operator) -> Result<Self> {
        h.ensure_hermitian()?;
        let eig = h.hermitian_part().into_matrix().symmetric_eigen();
        Ok(HermitianSpectrum {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
            dims: h.dims().to_vec(),
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    /// `f(H) = V diag(f(values)) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> Operator {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fj = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fj;
            }
        }
        Operator::from_parts(scaled * self.vectors.adjoint(), self.dims.clone())
    }

    /// `exp(-i H t / hbar)`.
    pub fn propagator(&self, t: f64, hbar: f64) -> UnitaryOperator {
        UnitaryOperator::assume(self.apply(|e| (-I * e * t / hbar).exp()))
    }
}

/// Kronecker product; the factor structure is the concatenation of both.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator::from_parts(a.matrix.kronecker(&b.matrix), dims)
}

/// Trace out every tensor factor except `keep`.
pub fn partial_trace(o: &Operator, keep: usize) -> Result<Operator> {
    let count = o.dims.len();
    if count < 2 {
        return Err(Error::InvalidSubsystem { index: keep, count });
    }
    if keep >= count {
        return Err(Error::InvalidSubsystem { index: keep, count });
    }
    let d = o.dims[keep];
    let pre: usize = o.dims[..keep].iter().product();
    let post: usize = o.dims[keep + 1..].iter().product();
    let m = &o.matrix;
    let mut out = Matrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..pre {
                let row0 = (a * d + k) * post;
                let col0 = (a * d + l) * post;
                for b in 0..post {
                    acc += m[(row0 + b, col0 + b)];
                }
            }
            out[(k, l)] = acc;
        }
    }
    Ok(Operator::from_parts(out, vec![d]))
}

/// Partial trace of a state, as a state.
pub fn reduce(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::assume(partial_trace(rho.operator(), keep)?))
}

fn singular_values(a: &Operator) -> DVector<f64> {
    a.matrix.clone().svd(false, false).singular_values
}

/// Sum of singular values.
pub fn trace_norm(a: &Operator) -> f64 {
    if a.is_hermitian() {
        if let Ok(spec) = HermitianSpectrum::of(a) {
            return spec.values.iter().map(|x| x.abs()).sum();
        }
    }
    singular_values(a).iter().sum()
}

/// Largest singular value.
pub fn operator_norm(a: &Operator) -> f64 {
    if a.is_hermitian() {
        if let Ok(spec) = HermitianSpectrum::of(a) {
            return spec.values.iter().fold(0.0, |m, x| m.max(x.abs()));
        }
    }
    singular_values(a).iter().fold(0.0_f64, |m, &x| m.max(x))
}

/// `ab - ba`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.check_same_size(b, "commutator")?;
    Ok(Operator::from_parts(
        &a.matrix * &b.matrix - &b.matrix * &a.matrix,
        a.dims.clone(),
    ))
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> Result<C64> {
    a.check_same_size(b, "trace of product")?;
    let n = a.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a.matrix[(i, j)] * b.matrix[(j, i)];
        }
    }
    Ok(acc)
}

/// `tr(h rho)` for Hermitian `h`.
pub fn expectation(h: &Operator, rho: &DensityMatrix) -> Result<f64> {
    h.ensure_hermitian()?;
    Ok(trace_product(h, rho.operator())?.re)
}

/// `tr(h^2 rho) - tr(h rho)^2`, clamped at zero against rounding.
pub fn variance(h: &Operator, rho: &DensityMatrix) -> Result<f64> {
    h.ensure_hermitian()?;
    let mean = trace_product(h, rho.operator())?.re;
    let h2 = h * h;
    let second = trace_product(&h2, rho.operator())?.re;
    let var = second - mean * mean;
    if var < 0.0 && var >= -1e-12 * second.abs().max(1.0) {
        Ok(0.0)
    } else {
        Ok(var)
    }
}

/// `exp(-i h t / hbar)` via Hermitian eigendecomposition.
pub fn propagator(h: &Operator, t: f64, hbar: f64) -> Result<UnitaryOperator> {
    Ok(HermitianSpectrum::of(h)?.propagator(t, hbar))
}

/// Principal logarithm of a unitary: skew-Hermitian `L` with `exp(L) = u` and
/// eigenphases in `(-pi, pi]`.
pub fn unitary_log(u: &UnitaryOperator) -> Result<Operator> {
    let n = u.dim();
    let (q, t) = u.matrix().clone().schur().unpack();
    // A unitary is normal, so its Schur form is diagonal.
    let mut off = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(t[(i, j)].norm());
            }
        }
    }
    if off > unitary_tolerance().sqrt() {
        return Err(Error::Numerical(format!(
            "Schur form of unitary not diagonal (off-diagonal {off:e})"
        )));
    }
    let mut phases = DVector::<C64>::zeros(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut theta = lambda.arg();
        if (lambda + 1.0).norm() <= unitary_tolerance() {
            theta = PI;
        } else if theta <= -PI + BRANCH_CUT_GUARD {
            return Err(Error::BranchCut { phase: theta });
        }
        phases[i] = I * theta;
    }
    let log = &q * Matrix::from_diagonal(&phases) * q.adjoint();
    // Exact skew-Hermitian projection.
    let log = (&log - log.adjoint()) * C64::new(0.5, 0.0);
    let out = Operator::from_parts(log, u.operator().dims().to_vec());
    let back = exp_skew_hermitian(&out)?;
    let err = max_abs(&(back.matrix() - u.matrix()));
    if err > 10.0 * unitary_tolerance() {
        return Err(Error::Numerical(format!(
            "unitary logarithm round trip error {err:e}"
        )));
    }
    Ok(out)
}

/// `exp(L)` for skew-Hermitian `L`, computed as the propagator of the Hermitian `iL`.
pub fn exp_skew_hermitian(l: &Operator) -> Result<UnitaryOperator> {
    let k = l.scale(I);
    propagator(&k, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn max_diff(a: &Operator, b: &Operator) -> f64 {
        (a - b).max_abs_entry()
    }

    #[test]
    fn tensor_identity_and_diagonal() {
        let t = tensor(&Operator::identity(2), &Operator::identity(3));
        assert_eq!(t.dims(), &[2, 3]);
        assert!(max_diff(&t, &Operator::identity(6)) == 0.0);
        let t = tensor(&Operator::pauli_z(), &Operator::identity(2));
        assert_eq!(
            t.matrix(),
            Operator::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]).matrix()
        );
    }

    #[test]
    fn tensor_matches_index_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_unitary(&mut rng, 2).into_operator();
        let b = random_hermitian(&mut rng, 3, 1.0);
        let t = tensor(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expect = a.matrix()[(i, j)] * b.matrix()[(k, l)];
                        assert_eq!(t.matrix()[(i * 3 + k, j * 3 + l)], expect);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&mut rng, 2, 2);
        let sigma = random_density(&mut rng, 3, 3);
        let joint = tensor(rho.operator(), sigma.operator());
        assert!(max_diff(&partial_trace(&joint, 0).unwrap(), rho.operator()) < 1e-14);
        assert!(max_diff(&partial_trace(&joint, 1).unwrap(), sigma.operator()) < 1e-14);

        let s = 1.0 / 2f64.sqrt();
        let bell = DVector::from_vec(vec![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]);
        let bell = DensityMatrix::pure(&bell)
            .unwrap()
            .into_operator()
            .with_dims(vec![2, 2])
            .unwrap();
        let red = partial_trace(&bell, 0).unwrap();
        assert!(max_diff(&red, &Operator::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_explicit_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&mut rng, 4, 4)
            .into_operator()
            .with_dims(vec![2, 2])
            .unwrap();
        let m = rho.matrix();
        let keep_first = partial_trace(&rho, 0).unwrap();
        let keep_second = partial_trace(&rho, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut first = c(0., 0.);
                let mut second = c(0., 0.);
                for k in 0..2 {
                    first += m[(2 * i + k, 2 * j + k)];
                    second += m[(2 * k + i, 2 * k + j)];
                }
                assert!((keep_first.matrix()[(i, j)] - first).norm() < 1e-15);
                assert!((keep_second.matrix()[(i, j)] - second).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let op = tensor(&Operator::identity(2), &Operator::identity(2));
        assert!(matches!(
            partial_trace(&op, 2),
            Err(Error::InvalidSubsystem { index: 2, count: 2 })
        ));
        assert!(partial_trace(&Operator::identity(2), 0).is_err());
    }

    #[test]
    fn norms_on_simple_inputs() {
        assert_eq!(trace_norm(&Operator::zeros(3)), 0.0);
        assert!((trace_norm(&Operator::identity(5)) - 5.0).abs() < 1e-14);
        assert!((operator_norm(&Operator::identity(4)) - 1.0).abs() < 1e-14);
        let c_val = 2.5;
        let h = Operator::from_real_diagonal(&[-c_val, c_val]);
        assert!((operator_norm(&h) - c_val).abs() < 1e-14);
    }

    // Eigenvalues of a 3x3 Hermitian from the characteristic cubic (trigonometric form),
    // independent of the library eigensolver.
    fn cubic_eigenvalues(h: &Operator) -> [f64; 3] {
        let m = h.matrix();
        let a = m[(0, 0)].re;
        let b = m[(1, 1)].re;
        let cc = m[(2, 2)].re;
        let p1 = m[(0, 1)].norm_sqr() + m[(0, 2)].norm_sqr() + m[(1, 2)].norm_sqr();
        let q = (a + b + cc) / 3.0;
        let p2 = (a - q).powi(2) + (b - q).powi(2) + (cc - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let bmat = (m - Matrix::identity(3, 3) * C64::new(q, 0.0)) / C64::new(p, 0.0);
        let det = bmat.determinant().re / 2.0;
        let phi = det.clamp(-1.0, 1.0).acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        [e1, 3.0 * q - e1 - e3, e3]
    }

    #[test]
    fn norms_match_cubic_eigenvalue_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 3, 2.0);
            let ev = cubic_eigenvalues(&h);
            let tn: f64 = ev.iter().map(|x| x.abs()).sum();
            let on = ev.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            assert!((trace_norm(&h) - tn).abs() < 1e-10);
            assert!((operator_norm(&h) - on).abs() < 1e-10);
            // Non-Hermitian route agrees on Hermitian input too.
            assert!((singular_values(&h).iter().sum::<f64>() - tn).abs() < 1e-10);
        }
    }

    #[test]
    fn commutator_algebra() {
        let x = Operator::pauli_x();
        let y = Operator::pauli_y();
        let z = Operator::pauli_z();
        assert_eq!(commutator(&x, &x).unwrap().max_abs_entry(), 0.0);
        let xy = commutator(&x, &y).unwrap();
        assert!(max_diff(&xy, &z.scale(c(0., 2.))) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 4, 1.0);
        let h2 = &h * &h;
        let poly = &(&h2 * &h).scale_real(0.3) + &h2.scale_real(-2.0);
        assert!(commutator(&h, &poly).unwrap().max_abs_entry() < 1e-12);
        assert!(commutator(&h, &Operator::identity(3)).is_err());
    }

    #[test]
    fn expectation_and_variance() {
        let z = Operator::pauli_z();
        let up = DensityMatrix::basis(2, 0);
        assert_eq!(expectation(&z, &up).unwrap(), 1.0);
        assert_eq!(variance(&z, &up).unwrap(), 0.0);
        assert_eq!(
            expectation(&z, &DensityMatrix::maximally_mixed(2)).unwrap(),
            0.0
        );
        let s = 1.0 / 2f64.sqrt();
        let plus = DensityMatrix::pure(&DVector::from_vec(vec![c(s, 0.), c(s, 0.)])).unwrap();
        assert!((variance(&z, &plus).unwrap() - 1.0).abs() < 1e-15);

        let non_herm = Operator::matrix_unit(2, 0, 1);
        assert!(matches!(
            expectation(&non_herm, &up),
            Err(Error::NotHermitian { .. })
        ));
        assert!(variance(&non_herm, &up).is_err());
    }

    #[test]
    fn expectation_and_variance_match_entrywise_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 2..6 {
            let h = random_hermitian(&mut rng, n, 1.5);
            let rho = random_density(&mut rng, n, n);
            let (hm, rm) = (h.matrix(), rho.matrix());
            let mut mean = c(0., 0.);
            let mut second = c(0., 0.);
            for i in 0..n {
                for j in 0..n {
                    mean += hm[(i, j)] * rm[(j, i)];
                    for k in 0..n {
                        second += hm[(i, j)] * hm[(j, k)] * rm[(k, i)];
                    }
                }
            }
            assert!((expectation(&h, &rho).unwrap() - mean.re).abs() < 1e-12);
            let var = second.re - mean.re * mean.re;
            assert!((variance(&h, &rho).unwrap() - var).abs() < 1e-12);
        }
    }

    #[test]
    fn propagator_closed_forms() {
        let u = propagator(&Operator::zeros(3), 1.7, 1.0).unwrap();
        assert!(max_diff(u.operator(), &Operator::identity(3)) < 1e-15);
        let u = propagator(&Operator::pauli_z(), PI / 2.0, 1.0).unwrap();
        let expect = Operator::from_row_slice(
            2,
            &[(-I * PI / 2.0).exp(), c(0., 0.), c(0., 0.), (I * PI / 2.0).exp()],
        )
        .unwrap();
        assert!(max_diff(u.operator(), &expect) < 1e-15);
        assert!(propagator(&Operator::matrix_unit(2, 0, 1), 1.0, 1.0).is_err());
    }

    #[test]
    fn propagator_matches_power_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 4, 1.0);
        let t = 0.37;
        let hbar = 1.0;
        let gen = h.scale(-I * t / hbar);
        let mut term = Operator::identity(4);
        let mut sum = Operator::identity(4);
        for k in 1..40 {
            term = (&term * &gen).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        let u = propagator(&h, t, hbar).unwrap();
        assert!(max_diff(u.operator(), &sum) < 1e-10);
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn unitary_log_cases() {
        let l = unitary_log(&UnitaryOperator::identity(3)).unwrap();
        assert!(l.max_abs_entry() < 1e-14);

        let x = UnitaryOperator::new(Operator::pauli_x()).unwrap();
        let l = unitary_log(&x).unwrap();
        let back = exp_skew_hermitian(&l).unwrap();
        assert!(max_diff(back.operator(), x.operator()) < 1e-10);
        // eigenvalues {0, i pi}: trace i pi, det 0
        assert!((l.trace() - c(0., PI)).norm() < 1e-12);
        assert!(l.matrix().determinant().norm() < 1e-12);

        let thetas = [0.3, -2.9, PI];
        let diag = DVector::from_iterator(3, thetas.iter().map(|&t| (I * t).exp()));
        let u = UnitaryOperator::new(Operator::from_matrix(Matrix::from_diagonal(&diag)).unwrap())
            .unwrap();
        let l = unitary_log(&u).unwrap();
        for (k, &t) in thetas.iter().enumerate() {
            assert!((l.matrix()[(k, k)] - I * t).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_log_rejects_branch_cut_neighbourhood() {
        let phase = -PI + 5e-10;
        let diag = DVector::from_vec(vec![(I * phase).exp(), c(1., 0.)]);
        let u = UnitaryOperator::new(Operator::from_matrix(Matrix::from_diagonal(&diag)).unwrap())
            .unwrap();
        assert!(matches!(unitary_log(&u), Err(Error::BranchCut { .. })));
    }

    #[test]
    fn unitarity_validation() {
        assert!(UnitaryOperator::new(Operator::from_real_diagonal(&[1.0, 1.0 + 1e-6])).is_err());
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.1, -0.1]).is_err());
        assert!(DensityMatrix::diagonal(&[0.25, 0.75]).is_ok());
    }
}
