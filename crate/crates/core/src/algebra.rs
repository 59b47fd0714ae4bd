//! Dense complex matrices and the handful of factorizations the rest of the
//! crate needs.
//!
//! Matrices are stored row-major. Factorizations delegate to `faer`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::prelude::*;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances;

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Shorthand for a real-valued complex number.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::default(); rows * cols] }
    }

    /// Identity of size `n`.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { re(1.0) } else { C64::default() })
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a square matrix from real row-major rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        Self::from_fn(n, m, |i, j| re(rows[i][j]))
    }

    /// Diagonal matrix from complex entries.
    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { C64::default() })
    }

    /// Diagonal matrix from real entries.
    pub fn real_diag(entries: &[f64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { re(entries[i]) } else { C64::default() })
    }

    /// Rank-one projector `|v><v|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Consumes the matrix and returns its row-major entries.
    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Plain transpose.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// Multiplies every entry by `s`.
    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|A - A^H|`, or infinity for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Whether the matrix is Hermitian to the flagging tolerance.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() < tolerances::HERMITIAN_FLAG
    }

    /// Commutator `[A, B]`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Copies into a `faer` matrix.
    pub fn to_faer(&self) -> Mat<C64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    /// Copies out of a `faer` matrix.
    pub fn from_faer(m: MatRef<'_, C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::default() {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shapes must agree");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shapes must agree");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Tensor-product structure of the composite Hilbert space.
///
/// A basis index enumerates local levels with the last subsystem varying
/// fastest, matching [`kron`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertLayout {
    dims: Vec<usize>,
}

impl HilbertLayout {
    /// Layout with the given local dimensions.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidSpec { reason: format!("local dimensions must be at least 1, got {dims:?}") });
        }
        Ok(Self { dims })
    }

    /// Donor, acceptor and a cavity with photon cutoff `n_cav`.
    pub fn donor_acceptor_cavity(n_cav: usize) -> Self {
        Self { dims: vec![2, 2, n_cav + 1] }
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Local level of every subsystem for a composite basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Composite basis index of a tuple of local levels.
    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&k, &d)| acc * d + k)
    }

    /// Total excitation number of a basis state, the sum of its local levels.
    pub fn excitations(&self, index: usize) -> usize {
        self.digits(index).iter().sum()
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * br, a.cols * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Spectrum of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    let deviation = a.hermitian_deviation();
    if deviation >= tolerances::HERMITIAN_INPUT {
        return Err(Error::NonHermitian { deviation });
    }
    let n = a.rows;
    let sym = Mat::<C64>::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let evd = sym.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence)?;
    let s = evd.S().column_vector();
    let values = (0..n).map(|i| s[i].re).collect();
    let vectors = ComplexMatrix::from_faer(evd.U());
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a general complex square matrix, in no particular order.
pub fn eig_general(a: &ComplexMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    if a.rows == 0 {
        return Ok(Vec::new());
    }
    a.to_faer().eigenvalues().map_err(|_| Error::NoConvergence)
}

/// Eigenvalues of a real square matrix given in row-major order.
pub fn eig_real(n: usize, a: &[f64]) -> Result<Vec<C64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]).eigenvalues().map_err(|_| Error::NoConvergence)
}

/// LU factorization with a pivot-based singularity check.
pub(crate) struct CheckedLu {
    lu: faer::linalg::solvers::PartialPivLu<C64>,
    pivot_ratio: f64,
}

impl CheckedLu {
    /// Factorizes `m`. The pivot ratio is `min |u_ii| / max |u_ii|`.
    pub(crate) fn new(m: &Mat<C64>) -> Self {
        let lu = m.partial_piv_lu();
        let u = lu.U();
        let n = u.nrows().min(u.ncols());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..n {
            let p = u[(i, i)].norm();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let pivot_ratio = if n == 0 { 1.0 } else if hi > 0.0 { lo / hi } else { 0.0 };
        Self { lu, pivot_ratio }
    }

    pub(crate) fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub(crate) fn is_singular(&self) -> bool {
        !(self.pivot_ratio >= tolerances::SINGULAR_PIVOT_RATIO)
    }

    pub(crate) fn solve(&self, rhs: MatRef<'_, C64>) -> Mat<C64> {
        self.lu.solve(rhs)
    }
}

/// Relative residual `‖A x − b‖ / ‖b‖` in the Euclidean norm.
pub(crate) fn relative_residual(a: MatRef<'_, C64>, x: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let r = a * x - b;
    let bn = b.norm_l2();
    if bn == 0.0 {
        r.norm_l2()
    } else {
        r.norm_l2() / bn
    }
}

/// Solves `a x = b` for square nonsingular `a`.
pub fn solve_linear(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch { expected: a.rows, found: b.len() });
    }
    let m = a.to_faer();
    let lu = CheckedLu::new(&m);
    if lu.is_singular() {
        return Err(Error::Singular { pivot_ratio: lu.pivot_ratio() });
    }
    let rhs = Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(rhs.as_ref());
    if !(relative_residual(m.as_ref(), x.as_ref(), rhs.as_ref()) < tolerances::SOLVE_RESIDUAL) {
        return Err(Error::Singular { pivot_ratio: lu.pivot_ratio() });
    }
    Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
}

/// Reduced operator on the subsystems listed in `keep`, tracing out the rest.
///
/// The kept subsystems appear in their original order regardless of the order
/// of `keep`.
pub fn partial_trace(rho: &ComplexMatrix, layout: &HilbertLayout, keep: &[usize]) -> Result<ComplexMatrix> {
    let n = layout.total_dim();
    if rho.rows != n || rho.cols != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.rows.max(rho.cols) });
    }
    let nsub = layout.dims.len();
    if let Some(&bad) = keep.iter().find(|&&k| k >= nsub) {
        return Err(Error::DimensionMismatch { expected: nsub, found: bad + 1 });
    }
    let kept: Vec<usize> = (0..nsub).filter(|k| keep.contains(k)).collect();
    let reduced = HilbertLayout { dims: kept.iter().map(|&k| layout.dims[k]).collect() };
    let m = if kept.is_empty() { 1 } else { reduced.total_dim() };
    let mut out = ComplexMatrix::zeros(m, m);
    let digits: Vec<Vec<usize>> = (0..n).map(|i| layout.digits(i)).collect();
    let reduced_index =
        |d: &[usize]| if kept.is_empty() { 0 } else { kept.iter().fold(0, |acc, &k| acc * layout.dims[k] + d[k]) };
    for i in 0..n {
        for j in 0..n {
            let traced_match =
                (0..nsub).filter(|k| !kept.contains(k)).all(|k| digits[i][k] == digits[j][k]);
            if traced_match {
                out[(reduced_index(&digits[i]), reduced_index(&digits[j]))] += rho[(i, j)];
            }
        }
    }
    Ok(out)
}

/// `Tr(O ρ)`.
pub fn expectation(op: &ComplexMatrix, rho: &ComplexMatrix) -> Result<C64> {
    if op.rows != rho.cols || op.cols != rho.rows {
        return Err(Error::DimensionMismatch { expected: op.cols, found: rho.rows });
    }
    let mut acc = C64::default();
    for i in 0..op.rows {
        for k in 0..op.cols {
            acc += op[(i, k)] * rho[(k, i)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n, n);
        (&a + &a.adjoint()).scale(re(0.5))
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n, n);
        let p = &a * &a.adjoint();
        let t = p.trace();
        p.scale(t.inv())
    }

    fn lower() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
    }

    #[test]
    fn kron_of_identities_is_identity() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_projector_with_identity() {
        let p = ComplexMatrix::real_diag(&[1.0, 0.0]);
        assert_eq!(kron(&p, &ComplexMatrix::identity(2)), ComplexMatrix::real_diag(&[1.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn embedded_lowering_maps_excited_to_ground_for_each_fock_level() {
        let op = kron(&lower(), &ComplexMatrix::identity(3));
        let layout = HilbertLayout::new(vec![2, 3]).unwrap();
        for k in 0..3 {
            let mut excited = vec![C64::default(); 6];
            excited[layout.index(&[1, k])] = re(1.0);
            let image = op.apply(&excited);
            for (idx, z) in image.iter().enumerate() {
                let expect = if idx == layout.index(&[0, k]) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(z.re, expect);
                assert_abs_diff_eq!(z.im, 0.0);
            }
        }
    }

    #[test]
    fn hermitian_spectrum_of_diagonal_is_sorted() {
        let e = eig_hermitian(&ComplexMatrix::real_diag(&[3.0, 1.0, 2.0])).unwrap();
        for (v, x) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*v, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = eig_hermitian(&x).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian(&mut rng, 8);
        let e = eig_hermitian(&a).unwrap();
        let lam = ComplexMatrix::real_diag(&e.values);
        let back = &(&e.vectors * &lam) * &e.vectors.adjoint();
        assert!((&back - &a).max_abs() < 1e-9);
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn triangular_spectrum() {
        let mut m = ComplexMatrix::diag(&[C64::new(0.0, 1.0), re(2.0), re(-1.0)]);
        m[(0, 1)] = re(3.0);
        m[(0, 2)] = re(-2.0);
        m[(1, 2)] = C64::new(0.5, 0.5);
        let mut ev = eig_general(&m).unwrap();
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        let expect = [re(-1.0), C64::new(0.0, 1.0), re(2.0)];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn nilpotent_spectrum_is_zero() {
        let ev = eig_general(&lower()).unwrap();
        assert_eq!(ev.len(), 2);
        for z in ev {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn damped_oscillator_drift_has_decaying_modes() {
        let (gamma, omega) = (0.3, 2.0);
        let m = ComplexMatrix::from_real_rows(&[&[-gamma / 2.0, omega], &[-omega, -gamma / 2.0]]);
        let ev = eig_general(&m).unwrap();
        for z in ev {
            assert_abs_diff_eq!(z.re, -gamma / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im.abs(), omega, epsilon = 1e-12);
        }
    }

    #[test]
    fn general_eigenvalues_satisfy_characteristic_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 6, 6);
        for lam in eig_general(&a).unwrap() {
            let shifted = &a - &ComplexMatrix::identity(6).scale(lam);
            let pivots = CheckedLu::new(&shifted.to_faer());
            assert!(pivots.pivot_ratio() < 1e-10);
        }
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = vec![re(1.0), C64::new(0.0, 2.0), re(-3.0)];
        let x = solve_linear(&ComplexMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let x = solve_linear(&ComplexMatrix::real_diag(&[2.0, 4.0]), &[re(2.0), re(8.0)]).unwrap();
        assert_abs_diff_eq!(x[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1].re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn random_solve_meets_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = &random_matrix(&mut rng, 20, 20) + &ComplexMatrix::identity(20).scale(re(5.0));
        let b: Vec<C64> = (0..20).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = solve_linear(&a, &b).unwrap();
        let r: f64 = a.apply(&x).iter().zip(&b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(r / bn < 1e-10);
    }

    #[test]
    fn singular_solve_is_rejected() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(solve_linear(&a, &[re(1.0), re(0.0)]), Err(Error::Singular { .. })));
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_state(&mut rng, 4);
        let c = random_state(&mut rng, 3);
        let layout = HilbertLayout::new(vec![2, 2, 3]).unwrap();
        let red = partial_trace(&kron(&q, &c), &layout, &[0, 1]).unwrap();
        assert!((&red - &q).max_abs() < 1e-14);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = vec![re(s), re(0.0), re(0.0), re(s)];
        let layout = HilbertLayout::new(vec![2, 2]).unwrap();
        let red = partial_trace(&ComplexMatrix::outer(&psi, &psi), &layout, &[1]).unwrap();
        assert!((&red - &ComplexMatrix::real_diag(&[0.5, 0.5])).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_wrong_dimension() {
        let layout = HilbertLayout::new(vec![2, 2]).unwrap();
        let r = partial_trace(&ComplexMatrix::identity(3), &layout, &[0]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_state(&mut rng, 5);
        assert!((expectation(&ComplexMatrix::identity(5), &rho).unwrap() - re(1.0)).norm() < 1e-12);

        let s = lower();
        let excited = ComplexMatrix::real_diag(&[0.0, 1.0]);
        assert_abs_diff_eq!(expectation(&(&s.adjoint() * &s), &excited).unwrap().re, 1.0);

        let a = ComplexMatrix::from_fn(3, 3, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { re(0.0) });
        let fock = ComplexMatrix::real_diag(&[0.7, 0.3, 0.0]);
        assert_abs_diff_eq!(expectation(&(&a.adjoint() * &a), &fock).unwrap().re, 0.3, epsilon = 1e-15);
        assert!(expectation(&a, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn layout_digits_round_trip() {
        let layout = HilbertLayout::donor_acceptor_cavity(3);
        assert_eq!(layout.total_dim(), 16);
        for i in 0..16 {
            assert_eq!(layout.index(&layout.digits(i)), i);
        }
        assert_eq!(layout.digits(layout.index(&[1, 0, 2])), vec![1, 0, 2]);
        assert_eq!(layout.excitations(layout.index(&[1, 1, 3])), 5);
        assert!(HilbertLayout::new(vec![2, 0]).is_err());
    }

    proptest! {
        #[test]
        fn kron_is_associative(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 2, 3);
            let b = random_matrix(&mut rng, 3, 2);
            let c = random_matrix(&mut rng, 2, 2);
            let left = kron(&kron(&a, &b), &c);
            let right = kron(&a, &kron(&b, &c));
            prop_assert_eq!((left.rows(), left.cols()), (right.rows(), right.cols()));
            prop_assert!((&left - &right).max_abs() < 1e-14);
        }

        #[test]
        fn partial_trace_preserves_trace(seed in 0u64..1000, keep in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layout = HilbertLayout::new(vec![2, 2, 3]).unwrap();
            let rho = random_state(&mut rng, 12);
            let red = partial_trace(&rho, &layout, &[keep]).unwrap();
            prop_assert!((red.trace() - rho.trace()).norm() < 1e-12);
            prop_assert!(red.hermitian_deviation() < 1e-12);
        }

        #[test]
        fn hermitian_eigenvectors_are_orthonormal(seed in 0u64..1000, n in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, n);
            let e = eig_hermitian(&a).unwrap();
            let gram = &e.vectors.adjoint() * &e.vectors;
            prop_assert!((&gram - &ComplexMatrix::identity(n)).max_abs() < 1e-9);
            for (k, lam) in e.values.iter().enumerate() {
                let v: Vec<C64> = (0..n).map(|i| e.vectors[(i, k)]).collect();
                let r: f64 = a.apply(&v).iter().zip(&v).map(|(x, y)| (x - y * lam).norm_sqr()).sum::<f64>().sqrt();
                prop_assert!(r < 1e-9);
            }
        }
    }
}
