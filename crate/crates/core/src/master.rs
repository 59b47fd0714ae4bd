//! Liouvillian assembly, steady states, time evolution and spectral
//! diagnostics of the full master equation.
//!
//! Density matrices are vectorized row by row: entry `ρ[i][k]` sits at index
//! `i·d + k`. In this convention `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
//!
//! The Liouvillian is stored sparse. Every operator built by
//! [`crate::model`] either conserves the total excitation number or, under a
//! coherent drive, changes it by one. Grouping the entries of ρ by their
//! coherence order `q = N(bra) − N(ket)` then makes the Liouvillian block
//! diagonal or block tridiagonal, and the steady state is found from small
//! dense blocks. Operators without this structure fall back to one dense LU.

use std::collections::BTreeMap;

use faer::Mat;

use crate::algebra::{eig_general, eig_hermitian, partial_trace, re, CheckedLu, ComplexMatrix, HilbertLayout, C64};
use crate::error::{Error, Result};
use crate::model::DissipatorList;
use crate::tolerances;

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().expect("nonempty") += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != C64::default() {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, col_idx: keep_cols, values: keep_vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of one row as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        (0..self.n).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Dense copy.
    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Dense sub-block on the given rows and columns.
    fn block(&self, rows: &[usize], cols: &[usize], scratch: &mut [usize]) -> Mat<C64> {
        for (p, &c) in cols.iter().enumerate() {
            scratch[c] = p;
        }
        let mut m = Mat::<C64>::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                let p = scratch[c];
                if p < cols.len() && cols[p] == c {
                    m[(i, p)] = v;
                }
            }
        }
        for &c in cols {
            scratch[c] = usize::MAX;
        }
        m
    }
}

/// Block structure of a Liouvillian under the coherence-order grading.
#[derive(Clone, Debug)]
pub enum SectorStructure {
    /// No entry couples different coherence orders.
    Conserving,
    /// Entries couple only neighbouring coherence orders.
    Tridiagonal,
    /// Anything else.
    General,
}

/// Generator of the master equation on row-vectorized density matrices.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    matrix: SparseMatrix,
    layout: HilbertLayout,
    sectors: BTreeMap<i64, Vec<usize>>,
    structure: SectorStructure,
}

fn nonzeros(m: &ComplexMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m[(i, j)];
            if v != C64::default() {
                out.push((i, j, v));
            }
        }
    }
    out
}

fn identity_nonzeros(d: usize) -> Vec<(usize, usize, C64)> {
    (0..d).map(|i| (i, i, re(1.0))).collect()
}

/// Appends `coef · (A ⊗ B)` given the nonzero entries of `A` and `B`.
fn push_kron(
    out: &mut Vec<(usize, usize, C64)>,
    d: usize,
    coef: C64,
    a: &[(usize, usize, C64)],
    b: &[(usize, usize, C64)],
) {
    for &(i, j, x) in a {
        for &(k, l, y) in b {
            out.push((i * d + k, j * d + l, coef * x * y));
        }
    }
}

/// Appends the superoperators of `X ρ` and `ρ Y`.
fn push_left_right(
    out: &mut Vec<(usize, usize, C64)>,
    d: usize,
    left: (C64, &ComplexMatrix),
    right: (C64, &ComplexMatrix),
) {
    let id = identity_nonzeros(d);
    push_kron(out, d, left.0, &nonzeros(left.1), &id);
    push_kron(out, d, right.0, &id, &nonzeros(&right.1.transpose()));
}

/// Builds `L = −i(H ⊗ I − I ⊗ Hᵀ) + Σ_k r_k D[O_k] + collective cross term`.
pub fn liouvillian(h: &ComplexMatrix, diss: &DissipatorList, layout: &HilbertLayout) -> Result<Liouvillian> {
    let d = layout.total_dim();
    let check = |m: &ComplexMatrix| {
        if m.rows() != d || m.cols() != d {
            Err(Error::DimensionMismatch { expected: d, found: m.rows().max(m.cols()) })
        } else {
            Ok(())
        }
    };
    check(h)?;
    let mut t = Vec::new();
    let i = C64::new(0.0, 1.0);
    push_left_right(&mut t, d, (-i, h), (i, h));
    for entry in &diss.entries {
        check(&entry.op)?;
        let o = &entry.op;
        let odo = &o.adjoint() * o;
        push_kron(&mut t, d, re(entry.rate), &nonzeros(o), &nonzeros(&o.conj()));
        push_left_right(&mut t, d, (re(-0.5 * entry.rate), &odo), (re(-0.5 * entry.rate), &odo));
    }
    if let Some(c) = &diss.collective {
        check(&c.sigma_d)?;
        check(&c.sigma_a)?;
        let g = re(c.gamma_bar);
        push_kron(&mut t, d, g, &nonzeros(&c.sigma_d), &nonzeros(&c.sigma_a.conj()));
        push_kron(&mut t, d, g, &nonzeros(&c.sigma_a), &nonzeros(&c.sigma_d.conj()));
        let m = &(&c.sigma_a.adjoint() * &c.sigma_d) + &(&c.sigma_d.adjoint() * &c.sigma_a);
        push_left_right(&mut t, d, (-0.5 * g, &m), (-0.5 * g, &m));
    }
    Ok(Liouvillian::from_sparse(SparseMatrix::from_triplets(d * d, t), layout.clone()))
}

impl Liouvillian {
    /// Wraps an assembled generator and classifies its block structure.
    pub fn from_sparse(matrix: SparseMatrix, layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        assert_eq!(matrix.dim(), d * d, "generator must act on d^2-dimensional vectors");
        let exc: Vec<i64> = (0..d).map(|i| layout.excitations(i) as i64).collect();
        let order = |r: usize| exc[r / d] - exc[r % d];
        let mut sectors: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for r in 0..d * d {
            sectors.entry(order(r)).or_default().push(r);
        }
        let mut max_jump = 0;
        for r in 0..d * d {
            for (c, _) in matrix.row(r) {
                max_jump = max_jump.max((order(r) - order(c)).abs());
            }
        }
        let structure = match max_jump {
            0 => SectorStructure::Conserving,
            1 => SectorStructure::Tridiagonal,
            _ => SectorStructure::General,
        };
        Self { matrix, layout, sectors, structure }
    }

    /// Hilbert-space dimension `d`; the generator acts on `d²` entries.
    pub fn hilbert_dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn sparse(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn structure(&self) -> &SectorStructure {
        &self.structure
    }

    /// Dense copy of the generator.
    pub fn to_dense(&self) -> ComplexMatrix {
        self.matrix.to_dense()
    }

    /// `L vec(ρ)`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.apply(x)
    }

    /// `L` applied to a matrix, returned as a matrix.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let d = self.hilbert_dim();
        ComplexMatrix::from_vec(d, d, self.apply(rho.as_slice())).expect("shape is d x d")
    }

    /// `max_c |Σ_i L[(i,i), c]|`, which vanishes for a trace-preserving generator.
    pub fn trace_residual(&self) -> f64 {
        let d = self.hilbert_dim();
        let mut sums = vec![C64::default(); d * d];
        for i in 0..d {
            for (c, v) in self.matrix.row(i * d + i) {
                sums[c] += v;
            }
        }
        sums.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// All eigenvalues. Blocks are diagonalized separately when the generator
    /// conserves coherence order.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        match self.structure {
            SectorStructure::Conserving => {
                let mut scratch = vec![usize::MAX; self.matrix.dim()];
                let mut out = Vec::with_capacity(self.matrix.dim());
                for idx in self.sectors.values() {
                    let block = self.matrix.block(idx, idx, &mut scratch);
                    out.extend(eig_general(&ComplexMatrix::from_faer(block.as_ref()))?);
                }
                Ok(out)
            }
            _ => eig_general(&self.to_dense()),
        }
    }
}

/// Physical state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    layout: HilbertLayout,
}

impl DensityMatrix {
    /// Validates and Hermitizes a candidate state.
    pub fn new(matrix: ComplexMatrix, layout: HilbertLayout) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.rows().max(matrix.cols()) });
        }
        let dev = matrix.hermitian_deviation();
        if !(dev < tolerances::DENSITY_HERMITIAN) {
            return Err(Error::NonPhysicalState { reason: format!("Hermiticity violated by {dev:.3e}") });
        }
        let herm = (&matrix + &matrix.adjoint()).scale(re(0.5));
        let tr = herm.trace().re;
        if !((tr - 1.0).abs() < tolerances::TRACE) {
            return Err(Error::NonPhysicalState { reason: format!("trace is {tr}") });
        }
        let min_eig = eig_hermitian(&herm)?.values[0];
        if !(min_eig > tolerances::POSITIVITY) {
            return Err(Error::NonPhysicalState { reason: format!("minimum eigenvalue {min_eig:.3e}") });
        }
        Ok(Self { matrix: herm, layout })
    }

    /// Pure state `|ψ⟩⟨ψ|` from a normalized vector.
    pub fn pure(psi: &[C64], layout: HilbertLayout) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi, psi), layout)
    }

    /// Basis state with the given local levels.
    pub fn basis(digits: &[usize], layout: HilbertLayout) -> Result<Self> {
        let mut psi = vec![C64::default(); layout.total_dim()];
        psi[layout.index(digits)] = re(1.0);
        Self::pure(&psi, layout)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    /// `Tr(O ρ)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<C64> {
        crate::algebra::expectation(op, &self.matrix)
    }

    /// Reduced state on the kept subsystems.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let reduced = partial_trace(&self.matrix, &self.layout, keep)?;
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let dims = self.layout.subsystem_dims();
        let layout = HilbertLayout::new(kept.iter().map(|&k| dims[k]).collect())?;
        DensityMatrix::new(reduced, layout)
    }

    /// Trace distance `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch { expected: self.layout.total_dim(), found: other.layout.total_dim() });
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * eig_hermitian(&diff)?.values.iter().map(|v| v.abs()).sum::<f64>())
    }
}

/// Solves `L x = 0` with `Tr ρ = 1` by replacing the row of `ρ[0][0]` with the
/// trace functional.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let x = match l.structure {
        SectorStructure::Conserving => solve_by_sectors(l, false)?,
        SectorStructure::Tridiagonal => match solve_by_sectors(l, true) {
            Ok(x) => x,
            Err(Error::NonUniqueSteadyState { .. }) | Err(Error::Singular { .. }) => solve_dense(l)?,
            Err(e) => return Err(e),
        },
        SectorStructure::General => solve_dense(l)?,
    };
    let d = l.hilbert_dim();
    let rho = ComplexMatrix::from_vec(d, d, x)?;
    DensityMatrix::new(hermitian_part(&rho), l.layout.clone())
}

/// `(ρ + ρ†)/2`. The anti-Hermitian part of a solved steady state is round-off.
fn hermitian_part(rho: &ComplexMatrix) -> ComplexMatrix {
    (rho + &rho.adjoint()).scale(re(0.5))
}

/// [`steady_state`] preceded by a full spectral check: reports
/// [`Error::Unstable`] if any eigenvalue has a positive real part and
/// [`Error::NonUniqueSteadyState`] if more than one eigenvalue has a
/// vanishing real part.
pub fn steady_state_checked(l: &Liouvillian) -> Result<DensityMatrix> {
    let ev = l.eigenvalues()?;
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let thresh = tolerances::ZERO_MODE * scale;
    let max_real = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_real > thresh {
        return Err(Error::Unstable { max_real });
    }
    let mut reals: Vec<f64> = ev.iter().map(|z| z.re.abs()).collect();
    reals.sort_by(f64::total_cmp);
    if reals.len() > 1 && reals[1] <= thresh {
        return Err(Error::NonUniqueSteadyState { pivot_ratio: reals[1] / scale });
    }
    steady_state(l)
}

/// Replaces the row of `ρ[0][0]` inside a sector-0 block with the trace
/// functional. `idx` lists the global indices of the block.
fn impose_trace(block: &mut Mat<C64>, idx: &[usize], d: usize) -> usize {
    let anchor = idx.iter().position(|&r| r == 0).expect("rho[0][0] lies in sector 0");
    for (p, &r) in idx.iter().enumerate() {
        block[(anchor, p)] = if r / d == r % d { re(1.0) } else { C64::default() };
    }
    anchor
}

fn nonunique(lu: &CheckedLu) -> Error {
    Error::NonUniqueSteadyState { pivot_ratio: lu.pivot_ratio() }
}

/// Relative residual `‖L x‖ / (‖L‖ ‖x‖)` with the Gershgorin bound as `‖L‖`.
fn generator_residual(l: &Liouvillian, x: &[C64]) -> f64 {
    let lx = l.apply(x);
    let num = lx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let den = l.matrix.gershgorin_radius() * x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Solves `a x = b` with the factorization `lu` of `a`, followed by
/// iterative refinement steps on the residual.
fn refine(lu: &CheckedLu, a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let mut x = lu.solve(b.as_ref());
    for _ in 0..REFINEMENT_STEPS {
        let r = b - a * &x;
        x += lu.solve(r.as_ref());
    }
    x
}

const REFINEMENT_STEPS: usize = 2;

fn solve_by_sectors(l: &Liouvillian, tridiagonal: bool) -> Result<Vec<C64>> {
    let d = l.hilbert_dim();
    let n = d * d;
    let m = &l.matrix;
    let mut scratch = vec![usize::MAX; n];
    let idx0 = &l.sectors[&0];
    let mut s0 = m.block(idx0, idx0, &mut scratch);

    // Eliminate the outer sectors inward on both sides of q = 0. For each
    // side, entry `j` of the chain holds the LU of the Schur complement of
    // sector ±(j+1) and the block coupling it to its inner neighbour.
    let mut chains: Vec<Vec<(CheckedLu, Mat<C64>)>> = Vec::new();
    if tridiagonal {
        for sign in [1i64, -1] {
            let depth = l.sectors.keys().map(|&q| q * sign).max().unwrap_or(0).max(0);
            let mut lus: Vec<CheckedLu> = Vec::new();
            let mut from_inner: Vec<Mat<C64>> = Vec::new();
            for level in (1..=depth).rev() {
                let q = level * sign;
                let idx = &l.sectors[&q];
                let mut s = m.block(idx, idx, &mut scratch);
                if level < depth {
                    let up = m.block(idx, &l.sectors[&(q + sign)], &mut scratch);
                    let lu_out = lus.last().expect("outer level factorized");
                    let down = from_inner.last().expect("outer level coupling");
                    s -= &up * lu_out.solve(down.as_ref());
                }
                let lu = CheckedLu::new(&s);
                if lu.is_singular() {
                    return Err(nonunique(&lu));
                }
                lus.push(lu);
                from_inner.push(m.block(idx, &l.sectors[&(q - sign)], &mut scratch));
            }
            lus.reverse();
            from_inner.reverse();
            let paired: Vec<(CheckedLu, Mat<C64>)> = lus.into_iter().zip(from_inner).collect();
            if let Some((lu1, down)) = paired.first() {
                let idx1 = &l.sectors[&sign];
                let up = m.block(idx0, idx1, &mut scratch);
                s0 -= &up * lu1.solve(down.as_ref());
            }
            chains.push(paired);
        }
    }

    let anchor = impose_trace(&mut s0, idx0, d);
    let lu0 = CheckedLu::new(&s0);
    if lu0.is_singular() {
        return Err(nonunique(&lu0));
    }
    let mut rhs = Mat::<C64>::zeros(idx0.len(), 1);
    rhs[(anchor, 0)] = re(1.0);
    let x0 = refine(&lu0, &s0, &rhs);

    let mut x = vec![C64::default(); n];
    for (p, &r) in idx0.iter().enumerate() {
        x[r] = x0[(p, 0)];
    }
    for (side, chain) in chains.iter().enumerate() {
        let sign = if side == 0 { 1 } else { -1 };
        let mut prev = x0.clone();
        for (level, (lu, from_inner)) in chain.iter().enumerate() {
            let q = (level as i64 + 1) * sign;
            let xk = lu.solve((from_inner * &prev).as_ref()) * faer::Scale(re(-1.0));
            for (p, &r) in l.sectors[&q].iter().enumerate() {
                x[r] = xk[(p, 0)];
            }
            prev = xk;
        }
    }
    if !(generator_residual(l, &x) < tolerances::SOLVE_RESIDUAL) {
        return Err(Error::Singular { pivot_ratio: lu0.pivot_ratio() });
    }
    Ok(x)
}

fn solve_dense(l: &Liouvillian) -> Result<Vec<C64>> {
    let d = l.hilbert_dim();
    let n = d * d;
    let all: Vec<usize> = (0..n).collect();
    let mut scratch = vec![usize::MAX; n];
    let mut a = l.matrix.block(&all, &all, &mut scratch);
    let anchor = impose_trace(&mut a, &all, d);
    let lu = CheckedLu::new(&a);
    if lu.is_singular() {
        return Err(nonunique(&lu));
    }
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(anchor, 0)] = re(1.0);
    let x = refine(&lu, &a, &rhs);
    let x: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    if !(generator_residual(l, &x) < tolerances::SOLVE_RESIDUAL) {
        return Err(nonunique(&lu));
    }
    Ok(x)
}

/// Snapshots of a time evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// Fixed-step fourth-order Runge-Kutta integration of `dρ/dt = L ρ`.
///
/// Every step is renormalized to unit trace. The step must satisfy
/// `dt · r < 1` where `r` is the Gershgorin bound on the spectral radius.
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, t_final: f64, dt: f64) -> Result<Trajectory> {
    if rho0.layout != l.layout {
        return Err(Error::DimensionMismatch { expected: l.hilbert_dim(), found: rho0.layout.total_dim() });
    }
    if !(dt > 0.0 && t_final >= 0.0) {
        return Err(Error::StepUnstable { reason: format!("need dt > 0 and t_final >= 0, got dt = {dt}, t_final = {t_final}") });
    }
    let radius = l.matrix.gershgorin_radius();
    if dt * radius >= 1.0 {
        return Err(Error::StepUnstable { reason: format!("dt = {dt} exceeds 1 / spectral bound {radius:.3e}") });
    }
    let d = l.hilbert_dim();
    let steps = (t_final / dt).round() as usize;
    let mut x = rho0.matrix.as_slice().to_vec();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let axpy = |x: &[C64], k: &[C64], h: f64| -> Vec<C64> { x.iter().zip(k).map(|(a, b)| a + b * h).collect() };
    for step in 1..=steps {
        let k1 = l.apply(&x);
        let k2 = l.apply(&axpy(&x, &k1, dt / 2.0));
        let k3 = l.apply(&axpy(&x, &k2, dt / 2.0));
        let k4 = l.apply(&axpy(&x, &k3, dt));
        for i in 0..x.len() {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        let tr: C64 = (0..d).map(|i| x[i * d + i]).sum();
        if !((tr - re(1.0)).norm() < tolerances::EVOLVE_TRACE_DRIFT) {
            return Err(Error::StepUnstable { reason: format!("trace drifted to {tr} at step {step}") });
        }
        for v in x.iter_mut() {
            *v /= tr;
        }
        let m = ComplexMatrix::from_vec(d, d, x.clone())?;
        let state = DensityMatrix::new(m, l.layout.clone())
            .map_err(|e| Error::StepUnstable { reason: format!("step {step}: {e}") })?;
        times.push(step as f64 * dt);
        states.push(state);
    }
    Ok(Trajectory { times, states })
}

/// Relaxation gap `−max Re λ` over the non-zero eigenvalues of `L`.
pub fn stability_margin(l: &Liouvillian) -> Result<f64> {
    let ev = l.eigenvalues()?;
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_real = ev
        .iter()
        .filter(|z| z.norm() > tolerances::ZERO_EIGENVALUE * scale)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(if max_real.is_finite() { -max_real } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::kron;
    use crate::geometry::EmitterRates;
    use crate::model::{
        build_dissipators, build_hamiltonian, build_operators, qubit_lowering, Dissipator, PumpSpec, SystemSpec,
    };
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn generator(spec: &SystemSpec) -> Liouvillian {
        let ops = build_operators(spec);
        let h = build_hamiltonian(spec, &ops);
        liouvillian(&h, &build_dissipators(spec, &ops).unwrap(), &ops.layout).unwrap()
    }

    fn qubit(decay: f64, pump: f64) -> Liouvillian {
        let s = qubit_lowering();
        let entries = vec![
            Dissipator { label: "decay", rate: decay, op: s.clone() },
            Dissipator { label: "pump", rate: pump, op: s.adjoint() },
        ];
        let layout = HilbertLayout::new(vec![2]).unwrap();
        liouvillian(&ComplexMatrix::zeros(2, 2), &DissipatorList { entries, collective: None }, &layout).unwrap()
    }

    fn sorted_by_real(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn triplets_are_coalesced() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, re(1.0)), (0, 1, re(2.0)), (1, 0, re(1.0)), (1, 0, re(-1.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.apply(&[re(0.0), re(1.0)]), vec![re(3.0), re(0.0)]);
        assert_eq!(m.gershgorin_radius(), 3.0);
    }

    #[test]
    fn decaying_qubit_spectrum() {
        let ev = sorted_by_real(qubit(2.0, 0.0).eigenvalues().unwrap());
        for (z, want) in ev.iter().zip([-2.0, -1.0, -1.0, 0.0]) {
            assert_abs_diff_eq!(z.re, want, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(stability_margin(&qubit(2.0, 0.0)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pumped_qubit_population() {
        let rho = steady_state(&qubit(1.0, 0.3)).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.3 / 1.3, epsilon = 1e-12);
    }

    #[test]
    fn model_generator_preserves_trace() {
        let spec = SystemSpec {
            delta_da: 2.0,
            omega: 1.5,
            gamma_bar: 0.4,
            g_d: 0.7,
            g_a: 1.1,
            rates: EmitterRates { gamma_phi: 0.3, gamma_prime: 0.2, ..EmitterRates::default() },
            n_cav: 2,
            ..SystemSpec::default()
        };
        let l = generator(&spec);
        assert!(matches!(l.structure(), SectorStructure::Conserving));
        assert!(l.trace_residual() < tolerances::TRACE_PRESERVATION);
        let driven = generator(&SystemSpec { pump: PumpSpec::coherent(0.2, 0.5), ..spec });
        assert!(matches!(driven.structure(), SectorStructure::Tridiagonal));
        assert!(driven.trace_residual() < tolerances::TRACE_PRESERVATION);
    }

    fn dicke(gamma_bar: f64) -> SystemSpec {
        SystemSpec { gamma_bar, pump: PumpSpec::none(), n_cav: 1, ..SystemSpec::default() }
    }

    #[test]
    fn antisymmetric_state_is_dark_for_maximal_mutual_decay() {
        let spec = dicke(1.0);
        let l = generator(&spec);
        let layout = spec.layout();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![C64::default(); layout.total_dim()];
        psi[layout.index(&[1, 0, 0])] = re(s);
        psi[layout.index(&[0, 1, 0])] = re(-s);
        let dark = DensityMatrix::pure(&psi, layout).unwrap();
        assert!(l.apply_matrix(dark.matrix()).max_abs() < 1e-14);
        assert!(matches!(steady_state_checked(&l), Err(Error::NonUniqueSteadyState { .. })));
    }

    #[test]
    fn unpumped_system_relaxes_to_ground() {
        let spec = SystemSpec { omega: 2.0, g_d: 1.0, g_a: 0.5, ..dicke(0.5) };
        let rho = steady_state_checked(&generator(&spec)).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn margin_tracks_the_subradiant_rate() {
        let margin = stability_margin(&generator(&dicke(0.9))).unwrap();
        assert_abs_diff_eq!(margin, 0.05, epsilon = 1e-10);
    }

    #[test]
    fn strong_pump_widens_the_gap() {
        let pumped = SystemSpec { pump: PumpSpec::incoherent(0.5), ..dicke(0.9) };
        let margin = stability_margin(&generator(&pumped)).unwrap();
        assert_abs_diff_eq!(margin, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn evolution_without_dynamics_is_constant() {
        let layout = HilbertLayout::new(vec![2]).unwrap();
        let l = liouvillian(&ComplexMatrix::zeros(2, 2), &DissipatorList::default(), &layout).unwrap();
        let m = ComplexMatrix::from_vec(2, 2, vec![re(0.6), C64::new(0.1, 0.2), C64::new(0.1, -0.2), re(0.4)]).unwrap();
        let rho = DensityMatrix::new(m, layout).unwrap();
        let traj = evolve(&rho, &l, 1.0, 0.1).unwrap();
        assert_eq!(traj.times.len(), 11);
        assert!(traj.states.iter().all(|s| s == &rho));
    }

    #[test]
    fn excited_qubit_decays_exponentially() {
        let l = qubit(1.0, 0.0);
        let rho = DensityMatrix::basis(&[1], l.layout().clone()).unwrap();
        let traj = evolve(&rho, &l, 2.0, 0.01).unwrap();
        let last = traj.states.last().unwrap();
        assert_abs_diff_eq!(last.matrix()[(1, 1)].re, (-2.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let l = qubit(1.0, 0.0);
        let rho = DensityMatrix::basis(&[1], l.layout().clone()).unwrap();
        assert!(matches!(evolve(&rho, &l, 1.0, 5.0), Err(Error::StepUnstable { .. })));
    }

    #[test]
    fn long_time_evolution_reaches_the_steady_state() {
        let spec = SystemSpec {
            delta_da: 1.0,
            omega: 1.0,
            g_d: 0.8,
            g_a: 0.6,
            kappa: 2.0,
            pump: PumpSpec::incoherent(0.5),
            n_cav: 1,
            ..SystemSpec::default()
        };
        let l = generator(&spec);
        let rho0 = DensityMatrix::basis(&[0, 0, 0], spec.layout()).unwrap();
        let dt = 0.5 / l.sparse().gershgorin_radius();
        let traj = evolve(&rho0, &l, 60.0, dt).unwrap();
        let ss = steady_state(&l).unwrap();
        assert!(traj.states.last().unwrap().trace_distance(&ss).unwrap() < 1e-8);
    }

    #[test]
    fn uncoupled_emitters_factorize() {
        let spec = SystemSpec { pump: PumpSpec::incoherent(0.4), n_cav: 2, ..SystemSpec::default() };
        let rho = steady_state(&generator(&spec)).unwrap();
        let p = 0.4 / 1.4;
        let donor = ComplexMatrix::real_diag(&[1.0 - p, p]);
        let rest = ComplexMatrix::real_diag(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((rho.matrix() - &kron(&donor, &rest)).max_abs() < 1e-12);
    }

    #[test]
    fn tridiagonal_elimination_matches_dense_solve() {
        let spec = SystemSpec {
            delta_da: 3.0,
            delta_c: -1.0,
            omega: 2.0,
            gamma_bar: 0.3,
            g_d: 1.2,
            g_a: 0.9,
            kappa: 0.7,
            rates: EmitterRates { gamma_phi: 0.2, ..EmitterRates::default() },
            pump: PumpSpec::coherent(0.8, 1.5),
            n_cav: 3,
        };
        let l = generator(&spec);
        let fast = solve_by_sectors(&l, true).unwrap();
        let dense = solve_dense(&l).unwrap();
        let diff = fast.iter().zip(&dense).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    fn physical_spec() -> impl Strategy<Value = SystemSpec> {
        (
            (-20.0f64..20.0, -20.0f64..20.0, -10.0f64..10.0, -0.9f64..0.9),
            (0.0f64..1.0, 0.0f64..1.0, 0.0f64..5.0, 0.0f64..5.0, 0.05f64..5.0),
            (0.01f64..1.0, 0.01f64..2.0, -10.0f64..10.0, 1usize..4, prop::bool::ANY),
        )
            .prop_map(|((dd, dc, om, gb), (gp, gphi, gd, ga, kappa), (eta, gam, wl, n_cav, coherent))| SystemSpec {
                delta_da: dd,
                delta_c: dc,
                omega: om,
                gamma_bar: gb,
                rates: EmitterRates { gamma_prime: gp, gamma_phi: gphi, ..EmitterRates::default() },
                g_d: gd,
                g_a: ga,
                kappa,
                pump: if coherent { PumpSpec::coherent(eta, wl) } else { PumpSpec::incoherent(gam) },
                n_cav,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        #[test]
        fn steady_states_are_physical(spec in physical_spec()) {
            let l = generator(&spec);
            prop_assert!(l.trace_residual() < tolerances::TRACE_PRESERVATION);
            let rho = steady_state(&l).unwrap();
            let m = rho.matrix();
            prop_assert!((m.trace() - re(1.0)).norm() < tolerances::TRACE);
            prop_assert!(m.hermitian_deviation() < tolerances::DENSITY_HERMITIAN);
            let lowest = eig_hermitian(m).unwrap().values[0];
            prop_assert!(lowest > tolerances::POSITIVITY, "lowest eigenvalue {}", lowest);
            prop_assert!(l.apply_matrix(m).max_abs() < 1e-9 * l.sparse().gershgorin_radius());
        }
    }
}
