//! Joint spin ⊗ cavity Hilbert space and sparse operators on it.
//!
//! Basis ordering is spin-major: `index = spin_index * boson_dim + photon`,
//! where `spin_index` is the big-endian bit string over sites `1..=N` (site 1
//! is the most significant bit) and a set bit marks the excited state `|e⟩`.
//! Tracing out the cavity is therefore a sum over contiguous blocks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest atom count the builders accept; 2^N must stay addressable.
pub const MAX_ATOMS: usize = 24;

/// Hermiticity tolerance used by builders and [`SparseOperator::verify_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dimensions of the truncated joint space: `N` spins and Fock states `0..=N_ph`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertDims {
    n_atoms: usize,
    n_photon_max: usize,
}

impl HilbertDims {
    pub fn new(n_atoms: usize, n_photon_max: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::Domain("at least one atom is required".into()));
        }
        if n_atoms > MAX_ATOMS {
            return Err(Error::Resource(format!(
                "{n_atoms} atoms exceeds the supported maximum of {MAX_ATOMS}"
            )));
        }
        (1usize << n_atoms)
            .checked_mul(n_photon_max + 1)
            .ok_or_else(|| Error::Resource("joint dimension overflows usize".into()))?;
        Ok(Self {
            n_atoms,
            n_photon_max,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_photon_max(&self) -> usize {
        self.n_photon_max
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_atoms
    }

    pub fn boson_dim(&self) -> usize {
        self.n_photon_max + 1
    }

    pub fn total_dim(&self) -> usize {
        self.spin_dim() * self.boson_dim()
    }

    /// Joint index of `|spin_index⟩ ⊗ |photon⟩`.
    #[inline]
    pub fn index(&self, spin_index: usize, photon: usize) -> usize {
        spin_index * self.boson_dim() + photon
    }

    /// Inverse of [`HilbertDims::index`].
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.boson_dim(), index % self.boson_dim())
    }

    /// Bit mask of `site` (1-based) inside a spin index.
    #[inline]
    pub fn site_mask(&self, site: usize) -> usize {
        1 << (self.n_atoms - site)
    }

    /// Same atom count with only the vacuum Fock state: the spin sector alone.
    pub fn spin_only(&self) -> Self {
        Self {
            n_atoms: self.n_atoms,
            n_photon_max: 0,
        }
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_atoms {
            return Err(Error::Domain(format!(
                "site {site} outside 1..={}",
                self.n_atoms
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BosonKind {
    Annihilate,
    Create,
    Number,
}

/// Complex sparse matrix in CSR layout over a [`HilbertDims`] space.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dims: HilbertDims,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets<I>(dims: HilbertDims, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let n = dims.total_dim();
        let mut trips: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = trips.iter().find(|&&(r, c, _)| r >= n || c >= n) {
            return Err(Error::Domain(format!(
                "entry ({r}, {c}) outside dimension {n}"
            )));
        }
        trips.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut values: Vec<C64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        // Drop merged zeros.
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != ZERO {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            dims,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
            hermitian: false,
        })
    }

    pub fn zero(dims: HilbertDims) -> Self {
        Self {
            dims,
            row_ptr: vec![0; dims.total_dim() + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(dims: HilbertDims) -> Self {
        let n = dims.total_dim();
        Self {
            dims,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![ONE; n],
            hermitian: true,
        }
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether Hermiticity has been verified for this operator.
    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let (start, end) = (self.row_ptr[row], self.row_ptr[row + 1]);
        match self.col_idx[start..end].binary_search(&col) {
            Ok(k) => self.values[start + k],
            Err(_) => ZERO,
        }
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// Entrywise check `A[r,c] = conj(A[c,r])` within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.iter()
            .all(|(r, c, v)| (v - self.get(c, r).conj()).norm() <= tol)
    }

    /// Verifies Hermiticity and sets the flag, or fails with a contract error.
    pub fn verify_hermitian(mut self) -> Result<Self> {
        if !self.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::Contract("operator is not Hermitian".into()));
        }
        self.hermitian = true;
        Ok(self)
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    /// `y += alpha A x`.
    pub fn matvec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out += alpha * acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.matvec(x, &mut y);
        y
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out.hermitian = self.hermitian && factor.im == 0.0;
        if factor == ZERO {
            return Self::zero(self.dims);
        }
        out
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// `self + other`; the Hermitian flag survives when both carry it.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims, "dimension mismatch in add");
        let trips = self.iter().chain(other.iter());
        let mut out = Self::from_triplets(self.dims, trips).expect("entries already in range");
        out.hermitian = self.hermitian && other.hermitian;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_real(-1.0))
    }

    /// Sparse product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims, "dimension mismatch in mul");
        let n = self.dim();
        let mut acc = vec![ZERO; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut seen = vec![false; n];
        let mut trips = Vec::new();
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (mid, a) = (self.col_idx[k], self.values[k]);
                for m in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.col_idx[m];
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * other.values[m];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                trips.push((r, c, acc[c]));
                acc[c] = ZERO;
                seen[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.dims, trips).expect("entries already in range")
    }

    pub fn adjoint(&self) -> Self {
        let trips = self.iter().map(|(r, c, v)| (c, r, v.conj()));
        let mut out = Self::from_triplets(self.dims, trips).expect("entries already in range");
        out.hermitian = self.hermitian;
        out
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.mul(b).sub(&b.mul(a))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let mut cols = vec![0.0; self.dim()];
        for (_, c, v) in self.iter() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// True when every stored entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }
}

/// Normalized amplitude vector over the joint basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: HilbertDims,
    amplitudes: Vec<C64>,
}

/// Norm tolerance enforced on construction.
pub const STATE_NORM_TOL: f64 = 1e-10;

impl StateVector {
    pub fn new(dims: HilbertDims, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dims.total_dim() {
            return Err(Error::Domain(format!(
                "expected {} amplitudes, got {}",
                dims.total_dim(),
                amplitudes.len()
            )));
        }
        let state = Self { dims, amplitudes };
        let dev = (state.norm() - 1.0).abs();
        if dev > STATE_NORM_TOL {
            return Err(Error::Contract(format!(
                "state norm deviates from 1 by {dev:e}"
            )));
        }
        Ok(state)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(dims: HilbertDims, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(dims, amplitudes)
    }

    /// Product basis state `|spin_index⟩ ⊗ |photon⟩`.
    pub fn basis(dims: HilbertDims, spin_index: usize, photon: usize) -> Result<Self> {
        if spin_index >= dims.spin_dim() || photon > dims.n_photon_max() {
            return Err(Error::Domain(format!(
                "basis state ({spin_index}, {photon}) outside the truncated space"
            )));
        }
        let mut amps = vec![ZERO; dims.total_dim()];
        amps[dims.index(spin_index, photon)] = ONE;
        Ok(Self {
            dims,
            amplitudes: amps,
        })
    }

    /// Wraps propagated amplitudes without the construction norm check; the
    /// propagators track drift themselves.
    pub(crate) fn from_propagated(dims: HilbertDims, amplitudes: Vec<C64>) -> Self {
        Self { dims, amplitudes }
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn amplitude(&self, spin_index: usize, photon: usize) -> C64 {
        self.amplitudes[self.dims.index(spin_index, photon)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `1 − |⟨self|other⟩|² / (‖self‖² ‖other‖²)`; the norms absorb the
    /// roundoff-level drift of propagated states.
    pub fn infidelity(&self, other: &Self) -> f64 {
        let scale = (self.norm() * other.norm()).powi(2);
        (1.0 - self.inner(other).norm_sqr() / scale).max(0.0)
    }
}

fn local_matrix(axis: PauliAxis) -> [[C64; 2]; 2] {
    // Indexed [out][in] with 0 = |g⟩, 1 = |e⟩.
    let i = C64::new(0.0, 1.0);
    match axis {
        PauliAxis::X => [[ZERO, ONE], [ONE, ZERO]],
        PauliAxis::Y => [[ZERO, i], [-i, ZERO]],
        PauliAxis::Z => [[-ONE, ZERO], [ZERO, ONE]],
        PauliAxis::Plus => [[ZERO, ZERO], [ONE, ZERO]],
        PauliAxis::Minus => [[ZERO, ONE], [ZERO, ZERO]],
    }
}

/// `σ_site^axis ⊗ 1_cavity`, with `site` in `1..=N`.
pub fn build_pauli(site: usize, axis: PauliAxis, dims: HilbertDims) -> Result<SparseOperator> {
    dims.check_site(site)?;
    let m = local_matrix(axis);
    let mask = dims.site_mask(site);
    let nb = dims.boson_dim();
    let mut trips = Vec::with_capacity(dims.total_dim());
    for s in 0..dims.spin_dim() {
        let bit_in = usize::from(s & mask != 0);
        for (bit_out, row) in m.iter().enumerate() {
            let v = row[bit_in];
            if v == ZERO {
                continue;
            }
            let s_out = if bit_out == 1 { s | mask } else { s & !mask };
            for n in 0..nb {
                trips.push((dims.index(s_out, n), dims.index(s, n), v));
            }
        }
    }
    let mut op = SparseOperator::from_triplets(dims, trips)?;
    op.hermitian = matches!(axis, PauliAxis::X | PauliAxis::Y | PauliAxis::Z);
    Ok(op)
}

/// Collective spin `J_axis = ½ Σ_i σ_i^axis ⊗ 1_cavity`.
pub fn build_collective_spin(axis: SpinAxis, dims: HilbertDims) -> SparseOperator {
    let pauli = match axis {
        SpinAxis::X => PauliAxis::X,
        SpinAxis::Y => PauliAxis::Y,
        SpinAxis::Z => PauliAxis::Z,
    };
    let mut acc = SparseOperator::zero(dims);
    for site in 1..=dims.n_atoms() {
        let s = build_pauli(site, pauli, dims).expect("site in range");
        acc = acc.add(&s);
    }
    acc.scale_real(0.5)
}

/// Truncated cavity ladder or number operator, tensored with the spin identity.
/// The creation operator maps `|N_ph⟩` to zero.
pub fn build_boson(kind: BosonKind, dims: HilbertDims) -> SparseOperator {
    let nmax = dims.n_photon_max();
    let mut trips = Vec::new();
    for s in 0..dims.spin_dim() {
        for n in 0..=nmax {
            match kind {
                BosonKind::Annihilate if n > 0 => {
                    trips.push((
                        dims.index(s, n - 1),
                        dims.index(s, n),
                        C64::new((n as f64).sqrt(), 0.0),
                    ));
                }
                BosonKind::Create if n < nmax => {
                    trips.push((
                        dims.index(s, n + 1),
                        dims.index(s, n),
                        C64::new(((n + 1) as f64).sqrt(), 0.0),
                    ));
                }
                BosonKind::Number if n > 0 => {
                    trips.push((dims.index(s, n), dims.index(s, n), C64::new(n as f64, 0.0)));
                }
                _ => {}
            }
        }
    }
    let mut op = SparseOperator::from_triplets(dims, trips).expect("entries in range");
    op.hermitian = kind == BosonKind::Number;
    op
}

/// `⟨ψ|A|ψ⟩` for Hermitian `A`.
pub fn expectation(state: &StateVector, op: &SparseOperator) -> Result<f64> {
    if state.dims() != op.dims() {
        return Err(Error::Contract(
            "state and operator dimensions differ".into(),
        ));
    }
    if !op.is_flagged_hermitian() && !op.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::Contract(
            "expectation requires a Hermitian operator".into(),
        ));
    }
    let psi = state.amplitudes();
    let mut acc = ZERO;
    for r in 0..op.dim() {
        let mut row = ZERO;
        for k in op.row_ptr[r]..op.row_ptr[r + 1] {
            row += op.values[k] * psi[op.col_idx[k]];
        }
        acc += psi[r].conj() * row;
    }
    if acc.im.abs() > 1e-8 {
        return Err(Error::Numerical(format!(
            "expectation has imaginary residue {:e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Reduced density matrix of the spin register, `ρ_b = Tr_cavity |ψ⟩⟨ψ|`.
pub fn partial_trace_spin(state: &StateVector) -> Result<DMatrix<C64>> {
    let dev = (state.norm() - 1.0).abs();
    if dev > 1e-8 {
        return Err(Error::Contract(format!(
            "state norm deviates from 1 by {dev:e}"
        )));
    }
    let dims = state.dims();
    let (ns, nb) = (dims.spin_dim(), dims.boson_dim());
    let psi = state.amplitudes();
    let mut rho = DMatrix::from_element(ns, ns, ZERO);
    for r in 0..ns {
        let block_r = &psi[r * nb..(r + 1) * nb];
        for c in r..ns {
            let block_c = &psi[c * nb..(c + 1) * nb];
            let v: C64 = block_r.iter().zip(block_c).map(|(a, b)| a * b.conj()).sum();
            rho[(r, c)] = v;
            rho[(c, r)] = v.conj();
        }
    }
    Ok(rho)
}
