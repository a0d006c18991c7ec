//! Truncated transmon ⊗ oscillator Hilbert space, operators and the
//! excitation-number block structure of the coupled Hamiltonian.
//!
//! The product basis is ordered by photon number first, then transmon level:
//! `index(x, n) = n · L + level(x)`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::params::SystemParams;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    G,
    E,
    F,
    H,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::G, Level::E, Level::F, Level::H];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Level::G => 'g',
            Level::E => 'e',
            Level::F => 'f',
            Level::H => 'h',
        };
        write!(f, "{c}")
    }
}

/// Label of a product basis state |x n⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub level: Level,
    pub n: usize,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}{}⟩", self.level, self.n)
    }
}

/// Which space an [`OperatorMatrix`] acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Transmon factor only, with the given number of levels.
    Transmon { levels: usize },
    /// Oscillator factor only, Fock states `0..=n_max`.
    Oscillator { n_max: usize },
    /// Full product space.
    Product { levels: usize, n_max: usize },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::Transmon { levels } => levels,
            Basis::Oscillator { n_max } => n_max + 1,
            Basis::Product { levels, n_max } => levels * (n_max + 1),
        }
    }

    /// Product-space labels in global order. Factor bases label the missing
    /// factor with `g` or photon number 0.
    pub fn labels(&self) -> Vec<BasisLabel> {
        match *self {
            Basis::Transmon { levels } => (0..levels)
                .map(|x| BasisLabel { level: Level::ALL[x], n: 0 })
                .collect(),
            Basis::Oscillator { n_max } => (0..=n_max).map(|n| BasisLabel { level: Level::G, n }).collect(),
            Basis::Product { levels, n_max } => (0..=n_max)
                .flat_map(|n| (0..levels).map(move |x| BasisLabel { level: Level::ALL[x], n }))
                .collect(),
        }
    }

    /// Index of |x n⟩ in a product basis.
    pub fn index_of(&self, level: Level, n: usize) -> Option<usize> {
        match *self {
            Basis::Product { levels, n_max } if level.index() < levels && n <= n_max => {
                Some(n * levels + level.index())
            }
            _ => None,
        }
    }
}

/// Complex square matrix tagged with the basis it is written in.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    basis: Basis,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<C64>, basis: Basis) -> Result<Self> {
        if entries.nrows() != basis.dim() || entries.ncols() != basis.dim() {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{} but basis has dimension {}",
                entries.nrows(),
                entries.ncols(),
                basis.dim()
            )));
        }
        Ok(OperatorMatrix { entries, basis })
    }

    pub fn zeros(basis: Basis) -> Self {
        let d = basis.dim();
        OperatorMatrix { entries: DMatrix::zeros(d, d), basis }
    }

    pub fn identity(basis: Basis) -> Self {
        let d = basis.dim();
        OperatorMatrix { entries: DMatrix::identity(d, d), basis }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.entries[(r, c)]
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { entries: self.entries.adjoint(), basis: self.basis }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max|A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.entries[(r, c)] - self.entries[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_defect() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for c in 0..d {
            for r in 0..d {
                let v = self.entries[(r, c)];
                if v != ZERO {
                    out.push((r, c, v));
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: C64) -> Self {
        OperatorMatrix { entries: &self.entries * s, basis: self.basis }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<Self> {
        self.check_same(other)?;
        Ok(OperatorMatrix { entries: &self.entries + &other.entries, basis: self.basis })
    }

    pub fn mul(&self, other: &OperatorMatrix) -> Result<Self> {
        self.check_same(other)?;
        Ok(OperatorMatrix { entries: &self.entries * &other.entries, basis: self.basis })
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<Self> {
        self.check_same(other)?;
        Ok(OperatorMatrix {
            entries: &self.entries * &other.entries - &other.entries * &self.entries,
            basis: self.basis,
        })
    }

    fn check_same(&self, other: &OperatorMatrix) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::InvalidParameter(format!(
                "basis mismatch: {:?} vs {:?}",
                self.basis, other.basis
            )));
        }
        Ok(())
    }
}

/// Truncated harmonic lowering operator on the transmon levels,
/// ⟨k−1|a_q|k⟩ = √k.
pub fn build_mls_lowering(levels: usize) -> Result<OperatorMatrix> {
    if !(3..=4).contains(&levels) {
        return Err(Error::InvalidParameter(format!("levels must be 3 or 4, got {levels}")));
    }
    let mut m = DMatrix::zeros(levels, levels);
    for k in 1..levels {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    OperatorMatrix::new(m, Basis::Transmon { levels })
}

/// Oscillator lowering operator on Fock states `0..=n_max`.
pub fn oscillator_lowering(n_max: usize) -> OperatorMatrix {
    let d = n_max + 1;
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix { entries: m, basis: Basis::Oscillator { n_max } }
}

fn product_basis(p: &SystemParams) -> Basis {
    Basis::Product { levels: p.levels, n_max: p.n_max }
}

/// Cavity lowering operator `a ⊗ 1` on the product space.
pub fn cavity_lowering(p: &SystemParams) -> OperatorMatrix {
    let basis = product_basis(p);
    let l = p.levels;
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    for n in 1..=p.n_max {
        for x in 0..l {
            m[((n - 1) * l + x, n * l + x)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    OperatorMatrix { entries: m, basis }
}

/// Transmon lowering operator `1 ⊗ a_q` on the product space.
pub fn transmon_lowering(p: &SystemParams) -> OperatorMatrix {
    let basis = product_basis(p);
    let l = p.levels;
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    for n in 0..=p.n_max {
        for x in 1..l {
            m[(n * l + x - 1, n * l + x)] = C64::new((x as f64).sqrt(), 0.0);
        }
    }
    OperatorMatrix { entries: m, basis }
}

/// Photon number a†a on the product space.
pub fn photon_number(p: &SystemParams) -> OperatorMatrix {
    diagonal_op(p, |_, n| n as f64)
}

/// Transmon excitation a_q†a_q on the product space.
pub fn transmon_number(p: &SystemParams) -> OperatorMatrix {
    diagonal_op(p, |x, _| x as f64)
}

/// Total excitation number a†a + a_q†a_q.
pub fn excitation_number(p: &SystemParams) -> OperatorMatrix {
    diagonal_op(p, |x, n| (x + n) as f64)
}

fn diagonal_op(p: &SystemParams, f: impl Fn(usize, usize) -> f64) -> OperatorMatrix {
    let basis = product_basis(p);
    let l = p.levels;
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    for n in 0..=p.n_max {
        for x in 0..l {
            m[(n * l + x, n * l + x)] = C64::new(f(x, n), 0.0);
        }
    }
    OperatorMatrix { entries: m, basis }
}

/// Coupled Hamiltonian `H/h` in GHz:
/// ν_O a†a + Σ_x E_x |x⟩⟨x| + g_O (a† a_q + a a_q†).
pub fn build_hamiltonian(p: &SystemParams) -> Result<OperatorMatrix> {
    build_hamiltonian_in_frame(p, 0.0)
}

/// `H − ν_frame (a†a + a_q†a_q)` in GHz, assembled from detunings so that no
/// large energies cancel.
pub fn build_hamiltonian_in_frame(p: &SystemParams, nu_frame: f64) -> Result<OperatorMatrix> {
    p.validate()?;
    let basis = product_basis(p);
    let l = p.levels;
    let g = p.g_o * 1e-3;
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    for n in 0..=p.n_max {
        for x in 0..l {
            let i = n * l + x;
            let diag = n as f64 * (p.nu_o - nu_frame) + (p.level_energy(x) - x as f64 * nu_frame);
            m[(i, i)] = C64::new(diag, 0.0);
            // a† a_q : |x, n⟩ → |x−1, n+1⟩
            if x > 0 && n < p.n_max {
                let j = (n + 1) * l + x - 1;
                let v = C64::new(g * (x as f64).sqrt() * ((n + 1) as f64).sqrt(), 0.0);
                m[(j, i)] = v;
                m[(i, j)] = v;
            }
        }
    }
    Ok(OperatorMatrix { entries: m, basis })
}

/// One block of fixed total excitation N = n + level.
#[derive(Debug, Clone)]
pub struct ExcitationBlock {
    pub n_exc: usize,
    /// Block basis, ordered g, e, f, h (the states |gN⟩, |e N−1⟩, …).
    pub basis: Vec<BasisLabel>,
    /// Positions of the block basis in the product basis.
    pub indices: Vec<usize>,
    pub matrix: DMatrix<C64>,
    /// Set when the photon cutoff removed states from the block.
    pub truncated: bool,
}

impl ExcitationBlock {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Real part of the block relative to N·ν, in MHz.
    pub fn real_shifted_mhz(&self, nu_ref: f64) -> DMatrix<f64> {
        let s = self.size();
        DMatrix::from_fn(s, s, |r, c| {
            let shift = if r == c { self.n_exc as f64 * nu_ref } else { 0.0 };
            (self.matrix[(r, c)].re - shift) * 1e3
        })
    }
}

/// Splits `h` into its excitation-number blocks, N = 0 ..= n_max + L − 1.
pub fn excitation_blocks(h: &OperatorMatrix, p: &SystemParams) -> Result<Vec<ExcitationBlock>> {
    let (levels, n_max) = match h.basis() {
        Basis::Product { levels, n_max } => (levels, n_max),
        other => return Err(Error::InvalidParameter(format!("expected product basis, got {other:?}"))),
    };
    if levels != p.levels || n_max != p.n_max {
        return Err(Error::InvalidParameter("operator does not match parameters".into()));
    }
    let basis = h.basis();
    let blocks = (0..n_max + levels)
        .map(|n_exc| {
            let labels: Vec<BasisLabel> = (0..levels)
                .filter(|&x| x <= n_exc && n_exc - x <= n_max)
                .map(|x| BasisLabel { level: Level::ALL[x], n: n_exc - x })
                .collect();
            let indices: Vec<usize> =
                labels.iter().map(|b| basis.index_of(b.level, b.n).expect("label in range")).collect();
            let s = indices.len();
            let matrix = DMatrix::from_fn(s, s, |r, c| h.get(indices[r], indices[c]));
            ExcitationBlock {
                n_exc,
                truncated: n_exc > n_max,
                basis: labels,
                indices,
                matrix,
            }
        })
        .collect();
    Ok(blocks)
}

/// Places the blocks back into the product basis.
pub fn reassemble_blocks(blocks: &[ExcitationBlock], basis: Basis) -> OperatorMatrix {
    let mut out = OperatorMatrix::zeros(basis);
    for b in blocks {
        for (r, &i) in b.indices.iter().enumerate() {
            for (c, &j) in b.indices.iter().enumerate() {
                out.entries[(i, j)] = b.matrix[(r, c)];
            }
        }
    }
    out
}

/// Smallest working truncation accepted for a displacement of size |γ|.
pub fn displacement_working_dim(n_max: usize, gamma: C64) -> usize {
    n_max + (10.0 * gamma.norm()).ceil() as usize
}

/// Displacement operators exp(γa† − γ*a) on a fixed working truncation.
///
/// The generator is written as R(θ) r(a† − a) R(θ)† with R(θ) = exp(iθ a†a),
/// so one Hermitian eigendecomposition of i(a† − a) serves every γ.
#[derive(Debug, Clone)]
pub struct Displacer {
    n_work: usize,
    vectors: DMatrix<C64>,
    values: DVector<f64>,
}

impl Displacer {
    pub fn new(n_work: usize) -> Self {
        let a = oscillator_lowering(n_work).into_entries();
        let x = (a.adjoint() - a) * C64::new(0.0, 1.0);
        let eig = SymmetricEigen::new(x);
        Displacer { n_work, vectors: eig.eigenvectors, values: eig.eigenvalues }
    }

    pub fn n_work(&self) -> usize {
        self.n_work
    }

    /// D(γ) on the full working space `0..=n_work`.
    pub fn full(&self, gamma: C64) -> DMatrix<C64> {
        let (r, theta) = gamma.to_polar();
        let d = self.n_work + 1;
        // V · exp(−i r Λ) · V†
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let mut col = scaled.column_mut(k);
            col *= C64::from_polar(1.0, -r * lam);
        }
        let mut m = scaled * self.vectors.adjoint();
        for j in 0..d {
            for k in 0..d {
                let diff = j as f64 - k as f64;
                if diff != 0.0 {
                    m[(j, k)] *= C64::from_polar(1.0, theta * diff);
                }
            }
        }
        m
    }

    /// D(γ) cropped to Fock states `0..=n_max`, after checking the working
    /// truncation guard.
    pub fn cropped(&self, gamma: C64, n_max: usize) -> Result<DMatrix<C64>> {
        let need = displacement_working_dim(n_max, gamma);
        if self.n_work < need {
            return Err(Error::Truncation(format!(
                "working truncation {} < {} required for |gamma| = {:.3}",
                self.n_work,
                need,
                gamma.norm()
            )));
        }
        let full = self.full(gamma);
        Ok(full.view((0, 0), (n_max + 1, n_max + 1)).into_owned())
    }
}

/// D(γ) computed on `0..=n_work` and cropped to `0..=n_max`.
pub fn displacement_operator(gamma: C64, n_max: usize, n_work: usize) -> Result<OperatorMatrix> {
    let need = displacement_working_dim(n_max, gamma);
    if n_work < need {
        return Err(Error::Truncation(format!(
            "n_work = {n_work} < n_max + ceil(10|gamma|) = {need}"
        )));
    }
    let m = Displacer::new(n_work).cropped(gamma, n_max)?;
    OperatorMatrix::new(m, Basis::Oscillator { n_max })
}

/// Embeds a cavity-only state vector as |g⟩ ⊗ ψ.
pub fn embed_ground(p: &SystemParams, psi: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(p.dim());
    for n in 0..=p.n_max.min(psi.len().saturating_sub(1)) {
        out[n * p.levels] = psi[n];
    }
    out
}
