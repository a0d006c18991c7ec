//! Energy ladders of the coupled system: closed-form cubic solution for three
//! levels, the small-ε series, and block-wise numeric diagonalization for three
//! or four levels. Derived quantities are the photon-number resolved transition
//! table, the Kerr profile and the comparison with the dispersive schemes.
//!
//! Energies are stored internally as offsets from n·ν_O in MHz so that Hz-level
//! differences survive subtraction of ~100 GHz totals.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{build_hamiltonian, excitation_blocks, BasisLabel, Level};
use crate::io::CsvTable;
use crate::params::SystemParams;

/// Minimum squared overlap with the nominal state for a ladder assignment.
pub const CLASSIFICATION_THRESHOLD: f64 = 0.4;

/// Residual bound on the scaled cubic.
const CUBIC_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderMethod {
    Exact3,
    Series,
    Numeric,
}

impl fmt::Display for LadderMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LadderMethod::Exact3 => "exact3",
            LadderMethod::Series => "series",
            LadderMethod::Numeric => "numeric",
        })
    }
}

/// Which dressed ladder a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Ground,
    Plus,
    Minus,
}

/// Eigenvectors of one excitation block, expressed in the block basis
/// {|gn⟩, |e n−1⟩, |f n−2⟩, |h n−3⟩}.
#[derive(Debug, Clone)]
pub struct RungVectors {
    pub basis: Vec<BasisLabel>,
    pub ground: DVector<f64>,
    /// For n = 0 this is |g̃0⟩, for n = 1 it is |ẽ0⟩ (both ± labels).
    pub plus: DVector<f64>,
    pub minus: DVector<f64>,
}

/// The three dressed ladders {|g̃n⟩}, {|+n⟩}, {|−n⟩}.
#[derive(Debug, Clone)]
pub struct EnergyLadders {
    pub method: LadderMethod,
    pub params: SystemParams,
    /// E(|g̃n⟩) in GHz.
    pub e_g: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    pub vectors: Vec<RungVectors>,
    /// Squared overlaps with the nominal leading state, `[ground, plus, minus]`.
    pub overlaps: Vec<[f64; 3]>,
    /// Fourth-level dominated state of each block (four-level numeric only).
    pub e_h: Vec<Option<f64>>,
    offsets: [Vec<f64>; 3],
}

impl EnergyLadders {
    fn from_offsets(
        method: LadderMethod,
        params: &SystemParams,
        offsets: [Vec<f64>; 3],
        vectors: Vec<RungVectors>,
        overlaps: Vec<[f64; 3]>,
        e_h: Vec<Option<f64>>,
    ) -> Self {
        let total = |v: &Vec<f64>| -> Vec<f64> {
            v.iter().enumerate().map(|(n, o)| n as f64 * params.nu_o + o * 1e-3).collect()
        };
        EnergyLadders {
            method,
            params: params.clone(),
            e_g: total(&offsets[0]),
            e_plus: total(&offsets[1]),
            e_minus: total(&offsets[2]),
            vectors,
            overlaps,
            e_h,
            offsets,
        }
    }

    /// Highest ladder index available.
    pub fn n_top(&self) -> usize {
        self.e_g.len() - 1
    }

    /// Energy offset E − n·ν_O in MHz.
    pub fn offset_mhz(&self, ladder: Ladder, n: usize) -> f64 {
        let k = match ladder {
            Ladder::Ground => 0,
            Ladder::Plus => 1,
            Ladder::Minus => 2,
        };
        self.offsets[k][n]
    }

    pub fn energy(&self, ladder: Ladder, n: usize) -> f64 {
        match ladder {
            Ladder::Ground => self.e_g[n],
            Ladder::Plus => self.e_plus[n],
            Ladder::Minus => self.e_minus[n],
        }
    }

    /// Transition |g̃n⟩ → |±(n+1)⟩ in GHz.
    pub fn transition(&self, sign: Ladder, n: usize) -> Result<f64> {
        if n + 1 > self.n_top() {
            return Err(Error::Range { index: n, max: self.n_top().saturating_sub(1) });
        }
        let up = self.offset_mhz(sign, n + 1);
        Ok(self.params.nu_o + (up - self.offset_mhz(Ladder::Ground, n)) * 1e-3)
    }

    /// Eigenvector of ladder state `n` embedded in the product basis.
    pub fn product_vector(&self, ladder: Ladder, n: usize) -> DVector<f64> {
        let p = &self.params;
        let rung = &self.vectors[n];
        let v = match ladder {
            Ladder::Ground => &rung.ground,
            Ladder::Plus => &rung.plus,
            Ladder::Minus => &rung.minus,
        };
        let mut out = DVector::zeros(p.dim());
        for (k, lab) in rung.basis.iter().enumerate() {
            out[lab.n * p.levels + lab.level.index()] = v[k];
        }
        out
    }
}

/// Largest ladder index usable with truncation `n_max` and `levels` levels.
fn ladder_top(p: &SystemParams) -> Result<usize> {
    p.n_max
        .checked_sub(p.levels)
        .filter(|&t| t >= 2)
        .ok_or_else(|| Error::InvalidParameter(format!("n_max = {} too small for ladders", p.n_max)))
}

/// Three real roots (ascending) of x³ − 2x² + [1 + 2ε² − 3nε²]x + nε² = 0,
/// the eigenvalues of the scaled three-level block.
pub fn cubic_roots(n: usize, eps: f64) -> Result<[f64; 3]> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("cubic applies to n >= 2, got {n}")));
    }
    if !eps.is_finite() {
        return Err(Error::Domain("non-finite reduced coupling".into()));
    }
    let nf = n as f64;
    let e2 = eps * eps;
    let (b, c, d) = (-2.0, 1.0 + 2.0 * e2 - 3.0 * nf * e2, nf * e2);
    let poly = |x: f64| ((x + b) * x + c) * x + d;
    // depressed cubic t³ + pt + q with x = t − b/3
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    if disc > 1e-14 || p > 0.0 {
        return Err(Error::Domain(format!(
            "cubic for n = {n}, eps = {eps} has complex roots (discriminant {disc:e})"
        )));
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = if m == 0.0 { 0.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
    let theta = arg.acos() / 3.0;
    let mut roots = [0usize, 1, 2].map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() - b / 3.0);
    roots.sort_by(|a, b| a.total_cmp(b));
    for &x in &roots {
        let r = poly(x);
        if r.abs() > CUBIC_RESIDUAL_TOL {
            return Err(Error::Domain(format!("cubic residual {r:e} at root {x} (n = {n}, eps = {eps})")));
        }
    }
    Ok(roots)
}

/// Null vector of the symmetric 3×3 matrix `m − λI` via the largest pairwise
/// cross product of its rows.
fn null_vector3(m: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let row = |i: usize| {
        let mut r = [m[(i, 0)], m[(i, 1)], m[(i, 2)]];
        r[i] -= lambda;
        r
    };
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let norm = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let cands = [cross(row(0), row(1)), cross(row(0), row(2)), cross(row(1), row(2))];
    let best = cands.iter().max_by(|a, b| norm(a).total_cmp(&norm(b))).copied().unwrap();
    let nb = norm(&best);
    DVector::from_iterator(3, best.iter().map(|x| x / nb))
}

fn block_labels(n: usize, levels: usize) -> Vec<BasisLabel> {
    (0..levels.min(n + 1)).map(|x| BasisLabel { level: Level::ALL[x], n: n - x }).collect()
}

/// Sign convention: ground-ladder vectors have a positive |gn⟩ component,
/// ± vectors a positive |e n−1⟩ component.
fn fix_sign(v: &mut DVector<f64>, lead: usize) {
    if v[lead] < 0.0 {
        v.neg_mut();
    }
}

/// Nominal states of a block: |gn⟩, (|e⟩+|f⟩)/√2, (|e⟩−|f⟩)/√2.
fn nominal_vectors(size: usize, n: usize) -> [DVector<f64>; 3] {
    let mut g = DVector::zeros(size);
    g[0] = 1.0;
    let mut s = DVector::zeros(size);
    let mut a = DVector::zeros(size);
    if n == 1 {
        s[1] = 1.0;
        a[1] = 1.0;
    } else if n >= 2 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        s[1] = r;
        s[2] = r;
        a[1] = r;
        a[2] = -r;
    }
    [g, s, a]
}

fn overlaps_of(rung: &RungVectors, n: usize) -> [f64; 3] {
    let nom = nominal_vectors(rung.basis.len(), n);
    if n == 0 {
        return [1.0, 1.0, 1.0];
    }
    let o = |v: &DVector<f64>, w: &DVector<f64>| v.dot(w).powi(2);
    [o(&rung.ground, &nom[0]), o(&rung.plus, &nom[1]), o(&rung.minus, &nom[2])]
}

/// Closed-form ladders for three levels at exact ef-resonance.
pub fn ladders_exact3(p: &SystemParams) -> Result<EnergyLadders> {
    p.validate()?;
    if p.levels != 3 {
        return Err(Error::InvalidParameter("exact ladders need levels = 3".into()));
    }
    if !p.is_ef_resonant() {
        return Err(Error::InvalidParameter(format!(
            "exact ladders need ef-resonance (off by {} MHz)",
            p.ef_detuning()
        )));
    }
    let top = ladder_top(p)?;
    let (eps, alpha) = (p.epsilon(), p.alpha);
    let mut offsets = [vec![0.0; top + 1], vec![0.0; top + 1], vec![0.0; top + 1]];
    let mut vectors = Vec::with_capacity(top + 1);

    let one = DVector::from_element(1, 1.0);
    vectors.push(RungVectors { basis: block_labels(0, 3), ground: one.clone(), plus: one.clone(), minus: one });

    // n = 1: −α [[0, ε], [ε, 1]], eigenvalues (1 ∓ √(1+4ε²))/2
    let root = (1.0 + 4.0 * eps * eps).sqrt();
    let (lg, le) = ((1.0 - root) / 2.0, (1.0 + root) / 2.0);
    offsets[0][1] = -alpha * lg;
    offsets[1][1] = -alpha * le;
    offsets[2][1] = -alpha * le;
    let vec2 = |lam: f64| {
        // (−λ, ε)·v = 0 → v ∝ (ε, λ)
        let v = DVector::from_vec(vec![eps, lam]);
        let nrm = v.norm();
        if nrm == 0.0 {
            DVector::from_vec(vec![if lam == 0.0 { 1.0 } else { 0.0 }, if lam == 0.0 { 0.0 } else { 1.0 }])
        } else {
            v / nrm
        }
    };
    let mut g1 = vec2(lg);
    fix_sign(&mut g1, 0);
    let mut e1 = vec2(le);
    fix_sign(&mut e1, 1);
    vectors.push(RungVectors { basis: block_labels(1, 3), ground: g1, plus: e1.clone(), minus: e1 });

    for n in 2..=top {
        let [x_g, x_m, x_p] = cubic_roots(n, eps)?;
        offsets[0][n] = -alpha * x_g;
        offsets[1][n] = -alpha * x_p;
        offsets[2][n] = -alpha * x_m;
        let m = scaled_block3(n, eps);
        let mut g = null_vector3(&m, x_g);
        fix_sign(&mut g, 0);
        let (mut vp, mut vm) = if eps == 0.0 {
            let nom = nominal_vectors(3, n);
            (nom[1].clone(), nom[2].clone())
        } else {
            (null_vector3(&m, x_p), null_vector3(&m, x_m))
        };
        fix_sign(&mut vp, 1);
        fix_sign(&mut vm, 1);
        if eps == 0.0 {
            g = nominal_vectors(3, n)[0].clone();
        }
        vectors.push(RungVectors { basis: block_labels(n, 3), ground: g, plus: vp, minus: vm });
    }
    let overlaps = vectors.iter().enumerate().map(|(n, r)| overlaps_of(r, n)).collect();
    Ok(EnergyLadders::from_offsets(LadderMethod::Exact3, p, offsets, vectors, overlaps, vec![None; top + 1]))
}

/// Scaled block [[0, √n ε, 0], [√n ε, 1, √(2(n−1)) ε], [0, √(2(n−1)) ε, 1]].
fn scaled_block3(n: usize, eps: f64) -> DMatrix<f64> {
    let a = (n as f64).sqrt() * eps;
    let b = (2.0 * (n as f64 - 1.0)).sqrt() * eps;
    DMatrix::from_row_slice(3, 3, &[0.0, a, 0.0, a, 1.0, b, 0.0, b, 1.0])
}

/// Small-ε series ladders: ground ladder through ε⁴, ± ladders through ε².
pub fn ladders_series(p: &SystemParams, n_cap: usize) -> Result<EnergyLadders> {
    p.validate()?;
    if p.levels != 3 {
        return Err(Error::InvalidParameter("series ladders need levels = 3".into()));
    }
    if n_cap < 2 {
        return Err(Error::InvalidParameter("n_cap must be at least 2".into()));
    }
    let (eps, alpha) = (p.epsilon(), p.alpha);
    let (e2, e4) = (eps * eps, eps.powi(4));
    let kerr = 2.0 * alpha * e4;
    let shift = alpha * (e2 - e4);
    let mut offsets = [vec![0.0; n_cap + 1], vec![0.0; n_cap + 1], vec![0.0; n_cap + 1]];
    let mut vectors = Vec::with_capacity(n_cap + 1);
    let r2 = std::f64::consts::SQRT_2;
    for n in 0..=n_cap {
        let nf = n as f64;
        offsets[0][n] = nf * (shift + (nf - 1.0) * kerr / 2.0);
        let basis = block_labels(n, 3);
        let mut ground = match n {
            0 => DVector::from_element(1, 1.0),
            1 => DVector::from_vec(vec![1.0 - e2 / 2.0, -eps]),
            _ => DVector::from_vec(vec![1.0 - nf * e2 / 2.0, -nf.sqrt() * eps, (2.0 * nf * (nf - 1.0)).sqrt() * e2]),
        };
        ground.normalize_mut();
        let (plus, minus) = match n {
            0 => {
                offsets[1][0] = 0.0;
                offsets[2][0] = 0.0;
                (ground.clone(), ground.clone())
            }
            1 => {
                let e = -alpha * (1.0 + e2);
                offsets[1][1] = e;
                offsets[2][1] = e;
                let v = DVector::from_vec(vec![eps, 1.0 - e2 / 2.0]).normalize();
                (v.clone(), v)
            }
            _ => {
                let c = (2.0 * (nf - 1.0)).sqrt() * eps;
                offsets[1][n] = -alpha * (1.0 + c + nf * e2 / 2.0);
                offsets[2][n] = -alpha * (1.0 - c + nf * e2 / 2.0);
                let s = (nf - 1.0).sqrt();
                let vec_for = |sg: f64| {
                    DVector::from_vec(vec![
                        eps * (nf / 2.0).sqrt() + sg * (nf / (nf - 1.0)).sqrt() * (7.0 * nf - 8.0) / 8.0 * e2,
                        1.0 / r2 + sg * nf / (8.0 * s) * eps + (33.0 * nf - 32.0) * nf / (64.0 * r2 * (nf - 1.0)) * e2,
                        sg / r2 - nf / (8.0 * s) * eps + nf * nf / (64.0 * r2 * (nf - 1.0)) * e2,
                    ])
                    .normalize()
                };
                (vec_for(1.0), vec_for(-1.0))
            }
        };
        vectors.push(RungVectors { basis, ground, plus, minus });
    }
    let overlaps = vectors.iter().enumerate().map(|(n, r)| overlaps_of(r, n)).collect();
    Ok(EnergyLadders::from_offsets(LadderMethod::Series, p, offsets, vectors, overlaps, vec![None; n_cap + 1]))
}

/// Eigen-decomposition of a real symmetric block, with eigenvectors inside
/// each degenerate cluster rotated onto the nominal ladder states.
fn classified_eigen(m: DMatrix<f64>, n: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
    let size = m.nrows();
    let scale = m.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs: Vec<DVector<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();

    // classification operator with distinct weights on the nominal states
    let nom = nominal_vectors(size, n);
    let mut q = DMatrix::<f64>::zeros(size, size);
    for (w, v) in [(3.0, &nom[0]), (2.0, &nom[1]), (1.0, &nom[2])] {
        if n >= 1 {
            q += v * v.transpose() * w;
        }
    }
    let mut start = 0;
    while start < size {
        let mut end = start + 1;
        while end < size && (values[end] - values[start]).abs() <= 1e-9 * scale {
            end += 1;
        }
        if end - start > 1 {
            let k = end - start;
            let basis = DMatrix::from_columns(&vecs[start..end]);
            let sub = basis.transpose() * &q * &basis;
            let rot = SymmetricEigen::new(sub).eigenvectors;
            for j in 0..k {
                vecs[start + j] = &basis * rot.column(j);
            }
        }
        start = end;
    }
    (values, vecs)
}

/// Block-wise numeric ladders for three or four levels, at any detuning.
pub fn ladders_numeric(p: &SystemParams) -> Result<EnergyLadders> {
    p.validate()?;
    let top = ladder_top(p)?;
    let h = build_hamiltonian(p)?;
    let blocks = excitation_blocks(&h, p)?;
    let solved: Vec<Result<(f64, f64, f64, Option<f64>, RungVectors, [f64; 3])>> = blocks[..=top]
        .par_iter()
        .map(|blk| {
            let n = blk.n_exc;
            let m = blk.real_shifted_mhz(p.nu_o);
            let (vals, vecs) = classified_eigen(m, n);
            let size = vals.len();
            if n == 0 {
                let v = DVector::from_element(1, 1.0);
                let r = RungVectors { basis: blk.basis.clone(), ground: v.clone(), plus: v.clone(), minus: v };
                return Ok((vals[0], vals[0], vals[0], None, r, [1.0; 3]));
            }
            let nom = nominal_vectors(size, n);
            let ov = |k: usize, j: usize| vecs[k].dot(&nom[j]).powi(2);
            let pick = |j: usize, taken: &[usize]| -> (usize, f64) {
                (0..size)
                    .filter(|k| !taken.contains(k))
                    .map(|k| (k, ov(k, j)))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("non-empty block")
            };
            let (kg, og) = pick(0, &[]);
            let (kp, op) = pick(1, &[kg]);
            let (km, om) = if n == 1 { (kp, op) } else { pick(2, &[kg, kp]) };
            let worst = og.min(op).min(om);
            if worst < CLASSIFICATION_THRESHOLD {
                return Err(Error::Classification { block: n, overlap: worst });
            }
            let extra = (0..size).find(|k| ![kg, kp, km].contains(k)).map(|k| vals[k]);
            let mut g = vecs[kg].clone();
            fix_sign(&mut g, 0);
            let mut vp = vecs[kp].clone();
            fix_sign(&mut vp, 1);
            let mut vm = vecs[km].clone();
            fix_sign(&mut vm, 1);
            let r = RungVectors { basis: blk.basis.clone(), ground: g, plus: vp, minus: vm };
            Ok((vals[kg], vals[kp], vals[km], extra, r, [og, op, om]))
        })
        .collect();
    let mut offsets = [Vec::new(), Vec::new(), Vec::new()];
    let mut vectors = Vec::new();
    let mut overlaps = Vec::new();
    let mut e_h = Vec::new();
    for (n, s) in solved.into_iter().enumerate() {
        let (g, pl, mi, extra, r, o) = s?;
        offsets[0].push(g);
        offsets[1].push(pl);
        offsets[2].push(mi);
        e_h.push(extra.map(|x| n as f64 * p.nu_o + x * 1e-3));
        vectors.push(r);
        overlaps.push(o);
    }
    Ok(EnergyLadders::from_offsets(LadderMethod::Numeric, p, offsets, vectors, overlaps, e_h))
}

/// Energy (GHz) of the eigenstate of block N = n + level with the largest
/// weight on the bare state |x n⟩.
pub fn dressed_energy(p: &SystemParams, level: Level, n: usize) -> Result<f64> {
    p.validate()?;
    let n_exc = n + level.index();
    if level.index() >= p.levels || n > p.n_max || n_exc > p.n_max {
        return Err(Error::Range { index: n, max: p.n_max });
    }
    let h = build_hamiltonian(p)?;
    let blocks = excitation_blocks(&h, p)?;
    let blk = &blocks[n_exc];
    let pos = blk.basis.iter().position(|b| b.level == level).expect("level inside block");
    let eig = SymmetricEigen::new(blk.real_shifted_mhz(p.nu_o));
    let k = (0..blk.size())
        .max_by(|&a, &b| eig.eigenvectors[(pos, a)].abs().total_cmp(&eig.eigenvectors[(pos, b)].abs()))
        .unwrap();
    Ok(n_exc as f64 * p.nu_o + eig.eigenvalues[k] * 1e-3)
}

/// One row of the photon-number resolved transition table (GHz).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub n: usize,
    pub nu_plus: f64,
    pub nu_minus: f64,
    /// ν_ge ± √(2n) g_O + (3n+1) g_O ε / 2
    pub approx_plus: f64,
    pub approx_minus: f64,
    /// ν_ge ± √(2n) g_O
    pub parabolic_plus: f64,
    pub parabolic_minus: f64,
}

/// Transition frequencies ν_{±n} = E(±(n+1)) − E(g̃n) for every n whose upper
/// state lies inside the ladders.
pub fn transition_table(l: &EnergyLadders) -> Vec<TransitionRow> {
    let p = &l.params;
    let (g, eps) = (p.g_o * 1e-3, p.epsilon());
    (0..l.n_top())
        .map(|n| {
            let nf = n as f64;
            let split = (2.0 * nf).sqrt() * g;
            let corr = (3.0 * nf + 1.0) * g * eps / 2.0;
            TransitionRow {
                n,
                nu_plus: l.transition(Ladder::Plus, n).expect("index inside table"),
                nu_minus: l.transition(Ladder::Minus, n).expect("index inside table"),
                approx_plus: p.nu_ge + split + corr,
                approx_minus: p.nu_ge - split + corr,
                parabolic_plus: p.nu_ge + split,
                parabolic_minus: p.nu_ge - split,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct KerrReport {
    /// Dressed oscillator frequency E(g̃1) − E(g̃0) in GHz.
    pub nu_tilde_o: f64,
    /// 2αε⁴ in Hz.
    pub k_series: f64,
    /// `(n, E_g[n+1] − 2E_g[n] + E_g[n−1])` in Hz for n ≥ 1.
    pub k_n: Vec<(usize, f64)>,
    /// First n whose K_n has the opposite sign to K_1.
    pub sign_change_n: Option<usize>,
}

pub fn kerr_report(l: &EnergyLadders) -> KerrReport {
    let p = &l.params;
    let off = &l.offsets[0];
    let k_n: Vec<(usize, f64)> =
        (1..l.n_top()).map(|n| (n, (off[n + 1] - 2.0 * off[n] + off[n - 1]) * 1e6)).collect();
    let sign_change_n = k_n.first().and_then(|&(_, k1)| {
        k_n.iter().find(|&&(_, k)| k != 0.0 && k1 != 0.0 && k.signum() != k1.signum()).map(|&(n, _)| n)
    });
    KerrReport {
        nu_tilde_o: p.nu_o + (off[1] - off[0]) * 1e-3,
        k_series: 2.0 * p.alpha * p.epsilon().powi(4) * 1e6,
        k_n,
        sign_change_n,
    }
}

/// Kerr comparison at equal Fock-selectivity S = √2 g_O.
#[derive(Debug, Clone)]
pub struct SchemeComparison {
    /// Separation of the first two Fock-resolved lines (MHz).
    pub s: f64,
    /// Ef-resonant Kerr 2α(g_O/α)⁴ (Hz).
    pub k: f64,
    /// Far-dispersive transmon Kerr S²/(4α″) (Hz).
    pub k_dispersive: f64,
    /// K″/K.
    pub reduction: f64,
    /// Two-level-system Kerr S²/(2Δ′) as `(Δ′ MHz, K′ Hz)`.
    pub two_level: Vec<(f64, f64)>,
}

/// Δ′ values (MHz) for the two-level family when none are supplied.
pub const DEFAULT_TWO_LEVEL_DETUNINGS: [f64; 6] = [100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0];

pub fn compare_schemes(alpha: f64, g_o: f64, alpha_pp: f64, two_level_detunings: &[f64]) -> Result<SchemeComparison> {
    if alpha == 0.0 || alpha_pp == 0.0 {
        return Err(Error::Domain("anharmonicity must be nonzero".into()));
    }
    if g_o == 0.0 {
        return Err(Error::Domain("coupling must be nonzero".into()));
    }
    let s = std::f64::consts::SQRT_2 * g_o;
    let k = 2.0 * alpha * (g_o / alpha).powi(4) * 1e6;
    let k_dispersive = s * s / (4.0 * alpha_pp) * 1e6;
    let two_level = two_level_detunings
        .iter()
        .filter(|d| **d != 0.0)
        .map(|&d| (d, s * s / (2.0 * d) * 1e6))
        .collect();
    Ok(SchemeComparison { s, k, k_dispersive, reduction: k_dispersive / k, two_level })
}

/// Ladder table with columns n, E_g, E_plus, E_minus, nu_plus, nu_minus, K_n,
/// method. Frequencies in GHz, K_n in Hz; cells past the ladder top are empty.
pub fn ladder_csv(l: &EnergyLadders) -> CsvTable {
    let kerr = kerr_report(l);
    let mut t = CsvTable::new(&["n", "E_g", "E_plus", "E_minus", "nu_plus", "nu_minus", "K_n", "method"]);
    for n in 0..=l.n_top() {
        let opt = |r: Result<f64>| r.map(|v| format!("{v:.12}")).unwrap_or_default();
        let k = kerr.k_n.iter().find(|(m, _)| *m == n).map(|(_, k)| format!("{k:.6}")).unwrap_or_default();
        t.push(vec![
            n.to_string(),
            format!("{:.12}", l.e_g[n]),
            format!("{:.12}", l.e_plus[n]),
            format!("{:.12}", l.e_minus[n]),
            opt(l.transition(Ladder::Plus, n)),
            opt(l.transition(Ladder::Minus, n)),
            k,
            l.method.to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3(n_max: usize) -> SystemParams {
        SystemParams::device_three_level().with_n_max(n_max)
    }

    #[test]
    fn cubic_uncoupled_limit() {
        for n in [2, 3, 7, 40] {
            let r = cubic_roots(n, 0.0).unwrap();
            assert!(r[0].abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-7 && (r[2] - 1.0).abs() < 1e-7, "{r:?}");
        }
        assert!(cubic_roots(1, 0.01).is_err());
        assert!(matches!(cubic_roots(3, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn cubic_matches_block_eigenvalues() {
        let eps = 0.02854;
        let m = scaled_block3(5, eps);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        let r = cubic_roots(5, eps).unwrap();
        for k in 0..3 {
            assert!((r[k] - ev[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn excited_single_photon_state() {
        let p = p3(12);
        let l = ladders_exact3(&p).unwrap();
        let eps = p.epsilon();
        // ν_O − α(1 + ε²) + o(ε³)
        let approx = -p.alpha * (1.0 + eps * eps);
        assert!((l.offset_mhz(Ladder::Plus, 1) - approx).abs() < p.alpha.abs() * eps.powi(3));
        assert_eq!(l.e_g[0], 0.0);
        assert_eq!(l.e_plus[1], l.e_minus[1]);
    }

    #[test]
    fn dressed_frequency_shift() {
        let p = p3(12);
        let l = ladders_exact3(&p).unwrap();
        let shift_khz = l.offset_mhz(Ladder::Ground, 1) * 1e3;
        let eps = p.epsilon();
        let series = p.alpha * (eps * eps - eps.powi(4)) * 1e3;
        assert!((shift_khz - series).abs() < 1e-3, "{shift_khz} vs {series}");
        assert!((shift_khz + 212.5).abs() < 0.2, "{shift_khz}");
    }

    #[test]
    fn uncoupled_ladders_are_bare() {
        let p = p3(12).with_coupling(0.0);
        let l = ladders_exact3(&p).unwrap();
        for n in 0..=l.n_top() {
            assert!((l.e_g[n] - n as f64 * p.nu_o).abs() < 1e-12);
        }
        let ln = ladders_numeric(&p).unwrap();
        for o in &ln.overlaps {
            for x in o {
                assert!((x - 1.0).abs() < 1e-12, "{o:?}");
            }
        }
    }

    #[test]
    fn series_vector_components() {
        let p = p3(10).with_coupling(0.02854 * 261.0);
        let l = ladders_series(&p, 6).unwrap();
        let v = &l.vectors[2].ground;
        let raw = [0.99919, -0.04036, 0.00163];
        let nrm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        for k in 0..3 {
            assert!((v[k] - raw[k] / nrm).abs() < 2e-5, "{v:?}");
        }
    }

    #[test]
    fn series_pm_vectors_at_zero_coupling() {
        let l = ladders_series(&p3(10).with_coupling(0.0), 5).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for n in 2..=5 {
            let (vp, vm) = (&l.vectors[n].plus, &l.vectors[n].minus);
            assert!((vp[1] - r).abs() < 1e-15 && (vp[2] - r).abs() < 1e-15 && vp[0] == 0.0);
            assert!((vm[1] - r).abs() < 1e-15 && (vm[2] + r).abs() < 1e-15);
        }
    }

    #[test]
    fn numeric_equals_exact_for_three_levels() {
        let p = p3(20);
        let a = ladders_exact3(&p).unwrap();
        let b = ladders_numeric(&p).unwrap();
        for n in 0..=a.n_top() {
            for lad in [Ladder::Ground, Ladder::Plus, Ladder::Minus] {
                let (x, y) = (a.energy(lad, n), b.energy(lad, n));
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "n={n} {lad:?}");
            }
            assert!((a.vectors[n].ground.dot(&b.vectors[n].ground).abs() - 1.0).abs() < 1e-9);
        }
        assert!(b.overlaps.iter().all(|o| o.iter().all(|&x| x > 0.4)));
    }

    #[test]
    fn four_level_ladders_bend_away() {
        let p = SystemParams::device().with_n_max(24);
        let l4 = ladders_numeric(&p).unwrap();
        let l3 = ladders_numeric(&p.clone().with_levels(3)).unwrap();
        let d_low = (l4.transition(Ladder::Plus, 1).unwrap() - l3.transition(Ladder::Plus, 1).unwrap()).abs();
        let d_high = (l4.transition(Ladder::Plus, 18).unwrap() - l3.transition(Ladder::Plus, 18).unwrap()).abs();
        assert!(d_high > 10.0 * d_low.max(1e-9), "{d_low} {d_high}");
        assert!(l4.e_h[5].is_some());
        for n in 2..=l4.n_top() {
            assert!(l4.e_minus[n] < l4.e_plus[n]);
        }
    }

    #[test]
    fn transition_structure() {
        let p = p3(20);
        let l = ladders_exact3(&p).unwrap();
        let t = transition_table(&l);
        let eps = p.epsilon();
        let nu0 = p.nu_ge - p.alpha * eps * eps * 1e-3;
        assert!((t[0].nu_plus - nu0).abs() < p.alpha.abs() * eps.powi(3) * 1e-3);
        assert_eq!(t[0].nu_plus, t[0].nu_minus);
        let sep = (t[1].nu_plus - t[0].nu_plus) * 1e3;
        assert!((sep - 10.54).abs() < 0.5, "{sep}");
        let gaps: Vec<f64> = t.windows(2).skip(1).map(|w| w[1].nu_plus - w[0].nu_plus).collect();
        assert!(gaps.windows(2).all(|g| g[1] < g[0]));
        assert!(l.transition(Ladder::Plus, l.n_top()).is_err());
    }

    #[test]
    fn kerr_of_device() {
        let l = ladders_exact3(&p3(14)).unwrap();
        let k = kerr_report(&l);
        assert!((k.k_series + 346.5).abs() < 0.5, "{}", k.k_series);
        for &(n, kn) in k.k_n.iter().filter(|(n, _)| *n <= 5) {
            assert!((kn - k.k_series).abs() < 0.1 * k.k_series.abs(), "n={n}: {kn}");
        }
        assert!(k.sign_change_n.is_none());
        let flat = kerr_report(&ladders_exact3(&p3(14).with_coupling(1e-3)).unwrap());
        assert!(flat.k_n.iter().all(|(_, k)| k.abs() < 1e-6));
    }

    #[test]
    fn scheme_reduction_factor() {
        let c = compare_schemes(-261.0, 7.45, -261.0, &DEFAULT_TWO_LEVEL_DETUNINGS).unwrap();
        let expected = (261.0 / c.s).powi(2) / 2.0;
        assert!((c.reduction - expected).abs() < 1e-9 * expected);
        assert!((c.reduction - 306.8).abs() < 0.5);
        let c2 = compare_schemes(-261.0, 14.9, -261.0, &[]).unwrap();
        assert!((c.reduction / c2.reduction - 4.0).abs() < 1e-9);
        assert!(compare_schemes(0.0, 7.45, -261.0, &[]).is_err());
        assert_eq!(c.two_level.len(), DEFAULT_TWO_LEVEL_DETUNINGS.len());
    }
}
