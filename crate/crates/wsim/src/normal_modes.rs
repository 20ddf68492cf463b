//! Delocalized photon modes of the star coupler.
//!
//! The photonic coupling H₁ = ν Σ_l (a_l†b + b†a_l) acts on the N+1 photon
//! modes (N cavities plus the fiber mode b). The real orthogonal matrix T
//! built here sends them to modes c_α = Σ_β t_{α,β}(a_1, …, a_N, b)_β in
//! which H₁ is diagonal with eigenvalues (0, …, 0, −√N ν, +√N ν): rows
//! 1..N−1 are dark modes with no fiber component, rows N and N+1 the bright
//! pair split by ±√N ν. An atom detuned by Δ from its cavity sees mode α at
//! detuning Δ_α = Δ for the dark modes and Δ ± √N ν for the bright pair.
//!
//! T is filled by direct formula rather than Gram-Schmidt so the entries are
//! bit-reproducible.

use nalgebra::{DMatrix, DVector};

use crate::model::SystemParams;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct NormalModeTransform {
    /// Rows α = 1..N+1, columns β = 1..N+1 (cavities 1..N, then fiber).
    pub t_matrix: DMatrix<f64>,
    pub n_atoms: usize,
}

/// Build the (N+1)×(N+1) transform. Row j of the dark block (j = 1..N−1)
/// carries j−1 leading zeros, √(N−j)/√(N−j+1) on the diagonal, then
/// −1/√((N−j+1)(N−j)) out to column N and a zero fiber entry; the bright
/// rows are (∓1/√(2N), …, ∓1/√(2N), 1/√2).
pub fn build_transform(n_atoms: usize) -> Result<NormalModeTransform> {
    if n_atoms < 3 {
        return Err(Error::InvalidParams(format!(
            "n_atoms must be >= 3, got {n_atoms}"
        )));
    }
    let n = n_atoms;
    let mut t = DMatrix::zeros(n + 1, n + 1);
    for j in 1..n {
        let row = j - 1;
        let m = (n - j) as f64;
        t[(row, j - 1)] = m.sqrt() / (m + 1.0).sqrt();
        let tail = -1.0 / ((m + 1.0) * m).sqrt();
        for col in j..n {
            t[(row, col)] = tail;
        }
    }
    let bright = 1.0 / (2.0 * n as f64).sqrt();
    for col in 0..n {
        t[(n - 1, col)] = -bright;
        t[(n, col)] = bright;
    }
    t[(n - 1, n)] = std::f64::consts::FRAC_1_SQRT_2;
    t[(n, n)] = std::f64::consts::FRAC_1_SQRT_2;
    Ok(NormalModeTransform {
        t_matrix: t,
        n_atoms,
    })
}

impl NormalModeTransform {
    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// χ_{β,α} = t_{α,β}: weight of bare mode β (1-based) in c_α (1-based).
    pub fn chi(&self, beta: usize, alpha: usize) -> f64 {
        self.t_matrix[(alpha - 1, beta - 1)]
    }

    /// max |T·Tᵀ − I|.
    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.dim();
        let prod = &self.t_matrix * self.t_matrix.transpose();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - expect).abs());
            }
        }
        worst
    }

    /// Dump rows as CSV with 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in 0..self.dim() {
            let line: Vec<String> = (0..self.dim())
                .map(|col| format!("{:.16e}", self.t_matrix[(row, col)]))
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Detunings Δ_α between the atomic transition and the delocalized modes:
/// Δ for the dark modes, Δ + √N ν and Δ − √N ν for the bright pair.
pub fn detuning_spectrum(p: &SystemParams) -> DVector<f64> {
    let n = p.n_atoms;
    let shift = p.bright_shift();
    let mut d = DVector::from_element(n + 1, p.delta);
    d[n - 1] = p.delta + shift;
    d[n] = p.delta - shift;
    d
}

/// H₁ restricted to the one-photon subspace {cavity 1..N, fiber}, as a real
/// symmetric (N+1)×(N+1) matrix.
pub fn photon_coupling_matrix(p: &SystemParams) -> DMatrix<f64> {
    let n = p.n_atoms;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for l in 0..n {
        m[(l, n)] = p.nu;
        m[(n, l)] = p.nu;
    }
    m
}

/// Conjugate the one-photon block of H₁ by the transform and return the
/// max-abs deviation from diag(0, …, 0, −√N ν, +√N ν). A residual at
/// rounding level certifies both the diagonalization and the sign ordering
/// of the bright modes.
pub fn verify_diagonalization(p: &SystemParams, tr: &NormalModeTransform) -> Result<f64> {
    if tr.n_atoms != p.n_atoms {
        return Err(Error::DimensionMismatch(format!(
            "transform built for N={}, params have N={}",
            tr.n_atoms, p.n_atoms
        )));
    }
    let n = p.n_atoms;
    let m = photon_coupling_matrix(p);
    let conj = &tr.t_matrix * m * tr.t_matrix.transpose();
    let shift = p.bright_shift();
    let mut worst = 0.0_f64;
    for i in 0..n + 1 {
        for j in 0..n + 1 {
            let expect = if i == j && i == n - 1 {
                -shift
            } else if i == j && i == n {
                shift
            } else {
                0.0
            };
            worst = worst.max((conj[(i, j)] - expect).abs());
        }
    }
    Ok(worst)
}
