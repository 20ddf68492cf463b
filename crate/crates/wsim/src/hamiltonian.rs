//! Hamiltonian builders.
//!
//! Three views of the same physics, all in units of the atom-cavity rate f:
//!
//! * full single-excitation sector (dim 2N+2), either as a static
//!   rotating-frame matrix with Δ on the excited atoms or as the
//!   interaction picture where the atom-cavity coupling carries e^{∓iΔt};
//! * effective atom-only N×N matrix with level shift ξ_N on the diagonal
//!   and hopping −η_N everywhere else, valid in the dispersive regime;
//! * untruncated tensor-product (Fock) build used to certify that the
//!   single-excitation sector is exactly closed.
//!
//! The two full views are related by ψ_I = e^{iDt}ψ_S with D = Δ·(projector
//! on excited atoms), a sector-diagonal phase, so populations and fidelities
//! agree between frames.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::analytic;
use crate::model::{BasisLabel, SystemParams, C64};
use crate::normal_modes::{detuning_spectrum, NormalModeTransform};
use crate::{Error, Result};

pub const DEFAULT_FOCK_DIM_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    FullStatic,
    /// Evaluated at a fixed time; the tag keeps the evaluation honest when a
    /// matrix escapes into generic code.
    FullInteractionPicture,
    EffectiveAtomic,
}

#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub elements: DMatrix<C64>,
    pub representation: Representation,
    pub n_atoms: usize,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// max |H − H†|.
    pub fn hermiticity_residual(&self) -> f64 {
        crate::model::hermiticity_residual(&self.elements)
    }

    /// Dump as CSV, complex entries as adjacent re,im column pairs,
    /// 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in 0..self.dim() {
            let line: Vec<String> = (0..self.dim())
                .map(|col| {
                    let z = self.elements[(row, col)];
                    format!("{:.16e},{:.16e}", z.re, z.im)
                })
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Static rotating frame: Δ on each excited atom, f between atom l and
/// cavity l, ν between each cavity and the fiber, vacuum row/column zero.
pub fn build_full_static(p: &SystemParams) -> HamiltonianMatrix {
    let n = p.n_atoms;
    let dim = p.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for l in 1..=n {
        let atom = BasisLabel::AtomExcited(l).index(n).unwrap();
        let cav = BasisLabel::CavityPhoton(l).index(n).unwrap();
        let fib = BasisLabel::FiberPhoton.index(n).unwrap();
        h[(atom, atom)] = Complex::new(p.delta, 0.0);
        h[(atom, cav)] = Complex::new(p.f, 0.0);
        h[(cav, atom)] = Complex::new(p.f, 0.0);
        h[(cav, fib)] = Complex::new(p.nu, 0.0);
        h[(fib, cav)] = Complex::new(p.nu, 0.0);
    }
    HamiltonianMatrix {
        elements: h,
        representation: Representation::FullStatic,
        n_atoms: n,
    }
}

/// Interaction picture at time t: zero diagonal, cavity-fiber coupling ν,
/// and ⟨cavity l|H|atom l⟩ = f·e^{−iΔt}.
pub fn build_full_interaction_picture(p: &SystemParams, t: f64) -> HamiltonianMatrix {
    let n = p.n_atoms;
    let dim = p.dim();
    let mut h = DMatrix::zeros(dim, dim);
    let phase = Complex::from_polar(p.f, -p.delta * t);
    for l in 1..=n {
        let atom = BasisLabel::AtomExcited(l).index(n).unwrap();
        let cav = BasisLabel::CavityPhoton(l).index(n).unwrap();
        let fib = BasisLabel::FiberPhoton.index(n).unwrap();
        h[(cav, atom)] = phase;
        h[(atom, cav)] = phase.conj();
        h[(cav, fib)] = Complex::new(p.nu, 0.0);
        h[(fib, cav)] = Complex::new(p.nu, 0.0);
    }
    HamiltonianMatrix {
        elements: h,
        representation: Representation::FullInteractionPicture,
        n_atoms: n,
    }
}

/// Dispersive atom-only matrix: ξ_N on the diagonal, −η_N off it, over the
/// excited-atom labels. Fails on the singular manifold Δ = 0 or Δ² = Nν².
pub fn build_effective(p: &SystemParams) -> Result<HamiltonianMatrix> {
    let c = analytic::effective_couplings(p)?;
    let n = p.n_atoms;
    let mut h = DMatrix::from_element(n, n, Complex::new(-c.eta, 0.0));
    for l in 0..n {
        h[(l, l)] = Complex::new(c.xi, 0.0);
    }
    Ok(HamiltonianMatrix {
        elements: h,
        representation: Representation::EffectiveAtomic,
        n_atoms: n,
    })
}

/// Same matrix as [`build_effective`], but evaluated as the mode sum
/// ξ_lm = f² Σ_α χ_{l,α}χ_{m,α}/Δ_α over the delocalized modes, with no
/// reference to the closed form. Agreement between the two is the in-repo
/// proof that the closed form is the correct resummation.
pub fn effective_from_sum(p: &SystemParams, tr: &NormalModeTransform) -> Result<HamiltonianMatrix> {
    if tr.n_atoms != p.n_atoms {
        return Err(Error::DimensionMismatch(format!(
            "transform built for N={}, params have N={}",
            tr.n_atoms, p.n_atoms
        )));
    }
    analytic::guard_dispersive_singularity(p)?;
    let n = p.n_atoms;
    let deltas = detuning_spectrum(p);
    let f2 = p.f * p.f;
    let mut h = DMatrix::zeros(n, n);
    for l in 1..=n {
        for m in 1..=n {
            let mut sum = 0.0;
            for alpha in 1..=n + 1 {
                sum += tr.chi(l, alpha) * tr.chi(m, alpha) / deltas[alpha - 1];
            }
            h[(l - 1, m - 1)] = Complex::new(f2 * sum, 0.0);
        }
    }
    Ok(HamiltonianMatrix {
        elements: h,
        representation: Representation::EffectiveAtomic,
        n_atoms: n,
    })
}

/// Excitation-number operator on the single-excitation sector: 0 on the
/// vacuum, 1 on every other label.
pub fn excitation_number_matrix(n_atoms: usize) -> DMatrix<C64> {
    let dim = 2 * n_atoms + 2;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j && i > 0 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// max |AB − BA|.
pub fn commutator_residual(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let c = a * b - b * a;
    c.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Basis bookkeeping for the untruncated build: N two-level atoms times
/// N+1 bosonic modes each cut at n_max photons. State index is
/// q·(n_max+1)^{N+1} + Σ_m n_m·(n_max+1)^m with q the atomic bit pattern
/// (bit l−1 set ⇔ atom l excited) and modes m = 0..N−1 the cavities,
/// m = N the fiber.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub n_atoms: usize,
    pub n_max: usize,
    pub dim: usize,
    photon_dim: usize,
}

impl FockSpace {
    pub fn new(n_atoms: usize, n_max: usize, dim_cap: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParams(format!(
                "n_max must be >= 1, got {n_max}"
            )));
        }
        let base = n_max + 1;
        let photon_dim = (0..n_atoms + 1)
            .try_fold(1usize, |acc, _| acc.checked_mul(base))
            .ok_or_else(|| Error::DimensionCap("photon space overflows usize".into()))?;
        let dim = 1usize
            .checked_shl(n_atoms as u32)
            .and_then(|q| q.checked_mul(photon_dim))
            .ok_or_else(|| Error::DimensionCap("total space overflows usize".into()))?;
        if dim > dim_cap {
            return Err(Error::DimensionCap(format!(
                "dimension {dim} exceeds cap {dim_cap} (N={n_atoms}, n_max={n_max})"
            )));
        }
        Ok(FockSpace {
            n_atoms,
            n_max,
            dim,
            photon_dim,
        })
    }

    fn atom_bits(&self, index: usize) -> usize {
        index / self.photon_dim
    }

    /// Occupation of mode m (0-based; m = N is the fiber) in a basis index.
    fn occupation(&self, index: usize, mode: usize) -> usize {
        let base = self.n_max + 1;
        (index % self.photon_dim) / base.pow(mode as u32) % base
    }

    fn with_occupation_shift(&self, index: usize, mode: usize, shift: isize) -> usize {
        let base = self.n_max + 1;
        (index as isize + shift * base.pow(mode as u32) as isize) as usize
    }

    /// Index of the basis state matching a single-excitation sector label.
    pub fn embed_label(&self, label: BasisLabel) -> usize {
        match label {
            BasisLabel::Vacuum => 0,
            BasisLabel::AtomExcited(l) => (1 << (l - 1)) * self.photon_dim,
            BasisLabel::CavityPhoton(l) => (self.n_max + 1).pow((l - 1) as u32),
            BasisLabel::FiberPhoton => (self.n_max + 1).pow(self.n_atoms as u32),
        }
    }

    /// Lift a sector state into the tensor-product space.
    pub fn embed_sector_state(&self, psi: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        for (i, label) in BasisLabel::all(self.n_atoms).enumerate() {
            out[self.embed_label(label)] = psi[i];
        }
        out
    }

    /// Project a tensor-product state back onto the sector labels.
    pub fn project_to_sector(&self, phi: &DVector<C64>) -> DVector<C64> {
        let labels: Vec<BasisLabel> = BasisLabel::all(self.n_atoms).collect();
        DVector::from_fn(labels.len(), |i, _| phi[self.embed_label(labels[i])])
    }

    /// Diagonal of the total excitation-number operator.
    pub fn excitation_numbers(&self) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| {
            let atoms = self.atom_bits(i).count_ones() as f64;
            let photons: usize = (0..self.n_atoms + 1).map(|m| self.occupation(i, m)).sum();
            atoms + photons as f64
        })
    }
}

#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    pub space: FockSpace,
    pub matrix: DMatrix<C64>,
}

/// Static-frame Hamiltonian on the full tensor-product space, used to show
/// the sector build drops nothing. Dimension 2^N·(n_max+1)^{N+1} must stay
/// under `dim_cap`.
pub fn build_full_fock_with_cap(
    p: &SystemParams,
    n_max: usize,
    dim_cap: usize,
) -> Result<FockHamiltonian> {
    let space = FockSpace::new(p.n_atoms, n_max, dim_cap)?;
    let n = p.n_atoms;
    let base = space.n_max;
    let mut h: DMatrix<C64> = DMatrix::zeros(space.dim, space.dim);
    for j in 0..space.dim {
        let bits = space.atom_bits(j);
        h[(j, j)] = Complex::new(p.delta * bits.count_ones() as f64, 0.0);
        for l in 0..n {
            // σ_l⁺ a_l: atom l flips g→e while cavity l loses one photon.
            let n_cav = space.occupation(j, l);
            if bits & (1 << l) == 0 && n_cav >= 1 {
                let i = space.with_occupation_shift(j, l, -1) + (1 << l) * space.photon_dim;
                let amp = Complex::new(p.f * (n_cav as f64).sqrt(), 0.0);
                h[(i, j)] += amp;
                h[(j, i)] += amp;
            }
            // a_l† b: cavity l gains a photon from the fiber.
            let n_fib = space.occupation(j, n);
            if n_fib >= 1 && n_cav < base {
                let i = space.with_occupation_shift(
                    space.with_occupation_shift(j, n, -1),
                    l,
                    1,
                );
                let amp = Complex::new(
                    p.nu * ((n_cav + 1) as f64).sqrt() * (n_fib as f64).sqrt(),
                    0.0,
                );
                h[(i, j)] += amp;
                h[(j, i)] += amp;
            }
        }
    }
    Ok(FockHamiltonian { space, matrix: h })
}

pub fn build_full_fock(p: &SystemParams, n_max: usize) -> Result<FockHamiltonian> {
    build_full_fock_with_cap(p, n_max, DEFAULT_FOCK_DIM_CAP)
}
