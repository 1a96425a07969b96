//! Covariance-matrix core for Gaussian continuous-variable states.
//!
//! States built from the lattice vacuum have vanishing ⟨φπ⟩ correlators, so
//! they are carried as a [`GHPair`] of field/momentum two-point blocks; the
//! riffled 2n×2n [`CovarianceMatrix`] (ordering φ₁,π₁,…,φₙ,πₙ, with an extra
//! factor of 2 over G and H) is materialized for validity checks and
//! symplectic work.
//!
//! The partial transpose flips the sign of conjugate momenta on one side of
//! the bipartition; the PT symplectic spectrum is `ν^Γ = 2·spec√(G·H^Γ)` and
//! only eigenvalues below one contribute to the logarithmic negativity
//! `N = −Σ log₂ min(ν_i, 1)`.

use crate::error::{Error, Result};
use crate::precision::{determinant, nonsym_eigen_similar, sym_eigen, HPMatrix, PrecisionContext};
use rug::ops::NegAssign;
use rug::Float;

/// Field and momentum two-point blocks `(G, H)` of a zero-⟨φπ⟩ state.
#[derive(Debug, Clone)]
pub struct GHPair {
    g: HPMatrix,
    h: HPMatrix,
}

impl GHPair {
    pub fn new(g: HPMatrix, h: HPMatrix) -> Result<Self> {
        if !g.is_square() || !h.is_square() || g.rows() != h.rows() {
            return Err(Error::DimensionMismatch(format!(
                "G is {}x{}, H is {}x{}",
                g.rows(),
                g.cols(),
                h.rows(),
                h.cols()
            )));
        }
        if !g.asymmetry().is_zero() {
            return Err(Error::NotSymmetric(g.asymmetry().to_f64()));
        }
        if !h.asymmetry().is_zero() {
            return Err(Error::NotSymmetric(h.asymmetry().to_f64()));
        }
        Ok(Self { g, h })
    }

    pub fn n_modes(&self) -> usize {
        self.g.rows()
    }

    pub fn g(&self) -> &HPMatrix {
        &self.g
    }

    pub fn h(&self) -> &HPMatrix {
        &self.h
    }
}

/// Riffled covariance matrix with first moments (zero unless displaced).
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    data: HPMatrix,
    first_moments: Vec<Float>,
}

impl CovarianceMatrix {
    pub fn new(data: HPMatrix, ctx: &PrecisionContext) -> Result<Self> {
        if !data.is_square() || data.rows() % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "covariance matrix must be square of even dimension, got {}x{}",
                data.rows(),
                data.cols()
            )));
        }
        let first_moments = (0..data.rows()).map(|_| ctx.zero()).collect();
        let mut data = data;
        data.symmetrize_upper();
        Ok(Self {
            data,
            first_moments,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.data.rows() / 2
    }

    pub fn matrix(&self) -> &HPMatrix {
        &self.data
    }

    pub fn first_moments(&self) -> &[Float] {
        &self.first_moments
    }

    pub fn set_first_moments(&mut self, moments: Vec<Float>) -> Result<()> {
        if moments.len() != self.data.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} first moments for dimension {}",
                moments.len(),
                self.data.rows()
            )));
        }
        self.first_moments = moments;
        Ok(())
    }

    /// Riffled sub-CM over the listed modes (first moments restricted too).
    pub fn mode_block(&self, modes: &[usize], ctx: &PrecisionContext) -> Self {
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let data = self.data.select(&idx, &idx);
        let first_moments = idx.iter().map(|&i| self.first_moments[i].clone()).collect();
        let _ = ctx;
        Self {
            data,
            first_moments,
        }
    }

    /// `1/√(det σ)`.
    pub fn purity(&self, ctx: &PrecisionContext) -> Result<Float> {
        let det = determinant(&self.data, ctx)?;
        if !det.is_sign_positive() || det.is_zero() {
            return Err(Error::Precision(format!(
                "covariance determinant must be positive, got {:e}",
                det.to_f64()
            )));
        }
        let mut p = det.sqrt();
        p.recip_mut();
        Ok(p)
    }
}

/// Riffles `(G, H)` into the covariance matrix: `σ_{2i,2j} = 2G_ij`,
/// `σ_{2i+1,2j+1} = 2H_ij`, vanishing cross-blocks and first moments.
pub fn cm_from_gh(gh: &GHPair, ctx: &PrecisionContext) -> CovarianceMatrix {
    let n = gh.n_modes();
    let mut data = HPMatrix::zeros(ctx, 2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let mut g: Float = gh.g[(i, j)].clone() << 1u32;
            let mut h: Float = gh.h[(i, j)].clone() << 1u32;
            std::mem::swap(&mut data[(2 * i, 2 * j)], &mut g);
            std::mem::swap(&mut data[(2 * i + 1, 2 * j + 1)], &mut h);
        }
    }
    CovarianceMatrix::new(data, ctx).expect("riffled CM is square and even-dimensional")
}

/// Splits a riffled CM back into `(G, H)`; errors if any ⟨φπ⟩ cross entry
/// is nonzero beyond `tol`.
pub fn gh_from_cm(cm: &CovarianceMatrix, tol: &Float, ctx: &PrecisionContext) -> Result<GHPair> {
    let n = cm.n_modes();
    let m = cm.matrix();
    for i in 0..n {
        for j in 0..n {
            let cross = m[(2 * i, 2 * j + 1)].clone().abs();
            if cross > *tol {
                return Err(Error::Contract(format!(
                    "CM has ⟨φπ⟩ correlations ({:e} at modes {i},{j})",
                    cross.to_f64()
                )));
            }
        }
    }
    let half: Float = ctx.one() >> 1u32;
    let g = HPMatrix::from_fn(n, n, |i, j| {
        let mut v = m[(2 * i, 2 * j)].clone();
        v *= &half;
        v
    });
    let h = HPMatrix::from_fn(n, n, |i, j| {
        let mut v = m[(2 * i + 1, 2 * j + 1)].clone();
        v *= &half;
        v
    });
    GHPair::new(g, h)
}

/// The symplectic form `Ω = ⊕ [[0,1],[−1,0]]` in riffled ordering.
pub fn omega(n_modes: usize, ctx: &PrecisionContext) -> HPMatrix {
    let mut w = HPMatrix::zeros(ctx, 2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        w[(2 * m, 2 * m + 1)] = ctx.one();
        w[(2 * m + 1, 2 * m)] = ctx.int(-1);
    }
    w
}

/// Partial transpose: flips `H_ij` sign when exactly one of `i, j` lies in
/// `b_sites`. Involutive; `G` is untouched.
pub fn partial_transpose(gh: &GHPair, b_sites: &[usize]) -> GHPair {
    let n = gh.n_modes();
    let in_b: Vec<bool> = {
        let mut v = vec![false; n];
        for &b in b_sites {
            v[b] = true;
        }
        v
    };
    let h = HPMatrix::from_fn(n, n, |i, j| {
        let mut v = gh.h[(i, j)].clone();
        if in_b[i] != in_b[j] {
            v.neg_assign();
        }
        v
    });
    GHPair {
        g: gh.g.clone(),
        h,
    }
}

/// Sorted partial-transpose symplectic spectrum with its bipartition.
#[derive(Debug, Clone)]
pub struct PTSpectrum {
    values: Vec<Float>,
    a_sites: Vec<usize>,
    b_sites: Vec<usize>,
}

impl PTSpectrum {
    /// Ascending PT symplectic eigenvalues `ν^Γ`.
    pub fn values(&self) -> &[Float] {
        &self.values
    }

    pub fn min(&self) -> &Float {
        &self.values[0]
    }

    pub fn bipartition(&self) -> (&[usize], &[usize]) {
        (&self.a_sites, &self.b_sites)
    }

    /// Count of eigenvalues strictly below one (the contributing ones).
    pub fn n_contributing(&self) -> usize {
        self.values.iter().filter(|v| **v < 1u32).count()
    }
}

/// `ν^Γ = 2·spec√(G·H^Γ)`, ascending, through the SPD similarity route.
pub fn pt_symplectic_spectrum(
    gh: &GHPair,
    b_sites: &[usize],
    ctx: &PrecisionContext,
) -> Result<PTSpectrum> {
    let n = gh.n_modes();
    if let Some(&bad) = b_sites.iter().find(|&&b| b >= n) {
        return Err(Error::Geometry(format!(
            "bipartition index {bad} outside {n} modes"
        )));
    }
    let pt = partial_transpose(gh, b_sites);
    let (mu, _) = nonsym_eigen_similar(&pt.g, &pt.h, ctx)?;
    let mut values = Vec::with_capacity(mu.len());
    for m in mu {
        if !m.is_sign_positive() || m.is_zero() {
            return Err(Error::Precision(format!(
                "similarity product eigenvalue {:e} is not positive; raise the working precision",
                m.to_f64()
            )));
        }
        let mut v = m.sqrt();
        v <<= 1;
        values.push(v);
    }
    let a_sites: Vec<usize> = (0..n).filter(|i| !b_sites.contains(i)).collect();
    Ok(PTSpectrum {
        values,
        a_sites,
        b_sites: b_sites.to_vec(),
    })
}

/// Logarithmic negativity `N = −Σ log₂ min(ν_i, 1)`: nonnegative, exactly
/// zero when no eigenvalue dips below one. The `min(ν, 1)` comparison is
/// exact at working precision; there is no fuzz band.
pub fn log_negativity(spectrum: &PTSpectrum, ctx: &PrecisionContext) -> Float {
    let ln2 = ctx.ln2();
    let mut total = ctx.zero();
    for v in &spectrum.values {
        if *v < 1u32 {
            let mut term = v.clone().ln();
            term /= &ln2;
            total -= term;
        }
    }
    total
}

/// Diagnostic physicality report: the uncertainty relation `σ + iΩ ⪰ 0`
/// and the purity.
#[derive(Debug, Clone)]
pub struct PhysicalityReport {
    pub min_uncertainty_eigenvalue: Float,
    pub uncertainty_ok: bool,
    pub purity: Float,
}

/// Checks `σ + iΩ ⪰ 0` via the real symmetric embedding
/// `[[σ, −Ω],[Ω, σ]]` (same spectrum, doubled) and reports the purity.
pub fn check_physical(cm: &CovarianceMatrix, ctx: &PrecisionContext) -> Result<PhysicalityReport> {
    let n2 = cm.matrix().rows();
    let w = omega(cm.n_modes(), ctx);
    let mut stacked = HPMatrix::zeros(ctx, 2 * n2, 2 * n2);
    for i in 0..n2 {
        for j in 0..n2 {
            stacked[(i, j)] = cm.matrix()[(i, j)].clone();
            stacked[(n2 + i, n2 + j)] = cm.matrix()[(i, j)].clone();
            let mut neg = w[(i, j)].clone();
            neg.neg_assign();
            stacked[(i, n2 + j)] = neg;
            stacked[(n2 + i, j)] = w[(i, j)].clone();
        }
    }
    stacked.symmetrize_upper();
    let (vals, _) = sym_eigen(&stacked, ctx)?;
    let min_eig = vals[0].clone();
    let mut neg_tol = ctx.eig_tol();
    neg_tol.neg_assign();
    let uncertainty_ok = min_eig >= neg_tol;
    let purity = cm.purity(ctx)?;
    Ok(PhysicalityReport {
        min_uncertainty_eigenvalue: min_eig,
        uncertainty_ok,
        purity,
    })
}
