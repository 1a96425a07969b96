//! The three patch-pair states: traced, φ-measured, π-measured.
//!
//! Two patches of `d` sites separated by `r̃` empty sites are cut out of the
//! lattice vacuum. Discarding the external volume keeps the intra-patch
//! correlator blocks (`G = (K⁻¹)_pp/2`, `H = K_pp/2`); projectively
//! measuring the volume instead yields a pure state whose field (or
//! momentum) block is inverted after restriction rather than before:
//!
//! ```text
//! traced:      G = (K⁻¹)_pp / 2        H = K_pp / 2
//! measured φ:  G = (K_pp)⁻¹ / 2        H = K_pp / 2
//! measured π:  G = (K⁻¹)_pp / 2        H = ((K⁻¹)_pp)⁻¹ / 2
//! ```
//!
//! The classical noise lost under tracing is `Y = σ^(t) − σ^(m) ⪰ 0`, a
//! distribution of first-moment displacements living entirely in the
//! measured basis's conjugate coordinates.

use crate::error::{Error, Result};
use crate::gaussian::GHPair;
use crate::lattice::{assemble_k_block, CorrelationKernel, KernelKind, Volume};
use crate::precision::{hp_inverse, sym_eigen, HPMatrix, PrecisionContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::NegAssign;
use rug::Float;

/// Two disjoint patches of `d` sites each, separated by `gap` sites.
/// Patch A occupies `{0…d−1}`, patch B `{d+gap…2d+gap−1}`; the pattern is
/// mirror-symmetric about the gap midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchPair {
    d: usize,
    gap: usize,
}

impl PatchPair {
    pub fn new(d: usize, gap: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::Geometry("patches need at least one site".into()));
        }
        Ok(Self { d, gap })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gap(&self) -> usize {
        self.gap
    }

    pub fn a_sites(&self) -> Vec<usize> {
        (0..self.d).collect()
    }

    pub fn b_sites(&self) -> Vec<usize> {
        (self.d + self.gap..2 * self.d + self.gap).collect()
    }

    /// Absolute lattice sites of both patches, A first.
    pub fn patch_sites(&self) -> Vec<usize> {
        let mut s = self.a_sites();
        s.extend(self.b_sites());
        s
    }

    /// Mode indices of patch B within the patch-pair state (A modes come
    /// first).
    pub fn b_mode_indices(&self) -> Vec<usize> {
        (self.d..2 * self.d).collect()
    }

    /// External-volume sites on a finite lattice.
    pub fn volume_sites(&self, n: usize) -> Vec<usize> {
        let patch: std::collections::HashSet<usize> = self.patch_sites().into_iter().collect();
        (0..n).filter(|s| !patch.contains(s)).collect()
    }

    fn check_fits(&self, kernel: &CorrelationKernel) -> Result<()> {
        if let Volume::FiniteN(n) = kernel.spec().volume() {
            if n <= 2 * self.d + self.gap {
                return Err(Error::Geometry(format!(
                    "patch pair (d={}, r̃={}) wraps around an N={} lattice",
                    self.d, self.gap, n
                )));
            }
        }
        Ok(())
    }
}

/// How the external volume is disposed of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObservationProtocol {
    Traced,
    MeasuredPhi,
    MeasuredPi,
}

impl ObservationProtocol {
    pub const ALL: [Self; 3] = [Self::Traced, Self::MeasuredPhi, Self::MeasuredPi];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Traced => "traced",
            Self::MeasuredPhi => "measured-phi",
            Self::MeasuredPi => "measured-pi",
        }
    }
}

/// Volume-measurement basis for the noise decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementBasis {
    Phi,
    Pi,
}

impl MeasurementBasis {
    /// Kernel whose blocks drive this basis (`K` for φ, `K⁻¹` for π).
    fn kind(&self) -> KernelKind {
        match self {
            Self::Phi => KernelKind::K,
            Self::Pi => KernelKind::Kinv,
        }
    }
}

/// Builds the patch-pair state for the given protocol.
pub fn patch_state(
    kernel: &CorrelationKernel,
    pair: &PatchPair,
    proto: ObservationProtocol,
    ctx: &PrecisionContext,
) -> Result<GHPair> {
    pair.check_fits(kernel)?;
    let p = pair.patch_sites();
    let half: Float = ctx.one() >> 1u32;
    let (g, h) = match proto {
        ObservationProtocol::Traced => {
            let g = assemble_k_block(kernel, &p, &p, KernelKind::Kinv)?.scale(&half, ctx);
            let h = assemble_k_block(kernel, &p, &p, KernelKind::K)?.scale(&half, ctx);
            (g, h)
        }
        ObservationProtocol::MeasuredPhi => {
            let kpp = assemble_k_block(kernel, &p, &p, KernelKind::K)?;
            let g = hp_inverse(&kpp, ctx)?.symmetrized(ctx).scale(&half, ctx);
            let h = kpp.scale(&half, ctx);
            (g, h)
        }
        ObservationProtocol::MeasuredPi => {
            let kinv_pp = assemble_k_block(kernel, &p, &p, KernelKind::Kinv)?;
            let g = kinv_pp.scale(&half, ctx);
            let h = hp_inverse(&kinv_pp, ctx)?.symmetrized(ctx).scale(&half, ctx);
            (g, h)
        }
    };
    GHPair::new(g, h)
}

/// Classical displacement noise `Y = σ^(t) − σ^(m)` split into its φφ and
/// ππ blocks; exactly one block is nonzero depending on the basis.
#[derive(Debug, Clone)]
pub struct NoiseMatrix {
    y_phi: HPMatrix,
    y_pi: HPMatrix,
}

impl NoiseMatrix {
    pub fn y_phi(&self) -> &HPMatrix {
        &self.y_phi
    }

    pub fn y_pi(&self) -> &HPMatrix {
        &self.y_pi
    }
}

/// Computes `Y` by the basis-independent difference form, cross-checked on
/// finite lattices against the closed form
/// `Y = (I − K̄)⁻¹ K̄ (K_pp)⁻¹` with `K̄ = (K_pp)⁻¹ K_pv (K_vv)⁻¹ K_pvᵀ`
/// (in the measured kernel), and verified positive semidefinite.
pub fn noise_matrix(
    kernel: &CorrelationKernel,
    pair: &PatchPair,
    basis: MeasurementBasis,
    ctx: &PrecisionContext,
) -> Result<NoiseMatrix> {
    pair.check_fits(kernel)?;
    let traced = patch_state(kernel, pair, ObservationProtocol::Traced, ctx)?;
    let (measured_proto, y_nonzero_is_phi) = match basis {
        MeasurementBasis::Phi => (ObservationProtocol::MeasuredPhi, true),
        MeasurementBasis::Pi => (ObservationProtocol::MeasuredPi, false),
    };
    let measured = patch_state(kernel, pair, measured_proto, ctx)?;

    let two = ctx.int(2);
    let y = if y_nonzero_is_phi {
        traced.g().sub(measured.g(), ctx).scale(&two, ctx)
    } else {
        traced.h().sub(measured.h(), ctx).scale(&two, ctx)
    };

    // PSD to within eigensolver tolerance
    let (vals, _) = sym_eigen(&y, ctx)?;
    let mut bound = ctx.eig_tol();
    bound *= y.max_abs().max(&ctx.one());
    bound.neg_assign();
    if let Some(bad) = vals.first() {
        if *bad < bound {
            return Err(Error::Precision(format!(
                "noise matrix eigenvalue {:e} below PSD tolerance",
                bad.to_f64()
            )));
        }
    }

    // closed form needs the finite volume blocks
    if let Volume::FiniteN(n) = kernel.spec().volume() {
        let kind = basis.kind();
        let p = pair.patch_sites();
        let v = pair.volume_sites(n);
        let kpp = assemble_k_block(kernel, &p, &p, kind)?;
        let kpv = assemble_k_block(kernel, &p, &v, kind)?;
        let kvv = assemble_k_block(kernel, &v, &v, kind)?;
        let kpp_inv = hp_inverse(&kpp, ctx)?;
        let kvv_inv = hp_inverse(&kvv, ctx)?;
        let kbar = kpp_inv
            .mul(&kpv, ctx)
            .mul(&kvv_inv, ctx)
            .mul(&kpv.transpose(), ctx);
        let eye = HPMatrix::identity(ctx, p.len());
        let closed = hp_inverse(&eye.sub(&kbar, ctx), ctx)?
            .mul(&kbar, ctx)
            .mul(&kpp_inv, ctx);
        let dev = closed.sub(&y, ctx).max_abs();
        let mut allowed = ctx.eig_tol();
        allowed *= y.max_abs().max(&ctx.one());
        if dev > allowed {
            return Err(Error::Precision(format!(
                "difference and closed forms of Y disagree by {:e}",
                dev.to_f64()
            )));
        }
    }

    let zero = HPMatrix::zeros(ctx, y.rows(), y.cols());
    let (y_phi, y_pi) = if y_nonzero_is_phi {
        (y, zero)
    } else {
        (zero, y)
    };
    Ok(NoiseMatrix { y_phi, y_pi })
}

/// First-moment displacements of the patch fields induced by a measured
/// volume configuration: `⟨φ_p⟩ = −(K_pp)⁻¹ K_pv φ_v`.
pub fn displacement_from_volume(
    kernel: &CorrelationKernel,
    pair: &PatchPair,
    phi_v: &[Float],
    ctx: &PrecisionContext,
) -> Result<Vec<Float>> {
    let n = match kernel.spec().volume() {
        Volume::FiniteN(n) => n,
        Volume::Infinite => {
            return Err(Error::Unsupported(
                "volume configurations require a finite lattice".into(),
            ))
        }
    };
    pair.check_fits(kernel)?;
    let v = pair.volume_sites(n);
    if phi_v.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "volume configuration has {} entries for {} volume sites",
            phi_v.len(),
            v.len()
        )));
    }
    let p = pair.patch_sites();
    let kpp = assemble_k_block(kernel, &p, &p, KernelKind::K)?;
    let kpv = assemble_k_block(kernel, &p, &v, KernelKind::K)?;
    let u = kpv.mul_vec(phi_v, ctx);
    let mut disp = hp_inverse(&kpp, ctx)?.mul_vec(&u, ctx);
    for x in disp.iter_mut() {
        x.neg_assign();
    }
    Ok(disp)
}

/// Monte-Carlo verification that the ensemble of measurement-conditioned
/// displacements reproduces the noise matrix.
#[derive(Debug, Clone, Default)]
pub struct MixtureReport {
    pub n_samples: usize,
    /// Largest `|2·E[⟨q_i⟩⟨q_j⟩] − Y_ij|` over patch entries.
    pub max_abs_deviation: Option<f64>,
    /// The same deviation in units of its Monte-Carlo standard error.
    pub max_deviation_in_se: Option<f64>,
}

/// Samples volume configurations from the vacuum marginal (covariance
/// `(K_vv − K_pvᵀ (K_pp)⁻¹ K_pv)⁻¹ / 2` in the measured basis), maps each to
/// its displacement, and compares `2·E[⟨q_i⟩⟨q_j⟩]` against `Y`.
///
/// Double precision suffices for a sampling check; the comparison target is
/// the high-precision noise matrix rounded to f64.
pub fn mixture_reconstruction_check(
    kernel: &CorrelationKernel,
    pair: &PatchPair,
    basis: MeasurementBasis,
    n_samples: usize,
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<MixtureReport> {
    let n = match kernel.spec().volume() {
        Volume::FiniteN(n) => n,
        Volume::Infinite => {
            return Err(Error::Unsupported(
                "mixture sampling requires a finite lattice".into(),
            ))
        }
    };
    if n_samples == 0 {
        return Ok(MixtureReport::default());
    }
    pair.check_fits(kernel)?;

    let kind = basis.kind();
    let p = pair.patch_sites();
    let v = pair.volume_sites(n);
    let np = p.len();
    let nv = v.len();

    let kpp = assemble_k_block(kernel, &p, &p, kind)?;
    let kpv = assemble_k_block(kernel, &p, &v, kind)?;
    let kvv = assemble_k_block(kernel, &v, &v, kind)?;
    let kpp_inv = hp_inverse(&kpp, ctx)?;

    // volume marginal covariance (Schur complement inverse, halved)
    let schur = kvv.sub(
        &kpv.transpose().mul(&kpp_inv, ctx).mul(&kpv, ctx),
        ctx,
    );
    let half: Float = ctx.one() >> 1u32;
    let cov_v = hp_inverse(&schur, ctx)?.symmetrized(ctx).scale(&half, ctx);

    // displacement map −(K_pp)⁻¹ K_pv, in f64 for sampling
    let map_hp = kpp_inv.mul(&kpv, ctx);
    let mut map = vec![vec![0f64; nv]; np];
    for (i, row) in map.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = -map_hp[(i, j)].to_f64();
        }
    }

    // Cholesky of the volume covariance
    let covf = cov_v.to_f64();
    let mut chol = vec![vec![0f64; nv]; nv];
    for i in 0..nv {
        for j in 0..=i {
            let mut s = covf[i][j];
            for k in 0..j {
                s -= chol[i][k] * chol[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Precision(format!(
                        "volume covariance lost positivity at pivot {i} ({s:e})"
                    )));
                }
                chol[i][j] = s.sqrt();
            } else {
                chol[i][j] = s / chol[j][j];
            }
        }
    }

    let noise = noise_matrix(kernel, pair, basis, ctx)?;
    let target_hp = match basis {
        MeasurementBasis::Phi => noise.y_phi(),
        MeasurementBasis::Pi => noise.y_pi(),
    };
    let target = target_hp.to_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 {
        // Box–Muller
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };

    let mut sum = vec![vec![0f64; np]; np];
    let mut sum_sq = vec![vec![0f64; np]; np];
    let mut z = vec![0f64; nv];
    let mut conf = vec![0f64; nv];
    let mut disp = vec![0f64; np];
    for _ in 0..n_samples {
        for zi in z.iter_mut() {
            *zi = gauss();
        }
        for i in 0..nv {
            let mut acc = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                acc += chol[i][k] * zk;
            }
            conf[i] = acc;
        }
        for (i, d) in disp.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, c) in conf.iter().enumerate() {
                acc += map[i][j] * c;
            }
            *d = acc;
        }
        for i in 0..np {
            for j in i..np {
                let prod = 2.0 * disp[i] * disp[j];
                sum[i][j] += prod;
                sum_sq[i][j] += prod * prod;
            }
        }
    }

    let nf = n_samples as f64;
    let mut max_dev = 0f64;
    let mut max_in_se = 0f64;
    for i in 0..np {
        for j in i..np {
            let mean = sum[i][j] / nf;
            let var = (sum_sq[i][j] / nf - mean * mean).max(0.0);
            let se = (var / nf).sqrt().max(f64::MIN_POSITIVE);
            let dev = (mean - target[i][j]).abs();
            max_dev = max_dev.max(dev);
            max_in_se = max_in_se.max(dev / se);
        }
    }
    Ok(MixtureReport {
        n_samples,
        max_abs_deviation: Some(max_dev),
        max_deviation_in_se: Some(max_in_se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{log_negativity, pt_symplectic_spectrum};
    use crate::lattice::LatticeSpec;
    use crate::precision::determinant;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256)
    }

    fn finite_kernel(ctx: &PrecisionContext, n: usize, mass: &str) -> CorrelationKernel {
        CorrelationKernel::new(LatticeSpec::finite(ctx, n, mass).unwrap(), *ctx)
    }

    fn negativity(
        kernel: &CorrelationKernel,
        pair: &PatchPair,
        proto: ObservationProtocol,
        ctx: &PrecisionContext,
    ) -> Float {
        let gh = patch_state(kernel, pair, proto, ctx).unwrap();
        let spec = pt_symplectic_spectrum(&gh, &pair.b_mode_indices(), ctx).unwrap();
        log_negativity(&spec, ctx)
    }

    #[test]
    fn site_lists_and_geometry_guard() {
        let pair = PatchPair::new(2, 3).unwrap();
        assert_eq!(pair.a_sites(), vec![0, 1]);
        assert_eq!(pair.b_sites(), vec![5, 6]);
        assert_eq!(pair.b_mode_indices(), vec![2, 3]);
        assert_eq!(pair.volume_sites(8), vec![2, 3, 4, 7]);
        assert!(PatchPair::new(0, 1).is_err());

        let ctx = ctx();
        let kern = finite_kernel(&ctx, 6, "0.3");
        let too_big = PatchPair::new(2, 2).unwrap();
        match patch_state(&kern, &too_big, ObservationProtocol::Traced, &ctx) {
            Err(Error::Geometry(_)) => {}
            other => panic!("expected Geometry error, got {other:?}"),
        }
    }

    #[test]
    fn six_site_measured_state_matches_published_matrix() {
        // σ^(m,φ) for the {1,4} sites of the six-site, m = 0.3 ring:
        // diag (0.758, 1.321) with cross entries (0.028, −0.049), N = 0.054
        let ctx = ctx();
        let kern = finite_kernel(&ctx, 6, "0.3");
        let pair = PatchPair::new(1, 2).unwrap();
        let gh = patch_state(&kern, &pair, ObservationProtocol::MeasuredPhi, &ctx).unwrap();
        let sigma_phi00 = (gh.g()[(0, 0)].clone() << 1u32).to_f64();
        let sigma_pi00 = (gh.h()[(0, 0)].clone() << 1u32).to_f64();
        let sigma_phi01 = (gh.g()[(0, 1)].clone() << 1u32).to_f64();
        let sigma_pi01 = (gh.h()[(0, 1)].clone() << 1u32).to_f64();
        assert!((sigma_phi00 - 0.758).abs() < 5e-4, "{sigma_phi00}");
        assert!((sigma_pi00 - 1.321).abs() < 5e-4, "{sigma_pi00}");
        assert!((sigma_phi01 - 0.028).abs() < 5e-4, "{sigma_phi01}");
        assert!((sigma_pi01 + 0.049).abs() < 5e-4, "{sigma_pi01}");

        let neg = negativity(&kern, &pair, ObservationProtocol::MeasuredPhi, &ctx).to_f64();
        assert!((neg - 0.054).abs() < 5e-4, "N = {neg}");
    }

    #[test]
    fn six_site_traced_negativities_match_published_values() {
        let ctx = ctx();
        let kern = finite_kernel(&ctx, 6, "0.3");
        let expect = [(0usize, 0.422), (1, 0.039)];
        for (gap, val) in expect {
            let pair = PatchPair::new(1, gap).unwrap();
            let neg = negativity(&kern, &pair, ObservationProtocol::Traced, &ctx).to_f64();
            assert!((neg - val).abs() < 5e-4, "r̃={gap}: N = {neg}, expected {val}");
        }
        // separable at r̃ = 2: exactly zero through the sharp predicate
        let pair = PatchPair::new(1, 2).unwrap();
        let neg = negativity(&kern, &pair, ObservationProtocol::Traced, &ctx);
        assert!(neg.is_zero());
    }

    #[test]
    fn measured_states_share_blocks_with_traced() {
        let ctx = ctx();
        let kern = CorrelationKernel::new(LatticeSpec::infinite(&ctx, "0.5").unwrap(), ctx);
        let pair = PatchPair::new(2, 1).unwrap();
        let traced = patch_state(&kern, &pair, ObservationProtocol::Traced, &ctx).unwrap();
        let mphi = patch_state(&kern, &pair, ObservationProtocol::MeasuredPhi, &ctx).unwrap();
        let mpi = patch_state(&kern, &pair, ObservationProtocol::MeasuredPi, &ctx).unwrap();
        assert!(mphi.h().sub(traced.h(), &ctx).max_abs().is_zero());
        assert!(mpi.g().sub(traced.g(), &ctx).max_abs().is_zero());
    }

    #[test]
    fn measured_states_are_pure_traced_is_mixed() {
        let ctx = ctx();
        let kern = CorrelationKernel::new(LatticeSpec::infinite(&ctx, "0.5").unwrap(), ctx);
        let pair = PatchPair::new(2, 1).unwrap();
        let det_4gh = |gh: &GHPair| -> Float {
            let four = ctx.int(4);
            let prod = gh.g().mul(gh.h(), &ctx).scale(&four, &ctx);
            determinant(&prod, &ctx).unwrap()
        };
        for proto in [ObservationProtocol::MeasuredPhi, ObservationProtocol::MeasuredPi] {
            let gh = patch_state(&kern, &pair, proto, &ctx).unwrap();
            let dev = (det_4gh(&gh) - 1u32).abs();
            assert!(dev < ctx.eig_tol(), "{proto:?} purity dev {:e}", dev.to_f64());
        }
        let traced = patch_state(&kern, &pair, ObservationProtocol::Traced, &ctx).unwrap();
        let det = det_4gh(&traced);
        assert!(det > 1u32, "traced det(4GH) = {}", det.to_f64());
    }

    #[test]
    fn noise_matrix_lives_in_the_conjugate_block() {
        let ctx = ctx();
        let kern = finite_kernel(&ctx, 12, "0.5");
        let pair = PatchPair::new(2, 2).unwrap();
        // difference form and closed form are cross-checked inside the call
        let noise_phi = noise_matrix(&kern, &pair, MeasurementBasis::Phi, &ctx).unwrap();
        assert!(noise_phi.y_pi().max_abs().is_zero());
        assert!(noise_phi.y_phi().max_abs() > 0u32);
        let noise_pi = noise_matrix(&kern, &pair, MeasurementBasis::Pi, &ctx).unwrap();
        assert!(noise_pi.y_phi().max_abs().is_zero());
        assert!(noise_pi.y_pi().max_abs() > 0u32);
    }

    #[test]
    fn measured_cm_is_dominated_by_traced_cm() {
        // σ^(m) ⪯ σ^(t): the difference is the PSD noise, checked per basis
        let ctx = ctx();
        let kern = CorrelationKernel::new(LatticeSpec::infinite(&ctx, "0.5").unwrap(), ctx);
        let pair = PatchPair::new(2, 1).unwrap();
        let traced = patch_state(&kern, &pair, ObservationProtocol::Traced, &ctx).unwrap();
        for (proto, phi_side) in [
            (ObservationProtocol::MeasuredPhi, true),
            (ObservationProtocol::MeasuredPi, false),
        ] {
            let m = patch_state(&kern, &pair, proto, &ctx).unwrap();
            let diff = if phi_side {
                traced.g().sub(m.g(), &ctx)
            } else {
                traced.h().sub(m.h(), &ctx)
            };
            let (vals, _) = sym_eigen(&diff.symmetrized(&ctx), &ctx).unwrap();
            let mut floor = ctx.eig_tol();
            floor.neg_assign();
            assert!(vals[0] >= floor, "{proto:?} dominance violated: {:e}", vals[0].to_f64());
        }
    }

    #[test]
    fn traced_wide_pair_is_physical_but_mixed() {
        let ctx = ctx();
        let kern = CorrelationKernel::new(LatticeSpec::infinite(&ctx, "0.3").unwrap(), ctx);
        let pair = PatchPair::new(16, 16).unwrap();
        let gh = patch_state(&kern, &pair, ObservationProtocol::Traced, &ctx).unwrap();
        let cm = crate::gaussian::cm_from_gh(&gh, &ctx);
        let report = crate::gaussian::check_physical(&cm, &ctx).unwrap();
        assert!(report.uncertainty_ok);
        assert!(report.purity < 1u32);
    }

    #[test]
    fn displacements_are_linear_in_the_volume_configuration() {
        let ctx = ctx();
        let kern = finite_kernel(&ctx, 6, "0.3");
        let pair = PatchPair::new(1, 2).unwrap();

        let zeros = vec![ctx.zero(), ctx.zero(), ctx.zero(), ctx.zero()];
        let d0 = displacement_from_volume(&kern, &pair, &zeros, &ctx).unwrap();
        assert!(d0.iter().all(|x| x.is_zero()));

        let mut e2 = zeros.clone();
        e2[2] = ctx.one();
        let mut e0 = zeros.clone();
        e0[0] = ctx.one();
        let mut both = zeros.clone();
        both[0] = ctx.one();
        both[2] = ctx.one();
        let d_e2 = displacement_from_volume(&kern, &pair, &e2, &ctx).unwrap();
        let d_e0 = displacement_from_volume(&kern, &pair, &e0, &ctx).unwrap();
        let d_both = displacement_from_volume(&kern, &pair, &both, &ctx).unwrap();
        for i in 0..2 {
            let mut s = d_e0[i].clone();
            s += &d_e2[i];
            let dev = (s - &d_both[i]).abs();
            assert!(dev < ctx.eig_tol());
        }

        // e₂ response equals column 2 of −(K_pp)⁻¹ K_pv assembled directly
        let p = pair.patch_sites();
        let v = pair.volume_sites(6);
        let kpp = assemble_k_block(&kern, &p, &p, KernelKind::K).unwrap();
        let kpv = assemble_k_block(&kern, &p, &v, KernelKind::K).unwrap();
        let map = hp_inverse(&kpp, &ctx).unwrap().mul(&kpv, &ctx);
        for i in 0..2 {
            let mut expect = map[(i, 2)].clone();
            expect.neg_assign();
            let dev = (expect - &d_e2[i]).abs();
            assert!(dev < ctx.eig_tol());
        }

        let short = vec![ctx.zero(); 3];
        assert!(matches!(
            displacement_from_volume(&kern, &pair, &short, &ctx),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mixture_reconstruction_matches_noise_in_both_bases() {
        let ctx = ctx();
        let kern = finite_kernel(&ctx, 8, "0.5");
        let pair = PatchPair::new(1, 2).unwrap();
        for basis in [MeasurementBasis::Phi, MeasurementBasis::Pi] {
            let report =
                mixture_reconstruction_check(&kern, &pair, basis, 1_000_000, 20240913, &ctx)
                    .unwrap();
            let in_se = report.max_deviation_in_se.unwrap();
            assert!(in_se < 4.0, "{basis:?}: deviation {in_se} standard errors");
        }
        let empty =
            mixture_reconstruction_check(&kern, &pair, MeasurementBasis::Phi, 0, 1, &ctx).unwrap();
        assert_eq!(empty.n_samples, 0);
        assert!(empty.max_abs_deviation.is_none());
    }

    #[test]
    fn negativity_ordering_traced_phi_pi() {
        let ctx = ctx();
        let kern = CorrelationKernel::new(LatticeSpec::infinite(&ctx, "0.3").unwrap(), ctx);
        let pair = PatchPair::new(2, 1).unwrap();
        let n_t = negativity(&kern, &pair, ObservationProtocol::Traced, &ctx);
        let n_phi = negativity(&kern, &pair, ObservationProtocol::MeasuredPhi, &ctx);
        let n_pi = negativity(&kern, &pair, ObservationProtocol::MeasuredPi, &ctx);
        assert!(n_t <= n_phi, "{} vs {}", n_t.to_f64(), n_phi.to_f64());
        assert!(n_phi < n_pi, "{} vs {}", n_phi.to_f64(), n_pi.to_f64());
    }
}
