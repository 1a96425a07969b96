//! Correlation kernels of the free lattice scalar field vacuum.
//!
//! The vacuum wavefunction is Gaussian with inter-site kernel `K`; the
//! two-point functions are `G = K⁻¹/2` (field) and `H = K/2` (conjugate
//! momentum). On a periodic lattice of `N` sites both `K` and `K⁻¹` have
//! exact momentum-sum matrix elements; in the infinite-volume limit the sum
//! becomes a Brillouin-zone integral
//!
//! ```text
//! K^∞_r̂    = (1/2π) ∫₀^{2π} cos(k r̂) (m² + 4 sin²(k/2))^{+1/2} dk
//! (K⁻¹)^∞_r̂ = (1/2π) ∫₀^{2π} cos(k r̂) (m² + 4 sin²(k/2))^{−1/2} dk
//! ```
//!
//! evaluated to `quad_tol`. The mass is a strictly positive IR regulator;
//! the massless regime is represented by `m = 1e-10`.

use crate::error::{Error, Result};
use crate::precision::{HPMatrix, PrecisionContext};
use crate::quadrature::{
    finite_cosine_sums, graded_panels, periodic_cosine_batch, tanh_sinh_cosine_batch,
};
use rug::ops::{CompleteRound, NegAssign, Pow};
use rug::Float;
use std::sync::RwLock;

/// Lattice volume: a finite periodic ring of `N ≥ 2` sites or the
/// thermodynamic limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Volume {
    FiniteN(usize),
    Infinite,
}

/// Physical definition of the lattice: dimensionless mass and volume.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    mass: Float,
    volume: Volume,
}

/// Decimal literal for the massless regime (the mass cannot be set to zero
/// in one dimension; it regulates the IR).
pub const MASSLESS: &str = "1e-10";

impl LatticeSpec {
    pub fn new(mass: Float, volume: Volume) -> Result<Self> {
        if !(mass.is_finite() && mass.is_sign_positive() && !mass.is_zero()) {
            return Err(Error::Contract(format!(
                "mass must be a finite positive IR regulator (got {})",
                mass.to_f64()
            )));
        }
        if let Volume::FiniteN(n) = volume {
            if n < 2 {
                return Err(Error::Geometry(format!("finite lattice needs N ≥ 2 sites, got {n}")));
            }
        }
        Ok(Self { mass, volume })
    }

    pub fn infinite(ctx: &PrecisionContext, mass_literal: &str) -> Result<Self> {
        Self::new(ctx.parse(mass_literal)?, Volume::Infinite)
    }

    pub fn finite(ctx: &PrecisionContext, n: usize, mass_literal: &str) -> Result<Self> {
        Self::new(ctx.parse(mass_literal)?, Volume::FiniteN(n))
    }

    pub fn mass(&self) -> &Float {
        &self.mass
    }

    pub fn volume(&self) -> Volume {
        self.volume
    }
}

/// Which kernel a matrix element comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    K,
    Kinv,
}

/// Cached correlation-kernel elements for one lattice.
///
/// Immutable after a [`CorrelationKernel::warm_up`] fill; concurrent readers
/// are fine. A cache miss extends the cache under a write lock.
pub struct CorrelationKernel {
    spec: LatticeSpec,
    ctx: PrecisionContext,
    cache_k: RwLock<Vec<Float>>,
    cache_kinv: RwLock<Vec<Float>>,
}

impl CorrelationKernel {
    pub fn new(spec: LatticeSpec, ctx: PrecisionContext) -> Self {
        Self {
            spec,
            ctx,
            cache_k: RwLock::new(Vec::new()),
            cache_kinv: RwLock::new(Vec::new()),
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    /// Canonical nonnegative separation: |r̂|, reduced modulo `N` on finite
    /// lattices (elements are even in r̂ and periodic).
    fn canonical_r(&self, r: i64) -> usize {
        let a = r.unsigned_abs() as usize;
        match self.spec.volume {
            Volume::Infinite => a,
            Volume::FiniteN(n) => {
                let m = a % n;
                m.min(n - m)
            }
        }
    }

    fn cache(&self, kind: KernelKind) -> &RwLock<Vec<Float>> {
        match kind {
            KernelKind::K => &self.cache_k,
            KernelKind::Kinv => &self.cache_kinv,
        }
    }

    /// Single matrix element `K_r̂` or `(K⁻¹)_r̂`.
    pub fn element(&self, kind: KernelKind, r: i64) -> Result<Float> {
        let rc = self.canonical_r(r);
        {
            let cache = self.cache(kind).read().expect("kernel cache poisoned");
            if let Some(v) = cache.get(rc) {
                return Ok(v.clone());
            }
        }
        self.warm_up(kind, rc.max(8) * 2)?;
        let cache = self.cache(kind).read().expect("kernel cache poisoned");
        Ok(cache[rc].clone())
    }

    /// Fills the cache for separations `0..=max_r` in one batched pass.
    pub fn warm_up(&self, kind: KernelKind, max_r: usize) -> Result<()> {
        let effective = match self.spec.volume {
            Volume::FiniteN(n) => (n / 2).min(max_r),
            Volume::Infinite => max_r,
        };
        {
            let cache = self.cache(kind).read().expect("kernel cache poisoned");
            if cache.len() > effective {
                return Ok(());
            }
        }
        let values = self.compute_batch(kind, effective)?;
        let mut cache = self.cache(kind).write().expect("kernel cache poisoned");
        if cache.len() < values.len() {
            *cache = values;
        }
        Ok(())
    }

    fn dispersion_weight(&self, kind: KernelKind) -> impl Fn(&Float) -> Float + '_ {
        let m2 = self.spec.mass.clone().square();
        let prec = self.ctx.bits();
        move |k: &Float| {
            let mut s = Float::with_val(prec, k >> 1u32).sin();
            s.square_mut();
            s <<= 2;
            s += &m2;
            s.sqrt_mut();
            if kind == KernelKind::Kinv {
                s.recip_mut();
            }
            s
        }
    }

    fn compute_batch(&self, kind: KernelKind, max_r: usize) -> Result<Vec<Float>> {
        let ctx = &self.ctx;
        match self.spec.volume {
            Volume::FiniteN(n) => Ok(finite_cosine_sums(self.dispersion_weight(kind), n, max_r, ctx)),
            Volume::Infinite => {
                // analyticity strip half-width of the dispersion integrand
                let strip = {
                    let mut v: Float = self.spec.mass.clone() >> 1u32;
                    v.asinh_mut();
                    v << 1u32
                };
                let needed = (ctx.bits() + 16) as f64 * std::f64::consts::LN_2 / strip.to_f64();
                let tol = ctx.quad_tol();
                if needed + 2.0 * max_r as f64 <= (1 << 17) as f64 {
                    periodic_cosine_batch(
                        self.dispersion_weight(kind),
                        max_r,
                        &tol,
                        64,
                        1 << 19,
                        ctx,
                    )
                } else {
                    self.split_scheme_batch(kind, max_r)
                }
            }
        }
    }

    /// Near-massless path: fold the Brillouin zone to `[0, π]` and run
    /// tanh-sinh on a dedicated peak panel `[0, δ]` with `δ = 10³·m`,
    /// followed by dyadically graded panels out to `π`.
    fn split_scheme_batch(&self, kind: KernelKind, max_r: usize) -> Result<Vec<Float>> {
        let ctx = &self.ctx;
        let prec = ctx.bits();
        let pi = ctx.pi();
        let weight = self.dispersion_weight(kind);

        let mut delta: Float = self.spec.mass.clone() * 1000u32;
        let delta_cap: Float = pi.clone() >> 3u32;
        if delta > delta_cap {
            delta = delta_cap;
        }

        let cap = ctx.real(0.25);
        let mut panels = vec![(ctx.zero(), delta.clone())];
        panels.extend(graded_panels(&delta, &pi, &delta, &cap, ctx));

        // per-panel budget keeps the summed error inside quad_tol
        let tol: Float = ctx.quad_tol() >> 7u32;
        let mut sums: Vec<Float> = (0..=max_r).map(|_| ctx.zero()).collect();
        for (a, b) in &panels {
            let part = tanh_sinh_cosine_batch(&weight, a, b, max_r, &tol, ctx)?;
            for (s, p) in sums.iter_mut().zip(part.iter()) {
                *s += p;
            }
        }
        for s in sums.iter_mut() {
            let v = (&*s / &pi).complete(prec);
            *s = v;
        }
        Ok(sums)
    }
}

/// Assembles the block with absolute site rows/columns:
/// `entry(a, b) = element(kind, rows[a] − cols[b])`.
pub fn assemble_k_block(
    kernel: &CorrelationKernel,
    sites_row: &[usize],
    sites_col: &[usize],
    kind: KernelKind,
) -> Result<HPMatrix> {
    let max_sep = sites_row
        .iter()
        .flat_map(|&i| sites_col.iter().map(move |&j| (i as i64 - j as i64).unsigned_abs()))
        .max()
        .unwrap_or(0) as usize;
    kernel.warm_up(kind, max_sep)?;
    let mut out = HPMatrix::zeros(kernel.ctx(), sites_row.len(), sites_col.len());
    for (a, &i) in sites_row.iter().enumerate() {
        for (b, &j) in sites_col.iter().enumerate() {
            out[(a, b)] = kernel.element(kind, i as i64 - j as i64)?;
        }
    }
    Ok(out)
}

/// Full-lattice vacuum two-point functions `(G, H) = (K⁻¹/2, K/2)` over the
/// given sites. Finite volumes only: the full-lattice covariance matrix is
/// undefined in the thermodynamic limit.
pub fn vacuum_gh(kernel: &CorrelationKernel, sites: &[usize]) -> Result<(HPMatrix, HPMatrix)> {
    match kernel.spec().volume() {
        Volume::Infinite => Err(Error::Unsupported(
            "full-lattice vacuum correlators need a finite volume".into(),
        )),
        Volume::FiniteN(n) => {
            if sites.len() != n {
                return Err(Error::Geometry(format!(
                    "vacuum correlators span the full lattice: got {} of {} sites",
                    sites.len(),
                    n
                )));
            }
            let half = kernel.ctx().one() >> 1u32;
            let g = assemble_k_block(kernel, sites, sites, KernelKind::Kinv)?
                .scale(&half, kernel.ctx());
            let h =
                assemble_k_block(kernel, sites, sites, KernelKind::K)?.scale(&half, kernel.ctx());
            Ok((g, h))
        }
    }
}

/// Decay envelopes of the kernel elements (massless: polynomial for `K`,
/// logarithmic for `K⁻¹`; massive: exponential for both).
pub mod envelopes {
    use super::*;

    /// `4 / (π − 4π r̂²)`
    pub fn massless_k(r: usize, ctx: &PrecisionContext) -> Float {
        let pi = ctx.pi();
        let mut denom = ctx.int((r * r) as i64);
        denom <<= 2;
        denom.neg_assign();
        denom += 1;
        denom *= &pi;
        let mut v = ctx.int(4);
        v /= &denom;
        v
    }

    /// `−√(m/(2π r³)) e^{−m r}` with `r` the continuum separation
    pub fn massive_k(r: usize, mass: &Float, ctx: &PrecisionContext) -> Float {
        let prec = ctx.bits();
        let rf = ctx.int(r as i64);
        let two_pi: Float = ctx.pi() << 1u32;
        let r3 = rf.clone().pow(3u32);
        let mut v: Float = mass / (two_pi * r3);
        v.sqrt_mut();
        let mut damp = (mass * &rf).complete(prec);
        damp.neg_assign();
        damp.exp_mut();
        v *= &damp;
        v.neg_assign();
        v
    }

    /// `−(ln(m r) + γ − ln 2)/π` with γ the Euler–Mascheroni constant
    pub fn massless_kinv(r: usize, mass: &Float, ctx: &PrecisionContext) -> Float {
        let prec = ctx.bits();
        let mut v: Float = mass * ctx.int(r as i64);
        v.ln_mut();
        v += ctx.euler_gamma();
        v -= ctx.ln2();
        v /= ctx.pi();
        v.neg_assign();
        v
    }

    /// `e^{−m r}/√(2π m r)`
    pub fn massive_kinv(r: usize, mass: &Float, ctx: &PrecisionContext) -> Float {
        let prec = ctx.bits();
        let rf = ctx.int(r as i64);
        let two_pi: Float = ctx.pi() << 1u32;
        let mut denom = (mass * &rf).complete(prec);
        denom *= two_pi;
        denom.sqrt_mut();
        let mut damp = (mass * &rf).complete(prec);
        damp.neg_assign();
        damp.exp_mut();
        damp /= &denom;
        damp
    }
}
