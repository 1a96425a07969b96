//! Symplectic transforms: constructive Williamson normal form, the local
//! (per-patch) Williamson basis, the negativity-inspired local basis, and
//! two-body negativity sums.
//!
//! Williamson's theorem is realized constructively from the eigenvectors of
//! `iΩσ`. For σ ≻ 0 that product is similar to the Hermitian
//! `i·σ^{1/2}Ωσ^{1/2}`, whose complex eigenproblem is solved as a real
//! symmetric one on stacked real/imaginary parts — keeping the whole
//! precision substrate real. Eigenvectors come in conjugate pairs `±d_j`;
//! after phase fixing and symplectic normalization (the inverse-space
//! condition is equivalent to `i v†Ωv = 1`), the transform is
//! `S = (L·U)ᵀ`, whose rows are just `√2·Re v_j` and `−√2·Im v_j`.

use crate::error::{Error, Result};
use crate::gaussian::{cm_from_gh, omega, CovarianceMatrix, GHPair};
use crate::observation::PatchPair;
use crate::precision::{nonsym_eigen_similar, sym_eigen, sym_pd_roots, HPMatrix, PrecisionContext};
use rug::ops::NegAssign;
use rug::{Assign, Float};

/// A real `2n×2n` matrix with `SΩSᵀ = Ω`, acting on riffled coordinates.
#[derive(Debug, Clone)]
pub struct SymplecticTransform {
    s: HPMatrix,
}

impl SymplecticTransform {
    /// Wraps a candidate matrix after verifying the symplectic condition to
    /// eigen tolerance.
    pub fn new_checked(s: HPMatrix, ctx: &PrecisionContext) -> Result<Self> {
        if !s.is_square() || s.rows() % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "symplectic transforms are even-dimensional square, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        let t = Self { s };
        let resid = t.symplectic_residual(ctx);
        let mut allowed = ctx.eig_tol();
        allowed *= t.s.max_abs().square().max(&ctx.one());
        if resid > allowed {
            return Err(Error::Precision(format!(
                "SΩSᵀ − Ω residual {:e} exceeds tolerance",
                resid.to_f64()
            )));
        }
        Ok(t)
    }

    pub fn n_modes(&self) -> usize {
        self.s.rows() / 2
    }

    pub fn matrix(&self) -> &HPMatrix {
        &self.s
    }

    /// `max |SΩSᵀ − Ω|`.
    pub fn symplectic_residual(&self, ctx: &PrecisionContext) -> Float {
        let n = self.n_modes();
        let w = omega(n, ctx);
        let swst = self.s.mul(&w, ctx).mul(&self.s.transpose(), ctx);
        swst.sub(&w, ctx).max_abs()
    }

    /// Congruence action `σ → SσSᵀ` (first moments map linearly).
    pub fn apply(&self, cm: &CovarianceMatrix, ctx: &PrecisionContext) -> CovarianceMatrix {
        let data = self.s.mul(cm.matrix(), ctx).mul(&self.s.transpose(), ctx);
        let mut out = CovarianceMatrix::new(data, ctx).expect("shape preserved by congruence");
        let moments = self.s.mul_vec(cm.first_moments(), ctx);
        out.set_first_moments(moments).expect("length preserved");
        out
    }

    /// Block-diagonal direct sum (A-modes then B-modes).
    pub fn direct_sum(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        Self {
            s: self.s.direct_sum(&other.s, ctx),
        }
    }
}

/// Williamson normal form `SσSᵀ = ⊕ d_j I₂` with ascending `d_j`.
#[derive(Debug, Clone)]
pub struct WilliamsonResult {
    pub transform: SymplecticTransform,
    pub d_values: Vec<Float>,
}

// ---- internal complex-vector helpers (stacked real arithmetic) ----

#[derive(Clone)]
struct CVec {
    re: Vec<Float>,
    im: Vec<Float>,
}

fn dot(a: &[Float], b: &[Float], ctx: &PrecisionContext) -> Float {
    let mut acc = ctx.zero();
    let mut t = ctx.zero();
    for (x, y) in a.iter().zip(b.iter()) {
        t.assign(x * y);
        acc += &t;
    }
    acc
}

/// `Ωx` for riffled coordinates, without materializing Ω.
fn omega_apply(x: &[Float], ctx: &PrecisionContext) -> Vec<Float> {
    let mut out = Vec::with_capacity(x.len());
    for m in 0..x.len() / 2 {
        out.push(x[2 * m + 1].clone());
        let mut v = x[2 * m].clone();
        v.neg_assign();
        out.push(v);
    }
    let _ = ctx;
    out
}

/// Hermitian symplectic form `q(u, v) = i·u†Ωv`, returned as (re, im).
fn q_form(u: &CVec, v: &CVec, ctx: &PrecisionContext) -> (Float, Float) {
    let wx = omega_apply(&v.re, ctx);
    let wy = omega_apply(&v.im, ctx);
    let mut re = dot(&u.im, &wx, ctx);
    let t = dot(&u.re, &wy, ctx);
    re -= &t;
    let mut im = dot(&u.re, &wx, ctx);
    let t = dot(&u.im, &wy, ctx);
    im += &t;
    (re, im)
}

/// Euclidean Hermitian inner product `u†v` as (re, im).
fn herm_dot(u: &CVec, v: &CVec, ctx: &PrecisionContext) -> (Float, Float) {
    let mut re = dot(&u.re, &v.re, ctx);
    let t = dot(&u.im, &v.im, ctx);
    re += &t;
    let mut im = dot(&u.re, &v.im, ctx);
    let t = dot(&u.im, &v.re, ctx);
    im -= &t;
    (re, im)
}

/// `v -= (cr + i ci)·u`
fn axpy_complex(v: &mut CVec, u: &CVec, cr: &Float, ci: &Float, ctx: &PrecisionContext) {
    let mut t = ctx.zero();
    for k in 0..v.re.len() {
        t.assign(cr * &u.re[k]);
        v.re[k] -= &t;
        t.assign(ci * &u.im[k]);
        v.re[k] += &t;
        t.assign(cr * &u.im[k]);
        v.im[k] -= &t;
        t.assign(ci * &u.re[k]);
        v.im[k] -= &t;
    }
}

fn scale_complex(v: &mut CVec, factor: &Float) {
    for x in v.re.iter_mut().chain(v.im.iter_mut()) {
        *x *= factor;
    }
}

/// Multiplies `v` by the phase `e^{iθ}` given as (cos θ, sin θ).
fn rotate_phase(v: &mut CVec, c: &Float, s: &Float, ctx: &PrecisionContext) {
    let mut t = ctx.zero();
    for k in 0..v.re.len() {
        let old_re = v.re[k].clone();
        t.assign(s * &v.im[k]);
        v.re[k] *= c;
        v.re[k] -= &t;
        v.im[k] *= c;
        t.assign(s * &old_re);
        v.im[k] += &t;
    }
}

/// Constructive Williamson normal form of a positive-definite CM.
///
/// Degenerate symplectic eigenvalues are handled by symplectic
/// Gram–Schmidt inside each eigenvalue cluster (a pure CM has all
/// `d_j = 1`, so this path is routinely exercised).
pub fn williamson(cm: &CovarianceMatrix, ctx: &PrecisionContext) -> Result<WilliamsonResult> {
    let n = cm.n_modes();
    let n2 = 2 * n;
    let sigma = cm.matrix();

    let (root, inv_root) = sym_pd_roots(sigma, ctx)?;
    // A = σ^{1/2} Ω σ^{1/2}, exactly antisymmetrized
    let w = omega(n, ctx);
    let a_raw = root.mul(&w, ctx).mul(&root, ctx);
    let mut a = HPMatrix::zeros(ctx, n2, n2);
    for i in 0..n2 {
        for j in (i + 1)..n2 {
            let mut v = (&a_raw[(i, j)] - &a_raw[(j, i)]).complete(ctx.bits());
            v >>= 1;
            let mut neg = v.clone();
            neg.neg_assign();
            a[(i, j)] = v;
            a[(j, i)] = neg;
        }
    }

    // stacked Hermitian iA: [[0, −A],[A, 0]] is real symmetric
    let mut stacked = HPMatrix::zeros(ctx, 2 * n2, 2 * n2);
    for i in 0..n2 {
        for j in 0..n2 {
            let mut neg = a[(i, j)].clone();
            neg.neg_assign();
            stacked[(i, n2 + j)] = neg;
            stacked[(n2 + i, j)] = a[(i, j)].clone();
        }
    }
    stacked.symmetrize_upper();
    let (vals, vecs) = sym_eigen(&stacked, ctx)?;

    // positive eigenvalues carry the +d_j eigenvectors (each d_j twice)
    let positive: Vec<(usize, Float)> = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_sign_positive() && !v.is_zero())
        .map(|(i, v)| (i, v.clone()))
        .collect();
    if positive.len() != n2 {
        return Err(Error::Precision(format!(
            "expected {n2} positive eigenvalues of iΩσ, found {}",
            positive.len()
        )));
    }

    // cluster nearly equal eigenvalues; each cluster of 2m stacked vectors
    // yields m symplectic modes
    let mut cluster_tol = ctx.eig_tol();
    cluster_tol *= positive.last().expect("nonempty").1.clone().max(&ctx.one());
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut cluster_values: Vec<Float> = Vec::new();
    for (idx, v) in &positive {
        match clusters.last_mut() {
            Some(cur)
                if (v.clone() - cluster_values.last().expect("aligned")).abs() <= cluster_tol =>
            {
                cur.push(*idx)
            }
            _ => {
                clusters.push(vec![*idx]);
                cluster_values.push(v.clone());
            }
        }
    }

    let mut modes: Vec<(Float, CVec)> = Vec::new();
    for (members, d_here) in clusters.iter().zip(cluster_values.iter()) {
        if members.len() % 2 != 0 {
            return Err(Error::DegenerateSpectrum(format!(
                "eigenvalue cluster at {} has odd real multiplicity {}; gap below {:e}",
                d_here.to_f64(),
                members.len(),
                cluster_tol.to_f64()
            )));
        }
        let want = members.len() / 2;
        let mut cluster_modes: Vec<CVec> = Vec::new();
        for &col in members {
            if cluster_modes.len() == want {
                break;
            }
            // complex vector v = σ^{-1/2}(x + iy) from the stacked column
            let x_st: Vec<Float> = (0..n2).map(|i| vecs[(i, col)].clone()).collect();
            let y_st: Vec<Float> = (0..n2).map(|i| vecs[(n2 + i, col)].clone()).collect();
            let mut cand = CVec {
                re: inv_root.mul_vec(&x_st, ctx),
                im: inv_root.mul_vec(&y_st, ctx),
            };
            // remove the complex span of modes already extracted
            for prev in &cluster_modes {
                let (nr, ni) = herm_dot(prev, prev, ctx);
                let (mut cr, mut ci) = herm_dot(prev, &cand, ctx);
                cr /= &nr;
                ci /= &nr;
                let _ = ni;
                axpy_complex(&mut cand, prev, &cr, &ci, ctx);
            }
            let (norm2, _) = herm_dot(&cand, &cand, ctx);
            let mut floor = ctx.eig_tol();
            floor.square_mut();
            if norm2 < floor {
                continue; // the i·w duplicate of an extracted mode
            }
            // symplectic Gram–Schmidt against established cluster modes
            for prev in &cluster_modes {
                let (cr, ci) = q_form(prev, &cand, ctx);
                axpy_complex(&mut cand, prev, &cr, &ci, ctx);
            }
            let (q, _) = q_form(&cand, &cand, ctx);
            if !q.is_sign_positive() || q.is_zero() {
                return Err(Error::Precision(format!(
                    "symplectic norm {:e} not positive for eigenvalue {}",
                    q.to_f64(),
                    d_here.to_f64()
                )));
            }
            let mut inv_sqrt = q.sqrt();
            inv_sqrt.recip_mut();
            scale_complex(&mut cand, &inv_sqrt);
            cluster_modes.push(cand);
        }
        if cluster_modes.len() != want {
            return Err(Error::DegenerateSpectrum(format!(
                "could not extract {want} symplectic modes from the cluster at {}",
                d_here.to_f64()
            )));
        }
        for m in cluster_modes {
            modes.push((d_here.clone(), m));
        }
    }

    // deterministic phase: first φ-component above tolerance made
    // real-positive
    let mut pick_tol = ctx.eig_tol();
    pick_tol.square_mut();
    for (_, v) in modes.iter_mut() {
        let mut mag_idx = None;
        for k in 0..v.re.len() {
            let mut mag2 = v.re[k].clone().square();
            let im2 = v.im[k].clone().square();
            mag2 += &im2;
            if mag2 > pick_tol {
                mag_idx = Some((k, mag2));
                break;
            }
        }
        if let Some((k, mag2)) = mag_idx {
            let mag = mag2.sqrt();
            // phase e^{iθ} with cos = re/|·|, sin = −im/|·| rotates entry k
            // onto the positive real axis
            let c = (&v.re[k] / &mag).complete(ctx.bits());
            let mut s = (&v.im[k] / &mag).complete(ctx.bits());
            s.neg_assign();
            rotate_phase(v, &c, &s, ctx);
        }
    }

    // S = (LU)ᵀ: rows √2·Re v_j and −√2·Im v_j
    let sqrt2 = {
        let mut v = ctx.int(2);
        v.sqrt_mut();
        v
    };
    let mut s = HPMatrix::zeros(ctx, n2, n2);
    let mut d_values = Vec::with_capacity(n);
    for (j, (d, v)) in modes.iter().enumerate() {
        d_values.push(d.clone());
        for k in 0..n2 {
            let mut xr = v.re[k].clone();
            xr *= &sqrt2;
            s[(2 * j, k)] = xr;
            let mut xi = v.im[k].clone();
            xi *= &sqrt2;
            xi.neg_assign();
            s[(2 * j + 1, k)] = xi;
        }
    }

    let transform = SymplecticTransform::new_checked(s, ctx)?;

    // verify the normal form: SσSᵀ = ⊕ d_j I₂
    let d_cm = transform.s.mul(sigma, ctx).mul(&transform.s.transpose(), ctx);
    let mut worst = ctx.zero();
    for i in 0..n2 {
        for j in 0..n2 {
            let mut dev = d_cm[(i, j)].clone();
            if i == j {
                dev -= &d_values[i / 2];
            }
            dev.abs_mut();
            if dev > worst {
                worst = dev;
            }
        }
    }
    let mut allowed = ctx.eig_tol();
    allowed *= d_cm.max_abs().max(&ctx.one());
    if worst > allowed {
        return Err(Error::Precision(format!(
            "Williamson normal-form residual {:e} exceeds tolerance",
            worst.to_f64()
        )));
    }

    Ok(WilliamsonResult {
        transform,
        d_values,
    })
}

/// Local Williamson transform `S_W = S_W^(A) ⊕ S_W^(B)` of a pure
/// patch-pair state, built from the patch-local CM blocks alone.
///
/// Matching ascending local symplectic spectra pair A-mode `j` with
/// B-mode `j`; a degenerate local spectrum makes that pairing ambiguous
/// and is reported as an error.
pub fn local_williamson(
    gh_pure: &GHPair,
    pair: &PatchPair,
    ctx: &PrecisionContext,
) -> Result<SymplecticTransform> {
    let d = pair.d();
    if gh_pure.n_modes() != 2 * d {
        return Err(Error::DimensionMismatch(format!(
            "state has {} modes, patch pair wants {}",
            gh_pure.n_modes(),
            2 * d
        )));
    }
    // purity gate: det(4GH) = 1
    let four = ctx.int(4);
    let prod = gh_pure.g().mul(gh_pure.h(), ctx).scale(&four, ctx);
    let det = crate::precision::determinant(&prod, ctx)?;
    let mut dev = det - 1u32;
    dev.abs_mut();
    let mut allowed: Float = ctx.eig_tol() << 8u32;
    allowed *= ctx.one().max(&dev.clone());
    if dev > (ctx.eig_tol() << 8u32) {
        return Err(Error::Contract(format!(
            "local Williamson pairing requires a pure state; det(4GH) − 1 = {:e}",
            dev.to_f64()
        )));
    }
    let _ = allowed;

    let cm = cm_from_gh(gh_pure, ctx);
    let a_modes: Vec<usize> = (0..d).collect();
    let b_modes: Vec<usize> = (d..2 * d).collect();
    let wa = williamson(&cm.mode_block(&a_modes, ctx), ctx)?;
    let wb = williamson(&cm.mode_block(&b_modes, ctx), ctx)?;

    for res in [&wa, &wb] {
        let mut gap_tol = ctx.eig_tol();
        gap_tol *= res.d_values.last().expect("d ≥ 1").clone().max(&ctx.one());
        for w in res.d_values.windows(2) {
            let gap = (&w[1] - &w[0]).complete(ctx.bits());
            if gap.clone().abs() <= gap_tol {
                return Err(Error::DegenerateSpectrum(format!(
                    "local symplectic eigenvalues {} and {} coincide; mode pairing is ambiguous",
                    w[0].to_f64(),
                    w[1].to_f64()
                )));
            }
        }
    }

    Ok(wa.transform.direct_sum(&wb.transform, ctx))
}

/// Canonical pair of pure-φ / pure-π local rows.
struct LocalPair {
    x: Vec<Float>,
    p: Vec<Float>,
}

fn build_local_basis(
    x_seeds: &[Vec<Float>],
    p_seeds: &[Vec<Float>],
    d: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<LocalPair>> {
    let mut pairs: Vec<LocalPair> = Vec::new();
    let mut push_canonical = |pairs: &mut Vec<LocalPair>, mut x: Vec<Float>, mut p: Vec<Float>| -> Result<bool> {
        // make the new pair canonical against the established ones:
        // form(x, p_j) = 0, form(x_j, p) = 0, then x·p = 1
        for lp in pairs.iter() {
            let c = dot(&x, &lp.p, ctx);
            let mut t = ctx.zero();
            for k in 0..x.len() {
                t.assign(&c * &lp.x[k]);
                x[k] -= &t;
            }
            let c = dot(&lp.x, &p, ctx);
            for k in 0..p.len() {
                t.assign(&c * &lp.p[k]);
                p[k] -= &t;
            }
        }
        let c = dot(&x, &p, ctx);
        let mut floor: Float = ctx.eig_tol() << 16u32;
        floor *= ctx.one();
        if c.clone().abs() <= floor {
            return Ok(false);
        }
        let mut sx = c.clone().abs().sqrt();
        sx.recip_mut();
        let mut sp = sx.clone();
        if c.is_sign_negative() {
            sx.neg_assign();
        }
        for v in x.iter_mut() {
            *v *= &sx;
        }
        for v in p.iter_mut() {
            *v *= &sp;
        }
        let _ = &mut sp;
        pairs.push(LocalPair { x, p });
        Ok(true)
    };

    for (xs, ps) in x_seeds.iter().zip(p_seeds.iter()) {
        if !push_canonical(&mut pairs, xs.clone(), ps.clone())? {
            return Err(Error::Precision(
                "restricted PT eigenvector collapsed under symplectic orthogonalization".into(),
            ));
        }
    }
    // complete with standard-basis candidates
    for k in 0..d {
        if pairs.len() == d {
            break;
        }
        let mut e = vec![ctx.zero(); d];
        e[k] = ctx.one();
        let _ = push_canonical(&mut pairs, e.clone(), e)?;
    }
    if pairs.len() != d {
        return Err(Error::Precision(format!(
            "local symplectic completion found {} of {d} pairs",
            pairs.len()
        )));
    }
    Ok(pairs)
}

/// Negativity-inspired local basis `S_N = S_N^(A) ⊕ S_N^(B)` built from the
/// contributing PT symplectic eigenvectors of the traced state.
///
/// Each contributing eigenvector of `G·H^Γ` supplies a φ-profile `H^Γ f`
/// and π-profile `f`; their patch restrictions are rescaled to local
/// canonical pairs, symplectically orthonormalized against previously
/// constructed modes, and the bases completed in the symplectic
/// complement.
pub fn negativity_basis(
    gh_traced: &GHPair,
    pair: &PatchPair,
    ctx: &PrecisionContext,
) -> Result<SymplecticTransform> {
    let d = pair.d();
    let n = gh_traced.n_modes();
    if n != 2 * d {
        return Err(Error::DimensionMismatch(format!(
            "state has {n} modes, patch pair wants {}",
            2 * d
        )));
    }
    let b_modes = pair.b_mode_indices();
    let pt = crate::gaussian::partial_transpose(gh_traced, &b_modes);
    let (mu, f_vecs) = nonsym_eigen_similar(pt.g(), pt.h(), ctx)?;

    // contributing modes: ν = 2√μ < 1, ascending (most entangled first)
    let mut contributing: Vec<(Float, usize)> = Vec::new();
    for (j, m) in mu.iter().enumerate() {
        if !m.is_sign_positive() || m.is_zero() {
            return Err(Error::Precision(format!(
                "PT similarity eigenvalue {:e} not positive",
                m.to_f64()
            )));
        }
        let mut nu = m.clone().sqrt();
        nu <<= 1;
        if nu < 1u32 {
            contributing.push((nu, j));
        }
    }
    if contributing.is_empty() {
        return Err(Error::Contract(
            "no PT symplectic eigenvalue contributes; the state is PPT".into(),
        ));
    }
    let mut gap_tol = ctx.eig_tol();
    gap_tol *= ctx.one();
    for w in contributing.windows(2) {
        let gap = (&w[1].0 - &w[0].0).complete(ctx.bits()).abs();
        if gap <= gap_tol {
            return Err(Error::DegenerateSpectrum(format!(
                "contributing PT eigenvalues {} and {} coincide",
                w[0].0.to_f64(),
                w[1].0.to_f64()
            )));
        }
    }

    // symplectically scaled global profiles: u = √(2/(ν fᵀH^Γf))·H^Γ f,
    // w = √(ν/(2 fᵀH^Γf))·f
    let mut x_seeds_a: Vec<Vec<Float>> = Vec::new();
    let mut p_seeds_a: Vec<Vec<Float>> = Vec::new();
    let mut x_seeds_b: Vec<Vec<Float>> = Vec::new();
    let mut p_seeds_b: Vec<Vec<Float>> = Vec::new();
    for (nu, j) in &contributing {
        let f: Vec<Float> = f_vecs.column(*j);
        let g = pt.h().mul_vec(&f, ctx);
        let fg = dot(&f, &g, ctx);
        if !fg.is_sign_positive() || fg.is_zero() {
            return Err(Error::Precision(format!(
                "fᵀH^Γf = {:e} not positive for a contributing mode",
                fg.to_f64()
            )));
        }
        let mut cu = (nu * &fg).complete(ctx.bits());
        cu.recip_mut();
        cu <<= 1;
        cu.sqrt_mut(); // √(2/(ν fg))
        let mut cw = (nu / &fg).complete(ctx.bits());
        cw >>= 1;
        cw.sqrt_mut(); // √(ν/(2 fg))

        let scaled = |v: &[Float], c: &Float, range: std::ops::Range<usize>| -> Vec<Float> {
            v[range]
                .iter()
                .map(|x| {
                    let mut y = x.clone();
                    y *= c;
                    y
                })
                .collect()
        };
        x_seeds_a.push(scaled(&g, &cu, 0..d));
        p_seeds_a.push(scaled(&f, &cw, 0..d));
        x_seeds_b.push(scaled(&g, &cu, d..2 * d));
        p_seeds_b.push(scaled(&f, &cw, d..2 * d));
    }

    let pairs_a = build_local_basis(&x_seeds_a, &p_seeds_a, d, ctx)?;
    let pairs_b = build_local_basis(&x_seeds_b, &p_seeds_b, d, ctx)?;

    // assemble rows: patch A modes first, φ-rows on φ-coordinates of the
    // patch, π-rows on π-coordinates
    let n2 = 2 * n;
    let mut s = HPMatrix::zeros(ctx, n2, n2);
    for (j, lp) in pairs_a.iter().enumerate() {
        for k in 0..d {
            s[(2 * j, 2 * k)] = lp.x[k].clone();
            s[(2 * j + 1, 2 * k + 1)] = lp.p[k].clone();
        }
    }
    for (j, lp) in pairs_b.iter().enumerate() {
        let row = 2 * (d + j);
        for k in 0..d {
            let col = 2 * (d + k);
            s[(row, col)] = lp.x[k].clone();
            s[(row + 1, col + 1)] = lp.p[k].clone();
        }
    }
    SymplecticTransform::new_checked(s, ctx)
}

/// Generic PT symplectic spectrum of a riffled CM (π-sign flip on the given
/// modes, then the symplectic spectrum of the flipped CM), for blocks that
/// may carry ⟨φπ⟩ correlations after a transform.
pub fn cm_pt_spectrum(
    cm: &CovarianceMatrix,
    b_modes: &[usize],
    ctx: &PrecisionContext,
) -> Result<Vec<Float>> {
    let n = cm.n_modes();
    let n2 = 2 * n;
    // σ^Γ = F σ F with F flipping π on B-modes
    let mut flipped = cm.matrix().clone();
    for &m in b_modes {
        let r = 2 * m + 1;
        for j in 0..n2 {
            flipped[(r, j)].neg_assign();
        }
        for i in 0..n2 {
            flipped[(i, r)].neg_assign();
        }
    }
    let cm_gamma = CovarianceMatrix::new(flipped, ctx)?;
    let wr = williamson(&cm_gamma, ctx)?;
    Ok(wr.d_values)
}

/// Logarithmic negativity of a riffled CM across the given bipartition.
pub fn cm_log_negativity(
    cm: &CovarianceMatrix,
    b_modes: &[usize],
    ctx: &PrecisionContext,
) -> Result<Float> {
    let nu = cm_pt_spectrum(cm, b_modes, ctx)?;
    let ln2 = ctx.ln2();
    let mut total = ctx.zero();
    for v in nu {
        if v < 1u32 {
            let mut term = v.ln();
            term /= &ln2;
            total -= term;
        }
    }
    Ok(total)
}

/// Two-body decomposition of a transformed state: the paired 4×4 CMs plus
/// whatever modes remain.
#[derive(Debug, Clone)]
pub struct PairDecomposition {
    /// `(A-mode, B-mode, two-mode CM)` triples in pairing order.
    pub pairs: Vec<(usize, usize, CovarianceMatrix)>,
    /// Sub-CM over the unpaired modes (empty when everything is paired).
    pub residual: Option<CovarianceMatrix>,
}

/// Applies a local transform and slices out each paired two-mode CM,
/// leaving cross-pair classical noise in place but outside the blocks.
pub fn decompose_pairs(
    gh: &GHPair,
    transform: &SymplecticTransform,
    pairing: &[(usize, usize)],
    ctx: &PrecisionContext,
) -> Result<PairDecomposition> {
    let n = gh.n_modes();
    if transform.n_modes() != n {
        return Err(Error::DimensionMismatch(format!(
            "transform acts on {} modes, state has {n}",
            transform.n_modes()
        )));
    }
    let cm = transform.apply(&cm_from_gh(gh, ctx), ctx);
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(pairing.len());
    for &(a, b) in pairing {
        if a >= n || b >= n || used[a] || used[b] || a == b {
            return Err(Error::Contract(format!("invalid mode pairing ({a}, {b})")));
        }
        used[a] = true;
        used[b] = true;
        pairs.push((a, b, cm.mode_block(&[a, b], ctx)));
    }
    let rest: Vec<usize> = (0..n).filter(|&m| !used[m]).collect();
    let residual = if rest.is_empty() {
        None
    } else {
        Some(cm.mode_block(&rest, ctx))
    };
    Ok(PairDecomposition { pairs, residual })
}

/// Sum of `(1_A × 1_B)` two-body logarithmic negativities of the paired
/// blocks after a local transform.
pub fn two_body_negativity_sum(
    gh: &GHPair,
    transform: &SymplecticTransform,
    pairing: &[(usize, usize)],
    ctx: &PrecisionContext,
) -> Result<Float> {
    let decomp = decompose_pairs(gh, transform, pairing, ctx)?;
    let mut total = ctx.zero();
    for (_, _, block) in &decomp.pairs {
        let neg = cm_log_negativity(block, &[1], ctx)?;
        total += neg;
    }
    Ok(total)
}

/// Natural pairing for a local Williamson basis of a `d|d` patch pair:
/// A-mode `j` with B-mode `j` (matched ascending local spectra).
pub fn matched_pairing(d: usize) -> Vec<(usize, usize)> {
    (0..d).map(|j| (j, d + j)).collect()
}
