//! Extended-precision scalars and dense-matrix kernels.
//!
//! Everything downstream (kernels, covariance matrices, symplectic
//! transforms) is built on [`PrecisionContext`] and [`HPMatrix`]. The
//! eigensolver is a cyclic Jacobi iteration: unconditionally convergent and
//! easy to verify, which matters more than speed for matrices of at most
//! 64×64. Nonsymmetric spectra are only ever reached through the SPD
//! similarity route of [`nonsym_eigen_similar`].

use crate::error::{Error, Result};
use rug::float::Constant;
use rug::ops::{CompleteRound, NegAssign};
use rug::{Assign, Float};

/// Working precision plus the tolerances derived from it.
///
/// * `eig_tol = 2^(-bits/2)` — relative eigen-residual target.
/// * `quad_tol = 2^(-bits+16)` — quadrature convergence target.
///
/// Both are strictly positive and monotone in `bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    bits: u32,
}

impl PrecisionContext {
    pub const MIN_BITS: u32 = 128;

    /// Panics if `bits < 128`; values such as 1e-23 amid cancellation are
    /// not representable below that.
    pub fn new(bits: u32) -> Self {
        assert!(
            bits >= Self::MIN_BITS,
            "significand width must be at least {} bits (got {bits})",
            Self::MIN_BITS
        );
        Self { bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Relative eigen-residual target, `2^(-bits/2)`.
    pub fn eig_tol(&self) -> Float {
        Float::with_val(self.bits, 1) >> (self.bits / 2)
    }

    /// Quadrature convergence target, `2^(-bits+16)`.
    pub fn quad_tol(&self) -> Float {
        Float::with_val(self.bits, 1) >> (self.bits - 16)
    }

    pub fn zero(&self) -> Float {
        Float::new(self.bits)
    }

    pub fn one(&self) -> Float {
        Float::with_val(self.bits, 1)
    }

    pub fn real(&self, x: f64) -> Float {
        Float::with_val(self.bits, x)
    }

    pub fn int(&self, n: i64) -> Float {
        Float::with_val(self.bits, n)
    }

    /// Parses a decimal literal at full working precision (a 64-bit float
    /// round trip would truncate constants like 1e-10).
    pub fn parse(&self, s: &str) -> Result<Float> {
        Float::parse(s)
            .map(|incomplete| Float::with_val(self.bits, incomplete))
            .map_err(|e| Error::Contract(format!("unparseable real literal {s:?}: {e}")))
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.bits, Constant::Pi)
    }

    /// Euler–Mascheroni constant γ (log envelope of the massless inverse
    /// kernel).
    pub fn euler_gamma(&self) -> Float {
        Float::with_val(self.bits, Constant::Euler)
    }

    pub fn ln2(&self) -> Float {
        Float::with_val(self.bits, Constant::Log2)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::new(512)
    }
}

/// Dense row-major matrix of extended-precision reals.
#[derive(Debug, Clone, PartialEq)]
pub struct HPMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Float>,
}

impl HPMatrix {
    pub fn zeros(ctx: &PrecisionContext, rows: usize, cols: usize) -> Self {
        let data = (0..rows * cols).map(|_| ctx.zero()).collect();
        Self { rows, cols, data }
    }

    pub fn identity(ctx: &PrecisionContext, n: usize) -> Self {
        let mut m = Self::zeros(ctx, n, n);
        for i in 0..n {
            m[(i, i)] = ctx.one();
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Float>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_f64_rows(ctx: &PrecisionContext, rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| ctx.real(rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn max_abs(&self) -> Float {
        let mut m = Float::new(self.data.first().map_or(64, |f| f.prec()));
        for v in &self.data {
            let a = v.clone().abs();
            if a > m {
                m = a;
            }
        }
        m
    }

    /// Largest |A_ij - A_ji|; zero exactly for symmetrized matrices.
    pub fn asymmetry(&self) -> Float {
        let mut worst = Float::new(self.data.first().map_or(64, |f| f.prec()));
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                let d = (&self[(i, j)] - &self[(j, i)]).complete(self[(i, j)].prec()).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Mirrors the upper triangle into the lower one, making
    /// `|A_ij - A_ji| = 0` exact.
    pub fn symmetrize_upper(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = self[(i, j)].clone();
                self[(j, i)] = v;
            }
        }
    }

    /// Average-symmetrization `(A + A^T)/2` followed by an exact mirror.
    pub fn symmetrized(&self, ctx: &PrecisionContext) -> Self {
        assert!(self.is_square());
        let mut out = Self::zeros(ctx, self.rows, self.cols);
        for i in 0..self.rows {
            out[(i, i)] = self[(i, i)].clone();
            for j in (i + 1)..self.cols {
                let mut v = (&self[(i, j)] + &self[(j, i)]).complete(ctx.bits());
                v >>= 1;
                out[(i, j)] = v.clone();
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(ctx, self.rows, other.cols);
        let mut t = ctx.zero();
        for i in 0..self.rows {
            for j in 0..other.cols {
                let acc = &mut out[(i, j)];
                for k in 0..self.cols {
                    t.assign(&self[(i, k)] * &other[(k, j)]);
                    *acc += &t;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Float], ctx: &PrecisionContext) -> Vec<Float> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        let mut out = Vec::with_capacity(self.rows);
        let mut t = ctx.zero();
        for i in 0..self.rows {
            let mut acc = ctx.zero();
            for k in 0..self.cols {
                t.assign(&self[(i, k)] * &v[k]);
                acc += &t;
            }
            out.push(acc);
        }
        out
    }

    pub fn add(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            (&self[(i, j)] + &other[(i, j)]).complete(ctx.bits())
        })
    }

    pub fn sub(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            (&self[(i, j)] - &other[(i, j)]).complete(ctx.bits())
        })
    }

    pub fn scale(&self, s: &Float, ctx: &PrecisionContext) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (&self[(i, j)] * s).complete(ctx.bits())
        })
    }

    /// Submatrix with the given row and column index lists.
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        Self::from_fn(row_idx.len(), col_idx.len(), |i, j| {
            self[(row_idx[i], col_idx[j])].clone()
        })
    }

    pub fn column(&self, j: usize) -> Vec<Float> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Float]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i].clone();
        }
    }

    pub fn row_slice(&self, i: usize) -> &[Float] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let mut out = Self::zeros(ctx, self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out[(self.rows + i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].to_f64()).collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for HPMatrix {
    type Output = Float;
    fn index(&self, (i, j): (usize, usize)) -> &Float {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for HPMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Float {
        &mut self.data[i * self.cols + j]
    }
}

fn require_symmetric(a: &HPMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix where a square symmetric one is required",
            a.rows(),
            a.cols()
        )));
    }
    let asym = a.asymmetry();
    if asym.is_zero() {
        Ok(())
    } else {
        Err(Error::NotSymmetric(asym.to_f64()))
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of the second output, so `A = V Λ V^T`.
/// Iteration stops once every off-diagonal entry is below
/// `2^(-bits+12) · max|A|`, far inside the `eig_tol` residual contract.
pub fn sym_eigen(a: &HPMatrix, ctx: &PrecisionContext) -> Result<(Vec<Float>, HPMatrix)> {
    require_symmetric(a)?;
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), HPMatrix::zeros(ctx, 0, 0)));
    }
    let prec = ctx.bits();
    let mut m = a.clone();
    let mut v = HPMatrix::identity(ctx, n);

    let scale = m.max_abs();
    if !scale.is_finite() {
        return Err(Error::Precision("non-finite entries in eigensolver input".into()));
    }
    if scale.is_zero() {
        let vals = (0..n).map(|_| ctx.zero()).collect();
        return Ok((vals, v));
    }
    let stop = (&scale >> (prec.saturating_sub(12))).complete(prec);

    let max_sweeps = 64;
    let mut worst = scale.clone();
    let mut converged = false;

    // scratch space reused across rotations
    let mut t1 = ctx.zero();
    let mut t2 = ctx.zero();

    for _sweep in 0..max_sweeps {
        worst.assign(0);
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq_abs = m[(p, q)].clone().abs();
                if apq_abs > worst {
                    worst.assign(&apq_abs);
                }
                if apq_abs <= stop {
                    continue;
                }
                // theta = (a_qq - a_pp) / (2 a_pq); t = sgn/(|theta|+sqrt(theta^2+1))
                let apq = m[(p, q)].clone();
                let mut theta = (&m[(q, q)] - &m[(p, p)]).complete(prec);
                theta /= &apq;
                theta >>= 1;
                let mut t = theta.clone().square();
                t += 1;
                t.sqrt_mut();
                t += theta.clone().abs();
                t.recip_mut();
                if theta.is_sign_negative() {
                    t.neg_assign();
                }
                let mut c = t.clone().square();
                c += 1;
                c.sqrt_mut();
                c.recip_mut();
                let s = (&t * &c).complete(prec);

                // diagonal update: a_pp -= t*a_pq ; a_qq += t*a_pq ; a_pq = 0
                t1.assign(&t * &apq);
                m[(p, p)] -= &t1;
                m[(q, q)] += &t1;
                m[(p, q)].assign(0);
                m[(q, p)].assign(0);

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    // rows/cols k: (a_kp, a_kq) <- (c a_kp - s a_kq, s a_kp + c a_kq)
                    t1.assign(&m[(k, p)] * &c);
                    t2.assign(&m[(k, q)] * &s);
                    t1 -= &t2;
                    t2.assign(&m[(k, p)] * &s);
                    let new_kp = t1.clone();
                    t1.assign(&m[(k, q)] * &c);
                    t1 += &t2;
                    m[(k, p)].assign(&new_kp);
                    m[(p, k)].assign(&new_kp);
                    m[(k, q)].assign(&t1);
                    m[(q, k)].assign(&t1);
                }
                for k in 0..n {
                    t1.assign(&v[(k, p)] * &c);
                    t2.assign(&v[(k, q)] * &s);
                    t1 -= &t2;
                    t2.assign(&v[(k, p)] * &s);
                    let new_kp = t1.clone();
                    t1.assign(&v[(k, q)] * &c);
                    t1 += &t2;
                    v[(k, p)].assign(&new_kp);
                    v[(k, q)].assign(&t1);
                }
            }
        }
        if worst <= stop {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::EigenNonConvergence {
            sweeps: max_sweeps,
            residual: (worst / scale).to_f64(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("finite eigenvalues"));
    let vals: Vec<Float> = order.iter().map(|&i| m[(i, i)].clone()).collect();
    let vecs = HPMatrix::from_fn(n, n, |i, j| v[(i, order[j])].clone());
    Ok((vals, vecs))
}

/// Principal square root of a symmetric positive-definite matrix.
pub fn sym_pd_sqrt(a: &HPMatrix, ctx: &PrecisionContext) -> Result<HPMatrix> {
    Ok(sym_pd_roots(a, ctx)?.0)
}

/// `(A^{1/2}, A^{-1/2})` from a single eigendecomposition.
pub fn sym_pd_roots(a: &HPMatrix, ctx: &PrecisionContext) -> Result<(HPMatrix, HPMatrix)> {
    let (vals, vecs) = sym_eigen(a, ctx)?;
    if let Some(bad) = vals.iter().find(|l| !l.is_sign_positive() || l.is_zero()) {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: bad.to_f64(),
        });
    }
    let n = a.rows();
    let mut root = HPMatrix::zeros(ctx, n, n);
    let mut inv_root = HPMatrix::zeros(ctx, n, n);
    let mut t = ctx.zero();
    for k in 0..n {
        let s = vals[k].clone().sqrt();
        let si = s.clone().recip();
        for i in 0..n {
            for j in i..n {
                t.assign(&vecs[(i, k)] * &vecs[(j, k)]);
                let w = (&t * &s).complete(ctx.bits());
                root[(i, j)] += &w;
                let w = (&t * &si).complete(ctx.bits());
                inv_root[(i, j)] += &w;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            root[(i, j)] = root[(j, i)].clone();
            inv_root[(i, j)] = inv_root[(j, i)].clone();
        }
    }
    Ok((root, inv_root))
}

struct LuFactors {
    lu: HPMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

fn lu_factor(a: &HPMatrix, ctx: &PrecisionContext) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot LU-factor a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let prec = ctx.bits();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut swaps = 0usize;
    let threshold = (ctx.one() >> (ctx.bits() - 8)).clone();
    let mut t = ctx.zero();

    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = lu[(k, k)].clone().abs();
        for i in (k + 1)..n {
            let mag = lu[(i, k)].clone().abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag < threshold {
            return Err(Error::Singular {
                pivot: pivot_mag.to_f64(),
                threshold: threshold.to_f64(),
            });
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)].clone();
                lu[(k, j)] = lu[(pivot_row, j)].clone();
                lu[(pivot_row, j)] = tmp;
            }
            perm.swap(k, pivot_row);
            swaps += 1;
        }
        let pivot = lu[(k, k)].clone();
        for i in (k + 1)..n {
            let factor = (&lu[(i, k)] / &pivot).complete(prec);
            lu[(i, k)] = factor.clone();
            for j in (k + 1)..n {
                t.assign(&factor * &lu[(k, j)]);
                lu[(i, j)] -= &t;
            }
        }
    }
    Ok(LuFactors { lu, perm, swaps })
}

fn lu_solve(f: &LuFactors, b: &[Float], ctx: &PrecisionContext) -> Vec<Float> {
    let n = f.lu.rows();
    let prec = ctx.bits();
    let mut y: Vec<Float> = f.perm.iter().map(|&p| b[p].clone()).collect();
    let mut t = ctx.zero();
    for i in 1..n {
        for j in 0..i {
            t.assign(&f.lu[(i, j)] * &y[j]);
            y[i] -= &t;
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            t.assign(&f.lu[(i, j)] * &y[j]);
            y[i] -= &t;
        }
        let yi = (&y[i] / &f.lu[(i, i)]).complete(prec);
        y[i] = yi;
    }
    y
}

/// Matrix inverse by LU with partial pivoting.
///
/// A pivot magnitude below `2^(-bits+8)` raises [`Error::Singular`].
pub fn hp_inverse(a: &HPMatrix, ctx: &PrecisionContext) -> Result<HPMatrix> {
    let f = lu_factor(a, ctx)?;
    let n = a.rows();
    let mut inv = HPMatrix::zeros(ctx, n, n);
    let mut e = vec![ctx.zero(); n];
    for j in 0..n {
        e[j].assign(1);
        let col = lu_solve(&f, &e, ctx);
        inv.set_column(j, &col);
        e[j].assign(0);
    }
    Ok(inv)
}

/// Determinant by LU with partial pivoting (no singularity floor: a zero
/// pivot shows up as a zero determinant through the error path).
pub fn determinant(a: &HPMatrix, ctx: &PrecisionContext) -> Result<Float> {
    match lu_factor(a, ctx) {
        Ok(f) => {
            let mut det = ctx.one();
            for k in 0..a.rows() {
                det *= &f.lu[(k, k)];
            }
            if f.swaps % 2 == 1 {
                det.neg_assign();
            }
            Ok(det)
        }
        Err(Error::Singular { .. }) => Ok(ctx.zero()),
        Err(e) => Err(e),
    }
}

/// Spectrum and right-eigenvectors of the nonsymmetric product `G·Hg` for
/// SPD `G` and symmetric `Hg`, via the symmetric similarity
/// `M = G^{1/2} Hg G^{1/2}`.
///
/// Eigenvalues come back ascending; each right-eigenvector `v = G^{1/2} w`
/// is normalized to unit Euclidean norm with its sign fixed so the
/// component sum is nonnegative. The raw nonsymmetric product is never
/// eigensolved here.
pub fn nonsym_eigen_similar(
    g: &HPMatrix,
    hg: &HPMatrix,
    ctx: &PrecisionContext,
) -> Result<(Vec<Float>, HPMatrix)> {
    require_symmetric(hg)?;
    let (g_root, _) = sym_pd_roots(g, ctx)?;
    let mut m = g_root.mul(hg, ctx).mul(&g_root, ctx);
    m = m.symmetrized(ctx);
    let (vals, w) = sym_eigen(&m, ctx)?;
    let mut v = g_root.mul(&w, ctx);
    let n = v.rows();
    for j in 0..n {
        let mut norm2 = ctx.zero();
        let mut sum = ctx.zero();
        let mut t = ctx.zero();
        for i in 0..n {
            t.assign(&v[(i, j)] * &v[(i, j)]);
            norm2 += &t;
            sum += &v[(i, j)];
        }
        norm2.sqrt_mut();
        if sum.is_sign_negative() && !sum.is_zero() {
            norm2.neg_assign();
        }
        for i in 0..n {
            v[(i, j)] /= &norm2;
        }
    }
    Ok((vals, v))
}

/// Max-norm of `A·A^{-1} - I`, the residual named in the inverse contract.
pub fn inverse_residual(a: &HPMatrix, a_inv: &HPMatrix, ctx: &PrecisionContext) -> Float {
    let prod = a.mul(a_inv, ctx);
    let mut worst = ctx.zero();
    for i in 0..prod.rows() {
        for j in 0..prod.cols() {
            let mut d = prod[(i, j)].clone();
            if i == j {
                d -= 1;
            }
            d.abs_mut();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// `‖VΛV^T − A‖_max / ‖A‖_max`, the reconstruction residual used by the
/// eigensolver contract tests.
pub fn eigen_reconstruction_residual(
    a: &HPMatrix,
    vals: &[Float],
    vecs: &HPMatrix,
    ctx: &PrecisionContext,
) -> Float {
    let n = a.rows();
    let mut recon = HPMatrix::zeros(ctx, n, n);
    let mut t = ctx.zero();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                t.assign(&vecs[(i, k)] * &vecs[(j, k)]);
                t *= &vals[k];
                recon[(i, j)] += &t;
            }
        }
    }
    let diff = recon.sub(a, ctx).max_abs();
    let scale = a.max_abs();
    if scale.is_zero() {
        diff
    } else {
        (diff / scale).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx256() -> PrecisionContext {
        PrecisionContext::new(256)
    }

    fn random_symmetric(ctx: &PrecisionContext, n: usize, seed: u64) -> HPMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = HPMatrix::zeros(ctx, n, n);
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = ctx.real(x);
            }
        }
        a.symmetrize_upper();
        a
    }

    #[test]
    fn context_tolerances_monotone_in_bits() {
        let lo = PrecisionContext::new(128);
        let hi = PrecisionContext::new(512);
        assert!(lo.eig_tol() > hi.eig_tol());
        assert!(lo.quad_tol() > hi.quad_tol());
        assert!(hi.eig_tol() > 0);
        assert!(hi.quad_tol() > 0);
    }

    #[test]
    #[should_panic(expected = "at least 128")]
    fn context_rejects_low_precision() {
        let _ = PrecisionContext::new(64);
    }

    #[test]
    fn eigen_identity_is_all_ones() {
        let ctx = ctx256();
        let a = HPMatrix::identity(&ctx, 4);
        let (vals, _) = sym_eigen(&a, &ctx).unwrap();
        for v in vals {
            assert_eq!(v, 1);
        }
    }

    #[test]
    fn eigen_diagonal_sorted_with_axis_vectors() {
        let ctx = ctx256();
        let mut a = HPMatrix::zeros(&ctx, 2, 2);
        a[(0, 0)] = ctx.int(3);
        a[(1, 1)] = ctx.int(1);
        let (vals, vecs) = sym_eigen(&a, &ctx).unwrap();
        assert_eq!(vals[0], 1);
        assert_eq!(vals[1], 3);
        // eigenvector for 1 is e_1, for 3 is e_0
        assert_eq!(vecs[(1, 0)].clone().abs(), 1);
        assert_eq!(vecs[(0, 1)].clone().abs(), 1);
    }

    #[test]
    fn eigen_reconstructs_random_matrix() {
        // 8x8 at 256 bits: reconstruction residual well below 2^-120.
        let ctx = ctx256();
        let a = random_symmetric(&ctx, 8, 7);
        let (vals, vecs) = sym_eigen(&a, &ctx).unwrap();
        let resid = eigen_reconstruction_residual(&a, &vals, &vecs, &ctx);
        let bound = ctx.one() >> 120;
        assert!(resid < bound, "residual {:e}", resid.to_f64());
        // orthonormality of V
        let vtv = vecs.transpose().mul(&vecs, &ctx);
        let dev = vtv.sub(&HPMatrix::identity(&ctx, 8), &ctx).max_abs();
        assert!(dev < ctx.eig_tol());
    }

    #[test]
    fn eigen_rejects_asymmetric_input() {
        let ctx = ctx256();
        let mut a = HPMatrix::identity(&ctx, 2);
        a[(0, 1)] = ctx.real(0.25);
        match sym_eigen(&a, &ctx) {
            Err(Error::NotSymmetric(_)) => {}
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
    }

    #[test]
    fn pd_sqrt_diagonal() {
        let ctx = ctx256();
        let mut a = HPMatrix::zeros(&ctx, 2, 2);
        a[(0, 0)] = ctx.int(4);
        a[(1, 1)] = ctx.int(9);
        let b = sym_pd_sqrt(&a, &ctx).unwrap();
        assert!((b[(0, 0)].clone() - 2f64).abs() < ctx.eig_tol());
        assert!((b[(1, 1)].clone() - 3f64).abs() < ctx.eig_tol());
        let i = HPMatrix::identity(&ctx, 3);
        let ri = sym_pd_sqrt(&i, &ctx).unwrap();
        assert!(ri.sub(&i, &ctx).max_abs() < ctx.eig_tol());
    }

    #[test]
    fn pd_sqrt_multiplies_back() {
        let ctx = ctx256();
        let a = HPMatrix::from_f64_rows(&ctx, &[&[2.0, 1.0], &[1.0, 2.0]]);
        let b = sym_pd_sqrt(&a, &ctx).unwrap();
        let back = b.mul(&b, &ctx);
        let resid = back.sub(&a, &ctx).max_abs();
        assert!(resid < ctx.eig_tol(), "residual {:e}", resid.to_f64());
    }

    #[test]
    fn pd_sqrt_rejects_indefinite() {
        let ctx = ctx256();
        let a = HPMatrix::from_f64_rows(&ctx, &[&[1.0, 0.0], &[0.0, -2.0]]);
        match sym_pd_sqrt(&a, &ctx) {
            Err(Error::NotPositiveDefinite { eigenvalue }) => {
                assert!((eigenvalue + 2.0).abs() < 1e-12);
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn inverse_diagonal() {
        let ctx = ctx256();
        let mut a = HPMatrix::zeros(&ctx, 2, 2);
        a[(0, 0)] = ctx.int(2);
        a[(1, 1)] = ctx.int(5);
        let inv = hp_inverse(&a, &ctx).unwrap();
        assert!((inv[(0, 0)].clone() - 0.5f64).abs() < ctx.eig_tol());
        let fifth = ctx.one() / 5u32;
        assert!((inv[(1, 1)].clone() - fifth).abs() < ctx.eig_tol());
        let i = HPMatrix::identity(&ctx, 4);
        let ii = hp_inverse(&i, &ctx).unwrap();
        assert!(ii.sub(&i, &ctx).max_abs() < ctx.eig_tol());
    }

    #[test]
    fn inverse_hilbert_8x8_residual() {
        let ctx = PrecisionContext::new(512);
        let a = HPMatrix::from_fn(8, 8, |i, j| {
            let mut v = ctx.one();
            v /= (i + j + 1) as u32;
            v
        });
        let inv = hp_inverse(&a, &ctx).unwrap();
        let resid = inverse_residual(&a, &inv, &ctx);
        assert!(resid < ctx.eig_tol(), "residual {:e}", resid.to_f64());
    }

    #[test]
    fn inverse_flags_singular() {
        let ctx = ctx256();
        let a = HPMatrix::from_f64_rows(&ctx, &[&[1.0, 2.0], &[2.0, 4.0]]);
        match hp_inverse(&a, &ctx) {
            Err(Error::Singular { .. }) => {}
            other => panic!("expected Singular, got {other:?}"),
        }
    }

    #[test]
    fn determinant_matches_known_values() {
        let ctx = ctx256();
        let a = HPMatrix::from_f64_rows(&ctx, &[&[2.0, 1.0], &[1.0, 2.0]]);
        let d = determinant(&a, &ctx).unwrap();
        assert!((d - 3f64).abs() < ctx.eig_tol());
        let s = HPMatrix::from_f64_rows(&ctx, &[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(determinant(&s, &ctx).unwrap(), 0);
    }

    #[test]
    fn similar_eigen_reduces_to_hg_for_identity_g() {
        let ctx = ctx256();
        let g = HPMatrix::identity(&ctx, 2);
        let mut hg = HPMatrix::zeros(&ctx, 2, 2);
        hg[(0, 0)] = ctx.real(0.7);
        hg[(1, 1)] = ctx.real(1.9);
        let (vals, _) = nonsym_eigen_similar(&g, &hg, &ctx).unwrap();
        assert!((vals[0].clone() - 0.7f64).abs() < ctx.eig_tol());
        assert!((vals[1].clone() - 1.9f64).abs() < ctx.eig_tol());
    }

    #[test]
    fn similar_eigen_pure_single_mode_quarter() {
        // G = H and H = G^{-1}/4 forces the product eigenvalue to 1/4.
        let ctx = ctx256();
        let g = HPMatrix::from_f64_rows(&ctx, &[&[2.0]]);
        let hg = HPMatrix::from_f64_rows(&ctx, &[&[1.0 / 8.0]]);
        let (vals, _) = nonsym_eigen_similar(&g, &hg, &ctx).unwrap();
        assert!((vals[0].clone() - 0.25f64).abs() < ctx.eig_tol());
    }

    #[test]
    fn similar_eigen_matches_double_precision_oracle() {
        // independent dense nonsymmetric eigensolve (nalgebra Schur) on the
        // raw product G·Hg
        let ctx = PrecisionContext::new(512);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 5;
        let mut b = HPMatrix::zeros(&ctx, n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = ctx.real(rng.gen_range(-1.0..1.0));
            }
        }
        // SPD G = B B^T + n I
        let mut g = b.mul(&b.transpose(), &ctx);
        for i in 0..n {
            g[(i, i)] += n as u32;
        }
        let g = g.symmetrized(&ctx);
        let hg = random_symmetric(&ctx, n, 13);

        let (vals, vecs) = nonsym_eigen_similar(&g, &hg, &ctx).unwrap();

        let prod = g.mul(&hg, &ctx);
        let flat: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| prod[(i, j)].to_f64())
            .collect();
        let m = nalgebra::DMatrix::from_row_slice(n, n, &flat);
        let mut oracle: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.re).collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (ours, theirs) in vals.iter().zip(oracle.iter()) {
            assert!(
                (ours.to_f64() - theirs).abs() <= 1e-8 * theirs.abs().max(1.0),
                "{} vs oracle {}",
                ours.to_f64(),
                theirs
            );
        }
        // right-eigenvector property: G·Hg·v = λ v
        for k in 0..n {
            let v = vecs.column(k);
            let mv = prod.mul_vec(&v, &ctx);
            for i in 0..n {
                let mut d = mv[i].clone();
                let mut t = vals[k].clone();
                t *= &v[i];
                d -= &t;
                d.abs_mut();
                assert!(d < ctx.eig_tol(), "eigvec residual {:e}", d.to_f64());
            }
        }
    }

    #[test]
    fn precision_monotonicity_from_128_to_192_bits() {
        // re-running at bits+64 moves results by less than 2^(-bits+32)
        let lo = PrecisionContext::new(128);
        let hi = PrecisionContext::new(192);
        let bound = lo.one() >> (128 - 32);

        let a_lo = random_symmetric(&lo, 6, 3);
        let a_hi = HPMatrix::from_fn(6, 6, |i, j| Float::with_val(192, &a_lo[(i, j)]));

        let (vals_lo, _) = sym_eigen(&a_lo, &lo).unwrap();
        let (vals_hi, _) = sym_eigen(&a_hi, &hi).unwrap();
        for (l, h) in vals_lo.iter().zip(vals_hi.iter()) {
            let denom = h.clone().abs().max(&lo.one());
            let drift = ((l - h).complete(192) / denom).abs();
            assert!(drift < bound, "eigenvalue drift {:e}", drift.to_f64());
        }

        let mut spd_lo = a_lo.mul(&a_lo, &lo).symmetrized(&lo);
        for i in 0..6 {
            spd_lo[(i, i)] += 4;
        }
        let spd_hi = HPMatrix::from_fn(6, 6, |i, j| Float::with_val(192, &spd_lo[(i, j)]));
        let inv_lo = hp_inverse(&spd_lo, &lo).unwrap();
        let inv_hi = hp_inverse(&spd_hi, &hi).unwrap();
        let scale = inv_hi.max_abs();
        let drift: Float = inv_lo.sub(&inv_hi, &hi).max_abs() / scale;
        assert!(drift < bound, "inverse drift {:e}", drift.to_f64());

        let rt_lo = sym_pd_sqrt(&spd_lo, &lo).unwrap();
        let rt_hi = sym_pd_sqrt(&spd_hi, &hi).unwrap();
        let scale = rt_hi.max_abs();
        let drift: Float = rt_lo.sub(&rt_hi, &hi).max_abs() / scale;
        assert!(drift < bound, "sqrt drift {:e}", drift.to_f64());
    }

    #[test]
    fn similar_eigen_matches_exact_rational_characteristic_polynomial() {
        // n <= 3 oracle in exact rational arithmetic on rational inputs
        use rug::Rational;
        let ctx = ctx256();
        // G SPD and Hg symmetric with small dyadic-rational entries
        let g_r = [
            [(5, 2), (1, 4), (0, 1)],
            [(1, 4), (3, 1), (1, 8)],
            [(0, 1), (1, 8), (2, 1)],
        ];
        let h_r = [
            [(1, 1), (-1, 2), (1, 4)],
            [(-1, 2), (3, 4), (0, 1)],
            [(1, 4), (0, 1), (-1, 1)],
        ];
        let to_f = |(p, q): (i64, i64)| p as f64 / q as f64;
        let g = HPMatrix::from_fn(3, 3, |i, j| ctx.real(to_f(g_r[i][j])));
        let hg = HPMatrix::from_fn(3, 3, |i, j| ctx.real(to_f(h_r[i][j])));
        let (vals, _) = nonsym_eigen_similar(&g, &hg, &ctx).unwrap();

        // exact product P = G*Hg in rationals
        let rat = |(p, q): (i64, i64)| Rational::from((p, q));
        let mut prod = vec![vec![Rational::new(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Rational::new();
                for k in 0..3 {
                    acc += rat(g_r[i][k]) * rat(h_r[k][j]);
                }
                prod[i][j] = acc;
            }
        }
        // characteristic polynomial det(P - x I) = -x^3 + c2 x^2 + c1 x + c0
        let tr: Rational = (0..3).map(|i| prod[i][i].clone()).sum();
        let det3 = |m: &Vec<Vec<Rational>>| -> Rational {
            let a = &m[0];
            let b = &m[1];
            let c = &m[2];
            a[0].clone() * (b[1].clone() * c[2].clone() - b[2].clone() * c[1].clone())
                - a[1].clone() * (b[0].clone() * c[2].clone() - b[2].clone() * c[0].clone())
                + a[2].clone() * (b[0].clone() * c[1].clone() - b[1].clone() * c[0].clone())
        };
        let det = det3(&prod);
        // sum of principal 2x2 minors
        let mut m2 = Rational::new();
        for i in 0..3 {
            for j in (i + 1)..3 {
                m2 += prod[i][i].clone() * prod[j][j].clone()
                    - prod[i][j].clone() * prod[j][i].clone();
            }
        }
        // p(x) = x^3 - tr x^2 + m2 x - det; evaluate at computed eigenvalues
        // with exact coefficients lifted to floats
        let trf = Float::with_val(256, &tr);
        let m2f = Float::with_val(256, &m2);
        let detf = Float::with_val(256, &det);
        for x in &vals {
            let mut p = x.clone();
            p -= &trf;
            p *= x;
            p += &m2f;
            p *= x;
            p -= &detf;
            p.abs_mut();
            // |p'(x)| is O(1) here; characteristic roots match to eig_tol scale
            assert!(
                p < (ctx.one() >> 200),
                "char poly residual {:e} at {}",
                p.to_f64(),
                x.to_f64()
            );
        }
    }
}
