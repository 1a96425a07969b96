//! Quadrature kernels for the Brillouin-zone integrals.
//!
//! Two schemes cover every mass regime:
//!
//! * periodic trapezoid with point doubling over the full `2π` period —
//!   geometrically convergent for `m` of order one because the dispersion
//!   integrand is analytic in a strip of half-width `2·asinh(m/2)`; the
//!   `N`-point rule is simultaneously the exact finite-`N` lattice sum;
//! * tanh-sinh panels — used near the massless limit where the strip
//!   collapses, with a dedicated panel `[0, δ]` over the dispersion peak and
//!   dyadically graded panels out to `π`.
//!
//! Both schemes integrate `w(k)·cos(k·r̂)` for every `r̂ = 0..=max_r` in one
//! pass, sharing the `w(k)` evaluations through the Chebyshev recurrence
//! `cos(k(r+1)) = 2cos(k)cos(kr) − cos(k(r−1))`.

use crate::error::{Error, Result};
use crate::precision::PrecisionContext;
use rug::ops::{CompleteRound, NegAssign};
use rug::{Assign, Float};

/// Exact `N`-point discrete sum `(1/N) Σ_k w(2πk/N)·cos(2πk r̂/N)` for every
/// `r̂ = 0..=max_r`, folding the `k ↔ N−k` symmetry of an even weight.
pub fn finite_cosine_sums<W>(weight: W, n: usize, max_r: usize, ctx: &PrecisionContext) -> Vec<Float>
where
    W: Fn(&Float) -> Float,
{
    assert!(n >= 2, "need at least two lattice momenta");
    let prec = ctx.bits();
    let mut sums: Vec<Float> = (0..=max_r).map(|_| ctx.zero()).collect();

    let two_pi = ctx.pi() << 1;

    // k = 0 term: cos = 1 for every r̂
    let w0 = weight(&ctx.zero());
    for s in sums.iter_mut() {
        *s += &w0;
    }
    // k = N/2 term (even N): cos(π r̂) = (−1)^r̂
    let half = n / 2;
    if n % 2 == 0 {
        let k = (&two_pi * Float::with_val(prec, half)) / n as u32;
        let wh = weight(&k);
        for (r, s) in sums.iter_mut().enumerate() {
            if r % 2 == 0 {
                *s += &wh;
            } else {
                *s -= &wh;
            }
        }
    }
    // paired interior momenta contribute twice
    let interior_end = if n % 2 == 0 { half } else { half + 1 };
    let mut t = ctx.zero();
    for j in 1..interior_end {
        let k = (&two_pi * Float::with_val(prec, j)) / n as u32;
        let mut w = weight(&k);
        w <<= 1;
        let ck = k.cos();
        accumulate_cosine_series(&mut sums, &w, &ck, &mut t, prec);
    }
    for s in sums.iter_mut() {
        *s /= n as u32;
    }
    sums
}

/// Adds `w·cos(k·r̂)` to `sums[r̂]` for every r̂ via the Chebyshev recurrence,
/// given `ck = cos(k)`.
fn accumulate_cosine_series(sums: &mut [Float], w: &Float, ck: &Float, t: &mut Float, prec: u32) {
    let two_ck = {
        let mut c = ck.clone();
        c <<= 1;
        c
    };
    // c_{r} walks cos(k r): c_0 = 1, c_1 = ck
    let mut c_prev = Float::with_val(prec, 1);
    let mut c_cur = ck.clone();
    match sums.len() {
        0 => return,
        1 => {
            sums[0] += w;
            return;
        }
        _ => {}
    }
    sums[0] += w;
    t.assign(&c_cur * w);
    sums[1] += &*t;
    for s in sums.iter_mut().skip(2) {
        // c_next = 2 ck c_cur - c_prev
        t.assign(&two_ck * &c_cur);
        *t -= &c_prev;
        std::mem::swap(&mut c_prev, &mut c_cur);
        c_cur.assign(&*t);
        t.assign(&c_cur * w);
        *s += &*t;
    }
}

/// Periodic trapezoid with point doubling: finite sums at `N, 2N, 4N, …`
/// until the whole batch moves by less than `tol`, with at least one
/// doubling confirmed. Returns the converged batch.
pub fn periodic_cosine_batch<W>(
    weight: W,
    max_r: usize,
    tol: &Float,
    start_n: usize,
    max_n: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<Float>>
where
    W: Fn(&Float) -> Float,
{
    let mut n = start_n.next_power_of_two().max(16);
    let mut prev = finite_cosine_sums(&weight, n, max_r, ctx);
    let mut achieved = f64::INFINITY;
    while n <= max_n {
        n *= 2;
        let cur = finite_cosine_sums(&weight, n, max_r, ctx);
        let mut delta = ctx.zero();
        for (a, b) in cur.iter().zip(prev.iter()) {
            let d = (a - b).complete(ctx.bits()).abs();
            if d > delta {
                delta = d;
            }
        }
        achieved = delta.to_f64();
        if delta <= *tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence {
        achieved,
        target: tol.to_f64(),
    })
}

/// One tanh-sinh node: abscissa offsets from both interval ends plus the
/// weight, all free of endpoint cancellation.
struct TsNode {
    /// distance from the lower endpoint at t < 0, upper at t > 0, as a
    /// fraction of the interval length
    offset: Float,
    weight: Float,
}

/// Nodes of one refinement level (odd multiples of `h`, plus `t = 0` at the
/// base level), shared by every panel at a given precision.
struct TsLevel {
    /// (offset-from-a, offset-from-b, weight) triples encoded as two
    /// mirrored nodes; `center` is the t = 0 node present only at level 0
    center_weight: Option<Float>,
    nodes: Vec<TsNode>,
}

fn ts_level(level: u32, prec: u32) -> TsLevel {
    // truncation: exp(-(π/2) sinh t_max) ≲ 2^(-prec-16)
    let ln2 = Float::with_val(prec, rug::float::Constant::Log2);
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let target = Float::with_val(prec, prec + 16) * &ln2;
    let t_max = {
        let mut v = (&target / &pi).complete(prec);
        v <<= 1;
        v.asinh()
    };
    let h = Float::with_val(prec, 1) >> level;
    let half_pi: Float = pi.clone() >> 1u32;

    let mut center_weight = None;
    let mut nodes = Vec::new();
    let indices: Box<dyn Iterator<Item = u32>> = if level == 0 {
        Box::new(0u32..)
    } else {
        Box::new((1u32..).step_by(2))
    };
    for j in indices {
        let t = &h * Float::with_val(prec, j);
        if t > t_max {
            break;
        }
        let u: Float = half_pi.clone() * t.clone().sinh();
        // offset from the nearer endpoint: 1 - tanh(u) = 2e^{-2u}/(1+e^{-2u})
        let e = {
            let mut v = u.clone();
            v <<= 1;
            v.neg_assign();
            v.exp_mut();
            v
        };
        let one_plus = Float::with_val(prec, 1) + &e;
        let offset = {
            let mut v = (&e / &one_plus).complete(prec);
            v <<= 1;
            v
        };
        // sech²(u) = 4 e^{-2u} / (1+e^{-2u})²
        let sech2 = {
            let mut v = (&e / &one_plus).complete(prec);
            v /= &one_plus;
            v <<= 2;
            v
        };
        let weight = (&half_pi * t.clone().cosh()) * sech2;
        if j == 0 {
            center_weight = Some(weight);
        } else {
            nodes.push(TsNode { offset, weight });
        }
    }
    TsLevel {
        center_weight,
        nodes,
    }
}

/// Tanh-sinh integration of `w(k)·cos(k·r̂)` over `[a, b]` for every
/// `r̂ = 0..=max_r`, with level doubling until the batch moves less than
/// `tol`.
pub fn tanh_sinh_cosine_batch<W>(
    weight: W,
    a: &Float,
    b: &Float,
    max_r: usize,
    tol: &Float,
    ctx: &PrecisionContext,
) -> Result<Vec<Float>>
where
    W: Fn(&Float) -> Float,
{
    let prec = ctx.bits();
    let half_len: Float = (b - a).complete(prec) >> 1u32;
    let mut sums: Vec<Float> = (0..=max_r).map(|_| ctx.zero()).collect();
    let mut t = ctx.zero();

    let mut eval_node = |sums: &mut [Float], offset: &Float, w_ts: &Float, t: &mut Float| {
        // mirrored pair, offsets measured inward from each endpoint
        let inward: Float = half_len.clone() * offset;
        for x in [inward.clone() + a, b.clone() - &inward] {
            let mut w = weight(&x);
            w *= w_ts;
            w *= &half_len;
            let ck = x.cos();
            accumulate_cosine_series(sums, &w, &ck, t, prec);
        }
    };

    // level 0
    let lvl0 = ts_level(0, prec);
    if let Some(cw) = &lvl0.center_weight {
        let mid = ((a + b).complete(prec)) >> 1;
        let mut w = weight(&mid);
        w *= cw;
        w *= &half_len;
        let ck = mid.cos();
        accumulate_cosine_series(&mut sums, &w, &ck, &mut t, prec);
    }
    for node in &lvl0.nodes {
        eval_node(&mut sums, &node.offset, &node.weight, &mut t);
    }

    let mut h = ctx.one();
    let mut achieved = f64::INFINITY;
    let max_level = 12;
    for level in 1..=max_level {
        let lvl = ts_level(level, prec);
        let mut add: Vec<Float> = (0..=max_r).map(|_| ctx.zero()).collect();
        for node in &lvl.nodes {
            eval_node(&mut add, &node.offset, &node.weight, &mut t);
        }
        h >>= 1;
        // S_{l} = S_{l-1}/2 + h_l · (odd-node contributions)
        let mut delta = ctx.zero();
        for (s, extra) in sums.iter_mut().zip(add.iter()) {
            let old = s.clone();
            *s >>= 1;
            t.assign(extra * &h);
            *s += &t;
            let d = (&*s - &old).complete(prec).abs();
            if d > delta {
                delta = d;
            }
        }
        achieved = delta.to_f64();
        if level >= 3 && delta <= *tol {
            return Ok(sums);
        }
    }
    Err(Error::QuadratureNonConvergence {
        achieved,
        target: tol.to_f64(),
    })
}

/// Splits `[lo, hi]` into dyadically growing panels starting at width
/// `first` and capped at `cap`, for the graded tanh-sinh scheme.
pub fn graded_panels(
    lo: &Float,
    hi: &Float,
    first: &Float,
    cap: &Float,
    ctx: &PrecisionContext,
) -> Vec<(Float, Float)> {
    let prec = ctx.bits();
    let mut panels = Vec::new();
    let mut left = lo.clone();
    let mut width = first.clone();
    while left < *hi {
        let mut right = (&left + &width).complete(prec);
        if right > *hi {
            right = hi.clone();
        }
        panels.push((left.clone(), right.clone()));
        left = right;
        width <<= 1;
        if width > *cap {
            width = cap.clone();
        }
    }
    panels
}
