//! Closed-form moment analysis of the cascade map.
//!
//! For a unit-mean weight law with second moment `u` and third moment `v`,
//! iterating the cascade map transforms the moments by
//!
//! ```text
//! u' = (b-1)/(b-u)
//! v' = (b-1)(3 u u' + b - 2) / (b^2 - v)
//! ```
//!
//! and the variance `s = u - 1` obeys `s' = s/(b-1-s)`, which telescopes to
//! the closed form implemented in [`sigma_closed_form`]. The remaining
//! functions are the explicit inequality chains that control the normalized
//! variable `Z_n = (W_n - 1)/sigma_n`: the third-moment bound, the
//! remainder-term variance bound, and the Lindeberg factor.
//!
//! Everything here is deterministic f64 arithmetic; statistical machinery
//! lives elsewhere.

use crate::error::{Error, Result};

/// Threshold on the second moment for the third-moment control domain:
/// `min(b-1, b(b^4-4b^2+12b-8)/(b^4+8b^2-12b+4))`. Requires `b >= 3`.
pub fn w2_bound(b: u32) -> Result<f64> {
    check_b(b)?;
    let bf = b as f64;
    let b2 = bf * bf;
    let b4 = b2 * b2;
    let rational = bf * (b4 - 4.0 * b2 + 12.0 * bf - 8.0) / (b4 + 8.0 * b2 - 12.0 * bf + 4.0);
    Ok(rational.min(bf - 1.0))
}

/// Threshold on the third moment, defined for `1 < t < w2_bound(b)`:
/// `b^2/2 + sqrt((b(b^4-4b^2+12b-8) - t(b^4+8b^2-12b+4))/(b-t))/2`.
/// Always below `b^2 - 1` on its domain.
pub fn w3_bound(b: u32, t: f64) -> Result<f64> {
    check_b(b)?;
    let w2 = w2_bound(b)?;
    if !(t > 1.0 && t < w2) {
        return Err(Error::domain(format!(
            "second moment t={t} outside (1, w2(b)) = (1, {w2})"
        )));
    }
    let bf = b as f64;
    let b2 = bf * bf;
    let b4 = b2 * b2;
    let radicand =
        (bf * (b4 - 4.0 * b2 + 12.0 * bf - 8.0) - t * (b4 + 8.0 * b2 - 12.0 * bf + 4.0)) / (bf - t);
    assert!(
        radicand >= 0.0,
        "negative radicand {radicand} inside the legal domain"
    );
    Ok(b2 / 2.0 + 0.5 * radicand.sqrt())
}

/// The two moment thresholds for a given base, bundled.
#[derive(Debug, Clone, Copy)]
pub struct DomainBounds {
    b: u32,
    pub w2: f64,
}

impl DomainBounds {
    pub fn new(b: u32) -> Result<DomainBounds> {
        Ok(DomainBounds { b, w2: w2_bound(b)? })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn w3_at(&self, t: f64) -> Result<f64> {
        w3_bound(self.b, t)
    }
}

/// Where a unit-mean law sits relative to the iterable domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainClass {
    /// Inside the third-moment control domain: `1 < m2 < w2(b)` and
    /// `m3 < w3(b, m2)`.
    InDb,
    /// Iterable (`1 < m2 < b-1`) but without third-moment control.
    InPbOnly,
    /// The map cannot be iterated from this law (includes the Dirac case
    /// `m2 = 1`, for which everything is already at the fixed point).
    Outside,
}

impl std::fmt::Display for DomainClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainClass::InDb => write!(f, "IN_D_b"),
            DomainClass::InPbOnly => write!(f, "IN_P_b_ONLY"),
            DomainClass::Outside => write!(f, "OUTSIDE"),
        }
    }
}

/// Classify a law by its first three moments. `m1` must equal 1 to 1e-12;
/// `m2 >= 1` and `m3 >= m2^2` are required for moment consistency.
pub fn classify_domain(b: u32, m1: f64, m2: f64, m3: f64) -> Result<DomainClass> {
    check_b(b)?;
    if (m1 - 1.0).abs() > 1e-12 {
        return Err(Error::input(format!("first moment must be 1, got {m1}")));
    }
    if m2 < 1.0 {
        return Err(Error::input(format!(
            "moment inconsistency: m2 = {m2} < 1 contradicts m1 = 1"
        )));
    }
    if m3 < m2 * m2 {
        return Err(Error::input(format!(
            "moment inconsistency: m3 = {m3} < m2^2 = {}",
            m2 * m2
        )));
    }
    let w2 = w2_bound(b)?;
    if m2 > 1.0 && m2 < w2 && m3 < w3_bound(b, m2)? {
        return Ok(DomainClass::InDb);
    }
    if m2 > 1.0 && m2 < b as f64 - 1.0 {
        return Ok(DomainClass::InPbOnly);
    }
    Ok(DomainClass::Outside)
}

/// Exact second- and third-moment sequences under the cascade map.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub b: u32,
    /// `u[n]` is the second moment after `n` applications of the map.
    pub u: Vec<f64>,
    /// `v[n]` is the third moment after `n` applications of the map.
    pub v: Vec<f64>,
}

impl MomentTrajectory {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Variances `u[n] - 1`. The subtraction is exact for `u` in `[1, 2]`,
    /// but for large `n` the value carries the absolute rounding noise of
    /// the `u` recursion (~1e-16); use [`sigma_trajectory`] when small
    /// variances must keep relative accuracy.
    pub fn sigma2(&self) -> Vec<f64> {
        self.u.iter().map(|&u| u - 1.0).collect()
    }
}

/// Iterate the moment recursion `n` steps from `(u0, v0)`.
/// Requires `1 <= u0 < b` and `0 < v0 < b^2`; a step that leaves the domain
/// reports the step index instead of propagating NaNs.
pub fn iterate_moments(b: u32, u0: f64, v0: f64, n: usize) -> Result<MomentTrajectory> {
    check_b(b)?;
    let bf = b as f64;
    if !(1.0..bf).contains(&u0) {
        return Err(Error::domain(format!("u0 = {u0} outside [1, b) = [1, {bf})")));
    }
    if !(v0 > 0.0 && v0 < bf * bf) {
        return Err(Error::domain(format!(
            "v0 = {v0} outside (0, b^2) = (0, {})",
            bf * bf
        )));
    }
    let mut u = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    u.push(u0);
    v.push(v0);
    for k in 0..n {
        let (uk, vk) = (u[k], v[k]);
        if uk >= bf {
            return Err(Error::Divergence {
                step: k,
                detail: format!("u_{k} = {uk} >= b = {bf}"),
            });
        }
        if vk >= bf * bf {
            return Err(Error::Divergence {
                step: k,
                detail: format!("v_{k} = {vk} >= b^2 = {}", bf * bf),
            });
        }
        let un = (bf - 1.0) / (bf - uk);
        let vn = (bf - 1.0) * (3.0 * uk * un + bf - 2.0) / (bf * bf - vk);
        u.push(un);
        v.push(vn);
    }
    Ok(MomentTrajectory { b, u, v })
}

/// One step of the variance recursion `s -> s/(b-1-s)`.
pub fn sigma_step(b: u32, sigma_sq: f64) -> f64 {
    sigma_sq / (b as f64 - 1.0 - sigma_sq)
}

/// Closed form for the variance after `n` steps: with
/// `c = s0/(b-2-s0)`, the identity `s_n/(b-2-s_n) = c (b-1)^{-n}` gives
/// `s_n = (b-2) c (b-1)^{-n} / (1 + c (b-1)^{-n})`.
/// Requires `0 < s0 < b-2`.
pub fn sigma_closed_form(b: u32, sigma0_sq: f64, n: u32) -> Result<f64> {
    let c = contraction_constant(b, sigma0_sq)?;
    let bf = b as f64;
    let q = c * (bf - 1.0).powi(-(n as i32));
    Ok((bf - 2.0) * q / (1.0 + q))
}

/// Limit of `(b-1)^{n/2} sigma_n`: `sigma_0 sqrt((b-2)/(b-2-sigma_0^2))`.
pub fn sigma_limit(b: u32, sigma0_sq: f64) -> Result<f64> {
    let bf = b as f64;
    check_sigma0(b, sigma0_sq)?;
    Ok((sigma0_sq * (bf - 2.0) / (bf - 2.0 - sigma0_sq)).sqrt())
}

/// Closed-form variance trajectory `s_0, ..., s_n`. Unlike `u_n - 1` from
/// the moment recursion, every entry keeps full relative accuracy, which is
/// what the bound computations below need.
pub fn sigma_trajectory(b: u32, sigma0_sq: f64, n: u32) -> Result<Vec<f64>> {
    check_sigma0(b, sigma0_sq)?;
    (0..=n).map(|k| sigma_closed_form(b, sigma0_sq, k)).collect()
}

fn contraction_constant(b: u32, sigma0_sq: f64) -> Result<f64> {
    check_sigma0(b, sigma0_sq)?;
    let bf = b as f64;
    Ok(sigma0_sq / (bf - 2.0 - sigma0_sq))
}

fn check_sigma0(b: u32, sigma0_sq: f64) -> Result<()> {
    check_b(b)?;
    let bf = b as f64;
    if !(sigma0_sq > 0.0 && sigma0_sq < bf - 2.0) {
        return Err(Error::domain(format!(
            "sigma0^2 = {sigma0_sq} outside (0, b-2) = (0, {})",
            bf - 2.0
        )));
    }
    Ok(())
}

/// Second moment of the remainder term at step `n`:
/// `r_n^2 = (sigma_{n-1}^2 + (sigma_{n-1}/sigma_n - sqrt(b-1))^2) / b`.
pub fn rn_squared(b: u32, sigma_prev_sq: f64, sigma_sq: f64) -> f64 {
    assert!(sigma_prev_sq > 0.0 && sigma_sq > 0.0, "variances must be positive");
    let bf = b as f64;
    let ratio = (sigma_prev_sq / sigma_sq).sqrt();
    let gap = ratio - (bf - 1.0).sqrt();
    (sigma_prev_sq + gap * gap) / bf
}

/// Explicit upper bound on the L2 norm of the remainder sum at depth `n`:
/// `sum_{0<=k<n} b^{-k} (sum_{0<=j<=k} C(k,j) b^k (b-1)^j r_{n-j}^2)^{1/2}`,
/// with `r_m^2` computed from the supplied variance trajectory
/// (`sigma_sq[m]` = variance after `m` steps, length at least `n+1`).
pub fn t1_variance_bound(b: u32, sigma_sq: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("depth n must be at least 1".to_string()));
    }
    if sigma_sq.len() < n + 1 {
        return Err(Error::input(format!(
            "variance trajectory has {} entries, need at least {}",
            sigma_sq.len(),
            n + 1
        )));
    }
    let bf = b as f64;
    let r2: Vec<f64> = (1..=n)
        .map(|m| rn_squared(b, sigma_sq[m - 1], sigma_sq[m]))
        .collect();
    let mut total = 0.0;
    for k in 0..n {
        let mut inner = 0.0;
        let mut binom = 1.0f64; // C(k, j), updated multiplicatively
        for j in 0..=k {
            inner += binom * bf.powi(k as i32) * (bf - 1.0).powi(j as i32) * r2[n - j - 1];
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        total += bf.powi(-(k as i32)) * inner.sqrt();
    }
    Ok(total)
}

/// The Lindeberg factor `(((b-1)^{p/2} + 1)/b^{p-1})^n * sup_zp` for `p > 2`.
/// Tends to 0 in `n` for every `b >= 3`, `p > 2`.
pub fn lindeberg_bound(b: u32, p: f64, n: u32, sup_zp: f64) -> Result<f64> {
    check_b(b)?;
    if p <= 2.0 {
        return Err(Error::domain(format!("p must exceed 2, got {p}")));
    }
    if sup_zp < 0.0 {
        return Err(Error::input(format!("sup term must be nonnegative, got {sup_zp}")));
    }
    let bf = b as f64;
    let factor = ((bf - 1.0).powf(p / 2.0) + 1.0) / bf.powf(p - 1.0);
    Ok(factor.powi(n as i32) * sup_zp)
}

/// One step of the explicit third-moment inequality: an upper bound on
/// `E|Z'|^3` after one application of the map, given the weight's third
/// moment `m3_w < b^2`, the current bound `z3_w >= 0` on `E|Z|^3`, and the
/// standard-deviation ratio `r = sigma/sigma'`.
///
/// The constant-free chain is
/// `[r^3 z + T0 + 3 r T1 + 3 r^2 T2 + r^3 T3] / (b^2 - m3_w)` with
/// `T0 = (b-1)(4b-5)`,
/// `T1 = (b^2-1)^{2/3} z^{1/3} + 2(b-1)^{3/2} + (b-1)(2b-3)`,
/// `T2 = (b^2-1)^{1/3} z^{2/3} + 2(b-1)^{3/2} + (b-1)^2`,
/// `T3 = b^2-1`.
pub fn third_moment_rhs(b: u32, m3_w: f64, z3_w: f64, r: f64) -> Result<f64> {
    check_b(b)?;
    let bf = b as f64;
    let b2 = bf * bf;
    if !(1.0..b2).contains(&m3_w) {
        return Err(Error::domain(format!(
            "weight third moment m3 = {m3_w} outside [1, b^2) = [1, {b2})"
        )));
    }
    if z3_w < 0.0 {
        return Err(Error::input(format!("z3 must be nonnegative, got {z3_w}")));
    }
    if r <= 0.0 {
        return Err(Error::input(format!("ratio r must be positive, got {r}")));
    }
    let z13 = z3_w.cbrt();
    let z23 = z13 * z13;
    let t0 = (bf - 1.0) * (4.0 * bf - 5.0);
    let t1 = (b2 - 1.0).powf(2.0 / 3.0) * z13 + 2.0 * (bf - 1.0).powf(1.5) + (bf - 1.0) * (2.0 * bf - 3.0);
    let t2 = (b2 - 1.0).cbrt() * z23 + 2.0 * (bf - 1.0).powf(1.5) + (bf - 1.0) * (bf - 1.0);
    let t3 = b2 - 1.0;
    Ok((r.powi(3) * z3_w + t0 + 3.0 * r * t1 + 3.0 * r * r * t2 + r.powi(3) * t3) / (b2 - m3_w))
}

/// Iterate [`third_moment_rhs`] along a moment trajectory, starting from an
/// initial bound `z0 >= E|Z_0|^3`. Returns `z_0, ..., z_N` where
/// `N = traj.len() - 2` (each step consumes `v_n` and the ratio
/// `sigma_n/sigma_{n+1} = sqrt(b-1-sigma_n^2)`).
pub fn third_moment_bound_sequence(traj: &MomentTrajectory, z0: f64) -> Result<Vec<f64>> {
    if traj.len() < 2 {
        return Err(Error::input("trajectory too short".to_string()));
    }
    let bf = traj.b as f64;
    let mut z = Vec::with_capacity(traj.len() - 1);
    z.push(z0);
    for n in 0..traj.len() - 1 {
        let sigma_sq = traj.u[n] - 1.0;
        if sigma_sq <= 0.0 {
            return Err(Error::domain(format!(
                "trajectory variance vanished at step {n}; bound sequence undefined"
            )));
        }
        // sigma_n / sigma_{n+1} = sqrt(b - 1 - sigma_n^2), from the variance recursion
        let r = (bf - 1.0 - sigma_sq).sqrt();
        let next = third_moment_rhs(traj.b, traj.v[n], z[n], r)?;
        z.push(next);
    }
    Ok(z)
}

fn check_b(b: u32) -> Result<()> {
    if b < 3 {
        return Err(Error::domain(format!("base must be at least 3, got {b}")));
    }
    Ok(())
}
