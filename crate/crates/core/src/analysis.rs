//! Statistical verification layer: estimators and diagnostics.
//!
//! Everything here is a deterministic fold over input arrays. Sums use
//! Neumaier compensation so results stay reproducible to ~1e-12 under any
//! association, per the determinism contract of the toolkit.

use crate::error::{Error, Result};
use crate::rng::normal_cdf;
use crate::words::checked_tree_width;

/// Kahan-Babuska compensated accumulator.
#[derive(Debug, Clone, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        NeumaierSum { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn compensated_mean(xs: &[f64]) -> f64 {
    let mut s = NeumaierSum::new();
    for &x in xs {
        s.add(x);
    }
    s.value() / xs.len() as f64
}

/// Sample mean of `x^p` and its standard error.
pub fn empirical_moments(samples: &[f64], p: u32) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::input(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let pows: Vec<f64> = samples.iter().map(|&x| x.powi(p as i32)).collect();
    let mean = compensated_mean(&pows);
    let mut var = NeumaierSum::new();
    for &y in &pows {
        var.add((y - mean) * (y - mean));
    }
    let n = pows.len() as f64;
    let se = (var.value() / (n - 1.0) / n).sqrt();
    Ok((mean, se))
}

/// Two-sided Kolmogorov-Smirnov statistic of the sample against the
/// standard normal: `sup_x |F_hat(x) - Phi(x)|`. Needs at least 100
/// samples. At level 1% the critical value is about `1.63/sqrt(n)`.
pub fn ks_normal(samples: &[f64]) -> Result<f64> {
    if samples.len() < 100 {
        return Err(Error::input(format!(
            "need at least 100 samples for the KS statistic, got {}",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS input"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let phi = normal_cdf(x);
        let upper = (i as f64 + 1.0) / n - phi;
        let lower = phi - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    Ok(d)
}

/// Entrywise sample covariance of replicated vectors, with entrywise
/// standard errors. `replicas` is indexed `[replica][coordinate]`.
#[derive(Debug, Clone)]
pub struct CovEstimate {
    pub dim: usize,
    /// Row-major `dim x dim` covariance estimates.
    pub cov: Vec<f64>,
    /// Row-major standard errors of each entry.
    pub se: Vec<f64>,
}

impl CovEstimate {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim + j]
    }

    pub fn se_at(&self, i: usize, j: usize) -> f64 {
        self.se[i * self.dim + j]
    }
}

const MAX_COV_DIM: usize = 1024;

pub fn empirical_cov(replicas: &[Vec<f64>]) -> Result<CovEstimate> {
    let r = replicas.len();
    if r < 2 {
        return Err(Error::input(format!("need at least 2 replicas, got {r}")));
    }
    let dim = replicas[0].len();
    if dim == 0 {
        return Err(Error::input("replicas must be nonempty vectors".to_string()));
    }
    if dim > MAX_COV_DIM {
        return Err(Error::resource(format!(
            "covariance dimension {dim} exceeds the cap {MAX_COV_DIM}"
        )));
    }
    if let Some(bad) = replicas.iter().find(|v| v.len() != dim) {
        return Err(Error::input(format!(
            "replica length mismatch: expected {dim}, got {}",
            bad.len()
        )));
    }

    let mut means = vec![0.0f64; dim];
    for (k, m) in means.iter_mut().enumerate() {
        let mut s = NeumaierSum::new();
        for rep in replicas {
            s.add(rep[k]);
        }
        *m = s.value() / r as f64;
    }

    let rf = r as f64;
    let mut cov = vec![0.0f64; dim * dim];
    let mut se = vec![0.0f64; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let mut sum = NeumaierSum::new();
            let mut sumsq = NeumaierSum::new();
            for rep in replicas {
                let prod = (rep[i] - means[i]) * (rep[j] - means[j]);
                sum.add(prod);
                sumsq.add(prod * prod);
            }
            let mean_prod = sum.value() / rf;
            let c = sum.value() / (rf - 1.0);
            let var_prod = (sumsq.value() / rf - mean_prod * mean_prod).max(0.0);
            let e = (var_prod / rf).sqrt();
            cov[i * dim + j] = c;
            cov[j * dim + i] = c;
            se[i * dim + j] = e;
            se[j * dim + i] = e;
        }
    }
    Ok(CovEstimate { dim, cov, se })
}

/// One row of the modulus-of-continuity check at scale `delta = b^{-m}`.
#[derive(Debug, Clone)]
pub struct ModulusRow {
    pub m: u32,
    pub delta: f64,
    /// Grid-restricted modulus of continuity at scale `delta`.
    pub omega: f64,
    /// `2(b-1) sum_{i=m..depth} max_w |increment at level i|`.
    pub bound: f64,
    pub holds: bool,
}

/// Check the chaining inequality `omega(f, b^{-m}) <= 2(b-1) sum_{i>=m}
/// max |Delta(f, I_w)|` on the depth-`depth` grid, for `m = 1..=depth`.
///
/// Both sides are grid-truncated: the modulus only ranges over grid pairs
/// (which can only shrink the left side), and the level sum stops at the
/// grid depth, which is exactly the set of levels a pair of grid points
/// decomposes into. Increments are taken in absolute value.
pub fn modulus_bound_check(grid: &[f64], b: u32, depth: u32) -> Result<Vec<ModulusRow>> {
    let cells = checked_tree_width(b, depth)?;
    if grid.len() != cells + 1 {
        return Err(Error::input(format!(
            "grid has {} points, expected b^depth + 1 = {}",
            grid.len(),
            cells + 1
        )));
    }
    // per-level maxima of |increment|
    let mut level_max = vec![0.0f64; depth as usize + 1];
    for i in 1..=depth {
        let step = (b as usize).pow(depth - i);
        let mut mx = 0.0f64;
        let mut k = 0;
        while k + step < grid.len() {
            mx = mx.max((grid[k + step] - grid[k]).abs());
            k += step;
        }
        level_max[i as usize] = mx;
    }

    let mut rows = Vec::with_capacity(depth as usize);
    for m in 1..=depth {
        let window = (b as usize).pow(depth - m);
        let omega = sliding_range_max(grid, window);
        let mut bound_sum = NeumaierSum::new();
        for i in m..=depth {
            bound_sum.add(level_max[i as usize]);
        }
        let bound = 2.0 * (b as f64 - 1.0) * bound_sum.value();
        rows.push(ModulusRow {
            m,
            delta: (b as f64).powi(-(m as i32)),
            omega,
            bound,
            holds: omega <= bound,
        });
    }
    Ok(rows)
}

/// Max over windows of `window+1` consecutive grid points of (max - min),
/// i.e. the grid modulus of continuity at index distance `window`.
fn sliding_range_max(grid: &[f64], window: usize) -> f64 {
    let mut max_deque: std::collections::VecDeque<usize> = Default::default();
    let mut min_deque: std::collections::VecDeque<usize> = Default::default();
    let mut best = 0.0f64;
    for i in 0..grid.len() {
        while let Some(&back) = max_deque.back() {
            if grid[back] <= grid[i] {
                max_deque.pop_back();
            } else {
                break;
            }
        }
        max_deque.push_back(i);
        while let Some(&back) = min_deque.back() {
            if grid[back] >= grid[i] {
                min_deque.pop_back();
            } else {
                break;
            }
        }
        min_deque.push_back(i);
        let lo = i.saturating_sub(window);
        while *max_deque.front().unwrap() < lo {
            max_deque.pop_front();
        }
        while *min_deque.front().unwrap() < lo {
            min_deque.pop_front();
        }
        if i >= 1 {
            best = best.max(grid[*max_deque.front().unwrap()] - grid[*min_deque.front().unwrap()]);
        }
    }
    best
}

/// Bin layout for the coarse spectrum: centers with a common half-width.
#[derive(Debug, Clone)]
pub struct SpectrumBins {
    pub centers: Vec<f64>,
    pub half_width: f64,
}

impl SpectrumBins {
    /// Default layout: centers -1.4..=1.4 step 0.1, half-width 0.1.
    pub fn default_bins() -> SpectrumBins {
        SpectrumBins {
            centers: (-14..=14).map(|i| i as f64 / 10.0).collect(),
            half_width: 0.1,
        }
    }

    pub fn with(centers: Vec<f64>, half_width: f64) -> Result<SpectrumBins> {
        if centers.is_empty() || !(half_width > 0.0) {
            return Err(Error::input(
                "bins need centers and a positive half-width".to_string(),
            ));
        }
        Ok(SpectrumBins { centers, half_width })
    }
}

/// Coarse multifractal spectrum estimate at depth `n`.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub b: u32,
    pub depth: u32,
    pub centers: Vec<f64>,
    pub half_width: f64,
    /// How many depth-`n` words fall in each bin.
    pub counts: Vec<u64>,
    /// `log_b(count)/n` per bin; `None` where the count is zero.
    pub dim_est: Vec<Option<f64>>,
    /// `1 - alpha^2 / (2 ln b)` per bin center.
    pub dim_theory: Vec<f64>,
}

/// Box-counting estimate of the spectrum from per-word values `S(w)`,
/// `w` ranging over all of depth `n` in any order: bin on `S(w)/n`.
pub fn coarse_spectrum(
    values: &[f64],
    b: u32,
    n: u32,
    bins: &SpectrumBins,
) -> Result<SpectrumEstimate> {
    let expected = checked_tree_width(b, n)?;
    if values.len() != expected {
        return Err(Error::input(format!(
            "expected one value per depth-{n} word ({expected}), got {}",
            values.len()
        )));
    }
    if n == 0 {
        return Err(Error::input("spectrum needs depth n >= 1".to_string()));
    }
    let ln_b = (b as f64).ln();
    let mut counts = vec![0u64; bins.centers.len()];
    for &s in values {
        let a = s / n as f64;
        for (i, &c) in bins.centers.iter().enumerate() {
            if (a - c).abs() <= bins.half_width {
                counts[i] += 1;
            }
        }
    }
    let dim_est = counts
        .iter()
        .map(|&c| {
            if c > 0 {
                Some((c as f64).ln() / ln_b / n as f64)
            } else {
                None
            }
        })
        .collect();
    let dim_theory = bins
        .centers
        .iter()
        .map(|&a| 1.0 - a * a / (2.0 * ln_b))
        .collect();
    Ok(SpectrumEstimate {
        b,
        depth: n,
        centers: bins.centers.clone(),
        half_width: bins.half_width,
        counts,
        dim_est,
        dim_theory,
    })
}

/// Rescale depth-`n` path increments into spectrum inputs:
/// `Delta * b^n / sqrt(b-1)` plays the role of `S(w)`.
pub fn spectrum_values_from_increments(increments: &[f64], b: u32, n: u32) -> Vec<f64> {
    let scale = (b as f64).powi(n as i32) / (b as f64 - 1.0).sqrt();
    increments.iter().map(|&dx| dx * scale).collect()
}

/// Partition function `beta_hat(q) = -(1/n) log_b sum_w exp(q S(w))`,
/// evaluated with a max-shifted log-sum-exp. At `q = 0` the sum is exactly
/// `b^n`, so the value is the constant -1 and is returned as such.
pub fn partition_beta(values: &[f64], b: u32, n: u32, q_grid: &[f64]) -> Result<Vec<f64>> {
    let expected = checked_tree_width(b, n)?;
    if values.len() != expected {
        return Err(Error::input(format!(
            "expected one value per depth-{n} word ({expected}), got {}",
            values.len()
        )));
    }
    if n == 0 {
        return Err(Error::input("partition function needs depth n >= 1".to_string()));
    }
    let ln_b = (b as f64).ln();
    let mut out = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        if q == 0.0 {
            out.push(-1.0);
            continue;
        }
        let m = values
            .iter()
            .map(|&s| q * s)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = NeumaierSum::new();
        for &s in values {
            sum.add((q * s - m).exp());
        }
        let lse = m + sum.value().ln();
        out.push(-lse / (n as f64 * ln_b));
    }
    Ok(out)
}

/// Grid Legendre transform: `min_q (-alpha q / ln b - beta_hat(q))`.
pub fn legendre_upper(q_grid: &[f64], beta_hat: &[f64], b: u32, alpha: f64) -> f64 {
    assert_eq!(q_grid.len(), beta_hat.len(), "grid length mismatch");
    let ln_b = (b as f64).ln();
    q_grid
        .iter()
        .zip(beta_hat.iter())
        .map(|(&q, &bh)| -alpha * q / ln_b - bh)
        .fold(f64::INFINITY, f64::min)
}

/// One scale of the Zygmund second-difference diagnostic.
#[derive(Debug, Clone)]
pub struct ZygmundRow {
    pub n: u32,
    pub h: f64,
    /// `|X(t+h) + X(t-h) - 2X(t)| / h` at `t = 1/b`, `h = b^{-n}`.
    pub stat: f64,
    /// The statistic under an iterated-logarithm scaling
    /// `sqrt(b-1) sqrt(2 n ln ln n)`; trend-inspection only, `None` for
    /// `n < 3` where the scaling is undefined.
    pub lil_scaled: Option<f64>,
}

/// Second-difference statistic at `t = 1/b` for each requested scale.
/// The grid must resolve every scale (`n <= depth`).
pub fn zygmund_stat(grid: &[f64], b: u32, depth: u32, n_list: &[u32]) -> Result<Vec<ZygmundRow>> {
    let cells = checked_tree_width(b, depth)?;
    if grid.len() != cells + 1 {
        return Err(Error::input(format!(
            "grid has {} points, expected b^depth + 1 = {}",
            grid.len(),
            cells + 1
        )));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 || n > depth {
            return Err(Error::input(format!(
                "scale n = {n} not resolved by a depth-{depth} grid"
            )));
        }
        let it = (b as usize).pow(depth - 1);
        let ih = (b as usize).pow(depth - n);
        let h = (b as f64).powi(-(n as i32));
        let stat = (grid[it + ih] + grid[it - ih] - 2.0 * grid[it]).abs() / h;
        let lil_scaled = if n >= 3 {
            let nn = n as f64;
            Some(stat / ((b as f64 - 1.0).sqrt() * (2.0 * nn * nn.ln().ln()).sqrt()))
        } else {
            None
        };
        rows.push(ZygmundRow { n, h, stat, lil_scaled });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_handles_cancellation() {
        let mut s = NeumaierSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn empirical_moment_examples() {
        let (m, se) = empirical_moments(&[3.0, 3.0, 3.0], 2).unwrap();
        assert_eq!(m, 9.0);
        assert_eq!(se, 0.0);
        let (m, se) = empirical_moments(&[0.0, 2.0], 1).unwrap();
        assert_eq!((m, se), (1.0, 1.0));
        assert!(empirical_moments(&[1.0], 1).is_err());
    }

    #[test]
    fn ks_degenerate_and_validation() {
        // all-zero sample: empirical mass at 0 vs Phi(0) = 1/2
        let zeros = vec![0.0; 200];
        assert!((ks_normal(&zeros).unwrap() - 0.5).abs() < 1e-12);
        assert!(ks_normal(&vec![0.0; 99]).is_err());
    }

    #[test]
    fn ks_detects_own_generator() {
        let mut rng = crate::rng::Rng::from_seed(2024);
        let samples: Vec<f64> = (0..10_000).map(|_| rng.normal()).collect();
        let d = ks_normal(&samples).unwrap();
        assert!(d < 1.63 / (samples.len() as f64).sqrt(), "d = {d}");
    }

    #[test]
    fn cov_identical_paths_vanish() {
        let rep = vec![vec![1.0, -2.0, 0.5]; 50];
        let est = empirical_cov(&rep).unwrap();
        assert!(est.cov.iter().all(|&c| c.abs() < 1e-15));
        assert!(est.se.iter().all(|&e| e.abs() < 1e-15));
        assert!(empirical_cov(&rep[..1]).is_err());
        let ragged = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(empirical_cov(&ragged).is_err());
    }

    #[test]
    fn cov_recovers_known_structure() {
        // x ~ N(0,1), y = x + independent N(0,1): cov = [[1,1],[1,2]]
        let mut rng = crate::rng::Rng::from_seed(55);
        let reps: Vec<Vec<f64>> = (0..40_000)
            .map(|_| {
                let x = rng.normal();
                let y = x + rng.normal();
                vec![x, y]
            })
            .collect();
        let est = empirical_cov(&reps).unwrap();
        for (idx, want) in [(0usize, 1.0), (1, 1.0), (3, 2.0)] {
            let got = est.cov[idx];
            let se = est.se[idx];
            assert!(
                (got - want).abs() <= 4.0 * se,
                "entry {idx}: {got} vs {want} (se {se})"
            );
        }
    }

    #[test]
    fn modulus_zero_and_identity() {
        // f = 0
        let rows = modulus_bound_check(&vec![0.0; 28], 3, 3).unwrap();
        assert!(rows.iter().all(|r| r.omega == 0.0 && r.bound == 0.0 && r.holds));

        // f = Id on the grid: omega(b^{-m}) = b^{-m}, level max = b^{-i},
        // bound = 2(b-1) * geometric tail
        let depth = 5u32;
        let cells = 3usize.pow(depth);
        let grid: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
        let rows = modulus_bound_check(&grid, 3, depth).unwrap();
        for r in &rows {
            assert!((r.omega - r.delta).abs() < 1e-14);
            let tail: f64 = (r.m..=depth).map(|i| 3f64.powi(-(i as i32))).sum();
            assert!((r.bound - 4.0 * tail).abs() < 1e-14);
            assert!(r.holds);
        }
        assert!(modulus_bound_check(&grid[..10], 3, depth).is_err());
    }

    #[test]
    fn spectrum_validation_and_counts() {
        let bins = SpectrumBins::default_bins();
        assert_eq!(bins.centers.len(), 29);
        assert!(coarse_spectrum(&[0.0; 7], 2, 3, &bins).is_err());
        // all walks at 0: only bins with |center| <= 0.1 populated
        let est = coarse_spectrum(&vec![0.0; 8], 2, 3, &bins).unwrap();
        for (i, &c) in est.centers.iter().enumerate() {
            if c.abs() <= 0.1 + 1e-12 {
                assert_eq!(est.counts[i], 8);
                assert!((est.dim_est[i].unwrap() - 1.0).abs() < 1e-12);
            } else {
                assert_eq!(est.counts[i], 0);
                assert!(est.dim_est[i].is_none());
            }
        }
        // theory curve at 0 is 1
        let mid = est.centers.iter().position(|&c| c == 0.0).unwrap();
        assert_eq!(est.dim_theory[mid], 1.0);
    }

    #[test]
    fn partition_beta_exact_at_zero_and_concave() {
        let mut rng = crate::rng::Rng::from_seed(77);
        let n = 10u32;
        let values: Vec<f64> = (0..1 << n).map(|_| rng.normal() * (n as f64).sqrt()).collect();
        let qs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        let beta = partition_beta(&values, 2, n, &qs).unwrap();
        let zero_idx = qs.iter().position(|&q| q == 0.0).unwrap();
        assert_eq!(beta[zero_idx], -1.0);
        // the log-sum-exp route agrees with the identity at q = 0
        let direct = -((1u64 << n) as f64).ln() / (n as f64 * 2f64.ln());
        assert!((direct + 1.0).abs() < 1e-12);
        // concavity of beta_hat (second differences <= slack)
        for w in beta.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9);
        }
    }

    #[test]
    fn legendre_quadratic_oracle() {
        // with the analytic beta(q) = -1 - q^2/(2 ln b), the grid infimum
        // is 1 - alpha^2/(2 ln b), attained near q = alpha
        let b = 2u32;
        let ln_b = 2f64.ln();
        let qs: Vec<f64> = (-300..=300).map(|i| i as f64 * 0.01).collect();
        let beta: Vec<f64> = qs.iter().map(|&q| -1.0 - q * q / (2.0 * ln_b)).collect();
        for &alpha in &[0.0, 0.3, -0.7, 1.0] {
            let got = legendre_upper(&qs, &beta, b, alpha);
            let want = 1.0 - alpha * alpha / (2.0 * ln_b);
            assert!((got - want).abs() < 1e-4, "alpha={alpha}: {got} vs {want}");
            // stationarity: the minimizing q is near alpha
            let (qmin, _) = qs
                .iter()
                .zip(beta.iter())
                .map(|(&q, &bh)| (q, -alpha * q / ln_b - bh))
                .fold((f64::NAN, f64::INFINITY), |acc, cur| {
                    if cur.1 < acc.1 {
                        cur
                    } else {
                        acc
                    }
                });
            assert!((qmin - alpha).abs() < 0.011, "alpha={alpha}: qmin={qmin}");
        }
        assert_eq!(legendre_upper(&qs, &beta, b, 0.0), 1.0);
    }

    #[test]
    fn zygmund_smooth_cases() {
        let b = 3u32;
        let depth = 6u32;
        let cells = 3usize.pow(depth);
        // X = Id: second differences vanish
        let id: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
        let rows = zygmund_stat(&id, b, depth, &[1, 2, 3, 4]).unwrap();
        assert!(rows.iter().all(|r| r.stat < 1e-12));
        // X = t^2: statistic is exactly 2h
        let sq: Vec<f64> = (0..=cells)
            .map(|k| {
                let t = k as f64 / cells as f64;
                t * t
            })
            .collect();
        let rows = zygmund_stat(&sq, b, depth, &[1, 2, 3]).unwrap();
        for r in &rows {
            assert!((r.stat - 2.0 * r.h).abs() < 1e-9, "n={} stat={}", r.n, r.stat);
            if r.n >= 3 {
                assert!(r.lil_scaled.is_some());
            } else {
                assert!(r.lil_scaled.is_none());
            }
        }
        // grid too coarse for the scale
        assert!(zygmund_stat(&sq, b, depth, &[7]).is_err());
    }
}
