//! Monte Carlo engine for the multiplicative cascade.
//!
//! Two samplers live here. [`sample_yn`] draws the depth-`n` martingale
//! value exactly, by walking the full `b`-ary tree with independent weights
//! per node. [`fixed_point_pool`] approximates the fixed point of the
//! smoothing transformation by population dynamics: a reservoir of `P`
//! values is pushed through `K` rounds of
//! `y' = (W(0) y(0) + ... + W(b-1) y(b-1)) / b`,
//! with weights from the source law (or a previous-generation pool) and
//! `y(j)` resampled with replacement from the current reservoir.
//!
//! Each round renormalizes the reservoir to unit empirical mean. Without
//! this the rounds compound the source's empirical mean error
//! geometrically (a factor `(1 + delta)^K` after `K` rounds, and worse for
//! later generations), which swamps the moment signal long before the
//! O(1/P) resampling bias matters. The renormalization is recorded in the
//! pool metadata as the largest pre-normalization drift seen.
//!
//! Paths ([`cascade_path`]) draw one weight per interior node and one
//! fixed-point value per leaf; node variates are keyed by the node's tree
//! index, so the same seed gives the same tree regardless of evaluation
//! order.

use serde::Serialize;

use crate::analysis::NeumaierSum;
use crate::error::{Error, Result};
use crate::laws::WeightLaw;
use crate::moments::DomainClass;
use crate::rng::Rng;
use crate::words::{checked_tree_width, node_id_depth_limit};

const INTERIOR_STREAM: u64 = 0x70617468_0001;
const LEAF_STREAM: u64 = 0x70617468_0002;

/// Metadata carried by every sample pool.
#[derive(Debug, Clone, Serialize)]
pub struct PoolMeta {
    pub b: u32,
    /// Which power of the cascade map this pool approximates.
    pub generation: u32,
    pub pool_size: usize,
    pub rounds: u32,
    /// Description of the weight source the pool was built from.
    pub source: String,
    /// Key of the stream that built the pool.
    pub stream_key: u64,
    /// Largest `|round mean - 1|` observed before renormalization.
    pub max_round_mean_drift: f64,
}

/// Empirical reservoir approximating a unit-mean law.
#[derive(Debug, Clone)]
pub struct SamplePool {
    values: Vec<f64>,
    meta: PoolMeta,
}

impl SamplePool {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &PoolMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Soft mean check: drift stayed within `5/sqrt(P)`. A violation marks
    /// a run worth inspecting, not an error.
    pub fn mean_within_soft_bound(&self) -> bool {
        self.meta.max_round_mean_drift <= 5.0 / (self.meta.pool_size as f64).sqrt()
    }

    /// Rebuild a pool from stored values and metadata (cache reload path).
    pub fn from_parts(values: Vec<f64>, meta: PoolMeta) -> Result<SamplePool> {
        if values.is_empty() {
            return Err(Error::input("pool must not be empty".to_string()));
        }
        if values.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::input(
                "pool values must be finite and nonnegative".to_string(),
            ));
        }
        if values.len() != meta.pool_size {
            return Err(Error::input(format!(
                "pool has {} values but metadata says {}",
                values.len(),
                meta.pool_size
            )));
        }
        Ok(SamplePool { values, meta })
    }
}

/// Where cascade weights come from: a parametric law or an empirical pool.
#[derive(Debug, Clone, Copy)]
pub enum WeightSource<'a> {
    Law(&'a WeightLaw),
    Pool(&'a SamplePool),
}

impl<'a> WeightSource<'a> {
    pub fn draw(&self, rng: &mut Rng) -> f64 {
        match self {
            WeightSource::Law(law) => law.draw(rng),
            WeightSource::Pool(pool) => pool.values[rng.index(pool.values.len())],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            WeightSource::Law(law) => law.describe(),
            WeightSource::Pool(pool) => format!(
                "pool(generation={}, source={})",
                pool.meta.generation, pool.meta.source
            ),
        }
    }

    /// Generation of the law this source represents (a raw law is
    /// generation 0).
    pub fn generation(&self) -> u32 {
        match self {
            WeightSource::Law(_) => 0,
            WeightSource::Pool(pool) => pool.meta.generation,
        }
    }

    fn check_usable(&self) -> Result<()> {
        if let WeightSource::Pool(pool) = self {
            if pool.is_empty() {
                return Err(Error::input("weight source pool is empty".to_string()));
            }
        }
        Ok(())
    }
}

/// One exact draw of the depth-`n` martingale value
/// `Y_n = b^{-n} sum_{|w|=n} prod_k W(w|_k)`,
/// by tree recursion with an independent weight at every node.
pub fn sample_yn(law: &WeightLaw, b: u32, n: u32, rng: &mut Rng) -> Result<f64> {
    if b < 2 {
        return Err(Error::input(format!("base must be at least 2, got {b}")));
    }
    checked_tree_width(b, n)?;
    fn walk(law: &WeightLaw, b: u32, depth_left: u32, rng: &mut Rng) -> f64 {
        if depth_left == 0 {
            return 1.0;
        }
        let mut acc = 0.0;
        for _ in 0..b {
            let w = law.draw(rng);
            acc += w * walk(law, b, depth_left - 1, rng);
        }
        acc / b as f64
    }
    Ok(walk(law, b, n, rng))
}

/// Population-dynamics approximation of the smoothing-transformation fixed
/// point: start from the constant pool `{1}^P` and apply `rounds` smoothing
/// rounds. With a law as weight source the result approximates the first
/// generation; with a generation-`k` pool it approximates generation `k+1`.
///
/// Requires `pool_size >= 1000` and `rounds >= 1`.
pub fn fixed_point_pool(
    source: WeightSource<'_>,
    b: u32,
    pool_size: usize,
    rounds: u32,
    rng: &mut Rng,
) -> Result<SamplePool> {
    if b < 2 {
        return Err(Error::input(format!("base must be at least 2, got {b}")));
    }
    if pool_size < 1000 {
        return Err(Error::input(format!(
            "pool size must be at least 1000, got {pool_size}"
        )));
    }
    if rounds == 0 {
        return Err(Error::input("at least one smoothing round is required".to_string()));
    }
    source.check_usable()?;

    let mut pool = vec![1.0f64; pool_size];
    let mut next = vec![0.0f64; pool_size];
    let mut max_drift = 0.0f64;
    for _ in 0..rounds {
        for slot in next.iter_mut() {
            let mut acc = 0.0;
            for _ in 0..b {
                let w = source.draw(rng);
                let y = pool[rng.index(pool_size)];
                acc += w * y;
            }
            *slot = acc / b as f64;
        }
        std::mem::swap(&mut pool, &mut next);
        // renormalize to unit empirical mean; see module docs
        let mut sum = NeumaierSum::new();
        for &x in &pool {
            sum.add(x);
        }
        let mean = sum.value() / pool_size as f64;
        max_drift = max_drift.max((mean - 1.0).abs());
        if mean != 1.0 {
            for x in pool.iter_mut() {
                *x /= mean;
            }
        }
    }

    let meta = PoolMeta {
        b,
        generation: source.generation() + 1,
        pool_size,
        rounds,
        source: source.describe(),
        stream_key: rng.key(),
        max_round_mean_drift: max_drift,
    };
    Ok(SamplePool { values: pool, meta })
}

/// Pools for generations `1..=n` of the cascade map, each built by
/// population dynamics on top of the previous one. Refuses laws outside
/// the iterable domain, reporting the violated moment condition.
pub fn iterate_t_pools(
    law: &WeightLaw,
    b: u32,
    n: u32,
    pool_size: usize,
    rounds: u32,
    rng: &mut Rng,
) -> Result<Vec<SamplePool>> {
    if n == 0 {
        return Err(Error::input("need at least one generation".to_string()));
    }
    let class = law.validate_for_cascade(b)?;
    if class == DomainClass::Outside {
        let m2 = law.moment(2)?;
        let bf = b as f64;
        let reason = if m2 <= 1.0 {
            format!("m2 = {m2} is not strictly above 1 (law is degenerate at the fixed point)")
        } else {
            format!(
                "m2 = {m2} is not below b-1 = {}; the second-moment contraction fails",
                bf - 1.0
            )
        };
        return Err(Error::domain(format!(
            "law {} cannot be iterated for b = {b}: classification {class}; {reason}",
            law.describe()
        )));
    }
    let mut pools = Vec::with_capacity(n as usize);
    for gen in 1..=n {
        let mut stream = rng.derive(gen as u64);
        let pool = match pools.last() {
            None => fixed_point_pool(WeightSource::Law(law), b, pool_size, rounds, &mut stream)?,
            Some(prev) => {
                fixed_point_pool(WeightSource::Pool(prev), b, pool_size, rounds, &mut stream)?
            }
        };
        pools.push(pool);
    }
    Ok(pools)
}

/// Standardize pool values: `(x - 1) / sigma`.
pub fn sample_z(pool: &SamplePool, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    Ok(pool.values.iter().map(|&x| (x - 1.0) / sigma).collect())
}

/// Whether a path holds raw cascade increments or standardized ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    Raw,
    Normalized { sigma: f64 },
}

/// Increments of a cascade function over all depth-`depth` b-adic
/// intervals, in lexicographic word order.
#[derive(Debug, Clone)]
pub struct IncrementPath {
    pub b: u32,
    pub depth: u32,
    pub kind: PathKind,
    pub increments: Vec<f64>,
}

impl IncrementPath {
    /// Compensated total of the increments (the function's value at 1).
    pub fn total(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for &x in &self.increments {
            s.add(x);
        }
        s.value()
    }
}

/// One sampled cascade path restricted to the depth-`depth` grid: the
/// increment at word `w` is `b^{-|w|} Y(w) prod_k W(w|_k)` with interior
/// weights from `interior` and leaf values from `leaves`.
///
/// Sampling the generation-`n` path means `interior` approximates
/// generation `n-1` and `leaves` generation `n`. Interior and leaf draws
/// use separate streams keyed by node index, so path topology does not
/// correlate with pool order.
pub fn cascade_path(
    interior: WeightSource<'_>,
    leaves: &SamplePool,
    b: u32,
    depth: u32,
    rng: &mut Rng,
) -> Result<IncrementPath> {
    if b < 2 {
        return Err(Error::input(format!("base must be at least 2, got {b}")));
    }
    let leaf_count = checked_tree_width(b, depth)?;
    if depth > node_id_depth_limit(b) {
        return Err(Error::resource(format!(
            "depth {depth} exceeds the node-indexing limit for base {b}"
        )));
    }
    interior.check_usable()?;
    if leaves.is_empty() {
        return Err(Error::input("leaf source pool is empty".to_string()));
    }

    let interior_base = rng.derive(INTERIOR_STREAM);
    let leaf_base = rng.derive(LEAF_STREAM);
    let scale = (b as f64).powi(-(depth as i32));
    let mut increments = Vec::with_capacity(leaf_count);

    #[allow(clippy::too_many_arguments)]
    fn walk(
        id: u64,
        level: u32,
        prod: f64,
        b: u32,
        depth: u32,
        scale: f64,
        interior: &WeightSource<'_>,
        leaves: &SamplePool,
        interior_base: &Rng,
        leaf_base: &Rng,
        out: &mut Vec<f64>,
    ) {
        if level == depth {
            let mut stream = leaf_base.derive(id);
            let y = leaves.values[stream.index(leaves.values.len())];
            out.push(scale * prod * y);
            return;
        }
        for d in 0..b {
            let child = id * b as u64 + d as u64 + 1;
            let mut stream = interior_base.derive(child);
            let w = interior.draw(&mut stream);
            walk(
                child,
                level + 1,
                prod * w,
                b,
                depth,
                scale,
                interior,
                leaves,
                interior_base,
                leaf_base,
                out,
            );
        }
    }

    walk(
        0,
        0,
        1.0,
        b,
        depth,
        scale,
        &interior,
        leaves,
        &interior_base,
        &leaf_base,
        &mut increments,
    );
    Ok(IncrementPath {
        b,
        depth,
        kind: PathKind::Raw,
        increments,
    })
}

/// Standardized increments: `(raw - b^{-depth}) / sigma`.
pub fn normalize_path(path: &IncrementPath, sigma: f64) -> Result<IncrementPath> {
    if path.kind != PathKind::Raw {
        return Err(Error::input(
            "path is already normalized; expected raw increments".to_string(),
        ));
    }
    if !(sigma > 0.0) {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    let center = (path.b as f64).powi(-(path.depth as i32));
    Ok(IncrementPath {
        b: path.b,
        depth: path.depth,
        kind: PathKind::Normalized { sigma },
        increments: path
            .increments
            .iter()
            .map(|&x| (x - center) / sigma)
            .collect(),
    })
}
