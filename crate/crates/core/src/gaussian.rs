//! Generators for the limit Gaussian process and the additive cascade.
//!
//! The limit of the standardized cascade paths is the continuous Gaussian
//! process whose depth-`j` increment vector has covariance [`exact_cov`].
//! Two generators produce it:
//!
//! * [`marginal_increments`] draws the depth-`j` marginal exactly, as
//!   `b^{-j} (zeta~(w) + sqrt(b-1) S(w))` with fresh normals `zeta~` per
//!   leaf and the branching walk `S` over a shared [`XiField`]. Cheap, no
//!   truncation error, but not additive across depths.
//! * [`consistent_measure`] builds the finitely additive random measure
//!   from the same field by truncating the descendant series at depth `L`:
//!   refinements of the same field are exactly additive, at the price of a
//!   variance deficit `b^{-(L-j)}` in the leaf term, which is reported in
//!   the path metadata rather than silently rescaled away.
//!
//! [`generalized_measure`] is the coefficient-scheme generalization; the
//! canonical scheme `alpha(w) = b^{-|w|}`, `beta = sqrt(b-1)` reproduces
//! [`consistent_measure`] bit-exactly (both run the same evaluation).

use crate::analysis::NeumaierSum;
use crate::error::{Error, Result};
use crate::rng::{normal_quantile, u64_to_unit, value_at, Rng};
use crate::words::{check_base, checked_tree_width, node_id_depth_limit, Word};

/// Tree-indexed field of independent standard normals: `xi(w)` is a pure
/// function of `(seed, w)`, so refining depth never reshuffles values
/// already drawn.
#[derive(Debug, Clone)]
pub struct XiField {
    b: u32,
    max_depth: u32,
    key: u64,
}

impl XiField {
    pub fn new(b: u32, max_depth: u32, seed: u64) -> Result<XiField> {
        check_base(b)?;
        let limit = node_id_depth_limit(b);
        if max_depth > limit {
            return Err(Error::resource(format!(
                "max depth {max_depth} exceeds the node-indexing limit {limit} for base {b}"
            )));
        }
        Ok(XiField {
            b,
            max_depth,
            key: Rng::from_seed(seed).derive(0x7869_6669_656c_64).key(),
        })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// The normal attached to a nonempty word of depth at most `max_depth`.
    pub fn xi(&self, w: &Word) -> f64 {
        assert_eq!(w.base(), self.b, "word base does not match the field");
        assert!(
            !w.is_empty() && w.len() as u32 <= self.max_depth,
            "word depth {} outside 1..={}",
            w.len(),
            self.max_depth
        );
        self.xi_by_id(w.node_id())
    }

    pub(crate) fn xi_by_id(&self, id: u64) -> f64 {
        debug_assert!(id >= 1, "the empty word carries no field value");
        normal_quantile(u64_to_unit(value_at(self.key, id)))
    }

    /// Branching random walk `S(w) = sum_k xi(w|_k)`.
    pub fn branching_walk(&self, w: &Word) -> f64 {
        assert_eq!(w.base(), self.b, "word base does not match the field");
        assert!(w.len() as u32 <= self.max_depth);
        let mut id = 0u64;
        let mut s = 0.0;
        for &d in w.digits() {
            id = id * self.b as u64 + d as u64 + 1;
            s += self.xi_by_id(id);
        }
        s
    }

    /// `S(w)` for every word at depth `n`, in lexicographic order.
    pub fn walk_at_depth(&self, n: u32) -> Result<Vec<f64>> {
        if n > self.max_depth {
            return Err(Error::input(format!(
                "depth {n} exceeds the field's max depth {}",
                self.max_depth
            )));
        }
        let count = checked_tree_width(self.b, n)?;
        let mut out = Vec::with_capacity(count);
        if n == 0 {
            out.push(0.0);
            return Ok(out);
        }
        fn walk(field: &XiField, id: u64, level: u32, depth: u32, s: f64, out: &mut Vec<f64>) {
            if level == depth {
                out.push(s);
                return;
            }
            for d in 0..field.b as u64 {
                let child = id * field.b as u64 + d + 1;
                walk(field, child, level + 1, depth, s + field.xi_by_id(child), out);
            }
        }
        walk(self, 0, 0, n, 0.0, &mut out);
        Ok(out)
    }
}

/// Covariance of the limit increment vector at depth `j`:
/// `b^{-2j}(1 + (b-1) j)` on the diagonal, `b^{-2j}(b-1)|w /\ w'|` off it.
pub fn exact_cov(b: u32, j: u32, w: &Word, w2: &Word) -> Result<f64> {
    if w.len() as u32 != j || w2.len() as u32 != j {
        return Err(Error::input(format!(
            "both words must have length {j}, got {} and {}",
            w.len(),
            w2.len()
        )));
    }
    let scale = (b as f64).powi(-2 * j as i32);
    if w == w2 {
        return Ok(scale * (1.0 + (b as f64 - 1.0) * j as f64));
    }
    let meet = w.meet(w2)?;
    Ok(scale * (b as f64 - 1.0) * meet.len() as f64)
}

/// How a Gaussian path was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathMode {
    /// Exact depth-`j` marginal; not additive across depths.
    Marginal,
    /// Truncated additive measure; exactly additive across depths up to
    /// `level`, with the stated variance deficit in the leaf term.
    Consistent { level: u32, zeta_deficit: f64 },
    /// Output of a general coefficient scheme truncated at `level`.
    Scheme { level: u32 },
}

/// Increments of a Gaussian path over the depth-`depth` b-adic intervals,
/// in lexicographic word order.
#[derive(Debug, Clone)]
pub struct GaussianPath {
    pub b: u32,
    pub depth: u32,
    pub mode: PathMode,
    pub increments: Vec<f64>,
}

/// Depth-`j` marginal of the limit process: the increment at `w` is
/// `b^{-j} (fresh normal + sqrt(b-1) S(w))`. Covariance is exactly
/// [`exact_cov`] with no truncation error.
pub fn marginal_increments(
    b: u32,
    j: u32,
    field: &XiField,
    rng: &mut Rng,
) -> Result<GaussianPath> {
    if field.b() != b {
        return Err(Error::input(format!(
            "field base {} does not match b = {b}",
            field.b()
        )));
    }
    if j > field.max_depth() {
        return Err(Error::input(format!(
            "depth {j} exceeds the field's max depth {}",
            field.max_depth()
        )));
    }
    let count = checked_tree_width(b, j)?;
    let scale = (b as f64).powi(-(j as i32));
    let root_weight = (b as f64 - 1.0).sqrt();
    let mut increments = Vec::with_capacity(count);
    if j == 0 {
        increments.push(rng.normal());
    } else {
        fn walk(
            field: &XiField,
            rng: &mut Rng,
            id: u64,
            level: u32,
            depth: u32,
            s: f64,
            scale: f64,
            root_weight: f64,
            out: &mut Vec<f64>,
        ) {
            if level == depth {
                out.push(scale * (rng.normal() + root_weight * s));
                return;
            }
            for d in 0..field.b as u64 {
                let child = id * field.b as u64 + d + 1;
                walk(
                    field,
                    rng,
                    child,
                    level + 1,
                    depth,
                    s + field.xi_by_id(child),
                    scale,
                    root_weight,
                    out,
                );
            }
        }
        walk(field, rng, 0, 0, j, 0.0, scale, root_weight, &mut increments);
    }
    Ok(GaussianPath {
        b,
        depth: j,
        mode: PathMode::Marginal,
        increments,
    })
}

/// Truncated descendant series at `w`:
/// `sum_{k=1..level-|w|} b^{-k} sum_{|v|=k} xi(wv)`
/// (without the `sqrt(b-1)` factor). The variance of `sqrt(b-1)` times
/// this is `1 - b^{-(level-|w|)}`.
pub fn zeta_trunc(field: &XiField, w: &Word, level: u32) -> f64 {
    assert_eq!(w.base(), field.b(), "word base does not match the field");
    assert!(w.len() as u32 <= level && level <= field.max_depth());
    let b = field.b() as u64;
    let rel_depth = level - w.len() as u32;
    if rel_depth == 0 {
        return 0.0;
    }
    let mut level_sums = vec![NeumaierSum::new(); rel_depth as usize];
    fn walk(field: &XiField, id: u64, k: u32, max_k: u32, sums: &mut [NeumaierSum]) {
        if k == max_k {
            return;
        }
        let b = field.b() as u64;
        for d in 0..b {
            let child = id * b + d + 1;
            sums[k as usize].add(field.xi_by_id(child));
            walk(field, child, k + 1, max_k, sums);
        }
    }
    walk(field, w.node_id(), 0, rel_depth, &mut level_sums);
    let bf = b as f64;
    let mut total = NeumaierSum::new();
    for (k, s) in level_sums.iter().enumerate() {
        total.add(bf.powi(-(k as i32 + 1)) * s.value());
    }
    total.value()
}

/// Coefficient scheme for the generalized additive measure: functions
/// `alpha`, `beta` on nonempty words, with an exponent `p` in `(1, 2]`
/// controlling the summability proxy.
pub struct CoefficientScheme {
    name: String,
    p: f64,
    alpha: Box<dyn Fn(&Word) -> f64 + Send + Sync>,
    beta: Box<dyn Fn(&Word) -> f64 + Send + Sync>,
}

impl CoefficientScheme {
    pub fn new(
        name: impl Into<String>,
        p: f64,
        alpha: Box<dyn Fn(&Word) -> f64 + Send + Sync>,
        beta: Box<dyn Fn(&Word) -> f64 + Send + Sync>,
    ) -> Result<CoefficientScheme> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::input(format!("exponent p must lie in (1, 2], got {p}")));
        }
        Ok(CoefficientScheme {
            name: name.into(),
            p,
            alpha,
            beta,
        })
    }

    /// `alpha(w) = b^{-|w|}`, `beta = sqrt(b-1)`: the scheme of the
    /// additive cascade itself.
    pub fn canonical(b: u32) -> CoefficientScheme {
        CoefficientScheme {
            name: "canonical".to_string(),
            p: 2.0,
            alpha: Box::new(move |w: &Word| (b as f64).powi(-(w.len() as i32))),
            beta: Box::new(move |_: &Word| (b as f64 - 1.0).sqrt()),
        }
    }

    /// `alpha(w) = b^{-|w|}`, `beta(w) = theta^{|w|}` with `theta^2 < b`
    /// so the level sums still decay geometrically.
    pub fn geometric(b: u32, theta: f64) -> Result<CoefficientScheme> {
        if !(theta > 0.0 && theta * theta < b as f64) {
            return Err(Error::input(format!(
                "theta must satisfy 0 < theta < sqrt(b), got {theta}"
            )));
        }
        Ok(CoefficientScheme {
            name: format!("geometric theta={theta}"),
            p: 2.0,
            alpha: Box::new(move |w: &Word| (b as f64).powi(-(w.len() as i32))),
            beta: Box::new(move |w: &Word| theta.powi(w.len() as i32)),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self, w: &Word) -> f64 {
        (self.alpha)(w)
    }

    pub fn beta(&self, w: &Word) -> f64 {
        (self.beta)(w)
    }
}

impl std::fmt::Debug for CoefficientScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientScheme")
            .field("name", &self.name)
            .field("p", &self.p)
            .finish()
    }
}

/// Check the two scheme invariants up to `depth`:
/// additive consistency `alpha(w) = sum_d alpha(w d)` (to 1e-12) for every
/// word with `1 <= |w| < depth`, and geometric decay of the level sums
/// `s_k = sum_{|v|=k} |alpha(v) beta(v)|^p`. Reports the first violation.
pub fn validate_scheme(scheme: &CoefficientScheme, b: u32, depth: u32) -> Result<()> {
    check_base(b)?;
    checked_tree_width(b, depth)?;
    let mut scratch = Word::empty(b)?;
    // consistency, depth-first
    fn check_consistency(
        scheme: &CoefficientScheme,
        b: u32,
        w: &mut Word,
        depth: u32,
    ) -> Result<()> {
        if (w.len() as u32) >= depth {
            return Ok(());
        }
        if !w.is_empty() {
            let a = scheme.alpha(w);
            let mut child_sum = NeumaierSum::new();
            for d in 0..b as u8 {
                w.push_digit(d);
                child_sum.add(scheme.alpha(w));
                w.pop_digit();
            }
            if (a - child_sum.value()).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::input(format!(
                    "scheme '{}' violates alpha-consistency at word \"{w}\": alpha = {a}, child sum = {}",
                    scheme.name(),
                    child_sum.value()
                )));
            }
        }
        for d in 0..b as u8 {
            w.push_digit(d);
            check_consistency(scheme, b, w, depth)?;
            w.pop_digit();
        }
        Ok(())
    }
    check_consistency(scheme, b, &mut scratch, depth)?;

    // summability proxy: level sums of |alpha beta|^p decay geometrically
    let mut prev: Option<f64> = None;
    for k in 1..=depth {
        let mut sum = NeumaierSum::new();
        let mut digits = vec![0u8; k as usize];
        loop {
            let w = Word::new(b, digits.clone())?;
            let term = (scheme.alpha(&w) * scheme.beta(&w)).abs().powf(scheme.p());
            if !term.is_finite() {
                return Err(Error::input(format!(
                    "scheme '{}' has a non-finite coefficient at word \"{w}\"",
                    scheme.name()
                )));
            }
            sum.add(term);
            let mut pos = k as usize;
            let mut done = true;
            while pos > 0 {
                pos -= 1;
                if (digits[pos] as u32) + 1 < b {
                    digits[pos] += 1;
                    for x in digits[pos + 1..].iter_mut() {
                        *x = 0;
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
        let s = sum.value();
        if let Some(p) = prev {
            if !(s <= p * (1.0 - 1e-9) || (p == 0.0 && s == 0.0)) {
                return Err(Error::input(format!(
                    "scheme '{}' level sums do not decay geometrically: s_{} = {p}, s_{} = {s}",
                    scheme.name(),
                    k - 1,
                    k
                )));
            }
        }
        prev = Some(s);
    }
    Ok(())
}

/// Additive Gaussian measure for a general coefficient scheme, truncated
/// at depth `level`:
/// `M([w]) = sum_{1<=|v|<=level-|w|} alpha(wv) beta(wv) xi(wv)
///         + alpha(w) sum_k beta(w|_k) xi(w|_k)`.
/// The scheme is validated up to `level` first.
pub fn generalized_measure(
    scheme: &CoefficientScheme,
    b: u32,
    j: u32,
    level: u32,
    field: &XiField,
) -> Result<GaussianPath> {
    validate_scheme(scheme, b, level)?;
    let increments = measure_increments(scheme, b, j, level, field)?;
    Ok(GaussianPath {
        b,
        depth: j,
        mode: PathMode::Scheme { level },
        increments,
    })
}

/// The additive cascade measure at depth `j`, truncated at `level`:
/// the canonical coefficient scheme run through the same evaluation as
/// [`generalized_measure`], with the leaf-term variance deficit
/// `b^{-(level-j)}` recorded in the mode.
pub fn consistent_measure(b: u32, j: u32, level: u32, field: &XiField) -> Result<GaussianPath> {
    let scheme = CoefficientScheme::canonical(b);
    let increments = measure_increments(&scheme, b, j, level, field)?;
    Ok(GaussianPath {
        b,
        depth: j,
        mode: PathMode::Consistent {
            level,
            zeta_deficit: (b as f64).powi(-((level - j) as i32)),
        },
        increments,
    })
}

fn measure_increments(
    scheme: &CoefficientScheme,
    b: u32,
    j: u32,
    level: u32,
    field: &XiField,
) -> Result<Vec<f64>> {
    if field.b() != b {
        return Err(Error::input(format!(
            "field base {} does not match b = {b}",
            field.b()
        )));
    }
    if j > level {
        return Err(Error::input(format!("need j <= level, got j = {j}, level = {level}")));
    }
    if level > field.max_depth() {
        return Err(Error::input(format!(
            "truncation level {level} exceeds the field's max depth {}",
            field.max_depth()
        )));
    }
    checked_tree_width(b, level)?;
    let leaf_count = checked_tree_width(b, j)?;
    let mut out = Vec::with_capacity(leaf_count);
    let mut scratch = Word::empty(b)?;

    // branch partial sums of beta(w|_k) xi(w|_k) are carried down the DFS
    fn descend(
        scheme: &CoefficientScheme,
        field: &XiField,
        w: &mut Word,
        id: u64,
        branch: f64,
        j: u32,
        level: u32,
        out: &mut Vec<f64>,
    ) {
        let b = field.b();
        if w.len() as u32 == j {
            let series = descendant_series(scheme, field, w, id, level - j);
            out.push(series + scheme.alpha(w) * branch);
            return;
        }
        for d in 0..b as u8 {
            let child = id * b as u64 + d as u64 + 1;
            w.push_digit(d);
            let step = scheme.beta(w) * field.xi_by_id(child);
            descend(scheme, field, w, child, branch + step, j, level, out);
            w.pop_digit();
        }
    }

    descend(scheme, field, &mut scratch, 0, 0.0, j, level, &mut out);
    Ok(out)
}

/// `sum_{k=1..rel_depth} sum_{|v|=k} alpha(wv) beta(wv) xi(wv)`, with a
/// compensated sum per level, levels combined in ascending order.
fn descendant_series(
    scheme: &CoefficientScheme,
    field: &XiField,
    w: &mut Word,
    id: u64,
    rel_depth: u32,
) -> f64 {
    if rel_depth == 0 {
        return 0.0;
    }
    let mut level_sums = vec![NeumaierSum::new(); rel_depth as usize];
    fn walk(
        scheme: &CoefficientScheme,
        field: &XiField,
        w: &mut Word,
        id: u64,
        k: u32,
        max_k: u32,
        sums: &mut [NeumaierSum],
    ) {
        if k == max_k {
            return;
        }
        let b = field.b();
        for d in 0..b as u8 {
            let child = id * b as u64 + d as u64 + 1;
            w.push_digit(d);
            sums[k as usize].add(scheme.alpha(w) * scheme.beta(w) * field.xi_by_id(child));
            walk(scheme, field, w, child, k + 1, max_k, sums);
            w.pop_digit();
        }
    }
    walk(scheme, field, w, id, 0, rel_depth, &mut level_sums);
    let mut total = NeumaierSum::new();
    for s in &level_sums {
        total.add(s.value());
    }
    total.value()
}

/// Grid values `X(k b^{-depth})` as partial sums of the increments;
/// `X(0) = 0`.
pub fn integrate_path(path: &GaussianPath) -> Vec<f64> {
    let mut grid = Vec::with_capacity(path.increments.len() + 1);
    grid.push(0.0);
    let mut acc = NeumaierSum::new();
    for &dx in &path.increments {
        acc.add(dx);
        grid.push(acc.value());
    }
    grid
}
