//! Uniform perfect matchings of `[k] x [n]` and the statistics of
//! `xi_F(M) = |F ∩ M|`: sampling, exact enumeration, the concentration tail
//! bound, the fat/thin hyperplane classifier, the disjoint-pair mixing
//! bound, and an empirical check of the spread lemma's conclusion.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::{Block, Family, InstanceParams};

/// Default size limit for exhaustive enumeration of matchings,
/// `(n!)^{k-1} <= 10^6`.
pub const EXACT_MODE_LIMIT: u64 = 1_000_000;

/// `n` pairwise disjoint partite tuples covering the ground set, stored in
/// canonical form: row `t` takes value `t` in the first part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfectMatching {
    n: usize,
    k: usize,
    rows: Vec<Block>,
}

impl PerfectMatching {
    pub fn new(n: usize, k: usize, mut rows: Vec<Block>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::validation(format!(
                "perfect matching needs {} rows, got {}",
                n,
                rows.len()
            )));
        }
        rows.sort();
        let mut seen = vec![vec![false; n]; k];
        for (t, row) in rows.iter().enumerate() {
            if !row.is_partite_complete(k) {
                return Err(Error::validation(format!("row {row} is not a partite tuple")));
            }
            for e in row.elements() {
                if e.part >= k || e.value >= n {
                    return Err(Error::validation(format!("row {row} out of range")));
                }
                if seen[e.part][e.value] {
                    return Err(Error::validation(format!(
                        "element {e} covered twice; rows are not disjoint"
                    )));
                }
                seen[e.part][e.value] = true;
            }
            if row.value_in_part(0) != Some(t) {
                return Err(Error::invariant("canonical sort failed".to_string()));
            }
        }
        Ok(PerfectMatching { n, k, rows })
    }

    /// The matching whose rows are `(t, t, ..., t)`.
    pub fn identity(n: usize, k: usize) -> Self {
        let rows = (0..n).map(|t| Block::from_values(&vec![t; k])).collect();
        PerfectMatching { n, k, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Block] {
        &self.rows
    }
}

/// Uniform sample over all `(n!)^{k-1}` canonical matchings: the first
/// coordinate is the identity and each later coordinate is an independent
/// uniform permutation.
pub fn sample_matching(params: InstanceParams, rng: &mut impl Rng) -> PerfectMatching {
    let (n, k) = (params.n, params.k);
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(k);
    columns.push((0..n).collect());
    for _ in 1..k {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        columns.push(perm);
    }
    let rows = (0..n)
        .map(|t| {
            let values: Vec<usize> = (0..k).map(|j| columns[j][t]).collect();
            Block::from_values(&values)
        })
        .collect();
    PerfectMatching { n, k, rows }
}

/// Number of canonical matchings `(n!)^{k-1}`, if it fits in a u64.
pub fn matching_count(n: usize, k: usize) -> Option<u64> {
    let mut fact = 1u64;
    for i in 2..=n as u64 {
        fact = fact.checked_mul(i)?;
    }
    let mut total = 1u64;
    for _ in 1..k {
        total = total.checked_mul(fact)?;
    }
    Some(total)
}

/// Visits every canonical matching exactly once.
pub fn for_each_matching(
    params: InstanceParams,
    mut visit: impl FnMut(&PerfectMatching),
) -> Result<()> {
    let (n, k) = (params.n, params.k);
    let count = matching_count(n, k)
        .filter(|&c| c <= EXACT_MODE_LIMIT)
        .ok_or_else(|| {
            Error::param(format!(
                "exact enumeration infeasible at n={n}, k={k}; limit is {EXACT_MODE_LIMIT}"
            ))
        })?;
    let perms = permutations(n);
    let mut choice = vec![0usize; k.saturating_sub(1)];
    let mut visited = 0u64;
    loop {
        let rows: Vec<Block> = (0..n)
            .map(|t| {
                let mut values = Vec::with_capacity(k);
                values.push(t);
                for j in 0..k - 1 {
                    values.push(perms[choice[j]][t]);
                }
                Block::from_values(&values)
            })
            .collect();
        visit(&PerfectMatching { n, k, rows });
        visited += 1;

        let mut pos = 0;
        loop {
            if pos == choice.len() {
                debug_assert_eq!(visited, count);
                return Ok(());
            }
            choice[pos] += 1;
            if choice[pos] < perms.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    heap_permute(&mut current, n, &mut out);
    out.sort();
    out
}

fn heap_permute(items: &mut Vec<usize>, size: usize, out: &mut Vec<Vec<usize>>) {
    if size == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..size {
        heap_permute(items, size - 1, out);
        if size.is_multiple_of(2) {
            items.swap(i, size - 1);
        } else {
            items.swap(0, size - 1);
        }
    }
}

/// `xi_F(M) = |F ∩ M|`.
pub fn xi(family: &Family, m: &PerfectMatching) -> Result<usize> {
    if !family.partite() {
        return Err(Error::param("xi requires a partite family".to_string()));
    }
    Ok(m.rows().iter().filter(|row| family.contains_block(row)).count())
}

/// Distribution summary of `xi_F` over perfect matchings.
#[derive(Debug, Clone)]
pub struct XiStatistics {
    /// Samples drawn, or the number of matchings in exact mode.
    pub trials: u64,
    pub mean: f64,
    /// `tail_counts[t]` counts outcomes with `xi >= t`.
    pub tail_counts: BTreeMap<usize, u64>,
    /// Frequency of `xi != s - 1`.
    pub p_neq: f64,
    /// Frequency of `xi > s - 1`.
    pub p_gt: f64,
    pub seed: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct XiOptions {
    /// Exact enumeration kicks in when `(n!)^{k-1}` is at most this.
    pub exact_threshold: u64,
    /// Number of independently seeded sampling streams.
    pub streams: usize,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions { exact_threshold: EXACT_MODE_LIMIT, streams: 1 }
    }
}

pub fn estimate_xi(family: &Family, s: usize, trials: u64, seed: u64) -> Result<XiStatistics> {
    estimate_xi_with(family, s, trials, seed, XiOptions::default())
}

/// Monte Carlo estimate of the `xi` distribution, switching to exact
/// enumeration whenever the matching space is small enough.
pub fn estimate_xi_with(
    family: &Family,
    s: usize,
    trials: u64,
    seed: u64,
    opts: XiOptions,
) -> Result<XiStatistics> {
    if trials < 1 {
        return Err(Error::param("trials must be at least 1".to_string()));
    }
    if s < 1 {
        return Err(Error::param("s must be at least 1".to_string()));
    }
    if !family.partite() {
        return Err(Error::param("xi statistics require a partite family".to_string()));
    }
    let params = family.params();
    let n = params.n;
    let mut histogram = vec![0u64; n + 1];

    let exact = matching_count(n, params.k).is_some_and(|c| c <= opts.exact_threshold);
    let total = if exact {
        for_each_matching(params, |m| {
            let v = m.rows().iter().filter(|row| family.contains_block(row)).count();
            histogram[v] += 1;
        })?;
        matching_count(n, params.k).unwrap()
    } else {
        sample_histogram(family, trials, seed, opts.streams, &mut histogram);
        trials
    };

    let mut sum = 0u128;
    for (v, &count) in histogram.iter().enumerate() {
        sum += (v as u128) * (count as u128);
    }
    let mut tail_counts = BTreeMap::new();
    let mut running = 0u64;
    for v in (0..=n).rev() {
        running += histogram[v];
        if running > 0 {
            tail_counts.insert(v, running);
        }
    }
    let at_target = if s >= 1 && s - 1 <= n { histogram[s - 1] } else { 0 };
    let gt_target: u64 = if s - 1 < n { histogram[s..=n].iter().sum() } else { 0 };
    Ok(XiStatistics {
        trials: total,
        mean: sum as f64 / total as f64,
        tail_counts,
        p_neq: (total - at_target) as f64 / total as f64,
        p_gt: gt_target as f64 / total as f64,
        seed,
        exact,
    })
}

/// One histogram per independently seeded stream, merged in stream order.
/// The result depends only on (seed, trials, stream count), not on how the
/// streams are scheduled, so streams run on worker threads.
fn sample_histogram(
    family: &Family,
    trials: u64,
    seed: u64,
    streams: usize,
    histogram: &mut [u64],
) {
    let params = family.params();
    let streams = (streams.max(1) as u64).min(trials.max(1));
    let base = trials / streams;
    let remainder = trials % streams;
    let run_stream = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let quota = base + if stream < remainder { 1 } else { 0 };
        let mut local = vec![0u64; params.n + 1];
        for _ in 0..quota {
            let m = sample_matching(params, &mut rng);
            let v = m.rows().iter().filter(|row| family.contains_block(row)).count();
            local[v] += 1;
        }
        local
    };
    let locals: Vec<Vec<u64>> = if streams == 1 {
        vec![run_stream(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..streams)
                .map(|stream| scope.spawn(move || run_stream(stream)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("sampler thread")).collect()
        })
    };
    for local in locals {
        for (slot, count) in histogram.iter_mut().zip(local) {
            *slot += count;
        }
    }
}

/// Tail bound `2 exp(-lambda^2 / (alpha n / 2 + 2 lambda))`. The bound does
/// not depend on the tail direction `delta`.
pub fn conc_bound(alpha: f64, n: usize, lambda: f64, delta: i8) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::param(format!("lambda must be positive, got {lambda}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha must lie in [0,1], got {alpha}")));
    }
    if delta != 1 && delta != -1 {
        return Err(Error::param(format!("delta must be +1 or -1, got {delta}")));
    }
    Ok(2.0 * (-(lambda * lambda) / (alpha * n as f64 / 2.0 + 2.0 * lambda)).exp())
}

#[derive(Debug, Clone)]
pub struct ConcentrationRow {
    pub lambda: f64,
    pub delta: i8,
    pub empirical: f64,
    pub bound: f64,
    pub std_err: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub alpha: f64,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationReport {
    pub fn flags(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }
}

/// Compares empirical tail frequencies `P[delta (xi - alpha n) >= 2 lambda]`
/// with the formula bound at each grid point; a row is flagged when the
/// frequency exceeds the bound by more than three binomial standard errors.
pub fn check_concentration(
    family: &Family,
    s: usize,
    trials: u64,
    lambda_grid: &[f64],
    seed: u64,
) -> Result<ConcentrationReport> {
    let _ = s;
    if trials < 1 {
        return Err(Error::param("trials must be at least 1".to_string()));
    }
    if !family.partite() {
        return Err(Error::param("concentration check requires a partite family".to_string()));
    }
    let params = family.params();
    let n = params.n;
    let cube = params
        .cube_size()
        .ok_or_else(|| Error::param("n^k overflows".to_string()))?;
    let alpha = family.len() as f64 / cube as f64;

    let mut histogram = vec![0u64; n + 1];
    sample_histogram(family, trials, seed, 1, &mut histogram);

    let mut rows = Vec::new();
    for &lambda in lambda_grid {
        for delta in [1i8, -1i8] {
            let bound = conc_bound(alpha, n, lambda, delta)?;
            let count: u64 = (0..=n)
                .filter(|&v| delta as f64 * (v as f64 - alpha * n as f64) >= 2.0 * lambda)
                .map(|v| histogram[v])
                .sum();
            let empirical = count as f64 / trials as f64;
            let std_err = (empirical * (1.0 - empirical) / trials as f64).sqrt();
            rows.push(ConcentrationRow {
                lambda,
                delta,
                empirical,
                bound,
                std_err,
                flagged: empirical > bound + 3.0 * std_err,
            });
        }
    }
    Ok(ConcentrationReport { alpha, trials, seed, rows })
}

#[derive(Debug, Clone)]
pub struct TailRatioReport {
    pub matchings: u64,
    pub count_neq: u64,
    pub count_gt: u64,
    /// `n * count_gt >= count_neq`, i.e. `P[xi > s-1] >= P[xi != s-1] / n`.
    pub holds: bool,
}

/// Exact verification of the tail ratio for families of size at least
/// `(s-1) n^{k-1}`.
pub fn tail_ratio_check(family: &Family, s: usize) -> Result<TailRatioReport> {
    if !family.partite() {
        return Err(Error::param("tail ratio check requires a partite family".to_string()));
    }
    let params = family.params();
    let n = params.n;
    let min_size = (s - 1) as f64 * (n as f64).powi(params.k as i32 - 1);
    if (family.len() as f64) < min_size {
        return Err(Error::param(format!(
            "tail ratio check requires |F| >= (s-1) n^(k-1) = {min_size}, got {}",
            family.len()
        )));
    }
    let mut count_neq = 0u64;
    let mut count_gt = 0u64;
    let mut total = 0u64;
    for_each_matching(params, |m| {
        let v = m.rows().iter().filter(|row| family.contains_block(row)).count();
        total += 1;
        if v != s - 1 {
            count_neq += 1;
        }
        if v + 1 > s {
            count_gt += 1;
        }
    })?;
    Ok(TailRatioReport {
        matchings: total,
        count_neq,
        count_gt,
        holds: (n as u128) * (count_gt as u128) >= count_neq as u128,
    })
}

/// The difference family `P_{a,b}` in coordinate `coord`: tuples `t` of
/// `[n]^{k-1}` with `(a, t) ∈ F` and `(b, t) ∉ F`, the named coordinate
/// playing the role of the first.
pub fn pab_family(family: &Family, a: usize, b: usize, coord: usize) -> Result<Family> {
    if !family.partite() {
        return Err(Error::param("difference family requires a partite family".to_string()));
    }
    let params = family.params();
    if a == b {
        return Err(Error::param("difference family needs two distinct values".to_string()));
    }
    if a >= params.n || b >= params.n || coord >= params.k {
        return Err(Error::param(format!(
            "difference family arguments out of range: a={a}, b={b}, coord={coord}"
        )));
    }
    if params.k < 2 {
        return Err(Error::param("difference family requires k >= 2".to_string()));
    }
    let reduced = InstanceParams::new(params.n, params.k - 1, params.s)?;
    let mut blocks = Vec::new();
    for block in family.blocks() {
        if block.value_in_part(coord) != Some(a) {
            continue;
        }
        let mut values: Vec<usize> = block.elements().iter().map(|e| e.value).collect();
        values[coord] = b;
        let sibling = Block::from_values(&values);
        if !family.contains_block(&sibling) {
            values.remove(coord);
            blocks.push(Block::from_values(&values));
        }
    }
    Family::new(reduced, blocks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordCase {
    /// Every count sits below `2 p n^{k-1} + (s-1) n^{k-2}`.
    Bounded,
    /// The values split into fat (count at least `(1-2p) n^{k-1}`) and thin
    /// (count at most `2 p n^{k-1}`).
    FatThin,
    /// Neither case certifies; the dichotomy needs a smaller p.
    RegimeViolation,
}

#[derive(Debug, Clone)]
pub struct CoordClassification {
    pub case: CoordCase,
    pub fat: Vec<usize>,
    pub thin: Vec<usize>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct HyperplaneClassification {
    pub p: f64,
    pub coords: Vec<CoordClassification>,
    /// All fat hyperplanes share one coordinate (vacuously true when none).
    pub parallel: bool,
    pub parallel_coord: Option<usize>,
    pub fat_total: usize,
    pub fat_equals_s_minus_1: bool,
    /// The stated hypothesis `p < 1/8`.
    pub p_below_one_eighth: bool,
    /// The looser constant `p <= 1/5` used inside the dichotomy argument.
    pub p_at_most_one_fifth: bool,
}

/// Classifies every hyperplane of a partite family against the fat/thin
/// dichotomy at tail probability `p`.
///
/// A coordinate with any near-full value attempts the fat/thin partition;
/// otherwise the bounded case is tested. Failures are reported per
/// coordinate, never thrown.
pub fn classify_hyperplanes(family: &Family, p: f64, s: usize) -> Result<HyperplaneClassification> {
    if !family.partite() {
        return Err(Error::param("classification requires a partite family".to_string()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("p must lie in [0,1], got {p}")));
    }
    let params = family.params();
    let (n, k) = (params.n, params.k);
    let nk1 = (n as f64).powi(k as i32 - 1);
    let nk2 = (n as f64).powi(k as i32 - 2);
    let fat_floor = (1.0 - 2.0 * p) * nk1;
    let thin_ceil = 2.0 * p * nk1;
    let bounded_ceil = 2.0 * p * nk1 + (s - 1) as f64 * nk2;

    let mut coords = Vec::with_capacity(k);
    for coord in 0..k {
        let counts: Vec<u64> = (0..n).map(|v| family.hyperplane_count(coord, v)).collect();
        let fat: Vec<usize> = (0..n).filter(|&v| counts[v] as f64 >= fat_floor).collect();
        let case;
        let thin;
        if fat.is_empty() {
            thin = Vec::new();
            case = if counts.iter().all(|&c| c as f64 <= bounded_ceil) {
                CoordCase::Bounded
            } else {
                CoordCase::RegimeViolation
            };
        } else {
            let t: Vec<usize> = (0..n)
                .filter(|&v| counts[v] as f64 <= thin_ceil && (counts[v] as f64) < fat_floor)
                .collect();
            if fat.len() + t.len() == n {
                case = CoordCase::FatThin;
                thin = t;
            } else if counts.iter().all(|&c| c as f64 <= bounded_ceil) {
                case = CoordCase::Bounded;
                thin = Vec::new();
            } else {
                case = CoordCase::RegimeViolation;
                thin = t;
            }
        }
        let fat = if case == CoordCase::FatThin { fat } else { Vec::new() };
        coords.push(CoordClassification { case, fat, thin, counts });
    }

    let fat_coords: Vec<usize> = (0..k).filter(|&c| !coords[c].fat.is_empty()).collect();
    let fat_total: usize = coords.iter().map(|c| c.fat.len()).sum();
    let parallel = fat_coords.len() <= 1;
    Ok(HyperplaneClassification {
        p,
        coords,
        parallel,
        parallel_coord: if fat_coords.len() == 1 { Some(fat_coords[0]) } else { None },
        fat_total,
        fat_equals_s_minus_1: fat_total == s - 1,
        p_below_one_eighth: p < 0.125,
        p_at_most_one_fifth: p <= 0.2,
    })
}

/// Exact number of ordered pairs `(x, y)` with `x ∈ P`, `y ∉ P`, `x` and
/// `y` disjoint as partite tuples of `P`'s own cube.
pub fn disjoint_pair_count(p_family: &Family) -> Result<u64> {
    if !p_family.partite() {
        return Err(Error::param("disjoint pair count requires a partite family".to_string()));
    }
    let params = p_family.params();
    let cube = Family::full_cube(params)?;
    let mut count = 0u64;
    for x in p_family.blocks() {
        for y in cube.blocks() {
            if !p_family.contains_block(y) && x.is_disjoint(y) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Expander-mixing lower bound
/// `((n-1)^{k-1} - (n-1)^{k-3}) m (n^{k-1} - m) / n^{k-1}` for a set of `m`
/// tuples inside `[n]^{k-1}`; requires `k >= 3`.
pub fn mixing_bound(n: usize, k: usize, m: u64) -> Result<f64> {
    if k < 3 {
        return Err(Error::param(format!("mixing bound requires k >= 3, got {k}")));
    }
    let d = (n as f64 - 1.0).powi(k as i32 - 1);
    let lambda2 = (n as f64 - 1.0).powi(k as i32 - 3);
    let total = (n as f64).powi(k as i32 - 1);
    Ok((d - lambda2) * m as f64 * (total - m as f64) / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadLemmaStatus {
    Pass,
    Fail,
    /// The bound is nonpositive, so any success probability satisfies it.
    Vacuous,
}

#[derive(Debug, Clone)]
pub struct SpreadLemmaReport {
    pub r: f64,
    pub beta: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub empirical: f64,
    pub bound: f64,
    pub margin: f64,
    pub status: SpreadLemmaStatus,
}

/// Samples `(beta * delta)`-random subsets `W` of the ground set and
/// compares the empirical probability that some member of the family lands
/// inside `W` with `1 - (2 / log2(r delta))^beta * k`.
pub fn spread_lemma_check(
    family: &Family,
    r: f64,
    beta: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<SpreadLemmaReport> {
    let keep = beta * delta;
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::param(format!(
            "beta * delta must lie in (0, 1], got {keep}"
        )));
    }
    if trials < 1 {
        return Err(Error::param("trials must be at least 1".to_string()));
    }
    let check = crate::spread::is_r_spread(family, r)?;
    if !check.is_spread {
        return Err(Error::param(format!(
            "family is not {r}-spread; violator {}",
            check.violator.map(|b| b.to_string()).unwrap_or_default()
        )));
    }
    let params = family.params();
    let k = params.k;
    let log_rd = (r * delta).log2();
    let bound = if log_rd <= 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 - (2.0 / log_rd).powf(beta) * k as f64
    };

    let ground = params.ground_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = vec![false; ground];
    let mut successes = 0u64;
    for _ in 0..trials {
        for slot in kept.iter_mut() {
            *slot = rng.gen::<f64>() < keep;
        }
        let hit = family
            .blocks()
            .any(|b| b.elements().iter().all(|e| kept[e.index(params.n)]));
        if hit {
            successes += 1;
        }
    }
    let empirical = successes as f64 / trials as f64;
    let std_err = (empirical * (1.0 - empirical) / trials as f64).sqrt();
    let status = if bound <= 0.0 {
        SpreadLemmaStatus::Vacuous
    } else if empirical >= bound - 3.0 * std_err {
        SpreadLemmaStatus::Pass
    } else {
        SpreadLemmaStatus::Fail
    };
    Ok(SpreadLemmaReport {
        r,
        beta,
        delta,
        trials,
        seed,
        empirical,
        bound,
        margin: empirical - bound,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{hyperplane_family, Hyperplane};

    fn params(n: usize, k: usize, s: usize) -> InstanceParams {
        InstanceParams::new(n, k, s).unwrap()
    }

    #[test]
    fn single_matching_when_n_is_one() {
        let p = params(1, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = sample_matching(p, &mut rng);
        assert_eq!(m.rows().len(), 1);
        assert_eq!(m.rows()[0], Block::from_values(&[0, 0, 0]));
    }

    #[test]
    fn sampled_matchings_partition_the_ground_set() {
        let p = params(5, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let m = sample_matching(p, &mut rng);
            // reconstruct through the validating constructor
            assert!(PerfectMatching::new(5, 3, m.rows().to_vec()).is_ok());
        }
    }

    #[test]
    fn sampling_is_uniform_over_s3() {
        // 6 matchings at (n=3, k=2); chi-squared with 5 degrees of freedom
        let p = params(3, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts: BTreeMap<Vec<Block>, u64> = BTreeMap::new();
        let trials = 60_000;
        for _ in 0..trials {
            let m = sample_matching(p, &mut rng);
            *counts.entry(m.rows().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = trials as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // critical value for df=5 at the 0.01 level
        assert!(chi2 < 15.0863, "chi2 = {chi2}");
    }

    #[test]
    fn xi_is_constant_on_hyperplanes() {
        let p = params(3, 2, 2);
        let h = hyperplane_family(p, Hyperplane::new(0, 0)).unwrap();
        for_each_matching(p, |m| {
            assert_eq!(xi(&h, m).unwrap(), 1);
        })
        .unwrap();
        assert_eq!(xi(&Family::empty(p), &PerfectMatching::identity(3, 2)).unwrap(), 0);
    }

    #[test]
    fn xi_on_prefix_family_is_constant_two() {
        let p = params(4, 2, 3);
        let f = Family::product(p, &[vec![0, 1], (0..4).collect()]).unwrap();
        for_each_matching(p, |m| {
            assert_eq!(xi(&f, m).unwrap(), 2);
        })
        .unwrap();
        let stats = estimate_xi(&f, 3, 10, 0).unwrap();
        assert!(stats.exact);
        assert_eq!(stats.p_neq, 0.0);
    }

    #[test]
    fn exact_xi_statistics_for_augmented_prefix() {
        // two full hyperplanes plus the block (3,1): xi = 3 iff that block
        // is in the matching, which happens with probability 1/4
        let p = params(4, 2, 3);
        let mut blocks: Vec<Block> = hyperplane_family(p, Hyperplane::new(0, 0))
            .unwrap()
            .blocks()
            .cloned()
            .collect();
        blocks.extend(hyperplane_family(p, Hyperplane::new(0, 1)).unwrap().blocks().cloned());
        blocks.push(Block::from_values(&[2, 0]));
        let f = Family::new(p, blocks).unwrap();
        let stats = estimate_xi(&f, 3, 1, 0).unwrap();
        assert!(stats.exact);
        assert_eq!(stats.trials, 24);
        assert_eq!(stats.p_neq, 0.25);
        assert_eq!(stats.p_gt, 0.25);
    }

    #[test]
    fn empty_family_with_single_family_target() {
        let p = params(3, 2, 1);
        let stats = estimate_xi(&Family::empty(p), 1, 1, 0).unwrap();
        // xi is identically 0 = s - 1
        assert_eq!(stats.p_neq, 0.0);
    }

    #[test]
    fn expectation_identity_in_exact_mode() {
        let p = params(4, 2, 2);
        let f = Family::product(p, &[vec![0, 2], vec![0, 1, 3]]).unwrap();
        let stats = estimate_xi(&f, 2, 1, 0).unwrap();
        assert!(stats.exact);
        let expected = f.len() as f64 / (p.n as f64).powi(p.k as i32 - 1);
        assert!((stats.mean - expected).abs() < 1e-12);
    }

    #[test]
    fn conc_bound_evaluates_formula() {
        let b = conc_bound(0.1, 30, 2.0, 1).unwrap();
        assert!((b - 2.0 * (-4.0f64 / 5.5).exp()).abs() < 1e-12);
        assert!((b - 0.9664).abs() < 1e-3);
        // direction independence
        assert_eq!(b, conc_bound(0.1, 30, 2.0, -1).unwrap());
        // monotone decay for large lambda
        let big = conc_bound(0.1, 30, 200.0, 1).unwrap();
        assert!(big < 1e-20);
        assert!(conc_bound(0.1, 30, 0.0, 1).is_err());
    }

    #[test]
    fn concentration_holds_on_constant_families() {
        let p = params(6, 2, 2);
        let h = hyperplane_family(p, Hyperplane::new(0, 0)).unwrap();
        let report = check_concentration(&h, 2, 2000, &[1.0, 2.0], 3).unwrap();
        assert_eq!(report.flags(), 0);
        let empty = check_concentration(&Family::empty(p), 2, 500, &[1.0], 3).unwrap();
        assert_eq!(empty.flags(), 0);
    }

    #[test]
    fn tail_ratio_on_augmented_prefix() {
        let p = params(4, 2, 3);
        let mut blocks: Vec<Block> = hyperplane_family(p, Hyperplane::new(0, 0))
            .unwrap()
            .blocks()
            .cloned()
            .collect();
        blocks.extend(hyperplane_family(p, Hyperplane::new(0, 1)).unwrap().blocks().cloned());
        blocks.push(Block::from_values(&[2, 0]));
        let f = Family::new(p, blocks).unwrap();
        let report = tail_ratio_check(&f, 3).unwrap();
        assert!(report.holds);
        assert_eq!(report.count_gt, 6);
        assert_eq!(report.count_neq, 6);
    }

    #[test]
    fn tail_ratio_equality_at_zero() {
        let p = params(4, 2, 3);
        let f = Family::product(p, &[vec![0, 1], (0..4).collect()]).unwrap();
        let report = tail_ratio_check(&f, 3).unwrap();
        assert_eq!(report.count_gt, 0);
        assert_eq!(report.count_neq, 0);
        assert!(report.holds);
    }

    #[test]
    fn tail_ratio_requires_large_family() {
        let p = params(4, 2, 3);
        let f = Family::product(p, &[vec![0], vec![0]]).unwrap();
        assert!(tail_ratio_check(&f, 3).is_err());
    }

    #[test]
    fn tail_ratio_on_random_large_families() {
        let p = params(4, 2, 2);
        let cube: Vec<Block> = Family::full_cube(p).unwrap().blocks().cloned().collect();
        let min_size = 4; // (s-1) n^{k-1}
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let size = min_size + (seed as usize % (cube.len() - min_size + 1));
            let picks = rand::seq::index::sample(&mut rng, cube.len(), size);
            let f = Family::new(p, picks.iter().map(|i| cube[i].clone())).unwrap();
            let report = tail_ratio_check(&f, 2).unwrap();
            assert!(report.holds, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn multi_stream_sampling_is_deterministic() {
        let p = params(5, 2, 2);
        let f = hyperplane_family(p, Hyperplane::new(0, 0)).unwrap();
        let opts = XiOptions { exact_threshold: 0, streams: 3 };
        let a = estimate_xi_with(&f, 2, 999, 5, opts).unwrap();
        let b = estimate_xi_with(&f, 2, 999, 5, opts).unwrap();
        assert_eq!(a.tail_counts, b.tail_counts);
        assert_eq!(a.mean, b.mean);
        // all 999 samples are accounted for
        assert_eq!(a.tail_counts.get(&0).copied(), Some(999));
    }

    #[test]
    fn exact_mode_agrees_with_sampling_within_four_sigma() {
        let p = params(4, 2, 3);
        let mut blocks: Vec<Block> = hyperplane_family(p, Hyperplane::new(0, 0))
            .unwrap()
            .blocks()
            .cloned()
            .collect();
        blocks.extend(hyperplane_family(p, Hyperplane::new(0, 1)).unwrap().blocks().cloned());
        blocks.push(Block::from_values(&[2, 0]));
        let f = Family::new(p, blocks).unwrap();

        let exact = estimate_xi(&f, 3, 1, 0).unwrap();
        assert!(exact.exact);
        let trials = 20_000u64;
        let sampled = estimate_xi_with(
            &f,
            3,
            trials,
            11,
            XiOptions { exact_threshold: 0, streams: 1 },
        )
        .unwrap();
        assert!(!sampled.exact);
        let sigma = (exact.p_neq * (1.0 - exact.p_neq) / trials as f64).sqrt();
        assert!(
            (sampled.p_neq - exact.p_neq).abs() <= 4.0 * sigma,
            "p_neq {} vs exact {} (sigma {})",
            sampled.p_neq,
            exact.p_neq,
            sigma
        );
        assert!((sampled.p_gt - exact.p_gt).abs() <= 4.0 * sigma);
    }

    #[test]
    fn difference_family_on_hyperplane() {
        let p = params(4, 3, 1);
        let h = hyperplane_family(p, Hyperplane::new(0, 0)).unwrap();
        let p01 = pab_family(&h, 0, 1, 0).unwrap();
        assert_eq!(p01.len(), 16);
        let p10 = pab_family(&h, 1, 0, 0).unwrap();
        assert!(p10.is_empty());
        assert!(pab_family(&h, 1, 1, 0).is_err());
    }

    #[test]
    fn difference_families_are_disjoint() {
        let p = params(3, 2, 1);
        let f = Family::product(p, &[vec![0, 1], vec![0, 2]]).unwrap();
        let ab = pab_family(&f, 0, 1, 0).unwrap();
        let ba = pab_family(&f, 1, 0, 0).unwrap();
        for b in ab.blocks() {
            assert!(!ba.contains_block(b));
        }
    }

    #[test]
    fn classifier_on_full_cube_marks_everything_fat() {
        let p = params(4, 2, 5);
        let f = Family::full_cube(p).unwrap();
        let report = classify_hyperplanes(&f, 0.0, 5).unwrap();
        for coord in &report.coords {
            assert_eq!(coord.case, CoordCase::FatThin);
            assert_eq!(coord.fat.len(), 4);
        }
        assert!(!report.parallel);
    }

    #[test]
    fn classifier_on_empty_family_is_bounded() {
        let p = params(4, 2, 2);
        let report = classify_hyperplanes(&Family::empty(p), 0.0, 2).unwrap();
        for coord in &report.coords {
            assert_eq!(coord.case, CoordCase::Bounded);
            assert!(coord.fat.is_empty());
        }
        assert!(report.parallel);
        assert_eq!(report.fat_total, 0);
    }

    #[test]
    fn classifier_finds_two_parallel_fat_hyperplanes() {
        let p = params(10, 4, 3);
        let mut blocks: Vec<Block> = hyperplane_family(p, Hyperplane::new(0, 0))
            .unwrap()
            .blocks()
            .cloned()
            .collect();
        blocks.extend(hyperplane_family(p, Hyperplane::new(0, 1)).unwrap().blocks().cloned());
        blocks.push(Block::from_values(&[2, 0, 0, 0]));
        let f = Family::new(p, blocks).unwrap();
        assert_eq!(f.len(), 2001);
        let report = classify_hyperplanes(&f, 1e-3, 3).unwrap();
        assert_eq!(report.coords[0].case, CoordCase::FatThin);
        assert_eq!(report.coords[0].fat, vec![0, 1]);
        for coord in 1..4 {
            assert_eq!(report.coords[coord].case, CoordCase::Bounded);
        }
        assert!(report.parallel);
        assert_eq!(report.parallel_coord, Some(0));
        assert!(report.fat_equals_s_minus_1);
        assert!(report.p_below_one_eighth);
    }

    #[test]
    fn disjoint_pairs_exceed_mixing_bound() {
        let p = params(3, 2, 1);
        let single = Family::new(p, vec![Block::from_values(&[0, 0])]).unwrap();
        let count = disjoint_pair_count(&single).unwrap();
        assert_eq!(count, 4);
        let bound = mixing_bound(3, 3, 1).unwrap();
        assert!((bound - 24.0 / 9.0).abs() < 1e-12);
        assert!(count as f64 >= bound);
    }

    #[test]
    fn mixing_bound_vanishes_at_extremes() {
        let p = params(3, 2, 1);
        assert_eq!(disjoint_pair_count(&Family::empty(p)).unwrap(), 0);
        let full = Family::full_cube(p).unwrap();
        assert_eq!(disjoint_pair_count(&full).unwrap(), 0);
        assert_eq!(mixing_bound(3, 3, 0).unwrap(), 0.0);
        assert!(mixing_bound(3, 2, 1).is_err());
    }

    #[test]
    fn spread_lemma_trivial_cases() {
        let p = params(8, 2, 1);
        let f = Family::full_cube(p).unwrap();
        // beta * delta = 1 keeps everything
        let report = spread_lemma_check(&f, 8.0, 3.0, 1.0 / 3.0, 200, 0).unwrap();
        assert_eq!(report.empirical, 1.0);
        assert!(report.empirical >= report.bound);
        assert!(spread_lemma_check(&f, 8.0, 0.5, 0.0, 10, 0).is_err());
    }

    #[test]
    fn spread_lemma_vacuous_for_small_rd() {
        let p = params(4, 2, 1);
        let f = Family::full_cube(p).unwrap();
        let report = spread_lemma_check(&f, 2.0, 1.0, 0.9, 100, 0).unwrap();
        assert!(report.bound <= 0.0);
        assert_eq!(report.status, SpreadLemmaStatus::Vacuous);
    }
}
