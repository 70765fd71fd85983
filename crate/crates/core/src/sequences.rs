//! Threshold sequences, the coordinatewise dominance order, the named
//! sequence formulas, the two counterexample constructions, and a complete
//! branch-and-bound witness search deciding whether a sequence is
//! satisfying at desk scale.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::family::{Block, Family, FamilySystem, InstanceParams};
use crate::matcher;

/// Nondecreasing nonnegative thresholds `f_1 <= ... <= f_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSequence {
    params: InstanceParams,
    values: Vec<f64>,
}

impl ThresholdSequence {
    pub fn new(params: InstanceParams, values: Vec<f64>) -> Result<Self> {
        if values.len() != params.s {
            return Err(Error::param(format!(
                "sequence length {} does not match s={}",
                values.len(),
                params.s
            )));
        }
        for pair in values.windows(2) {
            if pair[0] > pair[1] {
                return Err(Error::param(format!(
                    "thresholds must be nondecreasing, got {} before {}",
                    pair[0], pair[1]
                )));
            }
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::param("thresholds must be finite and nonnegative".to_string()));
        }
        Ok(ThresholdSequence { params, values })
    }

    pub fn params(&self) -> InstanceParams {
        self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `f ⪯ g`: coordinatewise `f_i <= g_i`.
pub fn dominates(f: &ThresholdSequence, g: &ThresholdSequence) -> Result<bool> {
    if f.params != g.params {
        return Err(Error::param("dominance needs matching parameters".to_string()));
    }
    Ok(f.values.iter().zip(&g.values).all(|(a, b)| a <= b))
}

fn pow_f64(n: usize, e: i32) -> f64 {
    (n as f64).powi(e)
}

/// The uniform sequence `f_i = (s-1) n^{k-1}`.
pub fn uniform_sequence(params: InstanceParams) -> ThresholdSequence {
    let v = (params.s - 1) as f64 * pow_f64(params.n, params.k as i32 - 1);
    ThresholdSequence { params, values: vec![v; params.s] }
}

/// The linear sequence `f_i = i n^{k-1}`.
pub fn linear_sequence(params: InstanceParams) -> ThresholdSequence {
    let nk1 = pow_f64(params.n, params.k as i32 - 1);
    let values = (1..=params.s).map(|i| i as f64 * nk1).collect();
    ThresholdSequence { params, values }
}

/// The truncated sequence `f_i = min(s-1, i + C sqrt(s ln s)) n^{k-1}`.
/// The logarithm is natural.
pub fn truncated_sequence(params: InstanceParams, c: f64) -> Result<ThresholdSequence> {
    if c <= 0.0 {
        return Err(Error::param(format!("C must be positive, got {c}")));
    }
    let nk1 = pow_f64(params.n, params.k as i32 - 1);
    let s = params.s as f64;
    let shift = c * (s * s.ln()).sqrt();
    let values = (1..=params.s)
        .map(|i| (s - 1.0).min(i as f64 + shift) * nk1)
        .collect();
    Ok(ThresholdSequence { params, values })
}

/// The spread-engine threshold sequence
/// `f_i = (i-1) n^{k-1} + 4 (s-1)^2 n^{k-2} + 2^15 s^3 log2^3(sk) n^{k-3}`.
pub fn spread_threshold_sequence(params: InstanceParams) -> ThresholdSequence {
    let (n, k, s) = (params.n, params.k, params.s);
    let log_term = ((s * k) as f64).log2().powi(3);
    let tail = 4.0 * ((s - 1) as f64).powi(2) * pow_f64(n, k as i32 - 2)
        + 32768.0 * (s as f64).powi(3) * log_term * pow_f64(n, k as i32 - 3);
    let values = (1..=s)
        .map(|i| (i - 1) as f64 * pow_f64(n, k as i32 - 1) + tail)
        .collect();
    ThresholdSequence { params, values }
}

/// Smallest part size at which the spread-engine sequence is dominated by
/// the linear one: `max(2^8 s^{3/2} log2^{3/2}(sk), 8 s^2)`.
pub fn linear_domination_threshold(s: usize, k: usize) -> f64 {
    let a = 256.0 * (s as f64).powf(1.5) * ((s * k) as f64).log2().powf(1.5);
    let b = 8.0 * (s as f64) * (s as f64);
    a.max(b)
}

/// Family system pinned to a single extra block: the first family consists
/// of the prefix tuples meeting `(s, b, ..., b)` and every other family is
/// the full prefix `[s-1] x [n]^{k-1}` plus that block. The sizes are
/// `(s-1)(n^{k-1} - (n-1)^{k-1})` and `(s-1) n^{k-1} + 1`, checked on
/// construction, and the system is cross-dependent.
pub fn pinned_block_system(params: InstanceParams, pin: usize) -> Result<FamilySystem> {
    let (n, k, s) = (params.n, params.k, params.s);
    if s < 2 || n < 2 {
        return Err(Error::param(format!(
            "pinned construction needs s >= 2 and n >= 2, got n={n}, s={s}"
        )));
    }
    if s > n {
        return Err(Error::param(format!(
            "pinned construction needs s <= n so the extra block fits, got n={n}, s={s}"
        )));
    }
    if pin >= n {
        return Err(Error::param(format!("pin value {pin} out of range 0..{n}")));
    }

    let mut pinned_values = vec![s - 1];
    pinned_values.extend(std::iter::repeat_n(pin, k - 1));
    let pinned = Block::from_values(&pinned_values);

    let mut prefix_parts: Vec<Vec<usize>> = vec![(0..s - 1).collect()];
    prefix_parts.extend((1..k).map(|_| (0..n).collect::<Vec<usize>>()));
    let prefix = Family::product(params, &prefix_parts)?;

    let first = Family::new(
        params,
        prefix.blocks().filter(|b| !b.is_disjoint(&pinned)).cloned(),
    )?;
    let mut others_blocks: Vec<Block> = prefix.blocks().cloned().collect();
    others_blocks.push(pinned.clone());
    let other = Family::new(params, others_blocks)?;

    let expected_first =
        (s - 1) * (n.pow(k as u32 - 1) - (n - 1).pow(k as u32 - 1));
    let expected_other = (s - 1) * n.pow(k as u32 - 1) + 1;
    if first.len() != expected_first || other.len() != expected_other {
        return Err(Error::invariant(format!(
            "pinned construction sizes ({}, {}) differ from formulas ({}, {})",
            first.len(),
            other.len(),
            expected_first,
            expected_other
        )));
    }

    let mut families = vec![first];
    families.extend(std::iter::repeat_n(other, s - 1));
    FamilySystem::new(
        params,
        families,
        format!("pinned-block system (n={n}, k={k}, s={s}, pin={})", pin + 1),
    )
}

/// Corner construction blocked by the pigeonhole principle: the first
/// family is `[s/2] x [s/2] x [n]^{k-2}` and the others are
/// `[s/2] x [n]^{k-1} ∪ [n] x [s/2] x [n]^{k-2}`. Sizes are
/// `(s/2)^2 n^{k-2}` and `s n^{k-1} - (s/2)^2 n^{k-2}`; defined for even s.
pub fn pigeonhole_system(params: InstanceParams) -> Result<FamilySystem> {
    let (n, k, s) = (params.n, params.k, params.s);
    if s % 2 != 0 {
        return Err(Error::param(format!(
            "pigeonhole construction is defined for even s, got s={s}"
        )));
    }
    if k < 2 {
        return Err(Error::param("pigeonhole construction needs k >= 2".to_string()));
    }
    let half = s / 2;
    if n < half {
        return Err(Error::param(format!(
            "pigeonhole construction needs n >= s/2, got n={n}, s={s}"
        )));
    }

    let corner_parts: Vec<Vec<usize>> = (0..k)
        .map(|j| if j < 2 { (0..half).collect() } else { (0..n).collect() })
        .collect();
    let first = Family::product(params, &corner_parts)?;

    let stripe1_parts: Vec<Vec<usize>> = (0..k)
        .map(|j| if j == 0 { (0..half).collect() } else { (0..n).collect() })
        .collect();
    let stripe2_parts: Vec<Vec<usize>> = (0..k)
        .map(|j| if j == 1 { (0..half).collect() } else { (0..n).collect() })
        .collect();
    let stripe1 = Family::product(params, &stripe1_parts)?;
    let stripe2 = Family::product(params, &stripe2_parts)?;
    let other = Family::new(
        params,
        stripe1.blocks().chain(stripe2.blocks()).cloned(),
    )?;

    let expected_first = half * half * n.pow(k as u32 - 2);
    let expected_other = s * n.pow(k as u32 - 1) - expected_first;
    if first.len() != expected_first || other.len() != expected_other {
        return Err(Error::invariant(format!(
            "pigeonhole construction sizes ({}, {}) differ from formulas ({}, {})",
            first.len(),
            other.len(),
            expected_first,
            expected_other
        )));
    }

    let mut families = vec![first];
    families.extend(std::iter::repeat_n(other, s - 1));
    FamilySystem::new(
        params,
        families,
        format!("pigeonhole system (n={n}, k={k}, s={s})"),
    )
}

/// True iff `|F_i| > f_i` for every i and the system is cross-dependent.
pub fn is_counterexample_for(system: &FamilySystem, f: &ThresholdSequence) -> Result<bool> {
    if system.params() != f.params() {
        return Err(Error::param("system and sequence parameters differ".to_string()));
    }
    let exceeds = system
        .families()
        .iter()
        .zip(f.values())
        .all(|(fam, &threshold)| fam.len() as f64 > threshold);
    Ok(exceeds && matcher::is_cross_dependent(system))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessStatus {
    /// The exclusion space was exhausted; no counterexample exists.
    SatisfyingVerified,
    /// A cross-dependent system beating every threshold was found.
    WitnessFound,
    /// The node budget ran out first.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub status: WitnessStatus,
    pub witness: Option<FamilySystem>,
    pub nodes_explored: u64,
}

/// Complete branch-and-bound over exclusion assignments.
///
/// A witness against `f` exists iff one can exclude, for every rainbow
/// s-tuple of cube blocks, at least one component from its family while
/// keeping `|F_i| > f_i`. The search branches on the first unblocked tuple,
/// prunes states already seen up to relabeling values within parts and
/// permuting parts, and validates any witness with the matcher before
/// reporting it.
pub fn witness_search(
    params: InstanceParams,
    f: &ThresholdSequence,
    budget: u64,
) -> Result<WitnessReport> {
    if f.params() != params {
        return Err(Error::param("sequence parameters differ from instance".to_string()));
    }
    let cube_size = params
        .cube_size()
        .filter(|&c| c <= 128)
        .ok_or_else(|| {
            Error::param("witness search is desk-scale only; needs n^k <= 128".to_string())
        })?;
    let blocks: Vec<Block> = Family::full_cube(params)?.blocks().cloned().collect();
    debug_assert_eq!(blocks.len(), cube_size);

    // minimum family size m_i = floor(f_i) + 1; families larger than the
    // cube are impossible, making the sequence vacuously satisfying
    let mut capacities = Vec::with_capacity(params.s);
    for &threshold in f.values() {
        let min_size = threshold.floor() as i64 + 1;
        if min_size > cube_size as i64 {
            return Ok(WitnessReport {
                status: WitnessStatus::SatisfyingVerified,
                witness: None,
                nodes_explored: 0,
            });
        }
        capacities.push((cube_size as i64 - min_size) as u32);
    }

    let masks: Vec<u128> = blocks
        .iter()
        .map(|b| {
            b.elements()
                .iter()
                .fold(0u128, |acc, e| acc | (1u128 << e.index(params.n)))
        })
        .collect();
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::with_capacity(params.s);
    enumerate_tuples(&masks, params.s, 0, &mut current, &mut tuples, 2_000_000)?;

    let relabelings = block_relabelings(params, &blocks);
    let mut search = WitnessSearch {
        params,
        capacities,
        tuples,
        relabelings,
        budget,
        nodes: 0,
        visited: HashSet::new(),
        witness: None,
        out_of_budget: false,
    };
    let found = search.run(&mut vec![0u128; params.s]);

    if search.out_of_budget && !found {
        return Ok(WitnessReport {
            status: WitnessStatus::Inconclusive,
            witness: None,
            nodes_explored: search.nodes,
        });
    }
    if !found {
        return Ok(WitnessReport {
            status: WitnessStatus::SatisfyingVerified,
            witness: None,
            nodes_explored: search.nodes,
        });
    }

    let exclusions = search.witness.unwrap();
    let families: Vec<Family> = exclusions
        .iter()
        .map(|excl| {
            Family::new(
                params,
                blocks
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| excl & (1u128 << i) == 0)
                    .map(|(_, b)| b.clone()),
            )
        })
        .collect::<Result<_>>()?;
    let system = FamilySystem::new(params, families, "witness")?;
    let sizes_ok = system
        .families()
        .iter()
        .zip(f.values())
        .all(|(fam, &t)| fam.len() as f64 > t);
    if !sizes_ok || !matcher::is_cross_dependent(&system) {
        return Err(Error::invariant(
            "witness candidate failed matcher revalidation".to_string(),
        ));
    }
    Ok(WitnessReport {
        status: WitnessStatus::WitnessFound,
        witness: Some(system),
        nodes_explored: search.nodes,
    })
}

fn enumerate_tuples(
    masks: &[u128],
    s: usize,
    used: u128,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    limit: usize,
) -> Result<()> {
    if current.len() == s {
        if out.len() >= limit {
            return Err(Error::param(
                "too many rainbow tuples for witness search at this scale".to_string(),
            ));
        }
        out.push(current.clone());
        return Ok(());
    }
    for (i, &mask) in masks.iter().enumerate() {
        if mask & used == 0 {
            current.push(i);
            enumerate_tuples(masks, s, used | mask, current, out, limit)?;
            current.pop();
        }
    }
    Ok(())
}

/// Block-index permutations induced by relabeling values within each part
/// and permuting parts. Skipped (identity only) when the group is large.
fn block_relabelings(params: InstanceParams, blocks: &[Block]) -> Vec<Vec<usize>> {
    let (n, k) = (params.n, params.k);
    let group_bound = 200_000f64;
    let fact = |m: usize| (1..=m).fold(1f64, |a, b| a * b as f64);
    if fact(n).powi(k as i32) * fact(k) > group_bound {
        return vec![(0..blocks.len()).collect()];
    }

    let index_of = |b: &Block| blocks.binary_search(b).expect("cube block");
    let value_perms = perms(n);
    let part_perms = perms(k);
    let mut relabelings = Vec::new();
    // odometer over one value permutation per part
    let mut chosen = vec![0usize; k];
    'outer: loop {
        for part_perm in &part_perms {
            // (j, v) -> (part_perm[j], value_perms[chosen[j]][v])
            let mapping: Vec<usize> = blocks
                .iter()
                .map(|b| {
                    let mut relabeled = vec![0usize; k];
                    for e in b.elements() {
                        relabeled[part_perm[e.part]] = value_perms[chosen[e.part]][e.value];
                    }
                    index_of(&Block::from_values(&relabeled))
                })
                .collect();
            relabelings.push(mapping);
        }
        let mut d = 0;
        loop {
            if d == k {
                break 'outer;
            }
            chosen[d] += 1;
            if chosen[d] < value_perms.len() {
                break;
            }
            chosen[d] = 0;
            d += 1;
        }
    }
    relabelings.sort();
    relabelings.dedup();
    relabelings
}

fn perms(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..m).collect();
    permute_rec(&mut items, 0, &mut out);
    out.sort();
    out
}

fn permute_rec(items: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == items.len() {
        out.push(items.clone());
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute_rec(items, start + 1, out);
        items.swap(start, i);
    }
}

struct WitnessSearch {
    params: InstanceParams,
    capacities: Vec<u32>,
    tuples: Vec<Vec<usize>>,
    relabelings: Vec<Vec<usize>>,
    budget: u64,
    nodes: u64,
    visited: HashSet<Vec<u128>>,
    witness: Option<Vec<u128>>,
    out_of_budget: bool,
}

impl WitnessSearch {
    fn run(&mut self, exclusions: &mut Vec<u128>) -> bool {
        if self.nodes >= self.budget {
            self.out_of_budget = true;
            return false;
        }
        self.nodes += 1;

        let canonical = self.canonical_form(exclusions);
        if !self.visited.insert(canonical) {
            return false;
        }

        let unblocked = self
            .tuples
            .iter()
            .find(|tuple| {
                tuple
                    .iter()
                    .enumerate()
                    .all(|(i, &b)| exclusions[i] & (1u128 << b) == 0)
            })
            .cloned();
        let Some(tuple) = unblocked else {
            self.witness = Some(exclusions.clone());
            return true;
        };

        for i in 0..self.params.s {
            if exclusions[i].count_ones() < self.capacities[i] {
                exclusions[i] |= 1u128 << tuple[i];
                if self.run(exclusions) {
                    return true;
                }
                exclusions[i] &= !(1u128 << tuple[i]);
                if self.out_of_budget {
                    return false;
                }
            }
        }
        false
    }

    fn canonical_form(&self, exclusions: &[u128]) -> Vec<u128> {
        let mut best: Option<Vec<u128>> = None;
        for mapping in &self.relabelings {
            let mapped: Vec<u128> = exclusions
                .iter()
                .map(|&mask| {
                    let mut out = 0u128;
                    let mut rest = mask;
                    while rest != 0 {
                        let bit = rest.trailing_zeros() as usize;
                        out |= 1u128 << mapping[bit];
                        rest &= rest - 1;
                    }
                    out
                })
                .collect();
            if best.as_ref().is_none_or(|b| &mapped < b) {
                best = Some(mapped);
            }
        }
        best.unwrap()
    }
}
