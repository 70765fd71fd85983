//! r-spread testing and the spread-approximation engine: iterated
//! extraction of small cores with r-spread links, plus the degree-reduction
//! and size-cap postprocessing of the resulting core collections.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::family::{Block, Family, FamilySystem, GroundElement, InstanceParams};
use crate::matcher;

#[derive(Debug, Clone)]
pub struct SpreadCheck {
    pub is_spread: bool,
    /// First violating restriction set in canonical order (larger sets
    /// first, then lexicographic), if any.
    pub violator: Option<Block>,
}

/// Tests `|F(X)| <= r^{-|X|} |F|` over every nonempty `X` contained in a
/// member block; only such X can have a nonempty link.
pub fn is_r_spread(family: &Family, r: f64) -> Result<SpreadCheck> {
    if r <= 1.0 {
        return Err(Error::param(format!("spread parameter must exceed 1, got {r}")));
    }
    if family.is_empty() {
        return Err(Error::param("spreadness is undefined for an empty family".to_string()));
    }
    let size = family.len() as f64;
    let counts = superset_counts(family.block_set());
    let mut candidates: Vec<(&Block, u64)> = counts.iter().map(|(b, &c)| (b, c)).collect();
    candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(b.0)));
    for (x, count) in candidates {
        if count as f64 > r.powi(-(x.len() as i32)) * size {
            return Ok(SpreadCheck { is_spread: false, violator: Some(x.clone()) });
        }
    }
    Ok(SpreadCheck { is_spread: true, violator: None })
}

/// Number of member blocks containing each nonempty subset of a member
/// block; `counts[X] = |F[X]| = |F(X)|`.
fn superset_counts(blocks: &BTreeSet<Block>) -> BTreeMap<Block, u64> {
    let mut counts: BTreeMap<Block, u64> = BTreeMap::new();
    for b in blocks {
        let elems = b.elements();
        for mask in 1u32..(1 << elems.len()) {
            let subset: Vec<GroundElement> = (0..elems.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| elems[i])
                .collect();
            *counts.entry(Block::new(subset).expect("subset of a block")).or_default() += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The working family ran empty.
    Exhausted,
    /// Every inclusion-maximal qualifying set had this size (> 2).
    LargeCore(usize),
}

#[derive(Debug, Clone)]
pub struct ApproxEntry {
    pub core: Block,
    /// The blocks containing the core at the round it was selected.
    pub attached: Family,
}

/// Result of the approximation procedure: cores of size at most 2 with
/// attached subfamilies whose links are r-spread, plus a residual.
#[derive(Debug, Clone)]
pub struct SpreadApproximation {
    pub r: f64,
    pub entries: Vec<ApproxEntry>,
    pub residual: Family,
    pub stop: StopReason,
    pub source: Family,
    /// Set when a round selected the empty core because no nonempty set
    /// qualified (the working family was already r-spread).
    pub empty_core_event: bool,
}

impl SpreadApproximation {
    pub fn cores(&self) -> CoreCollection {
        self.entries.iter().map(|e| e.core.clone()).collect()
    }
}

/// A family's core collection after approximation and postprocessing.
pub type CoreCollection = BTreeSet<Block>;

/// Iterates the extraction procedure: among all sets with
/// `|F'(S)| >= r^{-|S|} |F'|` that have no qualifying strict superset,
/// select the smallest (ties lexicographic); stop when the selection
/// exceeds size 2 or nothing is left. The empty set always qualifies but
/// is never maximal while a nonempty set qualifies; when it is selected,
/// the working family is attached to it wholesale and the event recorded.
pub fn spread_approximate(family: &Family, r: f64) -> Result<SpreadApproximation> {
    if r <= 1.0 {
        return Err(Error::param(format!("spread parameter must exceed 1, got {r}")));
    }
    let params = family.params();
    let mut working: BTreeSet<Block> = family.block_set().clone();
    let mut entries: Vec<ApproxEntry> = Vec::new();
    let mut empty_core_event = false;

    let stop = loop {
        if working.is_empty() {
            break StopReason::Exhausted;
        }
        let size = working.len() as f64;
        let counts = superset_counts(&working);
        let qualifying: Vec<&Block> = counts
            .iter()
            .filter(|(x, &c)| c as f64 >= r.powi(-(x.len() as i32)) * size)
            .map(|(x, _)| x)
            .collect();

        let selected: Block = if qualifying.is_empty() {
            empty_core_event = true;
            Block::empty()
        } else {
            let mut maximal: Vec<&Block> = qualifying
                .iter()
                .filter(|x| {
                    !qualifying
                        .iter()
                        .any(|y| y.len() > x.len() && y.is_superset_of(x))
                })
                .copied()
                .collect();
            maximal.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
            maximal[0].clone()
        };

        if selected.len() > 2 {
            break StopReason::LargeCore(selected.len());
        }
        let attached: Vec<Block> = working
            .iter()
            .filter(|b| b.is_superset_of(&selected))
            .cloned()
            .collect();
        for b in &attached {
            working.remove(b);
        }
        entries.push(ApproxEntry { core: selected, attached: Family::new(params, attached)? });
    };

    let approx = SpreadApproximation {
        r,
        entries,
        residual: Family::new(params, working)?,
        stop,
        source: family.clone(),
        empty_core_event,
    };

    // coverage and link spreadness are structural guarantees; fail loudly
    // rather than return a broken decomposition
    let report = check_approximation(family, &approx);
    if !report.partition_ok {
        return Err(Error::invariant("approximation does not partition the family".to_string()));
    }
    if !report.links_spread {
        return Err(Error::invariant("an attached link is not r-spread".to_string()));
    }
    if matches!(report.residual_bound, BoundStatus::Violated { .. }) {
        return Err(Error::invariant("residual exceeds the r^3 n^(k-3) bound".to_string()));
    }
    Ok(approx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundStatus {
    Holds { residual: usize, bound: f64 },
    /// The stop was not a large core, the family is not partite, or n < r.
    NotApplicable,
    Violated { residual: usize, bound: f64 },
}

#[derive(Debug, Clone)]
pub struct ApproxReport {
    /// Every source block sits in some attached family or the residual.
    pub coverage_ok: bool,
    /// The attached families and the residual partition the source.
    pub partition_ok: bool,
    pub residual_bound: BoundStatus,
    /// Every `restrict_link(attached, core)` passes `is_r_spread`.
    pub links_spread: bool,
    pub failures: Vec<String>,
}

impl ApproxReport {
    pub fn all_ok(&self) -> bool {
        self.coverage_ok
            && self.partition_ok
            && self.links_spread
            && !matches!(self.residual_bound, BoundStatus::Violated { .. })
    }
}

/// Independent recount of the approximation properties.
pub fn check_approximation(family: &Family, approx: &SpreadApproximation) -> ApproxReport {
    let mut failures = Vec::new();

    let mut seen: BTreeMap<&Block, usize> = BTreeMap::new();
    for entry in &approx.entries {
        for b in entry.attached.blocks() {
            *seen.entry(b).or_default() += 1;
            if !b.is_superset_of(&entry.core) {
                failures.push(format!("block {b} does not contain its core {}", entry.core));
            }
        }
    }
    for b in approx.residual.blocks() {
        *seen.entry(b).or_default() += 1;
    }
    let coverage_ok = family.blocks().all(|b| seen.contains_key(b));
    if !coverage_ok {
        failures.push("some source block is neither attached nor residual".to_string());
    }
    let partition_ok = coverage_ok
        && seen.len() == family.len()
        && seen.values().all(|&c| c == 1)
        && seen.keys().all(|b| family.contains_block(b));
    if coverage_ok && !partition_ok {
        failures.push("blocks are attributed more than once or from outside".to_string());
    }

    let params = family.params();
    let residual_bound = match approx.stop {
        StopReason::LargeCore(_) if family.partite() && params.n as f64 >= approx.r => {
            let bound = approx.r.powi(3) * (params.n as f64).powi(params.k as i32 - 3);
            if approx.residual.len() as f64 <= bound {
                BoundStatus::Holds { residual: approx.residual.len(), bound }
            } else {
                failures.push(format!(
                    "residual {} exceeds bound {bound}",
                    approx.residual.len()
                ));
                BoundStatus::Violated { residual: approx.residual.len(), bound }
            }
        }
        _ => BoundStatus::NotApplicable,
    };

    let mut links_spread = true;
    for entry in &approx.entries {
        let link = match entry.attached.restrict_link(&entry.core) {
            Ok(l) => l,
            Err(e) => {
                links_spread = false;
                failures.push(format!("link of {} failed: {e}", entry.core));
                continue;
            }
        };
        match is_r_spread(&link, approx.r) {
            Ok(check) if check.is_spread => {}
            Ok(check) => {
                links_spread = false;
                failures.push(format!(
                    "link of {} is not {}-spread (violator {})",
                    entry.core,
                    approx.r,
                    check.violator.map(|b| b.to_string()).unwrap_or_default()
                ));
            }
            Err(e) => {
                links_spread = false;
                failures.push(format!("link of {} unverifiable: {e}", entry.core));
            }
        }
    }

    ApproxReport { coverage_ok, partition_ok, residual_bound, links_spread, failures }
}

/// While some ground element lies in at least `2s-1` two-element cores of a
/// collection, promote it to a singleton core and drop the two-element
/// cores through it; finally drop two-element cores containing an existing
/// singleton.
pub fn degree_reduce(collections: &mut [CoreCollection], s: usize) {
    for cores in collections.iter_mut() {
        loop {
            let mut degrees: BTreeMap<GroundElement, usize> = BTreeMap::new();
            for core in cores.iter().filter(|c| c.len() == 2) {
                for &e in core.elements() {
                    *degrees.entry(e).or_default() += 1;
                }
            }
            let Some((&element, _)) = degrees.iter().find(|(_, &d)| d >= 2 * s - 1) else {
                break;
            };
            cores.retain(|c| !(c.len() == 2 && c.contains(element)));
            cores.insert(Block::new(vec![element]).expect("singleton"));
        }
        let singletons: Vec<GroundElement> = cores
            .iter()
            .filter(|c| c.len() == 1)
            .map(|c| c.elements()[0])
            .collect();
        cores.retain(|c| c.len() != 2 || !singletons.iter().any(|&e| c.contains(e)));
    }
}

/// Replaces any collection whose two-element core count exceeds
/// `4 (s-1)^2` with the single empty core.
pub fn cap_replace(collections: &mut [CoreCollection], s: usize) {
    let cap = 4 * (s - 1) * (s - 1);
    for cores in collections.iter_mut() {
        let pairs = cores.iter().filter(|c| c.len() == 2).count();
        if pairs > cap {
            cores.clear();
            cores.insert(Block::empty());
        }
    }
}

/// Decides cross-dependence of core collections with the exact matcher.
pub fn cores_cross_dependent(
    params: InstanceParams,
    collections: &[CoreCollection],
) -> Result<bool> {
    let core_params = InstanceParams::new(params.n, params.k, collections.len())?;
    let families: Vec<Family> = collections
        .iter()
        .map(|cores| Family::new(core_params, cores.iter().cloned()))
        .collect::<Result<_>>()?;
    let system = FamilySystem::new(core_params, families, "core collections")?;
    Ok(matcher::is_cross_dependent(&system))
}
