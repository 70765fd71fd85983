//! Exact rainbow-matching decisions, Hall-deficiency certificates on the
//! incidence graph of a perfect matching, and the constructive greedy
//! matcher for large n.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::family::{Block, Family, FamilySystem, Hyperplane};
use crate::randmatch::PerfectMatching;

/// One block per family, pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RainbowMatching {
    assignment: Vec<Block>,
}

impl RainbowMatching {
    /// Blocks in family order.
    pub fn assignment(&self) -> &[Block] {
        &self.assignment
    }
}

/// Checks membership (block i belongs to family i) and pairwise
/// disjointness.
pub fn validate_rainbow(system: &FamilySystem, m: &RainbowMatching) -> bool {
    if m.assignment.len() != system.params().s {
        return false;
    }
    for (fam, block) in system.families().iter().zip(&m.assignment) {
        if !fam.contains_block(block) {
            return false;
        }
    }
    for i in 0..m.assignment.len() {
        for j in i + 1..m.assignment.len() {
            if !m.assignment[i].is_disjoint(&m.assignment[j]) {
                return false;
            }
        }
    }
    true
}

/// Complete backtracking search for a rainbow matching.
///
/// Families are processed in ascending size order (ties by index) and
/// blocks in canonical order, so the returned matching is the first one
/// found under that order and the result is deterministic. A per-part
/// bipartite relaxation prunes branches where the remaining families can
/// no longer pick injective values in some single coordinate.
pub fn find_rainbow(system: &FamilySystem) -> Option<RainbowMatching> {
    let params = system.params();
    let mut order: Vec<usize> = (0..params.s).collect();
    order.sort_by_key(|&i| (system.families()[i].len(), i));

    let mut used = vec![false; params.ground_size()];
    let mut chosen: Vec<Option<Block>> = vec![None; params.s];
    if search(system, &order, 0, &mut used, &mut chosen) {
        let assignment = chosen.into_iter().map(Option::unwrap).collect();
        Some(RainbowMatching { assignment })
    } else {
        None
    }
}

fn search(
    system: &FamilySystem,
    order: &[usize],
    depth: usize,
    used: &mut Vec<bool>,
    chosen: &mut Vec<Option<Block>>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    if !relaxation_feasible(system, &order[depth..], used) {
        return false;
    }
    let n = system.params().n;
    let family = &system.families()[order[depth]];
    'blocks: for block in family.blocks() {
        for e in block.elements() {
            if used[e.index(n)] {
                continue 'blocks;
            }
        }
        for e in block.elements() {
            used[e.index(n)] = true;
        }
        chosen[order[depth]] = Some(block.clone());
        if search(system, order, depth + 1, used, chosen) {
            return true;
        }
        chosen[order[depth]] = None;
        for e in block.elements() {
            used[e.index(n)] = false;
        }
    }
    false
}

/// Sound pruning test: for each coordinate, families whose selectable
/// blocks all use that coordinate must be matchable to distinct values.
fn relaxation_feasible(system: &FamilySystem, remaining: &[usize], used: &[bool]) -> bool {
    let params = system.params();
    let (n, k) = (params.n, params.k);

    // candidate value sets per remaining family and coordinate; None marks
    // a family that can avoid the coordinate entirely
    let mut candidates: Vec<Vec<Option<Vec<bool>>>> = Vec::with_capacity(remaining.len());
    for &fi in remaining {
        let family = &system.families()[fi];
        let mut per_coord: Vec<Option<Vec<bool>>> = (0..k).map(|_| Some(vec![false; n])).collect();
        let mut any = false;
        'blocks: for block in family.blocks() {
            for e in block.elements() {
                if used[e.index(n)] {
                    continue 'blocks;
                }
            }
            any = true;
            for (coord, slot) in per_coord.iter_mut().enumerate() {
                match block.value_in_part(coord) {
                    Some(v) => {
                        if let Some(vals) = slot.as_mut() {
                            vals[v] = true;
                        }
                    }
                    // a selectable block without this coordinate frees the family
                    None => *slot = None,
                }
            }
        }
        if !any {
            return false;
        }
        candidates.push(per_coord);
    }

    for coord in 0..k {
        let constrained: Vec<&Vec<bool>> = candidates
            .iter()
            .filter_map(|per_coord| per_coord[coord].as_ref())
            .collect();
        if constrained.len() <= 1 {
            continue;
        }
        if max_bipartite_matching(&constrained, n) < constrained.len() {
            return false;
        }
    }
    true
}

/// Kuhn's augmenting-path algorithm; left side indexed by position in
/// `adjacency`, right side 0..right_size.
fn max_bipartite_matching(adjacency: &[&Vec<bool>], right_size: usize) -> usize {
    let mut matched_right: Vec<Option<usize>> = vec![None; right_size];
    let mut count = 0;
    for left in 0..adjacency.len() {
        let mut visited = vec![false; right_size];
        if augment(adjacency, left, &mut matched_right, &mut visited) {
            count += 1;
        }
    }
    count
}

fn augment(
    adjacency: &[&Vec<bool>],
    left: usize,
    matched_right: &mut Vec<Option<usize>>,
    visited: &mut Vec<bool>,
) -> bool {
    for right in 0..visited.len() {
        if adjacency[left][right] && !visited[right] {
            visited[right] = true;
            if matched_right[right].is_none()
                || augment(adjacency, matched_right[right].unwrap(), matched_right, visited)
            {
                matched_right[right] = Some(left);
                return true;
            }
        }
    }
    false
}

/// True iff the system admits no rainbow matching.
pub fn is_cross_dependent(system: &FamilySystem) -> bool {
    find_rainbow(system).is_none()
}

/// Hall certificate on the bipartite incidence graph between families and
/// the rows of a perfect matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HallCertificate {
    /// A system of distinct representatives: `assignment[i]` is the row
    /// index representing family `i`.
    Sdr(Vec<usize>),
    /// A deficiency witness: the families of `families` see only the rows
    /// in `neighborhood`, and `neighborhood.len() < families.len()`.
    ViolatingSet {
        families: Vec<usize>,
        neighborhood: Vec<usize>,
    },
}

/// Builds the incidence graph of `m` and either saturates all families by
/// augmenting paths or returns the canonical deficiency set: the families
/// reachable by alternating paths from the first unmatched family.
pub fn hall_certificate(system: &FamilySystem, m: &PerfectMatching) -> Result<HallCertificate> {
    let params = system.params();
    if m.n() != params.n || m.k() != params.k {
        return Err(Error::param(format!(
            "matching over n={}, k={} does not fit instance n={}, k={}",
            m.n(),
            m.k(),
            params.n,
            params.k
        )));
    }

    let s = params.s;
    let n = params.n;
    let adjacency: Vec<Vec<bool>> = system
        .families()
        .iter()
        .map(|fam| m.rows().iter().map(|row| fam.contains_block(row)).collect())
        .collect();
    let adj_refs: Vec<&Vec<bool>> = adjacency.iter().collect();

    let mut matched_right: Vec<Option<usize>> = vec![None; n];
    for left in 0..s {
        let mut visited = vec![false; n];
        augment(&adj_refs, left, &mut matched_right, &mut visited);
    }
    let mut matched_left: Vec<Option<usize>> = vec![None; s];
    for (row, fam) in matched_right.iter().enumerate() {
        if let Some(f) = fam {
            matched_left[*f] = Some(row);
        }
    }

    if matched_left.iter().all(Option::is_some) {
        return Ok(HallCertificate::Sdr(
            matched_left.into_iter().map(Option::unwrap).collect(),
        ));
    }

    let start = matched_left.iter().position(Option::is_none).unwrap();
    let mut in_b = vec![false; s];
    let mut in_n = vec![false; n];
    in_b[start] = true;
    let mut frontier = vec![start];
    while let Some(fam) = frontier.pop() {
        for row in 0..n {
            if adjacency[fam][row] && !in_n[row] {
                in_n[row] = true;
                if let Some(owner) = matched_right[row] {
                    if !in_b[owner] {
                        in_b[owner] = true;
                        frontier.push(owner);
                    }
                }
            }
        }
    }
    let families: Vec<usize> = (0..s).filter(|&i| in_b[i]).collect();
    let neighborhood: Vec<usize> = (0..n).filter(|&r| in_n[r]).collect();
    debug_assert!(neighborhood.len() < families.len());
    Ok(HallCertificate::ViolatingSet { families, neighborhood })
}

/// One absorbed hyperplane together with the blocks it removed from the
/// working family at absorption time.
#[derive(Debug, Clone)]
pub struct AbsorbedHyperplane {
    pub hyperplane: Hyperplane,
    pub blocks: Vec<Block>,
}

/// Decomposition of a family into absorbed full hyperplanes and a residual
/// whose per-hyperplane counts all sit below the absorption threshold.
#[derive(Debug, Clone)]
pub struct AbsorptionDecomposition {
    pub absorbed: Vec<AbsorbedHyperplane>,
    pub residual: Family,
}

impl AbsorptionDecomposition {
    pub fn t(&self) -> usize {
        self.absorbed.len()
    }

    pub fn hyperplanes(&self) -> Vec<Hyperplane> {
        self.absorbed.iter().map(|a| a.hyperplane).collect()
    }
}

/// Absorption threshold `(s-1)(k-1) n^{k-2}`.
pub fn absorption_threshold(n: usize, k: usize, s: usize) -> f64 {
    ((s - 1) * (k - 1)) as f64 * (n as f64).powi(k as i32 - 2)
}

/// Repeatedly removes the first hyperplane (coordinate then value
/// ascending) whose intersection with the working family exceeds
/// `(s-1)(k-1) n^{k-2}`, recording it, until no hyperplane qualifies.
pub fn absorb_hyperplanes(family: &Family, s: usize) -> Result<AbsorptionDecomposition> {
    if !family.partite() {
        return Err(Error::param("hyperplane absorption requires a partite family".to_string()));
    }
    let params = family.params();
    let (n, k) = (params.n, params.k);
    let threshold = absorption_threshold(n, k, s);

    let mut working: BTreeSet<Block> = family.blocks().cloned().collect();
    let mut counts = vec![0u64; params.ground_size()];
    for b in &working {
        for e in b.elements() {
            counts[e.index(n)] += 1;
        }
    }

    let mut absorbed = Vec::new();
    loop {
        let mut hit = None;
        'scan: for coord in 0..k {
            for value in 0..n {
                if counts[coord * n + value] as f64 > threshold {
                    hit = Some(Hyperplane::new(coord, value));
                    break 'scan;
                }
            }
        }
        let Some(h) = hit else { break };
        let removed: Vec<Block> = working.iter().filter(|b| h.contains_block(b)).cloned().collect();
        for b in &removed {
            working.remove(b);
            for e in b.elements() {
                counts[e.index(n)] -= 1;
            }
        }
        absorbed.push(AbsorbedHyperplane { hyperplane: h, blocks: removed });
    }

    let residual = Family::new(params, working)?;
    Ok(AbsorptionDecomposition { absorbed, residual })
}

/// Greedy construction of a rainbow matching for `n >= k^2 s^2` and
/// `|F_i| > min(s-1, i) n^{k-1}`.
///
/// Each family is first decomposed by hyperplane absorption. Families with
/// at least as many absorbed hyperplanes as their index receive distinct
/// hyperplanes (first fit in index order); the last family picks a block
/// outside all selected hyperplanes, and the rest are chosen downward,
/// hyperplane-indexed families from their full hyperplane and the others
/// from their residual, always taking the first canonical block that is
/// disjoint from the blocks chosen so far and avoids the other selected
/// hyperplanes. Blocks picked from a full hyperplane may fall outside the
/// original family; those are repaired from the absorption-time blocks of
/// the same hyperplane, which stays possible because every other chosen
/// block avoids that hyperplane. The result is validated before return.
pub fn greedy_large_n(system: &FamilySystem) -> Result<RainbowMatching> {
    let params = system.params();
    let (n, k, s) = (params.n, params.k, params.s);
    if n < k * k * s * s {
        return Err(Error::param(format!(
            "greedy matcher preconditions not met: requires n >= k^2 s^2, got n={n}, k={k}, s={s}"
        )));
    }
    let nk1 = (n as f64).powi(k as i32 - 1);
    for (i, fam) in system.families().iter().enumerate() {
        if !fam.partite() {
            return Err(Error::param("greedy matcher requires partite families".to_string()));
        }
        let bound = (s - 1).min(i + 1) as f64 * nk1;
        if fam.len() as f64 <= bound {
            return Err(Error::param(format!(
                "greedy matcher preconditions not met: |F_{}| = {} <= min(s-1, {}) n^(k-1) = {}",
                i + 1,
                fam.len(),
                i + 1,
                bound
            )));
        }
    }

    let decomps: Vec<AbsorptionDecomposition> = system
        .families()
        .iter()
        .map(|f| absorb_hyperplanes(f, s))
        .collect::<Result<_>>()?;

    // distinct hyperplanes, first fit in index order, for families i < s
    // with t_i >= i (1-based)
    let mut selected: Vec<Option<Hyperplane>> = vec![None; s];
    let mut taken: BTreeSet<Hyperplane> = BTreeSet::new();
    for i in 0..s.saturating_sub(1) {
        if decomps[i].t() > i {
            let h = decomps[i]
                .absorbed
                .iter()
                .map(|a| a.hyperplane)
                .find(|h| !taken.contains(h))
                .ok_or_else(|| {
                    Error::invariant("no unused absorbed hyperplane available".to_string())
                })?;
            taken.insert(h);
            selected[i] = Some(h);
        }
    }
    let all_selected: Vec<Hyperplane> = taken.iter().copied().collect();

    let mut chosen: Vec<Option<Block>> = vec![None; s];

    // last family: first block outside every selected hyperplane
    let last = system.families()[s - 1]
        .blocks()
        .find(|b| all_selected.iter().all(|h| !h.contains_block(b)))
        .ok_or_else(|| Error::invariant("last family exhausted by selected hyperplanes".to_string()))?;
    chosen[s - 1] = Some(last.clone());

    for i in (0..s.saturating_sub(1)).rev() {
        let avoid: Vec<Hyperplane> = all_selected
            .iter()
            .copied()
            .filter(|h| Some(*h) != selected[i])
            .collect();
        let candidate = match selected[i] {
            Some(h) => {
                let full = crate::family::hyperplane_family(params, h)?;
                first_fitting(&full, &chosen, &avoid)
            }
            None => first_fitting(&decomps[i].residual, &chosen, &avoid),
        };
        chosen[i] = Some(candidate.ok_or_else(|| {
            Error::invariant(format!("no extension for family {} in greedy construction", i + 1))
        })?);
    }

    // repair: replace blocks that fell outside their family with
    // absorption-time blocks of the same hyperplane
    for i in 0..s {
        let current = chosen[i].clone().unwrap();
        if system.families()[i].contains_block(&current) {
            continue;
        }
        let Some(h) = selected[i] else {
            return Err(Error::invariant(format!(
                "block for family {} left its family without a hyperplane",
                i + 1
            )));
        };
        let entry = decomps[i]
            .absorbed
            .iter()
            .find(|a| a.hyperplane == h)
            .expect("selected hyperplane was absorbed");
        let replacement = entry
            .blocks
            .iter()
            .find(|b| {
                chosen
                    .iter()
                    .enumerate()
                    .all(|(j, c)| j == i || b.is_disjoint(c.as_ref().unwrap()))
            })
            .ok_or_else(|| {
                Error::invariant(format!("no in-family repair for family {}", i + 1))
            })?;
        chosen[i] = Some(replacement.clone());
    }

    let matching = RainbowMatching {
        assignment: chosen.into_iter().map(Option::unwrap).collect(),
    };
    if !validate_rainbow(system, &matching) {
        return Err(Error::invariant("greedy construction produced an invalid matching".to_string()));
    }
    Ok(matching)
}

fn first_fitting(family: &Family, chosen: &[Option<Block>], avoid: &[Hyperplane]) -> Option<Block> {
    family
        .blocks()
        .find(|b| {
            avoid.iter().all(|h| !h.contains_block(b))
                && chosen
                    .iter()
                    .flatten()
                    .all(|c| b.is_disjoint(c))
        })
        .cloned()
}

/// Blind enumeration over all s-tuples; used as the completeness oracle in
/// tests and the witness-search validator.
pub fn oracle_has_rainbow(system: &FamilySystem) -> bool {
    let n = system.params().n;
    let mut used = vec![false; system.params().ground_size()];
    oracle_search(system, 0, &mut used, n)
}

fn oracle_search(system: &FamilySystem, depth: usize, used: &mut Vec<bool>, n: usize) -> bool {
    if depth == system.params().s {
        return true;
    }
    'blocks: for block in system.families()[depth].blocks() {
        for e in block.elements() {
            if used[e.index(n)] {
                continue 'blocks;
            }
        }
        for e in block.elements() {
            used[e.index(n)] = true;
        }
        if oracle_search(system, depth + 1, used, n) {
            return true;
        }
        for e in block.elements() {
            used[e.index(n)] = false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{GroundElement, InstanceParams};
    use crate::sequences::pinned_block_system;
    use rand::seq::index::sample as index_sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, k: usize, s: usize) -> InstanceParams {
        InstanceParams::new(n, k, s).unwrap()
    }

    fn tuples(p: InstanceParams, vals: &[&[usize]]) -> Family {
        Family::new(p, vals.iter().map(|v| Block::from_values(v))).unwrap()
    }

    #[test]
    fn finds_the_only_disjoint_pair() {
        let p = params(2, 2, 2);
        let f = tuples(p, &[&[0, 0], &[1, 1]]);
        let sys = FamilySystem::new(p, vec![f.clone(), f], "twin").unwrap();
        let m = find_rainbow(&sys).unwrap();
        assert!(validate_rainbow(&sys, &m));
        assert!(!is_cross_dependent(&sys));
    }

    #[test]
    fn three_families_over_two_values_never_match() {
        // s > n forces cross-dependence
        let p = params(2, 2, 3);
        let f = Family::full_cube(p).unwrap();
        let sys = FamilySystem::new(p, vec![f.clone(), f.clone(), f], "full").unwrap();
        assert!(is_cross_dependent(&sys));
    }

    #[test]
    fn pinned_system_is_cross_dependent() {
        let sys = pinned_block_system(params(4, 2, 3), 0).unwrap();
        assert!(find_rainbow(&sys).is_none());
        assert!(is_cross_dependent(&sys));
        // blind enumeration over all 2*9*9 triples agrees
        assert!(!oracle_has_rainbow(&sys));
    }

    #[test]
    fn small_singleton_system_is_cross_dependent() {
        let p = params(2, 2, 2);
        let f1 = tuples(p, &[&[0, 0]]);
        let f2 = tuples(p, &[&[0, 0], &[0, 1], &[1, 0]]);
        let sys = FamilySystem::new(p, vec![f1, f2], "corner").unwrap();
        assert!(is_cross_dependent(&sys));
    }

    #[test]
    fn empty_family_means_absent() {
        let p = params(2, 2, 2);
        let sys = FamilySystem::new(
            p,
            vec![Family::empty(p), Family::full_cube(p).unwrap()],
            "one empty",
        )
        .unwrap();
        assert!(find_rainbow(&sys).is_none());
    }

    #[test]
    fn agrees_with_blind_oracle_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..300 {
            let n = 2 + trial % 2;
            let k = 2 + (trial / 2) % 2;
            let s = 2 + (trial / 4) % 3;
            let p = params(n, k, s);
            let cube: Vec<Block> = Family::full_cube(p).unwrap().blocks().cloned().collect();
            let mut families = Vec::new();
            for _ in 0..s {
                let size = 1 + index_sample(&mut rng, cube.len(), 1).index(0);
                let picks = index_sample(&mut rng, cube.len(), size.min(cube.len()));
                families.push(
                    Family::new(p, picks.iter().map(|i| cube[i].clone())).unwrap(),
                );
            }
            let sys = FamilySystem::new(p, families, "random").unwrap();
            assert_eq!(find_rainbow(&sys).is_some(), oracle_has_rainbow(&sys));
            if let Some(m) = find_rainbow(&sys) {
                assert!(validate_rainbow(&sys, &m));
            }
        }
    }

    #[test]
    fn general_blocks_are_supported() {
        // families of size <= 2 blocks, as used by spread cores
        let p = params(3, 3, 2);
        let b1 = Block::new(vec![GroundElement::new(0, 0)]).unwrap();
        let b2 = Block::new(vec![GroundElement::new(0, 0), GroundElement::new(1, 1)]).unwrap();
        let b3 = Block::new(vec![GroundElement::new(0, 1)]).unwrap();
        let f1 = Family::new(p, vec![b1, b2]).unwrap();
        let f2 = Family::new(p, vec![b3]).unwrap();
        let sys = FamilySystem::new(p, vec![f1, f2], "cores").unwrap();
        assert!(find_rainbow(&sys).is_some());
    }

    #[test]
    fn hall_pigeonhole_violation() {
        // two families incident only to one common row
        let p = params(2, 2, 2);
        let f = tuples(p, &[&[0, 0]]);
        let sys = FamilySystem::new(p, vec![f.clone(), f], "pigeon").unwrap();
        let m = PerfectMatching::identity(2, 2);
        match hall_certificate(&sys, &m).unwrap() {
            HallCertificate::ViolatingSet { families, neighborhood } => {
                assert_eq!(families, vec![0, 1]);
                assert_eq!(neighborhood.len(), 1);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn hall_identity_incidence_gives_sdr() {
        let p = params(3, 2, 3);
        let fams: Vec<Family> = (0..3)
            .map(|i| tuples(p, &[&[i, i]]))
            .collect();
        let sys = FamilySystem::new(p, fams, "diag").unwrap();
        let m = PerfectMatching::identity(3, 2);
        match hall_certificate(&sys, &m).unwrap() {
            HallCertificate::Sdr(assignment) => assert_eq!(assignment, vec![0, 1, 2]),
            other => panic!("expected SDR, got {other:?}"),
        }
    }

    #[test]
    fn hall_on_pinned_system_with_diagonal_matching() {
        let sys = pinned_block_system(params(4, 2, 3), 0).unwrap();
        let m = PerfectMatching::identity(4, 2);
        match hall_certificate(&sys, &m).unwrap() {
            HallCertificate::ViolatingSet { families, neighborhood } => {
                assert_eq!(families, vec![0, 1, 2]);
                assert_eq!(neighborhood.len(), 2);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn hall_rejects_mismatched_matching() {
        let sys = pinned_block_system(params(4, 2, 3), 0).unwrap();
        let m = PerfectMatching::identity(3, 2);
        assert!(hall_certificate(&sys, &m).is_err());
    }

    #[test]
    fn hall_violation_recounts_on_random_systems() {
        // deficiency sets must be deficient, with the neighborhood equal to
        // the union of incident rows
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = params(4, 2, 3);
        let cube: Vec<Block> = Family::full_cube(p).unwrap().blocks().cloned().collect();
        let m = PerfectMatching::identity(4, 2);
        for _ in 0..200 {
            let fams: Vec<Family> = (0..3)
                .map(|_| {
                    let size = 1 + index_sample(&mut rng, 6, 1).index(0);
                    let picks = index_sample(&mut rng, cube.len(), size);
                    Family::new(p, picks.iter().map(|i| cube[i].clone())).unwrap()
                })
                .collect();
            let sys = FamilySystem::new(p, fams, "hall random").unwrap();
            if let HallCertificate::ViolatingSet { families, neighborhood } =
                hall_certificate(&sys, &m).unwrap()
            {
                assert!(neighborhood.len() < families.len());
                let mut union = Vec::new();
                for &i in &families {
                    for (row, b) in m.rows().iter().enumerate() {
                        if sys.families()[i].contains_block(b) {
                            union.push(row);
                        }
                    }
                }
                union.sort();
                union.dedup();
                assert_eq!(union, neighborhood);
            }
        }
    }

    #[test]
    fn absorb_full_hyperplane() {
        let p = params(16, 2, 1);
        let f = crate::family::hyperplane_family(p, Hyperplane::new(0, 0)).unwrap();
        let d = absorb_hyperplanes(&f, 2).unwrap();
        assert_eq!(d.t(), 1);
        assert_eq!(d.hyperplanes(), vec![Hyperplane::new(0, 0)]);
        assert!(d.residual.is_empty());
    }

    #[test]
    fn absorb_fixpoint_below_threshold() {
        let p = params(4, 2, 3);
        // one block per hyperplane value: all counts 1 <= threshold 2
        let f = tuples(p, &[&[0, 0], &[1, 1], &[2, 2], &[3, 3]]);
        let d = absorb_hyperplanes(&f, 3).unwrap();
        assert_eq!(d.t(), 0);
        assert_eq!(d.residual, f);
    }

    #[test]
    fn absorb_prefix_family() {
        let p = params(16, 2, 1);
        let f = Family::product(p, &[vec![0], (0..16).collect()]).unwrap();
        let d = absorb_hyperplanes(&f, 2).unwrap();
        assert_eq!(d.hyperplanes(), vec![Hyperplane::new(0, 0)]);
        assert!(d.residual.is_empty());
        // residual obeys the per-hyperplane bound by recount
        let thr = absorption_threshold(16, 2, 2);
        for coord in 0..2 {
            for value in 0..16 {
                assert!(d.residual.hyperplane_count(coord, value) as f64 <= thr);
            }
        }
    }

    #[test]
    fn greedy_on_full_families() {
        let p = params(16, 2, 2);
        let f = Family::full_cube(p).unwrap();
        let sys = FamilySystem::new(p, vec![f.clone(), f], "full").unwrap();
        let m = greedy_large_n(&sys).unwrap();
        assert!(validate_rainbow(&sys, &m));
    }

    #[test]
    fn greedy_rejects_small_n() {
        let p = params(15, 2, 2);
        let f = Family::full_cube(p).unwrap();
        let sys = FamilySystem::new(p, vec![f.clone(), f], "full").unwrap();
        let err = greedy_large_n(&sys).unwrap_err();
        assert!(matches!(err, Error::Param(_)));
    }

    #[test]
    fn greedy_on_random_systems() {
        let p = params(16, 2, 2);
        let cube: Vec<Block> = Family::full_cube(p).unwrap().blocks().cloned().collect();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fams: Vec<Family> = (0..2)
                .map(|_| {
                    let picks = index_sample(&mut rng, cube.len(), 17);
                    Family::new(p, picks.iter().map(|i| cube[i].clone())).unwrap()
                })
                .collect();
            let sys = FamilySystem::new(p, fams, "random17").unwrap();
            let m = greedy_large_n(&sys).unwrap();
            assert!(validate_rainbow(&sys, &m), "seed {seed}");
        }
    }
}
