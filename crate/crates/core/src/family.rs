//! Ground set, blocks, families, and family systems over `[k] x [n]`.
//!
//! Indices are 0-based internally; the document serializer and the CLI are
//! the 1-based boundary. Blocks keep their elements sorted by part so that
//! equality is structural and iteration order is canonical everywhere.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Instance parameters: part size `n`, number of parts `k`, number of
/// families `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstanceParams {
    pub n: usize,
    pub k: usize,
    pub s: usize,
}

impl InstanceParams {
    pub fn new(n: usize, k: usize, s: usize) -> Result<Self> {
        if n < 1 || k < 1 || s < 1 {
            return Err(Error::param(format!(
                "instance parameters must be positive, got n={n}, k={k}, s={s}"
            )));
        }
        Ok(InstanceParams { n, k, s })
    }

    /// Number of ground elements, `k * n`.
    pub fn ground_size(&self) -> usize {
        self.k * self.n
    }

    /// `n^k` if it fits in a usize.
    pub fn cube_size(&self) -> Option<usize> {
        self.n.checked_pow(self.k as u32)
    }
}

/// One element of the ground set: value `value` in part `part` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundElement {
    pub part: usize,
    pub value: usize,
}

impl GroundElement {
    pub fn new(part: usize, value: usize) -> Self {
        GroundElement { part, value }
    }

    /// Flat index into a `k * n` table.
    pub fn index(&self, n: usize) -> usize {
        self.part * n + self.value
    }

    fn check_bounds(&self, params: &InstanceParams) -> Result<()> {
        if self.part >= params.k || self.value >= params.n {
            return Err(Error::param(format!(
                "ground element {} out of range for n={}, k={}",
                self, params.n, params.k
            )));
        }
        Ok(())
    }
}

impl fmt::Display for GroundElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 1-based on display, matching the document format
        write!(f, "({},{})", self.part + 1, self.value + 1)
    }
}

/// A set of ground elements with at most one element per part.
///
/// Partite-complete blocks (exactly one element in every part) are the
/// tuples of `[n]^k`; smaller blocks arise as restriction sets and as the
/// cores of spread approximations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    elements: Vec<GroundElement>,
}

impl Block {
    pub fn new(mut elements: Vec<GroundElement>) -> Result<Self> {
        elements.sort();
        for pair in elements.windows(2) {
            if pair[0].part == pair[1].part {
                return Err(Error::validation(format!(
                    "block has two elements in part {}",
                    pair[0].part + 1
                )));
            }
        }
        Ok(Block { elements })
    }

    pub fn empty() -> Self {
        Block { elements: Vec::new() }
    }

    /// Partite tuple with `values[j]` in part `j`.
    pub fn from_values(values: &[usize]) -> Self {
        Block {
            elements: values
                .iter()
                .enumerate()
                .map(|(part, &value)| GroundElement::new(part, value))
                .collect(),
        }
    }

    pub fn elements(&self) -> &[GroundElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, e: GroundElement) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    /// Value this block takes in `part`, if any.
    pub fn value_in_part(&self, part: usize) -> Option<usize> {
        self.elements
            .iter()
            .find(|e| e.part == part)
            .map(|e| e.value)
    }

    pub fn is_superset_of(&self, other: &Block) -> bool {
        other.elements.iter().all(|&e| self.contains(e))
    }

    pub fn is_disjoint(&self, other: &Block) -> bool {
        // merge scan over the two sorted element lists
        let (mut i, mut j) = (0, 0);
        while i < self.elements.len() && j < other.elements.len() {
            match self.elements[i].cmp(&other.elements[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Set difference `self \ other`.
    pub fn minus(&self, other: &Block) -> Block {
        Block {
            elements: self
                .elements
                .iter()
                .copied()
                .filter(|e| !other.contains(*e))
                .collect(),
        }
    }

    /// Set intersection.
    pub fn intersect(&self, other: &Block) -> Block {
        Block {
            elements: self
                .elements
                .iter()
                .copied()
                .filter(|e| other.contains(*e))
                .collect(),
        }
    }

    /// Union; fails when the two blocks collide in a part.
    pub fn union(&self, other: &Block) -> Result<Block> {
        let mut elements = self.elements.clone();
        elements.extend(other.elements.iter().copied());
        Block::new(elements)
    }

    pub fn is_partite_complete(&self, k: usize) -> bool {
        self.elements.len() == k
    }

    fn check_bounds(&self, params: &InstanceParams) -> Result<()> {
        for e in &self.elements {
            e.check_bounds(params)?;
        }
        Ok(())
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e)?;
        }
        write!(f, "}}")
    }
}

/// The hyperplane `H_i(a)`: all tuples whose coordinate `coord` equals
/// `value` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hyperplane {
    pub coord: usize,
    pub value: usize,
}

impl Hyperplane {
    pub fn new(coord: usize, value: usize) -> Self {
        Hyperplane { coord, value }
    }

    pub fn check_bounds(&self, params: &InstanceParams) -> Result<()> {
        if self.coord >= params.k || self.value >= params.n {
            return Err(Error::param(format!(
                "hyperplane ({},{}) out of range for n={}, k={}",
                self.coord + 1,
                self.value + 1,
                params.n,
                params.k
            )));
        }
        Ok(())
    }

    pub fn contains_block(&self, block: &Block) -> bool {
        block.value_in_part(self.coord) == Some(self.value)
    }
}

/// A finite set of blocks over a common ground set.
///
/// The partite flag is inferred on construction (every block complete; an
/// empty family counts as partite). A per-hyperplane count index
/// (`|H_j(a) ∩ F|` for all j, a) is kept alongside the blocks since the
/// classifier, the absorber, and the spread engine all query it heavily.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    params: InstanceParams,
    blocks: BTreeSet<Block>,
    partite: bool,
    counts: Vec<u64>,
}

impl Family {
    pub fn new(params: InstanceParams, blocks: impl IntoIterator<Item = Block>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for b in blocks {
            b.check_bounds(&params)?;
            set.insert(b);
        }
        Ok(Self::from_checked(params, set))
    }

    pub(crate) fn from_checked(params: InstanceParams, blocks: BTreeSet<Block>) -> Self {
        let partite = blocks.iter().all(|b| b.is_partite_complete(params.k));
        let mut counts = vec![0u64; params.ground_size()];
        for b in &blocks {
            for e in b.elements() {
                counts[e.index(params.n)] += 1;
            }
        }
        Family { params, blocks, partite, counts }
    }

    pub fn empty(params: InstanceParams) -> Self {
        Self::from_checked(params, BTreeSet::new())
    }

    /// The full cube `[n]^k`.
    pub fn full_cube(params: InstanceParams) -> Result<Self> {
        let ranges: Vec<Vec<usize>> = (0..params.k).map(|_| (0..params.n).collect()).collect();
        Family::product(params, &ranges)
    }

    /// Cartesian product family: one value per part drawn from
    /// `per_part[j]`. Used for the prefix families `[a] x [b] x [n]^{k-2}`.
    pub fn product(params: InstanceParams, per_part: &[Vec<usize>]) -> Result<Self> {
        if per_part.len() != params.k {
            return Err(Error::param(format!(
                "product family needs {} value lists, got {}",
                params.k,
                per_part.len()
            )));
        }
        let size: usize = per_part.iter().map(|v| v.len()).product();
        if size > 20_000_000 {
            return Err(Error::param(format!(
                "product family of size {size} exceeds the desk-scale limit"
            )));
        }
        let mut blocks = BTreeSet::new();
        let mut current = vec![0usize; params.k];
        build_product(&mut blocks, per_part, &mut current, 0);
        for b in &blocks {
            b.check_bounds(&params)?;
        }
        Ok(Self::from_checked(params, blocks))
    }

    pub fn params(&self) -> InstanceParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn partite(&self) -> bool {
        self.partite
    }

    /// Blocks in canonical (lexicographic) order.
    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter()
    }

    pub fn contains_block(&self, b: &Block) -> bool {
        self.blocks.contains(b)
    }

    pub fn block_set(&self) -> &BTreeSet<Block> {
        &self.blocks
    }

    /// `|H_coord(value) ∩ F|`, i.e. the number of blocks using the ground
    /// element `(coord, value)`.
    pub fn hyperplane_count(&self, coord: usize, value: usize) -> u64 {
        self.counts[coord * self.params.n + value]
    }

    /// `F(X) = { B \ X : X ⊆ B, B ∈ F }`. The result is re-inferred for
    /// partiteness, so restricting by the empty block returns the family
    /// unchanged.
    pub fn restrict_link(&self, x: &Block) -> Result<Family> {
        x.check_bounds(&self.params)?;
        let set: BTreeSet<Block> = self
            .blocks
            .iter()
            .filter(|b| b.is_superset_of(x))
            .map(|b| b.minus(x))
            .collect();
        Ok(Self::from_checked(self.params, set))
    }

    /// `F[X] = { B : X ⊆ B, B ∈ F }`.
    pub fn restrict_star(&self, x: &Block) -> Result<Family> {
        x.check_bounds(&self.params)?;
        let set: BTreeSet<Block> = self
            .blocks
            .iter()
            .filter(|b| b.is_superset_of(x))
            .cloned()
            .collect();
        Ok(Self::from_checked(self.params, set))
    }

    /// `F(X, Y) = { B \ X : B ∩ Y = X, B ∈ F }`; requires `X ⊆ Y`.
    pub fn restrict_exact(&self, x: &Block, y: &Block) -> Result<Family> {
        x.check_bounds(&self.params)?;
        y.check_bounds(&self.params)?;
        if !y.is_superset_of(x) {
            return Err(Error::param(format!(
                "restrict_exact requires X ⊆ Y, got X={x}, Y={y}"
            )));
        }
        let set: BTreeSet<Block> = self
            .blocks
            .iter()
            .filter(|b| b.intersect(y) == *x)
            .map(|b| b.minus(x))
            .collect();
        Ok(Self::from_checked(self.params, set))
    }
}

fn build_product(
    out: &mut BTreeSet<Block>,
    per_part: &[Vec<usize>],
    current: &mut Vec<usize>,
    depth: usize,
) {
    if depth == per_part.len() {
        out.insert(Block::from_values(current));
        return;
    }
    for &v in &per_part[depth] {
        current[depth] = v;
        build_product(out, per_part, current, depth + 1);
    }
}

/// The full hyperplane `H_i(a)` as a partite family of size `n^{k-1}`.
pub fn hyperplane_family(params: InstanceParams, h: Hyperplane) -> Result<Family> {
    h.check_bounds(&params)?;
    let per_part: Vec<Vec<usize>> = (0..params.k)
        .map(|j| {
            if j == h.coord {
                vec![h.value]
            } else {
                (0..params.n).collect()
            }
        })
        .collect();
    Family::product(params, &per_part)
}

/// An ordered list of `s` families over common parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySystem {
    params: InstanceParams,
    families: Vec<Family>,
    label: String,
}

impl FamilySystem {
    pub fn new(
        params: InstanceParams,
        families: Vec<Family>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if families.len() != params.s {
            return Err(Error::validation(format!(
                "expected {} families, got {}",
                params.s,
                families.len()
            )));
        }
        for f in &families {
            if f.params() != params {
                return Err(Error::validation(
                    "all families of a system must share its parameters".to_string(),
                ));
            }
        }
        Ok(FamilySystem { params, families, label: label.into() })
    }

    pub fn params(&self) -> InstanceParams {
        self.params
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.families.iter().map(|f| f.len()).collect()
    }
}
