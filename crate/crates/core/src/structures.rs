//! The almost Cliffordian structures `J1`, `J2`, `J3` on `R^{8n}`.
//!
//! Coordinates are grouped into eight blocks `x_{bn+i}` (`b = 0..=7`,
//! `i = 1..=n`). Each structure sends block `b` to a block `σ(b)` with a sign
//! and acts the same way on every site `i`, so it is stored as eight
//! `(target, sign)` pairs instead of an `8n × 8n` matrix. The cotangent duals
//! `J_k*` act on `dx_{bn+i}` with the very same table.

use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BLOCKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BlockIndex(u8);

impl BlockIndex {
    pub const fn new(value: u8) -> Option<Self> {
        if value < BLOCKS as u8 {
            Some(BlockIndex(value))
        } else {
            None
        }
    }

    pub const fn get(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = BlockIndex> {
        (0..BLOCKS as u8).map(BlockIndex)
    }
}

impl TryFrom<u8> for BlockIndex {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        BlockIndex::new(value).ok_or_else(|| format!("block index {value} out of range 0..=7"))
    }
}

impl From<BlockIndex> for u8 {
    fn from(b: BlockIndex) -> u8 {
        b.0
    }
}

/// A coordinate `x_a` of `R^{8n}`, with `a = block·n + site` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoordIndex {
    block: BlockIndex,
    site: usize,
    flat: usize,
}

impl CoordIndex {
    pub fn new(block: BlockIndex, site: usize, n: usize) -> Option<Self> {
        if n == 0 || site == 0 || site > n {
            return None;
        }
        Some(CoordIndex {
            block,
            site,
            flat: block.get() * n + site,
        })
    }

    pub fn from_flat(flat: usize, n: usize) -> Option<Self> {
        if n == 0 || flat == 0 || flat > BLOCKS * n {
            return None;
        }
        let block = BlockIndex(((flat - 1) / n) as u8);
        Some(CoordIndex {
            block,
            site: (flat - 1) % n + 1,
            flat,
        })
    }

    pub fn block(self) -> BlockIndex {
        self.block
    }

    pub fn site(self) -> usize {
        self.site
    }

    /// 1-based flat index.
    pub fn flat(self) -> usize {
        self.flat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i8(value: i8) -> Option<Self> {
        match value {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        self * Sign::Minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StructureId {
    J1,
    J2,
    J3,
}

impl StructureId {
    pub const ALL: [StructureId; 3] = [StructureId::J1, StructureId::J2, StructureId::J3];

    pub fn index(self) -> usize {
        match self {
            StructureId::J1 => 0,
            StructureId::J2 => 1,
            StructureId::J3 => 2,
        }
    }
}

impl fmt::Display for StructureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StructureId::J1 => "J1",
            StructureId::J2 => "J2",
            StructureId::J3 => "J3",
        };
        f.write_str(s)
    }
}

impl FromStr for StructureId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "J1" | "1" => Ok(StructureId::J1),
            "J2" | "2" => Ok(StructureId::J2),
            "J3" | "3" => Ok(StructureId::J3),
            other => Err(format!("unknown structure `{other}` (expected J1, J2 or J3)")),
        }
    }
}

/// A linear map on `R^{8n}` permuting the eight coordinate blocks with signs.
///
/// `from_entries` only checks ranges, so non-bijective tables can be built
/// for negative tests; use [`SignedBlockMap::is_bijection`] to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedBlockMap {
    entries: [(BlockIndex, Sign); BLOCKS],
}

impl SignedBlockMap {
    pub fn identity() -> Self {
        let mut entries = [(BlockIndex(0), Sign::Plus); BLOCKS];
        for (b, e) in entries.iter_mut().enumerate() {
            e.0 = BlockIndex(b as u8);
        }
        SignedBlockMap { entries }
    }

    /// Builds a map from `(target block, ±1)` pairs indexed by source block.
    pub fn from_entries(raw: [(u8, i8); BLOCKS]) -> Option<Self> {
        let mut entries = [(BlockIndex(0), Sign::Plus); BLOCKS];
        for (slot, (target, sign)) in entries.iter_mut().zip(raw) {
            *slot = (BlockIndex::new(target)?, Sign::from_i8(sign)?);
        }
        Some(SignedBlockMap { entries })
    }

    pub fn entries(&self) -> &[(BlockIndex, Sign); BLOCKS] {
        &self.entries
    }

    pub fn target(&self, source: BlockIndex) -> BlockIndex {
        self.entries[source.get()].0
    }

    pub fn sign(&self, source: BlockIndex) -> Sign {
        self.entries[source.get()].1
    }

    pub fn to_raw(&self) -> [(u8, i8); BLOCKS] {
        self.entries.map(|(t, s)| (t.0, s.value()))
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = [false; BLOCKS];
        for (t, _) in &self.entries {
            if std::mem::replace(&mut seen[t.get()], true) {
                return false;
            }
        }
        true
    }

    /// The source block sent onto `target`, if any.
    pub fn preimage(&self, target: BlockIndex) -> Option<(BlockIndex, Sign)> {
        self.entries
            .iter()
            .enumerate()
            .find(|(_, (t, _))| *t == target)
            .map(|(s, (_, sign))| (BlockIndex(s as u8), *sign))
    }

    /// Dense `8n × 8n` matrix with `M[row][col]`, acting on column vectors.
    pub fn dense_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let dim = BLOCKS * n;
        let mut m = vec![vec![0.0; dim]; dim];
        for (b, (t, s)) in self.entries.iter().enumerate() {
            for i in 0..n {
                m[t.get() * n + i][b * n + i] += s.as_f64();
            }
        }
        m
    }
}

impl fmt::Display for SignedBlockMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, (t, s)) in self.entries.iter().enumerate() {
            if b > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{b}->{}{}", s.symbol(), t.get())?;
        }
        Ok(())
    }
}

/// Returns the signed block permutation of `J1`, `J2` or `J3`.
///
/// Row `b` gives `J(∂/∂x_{bn+i}) = ±∂/∂x_{σ(b)n+i}`; the dual structure on
/// `dx_{bn+i}` uses the identical table.
pub fn make_structure(id: StructureId) -> SignedBlockMap {
    let raw = match id {
        StructureId::J1 => [(1, 1), (0, -1), (4, 1), (5, 1), (2, -1), (3, -1), (7, 1), (6, -1)],
        StructureId::J2 => [(2, 1), (4, -1), (0, -1), (6, 1), (1, 1), (7, -1), (3, -1), (5, 1)],
        StructureId::J3 => [(3, 1), (5, -1), (6, -1), (0, -1), (7, 1), (1, 1), (2, 1), (4, -1)],
    };
    SignedBlockMap::from_entries(raw).expect("structure tables are in range")
}

/// The three structures used by a computation.
///
/// Everything downstream takes a `StructureSet` so that altered tables can be
/// pushed through the full verification pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureSet {
    maps: [SignedBlockMap; 3],
}

impl StructureSet {
    pub fn standard() -> Self {
        StructureSet {
            maps: StructureId::ALL.map(make_structure),
        }
    }

    pub fn new(maps: [SignedBlockMap; 3]) -> Self {
        StructureSet { maps }
    }

    pub fn get(&self, id: StructureId) -> &SignedBlockMap {
        &self.maps[id.index()]
    }

    pub fn set(&mut self, id: StructureId, map: SignedBlockMap) {
        self.maps[id.index()] = map;
    }
}

impl Default for StructureSet {
    fn default() -> Self {
        Self::standard()
    }
}

/// A point (or tangent vector) of `R^{8n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n: usize,
    components: Vec<f64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        StateVector {
            n,
            components: vec![0.0; BLOCKS * n],
        }
    }

    pub fn from_vec(n: usize, components: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if components.len() != BLOCKS * n {
            return Err(Error::DimensionMismatch {
                expected: BLOCKS * n,
                got: components.len(),
            });
        }
        Ok(StateVector { n, components })
    }

    /// Unit vector `e_a` for a 1-based flat index.
    pub fn basis(n: usize, flat: usize) -> Self {
        let mut v = Self::zeros(n);
        v.components[flat - 1] = 1.0;
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        &mut self.components
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.components
    }

    pub fn get(&self, coord: CoordIndex) -> f64 {
        self.components[coord.flat() - 1]
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_same_n(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::DimensionMismatch {
                expected: BLOCKS * n,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Applies `map` to `v`: component `(σ(b), i)` of the result is `sign(b)·v[b, i]`.
pub fn apply(map: &SignedBlockMap, v: &StateVector) -> StateVector {
    let n = v.n;
    let mut out = StateVector::zeros(n);
    for (b, (t, s)) in map.entries.iter().enumerate() {
        let src = &v.components[b * n..(b + 1) * n];
        let dst = &mut out.components[t.get() * n..(t.get() + 1) * n];
        for (d, x) in dst.iter_mut().zip(src) {
            *d += s.as_f64() * x;
        }
    }
    out
}

/// `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &SignedBlockMap, b: &SignedBlockMap) -> SignedBlockMap {
    let mut entries = b.entries;
    for e in entries.iter_mut() {
        let (mid, s_b) = *e;
        *e = (a.target(mid), a.sign(mid) * s_b);
    }
    SignedBlockMap { entries }
}

pub fn negate(a: &SignedBlockMap) -> SignedBlockMap {
    SignedBlockMap {
        entries: a.entries.map(|(t, s)| (t, -s)),
    }
}

/// True iff `a² = -I`.
pub fn verify_square(a: &SignedBlockMap) -> bool {
    compose(a, a) == negate(&SignedBlockMap::identity())
}

/// True iff `⟨aX, aY⟩ = ⟨X, Y⟩` for every pair of Euclidean basis vectors of `R^{8n}`.
pub fn verify_metric_invariance(a: &SignedBlockMap, n: usize) -> bool {
    let images: Vec<StateVector> = (1..=BLOCKS * n)
        .map(|flat| apply(a, &StateVector::basis(n, flat)))
        .collect();
    images.iter().enumerate().all(|(i, u)| {
        images
            .iter()
            .enumerate()
            .all(|(j, v)| u.dot(v) == if i == j { 1.0 } else { 0.0 })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relation {
    Identity { sign: i8 },
    Structure { id: StructureId, sign: i8 },
    Other,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = |s: i8| if s < 0 { "-" } else { "+" };
        match self {
            Relation::Identity { sign } => write!(f, "{}I", sym(*sign)),
            Relation::Structure { id, sign } => write!(f, "{}{id}", sym(*sign)),
            Relation::Other => f.write_str("other"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordRelation {
    pub word: Vec<StructureId>,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub entries: Vec<WordRelation>,
}

impl RelationReport {
    pub fn lookup(&self, word: &[StructureId]) -> Option<Relation> {
        self.entries
            .iter()
            .find(|e| e.word == word)
            .map(|e| e.relation)
    }
}

pub const MAX_WORD_LEN: usize = 3;

/// Classifies every word of length 1..=3 over `ids`.
///
/// The word `[a, b, c]` denotes the composite `a ∘ b ∘ c`.
pub fn relation_report(ids: &[StructureId]) -> RelationReport {
    relation_report_for(&StructureSet::standard(), ids)
}

pub fn relation_report_for(set: &StructureSet, ids: &[StructureId]) -> RelationReport {
    let identity = SignedBlockMap::identity();
    let classify = |m: &SignedBlockMap| -> Relation {
        if *m == identity {
            return Relation::Identity { sign: 1 };
        }
        if *m == negate(&identity) {
            return Relation::Identity { sign: -1 };
        }
        for id in StructureId::ALL {
            let j = set.get(id);
            if m == j {
                return Relation::Structure { id, sign: 1 };
            }
            if *m == negate(j) {
                return Relation::Structure { id, sign: -1 };
            }
        }
        Relation::Other
    };

    let mut entries = Vec::new();
    let mut frontier: Vec<(Vec<StructureId>, SignedBlockMap)> = vec![(Vec::new(), identity)];
    for _ in 0..MAX_WORD_LEN {
        let mut next = Vec::new();
        for (word, map) in &frontier {
            for &id in ids {
                let mut w = word.clone();
                w.push(id);
                let m = compose(map, set.get(id));
                entries.push(WordRelation {
                    word: w.clone(),
                    relation: classify(&m),
                });
                next.push((w, m));
            }
        }
        frontier = next;
    }
    RelationReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use StructureId::*;

    fn brute_compose(a: &SignedBlockMap, b: &SignedBlockMap, n: usize) -> Vec<Vec<f64>> {
        let (ma, mb) = (a.dense_matrix(n), b.dense_matrix(n));
        let dim = BLOCKS * n;
        let mut out = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                out[i][j] = (0..dim).map(|k| ma[i][k] * mb[k][j]).sum();
            }
        }
        out
    }

    #[test]
    fn table_entries() {
        let j1 = make_structure(J1);
        assert_eq!(j1.entries()[0], (BlockIndex(1), Sign::Plus));
        assert_eq!(j1.entries()[7], (BlockIndex(6), Sign::Minus));
        assert_eq!(make_structure(J3).entries()[3], (BlockIndex(0), Sign::Minus));
    }

    #[test]
    fn coord_index_roundtrip() {
        for n in 1..=4 {
            for flat in 1..=8 * n {
                let c = CoordIndex::from_flat(flat, n).unwrap();
                assert_eq!(CoordIndex::new(c.block(), c.site(), n), Some(c));
            }
            assert!(CoordIndex::from_flat(0, n).is_none());
            assert!(CoordIndex::from_flat(8 * n + 1, n).is_none());
        }
    }

    #[test]
    fn apply_examples() {
        let e1 = StateVector::basis(1, 1);
        assert_eq!(apply(&make_structure(J1), &e1), StateVector::basis(1, 2));
        assert_eq!(apply(&make_structure(J2), &StateVector::zeros(1)), StateVector::zeros(1));
        let v = StateVector::from_vec(2, (1..=16).map(|k| k as f64 * 0.37 - 2.0).collect()).unwrap();
        let j1 = make_structure(J1);
        let twice = apply(&j1, &apply(&j1, &v));
        let minus: Vec<f64> = v.components().iter().map(|x| -x).collect();
        assert_eq!(twice.components(), &minus[..]);
    }

    #[test]
    fn compose_agrees_with_dense_product() {
        for a in StructureId::ALL {
            for b in StructureId::ALL {
                let (ma, mb) = (make_structure(a), make_structure(b));
                assert_eq!(compose(&ma, &mb).dense_matrix(2), brute_compose(&ma, &mb, 2));
            }
        }
    }

    #[test]
    fn squares_and_anticommutation() {
        let minus_id = negate(&SignedBlockMap::identity());
        for id in StructureId::ALL {
            let j = make_structure(id);
            assert_eq!(compose(&j, &j), minus_id);
            assert!(verify_square(&j));
        }
        assert!(!verify_square(&SignedBlockMap::identity()));
        for a in StructureId::ALL {
            for b in StructureId::ALL {
                if a != b {
                    let (ma, mb) = (make_structure(a), make_structure(b));
                    assert_eq!(compose(&ma, &mb), negate(&compose(&mb, &ma)));
                }
            }
        }
    }

    #[test]
    fn negate_examples() {
        let j1 = make_structure(J1);
        assert_eq!(negate(&negate(&j1)), j1);
        assert_eq!(negate(&j1).entries()[0], (BlockIndex(1), Sign::Minus));
        assert_eq!(compose(&negate(&j1), &j1), compose(&j1, &negate(&j1)));
    }

    #[test]
    fn metric_invariance() {
        for n in 1..=3 {
            for id in StructureId::ALL {
                assert!(verify_metric_invariance(&make_structure(id), n));
                assert!(make_structure(id).is_bijection());
            }
        }
        let dup = SignedBlockMap::from_entries([
            (1, 1), (1, -1), (4, 1), (5, 1), (2, -1), (3, -1), (7, 1), (6, -1),
        ])
        .unwrap();
        assert!(!dup.is_bijection());
        assert!(!verify_metric_invariance(&dup, 1));
    }

    #[test]
    fn relation_examples() {
        let report = relation_report(&StructureId::ALL);
        assert_eq!(report.entries.len(), 3 + 9 + 27);
        assert_eq!(report.lookup(&[J1, J1]), Some(Relation::Identity { sign: -1 }));
        assert_eq!(report.lookup(&[J1]), Some(Relation::Structure { id: J1, sign: 1 }));
        let ab = compose(&make_structure(J1), &make_structure(J2));
        let ba = compose(&make_structure(J2), &make_structure(J1));
        assert_eq!(ab, negate(&ba));
        // J1J2 is not ±J3 for these tables.
        assert_eq!(report.lookup(&[J1, J2]), Some(Relation::Other));
        assert_eq!(report.lookup(&[J1, J1, J2]), Some(Relation::Structure { id: J2, sign: -1 }));
    }

    #[test]
    fn structure_id_parse() {
        assert_eq!("j2".parse::<StructureId>(), Ok(J2));
        assert!("J4".parse::<StructureId>().is_err());
    }

    #[test]
    fn state_vector_rejects_bad_length() {
        assert!(matches!(
            StateVector::from_vec(1, vec![0.0; 7]),
            Err(Error::DimensionMismatch { expected: 8, got: 7 })
        ));
        assert!(matches!(StateVector::from_vec(0, vec![]), Err(Error::InvalidDimension(0))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state(n: usize) -> impl Strategy<Value = StateVector> {
            proptest::collection::vec(-10.0f64..10.0, 8 * n)
                .prop_map(move |v| StateVector::from_vec(n, v).unwrap())
        }

        proptest! {
            #[test]
            fn apply_is_linear(
                u in state(2), v in state(2), alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
                k in 0usize..3,
            ) {
                let j = make_structure(StructureId::ALL[k]);
                let combo: Vec<f64> = u.components().iter().zip(v.components())
                    .map(|(a, b)| alpha * a + beta * b).collect();
                let lhs = apply(&j, &StateVector::from_vec(2, combo).unwrap());
                let (ju, jv) = (apply(&j, &u), apply(&j, &v));
                for ((l, a), b) in lhs.components().iter().zip(ju.components()).zip(jv.components()) {
                    prop_assert!((l - (alpha * a + beta * b)).abs() <= 1e-12);
                }
            }
        }
    }
}
