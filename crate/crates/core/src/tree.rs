//! Non-degenerate planar trees and their coalgebra.
//!
//! A [`PlanarTree`] is either the single leaf `o` or a root joined to an
//! ordered list of at least two subtrees. Child order is significant, so
//! `((oo)oo)` and `(oo(oo))` are different trees.
//!
//! The coproduct splits a tree into an upper forest and a lower tree whose
//! grafting recovers the original:
//!
//! ```text
//! cop(b) = sum over (E, c) with E ∝ c = b of  E_1•…•E_k ⊗ c
//! ```
//!
//! It extends multiplicatively to forests, which is what the coassociativity
//! and intertwining checks in the tests operate on.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ordered rooted tree in which every internal vertex has at least two children.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PlanarTree {
    children: Vec<PlanarTree>,
}

impl PlanarTree {
    /// The single-leaf tree `o`.
    pub fn leaf() -> Self {
        Self::default()
    }

    /// Joins the given trees under a new root.
    pub fn b_plus(children: Vec<PlanarTree>) -> Result<Self> {
        if children.len() < 2 {
            return Err(Error::DegenerateVertex(children.len()));
        }
        Ok(Self { children })
    }

    /// Removes the root, returning its ordered subtrees. The leaf has no root
    /// to remove; algebraically its image is the zero element.
    pub fn b_minus(&self) -> Result<Forest> {
        if self.is_leaf() {
            return Err(Error::LeafHasNoSubtrees);
        }
        Ok(Forest(self.children.clone()))
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn children(&self) -> &[PlanarTree] {
        &self.children
    }

    /// Number of children of the root (0 for the leaf).
    pub fn root_arity(&self) -> usize {
        self.children.len()
    }

    /// Number of leaves, `‖b‖`.
    pub fn leaves(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(PlanarTree::leaves).sum()
        }
    }

    /// Number of internal vertices, `|b|`. This is the power of the
    /// perturbation parameter carried by the tree.
    pub fn internal(&self) -> usize {
        if self.is_leaf() {
            0
        } else {
            1 + self.children.iter().map(PlanarTree::internal).sum::<usize>()
        }
    }

    /// Total vertex count `N(b) = ‖b‖ + |b|`.
    pub fn order(&self) -> usize {
        self.leaves() + self.internal()
    }

    /// Children counts of the internal vertices, in pre-order.
    pub fn internal_arities(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_arities(&mut out);
        out
    }

    fn collect_arities(&self, out: &mut Vec<usize>) {
        if !self.is_leaf() {
            out.push(self.children.len());
            for c in &self.children {
                c.collect_arities(out);
            }
        }
    }

    /// Largest internal-vertex arity, 0 for the leaf.
    pub fn max_arity(&self) -> usize {
        self.internal_arities().into_iter().max().unwrap_or(0)
    }

    /// Replaces the i-th leaf of `self` (left to right) by `upper[i]`.
    pub fn graft(upper: &[PlanarTree], lower: &PlanarTree) -> Result<Self> {
        if upper.len() != lower.leaves() {
            return Err(Error::Arity {
                expected: lower.leaves(),
                found: upper.len(),
            });
        }
        let mut it = upper.iter();
        Ok(lower.graft_from(&mut it))
    }

    fn graft_from<'a, I: Iterator<Item = &'a PlanarTree>>(&self, upper: &mut I) -> Self {
        if self.is_leaf() {
            upper.next().expect("leaf count checked").clone()
        } else {
            Self {
                children: self.children.iter().map(|c| c.graft_from(upper)).collect(),
            }
        }
    }

    /// All admissible cuts `(E, c)` with `E ∝ c = self`, i.e. the terms of the
    /// coproduct in unmerged form. The first entry is always `(self, o)`.
    pub fn cuts(&self) -> Vec<(Vec<PlanarTree>, PlanarTree)> {
        let mut out = vec![(vec![self.clone()], PlanarTree::leaf())];
        if self.is_leaf() {
            return out;
        }
        let per_child: Vec<_> = self.children.iter().map(PlanarTree::cuts).collect();
        let mut partial: Vec<(Vec<PlanarTree>, Vec<PlanarTree>)> = vec![(Vec::new(), Vec::new())];
        for child_cuts in &per_child {
            let mut next = Vec::with_capacity(partial.len() * child_cuts.len());
            for (upper, lower) in &partial {
                for (e, c) in child_cuts {
                    let mut u = upper.clone();
                    u.extend(e.iter().cloned());
                    let mut l = lower.clone();
                    l.push(c.clone());
                    next.push((u, l));
                }
            }
            partial = next;
        }
        out.extend(
            partial
                .into_iter()
                .map(|(upper, lower)| (upper, PlanarTree { children: lower })),
        );
        out
    }

    /// The coproduct of a single tree.
    pub fn coproduct(&self) -> ForestTreeSum {
        let mut sum = ForestTreeSum::default();
        for (upper, lower) in self.cuts() {
            sum.add((Forest(upper), lower), 1);
        }
        sum
    }

    /// Nested-parentheses encoding: `o` for the leaf, `(` children `)` otherwise.
    pub fn encoding(&self) -> String {
        let mut s = String::new();
        self.write_encoding(&mut s);
        s
    }

    fn write_encoding(&self, s: &mut String) {
        if self.is_leaf() {
            s.push('o');
        } else {
            s.push('(');
            for c in &self.children {
                c.write_encoding(s);
            }
            s.push(')');
        }
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

impl fmt::Debug for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlanarTree({})", self.encoding())
    }
}

impl FromStr for PlanarTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        let (tree, end) = parse_at(bytes, 0, s)?;
        if end != bytes.len() {
            return Err(Error::Encoding {
                input: s.to_string(),
                reason: format!("trailing input at byte {end}"),
            });
        }
        Ok(tree)
    }
}

fn parse_at(bytes: &[u8], pos: usize, src: &str) -> Result<(PlanarTree, usize)> {
    let bad = |reason: String| Error::Encoding {
        input: src.to_string(),
        reason,
    };
    match bytes.get(pos) {
        Some(b'o') => Ok((PlanarTree::leaf(), pos + 1)),
        Some(b'(') => {
            let mut children = Vec::new();
            let mut p = pos + 1;
            loop {
                match bytes.get(p) {
                    Some(b')') => break,
                    Some(_) => {
                        let (c, next) = parse_at(bytes, p, src)?;
                        children.push(c);
                        p = next;
                    }
                    None => return Err(bad("unbalanced parentheses".into())),
                }
            }
            if children.len() < 2 {
                return Err(bad(format!(
                    "vertex at byte {pos} has {} child(ren), need at least 2",
                    children.len()
                )));
            }
            Ok((PlanarTree { children }, p + 1))
        }
        Some(c) => Err(bad(format!("unexpected '{}' at byte {pos}", *c as char))),
        None => Err(bad("unexpected end of input".into())),
    }
}

/// Ordered product of trees. The empty forest is the unit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Forest(pub Vec<PlanarTree>);

impl Forest {
    pub fn unit() -> Self {
        Self(Vec::new())
    }

    pub fn single(tree: PlanarTree) -> Self {
        Self(vec![tree])
    }

    pub fn trees(&self) -> &[PlanarTree] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation product `self • other`.
    pub fn concat(&self, other: &Forest) -> Forest {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Forest(v)
    }

    pub fn leaves(&self) -> usize {
        self.0.iter().map(PlanarTree::leaves).sum()
    }

    pub fn internal(&self) -> usize {
        self.0.iter().map(PlanarTree::internal).sum()
    }

    /// Multiplicative extension of the coproduct: the product over the trees
    /// of their coproducts, taken in `Forest ⊗ Forest`.
    pub fn coproduct(&self) -> ForestPairSum {
        let mut acc = ForestPairSum::default();
        acc.add((Forest::unit(), Forest::unit()), 1);
        for tree in &self.0 {
            let cop = tree.coproduct();
            let mut next = ForestPairSum::default();
            for ((l, r), a) in acc.iter() {
                for ((e, c), b) in cop.iter() {
                    next.add((l.concat(e), r.concat(&Forest::single(c.clone()))), a * b);
                }
            }
            acc = next;
        }
        acc
    }

    /// `B₊` of the forest, when it has at least two trees.
    pub fn b_plus(&self) -> Result<PlanarTree> {
        PlanarTree::b_plus(self.0.clone())
    }
}

impl From<Vec<PlanarTree>> for Forest {
    fn from(v: Vec<PlanarTree>) -> Self {
        Self(v)
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("•")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Forest({self})")
    }
}

/// Finite integer combination of basis elements `K`, with like terms merged
/// and zero coefficients dropped.
#[derive(Clone, PartialEq, Eq)]
pub struct TensorSum<K: Ord> {
    terms: BTreeMap<K, i64>,
}

impl<K: Ord> Default for TensorSum<K> {
    fn default() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }
}

impl<K: Ord> TensorSum<K> {
    pub fn add(&mut self, key: K, coefficient: i64) {
        if coefficient == 0 {
            return;
        }
        let entry = self.terms.entry(key).or_insert(0);
        *entry += coefficient;
        if *entry == 0 {
            // keep the map free of cancelled terms
            self.terms.retain(|_, c| *c != 0);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, i64)> {
        self.terms.iter().map(|(k, c)| (k, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, key: &K) -> i64 {
        self.terms.get(key).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: TensorSum<K>) {
        for (k, c) in other.terms {
            self.add(k, c);
        }
    }
}

impl<K: Ord + fmt::Debug> fmt::Debug for TensorSum<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// Element of `Forest ⊗ Tree`; the value of the coproduct on a tree.
pub type ForestTreeSum = TensorSum<(Forest, PlanarTree)>;

/// Element of `Forest ⊗ Forest`.
pub type ForestPairSum = TensorSum<(Forest, Forest)>;

/// Element of `Forest ⊗ Forest ⊗ Forest`.
pub type ForestTripleSum = TensorSum<(Forest, Forest, Forest)>;

impl fmt::Display for ForestTreeSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ((e, c), k)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if k != 1 {
                write!(f, "{k} ")?;
            }
            write!(f, "{e} ⊗ {c}")?;
        }
        Ok(())
    }
}

/// `(cop ⊗ id) ∘ cop` applied to a tree.
pub fn coproduct_left_iterated(b: &PlanarTree) -> ForestTripleSum {
    let mut out = ForestTripleSum::default();
    for ((e, c), k) in b.coproduct().iter() {
        for ((e1, e2), k2) in e.coproduct().iter() {
            out.add((e1.clone(), e2.clone(), Forest::single(c.clone())), k * k2);
        }
    }
    out
}

/// `(id ⊗ cop) ∘ cop` applied to a tree.
pub fn coproduct_right_iterated(b: &PlanarTree) -> ForestTripleSum {
    let mut out = ForestTripleSum::default();
    for ((e, c), k) in b.coproduct().iter() {
        for ((c1, c2), k2) in c.coproduct().iter() {
            out.add((e.clone(), c1.clone(), Forest::single(c2.clone())), k * k2);
        }
    }
    out
}

/// All non-degenerate planar trees with `N(b) <= n_max`, graded by `N(b)` and
/// then ordered by encoding.
pub fn enumerate_trees(n_max: usize) -> Vec<PlanarTree> {
    enumerate_trees_with_max_arity(n_max, usize::MAX)
}

/// As [`enumerate_trees`], restricted to trees whose internal vertices have
/// at most `max_arity` children.
pub fn enumerate_trees_with_max_arity(n_max: usize, max_arity: usize) -> Vec<PlanarTree> {
    let by_order = trees_by_order(n_max, max_arity);
    let mut out = Vec::new();
    for level in by_order.into_iter().skip(1) {
        let mut keyed: Vec<(String, PlanarTree)> =
            level.into_iter().map(|t| (t.encoding(), t)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        out.extend(keyed.into_iter().map(|(_, t)| t));
    }
    out
}

/// `levels[n]` holds every tree with exactly `n` vertices (index 0 unused).
fn trees_by_order(n_max: usize, max_arity: usize) -> Vec<Vec<PlanarTree>> {
    let mut levels: Vec<Vec<PlanarTree>> = vec![Vec::new(); n_max.max(1) + 1];
    if n_max == 0 {
        return levels;
    }
    levels[1].push(PlanarTree::leaf());
    for n in 2..=n_max {
        // the root uses one vertex; the children share the remaining n - 1
        let mut found = Vec::new();
        let mut prefix = Vec::new();
        compose_children(&levels, n - 1, max_arity, &mut prefix, &mut found);
        levels[n] = found;
    }
    levels
}

fn compose_children(
    levels: &[Vec<PlanarTree>],
    remaining: usize,
    max_arity: usize,
    prefix: &mut Vec<PlanarTree>,
    out: &mut Vec<PlanarTree>,
) {
    if remaining == 0 {
        if prefix.len() >= 2 {
            out.push(PlanarTree {
                children: prefix.clone(),
            });
        }
        return;
    }
    if prefix.len() == max_arity {
        return;
    }
    for first in 1..=remaining {
        for t in &levels[first] {
            prefix.push(t.clone());
            compose_children(levels, remaining - first, max_arity, prefix, out);
            prefix.pop();
        }
    }
}
