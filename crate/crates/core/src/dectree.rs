//! Finite prefixes of decorated trees, height-`h` factors, and their
//! classification into types by undecorated domain.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::Range;

use thiserror::Error;

use crate::exactlin::Rational;
use crate::numsys::{Cursor, Digit, NumerationSystem, NumsysError, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DectreeError {
    #[error("node budget exceeded: {needed} nodes needed, budget is {budget} (set NUMERTREE_NODE_BUDGET)")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("insufficient levels: {required} levels required, {available} built")]
    InsufficientLevels { required: usize, available: usize },
    #[error("node {0} is not in the tree")]
    NoSuchNode(usize),
    #[error("{needed} decorations needed, {given} given")]
    DecorationCount { needed: usize, given: usize },
    #[error("sequence source failed at index {index}: {message}")]
    Sequence { index: usize, message: String },
    #[error(transparent)]
    Numsys(#[from] NumsysError),
}

const NO_PARENT: u32 = u32::MAX;

/// Undecorated breadth-first layout of the first levels of the tree of
/// representations. Node `i` is the word of value `i`.
#[derive(Clone, Debug)]
pub struct Skeleton {
    system: NumerationSystem,
    parent: Vec<u32>,
    digit: Vec<Digit>,
    cursor: Vec<u32>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    level_start: Vec<usize>,
}

impl Skeleton {
    /// Builds levels `0..=levels`, failing if more than `budget` nodes would
    /// be created.
    pub fn build(system: &NumerationSystem, levels: usize, budget: usize) -> Result<Self, DectreeError> {
        let mut sk = Skeleton::root(system);
        for _ in 0..levels {
            sk.grow(budget)?;
        }
        Ok(sk)
    }

    /// Builds whole levels until at least `count` nodes exist.
    pub fn with_nodes(system: &NumerationSystem, count: usize, budget: usize) -> Result<Self, DectreeError> {
        if count > budget {
            return Err(DectreeError::BudgetExceeded { needed: count, budget });
        }
        let mut sk = Skeleton::root(system);
        while sk.len() < count {
            sk.grow(budget.max(count))?;
        }
        Ok(sk)
    }

    fn root(system: &NumerationSystem) -> Self {
        Skeleton {
            system: system.clone(),
            parent: vec![NO_PARENT],
            digit: vec![0],
            cursor: vec![system.root_cursor() as u32],
            first_child: vec![0],
            child_count: vec![0],
            level_start: vec![0, 1],
        }
    }

    /// Adds one level below the current deepest one.
    pub fn grow(&mut self, budget: usize) -> Result<(), DectreeError> {
        let range = self.level_range(self.levels());
        let mut buf: Vec<(Digit, Cursor)> = Vec::new();
        for node in range {
            self.system
                .children(node as u64, self.cursor[node] as Cursor, &mut buf);
            let first = self.len();
            if first + buf.len() > budget {
                return Err(DectreeError::BudgetExceeded {
                    needed: first + buf.len(),
                    budget,
                });
            }
            self.first_child[node] = first as u32;
            self.child_count[node] = buf.len() as u32;
            for &(d, c) in &buf {
                self.parent.push(node as u32);
                self.digit.push(d);
                self.cursor.push(c as u32);
                self.first_child.push(0);
                self.child_count.push(0);
            }
        }
        self.level_start.push(self.len());
        Ok(())
    }

    pub fn system(&self) -> &NumerationSystem {
        &self.system
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Index of the deepest complete level.
    pub fn levels(&self) -> usize {
        self.level_start.len() - 2
    }

    pub fn level_range(&self, level: usize) -> Range<usize> {
        self.level_start[level]..self.level_start[level + 1]
    }

    pub fn level_of(&self, node: usize) -> usize {
        self.level_start.partition_point(|&s| s <= node) - 1
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        let p = self.parent[node];
        (p != NO_PARENT).then_some(p as usize)
    }

    /// Edge label into `node`; `None` for the root.
    pub fn edge(&self, node: usize) -> Option<Digit> {
        self.parent(node).map(|_| self.digit[node])
    }

    pub fn cursor(&self, node: usize) -> Cursor {
        self.cursor[node] as Cursor
    }

    /// Children of a node above the deepest level; empty for nodes on it.
    pub fn children(&self, node: usize) -> Range<usize> {
        if self.level_of(node) >= self.levels() {
            return 0..0;
        }
        let f = self.first_child[node] as usize;
        f..f + self.child_count[node] as usize
    }

    pub fn child(&self, node: usize, d: Digit) -> Option<usize> {
        self.children(node).find(|&c| self.digit[c] == d)
    }

    pub fn descend(&self, node: usize, path: &[Digit]) -> Option<usize> {
        path.iter().try_fold(node, |n, &d| self.child(n, d))
    }

    pub fn word(&self, node: usize) -> Word {
        let mut digits = Vec::new();
        let mut n = node;
        while let Some(p) = self.parent(n) {
            digits.push(self.digit[n]);
            n = p;
        }
        digits.reverse();
        Word(digits)
    }

    /// Relative word from `ancestor` down to `node`.
    pub fn relative_word(&self, ancestor: usize, node: usize) -> Word {
        let mut digits = Vec::new();
        let mut n = node;
        while n != ancestor {
            digits.push(self.digit[n]);
            n = self.parent(n).expect("ancestor not above node");
        }
        digits.reverse();
        Word(digits)
    }

    pub fn ancestor(&self, node: usize, up: usize) -> usize {
        (0..up).fold(node, |n, _| self.parent(n).expect("ancestor above root"))
    }

    pub fn node_of(&self, w: &Word) -> Option<usize> {
        self.descend(0, w.digits())
    }

    /// Nodes of the height-`h` factor at `node` as `(relative word, node)`,
    /// in breadth-first (= radix) order.
    pub fn factor_nodes(&self, node: usize, h: usize) -> Result<Vec<(Word, usize)>, DectreeError> {
        self.check_depth(node, h)?;
        let mut out = vec![(Word::empty(), node)];
        let mut start = 0;
        for _ in 0..h {
            let end = out.len();
            for i in start..end {
                let (ref wd, n) = out[i];
                let wd = wd.clone();
                for c in self.children(n) {
                    out.push((wd.with(self.digit[c]), c));
                }
            }
            start = end;
        }
        Ok(out)
    }

    fn check_depth(&self, node: usize, h: usize) -> Result<(), DectreeError> {
        if node >= self.len() {
            return Err(DectreeError::NoSuchNode(node));
        }
        let required = self.level_of(node) + h;
        if required > self.levels() {
            return Err(DectreeError::InsufficientLevels {
                required,
                available: self.levels(),
            });
        }
        Ok(())
    }

    /// Compact code that is equal for two nodes iff their height-`h`
    /// factor domains are equal: child digit lists in breadth-first order.
    fn shape_code(&self, node: usize, h: usize, frontier: &mut Vec<usize>, next: &mut Vec<usize>) -> Vec<u32> {
        let mut code = Vec::new();
        frontier.clear();
        frontier.push(node);
        for _ in 0..h {
            next.clear();
            for &n in frontier.iter() {
                for c in self.children(n) {
                    code.push(self.digit[c]);
                    next.push(c);
                }
                code.push(u32::MAX);
            }
            std::mem::swap(frontier, next);
        }
        code
    }
}

/// A decorated tree prefix: a skeleton plus one decoration per node.
#[derive(Clone, Debug)]
pub struct TreePrefix {
    skeleton: Skeleton,
    decorations: Vec<Rational>,
}

impl TreePrefix {
    pub fn new(skeleton: Skeleton, decorations: Vec<Rational>) -> Result<Self, DectreeError> {
        if decorations.len() != skeleton.len() {
            return Err(DectreeError::DecorationCount {
                needed: skeleton.len(),
                given: decorations.len(),
            });
        }
        Ok(TreePrefix {
            skeleton,
            decorations,
        })
    }

    /// Decorates levels `0..=levels` with the terms of `seq`.
    pub fn build(
        system: &NumerationSystem,
        seq: &crate::seqlib::SequenceSource,
        levels: usize,
    ) -> Result<Self, DectreeError> {
        let skeleton = Skeleton::build(system, levels, crate::node_budget())?;
        let decorations = seq
            .terms_on(&skeleton)
            .map_err(|e| DectreeError::Sequence {
                index: e.index().unwrap_or(0),
                message: e.to_string(),
            })?;
        Self::new(skeleton, decorations)
    }

    /// Lays `terms` on the tree, keeping only the complete levels they fill.
    pub fn from_terms(system: &NumerationSystem, terms: &[Rational]) -> Result<Self, DectreeError> {
        if terms.is_empty() {
            return Err(DectreeError::DecorationCount { needed: 1, given: 0 });
        }
        let mut sk = Skeleton::root(system);
        loop {
            let mut deeper = sk.clone();
            if deeper.grow(terms.len()).is_err() {
                break;
            }
            sk = deeper;
        }
        let n = sk.len();
        Self::new(sk, terms[..n].to_vec())
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn system(&self) -> &NumerationSystem {
        self.skeleton.system()
    }

    pub fn decorations(&self) -> &[Rational] {
        &self.decorations
    }

    pub fn decoration(&self, node: usize) -> &Rational {
        &self.decorations[node]
    }

    pub fn len(&self) -> usize {
        self.decorations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decorations.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.skeleton.levels()
    }

    pub fn factor(&self, node: usize, h: usize) -> Result<Factor, DectreeError> {
        let nodes = self.skeleton.factor_nodes(node, h)?;
        let (domain, ids): (Vec<Word>, Vec<usize>) = nodes.into_iter().unzip();
        let decorations = ids.iter().map(|&i| self.decorations[i].clone()).collect();
        Ok(Factor {
            root: node,
            height: h,
            domain,
            nodes: ids,
            decorations,
        })
    }

    pub fn classify(&self, h: usize) -> Result<TypeTable, DectreeError> {
        TypeTable::classify(&self.skeleton, h)
    }

    pub fn render(&self, format: RenderFormat) -> String {
        match format {
            RenderFormat::Dot => self.render_dot(),
            RenderFormat::Text => self.render_text(),
        }
    }

    fn render_dot(&self) -> String {
        let sk = &self.skeleton;
        let mut s = String::from("digraph tree {\n");
        for i in 0..sk.len() {
            let _ = writeln!(s, "  n{i} [label=\"{i}:{}\"];", self.decorations[i]);
        }
        for i in 1..sk.len() {
            let p = sk.parent(i).expect("non-root");
            let _ = writeln!(s, "  n{p} -> n{i} [label=\"{}\"];", sk.digit[i]);
        }
        s.push_str("}\n");
        s
    }

    fn render_text(&self) -> String {
        let sk = &self.skeleton;
        let sys = sk.system();
        let mut s = String::new();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let level = sk.level_of(n);
            let label = if n == 0 {
                "ε".to_string()
            } else {
                sys.format_word(&sk.word(n))
            };
            let _ = writeln!(s, "{}{} [{}]: {}", "  ".repeat(level), label, n, self.decorations[n]);
            stack.extend(sk.children(n).rev());
        }
        let serial: Vec<String> = self.decorations.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "serialization: {}", serial.join(","));
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Dot,
    Text,
}

/// The factor of height `h` rooted at a node: relative words in radix order
/// with their decorations.
#[derive(Clone, Debug)]
pub struct Factor {
    pub root: usize,
    pub height: usize,
    pub domain: Vec<Word>,
    pub nodes: Vec<usize>,
    pub decorations: Vec<Rational>,
}

impl Factor {
    pub fn decoration_of(&self, w: &Word) -> Option<&Rational> {
        self.domain
            .binary_search(w)
            .ok()
            .map(|i| &self.decorations[i])
    }

    /// Equality as decorated trees (the root position is irrelevant).
    pub fn same_decorated(&self, other: &Factor) -> bool {
        self.domain == other.domain && self.decorations == other.decorations
    }

    pub fn internal_count(&self) -> usize {
        self.domain.iter().filter(|w| w.len() < self.height).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeInfo {
    pub id: usize,
    /// Relative words in radix order.
    pub domain: Vec<Word>,
    pub is_root_type: bool,
    /// Occurrence roots in breadth-first order.
    pub occurrences: Vec<usize>,
}

impl TypeInfo {
    pub fn internal(&self, h: usize) -> impl Iterator<Item = &Word> {
        self.domain.iter().filter(move |w| w.len() < h)
    }

    pub fn leaves(&self, h: usize) -> impl Iterator<Item = &Word> {
        self.domain.iter().filter(move |w| w.len() == h)
    }
}

/// Partition of the nodes of a prefix (those with `h` levels below them)
/// into types. The root always has its own type, id 0; other ids follow the
/// order of first appearance.
#[derive(Clone, Debug)]
pub struct TypeTable {
    pub h: usize,
    pub types: Vec<TypeInfo>,
    assignment: Vec<u32>,
}

impl TypeTable {
    pub fn classify(sk: &Skeleton, h: usize) -> Result<Self, DectreeError> {
        if h > sk.levels() {
            return Err(DectreeError::InsufficientLevels {
                required: h,
                available: sk.levels(),
            });
        }
        let last = sk.level_start[sk.levels() - h + 1];
        let mut assignment = vec![u32::MAX; last];
        let root_domain = sk.factor_nodes(0, h)?.into_iter().map(|(w, _)| w).collect();
        let mut types = vec![TypeInfo {
            id: 0,
            domain: root_domain,
            is_root_type: true,
            occurrences: vec![0],
        }];
        assignment[0] = 0;
        let mut ids: HashMap<Vec<u32>, usize> = HashMap::new();
        let (mut f, mut g) = (Vec::new(), Vec::new());
        for (node, slot) in assignment.iter_mut().enumerate().skip(1) {
            let code = sk.shape_code(node, h, &mut f, &mut g);
            let id = match ids.get(&code) {
                Some(&id) => id,
                None => {
                    let id = types.len();
                    let domain = sk.factor_nodes(node, h)?.into_iter().map(|(w, _)| w).collect();
                    types.push(TypeInfo {
                        id,
                        domain,
                        is_root_type: false,
                        occurrences: Vec::new(),
                    });
                    ids.insert(code, id);
                    id
                }
            };
            types[id].occurrences.push(node);
            *slot = id as u32;
        }
        Ok(TypeTable {
            h,
            types,
            assignment,
        })
    }

    /// Type of `node`, if it has `h` levels below it in the prefix.
    pub fn type_of(&self, node: usize) -> Option<usize> {
        self.assignment
            .get(node)
            .filter(|&&t| t != u32::MAX)
            .map(|&t| t as usize)
    }

    pub fn classified_nodes(&self) -> usize {
        self.assignment.len()
    }

    /// Non-root type with the given domain.
    pub fn find_domain(&self, domain: &[Word]) -> Option<usize> {
        self.types
            .iter()
            .find(|t| !t.is_root_type && t.domain == domain)
            .map(|t| t.id)
    }
}

/// Number of types in a prefix of `levels` levels.
pub fn count_types(sys: &NumerationSystem, h: usize, levels: usize) -> Result<usize, DectreeError> {
    let sk = Skeleton::build(sys, levels, crate::node_budget())?;
    Ok(TypeTable::classify(&sk, h)?.types.len())
}

/// Domain of the height-`h` factor below a node of value `n` in a rational
/// or integer base, computed arithmetically.
pub fn arithmetic_domain(sys: &NumerationSystem, n: u64, h: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut level: Vec<(Word, crate::exactlin::Nat)> = vec![(Word::empty(), n.into())];
    for _ in 0..h {
        let mut next = Vec::new();
        for (wd, v) in &level {
            for d in sys.children_digits(v) {
                let child = match sys.base_ratio() {
                    Some((p, q)) => (v * p + d) / q,
                    None => unreachable!("arithmetic domains need a base"),
                };
                next.push((wd.with(d), child));
            }
        }
        out.extend(next.iter().map(|(wd, _)| wd.clone()));
        level = next;
    }
    out
}

/// Domain of the height-`h` factor below a node in automaton state `state`.
pub fn state_domain(dfa: &crate::numsys::Dfa, state: usize, h: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut level = vec![(Word::empty(), state)];
    for _ in 0..h {
        let mut next = Vec::new();
        for (wd, s) in &level {
            for (d, t) in dfa.out_edges(*s) {
                next.push((wd.with(d), t));
            }
        }
        out.extend(next.iter().map(|(wd, _)| wd.clone()));
        level = next;
    }
    out
}

/// For a rational base `p/q`, maps each length-`h` word that labels a
/// depth-`h` path below some non-root node to the residue of that node's
/// value modulo `q^h`. The map has exactly `p^h` entries.
pub fn window_type_map(sys: &NumerationSystem, h: usize) -> BTreeMap<Word, u64> {
    let Some((_, q)) = sys.base_ratio() else {
        return BTreeMap::new();
    };
    let modulus = u64::from(q).pow(h as u32);
    let mut map = BTreeMap::new();
    for r in 0..modulus {
        let rep = if r == 0 { modulus } else { r };
        for leaf in arithmetic_domain(sys, rep, h).into_iter().filter(|w| w.len() == h) {
            map.insert(leaf, r);
        }
    }
    map
}

/// Residue of a non-root value modulo `q^h` together with its domain, for
/// every residue.
pub fn residue_domains(sys: &NumerationSystem, h: usize) -> Vec<(u64, Vec<Word>)> {
    let Some((_, q)) = sys.base_ratio() else {
        return Vec::new();
    };
    let modulus = u64::from(q).pow(h as u32);
    (0..modulus)
        .map(|r| (r, arithmetic_domain(sys, if r == 0 { modulus } else { r }, h)))
        .collect()
}

/// Convenience: decorations of a factor as a map.
pub fn factor_map(f: &Factor) -> BTreeMap<Word, Rational> {
    f.domain
        .iter()
        .cloned()
        .zip(f.decorations.iter().cloned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::rat;
    use crate::numsys::w;

    #[test]
    fn skeleton_matches_enumeration() {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let sk = Skeleton::build(&sys, 8, 1_000_000).unwrap();
        let words = sys.enumerate(sk.len());
        for (i, wd) in words.iter().enumerate() {
            assert_eq!(&sk.word(i), wd);
            assert_eq!(sk.node_of(wd), Some(i));
        }
        assert_eq!(sk.level_of(0), 0);
        assert_eq!(sk.level_range(3), 3..5);
    }

    #[test]
    fn budget_is_enforced() {
        let sys = NumerationSystem::integer_base(2).unwrap();
        let err = Skeleton::build(&sys, 12, 100).unwrap_err();
        assert!(matches!(err, DectreeError::BudgetExceeded { .. }));
    }

    #[test]
    fn factor_of_21() {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let terms: Vec<Rational> = (0..40).map(rat).collect();
        let t = TreePrefix::from_terms(&sys, &terms).unwrap();
        let f = t.factor(2, 2).unwrap();
        let d: Vec<Word> = ["", "0", "2", "01", "20", "22"].iter().map(|s| w(s)).collect();
        assert_eq!(f.domain, d);
        assert_eq!(f.decorations[5], rat(7));
        let d4: Vec<Word> = ["", "0", "2", "00", "02", "21"].iter().map(|s| w(s)).collect();
        assert_eq!(t.factor(4, 2).unwrap().domain, d4);
        let f0 = t.factor(5, 0).unwrap();
        assert_eq!(f0.domain, vec![Word::empty()]);
        assert!(t.factor(0, 40).is_err());
    }

    #[test]
    fn window_map_small() {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let m = window_type_map(&sys, 1);
        assert_eq!(m[&w("1")], 1);
        assert_eq!(m[&w("0")], 0);
        assert_eq!(m[&w("2")], 0);
        let m2 = window_type_map(&sys, 2);
        assert_eq!(m2.len(), 9);
        assert_eq!(m2[&w("21")], 0);
    }

    #[test]
    fn fibonacci_types() {
        let sys = NumerationSystem::fibonacci();
        let sk = Skeleton::build(&sys, 10, 10_000).unwrap();
        let tt = TypeTable::classify(&sk, 2).unwrap();
        assert_eq!(tt.types.len(), 3);
        let chi1: Vec<u8> = (0..9).map(|n| u8::from(tt.type_of(n) == Some(1))).collect();
        assert_eq!(chi1, [0, 1, 0, 0, 1, 0, 1, 0, 0]);
    }
}
