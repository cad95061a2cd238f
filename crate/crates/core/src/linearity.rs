//! h-linear relations between the decorations of height-`h` factors:
//! guessing them from a decorated prefix, verifying them exactly, lifting
//! them from `h` to `h + 1`, and regenerating a sequence from a prefix.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dectree::{DectreeError, Skeleton, TreePrefix, TypeTable};
use crate::exactlin::{
    format_rational, inconsistent_core, parse_rational, solve_detailed, RatMatrix, Rational, Solve,
};
use crate::numsys::{NumerationSystem, NumsysError, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinearityError {
    #[error(transparent)]
    Tree(#[from] DectreeError),
    #[error(transparent)]
    Numsys(#[from] NumsysError),
    #[error("unknown type {0}")]
    UnknownType(usize),
    #[error("invalid relation set: {0}")]
    Invalid(String),
    #[error("system mismatch: relations are for {expected}, tree is over {found}")]
    SystemMismatch { expected: String, found: String },
    #[error("no relation for type {type_id} (domain {domain}) at leaf {leaf}")]
    MissingRelation {
        type_id: usize,
        domain: String,
        leaf: String,
    },
    #[error("type with domain {0} is not covered by the relation set")]
    UncoveredType(String),
    #[error("prefix has {available} levels, at least {required} needed")]
    ShortPrefix { required: usize, available: usize },
    #[error("malformed JSON: {0}")]
    Json(String),
}

/// `x_{w·leaf} = Σ coeffs[v] · x_{w·v}` for every occurrence `w` of a type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub type_id: usize,
    pub leaf: Word,
    /// Nonzero coefficients only, keyed by internal relative words.
    pub coeffs: BTreeMap<Word, Rational>,
}

impl Relation {
    pub fn new(type_id: usize, leaf: Word, coeffs: impl IntoIterator<Item = (Word, Rational)>) -> Self {
        Relation {
            type_id,
            leaf,
            coeffs: coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    /// Applies the relation using `lookup` for internal decorations.
    pub fn apply(&self, mut lookup: impl FnMut(&Word) -> Rational) -> Rational {
        self.coeffs
            .iter()
            .fold(Rational::zero(), |acc, (v, c)| acc + c * lookup(v))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootPolicy {
    /// The root factor is not fitted; levels below `h` come from a prefix.
    #[default]
    Exclude,
    /// The root factor gets its own relations, fitted from its single
    /// occurrence.
    Include,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelType {
    pub id: usize,
    pub domain: Vec<Word>,
    pub is_root: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSet {
    pub system: NumerationSystem,
    pub h: usize,
    pub types: Vec<RelType>,
    pub relations: Vec<Relation>,
    pub root_policy: RootPolicy,
}

impl RelationSet {
    pub fn new(system: NumerationSystem, h: usize) -> Self {
        RelationSet {
            system,
            h,
            types: Vec::new(),
            relations: Vec::new(),
            root_policy: RootPolicy::Exclude,
        }
    }

    /// Registers a type and returns its id.
    pub fn add_type(&mut self, domain: Vec<Word>, is_root: bool) -> usize {
        let id = self.types.iter().map(|t| t.id + 1).max().unwrap_or(0);
        let mut domain = domain;
        domain.sort();
        self.types.push(RelType { id, domain, is_root });
        if is_root {
            self.root_policy = RootPolicy::Include;
        }
        id
    }

    /// Adds a relation from word literals, e.g. `("21", &[("", -1/2), ("2", 3/2)])`.
    pub fn add(&mut self, type_id: usize, leaf: &str, coeffs: &[(&str, Rational)]) {
        let parse = |s: &str| self.system.parse_word(s).expect("word literal");
        let rel = Relation::new(
            type_id,
            parse(leaf),
            coeffs.iter().map(|(w, c)| (parse(w), c.clone())),
        );
        self.relations.push(rel);
    }

    pub fn type_info(&self, id: usize) -> Option<&RelType> {
        self.types.iter().find(|t| t.id == id)
    }

    pub fn root_type(&self) -> Option<&RelType> {
        self.types.iter().find(|t| t.is_root)
    }

    /// Non-root type with the given domain.
    pub fn find_domain(&self, domain: &[Word]) -> Option<usize> {
        self.types
            .iter()
            .find(|t| !t.is_root && t.domain == domain)
            .map(|t| t.id)
    }

    pub fn relation(&self, type_id: usize, leaf: &Word) -> Option<&Relation> {
        self.relations
            .iter()
            .find(|r| r.type_id == type_id && &r.leaf == leaf)
    }

    fn relation_index(&self) -> HashMap<(usize, &Word), &Relation> {
        self.relations
            .iter()
            .map(|r| ((r.type_id, &r.leaf), r))
            .collect()
    }

    /// Whether every leaf of every non-root type has a relation.
    pub fn is_complete(&self) -> bool {
        let idx = self.relation_index();
        self.types.iter().filter(|t| !t.is_root).all(|t| {
            t.domain
                .iter()
                .filter(|w| w.len() == self.h)
                .all(|leaf| idx.contains_key(&(t.id, leaf)))
        })
    }

    /// Whether every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.relations
            .iter()
            .all(|r| r.coeffs.values().all(|c| c.is_integer()))
    }

    pub fn validate(&self) -> Result<(), LinearityError> {
        let bad = |m: String| Err(LinearityError::Invalid(m));
        if self.h == 0 {
            return bad("h must be at least 1".into());
        }
        let mut seen_ids = std::collections::HashSet::new();
        for t in &self.types {
            if !seen_ids.insert(t.id) {
                return bad(format!("duplicate type id {}", t.id));
            }
            if t.domain.first() != Some(&Word::empty()) {
                return bad(format!("type {} domain lacks the empty word", t.id));
            }
            if t.domain.iter().any(|w| w.len() > self.h) {
                return bad(format!("type {} has words longer than h", t.id));
            }
        }
        if self.types.iter().filter(|t| t.is_root).count() > 1 {
            return bad("more than one root type".into());
        }
        let mut seen = std::collections::HashSet::new();
        for r in &self.relations {
            let Some(t) = self.type_info(r.type_id) else {
                return Err(LinearityError::UnknownType(r.type_id));
            };
            let fmt = |w: &Word| self.system.format_word(w);
            if r.leaf.len() != self.h || t.domain.binary_search(&r.leaf).is_err() {
                return bad(format!("leaf {} is not a leaf of type {}", fmt(&r.leaf), t.id));
            }
            for v in r.coeffs.keys() {
                if v.len() >= self.h || t.domain.binary_search(v).is_err() {
                    return bad(format!(
                        "coefficient word {} is not internal to type {}",
                        fmt(v),
                        t.id
                    ));
                }
            }
            if !seen.insert((r.type_id, r.leaf.clone())) {
                return bad(format!("two relations for type {} leaf {}", t.id, fmt(&r.leaf)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let fmt = |w: &Word| self.system.format_word(w);
        let j = RelationSetJson {
            system: self.system.descriptor(),
            h: self.h,
            root_policy: self.root_policy,
            types: self
                .types
                .iter()
                .map(|t| TypeJson {
                    id: t.id,
                    domain: t.domain.iter().map(fmt).collect(),
                    root: t.is_root,
                })
                .collect(),
            relations: self
                .relations
                .iter()
                .map(|r| RelationJson {
                    type_id: r.type_id,
                    leaf: fmt(&r.leaf),
                    coeffs: r
                        .coeffs
                        .iter()
                        .map(|(w, c)| (fmt(w), format_rational(c)))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_value(j).expect("relation set serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, LinearityError> {
        let j: RelationSetJson =
            serde_json::from_value(v.clone()).map_err(|e| LinearityError::Json(e.to_string()))?;
        let system = NumerationSystem::from_descriptor(&j.system)?;
        let parse = |s: &str| system.parse_word(s);
        let mut types = Vec::new();
        for t in &j.types {
            let mut domain = t.domain.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
            domain.sort();
            types.push(RelType {
                id: t.id,
                domain,
                is_root: t.root,
            });
        }
        let mut relations = Vec::new();
        for r in &j.relations {
            let mut coeffs = Vec::new();
            for (w, c) in &r.coeffs {
                let c = parse_rational(c).map_err(|e| LinearityError::Json(e.to_string()))?;
                coeffs.push((parse(w)?, c));
            }
            relations.push(Relation::new(r.type_id, parse(&r.leaf)?, coeffs));
        }
        let set = RelationSet {
            system,
            h: j.h,
            types,
            relations,
            root_policy: j.root_policy,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn from_json_str(s: &str) -> Result<Self, LinearityError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| LinearityError::Json(e.to_string()))?;
        Self::from_json(&v)
    }

    /// Pairs each type of `table` with the matching relation-set type: the
    /// root with the root type (when present), others by domain.
    fn match_types(&self, table: &TypeTable) -> Vec<Option<usize>> {
        table
            .types
            .iter()
            .map(|t| {
                if t.is_root_type {
                    self.root_type().filter(|r| r.domain == t.domain).map(|r| r.id)
                } else {
                    self.find_domain(&t.domain)
                }
            })
            .collect()
    }

    fn check_system(&self, sys: &NumerationSystem) -> Result<(), LinearityError> {
        if &self.system != sys {
            return Err(LinearityError::SystemMismatch {
                expected: self.system.to_string(),
                found: sys.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RelationSetJson {
    system: serde_json::Value,
    h: usize,
    #[serde(default)]
    root_policy: RootPolicy,
    types: Vec<TypeJson>,
    relations: Vec<RelationJson>,
}

#[derive(Serialize, Deserialize)]
struct TypeJson {
    id: usize,
    domain: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    root: bool,
}

#[derive(Serialize, Deserialize)]
struct RelationJson {
    #[serde(rename = "type")]
    type_id: usize,
    leaf: String,
    coeffs: BTreeMap<String, String>,
}

/// Decorations of one occurrence of a type: internal nodes, then leaves,
/// each in breadth-first order inside the factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccurrenceRow {
    pub root: usize,
    pub internal: Vec<Rational>,
    pub leaves: Vec<Rational>,
}

pub fn occurrences(
    tree: &TreePrefix,
    table: &TypeTable,
    type_id: usize,
) -> Result<Vec<OccurrenceRow>, LinearityError> {
    let t = table
        .types
        .get(type_id)
        .ok_or(LinearityError::UnknownType(type_id))?;
    let h = table.h;
    let internal_count = t.domain.iter().filter(|w| w.len() < h).count();
    t.occurrences
        .iter()
        .map(|&root| {
            let f = tree.factor(root, h)?;
            let mut internal = f.decorations;
            let leaves = internal.split_off(internal_count);
            Ok(OccurrenceRow {
                root,
                internal,
                leaves,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct GuessOptions {
    /// Minimum number of occurrences; default `2·i_R + 2`.
    pub min_occurrences: Option<usize>,
    /// Percentage of rows (the last ones) held out for confirmation.
    pub holdout_percent: usize,
    pub root_policy: RootPolicy,
}

impl Default for GuessOptions {
    fn default() -> Self {
        GuessOptions {
            min_occurrences: None,
            holdout_percent: 25,
            root_policy: RootPolicy::Exclude,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    /// Unique solution, or a non-unique one confirmed on the holdout rows
    /// (`promoted`).
    Solved { free_dim: usize, promoted: bool },
    Underdetermined { free_dim: usize },
    /// Occurrence roots whose rows admit no common solution.
    Inconsistent { witness: Vec<usize> },
    Insufficient { occurrences: usize, needed: usize },
    /// Root relation fitted from its single occurrence.
    RootFit { free_dim: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellReport {
    pub leaf: String,
    #[serde(flatten)]
    pub status: CellStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TypeReport {
    pub type_id: usize,
    pub domain: Vec<String>,
    pub is_root: bool,
    pub internal_count: usize,
    pub leaf_count: usize,
    /// Occurrence roots used for fitting (training rows first).
    pub occurrences: Vec<usize>,
    pub training_rows: usize,
    pub cells: Vec<CellReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GuessReport {
    pub h: usize,
    pub types: Vec<TypeReport>,
}

impl GuessReport {
    /// Every non-root cell solved.
    pub fn all_solved(&self) -> bool {
        self.types
            .iter()
            .filter(|t| !t.is_root)
            .flat_map(|t| &t.cells)
            .all(|c| matches!(c.status, CellStatus::Solved { .. }))
    }

    pub fn any_inconsistent(&self) -> bool {
        self.cells()
            .any(|(_, c)| matches!(c.status, CellStatus::Inconsistent { .. }))
    }

    pub fn any_insufficient(&self) -> bool {
        self.cells()
            .any(|(_, c)| matches!(c.status, CellStatus::Insufficient { .. }))
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, &CellReport)> {
        self.types
            .iter()
            .flat_map(|t| t.cells.iter().map(move |c| (t.type_id, c)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn rows_matrix(rows: &[&OccurrenceRow]) -> RatMatrix {
    RatMatrix::from_rows(rows.iter().map(|r| r.internal.clone()).collect()).expect("uniform rows")
}

fn satisfies(row: &OccurrenceRow, x: &[Rational], leaf: usize) -> bool {
    crate::exactlin::dot(&row.internal, x) == row.leaves[leaf]
}

/// Fits one relation per (type, leaf) from the occurrences in `tree`.
pub fn guess(
    tree: &TreePrefix,
    h: usize,
    opts: &GuessOptions,
) -> Result<(RelationSet, GuessReport), LinearityError> {
    if h == 0 {
        return Err(LinearityError::Invalid("h must be at least 1".into()));
    }
    let table = tree.classify(h)?;
    let sys = tree.system();
    let fmt = |w: &Word| sys.format_word(w);
    let mut set = RelationSet::new(sys.clone(), h);
    set.root_policy = opts.root_policy;
    let mut reports = Vec::new();
    for t in &table.types {
        if t.is_root_type && opts.root_policy == RootPolicy::Exclude {
            continue;
        }
        set.types.push(RelType {
            id: t.id,
            domain: t.domain.clone(),
            is_root: t.is_root_type,
        });
        let internal: Vec<Word> = t.domain.iter().filter(|w| w.len() < h).cloned().collect();
        let leaves: Vec<Word> = t.domain.iter().filter(|w| w.len() == h).cloned().collect();
        let rows = occurrences(tree, &table, t.id)?;
        let needed = if t.is_root_type {
            1
        } else {
            opts.min_occurrences.unwrap_or(2 * internal.len() + 2)
        };
        let (train, hold): (Vec<&OccurrenceRow>, Vec<&OccurrenceRow>) = if t.is_root_type {
            (rows.iter().collect(), Vec::new())
        } else {
            let n_hold = rows.len() * opts.holdout_percent / 100;
            let split = rows.len() - n_hold;
            (rows[..split].iter().collect(), rows[split..].iter().collect())
        };
        let a = rows_matrix(&train);
        let all: Vec<&OccurrenceRow> = rows.iter().collect();
        let results: Vec<(CellStatus, Option<Vec<Rational>>)> = (0..leaves.len())
            .into_par_iter()
            .map(|li| {
                if rows.len() < needed {
                    let st = CellStatus::Insufficient {
                        occurrences: rows.len(),
                        needed,
                    };
                    return (st, None);
                }
                fit_cell(&a, &train, &hold, &all, li, t.is_root_type)
            })
            .collect();
        let mut cells = Vec::new();
        for (leaf, (status, x)) in leaves.iter().zip(results) {
            if let Some(x) = x {
                set.relations.push(Relation::new(
                    t.id,
                    leaf.clone(),
                    internal.iter().cloned().zip(x),
                ));
            }
            cells.push(CellReport {
                leaf: fmt(leaf),
                status,
            });
        }
        reports.push(TypeReport {
            type_id: t.id,
            domain: t.domain.iter().map(fmt).collect(),
            is_root: t.is_root_type,
            internal_count: internal.len(),
            leaf_count: leaves.len(),
            occurrences: rows.iter().map(|r| r.root).collect(),
            training_rows: train.len(),
            cells,
        });
    }
    Ok((set, GuessReport { h, types: reports }))
}

fn fit_cell(
    a: &RatMatrix,
    train: &[&OccurrenceRow],
    hold: &[&OccurrenceRow],
    all: &[&OccurrenceRow],
    leaf: usize,
    is_root: bool,
) -> (CellStatus, Option<Vec<Rational>>) {
    let b: Vec<Rational> = train.iter().map(|r| r.leaves[leaf].clone()).collect();
    let witness = |rows: &[&OccurrenceRow]| -> CellStatus {
        let m = rows_matrix(rows);
        let rhs: Vec<Rational> = rows.iter().map(|r| r.leaves[leaf].clone()).collect();
        let core = inconsistent_core(&m, &rhs)
            .expect("dimensions agree")
            .unwrap_or_default();
        CellStatus::Inconsistent {
            witness: core.into_iter().map(|i| rows[i].root).collect(),
        }
    };
    match solve_detailed(a, &b).expect("dimensions agree") {
        Solve::Inconsistent => (witness(train), None),
        Solve::Solved { x, free_dim } => {
            if is_root {
                return (CellStatus::RootFit { free_dim }, Some(x));
            }
            if hold.iter().all(|r| satisfies(r, &x, leaf)) {
                if free_dim == 0 {
                    (CellStatus::Solved { free_dim, promoted: false }, Some(x))
                } else if hold.is_empty() {
                    (CellStatus::Underdetermined { free_dim }, None)
                } else {
                    (CellStatus::Solved { free_dim, promoted: true }, Some(x))
                }
            } else {
                let m = rows_matrix(all);
                let rhs: Vec<Rational> = all.iter().map(|r| r.leaves[leaf].clone()).collect();
                match solve_detailed(&m, &rhs).expect("dimensions agree") {
                    Solve::Inconsistent => (witness(all), None),
                    Solve::Solved { free_dim, .. } => (CellStatus::Underdetermined { free_dim }, None),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub root: usize,
    pub type_id: usize,
    pub leaf: Word,
    pub expected: Rational,
    pub actual: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
    /// Number of (occurrence, relation) checks performed.
    pub checked: usize,
    /// Tree types that no relation-set type covers.
    pub uncovered: Vec<usize>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every relation at every occurrence of its type in `tree`.
pub fn verify(tree: &TreePrefix, set: &RelationSet) -> Result<VerifyReport, LinearityError> {
    set.validate()?;
    set.check_system(tree.system())?;
    let table = tree.classify(set.h)?;
    let matched = set.match_types(&table);
    let idx = set.relation_index();
    let sk = tree.skeleton();
    let mut report = VerifyReport::default();
    for (t, m) in table.types.iter().zip(&matched) {
        let Some(rid) = *m else {
            if !t.is_root_type {
                report.uncovered.push(t.id);
            }
            continue;
        };
        let rels: Vec<&Relation> = t
            .domain
            .iter()
            .filter(|w| w.len() == set.h)
            .filter_map(|leaf| idx.get(&(rid, leaf)).copied())
            .collect();
        let found: Vec<Violation> = t
            .occurrences
            .par_iter()
            .flat_map_iter(|&root| {
                rels.iter().filter_map(move |r| {
                    let actual = tree.decoration(sk.descend(root, r.leaf.digits())?).clone();
                    let expected = r.apply(|v| {
                        tree.decoration(sk.descend(root, v.digits()).expect("internal node"))
                            .clone()
                    });
                    (expected != actual).then(|| Violation {
                        root,
                        type_id: rid,
                        leaf: r.leaf.clone(),
                        expected,
                        actual,
                    })
                })
            })
            .collect();
        report.checked += t.occurrences.len() * rels.len();
        report.violations.extend(found);
    }
    Ok(report)
}

/// Rewrites an `h`-relation set as an `(h+1)`-relation set: each leaf `a·u`
/// of a height-`(h+1)` factor is a leaf `u` of the height-`h` factor of the
/// child `a`, so its relation is the child's relation with every word
/// prefixed by `a`.
pub fn lift(set: &RelationSet, tree: &TreePrefix) -> Result<RelationSet, LinearityError> {
    set.validate()?;
    set.check_system(tree.system())?;
    let h = set.h;
    let table = tree.classify(h + 1)?;
    let idx = set.relation_index();
    let sys = &set.system;
    let fmt_domain = |d: &[Word]| {
        let words: Vec<String> = d.iter().map(|w| sys.format_word(w)).collect();
        format!("{{{}}}", words.join(","))
    };
    let mut out = RelationSet::new(sys.clone(), h + 1);
    out.root_policy = set.root_policy;
    for t in &table.types {
        if t.is_root_type && set.root_policy == RootPolicy::Exclude {
            continue;
        }
        out.types.push(RelType {
            id: t.id,
            domain: t.domain.clone(),
            is_root: t.is_root_type,
        });
        for leaf in t.domain.iter().filter(|w| w.len() == h + 1) {
            let a = leaf.digits()[0];
            let child_domain: Vec<Word> = t
                .domain
                .iter()
                .filter(|w| w.digits().first() == Some(&a))
                .map(|w| Word(w.digits()[1..].to_vec()))
                .chain(std::iter::once(Word::empty()))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let Some(cid) = set.find_domain(&child_domain) else {
                return Err(LinearityError::UncoveredType(fmt_domain(&child_domain)));
            };
            let u = Word(leaf.digits()[1..].to_vec());
            let Some(rel) = idx.get(&(cid, &u)) else {
                return Err(LinearityError::MissingRelation {
                    type_id: cid,
                    domain: fmt_domain(&child_domain),
                    leaf: sys.format_word(&u),
                });
            };
            out.relations.push(Relation::new(
                t.id,
                leaf.clone(),
                rel.coeffs.iter().map(|(v, c)| (v.prepend(a), c.clone())),
            ));
        }
    }
    Ok(out)
}

/// Extends a decorated prefix to `target_levels` levels: each node at level
/// `m` beyond the prefix gets the value prescribed by the relation of its
/// ancestor at level `m − h`.
pub fn extend(
    prefix: &TreePrefix,
    set: &RelationSet,
    target_levels: usize,
) -> Result<TreePrefix, LinearityError> {
    set.validate()?;
    set.check_system(prefix.system())?;
    let h = set.h;
    let have = prefix.levels();
    let root_included = set.root_type().is_some();
    if have + 1 < h || (!root_included && have < h) {
        return Err(LinearityError::ShortPrefix {
            required: if root_included { h } else { h + 1 },
            available: have + 1,
        });
    }
    if target_levels <= have {
        let sk = Skeleton::build(prefix.system(), target_levels, usize::MAX)?;
        let n = sk.len();
        return Ok(TreePrefix::new(sk, prefix.decorations()[..n].to_vec())?);
    }
    let sk = Skeleton::build(prefix.system(), target_levels, crate::node_budget())?;
    let table = TypeTable::classify(&sk, h)?;
    let matched = set.match_types(&table);
    let idx = set.relation_index();
    let sys = &set.system;
    let mut dec: Vec<Rational> = prefix.decorations()[..sk.level_range(have).end].to_vec();
    dec.reserve(sk.len() - dec.len());
    for level in have + 1..=target_levels {
        for node in sk.level_range(level) {
            let anc = sk.ancestor(node, h);
            let tid = table.type_of(anc).expect("ancestor classified");
            let fmt_domain = || {
                let words: Vec<String> = table.types[tid]
                    .domain
                    .iter()
                    .map(|w| sys.format_word(w))
                    .collect();
                format!("{{{}}}", words.join(","))
            };
            let Some(rid) = matched[tid] else {
                return Err(LinearityError::UncoveredType(fmt_domain()));
            };
            let u = sk.relative_word(anc, node);
            let Some(rel) = idx.get(&(rid, &u)) else {
                return Err(LinearityError::MissingRelation {
                    type_id: rid,
                    domain: fmt_domain(),
                    leaf: sys.format_word(&u),
                });
            };
            let value = rel.apply(|v| dec[sk.descend(anc, v.digits()).expect("internal node")].clone());
            dec.push(value);
        }
    }
    Ok(TreePrefix::new(sk, dec)?)
}

/// `true` when `x` is `1`; convenient for reading coefficient maps.
pub fn is_one(x: &Rational) -> bool {
    x.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{rat, ratio};
    use crate::numsys::w;

    fn sumdigits_tree(levels: usize) -> TreePrefix {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let sk = Skeleton::build(&sys, levels, 1 << 22).unwrap();
        let dec = (0..sk.len())
            .map(|n| rat(sk.word(n).digits().iter().map(|&d| d as i64).sum()))
            .collect();
        TreePrefix::new(sk, dec).unwrap()
    }

    #[test]
    fn guess_sumdigits_and_verify() {
        let tree = sumdigits_tree(16);
        let (set, report) = guess(&tree, 2, &GuessOptions::default()).unwrap();
        assert!(report.all_solved(), "{report:?}");
        assert!(set.is_complete());
        assert!(verify(&tree, &set).unwrap().ok());
        let lifted = lift(&set, &tree).unwrap();
        assert_eq!(lifted.h, 3);
        assert!(verify(&tree, &lifted).unwrap().ok());
    }

    #[test]
    fn corrupted_coefficient_is_caught() {
        let tree = sumdigits_tree(12);
        let (mut set, _) = guess(&tree, 2, &GuessOptions::default()).unwrap();
        let r = &mut set.relations[0];
        let k = r.coeffs.keys().next().cloned().unwrap_or_else(Word::empty);
        *r.coeffs.entry(k).or_insert_with(Rational::zero) += rat(1);
        assert!(!verify(&tree, &set).unwrap().ok());
    }

    #[test]
    fn json_roundtrip() {
        let tree = sumdigits_tree(12);
        let (set, _) = guess(&tree, 2, &GuessOptions::default()).unwrap();
        let back = RelationSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn validation_rejects_bad_leaf() {
        let sys = NumerationSystem::integer_base(2).unwrap();
        let mut set = RelationSet::new(sys, 1);
        let t = set.add_type(vec![w(""), w("0"), w("1")], false);
        set.add(t, "00", &[("", ratio(1, 2))]);
        assert!(set.validate().is_err());
    }
}
