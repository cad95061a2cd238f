//! Graph-directed linear representations: a verified relation set compiled
//! into one matrix per step, so that `x_n` costs `|rep(n)| − h + 1`
//! matrix-vector products.
//!
//! The state vector at a node `u` holds `x_{u·z}` for every `z` in the index
//! set `D` (all words of length `< h` occurring in some factor domain, zero
//! where `u·z` is absent). Stepping from `u` to `u·a` copies entries for
//! `|z| ≤ h−2` and applies the relations of the type of `u` for `|z| = h−1`.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dectree::{residue_domains, state_domain, window_type_map, DectreeError, TreePrefix};
use crate::exactlin::{solve_canonical, Nat, RatMatrix, Rational};
use crate::linearity::{LinearityError, Relation, RelationSet};
use crate::numsys::{Dfa, Digit, NumerationSystem, NumsysError, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GdlrError {
    #[error(transparent)]
    Linearity(#[from] LinearityError),
    #[error(transparent)]
    Tree(#[from] DectreeError),
    #[error(transparent)]
    Numsys(#[from] NumsysError),
    #[error("no relation set type has the domain of {0}")]
    MissingType(String),
    #[error("missing relation for type {type_id} at leaf {leaf}")]
    MissingRelation { type_id: usize, leaf: String },
    #[error("no step for {0}")]
    MissingStep(String),
    #[error("word {0} has no output row")]
    MissingOutput(String),
    #[error("root relation at leaf {0} cannot be fitted from the prefix")]
    RootFit(String),
    #[error("malformed representation: {0}")]
    Json(String),
}

/// How the step matrix for the next letter is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepMode {
    /// Rational base: the `h` letters starting at the current position
    /// determine the current node's type.
    Window,
    /// Regular language: the automaton state of the current node determines
    /// its type; `state_types[s]` is the type of non-root nodes in state `s`.
    Typed {
        dfa: Dfa,
        state_types: Vec<Option<usize>>,
        root_type: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StepKey {
    Window(Word),
    /// Window-mode step taken from the root when the generic matrix does not
    /// apply there.
    RootWindow(Word),
    Typed { type_id: usize, digit: Digit },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gdlr {
    pub system: NumerationSystem,
    pub h: usize,
    /// Index set `D`, radix order, `ε` first.
    pub index: Vec<Word>,
    pub initial: Vec<Rational>,
    pub steps: BTreeMap<StepKey, RatMatrix>,
    pub mode: StepMode,
}

impl Gdlr {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn position(&self, w: &Word) -> Option<usize> {
        self.index.binary_search(w).ok()
    }

    /// Compiles `set` using `tree` for the root prefix `T[ε, h−1]` (and,
    /// where needed, for fitting root relations).
    pub fn build(set: &RelationSet, tree: &TreePrefix) -> Result<Gdlr, GdlrError> {
        set.validate()?;
        let sys = set.system.clone();
        if tree.system() != &sys {
            return Err(LinearityError::SystemMismatch {
                expected: sys.to_string(),
                found: tree.system().to_string(),
            }
            .into());
        }
        let h = set.h;
        let root_factor = tree.factor(0, h)?;
        let mut index: Vec<Word> = set
            .types
            .iter()
            .flat_map(|t| t.domain.iter())
            .chain(root_factor.domain.iter())
            .filter(|w| w.len() < h)
            .cloned()
            .collect();
        index.sort();
        index.dedup();
        let initial = index
            .iter()
            .map(|w| root_factor.decoration_of(w).cloned().unwrap_or_else(Rational::zero))
            .collect();
        let mut g = Gdlr {
            system: sys.clone(),
            h,
            index,
            initial,
            steps: BTreeMap::new(),
            mode: StepMode::Window,
        };
        let fmt_domain = |d: &[Word]| {
            let ws: Vec<String> = d.iter().map(|w| sys.format_word(w)).collect();
            format!("{{{}}}", ws.join(","))
        };
        let root_relations = root_relations(set, tree, &root_factor.domain)?;
        match sys.base_ratio().filter(|&(_, q)| q > 1) {
            Some(_) => {
                let residue_type: BTreeMap<u64, usize> = residue_domains(&sys, h)
                    .into_iter()
                    .map(|(r, d)| {
                        set.find_domain(&d)
                            .map(|t| (r, t))
                            .ok_or_else(|| GdlrError::MissingType(fmt_domain(&d)))
                    })
                    .collect::<Result<_, _>>()?;
                for (window, r) in window_type_map(&sys, h) {
                    let t = residue_type[&r];
                    let m = g.step_matrix(set, t, window.digits()[0])?;
                    g.steps.insert(StepKey::Window(window), m);
                }
                // Root steps: only where the generic window matrix is wrong.
                let leaves: Vec<&Word> = root_factor.domain.iter().filter(|w| w.len() == h).collect();
                for window in leaves {
                    let a = window.digits()[0];
                    let generic = &g.steps[&StepKey::Window(window.clone())];
                    let child = tree.skeleton().child(0, a).expect("root child");
                    let actual = g.vector_at(tree, child)?;
                    if generic.mul_vec(&g.initial).expect("square") != actual {
                        let m = g.root_matrix(&root_relations, a, &root_factor.domain)?;
                        g.steps.insert(StepKey::RootWindow(window.clone()), m);
                    }
                }
            }
            None => {
                let dfa = sys.dfa().expect("integer bases and regular systems have automata");
                let root_type = set
                    .root_type()
                    .map(|t| t.id)
                    .unwrap_or_else(|| set.types.iter().map(|t| t.id + 1).max().unwrap_or(0));
                let mut state_types = Vec::new();
                let mut targets = vec![false; dfa.states()];
                for s in 0..dfa.states() {
                    for (_, t) in dfa.out_edges(s) {
                        targets[t] = true;
                    }
                }
                for (s, &is_target) in targets.iter().enumerate() {
                    if !is_target {
                        state_types.push(None);
                        continue;
                    }
                    let d = state_domain(&dfa, s, h);
                    let t = set
                        .find_domain(&d)
                        .ok_or_else(|| GdlrError::MissingType(fmt_domain(&d)))?;
                    state_types.push(Some(t));
                }
                let mut seen = std::collections::BTreeSet::new();
                for (s, t) in state_types.iter().enumerate() {
                    let Some(t) = *t else { continue };
                    for (a, _) in dfa.out_edges(s) {
                        if seen.insert((t, a)) {
                            let m = g.step_matrix(set, t, a)?;
                            g.steps.insert(StepKey::Typed { type_id: t, digit: a }, m);
                        }
                    }
                }
                for (a, _) in dfa.out_edges(dfa.initial()) {
                    let m = g.root_matrix(&root_relations, a, &root_factor.domain)?;
                    g.steps.insert(StepKey::Typed { type_id: root_type, digit: a }, m);
                }
                g.mode = StepMode::Typed {
                    dfa,
                    state_types,
                    root_type,
                };
            }
        }
        Ok(g)
    }

    /// State vector at `node`, read from the tree.
    fn vector_at(&self, tree: &TreePrefix, node: usize) -> Result<Vec<Rational>, GdlrError> {
        let f = tree.factor(node, self.h - 1)?;
        Ok(self
            .index
            .iter()
            .map(|w| f.decoration_of(w).cloned().unwrap_or_else(Rational::zero))
            .collect())
    }

    fn matrix_from(&self, a: Digit, mut relation: impl FnMut(&Word) -> Option<Relation>) -> RatMatrix {
        let n = self.dim();
        let mut m = RatMatrix::zeros(n, n);
        for (i, z) in self.index.iter().enumerate() {
            let az = z.prepend(a);
            if z.len() + 1 < self.h {
                if let Some(j) = self.position(&az) {
                    m.set(i, j, Rational::from_integer(1.into()));
                }
            } else if let Some(rel) = relation(&az) {
                for (v, c) in &rel.coeffs {
                    let j = self.position(v).expect("internal words are indexed");
                    m.set(i, j, c.clone());
                }
            }
        }
        m
    }

    fn step_matrix(&self, set: &RelationSet, type_id: usize, a: Digit) -> Result<RatMatrix, GdlrError> {
        let t = set.type_info(type_id).expect("known type");
        let mut missing = None;
        let m = self.matrix_from(a, |leaf| {
            if t.domain.binary_search(leaf).is_err() {
                return None;
            }
            let r = set.relation(type_id, leaf).cloned();
            if r.is_none() {
                missing = Some(leaf.clone());
            }
            r
        });
        if let Some(leaf) = missing {
            return Err(GdlrError::MissingRelation {
                type_id,
                leaf: self.system.format_word(&leaf),
            });
        }
        Ok(m)
    }

    fn root_matrix(
        &self,
        relations: &BTreeMap<Word, Relation>,
        a: Digit,
        root_domain: &[Word],
    ) -> Result<RatMatrix, GdlrError> {
        Ok(self.matrix_from(a, |leaf| {
            if root_domain.binary_search(leaf).is_err() {
                return None;
            }
            relations.get(leaf).cloned()
        }))
    }

    /// `x_n` for the value `n`.
    pub fn eval(&self, n: &Nat) -> Result<Rational, GdlrError> {
        let w = self.system.rep(n)?;
        self.eval_word(&w)
    }

    pub fn eval_word(&self, w: &Word) -> Result<Rational, GdlrError> {
        Ok(self.eval_traced(w)?.0)
    }

    /// Value together with the number of matrix-vector products used.
    pub fn eval_traced(&self, w: &Word) -> Result<(Rational, usize), GdlrError> {
        let (v, steps) = self.final_vector(w)?;
        if w.len() < self.h {
            let i = self.position(w).ok_or_else(|| GdlrError::MissingOutput(self.system.format_word(w)))?;
            return Ok((v[i].clone(), steps));
        }
        let d = w.digits();
        let tail = Word(d[d.len() - (self.h - 1)..].to_vec());
        let i = self
            .position(&tail)
            .ok_or_else(|| GdlrError::MissingOutput(self.system.format_word(&tail)))?;
        Ok((v[i].clone(), steps))
    }

    /// State vector after all steps for `w` (the initial vector when
    /// `|w| < h`), with the number of products.
    pub fn final_vector(&self, w: &Word) -> Result<(Vec<Rational>, usize), GdlrError> {
        if !self.system.is_valid(w) {
            return Err(NumsysError::NotInLanguage(self.system.format_word(w)).into());
        }
        let h = self.h;
        let fmt = |w: &Word| self.system.format_word(w);
        if w.len() < h {
            return Ok((self.initial.clone(), 0));
        }
        let d = w.digits();
        let steps = d.len() - h + 1;
        let mut v = self.initial.clone();
        let mut state = match &self.mode {
            StepMode::Typed { dfa, .. } => dfa.initial(),
            StepMode::Window => 0,
        };
        for i in 0..steps {
            let m = match &self.mode {
                StepMode::Window => {
                    let win = Word(d[i..i + h].to_vec());
                    let root = (i == 0)
                        .then(|| self.steps.get(&StepKey::RootWindow(win.clone())))
                        .flatten();
                    match root {
                        Some(m) => m,
                        None => self
                            .steps
                            .get(&StepKey::Window(win.clone()))
                            .ok_or_else(|| GdlrError::MissingStep(format!("window:{}", fmt(&win))))?,
                    }
                }
                StepMode::Typed {
                    dfa,
                    state_types,
                    root_type,
                } => {
                    let t = if i == 0 {
                        *root_type
                    } else {
                        state_types[state].expect("non-initial state has a type")
                    };
                    let key = StepKey::Typed { type_id: t, digit: d[i] };
                    state = dfa.step(state, d[i]).expect("valid word");
                    self.steps
                        .get(&key)
                        .ok_or_else(|| GdlrError::MissingStep(format!("type:{t},digit:{}", d[i])))?
                }
            };
            v = m.mul_vec(&v).expect("square matrices");
        }
        Ok((v, steps))
    }

    /// Output row selecting the entry of `suffix`.
    pub fn output_row(&self, suffix: &Word) -> Option<Vec<Rational>> {
        let i = self.position(suffix)?;
        Some(
            (0..self.dim())
                .map(|j| Rational::from_integer(i64::from(i == j).into()))
                .collect(),
        )
    }

    pub fn key_string(&self, k: &StepKey) -> String {
        match k {
            StepKey::Window(w) => format!("window:{}", self.system.format_word(w)),
            StepKey::RootWindow(w) => format!("root-window:{}", self.system.format_word(w)),
            StepKey::Typed { type_id, digit } => format!("type:{type_id},digit:{digit}"),
        }
    }

    fn parse_key(&self, s: &str) -> Result<StepKey, GdlrError> {
        let bad = || GdlrError::Json(format!("bad step key {s:?}"));
        if let Some(w) = s.strip_prefix("window:") {
            return Ok(StepKey::Window(self.system.parse_word(w)?));
        }
        if let Some(w) = s.strip_prefix("root-window:") {
            return Ok(StepKey::RootWindow(self.system.parse_word(w)?));
        }
        let rest = s.strip_prefix("type:").ok_or_else(bad)?;
        let (t, d) = rest.split_once(",digit:").ok_or_else(bad)?;
        Ok(StepKey::Typed {
            type_id: t.parse().map_err(|_| bad())?,
            digit: d.parse().map_err(|_| bad())?,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let fmt = |w: &Word| self.system.format_word(w);
        let mat = |m: &RatMatrix| -> Vec<Vec<String>> {
            m.to_rows()
                .iter()
                .map(|r| r.iter().map(crate::exactlin::format_rational).collect())
                .collect()
        };
        let (dfa, state_types, root_type) = match &self.mode {
            StepMode::Window => (None, None, None),
            StepMode::Typed {
                dfa,
                state_types,
                root_type,
            } => (Some(dfa.to_json()), Some(state_types.clone()), Some(*root_type)),
        };
        let j = GdlrJson {
            system: self.system.descriptor(),
            h: self.h,
            mode: if dfa.is_some() { "typed" } else { "window" }.into(),
            index: self.index.iter().map(fmt).collect(),
            initial: self.initial.clone(),
            steps: self
                .steps
                .iter()
                .map(|(k, m)| (self.key_string(k), mat(m)))
                .collect(),
            outputs: self
                .index
                .iter()
                .map(|w| {
                    let row = self.output_row(w).expect("indexed");
                    (fmt(w), row.iter().map(crate::exactlin::format_rational).collect())
                })
                .collect(),
            dfa,
            state_types,
            root_type,
        };
        serde_json::to_value(j).expect("representation serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Gdlr, GdlrError> {
        let j: GdlrJson =
            serde_json::from_value(v.clone()).map_err(|e| GdlrError::Json(e.to_string()))?;
        let system = NumerationSystem::from_descriptor(&j.system)?;
        let index = j
            .index
            .iter()
            .map(|s| system.parse_word(s))
            .collect::<Result<Vec<_>, _>>()?;
        if j.initial.len() != index.len() {
            return Err(GdlrError::Json("initial vector length differs from index".into()));
        }
        let mode = match j.mode.as_str() {
            "window" => StepMode::Window,
            "typed" => {
                let dfa = j.dfa.as_ref().ok_or_else(|| GdlrError::Json("typed mode needs dfa".into()))?;
                StepMode::Typed {
                    dfa: Dfa::from_json(dfa)?,
                    state_types: j.state_types.clone().unwrap_or_default(),
                    root_type: j.root_type.unwrap_or(0),
                }
            }
            m => return Err(GdlrError::Json(format!("unknown mode {m:?}"))),
        };
        let mut g = Gdlr {
            system,
            h: j.h,
            index,
            initial: j.initial,
            steps: BTreeMap::new(),
            mode,
        };
        for (k, rows) in &j.steps {
            let key = g.parse_key(k)?;
            let rows = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|x| crate::exactlin::parse_rational(x))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| GdlrError::Json(e.to_string()))?;
            let m = RatMatrix::from_rows(rows).map_err(|e| GdlrError::Json(e.to_string()))?;
            if m.rows() != g.dim() || m.cols() != g.dim() {
                return Err(GdlrError::Json(format!("step {k} is not {0}x{0}", g.dim())));
            }
            g.steps.insert(key, m);
        }
        Ok(g)
    }
}

#[derive(Serialize, Deserialize)]
struct GdlrJson {
    system: serde_json::Value,
    h: usize,
    mode: String,
    index: Vec<String>,
    #[serde(with = "crate::exactlin::serde_rational_vec")]
    initial: Vec<Rational>,
    steps: BTreeMap<String, Vec<Vec<String>>>,
    outputs: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dfa: Option<crate::numsys::DfaJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_types: Option<Vec<Option<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_type: Option<usize>,
}

/// Root relations, keyed by leaf: taken from the relation set when it has a
/// root type, otherwise fitted on the single root occurrence.
fn root_relations(
    set: &RelationSet,
    tree: &TreePrefix,
    root_domain: &[Word],
) -> Result<BTreeMap<Word, Relation>, GdlrError> {
    let h = set.h;
    if let Some(rt) = set.root_type() {
        return Ok(set
            .relations
            .iter()
            .filter(|r| r.type_id == rt.id)
            .map(|r| (r.leaf.clone(), r.clone()))
            .collect());
    }
    let f = tree.factor(0, h)?;
    let internal: Vec<Word> = root_domain.iter().filter(|w| w.len() < h).cloned().collect();
    let row: Vec<Rational> = internal
        .iter()
        .map(|w| f.decoration_of(w).cloned().expect("in domain"))
        .collect();
    let a = RatMatrix::from_rows(vec![row]).expect("one row");
    let mut out = BTreeMap::new();
    for leaf in root_domain.iter().filter(|w| w.len() == h) {
        let b = vec![f.decoration_of(leaf).cloned().expect("in domain")];
        let x = solve_canonical(&a, &b)
            .expect("dimensions agree")
            .ok_or_else(|| GdlrError::RootFit(set.system.format_word(leaf)))?;
        out.insert(
            leaf.clone(),
            Relation::new(usize::MAX, leaf.clone(), internal.iter().cloned().zip(x)),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{rat, ratio};
    use crate::numsys::w;
    use crate::seqlib::{fixtures, SequenceSource};

    #[test]
    fn fibonacci_matrices_and_eval() {
        let sys = NumerationSystem::fibonacci();
        let seq = fixtures::zeck_subwords_extension();
        let tree = TreePrefix::build(&sys, &seq, 8).unwrap();
        let g = Gdlr::build(&fixtures::zeck_subwords_relations(), &tree).unwrap();
        assert_eq!(g.index, vec![w(""), w("0"), w("1")]);
        assert_eq!(g.initial, vec![rat(1), rat(0), rat(2)]);
        let m01 = &g.steps[&StepKey::Typed { type_id: 0, digit: 1 }];
        assert_eq!(m01, &RatMatrix::from_i64(&[&[0, 0, 1], &[-1, 0, 2], &[0, 0, 0]]));
        let m21 = &g.steps[&StepKey::Typed { type_id: 2, digit: 1 }];
        let expect = RatMatrix::from_rows(vec![
            vec![rat(0), rat(0), rat(1)],
            vec![rat(0), rat(0), ratio(3, 2)],
            vec![rat(0), rat(0), rat(0)],
        ])
        .unwrap();
        assert_eq!(m21, &expect);
        let (v, steps) = g.eval_traced(&w("10010")).unwrap();
        assert_eq!(v, rat(9));
        assert_eq!(steps, 4);
        let back = Gdlr::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn sumdigits_window_eval() {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let tree = TreePrefix::build(&sys, &SequenceSource::sumdigits(), 10).unwrap();
        let g = Gdlr::build(&fixtures::sumdigits_matrix_relations(), &tree).unwrap();
        assert_eq!(g.steps.len(), 9);
        assert_eq!(g.initial, vec![rat(0), rat(0), rat(0), rat(2)]);
        assert_eq!(g.eval(&22u32.into()).unwrap(), rat(8));
        for n in 0..tree.len() {
            assert_eq!(&g.eval(&Nat::from(n)).unwrap(), tree.decoration(n));
        }
    }
}
