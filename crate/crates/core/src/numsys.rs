//! Numeration systems: integer bases, rational bases `p/q` and regular
//! abstract numeration systems given by a deterministic automaton. Each
//! system ranks a prefix-closed language in radix order, which is what makes
//! the set of representations a tree with node `n` at breadth-first index `n`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{Nat, Rational};

pub type Digit = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumsysError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid DFA: {0}")]
    InvalidDfa(String),
    #[error("word {0} is not in the language")]
    NotInLanguage(String),
    #[error("invalid word: {0}")]
    InvalidWord(String),
}

/// A finite word over a digit alphabet. Ordering is radix (genealogical)
/// order: shorter words first, then lexicographic.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Digit>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_digits(d: &[Digit]) -> Self {
        Word(d.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digits(&self) -> &[Digit] {
        &self.0
    }

    pub fn push(&mut self, d: Digit) {
        self.0.push(d);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn with(&self, d: Digit) -> Word {
        let mut v = self.0.clone();
        v.push(d);
        Word(v)
    }

    pub fn prepend(&self, d: Digit) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(d);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn ends_with(&self, suffix: &Word) -> bool {
        self.0.ends_with(&suffix.0)
    }

    /// Formats for a system with `alphabet_size` letters: plain digit
    /// strings up to ten letters, comma-separated digits otherwise.
    pub fn format(&self, alphabet_size: usize) -> String {
        if alphabet_size <= 10 {
            self.0
                .iter()
                .map(|d| char::from_digit(*d, 10).unwrap_or('?'))
                .collect()
        } else {
            self.0.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
        }
    }

    /// Inverse of [`Word::format`]. `"ε"` and `""` denote the empty word.
    pub fn parse(s: &str, alphabet_size: usize) -> Result<Word, NumsysError> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Word::empty());
        }
        let digits: Result<Vec<Digit>, _> = if alphabet_size <= 10 && !s.contains(',') {
            s.chars()
                .map(|c| c.to_digit(10).ok_or(()))
                .collect::<Result<Vec<_>, _>>()
        } else {
            s.split(',')
                .map(|t| t.trim().parse::<Digit>().map_err(|_| ()))
                .collect::<Result<Vec<_>, _>>()
        };
        digits
            .map(Word)
            .map_err(|_| NumsysError::InvalidWord(s.to_string()))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let size = if self.0.iter().all(|&d| d < 10) { 10 } else { 11 };
        write!(f, "{}", self.format(size))
    }
}

impl FromStr for Word {
    type Err = NumsysError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word::parse(s, if s.contains(',') { 11 } else { 10 })
    }
}

/// Parses a word literal such as `"2120012"`. Panics on bad input; meant for
/// tests and fixtures.
pub fn w(s: &str) -> Word {
    s.parse().expect("bad word literal")
}

/// JSON shape of a DFA.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DfaJson {
    pub alphabet: Vec<Digit>,
    pub states: usize,
    pub initial: usize,
    pub transitions: Vec<[usize; 3]>,
}

/// A trim deterministic automaton in which every state is accepting, so the
/// accepted language is prefix-closed. Missing transitions go to an implicit
/// rejecting sink.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    alphabet: Vec<Digit>,
    initial: usize,
    delta: Vec<Vec<Option<usize>>>,
}

impl fmt::Debug for Dfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dfa({})", serde_json::to_string(&self.to_json()).unwrap_or_default())
    }
}

impl Dfa {
    /// Builds and validates an automaton from `(source, digit, target)`
    /// triples. All states must be reachable and the language infinite.
    pub fn new(
        alphabet: Vec<Digit>,
        states: usize,
        initial: usize,
        transitions: &[(usize, Digit, usize)],
    ) -> Result<Dfa, NumsysError> {
        let bad = |m: String| Err(NumsysError::InvalidDfa(m));
        if alphabet.is_empty() {
            return bad("empty alphabet".into());
        }
        if alphabet.windows(2).any(|p| p[0] >= p[1]) {
            return bad("alphabet must be strictly increasing".into());
        }
        if states == 0 || initial >= states {
            return bad(format!("initial state {initial} out of range for {states} states"));
        }
        let mut delta = vec![vec![None; alphabet.len()]; states];
        for &(s, d, t) in transitions {
            if s >= states || t >= states {
                return bad(format!("transition ({s},{d},{t}) references a missing state"));
            }
            let Ok(a) = alphabet.binary_search(&d) else {
                return bad(format!("digit {d} not in alphabet"));
            };
            if delta[s][a].is_some_and(|old| old != t) {
                return bad(format!("non-deterministic transitions from state {s} on {d}"));
            }
            delta[s][a] = Some(t);
        }
        let dfa = Dfa {
            alphabet,
            initial,
            delta,
        };
        let reach = dfa.reachable();
        if let Some(s) = reach.iter().position(|r| !r) {
            return bad(format!("state {s} is unreachable"));
        }
        if !dfa.has_cycle() {
            return bad("accepted language is finite".into());
        }
        Ok(dfa)
    }

    pub fn from_json(j: &DfaJson) -> Result<Dfa, NumsysError> {
        let t: Vec<(usize, Digit, usize)> = j
            .transitions
            .iter()
            .map(|&[s, d, t]| (s, d as Digit, t))
            .collect();
        Dfa::new(j.alphabet.clone(), j.states, j.initial, &t)
    }

    pub fn from_json_str(s: &str) -> Result<Dfa, NumsysError> {
        let j: DfaJson =
            serde_json::from_str(s).map_err(|e| NumsysError::InvalidDfa(e.to_string()))?;
        Dfa::from_json(&j)
    }

    pub fn to_json(&self) -> DfaJson {
        let mut transitions = Vec::new();
        for (s, row) in self.delta.iter().enumerate() {
            for (a, t) in row.iter().enumerate() {
                if let Some(t) = t {
                    transitions.push([s, self.alphabet[a] as usize, *t]);
                }
            }
        }
        DfaJson {
            alphabet: self.alphabet.clone(),
            states: self.delta.len(),
            initial: self.initial,
            transitions,
        }
    }

    pub fn alphabet(&self) -> &[Digit] {
        &self.alphabet
    }

    pub fn states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn step(&self, state: usize, d: Digit) -> Option<usize> {
        let a = self.alphabet.binary_search(&d).ok()?;
        self.delta[state][a]
    }

    pub fn run(&self, word: &[Digit]) -> Option<usize> {
        word.iter().try_fold(self.initial, |s, &d| self.step(s, d))
    }

    pub fn accepts(&self, word: &[Digit]) -> bool {
        self.run(word).is_some()
    }

    /// Transitions out of `state` in increasing digit order.
    pub fn out_edges(&self, state: usize) -> impl Iterator<Item = (Digit, usize)> + '_ {
        self.delta[state]
            .iter()
            .enumerate()
            .filter_map(move |(a, t)| t.map(|t| (self.alphabet[a], t)))
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.delta.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for (_, t) in self.out_edges(s) {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    fn has_cycle(&self) -> bool {
        // Kahn's algorithm: a cycle remains iff not every state is removed.
        let n = self.delta.len();
        let mut indeg = vec![0usize; n];
        for s in 0..n {
            for (_, t) in self.out_edges(s) {
                indeg[t] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| indeg[s] == 0).collect();
        let mut removed = 0;
        while let Some(s) = queue.pop_front() {
            removed += 1;
            for (_, t) in self.out_edges(s) {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
        removed < n
    }

    /// Minimal equivalent automaton, states renumbered in breadth-first
    /// order from the initial state (digits in increasing order).
    pub fn minimize(&self) -> Dfa {
        let n = self.delta.len();
        let sink = n;
        let target = |s: usize, a: usize| -> usize {
            if s == sink {
                sink
            } else {
                self.delta[s][a].unwrap_or(sink)
            }
        };
        // Moore refinement: all real states accept, the sink rejects.
        let mut class: Vec<usize> = (0..=n).map(|s| usize::from(s == sink)).collect();
        loop {
            let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next = vec![0; n + 1];
            for s in 0..=n {
                let mut sig = vec![class[s]];
                sig.extend((0..self.alphabet.len()).map(|a| class[target(s, a)]));
                let len = ids.len();
                next[s] = *ids.entry(sig).or_insert(len);
            }
            let stable = ids.len() == class.iter().collect::<std::collections::HashSet<_>>().len();
            class = next;
            if stable {
                break;
            }
        }
        // Renumber by BFS.
        let mut order: HashMap<usize, usize> = HashMap::new();
        let mut reps: Vec<usize> = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        order.insert(class[self.initial], 0);
        reps.push(self.initial);
        while let Some(s) = queue.pop_front() {
            for (_, t) in self.out_edges(s) {
                let c = class[t];
                if let std::collections::hash_map::Entry::Vacant(e) = order.entry(c) {
                    e.insert(reps.len());
                    reps.push(t);
                    queue.push_back(t);
                }
            }
        }
        let delta = reps
            .iter()
            .map(|&s| {
                (0..self.alphabet.len())
                    .map(|a| self.delta[s][a].map(|t| order[&class[t]]))
                    .collect()
            })
            .collect();
        Dfa {
            alphabet: self.alphabet.clone(),
            initial: 0,
            delta,
        }
    }

    /// Number of accepted words of each length `0..=len` starting from each
    /// state: `table[l][s]`.
    fn count_table(&self, len: usize) -> Vec<Vec<Nat>> {
        let n = self.delta.len();
        let mut table = vec![vec![Nat::from(1u32); n]];
        for l in 1..=len {
            let prev = &table[l - 1];
            let row = (0..n)
                .map(|s| {
                    self.out_edges(s)
                        .fold(Nat::zero(), |acc, (_, t)| acc + &prev[t])
                })
                .collect();
            table.push(row);
        }
        table
    }
}

/// Automaton for base-`k` representations without leading zeros.
pub fn integer_base_dfa(k: u32) -> Dfa {
    let mut t = Vec::new();
    for d in 1..k {
        t.push((0, d, 1));
    }
    for d in 0..k {
        t.push((1, d, 1));
    }
    Dfa::new((0..k).collect(), 2, 0, &t).expect("base-k automaton")
}

/// Automaton for Zeckendorf representations: words over {0,1} starting with
/// 1 and without factor 11.
pub fn fibonacci_dfa() -> Dfa {
    Dfa::new(vec![0, 1], 3, 0, &[(0, 1, 1), (1, 0, 2), (2, 0, 2), (2, 1, 1)])
        .expect("Fibonacci automaton")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NumerationSystem {
    /// Base `k ≥ 2`, digits `0..k`, no leading zero.
    IntegerBase { k: u32 },
    /// Rational base `p/q` with `p > q ≥ 1` coprime; digits `0..p`.
    RationalBase { p: u32, q: u32 },
    /// Language of a trim prefix-closed automaton, ranked in radix order.
    Regular { dfa: Dfa, name: Option<String> },
}

/// Navigation state attached to a node while walking the tree top-down.
pub type Cursor = usize;

impl NumerationSystem {
    pub fn integer_base(k: u32) -> Result<Self, NumsysError> {
        if k < 2 {
            return Err(NumsysError::InvalidSystem(format!("base {k} < 2")));
        }
        Ok(NumerationSystem::IntegerBase { k })
    }

    pub fn rational_base(p: u32, q: u32) -> Result<Self, NumsysError> {
        if q == 0 || p <= q {
            return Err(NumsysError::InvalidSystem(format!("{p}/{q}: need p > q >= 1")));
        }
        if p.gcd(&q) != 1 {
            return Err(NumsysError::InvalidSystem(format!("{p}/{q} is not in lowest terms")));
        }
        if q == 1 {
            return Self::integer_base(p);
        }
        Ok(NumerationSystem::RationalBase { p, q })
    }

    pub fn regular(dfa: Dfa) -> Self {
        NumerationSystem::Regular { dfa, name: None }
    }

    pub fn fibonacci() -> Self {
        NumerationSystem::Regular {
            dfa: fibonacci_dfa(),
            name: Some("fib".into()),
        }
    }

    /// Parses `"2"`, `"3/2"`, `"fib"`, `"dfa:FILE"`, or an inline DFA JSON
    /// object.
    pub fn from_spec(spec: &str) -> Result<Self, NumsysError> {
        let s = spec.trim();
        if s == "fib" || s == "fibonacci" {
            return Ok(Self::fibonacci());
        }
        if let Some(path) = s.strip_prefix("dfa:") {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| NumsysError::InvalidSystem(format!("{path}: {e}")))?;
            return Ok(Self::regular(Dfa::from_json_str(&text)?));
        }
        if s.starts_with('{') {
            return Ok(Self::regular(Dfa::from_json_str(s)?));
        }
        let bad = || NumsysError::InvalidSystem(s.to_string());
        match s.split_once('/') {
            Some((p, q)) => {
                let p = p.trim().parse().map_err(|_| bad())?;
                let q = q.trim().parse().map_err(|_| bad())?;
                Self::rational_base(p, q)
            }
            None => Self::integer_base(s.parse().map_err(|_| bad())?),
        }
    }

    /// A JSON descriptor that [`NumerationSystem::from_descriptor`] accepts:
    /// a string for built-in systems, the DFA object otherwise.
    pub fn descriptor(&self) -> serde_json::Value {
        match self {
            NumerationSystem::IntegerBase { k } => k.to_string().into(),
            NumerationSystem::RationalBase { p, q } => format!("{p}/{q}").into(),
            NumerationSystem::Regular { name: Some(n), .. } => n.clone().into(),
            NumerationSystem::Regular { dfa, .. } => {
                serde_json::to_value(dfa.to_json()).expect("DFA serializes")
            }
        }
    }

    pub fn from_descriptor(v: &serde_json::Value) -> Result<Self, NumsysError> {
        match v {
            serde_json::Value::String(s) => Self::from_spec(s),
            serde_json::Value::Number(n) => Self::from_spec(&n.to_string()),
            other => {
                let j: DfaJson = serde_json::from_value(other.clone())
                    .map_err(|e| NumsysError::InvalidDfa(e.to_string()))?;
                Ok(Self::regular(Dfa::from_json(&j)?))
            }
        }
    }

    pub fn alphabet(&self) -> Vec<Digit> {
        match self {
            NumerationSystem::IntegerBase { k } => (0..*k).collect(),
            NumerationSystem::RationalBase { p, .. } => (0..*p).collect(),
            NumerationSystem::Regular { dfa, .. } => dfa.alphabet().to_vec(),
        }
    }

    /// Number of letters used when formatting words: one more than the
    /// largest digit.
    pub fn alphabet_size(&self) -> usize {
        self.alphabet().last().map_or(0, |&d| d as usize + 1)
    }

    pub fn format_word(&self, w: &Word) -> String {
        w.format(self.alphabet_size())
    }

    pub fn parse_word(&self, s: &str) -> Result<Word, NumsysError> {
        Word::parse(s, self.alphabet_size())
    }

    /// Digits `a` such that `rep(n)·a` is a representation, increasing.
    /// For regular systems the node's automaton state is needed; use
    /// [`NumerationSystem::children`] there.
    pub fn children_digits(&self, n: &Nat) -> Vec<Digit> {
        match self {
            NumerationSystem::IntegerBase { k } => {
                if n.is_zero() {
                    (1..*k).collect()
                } else {
                    (0..*k).collect()
                }
            }
            NumerationSystem::RationalBase { p, q } => {
                let pn = n * *p;
                (0..*p)
                    .filter(|&a| (&pn + a).is_multiple_of(&Nat::from(*q)))
                    .filter(|&a| !(n.is_zero() && a == 0))
                    .collect()
            }
            NumerationSystem::Regular { dfa, .. } => match self.rep(n) {
                Ok(w) => {
                    let s = dfa.run(w.digits()).expect("rep is accepted");
                    dfa.out_edges(s).map(|(d, _)| d).collect()
                }
                Err(_) => Vec::new(),
            },
        }
    }

    pub fn root_cursor(&self) -> Cursor {
        match self {
            NumerationSystem::Regular { dfa, .. } => dfa.initial(),
            _ => 0,
        }
    }

    /// Children of the node with value `n` and cursor `c`, as
    /// `(digit, child cursor)` in increasing digit order. Cheap enough for
    /// bulk tree construction.
    pub fn children(&self, n: u64, c: Cursor, out: &mut Vec<(Digit, Cursor)>) {
        out.clear();
        match self {
            NumerationSystem::IntegerBase { k } => {
                let start = u32::from(n == 0);
                out.extend((start..*k).map(|d| (d, 1)));
            }
            NumerationSystem::RationalBase { p, q } => {
                let (p64, q64) = (u64::from(*p), u64::from(*q));
                let r = (p64 * (n % q64)) % q64;
                // smallest a >= 0 with a ≡ -p n (mod q)
                let first = (q64 - r) % q64;
                let mut a = first;
                while a < p64 {
                    if !(n == 0 && a == 0) {
                        out.push((a as Digit, 0));
                    }
                    a += q64;
                }
            }
            NumerationSystem::Regular { dfa, .. } => {
                out.extend(dfa.out_edges(c));
            }
        }
    }

    /// Representation of `n` in this system.
    pub fn rep(&self, n: &Nat) -> Result<Word, NumsysError> {
        match self {
            NumerationSystem::IntegerBase { k } => {
                let mut digits = Vec::new();
                let mut m = n.clone();
                let k = Nat::from(*k);
                while !m.is_zero() {
                    let (quot, rem) = m.div_rem(&k);
                    digits.push(rem.to_u32().expect("digit"));
                    m = quot;
                }
                digits.reverse();
                Ok(Word(digits))
            }
            NumerationSystem::RationalBase { p, q } => {
                let mut digits = Vec::new();
                let mut m = n.clone();
                let p = Nat::from(*p);
                let q = Nat::from(*q);
                while !m.is_zero() {
                    let qm = &q * &m;
                    let a = &qm % &p;
                    digits.push(a.to_u32().expect("digit"));
                    m = (qm - a) / &p;
                }
                digits.reverse();
                Ok(Word(digits))
            }
            NumerationSystem::Regular { dfa, .. } => Ok(regular_unrank(dfa, n)),
        }
    }

    /// Value of a word, failing when it is not in the language.
    pub fn val(&self, w: &Word) -> Result<Nat, NumsysError> {
        let not_in = || NumsysError::NotInLanguage(self.format_word(w));
        match self {
            NumerationSystem::IntegerBase { k } => {
                if w.digits().first() == Some(&0) || w.digits().iter().any(|&d| d >= *k) {
                    return Err(not_in());
                }
                Ok(w.digits()
                    .iter()
                    .fold(Nat::zero(), |acc, &d| acc * *k + d))
            }
            NumerationSystem::RationalBase { p, q } => {
                if w.digits().first() == Some(&0) || w.digits().iter().any(|&d| d >= *p) {
                    return Err(not_in());
                }
                let q = Nat::from(*q);
                let mut v = Nat::zero();
                for &d in w.digits() {
                    let num = v * *p + d;
                    let (quot, rem) = num.div_rem(&q);
                    if !rem.is_zero() {
                        return Err(not_in());
                    }
                    v = quot;
                }
                Ok(v)
            }
            NumerationSystem::Regular { dfa, .. } => regular_rank(dfa, w).ok_or_else(not_in),
        }
    }

    pub fn is_valid(&self, w: &Word) -> bool {
        self.val(w).is_ok()
    }

    /// First `count` representations, in radix order.
    pub fn enumerate(&self, count: usize) -> Vec<Word> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        let mut level: Vec<(Word, u64, Cursor)> = vec![(Word::empty(), 0, self.root_cursor())];
        let mut next_index = 1u64;
        let mut buf = Vec::new();
        'outer: loop {
            let mut next = Vec::new();
            for (word, n, c) in &level {
                out.push(word.clone());
                if out.len() == count {
                    break 'outer;
                }
                self.children(*n, *c, &mut buf);
                for &(d, c2) in &buf {
                    next.push((word.with(d), next_index, c2));
                    next_index += 1;
                }
            }
            level = next;
        }
        out
    }

    /// For rational bases, the set of digits for each residue of `n` modulo
    /// `q`; for an integer base `k`, the single word `0 1 … k-1`.
    pub fn signature(&self) -> Option<Vec<Vec<Digit>>> {
        match self {
            NumerationSystem::IntegerBase { k } => Some(vec![(0..*k).collect()]),
            NumerationSystem::RationalBase { p, q } => Some(
                (0..*q)
                    .map(|r| {
                        (0..*p)
                            .filter(|&a| (p * r + a) % q == 0)
                            .collect()
                    })
                    .collect(),
            ),
            NumerationSystem::Regular { .. } => None,
        }
    }

    /// Whether every non-root node has at least two children.
    pub fn is_expanding(&self) -> bool {
        match self {
            NumerationSystem::IntegerBase { .. } => true,
            NumerationSystem::RationalBase { .. } => self
                .signature()
                .expect("rational signature")
                .iter()
                .all(|s| s.len() >= 2),
            NumerationSystem::Regular { dfa, .. } => {
                // Non-root nodes are states reached by a nonempty word.
                let mut targets = std::collections::BTreeSet::new();
                for s in 0..dfa.states() {
                    for (_, t) in dfa.out_edges(s) {
                        targets.insert(t);
                    }
                }
                targets.iter().all(|&t| dfa.out_edges(t).count() >= 2)
            }
        }
    }

    /// Exact rational evaluation of any digit word through the base
    /// recurrence `v ← (p v + a)/q`, without integrality checks.
    pub fn evaluate_rational(&self, w: &Word) -> Option<Rational> {
        let (p, q) = match self {
            NumerationSystem::IntegerBase { k } => (*k, 1),
            NumerationSystem::RationalBase { p, q } => (*p, *q),
            NumerationSystem::Regular { .. } => return None,
        };
        let (p, q) = (BigInt::from(p), BigInt::from(q));
        let mut v = Rational::zero();
        for &d in w.digits() {
            v = (v * Rational::from_integer(p.clone()) + Rational::from_integer(d.into()))
                / Rational::from_integer(q.clone());
        }
        Some(v)
    }

    /// The automaton recognizing the representation language, when it is
    /// regular.
    pub fn dfa(&self) -> Option<Dfa> {
        match self {
            NumerationSystem::IntegerBase { k } => Some(integer_base_dfa(*k)),
            NumerationSystem::RationalBase { .. } => None,
            NumerationSystem::Regular { dfa, .. } => Some(dfa.clone()),
        }
    }

    /// The pair `(p, q)` of a rational base, `(k, 1)` for an integer base.
    pub fn base_ratio(&self) -> Option<(u32, u32)> {
        match self {
            NumerationSystem::IntegerBase { k } => Some((*k, 1)),
            NumerationSystem::RationalBase { p, q } => Some((*p, *q)),
            NumerationSystem::Regular { .. } => None,
        }
    }
}

impl fmt::Display for NumerationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.descriptor() {
            serde_json::Value::String(s) => write!(f, "{s}"),
            v => write!(f, "dfa:{v}"),
        }
    }
}

fn regular_rank(dfa: &Dfa, w: &Word) -> Option<Nat> {
    dfa.run(w.digits())?;
    let len = w.len();
    let table = dfa.count_table(len);
    let init = dfa.initial();
    let mut n: Nat = (0..len).fold(Nat::zero(), |acc, l| acc + &table[l][init]);
    let mut s = init;
    for (i, &d) in w.digits().iter().enumerate() {
        let rest = len - i - 1;
        for (a, t) in dfa.out_edges(s) {
            if a >= d {
                break;
            }
            n += &table[rest][t];
        }
        s = dfa.step(s, d)?;
    }
    Some(n)
}

fn regular_unrank(dfa: &Dfa, n: &Nat) -> Word {
    let init = dfa.initial();
    let mut m = n.clone();
    let mut len = 0;
    let mut table = dfa.count_table(8);
    loop {
        if len >= table.len() {
            table = dfa.count_table(2 * len);
        }
        let c = &table[len][init];
        if &m < c {
            break;
        }
        m -= c;
        len += 1;
    }
    let mut digits = Vec::with_capacity(len);
    let mut s = init;
    for i in 0..len {
        let rest = len - i - 1;
        for (a, t) in dfa.out_edges(s) {
            let c = &table[rest][t];
            if &m < c {
                digits.push(a);
                s = t;
                break;
            }
            m -= c;
        }
    }
    Word(digits)
}

/// Groups the words of `ws` by length; handy for rendering.
pub fn by_length(ws: &[Word]) -> BTreeMap<usize, Vec<Word>> {
    let mut out: BTreeMap<usize, Vec<Word>> = BTreeMap::new();
    for x in ws {
        out.entry(x.len()).or_default().push(x.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: u64) -> Nat {
        Nat::from(x)
    }

    #[test]
    fn radix_order() {
        assert!(w("2") < w("10"));
        assert!(w("10") < w("11"));
        assert!(Word::empty() < w("0"));
    }

    #[test]
    fn rational_rep_and_val() {
        let s = NumerationSystem::rational_base(3, 2).unwrap();
        assert_eq!(s.rep(&n(22)).unwrap(), w("2120012"));
        assert_eq!(s.val(&w("2120012")).unwrap(), n(22));
        assert!(s.val(&w("22")).is_err());
        assert!(s.val(&w("02")).is_err());
    }

    #[test]
    fn fibonacci_rank() {
        let s = NumerationSystem::fibonacci();
        assert_eq!(s.rep(&n(10)).unwrap(), w("10010"));
        assert_eq!(s.val(&w("10010")).unwrap(), n(10));
        assert!(s.val(&w("11")).is_err());
        let e: Vec<String> = s.enumerate(8).iter().map(|x| s.format_word(x)).collect();
        assert_eq!(e, ["", "1", "10", "100", "101", "1000", "1001", "1010"]);
    }

    #[test]
    fn children_digits_examples() {
        let s = NumerationSystem::rational_base(3, 2).unwrap();
        assert_eq!(s.children_digits(&n(2)), vec![0, 2]);
        assert_eq!(s.children_digits(&n(1)), vec![1]);
        assert_eq!(s.children_digits(&n(0)), vec![2]);
        let s = NumerationSystem::rational_base(5, 2).unwrap();
        assert_eq!(s.children_digits(&n(1)), vec![1, 3]);
    }

    #[test]
    fn minimize_merges_duplicate_state() {
        let d = Dfa::new(
            vec![0, 1],
            3,
            0,
            &[(0, 1, 1), (1, 0, 2), (1, 1, 2), (2, 0, 1), (2, 1, 2)],
        )
        .unwrap();
        let m = d.minimize();
        assert_eq!(m.states(), 2);
        assert_eq!(m, integer_base_dfa(2).minimize());
    }

    #[test]
    fn dfa_validation() {
        assert!(Dfa::new(vec![0, 1], 2, 0, &[(0, 1, 1)]).is_err()); // finite
        assert!(Dfa::new(vec![0, 1], 2, 0, &[(0, 1, 0)]).is_err()); // unreachable
        assert!(Dfa::new(vec![1, 0], 1, 0, &[(0, 1, 0)]).is_err());
        assert!(Dfa::new(vec![0, 1], 1, 0, &[(0, 2, 0)]).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            NumerationSystem::from_spec("3/2").unwrap(),
            NumerationSystem::RationalBase { p: 3, q: 2 }
        );
        assert_eq!(
            NumerationSystem::from_spec("4/2").unwrap_err(),
            NumsysError::InvalidSystem("4/2 is not in lowest terms".into())
        );
        assert!(NumerationSystem::from_spec("1").is_err());
        let fib = NumerationSystem::fibonacci();
        assert_eq!(NumerationSystem::from_descriptor(&fib.descriptor()).unwrap(), fib);
    }

    #[test]
    fn word_format_roundtrip() {
        let x = Word(vec![1, 12, 0]);
        assert_eq!(x.format(13), "1,12,0");
        assert_eq!(Word::parse("1,12,0", 13).unwrap(), x);
        assert_eq!(Word::parse("210", 3).unwrap(), w("210"));
    }
}
