//! Sequence sources: built-in sequences, automatic sequences produced by a
//! DFAO, sequences regenerated from relations, the cumulative (prefix-sum
//! along the tree) transform, polynomials and OEIS b-files.

pub mod fixtures;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dectree::{Skeleton, TreePrefix};
use crate::exactlin::{format_rational, parse_rational, Nat, Rational};
use crate::linearity::{extend, RelationSet};
use crate::numsys::{Digit, NumerationSystem, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeqError {
    #[error("term {index}: {message}")]
    Term { index: usize, message: String },
    #[error("line {line}: {message}")]
    BFile { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("unknown sequence {0:?}")]
    Unknown(String),
    #[error("invalid sequence specification: {0}")]
    Spec(String),
    #[error("automaton has no transition after reading {prefix:?}")]
    MissingTransition { prefix: String, index: usize },
    #[error(transparent)]
    Linearity(#[from] crate::linearity::LinearityError),
    #[error(transparent)]
    Tree(#[from] crate::dectree::DectreeError),
    #[error(transparent)]
    Numsys(#[from] crate::numsys::NumsysError),
}

impl SeqError {
    /// Offending index, when the failure is tied to one term.
    pub fn index(&self) -> Option<usize> {
        match self {
            SeqError::Term { index, .. } | SeqError::MissingTransition { index, .. } => Some(*index),
            _ => None,
        }
    }
}

/// Sequences defined directly from the representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// Digit sum of the representation.
    SumDigits,
    /// `n^d`.
    Power(u32),
    /// Overlapping occurrences of a pattern in the representation.
    Count(Word),
    /// Number of distinct scattered subwords of the representation that are
    /// themselves representations (nonzero entries of the generalized
    /// Pascal triangle row). Needs an automaton.
    Subwords,
}

/// Deterministic finite automaton with output, reading representations
/// most significant digit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfao {
    pub states: usize,
    pub initial: usize,
    pub transitions: HashMap<(usize, Digit), usize>,
    pub outputs: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct DfaoJson {
    states: usize,
    initial: usize,
    transitions: Vec<[usize; 3]>,
    #[serde(with = "crate::exactlin::serde_rational_vec")]
    outputs: Vec<Rational>,
}

impl Dfao {
    pub fn new(
        states: usize,
        initial: usize,
        transitions: &[(usize, Digit, usize)],
        outputs: Vec<Rational>,
    ) -> Result<Self, SeqError> {
        let bad = |m: String| Err(SeqError::Spec(m));
        if states == 0 || initial >= states || outputs.len() != states {
            return bad(format!(
                "DFAO needs 0 <= initial < states and one output per state ({states} states, {} outputs)",
                outputs.len()
            ));
        }
        let mut map = HashMap::new();
        for &(s, d, t) in transitions {
            if s >= states || t >= states {
                return bad(format!("transition ({s},{d},{t}) references a missing state"));
            }
            if map.insert((s, d), t).is_some_and(|old| old != t) {
                return bad(format!("non-deterministic transition from {s} on {d}"));
            }
        }
        Ok(Dfao {
            states,
            initial,
            transitions: map,
            outputs,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self, SeqError> {
        let j: DfaoJson = serde_json::from_str(s).map_err(|e| SeqError::Spec(e.to_string()))?;
        let t: Vec<_> = j.transitions.iter().map(|&[s, d, t]| (s, d as Digit, t)).collect();
        Dfao::new(j.states, j.initial, &t, j.outputs)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut transitions: Vec<[usize; 3]> = self
            .transitions
            .iter()
            .map(|(&(s, d), &t)| [s, d as usize, t])
            .collect();
        transitions.sort();
        serde_json::to_value(DfaoJson {
            states: self.states,
            initial: self.initial,
            transitions,
            outputs: self.outputs.clone(),
        })
        .expect("DFAO serializes")
    }

    pub fn step(&self, s: usize, d: Digit) -> Option<usize> {
        self.transitions.get(&(s, d)).copied()
    }

    /// Output after reading `w`, or the longest prefix that could be read.
    pub fn run(&self, w: &Word) -> Result<&Rational, usize> {
        let mut s = self.initial;
        for (i, &d) in w.digits().iter().enumerate() {
            s = self.step(s, d).ok_or(i)?;
        }
        Ok(&self.outputs[s])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SequenceSource {
    Builtin(Builtin),
    /// Explicit terms `x_0, x_1, …`, e.g. read from a b-file.
    BFile {
        path: Option<PathBuf>,
        terms: Vec<Rational>,
    },
    Dfao(Dfao),
    /// Prefix decorations extended by a relation set.
    Extension {
        prefix: Vec<Rational>,
        relset: Box<RelationSet>,
    },
    /// `y_w = Σ x_u` over all prefixes `u` of `w`.
    Cumulative(Box<SequenceSource>),
    /// Polynomial in `n`, coefficients in increasing degree.
    Poly(Vec<Rational>),
}

impl SequenceSource {
    pub fn sumdigits() -> Self {
        SequenceSource::Builtin(Builtin::SumDigits)
    }

    pub fn power(d: u32) -> Self {
        SequenceSource::Builtin(Builtin::Power(d))
    }

    pub fn count(w: Word) -> Self {
        SequenceSource::Builtin(Builtin::Count(w))
    }

    pub fn cumulative(inner: SequenceSource) -> Self {
        SequenceSource::Cumulative(Box::new(inner))
    }

    pub fn explicit(terms: Vec<Rational>) -> Self {
        SequenceSource::BFile { path: None, terms }
    }

    /// Resolves a built-in name: `sumdigits`, `n`, `squares`, `power:D`,
    /// `poly:c0,c1,…`, `count:W`, `const:C`, `pairs11`, `zeck-subwords`, `sumdigits32`,
    /// `nonregular`, `a282717`, `a014081`.
    pub fn builtin(name: &str, sys: &NumerationSystem) -> Result<Self, SeqError> {
        let unknown = || SeqError::Unknown(name.to_string());
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        Ok(match (head, arg) {
            ("sumdigits", None) => Self::sumdigits(),
            ("subwords", None) => SequenceSource::Builtin(Builtin::Subwords),
            ("n" | "identity", None) => Self::power(1),
            ("squares", None) => Self::power(2),
            ("power", Some(d)) => Self::power(d.trim().parse().map_err(|_| unknown())?),
            ("const", Some(c)) => SequenceSource::Poly(vec![
                parse_rational(c).map_err(|e| SeqError::Spec(e.to_string()))?
            ]),
            ("poly", Some(cs)) => SequenceSource::Poly(
                cs.split(',')
                    .map(parse_rational)
                    .collect::<Result<_, _>>()
                    .map_err(|e| SeqError::Spec(e.to_string()))?,
            ),
            ("count", Some(w)) => {
                let w = sys.parse_word(w)?;
                if w.is_empty() {
                    return Err(SeqError::Spec("count pattern must be nonempty".into()));
                }
                Self::count(w)
            }
            ("pairs11" | "a014081", None) => fixtures::pairs11_extension(),
            ("zeck-subwords" | "a282717", None) => fixtures::zeck_subwords_extension(),
            ("sumdigits32", None) => fixtures::sumdigits32_extension(),
            ("nonregular", None) => SequenceSource::Dfao(fixtures::nonregular_dfao()),
            _ => return Err(unknown()),
        })
    }

    /// Parses `builtin:NAME`, `bfile:PATH`, `dfao:FILE`,
    /// `ext:RELSET+PREFIX` (PREFIX a b-file or comma-separated terms) or
    /// `cumulative:SPEC`.
    pub fn from_spec(spec: &str, sys: &NumerationSystem) -> Result<Self, SeqError> {
        let Some((kind, rest)) = spec.split_once(':') else {
            return Err(SeqError::Spec(spec.to_string()));
        };
        match kind {
            "builtin" => Self::builtin(rest, sys),
            "bfile" => read_bfile(Path::new(rest)),
            "dfao" => {
                let text = read_to_string(Path::new(rest))?;
                Ok(SequenceSource::Dfao(Dfao::from_json_str(&text)?))
            }
            "ext" => {
                let Some((rel, prefix)) = rest.split_once('+') else {
                    return Err(SeqError::Spec(format!("{spec}: expected ext:RELSET+PREFIX")));
                };
                let relset = RelationSet::from_json_str(&read_to_string(Path::new(rel))?)?;
                let prefix = if Path::new(prefix).is_file() {
                    read_bfile_terms(Path::new(prefix))?
                } else {
                    prefix
                        .split(',')
                        .map(parse_rational)
                        .collect::<Result<_, _>>()
                        .map_err(|e| SeqError::Spec(e.to_string()))?
                };
                Ok(SequenceSource::Extension {
                    prefix,
                    relset: Box::new(relset),
                })
            }
            "cumulative" => Ok(Self::cumulative(Self::from_spec(rest, sys)?)),
            _ => Err(SeqError::Spec(spec.to_string())),
        }
    }

    /// Terms for every node of `sk`, in node order.
    pub fn terms_on(&self, sk: &Skeleton) -> Result<Vec<Rational>, SeqError> {
        let sys = sk.system();
        let n = sk.len();
        match self {
            SequenceSource::Builtin(Builtin::SumDigits) => {
                let mut out: Vec<Rational> = Vec::with_capacity(n);
                out.push(Rational::zero());
                for i in 1..n {
                    let p = sk.parent(i).expect("non-root");
                    let d = sk.edge(i).expect("non-root");
                    let v = &out[p] + Rational::from_integer(BigInt::from(d));
                    out.push(v);
                }
                Ok(out)
            }
            SequenceSource::Builtin(Builtin::Power(d)) => {
                Ok((0..n).map(|i| power_seq(*d, &Nat::from(i))).map(nat_rat).collect())
            }
            SequenceSource::Builtin(Builtin::Count(w)) => {
                // Occurrences ending at the last letter, accumulated down the tree.
                let mut out: Vec<Rational> = Vec::with_capacity(n);
                out.push(Rational::zero());
                for i in 1..n {
                    let p = sk.parent(i).expect("non-root");
                    let ends = ends_with_pattern(sk, i, w);
                    let v = if ends { &out[p] + Rational::one() } else { out[p].clone() };
                    out.push(v);
                }
                Ok(out)
            }
            SequenceSource::Builtin(Builtin::Subwords) => {
                let dfa = sys.dfa().ok_or_else(|| SeqError::Spec("subwords needs a regular system".into()))?;
                Ok((0..n).map(|i| nat_rat(valid_subwords(&dfa, &sk.word(i)))).collect())
            }
            SequenceSource::BFile { terms, .. } => {
                if terms.len() < n {
                    return Err(SeqError::Term {
                        index: terms.len(),
                        message: format!("only {} terms available", terms.len()),
                    });
                }
                Ok(terms[..n].to_vec())
            }
            SequenceSource::Dfao(m) => {
                let mut state: Vec<usize> = Vec::with_capacity(n);
                state.push(m.initial);
                for i in 1..n {
                    let p = sk.parent(i).expect("non-root");
                    let d = sk.edge(i).expect("non-root");
                    match m.step(state[p], d) {
                        Some(s) => state.push(s),
                        None => {
                            return Err(SeqError::MissingTransition {
                                prefix: sys.format_word(&sk.word(i)),
                                index: i,
                            })
                        }
                    }
                }
                Ok(state.into_iter().map(|s| m.outputs[s].clone()).collect())
            }
            SequenceSource::Extension { prefix, relset } => {
                let base = TreePrefix::from_terms(sys, prefix)?;
                let ext = extend(&base, relset, sk.levels())?;
                Ok(ext.decorations()[..n].to_vec())
            }
            SequenceSource::Cumulative(inner) => {
                let x = inner.terms_on(sk)?;
                let mut out: Vec<Rational> = Vec::with_capacity(n);
                out.push(x[0].clone());
                for (i, xi) in x.iter().enumerate().skip(1) {
                    let p = sk.parent(i).expect("non-root");
                    let v = &out[p] + xi;
                    out.push(v);
                }
                Ok(out)
            }
            SequenceSource::Poly(c) => Ok((0..n)
                .map(|i| poly_seq(c, &Rational::from_integer(BigInt::from(i))))
                .collect()),
        }
    }

    /// First `count` terms.
    pub fn terms(&self, sys: &NumerationSystem, count: usize) -> Result<Vec<Rational>, SeqError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if let SequenceSource::BFile { terms, .. } = self {
            if terms.len() < count {
                return Err(SeqError::Term {
                    index: terms.len(),
                    message: format!("only {} terms available", terms.len()),
                });
            }
            return Ok(terms[..count].to_vec());
        }
        let sk = Skeleton::with_nodes(sys, count, crate::node_budget().max(count))?;
        let mut t = self.terms_on(&sk)?;
        t.truncate(count);
        Ok(t)
    }

    /// A single term computed from the representation of `n` (independent
    /// of the bulk tree walk where the source allows it).
    pub fn term(&self, sys: &NumerationSystem, n: &Nat) -> Result<Rational, SeqError> {
        let idx = || n.try_into().unwrap_or(usize::MAX);
        match self {
            SequenceSource::Builtin(Builtin::SumDigits) => Ok(nat_rat(sum_digits(sys, n)?)),
            SequenceSource::Builtin(Builtin::Power(d)) => Ok(nat_rat(power_seq(*d, n))),
            SequenceSource::Builtin(Builtin::Count(w)) => Ok(nat_rat(count_factor(sys, w, n)?)),
            SequenceSource::Builtin(Builtin::Subwords) => {
                let dfa = sys.dfa().ok_or_else(|| SeqError::Spec("subwords needs a regular system".into()))?;
                Ok(nat_rat(valid_subwords(&dfa, &sys.rep(n)?)))
            }
            SequenceSource::Dfao(m) => dfao_run(m, sys, n),
            SequenceSource::Cumulative(inner) => cumulative(sys, inner, n),
            SequenceSource::Poly(c) => Ok(poly_seq(c, &nat_rat(n.clone()))),
            SequenceSource::BFile { terms, .. } => terms.get(idx()).cloned().ok_or(SeqError::Term {
                index: idx(),
                message: "beyond the end of the b-file".into(),
            }),
            SequenceSource::Extension { .. } => {
                let i = idx();
                Ok(self.terms(sys, i + 1)?.swap_remove(i))
            }
        }
    }
}

fn ends_with_pattern(sk: &Skeleton, node: usize, w: &Word) -> bool {
    let mut n = node;
    for &d in w.digits().iter().rev() {
        match sk.edge(n) {
            Some(e) if e == d => n = sk.parent(n).expect("non-root"),
            _ => return false,
        }
    }
    true
}

fn nat_rat(n: Nat) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn read_to_string(p: &Path) -> Result<String, SeqError> {
    std::fs::read_to_string(p).map_err(|e| SeqError::Io(format!("{}: {e}", p.display())))
}

/// Distinct subsequences of `w` accepted by `dfa`, the empty word included.
/// Each subsequence is counted once through its leftmost embedding.
pub fn valid_subwords(dfa: &crate::numsys::Dfa, w: &Word) -> Nat {
    let d = w.digits();
    let m = d.len();
    let states = dfa.states();
    // memo[i][q]: distinct accepted continuations reading from position i in state q.
    let mut memo = vec![vec![Nat::zero(); states]; m + 1];
    for i in (0..=m).rev() {
        for q in 0..states {
            let mut total = Nat::one();
            for (c, t) in dfa.out_edges(q) {
                if let Some(j) = d[i..].iter().position(|&x| x == c) {
                    total += &memo[i + j + 1][t];
                }
            }
            memo[i][q] = total;
        }
    }
    memo[0][dfa.initial()].clone()
}

pub fn sum_digits(sys: &NumerationSystem, n: &Nat) -> Result<Nat, SeqError> {
    Ok(sys.rep(n)?.digits().iter().fold(Nat::zero(), |a, &d| a + d))
}

/// Overlapping occurrences of `pattern` in `rep(n)`.
pub fn count_factor(sys: &NumerationSystem, pattern: &Word, n: &Nat) -> Result<Nat, SeqError> {
    if pattern.is_empty() {
        return Err(SeqError::Spec("count pattern must be nonempty".into()));
    }
    let r = sys.rep(n)?;
    let count = r
        .digits()
        .windows(pattern.len())
        .filter(|win| *win == pattern.digits())
        .count();
    Ok(Nat::from(count))
}

pub fn dfao_run(m: &Dfao, sys: &NumerationSystem, n: &Nat) -> Result<Rational, SeqError> {
    let w = sys.rep(n)?;
    m.run(&w).cloned().map_err(|i| SeqError::MissingTransition {
        prefix: sys.format_word(&Word(w.digits()[..=i].to_vec())),
        index: n.try_into().unwrap_or(usize::MAX),
    })
}

/// `Σ x_{val(u)}` over the prefixes `u` of `rep(n)`, both ends included.
pub fn cumulative(sys: &NumerationSystem, seq: &SequenceSource, n: &Nat) -> Result<Rational, SeqError> {
    let w = sys.rep(n)?;
    let mut acc = Rational::zero();
    for len in 0..=w.len() {
        let v = sys.val(&Word(w.digits()[..len].to_vec()))?;
        acc += seq.term(sys, &v)?;
    }
    Ok(acc)
}

pub fn power_seq(d: u32, n: &Nat) -> Nat {
    num_traits::pow(n.clone(), d as usize)
}

/// Horner evaluation; `coeffs[i]` multiplies `x^i`.
pub fn poly_seq(coeffs: &[Rational], x: &Rational) -> Rational {
    coeffs
        .iter()
        .rev()
        .fold(Rational::zero(), |acc, c| acc * x + c)
}

fn read_bfile_terms(path: &Path) -> Result<Vec<Rational>, SeqError> {
    parse_bfile(&read_to_string(path)?)
}

/// Parses b-file text: lines `n value`, indices contiguous from 0, `#`
/// comments and blank lines ignored.
pub fn parse_bfile(text: &str) -> Result<Vec<Rational>, SeqError> {
    let mut terms = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| SeqError::BFile {
            line: line_no,
            message: m.to_string(),
        };
        let mut parts = line.split_whitespace();
        let (Some(idx), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("expected \"index value\""));
        };
        let idx: usize = idx.parse().map_err(|_| bad("bad index"))?;
        if idx != terms.len() {
            return Err(bad(&format!("expected index {}, found {idx}", terms.len())));
        }
        terms.push(parse_rational(val).map_err(|_| bad("bad value"))?);
    }
    Ok(terms)
}

pub fn read_bfile(path: &Path) -> Result<SequenceSource, SeqError> {
    Ok(SequenceSource::BFile {
        path: Some(path.to_path_buf()),
        terms: read_bfile_terms(path)?,
    })
}

/// Formats terms `start..start+len` as b-file text. Integers are written
/// plainly, other rationals as `num/den`.
pub fn format_bfile(terms: &[Rational], start: usize) -> String {
    let mut s = String::new();
    for (i, t) in terms.iter().enumerate() {
        let v = if t.is_integer() {
            t.numer().to_string()
        } else {
            format_rational(t)
        };
        let _ = writeln!(s, "{} {v}", start + i);
    }
    s
}

pub fn write_bfile(
    seq: &SequenceSource,
    sys: &NumerationSystem,
    count: usize,
    path: &Path,
) -> Result<(), SeqError> {
    let terms = seq.terms(sys, count)?;
    std::fs::write(path, format_bfile(&terms, 0))
        .map_err(|e| SeqError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::rat;
    use crate::numsys::w;

    fn ints(v: &[Rational]) -> Vec<i64> {
        v.iter().map(|x| i64::try_from(x.to_integer()).unwrap()).collect()
    }

    #[test]
    fn sumdigits_3_2() {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let t = SequenceSource::sumdigits().terms(&sys, 18).unwrap();
        assert_eq!(ints(&t), [0, 2, 3, 3, 5, 4, 5, 7, 5, 5, 7, 8, 5, 7, 6, 7, 9, 9]);
    }

    #[test]
    fn count_11_base_2() {
        let sys = NumerationSystem::integer_base(2).unwrap();
        let s = SequenceSource::count(w("11"));
        let t = s.terms(&sys, 16).unwrap();
        assert_eq!(ints(&t), [0, 0, 0, 1, 0, 0, 1, 2, 0, 0, 0, 1, 1, 1, 2, 3]);
        for n in 0..16u32 {
            assert_eq!(s.term(&sys, &n.into()).unwrap(), t[n as usize]);
        }
    }

    #[test]
    fn cumulative_of_n() {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let c = SequenceSource::cumulative(SequenceSource::power(1));
        assert_eq!(ints(&c.terms(&sys, 8).unwrap()), [0, 1, 3, 6, 7, 11, 13, 14]);
        assert_eq!(cumulative(&sys, &SequenceSource::power(1), &6u32.into()).unwrap(), rat(13));
    }

    #[test]
    fn poly_and_power() {
        assert_eq!(poly_seq(&[rat(1), rat(0), rat(1)], &rat(3)), rat(10));
        assert_eq!(power_seq(2, &11u32.into()), Nat::from(121u32));
        assert_eq!(power_seq(0, &0u32.into()), Nat::from(1u32));
    }

    #[test]
    fn bfile_errors() {
        assert_eq!(parse_bfile("# c\n0 1\n1 -2/3\n").unwrap(), vec![rat(1), crate::exactlin::ratio(-2, 3)]);
        assert!(matches!(parse_bfile("0 1\n2 3\n"), Err(SeqError::BFile { line: 2, .. })));
        assert!(matches!(parse_bfile("0 x\n"), Err(SeqError::BFile { line: 1, .. })));
    }
}
