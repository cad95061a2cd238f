//! Kernel families of a sequence: the classical `k`-kernel
//! `(x_{k^j n + r})`, the suffix kernel `τ(x,u)(n) = x_{val(rep(n)·u)}`
//! (zero when `rep(n)·u` is not a representation), type indicators `χ`,
//! their pointwise products, and rank profiles of the spanned spaces.

use std::fmt::Write as _;

use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::dectree::{DectreeError, Skeleton, TreePrefix, TypeTable};
use crate::exactlin::{EchelonBasis, Nat, Rational};
use crate::numsys::{NumerationSystem, Word};
use crate::seqlib::{SeqError, SequenceSource};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("residue {r} out of range for modulus {modulus}")]
    ResidueOutOfRange { r: String, modulus: String },
    #[error("unknown type {type_id} at height {h}")]
    UnknownType { type_id: usize, h: usize },
    #[error("the power kernel needs an integer base")]
    NotIntegerBase,
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Tree(#[from] DectreeError),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum KernelKey {
    PowerSuffix { j: u32, r: u64 },
    WordSuffix(Word),
    Filtered { u: Word, type_id: usize },
}

impl KernelKey {
    pub fn label(&self, sys: &NumerationSystem) -> String {
        let f = |w: &Word| {
            if w.is_empty() {
                "ε".to_string()
            } else {
                sys.format_word(w)
            }
        };
        match self {
            KernelKey::PowerSuffix { j, r } => format!("k^{j}n+{r}"),
            KernelKey::WordSuffix(u) => f(u),
            KernelKey::Filtered { u, type_id } => format!("{}|t{type_id}", f(u)),
        }
    }
}

/// `x_{k^j n + r}` for `n = 0..count`.
pub fn k_kernel_element(
    seq: &SequenceSource,
    sys: &NumerationSystem,
    k: u32,
    j: u32,
    r: &Nat,
    count: usize,
) -> Result<Vec<Rational>, KernelError> {
    let modulus = num_traits::pow(Nat::from(k), j as usize);
    if r >= &modulus {
        return Err(KernelError::ResidueOutOfRange {
            r: r.to_string(),
            modulus: modulus.to_string(),
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let last = &modulus * (count - 1) + r;
    let need = last.to_usize().expect("index fits in memory") + 1;
    let terms = seq.terms(sys, need)?;
    let (m, r) = (modulus.to_usize().expect("fits"), r.to_usize().expect("fits"));
    Ok((0..count).map(|n| terms[m * n + r].clone()).collect())
}

/// A decorated tree deep enough to read suffixes of length up to
/// `max_suffix` below the first `count` nodes.
#[derive(Clone, Debug)]
pub struct KernelTable {
    tree: TreePrefix,
    count: usize,
}

impl KernelTable {
    pub fn new(
        sys: &NumerationSystem,
        seq: &SequenceSource,
        count: usize,
        max_suffix: usize,
    ) -> Result<Self, KernelError> {
        let budget = crate::node_budget();
        let mut sk = Skeleton::with_nodes(sys, count.max(1), budget)?;
        for _ in 0..max_suffix {
            sk.grow(budget)?;
        }
        let dec = seq.terms_on(&sk)?;
        Ok(KernelTable {
            tree: TreePrefix::new(sk, dec)?,
            count,
        })
    }

    pub fn tree(&self) -> &TreePrefix {
        &self.tree
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `τ(x,u)` on `0..count`.
    pub fn s_kernel(&self, u: &Word) -> Vec<Rational> {
        let sk = self.tree.skeleton();
        (0..self.count)
            .map(|n| {
                sk.descend(n, u.digits())
                    .map(|i| self.tree.decoration(i).clone())
                    .unwrap_or_else(Rational::zero)
            })
            .collect()
    }

    pub fn classify(&self, h: usize) -> Result<TypeTable, KernelError> {
        Ok(self.tree.classify(h)?)
    }

    /// Indicator of type `type_id` at height `h` on `0..count`.
    pub fn chi(&self, table: &TypeTable, type_id: usize) -> Result<Vec<Rational>, KernelError> {
        if type_id >= table.types.len() {
            return Err(KernelError::UnknownType { type_id, h: table.h });
        }
        if table.classified_nodes() < self.count {
            return Err(DectreeError::InsufficientLevels {
                required: self.tree.skeleton().level_of(self.count - 1) + table.h,
                available: self.tree.levels(),
            }
            .into());
        }
        Ok((0..self.count)
            .map(|n| {
                if table.type_of(n) == Some(type_id) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect())
    }

    /// `τ(x,u) ⊙ χ_j`.
    pub fn filtered(&self, u: &Word, table: &TypeTable, type_id: usize) -> Result<Vec<Rational>, KernelError> {
        let chi = self.chi(table, type_id)?;
        Ok(self
            .s_kernel(u)
            .into_iter()
            .zip(chi)
            .map(|(a, b)| a * b)
            .collect())
    }
}

pub fn s_kernel_element(
    sys: &NumerationSystem,
    seq: &SequenceSource,
    u: &Word,
    count: usize,
) -> Result<Vec<Rational>, KernelError> {
    Ok(KernelTable::new(sys, seq, count, u.len())?.s_kernel(u))
}

pub fn chi(
    sys: &NumerationSystem,
    h: usize,
    type_id: usize,
    count: usize,
) -> Result<Vec<Rational>, KernelError> {
    let kt = KernelTable::new(sys, &SequenceSource::Poly(vec![]), count, h)?;
    let table = kt.classify(h)?;
    kt.chi(&table, type_id)
}

pub fn filtered_element(
    sys: &NumerationSystem,
    seq: &SequenceSource,
    u: &Word,
    type_id: usize,
    h: usize,
    count: usize,
) -> Result<Vec<Rational>, KernelError> {
    let kt = KernelTable::new(sys, seq, count, h.max(u.len()))?;
    let table = kt.classify(h)?;
    kt.filtered(u, &table, type_id)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// `τ(x,u)` for all words `u` of length `≤ ℓ` over the alphabet.
    WordSuffix,
    /// `x_{k^j n + r}` for `j ≤ ℓ`, integer bases only.
    PowerSuffix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankProfile {
    /// `(ℓ, rank)` for `ℓ = 0..=max`.
    pub entries: Vec<(usize, usize)>,
    /// Keys whose column vanished on the truncation window.
    pub zero_columns: Vec<KernelKey>,
    pub truncation: usize,
}

impl RankProfile {
    pub fn ranks(&self) -> Vec<usize> {
        self.entries.iter().map(|&(_, r)| r).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,rank\n");
        for (l, r) in &self.entries {
            let _ = writeln!(s, "{l},{r}");
        }
        s
    }
}

/// Rank over ℚ of the kernel elements with suffix length (or exponent)
/// at most `ℓ`, for each `ℓ ≤ max_len`, on the first `count` terms.
pub fn rank_profile(
    sys: &NumerationSystem,
    seq: &SequenceSource,
    max_len: usize,
    count: usize,
    kind: KernelKind,
) -> Result<RankProfile, KernelError> {
    let mut basis = EchelonBasis::new();
    let mut entries = Vec::new();
    let mut zero_columns = Vec::new();
    match kind {
        KernelKind::WordSuffix => {
            let kt = KernelTable::new(sys, seq, count, max_len)?;
            let alphabet = sys.alphabet();
            let mut layer = vec![Word::empty()];
            for l in 0..=max_len {
                for u in &layer {
                    let col = kt.s_kernel(u);
                    if col.iter().all(Zero::is_zero) {
                        zero_columns.push(KernelKey::WordSuffix(u.clone()));
                    } else {
                        basis.insert(&col);
                    }
                }
                entries.push((l, basis.rank()));
                layer = layer
                    .iter()
                    .flat_map(|u| alphabet.iter().map(move |&a| u.with(a)))
                    .collect();
            }
        }
        KernelKind::PowerSuffix => {
            let Some((k, 1)) = sys.base_ratio() else {
                return Err(KernelError::NotIntegerBase);
            };
            let k = k as usize;
            let need = k.pow(max_len as u32) * count.max(1);
            let terms = seq.terms(sys, need)?;
            for l in 0..=max_len {
                let m = k.pow(l as u32);
                for r in 0..m {
                    let col: Vec<Rational> = (0..count).map(|n| terms[m * n + r].clone()).collect();
                    if col.iter().all(Zero::is_zero) {
                        zero_columns.push(KernelKey::PowerSuffix { j: l as u32, r: r as u64 });
                    } else {
                        basis.insert(&col);
                    }
                }
                entries.push((l, basis.rank()));
            }
        }
    }
    Ok(RankProfile {
        entries,
        zero_columns,
        truncation: count,
    })
}

/// CSV with one column per key and one row per index `n`.
pub fn kernel_table_csv(sys: &NumerationSystem, columns: &[(KernelKey, Vec<Rational>)]) -> String {
    let mut s = String::from("n");
    for (k, _) in columns {
        let _ = write!(s, ",{}", k.label(sys));
    }
    s.push('\n');
    let rows = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    for n in 0..rows {
        let _ = write!(s, "{n}");
        for (_, c) in columns {
            let v = c.get(n).map(|x| x.to_string()).unwrap_or_default();
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}
