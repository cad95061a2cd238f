//! Hand-entered relation sets and machines for well-known examples:
//! occurrences of `11` in base 2, the Fibonacci row-count sequence
//! A282717, the base-3/2 sum of digits, the squares over base 3/2, and an
//! automatic but non-regular sequence over base 3/2.

use crate::dectree::{arithmetic_domain, state_domain};
use crate::exactlin::{rat, ratio, Rational};
use crate::linearity::RelationSet;
use crate::numsys::NumerationSystem;

use super::{Dfao, SequenceSource};

fn r(n: i64) -> Rational {
    rat(n)
}

fn q(n: i64, d: i64) -> Rational {
    ratio(n, d)
}

/// Base 2, `h = 3`: counting occurrences of `11`. With `y = x_{u0}`,
/// `z = x_{u1}`, `t = x_{u11}`, every leaf is `y`, `z`, `t`, `y+t−z` or
/// `2t−z`.
pub fn pairs11_relations() -> RelationSet {
    let sys = NumerationSystem::integer_base(2).expect("base 2");
    let mut set = RelationSet::new(sys.clone(), 3);
    let t = set.add_type(arithmetic_domain(&sys, 1, 3), false);
    set.add(t, "000", &[("0", r(1))]);
    set.add(t, "001", &[("0", r(1))]);
    set.add(t, "010", &[("0", r(1))]);
    set.add(t, "011", &[("0", r(1)), ("11", r(1)), ("1", r(-1))]);
    set.add(t, "100", &[("1", r(1))]);
    set.add(t, "101", &[("1", r(1))]);
    set.add(t, "110", &[("11", r(1))]);
    set.add(t, "111", &[("11", r(2)), ("1", r(-1))]);
    set
}

pub fn pairs11_prefix() -> Vec<Rational> {
    [0, 0, 0, 1, 0, 0, 1, 2].iter().map(|&x| r(x)).collect()
}

pub fn pairs11_extension() -> SequenceSource {
    SequenceSource::Extension {
        prefix: pairs11_prefix(),
        relset: Box::new(pairs11_relations()),
    }
}

/// Zeckendorf numeration, `h = 2`, sequence A282717. Type ids: 0 for the
/// root factor `{ε,1,10}`, 1 for `{ε,0,00,01}`, 2 for `{ε,0,1,00,01,10}`.
/// The root relation `x_10 = 2x_1 − x_ε` is what the root step matrix
/// encodes.
pub fn zeck_subwords_relations() -> RelationSet {
    let sys = NumerationSystem::fibonacci();
    let dfa = sys.dfa().expect("regular");
    let mut set = RelationSet::new(sys, 2);
    let t0 = set.add_type(state_domain(&dfa, 0, 2), true);
    let t1 = set.add_type(state_domain(&dfa, 1, 2), false);
    let t2 = set.add_type(state_domain(&dfa, 2, 2), false);
    set.add(t0, "10", &[("1", r(2)), ("", r(-1))]);
    set.add(t1, "00", &[("", r(2))]);
    set.add(t1, "01", &[("", r(2))]);
    set.add(t2, "00", &[("0", r(2)), ("", r(-1))]);
    set.add(t2, "01", &[("", r(2))]);
    set.add(t2, "10", &[("1", q(3, 2))]);
    set
}

pub fn zeck_subwords_prefix() -> Vec<Rational> {
    vec![r(1), r(2), r(3)]
}

pub fn zeck_subwords_extension() -> SequenceSource {
    SequenceSource::Extension {
        prefix: zeck_subwords_prefix(),
        relset: Box::new(zeck_subwords_relations()),
    }
}

/// Sum of digits in base 3/2, `h = 2`, one type per residue modulo 4, with
/// `x` the factor root, `y` its first child and `z` its second.
pub fn sumdigits32_relations() -> RelationSet {
    sumdigits_h2(false)
}

/// Same sequence and types, but the residue-2 leaves `01` and `22` written
/// as `(y+z)/2` and `2z−y`; both forms hold.
pub fn sumdigits_matrix_relations() -> RelationSet {
    sumdigits_h2(true)
}

fn sumdigits_h2(variant: bool) -> RelationSet {
    let sys = NumerationSystem::rational_base(3, 2).expect("3/2");
    let mut set = RelationSet::new(sys.clone(), 2);
    let dom = |n: u64| arithmetic_domain(&sys, n, 2);
    let res1 = set.add_type(dom(1), false);
    let res0 = set.add_type(dom(4), false);
    let res3 = set.add_type(dom(3), false);
    let res2 = set.add_type(dom(2), false);
    set.add(res1, "10", &[("1", r(1))]);
    set.add(res1, "12", &[("1", r(3)), ("", r(-2))]);
    set.add(res0, "00", &[("0", r(1))]);
    set.add(res0, "02", &[("2", r(1))]);
    set.add(res0, "21", &[("2", q(3, 2)), ("", q(-1, 2))]);
    set.add(res3, "11", &[("1", r(2)), ("", r(-1))]);
    if variant {
        set.add(res2, "01", &[("0", q(1, 2)), ("2", q(1, 2))]);
        set.add(res2, "22", &[("2", r(2)), ("0", r(-1))]);
    } else {
        set.add(res2, "01", &[("", q(1, 2)), ("2", q(1, 2))]);
        set.add(res2, "22", &[("2", r(2)), ("", r(-1))]);
    }
    set.add(res2, "20", &[("2", r(1))]);
    set
}

pub fn sumdigits32_prefix() -> Vec<Rational> {
    vec![r(0), r(2), r(3)]
}

pub fn sumdigits32_extension() -> SequenceSource {
    SequenceSource::Extension {
        prefix: sumdigits32_prefix(),
        relset: Box::new(sumdigits32_relations()),
    }
}

/// The 27 relations satisfied by `(n²)` in base 3/2 at `h = 3`, one type
/// per residue of the factor root modulo 8. Each entry lists the leaf, the
/// integer weights of internal words and the common denominator.
pub fn squares_relations() -> RelationSet {
    let sys = NumerationSystem::rational_base(3, 2).expect("3/2");
    let mut set = RelationSet::new(sys.clone(), 3);
    type Row = (&'static str, &'static [(&'static str, i64)], i64);
    let table: [(u64, &[Row]); 8] = [
        (
            1,
            &[
                ("101", &[("", -162), ("10", 182), ("12", 39)], 84),
                ("120", &[("12", 9)], 4),
                ("122", &[("", 810), ("10", -406), ("12", 435)], 84),
            ],
        ),
        (
            2,
            &[
                ("011", &[("01", 5), ("20", 5), ("22", -1)], 4),
                ("200", &[("20", 9)], 4),
                ("202", &[("01", -1), ("20", 5), ("22", 5)], 4),
                ("221", &[("01", 2), ("20", -7), ("22", 14)], 4),
            ],
        ),
        (
            3,
            &[
                ("110", &[("11", 9)], 4),
                ("112", &[("", 189), ("1", -345), ("11", 161)], 20),
            ],
        ),
        (
            4,
            &[
                ("001", &[("00", 5), ("02", 5), ("21", -1)], 4),
                ("020", &[("02", 9)], 4),
                ("022", &[("00", -1), ("02", 5), ("21", 5)], 4),
                ("211", &[("00", 2), ("02", -7), ("21", 14)], 4),
            ],
        ),
        (
            5,
            &[
                ("100", &[("10", 9)], 4),
                ("102", &[("", -162), ("10", 119), ("12", 102)], 84),
                ("121", &[("", 324), ("10", -175), ("12", 300)], 84),
            ],
        ),
        (
            6,
            &[
                ("010", &[("01", 9)], 4),
                ("012", &[("01", 2), ("20", 8), ("22", -1)], 4),
                ("201", &[("01", -1), ("20", 8), ("22", 2)], 4),
                ("220", &[("22", 9)], 4),
                ("222", &[("01", 5), ("20", -16), ("22", 20)], 4),
            ],
        ),
        (7, &[("111", &[("", 27), ("1", -57), ("11", 38)], 8)]),
        (
            8,
            &[
                ("000", &[("00", 9)], 4),
                ("002", &[("00", 2), ("02", 8), ("21", -1)], 4),
                ("021", &[("00", -1), ("02", 8), ("21", 2)], 4),
                ("210", &[("21", 9)], 4),
                ("212", &[("00", 5), ("02", -16), ("21", 20)], 4),
            ],
        ),
    ];
    for (rep, rows) in table {
        let t = set.add_type(arithmetic_domain(&sys, rep, 3), false);
        for (leaf, weights, den) in rows {
            let coeffs: Vec<(&str, Rational)> =
                weights.iter().map(|&(v, c)| (v, q(c, *den))).collect();
            set.add(t, leaf, &coeffs);
        }
    }
    set
}

/// Automaton over base 3/2 whose output sequence is automatic but not
/// regular. States 0–2 read the leading `21` of every nonzero
/// representation; states 3–6 output 1, 2, 3 and 5.
pub fn nonregular_dfao() -> Dfao {
    let t = [
        (0, 0, 0),
        (0, 1, 0),
        (0, 2, 1),
        (1, 0, 1),
        (1, 1, 2),
        (1, 2, 1),
        (2, 0, 3),
        (2, 1, 2),
        (2, 2, 5),
        (3, 1, 3),
        (3, 0, 4),
        (3, 2, 4),
        (4, 0, 3),
        (4, 1, 3),
        (4, 2, 3),
        (5, 1, 5),
        (5, 0, 6),
        (5, 2, 6),
        (6, 0, 5),
        (6, 1, 5),
        (6, 2, 5),
    ];
    let outputs = [1, 1, 1, 1, 2, 3, 5].iter().map(|&x| r(x)).collect();
    Dfao::new(7, 0, &t, outputs).expect("valid DFAO")
}
