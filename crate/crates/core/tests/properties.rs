use num_traits::Zero;
use proptest::prelude::*;

use numertree::dectree::{count_types, RenderFormat, Skeleton, TreePrefix};
use numertree::exactlin::{rat, ratio, solve_canonical, solve_detailed, EchelonBasis, RatMatrix, Solve};
use numertree::kernels::KernelTable;
use numertree::linearity::{extend, guess, lift, verify, CellStatus, GuessOptions};
use numertree::numsys::{fibonacci_dfa, Dfa};
use numertree::seqlib::{fixtures, format_bfile, parse_bfile};
use numertree::{Gdlr, Nat, NumerationSystem, Rational, SequenceSource, Word};

fn systems() -> Vec<NumerationSystem> {
    vec![
        NumerationSystem::integer_base(2).unwrap(),
        NumerationSystem::integer_base(3).unwrap(),
        NumerationSystem::rational_base(3, 2).unwrap(),
        NumerationSystem::rational_base(5, 2).unwrap(),
        NumerationSystem::rational_base(7, 3).unwrap(),
        NumerationSystem::fibonacci(),
    ]
}

fn w(s: &str) -> Word {
    Word(s.bytes().map(|b| (b - b'0') as u32).collect())
}

fn tree(sys: &NumerationSystem, seq: &SequenceSource, count: usize) -> TreePrefix {
    TreePrefix::from_terms(sys, &seq.terms(sys, count).unwrap()).unwrap()
}

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = RatMatrix> {
    prop::collection::vec(prop::collection::vec((-4i64..5, 1i64..4), cols), rows).prop_map(|rs| {
        RatMatrix::from_rows(
            rs.into_iter()
                .map(|r| r.into_iter().map(|(n, d)| ratio(n, d)).collect())
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rep_val_roundtrip(sys_i in 0usize..6, n in 0u64..5_000_000) {
        let sys = &systems()[sys_i];
        let n = Nat::from(n);
        let word = sys.rep(&n).unwrap();
        prop_assert!(sys.is_valid(&word));
        prop_assert_eq!(sys.val(&word).unwrap(), n);
    }

    #[test]
    fn rep_follows_radix_order(sys_i in 0usize..6, n in 0u64..200_000) {
        let sys = &systems()[sys_i];
        let a = sys.rep(&Nat::from(n)).unwrap();
        let b = sys.rep(&Nat::from(n + 1)).unwrap();
        prop_assert!(a < b);
    }

    #[test]
    fn concatenation_law(sys_i in 0usize..5, u in "[0-6]{0,6}", v in "[0-6]{0,6}") {
        // val(uv) = val(u)·(p/q)^|v| + val(v) for the rational evaluation.
        let sys = &systems()[sys_i];
        let k = sys.alphabet_size() as u8;
        let keep = |s: &str| w(&s.bytes().filter(|b| b - b'0' < k).map(|b| b as char).collect::<String>());
        let (u, v) = (keep(&u), keep(&v));
        let (p, q) = sys.base_ratio().unwrap();
        let scale = num_traits::pow(ratio(p as i64, q as i64), v.len());
        let lhs = sys.evaluate_rational(&u.concat(&v)).unwrap();
        let rhs = sys.evaluate_rational(&u).unwrap() * scale + sys.evaluate_rational(&v).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn rref_is_idempotent(m in small_matrix(4, 5)) {
        let (r, pivots) = m.rref();
        let (rr, pivots2) = r.rref();
        prop_assert_eq!(&r, &rr);
        prop_assert_eq!(pivots.len(), m.rank());
        prop_assert_eq!(pivots, pivots2);
    }

    #[test]
    fn canonical_solution_solves(m in small_matrix(5, 4), x in prop::collection::vec(-3i64..4, 4)) {
        let x: Vec<Rational> = x.into_iter().map(rat).collect();
        let b = m.mul_vec(&x).unwrap();
        let sol = solve_canonical(&m, &b).unwrap().expect("consistent by construction");
        prop_assert_eq!(m.mul_vec(&sol).unwrap(), b);
    }

    #[test]
    fn echelon_basis_rank_matches(m in small_matrix(6, 4)) {
        let mut basis = EchelonBasis::new();
        for i in 0..m.rows() {
            basis.insert(m.row(i));
        }
        prop_assert_eq!(basis.rank(), m.rank());
    }

    #[test]
    fn bfile_roundtrip(terms in prop::collection::vec(-1_000_000i64..1_000_000, 0..50)) {
        let terms: Vec<Rational> = terms.into_iter().map(rat).collect();
        prop_assert_eq!(parse_bfile(&format_bfile(&terms, 0)).unwrap(), terms);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn count_is_cumulative_of_suffix_indicator(pat in "[01]{1,3}", n in 0usize..3000) {
        let sys = NumerationSystem::integer_base(2).unwrap();
        let pat = w(&pat);
        let ends: Vec<Rational> = (0..=n)
            .map(|i| {
                let r = sys.rep(&Nat::from(i)).unwrap();
                rat((!r.is_empty() && r.ends_with(&pat)) as i64)
            })
            .collect();
        let direct = SequenceSource::count(pat).term(&sys, &Nat::from(n)).unwrap();
        let cum = SequenceSource::cumulative(SequenceSource::explicit(ends))
            .term(&sys, &Nat::from(n))
            .unwrap();
        prop_assert_eq!(direct, cum);
    }

    #[test]
    fn suffix_kernel_zero_spacing(u in "[012]{1,4}") {
        // Nonzero entries of τ(s,u) for n ≥ 1 sit on one residue class mod 2^|u|.
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let u = w(&u);
        let kt = KernelTable::new(&sys, &SequenceSource::sumdigits(), 2000, u.len()).unwrap();
        let col = kt.s_kernel(&u);
        let m = 1usize << u.len();
        let hits: Vec<usize> = (1..col.len()).filter(|&n| !col[n].is_zero()).collect();
        if let Some(&first) = hits.first() {
            let r = first % m;
            let expect: Vec<usize> = (1..col.len()).filter(|n| n % m == r).collect();
            prop_assert_eq!(hits, expect);
        }
    }

    #[test]
    fn classification_is_stable_under_growth(sys_i in 0usize..6, h in 1usize..4) {
        let sys = &systems()[sys_i];
        let a = Skeleton::build(sys, h + 4, usize::MAX).unwrap();
        let b = Skeleton::build(sys, h + 6, usize::MAX).unwrap();
        let ta = numertree::TypeTable::classify(&a, h).unwrap();
        let tb = numertree::TypeTable::classify(&b, h).unwrap();
        for n in 0..ta.classified_nodes() {
            let da = &ta.types[ta.type_of(n).unwrap()].domain;
            let db = &tb.types[tb.type_of(n).unwrap()].domain;
            prop_assert_eq!(da, db);
        }
    }

    #[test]
    fn corrupted_term_yields_checkable_witness(pos in 40usize..400, delta in 1i64..5) {
        let sys = NumerationSystem::rational_base(3, 2).unwrap();
        let mut terms = SequenceSource::sumdigits().terms(&sys, 3000).unwrap();
        terms[pos] += rat(delta);
        let t = TreePrefix::from_terms(&sys, &terms).unwrap();
        let (set, report) = guess(&t, 2, &GuessOptions::default()).unwrap();
        let v = verify(&t, &set).unwrap();
        // Either the guesser flags the corruption or its relations fail somewhere.
        let flagged = report.cells().any(|(_, c)| matches!(c.status, CellStatus::Inconsistent { .. }));
        prop_assert!(flagged || !v.ok() || !report.all_solved());
        for (tid, c) in report.cells() {
            if let CellStatus::Inconsistent { witness } = &c.status {
                let table = t.classify(2).unwrap();
                let leaves: Vec<&Word> = table.types[tid].domain.iter().filter(|x| x.len() == 2).collect();
                let li = leaves.iter().position(|x| sys.format_word(x) == c.leaf).unwrap();
                let rows: Vec<_> = numertree::linearity::occurrences(&t, &table, tid)
                    .unwrap()
                    .into_iter()
                    .filter(|r| witness.contains(&r.root))
                    .collect();
                let a = RatMatrix::from_rows(rows.iter().map(|r| r.internal.clone()).collect()).unwrap();
                let b: Vec<Rational> = rows.iter().map(|r| r.leaves[li].clone()).collect();
                prop_assert!(matches!(solve_detailed(&a, &b).unwrap(), Solve::Inconsistent));
            }
        }
    }
}

#[test]
fn guessed_relations_hold_on_their_data() {
    let cases = [
        (NumerationSystem::integer_base(2).unwrap(), SequenceSource::count(w("11")), 3),
        (NumerationSystem::rational_base(3, 2).unwrap(), SequenceSource::sumdigits(), 2),
        (NumerationSystem::rational_base(3, 2).unwrap(), SequenceSource::power(2), 3),
        (NumerationSystem::fibonacci(), fixtures::zeck_subwords_extension(), 2),
    ];
    for (sys, seq, h) in cases {
        let t = tree(&sys, &seq, 6000);
        let (set, report) = guess(&t, h, &GuessOptions::default()).unwrap();
        assert!(report.all_solved());
        assert!(verify(&t, &set).unwrap().ok());
    }
}

#[test]
fn extension_reproduces_its_source() {
    // Extending a short prefix with relations guessed on a long one gives the long one back.
    let cases = [
        (NumerationSystem::integer_base(2).unwrap(), SequenceSource::count(w("11")), 3),
        (NumerationSystem::rational_base(3, 2).unwrap(), SequenceSource::sumdigits(), 2),
        (NumerationSystem::rational_base(5, 2).unwrap(), SequenceSource::power(2), 3),
    ];
    for (sys, seq, h) in cases {
        let long = tree(&sys, &seq, 8000);
        let (set, _) = guess(&long, h, &GuessOptions::default()).unwrap();
        let short_sk = Skeleton::build(&sys, h, usize::MAX).unwrap();
        let short = TreePrefix::new(short_sk.clone(), long.decorations()[..short_sk.len()].to_vec()).unwrap();
        let ext = extend(&short, &set, long.levels()).unwrap();
        assert_eq!(ext.decorations(), long.decorations());
    }
}

#[test]
fn lifted_fixtures_verify_twice() {
    // Lifting is repeatable: h → h+1 → h+2.
    let sys = NumerationSystem::rational_base(3, 2).unwrap();
    let t = tree(&sys, &SequenceSource::sumdigits(), 4000);
    let once = lift(&fixtures::sumdigits32_relations(), &t).unwrap();
    let twice = lift(&once, &t).unwrap();
    assert_eq!(twice.h, 4);
    let v = verify(&t, &twice).unwrap();
    assert!(v.ok() && v.uncovered.is_empty());
}

#[test]
fn minimization_preserves_language() {
    // A redundant Fibonacci automaton: state 3 duplicates state 2.
    let dfa = Dfa::new(vec![0, 1], 4, 0, &[(0, 1, 1), (1, 0, 3), (3, 0, 2), (3, 1, 1), (2, 0, 2), (2, 1, 1)]).unwrap();
    let min = dfa.minimize();
    assert_eq!(min.states(), 3);
    assert_eq!(min.minimize().states(), 3);
    let fib = fibonacci_dfa();
    for len in 0..10u32 {
        for bits in 0..(1u32 << len) {
            let word: Vec<u32> = (0..len).rev().map(|i| (bits >> i) & 1).collect();
            assert_eq!(min.accepts(&word), dfa.accepts(&word));
            assert_eq!(min.accepts(&word), fib.accepts(&word));
        }
    }
}

#[test]
fn type_count_bounded_by_automaton_states() {
    let regular = [
        NumerationSystem::integer_base(2).unwrap(),
        NumerationSystem::integer_base(5).unwrap(),
        NumerationSystem::fibonacci(),
    ];
    for sys in regular {
        let states = sys.dfa().unwrap().minimize().states();
        for h in 1..=5 {
            assert!(count_types(&sys, h, h + 3).unwrap() <= states);
        }
    }
}

#[test]
fn dot_output_lists_every_node_and_edge() {
    let sys = NumerationSystem::rational_base(3, 2).unwrap();
    let terms = SequenceSource::sumdigits().terms(&sys, 15).unwrap();
    let sk = Skeleton::with_nodes(&sys, 15, usize::MAX).unwrap();
    let t = TreePrefix::new(sk.clone(), SequenceSource::sumdigits().terms_on(&sk).unwrap()).unwrap();
    let dot = t.render(RenderFormat::Dot);
    assert!(dot.starts_with("digraph"));
    let nodes = dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count();
    let edges = dot.lines().filter(|l| l.contains("->")).count();
    assert_eq!(nodes, t.len());
    assert_eq!(edges, t.len() - 1);
    assert!(t.len() >= 15);
    assert!(dot.contains(&format!("n14 [label=\"14:{}\"]", terms[14])));
}

#[test]
fn gdlr_json_roundtrip() {
    let sys = NumerationSystem::rational_base(3, 2).unwrap();
    let t = tree(&sys, &SequenceSource::power(2), 3000);
    let g = Gdlr::build(&fixtures::squares_relations(), &t).unwrap();
    let back = Gdlr::from_json(&g.to_json()).unwrap();
    assert_eq!(back, g);
    for n in 0..500u32 {
        assert_eq!(back.eval(&n.into()).unwrap(), rat((n * n) as i64));
    }
}
