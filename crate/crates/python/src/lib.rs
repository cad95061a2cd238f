//! Python bindings: numeration systems, sequences, relation guessing and
//! verification, linear representations and kernel ranks. Exact values
//! cross the boundary as `fractions.Fraction`, integers as Python `int`.

use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use numertree::dectree::TreePrefix;
use numertree::kernels::{self, KernelKind, KernelTable};
use numertree::linearity::{self, GuessOptions};
use numertree::seqlib::fixtures;
use numertree::{Gdlr, NumerationSystem, Rational, RelationSet, SequenceSource};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    let cls = py.import("fractions")?.getattr("Fraction")?;
    cls.call1((r.numer().clone(), r.denom().clone()))
}

fn fractions<'py>(py: Python<'py>, v: &[Rational]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    v.iter().map(|r| fraction(py, r)).collect()
}

fn data_tree(sys: &NumerationSystem, seq: &str, terms: usize) -> PyResult<TreePrefix> {
    let src = SequenceSource::from_spec(seq, sys).map_err(value_err)?;
    let t = src.terms(sys, terms).map_err(value_err)?;
    TreePrefix::from_terms(sys, &t).map_err(value_err)
}

/// A numeration system given as "2", "3/2", "fib" or "dfa:FILE".
#[pyclass(name = "NumerationSystem", module = "numertree_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySystem {
    inner: NumerationSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PySystem {
            inner: NumerationSystem::from_spec(spec).map_err(value_err)?,
        })
    }

    fn rep(&self, n: BigUint) -> PyResult<String> {
        let w = self.inner.rep(&n).map_err(value_err)?;
        Ok(self.inner.format_word(&w))
    }

    fn val(&self, word: &str) -> PyResult<BigUint> {
        let w = self.inner.parse_word(word).map_err(value_err)?;
        self.inner.val(&w).map_err(value_err)
    }

    fn is_valid(&self, word: &str) -> PyResult<bool> {
        Ok(self.inner.is_valid(&self.inner.parse_word(word).map_err(value_err)?))
    }

    /// Child-digit words of the base-p/q signature, `None` otherwise.
    fn signature(&self) -> Option<Vec<String>> {
        self.inner.signature().map(|sig| {
            sig.iter()
                .map(|ds| ds.iter().map(|d| d.to_string()).collect::<String>())
                .collect()
        })
    }

    fn is_expanding(&self) -> bool {
        self.inner.is_expanding()
    }

    #[getter]
    fn alphabet_size(&self) -> usize {
        self.inner.alphabet_size()
    }

    /// First `count` terms of a sequence spec such as "builtin:sumdigits".
    fn terms<'py>(&self, py: Python<'py>, seq: &str, count: usize) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let src = SequenceSource::from_spec(seq, &self.inner).map_err(value_err)?;
        fractions(py, &src.terms(&self.inner, count).map_err(value_err)?)
    }

    fn __repr__(&self) -> String {
        format!("NumerationSystem({:?})", self.inner.to_string())
    }
}

#[pyclass(name = "RelationSet", module = "numertree_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRelationSet {
    inner: RelationSet,
}

#[pymethods]
impl PyRelationSet {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRelationSet {
            inner: RelationSet::from_json_str(text).map_err(value_err)?,
        })
    }

    /// Bundled sets: "pairs11", "zeck-subwords", "sumdigits32", "sumdigits-matrix", "squares".
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let inner = match name {
            "pairs11" => fixtures::pairs11_relations(),
            "zeck-subwords" => fixtures::zeck_subwords_relations(),
            "sumdigits32" => fixtures::sumdigits32_relations(),
            "sumdigits-matrix" => fixtures::sumdigits_matrix_relations(),
            "squares" => fixtures::squares_relations(),
            _ => return Err(PyValueError::new_err(format!("unknown fixture {name:?}"))),
        };
        Ok(PyRelationSet { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn h(&self) -> usize {
        self.inner.h
    }

    #[getter]
    fn system(&self) -> PySystem {
        PySystem {
            inner: self.inner.system.clone(),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.relations.len()
    }

    /// Checks every relation on the first `terms` terms of `seq`.
    fn verify<'py>(&self, py: Python<'py>, seq: &str, terms: usize) -> PyResult<Bound<'py, PyDict>> {
        let t = data_tree(&self.inner.system, seq, terms)?;
        let r = linearity::verify(&t, &self.inner).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("ok", r.ok())?;
        d.set_item("checked", r.checked)?;
        d.set_item("violations", r.violations.len())?;
        d.set_item("uncovered", r.uncovered)?;
        Ok(d)
    }

    /// Relation set one level higher.
    fn lift(&self, seq: &str, terms: usize) -> PyResult<Self> {
        let t = data_tree(&self.inner.system, seq, terms)?;
        Ok(PyRelationSet {
            inner: linearity::lift(&self.inner, &t).map_err(value_err)?,
        })
    }
}

/// Fits relations at height `h`; returns the relation set and the report as JSON.
#[pyfunction]
#[pyo3(signature = (system, seq, h, terms=2000))]
fn guess(system: &PySystem, seq: &str, h: usize, terms: usize) -> PyResult<(PyRelationSet, String)> {
    let t = data_tree(&system.inner, seq, terms)?;
    let (set, report) = linearity::guess(&t, h, &GuessOptions::default()).map_err(value_err)?;
    Ok((PyRelationSet { inner: set }, report.to_json().to_string()))
}

#[pyclass(name = "Gdlr", module = "numertree_py", frozen)]
struct PyGdlr {
    inner: Gdlr,
}

#[pymethods]
impl PyGdlr {
    /// Builds from a relation set, taking the initial vector from `seq`.
    #[staticmethod]
    #[pyo3(signature = (relset, seq, terms=2000))]
    fn build(relset: &PyRelationSet, seq: &str, terms: usize) -> PyResult<Self> {
        let t = data_tree(&relset.inner.system, seq, terms)?;
        Ok(PyGdlr {
            inner: Gdlr::build(&relset.inner, &t).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(value_err)?;
        Ok(PyGdlr {
            inner: Gdlr::from_json(&v).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval<'py>(&self, py: Python<'py>, n: BigUint) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.eval(&n).map_err(value_err)?)
    }

    /// Value at a word and the number of matrix products used.
    fn eval_word<'py>(&self, py: Python<'py>, word: &str) -> PyResult<(Bound<'py, PyAny>, usize)> {
        let w = self.inner.system.parse_word(word).map_err(value_err)?;
        let (x, steps) = self.inner.eval_traced(&w).map_err(value_err)?;
        Ok((fraction(py, &x)?, steps))
    }
}

/// `τ(x,u)` on the first `count` indices.
#[pyfunction]
fn kernel_element<'py>(
    py: Python<'py>,
    system: &PySystem,
    seq: &str,
    suffix: &str,
    count: usize,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let src = SequenceSource::from_spec(seq, &system.inner).map_err(value_err)?;
    let u = system.inner.parse_word(suffix).map_err(value_err)?;
    let kt = KernelTable::new(&system.inner, &src, count, u.len()).map_err(value_err)?;
    fractions(py, &kt.s_kernel(&u))
}

/// Ranks of kernel spans for suffix bounds `0..=max_suffix`; `kind` is
/// "word" (suffix kernel) or "power" (classical, integer bases).
#[pyfunction]
#[pyo3(signature = (system, seq, max_suffix, count, kind="word"))]
fn rank_profile(system: &PySystem, seq: &str, max_suffix: usize, count: usize, kind: &str) -> PyResult<Vec<usize>> {
    let kind = match kind {
        "word" => KernelKind::WordSuffix,
        "power" => KernelKind::PowerSuffix,
        _ => return Err(PyValueError::new_err("kind must be \"word\" or \"power\"")),
    };
    let src = SequenceSource::from_spec(seq, &system.inner).map_err(value_err)?;
    let p = kernels::rank_profile(&system.inner, &src, max_suffix, count, kind).map_err(value_err)?;
    Ok(p.ranks())
}

#[pymodule]
fn numertree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyRelationSet>()?;
    m.add_class::<PyGdlr>()?;
    m.add_function(wrap_pyfunction!(guess, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_element, m)?)?;
    m.add_function(wrap_pyfunction!(rank_profile, m)?)?;
    Ok(())
}
