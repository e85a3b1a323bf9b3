//! Python module `bidchess`: solve, look up and play bidding-chess endgames.
//!
//! Values are returned as `fractions.Fraction`; structured reports and
//! session states as plain dicts.

use std::path::PathBuf;

use bidchess_core::analytics;
use bidchess_core::board::{Color, PieceKind, Position};
use bidchess_core::session::{self, Action, Choice, GameSession, SessionError};
use bidchess_core::tablebase::{self, RichmanTable};
use bidchess_core::{Error, PieceSet, PositionSpace, Rational, Solution, SpaceOptions};
use pyo3::exceptions::{PyLookupError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyTuple;

pyo3::create_exception!(bidchess, ProtocolError, PyRuntimeError, "Action refused by the bidding protocol.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotInSpace(_) => PyLookupError::new_err(e.to_string()),
        Error::Session(s) => protocol_err(s),
        Error::Io(_) | Error::Integrity { .. } | Error::Format(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn protocol_err(e: SessionError) -> PyErr {
    ProtocolError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.numer().clone(), r.denom().clone()))
}

fn json_obj<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.getattr("loads")?.call1((s,))
}

fn parse_fen(fen: &str) -> PyResult<Position> {
    fen.parse().map_err(py_err)
}

fn parse_color(s: &str) -> PyResult<Color> {
    s.parse().map_err(py_err)
}

/// A solved value table over a closed set of positions.
#[pyclass(module = "bidchess", frozen)]
pub struct Table {
    sol: Solution,
    violations: usize,
}

#[pymethods]
impl Table {
    /// Iterates to horizon `n` over the closure of `pieces` (one set or a
    /// list) on a `board` such as `"8x8"`, and checks the candidate.
    #[staticmethod]
    #[pyo3(signature = (board, pieces, n, symmetry = false))]
    fn solve(py: Python<'_>, board: &str, pieces: Bound<'_, PyAny>, n: u32, symmetry: bool) -> PyResult<Table> {
        let names: Vec<String> = match pieces.extract::<String>() {
            Ok(s) => vec![s],
            Err(_) => pieces.extract()?,
        };
        let sets = names.iter().map(|s| s.parse::<PieceSet>()).collect::<Result<Vec<_>, _>>().map_err(py_err)?;
        let dims = board.parse().map_err(py_err)?;
        py.detach(|| {
            let space = PositionSpace::for_closure(dims, &sets, SpaceOptions { symmetry })?;
            let (sol, v) = Solution::solve(space, n)?;
            Ok(Table { sol, violations: v.count })
        })
        .map_err(py_err)
    }

    #[staticmethod]
    fn load(py: Python<'_>, path: PathBuf) -> PyResult<Table> {
        py.detach(|| {
            let sol = tablebase::load_table(&path)?.into_solution()?;
            Ok(Table { sol, violations: 0 })
        })
        .map_err(py_err)
    }

    /// Writes the table; only certified tables can be saved.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        if self.violations > 0 {
            return Err(PyValueError::new_err(format!("{} positions violate the Richman equation", self.violations)));
        }
        tablebase::save_table(&RichmanTable::from_solution(&self.sol).map_err(py_err)?, &path).map_err(py_err)
    }

    #[getter]
    fn violations(&self) -> usize {
        self.violations
    }

    #[getter]
    fn certified(&self) -> bool {
        self.violations == 0 && self.sol.is_certified()
    }

    #[getter]
    fn n(&self) -> Option<u32> {
        self.sol.n()
    }

    fn __len__(&self) -> usize {
        self.sol.space().len()
    }

    fn value<'py>(&self, py: Python<'py>, fen: &str) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.sol.value(&parse_fen(fen)?).map_err(py_err)?)
    }

    /// Optimal moves of `color` as `(coord, value)` pairs.
    fn best_moves<'py>(&self, py: Python<'py>, fen: &str, color: &str) -> PyResult<Vec<Bound<'py, PyTuple>>> {
        let moves = self.sol.best_moves(&parse_fen(fen)?, parse_color(color)?).map_err(py_err)?;
        moves.iter().map(|m| PyTuple::new(py, [m.mv.coord().into_pyobject(py)?.into_any(), fraction(py, &m.value)?])).collect()
    }

    /// Value, classification, optimal moves and Richman bid as a dict.
    fn report<'py>(&self, py: Python<'py>, fen: &str) -> PyResult<Bound<'py, PyAny>> {
        json_obj(py, &analytics::report(&self.sol, &parse_fen(fen)?).map_err(py_err)?)
    }

    fn __repr__(&self) -> String {
        let sets: Vec<String> = self.sol.space().piece_sets().iter().map(PieceSet::id).collect();
        format!("Table({} {}, {} positions, certified={})", self.sol.space().dims(), sets.join(","), self.sol.space().len(), self.certified())
    }
}

/// A game against the engine under the open bidding scheme. Every human
/// action is followed by the engine's replies until the human is to act.
#[pyclass(module = "bidchess")]
pub struct Session {
    table: Py<Table>,
    inner: GameSession,
}

impl Session {
    fn act(&mut self, py: Python<'_>, action: Action) -> PyResult<()> {
        let table = self.table.bind(py).get();
        self.inner.apply(self.inner.human_side, action).map_err(protocol_err)?;
        session::run_engine(&table.sol, &mut self.inner).map_err(py_err)?;
        Ok(())
    }
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (table, fen, chips_total, human_side, white_chips = None))]
    fn new(py: Python<'_>, table: Py<Table>, fen: &str, chips_total: u64, human_side: &str, white_chips: Option<u64>) -> PyResult<Session> {
        let pos = parse_fen(fen)?;
        let t = table.bind(py).get();
        t.sol.value(&pos).map_err(py_err)?;
        let white = white_chips.unwrap_or(chips_total / 2);
        let mut inner = GameSession::new("py", pos, chips_total, white, parse_color(human_side)?).map_err(protocol_err)?;
        session::run_engine(&t.sol, &mut inner).map_err(py_err)?;
        Ok(Session { table, inner })
    }

    fn bid(&mut self, py: Python<'_>, amount: i64) -> PyResult<()> {
        self.act(py, Action::Bid { amount })
    }

    /// `"accept"` or `"reject"`.
    fn choose(&mut self, py: Python<'_>, choice: &str) -> PyResult<()> {
        let choice: Choice = choice.parse().map_err(|_| PyValueError::new_err(format!("bad choice {choice:?}")))?;
        self.act(py, Action::Choose { choice })
    }

    #[pyo3(name = "move", signature = (from_sq, to_sq, promotion = None))]
    fn make_move(&mut self, py: Python<'_>, from_sq: &str, to_sq: &str, promotion: Option<char>) -> PyResult<()> {
        let dims = self.inner.position.dims();
        let from = dims.parse_square(from_sq).map_err(py_err)?;
        let to = dims.parse_square(to_sq).map_err(py_err)?;
        let promotion = match promotion {
            None => None,
            Some(c) => Some(PieceKind::from_letter(c).ok_or_else(|| PyValueError::new_err(format!("bad promotion {c:?}")))?),
        };
        self.act(py, Action::Move { from, to, promotion })
    }

    #[getter]
    fn position(&self) -> String {
        self.inner.position.to_fen()
    }

    #[getter]
    fn chips(&self) -> (u64, u64) {
        (self.inner.chips.white, self.inner.chips.black)
    }

    #[getter]
    fn phase<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_obj(py, &self.inner.phase)
    }

    #[getter]
    fn history<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_obj(py, &self.inner.history)
    }

    #[getter]
    fn over(&self) -> bool {
        self.inner.is_over()
    }
}

#[pymodule]
pub fn bidchess(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Table>()?;
    m.add_class::<Session>()?;
    m.add("ProtocolError", m.py().get_type::<ProtocolError>())?;
    Ok(())
}
