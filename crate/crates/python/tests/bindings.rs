use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(bidchess::bidchess)(py);
        py.import("sys").unwrap().getattr("modules").unwrap().set_item("bidchess", m).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        let globals = PyDict::new(py);
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn small_board_table_from_python() {
    run(r#"
from fractions import Fraction
import bidchess
t = bidchess.Table.solve("4x4", "KNk", 400)
assert t.certified and t.violations == 0 and len(t) == 4112
fen = "4x4/3k/4/4/K2N"
assert t.value(fen) == Fraction(31, 48)
r = t.report(fen)
assert r["classification"] == "Zugzwang"
assert r["richman_bid_white"]["num"] == "-1"
moves = sorted(t.best_moves(fen, "white"))
assert [m for m, _ in moves] == ["a1a2", "a1b1", "d1b2"]
assert all(v == Fraction(61, 96) for _, v in moves)
try:
    t.value("8x8/8/8/8/8/8/8/8/KN5k")
    raise AssertionError("lookup should fail")
except LookupError:
    pass
try:
    bidchess.Table.solve("4x4", "Kq", 10)
    raise AssertionError("bad piece set accepted")
except ValueError:
    pass
"#);
}

#[test]
fn session_from_python() {
    run(r#"
import bidchess
t = bidchess.Table.solve("4x4", "KNk", 400)
s = bidchess.Session(t, "4x4/3k/4/4/K2N", 1000, "white", white_chips=646)
h = s.history
assert h[0] == {"event": "bid", "by": "black", "amount": -10}, h
assert s.phase == {"phase": "awaiting_choice", "chooser": "white", "bid": -10}
try:
    s.bid(3)
    raise AssertionError("out-of-phase bid accepted")
except bidchess.ProtocolError:
    pass
s.choose("reject")
assert s.chips == (656, 344)
assert s.phase["phase"] == "awaiting_move"
s.move("a1", "b1")
assert sum(s.chips) == 1000
"#);
}
