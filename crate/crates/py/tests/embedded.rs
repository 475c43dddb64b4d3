use std::ffi::CString;
use std::sync::Once;

use pyo3::prelude::*;
use recjust_py::recjust_py;

static INIT: Once = Once::new();

fn run(code: &str) {
    INIT.call_once(|| {
        pyo3::append_to_inittab!(recjust_py);
        Python::initialize();
    });
    let code = CString::new(code).unwrap();
    Python::attach(|py| {
        if let Err(e) = py.run(&code, None, None) {
            e.display(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn graph_and_justify() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/movies");
    run(&format!(
        r#"
import recjust_py as rj
g = rj.Graph.from_files("{dir}/nodes.tsv", "{dir}/edges.tsv")
assert g.node_count == 13, g
j = rj.justify(g, "Avatar", ["Aliens", "The Terminator"], budget=3)
assert "James Cameron" in j.ids() and "Science Fiction" in j.ids(), j.ids()
r = rj.relevance(g, "Avatar", ["The Terminator", "Aliens"])
assert abs(sum(r.per_attribute.values()) - 1) < 1e-9
"#
    ));
}

#[test]
fn objective_and_errors() {
    run(r#"
import recjust_py as rj
o = rj.Objective([("a", 0.6, "x", ["t"]), ("b", 0.4, "y", [])], 2, 0.5, 0.5)
assert o.score([]) <= o.score([0]) <= o.score([0, 1])
assert [i for i, _ in o.greedy()] == [0, 1]
try:
    rj.Objective([], 0)
except rj.RecjustError:
    pass
else:
    raise AssertionError("empty pool accepted")
assert dict(rj.axiom_table(["jrecs"]))["jrecs"]["7_long_path_connectivity"]
"#);
}
