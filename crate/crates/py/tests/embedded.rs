use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = wrap_pymodule!(locaw_py::locaw_module)(py);
        let globals = PyDict::new(py);
        globals.set_item("lw", m).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        py.run(&code, Some(&globals), None).unwrap_or_else(|e| panic!("{e}"));
    });
}

#[test]
fn algebra_round_trip() {
    run(r#"
a = lw.Algebra([1, 2])
x = a.element([[[2]], [[0, 1j], [-1j, 0]]])
assert x.blocks()[1][0][1] == 1j
assert abs((x * x.adjoint()).norm() - x.norm() ** 2) < 1e-12
vals, _ = x.eigen()
assert [round(v, 12) for v in vals[1]] == [-1.0, 1.0]
"#);
}

#[test]
fn annihilator_and_lattice() {
    run(r#"
e = lw.Element.diag([1.0, 0.0, 1.0])
g = lw.right_annihilator([e])
assert g.dist(lw.Element.diag([0.0, 1.0, 0.0])) < 1e-12
assert lw.sup([e, g]).dist(e.algebra.identity()) < 1e-12
"#);
}

#[test]
fn errors_map_to_value_error() {
    run(r#"
try:
    lw.Algebra([2]).element([[[1, 2, 3]]])
except ValueError:
    pass
else:
    raise AssertionError("ragged block accepted")
try:
    lw.sup([lw.Element.diag([0.5])])
except ValueError as err:
    assert "projection" in str(err)
else:
    raise AssertionError("non-projection accepted")
code, _, err = lw.invoke(["verify", "w-star"])
assert code == 2 and "out of scope" in err
"#);
}

#[test]
fn chain_thread_verdicts() {
    run(r#"
s = lw.System.from_toml('''
[chain]
block_size = 1
horizon = 8

[elements.h]
generator = "diag_harmonic"
''')
kind, sup = s.element("h").sup_norm()
assert kind == "bounded" and abs(sup - 1.0) < 1e-12
"#);
}
