use levy_branching_py::levy_branching_py;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    pyo3::append_to_inittab!(levy_branching_py);
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn module_round_trip() {
    run(r#"
import math
import levy_branching_py as lb

m = lb.Model.exponential("x", 2.0, 1.0, 1.0, start=2.0)
assert m.orientation == "subordinator_negative_drift"
assert abs(m.scale_w([1.0])[0] - (1 - 0.5 * math.exp(-0.5))) < 1e-6
paths = lb.simulate(m, 100, seed=1)
assert all(p.extract(0.0) == [2.0] for p in paths)
u = lb.solve_cumulant(m, lb.TestFunction.constant(math.log(2)), 1.0)
assert 0.8 < u.u(1.0, 2.0) < 0.95

try:
    lb.Model.exponential("x", 1.0, 1.0, 1.0, start=1.0)
    raise AssertionError("critical drift accepted")
except ValueError as e:
    assert "critical" in str(e)
"#);
}
