use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

/// Run `code` with the module bound as `polhdr`.
fn run(code: &str) {
    Python::attach(|py| {
        let module = PyModule::new(py, "polhdr").unwrap();
        polhdr::polhdr(&module).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("polhdr", module).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.display(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn formation_model_roundtrip() {
    run(r#"
q = polhdr.forward_quad(2.0, 0.4, 30.0)
assert abs(q[0] + q[2] - 2.0) < 1e-15 and abs(q[1] + q[3] - 2.0) < 1e-15
rho, theta = polhdr.pol_state(*q)
assert abs(rho - 0.4) < 1e-12 and abs(theta - 30.0) < 1e-9
t = polhdr.effective_exposures(1.5, 0.4, 30.0)
assert abs(t[0] + t[2] - 1.5) < 1e-15
"#);
}

#[test]
fn simulate_fuse_and_merge() {
    run(r#"
crf = polhdr.Crf.gamma(2.2)
gt = polhdr.generate_scene(width=48, height=32, seed=3)
assert gt.radiance.width == 48 and gt.rho.height == 32
stack = polhdr.simulate_stack(gt, crf)
assert len(stack) == 17 and stack.exposures() == polhdr.DEFAULT_EXPOSURES_MS
ideb, mask = polhdr.fuse_ideb(stack.quad(8), crf)
assert mask.bit_depth == 8 and set(mask.data()) <= {0, 128, 255}
hdr, ok, t_ref = polhdr.build_reference_hdr(stack, crf)
assert t_ref == 0.769 and all(ok)
assert polhdr.hdr_log_psnr(gt.radiance, hdr) > 25.0
assert polhdr.psnr(hdr, hdr, 1.0) == float("inf")
tm = polhdr.reinhard_tonemap(hdr)
assert 0.0 <= min(tm.data()) and max(tm.data()) <= 1.0
"#);
}

#[test]
fn errors_become_python_exceptions() {
    run(r#"
try:
    polhdr.RadianceMap(2, 2, 1, [0.0, 1.0, -1.0, 0.5])
    raise AssertionError("negative radiance accepted")
except ValueError as e:
    assert str(e).startswith("input:")
try:
    polhdr.CaptureStack.load("/nonexistent/manifest.json")
    raise AssertionError("missing manifest accepted")
except OSError:
    pass
try:
    polhdr.generate_scene(pattern="plaid")
    raise AssertionError("unknown pattern accepted")
except ValueError:
    pass
"#);
}

#[test]
fn crf_recovery_and_json() {
    run(r#"
truth = polhdr.Crf.gamma(2.2)
gt = polhdr.generate_scene(width=64, height=64, stops=8.0)
stack = polhdr.simulate_stack(gt, truth, exposures=[0.25, 0.5, 1.0, 2.0, 4.0])
rec = polhdr.solve_crf(stack)
table = rec.inverse_table()
assert all(b >= a for a, b in zip(table, table[1:]))
for level in (40, 128, 200):
    r = rec.invert(level) / rec.invert(128)
    t = truth.invert(level) / truth.invert(128)
    assert abs(r - t) / t < 0.02, (level, r, t)
again = polhdr.Crf.from_json(rec.to_json())
assert again.inverse_table() == table
"#);
}
