use pyo3::prelude::*;

#[pymodule]
fn skytrace(_m: &Bound<PyModule>) -> PyResult<()> {
    Ok(())
}
