use pyo3::prelude::*;

#[pymodule]
fn toponav_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
