//! Python bindings: the main types (fields, spaces, flats, partitions) and
//! operations (constructions, verification, dependent counting, the span
//! game) exposed as one extension module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use projpart::dependence;
use projpart::dspan;
use projpart::error::Error;
use projpart::gfq::FieldSpec;
use projpart::partition::{self, Partition, VerifyMode, VerifyReport};
use projpart::pointset::PointSet;
use projpart::projgeom::{self, Space};

fn to_py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// GF(q) arithmetic on canonical integer representations.
#[pyclass(name = "Field")]
struct PyField {
    inner: FieldSpec,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(q: u32) -> PyResult<Self> {
        Ok(PyField { inner: FieldSpec::new(q).map_err(to_py_err)? })
    }

    #[getter]
    fn p(&self) -> u32 {
        self.inner.p()
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.m()
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.q()
    }

    /// Reduction polynomial coefficients, low to high (empty for prime q).
    #[getter]
    fn poly(&self) -> Vec<u8> {
        self.inner.poly().to_vec()
    }

    fn add(&self, a: u8, b: u8) -> PyResult<u8> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.inner.add(a, b))
    }

    fn sub(&self, a: u8, b: u8) -> PyResult<u8> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.inner.sub(a, b))
    }

    fn mul(&self, a: u8, b: u8) -> PyResult<u8> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.inner.mul(a, b))
    }

    fn div(&self, a: u8, b: u8) -> PyResult<u8> {
        self.check(a)?;
        self.check(b)?;
        self.inner.div(a, b).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Field({})", self.inner.q())
    }
}

impl PyField {
    fn check(&self, a: u8) -> PyResult<()> {
        if (a as u32) < self.inner.q() {
            Ok(())
        } else {
            Err(to_py_err(Error::InvalidRepr { repr: a as u32, q: self.inner.q() }))
        }
    }
}

/// The projective space F_qP^n with canonically indexed points.
#[pyclass(name = "Space")]
#[derive(Clone)]
struct PySpace {
    inner: Space,
}

#[pymethods]
impl PySpace {
    #[new]
    fn new(q: u32, n: usize) -> PyResult<Self> {
        Ok(PySpace { inner: Space::new(q, n).map_err(to_py_err)? })
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.q()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn point_count(&self) -> u64 {
        self.inner.point_count()
    }

    /// Normalized homogeneous coordinates of the point with this index.
    fn point_coords(&self, index: u32) -> PyResult<Vec<u8>> {
        if (index as u64) < self.inner.point_count() {
            Ok(self.inner.point(index).coords())
        } else {
            Err(PyValueError::new_err(format!("point index {index} out of range")))
        }
    }

    /// Canonical index of the point named by any nonzero coordinate vector.
    fn point_index(&self, coords: Vec<u8>) -> PyResult<u32> {
        Ok(self.inner.point_from_coords(&coords).map_err(to_py_err)?.index())
    }

    /// Number of k-dimensional flats.
    fn count_flats(&self, k: i32) -> PyResult<u128> {
        self.inner.count_flats(k).map_err(to_py_err)
    }

    /// Minimal flat containing the given points.
    fn span(&self, points: Vec<u32>) -> PyResult<PyFlat> {
        self.bounds(&points)?;
        Ok(PyFlat { inner: self.inner.span_indices(&points) })
    }

    /// Whether the tuple's span has dimension below len-1.
    fn is_dependent(&self, points: Vec<u32>) -> PyResult<bool> {
        self.bounds(&points)?;
        Ok(projgeom::is_dependent_indices(&self.inner, &points))
    }

    /// Exact (dependent, total) tuple counts over a product of point sets.
    fn count_dependent(&self, factors: Vec<Vec<u32>>) -> PyResult<(u128, u128)> {
        let universe = self.inner.point_count() as u32;
        let sets: Vec<PointSet> = factors
            .iter()
            .map(|ids| {
                self.bounds(ids)?;
                Ok(PointSet::from_indices(universe, ids.iter().copied()))
            })
            .collect::<PyResult<_>>()?;
        let c = dependence::count_dependent(&self.inner, &sets).map_err(to_py_err)?;
        Ok((c.dependent, c.total))
    }

    fn __repr__(&self) -> String {
        format!("Space(q={}, n={})", self.inner.q(), self.inner.n())
    }
}

impl PySpace {
    fn bounds(&self, points: &[u32]) -> PyResult<()> {
        let count = self.inner.point_count();
        match points.iter().find(|&&p| p as u64 >= count) {
            Some(p) => Err(PyValueError::new_err(format!("point index {p} out of range"))),
            None => Ok(()),
        }
    }
}

/// A flat in canonical RREF basis form.
#[pyclass(name = "Flat")]
struct PyFlat {
    inner: projgeom::Flat,
}

#[pymethods]
impl PyFlat {
    #[getter]
    fn dim(&self) -> i32 {
        self.inner.dim()
    }

    /// Basis rows over GF(q).
    #[getter]
    fn rows(&self) -> Vec<Vec<u8>> {
        self.inner.rows_nested()
    }

    fn points(&self) -> Vec<u32> {
        self.inner.point_indices()
    }

    fn contains(&self, point: u32) -> bool {
        self.inner.contains_point(point)
    }

    fn __repr__(&self) -> String {
        format!("Flat(dim={}, rows={:?})", self.inner.dim(), self.inner.rows_nested())
    }
}

/// A product partition of (F_qP^n)^k.
#[pyclass(name = "Partition")]
struct PyPartition {
    inner: Partition,
}

fn verify_dict<'py>(py: Python<'py>, report: &VerifyReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("disjoint", report.disjoint)?;
    d.set_item("covering", report.covering)?;
    d.set_item("witnessed", report.witnessed)?;
    d.set_item("pass", report.all_pass())?;
    d.set_item("parts", report.parts)?;
    d.set_item("covered", report.covered)?;
    d.set_item("total", report.total)?;
    d.set_item("violations", report.violations.clone())?;
    Ok(d)
}

#[pymethods]
impl PyPartition {
    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.space().q()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.space().n()
    }

    /// Disjointness, coverage, and witness checks.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = self.inner.verify(&VerifyMode::Exhaustive);
        verify_dict(py, &report)
    }

    /// Factors of one part as lists of point indices, plus its witness rows.
    fn part<'py>(&self, py: Python<'py>, index: usize) -> PyResult<Bound<'py, PyDict>> {
        let part = self
            .inner
            .parts()
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("part index {index} out of range")))?;
        let d = PyDict::new_bound(py);
        let factors: Vec<Vec<u32>> =
            part.factors().iter().map(|f| f.points().iter().collect()).collect();
        d.set_item("factors", factors)?;
        d.set_item("witness", part.witness().map(|w| w.rows_nested()))?;
        Ok(d)
    }

    /// The partition as its JSON file format.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_file())
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn __repr__(&self) -> String {
        format!(
            "Partition(q={}, n={}, k={}, size={})",
            self.inner.space().q(),
            self.inner.space().n(),
            self.inner.k(),
            self.inner.size()
        )
    }
}

/// The point × almost-line partition of (F_qP^2)^2, size (q²+q+1)(q+1).
#[pyfunction]
fn plane_partition(q: u32) -> PyResult<PyPartition> {
    Ok(PyPartition { inner: partition::construct_plane_partition(q).map_err(to_py_err)? })
}

/// The nested-pencil partition of (F_qP^n)^k.
#[pyfunction]
fn power_partition(q: u32, n: usize, k: usize) -> PyResult<PyPartition> {
    Ok(PyPartition { inner: partition::construct_power_partition(q, n, k).map_err(to_py_err)? })
}

/// Load a partition from its JSON file format.
#[pyfunction]
fn partition_from_json(text: &str) -> PyResult<PyPartition> {
    let file: partition::PartitionFile =
        serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(PyPartition { inner: Partition::from_file(&file).map_err(to_py_err)? })
}

/// Solve one span-game instance; returns the output flat, the query count,
/// and the query/answer trace.
#[pyfunction]
fn dspan_solve<'py>(
    py: Python<'py>,
    space: &PySpace,
    points: Vec<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    space.bounds(&points)?;
    let inst = dspan::Instance::new(&space.inner, points).map_err(to_py_err)?;
    let (output, trace) = dspan::solve(&inst).map_err(to_py_err)?;
    let d = PyDict::new_bound(py);
    d.set_item("output", output.rows_nested())?;
    d.set_item("queries", trace.len())?;
    let qs = PyList::empty_bound(py);
    for (flat, ans) in &trace.queries {
        let q = PyDict::new_bound(py);
        q.set_item("flat", flat.rows_nested())?;
        match ans {
            dspan::OracleAnswer::Yes => q.set_item("answer", "YES")?,
            dspan::OracleAnswer::No(i) => q.set_item("answer", *i)?,
        }
        qs.append(q)?;
    }
    d.set_item("trace", qs)?;
    Ok(d)
}

/// Sweep all instances of the span game and report the induced leaf
/// partition.
#[pyfunction]
fn dspan_leaf_partition<'py>(
    py: Python<'py>,
    space: &PySpace,
) -> PyResult<Bound<'py, PyDict>> {
    let report = dspan::leaf_partition(&space.inner).map_err(to_py_err)?;
    let d = PyDict::new_bound(py);
    d.set_item("instances", report.instances)?;
    d.set_item("leaves", report.leaves)?;
    d.set_item("max_queries", report.max_queries)?;
    d.set_item("mean_queries", report.mean_queries)?;
    d.set_item("query_bound", report.query_bound)?;
    d.set_item("verify", verify_dict(py, &report.verify)?)?;
    d.set_item("induced_sets_exact", report.induced_sets_exact)?;
    d.set_item("factor_structure_ok", report.factor_structure_ok)?;
    d.set_item("partition", PyPartition { inner: report.partition }.into_py(py))?;
    Ok(d)
}

/// Minimum number of bicliques partitioning K_{n,n} minus a perfect
/// matching (n ≤ 5).
#[pyfunction]
fn min_biclique_partition(n: usize) -> PyResult<usize> {
    let inst = dependence::BicliqueInstance::complement_of_matching(n);
    dependence::min_biclique_partition(&inst).map_err(to_py_err)
}

#[pymodule]
fn projpart_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PySpace>()?;
    m.add_class::<PyFlat>()?;
    m.add_class::<PyPartition>()?;
    m.add_function(wrap_pyfunction!(plane_partition, m)?)?;
    m.add_function(wrap_pyfunction!(power_partition, m)?)?;
    m.add_function(wrap_pyfunction!(partition_from_json, m)?)?;
    m.add_function(wrap_pyfunction!(dspan_solve, m)?)?;
    m.add_function(wrap_pyfunction!(dspan_leaf_partition, m)?)?;
    m.add_function(wrap_pyfunction!(min_biclique_partition, m)?)?;
    Ok(())
}
