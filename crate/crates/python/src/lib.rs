//! Python bindings: `import lpn_py`.

use lpn_core::{instance_file, LpnError, PlanOverrides, SolverConfig};
use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: LpnError) -> PyErr {
    match e {
        LpnError::InfeasiblePlan(_) => PyRuntimeError::new_err(e.to_string()),
        LpnError::Resource { .. } => PyMemoryError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_bias(eps: &str) -> PyResult<lpn_core::Bias> {
    eps.parse().map_err(to_py)
}

/// Exact bias `num/den` in `(0, 1/2]`.
#[pyclass(frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct Bias(lpn_core::Bias);

#[pymethods]
impl Bias {
    #[new]
    fn new(num: u64, den: u64) -> PyResult<Self> {
        lpn_core::Bias::new(num, den).map(Bias).map_err(to_py)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_bias(text).map(Bias)
    }

    #[getter]
    fn num(&self) -> u64 {
        self.0.num()
    }

    #[getter]
    fn den(&self) -> u64 {
        self.0.den()
    }

    fn __float__(&self) -> f64 {
        self.0.as_f64()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Bias({}, {})", self.0.num(), self.0.den())
    }
}

#[pyclass(frozen)]
pub struct Instance(lpn_core::LpnInstance);

#[pymethods]
impl Instance {
    /// Planted instance with a random key.
    #[staticmethod]
    fn generate(n: usize, eps: &str, count: usize, seed: u64) -> PyResult<Self> {
        lpn_core::LpnInstance::generate(n, parse_bias(eps)?, count, seed)
            .map(Instance)
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        instance_file::parse(text).map(Instance).map_err(to_py)
    }

    fn to_text(&self) -> String {
        instance_file::serialize(&self.0)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn eps(&self) -> Bias {
        Bias(self.0.eps)
    }

    /// Planted key as lowercase hex, if known.
    #[getter]
    fn key(&self) -> Option<String> {
        self.0.key.as_ref().map(|k| k.to_hex())
    }

    /// `(coefficients as hex, rhs)` pairs.
    fn samples(&self) -> Vec<(String, bool)> {
        self.0
            .samples
            .iter()
            .map(|s| (s.coeffs.to_hex(), s.rhs))
            .collect()
    }

    /// Copy without the planted key.
    fn attack_only(&self) -> Self {
        Instance(self.0.attack_only())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(frozen)]
pub struct Plan(lpn_core::Plan);

#[pymethods]
impl Plan {
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn log_n(&self) -> f64 {
        self.0.log_n
    }
    #[getter]
    fn w_real(&self) -> f64 {
        self.0.w_real
    }
    #[getter]
    fn b_real(&self) -> f64 {
        self.0.b_real
    }
    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }
    #[getter]
    fn w_int(&self) -> u32 {
        self.0.w_int
    }
    #[getter]
    fn b_int(&self) -> u32 {
        self.0.b_int
    }
    #[getter]
    fn r(&self) -> f64 {
        self.0.r
    }
    #[getter]
    fn l_prime(&self) -> u32 {
        self.0.l_prime
    }
    #[getter]
    fn log_c_lc(&self) -> f64 {
        self.0.log_c_lc
    }
    #[getter]
    fn log_c_ht(&self) -> f64 {
        self.0.log_c_ht
    }
    #[getter]
    fn feasible(&self) -> bool {
        self.0.feasible
    }

    fn to_kv(&self) -> String {
        self.0.to_kv()
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(n={}, log_n={}, w_int={}, b_int={}, l_prime={}, feasible={})",
            self.0.n, self.0.log_n, self.0.w_int, self.0.b_int, self.0.l_prime, self.0.feasible
        )
    }
}

#[pyclass(frozen, get_all)]
pub struct SolveResult {
    key: String,
    agreement: f64,
    success: bool,
    /// `None` when the instance carries no planted key.
    exact_match: Option<bool>,
    equations: usize,
    spectrum_dim: usize,
    document: String,
}

fn overrides(w: Option<u32>, b: Option<u32>, l: Option<u32>) -> PlanOverrides {
    PlanOverrides {
        w_int: w,
        b_int: b,
        l_prime: l,
    }
}

/// Asymptotic parameter choice for `2^log_n` samples.
#[pyfunction]
#[pyo3(signature = (n, eps, log_n, w=None, b=None, l=None))]
fn make_plan(
    n: usize,
    eps: &str,
    log_n: f64,
    w: Option<u32>,
    b: Option<u32>,
    l: Option<u32>,
) -> PyResult<Plan> {
    lpn_core::make_plan(n, parse_bias(eps)?, log_n, overrides(w, b, l))
        .map(Plan)
        .map_err(to_py)
}

/// Solve with the given overrides; unpinned parameters are chosen for the
/// instance's sample count.
#[pyfunction]
#[pyo3(signature = (instance, w=None, b=None, l=None))]
fn solve(
    py: Python<'_>,
    instance: &Instance,
    w: Option<u32>,
    b: Option<u32>,
    l: Option<u32>,
) -> PyResult<SolveResult> {
    let inst = &instance.0;
    if inst.is_empty() {
        return Err(PyValueError::new_err("instance has no samples"));
    }
    let plan = lpn_core::desk_plan(
        inst.n,
        inst.eps,
        (inst.len() as f64).log2(),
        overrides(w, b, l),
    )
    .map_err(to_py)?;
    if !plan.feasible {
        return Err(PyRuntimeError::new_err(format!(
            "infeasible plan: w' = {}, b' = {}, l' = {}",
            plan.w_int, plan.b_int, plan.l_prime
        )));
    }
    let res = py
        .detach(|| lpn_core::solve(inst, &plan, &SolverConfig::default()))
        .map_err(to_py)?;
    let exact_match = inst.key.as_ref().map(|k| *k == res.key_hat);
    Ok(SolveResult {
        key: res.key_hat.to_hex(),
        agreement: res.agreement,
        success: res.success,
        exact_match,
        equations: res.report.equations,
        spectrum_dim: res.report.spectrum_dim,
        document: res.to_kv(inst.eps, exact_match),
    })
}

#[pyfunction]
#[pyo3(signature = (n=128, eps="1/8", log_ns=vec![10.0, 20.0, 30.0, 40.0, 47.0, 50.0]))]
fn table(n: usize, eps: &str, log_ns: Vec<f64>) -> PyResult<String> {
    let rows = lpn_core::emit_table(n, parse_bias(eps)?, &log_ns);
    Ok(lpn_core::format_table(&rows, &log_ns))
}

/// Bias of a `w`-wise XOR as an exact fraction string.
#[pyfunction]
fn piling_up_bias(eps: &str, w: u32) -> PyResult<String> {
    let eps = parse_bias(eps)?;
    lpn_core::piling_up_bias(&eps.to_rational(), w)
        .map(|r| r.to_string())
        .map_err(to_py)
}

/// Unnormalized Walsh–Hadamard transform of a power-of-two-length list.
#[pyfunction]
fn fwht(mut values: Vec<i64>) -> PyResult<Vec<i64>> {
    lpn_core::fwht_in_place(&mut values).map_err(to_py)?;
    Ok(values)
}

#[pymodule]
pub fn lpn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Bias>()?;
    m.add_class::<Instance>()?;
    m.add_class::<Plan>()?;
    m.add_class::<SolveResult>()?;
    m.add_function(wrap_pyfunction!(make_plan, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    m.add_function(wrap_pyfunction!(piling_up_bias, m)?)?;
    m.add_function(wrap_pyfunction!(fwht, m)?)?;
    Ok(())
}
