//! Python bindings: `import diethelper`.
//!
//! ```python
//! import diethelper
//! result = diethelper.check_label("Wheat flour, salt", diets=["gluten-free"])
//! result.violated_diets  # ['gluten-free']
//! ```

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyKeyError, PyValueError};
use pyo3::prelude::*;

use diethelper_core::filter::{self, highlight_spans};
use diethelper_core::{
    catalog, CaptureError, CheckError, DietRule, LabelInput, TextFragment, Transcript, UserProfile, CUSTOM_DIET,
};

create_exception!(
    diethelper,
    DietHelperError,
    PyException,
    "Base class for diethelper errors."
);
create_exception!(
    diethelper,
    RetakeError,
    DietHelperError,
    "No ingredients could be read; the label should be captured again."
);
create_exception!(diethelper, NoTextFound, RetakeError, "OCR produced no text at all.");
create_exception!(
    diethelper,
    EmptyTranscript,
    RetakeError,
    "The text held no ingredient tokens."
);

fn check_err(err: CheckError) -> PyErr {
    match err {
        CheckError::EmptyTranscript => EmptyTranscript::new_err(err.to_string()),
        CheckError::Capture(CaptureError::NoTextFound) => NoTextFound::new_err(err.to_string()),
        other => DietHelperError::new_err(other.to_string()),
    }
}

/// Builds the label input from exactly one of `text` / `fragments`.
pub fn label_input(text: Option<String>, fragments: Option<Vec<String>>) -> PyResult<LabelInput> {
    match (text, fragments) {
        (Some(text), None) => Ok(LabelInput::Raw(text)),
        (None, Some(fragments)) => {
            if fragments.iter().all(|f| f.trim().is_empty()) {
                return Err(check_err(CheckError::Capture(CaptureError::NoTextFound)));
            }
            Ok(LabelInput::Fragments(
                fragments.into_iter().map(TextFragment::from).collect(),
            ))
        }
        _ => Err(PyValueError::new_err("pass exactly one of text= or fragments=")),
    }
}

/// The diet catalog. `Catalog()` is the built-in seven-diet catalog.
#[pyclass(name = "Catalog", module = "diethelper", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCatalog {
    inner: diethelper_core::Catalog,
}

#[pymethods]
impl PyCatalog {
    #[new]
    fn new() -> Self {
        Self {
            inner: diethelper_core::Catalog::shipped(),
        }
    }

    /// Catalog from seed TOML text.
    #[staticmethod]
    fn from_toml(source: &str) -> PyResult<Self> {
        let diets = catalog::parse_seed(source).map_err(|e| DietHelperError::new_err(e.to_string()))?;
        let inner = diethelper_core::Catalog::from_diets(diets).map_err(|e| DietHelperError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    /// Catalog from a seed file.
    #[staticmethod]
    fn from_seed(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = catalog::load_seed(&path).map_err(|e| DietHelperError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    /// Diet names, sorted.
    fn names(&self) -> Vec<String> {
        self.inner.list_diets().into_iter().map(|d| d.name).collect()
    }

    /// `(name, description, ingredient_count)` per diet, sorted by name.
    fn diets(&self) -> Vec<(String, String, usize)> {
        self.inner
            .list_diets()
            .into_iter()
            .map(|d| (d.name, d.description, d.ingredient_count))
            .collect()
    }

    fn description(&self, name: &str) -> PyResult<String> {
        Ok(self.diet(name)?.description().to_string())
    }

    fn forbidden_ingredients(&self, name: &str) -> PyResult<Vec<String>> {
        Ok(self.diet(name)?.forbidden_ingredients().to_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, name: &str) -> bool {
        self.inner.contains(name)
    }

    fn __repr__(&self) -> String {
        format!("Catalog({})", self.names().join(", "))
    }
}

impl PyCatalog {
    fn diet(&self, name: &str) -> PyResult<&diethelper_core::Diet> {
        self.inner
            .find(name)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown diet {name:?}")))
    }
}

#[pyclass(name = "Violation", module = "diethelper", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
pub struct PyViolation {
    token_index: usize,
    token_text: String,
    /// `(needle, [diet, ...])` pairs.
    matches: Vec<(String, Vec<String>)>,
}

#[pymethods]
impl PyViolation {
    /// Byte ranges of `token_text` covered by matched needles, merged.
    fn highlight_spans(&self) -> Vec<(usize, usize)> {
        highlight_spans(&self.token_text, self.matches.iter().map(|(n, _)| n.as_str()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Violation({}, {:?}, {:?})",
            self.token_index, self.token_text, self.matches
        )
    }
}

/// The outcome of one check.
#[pyclass(name = "FilterResult", module = "diethelper", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFilterResult {
    inner: diethelper_core::FilterResult,
}

#[pymethods]
impl PyFilterResult {
    /// `"compliant"` or `"violations_found"`.
    #[getter]
    fn verdict(&self) -> &'static str {
        if self.inner.is_compliant() {
            "compliant"
        } else {
            "violations_found"
        }
    }

    #[getter]
    fn is_compliant(&self) -> bool {
        self.inner.is_compliant()
    }

    #[getter]
    fn violated_diets(&self) -> Vec<String> {
        self.inner.violated_diets.clone()
    }

    /// `(index, text)` for every token.
    #[getter]
    fn tokens(&self) -> Vec<(usize, String)> {
        self.inner.tokens.iter().map(|t| (t.index, t.text.clone())).collect()
    }

    #[getter]
    fn violations(&self) -> Vec<PyViolation> {
        self.inner
            .violations
            .iter()
            .map(|v| PyViolation {
                token_index: v.token_index,
                token_text: v.token_text.clone(),
                matches: v.matches.iter().map(|m| (m.needle.clone(), m.diets.clone())).collect(),
            })
            .collect()
    }

    /// `(token_index, needle)` pairs.
    fn flagged_pairs(&self) -> Vec<(usize, String)> {
        self.inner
            .flagged_pairs()
            .into_iter()
            .map(|(i, n)| (i, n.to_string()))
            .collect()
    }

    /// The same JSON document the HTTP service and CLI produce.
    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("serializable")
    }

    fn __bool__(&self) -> bool {
        self.inner.is_compliant()
    }

    fn __repr__(&self) -> String {
        format!(
            "FilterResult(verdict={:?}, violations={}, violated_diets={:?})",
            self.verdict(),
            self.inner.violations.len(),
            self.inner.violated_diets
        )
    }
}

/// A prebuilt matcher for a fixed profile; reuse it for many labels.
#[pyclass(name = "Matcher", module = "diethelper", frozen)]
pub struct PyMatcher {
    inner: filter::Matcher,
}

#[pymethods]
impl PyMatcher {
    #[new]
    #[pyo3(signature = (diets=Vec::new(), custom=Vec::new(), catalog=None))]
    fn new(diets: Vec<String>, custom: Vec<String>, catalog: Option<PyRef<'_, PyCatalog>>) -> PyResult<Self> {
        let profile = profile_for(&diets, &custom, catalog.as_deref())?;
        let shipped;
        let catalog = match &catalog {
            Some(c) => &c.inner,
            None => {
                shipped = diethelper_core::Catalog::shipped();
                &shipped
            }
        };
        Ok(Self {
            inner: filter::build_matcher(&filter::collect_rules(&profile, catalog)),
        })
    }

    /// Matcher over explicit `(diet, [needle, ...])` rules, used as given.
    #[staticmethod]
    fn from_rules(rules: Vec<(String, Vec<String>)>) -> Self {
        let rules: Vec<DietRule> = rules.iter().map(|(d, n)| DietRule::new(d.as_str(), n)).collect();
        Self {
            inner: filter::build_matcher(&rules),
        }
    }

    #[getter]
    fn needle_count(&self) -> usize {
        self.inner.needle_count()
    }

    #[pyo3(signature = (text=None, *, fragments=None))]
    fn check(&self, text: Option<String>, fragments: Option<Vec<String>>) -> PyResult<PyFilterResult> {
        let input = label_input(text, fragments)?;
        let inner = filter::check_label_with(&input, &self.inner).map_err(check_err)?;
        Ok(PyFilterResult { inner })
    }

    /// Needles found in a single already-normalized token.
    fn matching_needles(&self, token: &str) -> Vec<String> {
        self.inner
            .matching_needles(token)
            .into_iter()
            .map(String::from)
            .collect()
    }
}

fn profile_for(diets: &[String], custom: &[String], catalog: Option<&PyCatalog>) -> PyResult<UserProfile> {
    let known = |d: &str| match catalog {
        Some(c) => c.inner.contains(d),
        None => diethelper_core::Catalog::shipped().contains(d),
    };
    if let Some(unknown) = diets.iter().find(|d| !known(d)) {
        return Err(PyKeyError::new_err(format!("unknown diet {unknown:?}")));
    }
    if let Some(bad) = custom.iter().find(|c| c.contains(',')) {
        return Err(PyValueError::new_err(format!(
            "custom ingredient {bad:?} contains a comma"
        )));
    }
    Ok(UserProfile::ephemeral(diets.iter().cloned(), custom))
}

/// Check a label against the given diets and custom ingredients.
///
/// Raises `EmptyTranscript` / `NoTextFound` (both `RetakeError`) when the
/// label has no readable ingredients.
#[pyfunction]
#[pyo3(signature = (text=None, *, fragments=None, diets=Vec::new(), custom=Vec::new(), catalog=None))]
fn check_label(
    text: Option<String>,
    fragments: Option<Vec<String>>,
    diets: Vec<String>,
    custom: Vec<String>,
    catalog: Option<PyRef<'_, PyCatalog>>,
) -> PyResult<PyFilterResult> {
    let input = label_input(text, fragments)?;
    let profile = profile_for(&diets, &custom, catalog.as_deref())?;
    let result = match &catalog {
        Some(c) => diethelper_core::check_label(&input, &profile, &c.inner),
        None => diethelper_core::check_label(&input, &profile, &diethelper_core::Catalog::shipped()),
    };
    Ok(PyFilterResult {
        inner: result.map_err(check_err)?,
    })
}

/// Split lowercased text into `(index, token)` pairs.
#[pyfunction]
fn tokenize(text: &str) -> PyResult<Vec<(usize, String)>> {
    let tokens = diethelper_core::tokenize(&Transcript::from_raw(text)).map_err(|e| check_err(CheckError::from(e)))?;
    Ok(tokens.into_iter().map(|t| (t.index, t.text)).collect())
}

/// Join OCR fragments, each followed by a comma, and lowercase.
#[pyfunction]
fn join_fragments(fragments: Vec<String>) -> String {
    let fragments: Vec<TextFragment> = fragments.into_iter().map(TextFragment::from).collect();
    diethelper_core::join_fragments(&fragments).normalized().to_string()
}

#[pymodule]
pub fn diethelper(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("CUSTOM_DIET", CUSTOM_DIET)?;
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyFilterResult>()?;
    m.add_class::<PyViolation>()?;
    m.add_class::<PyMatcher>()?;
    m.add_function(wrap_pyfunction!(check_label, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(join_fragments, m)?)?;
    m.add("DietHelperError", py.get_type::<DietHelperError>())?;
    m.add("RetakeError", py.get_type::<RetakeError>())?;
    m.add("NoTextFound", py.get_type::<NoTextFound>())?;
    m.add("EmptyTranscript", py.get_type::<EmptyTranscript>())?;
    Ok(())
}
