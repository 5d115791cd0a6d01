//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use mlwf_core::generators::FieldSpec;
use mlwf_core::geometry::{make_cutoff, make_directional_cutoff, CutoffSpec, DirectionalCutoffSpec};
use mlwf_core::grid::Grid;
use mlwf_core::modulation::WindowKind;
use mlwf_core::psido::Method;
use mlwf_core::spaces::Weight;
use mlwf_core::symbol::{CharParams, Multiplier, Symbol, SymbolClass, Term};
use mlwf_core::wavefront::WavefrontQuery;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::expr::SymbolExpr;
use crate::io::{read_blob, require_file, BlobKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Wf,
    ModWf,
    OpApply,
    Char,
    Inclusion,
    Elliptic,
    WfIdentity,
    WindowIndependence,
    CalculusRegression,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Wf => "wf",
            ExperimentKind::ModWf => "mod-wf",
            ExperimentKind::OpApply => "op-apply",
            ExperimentKind::Char => "char",
            ExperimentKind::Inclusion => "inclusion",
            ExperimentKind::Elliptic => "elliptic",
            ExperimentKind::WfIdentity => "wf-identity",
            ExperimentKind::WindowIndependence => "window-independence",
            ExperimentKind::CalculusRegression => "calculus-regression",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub n: usize,
}

impl GridSpec {
    pub fn grid(&self) -> CliResult<Grid> {
        Grid::new(self.dimension, self.n).map_err(|e| CliError::schema(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialTerm {
    /// Multi-index of the frequency monomial.
    pub beta: [u32; 2],
    /// Coefficient as an expression in `x`.
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolSource {
    Expr { expr: String },
    Polynomial { terms: Vec<PolynomialTerm> },
    /// Dense table blob of kind `symbol`.
    Grid { path: PathBuf },
    /// Spatial cutoff times a directional frequency cutoff.
    Directional { cutoff: CutoffSpec, psi: DirectionalCutoffSpec },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    #[serde(flatten)]
    pub source: SymbolSource,
    /// Order weight; defaults to `<xi>^deg` for exact forms and `1` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Weight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// A bare string is read as an expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolInput {
    Text(String),
    Spec(SymbolSpec),
}

impl SymbolInput {
    pub fn spec(&self) -> SymbolSpec {
        match self {
            SymbolInput::Text(s) => SymbolSpec { source: SymbolSource::Expr { expr: s.clone() }, order: None, rho: None, delta: None },
            SymbolInput::Spec(s) => s.clone(),
        }
    }
}

impl SymbolSpec {
    /// Builds the symbol together with its order weight.
    pub fn build(&self, grid: Grid) -> CliResult<(Symbol, Weight)> {
        let plain = SymbolClass::default();
        let sym = match &self.source {
            SymbolSource::Expr { expr } => SymbolExpr::parse(expr)?.symbol(grid, plain)?,
            SymbolSource::Polynomial { terms } => {
                let terms = terms
                    .iter()
                    .map(|t| Ok((t.beta, SymbolExpr::parse(&t.coeff)?.field(grid)?)))
                    .collect::<CliResult<Vec<_>>>()?;
                Symbol::polynomial(grid, terms, plain)?
            }
            SymbolSource::Grid { path } => {
                let (h, table) = read_blob(path)?;
                if h.kind != BlobKind::Symbol || h.grid()? != grid {
                    return Err(CliError::schema(format!("{}: expected a symbol table on the configured grid", path.display())));
                }
                Symbol::from_table(grid, table, plain)?
            }
            SymbolSource::Directional { cutoff, psi } => {
                let phi = make_cutoff(cutoff, grid)?;
                let psi = make_directional_cutoff(psi, grid)?;
                Symbol::separable(grid, vec![Term { coeff: phi, mult: Multiplier::Table(psi.coeffs) }], plain)?
            }
            SymbolSource::Zero => Symbol::zero(grid),
        };
        let order = match (&self.order, &self.source) {
            (Some(w), _) => w.clone(),
            (None, SymbolSource::Directional { .. } | SymbolSource::Zero) => Weight::one(),
            (None, _) => sym.degree().map_or_else(Weight::one, |d| Weight::sigma(d as f64)),
        };
        order.validate()?;
        let class = SymbolClass::new(order.clone(), self.rho.unwrap_or(1.0), self.delta.unwrap_or(0.0));
        Ok((sym.with_class(class), order))
    }

    fn resolve(&mut self, base: &Path) {
        if let SymbolSource::Grid { path } = &mut self.source {
            *path = resolve(base, path);
        }
    }
}

/// Assertions checked after a run; `None` leaves the quantity unchecked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Neighbouring direction bins tolerated when comparing singular sets.
    pub slack: usize,
    pub jaccard: f64,
    pub rel_err: f64,
    pub max_singular: Option<usize>,
    pub min_singular: Option<usize>,
    pub max_characteristic: Option<usize>,
    pub min_characteristic: Option<usize>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            slack: 1,
            jaccard: 0.9,
            rel_err: 1e-10,
            max_singular: None,
            min_singular: None,
            max_characteristic: None,
            min_characteristic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Generated input field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    /// Input field blob; takes precedence over `field`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolInput>,
    /// Expression pairs for calculus regressions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<WavefrontQuery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_window: Option<WindowKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_params: Option<CharParams>,
    /// Random fields per case in suite-backed runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Reads, validates and resolves input paths against the config's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        require_file(path)?;
        let text = fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.input = cfg.input.map(|p| resolve(base, &p));
        if let Some(SymbolInput::Spec(s)) = &mut cfg.symbol {
            s.resolve(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> CliResult<Option<Grid>> {
        self.grid.map(|g| g.grid()).transpose()
    }

    pub fn require_grid(&self) -> CliResult<Grid> {
        self.grid()?.ok_or_else(|| CliError::schema(format!("{}: 'grid' is required", self.kind.name())))
    }

    pub fn require_query(&self) -> CliResult<&WavefrontQuery> {
        self.query.as_ref().ok_or_else(|| CliError::schema(format!("{}: 'query' is required", self.kind.name())))
    }

    pub fn require_symbol(&self) -> CliResult<SymbolSpec> {
        self.symbol.as_ref().map(|s| s.spec()).ok_or_else(|| CliError::schema(format!("{}: 'symbol' is required", self.kind.name())))
    }

    /// Whether a single field is configured rather than the built-in suite.
    pub fn has_field(&self) -> bool {
        self.field.is_some() || self.input.is_some()
    }

    pub fn validate(&self) -> CliResult<()> {
        let th = &self.thresholds;
        if !(th.jaccard > 0.0 && th.jaccard <= 1.0) {
            return Err(CliError::schema("thresholds.jaccard must lie in (0, 1]"));
        }
        if !(th.rel_err > 0.0) {
            return Err(CliError::schema("thresholds.rel_err must be positive"));
        }
        if self.fields == Some(0) {
            return Err(CliError::schema("fields must be positive"));
        }
        self.grid()?;
        if let Some(p) = &self.char_params {
            p.validate().map_err(|e| CliError::schema(format!("char_params: {e}")))?;
        }
        use ExperimentKind::*;
        let single = self.has_field();
        match self.kind {
            Wf | ModWf => {
                self.require_query()?;
                self.require_input()?;
            }
            OpApply => {
                self.require_symbol()?;
                self.require_input()?;
            }
            Char => {
                self.require_symbol()?;
                self.require_grid()?;
                self.require_query()?;
            }
            Inclusion | Elliptic if single => {
                self.require_symbol()?;
                self.require_query()?;
                self.require_input()?;
            }
            WfIdentity | WindowIndependence if single => {
                self.require_query()?;
                self.require_input()?;
            }
            CalculusRegression if !self.pairs.is_empty() => {
                self.require_grid()?;
            }
            _ => {}
        }
        if let Some(p) = &self.input {
            require_file(p)?;
        }
        if let Some(SymbolInput::Spec(SymbolSpec { source: SymbolSource::Grid { path }, .. })) = &self.symbol {
            require_file(path)?;
        }
        Ok(())
    }

    fn require_input(&self) -> CliResult<()> {
        match (&self.input, &self.field) {
            (Some(_), _) => Ok(()),
            (None, Some(_)) => self.require_grid().map(|_| ()),
            (None, None) => Err(CliError::schema(format!("{}: 'field' or 'input' is required", self.kind.name()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_schema_errors() {
        let e = ExperimentConfig::from_json(r#"{"kind": "wf", "bogus": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = ExperimentConfig::from_json("{not json").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn wf_needs_a_query() {
        let e = ExperimentConfig::from_json(
            r#"{"kind": "wf", "grid": {"dimension": 1, "n": 64}, "field": {"kind": "delta-surrogate", "center": [1, 0]}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("query"));
    }

    #[test]
    fn symbol_inputs_build_with_their_order() {
        let g = Grid::new(2, 16).unwrap();
        let cfg = ExperimentConfig::from_json(
            r#"{"kind": "char", "grid": {"dimension": 2, "n": 16}, "symbol": "1 + |xi|^2",
                "query": {"base_points": [[3, 3]], "weight": {"family": "constant", "c": 1}, "space": {"kind": "lp", "p": 1}}}"#,
        )
        .unwrap();
        let (_, w) = cfg.require_symbol().unwrap().build(g).unwrap();
        assert_eq!(w, Weight::sigma(2.0));

        let spec: SymbolSpec = serde_json::from_str(
            r#"{"kind": "polynomial", "terms": [{"beta": [1, 0], "coeff": "cos(x1)"}], "order": {"family": "polybracket", "s": 3}}"#,
        )
        .unwrap();
        let (a, w) = spec.build(g).unwrap();
        assert_eq!(a.degree(), Some(1));
        assert_eq!(w.eval([0.0; 2], [0.0; 2]), 1.0);
    }

    #[test]
    fn missing_input_file_is_reported() {
        let e = ExperimentConfig::from_json(
            r#"{"kind": "op-apply", "symbol": "xi", "input": "/nonexistent/f.bin"}"#,
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
