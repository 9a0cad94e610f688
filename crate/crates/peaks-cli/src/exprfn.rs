//! Expressions compiled into the closures the core expects.
//!
//! The core works with plain `Fn(S) -> S`, so an evaluation error cannot propagate through
//! it. Errors are parked in a shared sink and the closure returns NaN; every command checks
//! the sink before it reports anything.

use std::sync::{Arc, Mutex};

use peaks_core::lyapunov::ExtPointFn;
use peaks_core::scalar::{Ext, MapFn, PointFn, RealFn};
use peaks_expr::{parse, Expression};

use crate::error::CliError;

#[derive(Clone, Default)]
pub struct ErrorSink(Arc<Mutex<Option<String>>>);

impl ErrorSink {
    fn record(&self, msg: String) {
        let mut slot = self.0.lock().expect("sink lock");
        if slot.is_none() {
            *slot = Some(msg);
        }
    }

    /// The first evaluation error seen so far, as a verification failure.
    pub fn check(&self) -> Result<(), CliError> {
        match self.0.lock().expect("sink lock").clone() {
            Some(msg) => Err(CliError::Verification(format!("expression evaluation failed: {msg}"))),
            None => Ok(()),
        }
    }
}

/// Named constants available to every expression, after the per-expression variables.
#[derive(Clone, Debug, Default)]
pub struct Params {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl Params {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Builds closures over one parameter set and one sink.
#[derive(Clone)]
pub struct Compiler {
    pub params: Params,
    pub sink: ErrorSink,
}

struct Compiled {
    expr: Expression,
    params: Vec<f64>,
    sink: ErrorSink,
    field: String,
}

impl Compiled {
    fn call(&self, inputs: &[f64]) -> f64 {
        let mut vals = Vec::with_capacity(inputs.len() + self.params.len());
        vals.extend_from_slice(inputs);
        vals.extend_from_slice(&self.params);
        match self.expr.eval(&vals) {
            Ok(v) => v,
            Err(e) => {
                self.sink.record(format!("{}: {e}", self.field));
                f64::NAN
            }
        }
    }
}

impl Compiler {
    fn compile(&self, field: &str, text: &str, vars: &[&str]) -> Result<Arc<Compiled>, CliError> {
        let mut all: Vec<&str> = vars.to_vec();
        all.extend(self.params.names.iter().map(String::as_str));
        let expr = parse(text, &all).map_err(|e| CliError::Input(format!("{field}: {e} in \"{text}\"")))?;
        Ok(Arc::new(Compiled {
            expr,
            params: self.params.values.clone(),
            sink: self.sink.clone(),
            field: field.to_string(),
        }))
    }

    /// A constant expression over the parameters only.
    pub fn constant(&self, field: &str, text: &str) -> Result<f64, CliError> {
        let c = self.compile(field, text, &[])?;
        let v = c.expr.eval(&self.params.values).map_err(|e| CliError::Input(format!("{field}: {e}")))?;
        Ok(v)
    }

    pub fn real(&self, field: &str, text: &str, var: &str) -> Result<RealFn<f64>, CliError> {
        let c = self.compile(field, text, &[var])?;
        Ok(Arc::new(move |x: f64| c.call(&[x])))
    }

    pub fn bivariate(
        &self,
        field: &str,
        text: &str,
        a: &str,
        b: &str,
    ) -> Result<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, CliError> {
        let c = self.compile(field, text, &[a, b])?;
        Ok(Arc::new(move |x: f64, y: f64| c.call(&[x, y])))
    }

    pub fn point(&self, field: &str, text: &str, dim: usize) -> Result<PointFn<f64>, CliError> {
        let names = state_names(dim);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let c = self.compile(field, text, &refs)?;
        Ok(Arc::new(move |x: &[f64]| c.call(x)))
    }

    /// Nonnegative extended-real function; `inf` in the expression value means +∞.
    pub fn ext_point(&self, field: &str, text: &str, dim: usize) -> Result<ExtPointFn<f64>, CliError> {
        let f = self.point(field, text, dim)?;
        Ok(Arc::new(move |x: &[f64]| {
            let v = f(x);
            if v == f64::INFINITY {
                Ext::Infinite
            } else {
                Ext::Finite(v)
            }
        }))
    }

    pub fn map(&self, field: &str, texts: &[String], dim: usize) -> Result<MapFn<f64>, CliError> {
        if texts.len() != dim {
            return Err(CliError::Input(format!("{field} has {} components, dim is {dim}", texts.len())));
        }
        let comps = texts
            .iter()
            .enumerate()
            .map(|(i, t)| self.point(&format!("{field}[{}]", i + 1), t, dim))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Arc::new(move |x: &[f64]| comps.iter().map(|c| c(x)).collect()))
    }
}

/// x1..xd.
pub fn state_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}
