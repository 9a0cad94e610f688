//! Problem files: TOML with one `[system]` table and optional artifact tables.
//!
//! Every real-valued field accepts a number or an expression string over `[params]`, so
//! `mu = "1/3"` and `beta = "(1/2)^(1/11)"` both work.

use std::collections::BTreeMap;
use std::sync::Arc;

use peaks_core::gallery::{self, closed_forms, ClosedForms, ExampleParams};
use peaks_core::lyapunov::PsdFunction;
use peaks_core::{
    Certificate, Envelope, InitialSet64, KLGen, KLGenBound, MonotoneBijection, Pair, Psd, System, UsefulPair,
};
use serde::Deserialize;

use crate::error::CliError;
use crate::exprfn::{Compiler, ErrorSink, Params};

const RESERVED: [&str; 5] = ["s", "t", "x", "y", "k"];

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Num(f64),
    Expr(String),
}

impl Real {
    fn text(&self) -> String {
        match self {
            Real::Num(v) => format!("{v:?}"),
            Real::Expr(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub params: BTreeMap<String, Real>,
    pub system: SystemSpec,
    pub pair: Option<PairSpec>,
    pub klgen: Option<KLGenSpec>,
    pub lyapunov: Option<LyapunovSpec>,
    pub classical: Option<ClassicalSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// "example", "map" or "linear".
    pub kind: String,
    pub label: Option<String>,
    pub p: Option<Real>,
    pub mu: Option<Real>,
    pub dim: Option<usize>,
    pub map: Option<Vec<String>>,
    pub matrix: Option<Vec<Vec<Real>>>,
    pub phi: Option<String>,
    pub initial_set: Option<SetSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    /// "box", "segment", "points" or "box_line".
    pub kind: String,
    pub lo: Option<Vec<Real>>,
    pub hi: Option<Vec<Real>>,
    pub a: Option<Vec<Real>>,
    pub b: Option<Vec<Real>>,
    pub direction: Option<Vec<Real>>,
    pub points: Option<Vec<Vec<Real>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    /// "linear", "affine", "expr", "example_a" or "example_b".
    pub kind: String,
    pub a: Option<Real>,
    pub c: Option<Real>,
    pub h: Option<String>,
    pub inverse: Option<String>,
    pub beta: Option<Real>,
    pub n0: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KLGenSpec {
    pub gamma: String,
    pub limit: Option<String>,
    pub theta: String,
    pub theta_sup: Real,
    /// h(0) for the Sontag extension.
    pub m: Real,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSpec {
    /// "expr" (default) or "example".
    pub kind: Option<String>,
    pub v: Option<String>,
    pub lambda: Option<Real>,
    pub witness: Option<Vec<Real>>,
    pub alpha: Option<String>,
    pub alpha_inverse: Option<String>,
    pub interval: Option<[Real; 2]>,
    pub zeta: Option<Real>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSpec {
    pub v: String,
    pub alpha1: String,
    pub psi: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub grid: Option<usize>,
    pub refine_rounds: Option<usize>,
    pub horizon: Option<usize>,
    pub tolerance: Option<f64>,
    pub samples: Option<usize>,
}

/// A problem file with parameters resolved and the system built.
pub struct Problem {
    pub file: ProblemFile,
    pub compiler: Compiler,
    pub system: System,
    pub example: Option<ClosedForms<f64>>,
}

pub fn parse_problem(text: &str) -> Result<Problem, CliError> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| CliError::Input(format!("problem file: {e}")))?;
    let sink = ErrorSink::default();
    let params = resolve_params(&file.params, &sink)?;
    let compiler = Compiler { params, sink };
    let (system, example) = build_system(&file.system, &compiler)?;
    let problem = Problem { file, compiler, system, example };
    problem.check_sections()?;
    Ok(problem)
}

/// Parameters may refer to each other in any order, as long as there is no cycle.
fn resolve_params(raw: &BTreeMap<String, Real>, sink: &ErrorSink) -> Result<Params, CliError> {
    for name in raw.keys() {
        let ok_ident = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        let state = name.len() > 1 && name.starts_with('x') && name[1..].chars().all(|c| c.is_ascii_digit());
        if !ok_ident || RESERVED.contains(&name.as_str()) || state || peaks_expr::Func::lookup(name).is_some() {
            return Err(CliError::Input(format!("params: '{name}' is reserved or not an identifier")));
        }
    }
    let mut params = Params::default();
    let mut pending: Vec<(&String, &Real)> = raw.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let compiler = Compiler { params: params.clone(), sink: sink.clone() };
        let mut rest = vec![];
        for (name, value) in pending {
            match compiler.constant(&format!("params.{name}"), &value.text()) {
                Ok(v) if v.is_finite() => {
                    params.names.push(name.clone());
                    params.values.push(v);
                }
                Ok(v) => return Err(CliError::Input(format!("params.{name} evaluates to {v}"))),
                Err(_) => rest.push((name, value)),
            }
        }
        if rest.len() == before {
            let (name, value) = rest[0];
            let err = compiler.constant(&format!("params.{name}"), &value.text()).expect_err("still failing");
            return Err(err);
        }
        pending = rest;
    }
    Ok(params)
}

fn need<'a, T>(field: &str, v: &'a Option<T>) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Input(format!("missing field {field}")))
}

impl Compiler {
    pub fn value(&self, field: &str, r: &Real) -> Result<f64, CliError> {
        match r {
            Real::Num(v) => Ok(*v),
            Real::Expr(s) => self.constant(field, s),
        }
    }

    fn vector(&self, field: &str, v: &[Real]) -> Result<Vec<f64>, CliError> {
        v.iter().enumerate().map(|(i, r)| self.value(&format!("{field}[{i}]"), r)).collect()
    }
}

fn example_params(spec: &SystemSpec, c: &Compiler) -> Result<ExampleParams<f64>, CliError> {
    let lookup = |field: &str, own: &Option<Real>| -> Result<f64, CliError> {
        match own {
            Some(r) => c.value(&format!("system.{field}"), r),
            None => c.params.get(field).ok_or_else(|| CliError::Input(format!("example system needs {field}"))),
        }
    };
    let (p, mu) = (lookup("p", &spec.p)?, lookup("mu", &spec.mu)?);
    ExampleParams::new(p, mu).map_err(CliError::from)
}

fn build_set(spec: &SetSpec, c: &Compiler) -> Result<InitialSet64, CliError> {
    let vec = |field: &str, v: &Option<Vec<Real>>| -> Result<Vec<f64>, CliError> {
        c.vector(&format!("system.initial_set.{field}"), need(&format!("system.initial_set.{field}"), v)?)
    };
    let set = match spec.kind.as_str() {
        "box" => InitialSet64::Box { lo: vec("lo", &spec.lo)?, hi: vec("hi", &spec.hi)? },
        "segment" => InitialSet64::Segment { a: vec("a", &spec.a)?, b: vec("b", &spec.b)? },
        "box_line" => InitialSet64::BoxLine {
            lo: vec("lo", &spec.lo)?,
            hi: vec("hi", &spec.hi)?,
            direction: vec("direction", &spec.direction)?,
        },
        "points" => {
            let pts = need("system.initial_set.points", &spec.points)?;
            InitialSet64::Points(
                pts.iter().map(|p| c.vector("system.initial_set.points", p)).collect::<Result<_, _>>()?,
            )
        }
        other => return Err(CliError::Input(format!("unknown initial set kind '{other}'"))),
    };
    set.validate()?;
    Ok(set)
}

fn build_system(spec: &SystemSpec, c: &Compiler) -> Result<(System, Option<ClosedForms<f64>>), CliError> {
    if spec.kind == "example" {
        let params = example_params(spec, c)?;
        return Ok((gallery::worked_system(params), Some(closed_forms(params))));
    }
    let set = build_set(need("system.initial_set", &spec.initial_set)?, c)?;
    let dim = spec.dim.unwrap_or(set.dim());
    if dim != set.dim() {
        return Err(CliError::Input(format!(
            "system.dim = {dim} but the initial set lives in dimension {}",
            set.dim()
        )));
    }
    let phi = c.point("system.phi", need("system.phi", &spec.phi)?, dim)?;
    let map = match spec.kind.as_str() {
        "map" => c.map("system.map", need("system.map", &spec.map)?, dim)?,
        "linear" => {
            let rows = need("system.matrix", &spec.matrix)?;
            let m: Vec<Vec<f64>> = rows.iter().map(|r| c.vector("system.matrix", r)).collect::<Result<_, _>>()?;
            if m.len() != dim || m.iter().any(|r| r.len() != dim) {
                return Err(CliError::Input(format!("system.matrix must be {dim}x{dim}")));
            }
            Arc::new(move |x: &[f64]| m.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
        }
        other => return Err(CliError::Input(format!("unknown system kind '{other}'"))),
    };
    let label = spec.label.clone().unwrap_or_else(|| format!("{} system in dimension {dim}", spec.kind));
    Ok((System::from_arcs(label, set, map, phi)?, None))
}

impl Problem {
    fn check_sections(&self) -> Result<(), CliError> {
        if let Some(p) = &self.file.pair {
            self.candidate_pair_from(p)?;
        }
        if self.file.klgen.is_some() {
            self.klgen_bound()?;
        }
        if self.file.lyapunov.is_some() {
            self.lyapunov()?;
        }
        if self.file.classical.is_some() {
            self.classical()?;
        }
        Ok(())
    }

    fn example_or(&self, what: &str) -> Result<ClosedForms<f64>, CliError> {
        self.example.ok_or_else(|| CliError::Input(format!("{what} needs an example system")))
    }

    pub fn candidate_pair(&self) -> Result<Pair, CliError> {
        let p = need("[pair]", &self.file.pair)?;
        self.candidate_pair_from(p)
    }

    fn candidate_pair_from(&self, p: &PairSpec) -> Result<Pair, CliError> {
        let c = &self.compiler;
        let beta = |default: Option<f64>| -> Result<f64, CliError> {
            match (&p.beta, default) {
                (Some(b), _) => c.value("pair.beta", b),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(CliError::Input("missing field pair.beta".into())),
            }
        };
        let pair = match p.kind.as_str() {
            "linear" => {
                UsefulPair::candidate(Envelope::linear(c.value("pair.a", need("pair.a", &p.a)?)?), beta(None)?)?
            }
            "affine" => {
                let a = c.value("pair.a", need("pair.a", &p.a)?)?;
                let cc = c.value("pair.c", need("pair.c", &p.c)?)?;
                if !(a > 0.0) {
                    return Err(CliError::Input(format!("pair.a = {a} must be positive")));
                }
                UsefulPair::candidate(Envelope::affine(a, cc), beta(None)?)?
            }
            "expr" => {
                let text = need("pair.h", &p.h)?;
                let mut h = MonotoneBijection::from_arc(text.clone(), c.real("pair.h", text, "x")?);
                if let Some(inv) = &p.inverse {
                    let f = c.real("pair.inverse", inv, "y")?;
                    h = h.with_inverse(move |y| f(y));
                }
                h.check(201).map_err(|e| CliError::Input(format!("pair.h: {e}")))?;
                UsefulPair::candidate(h, beta(None)?)?
            }
            "example_a" | "example_b" => {
                let cf = self.example_or("pair kind example_a/example_b")?;
                let n0 = p.n0.unwrap_or(cf.n_zero);
                if n0 == 0 {
                    return Err(CliError::Input("pair.n0 must be positive".into()));
                }
                let raw =
                    if p.kind == "example_a" { gallery::pair_a(cf.params, n0) } else { gallery::pair_b(cf.params, n0) };
                match &p.beta {
                    Some(b) => UsefulPair::candidate(raw.h, c.value("pair.beta", b)?)?,
                    None => raw,
                }
            }
            other => return Err(CliError::Input(format!("unknown pair kind '{other}'"))),
        };
        Ok(pair)
    }

    /// (bound, m).
    pub fn klgen_bound(&self) -> Result<(KLGenBound, f64), CliError> {
        let k = need("[klgen]", &self.file.klgen)?;
        let c = &self.compiler;
        let g = c.bivariate("klgen.gamma", &k.gamma, "s", "t")?;
        let mut gamma = KLGen::from_arc(k.gamma.clone(), g);
        if let Some(l) = &k.limit {
            let f = c.real("klgen.limit", l, "s")?;
            gamma = gamma.with_limit(move |s| f(s));
        }
        let theta = c.point("klgen.theta", &k.theta, self.system.dim)?;
        let theta_sup = c.value("klgen.theta_sup", &k.theta_sup)?;
        let m = c.value("klgen.m", &k.m)?;
        Ok((KLGenBound::new(gamma, theta, theta_sup), m))
    }

    /// (V, λ, certificate).
    pub fn lyapunov(&self) -> Result<(Psd, f64, Option<Certificate>), CliError> {
        let l = need("[lyapunov]", &self.file.lyapunov)?;
        let c = &self.compiler;
        let lambda = l.lambda.as_ref().map(|r| c.value("lyapunov.lambda", r)).transpose()?;
        if l.kind.as_deref() == Some("example") {
            let cf = self.example_or("lyapunov kind example")?;
            let zeta = match &l.zeta {
                Some(z) => c.value("lyapunov.zeta", z)?,
                None => cf.zetas().0,
            };
            let cert = gallery::certificate(cf.params, zeta)?;
            return Ok((gallery::lyapunov_function(cf.params), lambda.unwrap_or(5.0 / 9.0), Some(cert)));
        }
        if let Some(kind) = l.kind.as_deref().filter(|k| *k != "expr") {
            return Err(CliError::Input(format!("unknown lyapunov kind '{kind}'")));
        }
        let text = need("lyapunov.v", &l.v)?;
        let mut v = PsdFunction::from_arc(text.clone(), c.ext_point("lyapunov.v", text, self.system.dim)?);
        if let Some(w) = &l.witness {
            v = v.with_witness(c.vector("lyapunov.witness", w)?);
        }
        let lambda = lambda.ok_or_else(|| CliError::Input("missing field lyapunov.lambda".into()))?;
        let cert = match &l.alpha {
            None => None,
            Some(a) => {
                let interval = need("lyapunov.interval", &l.interval)?;
                let lo = c.value("lyapunov.interval[0]", &interval[0])?;
                let hi = c.value("lyapunov.interval[1]", &interval[1])?;
                let mut cert = Certificate::new(a.clone(), c.real("lyapunov.alpha", a, "s")?, (lo, hi))?;
                if let Some(inv) = &l.alpha_inverse {
                    let f = c.real("lyapunov.alpha_inverse", inv, "y")?;
                    cert = cert.with_inverse(move |y| f(y));
                }
                Some(cert)
            }
        };
        Ok((v, lambda, cert))
    }

    /// (V, α₁, ψ).
    pub fn classical(
        &self,
    ) -> Result<(Psd, peaks_core::scalar::RealFn<f64>, peaks_core::scalar::RealFn<f64>), CliError> {
        let k = need("[classical]", &self.file.classical)?;
        let c = &self.compiler;
        let v = PsdFunction::from_arc(k.v.clone(), c.ext_point("classical.v", &k.v, self.system.dim)?);
        Ok((v, c.real("classical.alpha1", &k.alpha1, "s")?, c.real("classical.psi", &k.psi, "s")?))
    }
}
