//! The planar worked example: T = A·x with A = [[1, 1], [1/4, 1]], φ(x, y) = y² − x² + p·x,
//! X^in = ([2μ,1]×[μ,1]) ∩ span{(2,1)}. Closed forms, canonical certificates and the three
//! reference tables.

use std::fmt::Write as _;

use crate::error::{PeaksError, Result};
use crate::lyapunov::{certificate_from_margins, CompatibilityCertificate, PsdFunction};
use crate::pairs::{formula_f, verify_pair, MonotoneBijection, UsefulPair};
use crate::scalar::{from_usize, lit, Ext, Scalar};
use crate::seq::BoundedSequence;
use crate::systems::{DynamicalSystem, InitialSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleParams<S> {
    pub p: S,
    pub mu: S,
}

impl<S: Scalar> ExampleParams<S> {
    pub fn new(p: S, mu: S) -> Result<Self> {
        if !(p >= lit(1.5)) || !(mu > S::zero() && mu <= lit::<S>(1.0) / lit(3.0) + S::epsilon()) {
            return Err(PeaksError::Parameter(format!("need p >= 3/2 and mu in (0, 1/3], got p = {p}, mu = {mu}")));
        }
        Ok(Self { p, mu })
    }
}

/// Indices and the closed-form ν of the worked example.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForms<S> {
    pub params: ExampleParams<S>,
    pub n_lower: usize,
    pub n_upper: usize,
    /// ⌊ln(2p/(3μ))/ln(3/2)⌋ + 1.
    pub n_zero: usize,
    /// First n with φ_n(μ) < 0, found by scanning; agrees with `n_zero`.
    pub n_zero_scan: usize,
}

fn floor_plus_one<S: Scalar>(x: S) -> usize {
    (x.floor() + S::one()).max(S::zero()).to_usize().expect("index fits")
}

pub fn closed_forms<S: Scalar>(params: ExampleParams<S>) -> ClosedForms<S> {
    let (p, mu) = (params.p, params.mu);
    let (two, three) = (lit::<S>(2.0), lit::<S>(3.0));
    let l23 = (two / three).ln();
    let n_lower = floor_plus_one((three / (two * p)).ln() / l23);
    let n_upper = floor_plus_one((three * mu / p).ln() / l23);
    let n_zero = floor_plus_one((two * p / (three * mu)).ln() / (three / two).ln());
    let mut cf = ClosedForms { params, n_lower, n_upper, n_zero, n_zero_scan: 0 };
    cf.n_zero_scan = (0..10_000).find(|&n| cf.phi_n(n, mu) < S::zero()).expect("phi_n(mu) eventually negative");
    cf
}

impl<S: Scalar> ClosedForms<S> {
    /// φ_n(y) = φ(A^n (2y, y)) = −3(3/2)^{2n} y² + 2p(3/2)^n y.
    pub fn phi_n(&self, n: usize, y: S) -> S {
        let g = lit::<S>(1.5).powi(n as i32);
        -lit::<S>(3.0) * g * g * y * y + lit::<S>(2.0) * self.params.p * g * y
    }

    pub fn plateau(&self) -> S {
        self.params.p * self.params.p / lit(3.0)
    }

    pub fn nu(&self, n: usize) -> S {
        if n < self.n_lower {
            self.phi_n(n, lit(0.5))
        } else if n < self.n_upper {
            self.plateau()
        } else {
            self.phi_n(n, self.params.mu)
        }
    }

    /// n*_y = max{⌊ln(4p/(15y))/ln(3/2)⌋ + 1, 0}, the maximizer of n ↦ φ_n(y).
    pub fn n_star(&self, y: S) -> usize {
        let v = (lit::<S>(4.0) * self.params.p / (lit::<S>(15.0) * y)).ln() / lit::<S>(1.5).ln();
        floor_plus_one(v)
    }

    pub fn k_s(&self) -> usize {
        self.n_upper - 1
    }

    /// ν with its exact tail: the plateau until K^s, then strictly decreasing terms.
    pub fn sequence(&self) -> BoundedSequence<S> {
        let me = *self;
        let me2 = *self;
        BoundedSequence::new(format!("nu(p={}, mu={})", self.params.p, self.params.mu), move |k| me.nu(k))
            .with_tail_bound(move |k| if k + 1 < me2.n_upper { me2.plateau() } else { me2.nu(k + 1) })
    }

    /// ε = 8μ²(2/3)^{2n̄−1}.
    pub fn epsilon(&self) -> S {
        lit::<S>(8.0) * self.params.mu * self.params.mu * (lit::<S>(2.0) / lit(3.0)).powi(2 * self.n_upper as i32 - 1)
    }

    /// p²/3 − max{φ_{n*_{1/2}}(1/2), φ_{n̄}(μ)}: the gap to the best non-maximal term.
    pub fn margin(&self) -> S {
        let half = lit::<S>(0.5);
        self.plateau() - self.phi_n(self.n_star(half), half).max(self.phi_n(self.n_upper, self.params.mu))
    }

    pub fn zetas(&self) -> (S, S) {
        let m = self.margin();
        (m / lit(2.0), m / lit(1000.0))
    }
}

pub fn worked_system<S: Scalar>(params: ExampleParams<S>) -> DynamicalSystem<S> {
    let (p, mu) = (params.p, params.mu);
    let quarter = lit::<S>(0.25);
    let set = InitialSet::BoxLine {
        lo: vec![lit::<S>(2.0) * mu, mu],
        hi: vec![S::one(), S::one()],
        direction: vec![lit(2.0), S::one()],
    };
    DynamicalSystem::new(
        format!("worked(p={p}, mu={mu})"),
        set,
        move |x: &[S]| vec![x[0] + x[1], quarter * x[0] + x[1]],
        move |x: &[S]| x[1] * x[1] - x[0] * x[0] + p * x[0],
    )
    .expect("valid initial set")
}

/// h(x) = a·x with β = base^{1/n₀}.
fn linear_pair<S: Scalar>(a: S, base: S, n0: usize) -> UsefulPair<S> {
    UsefulPair::candidate(MonotoneBijection::linear(a), base.powf(S::one() / from_usize(n0))).expect("beta in (0,1)")
}

/// (p²·x, (2/3)^{1/n₀}).
pub fn pair_a<S: Scalar>(params: ExampleParams<S>, n0: usize) -> UsefulPair<S> {
    linear_pair(params.p * params.p, lit::<S>(2.0) / lit(3.0), n0)
}

/// (2p²/3·x, (1/2)^{1/n₀}).
pub fn pair_b<S: Scalar>(params: ExampleParams<S>, n0: usize) -> UsefulPair<S> {
    linear_pair(lit::<S>(2.0) * params.p * params.p / lit(3.0), lit(0.5), n0)
}

/// V = 2μ²/(x₁x₂) on span{(2,1)} \ {0}, 0 elsewhere.
pub fn lyapunov_function<S: Scalar>(params: ExampleParams<S>) -> PsdFunction<S> {
    let mu = params.mu;
    let tol = lit::<S>(1e-12);
    PsdFunction::new("2mu^2/(x1*x2) on span(2,1)", move |x: &[S]| {
        let on_line = (x[0] - lit::<S>(2.0) * x[1]).abs() <= tol * S::one().max(x[0].abs());
        if on_line && x[1] != S::zero() {
            Ext::Finite(lit::<S>(2.0) * mu * mu / (x[0] * x[1]))
        } else {
            Ext::Finite(S::zero())
        }
    })
    .with_witness(vec![lit::<S>(2.0) * mu, mu])
}

fn check_zeta<S: Scalar>(cf: &ClosedForms<S>, zeta: S) -> Result<()> {
    let m = cf.margin();
    if zeta > S::zero() && zeta < m {
        Ok(())
    } else {
        Err(PeaksError::Parameter(format!("zeta = {zeta} must lie in (0, {m})")))
    }
}

/// α(s) = s − p²/3 + min{ζ, ε}.
pub fn certificate<S: Scalar>(params: ExampleParams<S>, zeta: S) -> Result<CompatibilityCertificate<S>> {
    let cf = closed_forms(params);
    check_zeta(&cf, zeta)?;
    certificate_from_margins(cf.plateau(), cf.epsilon(), zeta)
}

/// (h_ζ, 4/9) with h_ζ(s) = s + p²/3 − min{ζ, ε}.
pub fn h_zeta<S: Scalar>(params: ExampleParams<S>, zeta: S) -> Result<UsefulPair<S>> {
    let cf = closed_forms(params);
    check_zeta(&cf, zeta)?;
    let m = zeta.min(cf.epsilon());
    let c = cf.plateau();
    // The inverse is written as (y − p²/3) + m so that h⁻¹(p²/3) = m exactly.
    let h = MonotoneBijection::new("h_zeta", move |x| x + (c - m))
        .with_inverse(move |y| (y - c) + m)
        .with_log_inverse(move |y: S| ((y - c) + m).ln())
        .with_sharp_h0();
    UsefulPair::candidate(h, lit::<S>(4.0) / lit(9.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactChoice {
    PairA,
    PairB,
    Lyapunov,
    Certificate,
    HZeta,
}

#[derive(Debug, Clone)]
pub enum Artifact<S> {
    Pair(UsefulPair<S>),
    Psd(PsdFunction<S>),
    Certificate(CompatibilityCertificate<S>),
}

/// Named constructions of the worked example. Pairs use the formula value of n₀.
pub fn canonical_artifacts<S: Scalar>(
    params: ExampleParams<S>,
    choice: ArtifactChoice,
    zeta: Option<S>,
) -> Result<Artifact<S>> {
    let cf = closed_forms(params);
    let need_zeta = || zeta.ok_or_else(|| PeaksError::Parameter("zeta required".into()));
    Ok(match choice {
        ArtifactChoice::PairA => Artifact::Pair(pair_a(params, cf.n_zero)),
        ArtifactChoice::PairB => Artifact::Pair(pair_b(params, cf.n_zero)),
        ArtifactChoice::Lyapunov => Artifact::Psd(lyapunov_function(params)),
        ArtifactChoice::Certificate => Artifact::Certificate(certificate(params, need_zeta()?)?),
        ArtifactChoice::HZeta => Artifact::Pair(h_zeta(params, need_zeta()?)?),
    })
}

// ---------------------------------------------------------------------------
// Reference tables

/// The nine parameter combinations, in table order.
pub const COMBOS: [(f64, f64, &str); 9] = [
    (30.0, 1.0 / 3.0, "1/3"),
    (30.0, 0.1, "1/10"),
    (30.0, 0.001, "1/1000"),
    (9.0, 1.0 / 3.0, "1/3"),
    (9.0, 0.1, "1/10"),
    (9.0, 0.001, "1/1000"),
    (3.0, 1.0 / 3.0, "1/3"),
    (3.0, 0.1, "1/10"),
    (3.0, 0.001, "1/1000"),
];

/// Table 1, reference values as printed: ν_0..ν_6 and (K^s, ν_opt).
pub const REFERENCE_T1: [([f64; 7], usize, f64); 9] = [
    ([29.25, 43.31, 63.70, 92.71, 132.65, 184.56, 244.41], 8, 300.0),
    ([29.25, 43.31, 63.70, 92.71, 132.65, 184.56, 244.41], 11, 300.0),
    ([29.25, 43.31, 63.70, 92.71, 132.65, 184.56, 244.41], 22, 300.0),
    ([8.25, 11.81, 16.45, 21.83, 26.34, 27.0, 25.09], 5, 27.0),
    ([8.25, 11.81, 16.45, 21.83, 26.34, 27.0, 27.0], 8, 27.0),
    ([8.25, 11.81, 16.45, 21.83, 26.34, 27.0, 27.0], 19, 27.0),
    ([2.25, 2.81, 3.0, 2.95, 1.58, -4.03, -20.47], 2, 3.0),
    ([2.25, 2.81, 3.0, 3.0, 3.0, 3.0, 2.94], 5, 3.0),
    ([2.25, 2.81, 3.0, 3.0, 3.0, 3.0, 3.0], 17, 3.0),
];

/// Table 2, reference values as printed: (n̲, n̄, n₀), then ⌊𝔉⌋ at k = 0..4 and K^s for pair A, then pair B.
pub const REFERENCE_T2: [([usize; 3], [usize; 6], [usize; 6]); 9] = [
    ([8, 9, 10], [84, 74, 65, 56, 47, 27], [43, 37, 32, 26, 21, 9]),
    ([8, 12, 13], [97, 84, 72, 61, 50, 35], [56, 49, 42, 35, 28, 12]),
    ([8, 23, 24], [202, 179, 156, 131, 113, 65], [104, 91, 77, 64, 52, 23]),
    ([5, 6, 7], [39, 33, 27, 22, 19, 18], [18, 15, 12, 9, 7, 7]),
    ([5, 9, 10], [56, 47, 39, 32, 27, 27], [27, 21, 17, 13, 10, 9]),
    ([5, 20, 21], [118, 99, 82, 67, 58, 56], [56, 46, 36, 27, 21, 20]),
    ([2, 3, 4], [13, 11, 10, 10, 17, 10], [5, 4, 3, 4, 7, 3]),
    ([2, 4, 5], [23, 20, 18, 18, 18, 18], [9, 7, 7, 7, 7, 7]),
    ([2, 18, 18], [61, 51, 48, 48, 48, 48], [25, 19, 18, 18, 18, 18]),
];

/// Table 2, reference values as printed: cells marked with an asterisk, as (combo, column) with columns 0..5 for pair A and 6..11 for pair B.
pub const ASTERISKED_T2: [(usize, usize); 4] = [(6, 3), (6, 4), (6, 9), (6, 10)];

/// Table 3, reference values as printed: rows K^s, ⌊𝔉(K^s, a, β)⌋, ⌊𝔉(K^s, h_ζ1, 4/9)⌋, ⌊𝔉(K^s, h_ζ2, 4/9)⌋.
pub const REFERENCE_T3: [[usize; 9]; 4] = [
    [8, 11, 22, 5, 8, 19, 2, 3, 17],
    [9, 12, 23, 7, 9, 20, 3, 7, 18],
    [8, 14, 36, 5, 11, 33, 4, 8, 31],
    [8, 14, 36, 9, 11, 33, 12, 12, 31],
];

/// A reference cell known not to reproduce, with the reason.
#[derive(Debug, Clone, Copy)]
pub struct KnownDiscrepancy {
    pub table: u8,
    pub row: usize,
    pub col: usize,
    pub reason: &'static str,
}

const N_UPPER_TYPO: &str = "printed n_upper = 4 contradicts the closed form (6) and Table 1 (K^s = 5)";
const ROW_NEEDS_N0_7: &str = "printed row is reproduced only with n0 = 7, neither the printed 5 nor the formula 8";

/// Cells that do not reproduce from the printed parameters.
pub const KNOWN_DISCREPANCIES: &[KnownDiscrepancy] = &[
    KnownDiscrepancy {
        table: 2,
        row: 1,
        col: 0,
        reason: "pair A row shifted by one column (printed k equals recomputed k+1)",
    },
    KnownDiscrepancy {
        table: 2,
        row: 1,
        col: 1,
        reason: "pair A row shifted by one column (printed k equals recomputed k+1)",
    },
    KnownDiscrepancy {
        table: 2,
        row: 1,
        col: 2,
        reason: "pair A row shifted by one column (printed k equals recomputed k+1)",
    },
    KnownDiscrepancy {
        table: 2,
        row: 1,
        col: 3,
        reason: "pair A row shifted by one column (printed k equals recomputed k+1)",
    },
    KnownDiscrepancy {
        table: 2,
        row: 1,
        col: 4,
        reason: "pair A row shifted by one column (printed k equals recomputed k+1)",
    },
    KnownDiscrepancy { table: 2, row: 2, col: 3, reason: "isolated slip: F = 134.54, neighbours reproduce" },
    KnownDiscrepancy { table: 2, row: 7, col: 0, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 1, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 2, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 3, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 4, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 5, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 6, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 7, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 8, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 9, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 10, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 2, row: 7, col: 11, reason: ROW_NEEDS_N0_7 },
    KnownDiscrepancy { table: 3, row: 0, col: 7, reason: N_UPPER_TYPO },
    KnownDiscrepancy { table: 3, row: 1, col: 7, reason: ROW_NEEDS_N0_7 },
];

pub fn known_discrepancy(table: u8, row: usize, col: usize) -> Option<&'static KnownDiscrepancy> {
    KNOWN_DISCREPANCIES.iter().find(|d| d.table == table && d.row == row && d.col == col)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Match,
    /// Reproduced, and marked as not actually computed by the stopping loop.
    Flagged,
    Mismatch {
        reference: String,
        recorded: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub text: String,
    pub status: CellStatus,
    /// Only scored cells count towards reproduction.
    pub scored: bool,
}

impl Cell {
    fn plain(text: impl Into<String>) -> Self {
        Self { text: text.into(), status: CellStatus::Match, scored: false }
    }

    fn compared(text: String, reference: String, equal: bool, recorded: bool) -> Self {
        let status = if equal { CellStatus::Match } else { CellStatus::Mismatch { reference, recorded } };
        Self { text, status, scored: true }
    }

    fn rendered(&self) -> String {
        match self.status {
            CellStatus::Match => self.text.clone(),
            CellStatus::Flagged => format!("{}*", self.text),
            CellStatus::Mismatch { .. } => format!("{}!", self.text),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub id: u8,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    /// (row, column, cell) for every scored cell that disagrees with its reference.
    pub fn mismatches(&self) -> Vec<(usize, usize, &Cell)> {
        let mut out = vec![];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if cell.scored && matches!(cell.status, CellStatus::Mismatch { .. }) {
                    out.push((r, c, cell));
                }
            }
        }
        out
    }

    pub fn scored_cells(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.scored).count()
    }

    pub fn render_text(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0usize; cols];
        for (i, h) in self.header.iter().enumerate() {
            width[i] = h.chars().count();
        }
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                width[i] = width[i].max(c.rendered().chars().count());
            }
        }
        let line = |cells: Vec<String>| -> String {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let pad = width[i].saturating_sub(s.chars().count());
                    if i < 2 {
                        format!("{s}{}", " ".repeat(pad))
                    } else {
                        format!("{}{s}", " ".repeat(pad))
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        writeln!(out, "{}", self.title).ok();
        writeln!(out, "{}", line(self.header.clone())).ok();
        for row in &self.rows {
            writeln!(out, "{}", line(row.iter().map(Cell::rendered).collect())).ok();
        }
        if !self.notes.is_empty() {
            writeln!(out).ok();
            writeln!(out, "notes:").ok();
            for n in &self.notes {
                writeln!(out, "- {n}").ok();
            }
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let esc = |s: &str| {
            if s.contains(',') || s.contains('"') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        writeln!(out, "{}", self.header.iter().map(|h| esc(h)).collect::<Vec<_>>().join(",")).ok();
        for row in &self.rows {
            writeln!(out, "{}", row.iter().map(|c| esc(&c.rendered())).collect::<Vec<_>>().join(",")).ok();
        }
        for n in &self.notes {
            writeln!(out, "# {n}").ok();
        }
        out
    }
}

fn trim_number(v: f64) -> String {
    if (v - v.round()).abs() < 0.005 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

fn params_of(i: usize) -> ExampleParams<f64> {
    let (p, mu, _) = COMBOS[i];
    ExampleParams::new(p, mu).expect("table parameters are valid")
}

fn row_label(i: usize) -> (String, String) {
    (format!("{}", COMBOS[i].0), COMBOS[i].2.to_string())
}

fn floor_at(seq: &BoundedSequence<f64>, pair: &UsefulPair<f64>, k: usize) -> Option<usize> {
    formula_f(seq, k, pair).ok().and_then(|r| r.floor_f)
}

// Pairs in tables are evaluated exactly as printed, so verification runs on a long prefix
// and failures are kept as discrepancies rather than aborting the table.
fn verified_or_raw(
    seq: &BoundedSequence<f64>,
    pair: &UsefulPair<f64>,
) -> (BoundedSequence<f64>, UsefulPair<f64>, bool) {
    let mut s = seq.clone();
    match verify_pair(&mut s, pair.h.clone(), pair.beta, 200) {
        Ok(p) => (s, p, true),
        Err(_) => {
            let mut p = pair.clone();
            p.verified = true;
            (seq.clone(), p, false)
        }
    }
}

fn table1() -> Table {
    let mut header: Vec<String> = vec!["p".into(), "mu".into()];
    header.extend((0..7).map(|k| k.to_string()));
    header.push("K^s : nu_opt".into());
    let mut rows = vec![];
    for (i, (vals, ks, opt)) in REFERENCE_T1.iter().enumerate() {
        let cf = closed_forms(params_of(i));
        let (p, mu) = row_label(i);
        let mut row = vec![Cell::plain(p), Cell::plain(mu)];
        for (k, &reference) in vals.iter().enumerate() {
            let v = cf.nu(k);
            let rounded = (v * 100.0).round() / 100.0;
            row.push(Cell::compared(
                format!("{v:.2}"),
                format!("{reference:.2}"),
                (rounded - reference).abs() <= 0.005,
                false,
            ));
        }
        let (ks_c, opt_c) = (cf.k_s(), cf.plateau());
        row.push(Cell::compared(
            format!("{ks_c} : {}", trim_number(opt_c)),
            format!("{ks} : {}", trim_number(*opt)),
            ks_c == *ks && (opt_c - opt).abs() <= 0.005,
            false,
        ));
        rows.push(row);
    }
    Table { id: 1, title: "Table 1: nu_k for the worked example".into(), header, rows, notes: vec![] }
}

// Known-discrepancy columns count data columns only, after `lead` label columns.
fn mismatch_notes(table: &Table, col_names: &[String], row_names: &[String], lead: usize) -> Vec<String> {
    table
        .mismatches()
        .into_iter()
        .map(|(r, c, cell)| {
            let CellStatus::Mismatch { reference, recorded } = &cell.status else { unreachable!() };
            let why = c
                .checked_sub(lead)
                .and_then(|dc| known_discrepancy(table.id, r, dc))
                .map_or("unrecorded", |d| d.reason);
            format!(
                "{} {}: reference {}, recomputed {} ({}{})",
                row_names[r],
                col_names[c],
                reference,
                cell.text,
                if *recorded { "recorded: " } else { "" },
                why
            )
        })
        .collect()
}

fn table2() -> Table {
    let ks_cols = ["0", "1", "2", "3", "4", "K^s"];
    let mut header: Vec<String> = vec!["p".into(), "mu".into(), "n_lower".into(), "n_upper".into(), "n0".into()];
    header.extend(ks_cols.iter().map(|k| format!("A:{k}")));
    header.extend(ks_cols.iter().map(|k| format!("B:{k}")));
    let mut rows = vec![];
    let mut row_names = vec![];
    let mut notes = vec![];
    let mut invalid = vec![];
    for (i, (idx, ra, rb)) in REFERENCE_T2.iter().enumerate() {
        let params = params_of(i);
        let cf = closed_forms(params);
        let (p, mu) = row_label(i);
        row_names.push(format!("p={p} mu={mu}"));
        let [nl, nu_, n0] = *idx;
        let mut row = vec![Cell::plain(p.clone()), Cell::plain(mu.clone())];
        for (printed, actual) in [(nl, cf.n_lower), (nu_, cf.n_upper), (n0, cf.n_zero)] {
            let mut c = Cell::plain(printed.to_string());
            if printed != actual {
                c.status = CellStatus::Mismatch { reference: printed.to_string(), recorded: true };
                c.text = printed.to_string();
            }
            row.push(c);
        }
        if n0 != cf.n_zero {
            notes.push(format!(
                "p={p} mu={mu}: n0 printed {n0}, formula {} (scan {}); floors use the printed value",
                cf.n_zero, cf.n_zero_scan
            ));
        }
        if nu_ != cf.n_upper {
            notes.push(format!("p={p} mu={mu}: n_upper printed {nu_}, closed form {}", cf.n_upper));
        }
        let ks = nu_ - 1;
        let seq = cf.sequence();
        for (pi, (pair, reference)) in [(pair_a(params, n0), ra), (pair_b(params, n0), rb)].into_iter().enumerate() {
            let (s, pair, ok) = verified_or_raw(&seq, &pair);
            if !ok {
                invalid.push(format!("p={p} mu={mu} pair {}", if pi == 0 { "A" } else { "B" }));
            }
            for (j, k) in [0, 1, 2, 3, 4, ks].into_iter().enumerate() {
                let col = pi * 6 + j;
                let got = floor_at(&s, &pair, k).map_or("inf".to_string(), |f| f.to_string());
                let recorded = known_discrepancy(2, i, col).is_some();
                let mut c =
                    Cell::compared(got.clone(), reference[j].to_string(), got == reference[j].to_string(), recorded);
                if ASTERISKED_T2.contains(&(i, col)) && c.status == CellStatus::Match {
                    c.status = CellStatus::Flagged;
                }
                row.push(c);
            }
        }
        rows.push(row);
    }
    let mut table = Table {
        id: 2,
        title: "Table 2: floor F(k, h, beta) for pair A = (p^2 x, (2/3)^(1/n0)) and pair B = (2p^2/3 x, (1/2)^(1/n0))"
            .into(),
        header: header.clone(),
        rows,
        notes: vec![],
    };
    notes.push("column B uses a = 2p^2/3; the reference header reads p^2/3, the defining text reads 2p^2/3, and only 2p^2/3 reproduces the printed floors".into());
    notes.push("cells marked * are reproduced but never evaluated by the adaptive stopping loop".into());
    for name in &invalid {
        notes.push(format!(
            "{name}: with the printed n0 this pair does not dominate nu; floors shown are the raw formula"
        ));
    }
    // Score only the F columns; index columns get their own notes above.
    for row in &mut table.rows {
        for c in row.iter_mut().take(5) {
            c.scored = false;
        }
    }
    let scored_only = Table {
        rows: table
            .rows
            .iter()
            .map(|r| r.iter().map(|c| if c.scored { c.clone() } else { Cell::plain(c.text.clone()) }).collect())
            .collect(),
        ..table.clone()
    };
    notes.extend(mismatch_notes(&scored_only, &header, &row_names, 5));
    table.notes = notes;
    table
}

fn table3() -> Table {
    let mut header: Vec<String> = vec!["row".into(), "".into()];
    header.extend((0..9).map(|i| format!("p={} mu={}", COMBOS[i].0, COMBOS[i].2)));
    let names = ["K^s", "floor F(K^s, a, beta)", "floor F(K^s, h_zeta1, 4/9)", "floor F(K^s, h_zeta2, 4/9)"];
    let mut rows: Vec<Vec<Cell>> = names.iter().map(|n| vec![Cell::plain(*n), Cell::plain("")]).collect();
    for i in 0..9 {
        let params = params_of(i);
        let cf = closed_forms(params);
        let seq = cf.sequence();
        let ks = cf.k_s();
        let n0 = REFERENCE_T2[i].0[2];
        let (s, pb, _) = verified_or_raw(&seq, &pair_b(params, n0));
        let (z1, z2) = cf.zetas();
        let mut vals = vec![Some(ks), floor_at(&s, &pb, ks)];
        for z in [z1, z2] {
            let pair = h_zeta(params, z).expect("zeta in range");
            let (s, pz, _) = verified_or_raw(&seq, &pair);
            vals.push(floor_at(&s, &pz, ks));
        }
        for (r, v) in vals.into_iter().enumerate() {
            let got = v.map_or("inf".to_string(), |f| f.to_string());
            let reference = REFERENCE_T3[r][i].to_string();
            let recorded = known_discrepancy(3, r, i).is_some();
            rows[r].push(Cell::compared(got.clone(), reference.clone(), got == reference, recorded));
        }
    }
    let mut t = Table {
        id: 3,
        title: "Table 3: K^s and floor F at K^s for pair B (printed n0) and the two h_zeta pairs".into(),
        header: header.clone(),
        rows,
        notes: vec![],
    };
    let row_names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    t.notes = mismatch_notes(&t, &header, &row_names, 2);
    t
}

/// Recomputes one of the three reference tables, marking every disagreement.
pub fn reproduce_tables(which: u8) -> Result<Table> {
    match which {
        1 => Ok(table1()),
        2 => Ok(table2()),
        3 => Ok(table3()),
        other => Err(PeaksError::Parameter(format!("no table {other}; choose 1, 2 or 3"))),
    }
}
