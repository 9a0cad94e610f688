//! The subcommands. Each returns the report text or a `CliError`.

use peaks_core::gallery::{closed_forms, reproduce_tables, ExampleParams};
use peaks_core::{
    formula_f, hahn_majorant_pair, klgen_from_pair, nu_oracle, pair_from_klgen, pair_from_lyapunov, prefix_argmax,
    solve_peaks, verify_certificate, verify_klgen_bound, verify_opt_lyapunov, verify_pair, yoshizawa_construct,
    DirectOutcome, Pair, PeaksSolution, Sequence,
};

use crate::error::CliError;
use crate::exprfn::{Compiler, ErrorSink, Params};
use crate::problem::Problem;
use crate::report::{indices, Report};

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub grid: usize,
    pub refine: usize,
    pub horizon: usize,
    /// Relative tolerance for closed-form cross-checks.
    pub tolerance: f64,
    pub samples: usize,
}

impl Settings {
    pub const DEFAULT: Settings = Settings { grid: 1000, refine: 4, horizon: 100, tolerance: 1e-6, samples: 400 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    KLGen,
    Lyapunov,
    Classical,
}

impl Route {
    pub fn parse(s: &str) -> Result<Route, CliError> {
        match s {
            "direct" => Ok(Route::Direct),
            "klgen" => Ok(Route::KLGen),
            "lyapunov" => Ok(Route::Lyapunov),
            "classical" => Ok(Route::Classical),
            other => Err(CliError::Input(format!("unknown route '{other}' (direct, klgen, lyapunov, classical)"))),
        }
    }
}

fn header(r: &mut Report, pb: &Problem, st: &Settings) {
    r.kv("system", &pb.system.label);
    r.kv("dimension", pb.system.dim);
    r.line(format!("grid = {}, refine = {}, horizon = {}", st.grid, st.refine, st.horizon));
}

fn sequence(pb: &Problem, st: &Settings) -> Sequence {
    nu_oracle(&pb.system, st.grid, st.refine)
}

fn pair_lines(r: &mut Report, pair: &Pair) {
    r.kv("h", &pair.h.label);
    r.real("h(0)", pair.h.h0());
    r.real("h(1)", pair.h.h1());
    r.kv("beta", format!("{:.6}", pair.beta));
    r.exact("beta", pair.beta);
    r.kv("verified on", format!("0..={}", pair.verified_horizon));
    r.kv("S(u,h)", indices(&pair.s_indices));
    match pair.useful_witness {
        Some(w) => r.kv("useful witness", w),
        None => r.line("useful witness = none"),
    }
}

fn verified_pair(pb: &Problem, st: &Settings, seq: &mut Sequence) -> Result<Pair, CliError> {
    let cand = pb.candidate_pair()?;
    Ok(verify_pair(seq, cand.h, cand.beta, st.horizon)?)
}

fn solution_lines(r: &mut Report, pb: &Problem, st: &Settings, sol: &PeaksSolution<f64>) -> Result<(), CliError> {
    r.title("solution");
    r.kv("k_bound", sol.k_bound);
    r.kv("static problems solved", sol.static_results.len());
    r.real("nu_opt", sol.nu_opt);
    r.kv("k_opt", sol.k_opt);
    r.kv("k_opt_greatest", sol.k_opt_greatest);
    r.kv("argmax", indices(&sol.argmax));
    r.kv("x_opt", format!("[{}]", sol.x_opt.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")));
    r.exact("x_opt", &sol.x_opt);
    let suspect: Vec<usize> = sol.static_results.iter().filter(|s| s.suspect).map(|s| s.k).collect();
    if !suspect.is_empty() {
        r.kv("suspect static solves", indices(&suspect));
    }
    if let Some(cf) = &pb.example {
        r.title("closed-form check");
        let plateau = cf.plateau();
        let gap = (sol.nu_opt - plateau).abs();
        r.real("nu_opt (closed form)", plateau);
        r.kv("K^s (closed form)", cf.k_s());
        r.kv("n_lower", cf.n_lower);
        r.exact("|nu_opt - closed form|", gap);
        if gap > st.tolerance * plateau.abs().max(1.0) {
            return Err(CliError::Verification(format!(
                "nu_opt = {} differs from the closed form {plateau} by more than {} (relative)",
                sol.nu_opt, st.tolerance
            )));
        }
        if sol.k_bound < cf.k_s() {
            return Err(CliError::Verification(format!("k_bound = {} stops before K^s = {}", sol.k_bound, cf.k_s())));
        }
        r.line("closed-form check passed");
    }
    Ok(())
}

pub fn solve(pb: &Problem, route: Route, st: &Settings) -> Result<String, CliError> {
    let mut r = Report::default();
    r.title(&format!("peaks solve, route {}", format!("{route:?}").to_lowercase()));
    header(&mut r, pb, st);
    let mut seq = sequence(pb, st);
    let pair = match route {
        Route::Direct => verified_pair(pb, st, &mut seq)?,
        Route::KLGen => {
            let (bound, m) = pb.klgen_bound()?;
            let rep = verify_klgen_bound(&bound, &pb.system, st.horizon, st.samples)?;
            r.title("KL bound");
            r.kv("gamma", &bound.gamma.label);
            r.real("theta_sup", bound.theta_sup);
            r.exact("worst margin", rep.worst_margin);
            if !rep.passed {
                return Err(CliError::Verification(format!("KL bound fails at {:?}", rep.witness)));
            }
            pair_from_klgen(&bound, &mut seq, m, st.horizon)?
        }
        Route::Lyapunov => {
            let (v, lambda, cert) = pb.lyapunov()?;
            let cert = cert.ok_or_else(|| CliError::Input("route lyapunov needs lyapunov.alpha".into()))?;
            let cand = verify_opt_lyapunov(v, &pb.system, lambda, st.samples)?;
            let crep = verify_certificate(&cert, &cand.v, &pb.system, &seq, st.horizon, st.samples)?;
            r.title("Lyapunov data");
            r.kv("V", &cand.v.label);
            r.kv("lambda", format!("{:.6}", cand.lambda));
            r.kv("sampled ratio", format!("{:.6}", cand.ratio));
            r.real("V_sup", cand.v_sup);
            r.exact("certificate worst margin", crep.worst_margin);
            if !crep.passed {
                return Err(CliError::Verification(format!("certificate check fails: {crep:?}")));
            }
            match pair_from_lyapunov(&cand, &cert, &mut seq, st.horizon)? {
                DirectOutcome::Pair(p) => p,
                DirectOutcome::ImmediateOptimum { k_s, nu_opt } => {
                    r.title("solution");
                    r.line("N_T(V) = 0: the maximum is attained at k = 0");
                    r.kv("k_opt", k_s);
                    r.real("nu_opt", nu_opt);
                    pb.compiler.sink.check()?;
                    return Ok(r.render());
                }
            }
        }
        Route::Classical => {
            let (v, alpha1, psi) = pb.classical()?;
            hahn_majorant_pair(&pb.system, &v, alpha1, psi, st.samples, &mut seq, st.horizon)?
        }
    };
    r.title("pair");
    pair_lines(&mut r, &pair);
    let sol = solve_peaks(&pb.system, &pair, st.grid, st.refine)?;
    pb.compiler.sink.check()?;
    solution_lines(&mut r, pb, st, &sol)?;
    Ok(r.render())
}

pub fn verify(pb: &Problem, what: &str, st: &Settings) -> Result<String, CliError> {
    let mut r = Report::default();
    r.title(&format!("peaks verify {what}"));
    header(&mut r, pb, st);
    let mut seq = sequence(pb, st);
    match what {
        "pair" => {
            let pair = verified_pair(pb, st, &mut seq)?;
            r.title("pair");
            pair_lines(&mut r, &pair);
            r.kv("u_0 = h(1)", pair.u0_is_max);
            if let Some(w) = pair.useful_witness {
                let rep = formula_f(&seq, w, &pair)?;
                match rep.floor_f {
                    Some(f) => r.kv("floor F at witness", f),
                    None => r.line("floor F at witness = inf"),
                }
            }
            let am = prefix_argmax(&seq, st.horizon)?;
            r.real("prefix max", am.prefix_max);
            r.kv("prefix argmax", indices(&am.prefix_argmax_set));
            r.kv("certified by tail bound", am.certified);
        }
        "klgen" => {
            let (bound, _) = pb.klgen_bound()?;
            let rep = verify_klgen_bound(&bound, &pb.system, st.horizon, st.samples)?;
            r.title("KL bound");
            r.kv("gamma", &bound.gamma.label);
            r.real("theta_sup", bound.theta_sup);
            r.kv("checked (x, k)", rep.checked);
            r.kv("useful", rep.useful);
            r.exact("worst margin", rep.worst_margin);
            if !rep.passed {
                pb.compiler.sink.check()?;
                return Err(CliError::Verification(format!("KL bound fails at {:?}", rep.witness)));
            }
        }
        "lyapunov" => {
            let (v, lambda, cert) = pb.lyapunov()?;
            let cand = verify_opt_lyapunov(v, &pb.system, lambda, st.samples)?;
            r.title("Lyapunov function");
            r.kv("V", &cand.v.label);
            r.kv("lambda", format!("{:.6}", cand.lambda));
            r.kv("sampled ratio", format!("{:.6}", cand.ratio));
            r.real("V_sup", cand.v_sup);
            r.kv("N(T) condition on samples", cand.n_condition);
            if let Some(cert) = cert {
                let crep = verify_certificate(&cert, &cand.v, &pb.system, &seq, st.horizon, st.samples)?;
                r.title("certificate");
                r.kv("alpha", &cert.label);
                r.kv("monotone", crep.monotone);
                r.kv("positive at", crep.positive_at.map_or("none".into(), |k| k.to_string()));
                r.exact("worst margin", crep.worst_margin);
                if !crep.passed {
                    pb.compiler.sink.check()?;
                    return Err(CliError::Verification(format!("certificate check fails at {:?}", crep.witness)));
                }
            }
        }
        other => return Err(CliError::Input(format!("unknown verify target '{other}'"))),
    }
    pb.compiler.sink.check()?;
    r.line("");
    r.line("verification passed");
    Ok(r.render())
}

pub fn convert(pb: &Problem, what: &str, st: &Settings) -> Result<String, CliError> {
    let mut r = Report::default();
    r.title(&format!("peaks convert {what}"));
    header(&mut r, pb, st);
    let mut seq = sequence(pb, st);
    match what {
        "pair-to-klgen" => {
            let pair = verified_pair(pb, st, &mut seq)?;
            let bound = klgen_from_pair(&pair, &pb.system, st.horizon)?;
            let rep = verify_klgen_bound(&bound, &pb.system, st.horizon, st.samples)?;
            r.title("KL bound");
            r.kv("gamma", &bound.gamma.label);
            r.real("theta_sup", bound.theta_sup);
            r.kv("uncertified samples", bound.uncertified_samples);
            r.kv("bound check passed", rep.passed);
            r.exact("worst margin", rep.worst_margin);
            if !rep.passed {
                return Err(CliError::Verification(format!("derived KL bound fails at {:?}", rep.witness)));
            }
        }
        "klgen-to-pair" => {
            let (bound, m) = pb.klgen_bound()?;
            let pair = pair_from_klgen(&bound, &mut seq, m, st.horizon)?;
            r.title("pair");
            pair_lines(&mut r, &pair);
        }
        "pair-to-lyapunov" => {
            let pair = verified_pair(pb, st, &mut seq)?;
            let y = yoshizawa_construct(&pair, &pb.system, 4 * st.horizon)?;
            let crep = verify_certificate(&y.h_hat, &y.v, &pb.system, &seq, st.horizon, st.samples)?;
            let mut worst = 0.0_f64;
            for x in pb.system.initial_set.samples(st.samples) {
                let (Some(vx), Some(vt)) = (y.v.eval(&x).finite(), y.v.eval(&pb.system.map(&x)).finite()) else {
                    continue;
                };
                worst = worst.max(vt - pair.beta * vx);
            }
            // limsup ν ≤ h(0) holds for any dominating pair, so α̂(limsup ν) ≤ ĥ(h(0)); that value
            // is checked directly instead of through τ(horizon), which is far above h(0).
            let at_h0 = y.h_hat.alpha(pair.h.h0());
            let cert_ok = crep.witness.is_none() && crep.monotone && crep.positive_at.is_some() && at_h0 <= 1e-12;
            r.title("Lyapunov function");
            r.kv("V", &y.v.label);
            r.kv("certificate", &y.h_hat.label);
            r.kv("certificate check passed", cert_ok);
            r.kv("truncated suprema", y.truncations());
            r.exact("certificate worst margin", crep.worst_margin);
            r.exact("h_hat(h(0))", at_h0);
            r.exact("max of V(Tx) - beta V(x) on samples", worst);
            if !cert_ok || worst > 1e-9 {
                return Err(CliError::Verification(format!(
                    "constructed Lyapunov function fails its checks (certificate {crep:?}, decrement excess {worst})"
                )));
            }
        }
        "lyapunov-to-pair" => {
            let (v, lambda, cert) = pb.lyapunov()?;
            let cert = cert.ok_or_else(|| CliError::Input("lyapunov-to-pair needs lyapunov.alpha".into()))?;
            let cand = verify_opt_lyapunov(v, &pb.system, lambda, st.samples)?;
            r.title("pair");
            match pair_from_lyapunov(&cand, &cert, &mut seq, st.horizon)? {
                DirectOutcome::Pair(p) => pair_lines(&mut r, &p),
                DirectOutcome::ImmediateOptimum { k_s, nu_opt } => {
                    r.line(format!("N_T(V) = 0, so the optimum sits at k = {k_s}"));
                    r.real("nu_opt", nu_opt);
                }
            }
        }
        other => return Err(CliError::Input(format!("unknown conversion '{other}'"))),
    }
    pb.compiler.sink.check()?;
    Ok(r.render())
}

pub fn tables(which: u8, csv: bool) -> Result<String, CliError> {
    if !(1..=3).contains(&which) {
        return Err(CliError::Input(format!("table {which} does not exist (1, 2 or 3)")));
    }
    let t = reproduce_tables(which)?;
    Ok(if csv { t.render_csv() } else { t.render_text() })
}

/// A ready-to-run problem file for the worked example.
pub fn example(p_text: &str, mu_text: &str) -> Result<String, CliError> {
    let c = Compiler { params: Params::default(), sink: ErrorSink::default() };
    let p = c.constant("--p", p_text)?;
    let mu = c.constant("--mu", mu_text)?;
    let cf = closed_forms(ExampleParams::new(p, mu)?);
    let z = cf.zetas().0.min(cf.epsilon());
    let quote = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
    let mut out = String::new();
    out.push_str("# Worked example: T(x) = (x1 + x2, x1/4 + x2), phi(x) = x2^2 - x1^2 + p x1,\n");
    out.push_str("# started on the box [2mu, 1] x [mu, 1] intersected with span{(2, 1)}.\n");
    out.push_str(&format!(
        "# closed forms: n_lower = {}, n_upper = {}, n0 = {}, K^s = {}\n",
        cf.n_lower,
        cf.n_upper,
        cf.n_zero,
        cf.k_s()
    ));
    out.push_str(&format!(
        "# nu_opt = p^2/3 = {:?}, margin = {:?}, eps = {:?}\n\n",
        cf.plateau(),
        cf.margin(),
        cf.epsilon()
    ));
    if !(z > 1e-10 * cf.plateau().abs().max(1.0)) {
        out.push_str("# note: min(zeta, eps) is below the comparison tolerance, so the lyapunov route\n");
        out.push_str("# cannot separate the plateau from h(0) and will report the pair as not useful.\n\n");
    }
    out.push_str("[params]\n");
    out.push_str(&format!("p = \"{}\"\nmu = \"{}\"\nn0 = {}\n", quote(p_text), quote(mu_text), cf.n_zero));
    out.push_str(&format!("# min(zeta, eps) with zeta = margin/2\nz = {z:?}\n\n"));
    out.push_str("[system]\nkind = \"example\"\n\n");
    out.push_str("[pair]\nkind = \"example_b\"\n# beta = (1/2)^(1/n0), n0 from the closed form\n\n");
    out.push_str("[klgen]\ngamma = \"min(s, p^2*(2/3)^(t/n0))\"\ntheta = \"p^2/3\"\ntheta_sup = \"p^2/3\"\nm = 0\n\n");
    out.push_str("[lyapunov]\n");
    out.push_str("v = \"piecewise(abs(x1 - 2*x2) <= 1e-12*max(1, abs(x1)) && x2 != 0: 2*mu^2/(x1*x2), else: 0)\"\n");
    out.push_str("witness = [\"2*mu\", \"mu\"]\nlambda = \"5/9\"\n");
    out.push_str(
        "alpha = \"s - p^2/3 + z\"\nalpha_inverse = \"y + p^2/3 - z\"\ninterval = [\"p^2/3 - z\", \"p^2/3 - z + 1\"]\n",
    );
    Ok(out)
}
