//! Example tables run by `--selftest`, grouped by the module behind each subcommand.

use crate::Command;
use gelshoot::asymptotics::{alpha_root, gamma1_b1_limit, laplace_quantities};
use gelshoot::delay::{integrate, series_start, DelayEquation};
use gelshoot::fixedpoint::{eps_of_eta, picard_solve, FixedPointConfig};
use gelshoot::gelsim::{evolve_chain, single_site_exact, Boundary, DyadicChain};
use gelshoot::greens::{c0_moment, compare_routes, q, GreensEval};
use gelshoot::params::{explicit_solution_residual, ExplicitSolution};
use gelshoot::shooting::{classify, ClassifyTols};
use gelshoot::stability::{b_star, default_r, winding_number};
use gelshoot::{ModelParams, Result};

type Check = (&'static str, fn() -> Result<bool>);

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

const PARAMS: &[Check] = &[
    ("constant profile residual", || {
        let p = ModelParams::new(2.0, 5.0)?;
        Ok(explicit_solution_residual(&p, ExplicitSolution::PhiInf, &[0.1, 1.0, 10.0])? < 1e-12)
    }),
    ("power-law profile residual", || {
        let p = ModelParams::new(3.0, 1.0)?;
        Ok(explicit_solution_residual(&p, ExplicitSolution::Phi0, &[0.1, 1.0, 10.0])? < 1e-12)
    }),
    ("limit equation matches e^-y", || {
        let eq = DelayEquation::LimitH { eps: 0.0 };
        let t = integrate(&eq, series_start(&eq, 40, 1.0).expect("series"), 10.0, 1e-10)?;
        Ok(close(t.eval(10.0)?, (-10.0f64).exp(), 1e-10))
    }),
];

const SHOOTING: &[Check] = &[
    ("b = 2.05 changes sign", || Ok(class(2.05)? == "SignChange")),
    ("b = 2.3 oscillates", || Ok(class(2.3)? == "Oscillating")),
    ("b = 10 converges", || Ok(class(10.0)? == "ConvergesToConstant")),
];

fn class(b: f64) -> Result<&'static str> {
    Ok(classify(&ModelParams::new(2.0, b)?, 1e3, &ClassifyTols::default())?.class.tag())
}

const STABILITY: &[Check] = &[
    ("b*(2) = 2.5374", || Ok(close(b_star(2.0)?, 2.5374, 1e-4))),
    ("one loop at b = 2.3", || {
        let p = ModelParams::new(2.0, 2.3)?;
        let w = winding_number(&p, default_r(&p), 20_000)?;
        Ok(w.upper_loops == 1 && w.winding == 2)
    }),
    ("no loop at b = 3", || {
        let p = ModelParams::new(2.0, 3.0)?;
        Ok(winding_number(&p, default_r(&p), 20_000)?.winding == 0)
    }),
];

const GREENS: &[Check] = &[
    ("Q(1)", || Ok(close(q(1.0), -0.0768006, 1e-6))),
    ("first moment", || Ok(close(c0_moment(), 0.2887881, 1e-6))),
    ("three routes at (3, 1)", || {
        let r = compare_routes(3.0, 1.0, &GreensEval::default(), 1e-12)?;
        Ok(r.rel_diff_quadrature < 1e-4 && r.rel_diff_residues < 1e-4)
    }),
];

const FIXEDPOINT: &[Check] = &[
    ("Picard at (0.01, 0.01)", || {
        let s = picard_solve(0.01, 0.01, &FixedPointConfig::default())?;
        Ok(*s.sup_diff_history.last().unwrap_or(&1.0) < 1e-10)
    }),
    ("eps(eta)/eta near 0.21", || {
        let (e, _) = eps_of_eta(0.005, 1e-13, &FixedPointConfig::default())?;
        Ok(close(e / 0.005, 0.2097, 0.01))
    }),
];

const ASYMPTOTICS: &[Check] = &[
    ("alpha(ln 2) > 2", || Ok(close(alpha_root(std::f64::consts::LN_2)?, 2.2991138, 1e-7))),
    ("b = 1 limit", || Ok(close(gamma1_b1_limit(-1.0)?.limit, 0.4426950, 1e-5))),
    ("t*(1) and D(1)", || {
        let l = laplace_quantities(1.0)?;
        Ok(close(l.t_star, 1.59362, 1e-5) && close(l.d, 0.186241, 1e-5))
    }),
];

const GELSIM: &[Check] = &[
    ("single site", || {
        let ch = DyadicChain::new(1.0, 2.0, vec![1.0], Boundary::Empty)?;
        let out = evolve_chain(&ch, 3.0, 1e-12)?;
        Ok(close(out.f[0], single_site_exact(1.0, 2.0, 1.0, 3.0), 1e-10))
    }),
    ("stationary power law", || {
        let ch = DyadicChain::from_fn(1.0, 2.0, 20, Boundary::Fixed(0.5f64.powf(-2.5)), |x| x.powf(-2.5))?;
        Ok(ch.rhs().iter().enumerate().all(|(k, r)| r.abs() <= 1e-12 * ch.xi(k).powf(3.0) * ch.f[k].powi(2)))
    }),
];

fn table(cmd: Command) -> (&'static str, &'static [Check]) {
    use Command::*;
    match cmd {
        Params | Profile => ("params", PARAMS),
        Classify | ScanB | BracketBbar | Fig3 => ("shooting", SHOOTING),
        BStar | Winding | StabilityScan | Fig2 => ("stability", STABILITY),
        GreensQ | GreensVerify => ("greens", GREENS),
        Fixedpoint | EpsOfEta | Bbar => ("fixedpoint", FIXEDPOINT),
        Gamma1 | PsiAsym | Laplace | Tails => ("asymptotics", ASYMPTOTICS),
        Simulate => ("gelsim", GELSIM),
    }
}

/// Run the table for `cmd`; returns the report and whether everything passed.
pub fn run(cmd: Command) -> (String, bool) {
    let (module, checks) = table(cmd);
    let mut out = String::new();
    let mut ok = true;
    for (name, f) in checks {
        let (tag, note) = match f() {
            Ok(true) => ("PASS", String::new()),
            Ok(false) => ("FAIL", String::new()),
            Err(e) => ("FAIL", format!(" ({e})")),
        };
        ok &= tag == "PASS";
        out.push_str(&format!("selftest {module}: {tag} {name}{note}\n"));
    }
    (out, ok)
}
