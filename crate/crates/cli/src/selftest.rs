//! Invariant suites run by `ptscatter selftest`.
//!
//! Each check reports the worst deviation it saw and the tolerance it was held
//! to. The table contains no timings, so repeated runs print the same bytes.

use ptscatter::barrier::{dispersion_params, transmission_probability};
use ptscatter::numeric::linspace;
use ptscatter::physical::solve_geometry_for_singularity;
use ptscatter::singularity::{find_singularities, SearchBox, SearchOptions};
use ptscatter::timing::{delay_time, opaque_asymptotic};
use ptscatter::tmatrix::{pt_barrier_stack, solve_stack, transfer_amplitudes};
use ptscatter::{BarrierPoint, DerivativeMode, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn point(xi: f64, ka: f64) -> Result<BarrierPoint> {
    BarrierPoint::new(xi, ka)
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN counts as a failure
    values
        .into_iter()
        .fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

fn oracle(perturb: f64) -> Result<f64> {
    let mut devs = Vec::new();
    for xi in linspace(0.1, 3.0, 15) {
        let stack = pt_barrier_stack(xi)?;
        for ka in linspace(0.05, 10.0, 15) {
            let closed = transmission_probability(point(xi, ka)?)? * (1.0 + perturb);
            let lu = solve_stack(ka, &stack)?.amplitudes.transmittance();
            let product = transfer_amplitudes(ka, &stack)?.transmittance();
            devs.push((lu / closed - 1.0).abs());
            devs.push((product / closed - 1.0).abs());
        }
    }
    Ok(worst(devs))
}

fn identities() -> Result<f64> {
    let mut devs = Vec::new();
    for xi in linspace(0.0, 10.0, 201) {
        let d = dispersion_params(xi)?;
        devs.push((d.gamma * d.gamma - d.delta * d.delta - 1.0).abs());
    }
    Ok(worst(devs))
}

fn trivial_limits() -> Result<f64> {
    let mut devs = Vec::new();
    for v in linspace(0.0, 10.0, 21) {
        devs.push((transmission_probability(point(v, 0.0)?)? - 1.0).abs());
        devs.push((transmission_probability(point(0.0, v)?)? - 1.0).abs());
    }
    Ok(worst(devs))
}

fn unitarity() -> Result<f64> {
    let mut devs = Vec::new();
    for xi in linspace(0.1, 3.0, 12) {
        let stack = pt_barrier_stack(xi)?;
        for ka in linspace(0.05, 10.0, 12) {
            let a = transfer_amplitudes(ka, &stack)?;
            let scale = a.transmittance().max(1.0);
            devs.push(a.generalized_unitarity_residual().abs() / scale);
            devs.push((a.t_left - a.t_right).norm() / a.t_left.norm().max(1.0));
        }
    }
    Ok(worst(devs))
}

fn first_singularity() -> Result<f64> {
    let bx = SearchBox::new((1.5, 2.5), (0.5, 1.5))?;
    let roots = find_singularities(&bx, &SearchOptions::default())?;
    Ok(match roots.as_slice() {
        [r] => r.residual_norm,
        _ => f64::INFINITY,
    })
}

fn opaque_limit() -> Result<f64> {
    let mut devs = Vec::new();
    for xi in [0.3, 0.5, 1.0, 2.0] {
        let p = point(xi, 40.0)?;
        let exact = delay_time(p, DerivativeMode::FixedV)?.time_ratio;
        devs.push((exact / opaque_asymptotic(p)? - 1.0).abs());
    }
    Ok(worst(devs))
}

fn geometry() -> Result<f64> {
    let s = solve_geometry_for_singularity(5.0, 0.2, 1.25, 1004.0)?;
    Ok((s.half_height_b - 62.0).abs())
}

/// Name, tolerance and evaluator taking the fault perturbation.
type Suite = (&'static str, f64, fn(f64) -> Result<f64>);

/// Runs every check. `perturb` scales the closed-form probability in the
/// oracle check by `1 + perturb` to prove that the suite can fail.
pub fn run(perturb: f64) -> Vec<Check> {
    let suites: [Suite; 7] = [
        ("oracle: closed form vs layer solver (rel)", 1e-9, oracle),
        ("identity: gamma^2 - delta^2 = 1", 1e-12, |_| identities()),
        ("limit: |T|^2 = 1 at ka = 0 and xi = 0", 1e-12, |_| trivial_limits()),
        ("identity: reciprocity and generalized unitarity", 1e-9, |_| unitarity()),
        ("singularity: one root near (2, 1), residual", 1e-10, |_| {
            first_singularity()
        }),
        ("limit: opaque expansion at ka = 40 (rel)", 0.02, |_| opaque_limit()),
        ("physical: |b - 62 nm| for the reference guide", 5.0, |_| geometry()),
    ];
    suites
        .iter()
        .map(|&(name, tolerance, f)| Check {
            name,
            deviation: f(perturb).unwrap_or(f64::INFINITY),
            tolerance,
        })
        .collect()
}

pub fn table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = format!(
        "{:<width$}  {:>10}  {:>10}  result\n",
        "check", "deviation", "tolerance"
    );
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {:>10.3e}  {:>10.3e}  {}\n",
            c.name,
            c.deviation,
            c.tolerance,
            if c.passed() { "PASS" } else { "FAIL" }
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    out.push_str(&format!("{} passed, {} failed\n", checks.len() - failed, failed));
    out
}
