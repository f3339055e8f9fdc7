//! A floating-wind-platform-shaped problem over the eight candidate design
//! variables, with a SYNTHETIC response surface.
//!
//! The response is a fixed low-order polynomial in normalized coordinates.
//! It has no physical fidelity; it exists so the full pipeline (sampling,
//! training, sweeps, planning) has a reproducible, mildly coupled target
//! with the right channel names and constraint limits.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::analytic::{AnalyticChannel, AnalyticProblem};
use crate::dataset::{Dataset, Standardization};
use crate::optimizer::Constraint;
use crate::sampling::latin_hypercube;
use crate::space::{DesignSpace, DesignVariable, Role};

pub const MASS: &str = "m_ptfm";
pub const PITCH: &str = "max_theta_ptfm";
pub const ACCEL: &str = "max_a_nac";

/// Maximum platform pitch, degrees.
pub const PITCH_LIMIT: f64 = 6.9;
/// Maximum nacelle acceleration, m/s^2.
pub const ACCEL_LIMIT: f64 = 0.7;

/// Tag written next to every artifact derived from this response.
pub const RESPONSE_LABEL: &str = "synthetic";

pub fn fowt_space() -> DesignSpace {
    let vars = vec![
        DesignVariable::new("D_main", 6.0, 14.0, 10.0, Role::Plant),
        DesignVariable::new("D_pnt_up", 0.71, 1.11, 0.91, Role::Plant),
        DesignVariable::new("D_pnt_low", 6.6148, 13.6148, 9.6148, Role::Plant),
        DesignVariable::new("D_outer", 10.5, 14.5, 12.5, Role::Plant),
        DesignVariable::new("R_cs", 41.57, 61.57, 51.75, Role::Plant),
        DesignVariable::new("z_keel", -24.0, -16.0, -20.0, Role::Plant),
        DesignVariable::new("z_frbrd", 7.0, 21.0, 15.0, Role::Plant),
        DesignVariable::new("ps_pct", 0.75, 1.0, 0.85, Role::Control),
    ];
    // held constant; nothing depends on them
    let fixed: BTreeMap<String, f64> = (1..=6).map(|i| (format!("ctrl_extra_{i}"), 1.0)).collect();
    DesignSpace::with_fixed(vars, fixed).expect("static table is valid")
}

/// Constraint set: pitch and nacelle acceleration bounded above.
pub fn fowt_constraints() -> Vec<Constraint> {
    vec![Constraint::at_most(PITCH, PITCH_LIMIT), Constraint::at_most(ACCEL, ACCEL_LIMIT)]
}

// u = [a, b, c, d, e, k, f, p] = normalized
// [D_main, D_pnt_up, D_pnt_low, D_outer, R_cs, z_keel, z_frbrd, ps_pct]

fn mass(u: &[f64]) -> f64 {
    let [a, b, c, d, e, k, f, p] = unpack(u);
    1e6 * (4.0 + 2.2 * c + 1.2 * c * c + 1.6 * a + 0.3 * b + 2.0 * d + 1.4 * e + 1.8 * (1.0 - k) + 0.6 * f
        + 0.8 * d * e
        + 0.6 * c * (1.0 - k)
        - 0.9 * p)
}

fn mass_grad(u: &[f64]) -> [f64; 8] {
    let [_, _, c, d, e, k, _, _] = unpack(u);
    let s = 1e6;
    [
        s * 1.6,
        s * 0.3,
        s * (2.2 + 2.4 * c + 0.6 * (1.0 - k)),
        s * (2.0 + 0.8 * e),
        s * (1.4 + 0.8 * d),
        s * (-1.8 - 0.6 * c),
        s * 0.6,
        s * -0.9,
    ]
}

fn pitch(u: &[f64]) -> f64 {
    let [a, _, c, d, e, k, f, p] = unpack(u);
    9.0 - 2.4 * c - 1.6 * d - 1.4 * e - 1.2 * d * e - 1.5 * (1.0 - k) - 0.8 * c * (1.0 - k) + 0.9 * c * c
        - 0.8 * a * c
        + 1.6 * p
        - 0.4 * f
        + 0.5 * f * f
}

fn pitch_grad(u: &[f64]) -> [f64; 8] {
    let [a, _, c, d, e, k, f, _] = unpack(u);
    [
        -0.8 * c,
        0.0,
        -2.4 - 0.8 * (1.0 - k) + 1.8 * c - 0.8 * a,
        -1.6 - 1.2 * e,
        -1.4 - 1.2 * d,
        1.5 + 0.8 * c,
        -0.4 + f,
        1.6,
    ]
}

fn accel(u: &[f64]) -> f64 {
    let [a, b, c, d, e, _, f, p] = unpack(u);
    0.45 + 0.35 * p - 0.15 * p * p + 0.12 * f + 0.08 * (1.0 - c) - 0.06 * b + 0.05 * a * f
        + 0.06 * (1.0 - d) * (1.0 - e)
}

fn accel_grad(u: &[f64]) -> [f64; 8] {
    let [a, _, _, d, e, _, f, p] = unpack(u);
    [
        0.05 * f,
        -0.06,
        -0.08,
        -0.06 * (1.0 - e),
        -0.06 * (1.0 - d),
        0.0,
        0.12 + 0.05 * a,
        0.35 - 0.3 * p,
    ]
}

fn unpack(u: &[f64]) -> [f64; 8] {
    std::array::from_fn(|i| u[i])
}

/// Evaluate `(m_ptfm, max_theta_ptfm, max_a_nac)` at a point in model units.
pub fn fowt_response(space: &DesignSpace, x: &[f64]) -> [f64; 3] {
    let u = to_unit(space, x);
    [mass(&u), pitch(&u), accel(&u)]
}

fn to_unit(space: &DesignSpace, x: &[f64]) -> Vec<f64> {
    space
        .variables()
        .iter()
        .zip(x)
        .map(|(v, xi)| (xi - v.lower) / v.width())
        .collect()
}

/// `n` LHS samples of the platform design space pushed through the synthetic
/// response. Bit-identical for a fixed seed.
pub fn synthetic_fowt(seed: u64, n: usize) -> crate::Result<(DesignSpace, Dataset)> {
    let space = fowt_space();
    let inputs = latin_hypercube(&space, n, seed)?;
    let outputs = inputs
        .inputs
        .iter()
        .map(|x| fowt_response(&space, x).to_vec())
        .collect();
    let ds = Dataset::new(
        inputs.input_names,
        vec![MASS.into(), PITCH.into(), ACCEL.into()],
        inputs.inputs,
        outputs,
    )?;
    Ok((space, ds))
}

type UnitFn = fn(&[f64]) -> f64;
type UnitGrad = fn(&[f64]) -> [f64; 8];

fn channel(space: &DesignSpace, f: UnitFn, g: UnitGrad, s: Standardization) -> AnalyticChannel {
    let (s1, s2) = (space.clone(), space.clone());
    AnalyticChannel::new(
        space.clone(),
        Arc::new(move |x: &[f64]| f(&to_unit(&s1, x))),
        Arc::new(move |x: &[f64]| {
            let gu = g(&to_unit(&s2, x));
            gu.iter().zip(s2.variables()).map(|(gi, v)| gi / v.width()).collect()
        }),
        s,
    )
}

/// The synthetic response as closed-form channels, skipping the surrogate.
pub fn fowt_analytic() -> AnalyticProblem {
    let space = fowt_space();
    let scale = |mean, std| Standardization { mean, std };
    let objective = channel(&space, mass, mass_grad, scale(8.5e6, 1.5e6));
    let constraints = vec![
        (Constraint::at_most(PITCH, PITCH_LIMIT), channel(&space, pitch, pitch_grad, scale(6.5, 1.5))),
        (Constraint::at_most(ACCEL, ACCEL_LIMIT), channel(&space, accel, accel_grad, scale(0.65, 0.08))),
    ];
    AnalyticProblem {
        name: format!("fowt ({RESPONSE_LABEL})"),
        space,
        objective_name: MASS.to_string(),
        objective,
        constraints,
        optimum: None,
        optimal_value: None,
    }
}
