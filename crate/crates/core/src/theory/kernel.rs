//! Jump kernel of the relative-frame density, its Kramers–Moyal moments and
//! the right-hand side of the kinetic equation.
//!
//! Quadrature rules, for a profile that is linear between nodes:
//!
//! * `W̃(y<0) = λ ∫₀^∞ ρ(z−y) e^{−C(z−y)} dz = λ e^{−C(|y|)}` is evaluated
//!   through this exact antiderivative.
//! * `W̃(y>0) = (μ+v) ∫₀^∞ ρ(z) ρ(z+y) e^{−C(z+y)} dz` uses the cell rule
//!   `Σ_j ρ̄_j [e^{−C(z_j+y)} − e^{−C(z_{j+1}+y)}]` with `ρ̄_j` the cell mean
//!   of `ρ(z)`, which integrates the second factor exactly.
//! * Integrals over `y` use the trapezoid rule on nodes aligned with the
//!   profile grid.

use super::{GridProfile, TheoryError};
use crate::params::ModelParams;

/// Survival below which kernel contributions are dropped.
const NEGLIGIBLE: f64 = 1e-18;

/// Kernel on the aligned jump grid `y = ±m·h`, `m = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub h: f64,
    /// `neg[m] = W̃(−m·h)`.
    pub neg: Vec<f64>,
    /// `pos[m] = W̃(m·h)`.
    pub pos: Vec<f64>,
}

/// Survival values on nodes, far enough out that they fall below
/// [`NEGLIGIBLE`] or cover `min_len` nodes, whichever is longer.
fn survival_to_negligible(profile: &GridProfile, min_len: usize) -> Vec<f64> {
    let mut e = profile.survival_nodes(min_len.max(2));
    let mut j = e.len();
    while *e.last().unwrap() >= NEGLIGIBLE {
        e.push((-profile.node_cumulative(j)).exp());
        j += 1;
    }
    e
}

/// Evaluates the kernel for `m = 0..=m_max`.
pub fn kernel_grid(
    profile: &GridProfile,
    params: &ModelParams,
    m_max: usize,
) -> Result<KernelGrid, TheoryError> {
    profile.check_domain()?;
    let e = survival_to_negligible(profile, m_max + 2);
    let removal = params.removal_rate();
    let cell_mean: Vec<f64> = (0..e.len())
        .map(|j| 0.5 * (profile.node(j) + profile.node(j + 1)))
        .collect();
    let neg = (0..=m_max).map(|m| params.limit_rate * e[m]).collect();
    let pos = (0..=m_max)
        .map(|m| {
            let mut s = 0.0;
            for j in 0..e.len() - m - 1 {
                if e[j + m] < NEGLIGIBLE {
                    break;
                }
                s += cell_mean[j] * (e[j + m] - e[j + m + 1]);
            }
            removal * s
        })
        .collect();
    Ok(KernelGrid {
        h: profile.h,
        neg,
        pos,
    })
}

/// `W̃(y)` at an arbitrary jump `y ≠ 0`.
pub fn jump_kernel(profile: &GridProfile, params: &ModelParams, y: f64) -> Result<f64, TheoryError> {
    profile.check_domain()?;
    if y < 0.0 {
        return Ok(params.limit_rate * profile.survival(-y));
    }
    let h = profile.h;
    let mut s = 0.0;
    let mut upper = profile.survival(y);
    let mut j = 0usize;
    while upper >= NEGLIGIBLE {
        let lower = profile.survival(profile.r(j + 1) + y);
        s += 0.5 * (profile.node(j) + profile.node(j + 1)) * (upper - lower);
        upper = lower;
        j += 1;
        debug_assert!(j as f64 * h < 1e300);
    }
    Ok(params.removal_rate() * s)
}

/// Default jump range `Y = 20ε`, rounded up to whole grid steps.
pub fn default_jump_steps(profile: &GridProfile, params: &ModelParams) -> usize {
    (20.0 * params.epsilon() / profile.h).ceil() as usize
}

/// Kramers–Moyal coefficient: `A = ∫ y W̃` for order 1, `D = ½ ∫ y² W̃` for
/// order 2, over `|y| ≤ 20ε`.
pub fn km_coefficient(profile: &GridProfile, params: &ModelParams, order: u32) -> Result<f64, TheoryError> {
    km_coefficient_over(profile, params, order, default_jump_steps(profile, params))
}

/// As [`km_coefficient`] over `|y| ≤ m_max·h`.
pub fn km_coefficient_over(
    profile: &GridProfile,
    params: &ModelParams,
    order: u32,
    m_max: usize,
) -> Result<f64, TheoryError> {
    let prefactor = match order {
        1 => 1.0,
        2 => 0.5,
        _ => return Err(TheoryError::InvalidArgument("Kramers-Moyal order must be 1 or 2")),
    };
    let k = kernel_grid(profile, params, m_max)?;
    let h = k.h;
    let mut s = 0.0;
    for m in 1..=m_max {
        let w = if m == m_max { 0.5 } else { 1.0 };
        let y = m as f64 * h;
        let (yn, ny) = (y.powi(order as i32), (-y).powi(order as i32));
        s += w * (yn * k.pos[m] + ny * k.neg[m]);
    }
    Ok(prefactor * s * h)
}

/// Jump steps needed before the survival falls below `cut`.
pub(crate) fn jump_steps_until(profile: &GridProfile, cut: f64) -> usize {
    let mut m = 1;
    while (-profile.node_cumulative(m)).exp() >= cut {
        m += 1;
    }
    m
}

/// Survival cut that sets the jump range of the kinetic right-hand side.
pub(crate) const RHS_JUMP_CUT: f64 = 1e-15;

/// `∂ρ/∂t` of the kinetic equation at every node:
/// `λ − ρ(v + μ e^{−C}) + ∫ W̃(y) [ρ(r−y) − ρ(r)] dy`, with no ask mass at
/// negative relative prices and the tail density beyond the grid.
pub fn boltzmann_rhs(profile: &GridProfile, params: &ModelParams) -> Result<Vec<f64>, TheoryError> {
    let m_max = jump_steps_until(profile, RHS_JUMP_CUT);
    let k = kernel_grid(profile, params, m_max)?;
    Ok(rhs_with_kernel(profile, params, &k))
}

pub(crate) fn rhs_with_kernel(profile: &GridProfile, params: &ModelParams, k: &KernelGrid) -> Vec<f64> {
    let m_max = k.neg.len() - 1;
    let h = profile.h;
    let rho = |j: isize| -> f64 {
        if j < 0 {
            0.0
        } else {
            profile.node(j as usize)
        }
    };
    (0..=profile.n())
        .map(|i| {
            let ri = profile.values[i];
            let e = (-profile.cumulative[i]).exp();
            let mut jump = 0.0;
            for m in 1..=m_max {
                let w = if m == m_max { 0.5 } else { 1.0 };
                let ii = i as isize;
                let mi = m as isize;
                // ρ(r−y) drops to zero past y = r, so that node closes the
                // trapezoid on [0, r] with half weight
                let w_in = if m == i { 0.5 * w } else { w };
                jump += w * k.neg[m] * (rho(ii + mi) - ri) + k.pos[m] * (w_in * rho(ii - mi) - w * ri);
            }
            params.limit_rate - ri * (params.cancel_rate + params.market_rate * e) + h * jump
        })
        .collect()
}
