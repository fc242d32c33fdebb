//! Steady state of the kinetic equation.
//!
//! The solver is a preconditioned damped fixed-point iteration. Each step
//! freezes `e^{−C}` and the kernel at the current iterate, which turns the
//! right-hand side into an affine banded operator `RHS(ρ+δ) ≈ RHS(ρ) − Pδ`.
//! `P` is strictly diagonally dominant (its diagonal carries `v > 0` on top
//! of the kernel mass), so it is factored by banded LU without pivoting and
//! the update is `ρ ← ρ + η P⁻¹ RHS(ρ)`, with `η` halved whenever the
//! residual grows. The node at `r = 0` is pinned to `λ/(v+μ)`.

use super::kernel::{jump_steps_until, kernel_grid, rhs_with_kernel, KernelGrid, RHS_JUMP_CUT};
use super::{GridProfile, TheoryError, TheoryProfile};
use crate::params::ModelParams;

/// Uniform node grid on `[0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub h: f64,
    pub r_max: f64,
}

impl GridSpec {
    /// Step `ε/20` over twenty decay lengths.
    pub fn for_params(params: &ModelParams) -> Self {
        Self {
            h: params.epsilon() / 20.0,
            r_max: 20.0 * TheoryProfile::new(params).decay_length(),
        }
    }

    pub fn halved(self) -> Self {
        Self {
            h: 0.5 * self.h,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannSolution {
    pub profile: GridProfile,
    /// `max |RHS| / λ` before each iteration and after the last one.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
}

/// Square banded matrix with equal lower and upper bandwidth.
struct Band {
    n: usize,
    w: usize,
    a: Vec<f64>,
}

impl Band {
    fn new(n: usize, w: usize) -> Self {
        Self {
            n,
            w,
            a: vec![0.0; n * (2 * w + 1)],
        }
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * (2 * self.w + 1) + j + self.w - i]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * (2 * self.w + 1) + j + self.w - i]
    }

    /// In-place LU without pivoting.
    fn factor(&mut self) {
        let (n, w) = (self.n, self.w);
        for k in 0..n {
            let pivot = self.get(k, k);
            let end = (k + w + 1).min(n);
            for i in k + 1..end {
                let l = self.get(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                *self.at(i, k) = l;
                for j in k + 1..end {
                    let u = self.get(k, j);
                    *self.at(i, j) -= l * u;
                }
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, b: &mut [f64]) {
        let (n, w) = (self.n, self.w);
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(w)..i {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + w + 1).min(n) {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
    }
}

struct Evaluation {
    rhs: Vec<f64>,
    kernel: KernelGrid,
    residual: f64,
}

fn evaluate(profile: &GridProfile, params: &ModelParams) -> Result<Evaluation, TheoryError> {
    let m_max = jump_steps_until(profile, RHS_JUMP_CUT);
    let kernel = kernel_grid(profile, params, m_max)?;
    let rhs = rhs_with_kernel(profile, params, &kernel);
    let residual = rhs[1..].iter().fold(0.0f64, |m, x| m.max(x.abs())) / params.limit_rate;
    Ok(Evaluation {
        rhs,
        kernel,
        residual,
    })
}

/// Frozen-kernel operator `P` on the unknowns `ρ_1..ρ_n`.
fn preconditioner(profile: &GridProfile, params: &ModelParams, k: &KernelGrid) -> Band {
    let n = profile.n();
    let m_max = k.neg.len() - 1;
    let h = profile.h;
    let weight = |m: usize| if m == m_max { 0.5 } else { 1.0 };
    let mass: f64 = (1..=m_max).map(|m| weight(m) * (k.neg[m] + k.pos[m])).sum::<f64>() * h;
    let mut p = Band::new(n, m_max.min(n.saturating_sub(1)));
    for i in 1..=n {
        let e = (-profile.cumulative[i]).exp();
        *p.at(i - 1, i - 1) = params.cancel_rate + params.market_rate * e + mass;
        for m in 1..=m_max.min(n - 1) {
            if i + m <= n {
                *p.at(i - 1, i + m - 1) = -h * weight(m) * k.neg[m];
            }
            if i > m {
                *p.at(i - 1, i - m - 1) = -h * weight(m) * k.pos[m];
            }
        }
    }
    p.factor();
    p
}

/// Solves for the steady density, starting from the closed-form profile.
///
/// Requires `h ≤ ε/10` and `r_max ≥ 20·√(D/v)`. Converged when
/// `max |RHS| < tol·λ` over the free nodes.
pub fn solve_boltzmann_steady(
    params: &ModelParams,
    grid: GridSpec,
    tol: f64,
    max_iter: usize,
) -> Result<BoltzmannSolution, TheoryError> {
    let theory = TheoryProfile::new(params);
    let eps = params.epsilon();
    if grid.h > eps / 10.0 * (1.0 + 1e-12) {
        return Err(TheoryError::InvalidGrid(format!(
            "grid step {} exceeds epsilon/10 = {}",
            grid.h,
            eps / 10.0
        )));
    }
    if grid.r_max < 20.0 * theory.decay_length() * (1.0 - 1e-12) {
        return Err(TheoryError::InvalidGrid(format!(
            "domain {} shorter than 20 decay lengths = {}",
            grid.r_max,
            20.0 * theory.decay_length()
        )));
    }

    let mut profile = GridProfile::from_fn(grid.h, grid.r_max, theory.rho_inf, |r| theory.density(r));
    profile.values[0] = theory.rho0;
    profile.recompute_cumulative();
    let mut eval = evaluate(&profile, params)?;
    let mut history = vec![eval.residual];
    let mut eta: f64 = 1.0;

    for iter in 0..max_iter {
        if eval.residual < tol {
            return Ok(BoltzmannSolution {
                profile,
                residual_history: history,
                iterations: iter,
            });
        }
        let p = preconditioner(&profile, params, &eval.kernel);
        let mut delta = eval.rhs[1..].to_vec();
        p.solve(&mut delta);

        loop {
            let mut trial = profile.clone();
            for (x, d) in trial.values[1..].iter_mut().zip(&delta) {
                *x = (*x + eta * d).max(0.0);
            }
            trial.recompute_cumulative();
            let next = evaluate(&trial, params)?;
            if next.residual < eval.residual || eta < 1e-6 {
                profile = trial;
                eval = next;
                break;
            }
            eta *= 0.5;
        }
        history.push(eval.residual);
        log::debug!("boltzmann iteration {iter}: residual {:.3e}, eta {eta}", eval.residual);
        eta = (2.0 * eta).min(1.0);
    }
    if eval.residual < tol {
        return Ok(BoltzmannSolution {
            profile,
            residual_history: history,
            iterations: max_iter,
        });
    }
    Err(TheoryError::NoConvergence {
        max_iter,
        residual: eval.residual,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_lu_solves_a_tridiagonal_system() {
        // [4 -1 0; -1 4 -1; 0 -1 4] x = [3, 2, 3] has x = [1, 1, 1]
        let mut b = Band::new(3, 1);
        for i in 0..3 {
            *b.at(i, i) = 4.0;
            if i > 0 {
                *b.at(i, i - 1) = -1.0;
            }
            if i < 2 {
                *b.at(i, i + 1) = -1.0;
            }
        }
        b.factor();
        let mut x = vec![3.0, 2.0, 3.0];
        b.solve(&mut x);
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn band_lu_matches_dense_elimination() {
        let n = 12;
        let w = 3;
        let entry = |i: usize, j: usize| -> f64 {
            if i == j {
                10.0 + i as f64
            } else if i.abs_diff(j) <= w {
                -(((i * 7 + j * 3) % 5) as f64) * 0.3
            } else {
                0.0
            }
        };
        let mut band = Band::new(n, w);
        for i in 0..n {
            for j in i.saturating_sub(w)..(i + w + 1).min(n) {
                *band.at(i, j) = entry(i, j);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| entry(i, j) * x_true[j]).sum())
            .collect();
        band.factor();
        band.solve(&mut b);
        for (x, t) in b.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_preconditions_are_enforced() {
        let p = ModelParams::new(1e4, 1.0, 99.0, 1e-6, 10).unwrap();
        let coarse = GridSpec {
            h: p.epsilon(),
            r_max: 10.0,
        };
        assert!(matches!(
            solve_boltzmann_steady(&p, coarse, 1e-8, 10),
            Err(TheoryError::InvalidGrid(_))
        ));
        let short = GridSpec {
            h: p.epsilon() / 20.0,
            r_max: 0.5,
        };
        assert!(matches!(
            solve_boltzmann_steady(&p, short, 1e-8, 10),
            Err(TheoryError::InvalidGrid(_))
        ));
    }
}
