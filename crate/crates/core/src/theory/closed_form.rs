use crate::params::ModelParams;

/// Closed-form stationary density of the diffusive approximation,
/// `ρ(r) = (ρ₀ − ρ∞)·e^{−κr} + ρ∞` with `ρ₀ = λ/(v+μ)`, `ρ∞ = λ/v`,
/// `κ = √(v/D)` and `D = 2(v+μ)³/λ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryProfile {
    pub params: ModelParams,
    pub rho0: f64,
    pub rho_inf: f64,
    pub decay_rate: f64,
    pub d_theory: f64,
}

impl TheoryProfile {
    pub fn new(params: &ModelParams) -> Self {
        let (lambda, v) = (params.limit_rate, params.cancel_rate);
        let d_theory = diffusion_constant(params);
        Self {
            params: *params,
            rho0: lambda / params.removal_rate(),
            rho_inf: lambda / v,
            decay_rate: (v / d_theory).sqrt(),
            d_theory,
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        (self.rho0 - self.rho_inf) * (-self.decay_rate * r).exp() + self.rho_inf
    }

    /// Absorbing-boundary form `ρ∞·(1 − e^{−κr})`.
    pub fn image_density(&self, r: f64) -> f64 {
        -self.rho_inf * (-self.decay_rate * r).exp_m1()
    }

    /// `∫₀^r ρ`.
    pub fn cumulative(&self, r: f64) -> f64 {
        self.rho_inf * r - (self.rho0 - self.rho_inf) * (-self.decay_rate * r).exp_m1() / self.decay_rate
    }

    /// Decay length `1/κ = √(D/v)`.
    pub fn decay_length(&self) -> f64 {
        1.0 / self.decay_rate
    }
}

pub fn stationary_profile(params: &ModelParams, r: f64) -> f64 {
    TheoryProfile::new(params).density(r)
}

pub fn image_profile(params: &ModelParams, r: f64) -> f64 {
    TheoryProfile::new(params).image_density(r)
}

fn diffusion_constant(params: &ModelParams) -> f64 {
    let s = params.removal_rate();
    2.0 * s * s * s / (params.limit_rate * params.limit_rate)
}

/// Mean-field spread, instantaneous impact and diffusion constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryMetrics {
    pub spread: f64,
    pub impact: f64,
    pub diffusion: f64,
}

pub fn theory_metrics(params: &ModelParams) -> TheoryMetrics {
    let eps = params.epsilon();
    TheoryMetrics {
        spread: eps,
        impact: 0.5 * eps,
        diffusion: diffusion_constant(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, v: f64, mu: f64) -> ModelParams {
        ModelParams::new(lambda, v, mu, 1e-6, 1000).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn boundary_values() {
        let params = p(1e4, 1.0, 99.0);
        assert!(rel(stationary_profile(&params, 0.0), 100.0) < 1e-15);
        assert!(rel(stationary_profile(&params, 50.0), 1e4) < 1e-15);
        assert_eq!(image_profile(&params, 0.0), 0.0);
        assert!(rel(image_profile(&params, 50.0), 1e4) < 1e-15);
    }

    #[test]
    fn worked_example() {
        let t = TheoryProfile::new(&p(1e4, 1.0, 99.0));
        assert!(rel(t.d_theory, 0.02) < 1e-15);
        assert!(rel(t.decay_rate, 50f64.sqrt()) < 1e-15);
        // 1e4 - 9900 exp(-sqrt(50)/10)
        let expected = 1e4 - 9900.0 * (-(0.5f64).sqrt()).exp();
        assert!(rel(t.density(0.1), expected) < 1e-14);
        assert!((t.density(0.1) - 5118.62).abs() < 0.01);
    }

    #[test]
    fn decay_rate_squared_times_d_is_v() {
        for (l, v, mu) in [(1e4, 1.0, 1.0), (1e3, 0.5, 30.0), (7.0, 2.0, 0.0)] {
            let t = TheoryProfile::new(&p(l, v, mu));
            assert!(rel(t.decay_rate * t.decay_rate * t.d_theory, v) < 1e-14);
        }
    }

    #[test]
    fn flat_without_market_orders() {
        let t = TheoryProfile::new(&p(1e4, 1.0, 0.0));
        for r in [0.0, 1e-3, 0.1, 10.0] {
            assert_eq!(t.density(r), 1e4);
        }
    }

    #[test]
    fn monotone_and_log_linear_approach() {
        let t = TheoryProfile::new(&p(1e4, 1.0, 9.0));
        let h = 1e-4;
        let mut prev = t.density(0.0);
        for k in 1..2000 {
            let r = k as f64 * 0.001;
            let x = t.density(r);
            assert!(x >= prev);
            prev = x;
        }
        // beyond a few decay lengths ρ∞ − ρ is lost to rounding
        for r in [0.001, 0.01, 0.05] {
            let g = |r: f64| (t.rho_inf - t.density(r)).ln();
            let slope = -(g(r + h) - g(r - h)) / (2.0 * h);
            assert!(rel(slope, t.decay_rate) < 1e-8, "r = {r}");
        }
    }

    #[test]
    fn diffusive_ode_residual_vanishes() {
        // λ − vρ + Dρ'' = 0 with the fourth-order five-point stencil at step
        // ε/100; the three-point stencil's own truncation error is ~1e-3·λ here
        let params = p(1e4, 1.0, 9.0);
        let t = TheoryProfile::new(&params);
        let h = params.epsilon() / 100.0;
        for k in 1..400 {
            let r = k as f64 * 10.0 * h;
            let f = |k: f64| t.density(r + k * h);
            let d2 = (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h * h);
            let res = params.limit_rate - params.cancel_rate * t.density(r) + t.d_theory * d2;
            assert!(res.abs() < 1e-8 * params.limit_rate, "r = {r}: {res}");
        }
    }

    #[test]
    fn image_profile_is_close_for_large_mu() {
        let params = p(1e4, 1.0, 1e3);
        let t = TheoryProfile::new(&params);
        let mut worst: f64 = 0.0;
        for k in 0..10_000 {
            let r = k as f64 * 1e-3;
            worst = worst.max((t.density(r) - t.image_density(r)).abs() / t.rho_inf);
        }
        assert!(worst <= 2.0 * params.cancel_rate / params.market_rate);
    }

    #[test]
    fn cumulative_matches_numerical_integral() {
        let t = TheoryProfile::new(&p(1e4, 1.0, 99.0));
        let n = 100_000;
        let r = 0.3;
        let h = r / n as f64;
        let mut s = 0.5 * (t.density(0.0) + t.density(r));
        for k in 1..n {
            s += t.density(k as f64 * h);
        }
        assert!(rel(s * h, t.cumulative(r)) < 1e-9);
    }

    #[test]
    fn metrics_examples() {
        let m = theory_metrics(&p(1e4, 1.0, 1.0));
        assert!(rel(m.spread, 2e-4) < 1e-15);
        assert!(rel(m.impact, 1e-4) < 1e-15);
        assert!(rel(m.diffusion, 1.6e-7) < 1e-14);
        let small = theory_metrics(&p(1e3, 2.0, 0.0));
        assert!(rel(small.spread, 2.0 / 1e3) < 1e-15);
        assert!(rel(small.impact, 1.0 / 1e3) < 1e-15);
        assert!(rel(small.diffusion, 2.0 * 8.0 / 1e6) < 1e-15);
    }

    #[test]
    fn scaling_collapse_in_natural_units() {
        // price in ε, time in 1/(v+μ): metrics depend only on μ/v
        let units = |params: &ModelParams| {
            let m = theory_metrics(params);
            let eps = params.epsilon();
            let tau = 1.0 / params.removal_rate();
            (m.spread / eps, m.impact / eps, m.diffusion * tau / (eps * eps))
        };
        let a = units(&p(1e3, 1.0, 10.0));
        let b = units(&p(7.5e5, 1.0, 10.0));
        assert!(rel(a.0, b.0) < 1e-14 && rel(a.1, b.1) < 1e-14 && rel(a.2, b.2) < 1e-13);
    }
}
