//! Best-price statistics implied by a density profile.
//!
//! With `E(x) = e^{−C(x)}` the probability that no order lies within `x` of
//! the opposite best, the best quote has density `ρ(x)E(x)`. The spread
//! `∫ xρE dx` and the impact `½∫∫_{y>z} (y−z) ρ(z)ρ(y)E(y) dy dz` reduce by
//! integration by parts (inner integral first) to `∫ E dx` and `½∫ C E dx`.
//! Both are evaluated cell by cell with three-point Gauss–Legendre on the
//! piecewise-quadratic `C`, plus the exact tail beyond the grid.

use super::{GridProfile, TheoryError};

const GL_X: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
const GL_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// `P(x) = ρ(x) e^{−C(x)}` on the nodes.
pub fn best_price_pdf(profile: &GridProfile) -> Vec<f64> {
    profile
        .values
        .iter()
        .zip(&profile.cumulative)
        .map(|(r, c)| r * (-c).exp())
        .collect()
}

/// `∫₀^R P = 1 − e^{−C(R)}`, exact for the interpolated profile.
pub fn best_price_mass(profile: &GridProfile) -> f64 {
    -(-profile.cumulative[profile.n()]).exp_m1()
}

/// `∫₀^∞ f(C(x)) dx` with the cell rule and a tail closure.
fn integrate_of_cumulative(profile: &GridProfile, f: impl Fn(f64) -> f64, tail: f64) -> f64 {
    let h = profile.h;
    let mut s = 0.0;
    for j in 0..profile.n() {
        let (a, b, c0) = (profile.values[j], profile.values[j + 1], profile.cumulative[j]);
        for (x, w) in GL_X.iter().zip(GL_W) {
            let t = x * h;
            s += w * f(c0 + a * t + (b - a) * t * t / (2.0 * h));
        }
    }
    s * h + tail
}

/// Mean spread implied by the profile.
pub fn spread_from_profile(profile: &GridProfile) -> Result<f64, TheoryError> {
    profile.check_domain()?;
    let c_r = profile.cumulative[profile.n()];
    let tail = (-c_r).exp() / profile.tail;
    Ok(integrate_of_cumulative(profile, |c| (-c).exp(), tail))
}

/// Mean instantaneous impact implied by the profile (half the mean first gap).
pub fn impact_from_profile(profile: &GridProfile) -> Result<f64, TheoryError> {
    profile.check_domain()?;
    let c_r = profile.cumulative[profile.n()];
    let rt = profile.tail;
    let tail = (-c_r).exp() * (c_r / rt + 1.0 / (rt * rt));
    Ok(0.5 * integrate_of_cumulative(profile, |c| c * (-c).exp(), tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::theory::TheoryProfile;

    #[test]
    fn constant_profile_is_exponential() {
        let rho0 = 5000.0;
        let eps = 1.0 / rho0;
        let g = GridProfile::constant(rho0, eps / 100.0, 40.0 * eps);
        let pdf = best_price_pdf(&g);
        for (j, &p) in pdf.iter().enumerate() {
            let expected = rho0 * (-rho0 * g.r(j)).exp();
            assert!((p - expected).abs() <= 1e-9 * rho0);
        }
        assert!((best_price_mass(&g) - 1.0).abs() < 1e-6);
        assert!((spread_from_profile(&g).unwrap() - eps).abs() <= 1e-6 * eps);
        assert!((impact_from_profile(&g).unwrap() - eps / 2.0).abs() <= 1e-4 * eps / 2.0);
    }

    #[test]
    fn pdf_is_non_negative_with_mode_inside_the_grid() {
        let p = ModelParams::new(1e4, 1.0, 30.0, 1e-6, 10).unwrap();
        let t = TheoryProfile::new(&p);
        let g = GridProfile::from_fn(p.epsilon() / 50.0, 2.0, t.rho_inf, |r| t.density(r));
        let pdf = best_price_pdf(&g);
        assert!(pdf.iter().all(|&x| x >= 0.0));
        let mode = pdf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(g.r(mode) >= 0.0);
        assert!((best_price_mass(&g) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stationary_profile_spread() {
        // reference: composite Simpson on 2·10⁵ panels of e^{−C(r)} with the
        // closed-form cumulative, computed independently
        for (mu, reference) in [
            (0.01, 0.995_900_886_999_765_4),
            (0.1, 0.962_491_996_445_534_5),
            (1.0, 0.791_792_074_197_928_3),
            (99.0, 0.360_633_862_897_556_94),
        ] {
            let p = ModelParams::new(1e4, 1.0, mu, 1e-6, 10).unwrap();
            let t = TheoryProfile::new(&p);
            let eps = p.epsilon();
            let g = GridProfile::from_fn(eps / 400.0, 60.0 * eps, t.rho_inf, |r| t.density(r));
            let s = spread_from_profile(&g).unwrap() / eps;
            assert!((s / reference - 1.0).abs() < 1e-6, "mu = {mu}: s/eps = {s}");
            if mu <= 0.1 {
                assert!((s - 1.0).abs() < 0.1);
            }
        }
    }
}
