use super::TheoryError;

/// Density sampled on the nodes `r_j = j·h`, `j = 0..=n`, with its running
/// integral `C_j = ∫₀^{r_j} ρ` by the trapezoid rule.
///
/// Between nodes the density is linear, so the running integral is exactly
/// quadratic there and `e^{−C}` has the exact antiderivative
/// `d/dr e^{−C} = −ρ e^{−C}`. Beyond `R = n·h` the density is the constant
/// `tail`, and below zero it vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProfile {
    pub h: f64,
    pub values: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub tail: f64,
}

/// Mass beyond `R` must be below this for kernel integrals to be trusted.
pub const MAX_TAIL_SURVIVAL: f64 = 1e-8;

impl GridProfile {
    pub fn new(h: f64, values: Vec<f64>, tail: f64) -> Self {
        assert!(h > 0.0 && values.len() >= 2, "grid needs h > 0 and two nodes");
        let mut p = Self {
            h,
            cumulative: Vec::new(),
            values,
            tail,
        };
        p.recompute_cumulative();
        p
    }

    /// Samples `f` on the nodes of `[0, r_max]` (rounded up to whole steps).
    pub fn from_fn(h: f64, r_max: f64, tail: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = (r_max / h).ceil() as usize;
        Self::new(h, (0..=n).map(|j| f(j as f64 * h)).collect(), tail)
    }

    pub fn constant(rho: f64, h: f64, r_max: f64) -> Self {
        Self::from_fn(h, r_max, rho, |_| rho)
    }

    pub(crate) fn recompute_cumulative(&mut self) {
        let h = self.h;
        self.cumulative.clear();
        self.cumulative.reserve(self.values.len());
        let mut c = 0.0;
        self.cumulative.push(0.0);
        for w in self.values.windows(2) {
            c += 0.5 * h * (w[0] + w[1]);
            self.cumulative.push(c);
        }
    }

    /// Index of the last node.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        self.n() as f64 * self.h
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    /// Density at node `j`, which may lie beyond the grid.
    pub fn node(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(self.tail)
    }

    /// `C` at node `j`, continued with the tail density beyond the grid.
    pub fn node_cumulative(&self, j: usize) -> f64 {
        let n = self.n();
        if j <= n {
            self.cumulative[j]
        } else {
            self.cumulative[n] + self.tail * (j - n) as f64 * self.h
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        let x = r / self.h;
        let j = x.floor() as usize;
        if j >= self.n() {
            return if r <= self.r_max() { self.values[self.n()] } else { self.tail };
        }
        let s = x - j as f64;
        self.values[j] + s * (self.values[j + 1] - self.values[j])
    }

    /// `C(r) = ∫₀^r ρ` consistent with the piecewise-linear density.
    pub fn cumulative_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let n = self.n();
        if r >= self.r_max() {
            return self.cumulative[n] + self.tail * (r - self.r_max());
        }
        let x = r / self.h;
        let j = (x.floor() as usize).min(n - 1);
        let s = r - j as f64 * self.h;
        let (a, b) = (self.values[j], self.values[j + 1]);
        self.cumulative[j] + a * s + (b - a) * s * s / (2.0 * self.h)
    }

    /// Probability that no order sits within `r` of the opposite best.
    pub fn survival(&self, r: f64) -> f64 {
        (-self.cumulative_at(r)).exp()
    }

    pub fn check_domain(&self) -> Result<(), TheoryError> {
        let tail = (-self.cumulative[self.n()]).exp();
        if tail > MAX_TAIL_SURVIVAL {
            Err(TheoryError::DomainTooSmall { survival: tail })
        } else {
            Ok(())
        }
    }

    /// `e^{−C_j}` on nodes `0..len`, continued past the grid with the tail.
    pub(crate) fn survival_nodes(&self, len: usize) -> Vec<f64> {
        (0..len).map(|j| (-self.node_cumulative(j)).exp()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_is_the_trapezoid_sum() {
        let p = GridProfile::from_fn(0.01, 1.0, 5.0, |r| 1.0 + r * r);
        for j in 0..p.n() {
            let step = p.cumulative[j + 1] - p.cumulative[j];
            let trap = 0.5 * p.h * (p.values[j] + p.values[j + 1]);
            assert!((step - trap).abs() <= 1e-12 * trap);
        }
        assert!(p.cumulative.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn interpolation_agrees_with_nodes() {
        let p = GridProfile::from_fn(0.1, 1.0, 3.0, |r| 2.0 + r);
        for j in 0..=p.n() {
            assert!((p.density(p.r(j)) - p.values[j]).abs() < 1e-12);
            assert!((p.cumulative_at(p.r(j)) - p.cumulative[j]).abs() < 1e-12);
        }
        // linear profile: trapezoid and the quadratic are exact
        let r = 0.537;
        assert!((p.cumulative_at(r) - (2.0 * r + 0.5 * r * r)).abs() < 1e-12);
        assert!((p.density(0.55) - 2.55).abs() < 1e-12);
        assert_eq!(p.density(-0.1), 0.0);
        assert_eq!(p.density(2.0), 3.0);
        assert!((p.cumulative_at(2.0) - (p.cumulative[p.n()] + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn small_domains_are_rejected() {
        let p = GridProfile::constant(10.0, 0.01, 1.0);
        assert!(matches!(p.check_domain(), Err(TheoryError::DomainTooSmall { .. })));
        let q = GridProfile::constant(10.0, 0.01, 2.0);
        assert!(q.check_domain().is_ok());
    }
}
