//! Catenoid-type barrier `w = φ(r) − φ(2r₀)` on a geodesic annulus.
//!
//! `φ` is the profile of the top half of an `n`-dimensional catenoid with neck
//! radius `r₀`: `φ′(r) = ((r/r₀)^{2n} − 1)^{−1/2}`. Only `φ` itself needs
//! quadrature. Substituting `t = r₀(1 + w²)` turns the endpoint singularity
//! at `r₀` into the smooth integrand `2r₀ / √P(w²)` with
//! `P(x) = ((1 + x)^{2n} − 1)/x`.

use quadrature::double_exponential;

use crate::error::{Error, Result};
use crate::metric::{radial_laplacian_bound, ChartDomain, ChartMetric, CurvatureBounds};

/// Absolute tolerance requested from the quadrature of `φ`.
pub const PHI_TOL: f64 = 1e-12;

/// Safety factor in `Δr ≤ 0.99·n/r` used by [`choose_r0`].
pub const R0_MARGIN: f64 = 0.99;

fn check_params(r0: f64, n: usize) -> Result<()> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Domain(format!("neck radius must be positive, got {r0}")));
    }
    if n == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(())
}

/// `(r/r₀)^{2n} − 1` without cancellation near the neck.
fn excess(r: f64, r0: f64, n: usize) -> f64 {
    (2.0 * n as f64 * (r / r0).ln()).exp_m1()
}

pub fn phi_prime(r: f64, r0: f64, n: usize) -> Result<f64> {
    check_params(r0, n)?;
    if !(r > r0) {
        return Err(Error::Domain(format!("φ′ needs r > r0, got r = {r}, r0 = {r0}")));
    }
    Ok(excess(r, r0, n).powf(-0.5))
}

/// `φ″ = −n x (x − 1)^{−3/2} / r` with `x = (r/r₀)^{2n}`.
pub fn phi_second(r: f64, r0: f64, n: usize) -> Result<f64> {
    check_params(r0, n)?;
    if !(r > r0) {
        return Err(Error::Domain(format!("φ″ needs r > r0, got r = {r}, r0 = {r0}")));
    }
    let e = excess(r, r0, n);
    Ok(-(n as f64) * (1.0 + e) * e.powf(-1.5) / r)
}

/// `P(x) = ((1 + x)^{2n} − 1)/x`, continuous at 0 with value `2n`.
fn reduced_poly(x: f64, n: usize) -> f64 {
    let m = 2.0 * n as f64;
    if x < 1e-300 {
        return m;
    }
    (m * x.ln_1p()).exp_m1() / x
}

/// `φ(r) = ∫_{r₀}^{r} φ′(t) dt`.
pub fn phi(r: f64, r0: f64, n: usize) -> Result<f64> {
    check_params(r0, n)?;
    if !(r >= r0) || !r.is_finite() {
        return Err(Error::Domain(format!("φ needs r >= r0, got r = {r}, r0 = {r0}")));
    }
    if r == r0 {
        return Ok(0.0);
    }
    let w_max = (r / r0 - 1.0).sqrt();
    let out = double_exponential::integrate(|w| 2.0 * r0 / reduced_poly(w * w, n).sqrt(), 0.0, w_max, PHI_TOL);
    if !(out.error_estimate <= 1e-10) {
        return Err(Error::NonConvergence(format!(
            "quadrature of φ({r}) stalled with error estimate {:e}",
            out.error_estimate
        )));
    }
    Ok(out.integral)
}

/// Tabulated barrier profile on `[r₀, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierProfile {
    pub r0: f64,
    pub n: usize,
    pub r_max: f64,
    /// `δ₀ = (φ(4r₀) − φ(2r₀))/2`.
    pub delta0: f64,
    /// Rows `(r, φ(r), φ′(r))`; `φ′` is `+∞` at `r₀`.
    pub table: Vec<[f64; 3]>,
}

impl BarrierProfile {
    /// Builds the profile with `samples` equally spaced rows on `[r₀, r_max]`.
    pub fn new(r0: f64, n: usize, r_max: f64, samples: usize) -> Result<Self> {
        check_params(r0, n)?;
        if !(r_max >= 4.0 * r0) {
            return Err(Error::Domain(format!("profile must reach 4r0 = {}, r_max = {r_max}", 4.0 * r0)));
        }
        if samples < 2 {
            return Err(Error::Domain("profile table needs at least two rows".into()));
        }
        let mut table = Vec::with_capacity(samples);
        for k in 0..samples {
            let r = r0 + (r_max - r0) * k as f64 / (samples - 1) as f64;
            let dphi = if k == 0 { f64::INFINITY } else { phi_prime(r, r0, n)? };
            table.push([r, phi(r, r0, n)?, dphi]);
        }
        let delta0 = 0.5 * (phi(4.0 * r0, r0, n)? - phi(2.0 * r0, r0, n)?);
        Ok(Self {
            r0,
            n,
            r_max,
            delta0,
            table,
        })
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        phi(r, self.r0, self.n)
    }

    pub fn phi_prime(&self, r: f64) -> Result<f64> {
        phi_prime(r, self.r0, self.n)
    }

    /// The barrier `w = φ(r) − φ(2r₀)`.
    pub fn w(&self, r: f64) -> Result<f64> {
        Ok(self.phi(r)? - self.phi(2.0 * self.r0)?)
    }
}

/// `φ″/(1 + φ′²) + (n/r)φ′`, identically zero in exact arithmetic. Evaluated
/// only for `r ≥ r₀(1 + 10⁻⁶)`.
pub fn ode_residual(profile: &BarrierProfile, r: f64) -> Result<f64> {
    let (r0, n) = (profile.r0, profile.n);
    if !(r >= r0 * (1.0 + 1e-6)) {
        return Err(Error::Domain(format!("ODE residual is reported for r >= r0(1 + 1e-6), got r = {r}")));
    }
    if r > profile.r_max {
        return Err(Error::Domain(format!("r = {r} beyond the profile range {}", profile.r_max)));
    }
    let d1 = phi_prime(r, r0, n)?;
    let d2 = phi_second(r, r0, n)?;
    Ok(d2 / (1.0 + d1 * d1) + n as f64 / r * d1)
}

/// Largest `r₀ ≤ upper_cap` with `Δr ≤ 0.99·n/r` on `(0, 4r₀]`, using the
/// comparison bound for `Δr` under `K ≥ −K₀`. The chart is centered at the
/// origin, so the center point is implicit.
pub fn choose_r0(metric: &ChartMetric, bounds: &CurvatureBounds, upper_cap: f64) -> Result<f64> {
    if !metric.is_polar() {
        return Err(Error::Contract("choose_r0 needs a polar chart centered at p".into()));
    }
    if !(upper_cap > 0.0 && upper_cap.is_finite()) {
        return Err(Error::Construction(format!("upper cap must be positive, got {upper_cap}")));
    }
    let n = metric.dim();
    let nf = n as f64;
    // (n−1)√K₀ coth(√K₀ r) ≤ 0.99 n/r  ⇔  x coth x ≤ 0.99 n/(n−1),  x = √K₀ r.
    // x coth x increases from 1, so the test at r = 4r₀ covers (0, 4r₀].
    let target = if n == 1 { f64::INFINITY } else { R0_MARGIN * nf / (nf - 1.0) };
    if target <= 1.0 {
        return Err(Error::Construction(format!(
            "no r0 satisfies the comparison condition in dimension {n}"
        )));
    }
    if bounds.k0 == 0.0 || target.is_infinite() {
        return Ok(upper_cap);
    }
    let g = |x: f64| x / x.tanh() - target;
    let (mut lo, mut hi) = (1e-8, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let r0 = (lo / (4.0 * bounds.k0.sqrt())).min(upper_cap);
    // Re-check through the public bound, which is what the lemma consumes.
    let lap = radial_laplacian_bound(n, bounds.k0, 4.0 * r0)?;
    if lap > R0_MARGIN * nf / (4.0 * r0) * (1.0 + 1e-12) {
        return Err(Error::Construction(format!("r0 = {r0} fails the comparison check")));
    }
    Ok(r0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionReport {
    /// `min (−Mw)` over `2r₀ ≤ r ≤ 4r₀`; positive certifies `Mw < 0`.
    pub min_margin: f64,
    /// Rows `(r, Mw)`.
    pub samples: Vec<[f64; 2]>,
}

impl SupersolutionReport {
    pub fn certified(&self) -> bool {
        self.min_margin > 0.0
    }
}

/// Evaluates `Mw = φ′Δr + φ″/(1 + φ′²)` on the annulus `2r₀ ≤ r ≤ 4r₀` with
/// the exact `Δr` of a rotationally symmetric metric. A nonpositive margin is
/// a reported outcome, not an error.
pub fn supersolution_check(metric: &ChartMetric, profile: &BarrierProfile, samples: usize) -> Result<SupersolutionReport> {
    if metric.warp().is_none() {
        return Err(Error::Contract(
            "supersolution check needs a rotationally symmetric polar metric".into(),
        ));
    }
    if metric.dim() != profile.n {
        return Err(Error::Contract(format!(
            "profile dimension {} differs from metric dimension {}",
            profile.n,
            metric.dim()
        )));
    }
    let (a, b) = (2.0 * profile.r0, 4.0 * profile.r0);
    if let ChartDomain::Annulus { r_min, r_max } = metric.domain() {
        if a < *r_min || b > *r_max {
            return Err(Error::Domain(format!(
                "annulus [{a}, {b}] is not inside the chart [{r_min}, {r_max}]"
            )));
        }
    }
    let samples = samples.max(2);
    let mut rows = Vec::with_capacity(samples);
    let mut min_margin = f64::INFINITY;
    for k in 0..samples {
        let r = a + (b - a) * k as f64 / (samples - 1) as f64;
        let d1 = profile.phi_prime(r)?;
        let d2 = phi_second(r, profile.r0, profile.n)?;
        let mw = d1 * metric.radial_laplacian(r)? + d2 / (1.0 + d1 * d1);
        min_margin = min_margin.min(-mw);
        rows.push([r, mw]);
    }
    Ok(SupersolutionReport {
        min_margin,
        samples: rows,
    })
}

/// `C₂ = φ′(2r₀) = (2^{2n} − 1)^{−1/2}`, the boundary gradient of the barrier.
pub fn boundary_gradient_constant(profile: &BarrierProfile) -> f64 {
    (4f64.powi(profile.n as i32) - 1.0).powf(-0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use gauss_quad::GaussLegendre;

    #[test]
    fn phi_prime_values() {
        for n in 1..5 {
            let r = 2f64.powf(0.5 / n as f64) * 0.7;
            assert_relative_eq!(phi_prime(r, 0.7, n).unwrap(), 1.0, max_relative = 1e-13);
        }
        assert_relative_eq!(phi_prime(2.0, 1.0, 2).unwrap(), 15f64.sqrt().recip(), max_relative = 1e-15);
        assert!(phi_prime(1e6, 1.0, 2).unwrap() < 1e-11);
        assert!(phi_prime(1.0, 1.0, 2).is_err());
        assert!(phi_prime(0.5, 1.0, 2).is_err());
    }

    #[test]
    fn phi_against_fixed_rule() {
        assert_eq!(phi(1.0, 1.0, 2).unwrap(), 0.0);
        assert!(phi(0.9, 1.0, 2).is_err());
        // High-order Gauss-Legendre on the substituted integrand.
        let gl = GaussLegendre::new(64.try_into().unwrap());
        for (n, r0, r) in [(2usize, 1.0f64, 2.0f64), (3, 0.2, 0.5), (4, 1.0, 10.0), (2, 0.2, 0.8)] {
            let w_max: f64 = (r / r0 - 1.0).sqrt();
            let mut oracle = 0.0;
            let pieces = 16;
            for k in 0..pieces {
                let a = w_max * k as f64 / pieces as f64;
                let b = w_max * (k + 1) as f64 / pieces as f64;
                oracle += gl.integrate(a, b, |w| {
                    let x = w * w;
                    let p = ((1.0 + x).powi(2 * n as i32) - 1.0) / x;
                    2.0 * r0 / p.sqrt()
                });
            }
            let v = phi(r, r0, n).unwrap();
            assert!((v - oracle).abs() < 1e-9, "n={n} r0={r0} r={r}: {v} vs {oracle}");
        }
    }

    #[test]
    fn phi_is_increasing_and_differentiates_to_phi_prime() {
        for n in [2, 3, 4] {
            for r0 in [0.2, 1.0] {
                assert!(phi(4.0 * r0, r0, n).unwrap() > phi(2.0 * r0, r0, n).unwrap());
                assert!(phi(2.0 * r0, r0, n).unwrap() > 0.0);
                for k in 0..40 {
                    let r = r0 * (1.01 + (10.0 - 1.01) * k as f64 / 39.0);
                    let h = 1e-4 * r0;
                    let f = |t: f64| phi(t, r0, n).unwrap();
                    let fd = (8.0 * (f(r + h) - f(r - h)) - (f(r + 2.0 * h) - f(r - 2.0 * h))) / (12.0 * h);
                    let exact = phi_prime(r, r0, n).unwrap();
                    assert!((fd - exact).abs() < 1e-6, "n={n} r0={r0} r={r}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn ode_identity() {
        for (n, r0, r) in [(2, 1.0, 1.5), (3, 0.2, 0.5)] {
            let p = BarrierProfile::new(r0, n, 10.0 * r0, 8).unwrap();
            assert!(ode_residual(&p, r).unwrap().abs() <= 1e-12);
        }
        let p = BarrierProfile::new(1.0, 2, 10.0, 4).unwrap();
        assert!(ode_residual(&p, 1.0 + 1e-7).is_err());
        assert!(ode_residual(&p, 1.0 + 2e-6).unwrap().is_finite());
    }

    #[test]
    fn delta0_monotone() {
        let d = |r0: f64, n: usize| BarrierProfile::new(r0, n, 4.0 * r0, 2).unwrap().delta0;
        for r0 in [0.2, 0.5, 1.0] {
            assert!(d(r0, 2) > d(r0, 3) && d(r0, 3) > d(r0, 4));
        }
        for n in [2, 3, 4] {
            assert!(d(0.2, n) < d(0.5, n) && d(0.5, n) < d(1.0, n));
            assert!(d(0.2, n) > 0.0);
        }
    }

    #[test]
    fn r0_selection() {
        let flat = ChartMetric::flat_polar(0.0, 10.0).unwrap();
        assert_eq!(choose_r0(&flat, &flat.curvature_bounds(), 1.5).unwrap(), 1.5);
        let h2 = ChartMetric::hyperbolic_polar(2, -1.0, 0.0, 8.0).unwrap();
        let h3 = ChartMetric::hyperbolic_polar(3, -1.0, 0.0, 8.0).unwrap();
        let r2 = choose_r0(&h2, &h2.curvature_bounds(), 10.0).unwrap();
        let r3 = choose_r0(&h3, &h3.curvature_bounds(), 10.0).unwrap();
        assert!(r3 < r2);
        // coth(4r0) = 0.99·2/(4r0) at the returned value
        let x = 4.0 * r2;
        assert!((x / x.tanh() - 1.98).abs() < 1e-10);
        for (m, r0) in [(&h2, r2), (&h3, r3)] {
            let n = m.dim() as f64;
            for k in 1..=1000 {
                let r = 4.0 * r0 * k as f64 / 1000.0;
                assert!(m.radial_laplacian(r).unwrap() < n / r);
            }
        }
        assert_eq!(choose_r0(&h2, &h2.curvature_bounds(), 0.1).unwrap(), 0.1);
        assert!(choose_r0(&h2, &h2.curvature_bounds(), -1.0).is_err());
    }

    #[test]
    fn supersolution_margins() {
        let flat = ChartMetric::flat_polar(0.0, 10.0).unwrap();
        let p = BarrierProfile::new(0.5, 2, 2.0, 4).unwrap();
        let rep = supersolution_check(&flat, &p, 200).unwrap();
        // Mw = −φ′/r in the flat plane
        for row in &rep.samples {
            assert_relative_eq!(row[1], -p.phi_prime(row[0]).unwrap() / row[0], max_relative = 1e-10);
        }
        assert!(rep.certified());

        for n in [2, 3] {
            let m = ChartMetric::hyperbolic_polar(n, -1.0, 0.0, 8.0).unwrap();
            let r0 = choose_r0(&m, &m.curvature_bounds(), 10.0).unwrap();
            let p = BarrierProfile::new(r0, n, 4.0 * r0, 4).unwrap();
            assert!(supersolution_check(&m, &p, 2001).unwrap().certified());
            let big = BarrierProfile::new(1.5, n, 6.0, 4).unwrap();
            assert!(!supersolution_check(&m, &big, 2001).unwrap().certified());
        }
    }

    #[test]
    fn boundary_constant() {
        let p = |n| BarrierProfile::new(1.0, n, 4.0, 2).unwrap();
        assert_relative_eq!(boundary_gradient_constant(&p(2)), 15f64.sqrt().recip(), max_relative = 1e-15);
        assert_relative_eq!(boundary_gradient_constant(&p(3)), 63f64.sqrt().recip(), max_relative = 1e-15);
        assert_relative_eq!(boundary_gradient_constant(&p(2)), p(2).phi_prime(2.0).unwrap(), max_relative = 1e-13);
        assert!(boundary_gradient_constant(&p(40)) < 1e-12);
    }
}
