//! Symmetric Lévy measures in polar form: ν(A) = ∫∫ 1_A(sθ) q(s) ds μ(dθ).

mod doubling;
mod profile;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

pub use doubling::{doubling_check, DoublingReport};
pub use profile::{log_integral, Continuation, CustomProfile, Interpolation, Radial, RadialProfile};

use crate::error::{LevyError, Result};
use crate::quadrature::{integrate_panels, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AngularMeasure {
    /// Rotation-invariant measure of the given total mass (in d = 1: ±1 with mass/2 each).
    Uniform { mass: f64 },
    Atoms { atoms: Vec<Atom> },
}

impl AngularMeasure {
    pub fn total_mass(&self) -> f64 {
        match self {
            AngularMeasure::Uniform { mass } => *mass,
            AngularMeasure::Atoms { atoms } => atoms.iter().map(|a| a.weight).sum(),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            AngularMeasure::Uniform { mass } => {
                if !(mass.is_finite() && *mass > 0.0) {
                    return Err(LevyError::param("mass", "angular mass must be positive"));
                }
            }
            AngularMeasure::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(LevyError::param("atoms", "empty atom list"));
                }
                for a in atoms {
                    if a.direction.len() != d {
                        return Err(LevyError::param("atoms", format!("direction must have {d} components")));
                    }
                    let n = a.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if (n - 1.0).abs() > 1e-9 {
                        return Err(LevyError::param("atoms", format!("direction {:?} is not a unit vector", a.direction)));
                    }
                    if !(a.weight.is_finite() && a.weight > 0.0) {
                        return Err(LevyError::param("atoms", "weights must be positive"));
                    }
                    let mirrored = atoms.iter().any(|b| {
                        b.direction.iter().zip(&a.direction).all(|(u, v)| (u + v).abs() < 1e-9)
                            && (b.weight - a.weight).abs() <= 1e-12 * a.weight
                    });
                    if !mirrored {
                        return Err(LevyError::param(
                            "atoms",
                            format!("atom {:?} has no antipodal partner of equal weight", a.direction),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasure {
    pub d: usize,
    pub radial: RadialProfile,
    pub angular: AngularMeasure,
    /// Radial window [lo, hi) the profile is restricted to.
    lo: f64,
    hi: f64,
}

impl LevyMeasure {
    pub fn new(d: usize, radial: RadialProfile, angular: AngularMeasure) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(LevyError::param("d", "dimension must be 1 or 2"));
        }
        radial.validate()?;
        angular.validate(d)?;
        let nu = LevyMeasure {
            d,
            radial,
            angular,
            lo: 0.0,
            hi: f64::INFINITY,
        };
        let integral = nu.h_functional(1.0).map_err(|e| match e {
            LevyError::TailNotIntegrable { .. } => e,
            _ => LevyError::NotLevyMeasure { value: f64::NAN },
        })?;
        if !integral.is_finite() {
            return Err(LevyError::NotLevyMeasure { value: integral });
        }
        Ok(nu)
    }

    /// Rotation-invariant measure with total angular mass `mass`.
    pub fn uniform(d: usize, radial: RadialProfile, mass: f64) -> Result<Self> {
        LevyMeasure::new(d, radial, AngularMeasure::Uniform { mass })
    }

    pub fn radial(&self) -> Radial<'_> {
        Radial::new(&self.radial, self.lo, self.hi)
    }

    pub fn mass(&self) -> f64 {
        self.angular.total_mass()
    }

    pub fn support_radius(&self) -> f64 {
        self.radial().hi
    }

    pub fn window(&self) -> (f64, f64) {
        let r = self.radial();
        (r.lo, r.hi)
    }

    /// c·ν.
    pub fn scaled(&self, c: f64) -> LevyMeasure {
        let mut out = self.clone();
        out.angular = match &self.angular {
            AngularMeasure::Uniform { mass } => AngularMeasure::Uniform { mass: mass * c },
            AngularMeasure::Atoms { atoms } => AngularMeasure::Atoms {
                atoms: atoms
                    .iter()
                    .map(|a| Atom {
                        direction: a.direction.clone(),
                        weight: a.weight * c,
                    })
                    .collect(),
            },
        };
        out
    }

    /// The restriction of ν to {lo ≤ |y| < hi}.
    pub fn restricted(&self, lo: f64, hi: f64) -> LevyMeasure {
        let mut out = self.clone();
        out.lo = self.lo.max(lo);
        out.hi = self.hi.min(hi);
        out
    }

    /// ν({|y| ≥ r}).
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(LevyError::param("r", "radius must be positive"));
        }
        let m = self.radial().moment(0, r, f64::INFINITY)?;
        if !m.is_finite() {
            return Err(LevyError::TailNotIntegrable { radius: r });
        }
        Ok(self.mass() * m)
    }

    /// H(r) = ∫ (1 ∧ r²|y|²) ν(dy).
    pub fn h_functional(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(LevyError::param("r", "must be positive"));
        }
        let rad = self.radial();
        let near = rad.moment(2, 0.0, 1.0 / r)?;
        let far = rad.moment(0, 1.0 / r, f64::INFINITY)?;
        if !far.is_finite() {
            return Err(LevyError::TailNotIntegrable { radius: 1.0 / r });
        }
        Ok(self.mass() * (r * r * near + far))
    }

    /// m0 = ∫ |y|² ν(dy).
    pub fn second_moment(&self) -> Result<f64> {
        let v = self.radial().moment(2, 0.0, f64::INFINITY)?;
        if !v.is_finite() {
            return Err(LevyError::InfiniteSecondMoment);
        }
        Ok(self.mass() * v)
    }

    /// Lebesgue density of ν at a point with |y| = s (taken along an atom in d = 1);
    /// zero for planar atomic measures, which have no absolutely continuous part.
    pub fn lebesgue_density(&self, s: f64) -> f64 {
        let q = self.radial().q(s);
        match (&self.angular, self.d) {
            (AngularMeasure::Uniform { mass }, 1) => 0.5 * mass * q,
            (AngularMeasure::Atoms { atoms }, 1) => atoms.iter().map(|a| a.weight).fold(f64::INFINITY, f64::min) * q,
            (AngularMeasure::Uniform { mass }, _) => mass * q / (2.0 * PI * s),
            (AngularMeasure::Atoms { .. }, _) => 0.0,
        }
    }

    /// ∫_{|y|≤ε} |y|² ν(dy).
    pub fn truncated_second_moment(&self, eps: f64) -> Result<f64> {
        Ok(self.mass() * self.radial().moment(2, 0.0, eps)?)
    }

    /// ν(B(x, ρ)).
    pub fn ball_mass(&self, x: &[f64], rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(LevyError::param("rho", "must be positive"));
        }
        if x.len() != self.d {
            return Err(LevyError::param("x", format!("expected {} coordinates", self.d)));
        }
        let c = norm(x);
        let rad = self.radial();
        if c - rho >= rad.hi || rad.is_empty() {
            return Ok(0.0);
        }
        let infinite = || LevyError::InfiniteBallMass {
            center: x.to_vec(),
            rho,
        };
        match (&self.angular, self.d) {
            (AngularMeasure::Uniform { mass }, 1) => {
                let mut total = 0.0;
                for theta in [1.0, -1.0] {
                    total += 0.5 * mass * self.interval_mass(theta * x[0] - rho, theta * x[0] + rho)?;
                }
                if !total.is_finite() {
                    return Err(infinite());
                }
                Ok(total)
            }
            (AngularMeasure::Atoms { atoms }, _) => {
                let mut total = 0.0;
                for a in atoms {
                    let p: f64 = a.direction.iter().zip(x).map(|(u, v)| u * v).sum();
                    let disc = p * p - c * c + rho * rho;
                    if disc <= 0.0 {
                        continue;
                    }
                    let sq = disc.sqrt();
                    total += a.weight * self.interval_mass(p - sq, p + sq)?;
                }
                if !total.is_finite() {
                    return Err(infinite());
                }
                Ok(total)
            }
            (AngularMeasure::Uniform { mass }, _) => {
                let mut total = 0.0;
                let mut s_min = 0.0;
                if c < rho {
                    let inner = rad.moment(0, 0.0, rho - c)?;
                    if !inner.is_finite() {
                        return Err(infinite());
                    }
                    total += mass * inner;
                    s_min = rho - c;
                }
                if c == 0.0 {
                    return Ok(total);
                }
                Ok(total + mass / (2.0 * PI) * self.annulus_chord_mass(c, rho, s_min)?)
            }
        }
    }

    /// ∫ over s ∈ (max(a,0), b) of q.
    fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        let a = a.max(0.0);
        if b <= a {
            return Ok(0.0);
        }
        self.radial().moment(0, a, b)
    }

    /// ∫ q(s)·(arc length of the circle of radius s inside B(x,ρ)) ds over s > s_min,
    /// with |x| = c. Substituting s = c − ρ cos u removes the square-root endpoints.
    fn annulus_chord_mass(&self, c: f64, rho: f64, s_min: f64) -> Result<f64> {
        let rad = self.radial();
        let f = |u: f64| {
            let s = c - rho * u.cos();
            if s <= s_min || s <= 0.0 {
                return 0.0;
            }
            let q = rad.q(s);
            if q == 0.0 {
                return 0.0;
            }
            let arg = ((s * s + c * c - rho * rho) / (2.0 * s * c)).clamp(-1.0, 1.0);
            2.0 * arg.acos() * q * rho * u.sin()
        };
        let to_u = |s: f64| ((c - s) / rho).clamp(-1.0, 1.0).acos();
        let mut edges = vec![0.0, PI];
        for s in rad.edges(s_min.max(c - rho).max(1e-300), c + rho) {
            edges.push(to_u(s));
        }
        edges.sort_by(|a, b| a.total_cmp(b));
        edges.dedup();
        Ok(integrate_panels(&f, &edges, Tolerance::relative(1e-10))?.value)
    }

    /// Φ(ξ) = ∫ (1 − cos⟨ξ, y⟩) ν(dy), evaluated directly.
    pub fn phi(&self, xi: &[f64]) -> Result<f64> {
        self.directional(xi, |rad, w| rad.phi(w))
    }

    /// ∫ (cosh⟨ξ, y⟩ − 1) ν(dy); +∞ when the exponential moment diverges.
    pub fn cosh_functional(&self, xi: &[f64]) -> Result<f64> {
        self.directional(xi, |rad, w| rad.cosh_integral(w))
    }

    /// Applies a radial functional g(|⟨ξ,θ⟩|) and integrates it against μ.
    pub(crate) fn directional<G>(&self, xi: &[f64], g: G) -> Result<f64>
    where
        G: Fn(&Radial<'_>, f64) -> Result<f64>,
    {
        let rad = self.radial();
        let r = norm(xi);
        if r == 0.0 {
            return Ok(0.0);
        }
        match (&self.angular, self.d) {
            (AngularMeasure::Uniform { mass }, 1) => Ok(mass * g(&rad, r)?),
            (AngularMeasure::Atoms { atoms }, _) => {
                let mut total = 0.0;
                for a in atoms {
                    let p: f64 = a.direction.iter().zip(xi).map(|(u, v)| u * v).sum();
                    total += a.weight * g(&rad, p.abs())?;
                }
                Ok(total)
            }
            (AngularMeasure::Uniform { mass }, _) => {
                let err = std::cell::RefCell::new(None);
                let h = |phi: f64| match g(&rad, r * phi.cos()) {
                    Ok(v) => v,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                };
                let edges: Vec<f64> = (0..=8).map(|i| FRAC_PI_2 * i as f64 / 8.0).collect();
                let v = integrate_panels(&h, &edges, Tolerance::relative(1e-10))?.value;
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                Ok(2.0 * mass / PI * v)
            }
        }
    }

    /// (ν restricted to |y| < r, ν restricted to |y| ≥ r).
    pub fn split(&self, r: f64) -> Result<(LevyMeasure, FiniteMeasure)> {
        if !(r > 0.0) {
            return Err(LevyError::param("r", "split radius must be positive"));
        }
        let small = self.restricted(0.0, r);
        let big = self.restricted(r, f64::INFINITY);
        let total = big.tail_mass(r.max(1e-300))?;
        Ok((small, FiniteMeasure { measure: big, total }))
    }
}

/// A Lévy measure with finite total mass, e.g. the large-jump part of a split.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    pub measure: LevyMeasure,
    pub total: f64,
}

impl FiniteMeasure {
    /// Radial density q(s) (times the angular measure gives ν̄).
    pub fn density(&self, s: f64) -> f64 {
        self.measure.radial().q(s)
    }

    pub fn ball_mass(&self, x: &[f64], rho: f64) -> Result<f64> {
        if self.total == 0.0 {
            return Ok(0.0);
        }
        self.measure.ball_mass(x, rho)
    }

    /// ∫ cos⟨ξ, y⟩ ν̄(dy).
    pub fn fourier(&self, xi: &[f64]) -> Result<f64> {
        if self.total == 0.0 {
            return Ok(0.0);
        }
        if norm(xi) == 0.0 {
            return Ok(self.total);
        }
        // cos transform of the radial part, integrated against μ
        let (lo, hi) = self.measure.window();
        let top = self.cos_top(lo, hi);
        self.measure.directional(xi, |rad, w| {
            if w == 0.0 {
                rad.moment(0, lo, hi)
            } else {
                rad.cos_integral(w, lo, top)
            }
        })
    }

    fn cos_top(&self, lo: f64, hi: f64) -> f64 {
        if hi.is_finite() {
            return hi;
        }
        let rad = self.measure.radial();
        let floor = 1e-17 * self.total / self.measure.mass();
        let mut s = lo.max(1.0);
        while s * rad.q(s) > floor && s < 1e300 {
            s *= 2.0;
        }
        s
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truncated() -> LevyMeasure {
        LevyMeasure::uniform(
            1,
            RadialProfile::TruncatedStable {
                alpha: 1.5,
                r0: 1.0,
                scale: 1.0,
            },
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn tail_mass_closed_form() {
        let nu = truncated();
        assert_eq!(nu.tail_mass(1.0).unwrap(), 0.0);
        assert!((nu.tail_mass(0.25).unwrap() - 9.333333333333334).abs() < 1e-12);
    }

    #[test]
    fn ball_mass_closed_form() {
        let nu = truncated();
        let v = nu.ball_mass(&[0.5], 0.1).unwrap();
        assert!((v - 1.200_793_107_100_532).abs() < 1e-12, "{v}");
        assert!(matches!(
            nu.ball_mass(&[0.05], 0.1),
            Err(LevyError::InfiniteBallMass { .. })
        ));
    }

    #[test]
    fn rejects_asymmetric_atoms() {
        let err = LevyMeasure::new(
            2,
            RadialProfile::TruncatedStable {
                alpha: 1.0,
                r0: 1.0,
                scale: 1.0,
            },
            AngularMeasure::Atoms {
                atoms: vec![Atom {
                    direction: vec![1.0, 0.0],
                    weight: 1.0,
                }],
            },
        );
        assert!(err.is_err());
    }

    #[test]
    fn planar_ball_mass_against_cartesian_sum() {
        // uniform d=2 measure: Cartesian density q(s)·M/(2πs)
        let nu = LevyMeasure::uniform(
            2,
            RadialProfile::TruncatedStable {
                alpha: 1.0,
                r0: 2.0,
                scale: 1.0,
            },
            2.0 * PI,
        )
        .unwrap();
        let x = [0.6, 0.3];
        let rho = 0.2;
        let got = nu.ball_mass(&x, rho).unwrap();
        let n = 1200;
        let h = 2.0 * rho / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let y0 = x[0] - rho + (i as f64 + 0.5) * h;
                let y1 = x[1] - rho + (j as f64 + 0.5) * h;
                if (y0 - x[0]).powi(2) + (y1 - x[1]).powi(2) < rho * rho {
                    let s = (y0 * y0 + y1 * y1).sqrt();
                    acc += s.powi(-2) / s * h * h;
                }
            }
        }
        assert!((got - acc).abs() < 2e-3 * acc, "{got} vs {acc}");
    }
}
