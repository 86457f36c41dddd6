//! Constitutive updates in plane strain: isotropic Hooke and von Mises
//! plasticity with power-law isotropic hardening `σ_eq = A (ε0 + ε^p)^n`.
//!
//! Stresses carry the out-of-plane component `zz` as state so the von Mises
//! norm is correct in plane strain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("invalid material parameter: {0}")]
    InvalidParameter(String),
    #[error("return map did not converge after {iterations} iterations (residual {residual:e} MPa)")]
    ReturnMapDiverged { iterations: usize, residual: f64 },
    #[error("negative accumulated plastic strain {0}")]
    NegativePlasticStrain(f64),
}

/// Small strain (tensor components, `xy` is half the engineering shear).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Strain {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Strain {
    pub fn scaled(&self, a: f64) -> Self {
        Self { xx: a * self.xx, yy: a * self.yy, xy: a * self.xy }
    }

    pub fn is_zero(&self) -> bool {
        self.xx == 0.0 && self.yy == 0.0 && self.xy == 0.0
    }
}

/// Cauchy stress in MPa with the out-of-plane normal component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stress {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub zz: f64,
}

impl Stress {
    pub fn mean(&self) -> f64 {
        (self.xx + self.yy + self.zz) / 3.0
    }

    pub fn von_mises(&self) -> f64 {
        let p = self.mean();
        let (sx, sy, sz) = (self.xx - p, self.yy - p, self.zz - p);
        (1.5 * (sx * sx + sy * sy + sz * sz + 2.0 * self.xy * self.xy)).sqrt()
    }

    /// `σ : ε` for an in-plane strain.
    pub fn contract(&self, e: &Strain) -> f64 {
        self.xx * e.xx + self.yy * e.yy + 2.0 * self.xy * e.xy
    }

    fn add(&self, o: &Stress) -> Stress {
        Stress { xx: self.xx + o.xx, yy: self.yy + o.yy, xy: self.xy + o.xy, zz: self.zz + o.zz }
    }
}

/// Isotropic linear elasticity. `young` in MPa, `density` in tonne/mm^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hooke {
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
}

impl Hooke {
    pub fn new(young: f64, poisson: f64, density: f64) -> Result<Self, MaterialError> {
        let h = Self { young, poisson, density };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.young > 0.0) {
            return Err(MaterialError::InvalidParameter(format!("E must be > 0, got {}", self.young)));
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return Err(MaterialError::InvalidParameter(format!(
                "nu must be in [0, 0.5), got {}",
                self.poisson
            )));
        }
        if !(self.density > 0.0) {
            return Err(MaterialError::InvalidParameter(format!(
                "density must be > 0, got {}",
                self.density
            )));
        }
        Ok(())
    }

    /// First Lamé coefficient `Eν / ((1 − 2ν)(1 + ν))`.
    pub fn lambda(&self) -> f64 {
        self.young * self.poisson / ((1.0 - 2.0 * self.poisson) * (1.0 + self.poisson))
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// Plane-strain P-wave modulus `λ + 2G`.
    pub fn p_wave_modulus(&self) -> f64 {
        self.lambda() + 2.0 * self.shear_modulus()
    }

    /// Dilatational wave speed in mm/s.
    pub fn wave_speed(&self) -> f64 {
        (self.p_wave_modulus() / self.density).sqrt()
    }

    /// `σ = λ tr(ε) I + 2G ε`, including `σ_zz = λ tr(ε)`.
    pub fn stress(&self, e: &Strain) -> Stress {
        let lam = self.lambda();
        let two_g = self.young / (1.0 + self.poisson);
        let tr = e.xx + e.yy;
        Stress { xx: lam * tr + two_g * e.xx, yy: lam * tr + two_g * e.yy, xy: two_g * e.xy, zz: lam * tr }
    }
}

/// Von Mises plasticity with power-law hardening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawPlasticity {
    pub elastic: Hooke,
    /// Hardening coefficient `A` (MPa).
    pub a: f64,
    pub eps0: f64,
    pub n: f64,
}

/// Newton tolerance on the scalar consistency equation (relative).
const RETURN_MAP_TOL: f64 = 1e-10;
const RETURN_MAP_MAX_ITERS: usize = 50;

impl PowerLawPlasticity {
    pub fn new(elastic: Hooke, a: f64, eps0: f64, n: f64) -> Result<Self, MaterialError> {
        let p = Self { elastic, a, eps0, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        self.elastic.validate()?;
        if !(self.a > 0.0 && self.eps0 > 0.0 && self.n > 0.0 && self.n < 1.0) {
            return Err(MaterialError::InvalidParameter(format!(
                "hardening needs A > 0, eps0 > 0, 0 < n < 1 (got {}, {}, {})",
                self.a, self.eps0, self.n
            )));
        }
        Ok(())
    }

    pub fn yield_stress(&self, eps_p: f64) -> f64 {
        self.a * (self.eps0 + eps_p).powf(self.n)
    }

    pub fn hardening_modulus(&self, eps_p: f64) -> f64 {
        self.a * self.n * (self.eps0 + eps_p).powf(self.n - 1.0)
    }

    /// Radial return for a strain increment from the state `(stress, eps_p)`.
    /// Returns the updated stress and accumulated plastic strain.
    pub fn return_map(
        &self,
        stress: &Stress,
        eps_p: f64,
        d_eps: &Strain,
    ) -> Result<(Stress, f64), MaterialError> {
        if eps_p < 0.0 {
            return Err(MaterialError::NegativePlasticStrain(eps_p));
        }
        let trial = stress.add(&self.elastic.stress(d_eps));
        let q_trial = trial.von_mises();
        let sy0 = self.yield_stress(eps_p);
        if q_trial <= sy0 {
            return Ok((trial, eps_p));
        }
        let g3 = 3.0 * self.elastic.shear_modulus();
        let mut dg = 0.0;
        let mut residual = q_trial - sy0;
        let mut converged = false;
        for _ in 0..RETURN_MAP_MAX_ITERS {
            let slope = g3 + self.hardening_modulus(eps_p + dg);
            dg += residual / slope;
            residual = q_trial - g3 * dg - self.yield_stress(eps_p + dg);
            if residual.abs() <= RETURN_MAP_TOL * q_trial {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(MaterialError::ReturnMapDiverged { iterations: RETURN_MAP_MAX_ITERS, residual });
        }
        let p = trial.mean();
        let scale = 1.0 - g3 * dg / q_trial;
        let out = Stress {
            xx: p + scale * (trial.xx - p),
            yy: p + scale * (trial.yy - p),
            xy: scale * trial.xy,
            zz: p + scale * (trial.zz - p),
        };
        Ok((out, eps_p + dg))
    }
}

/// Constitutive model of one body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Material {
    Hooke(Hooke),
    PowerLaw(PowerLawPlasticity),
}

impl Material {
    pub fn elastic(&self) -> &Hooke {
        match self {
            Material::Hooke(h) => h,
            Material::PowerLaw(p) => &p.elastic,
        }
    }

    pub fn density(&self) -> f64 {
        self.elastic().density
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        match self {
            Material::Hooke(h) => h.validate(),
            Material::PowerLaw(p) => p.validate(),
        }
    }

    /// Incremental stress update.
    pub fn update(
        &self,
        stress: &Stress,
        eps_p: f64,
        d_eps: &Strain,
    ) -> Result<(Stress, f64), MaterialError> {
        match self {
            Material::Hooke(h) => Ok((stress.add(&h.stress(d_eps)), eps_p)),
            Material::PowerLaw(p) => p.return_map(stress, eps_p, d_eps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hooke() -> Hooke {
        Hooke::new(7.0e4, 0.3, 7.8e-9).unwrap()
    }

    fn forging_law() -> PowerLawPlasticity {
        PowerLawPlasticity::new(Hooke::new(2.1e5, 0.3, 7.8e-9).unwrap(), 348.0, 2e-2, 0.03).unwrap()
    }

    #[test]
    fn zero_strain_zero_stress() {
        assert_eq!(hooke().stress(&Strain::default()), Stress::default());
    }

    #[test]
    fn uniaxial_strain_coefficients() {
        // λ and G from their textbook formulas, evaluated independently.
        let (e, nu) = (7.0e4_f64, 0.3_f64);
        let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let g = e / (2.0 * (1.0 + nu));
        assert_relative_eq!(lam, 40384.615384615383, max_relative = 1e-14);
        let s = hooke().stress(&Strain { xx: 1e-3, yy: 0.0, xy: 0.0 });
        assert_relative_eq!(s.xx, (lam + 2.0 * g) * 1e-3, max_relative = 1e-14);
        assert_relative_eq!(s.yy, lam * 1e-3, max_relative = 1e-14);
        assert_eq!(s.xy, 0.0);
    }

    #[test]
    fn hydrostatic_strain_is_isotropic() {
        let s = hooke().stress(&Strain { xx: 2e-4, yy: 2e-4, xy: 0.0 });
        assert_relative_eq!(s.xx, s.yy, max_relative = 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Hooke::new(-1.0, 0.3, 1.0).is_err());
        assert!(Hooke::new(1.0, 0.5, 1.0).is_err());
        assert!(Hooke::new(1.0, 0.3, 0.0).is_err());
        assert!(PowerLawPlasticity::new(hooke(), 348.0, 0.02, 1.5).is_err());
    }

    #[test]
    fn initial_yield_stress_by_direct_exponentiation() {
        let direct = 348.0 * (0.02_f64.ln() * 0.03).exp();
        assert_relative_eq!(forging_law().yield_stress(0.0), direct, max_relative = 1e-14);
        assert_relative_eq!(direct, 309.4639, max_relative = 1e-5);
    }

    #[test]
    fn tiny_strain_is_elastic() {
        let law = forging_law();
        let d = Strain { xx: 1e-5, yy: 0.0, xy: 0.0 };
        let (s, ep) = law.return_map(&Stress::default(), 0.0, &d).unwrap();
        assert!(s.von_mises() < law.yield_stress(0.0));
        assert_eq!(ep, 0.0);
        assert_eq!(s, law.elastic.stress(&d));
    }

    #[test]
    fn zero_increment_is_identity() {
        let law = forging_law();
        let s0 = Stress { xx: 100.0, yy: -50.0, xy: 20.0, zz: 15.0 };
        let (s, ep) = law.return_map(&s0, 0.01, &Strain::default()).unwrap();
        assert_eq!(s, s0);
        assert_eq!(ep, 0.01);
    }

    /// Bisection on the consistency equation, independent of the Newton path.
    fn bisection_dg(law: &PowerLawPlasticity, q_trial: f64, ep: f64) -> f64 {
        let g3 = 3.0 * law.elastic.shear_modulus();
        let f = |dg: f64| q_trial - g3 * dg - law.yield_stress(ep + dg);
        let (mut lo, mut hi) = (0.0, q_trial / g3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn large_shear_lands_on_hardening_curve() {
        let law = forging_law();
        let d = Strain { xx: 0.0, yy: 0.0, xy: 0.02 };
        let trial = law.elastic.stress(&d);
        let (s, ep) = law.return_map(&Stress::default(), 0.0, &d).unwrap();
        let oracle = bisection_dg(&law, trial.von_mises(), 0.0);
        assert_relative_eq!(ep, oracle, max_relative = 1e-8);
        assert_relative_eq!(s.von_mises(), 348.0 * (0.02 + ep).powf(0.03), max_relative = 1e-6);
    }

    #[test]
    fn negative_history_rejected() {
        let err = forging_law().return_map(&Stress::default(), -1e-3, &Strain::default());
        assert!(matches!(err, Err(MaterialError::NegativePlasticStrain(_))));
    }
}
