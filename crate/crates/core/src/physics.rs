//! Pointwise constitutive relations of the artificial-compressibility
//! Navier-Stokes/Cahn-Hilliard model.
//!
//! State `q = (c, sqrt(rho) u, sqrt(rho) v, sqrt(rho) w, p)`,
//! entropy variables `w = (mu, u, v, w, p / (rho0 c0^2))`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const NVARS: usize = 5;
pub type State = [f64; NVARS];
pub type Vec3 = [f64; 3];
/// Gradient of every entropy variable: `grad[var][dir]`.
pub type Grad = [Vec3; NVARS];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub rho1: f64,
    pub rho2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub epsilon: f64,
    pub t_ch: f64,
    pub c0_sq: f64,
    pub sigma: f64,
    #[serde(default)]
    pub gravity: Vec3,
    /// Wall contact angle in degrees.
    #[serde(default = "default_theta")]
    pub theta_w_deg: f64,
}

fn default_theta() -> f64 {
    90.0
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("epsilon", self.epsilon),
            ("t_ch", self.t_ch),
            ("c0_sq", self.c0_sq),
            ("sigma", self.sigma),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.gravity.iter().any(|g| !g.is_finite()) || !self.theta_w_deg.is_finite() {
            return Err(Error::InvalidParams("non-finite gravity or contact angle".into()));
        }
        Ok(())
    }

    pub fn rho0(&self) -> f64 {
        self.rho1.max(self.rho2)
    }

    /// Mobility `M0 = epsilon / (sigma t_CH)`.
    pub fn mobility(&self) -> f64 {
        self.epsilon / (self.sigma * self.t_ch)
    }

    /// Coefficient of the gradient energy in the chemical potential, `3/2 sigma epsilon`.
    pub fn kappa(&self) -> f64 {
        1.5 * self.sigma * self.epsilon
    }

    /// Artificial-compressibility bulk modulus `rho0 c0^2`.
    pub fn bulk(&self) -> f64 {
        self.rho0() * self.c0_sq
    }

    pub fn density(&self, c: f64) -> f64 {
        let ch = clamp_c(c);
        self.rho1 * ch + self.rho2 * (1.0 - ch)
    }

    pub fn sqrt_density(&self, c: f64) -> f64 {
        self.density(c).sqrt()
    }

    /// Viscosity, evaluated with the same cutoff as the density.
    pub fn viscosity(&self, c: f64) -> f64 {
        let ch = clamp_c(c);
        self.eta1 * ch + self.eta2 * (1.0 - ch)
    }

    /// Double-well free energy `f0 = 12 sigma / epsilon c^2 (1-c)^2`.
    pub fn f0(&self, c: f64) -> f64 {
        12.0 * self.sigma / self.epsilon * c * c * (1.0 - c) * (1.0 - c)
    }

    pub fn f0_prime(&self, c: f64) -> f64 {
        12.0 * self.sigma / self.epsilon * (2.0 * c - 6.0 * c * c + 4.0 * c * c * c)
    }

    pub fn f0_second(&self, c: f64) -> f64 {
        12.0 * self.sigma / self.epsilon * (2.0 - 12.0 * c + 12.0 * c * c)
    }

    fn cos_theta(&self) -> f64 {
        self.theta_w_deg.to_radians().cos()
    }

    /// Wall free energy.
    pub fn fw(&self, c: f64) -> f64 {
        0.5 * self.sigma * self.cos_theta() * (2.0 * c - 1.0) * (1.0 + 2.0 * c - 2.0 * c * c)
    }

    pub fn fw_prime(&self, c: f64) -> f64 {
        6.0 * self.sigma * self.cos_theta() * c * (1.0 - c)
    }

    /// Free energy density including the gradient term.
    pub fn free_energy(&self, c: f64, gc: &Vec3) -> f64 {
        self.f0(c) + 0.75 * self.sigma * self.epsilon * dot(gc, gc)
    }

    pub fn velocity(&self, q: &State) -> Vec3 {
        let s = self.sqrt_density(q[0]);
        [q[1] / s, q[2] / s, q[3] / s]
    }

    pub fn entropy_vars(&self, q: &State, mu: f64) -> State {
        let s = self.sqrt_density(q[0]);
        [mu, q[1] / s, q[2] / s, q[3] / s, q[4] / self.bulk()]
    }

    /// Diagonal of the mass matrix `diag(1, sqrt(rho), sqrt(rho), sqrt(rho), 1)`.
    pub fn mass_diag(&self, c: f64) -> State {
        let s = self.sqrt_density(c);
        [1.0, s, s, s, 1.0]
    }

    /// Inviscid flux in Cartesian direction `dir`.
    pub fn inviscid_flux(&self, q: &State, dir: usize) -> State {
        let u = self.velocity(q);
        let rho = self.density(q[0]);
        let ud = u[dir];
        let mut f = [q[0] * ud, 0.5 * rho * u[0] * ud, 0.5 * rho * u[1] * ud, 0.5 * rho * u[2] * ud, 0.0];
        f[1 + dir] += q[4];
        f
    }

    /// Non-conservative coefficient matrices in direction `dir`: `phi[m][row]`
    /// multiplies the gradient of entropy variable `m`.
    pub fn noncons_matrix(&self, q: &State, dir: usize) -> [State; NVARS] {
        let u = self.velocity(q);
        let rho = self.density(q[0]);
        let mut phi = [[0.0; NVARS]; NVARS];
        phi[0][1 + dir] = q[0];
        for a in 0..3 {
            phi[1 + a][1 + a] = 0.5 * rho * u[dir];
        }
        phi[1 + dir][4] = self.bulk();
        phi
    }

    /// Viscous flux columns `fv[dir][row]` from entropy-variable gradients.
    pub fn viscous_flux(&self, c: f64, g: &Grad) -> [State; 3] {
        let m0 = self.mobility();
        let eta = self.viscosity(c);
        let mut fv = [[0.0; NVARS]; 3];
        for d in 0..3 {
            fv[d][0] = m0 * g[0][d];
            for a in 0..3 {
                fv[d][1 + a] = eta * (g[1 + a][d] + g[1 + d][a]);
            }
        }
        fv
    }

    /// Viscous dissipation density `M0 |grad mu|^2 + 2 eta S:S`.
    pub fn dissipation(&self, c: f64, g: &Grad) -> f64 {
        let eta = self.viscosity(c);
        let mut ss = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let s = 0.5 * (g[1 + a][b] + g[1 + b][a]);
                ss += s * s;
            }
        }
        self.mobility() * dot(&g[0], &g[0]) + 2.0 * eta * ss
    }

    pub fn source(&self, q: &State) -> State {
        let rho = self.density(q[0]);
        [0.0, rho * self.gravity[0], rho * self.gravity[1], rho * self.gravity[2], 0.0]
    }

    /// Mathematical entropy density.
    pub fn entropy_density(&self, q: &State, gc: &Vec3) -> f64 {
        let kin = 0.5 * (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        self.free_energy(q[0], gc) + kin + q[4] * q[4] / (2.0 * self.bulk())
    }

    /// Inviscid entropy flux `(1/2 rho |v|^2 + p + mu c) u`.
    pub fn entropy_flux(&self, q: &State, mu: f64) -> Vec3 {
        let u = self.velocity(q);
        let kin = 0.5 * (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        let s = kin + q[4] + mu * q[0];
        [s * u[0], s * u[1], s * u[2]]
    }

    /// Builds the conservative state from primitive values.
    pub fn state_from_primitive(&self, c: f64, u: Vec3, p: f64) -> State {
        let s = self.sqrt_density(c);
        [c, s * u[0], s * u[1], s * u[2], p]
    }
}

pub fn clamp_c(c: f64) -> f64 {
    c.clamp(0.0, 1.0)
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> PhysParams {
        PhysParams {
            rho1: 1000.0,
            rho2: 1.0,
            eta1: 1e-3,
            eta2: 1e-4,
            epsilon: 0.75,
            t_ch: 10.0,
            c0_sq: 100.0,
            sigma: 1.0,
            gravity: [0.0, -0.98, 0.0],
            theta_w_deg: 60.0,
        }
    }

    #[test]
    fn density_cutoff() {
        let p = params();
        assert_eq!(p.density(-0.2), 1.0);
        assert_eq!(p.density(1.3), 1000.0);
        assert!((p.density(0.5) - 500.5).abs() < 1e-12);
        assert!((p.viscosity(2.0) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn x_flux_example() {
        let p = PhysParams { rho1: 2.0, ..params() };
        let q = p.state_from_primitive(1.0, [1.0, 0.0, 0.0], 0.0);
        let f = p.inviscid_flux(&q, 0);
        assert_eq!(f, [1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn validate_rejects() {
        let mut p = params();
        p.epsilon = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.eta1 = -1.0;
        assert!(p.validate().is_err());
        assert!(params().validate().is_ok());
    }

    #[test]
    fn free_energy_derivatives_match_fd() {
        let p = params();
        for &c in &[-0.3, 0.1, 0.5, 0.77, 1.2] {
            let h = 1e-6;
            let fd = (p.f0(c + h) - p.f0(c - h)) / (2.0 * h);
            assert!((fd - p.f0_prime(c)).abs() < 1e-6 * (1.0 + fd.abs()));
            let fd2 = (p.f0_prime(c + h) - p.f0_prime(c - h)) / (2.0 * h);
            assert!((fd2 - p.f0_second(c)).abs() < 1e-5 * (1.0 + fd2.abs()));
            let fdw = (p.fw(c + h) - p.fw(c - h)) / (2.0 * h);
            assert!((fdw - p.fw_prime(c)).abs() < 1e-7);
        }
    }

    fn arb_state() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
        (-0.2f64..1.2, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -5.0f64..5.0)
    }

    proptest! {
        #[test]
        fn contraction_holds((c, u, v, w, pr) in arb_state(), mu in -10.0f64..10.0, dir in 0usize..3) {
            let p = params();
            let q = p.state_from_primitive(c, [u, v, w], pr);
            let wv = p.entropy_vars(&q, mu);
            let f = p.inviscid_flux(&q, dir);
            let phi = p.noncons_matrix(&q, dir);
            for m in 0..NVARS {
                let lhs = f[m];
                let rhs: f64 = (0..NVARS).map(|r| wv[r] * phi[m][r]).sum();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn density_in_range(c in -5.0f64..5.0) {
            let p = params();
            let r = p.density(c);
            prop_assert!(r >= 1.0 && r <= 1000.0);
        }

        #[test]
        fn dissipation_nonnegative(g in proptest::array::uniform5(proptest::array::uniform3(-10.0f64..10.0)), c in -0.5f64..1.5) {
            let p = params();
            prop_assert!(p.dissipation(c, &g) >= 0.0);
        }

        #[test]
        fn viscous_flux_contraction_is_dissipation(g in proptest::array::uniform5(proptest::array::uniform3(-10.0f64..10.0)), c in 0.0f64..1.0) {
            // sum_d grad(w)_d . fv_d equals the dissipation density
            let p = params();
            let fv = p.viscous_flux(c, &g);
            let mut s = 0.0;
            for d in 0..3 {
                for m in 0..NVARS {
                    s += g[m][d] * fv[d][m];
                }
            }
            let diss = p.dissipation(c, &g);
            prop_assert!((s - diss).abs() <= 1e-10 * (1.0 + diss));
        }
    }
}
