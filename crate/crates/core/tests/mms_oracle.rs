//! Manufactured source against an independent evaluation of the strong-form
//! operator: space derivatives by nested forward-mode dual numbers, time
//! derivatives by centered differences.

use espdg_core::cases::{manufactured_params, mms};
use espdg_core::physics::PhysParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::{Add, Mul, Neg, Sub};

trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn cst(v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

#[derive(Clone, Copy)]
struct Dual<T> {
    v: T,
    d: T,
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { v: -self.v, d: -self.d }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual { v: T::cst(v), d: T::cst(0.0) }
    }
    fn sin(self) -> Self {
        Dual { v: self.v.sin(), d: self.d * self.v.cos() }
    }
    fn cos(self) -> Self {
        Dual { v: self.v.cos(), d: -(self.d * self.v.sin()) }
    }
}

/// A scalar field of `(x, y)` at fixed time, generic over the number type.
trait Field {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T;
}

/// Partial derivative in direction `dir` (0 = x, 1 = y).
struct D<F>(usize, F);

impl<F: Field> Field for D<F> {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        let seed = |v: T, active: bool| Dual { v, d: T::cst(if active { 1.0 } else { 0.0 }) };
        self.1.eval(seed(x, self.0 == 0), seed(y, self.0 == 1), t).d
    }
}

impl<F: Field> Field for &F {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        (*self).eval(x, y, t)
    }
}

const PI: f64 = std::f64::consts::PI;

struct Conc;
impl Field for Conc {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        let pi = T::cst(PI);
        T::cst(0.5) * (T::cst(1.0) + (pi * x).cos() * (pi * y).cos() * T::cst(t.sin()))
    }
}

/// Velocity component `a`.
struct Vel(usize);
impl Field for Vel {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        let pi = T::cst(PI);
        let s = T::cst(2.0 * t.sin());
        if self.0 == 0 {
            s * (pi * x).sin() * (pi * y).cos()
        } else {
            -(s * (pi * x).cos() * (pi * y).sin())
        }
    }
}

struct Pres;
impl Field for Pres {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        let pi = T::cst(PI);
        T::cst(2.0 * t.cos()) * (pi * x).sin() * (pi * y).sin()
    }
}

fn rho<T: Scalar>(p: &PhysParams, c: T) -> T {
    T::cst(p.rho1) * c + T::cst(p.rho2) * (T::cst(1.0) - c)
}

fn eta<T: Scalar>(p: &PhysParams, c: T) -> T {
    T::cst(p.eta1) * c + T::cst(p.eta2) * (T::cst(1.0) - c)
}

/// Chemical potential `f0'(c) - kappa lap c`.
struct Mu<'a>(&'a PhysParams);
impl Field for Mu<'_> {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        let p = self.0;
        let c = Conc.eval(x, y, t);
        let f0p = T::cst(12.0 * p.sigma / p.epsilon) * (T::cst(2.0) * c - T::cst(6.0) * c * c + T::cst(4.0) * c * c * c);
        let lap = D(0, D(0, Conc)).eval(x, y, t) + D(1, D(1, Conc)).eval(x, y, t);
        f0p - T::cst(p.kappa()) * lap
    }
}

/// `c u_b`.
struct CFlux(usize);
impl Field for CFlux {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        Conc.eval(x, y, t) * Vel(self.0).eval(x, y, t)
    }
}

/// `1/2 rho u_b u_a`.
struct MomFlux<'a>(&'a PhysParams, usize, usize);
impl Field for MomFlux<'_> {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        T::cst(0.5) * rho(self.0, Conc.eval(x, y, t)) * Vel(self.2).eval(x, y, t) * Vel(self.1).eval(x, y, t)
    }
}

/// `eta (d_b u_a + d_a u_b)`.
struct Visc<'a>(&'a PhysParams, usize, usize);
impl Field for Visc<'_> {
    fn eval<T: Scalar>(&self, x: T, y: T, t: f64) -> T {
        let (a, b) = (self.1, self.2);
        eta(self.0, Conc.eval(x, y, t)) * (D(b, Vel(a)).eval(x, y, t) + D(a, Vel(b)).eval(x, y, t))
    }
}

fn time_derivative(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let h = 1e-5;
    (f(t + h) - f(t - h)) / (2.0 * h)
}

/// Strong-form residual of the exact fields: `(S_c, S_u, S_v, S_w, S_p)`.
fn oracle(p: &PhysParams, x: f64, y: f64, t: f64) -> [f64; 5] {
    let c = Conc.eval(x, y, t);
    let r = rho(p, c);
    let c_t = time_derivative(|s| Conc.eval(x, y, s), t);
    let lap_mu = D(0, D(0, Mu(p))).eval(x, y, t) + D(1, D(1, Mu(p))).eval(x, y, t);
    let s_c = c_t + D(0, CFlux(0)).eval(x, y, t) + D(1, CFlux(1)).eval(x, y, t) - p.mobility() * lap_mu;
    let mut s = [s_c, 0.0, 0.0, 0.0, 0.0];
    for a in 0..2 {
        let mom_t = time_derivative(|s| rho(p, Conc.eval(x, y, s)).sqrt() * Vel(a).eval(x, y, s), t);
        let mut v = r.sqrt() * mom_t;
        for b in 0..2 {
            v += D(b, MomFlux(p, a, b)).eval(x, y, t);
            v += 0.5 * r * Vel(b).eval(x, y, t) * D(b, Vel(a)).eval(x, y, t);
            v -= D(b, Visc(p, a, b)).eval(x, y, t);
        }
        v += c * D(a, Mu(p)).eval(x, y, t) + D(a, Pres).eval(x, y, t);
        s[1 + a] = v;
    }
    let div = D(0, Vel(0)).eval(x, y, t) + D(1, Vel(1)).eval(x, y, t);
    s[4] = time_derivative(|s| Pres.eval(x, y, s), t) + p.bulk() * div;
    s
}

#[test]
fn manufactured_source_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for p in [manufactured_params(), {
        let mut q = manufactured_params();
        q.rho2 = 5.0;
        q.eta2 = 3e-2;
        q.t_ch = 1.0;
        q
    }] {
        for _ in 0..20 {
            let (x, y, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.05..1.0));
            let hard = mms::source(&p, x, y, t);
            let ora = oracle(&p, x, y, t);
            let scale = ora.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for m in 0..5 {
                let err = (hard[m] - ora[m]).abs();
                assert!(err <= 1e-6 * scale.max(ora[m].abs()), "var {m} at ({x}, {y}, {t}): {} vs {}", hard[m], ora[m]);
            }
        }
    }
}

#[test]
fn dual_numbers_differentiate_exactly() {
    // d^4/dx^4 cos(pi x) = pi^4 cos(pi x)
    let x = 0.3;
    let d4 = D(0, D(0, D(0, D(0, Conc)))).eval(x, 0.0, std::f64::consts::FRAC_PI_2);
    let expect = 0.5 * PI.powi(4) * (PI * x).cos();
    assert!((d4 - expect).abs() < 1e-10 * expect.abs());
}
