//! Time integration: low-storage explicit RK3 and IMEX BDF1/BDF2 with the
//! fourth-order Cahn-Hilliard term treated implicitly.

use crate::dg::{check_finite, DgOperator, Workspace};
use crate::error::{Error, Result};
use crate::physics::State;
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Integrator {
    Rk3,
    Imex { order: usize },
}

/// Williamson low-storage coefficients.
pub const RK3_A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
pub const RK3_B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];
pub const RK3_C: [f64; 3] = [0.0, 1.0 / 3.0, 3.0 / 4.0];

/// IMEX BDF coefficients of order `order`: `gamma0`, weights of `y^n, y^{n-1}` in
/// `y_hat` and in the extrapolant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdfCoefficients {
    pub gamma0: f64,
    pub hat: [f64; 2],
    pub extrap: [f64; 2],
}

impl BdfCoefficients {
    pub fn new(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self { gamma0: 1.0, hat: [1.0, 0.0], extrap: [1.0, 0.0] }),
            2 => Ok(Self { gamma0: 1.5, hat: [2.0, -0.5], extrap: [2.0, -1.0] }),
            _ => Err(Error::Config(format!("IMEX BDF order must be 1 or 2, got {order}"))),
        }
    }
}

/// IMEX BDF on `y' = li y + le y`: `li` implicit, `le` explicit.
pub fn imex_scalar(li: f64, le: f64, y0: f64, dt: f64, steps: usize, order: usize) -> Result<f64> {
    let mut prev = y0;
    let mut y = y0;
    for n in 0..steps {
        let k = BdfCoefficients::new(if n == 0 { 1 } else { order })?;
        let hat = k.hat[0] * y + k.hat[1] * prev;
        let ext = k.extrap[0] * y + k.extrap[1] * prev;
        let next = (hat / dt + le * ext) / (k.gamma0 / dt - li);
        prev = y;
        y = next;
    }
    Ok(y)
}

/// Largest concentration system the dense implicit solver accepts.
// TODO: sparse factorization for larger systems.
pub const MAX_IMPLICIT_DOFS: usize = 20_000;

/// Dense LU of `(gamma0/dt) I + B`, with `B` the linear Cahn-Hilliard operator.
/// On extruded two-dimensional meshes the unknowns are restricted to one z layer.
pub struct ImplicitOperator {
    pub gamma0: f64,
    pub dt: f64,
    /// Reduced index of every global node, and the representative global node of each unknown.
    reduce: Option<(Vec<usize>, Vec<usize>)>,
    n: usize,
    matrix: Option<Mat<f64>>,
    lu: PartialPivLu<f64>,
}

impl ImplicitOperator {
    pub fn assemble(op: &DgOperator, gamma0: f64, dt: f64, keep_matrix: bool) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config("time step must be positive".into()));
        }
        let mesh = &op.mesh;
        let total = mesh.n_nodes();
        let reduce = if mesh.extruded {
            let nxy = (mesh.degrees[0] + 1) * (mesh.degrees[1] + 1);
            let map: Vec<usize> = (0..total).map(|g| (g / mesh.np) * nxy + (g % mesh.np) % nxy).collect();
            let reps: Vec<usize> = (0..mesh.n_elem * nxy).map(|r| (r / nxy) * mesh.np + r % nxy).collect();
            Some((map, reps))
        } else {
            None
        };
        let n = reduce.as_ref().map_or(total, |r| r.1.len());
        if n > MAX_IMPLICIT_DOFS {
            return Err(Error::Config(format!(
                "implicit operator has {n} unknowns, above the dense-solver limit of {MAX_IMPLICIT_DOFS}; use the rk3 integrator"
            )));
        }
        let mut a = Mat::<f64>::zeros(n, n);
        let mut ws = op.workspace();
        let mut v = vec![0.0; total];
        let mut out = vec![0.0; total];
        for col in 0..n {
            match &reduce {
                Some((map, _)) => {
                    for (g, &r) in map.iter().enumerate() {
                        v[g] = if r == col { 1.0 } else { 0.0 };
                    }
                }
                None => {
                    v.iter_mut().for_each(|x| *x = 0.0);
                    v[col] = 1.0;
                }
            }
            op.biharmonic(&v, &mut out, &mut ws);
            match &reduce {
                Some((_, reps)) => {
                    for (row, &g) in reps.iter().enumerate() {
                        a[(row, col)] = out[g];
                    }
                }
                None => {
                    for row in 0..n {
                        a[(row, col)] = out[row];
                    }
                }
            }
            a[(col, col)] += gamma0 / dt;
        }
        let lu = a.partial_piv_lu();
        let matrix = if keep_matrix { Some(a) } else { None };
        Ok(Self { gamma0, dt, reduce, n, matrix, lu })
    }

    /// Number of unknowns of the (possibly reduced) system.
    pub fn size(&self) -> usize {
        self.n
    }

    fn restrict(&self, v: &[f64]) -> Mat<f64> {
        match &self.reduce {
            Some((_, reps)) => Mat::from_fn(self.n, 1, |i, _| v[reps[i]]),
            None => Mat::from_fn(self.n, 1, |i, _| v[i]),
        }
    }

    fn prolong(&self, m: &Mat<f64>, out: &mut [f64]) {
        match &self.reduce {
            Some((map, _)) => {
                for (g, &r) in map.iter().enumerate() {
                    out[g] = m[(r, 0)];
                }
            }
            None => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = m[(i, 0)];
                }
            }
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        let mut rhs = self.restrict(b);
        self.lu.solve_in_place(rhs.as_mut());
        self.prolong(&rhs, b);
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite solution of the implicit system".into()));
        }
        Ok(())
    }

    /// Applies the assembled matrix; requires `keep_matrix`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let a = self.matrix.as_ref().ok_or_else(|| Error::Solver("matrix was not kept".into()))?;
        let x = self.restrict(v);
        let y = a * &x;
        self.prolong(&y, out);
        Ok(())
    }
}

/// Time stepper holding the integrator state.
pub struct Stepper {
    pub integrator: Integrator,
    pub dt: f64,
    pub t: f64,
    pub steps: usize,
    pub ws: Workspace,
    prev: Option<Vec<State>>,
    implicit: [Option<ImplicitOperator>; 2],
    scratch: Vec<State>,
}

impl Stepper {
    pub fn new(op: &DgOperator, integrator: Integrator, dt: f64, t0: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if let Integrator::Imex { order } = integrator {
            BdfCoefficients::new(order)?;
        }
        Ok(Self {
            integrator,
            dt,
            t: t0,
            steps: 0,
            ws: op.workspace(),
            prev: None,
            implicit: [None, None],
            scratch: vec![[0.0; 5]; op.n_nodes()],
        })
    }

    /// Restores a BDF history, e.g. after reading a restart file.
    pub fn set_history(&mut self, prev: Vec<State>, steps: usize) {
        self.prev = Some(prev);
        self.steps = steps;
    }

    pub fn history(&self) -> Option<&[State]> {
        self.prev.as_deref()
    }

    pub fn step(&mut self, op: &DgOperator, q: &mut [State]) -> Result<()> {
        match self.integrator {
            Integrator::Rk3 => self.rk3(op, q)?,
            Integrator::Imex { order } => {
                let j = if self.prev.is_none() { 1 } else { order };
                self.imex(op, q, j)?;
            }
        }
        self.steps += 1;
        self.t += self.dt;
        check_finite("q", q, self.t)
    }

    fn rk3(&mut self, op: &DgOperator, q: &mut [State]) -> Result<()> {
        let dt = self.dt;
        self.scratch.iter_mut().for_each(|s| *s = [0.0; 5]);
        for k in 0..3 {
            op.checked_residual(q, self.t + RK3_C[k] * dt, &mut self.ws)?;
            for (g, s) in self.scratch.iter_mut().enumerate() {
                let qt = &self.ws.qt[g];
                for m in 0..5 {
                    s[m] = RK3_A[k] * s[m] + qt[m];
                    q[g][m] += RK3_B[k] * dt * s[m];
                }
            }
        }
        Ok(())
    }

    /// One IMEX BDF step of order `j`; order 2 needs the previous state.
    pub fn imex(&mut self, op: &DgOperator, q: &mut [State], j: usize) -> Result<()> {
        let k = BdfCoefficients::new(j)?;
        let dt = self.dt;
        let prev = match (j, &self.prev) {
            (2, None) => return Err(Error::HistoryNotInitialized),
            (_, Some(p)) => p.clone(),
            (_, None) => q.to_vec(),
        };
        if self.implicit[j - 1].is_none() {
            self.implicit[j - 1] = Some(ImplicitOperator::assemble(op, k.gamma0, dt, false)?);
        }
        if j == 2 {
            self.implicit[0] = None;
        }
        let n = q.len();
        for g in 0..n {
            for m in 0..5 {
                self.scratch[g][m] = k.extrap[0] * q[g][m] + k.extrap[1] * prev[g][m];
            }
        }
        let t_new = self.t + dt;
        op.checked_residual(&self.scratch, t_new, &mut self.ws)?;
        let ce: Vec<f64> = self.scratch.iter().map(|s| s[0]).collect();
        let mut bce = vec![0.0; n];
        op.biharmonic(&ce, &mut bce, &mut self.ws);
        let mut c_new = vec![0.0; n];
        for g in 0..n {
            let hat0 = k.hat[0] * q[g][0] + k.hat[1] * prev[g][0];
            c_new[g] = hat0 / dt + self.ws.qt[g][0] + bce[g];
        }
        self.implicit[j - 1].as_ref().expect("assembled above").solve(&mut c_new)?;
        let old = q.to_vec();
        for g in 0..n {
            for m in 1..5 {
                let hat = k.hat[0] * q[g][m] + k.hat[1] * prev[g][m];
                q[g][m] = (hat + dt * self.ws.qt[g][m]) / k.gamma0;
            }
            q[g][0] = c_new[g];
        }
        self.prev = Some(old);
        Ok(())
    }
}
