//! Fixed-step classical Runge–Kutta integration.

use super::matrix::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};

/// Reusable RK4 stepper for autonomous systems `dx/dt = f(x)`.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<F>(&mut self, f: &mut F, x: &mut [f64], h: f64)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = x.len();
        f(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(&self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Step schedule covering `[0, t_end]`: full steps of `dt`, with a shorter last
/// step when `t_end` is not a multiple of `dt`.
pub fn step_schedule(dt: f64, t_end: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() || !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::StepSizeInvalid { dt, t_end });
    }
    let full = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let mut steps = vec![dt; full];
    let rest = t_end - full as f64 * dt;
    if rest > dt * 1e-9 {
        steps.push(rest);
    }
    Ok(steps)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DenseVector>,
}

impl Trajectory {
    pub fn last(&self) -> &DenseVector {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Integrates `dx/dt = A x + b` from `x0` over `[0, t_end]` with RK4.
pub fn integrate_linear_ode(
    a: &DenseMatrix,
    b: &DenseVector,
    x0: &DenseVector,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    let n = x0.len();
    if a.shape() != (n, n) || b.len() != n {
        return Err(Error::dims(format!(
            "A is {:?}, b has {}, x0 has {n}",
            a.shape(),
            b.len()
        )));
    }
    let steps = step_schedule(dt, t_end)?;
    let mut f = |x: &[f64], dx: &mut [f64]| {
        for (i, d) in dx.iter_mut().enumerate() {
            *d = b[i] + a.row(i).iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        }
    };
    let mut rk = Rk4::new(n);
    let mut x = x0.as_slice().to_vec();
    let mut t = 0.0;
    let mut times = Vec::with_capacity(steps.len() + 1);
    let mut states = Vec::with_capacity(steps.len() + 1);
    times.push(0.0);
    states.push(x0.clone());
    for h in steps {
        rk.step(&mut f, &mut x, h);
        t += h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable {
                time: t,
                norm: f64::INFINITY,
            });
        }
        times.push(t);
        states.push(DenseVector::from(x.clone()));
    }
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_decay() {
        let a = DenseMatrix::from_rows(&[[-1.0]]).unwrap();
        let tr = integrate_linear_ode(&a, &vec![0.0].into(), &vec![1.0].into(), 0.01, 1.0).unwrap();
        assert!((tr.last()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert!((tr.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_integrator() {
        let a = DenseMatrix::from_rows(&[[0.0]]).unwrap();
        let tr = integrate_linear_ode(&a, &vec![2.0].into(), &vec![0.0].into(), 0.1, 3.0).unwrap();
        assert!((tr.last()[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn partial_last_step() {
        let s = step_schedule(0.3, 1.0).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_steps_rejected() {
        assert!(step_schedule(0.0, 1.0).is_err());
        assert!(step_schedule(-1.0, 1.0).is_err());
        assert!(step_schedule(2.0, 1.0).is_err());
    }

    #[test]
    fn divergence_is_unstable() {
        let a = DenseMatrix::from_rows(&[[1e3]]).unwrap();
        let err = integrate_linear_ode(&a, &vec![0.0].into(), &vec![1.0].into(), 1.0, 100.0)
            .unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }
}
