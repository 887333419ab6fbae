use crate::error::{Error, Result};
use crate::gridfn::{AnalyticFn1D, Interval};

/// Flow of the complete vector field `a(x) d/dx`, integrated by fixed-step RK4.
#[derive(Clone, Debug)]
pub struct FlowField {
    a: AnalyticFn1D,
    h: f64,
    t_max: f64,
    exact: Option<f64>,
    domain: Interval,
}

impl FlowField {
    /// Requires `a` to be bounded on the line (completeness guard).
    pub fn new(a: AnalyticFn1D, h: f64, t_max: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite() && t_max > 0.0) {
            return Err(Error::invalid(format!("bad flow parameters h = {h}, t_max = {t_max}")));
        }
        if a.bound_on(Interval::REAL_LINE).is_none() {
            return Err(Error::invalid(format!("vector field {} is not bounded, so its flow may not be complete", a.describe())));
        }
        let exact = a.as_constant();
        Ok(FlowField { a, h, t_max, exact, domain: Interval::REAL_LINE })
    }

    /// Flow of a field only known to be bounded on `domain`; trajectories
    /// leaving `domain` raise [`Error::FlowEscaped`].
    pub fn local(a: AnalyticFn1D, h: f64, t_max: f64, domain: Interval) -> Result<Self> {
        if !(h > 0.0 && h.is_finite() && t_max > 0.0) {
            return Err(Error::invalid(format!("bad flow parameters h = {h}, t_max = {t_max}")));
        }
        if a.bound_on(domain).is_none() {
            return Err(Error::invalid(format!("vector field {} is not bounded on {domain}", a.describe())));
        }
        let exact = a.as_constant();
        Ok(FlowField { a, h, t_max, exact, domain })
    }

    /// `d/dx`, flowing by exact translation.
    pub fn translation(t_max: f64) -> Self {
        FlowField { a: AnalyticFn1D::constant(1.0), h: 1e-3, t_max, exact: Some(1.0), domain: Interval::REAL_LINE }
    }

    pub fn field(&self) -> &AnalyticFn1D {
        &self.a
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Constant speed, if the field is constant.
    pub fn constant_speed(&self) -> Option<f64> {
        self.exact
    }

    pub fn is_translation(&self) -> bool {
        self.exact == Some(1.0)
    }

    pub fn eval_field(&self, x: f64) -> f64 {
        self.a.eval(x)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.abs() > self.t_max * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("flow time {t} exceeds t_max = {}", self.t_max)));
        }
        Ok(())
    }

    fn rk4(&self, x: f64, h: f64) -> f64 {
        let k1 = self.a.eval(x);
        let k2 = self.a.eval(x + 0.5 * h * k1);
        let k3 = self.a.eval(x + 0.5 * h * k2);
        let k4 = self.a.eval(x + h * k3);
        x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// `Phi_t(x)`; `Phi_0` is the identity.
    pub fn flow(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        if t == 0.0 {
            return Ok(x);
        }
        if let Some(c) = self.exact {
            return Ok(x + c * t);
        }
        let n = (t.abs() / self.h).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let mut y = x;
        for _ in 0..n {
            y = self.rk4(y, h);
            if !self.domain.contains(y) {
                return Err(Error::FlowEscaped { t, x });
            }
        }
        if !y.is_finite() {
            return Err(Error::FlowEscaped { t, x });
        }
        Ok(y)
    }

    /// `Phi_{k dt}(x)` for `k = k_lo..=k_hi` (`k_lo <= 0 <= k_hi`).
    pub fn orbit(&self, x: f64, dt: f64, k_lo: isize, k_hi: isize) -> Result<Vec<f64>> {
        assert!(k_lo <= 0 && 0 <= k_hi);
        self.check_time(k_lo as f64 * dt)?;
        self.check_time(k_hi as f64 * dt)?;
        let len = (k_hi - k_lo + 1) as usize;
        if let Some(c) = self.exact {
            return Ok((k_lo..=k_hi).map(|k| x + c * k as f64 * dt).collect());
        }
        let sub = (dt.abs() / self.h).ceil().max(1.0) as usize;
        let mut out = vec![0.0; len];
        let zero = (-k_lo) as usize;
        out[zero] = x;
        for (dir, count) in [(1.0, k_hi as usize), (-1.0, (-k_lo) as usize)] {
            let h = dir * dt / sub as f64;
            let mut y = x;
            for step in 1..=count {
                for _ in 0..sub {
                    y = self.rk4(y, h);
                }
                if !y.is_finite() || !self.domain.contains(y) {
                    return Err(Error::FlowEscaped { t: dir * step as f64 * dt, x });
                }
                let idx = if dir > 0.0 { zero + step } else { zero - step };
                out[idx] = y;
            }
        }
        Ok(out)
    }

    /// `d/dt Phi_t(x)` by a 4th-order difference in `t`.
    pub fn time_derivative(&self, t: f64, x: f64) -> Result<f64> {
        if let Some(c) = self.exact {
            return Ok(c);
        }
        let e = 1e-3;
        let f = |s: f64| self.flow(t + s, x);
        Ok((-f(2.0 * e)? + 8.0 * f(e)? - 8.0 * f(-e)? + f(-2.0 * e)?) / (12.0 * e))
    }
}
