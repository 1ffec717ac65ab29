//! Geodesics: fixed-step RK4 on `x' = y, y' = −2G(x, y)`.

use std::io::{self, Write};

use exprlang::evaluate;

use crate::manifold::{GeometrySpec, TangentPoint};
use crate::spraycore::{Engine, EngineOptions};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub enum Exit {
    /// `x` left the domain box.
    LeftDomain { t: f64 },
    /// `|y|` left `[r_min/10, 10·r_max]`.
    Speed { t: f64, norm: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub method: &'static str,
    pub steps: usize,
    pub exit: Option<Exit>,
}

impl Trajectory {
    pub fn end(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds its initial state")
    }
}

fn rhs(engine: &Engine, x: &[f64], y: &[f64]) -> Result<Vec<f64>, Error> {
    let g = engine.spray_values(&TangentPoint::new(x.to_vec(), y.to_vec()))?;
    Ok(g.iter().map(|v| -2.0 * v).collect())
}

fn axpy(a: &[f64], h: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + h * q).collect()
}

pub fn integrate_geodesic(spec: &GeometrySpec, x0: &[f64], y0: &[f64], t_end: f64, steps: usize) -> Result<Trajectory, Error> {
    let n = spec.n;
    if x0.len() != n || y0.len() != n {
        return Err(Error::InvalidField { field: "x0/y0".into(), msg: format!("expected {n} components") });
    }
    if steps == 0 {
        return Err(Error::InvalidField { field: "steps".into(), msg: "must be at least 1".into() });
    }
    if y0.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidField { field: "y0".into(), msg: "initial velocity is zero".into() });
    }
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::InvalidField { field: "t".into(), msg: format!("end time must be positive (got {t_end})") });
    }
    let engine = Engine::new(spec, EngineOptions { g_order: 0, ..Default::default() })?;
    let (rmin, rmax) = spec.domain.y_annulus;
    let (lo, hi) = (rmin / 10.0, 10.0 * rmax);
    let h = t_end / steps as f64;
    let mut out = Trajectory { samples: vec![Sample { t: 0.0, x: x0.to_vec(), y: y0.to_vec() }], method: "rk4", steps: 0, exit: None };
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    for k in 1..=steps {
        let a1 = rhs(&engine, &x, &y)?;
        let (x2, y2) = (axpy(&x, h / 2.0, &y), axpy(&y, h / 2.0, &a1));
        let a2 = rhs(&engine, &x2, &y2)?;
        let (x3, y3) = (axpy(&x, h / 2.0, &y2), axpy(&y, h / 2.0, &a2));
        let a3 = rhs(&engine, &x3, &y3)?;
        let (x4, y4) = (axpy(&x, h, &y3), axpy(&y, h, &a3));
        let a4 = rhs(&engine, &x4, &y4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (y[i] + 2.0 * y2[i] + 2.0 * y3[i] + y4[i]);
            y[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        let t = k as f64 * h;
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!("non-finite state at t = {t}")));
        }
        out.samples.push(Sample { t, x: x.clone(), y: y.clone() });
        out.steps = k;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !spec.domain.contains(&x) {
            out.exit = Some(Exit::LeftDomain { t });
            break;
        }
        if norm < lo || norm > hi {
            out.exit = Some(Exit::Speed { t, norm });
            break;
        }
    }
    Ok(out)
}

/// `F` along the trajectory, or `None` for a bare spray.
fn finsler_values(spec: &GeometrySpec, traj: &Trajectory) -> Result<Option<Vec<f64>>, Error> {
    let Some(f) = spec.finsler_function() else { return Ok(None) };
    traj.samples
        .iter()
        .map(|s| evaluate(f, &s.x, &s.y).map_err(|source| Error::Eval { point: TangentPoint::new(s.x.clone(), s.y.clone()), source }))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conservation {
    /// `max_t |E(t) − E(0)| / |E(0)|`
    pub energy_drift: f64,
    pub f_drift: f64,
}

pub fn conservation_report(spec: &GeometrySpec, traj: &Trajectory) -> Result<Conservation, Error> {
    let f = finsler_values(spec, traj)?.ok_or(Error::NotFinsler("conservation along geodesics"))?;
    let drift = |vals: &[f64]| {
        let v0 = vals[0];
        vals.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max) / v0.abs()
    };
    let e: Vec<f64> = f.iter().map(|v| 0.5 * v * v).collect();
    Ok(Conservation { energy_drift: drift(&e), f_drift: drift(&f) })
}

/// `t,x1..xn,y1..yn,E,F`; E and F are left empty for a bare spray.
pub fn write_csv(spec: &GeometrySpec, traj: &Trajectory, mut w: impl Write) -> Result<(), Error> {
    let io = |e: io::Error| Error::Integration(format!("writing CSV: {e}"));
    let n = spec.n;
    let mut head = vec!["t".to_string()];
    head.extend((1..=n).map(|i| format!("x{i}")));
    head.extend((1..=n).map(|i| format!("y{i}")));
    head.extend(["E".into(), "F".into()]);
    writeln!(w, "{}", head.join(",")).map_err(io)?;
    let f = finsler_values(spec, traj)?;
    for (k, s) in traj.samples.iter().enumerate() {
        let mut row = vec![format!("{:.16e}", s.t)];
        row.extend(s.x.iter().chain(&s.y).map(|v| format!("{v:.16e}")));
        match &f {
            Some(f) => row.extend([format!("{:.16e}", 0.5 * f[k] * f[k]), format!("{:.16e}", f[k])]),
            None => row.extend([String::new(), String::new()]),
        }
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    Ok(())
}
