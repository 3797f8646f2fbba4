use std::io::Write;

use serde::{Deserialize, Serialize};

use super::VariabilityError;

pub const DEFAULT_GUARD: f64 = 1e6;

/// `y′ = ε₀ + ε₁y + ε₂y²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticClassSpec {
    pub eps: [f64; 3],
}

impl QuadraticClassSpec {
    pub fn rhs(&self, y: f64) -> f64 {
        self.eps[0] + y * (self.eps[1] + y * self.eps[2])
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.eps[0], self.eps[1], self.eps[2])
    }
}

/// All 27 sign patterns `ε ∈ {−1, 0, 1}³`.
pub fn class_lattice() -> Vec<QuadraticClassSpec> {
    let signs = [-1.0, 0.0, 1.0];
    let mut out = Vec::with_capacity(27);
    for &e0 in &signs {
        for &e1 in &signs {
            for &e2 in &signs {
                out.push(QuadraticClassSpec { eps: [e0, e1, e2] });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: usize,
    pub y0: f64,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    /// Estimated time at which `|y|` diverges, when the guard was crossed.
    pub blowup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBundle {
    pub class: QuadraticClassSpec,
    pub step: f64,
    pub guard: f64,
    pub trajectories: Vec<Trajectory>,
}

fn rk4(spec: &QuadraticClassSpec, y: f64, h: f64) -> f64 {
    let k1 = spec.rhs(y);
    let k2 = spec.rhs(y + 0.5 * h * k1);
    let k3 = spec.rhs(y + 0.5 * h * k2);
    let k4 = spec.rhs(y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Fixed-step RK4 from each `y0` over `t_span`. A trajectory stops at the
/// first step leaving `|y| ≤ guard`; the blowup time is then estimated from
/// the last in-range state as `t + 1/(|ε₂|·|y|)`, the remaining lifetime of
/// `y′ ≈ ε₂y²` (just `t` when `ε₂ = 0`).
pub fn integrate_class_trajectories(
    class: QuadraticClassSpec,
    y0s: &[f64],
    t_span: (f64, f64),
    step: f64,
    guard: f64,
) -> Result<TrajectoryBundle, VariabilityError> {
    let (t0, t1) = t_span;
    if !(step > 0.0 && step.is_finite()) {
        return Err(VariabilityError::Invalid(format!("step must be positive, got {step}")));
    }
    if !(t1 > t0 && t0.is_finite() && t1.is_finite()) {
        return Err(VariabilityError::Invalid(format!("invalid time span [{t0}, {t1}]")));
    }
    if !(guard > 0.0) {
        return Err(VariabilityError::Invalid(format!("guard must be positive, got {guard}")));
    }
    let n_steps = ((t1 - t0) / step).round() as usize;
    let trajectories = y0s
        .iter()
        .enumerate()
        .map(|(id, &y0)| {
            let mut t = vec![t0];
            let mut y = vec![y0];
            let mut blowup = None;
            let mut state = y0;
            for i in 1..=n_steps {
                let next = rk4(&class, state, step);
                if !next.is_finite() || next.abs() > guard {
                    let tc = t0 + step * (i - 1) as f64;
                    let rest = if class.eps[2] != 0.0 && state != 0.0 {
                        1.0 / (class.eps[2].abs() * state.abs())
                    } else {
                        0.0
                    };
                    blowup = Some(tc + rest);
                    break;
                }
                state = next;
                t.push(t0 + step * i as f64);
                y.push(state);
            }
            Trajectory { id, y0, t, y, blowup }
        })
        .collect();
    Ok(TrajectoryBundle {
        class,
        step,
        guard,
        trajectories,
    })
}

/// CSV with header `t,y,trajectory_id`.
pub fn write_trajectories_csv<W: Write>(bundle: &TrajectoryBundle, out: W) -> Result<(), VariabilityError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| VariabilityError::Io(e.to_string());
    w.write_record(["t", "y", "trajectory_id"]).map_err(io)?;
    for tr in &bundle.trajectories {
        for (t, y) in tr.t.iter().zip(&tr.y) {
            w.write_record([t.to_string(), y.to_string(), tr.id.to_string()]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| VariabilityError::Io(e.to_string()))
}
