//! Exponential approach to the far-field constant outside the training window.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AnnihilatorError;

pub const DEFAULT_PROBE_MULTIPLIER: f64 = 10.0;
pub const DEFAULT_GRID: usize = 2001;
/// Deviations at or below this are treated as converged.
pub const DEVIATION_FLOOR: f64 = 1e-12;

/// Log-linear fit of `|f(x) − f∞|` against the distance past the border.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// `f` at the far end of the probe.
    pub far_value: f64,
    /// Decay rate; `+∞` when the probe is constant.
    #[serde(with = "float_or_inf")]
    pub kappa: f64,
    /// Intercept of the log fit, `log C`.
    #[serde(with = "float_or_inf")]
    pub log_c: f64,
    pub r2: f64,
    /// Points entering the fit.
    pub n_fit: usize,
    /// Every deviation on the probe was below the floor.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationProfile {
    pub left: TailFit,
    pub right: TailFit,
    pub domain: (f64, f64),
    pub probe_multiplier: f64,
    pub grid: usize,
}

impl SaturationProfile {
    /// Smallest r² over sides that have a fit.
    pub fn fit_r2(&self) -> f64 {
        [&self.left, &self.right]
            .iter()
            .filter(|t| !t.constant)
            .map(|t| t.r2)
            .fold(1.0, f64::min)
    }
}

/// Ordinary least squares `y ≈ a + b t`; returns `(a, b, r²)`.
fn line_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        stt += (a - mt) * (a - mt);
        sty += (a - mt) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = my - slope * mt;
    let r2 = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    (intercept, slope, r2)
}

/// Fits one side. `points` are `(distance past border, f)` ordered by distance.
fn tail_fit(points: &[(f64, f64)]) -> TailFit {
    let far_value = points.last().expect("non-empty probe").1;
    let (t, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|&(d, v)| {
            let dev = (v - far_value).abs();
            (dev > DEVIATION_FLOOR).then(|| (d, dev.ln()))
        })
        .unzip();
    if t.len() < 2 {
        return TailFit {
            far_value,
            kappa: f64::INFINITY,
            log_c: f64::NEG_INFINITY,
            r2: 1.0,
            n_fit: t.len(),
            constant: true,
        };
    }
    let (log_c, slope, r2) = line_fit(&t, &y);
    TailFit {
        far_value,
        kappa: -slope,
        log_c,
        r2,
        n_fit: t.len(),
        constant: false,
    }
}

/// Probes `f` on `[b, b + m(b − a)]` and `[a − m(b − a), a]` with `grid`
/// points per side.
pub fn saturation_profile(
    f: &impl Fn(f64) -> f64,
    domain: (f64, f64),
    probe_multiplier: f64,
    grid: usize,
) -> Result<SaturationProfile, AnnihilatorError> {
    let (a, b) = domain;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(AnnihilatorError::Invalid(format!("invalid domain [{a}, {b}]")));
    }
    if !(probe_multiplier > 1.0 && probe_multiplier.is_finite()) {
        return Err(AnnihilatorError::Invalid(format!(
            "probe multiplier must exceed 1, got {probe_multiplier}"
        )));
    }
    if grid < 3 {
        return Err(AnnihilatorError::Invalid(format!("probe grid needs at least 3 points, got {grid}")));
    }
    let reach = probe_multiplier * (b - a);
    let side = |sign: f64, border: f64| -> Vec<(f64, f64)> {
        (0..grid)
            .map(|i| {
                let d = reach * i as f64 / (grid - 1) as f64;
                (d, f(border + sign * d))
            })
            .collect()
    };
    Ok(SaturationProfile {
        left: tail_fit(&side(-1.0, a)),
        right: tail_fit(&side(1.0, b)),
        domain,
        probe_multiplier,
        grid,
    })
}

/// Serializes infinities as the strings `"inf"` / `"-inf"`.
pub(crate) mod float_or_inf {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}
