//! Finite-dimensional parameterisations of the coupling `g(t)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::TimeGrid;
use crate::error::{Error, Result};
use crate::propagator::Coupling;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Values at `knots` equally spaced points, linear in between.
    PiecewiseLinear { knots: usize },
    /// `Σ_m a_m sin(m π (t - t0)/(t1 - t0))`, `m = 1..=harmonics`.
    FourierSine { harmonics: usize },
}

impl Basis {
    pub fn dimension(&self) -> usize {
        match *self {
            Basis::PiecewiseLinear { knots } => knots,
            Basis::FourierSine { harmonics } => harmonics,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Basis::PiecewiseLinear { .. } => "piecewise_linear",
            Basis::FourierSine { .. } => "fourier_sine",
        }
    }

    /// Parses `piecewise_linear` or `fourier_sine` with the given size.
    pub fn from_name(name: &str, size: usize) -> Result<Self> {
        let basis = match name {
            "piecewise_linear" | "pwl" => Basis::PiecewiseLinear { knots: size },
            "fourier_sine" | "fourier" => Basis::FourierSine { harmonics: size },
            other => return Err(Error::Parse(format!("unknown basis `{other}`"))),
        };
        basis.validate()?;
        Ok(basis)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Basis::PiecewiseLinear { knots } if knots < 2 => {
                Err(Error::invalid("knots", format!("need at least 2, got {knots}")))
            }
            Basis::FourierSine { harmonics } if harmonics < 1 => {
                Err(Error::invalid("harmonics", "need at least 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub basis: Basis,
    pub coefficients: Vec<f64>,
    pub span: (f64, f64),
    pub bound: f64,
    /// Holds the first knot at zero (piecewise-linear only).
    pub pin_start: bool,
}

/// Knot `i` of `knots` evenly spaced over `span`; the last one is the span end.
fn knot_time(span: (f64, f64), knots: usize, i: usize) -> f64 {
    if i + 1 == knots {
        span.1
    } else {
        span.0 + (span.1 - span.0) / (knots - 1) as f64 * i as f64
    }
}

/// Slack allowed on the bound when checking evaluated values.
const BOUND_SLACK: f64 = 1e-12;

impl Waveform {
    pub fn zeros(basis: Basis, span: (f64, f64), bound: f64, pin_start: bool) -> Result<Self> {
        basis.validate()?;
        if !(span.1 > span.0) || !span.0.is_finite() || !span.1.is_finite() {
            return Err(Error::invalid("span", format!("need t_start < t_end, got {span:?}")));
        }
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::invalid("g_max", format!("must be >= 0, got {bound}")));
        }
        Ok(Waveform {
            basis,
            coefficients: vec![0.0; basis.dimension()],
            span,
            bound,
            pin_start: pin_start && matches!(basis, Basis::PiecewiseLinear { .. }),
        })
    }

    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != self.basis.dimension() {
            return Err(Error::invalid(
                "coefficients",
                format!("expected {}, got {}", self.basis.dimension(), coefficients.len()),
            ));
        }
        Ok(Waveform {
            coefficients,
            ..self.clone()
        })
    }

    /// Coefficient indices the optimizer may move.
    pub fn free_indices(&self) -> std::ops::Range<usize> {
        let first = usize::from(self.pin_start);
        first..self.coefficients.len()
    }

    /// Knot times of a piecewise-linear waveform.
    pub fn knot_times(&self) -> Vec<f64> {
        match self.basis {
            Basis::PiecewiseLinear { knots } => {
                (0..knots).map(|i| knot_time(self.span, knots, i)).collect()
            }
            Basis::FourierSine { .. } => Vec::new(),
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let (t0, t1) = self.span;
        if !(t >= t0 && t <= t1) {
            return 0.0;
        }
        let c = &self.coefficients;
        match self.basis {
            Basis::PiecewiseLinear { knots } => {
                let h = (t1 - t0) / (knots - 1) as f64;
                let x = (t - t0) / h;
                let nearest = (x.round() as usize).min(knots - 1);
                // knot times are formed as in `knot_times`, so hits are exact
                if t == knot_time(self.span, knots, nearest) {
                    return c[nearest];
                }
                let i = (x.floor() as usize).min(knots - 2);
                let f = (x - i as f64).clamp(0.0, 1.0);
                c[i] + f * (c[i + 1] - c[i])
            }
            Basis::FourierSine { .. } => {
                let phase = std::f64::consts::PI * (t - t0) / (t1 - t0);
                c.iter()
                    .enumerate()
                    .map(|(m, a)| a * (phase * (m + 1) as f64).sin())
                    .sum()
            }
        }
    }

    /// Clamps coefficients into the bound box and re-applies the pin.
    pub fn project(&mut self) {
        for c in &mut self.coefficients {
            *c = c.clamp(-self.bound, self.bound);
        }
        if self.pin_start {
            self.coefficients[0] = 0.0;
        }
    }

    /// Checks `|g| <= bound` at every grid point and the pin. Fourier waveforms
    /// are never clipped; an excursion makes them infeasible.
    pub fn check_feasible(&self, grid: &TimeGrid<f64>) -> Result<()> {
        if let Some((i, c)) = self.coefficients.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(Error::InfeasibleWaveform(format!("coefficient {i} is {c}")));
        }
        if self.pin_start && self.coefficients[0] != 0.0 {
            return Err(Error::InfeasibleWaveform(format!(
                "pinned start is {}",
                self.coefficients[0]
            )));
        }
        let limit = self.bound * (1.0 + BOUND_SLACK) + BOUND_SLACK;
        match self.basis {
            Basis::PiecewiseLinear { .. } => {
                if let Some((i, c)) = self.coefficients.iter().enumerate().find(|(_, c)| c.abs() > limit) {
                    return Err(Error::InfeasibleWaveform(format!(
                        "knot {i} has |g| = {} > {}",
                        c.abs(),
                        self.bound
                    )));
                }
            }
            Basis::FourierSine { .. } => {
                for j in 0..=grid.n_steps {
                    let t = grid.time(j);
                    let g = self.evaluate(t);
                    if g.abs() > limit {
                        return Err(Error::InfeasibleWaveform(format!(
                            "|g({t})| = {} exceeds {}",
                            g.abs(),
                            self.bound
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Same shape moved by `offset` in time.
    pub fn shifted(&self, offset: f64) -> Self {
        Waveform {
            span: (self.span.0 + offset, self.span.1 + offset),
            ..self.clone()
        }
    }

    /// Self-describing text block that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "basis = {}", self.basis.name());
        let _ = writeln!(s, "size = {}", self.basis.dimension());
        let _ = writeln!(s, "span = {} {}", self.span.0, self.span.1);
        let _ = writeln!(s, "bound = {}", self.bound);
        let _ = writeln!(s, "pin_start = {}", self.pin_start);
        let coeffs: Vec<String> = self.coefficients.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "coefficients = {}", coeffs.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("waveform line {}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            if !matches!(k, "basis" | "size" | "span" | "bound" | "pin_start" | "coefficients") {
                return Err(Error::Parse(format!("waveform line {}: unknown key `{k}`", n + 1)));
            }
            if fields.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("waveform key `{k}` repeated")));
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Parse(format!("waveform key `{k}` missing")))
        };
        let num = |k: &str, s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("waveform key `{k}`: bad number `{s}`")))
        };
        let size: usize = get("size")?
            .parse()
            .map_err(|_| Error::Parse("waveform key `size`: not an integer".into()))?;
        let basis = Basis::from_name(get("basis")?, size)?;
        let span: Vec<f64> = get("span")?
            .split_whitespace()
            .map(|s| num("span", s))
            .collect::<Result<_>>()?;
        if span.len() != 2 {
            return Err(Error::Parse("waveform key `span`: expected two numbers".into()));
        }
        let bound = num("bound", get("bound")?)?;
        let pin_start = match get("pin_start")? {
            "true" => true,
            "false" => false,
            other => return Err(Error::Parse(format!("waveform key `pin_start`: bad flag `{other}`"))),
        };
        let coefficients: Vec<f64> = get("coefficients")?
            .split_whitespace()
            .map(|s| num("coefficients", s))
            .collect::<Result<_>>()?;
        Waveform::zeros(basis, (span[0], span[1]), bound, pin_start)?.with_coefficients(coefficients)
    }

    /// `t,g` rows on the grid points that fall inside `[0, grid end]`.
    pub fn to_csv(&self, grid: &TimeGrid<f64>) -> String {
        let mut s = String::from("t,g\n");
        for j in 0..=grid.n_steps {
            let t = grid.time(j);
            let _ = writeln!(s, "{t},{}", self.evaluate(t));
        }
        s
    }
}

impl Coupling<f64> for Waveform {
    fn value(&self, t: f64) -> f64 {
        self.evaluate(t)
    }
}

/// Two-phase coupling: `g_c` up to and including `t_cool`, `g_m` after it.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeCoupling {
    pub cool: Waveform,
    pub maintain: Waveform,
    pub t_cool: f64,
}

impl Coupling<f64> for CompositeCoupling {
    fn value(&self, t: f64) -> f64 {
        if t <= self.t_cool {
            self.cool.evaluate(t)
        } else {
            self.maintain.evaluate(t)
        }
    }
}

pub fn compose_coupling(cool: &Waveform, maintain: &Waveform, t_cool: f64) -> Result<CompositeCoupling> {
    let tol = 1e-9 * t_cool.abs().max(1.0);
    if cool.span.1 > t_cool + tol || maintain.span.0 < t_cool - tol {
        return Err(Error::OverlappingSpans {
            cool_end: cool.span.1,
            maintain_start: maintain.span.0,
        });
    }
    Ok(CompositeCoupling {
        cool: cool.clone(),
        maintain: maintain.clone(),
        t_cool,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tau_m;

    #[test]
    fn zero_waveform_is_zero() {
        let w = Waveform::zeros(Basis::PiecewiseLinear { knots: 8 }, (0.0, 2.0), 1.0, true).unwrap();
        for t in [-1.0, 0.0, 0.7, 2.0, 3.0] {
            assert_eq!(w.evaluate(t), 0.0);
        }
    }

    #[test]
    fn linear_interpolation_example() {
        let tau = tau_m::<f64>();
        let w = Waveform::zeros(Basis::PiecewiseLinear { knots: 2 }, (0.0, 0.5 * tau), 1.0, false)
            .unwrap()
            .with_coefficients(vec![0.0, 0.2])
            .unwrap();
        assert!((w.evaluate(0.25 * tau) - 0.1).abs() < 1e-15);
        assert_eq!(w.evaluate(0.5 * tau), 0.2);
        assert_eq!(w.evaluate(0.5 * tau + 1e-9), 0.0);
    }

    #[test]
    fn fourier_midpoint_example() {
        let w = Waveform::zeros(Basis::FourierSine { harmonics: 1 }, (1.0, 3.0), 1.0, false)
            .unwrap()
            .with_coefficients(vec![0.37])
            .unwrap();
        assert!((w.evaluate(2.0) - 0.37).abs() < 1e-15);
    }

    #[test]
    fn fourier_excursion_marks_infeasible() {
        let grid = TimeGrid::covering(1.0, 0.01).unwrap();
        let w = Waveform::zeros(Basis::FourierSine { harmonics: 3 }, (0.0, 1.0), 1.0, false)
            .unwrap()
            .with_coefficients(vec![1.0, 0.0, 0.5])
            .unwrap();
        assert!(matches!(w.check_feasible(&grid), Err(Error::InfeasibleWaveform(_))));
        assert_eq!(w.coefficients, vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn projection_clamps_and_pins() {
        let mut w = Waveform::zeros(Basis::PiecewiseLinear { knots: 3 }, (0.0, 1.0), 0.5, true)
            .unwrap()
            .with_coefficients(vec![0.3, -2.0, 0.7])
            .unwrap();
        w.project();
        assert_eq!(w.coefficients, vec![0.0, -0.5, 0.5]);
        assert_eq!(w.free_indices(), 1..3);
    }

    #[test]
    fn composite_switches_at_seam() {
        let c = Waveform::zeros(Basis::PiecewiseLinear { knots: 2 }, (0.0, 1.0), 1.0, false)
            .unwrap()
            .with_coefficients(vec![0.5, 0.5])
            .unwrap();
        let m = Waveform::zeros(Basis::PiecewiseLinear { knots: 2 }, (1.0, 2.0), 1.0, false)
            .unwrap()
            .with_coefficients(vec![-0.1, -0.1])
            .unwrap();
        let both = compose_coupling(&c, &m, 1.0).unwrap();
        assert_eq!(both.value(1.0), 0.5);
        assert_eq!(both.value(1.5), -0.1);
        assert_eq!(both.value(2.5), 0.0);
        assert!(compose_coupling(&c, &m.shifted(-0.5), 1.0).is_err());
    }
}
