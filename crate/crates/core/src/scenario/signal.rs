use std::f64::consts::TAU;

use super::schema::{Coord, SignalDef};
use super::ScenarioError;
use crate::geometry::{Point, Signal};

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Builds the piecewise-linear signal described by a generator entry.
pub fn generate_signal(def: &SignalDef) -> Result<Signal, ScenarioError> {
    let sig = match def {
        SignalDef::Ramp {
            from,
            to,
            t0,
            t1,
            samples,
        } => {
            let (a, b) = (from.to_vec(), to.to_vec());
            if a.len() != b.len() {
                return Err(invalid("ramp endpoints differ in dimension"));
            }
            if *samples < 2 {
                return Err(invalid("ramp needs at least 2 samples"));
            }
            let times = linspace(*t0, *t1, *samples);
            let points = (0..*samples)
                .map(|i| {
                    let s = i as f64 / (*samples - 1) as f64;
                    Point::from_iterator(a.len(), a.iter().zip(&b).map(|(x, y)| x + (y - x) * s))
                })
                .collect();
            Signal::new(times, points)?
        }
        SignalDef::TriangleWave {
            amplitude,
            period,
            half_periods,
            offset,
            t0,
            decay,
        } => {
            if !(*period > 0.0) || *half_periods == 0 {
                return Err(invalid(
                    "triangle wave needs a positive period and at least one half period",
                ));
            }
            let mut amp = *amplitude;
            let mut times = Vec::with_capacity(half_periods + 1);
            let mut values = Vec::with_capacity(half_periods + 1);
            for k in 0..=*half_periods {
                times.push(t0 + k as f64 * period / 2.0);
                values.push(offset + if k % 2 == 0 { -amp } else { amp });
                amp *= decay;
            }
            Signal::scalar(times, &values)?
        }
        SignalDef::Piecewise { times, points } => {
            if times.len() != points.len() {
                return Err(invalid("piecewise signal needs one point per time"));
            }
            Signal::new(
                times.clone(),
                points.iter().map(|p| Point::from_vec(p.to_vec())).collect(),
            )?
        }
        SignalDef::Sinusoid {
            amplitude,
            period,
            samples,
            t0,
            t1,
            phase,
            offset,
        } => {
            if *samples < 2 || !(*period > 0.0) {
                return Err(invalid("sinusoid needs at least 2 samples and a positive period"));
            }
            let times = linspace(*t0, *t1, *samples);
            let values: Vec<f64> = times
                .iter()
                .map(|t| offset + amplitude * (TAU * t / period + phase).sin())
                .collect();
            Signal::scalar(times, &values)?
        }
    };
    Ok(sig)
}

impl From<f64> for Coord {
    fn from(x: f64) -> Self {
        Coord::Scalar(x)
    }
}
