//! Two-layer tanh network with a flat parameter vector.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `inputs -> hidden (tanh) -> outputs`, inputs divided by `norm` first.
///
/// Parameter layout: hidden weights (row-major, one row per hidden unit),
/// hidden biases, output weights (row-major), output biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub norm: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Mlp {
    pub fn param_count(inputs: usize, hidden: usize, outputs: usize) -> usize {
        inputs * hidden + hidden + hidden * outputs + outputs
    }

    pub fn new(inputs: usize, hidden: usize, outputs: usize, norm: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(Error::InvalidArgument("network layers must be non-empty".into()));
        }
        if norm.len() != inputs {
            return Err(Error::DimensionMismatch {
                expected: inputs,
                actual: norm.len(),
            });
        }
        if norm.iter().any(|n| !(n.is_finite() && *n != 0.0)) {
            return Err(Error::InvalidArgument("normalisation constants must be finite and non-zero".into()));
        }
        let expected = Mlp::param_count(inputs, hidden, outputs);
        if theta.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("network weights must be finite".into()));
        }
        Ok(Mlp {
            inputs,
            hidden,
            outputs,
            norm,
            theta,
        })
    }

    /// Weights drawn from `N(0, scale²)`.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, norm: Vec<f64>, scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let n = Mlp::param_count(inputs, hidden, outputs);
        let theta = (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        Mlp::new(inputs, hidden, outputs, norm, theta)
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), self.theta.len());
        Mlp { theta, ..self.clone() }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (ni, nh, no) = (self.inputs, self.hidden, self.outputs);
        let w1 = &self.theta[..ni * nh];
        let b1 = &self.theta[ni * nh..ni * nh + nh];
        let rest = &self.theta[ni * nh + nh..];
        let w2 = &rest[..nh * no];
        let b2 = &rest[nh * no..];
        let xn: Vec<f64> = x.iter().zip(&self.norm).map(|(v, n)| v / n).collect();
        let h: Vec<f64> = (0..nh)
            .map(|j| {
                let row = &w1[j * ni..(j + 1) * ni];
                (b1[j] + row.iter().zip(&xn).map(|(w, v)| w * v).sum::<f64>()).tanh()
            })
            .collect();
        (0..no)
            .map(|k| {
                let row = &w2[k * nh..(k + 1) * nh];
                b2[k] + row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// Text form: a `layers` line, a `norm` line, then one value per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "layers {} {} {}", self.inputs, self.hidden, self.outputs).unwrap();
        let norm: Vec<String> = self.norm.iter().map(|n| format!("{n:?}")).collect();
        writeln!(s, "norm {}", norm.join(" ")).unwrap();
        for t in &self.theta {
            writeln!(s, "{t:?}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let parse = |v: &str| v.parse::<f64>().map_err(|e| Error::Parse(format!("{v:?}: {e}")));
        let layers = lines.next().ok_or_else(|| Error::Parse("missing layers line".into()))?;
        let sizes: Vec<usize> = match layers.strip_prefix("layers") {
            Some(rest) => rest
                .split_whitespace()
                .map(|v| v.parse::<usize>().map_err(|e| Error::Parse(format!("{v:?}: {e}"))))
                .collect::<Result<_>>()?,
            None => return Err(Error::Parse(format!("expected layers line, got {layers:?}"))),
        };
        if sizes.len() != 3 {
            return Err(Error::Parse(format!("expected three layer sizes, got {}", sizes.len())));
        }
        let norm_line = lines.next().ok_or_else(|| Error::Parse("missing norm line".into()))?;
        let norm: Vec<f64> = match norm_line.strip_prefix("norm") {
            Some(rest) => rest.split_whitespace().map(parse).collect::<Result<_>>()?,
            None => return Err(Error::Parse(format!("expected norm line, got {norm_line:?}"))),
        };
        let theta: Vec<f64> = lines.map(parse).collect::<Result<_>>()?;
        Mlp::new(sizes[0], sizes[1], sizes[2], norm, theta)
    }
}
