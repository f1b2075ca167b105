use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DimensionKind {
    /// Uniform over the integers in `[low, high]`.
    Integer {
        low: i64,
        high: i64,
    },
    /// Uniform over `[low, high]`.
    Real {
        low: f64,
        high: f64,
    },
    /// `exp(uniform(ln low, ln high))`.
    LogUniform {
        low: f64,
        high: f64,
    },
    Categorical {
        choices: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub kind: DimensionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Real(f64),
    Label(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(x) => Some(*x),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

/// One value per dimension, in the space's dimension order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment(pub Vec<Value>);

impl Dimension {
    pub fn sample(&self, rng: &mut impl Rng) -> Value {
        match &self.kind {
            DimensionKind::Integer { low, high } => Value::Int(rng.random_range(*low..=*high)),
            DimensionKind::Real { low, high } => Value::Real(rng.random_range(*low..=*high)),
            DimensionKind::LogUniform { low, high } => {
                let x = rng.random_range(low.ln()..=high.ln()).exp();
                Value::Real(x.clamp(*low, *high))
            }
            DimensionKind::Categorical { choices } => Value::Label(choices[rng.random_range(0..choices.len())].clone()),
        }
    }

    /// Number of internal coordinates.
    pub fn encoded_len(&self) -> usize {
        match &self.kind {
            DimensionKind::Categorical { choices } => choices.len(),
            _ => 1,
        }
    }

    /// Internal coordinates in `[0, 1]`: linear for integers and reals, log
    /// for log-uniform, one-hot for categorical.
    pub fn encode(&self, value: &Value, out: &mut Vec<f64>) -> Result<()> {
        let bad = || Error::InvalidSpace(format!("value {value} does not fit dimension {}", self.name));
        match (&self.kind, value) {
            (DimensionKind::Integer { low, high }, Value::Int(v)) => out.push((*v - low) as f64 / (high - low) as f64),
            (DimensionKind::Real { low, high }, Value::Real(v)) => out.push((v - low) / (high - low)),
            (DimensionKind::LogUniform { low, high }, Value::Real(v)) if *v > 0.0 => {
                out.push((v.ln() - low.ln()) / (high.ln() - low.ln()))
            }
            (DimensionKind::Categorical { choices }, Value::Label(s)) => {
                let idx = choices.iter().position(|c| c == s).ok_or_else(bad)?;
                out.extend((0..choices.len()).map(|i| if i == idx { 1.0 } else { 0.0 }));
            }
            _ => return Err(bad()),
        }
        Ok(())
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (&self.kind, value) {
            (DimensionKind::Integer { low, high }, Value::Int(v)) => low <= v && v <= high,
            (DimensionKind::Real { low, high }, Value::Real(v))
            | (DimensionKind::LogUniform { low, high }, Value::Real(v)) => low <= v && v <= high,
            (DimensionKind::Categorical { choices }, Value::Label(s)) => choices.contains(s),
            _ => false,
        }
    }

    /// Evenly spaced grid covering the range exactly (log-spaced for
    /// log-uniform, deduplicated for integers, every label for categorical).
    pub fn grid(&self, size: usize) -> Vec<Value> {
        let size = size.max(2);
        let frac = |i: usize| i as f64 / (size - 1) as f64;
        match &self.kind {
            DimensionKind::Integer { low, high } => {
                let mut v: Vec<i64> = (0..size)
                    .map(|i| (*low as f64 + frac(i) * (high - low) as f64).round() as i64)
                    .collect();
                v.dedup();
                v.into_iter().map(Value::Int).collect()
            }
            DimensionKind::Real { low, high } => (0..size)
                .map(|i| match i {
                    0 => *low,
                    i if i == size - 1 => *high,
                    i => low + frac(i) * (high - low),
                })
                .map(Value::Real)
                .collect(),
            DimensionKind::LogUniform { low, high } => (0..size)
                .map(|i| match i {
                    0 => *low,
                    i if i == size - 1 => *high,
                    i => (low.ln() + frac(i) * (high.ln() - low.ln())).exp(),
                })
                .map(Value::Real)
                .collect(),
            DimensionKind::Categorical { choices } => choices.iter().cloned().map(Value::Label).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::InvalidSpace(format!("dimension {}: {m}", self.name)));
        match &self.kind {
            DimensionKind::Integer { low, high } if low >= high => err("low must be below high"),
            DimensionKind::Real { low, high } if low.partial_cmp(high) != Some(std::cmp::Ordering::Less) => {
                err("low must be below high")
            }
            DimensionKind::LogUniform { low, high } if !(*low > 0.0 && low < high) => err("needs 0 < low < high"),
            DimensionKind::Categorical { choices } if choices.is_empty() => err("no choices"),
            DimensionKind::Categorical { choices } if choices.iter().collect::<HashSet<_>>().len() != choices.len() => {
                err("duplicate choices")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::InvalidSpace("no dimensions".into()));
        }
        let mut seen = HashSet::new();
        for d in &dimensions {
            d.validate()?;
            if !seen.insert(d.name.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate dimension {}", d.name)));
            }
        }
        Ok(Self { dimensions })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SearchSpace = serde_json::from_str(text)?;
        Self::new(raw.dimensions)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Changepoint, seasonality and holiday prior scales (log-uniform) and
    /// the seasonality mode.
    pub fn additive_default() -> Self {
        let log = |name: &str, low: f64, high: f64| Dimension {
            name: name.into(),
            kind: DimensionKind::LogUniform { low, high },
        };
        Self::new(vec![
            log("changepoint_prior_scale", 0.001, 0.5),
            log("seasonality_prior_scale", 0.01, 10.0),
            log("holiday_prior_scale", 0.01, 10.0),
            Dimension {
                name: "seasonality_mode".into(),
                kind: DimensionKind::Categorical {
                    choices: vec!["additive".into(), "multiplicative".into()],
                },
            },
        ])
        .expect("valid built-in space")
    }

    pub fn lag_default() -> Self {
        Self::new(vec![Dimension {
            name: "input_sequence_length".into(),
            kind: DimensionKind::Integer { low: 30, high: 365 },
        }])
        .expect("valid built-in space")
    }

    pub fn len(&self) -> usize {
        self.dimensions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.dimensions
            .iter()
            .position(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDimension(name.to_string()))
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Assignment {
        Assignment(self.dimensions.iter().map(|d| d.sample(rng)).collect())
    }

    pub fn encoded_len(&self) -> usize {
        self.dimensions.iter().map(Dimension::encoded_len).sum()
    }

    pub fn encode(&self, a: &Assignment) -> Result<Vec<f64>> {
        if a.0.len() != self.dimensions.len() {
            return Err(Error::InvalidSpace(format!(
                "assignment has {} values for {} dimensions",
                a.0.len(),
                self.dimensions.len()
            )));
        }
        let mut out = Vec::with_capacity(self.encoded_len());
        for (d, v) in self.dimensions.iter().zip(&a.0) {
            d.encode(v, &mut out)?;
        }
        Ok(out)
    }

    /// Kernel length-scale group of each internal coordinate; a categorical
    /// dimension's one-hot block shares one group.
    pub fn length_scale_groups(&self) -> Vec<usize> {
        self.dimensions
            .iter()
            .enumerate()
            .flat_map(|(i, d)| std::iter::repeat_n(i, d.encoded_len()))
            .collect()
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        a.0.len() == self.dimensions.len() && self.dimensions.iter().zip(&a.0).all(|(d, v)| d.contains(v))
    }
}
