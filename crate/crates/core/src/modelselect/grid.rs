//! Hyperparameter grids and their text format.
//!
//! A grid file lists one axis per line in the familiar dictionary style:
//!
//! ```text
//! # comments and blank lines are ignored
//! 'C': [0.1, 1, 10],
//! 'kernel': ['linear', 'rbf'],
//! ```
//!
//! Quotes, surrounding braces and trailing commas are optional. Values that
//! parse as numbers are numeric, everything else is text.

use std::fmt;

use crate::error::{Error, Result};

/// Default boosting grid.
pub const GBT_GRID: &str = "\
'n_estimators': [50, 100, 150],
'learning_rate': [0.1, 0.3],
'colsample_bytree': [0.3, 0.7, 1],
'max_depth': [10]
";

/// Default SVM grid.
pub const SVM_GRID: &str = "\
'n_components': [10],
'C': [0.1, 1, 10],
'kernel': ['linear', 'rbf'],
'gamma': ['scale', 'auto']
";

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

impl ParamValue {
    pub fn parse(raw: &str) -> Self {
        let s = raw.trim().trim_matches(|c| c == '\'' || c == '"');
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => ParamValue::Num(v),
            _ => ParamValue::Text(s.to_string()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Num(v) => Some(*v),
            ParamValue::Text(_) => None,
        }
    }

    /// Non-negative integral numbers only.
    pub fn as_usize(&self) -> Option<usize> {
        self.as_f64()
            .filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v <= usize::MAX as f64)
            .map(|v| v as usize)
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Num(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// One point of the grid: axis values in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub values: Vec<(String, ParamValue)>,
}

impl Candidate {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Inverse of the `Display` form `a=1;b=rbf`.
    pub fn parse(s: &str) -> Option<Self> {
        if s.is_empty() {
            return Some(Candidate { values: vec![] });
        }
        let values = s
            .split(';')
            .map(|kv| {
                let (k, v) = kv.split_once('=')?;
                Some((k.to_string(), ParamValue::parse(v)))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Candidate { values })
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub axes: Vec<(String, Vec<ParamValue>)>,
}

impl ParamGrid {
    pub fn new(axes: Vec<(String, Vec<ParamValue>)>) -> Result<Self> {
        for (i, (name, values)) in axes.iter().enumerate() {
            if values.is_empty() {
                return Err(Error::InvalidArgument(format!("grid axis `{name}` has no values")));
            }
            if axes[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidArgument(format!("grid axis `{name}` declared twice")));
            }
        }
        Ok(Self { axes })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            what: "grid",
            line,
            message,
        };
        let mut axes: Vec<(String, Vec<ParamValue>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let mut line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            line = line.trim_start_matches('{').trim_end_matches('}').trim();
            line = line.trim_end_matches(',').trim();
            if line.is_empty() {
                continue;
            }
            let (name, rest) = line
                .split_once(':')
                .ok_or_else(|| err(line_no, "expected `name: [values]`".into()))?;
            let name = name.trim().trim_matches(|c| c == '\'' || c == '"').trim();
            if name.is_empty() {
                return Err(err(line_no, "empty axis name".into()));
            }
            let rest = rest.trim();
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| err(line_no, format!("values of `{name}` must be in [brackets]")))?;
            let values: Vec<ParamValue> = inner
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(ParamValue::parse)
                .collect();
            if values.is_empty() {
                return Err(err(line_no, format!("axis `{name}` has no values")));
            }
            if axes.iter().any(|(n, _)| n == name) {
                return Err(err(line_no, format!("axis `{name}` declared twice")));
            }
            axes.push((name.to_string(), values));
        }
        if axes.is_empty() {
            return Err(err(text.lines().count().max(1), "grid declares no axes".into()));
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product, last axis varying fastest.
    pub fn candidates(&self) -> Vec<Candidate> {
        let n = self.len();
        (0..n)
            .map(|mut idx| {
                let mut values = vec![None; self.axes.len()];
                for (a, (name, vals)) in self.axes.iter().enumerate().rev() {
                    values[a] = Some((name.clone(), vals[idx % vals.len()].clone()));
                    idx /= vals.len();
                }
                Candidate {
                    values: values.into_iter().map(Option::unwrap).collect(),
                }
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, (name, values)) in self.axes.iter().enumerate() {
            let vals: Vec<String> = values
                .iter()
                .map(|v| match v {
                    ParamValue::Num(x) => x.to_string(),
                    ParamValue::Text(t) => format!("'{t}'"),
                })
                .collect();
            s.push_str(&format!("'{name}': [{}]", vals.join(", ")));
            s.push_str(if i + 1 < self.axes.len() { ",\n" } else { "\n" });
        }
        s
    }
}
