//! Scalar values of the key=value config format.

use bees::experiments::Sampler;
use bees::fmt::num;
use bees::sim::Mode;

/// A config value that parses from and renders to a single line.
pub trait ConfigValue: Sized {
    /// On failure returns a short description of what was expected.
    fn parse(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for usize {
    fn parse(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| "a nonnegative integer".into())
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u64 {
    fn parse(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| "an unsigned 64-bit integer".into())
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for f64 {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|x| !x.is_nan())
                .ok_or_else(|| "a number".into()),
        }
    }
    fn render(&self) -> String {
        num(*self)
    }
}

impl ConfigValue for bool {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err("true or false".into()),
        }
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for String {
    fn parse(s: &str) -> Result<Self, String> {
        Ok(s.to_string())
    }
    fn render(&self) -> String {
        self.clone()
    }
}

impl<T: ConfigValue> ConfigValue for Option<T> {
    fn parse(s: &str) -> Result<Self, String> {
        if s.is_empty() || s == "none" {
            Ok(None)
        } else {
            T::parse(s).map(Some)
        }
    }
    fn render(&self) -> String {
        match self {
            None => "none".into(),
            Some(v) => v.render(),
        }
    }
}

/// Comma-separated numbers; empty for none.
impl ConfigValue for Vec<f64> {
    fn parse(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|p| f64::parse(p.trim()))
            .collect::<Result<_, _>>()
            .map_err(|_| "comma-separated numbers".into())
    }
    fn render(&self) -> String {
        self.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",")
    }
}

impl ConfigValue for Sampler {
    fn parse(s: &str) -> Result<Self, String> {
        Sampler::parse(s).map_err(|_| "origin, uniform-ball or stationary".into())
    }
    fn render(&self) -> String {
        self.name().into()
    }
}

/// `exact` or `frozen-batch:DT`.
impl ConfigValue for Mode {
    fn parse(s: &str) -> Result<Self, String> {
        let expected = || "exact or frozen-batch:DT".to_string();
        match s.split_once(':') {
            None if s == "exact" => Ok(Mode::Exact),
            Some(("frozen-batch", dt)) => f64::parse(dt).map(|dt| Mode::FrozenBatch { dt }).map_err(|_| expected()),
            _ => Err(expected()),
        }
    }
    fn render(&self) -> String {
        match self {
            Mode::Exact => "exact".into(),
            Mode::FrozenBatch { dt } => format!("frozen-batch:{}", num(*dt)),
        }
    }
}
