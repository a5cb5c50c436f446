//! Radial step profiles: nondecreasing step functions `[0, ∞) → [0, 1]`.
//!
//! A profile is stored as a list of jumps `(a_j, v_j)` with strictly increasing
//! locations and nondecreasing cumulative values. Evaluation follows the
//! open-ball convention `f(r) = Σ_j c_j 1{r > a_j}`: at an exact jump location
//! the pre-jump value is returned, so the empirical CDF of a particle cloud is
//! literally the fraction of particles in the open ball `B(r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::num;

/// Extra room beyond the last jump used when no explicit cap is supplied:
/// `12·√(2·t_horizon)`, past which Gaussian tails are below `1e-15`.
pub fn default_domain_cap(max_location: f64, t_horizon: f64) -> f64 {
    max_location.max(0.0) + 12.0 * (2.0 * t_horizon.max(1e-12)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    locations: Vec<f64>,
    values: Vec<f64>,
    domain_cap: f64,
}

impl RadialProfile {
    /// Builds a profile from `(location, cumulative value)` pairs.
    pub fn new(jumps: Vec<(f64, f64)>, domain_cap: f64) -> Result<Self> {
        let (locations, values): (Vec<f64>, Vec<f64>) = jumps.into_iter().unzip();
        let p = RadialProfile {
            locations,
            values,
            domain_cap,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`RadialProfile::new`] but drops jumps of size zero first.
    pub fn from_jumps_compact(jumps: Vec<(f64, f64)>, domain_cap: f64) -> Result<Self> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(jumps.len());
        let mut prev = 0.0;
        for (a, v) in jumps {
            if v > prev {
                out.push((a, v));
                prev = v;
            }
        }
        Self::new(out, domain_cap)
    }

    pub(crate) fn from_parts_unchecked(
        locations: Vec<f64>,
        values: Vec<f64>,
        domain_cap: f64,
    ) -> Self {
        let p = RadialProfile {
            locations,
            values,
            domain_cap,
        };
        debug_assert!(p.validate().is_ok(), "{:?}", p.validate());
        p
    }

    pub fn zero(domain_cap: f64) -> Self {
        RadialProfile {
            locations: Vec::new(),
            values: Vec::new(),
            domain_cap,
        }
    }

    /// `height · 1{r > a}`.
    pub fn step(a: f64, height: f64, domain_cap: f64) -> Result<Self> {
        if height == 0.0 {
            return Ok(Self::zero(domain_cap));
        }
        Self::new(vec![(a, height)], domain_cap)
    }

    /// Empirical distribution of the given radii, each carrying mass `1/n`.
    pub fn from_radii(radii: &[f64], domain_cap: f64) -> Result<Self> {
        let n = radii.len();
        if n == 0 {
            return Ok(Self::zero(domain_cap));
        }
        let mut sorted = radii.to_vec();
        if sorted.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::domain("radii must be finite and nonnegative"));
        }
        sorted.sort_by(f64::total_cmp);
        let mut locations = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let inv = 1.0 / n as f64;
        let mut i = 0;
        while i < n {
            let a = sorted[i];
            let mut j = i;
            while j < n && sorted[j] == a {
                j += 1;
            }
            locations.push(a);
            values.push(if j == n { 1.0 } else { j as f64 * inv });
            i = j;
        }
        let cap = domain_cap.max(*locations.last().unwrap() + f64::EPSILON.max(1e-12));
        Self::new(locations.into_iter().zip(values).collect(), cap)
    }

    /// Step functions below and above a nondecreasing `f` on `n` equal cells
    /// of `[0, end]`; `f` is taken to be constant after `end`.
    pub fn enclose_monotone(f: impl Fn(f64) -> f64, end: f64, n: usize, domain_cap: f64) -> Result<(Self, Self)> {
        if !(end > 0.0) || n == 0 || !(domain_cap >= end) {
            return Err(Error::domain("enclosure needs end > 0, n ≥ 1 and a cap at or beyond end"));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| end * i as f64 / n as f64).collect();
        nodes[n] = end;
        let mut vals: Vec<f64> = nodes.iter().map(|&x| f(x).clamp(0.0, 1.0)).collect();
        for i in 1..=n {
            vals[i] = vals[i].max(vals[i - 1]);
        }
        let lower = (1..=n).map(|i| (nodes[i], vals[i])).collect();
        let upper = (0..n).map(|i| (nodes[i], vals[i + 1])).collect();
        Ok((
            Self::from_jumps_compact(lower, domain_cap)?,
            Self::from_jumps_compact(upper, domain_cap)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self.locations.len() != self.values.len() {
            return Err(Error::Invariant("profile arrays differ in length".into()));
        }
        if !(self.domain_cap.is_finite() && self.domain_cap > 0.0) {
            return Err(Error::domain(format!(
                "domain cap must be positive and finite, got {}",
                self.domain_cap
            )));
        }
        let mut prev_a = f64::NEG_INFINITY;
        let mut prev_v = 0.0;
        for (&a, &v) in self.locations.iter().zip(&self.values) {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::domain(format!("jump location {a} is not a finite radius")));
            }
            if a <= prev_a {
                return Err(Error::domain(format!(
                    "jump locations must be strictly increasing ({prev_a} then {a})"
                )));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("profile value {v} outside [0, 1]")));
            }
            if v < prev_v {
                return Err(Error::domain(format!(
                    "profile values must be nondecreasing ({prev_v} then {v})"
                )));
            }
            prev_a = a;
            prev_v = v;
        }
        if let Some(&last) = self.locations.last() {
            if self.domain_cap <= last {
                return Err(Error::domain(format!(
                    "domain cap {} must exceed the last jump location {last}",
                    self.domain_cap
                )));
            }
        }
        Ok(())
    }

    /// Value at radius `r` (pre-jump value at a jump location).
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.domain_cap {
            return self.last_value();
        }
        let idx = self.locations.partition_point(|&a| a < r);
        if idx == 0 {
            0.0
        } else {
            self.values[idx - 1]
        }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations.iter().copied().zip(self.values.iter().copied())
    }

    /// `(location, jump size)` pairs; the sizes are nonnegative and sum to
    /// [`RadialProfile::last_value`].
    pub fn jump_sizes(&self) -> Vec<(f64, f64)> {
        let mut prev = 0.0;
        self.jumps()
            .map(|(a, v)| {
                let c = v - prev;
                prev = v;
                (a, c)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn domain_cap(&self) -> f64 {
        self.domain_cap
    }

    pub fn with_domain_cap(mut self, cap: f64) -> Result<Self> {
        self.domain_cap = cap;
        self.validate()?;
        Ok(self)
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_location(&self) -> Option<f64> {
        self.locations.last().copied()
    }

    pub fn has_jump_at_origin(&self) -> bool {
        self.locations.first() == Some(&0.0)
    }

    /// Pointwise `min(f, m)`. Zero-size jumps produced by the cap are dropped.
    pub fn cutoff(&self, m: f64) -> RadialProfile {
        let mut locations = Vec::with_capacity(self.len());
        let mut values = Vec::with_capacity(self.len());
        let mut prev = 0.0;
        for (a, v) in self.jumps() {
            let c = v.min(m);
            if c > prev {
                locations.push(a);
                values.push(c);
                prev = c;
            }
        }
        RadialProfile::from_parts_unchecked(locations, values, self.domain_cap)
    }

    /// Pointwise midpoint of two profiles.
    pub fn midpoint(&self, other: &RadialProfile) -> RadialProfile {
        let pts = merged_breakpoints(&[self, other]);
        let mut jumps = Vec::with_capacity(pts.len());
        let mut i = 0;
        for_each_piece(&[self, other], |v| {
            jumps.push((pts[i], 0.5 * (v[0] + v[1])));
            i += 1;
        });
        let cap = self.domain_cap.max(other.domain_cap);
        RadialProfile::from_jumps_compact(jumps, cap).expect("midpoint of valid profiles")
    }

    /// `sup_r (self(r) − other(r))`, taken over all `r ≥ 0`.
    pub fn sup_excess(&self, other: &RadialProfile) -> f64 {
        let mut best = 0.0f64; // r = 0 gives 0 - 0
        for_each_piece(&[self, other], |vals| best = best.max(vals[0] - vals[1]));
        best
    }

    /// `sup_r |self(r) − other(r)|`.
    pub fn sup_abs_diff(&self, other: &RadialProfile) -> f64 {
        self.sup_excess(other).max(other.sup_excess(self))
    }

    /// `sup_r |self(r) − g(r)|` for a continuous nondecreasing `g` with limit `g_inf`.
    pub fn sup_distance_to_monotone(&self, g: impl Fn(f64) -> f64, g_inf: f64) -> f64 {
        let mut best = (0.0 - g(0.0)).abs();
        let mut left = 0.0;
        let mut current = 0.0;
        for (a, v) in self.jumps() {
            // On (left, a] the profile equals `current`.
            if a > left {
                best = best.max((current - g(left)).abs()).max((current - g(a)).abs());
            }
            left = a;
            current = v;
        }
        best.max((current - g(left)).abs()).max((current - g_inf).abs())
    }

    /// `sup_r (self(r) − g(r))⁺` for a continuous nondecreasing `g`.
    pub fn sup_excess_over_monotone(&self, g: impl Fn(f64) -> f64) -> f64 {
        let mut best = 0.0f64;
        let mut left = 0.0;
        let mut current = 0.0;
        for (a, v) in self.jumps() {
            if a > left {
                best = best.max(current - g(left));
            }
            left = a;
            current = v;
        }
        best.max(current - g(left))
    }

    /// `sup_r (g(r) − self(r))⁺` for a continuous nondecreasing `g` with limit `g_inf`.
    pub fn sup_deficit_under_monotone(&self, g: impl Fn(f64) -> f64, g_inf: f64) -> f64 {
        let mut best = 0.0f64;
        let mut current = 0.0;
        for (a, v) in self.jumps() {
            best = best.max(g(a) - current);
            current = v;
        }
        best.max(g_inf - current)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (a, v) in self.jumps() {
            s.push_str(&format!("{},{}\n", num(a), num(v)));
        }
        s.push_str(&format!(
            "{},{}\n",
            num(self.domain_cap),
            num(self.last_value())
        ));
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 && line.starts_with('r') {
                if line != "r,value" {
                    return Err(Error::Parse(format!("unexpected profile header '{line}'")));
                }
                continue;
            }
            let mut parts = line.split(',');
            let (Some(a), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!(
                    "line {}: expected two columns, got '{line}'",
                    lineno + 1
                )));
            };
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: bad number '{s}': {e}", lineno + 1))
                })
            };
            rows.push((parse(a)?, parse(v)?));
        }
        let Some((cap, terminal)) = rows.pop() else {
            return Err(Error::Parse("profile CSV has no terminal row".into()));
        };
        let p = Self::new(rows, cap)?;
        if (p.last_value() - terminal).abs() > 0.0 {
            return Err(Error::Parse(format!(
                "terminal row value {terminal} does not match last jump value {}",
                p.last_value()
            )));
        }
        Ok(p)
    }

    pub fn to_json(&self, dim: Option<usize>) -> serde_json::Value {
        let jumps: Vec<[f64; 2]> = self.jumps().map(|(a, v)| [a, v]).collect();
        let mut obj = serde_json::json!({ "jumps": jumps, "domain_cap": self.domain_cap });
        if let Some(d) = dim {
            obj["dim"] = serde_json::json!(d);
        }
        obj
    }

    pub fn from_json(value: &serde_json::Value) -> Result<(Self, Option<usize>)> {
        #[derive(Deserialize)]
        struct Raw {
            dim: Option<usize>,
            jumps: Vec<[f64; 2]>,
            domain_cap: Option<f64>,
        }
        let raw: Raw = serde_json::from_value(value.clone())?;
        let max_loc = raw.jumps.last().map(|j| j[0]).unwrap_or(0.0);
        let cap = raw
            .domain_cap
            .unwrap_or_else(|| default_domain_cap(max_loc, 1.0));
        let p = Self::new(raw.jumps.into_iter().map(|[a, v]| (a, v)).collect(), cap)?;
        Ok((p, raw.dim))
    }
}

/// Sorted, deduplicated union of the jump locations of all profiles.
pub fn merged_breakpoints(profiles: &[&RadialProfile]) -> Vec<f64> {
    let mut pts: Vec<f64> = profiles
        .iter()
        .flat_map(|p| p.locations.iter().copied())
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Calls `f` with the values of every profile on each maximal interval on which
/// all of them are constant (including the unbounded last interval).
pub fn for_each_piece(profiles: &[&RadialProfile], mut f: impl FnMut(&[f64])) {
    let pts = merged_breakpoints(profiles);
    let mut cursors = vec![0usize; profiles.len()];
    let mut vals = vec![0.0; profiles.len()];
    // Value on (b_i, b_{i+1}] includes every jump at locations <= b_i.
    for &b in &pts {
        for (k, p) in profiles.iter().enumerate() {
            while cursors[k] < p.locations.len() && p.locations[cursors[k]] <= b {
                vals[k] = p.values[cursors[k]];
                cursors[k] += 1;
            }
        }
        f(&vals);
    }
}

/// `sup_r dist(f(r), [lower(r), upper(r)])`: zero when `f` lies inside the bracket.
pub fn distance_to_bracket(f: &RadialProfile, lower: &RadialProfile, upper: &RadialProfile) -> f64 {
    let mut best = 0.0f64;
    for_each_piece(&[f, lower, upper], |v| {
        let d = (v[0] - v[2]).max(v[1] - v[0]).max(0.0);
        best = best.max(d);
    });
    best
}
