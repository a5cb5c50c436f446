//! `G_t` on a uniform radial grid.
//!
//! A nondecreasing step function is a nonnegative combination of unit steps
//! `1{· > a_i}`, and `G_t 1{· > a} = w(a, ·, t)`. Writing both `w` factors as
//! `Σ_j p_j(a) P(a0 + j, x)`, the output at node `r_m` is
//!
//! ```text
//! Σ_j S_j · P(a0 + j, x_m),   S_j = Σ_i c_i p_j(a_i)
//! ```
//!
//! so one pass accumulates `S` from per-node Poisson bands and a second pass
//! contracts it against per-node gamma bands. Both band tables depend only on
//! `(d, t, h)` and are cached, growing as wider supports are seen.

use super::series::{gamma_p, ln_gamma_increment, poisson_band};
use super::KernelContext;
use crate::error::{Error, Result};
use crate::profile::RadialProfile;
use statrs::function::gamma::gamma_ur;

/// Direction in which node values are rounded onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Result lies pointwise below the exact function.
    Lower,
    /// Result lies pointwise above the exact function.
    Upper,
}

/// Nondecreasing step function on the grid `r_i = i·h`:
/// `f(0) = 0`, `f(r) = values[i]` on `(r_i, r_{i+1}]`, and the last value beyond.
/// An empty value list is the zero function.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeProfile {
    spacing: f64,
    values: Vec<f64>,
}

impl NodeProfile {
    pub fn zero(spacing: f64) -> Self {
        Self {
            spacing,
            values: Vec::new(),
        }
    }

    /// Values are made nondecreasing by a running maximum is *not* applied;
    /// callers must pass monotone data.
    pub fn from_values(spacing: f64, values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let mut p = Self { spacing, values };
        p.trim();
        p
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest node carrying a jump.
    pub fn extent(&self) -> f64 {
        self.values.len().saturating_sub(1) as f64 * self.spacing
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 || self.values.is_empty() {
            return 0.0;
        }
        let i = ((r / self.spacing).ceil() as usize).saturating_sub(1);
        self.values[i.min(self.values.len() - 1)]
    }

    /// Jump sizes at each node (`c_0` sits at the origin).
    pub fn jump_sizes(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&v| {
                let c = v - prev;
                prev = v;
                c
            })
            .collect()
    }

    /// `min(f, m)`.
    pub fn cutoff(&self, m: f64) -> NodeProfile {
        let values = self.values.iter().map(|&v| v.min(m).max(0.0)).collect();
        NodeProfile::from_values(self.spacing, values)
    }

    /// `sup_r |f − g|` for two profiles on the same grid.
    pub fn sup_abs_diff(&self, other: &NodeProfile) -> f64 {
        let n = self.values.len().max(other.values.len());
        let at = |p: &NodeProfile, i: usize| {
            if p.values.is_empty() {
                0.0
            } else {
                p.values[i.min(p.values.len() - 1)]
            }
        };
        (0..n)
            .map(|i| (at(self, i) - at(other, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `sup_r (f − g)⁺` for two profiles on the same grid.
    pub fn sup_excess(&self, other: &NodeProfile) -> f64 {
        let n = self.values.len().max(other.values.len());
        let at = |p: &NodeProfile, i: usize| {
            if p.values.is_empty() {
                0.0
            } else {
                p.values[i.min(p.values.len() - 1)]
            }
        };
        (0..n)
            .map(|i| (at(self, i) - at(other, i)).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn to_profile(&self, domain_cap: f64) -> Result<RadialProfile> {
        let mut jumps = Vec::new();
        let mut prev = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > prev {
                jumps.push((i as f64 * self.spacing, v));
                prev = v;
            }
        }
        let cap = domain_cap.max(self.extent() + self.spacing);
        RadialProfile::new(jumps, cap)
    }

    fn trim(&mut self) {
        let last = self.last_value();
        while self.values.len() >= 2 && self.values[self.values.len() - 2] == last {
            self.values.pop();
        }
        if last == 0.0 {
            self.values.clear();
        }
    }
}

/// Ragged table of bands: entry `k` covers indices `start[k] .. start[k] + len`.
#[derive(Debug, Default, Clone)]
struct Bands {
    start: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl Bands {
    fn new() -> Self {
        Self {
            start: Vec::new(),
            offset: vec![0],
            data: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.start.len()
    }

    fn push(&mut self, start: usize, values: &[f64]) {
        self.start.push(start);
        self.data.extend_from_slice(values);
        self.offset.push(self.data.len());
    }

    #[inline]
    fn get(&self, k: usize) -> (usize, &[f64]) {
        (self.start[k], &self.data[self.offset[k]..self.offset[k + 1]])
    }
}

/// Where the input jumps sit.
pub enum Jumps<'a> {
    /// Jump sizes at the propagator's own nodes.
    Nodes(&'a [f64]),
    /// Arbitrary `(location, size)` pairs.
    Free(&'a [(f64, f64)]),
}

/// Poisson truncation per band.
const EPS_POISSON: f64 = 1e-15;
/// Gamma values within this of 0 or 1 are replaced by 0 or 1.
const EPS_GAMMA: f64 = 1e-14;
/// Per unit mass bound on the absolute error of a computed node value:
/// truncations above plus incomplete-gamma and summation roundoff.
pub(crate) const NODE_ERROR_PER_MASS: f64 = 1e-11;
/// Gaussian mass ignored beyond the reach of the kernel.
const EPS_REACH: f64 = 1e-16;

/// Cached `G_t` on the grid `r_i = i·h` for fixed `(d, t, h)`.
#[derive(Debug, Clone)]
pub struct GridPropagator {
    a0: f64,
    time: f64,
    spacing: f64,
    reach: f64,
    poisson: Bands,
    gamma: Bands,
    max_entries: usize,
}

impl GridPropagator {
    pub const DEFAULT_MAX_ENTRIES: usize = 60_000_000;

    pub fn new(ctx: &KernelContext, time: f64, spacing: f64) -> Result<Self> {
        if !(time > 0.0) || !time.is_finite() {
            return Err(Error::domain(format!("time must be positive, got {time}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::domain(format!("grid spacing must be positive, got {spacing}")));
        }
        let a0 = ctx.half_dim();
        Ok(Self {
            a0,
            time,
            spacing,
            reach: gaussian_reach(a0, time, EPS_REACH),
            poisson: Bands::new(),
            gamma: Bands::new(),
            max_entries: Self::DEFAULT_MAX_ENTRIES,
        })
    }

    pub fn with_max_entries(mut self, n: usize) -> Self {
        self.max_entries = n;
        self
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Radius `s` with `P(‖B_t − B_0‖ ≥ s)` negligible.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Number of cached table entries.
    pub fn cached_entries(&self) -> usize {
        self.poisson.data.len() + self.gamma.data.len()
    }

    fn check_budget(&self) -> Result<()> {
        if self.cached_entries() > self.max_entries {
            return Err(Error::Resource(format!(
                "kernel tables exceed {} entries (t={}, h={}); use a coarser grid",
                self.max_entries, self.time, self.spacing
            )));
        }
        Ok(())
    }

    fn ensure_poisson(&mut self, nodes: usize) -> Result<()> {
        while self.poisson.len() < nodes {
            let r = self.poisson.len() as f64 * self.spacing;
            let band = poisson_band(r * r / (4.0 * self.time), EPS_POISSON);
            self.poisson.push(band.start, &band.weights);
        }
        self.check_budget()
    }

    fn ensure_gamma(&mut self, nodes: usize) -> Result<()> {
        let mut buf = Vec::new();
        while self.gamma.len() < nodes {
            let r = self.gamma.len() as f64 * self.spacing;
            let start = gamma_band(self.a0, r * r / (4.0 * self.time), &mut buf);
            self.gamma.push(start, &buf);
        }
        self.check_budget()
    }

    /// Unscaled node values `Σ_i c_i w(a_i, r_m, t)` for `m = 0, 1, …`, stopping
    /// once the total mass is reached to within `stop_gap`. Returns the values
    /// and the total mass `Σ c_i`.
    pub fn apply(&mut self, jumps: Jumps<'_>, stop_gap: f64) -> Result<(Vec<f64>, f64)> {
        self.apply_until(jumps, stop_gap, f64::INFINITY)
    }

    /// As [`GridPropagator::apply`], additionally stopping after the first node
    /// whose value reaches `stop_value`.
    pub fn apply_until(
        &mut self,
        jumps: Jumps<'_>,
        stop_gap: f64,
        stop_value: f64,
    ) -> Result<(Vec<f64>, f64)> {
        let mut s: Vec<f64> = Vec::new();
        let add = |s: &mut Vec<f64>, c: f64, start: usize, weights: &[f64]| {
            if s.len() < start + weights.len() {
                s.resize(start + weights.len(), 0.0);
            }
            for (slot, &p) in s[start..start + weights.len()].iter_mut().zip(weights) {
                *slot += c * p;
            }
        };
        let mut mass = 0.0;
        let mut max_loc: f64 = 0.0;
        match jumps {
            Jumps::Nodes(c) => {
                self.ensure_poisson(c.len())?;
                for (i, &ci) in c.iter().enumerate() {
                    if ci > 0.0 {
                        let (start, weights) = self.poisson.get(i);
                        add(&mut s, ci, start, weights);
                        mass += ci;
                        max_loc = i as f64 * self.spacing;
                    }
                }
            }
            Jumps::Free(list) => {
                for &(a, c) in list {
                    if c > 0.0 {
                        let band = poisson_band(a * a / (4.0 * self.time), EPS_POISSON);
                        add(&mut s, c, band.start, &band.weights);
                        mass += c;
                        max_loc = max_loc.max(a);
                    }
                }
            }
        }
        if mass == 0.0 {
            return Ok((Vec::new(), 0.0));
        }
        let mut prefix = Vec::with_capacity(s.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in &s {
            acc += v;
            prefix.push(acc);
        }
        let last_node = ((max_loc + self.reach) / self.spacing).ceil() as usize + 1;
        let mut out = Vec::new();
        for m in 0..=last_node {
            if m >= self.gamma.len() {
                // grow in chunks to amortize the budget check
                self.ensure_gamma((m + 256).min(last_node + 1))?;
            }
            let (one, q) = self.gamma.get(m);
            let n = s.len();
            let mut v = prefix[one.min(n)];
            if one < n {
                let hi = (one + q.len()).min(n);
                for (sj, qj) in s[one..hi].iter().zip(q) {
                    v += sj * qj;
                }
            }
            out.push(v);
            if mass - v <= stop_gap || v >= stop_value {
                break;
            }
        }
        Ok((out, mass))
    }
}

/// Gamma band for one node: fills `buf` with `P(a0 + j, x)` for
/// `j ∈ [start, start + buf.len())` and returns `start`. Indices below `start`
/// have `P > 1 − EPS_GAMMA`, indices past the band `P < EPS_GAMMA`.
fn gamma_band(a0: f64, x: f64, buf: &mut Vec<f64>) -> usize {
    buf.clear();
    if x <= 0.0 {
        return 0;
    }
    let anchor = (x - a0).round().max(0.0) as usize;
    let aa = a0 + anchor as f64;
    let q_anchor = gamma_p(aa, x);
    let d_anchor = ln_gamma_increment(aa, x).exp();

    let (mut q, mut dd, mut j) = (q_anchor, d_anchor, anchor);
    while j > 0 {
        dd *= (a0 + j as f64) / x;
        q += dd;
        j -= 1;
        if q > 1.0 - EPS_GAMMA {
            j += 1;
            break;
        }
        buf.push(q);
    }
    let mut start = j;
    buf.reverse();
    buf.push(q_anchor);
    let (mut q, mut dd, mut j) = (q_anchor, d_anchor, anchor);
    loop {
        q -= dd;
        j += 1;
        dd *= x / (a0 + j as f64);
        // q_j = Σ_{k≥j} D(a0 + k) is bounded geometrically once the ratio drops
        // below one; the subtraction above can leave roundoff far larger.
        let ratio = x / (a0 + j as f64 + 1.0);
        let bound = if ratio < 1.0 { dd / (1.0 - ratio) } else { f64::INFINITY };
        if q < EPS_GAMMA || bound < EPS_GAMMA {
            break;
        }
        buf.push(q.min(bound));
    }
    let front = buf.iter().take_while(|&&v| v > 1.0 - EPS_GAMMA).count();
    buf.drain(..front);
    start += front;
    while buf.last().is_some_and(|&v| v < EPS_GAMMA) {
        buf.pop();
    }
    start
}

/// Smallest `s` with `P(‖Z‖ ≥ s) ≤ eps` for `Z ~ N(0, 2t I_d)`.
pub(crate) fn gaussian_reach(a0: f64, t: f64, eps: f64) -> f64 {
    let tail = |s: f64| gamma_ur(a0, s * s / (4.0 * t));
    let mut hi = (4.0 * t).sqrt() * (a0.sqrt() + 10.0);
    while tail(hi) > eps {
        hi *= 1.5;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Rounds scaled node values `scale·raw` into a monotone step profile lying on
/// the requested side of `min(scale·φ, cap)`, where `raw` approximates `φ` at
/// the nodes to within `NODE_ERROR_PER_MASS·mass` and `φ → mass` at infinity.
/// Returns the profile and a bound on its sup distance to `min(scale·φ, cap)`.
pub fn round_nodes(
    raw: &[f64],
    mass: f64,
    scale: f64,
    cap: f64,
    spacing: f64,
    mode: Rounding,
) -> (NodeProfile, f64) {
    if raw.is_empty() || mass <= 0.0 {
        return (NodeProfile::zero(spacing), 0.0);
    }
    let alpha = scale * (NODE_ERROR_PER_MASS * mass + 1e-300);
    let total = scale * mass * (1.0 + 4.0 * f64::EPSILON);
    let n = raw.len();
    let mut values = vec![0.0; n];
    let mut err = 0.0f64;
    match mode {
        Rounding::Lower => {
            let mut run = 0.0f64;
            for m in 0..n {
                run = run.max(scale * raw[m] - alpha).min(cap);
                values[m] = run;
            }
            for m in 0..n {
                let above = if m + 1 < n {
                    scale * raw[m + 1] + alpha
                } else {
                    total
                };
                err = err.max(above.min(cap) - values[m]);
            }
        }
        Rounding::Upper => {
            let mut run = (total + alpha).min(cap);
            values[n - 1] = run;
            for m in (0..n - 1).rev() {
                run = run.min(scale * raw[m + 1] + alpha);
                values[m] = run.min(cap);
            }
            for m in 0..n {
                let below = (scale * raw[m] - alpha).max(0.0).min(cap);
                err = err.max(values[m] - below);
            }
        }
    }
    (NodeProfile::from_values(spacing, values), err.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::radial_cdf;

    #[test]
    fn gamma_band_matches_direct_values() {
        let mut buf = Vec::new();
        for &(a0, x) in &[(0.5, 0.01), (1.0, 3.0), (1.5, 250.0), (0.5, 4000.0)] {
            let start = gamma_band(a0, x, &mut buf);
            for j in 0..(x as usize + 400) {
                let exact = gamma_p(a0 + j as f64, x);
                let approx = if j < start {
                    1.0
                } else if j < start + buf.len() {
                    buf[j - start]
                } else {
                    0.0
                };
                assert!(
                    (approx - exact).abs() < 1e-13,
                    "a0={a0} x={x} j={j}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gamma_band_matches_reference_values() {
        // regularized lower incomplete gamma, independent reference implementation
        let cases = [
            (1.5, 250.0, 239, 0.7343838677252772),
            (0.5, 4000.0, 3884, 0.9671486525397817),
            (0.5, 4000.0, 3999, 0.5052565618627438),
        ];
        let mut buf = Vec::new();
        for (a0, x, j, expected) in cases {
            let start = gamma_band(a0, x, &mut buf);
            assert!((buf[j - start] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn reach_covers_the_tail() {
        let s = gaussian_reach(1.5, 0.3, 1e-16);
        assert!(gamma_ur(1.5, s * s / 1.2) <= 1e-16);
        assert!(gamma_ur(1.5, 0.99 * 0.99 * s * s / 1.2) > 1e-16);
    }

    #[test]
    fn nodes_match_pointwise_kernel() {
        let ctx = KernelContext::new(2).unwrap();
        let h = 0.01;
        let mut prop = GridPropagator::new(&ctx, 0.05, h).unwrap();
        let sizes = {
            let mut c = vec![0.0; 101];
            c[40] = 0.25;
            c[100] = 0.75;
            c
        };
        let (raw, mass) = prop.apply(Jumps::Nodes(&sizes), 0.0).unwrap();
        assert_eq!(mass, 1.0);
        for (m, &v) in raw.iter().enumerate().step_by(7) {
            let r = m as f64 * h;
            let exact = 0.25 * radial_cdf(&ctx, 0.4, r, 0.05).unwrap()
                + 0.75 * radial_cdf(&ctx, 1.0, r, 0.05).unwrap();
            assert!((v - exact).abs() < 1e-12, "m={m}: {v} vs {exact}");
        }
        let free = [(0.4, 0.25), (1.0, 0.75)];
        let (raw_free, _) = prop.apply(Jumps::Free(&free), 0.0).unwrap();
        assert_eq!(raw.len(), raw_free.len());
        for (a, b) in raw.iter().zip(&raw_free) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rounding_brackets_the_samples() {
        let raw: Vec<f64> = (0..50).map(|i| 1.0 - (-(i as f64) / 10.0).exp()).collect();
        let (lo, e_lo) = round_nodes(&raw, 1.0, 1.0, 1.0, 0.1, Rounding::Lower);
        let (hi, e_hi) = round_nodes(&raw, 1.0, 1.0, 1.0, 0.1, Rounding::Upper);
        for m in 1..49 {
            let r = m as f64 * 0.1 + 0.05;
            let exact = 1.0 - (-r).exp();
            assert!(lo.eval(r) <= exact && exact <= hi.eval(r));
            assert!(exact - lo.eval(r) <= e_lo + 1e-15);
            assert!(hi.eval(r) - exact <= e_hi + 1e-15);
        }
        assert!(e_lo < 0.1 && e_hi < 0.1);
        assert_eq!(hi.last_value(), 1.0);
    }
}
