use crate::error::{Error, Result};
use crate::kernel::{round_nodes, GridPropagator, Jumps, KernelContext, NodeProfile, Rounding, NODE_ERROR_PER_MASS};
use crate::profile::RadialProfile;
use serde::Serialize;

/// Default spacing of the solver grid.
pub const DEFAULT_SPACING: f64 = 1e-4;

/// Spatial discretization of the sandwich iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct GridPolicy {
    /// Uniform node spacing `h`.
    pub spacing: f64,
    /// Node values within this of the total mass end the computed range.
    pub trim: f64,
    /// Cap on cached kernel table entries.
    pub max_table_entries: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            spacing: DEFAULT_SPACING,
            trim: 1e-10,
            max_table_entries: GridPropagator::DEFAULT_MAX_ENTRIES,
        }
    }
}

/// How the time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    /// Requested `δ`; rounded down so that `t/δ` is an integer.
    StepSize(f64),
    /// Target analytic gap; `δ = gap / (2(e^t + 1)e)`, then rounded as above.
    TargetGap(f64),
}

/// Initial condition of the obstacle problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Profile(RadialProfile),
    /// Step functions enclosing a continuous initial condition.
    Bracket { lower: RadialProfile, upper: RadialProfile },
}

impl Initial {
    fn parts(&self) -> (&RadialProfile, &RadialProfile) {
        match self {
            Initial::Profile(p) => (p, p),
            Initial::Bracket { lower, upper } => (lower, upper),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    pub dim: usize,
    pub initial: Initial,
    pub horizon: f64,
    pub stepping: Stepping,
    pub grid: GridPolicy,
}

impl SolveRequest {
    pub fn new(dim: usize, initial: RadialProfile, horizon: f64, step_size: f64) -> Self {
        Self {
            dim,
            initial: Initial::Profile(initial),
            horizon,
            stepping: Stepping::StepSize(step_size),
            grid: GridPolicy::default(),
        }
    }

    /// `(k, δ)` with `k δ = horizon`.
    pub fn schedule(&self) -> Result<(usize, f64)> {
        let t = self.horizon;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("horizon must be positive, got {t}")));
        }
        let requested = match self.stepping {
            Stepping::StepSize(d) => d,
            Stepping::TargetGap(g) => {
                if !(g > 0.0) {
                    return Err(Error::domain(format!("target gap must be positive, got {g}")));
                }
                g / (2.0 * (t.exp() + 1.0) * std::f64::consts::E)
            }
        };
        if !(requested > 0.0) || !requested.is_finite() {
            return Err(Error::domain(format!("step size must be positive, got {requested}")));
        }
        let k = ((t / requested) - 1e-9).ceil().max(1.0) as usize;
        Ok((k, t / k as f64))
    }
}

/// `(e^{kδ} + 1)(e^δ − 1)`.
pub fn analytic_gap(steps: usize, delta: f64) -> f64 {
    ((steps as f64 * delta).exp() + 1.0) * delta.exp_m1()
}

/// Lower and upper bracket of the obstacle solution at time `steps_taken·step_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichPair {
    pub lower: RadialProfile,
    pub upper: RadialProfile,
    pub analytic_gap: f64,
    /// Accumulated rounding allowance, including the propagated width of a
    /// bracketed initial condition.
    pub grid_gap: f64,
    pub steps_taken: usize,
    pub step_size: f64,
    /// Measured `sup (upper − lower)`.
    pub measured_gap: f64,
    /// Set when `grid_gap > analytic_gap`: the grid is too coarse for the step.
    pub grid_dominated: bool,
}

impl SandwichPair {
    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.step_size
    }

    pub fn certified_gap(&self) -> f64 {
        self.analytic_gap + self.grid_gap
    }

    /// `[R(upper), R(lower)]`.
    pub fn boundary_interval(&self, tol: f64) -> (f64, f64) {
        (free_boundary_radius(&self.upper, tol), free_boundary_radius(&self.lower, tol))
    }

    /// Pointwise midpoint of the bracket.
    pub fn midpoint(&self) -> RadialProfile {
        self.lower.midpoint(&self.upper)
    }
}

/// `inf{r : v(r) ≥ 1 − tol}`, or `+∞` when the profile stays below.
pub fn free_boundary_radius(v: &RadialProfile, tol: f64) -> f64 {
    v.jumps()
        .find(|&(_, value)| value >= 1.0 - tol)
        .map(|(a, _)| a)
        .unwrap_or(f64::INFINITY)
}

pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 1e-6;

enum Branch {
    Initial(RadialProfile),
    Grid(NodeProfile),
}

impl Branch {
    fn cutoff(&self, m: f64) -> Branch {
        match self {
            Branch::Initial(p) => Branch::Initial(p.cutoff(m)),
            Branch::Grid(p) => Branch::Grid(p.cutoff(m)),
        }
    }
}

/// Step-by-step sandwich iteration sharing one propagator for both branches.
pub struct SandwichSolver {
    prop: GridPropagator,
    grid: GridPolicy,
    delta: f64,
    total_steps: usize,
    taken: usize,
    lower: Branch,
    upper: Branch,
    grid_gap: f64,
    domain_cap: f64,
}

impl SandwichSolver {
    pub fn new(req: &SolveRequest) -> Result<Self> {
        let ctx = KernelContext::new(req.dim)?;
        let (total_steps, delta) = req.schedule()?;
        let grid = req.grid;
        let prop = GridPropagator::new(&ctx, delta, grid.spacing)?.with_max_entries(grid.max_table_entries);
        let (lo, hi) = req.initial.parts();
        if lo.sup_excess(hi) > 0.0 {
            return Err(Error::domain("initial bracket has lower above upper"));
        }
        let initial_gap = hi.sup_excess(lo);
        let reach = prop.reach() * (total_steps as f64).sqrt();
        let domain_cap = lo
            .domain_cap()
            .max(hi.domain_cap())
            .max(hi.max_location().unwrap_or(0.0).max(lo.max_location().unwrap_or(0.0)) + reach);
        Ok(Self {
            prop,
            grid,
            delta,
            total_steps,
            taken: 0,
            lower: Branch::Initial(lo.clone()),
            upper: Branch::Initial(hi.clone()),
            grid_gap: initial_gap,
            domain_cap,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.delta
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn steps_taken(&self) -> usize {
        self.taken
    }

    pub fn time(&self) -> f64 {
        self.taken as f64 * self.delta
    }

    pub fn is_done(&self) -> bool {
        self.taken >= self.total_steps
    }

    pub fn grid_gap(&self) -> f64 {
        self.grid_gap
    }

    fn advance(prop: &mut GridPropagator, grid: &GridPolicy, state: &Branch, delta: f64, mode: Rounding) -> Result<(NodeProfile, f64)> {
        let scale = delta.exp();
        let input = match mode {
            Rounding::Lower => state.cutoff((-delta).exp()),
            Rounding::Upper => match state {
                Branch::Initial(p) => Branch::Initial(p.clone()),
                Branch::Grid(p) => Branch::Grid(p.clone()),
            },
        };
        let (raw, mass) = match &input {
            Branch::Initial(p) => {
                let jumps = p.jump_sizes();
                let mass: f64 = jumps.iter().map(|j| j.1).sum();
                let stop = stop_value(mode, scale, mass);
                prop.apply_until(Jumps::Free(&jumps), grid.trim, stop)?
            }
            Branch::Grid(p) => {
                let sizes = p.jump_sizes();
                let mass: f64 = sizes.iter().sum();
                let stop = stop_value(mode, scale, mass);
                prop.apply_until(Jumps::Nodes(&sizes), grid.trim, stop)?
            }
        };
        Ok(round_nodes(&raw, mass, scale, 1.0, grid.spacing, mode))
    }

    /// One step of each branch. Returns `false` once the horizon is reached.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_done() {
            return Ok(false);
        }
        let (lower, e_lo) = Self::advance(&mut self.prop, &self.grid, &self.lower, self.delta, Rounding::Lower)?;
        let (upper, e_hi) = Self::advance(&mut self.prop, &self.grid, &self.upper, self.delta, Rounding::Upper)?;
        let crossing = lower.sup_excess(&upper);
        if crossing > 0.0 {
            return Err(Error::Invariant(format!(
                "lower branch exceeds upper by {crossing} at step {}",
                self.taken + 1
            )));
        }
        self.grid_gap = self.grid_gap * self.delta.exp() + e_lo + e_hi;
        self.lower = Branch::Grid(lower);
        self.upper = Branch::Grid(upper);
        self.taken += 1;
        let extent = match &self.upper {
            Branch::Grid(p) => p.extent().max(match &self.lower {
                Branch::Grid(q) => q.extent(),
                Branch::Initial(_) => 0.0,
            }),
            Branch::Initial(_) => 0.0,
        };
        self.domain_cap = self.domain_cap.max(extent + self.grid.spacing);
        Ok(true)
    }

    /// Current bracket as profiles.
    pub fn pair(&self) -> Result<SandwichPair> {
        let to_profile = |b: &Branch| -> Result<RadialProfile> {
            match b {
                Branch::Initial(p) => Ok(p.clone()),
                Branch::Grid(p) => p.to_profile(self.domain_cap),
            }
        };
        let lower = to_profile(&self.lower)?;
        let upper = to_profile(&self.upper)?;
        let measured_gap = upper.sup_excess(&lower);
        let analytic = analytic_gap(self.taken, self.delta);
        Ok(SandwichPair {
            lower,
            upper,
            analytic_gap: analytic,
            grid_gap: self.grid_gap,
            steps_taken: self.taken,
            step_size: self.delta,
            measured_gap,
            grid_dominated: self.grid_gap > analytic,
        })
    }

    /// Runs to the horizon and checks the certified gap.
    pub fn finish(mut self) -> Result<SandwichPair> {
        while self.step()? {}
        let pair = self.pair()?;
        check_certificate(&pair)?;
        Ok(pair)
    }
}

fn stop_value(mode: Rounding, scale: f64, mass: f64) -> f64 {
    match mode {
        // past this raw value the clamped upper branch is identically 1
        Rounding::Upper => 1.0 / scale + 2.0 * NODE_ERROR_PER_MASS * mass,
        Rounding::Lower => f64::INFINITY,
    }
}

pub(crate) fn check_certificate(pair: &SandwichPair) -> Result<()> {
    let bound = pair.certified_gap() * (1.0 + 1e-12) + 1e-12;
    if pair.measured_gap > bound {
        return Err(Error::Invariant(format!(
            "bracket width {} exceeds certified gap {}",
            pair.measured_gap, bound
        )));
    }
    Ok(())
}

/// `v^{k,δ,±}` at the request's horizon.
pub fn solve_sandwich(req: &SolveRequest) -> Result<SandwichPair> {
    SandwichSolver::new(req)?.finish()
}

fn single_step(ctx: &KernelContext, v: &RadialProfile, delta: f64, grid: &GridPolicy, mode: Rounding) -> Result<RadialProfile> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("step size must be positive, got {delta}")));
    }
    let mut prop = GridPropagator::new(ctx, delta, grid.spacing)?.with_max_entries(grid.max_table_entries);
    let (node, _) = SandwichSolver::advance(&mut prop, grid, &Branch::Initial(v.clone()), delta, mode)?;
    let cap = v.domain_cap().max(v.max_location().unwrap_or(0.0) + prop.reach());
    node.to_profile(cap)
}

/// `C_1(e^δ G_δ v)`, rounded up.
pub fn step_plus(ctx: &KernelContext, v: &RadialProfile, delta: f64, grid: &GridPolicy) -> Result<RadialProfile> {
    single_step(ctx, v, delta, grid, Rounding::Upper)
}

/// `e^δ G_δ(C_{e^{−δ}} v)`, rounded down.
pub fn step_minus(ctx: &KernelContext, v: &RadialProfile, delta: f64, grid: &GridPolicy) -> Result<RadialProfile> {
    single_step(ctx, v, delta, grid, Rounding::Lower)
}
