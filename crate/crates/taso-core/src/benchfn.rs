//! Analytic 2-D loss landscapes with exact gradients, for optimizer unit
//! tests and for exercising the two-phase (plateau-then-basin) training
//! hypothesis without neural networks.

use std::io::Write;

use crate::error::{Error, Result};
use crate::optim::Optimizer;
use crate::schedule::{lr_for_epoch, ScheduleKind};

/// Iterates whose coordinates exceed this magnitude are reported as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

// plateau_saddle construction constants. The saddle sits at the origin; its
// softplus-tamed descent valley runs along the negative x axis through a
// smooth partition gate on [BLEND_FAR, BLEND_NEAR] into a quadratic basin.
// The plateau elevation keeps the whole gate downhill toward the basin.
pub const PLATEAU_BLEND_NEAR: f64 = -1.0;
pub const PLATEAU_BLEND_FAR: f64 = -3.0;
pub const PLATEAU_BASIN_CENTER: f64 = -6.0;
pub const PLATEAU_HEIGHT: f64 = 16.0;

/// Step budget of the canonical two-phase demonstration on
/// [`plateau_saddle`].
pub const TWO_PHASE_STEPS: u32 = 400;
/// Basin threshold of the demonstration: the plateau sits at f >= 16 and the
/// blend zone above 4, so f <= 1 unambiguously means "inside the basin".
pub const TWO_PHASE_TAU: f64 = 1.0;
/// Final learning rate of the demonstration; the sigmoidal run starts at 20
/// times this value, which is unstable inside the basin (curvature 1).
pub const TWO_PHASE_LR_FINAL: f64 = 0.125;
/// Fixed start points on the saddle plateau, on the descent valley along the
/// negative x axis. Radii are tuned so the sigmoidal run's basin arrival
/// lands after its rate has dropped into the basin-stable band but before
/// the budget runs out; the low constant rate crawls roughly twenty times
/// slower and cannot cross within the budget from any of them.
pub const TWO_PHASE_STARTS: [[f64; 2]; 10] = [
    [-9.06e-4, 0.0],
    [-9.12e-4, 0.0],
    [-9.18e-4, 0.0],
    [-9.24e-4, 0.0],
    [-9.30e-4, 0.0],
    [-9.36e-4, 0.0],
    [-9.42e-4, 0.0],
    [-9.50e-4, 0.0],
    [-9.58e-4, 0.0],
    [-9.66e-4, 0.0],
];

/// Raw monkey-saddle component `x^3 - 3xy^2`.
pub fn monkey_saddle(x: f64, y: f64) -> f64 {
    x * x * x - 3.0 * x * y * y
}

/// Exact gradient of the monkey-saddle component: `(3x^2 - 3y^2, -6xy)`.
pub fn monkey_saddle_grad(x: f64, y: f64) -> (f64, f64) {
    (3.0 * x * x - 3.0 * y * y, -6.0 * x * y)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// C^2 partition weight: exactly 0 for `x >= PLATEAU_BLEND_NEAR`, exactly 1
/// for `x <= PLATEAU_BLEND_FAR`, quintic smootherstep in between. Returns
/// `(w, dw/dx)`.
fn gate(x: f64) -> (f64, f64) {
    if x >= PLATEAU_BLEND_NEAR {
        return (0.0, 0.0);
    }
    if x <= PLATEAU_BLEND_FAR {
        return (1.0, 0.0);
    }
    let width = PLATEAU_BLEND_NEAR - PLATEAU_BLEND_FAR;
    let t = (PLATEAU_BLEND_NEAR - x) / width;
    let w = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
    let dw_dt = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    (w, -dw_dt / width)
}

enum LandscapeKind {
    Quadratic { cond: f64 },
    Rosenbrock,
    PlateauSaddle,
}

/// A named 2-D objective with an exact gradient.
pub struct LandscapeFn {
    kind: LandscapeKind,
}

/// `f(x, y) = (x^2 + cond * y^2) / 2`: an axis-aligned quadratic bowl with
/// condition number `cond >= 1`, minimizer at the origin.
pub fn quadratic(cond: f64) -> Result<LandscapeFn> {
    if !cond.is_finite() || cond < 1.0 {
        return Err(Error::Config(format!(
            "condition number must be at least 1, got {cond}"
        )));
    }
    Ok(LandscapeFn {
        kind: LandscapeKind::Quadratic { cond },
    })
}

/// `f(x, y) = (1 - x)^2 + 100 (y - x^2)^2`, minimizer `(1, 1)`.
pub fn rosenbrock() -> LandscapeFn {
    LandscapeFn {
        kind: LandscapeKind::Rosenbrock,
    }
}

/// Wide near-flat saddle plateau feeding a quadratic basin: the
/// softplus-smoothed monkey saddle `x^3 - 3xy^2` is elevated by
/// [`PLATEAU_HEIGHT`] and blended through a smooth partition in `x` with the
/// basin `((x - c)^2 + y^2) / 2` centered at `c = `[`PLATEAU_BASIN_CENTER`].
/// The saddle sits at the origin with an exactly zero gradient; the global
/// minimizer is `(c, 0)` with `f = 0`.
pub fn plateau_saddle() -> LandscapeFn {
    LandscapeFn {
        kind: LandscapeKind::PlateauSaddle,
    }
}

impl LandscapeFn {
    pub fn name(&self) -> &'static str {
        match self.kind {
            LandscapeKind::Quadratic { .. } => "quadratic",
            LandscapeKind::Rosenbrock => "rosenbrock",
            LandscapeKind::PlateauSaddle => "plateau_saddle",
        }
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let (x, y) = (p[0], p[1]);
        match self.kind {
            LandscapeKind::Quadratic { cond } => 0.5 * (x * x + cond * y * y),
            LandscapeKind::Rosenbrock => (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x),
            LandscapeKind::PlateauSaddle => {
                let (w, _) = gate(x);
                let plateau = softplus(monkey_saddle(x, y)) + PLATEAU_HEIGHT;
                let dxc = x - PLATEAU_BASIN_CENTER;
                let basin = 0.5 * (dxc * dxc + y * y);
                (1.0 - w) * plateau + w * basin
            }
        }
    }

    pub fn gradient_into(&self, p: &[f64], out: &mut [f64]) {
        let (x, y) = (p[0], p[1]);
        match self.kind {
            LandscapeKind::Quadratic { cond } => {
                out[0] = x;
                out[1] = cond * y;
            }
            LandscapeKind::Rosenbrock => {
                out[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
                out[1] = 200.0 * (y - x * x);
            }
            LandscapeKind::PlateauSaddle => {
                let (w, dw) = gate(x);
                let s = monkey_saddle(x, y);
                let (sx, sy) = monkey_saddle_grad(x, y);
                let sig = logistic(s);
                let plateau = softplus(s) + PLATEAU_HEIGHT;
                let dxc = x - PLATEAU_BASIN_CENTER;
                let basin = 0.5 * (dxc * dxc + y * y);
                out[0] = (1.0 - w) * sig * sx + w * dxc + dw * (basin - plateau);
                out[1] = (1.0 - w) * sig * sy + w * y;
            }
        }
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; 2];
        self.gradient_into(p, &mut g);
        g
    }

    pub fn minimizer(&self) -> Option<Vec<f64>> {
        match self.kind {
            LandscapeKind::Quadratic { .. } => Some(vec![0.0, 0.0]),
            LandscapeKind::Rosenbrock => Some(vec![1.0, 1.0]),
            LandscapeKind::PlateauSaddle => Some(vec![PLATEAU_BASIN_CENTER, 0.0]),
        }
    }

    /// Known saddle points (critical points that are neither minima nor
    /// maxima), if any.
    pub fn saddles(&self) -> Vec<Vec<f64>> {
        match self.kind {
            LandscapeKind::PlateauSaddle => vec![vec![0.0, 0.0]],
            _ => Vec::new(),
        }
    }
}

/// One optimization run on a landscape.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Visited points; `points[0]` is the start, one entry per step after it.
    pub points: Vec<Vec<f64>>,
    /// Objective value at each visited point.
    pub values: Vec<f64>,
    /// Learning rate used for each step (`lrs.len() == points.len() - 1`).
    pub lrs: Vec<f64>,
    /// First index `i` with `values[i] <= tau`, if the threshold was reached.
    pub first_passage: Option<usize>,
    /// Step at which the iterate left the trust region or produced a
    /// non-finite value, if it did.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    pub fn steps_taken(&self) -> usize {
        self.points.len() - 1
    }

    /// Final objective value; diverged runs rank as infinitely bad.
    pub fn final_value(&self) -> f64 {
        if self.diverged_at.is_some() {
            f64::INFINITY
        } else {
            *self.values.last().expect("non-empty trajectory")
        }
    }
}

/// Runs `steps` gradient steps from `start`, one schedule epoch per step
/// (a sigmoidal schedule must therefore have `total_epochs == steps`).
/// Divergence is recorded, not raised: the trajectory ends at the offending
/// step with `diverged_at` set.
pub fn run_trajectory(
    f: &LandscapeFn,
    opt: &mut Optimizer,
    schedule: &ScheduleKind,
    start: &[f64],
    steps: u32,
    tau: f64,
) -> Result<Trajectory> {
    if start.len() != f.dim() {
        return Err(Error::Contract(format!(
            "start point has {} coordinates, landscape needs {}",
            start.len(),
            f.dim()
        )));
    }
    if steps < 1 {
        return Err(Error::Contract("trajectory needs at least one step".into()));
    }
    if let Some(total) = schedule.total_epochs() {
        if total != steps {
            return Err(Error::Contract(format!(
                "schedule budget {total} does not match step budget {steps}"
            )));
        }
    }
    let mut x = start.to_vec();
    let mut grad = vec![0.0; x.len()];
    let v0 = f.value(&x);
    let mut traj = Trajectory {
        points: vec![x.clone()],
        values: vec![v0],
        lrs: Vec::new(),
        first_passage: if v0 <= tau { Some(0) } else { None },
        diverged_at: None,
    };
    for k in 1..=steps {
        let lr = lr_for_epoch(schedule, k)?;
        f.gradient_into(&x, &mut grad);
        opt.step(0, &mut x, &grad, lr)?;
        let v = f.value(&x);
        traj.points.push(x.clone());
        traj.values.push(v);
        traj.lrs.push(lr);
        let exploded = !v.is_finite() || x.iter().any(|c| c.abs() > DIVERGENCE_LIMIT);
        if exploded {
            traj.diverged_at = Some(k as usize);
            break;
        }
        if traj.first_passage.is_none() && v <= tau {
            traj.first_passage = Some(k as usize);
        }
    }
    Ok(traj)
}

/// Writes a trajectory as CSV: header `step,x0,...,f,lr`, one row per step
/// taken (the start point is `points[0]`, not a row).
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: &mut W) -> Result<()> {
    let dim = traj.points[0].len();
    write!(w, "step")?;
    for i in 0..dim {
        write!(w, ",x{i}")?;
    }
    writeln!(w, ",f,lr")?;
    for k in 1..traj.points.len() {
        write!(w, "{k}")?;
        for c in &traj.points[k] {
            write!(w, ",{c}")?;
        }
        writeln!(w, ",{},{}", traj.values[k], traj.lrs[k - 1])?;
    }
    Ok(())
}
