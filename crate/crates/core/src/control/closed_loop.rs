use std::collections::VecDeque;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DVector;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{IdealMpc, RegularizedDeepc, SmmPredictiveControl, SubspacePredictiveControl, Weight};
use crate::lti::{LtiSystem, NoiseModel};
use crate::rng::{stream_rng, Stream};
use crate::signal_matrix::SignalMatrixSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    SubPc,
    Deepc,
    SmmPc,
    #[serde(rename = "mpc")]
    IdealMpc,
}

impl ControllerKind {
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::SubPc => "subpc",
            ControllerKind::Deepc => "deepc",
            ControllerKind::SmmPc => "smmpc",
            ControllerKind::IdealMpc => "mpc",
        }
    }
}

/// Controller choice and tuning for a closed-loop run.
///
/// `noise` is what the SMM predictor assumes; its online variance is also
/// the measurement noise injected into the loop, for every controller kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub l0: usize,
    pub lp: usize,
    pub q: Weight,
    pub r: Weight,
    pub lambda_g: f64,
    pub lambda_y: f64,
    pub noise: NoiseModel,
    /// Box bounds on inputs; reserved, any value is rejected.
    #[serde(default)]
    pub input_bounds: Option<(f64, f64)>,
    /// Box bounds on outputs; reserved, any value is rejected.
    #[serde(default)]
    pub output_bounds: Option<(f64, f64)>,
}

impl ControllerConfig {
    pub fn new(kind: ControllerKind, l0: usize, lp: usize, noise: NoiseModel) -> Self {
        Self {
            kind,
            l0,
            lp,
            q: Weight::Scalar(1.0),
            r: Weight::Scalar(1.0),
            lambda_g: 100.0,
            lambda_y: 1000.0,
            noise,
            input_bounds: None,
            output_bounds: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_bounds.is_some() || self.output_bounds.is_some() {
            return Err(Error::NotImplemented("input and output constraints".into()));
        }
        if self.lp == 0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        self.q.diagonal(self.lp)?;
        self.r.diagonal(self.lp)?;
        if self.kind == ControllerKind::Deepc && !(self.lambda_g > 0.0 && self.lambda_y > 0.0) {
            return Err(Error::InvalidArgument("DeePC weights must be positive".into()));
        }
        Ok(())
    }
}

/// Reference trajectory generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Reference {
    Constant { value: f64 },
    Sine { amplitude: f64, angular_frequency: f64 },
}

impl Default for Reference {
    /// `0.5 sin(pi t / 10)`.
    fn default() -> Self {
        Reference::Sine { amplitude: 0.5, angular_frequency: PI / 10.0 }
    }
}

impl Reference {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Reference::Constant { value } => *value,
            Reference::Sine { amplitude, angular_frequency } => amplitude * (angular_frequency * t as f64).sin(),
        }
    }

    pub fn window(&self, start: usize, len: usize) -> DVector<f64> {
        DVector::from_fn(len, |k, _| self.at(start + k))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepStatus {
    Solved,
    /// The controller failed and zero input was applied.
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopResult {
    pub u: Vec<f64>,
    /// Measured outputs including online noise.
    pub y: Vec<f64>,
    /// Noise-free outputs.
    pub y0: Vec<f64>,
    pub r: Vec<f64>,
    pub status: Vec<StepStatus>,
    /// Wall-clock seconds spent in each controller solve.
    pub solve_time: Vec<f64>,
    pub cost: f64,
}

impl ClosedLoopResult {
    /// `sum_t q (y0_t - r_t)^2 + r u_t^2` from the stored sequences.
    pub fn recompute_cost(&self, q: f64, r: f64) -> f64 {
        let tracking: f64 = self.y0.iter().zip(&self.r).map(|(y, rt)| q * (y - rt).powi(2)).sum();
        tracking + self.u.iter().map(|u| r * u * u).sum::<f64>()
    }

    pub fn failures(&self) -> usize {
        self.status.iter().filter(|s| matches!(s, StepStatus::Failed(_))).count()
    }

    pub fn total_solve_time(&self) -> f64 {
        self.solve_time.iter().sum()
    }
}

enum Active {
    SubPc(SubspacePredictiveControl),
    Deepc(RegularizedDeepc),
    SmmPc(SmmPredictiveControl),
    Mpc(IdealMpc),
}

impl Active {
    fn build(plant: &LtiSystem, config: &ControllerConfig, set: Option<&SignalMatrixSet>) -> Result<Self> {
        if config.kind == ControllerKind::IdealMpc {
            return Ok(Active::Mpc(IdealMpc::new(plant, config.lp, &config.q, &config.r)?));
        }
        let set = set.ok_or_else(|| Error::InvalidArgument(format!("{} needs data matrices", config.kind.label())))?;
        set.require_siso()?;
        if set.l0() != config.l0 || set.lp() != config.lp {
            return Err(Error::Dimension(format!(
                "data matrices have L0={}, L'={}, controller expects L0={}, L'={}",
                set.l0(),
                set.lp(),
                config.l0,
                config.lp
            )));
        }
        Ok(match config.kind {
            ControllerKind::SubPc => Active::SubPc(SubspacePredictiveControl::new(set, &config.q, &config.r)?),
            ControllerKind::Deepc => {
                Active::Deepc(RegularizedDeepc::new(set, &config.q, &config.r, config.lambda_g, config.lambda_y)?)
            }
            ControllerKind::SmmPc => Active::SmmPc(SmmPredictiveControl::new(set, &config.q, &config.r, config.noise)?),
            ControllerKind::IdealMpc => unreachable!(),
        })
    }

    fn step(&mut self, x: &DVector<f64>, u_ini: &DVector<f64>, y_ini: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Active::SubPc(c) => Ok(c.step(u_ini, y_ini, r)?.u),
            Active::Deepc(c) => Ok(c.step(u_ini, y_ini, r)?.u),
            Active::SmmPc(c) => Ok(c.step(u_ini, y_ini, r)?.u),
            Active::Mpc(c) => c.step(x, r),
        }
    }
}

/// Simulates `n_steps` of receding-horizon control on a SISO plant.
///
/// The plant starts at rest and first runs `L0` zero-input steps to fill the
/// past window; those are not part of the result. Step `t` then tracks
/// `r_t, ..., r_{t+L'-1}`.
pub fn receding_horizon_run(
    plant: &LtiSystem,
    config: &ControllerConfig,
    set: Option<&SignalMatrixSet>,
    reference: &Reference,
    n_steps: usize,
    seed: u64,
) -> Result<ClosedLoopResult> {
    config.validate()?;
    if plant.nu() != 1 || plant.ny() != 1 {
        return Err(Error::NotSiso { nu: plant.nu(), ny: plant.ny() });
    }
    let mut controller = Active::build(plant, config, set)?;
    let mut rng = stream_rng(seed, Stream::OnlineNoise);
    let normal = Normal::new(0.0, config.noise.sigma_p2.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut measure = |y0: f64| y0 + normal.sample(&mut rng);

    let l0 = config.l0;
    let mut x = DVector::zeros(plant.nx());
    let mut past_u: VecDeque<f64> = VecDeque::with_capacity(l0 + 1);
    let mut past_y: VecDeque<f64> = VecDeque::with_capacity(l0 + 1);
    let mut advance = |x: &mut DVector<f64>, u: f64, past_u: &mut VecDeque<f64>, past_y: &mut VecDeque<f64>| {
        let (next, y0) = plant.step(x, &DVector::from_element(1, u));
        let y = measure(y0[0]);
        past_u.push_back(u);
        past_y.push_back(y);
        if past_u.len() > l0 {
            past_u.pop_front();
            past_y.pop_front();
        }
        *x = next;
        (y0[0], y)
    };

    for _ in 0..l0 {
        advance(&mut x, 0.0, &mut past_u, &mut past_y);
    }

    let mut out = ClosedLoopResult {
        u: Vec::with_capacity(n_steps),
        y: Vec::with_capacity(n_steps),
        y0: Vec::with_capacity(n_steps),
        r: Vec::with_capacity(n_steps),
        status: Vec::with_capacity(n_steps),
        solve_time: Vec::with_capacity(n_steps),
        cost: 0.0,
    };
    for t in 0..n_steps {
        let u_ini = DVector::from_iterator(l0, past_u.iter().copied());
        let y_ini = DVector::from_iterator(l0, past_y.iter().copied());
        let r_h = reference.window(t, config.lp);
        let started = Instant::now();
        let plan = controller.step(&x, &u_ini, &y_ini, &r_h);
        out.solve_time.push(started.elapsed().as_secs_f64());
        let u = match plan {
            Ok(plan) if plan[0].is_finite() => {
                out.status.push(StepStatus::Solved);
                plan[0]
            }
            Ok(_) => {
                out.status.push(StepStatus::Failed("non-finite input".into()));
                0.0
            }
            Err(e) => {
                out.status.push(StepStatus::Failed(e.to_string()));
                0.0
            }
        };
        let (y0, y) = advance(&mut x, u, &mut past_u, &mut past_y);
        out.u.push(u);
        out.y.push(y);
        out.y0.push(y0);
        out.r.push(reference.at(t));
    }
    out.cost = out.recompute_cost(config.q.stage(), config.r.stage());
    Ok(out)
}
