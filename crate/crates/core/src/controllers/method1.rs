//! Hybrid classifier/regressor state machine.
//!
//! `Normal` frames let the regressor drive `(σ, ε)`; `Spread` frames sweep
//! `α` back and forth at rate Δ; a contraction event toggles a closing mode
//! in which `σ` grows at rate γ until the fingers stall.

use serde::{Deserialize, Serialize};

use super::{Controller, GestureClass, StepOutput};
use crate::error::{Error, Result};
use crate::models::{Classifier, Regressor};
use crate::scalar::Real;
use crate::signal::{window_len, MovingMedian};
use crate::subspace::{project_to_robot, HandMap, SubspacePose, SIGMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Regressing,
    Spreading,
    Closing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct Method1Config<T: Real> {
    /// |Δ| in subspace units per second.
    pub delta: T,
    /// γ in subspace units per second.
    pub gamma: T,
    pub refractory_s: T,
    pub stall_window: usize,
    pub median_window_s: T,
    pub initial: SubspacePose<T>,
}

impl<T: Real> Default for Method1Config<T> {
    fn default() -> Self {
        Self {
            delta: T::lit(0.25),
            gamma: T::lit(0.40),
            refractory_s: T::lit(0.3),
            stall_window: 5,
            median_window_s: T::lit(0.2),
            initial: SubspacePose::origin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ControllerState<T: Real> {
    pub mode: Mode,
    pub psi: SubspacePose<T>,
    /// Signed Δ; the magnitude never changes.
    pub delta_rate: T,
    pub gamma_rate: T,
    /// Inside a run of `Contract` frames.
    pub contract_latch: bool,
    pub refractory_steps_left: usize,
    /// Consecutive closing steps with every σ-driven joint clamped.
    pub stall_counter: usize,
    pub stalled: bool,
}

impl<T: Real> ControllerState<T> {
    pub fn new(cfg: &Method1Config<T>) -> Self {
        Self {
            mode: Mode::Regressing,
            psi: cfg.initial,
            delta_rate: cfg.delta.abs(),
            gamma_rate: cfg.gamma,
            contract_latch: false,
            refractory_steps_left: 0,
            stall_counter: 0,
            stalled: false,
        }
    }
}

/// Snap distance to the `α` bounds, absorbing accumulated rounding.
const EDGE: f64 = 1e-9;

pub struct Method1<'a, T: Real, C: ?Sized, R: ?Sized> {
    cfg: Method1Config<T>,
    dt: T,
    refractory_steps: usize,
    classes: Vec<GestureClass>,
    sigma_joints: Vec<bool>,
    classifier: &'a C,
    regressor: &'a R,
    map: &'a HandMap<T>,
    median: [MovingMedian<T>; 2],
    pub state: ControllerState<T>,
}

impl<'a, T: Real, C: Classifier<T> + ?Sized, R: Regressor<T> + ?Sized> Method1<'a, T, C, R> {
    pub fn new(
        cfg: Method1Config<T>,
        dt: T,
        classifier: &'a C,
        regressor: &'a R,
        map: &'a HandMap<T>,
    ) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(cfg.delta > T::zero() && cfg.gamma > T::zero()) {
            return Err(Error::InvalidConfig(
                "delta and gamma rates must be positive".into(),
            ));
        }
        if cfg.stall_window == 0 {
            return Err(Error::InvalidConfig(
                "stall_window must be at least 1".into(),
            ));
        }
        if classifier.n_features() != regressor.n_features() {
            return Err(Error::dim(
                "regressor features",
                classifier.n_features(),
                regressor.n_features(),
            ));
        }
        if regressor.n_outputs() != 2 {
            return Err(Error::dim(
                "regressor outputs (sigma, epsilon)",
                2,
                regressor.n_outputs(),
            ));
        }
        map.validate()?;
        let classes = classifier
            .class_labels()
            .iter()
            .map(|l| l.parse())
            .collect::<Result<Vec<GestureClass>>>()?;
        let rate = T::one() / dt;
        let median_len = window_len(cfg.median_window_s, rate)?;
        let refractory_steps = (cfg.refractory_s / dt).round().to_usize().unwrap_or(0);
        Ok(Self {
            state: ControllerState::new(&cfg),
            dt,
            refractory_steps,
            classes,
            sigma_joints: map.driven_by(SIGMA),
            classifier,
            regressor,
            map,
            median: [MovingMedian::new(median_len), MovingMedian::new(median_len)],
            cfg,
        })
    }

    pub fn config(&self) -> &Method1Config<T> {
        &self.cfg
    }

    /// Advances with an already decided class; the regressor is consulted
    /// only on `Normal` frames while regressing.
    pub fn step_with_class(&mut self, class: GestureClass, x_hat: &[T]) -> Result<StepOutput<T>> {
        let s = &mut self.state;
        let contract = class == GestureClass::Contract;
        let rising = contract && !s.contract_latch;
        s.contract_latch = contract;
        s.refractory_steps_left = s.refractory_steps_left.saturating_sub(1);
        let toggle = rising && s.refractory_steps_left == 0;

        if toggle {
            s.refractory_steps_left = self.refractory_steps;
            if s.mode == Mode::Closing {
                // exit: hold ψ this frame, regression resumes on the next Normal one
                s.mode = Mode::Regressing;
                s.stall_counter = 0;
                s.stalled = false;
                self.median.iter_mut().for_each(MovingMedian::reset);
                let command = project_to_robot(&s.psi, self.map)?;
                return Ok(self.output(class, command));
            }
            s.mode = Mode::Closing;
            s.stall_counter = 0;
            s.stalled = false;
        }

        if self.state.mode == Mode::Closing {
            return self.close_step(class);
        }

        let s = &mut self.state;
        match class {
            GestureClass::Spread => {
                s.mode = Mode::Spreading;
                let one = T::one();
                let a = s.psi.alpha;
                if (a >= one && s.delta_rate > T::zero())
                    || (a <= T::zero() && s.delta_rate < T::zero())
                {
                    s.delta_rate = -s.delta_rate;
                }
                let mut next = a + s.delta_rate * self.dt;
                let edge = T::lit(EDGE);
                if s.delta_rate > T::zero() && next >= one - edge {
                    next = one;
                    s.delta_rate = -s.delta_rate;
                } else if s.delta_rate < T::zero() && next <= edge {
                    next = T::zero();
                    s.delta_rate = -s.delta_rate;
                }
                s.psi.alpha = next;
            }
            GestureClass::Normal => {
                s.mode = Mode::Regressing;
                if x_hat.len() != self.regressor.n_features() {
                    return Err(Error::dim(
                        "EMG feature vector",
                        self.regressor.n_features(),
                        x_hat.len(),
                    ));
                }
                let y = self.regressor.predict(x_hat)?;
                let sigma = self.median[0].push(y[0]);
                let epsilon = self.median[1].push(y[1]);
                s.psi.sigma = sigma.clamp_to(T::zero(), T::one());
                s.psi.epsilon = epsilon.clamp_to(T::zero(), T::one());
            }
            // a contraction that could not toggle (refractory) holds the pose
            GestureClass::Contract => {}
        }
        let command = project_to_robot(&self.state.psi, self.map)?;
        Ok(self.output(class, command))
    }

    fn close_step(&mut self, class: GestureClass) -> Result<StepOutput<T>> {
        let s = &mut self.state;
        if !s.stalled {
            s.psi.sigma = (s.psi.sigma + s.gamma_rate * self.dt).clamp_to(T::zero(), T::one());
        }
        let command = project_to_robot(&s.psi, self.map)?;
        let any_driven = self.sigma_joints.iter().any(|&d| d);
        let all_clamped = any_driven
            && self
                .sigma_joints
                .iter()
                .zip(&command.clamped)
                .all(|(&driven, &c)| !driven || c);
        s.stall_counter = if all_clamped { s.stall_counter + 1 } else { 0 };
        if s.psi.sigma >= T::one() || s.stall_counter >= self.cfg.stall_window {
            s.stalled = true;
        }
        Ok(self.output(class, command))
    }

    fn output(
        &self,
        class: GestureClass,
        command: crate::subspace::JointCommand<T>,
    ) -> StepOutput<T> {
        StepOutput {
            label: Some(class.as_str().to_string()),
            mode: Some(self.state.mode),
            psi: self.state.psi,
            command,
            stalled: self.state.stalled,
        }
    }
}

impl<T: Real, C: Classifier<T> + ?Sized, R: Regressor<T> + ?Sized> Controller<T>
    for Method1<'_, T, C, R>
{
    fn step(&mut self, x_hat: &[T]) -> Result<StepOutput<T>> {
        if x_hat.len() != self.classifier.n_features() {
            return Err(Error::dim(
                "EMG feature vector",
                self.classifier.n_features(),
                x_hat.len(),
            ));
        }
        let class = self.classes[self.classifier.predict_index(x_hat)?];
        self.step_with_class(class, x_hat)
    }

    fn reset(&mut self) {
        self.state = ControllerState::new(&self.cfg);
        self.median.iter_mut().for_each(MovingMedian::reset);
    }
}

#[cfg(test)]
mod tests {
    use super::super::stubs::{ConstantRegressor, LabelFromFeature};
    use super::*;

    fn wide_map() -> HandMap<f64> {
        HandMap {
            name: "wide".into(),
            n_joints: 3,
            a: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            o: vec![0.0; 3],
            delta: [1.0; 3],
            delta_star: [1.0; 3],
            joint_limits: vec![[-5.0, 5.0]; 3],
        }
    }

    #[test]
    fn spread_sweeps_alpha_and_flips_at_one() {
        let clf = LabelFromFeature::gestures(2, 0);
        let reg = ConstantRegressor::new(vec![0.3, 0.7], 2);
        let map = wide_map();
        let cfg = Method1Config {
            delta: 0.25,
            ..Method1Config::default()
        };
        let mut m = Method1::new(cfg, 0.2, &clf, &reg, &map).unwrap();
        m.state.psi.alpha = 0.9;
        let spread = [1.0, 0.0];
        let a1 = m.step(&spread).unwrap().psi.alpha;
        assert!((a1 - 0.95).abs() < 1e-12);
        assert_eq!(m.step(&spread).unwrap().psi.alpha, 1.0);
        assert!(m.state.delta_rate < 0.0);
        assert!((m.step(&spread).unwrap().psi.alpha - 0.95).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_feature_length() {
        let clf = LabelFromFeature::gestures(2, 0);
        let reg = ConstantRegressor::new(vec![0.3, 0.7], 2);
        let map = wide_map();
        let mut m = Method1::new(Method1Config::default(), 0.005, &clf, &reg, &map).unwrap();
        assert!(matches!(m.step(&[0.0]), Err(Error::Dimension { .. })));
    }
}
