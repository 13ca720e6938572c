//! Momentum, QNG, Momentum-QNG and Adam.
//!
//! Every step returns the displacement Δθ_{n+1}; the caller owns θ and adds
//! it. Momentum-QNG is the discretized Langevin update
//!
//! ```text
//! Δθ_{n+1} = ρ·Δθ_n + η·f̂_n,    f̂_n = −(g + λI)⁻¹ ∇E(θ_n)
//! ```
//!
//! with the random force taken as exactly zero (gradients are exact), and
//! (ρ, η) related to friction γ and time step Δt by [`langevin_to_hyperparams`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metric::{natural_direction, MetricTensor, DEFAULT_LAMBDA};
use crate::{Error, Result};

pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_RHO: f64 = 0.9;
pub const DEFAULT_ADAM_BETA1: f64 = 0.9;
pub const DEFAULT_ADAM_BETA2: f64 = 0.99;
pub const DEFAULT_ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Qng,
    Adam,
    MomentumQng,
    Momentum,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::Qng,
        OptimizerKind::Adam,
        OptimizerKind::MomentumQng,
        OptimizerKind::Momentum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Qng => "qng",
            OptimizerKind::Adam => "adam",
            OptimizerKind::MomentumQng => "momentum-qng",
            OptimizerKind::Momentum => "momentum",
        }
    }

    /// Whether the step consumes the Fubini-Study metric.
    pub fn uses_metric(self) -> bool {
        matches!(self, OptimizerKind::Qng | OptimizerKind::MomentumQng)
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "qng" => Ok(OptimizerKind::Qng),
            "adam" => Ok(OptimizerKind::Adam),
            "momentum-qng" | "mqng" => Ok(OptimizerKind::MomentumQng),
            "momentum" => Ok(OptimizerKind::Momentum),
            other => Err(Error::InvalidArgument(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub eta: f64,
    pub rho: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Tikhonov shift for the metric solve.
    pub lambda: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            eta: DEFAULT_ETA,
            rho: DEFAULT_RHO,
            adam_beta1: DEFAULT_ADAM_BETA1,
            adam_beta2: DEFAULT_ADAM_BETA2,
            adam_eps: DEFAULT_ADAM_EPS,
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::InvalidArgument("Adam betas must lie in [0, 1)".into()));
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::InvalidArgument("Adam epsilon must be > 0".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::new(OptimizerKind::MomentumQng)
    }
}

/// Friction γ and time step Δt of unit-mass Langevin dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinParams {
    pub gamma: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub rho: f64,
    pub eta: f64,
}

/// ρ = (1 − γΔt/2)/(1 + γΔt/2), η = Δt²/(1 + γΔt/2).
pub fn langevin_to_hyperparams(p: LangevinParams) -> Result<Hyperparams> {
    if !(p.dt > 0.0 && p.dt.is_finite()) || !(p.gamma >= 0.0 && p.gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and gamma >= 0, got dt={} gamma={}",
            p.dt, p.gamma
        )));
    }
    let half = p.gamma * p.dt / 2.0;
    Ok(Hyperparams {
        rho: (1.0 - half) / (1.0 + half),
        eta: p.dt * p.dt / (1.0 + half),
    })
}

/// Inverse of [`langevin_to_hyperparams`]: Δt = √(2η/(1+ρ)),
/// γ = (2/Δt)·(1−ρ)/(1+ρ). ρ = 1 maps to γ = 0.
pub fn hyperparams_to_langevin(rho: f64, eta: f64) -> Result<LangevinParams> {
    if !(0.0..=1.0).contains(&rho) || !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= rho <= 1 and eta > 0, got rho={rho} eta={eta}"
        )));
    }
    let dt = (2.0 * eta / (1.0 + rho)).sqrt();
    let gamma = (2.0 / dt) * (1.0 - rho) / (1.0 + rho);
    Ok(LangevinParams { gamma, dt })
}

/// Per-trial optimizer memory. `delta` starts at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub delta: Vec<f64>,
    pub force: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub step_count: usize,
}

impl OptimizerState {
    pub fn new(n_params: usize) -> Self {
        Self {
            delta: vec![0.0; n_params],
            force: vec![0.0; n_params],
            adam_m: vec![0.0; n_params],
            adam_v: vec![0.0; n_params],
            step_count: 0,
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.delta.len() {
            return Err(Error::Size(format!(
                "vector of length {} for {} parameters",
                v.len(),
                self.delta.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        Ok(())
    }

    /// Δθ ← ρΔθ + η·f̂ with f̂ = `force`.
    fn apply_force(&mut self, force: Vec<f64>, rho: f64, eta: f64) -> Vec<f64> {
        for (d, f) in self.delta.iter_mut().zip(&force) {
            *d = rho * *d + eta * f;
        }
        self.force = force;
        self.step_count += 1;
        self.delta.clone()
    }

    /// Momentum (heavy-ball) step with f̂ = −∇E.
    pub fn momentum_step(&mut self, grad: &[f64], cfg: &OptimizerConfig) -> Result<Vec<f64>> {
        self.check_len(grad)?;
        let force = grad.iter().map(|g| -g).collect();
        Ok(self.apply_force(force, cfg.rho, cfg.eta))
    }

    /// Momentum-QNG step with f̂ = −(g + λI)⁻¹∇E. With ρ = 0 this is
    /// exactly [`qng_step`].
    pub fn momentum_qng_step(
        &mut self,
        grad: &[f64],
        m: &MetricTensor,
        cfg: &OptimizerConfig,
    ) -> Result<Vec<f64>> {
        self.check_len(grad)?;
        let force = natural_direction(m, grad)?.into_iter().map(|x| -x).collect();
        Ok(self.apply_force(force, cfg.rho, cfg.eta))
    }

    /// Plain QNG through the state: the momentum memory is ignored.
    pub fn qng_step(
        &mut self,
        grad: &[f64],
        m: &MetricTensor,
        cfg: &OptimizerConfig,
    ) -> Result<Vec<f64>> {
        self.check_len(grad)?;
        let delta = qng_step(grad, m, cfg.eta)?;
        self.force = delta.iter().map(|d| d / cfg.eta).collect();
        self.delta.clone_from(&delta);
        self.step_count += 1;
        Ok(delta)
    }

    /// Bias-corrected Adam.
    pub fn adam_step(&mut self, grad: &[f64], cfg: &OptimizerConfig) -> Result<Vec<f64>> {
        self.check_len(grad)?;
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (k, &g) in grad.iter().enumerate() {
            self.adam_m[k] = b1 * self.adam_m[k] + (1.0 - b1) * g;
            self.adam_v[k] = b2 * self.adam_v[k] + (1.0 - b2) * g * g;
            let m_hat = self.adam_m[k] / c1;
            let v_hat = self.adam_v[k] / c2;
            self.delta[k] = -cfg.eta * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            self.force[k] = -g;
        }
        Ok(self.delta.clone())
    }
}

/// Δθ = −η·(g + λI)⁻¹∇E.
pub fn qng_step(grad: &[f64], m: &MetricTensor, eta: f64) -> Result<Vec<f64>> {
    Ok(natural_direction(m, grad)?
        .into_iter()
        .map(|x| eta * -x)
        .collect())
}

/// A configured optimizer with its own state, as used by one trial.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub state: OptimizerState,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, n_params: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: OptimizerState::new(n_params),
        })
    }

    /// Returns the next displacement. Metric-based kinds require `metric`.
    pub fn step(&mut self, grad: &[f64], metric: Option<&MetricTensor>) -> Result<Vec<f64>> {
        let cfg = self.config;
        let need_metric = || {
            metric.ok_or_else(|| {
                Error::InvalidArgument(format!("{} requires the metric tensor", cfg.kind))
            })
        };
        match cfg.kind {
            OptimizerKind::Momentum => self.state.momentum_step(grad, &cfg),
            OptimizerKind::Adam => self.state.adam_step(grad, &cfg),
            OptimizerKind::Qng => self.state.qng_step(grad, need_metric()?, &cfg),
            OptimizerKind::MomentumQng => self.state.momentum_qng_step(grad, need_metric()?, &cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn metric(g: DMatrix<f64>) -> MetricTensor {
        MetricTensor::from_metric(g).unwrap().with_lambda(0.0)
    }

    fn cfg(kind: OptimizerKind, eta: f64, rho: f64) -> OptimizerConfig {
        OptimizerConfig::new(kind).with_eta(eta).with_rho(rho)
    }

    #[test]
    fn defaults() {
        let c = OptimizerConfig::default();
        assert_eq!((c.rho, c.eta), (0.9, 0.1));
        assert_eq!((c.adam_beta1, c.adam_beta2, c.adam_eps), (0.9, 0.99, 1e-8));
        assert_eq!(OptimizerState::new(3).delta, vec![0.0; 3]);
    }

    #[test]
    fn config_validation() {
        let base = OptimizerConfig::default();
        assert!(base.with_eta(0.0).validate().is_err());
        assert!(base.with_rho(1.0).validate().is_err());
        assert!(base.with_rho(-0.1).validate().is_err());
        assert!(base.with_lambda(-1.0).validate().is_err());
        assert!(base.with_rho(0.0).validate().is_ok());
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in OptimizerKind::ALL {
            assert_eq!(k.name().parse::<OptimizerKind>().unwrap(), k);
        }
        assert!("sgd".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn langevin_examples() {
        let h = langevin_to_hyperparams(LangevinParams { gamma: 0.0, dt: 0.5 }).unwrap();
        assert_eq!((h.rho, h.eta), (1.0, 0.25));

        let h = langevin_to_hyperparams(LangevinParams { gamma: 4.0, dt: 0.5 }).unwrap();
        assert_eq!(h.rho, 0.0);
        assert_abs_diff_eq!(h.eta, 0.125, epsilon = 1e-15);

        let p = hyperparams_to_langevin(0.0, 0.5).unwrap();
        assert_abs_diff_eq!(p.dt, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.gamma, 2.0, epsilon = 1e-15);

        // Defaults ρ = 0.9, η = 0.1: Δt = √(0.2/1.9), γ = (2/Δt)(0.1/1.9).
        let p = hyperparams_to_langevin(0.9, 0.1).unwrap();
        assert_abs_diff_eq!(p.dt, 0.324_442_842_261_525, epsilon = 1e-12);
        assert_abs_diff_eq!(p.gamma, 0.324_442_842_261_525, epsilon = 1e-12);
        let h = langevin_to_hyperparams(LangevinParams { gamma: 0.32444, dt: 0.32444 }).unwrap();
        assert_abs_diff_eq!(h.rho, 0.9, epsilon = 1e-4);
        assert_abs_diff_eq!(h.eta, 0.1, epsilon = 1e-4);

        let p = hyperparams_to_langevin(1.0, 0.3).unwrap();
        assert_eq!(p.gamma, 0.0);

        assert!(langevin_to_hyperparams(LangevinParams { gamma: 1.0, dt: 0.0 }).is_err());
        assert!(langevin_to_hyperparams(LangevinParams { gamma: -1.0, dt: 0.1 }).is_err());
        assert!(hyperparams_to_langevin(0.5, 0.0).is_err());
    }

    #[test]
    fn momentum_examples() {
        let c = cfg(OptimizerKind::Momentum, 0.1, 0.9);
        let mut s = OptimizerState::new(2);
        let d = s.momentum_step(&[1.0, 0.0], &c).unwrap();
        assert_eq!(d, vec![-0.1, 0.0]);

        let mut s = OptimizerState::new(2);
        s.delta = vec![0.2, 0.2];
        let d = s.momentum_step(&[1.0, 0.0], &c).unwrap();
        assert_abs_diff_eq!(d[0], 0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.18, epsilon = 1e-15);

        let mut s = OptimizerState::new(2);
        s.delta = vec![5.0, -3.0];
        let d = s.momentum_step(&[0.5, 2.0], &cfg(OptimizerKind::Momentum, 0.1, 0.0)).unwrap();
        assert_eq!(d, vec![-0.05, -0.2]);

        assert!(matches!(
            s.momentum_step(&[f64::INFINITY, 0.0], &c),
            Err(Error::Numerical(_))
        ));
        assert!(matches!(s.momentum_step(&[1.0], &c), Err(Error::Size(_))));
    }

    #[test]
    fn qng_examples() {
        let id = metric(DMatrix::identity(2, 2));
        assert_eq!(qng_step(&[1.0, 0.0], &id, 0.1).unwrap(), vec![-0.1, -0.0]);
        let q = metric(DMatrix::from_element(1, 1, 0.25));
        assert_abs_diff_eq!(qng_step(&[1.0], &q, 0.1).unwrap()[0], -0.4, epsilon = 1e-15);
        assert!(qng_step(&[0.0, 0.0], &id, 0.1).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn momentum_qng_examples() {
        let q = metric(DMatrix::from_element(1, 1, 0.25));
        let c = cfg(OptimizerKind::MomentumQng, 0.1, 0.9);

        let mut s = OptimizerState::new(1);
        s.delta = vec![0.2];
        let d = s.momentum_qng_step(&[1.0], &q, &c).unwrap();
        assert_abs_diff_eq!(d[0], -0.22, epsilon = 1e-15);

        // first step equals QNG
        let mut s = OptimizerState::new(1);
        let d = s.momentum_qng_step(&[0.7], &q, &c).unwrap();
        assert_eq!(d, qng_step(&[0.7], &q, 0.1).unwrap());

        // ρ = 0 equals QNG bit for bit regardless of the previous delta
        let mut s = OptimizerState::new(1);
        s.delta = vec![123.0];
        let d = s.momentum_qng_step(&[0.7], &q, &cfg(OptimizerKind::MomentumQng, 0.1, 0.0)).unwrap();
        assert_eq!(d, qng_step(&[0.7], &q, 0.1).unwrap());
    }

    /// Independent scalar Adam recomputation.
    fn adam_oracle(grads: &[f64], eta: f64) -> Vec<f64> {
        let (b1, b2, eps) = (0.9f64, 0.99f64, 1e-8);
        let (mut m, mut v) = (0.0, 0.0);
        let mut out = Vec::new();
        for (t, g) in grads.iter().enumerate() {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32 + 1));
            let vh = v / (1.0 - b2.powi(t as i32 + 1));
            out.push(-eta * mh / (vh.sqrt() + eps));
        }
        out
    }

    #[test]
    fn adam_examples() {
        let c = cfg(OptimizerKind::Adam, 0.1, 0.9);
        let mut s = OptimizerState::new(3);
        let d = s.adam_step(&[1.0, 1.0, 1.0], &c).unwrap();
        for x in d {
            assert_abs_diff_eq!(x, -0.1 / (1.0 + 1e-8), epsilon = 1e-15);
        }

        let mut s = OptimizerState::new(1);
        let oracle = adam_oracle(&[0.3, 0.3], 0.1);
        for expected in oracle {
            let d = s.adam_step(&[0.3], &c).unwrap();
            assert_abs_diff_eq!(d[0], expected, epsilon = 1e-12);
        }

        let mut s = OptimizerState::new(1);
        s.adam_step(&[1.0], &c).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            let d = s.adam_step(&[0.0], &c).unwrap()[0].abs();
            assert!(d <= last);
            last = d;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn optimizer_requires_metric_for_qng() {
        let mut o = Optimizer::new(cfg(OptimizerKind::Qng, 0.1, 0.9), 1).unwrap();
        assert!(o.step(&[1.0], None).is_err());
        assert!(Optimizer::new(cfg(OptimizerKind::Qng, -0.1, 0.9), 1).is_err());
    }

    #[test]
    fn convex_quadratic_descent() {
        // E(θ) = Σ a_k θ_k², identity metric, small η.
        let a = [1.0, 0.5, 2.0];
        let loss = |t: &[f64]| t.iter().zip(&a).map(|(x, a)| a * x * x).sum::<f64>();
        let grad = |t: &[f64]| t.iter().zip(&a).map(|(x, a)| 2.0 * a * x).collect::<Vec<_>>();
        let id = metric(DMatrix::identity(3, 3));
        for kind in OptimizerKind::ALL {
            // heavy-ball methods are monotone for this problem when ρ is small
            let rho = 0.1;
            let mut o = Optimizer::new(cfg(kind, 0.001, rho), 3).unwrap();
            let mut theta = vec![1.0, -2.0, 0.5];
            let mut prev = loss(&theta);
            for _ in 0..100 {
                let d = o.step(&grad(&theta), Some(&id)).unwrap();
                for (t, d) in theta.iter_mut().zip(d) {
                    *t += d;
                }
                let l = loss(&theta);
                assert!(l <= prev + 1e-15, "{kind}: {l} > {prev}");
                prev = l;
            }
        }
    }

    proptest! {
        #[test]
        fn langevin_identity_and_roundtrip(gamma in 0.0f64..10.0, dt in 1e-3f64..1.0) {
            let p = LangevinParams { gamma, dt };
            let h = langevin_to_hyperparams(p).unwrap();
            prop_assert!((h.eta - (1.0 + h.rho) / 2.0 * dt * dt).abs() <= 1e-15);
            if h.rho >= 0.0 {
                let back = hyperparams_to_langevin(h.rho, h.eta).unwrap();
                let again = langevin_to_hyperparams(back).unwrap();
                prop_assert!((again.rho - h.rho).abs() < 1e-12);
                prop_assert!((again.eta - h.eta).abs() < 1e-12);
            }
        }

        #[test]
        fn identity_metric_reduces_to_momentum(
            grads in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..20),
            rho in 0.0f64..0.99,
            eta in 0.001f64..0.5,
        ) {
            let id = metric(DMatrix::identity(3, 3));
            let mut a = OptimizerState::new(3);
            let mut b = OptimizerState::new(3);
            let c = cfg(OptimizerKind::MomentumQng, eta, rho);
            for g in &grads {
                let x = a.momentum_qng_step(g, &id, &c).unwrap();
                let y = b.momentum_step(g, &c).unwrap();
                for (x, y) in x.iter().zip(&y) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
