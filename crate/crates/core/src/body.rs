//! Soft-body parameters, state representations and energy accounting.
//!
//! A soft body of total mass `M` is made of `N` identical monads of mass
//! `m = M/N`, coupled pairwise by springs with potential
//! `(1/4) m omega0^2 (x_i - x_j)^2`. Each monad feels `U(x_i)/N`, so a body
//! whose monads all sit at `X` feels exactly `U(X)`.
//!
//! For two monads the centre-of-mass coordinate `X = (x1 + x2)/2` and the
//! internal coordinate `xi = (x1 - x2)/2` separate the motion; the internal
//! mode then oscillates at `omega0` wherever `U'' = 0`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::Potential;

/// Normalizes an angle into `[0, 2pi)`.
pub fn normalize_angle(alpha: f64) -> f64 {
    let r = alpha.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly TAU.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Mass, internal frequency, internal action and hidden phase of a body.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftBodyParams {
    mass: f64,
    omega0: f64,
    action: f64,
    alpha: f64,
}

impl SoftBodyParams {
    /// `mass` is the total mass `M`, `action` the internal action constant `J`,
    /// `alpha` the phase constant of the internal oscillation.
    pub fn new(mass: f64, omega0: f64, action: f64, alpha: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::param("M", format!("must be > 0, got {mass}")));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::param("omega0", format!("must be > 0, got {omega0}")));
        }
        if !(action.is_finite() && action >= 0.0) {
            return Err(Error::param("J", format!("must be >= 0, got {action}")));
        }
        if !alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be finite, got {alpha}")));
        }
        Ok(SoftBodyParams {
            mass,
            omega0,
            action,
            alpha: normalize_angle(alpha),
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn action(&self) -> f64 {
        self.action
    }

    /// Phase constant, always in `[0, 2pi)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = normalize_angle(alpha);
        self
    }

    pub fn with_action(mut self, action: f64) -> Result<Self> {
        Self::new(self.mass, self.omega0, action, self.alpha).map(|p| {
            self = p;
            self
        })
    }

    /// Free-body amplitude of the internal mode, `sqrt(2J / (M omega0))`.
    pub fn amplitude(&self) -> f64 {
        (2.0 * self.action / (self.mass * self.omega0)).sqrt()
    }

    /// Internal-mode initial condition `(xi, xi_dot)` for a body launched where
    /// the potential is flat: `xi(t) = a cos(omega0 t + alpha)` at `t = 0`.
    pub fn init_internal(&self) -> (f64, f64) {
        let a = self.amplitude();
        let (s, c) = self.alpha.sin_cos();
        (a * c, -a * self.omega0 * s)
    }
}

/// Raw monad coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MonadState {
    pub t: f64,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl MonadState {
    pub fn new(t: f64, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::Unsupported(format!(
                "a soft body needs at least 2 monads, got {}",
                positions.len()
            )));
        }
        if positions.len() != velocities.len() {
            return Err(Error::Unsupported(
                "positions and velocities differ in length".into(),
            ));
        }
        if !positions.iter().chain(&velocities).all(|v| v.is_finite()) || !t.is_finite() {
            return Err(Error::Domain("monad state must be finite".into()));
        }
        Ok(MonadState {
            t,
            positions,
            velocities,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn center_of_mass(&self) -> (f64, f64) {
        let n = self.len() as f64;
        (
            self.positions.iter().sum::<f64>() / n,
            self.velocities.iter().sum::<f64>() / n,
        )
    }
}

/// Centre-of-mass and internal coordinates of a two-monad body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMState {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub xi: f64,
    pub xi_dot: f64,
}

impl CMState {
    /// Launch state at `t = 0`: CM at `x` moving at `v`, internal mode set from
    /// the body's `(J, alpha)`.
    pub fn launch(params: &SoftBodyParams, x: f64, v: f64) -> Self {
        let (xi, xi_dot) = params.init_internal();
        CMState {
            t: 0.0,
            x,
            v,
            xi,
            xi_dot,
        }
    }
}

pub fn monads_from_cm(cm: &CMState) -> MonadState {
    MonadState {
        t: cm.t,
        positions: vec![cm.x + cm.xi, cm.x - cm.xi],
        velocities: vec![cm.v + cm.xi_dot, cm.v - cm.xi_dot],
    }
}

pub fn cm_from_monads(state: &MonadState) -> Result<CMState> {
    if state.len() != 2 {
        return Err(Error::Unsupported(format!(
            "centre-of-mass/internal split is defined for 2 monads, got {}",
            state.len()
        )));
    }
    let (x1, x2) = (state.positions[0], state.positions[1]);
    let (v1, v2) = (state.velocities[0], state.velocities[1]);
    Ok(CMState {
        t: state.t,
        x: 0.5 * (x1 + x2),
        v: 0.5 * (v1 + v2),
        xi: 0.5 * (x1 - x2),
        xi_dot: 0.5 * (v1 - v2),
    })
}

/// Total energy from the monad picture: kinetic energy, harmonic pair
/// coupling and the `1/N`-weighted external potential, with no expansion.
pub fn total_energy_exact(params: &SoftBodyParams, state: &MonadState, pot: &Potential) -> f64 {
    let n = state.len() as f64;
    let m = params.mass / n;
    let (xc, _) = state.center_of_mass();
    let kinetic: f64 = state.velocities.iter().map(|v| 0.5 * m * v * v).sum();
    // sum over pairs (x_i - x_j)^2 = N * sum_i (x_i - xc)^2
    let spread: f64 = state.positions.iter().map(|x| (x - xc) * (x - xc)).sum();
    let coupling = 0.25 * m * params.omega0 * params.omega0 * n * spread;
    let external: f64 = state.positions.iter().map(|&x| pot.value(x)).sum::<f64>() / n;
    kinetic + coupling + external
}

/// Total energy of the second-order expanded model:
/// `M V^2/2 + U(X) + M xi_dot^2/2 + M omega0^2 xi^2/2 + U''(X) xi^2/2`.
pub fn total_energy_expanded(params: &SoftBodyParams, cm: &CMState, pot: &Potential) -> f64 {
    let d = pot.eval(cm.x);
    let m = params.mass;
    let w2 = params.omega0 * params.omega0;
    0.5 * m * cm.v * cm.v
        + d.u
        + 0.5 * m * cm.xi_dot * cm.xi_dot
        + 0.5 * m * w2 * cm.xi * cm.xi
        + 0.5 * d.u2 * cm.xi * cm.xi
}

/// Energy of the centre of mass treated as a point particle, `M V^2/2 + U(X)`.
pub fn cm_energy(params: &SoftBodyParams, x: f64, v: f64, pot: &Potential) -> f64 {
    0.5 * params.mass * v * v + pot.value(x)
}
