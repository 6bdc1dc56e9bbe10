//! Fixed-step steppers shared by the oscillator toolkit and the trajectory
//! integrators.
//!
//! Symplectic schemes are symmetric compositions of the kick-drift-kick
//! leapfrog. Explicitly time-dependent forces are handled by drifting `t`
//! together with `q`, which keeps the map volume-preserving.

use serde::{Deserialize, Serialize};

/// Stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Second-order kick-drift-kick leapfrog.
    Leapfrog,
    /// Fourth-order triple-jump composition of leapfrog.
    Yoshida4,
    /// Sixth-order seven-stage composition of leapfrog.
    Yoshida6,
    /// Eighth-order fifteen-stage composition of leapfrog.
    Yoshida8,
    /// Classical fourth-order Runge-Kutta (not symplectic).
    Rk4,
}

const CBRT2: f64 = 1.259_921_049_894_873_2;
const Y4_W1: f64 = 1.0 / (2.0 - CBRT2);
const Y4_W0: f64 = -CBRT2 / (2.0 - CBRT2);
const Y4: [f64; 3] = [Y4_W1, Y4_W0, Y4_W1];

const Y6_W1: f64 = -1.177_679_984_178_87;
const Y6_W2: f64 = 0.235_573_213_359_357;
const Y6_W3: f64 = 0.784_513_610_477_560;
const Y6_W0: f64 = 1.0 - 2.0 * (Y6_W1 + Y6_W2 + Y6_W3);
const Y6: [f64; 7] = [Y6_W3, Y6_W2, Y6_W1, Y6_W0, Y6_W1, Y6_W2, Y6_W3];

// Solution D of Yoshida's eighth-order family.
const Y8_W: [f64; 7] = [
    0.102_799_849_391_985,
    -1.960_610_232_975_49,
    1.938_139_137_622_76,
    -0.158_240_635_368_243,
    -1.444_852_236_860_48,
    0.253_693_336_566_229,
    0.914_844_246_229_740,
];
const Y8_W0: f64 = 1.0
    - 2.0 * (Y8_W[0] + Y8_W[1] + Y8_W[2] + Y8_W[3] + Y8_W[4] + Y8_W[5] + Y8_W[6]);
const Y8: [f64; 15] = [
    Y8_W[6], Y8_W[5], Y8_W[4], Y8_W[3], Y8_W[2], Y8_W[1], Y8_W[0], Y8_W0, Y8_W[0], Y8_W[1],
    Y8_W[2], Y8_W[3], Y8_W[4], Y8_W[5], Y8_W[6],
];

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Leapfrog => 2,
            Scheme::Yoshida4 | Scheme::Rk4 => 4,
            Scheme::Yoshida6 => 6,
            Scheme::Yoshida8 => 8,
        }
    }

    pub fn is_symplectic(self) -> bool {
        !matches!(self, Scheme::Rk4)
    }

    fn weights(self) -> &'static [f64] {
        match self {
            Scheme::Leapfrog => &[1.0],
            Scheme::Yoshida4 => &Y4,
            Scheme::Yoshida6 => &Y6,
            Scheme::Yoshida8 => &Y8,
            Scheme::Rk4 => &[],
        }
    }
}

/// Acceleration field of a separable second-order system `q'' = a(t, q)`.
pub(crate) trait Accel {
    fn accel(&self, t: f64, q: &[f64], a: &mut [f64]);
}

impl<F: Fn(f64, &[f64], &mut [f64])> Accel for F {
    fn accel(&self, t: f64, q: &[f64], a: &mut [f64]) {
        self(t, q, a)
    }
}

/// Composition stepper. Caches the acceleration at the end of each step so
/// consecutive leapfrog half-kicks share one force evaluation.
pub(crate) struct Symplectic {
    weights: &'static [f64],
    acc: Vec<f64>,
    cached: bool,
}

impl Symplectic {
    pub(crate) fn new(scheme: Scheme, dim: usize) -> Self {
        assert!(scheme.is_symplectic(), "{scheme:?} is not a symplectic scheme");
        Symplectic {
            weights: scheme.weights(),
            acc: vec![0.0; dim],
            cached: false,
        }
    }

    /// Advances `(q, v)` from `t` to `t + dt`.
    pub(crate) fn step<S: Accel + ?Sized>(
        &mut self,
        sys: &S,
        t: f64,
        q: &mut [f64],
        v: &mut [f64],
        dt: f64,
    ) {
        if !self.cached {
            sys.accel(t, q, &mut self.acc);
            self.cached = true;
        }
        let mut ts = t;
        for &w in self.weights {
            let h = w * dt;
            for (vi, ai) in v.iter_mut().zip(&self.acc) {
                *vi += 0.5 * h * ai;
            }
            for (qi, vi) in q.iter_mut().zip(v.iter()) {
                *qi += h * vi;
            }
            ts += h;
            sys.accel(ts, q, &mut self.acc);
            for (vi, ai) in v.iter_mut().zip(&self.acc) {
                *vi += 0.5 * h * ai;
            }
        }
    }
}

/// One classical Runge-Kutta step for `y' = f(t, y)`.
pub(crate) fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let axpy = |base: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *base;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
