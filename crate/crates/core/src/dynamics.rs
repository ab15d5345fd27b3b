//! Plant models: aircraft taxiing (nonlinear) and emergency braking
//! (linear), plus generic affine plants.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{array, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StarSet;
use crate::interval::{Interval, IntervalBox};

/// Steering gain on cross-track error, degrees of steering per metre.
pub const TAXI_GAIN_P: f64 = 0.74;
/// Steering gain on heading error, dimensionless.
pub const TAXI_GAIN_THETA: f64 = 0.44;

pub const BRAKE_DECEL_GAIN: f64 = 0.009;
pub const BRAKE_DECEL_BIAS: f64 = 0.0042;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxiParams {
    pub v: f64,
    #[serde(rename = "L")]
    pub wheelbase: f64,
    pub dt: f64,
    pub substeps: usize,
}

impl Default for TaxiParams {
    fn default() -> Self {
        Self { v: 5.0, wheelbase: 5.0, dt: 0.05, substeps: 20 }
    }
}

impl TaxiParams {
    pub fn validate(&self) -> Result<()> {
        if self.v > 0.0 && self.wheelbase > 0.0 && self.dt > 0.0 && self.substeps > 0 {
            Ok(())
        } else {
            Err(Error::Config("taxi parameters v, L, dt and substeps must be positive".into()))
        }
    }

    /// Cross-track gain `vΔt`.
    fn kp(&self) -> f64 {
        self.v * self.dt
    }

    /// Heading gain `(v/L)Δt`.
    fn kt(&self) -> f64 {
        self.v / self.wheelbase * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrakeParams {
    pub dt: f64,
    pub substeps: usize,
}

impl Default for BrakeParams {
    fn default() -> Self {
        Self { dt: 0.05, substeps: 1 }
    }
}

impl BrakeParams {
    pub fn validate(&self) -> Result<()> {
        if self.dt > 0.0 && self.substeps > 0 {
            Ok(())
        } else {
            Err(Error::Config("brake parameters dt and substeps must be positive".into()))
        }
    }
}

/// `x' = A_x x + A_u u + c`, applied `substeps` times with `u` held.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDynamics {
    pub a_x: Array2<f64>,
    pub a_u: Array2<f64>,
    pub c: Array1<f64>,
    pub substeps: usize,
}

impl AffineDynamics {
    pub fn new(a_x: Array2<f64>, a_u: Array2<f64>, c: Array1<f64>, substeps: usize) -> Result<Self> {
        let n = a_x.nrows();
        if a_x.ncols() != n || a_u.nrows() != n || c.len() != n || n == 0 || substeps == 0 {
            return Err(Error::Dimension(format!(
                "affine dynamics shapes A_x {:?}, A_u {:?}, c {}",
                a_x.dim(),
                a_u.dim(),
                c.len()
            )));
        }
        Ok(Self { a_x, a_u, c, substeps })
    }

    pub fn state_dim(&self) -> usize {
        self.a_x.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.a_u.ncols()
    }

    /// The whole control period as one affine map `(A, B, c)`.
    pub fn period_map(&self) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
        let mut a = Array2::eye(self.state_dim());
        let mut b = Array2::zeros(self.a_u.dim());
        let mut c = Array1::zeros(self.state_dim());
        for _ in 0..self.substeps {
            a = self.a_x.dot(&a);
            b = self.a_x.dot(&b) + &self.a_u;
            c = self.a_x.dot(&c) + &self.c;
        }
        (a, b, c)
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut s = Array1::from(x.to_vec());
        let u = Array1::from(u.to_vec());
        let drive = self.a_u.dot(&u) + &self.c;
        for _ in 0..self.substeps {
            s = self.a_x.dot(&s) + &drive;
        }
        s.to_vec()
    }
}

/// Steering in radians from estimated `(p̂, θ̂)`; the gains are stated with
/// angles in degrees.
pub fn taxi_control_map() -> (Array2<f64>, Array1<f64>) {
    (array![[-TAXI_GAIN_P * PI / 180.0, -TAXI_GAIN_THETA]], array![0.0])
}

pub fn taxi_control(p_hat: f64, theta_hat: f64) -> f64 {
    -TAXI_GAIN_P * PI / 180.0 * p_hat - TAXI_GAIN_THETA * theta_hat
}

pub fn taxi_step(state: [f64; 2], phi: f64, params: &TaxiParams) -> Result<[f64; 2]> {
    if !(phi.abs() < FRAC_PI_2) {
        return Err(Error::PoleCrossed { lo: phi, hi: phi });
    }
    let [mut p, mut theta] = state;
    let turn = params.kt() * phi.tan();
    for _ in 0..params.substeps {
        p += params.kp() * theta.sin();
        theta += turn;
    }
    Ok([p, theta])
}

pub fn brake_step(state: [f64; 2], u: f64, params: &BrakeParams) -> [f64; 2] {
    let [mut d, mut v] = state;
    let decel = BRAKE_DECEL_GAIN * u + BRAKE_DECEL_BIAS;
    for _ in 0..params.substeps {
        d -= v * params.dt;
        v = (v - decel * params.dt).max(0.0);
    }
    [d, v]
}

/// Braking without the velocity floor, as an affine plant on `(d, v)`
/// with control `u`.
pub fn brake_affine(params: &BrakeParams) -> AffineDynamics {
    let dt = params.dt;
    AffineDynamics {
        a_x: array![[1.0, -dt], [0.0, 1.0]],
        a_u: array![[0.0], [-BRAKE_DECEL_GAIN * dt]],
        c: array![0.0, -BRAKE_DECEL_BIAS * dt],
        substeps: params.substeps,
    }
}

/// Endpoint-substitution bounds for one control period.
pub fn taxi_monotonic_step(state: &IntervalBox, phi: Interval, params: &TaxiParams) -> Result<IntervalBox> {
    if state.dim() != 2 {
        return Err(Error::Dimension("taxi state is (p, θ)".into()));
    }
    let turn = phi.tan()? * params.kt();
    let (mut p, mut theta) = (state[0], state[1]);
    for _ in 0..params.substeps {
        p = p + theta.sin() * params.kp();
        theta = Interval::new(theta.lo + turn.lo, theta.hi + turn.hi);
    }
    Ok(IntervalBox::new(vec![p, theta]))
}

/// Lagrange remainder enclosures `(L1, L2)` of the first-order expansion
/// of the cross-track and heading updates around `(θ*, φ*)`.
pub fn remainder_bounds(
    theta: Interval,
    phi: Interval,
    theta_star: f64,
    phi_star: f64,
    params: &TaxiParams,
) -> Result<(Interval, Interval)> {
    let l1 = -theta.sin() * (theta - theta_star).sqr() * (0.5 * params.kp());
    let t = phi.tan()?;
    let l2 = t * (t.sqr() + 1.0) * (phi - phi_star).sqr() * params.kt();
    Ok((l1, l2))
}

/// One substep of the taxi dynamics on a star over `(p, θ, φ)`.
pub fn taxi_linearized_step(s: &StarSet, params: &TaxiParams) -> Result<StarSet> {
    let b = s.box_bounds()?;
    taxi_linearized_step_within(s, b[1], b[2], params)
}

/// As [`taxi_linearized_step`] with the θ and φ ranges of `s` supplied by
/// the caller; they must enclose the star's projections.
pub fn taxi_linearized_step_within(s: &StarSet, theta: Interval, phi: Interval, params: &TaxiParams) -> Result<StarSet> {
    if s.dim() != 3 {
        return Err(Error::Dimension("linearized taxi step expects a (p, θ, φ) star".into()));
    }
    let tan_phi = phi.tan()?;
    let (ts, ps) = (theta.mid(), phi.mid());
    let (kp, kt) = (params.kp(), params.kt());
    let sec2 = 1.0 + ps.tan().powi(2);
    let a = array![[1.0, kp * ts.cos(), 0.0], [0.0, 1.0, kt * sec2], [0.0, 0.0, 1.0]];
    let bias = array![kp * (ts.sin() - ts.cos() * ts), kt * (ps.tan() - sec2 * ps), 0.0];
    debug_assert!(tan_phi.lo.is_finite());
    let (l1, l2) = remainder_bounds(theta, phi, ts, ps, params)?;
    s.affine_map(&a, &bias)?.minkowski_box_compact(&IntervalBox::new(vec![l1, l2, Interval::point(0.0)]))
}

/// The plant in a closed loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    Taxi(TaxiParams),
    Brake(BrakeParams),
    Affine(AffineDynamics),
}

impl Plant {
    pub fn state_dim(&self) -> usize {
        match self {
            Plant::Taxi(_) | Plant::Brake(_) => 2,
            Plant::Affine(a) => a.state_dim(),
        }
    }

    pub fn control_dim(&self) -> usize {
        match self {
            Plant::Taxi(_) | Plant::Brake(_) => 1,
            Plant::Affine(a) => a.control_dim(),
        }
    }

    pub fn dim_names(&self) -> Vec<String> {
        match self {
            Plant::Taxi(_) => vec!["p".into(), "theta".into()],
            Plant::Brake(_) => vec!["d".into(), "v".into()],
            Plant::Affine(a) => (0..a.state_dim()).map(|i| format!("x{i}")).collect(),
        }
    }

    /// Affine form used by the composed analyses, if the plant has one.
    pub fn affine(&self) -> Option<AffineDynamics> {
        match self {
            Plant::Taxi(_) => None,
            Plant::Brake(b) => Some(brake_affine(b)),
            Plant::Affine(a) => Some(a.clone()),
        }
    }

    /// One concrete control period.
    pub fn step(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        match self {
            Plant::Taxi(p) => Ok(taxi_step([x[0], x[1]], u[0], p)?.to_vec()),
            Plant::Brake(p) => Ok(brake_step([x[0], x[1]], u[0], p).to_vec()),
            Plant::Affine(a) => Ok(a.step(x, u)),
        }
    }
}
