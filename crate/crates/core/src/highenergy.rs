//! High-energy feedback `u(x) = -sign(B, p(x))`, where `p(x)` is the momentum
//! maximizing `(x, p)` on `{H = 1}`, its reduced variant `U u(x)`, and
//! maximum-principle diagnostics along closed-loop trajectories.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{gauge_rho_warm, GaugeOptions, MomentumSolution, SupportFunction, WarmStart};
use crate::model::System;

/// `|(B, p)|` below which the sign is considered undetermined.
pub const DEFAULT_DEADBAND: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct HighEnergyControl {
    pub u: f64,
    pub p: DVector<f64>,
    pub rho: f64,
    /// `(B, p)` before taking the sign.
    pub sign_argument: f64,
}

/// `-sign(arg)` outside the deadband; inside it the previous value is held
/// (zero if there is none).
pub fn sign_law(arg: f64, previous: Option<f64>, deadband: f64) -> f64 {
    if arg > deadband {
        -1.0
    } else if arg < -deadband {
        1.0
    } else {
        previous.map(f64::signum).unwrap_or(0.0)
    }
}

/// `(B, p)` for the input vector `B = (0, 1, ..., 0, 1)`.
pub fn b_dot(p: &DVector<f64>) -> f64 {
    p.iter().skip(1).step_by(2).sum()
}

/// Stateful feedback carrying the gauge warm start and the last sign.
#[derive(Clone, Debug)]
pub struct HighEnergyController {
    support: SupportFunction,
    opts: GaugeOptions,
    deadband: f64,
    warm: WarmStart,
    last: Option<f64>,
}

impl HighEnergyController {
    pub fn new(support: SupportFunction) -> Self {
        Self {
            support,
            opts: GaugeOptions::default(),
            deadband: DEFAULT_DEADBAND,
            warm: WarmStart::new(),
            last: None,
        }
    }

    pub fn with_options(mut self, opts: GaugeOptions, deadband: f64) -> Self {
        self.opts = opts;
        self.deadband = deadband;
        self
    }

    pub fn support(&self) -> &SupportFunction {
        &self.support
    }

    pub fn gauge_options(&self) -> &GaugeOptions {
        &self.opts
    }

    /// Forgets the warm start and the held sign.
    pub fn reset(&mut self) {
        self.warm.clear();
        self.last = None;
    }

    /// Gauge solve with warm start; fails if the solver does not converge.
    pub fn momentum(&mut self, x: &DVector<f64>) -> Result<MomentumSolution> {
        let sol = gauge_rho_warm(&self.support, x, &self.opts, &mut self.warm)?;
        if sol.degenerate {
            return Err(Error::ZeroState("high-energy feedback"));
        }
        sol.require_converged()
    }

    pub fn control_u(&mut self, x: &DVector<f64>) -> Result<HighEnergyControl> {
        let sol = self.momentum(x)?;
        let arg = b_dot(&sol.p);
        let u = sign_law(arg, self.last, self.deadband);
        self.last = Some(u).filter(|v| *v != 0.0).or(self.last);
        Ok(HighEnergyControl {
            u,
            p: sol.p,
            rho: sol.rho,
            sign_argument: arg,
        })
    }

    /// `U u(x)` with `0 < U <= 1`.
    pub fn control_u_scaled(&mut self, x: &DVector<f64>, bound: f64) -> Result<HighEnergyControl> {
        check_bound(bound)?;
        let mut c = self.control_u(x)?;
        c.u *= bound;
        Ok(c)
    }
}

pub fn check_bound(bound: f64) -> Result<()> {
    if bound > 0.0 && bound <= 1.0 {
        Ok(())
    } else {
        Err(Error::ControlBound(bound))
    }
}

/// Stateless `u(x) = -sign(B, p(x))`.
pub fn control_u(support: &SupportFunction, x: &DVector<f64>) -> Result<HighEnergyControl> {
    HighEnergyController::new(support.clone()).control_u(x)
}

/// Stateless `U u(x)`.
pub fn control_u_scaled(support: &SupportFunction, x: &DVector<f64>, bound: f64) -> Result<HighEnergyControl> {
    HighEnergyController::new(support.clone()).control_u_scaled(x, bound)
}

#[derive(Clone, Debug, Serialize)]
pub struct MpResidual {
    /// `(Ax, psi) + |B^T psi| - 1` with `psi = -p(x)`.
    pub hamiltonian_residual: f64,
    /// `(d2 rho / dx2) B u`, by central differences of `p(x)` along `B`.
    pub adjoint_defect: DVector<f64>,
}

/// Maximum-principle diagnostics at `x` for the applied control `u`.
pub fn mp_residual(
    system: &System,
    support: &SupportFunction,
    x: &DVector<f64>,
    u: f64,
) -> Result<MpResidual> {
    system.check_dim(x.len())?;
    let opts = GaugeOptions {
        tol: 1e-12,
        max_iter: 500,
    };
    let solve = |y: &DVector<f64>| -> Result<MomentumSolution> {
        let sol = gauge_rho_warm(support, y, &opts, &mut WarmStart::new())?;
        if sol.degenerate {
            return Err(Error::ZeroState("maximum-principle residual"));
        }
        // the tight tolerance is not always reachable in floating point
        if sol.converged || sol.residual < 1e-9 {
            Ok(sol)
        } else {
            sol.require_converged()
        }
    };
    let centre = solve(x)?;
    let ax = system.a() * x;
    let psi = -&centre.p;
    let hamiltonian_residual = ax.dot(&psi) + b_dot(&psi).abs() - 1.0;

    let h = 1e-4 * x.norm();
    let b = system.b();
    let plus = solve(&(x + b * h))?;
    let minus = solve(&(x - b * h))?;
    let adjoint_defect = (plus.p - minus.p) * (u / (2.0 * h));
    Ok(MpResidual {
        hamiltonian_residual,
        adjoint_defect,
    })
}
