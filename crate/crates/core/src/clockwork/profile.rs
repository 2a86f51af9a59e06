//! Position-dependent system interaction `V_S(x)` carried by the clock.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{
    unitary_log, HermitianSpectrum, Operator, UnitaryOperator, C64,
};

/// `(2/w) cos^2(pi (x - w/2) / w)` on `[0, w]`, zero elsewhere. Unit area, vanishing ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaisedCosine {
    width: f64,
}

impl RaisedCosine {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::param("profile_width", format!("must be positive, got {width}")));
        }
        Ok(RaisedCosine { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.width {
            return 0.0;
        }
        let c = (PI * (x - 0.5 * self.width) / self.width).cos();
        2.0 / self.width * c * c
    }

    /// Midpoint-rule mass on `steps` equal cells.
    pub fn midpoint_mass(&self, steps: usize) -> f64 {
        let dx = self.width / steps as f64;
        (0..steps).map(|k| self.value((k as f64 + 0.5) * dx)).sum::<f64>() * dx
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Zero,
    /// `i hbar nu f(x) e^{-i x H/(nu hbar)} G e^{i x H/(nu hbar)}` with `G = log U`.
    Conjugated {
        window: RaisedCosine,
        generator: Operator,
        system: HermitianSpectrum,
        hbar: f64,
        nu: f64,
    },
    /// `f(x) (A + cos(k x) B)`.
    Modulated {
        window: RaisedCosine,
        constant: Operator,
        oscillating: Operator,
        frequency: f64,
    },
}

/// Hermitian-valued profile supported on `[0, width]`.
#[derive(Clone, Debug)]
pub struct InteractionProfile {
    width: f64,
    dim: usize,
    shape: Shape,
}

impl InteractionProfile {
    /// No interaction at all.
    pub fn zero(width: f64, dim: usize) -> Result<Self> {
        RaisedCosine::new(width)?;
        Ok(InteractionProfile {
            width,
            dim,
            shape: Shape::Zero,
        })
    }

    /// `f(x) (A + cos(k x) B)` for Hermitian `A`, `B`.
    pub fn modulated(
        window: RaisedCosine,
        constant: Operator,
        oscillating: Operator,
        frequency: f64,
    ) -> Result<Self> {
        constant.ensure_hermitian()?;
        oscillating.ensure_hermitian()?;
        if constant.dim() != oscillating.dim() {
            return Err(Error::DimensionMismatch("profile operators".into()));
        }
        Ok(InteractionProfile {
            width: window.width(),
            dim: constant.dim(),
            shape: Shape::Modulated {
                window,
                constant,
                oscillating,
                frequency,
            },
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero)
    }

    fn window(&self) -> Option<&RaisedCosine> {
        match &self.shape {
            Shape::Zero => None,
            Shape::Conjugated { window, .. } | Shape::Modulated { window, .. } => Some(window),
        }
    }

    /// `V_S(x)`; zero outside the open support.
    pub fn sample(&self, x: f64) -> Operator {
        let zero = || Operator::zeros(self.dim);
        match &self.shape {
            Shape::Zero => zero(),
            Shape::Conjugated {
                window,
                generator,
                system,
                hbar,
                nu,
            } => {
                let f = window.value(x);
                if f == 0.0 {
                    return zero();
                }
                let rot = system.propagator(x / nu, *hbar);
                generator
                    .conjugate_by(rot.operator())
                    .scale(C64::new(0.0, hbar * nu * f))
                    .hermitian_part()
            }
            Shape::Modulated {
                window,
                constant,
                oscillating,
                frequency,
            } => {
                let f = window.value(x);
                if f == 0.0 {
                    return zero();
                }
                (constant + &oscillating.scale_real((frequency * x).cos())).scale_real(f)
            }
        }
    }
}

/// Profile whose clock-driven effective unitary is exactly `target`.
///
/// Fails with [`Error::BranchCut`] when `target` has an eigenvalue at `-1`
/// that cannot be assigned a principal logarithm.
pub fn build_vs_from_unitary(
    target: &UnitaryOperator,
    window: RaisedCosine,
    h_s: &Operator,
    hbar: f64,
    nu: f64,
) -> Result<InteractionProfile> {
    if target.dim() != h_s.dim() {
        return Err(Error::DimensionMismatch("target unitary vs system Hamiltonian".into()));
    }
    if !(hbar > 0.0 && nu > 0.0) {
        return Err(Error::param("hbar/nu", "must be positive"));
    }
    let generator = unitary_log(target)?;
    Ok(InteractionProfile {
        width: window.width(),
        dim: h_s.dim(),
        shape: Shape::Conjugated {
            window,
            generator,
            system: HermitianSpectrum::of(h_s)?,
            hbar,
            nu,
        },
    })
}

/// Time-ordered `T exp(-(i/hbar) int e^{i t H} V_S(nu t) e^{-i t H} dt)` over the
/// profile's transit, as a product of `steps` midpoint exponentials (later steps on the left).
/// The window is renormalised to unit discrete mass.
pub fn effective_unitary(
    profile: &InteractionProfile,
    h_s: &Operator,
    hbar: f64,
    nu: f64,
    steps: usize,
) -> Result<UnitaryOperator> {
    if steps == 0 {
        return Err(Error::param("steps", "must be positive"));
    }
    if h_s.dim() != profile.dim() {
        return Err(Error::DimensionMismatch("profile vs system Hamiltonian".into()));
    }
    let d = profile.dim();
    let Some(window) = profile.window() else {
        return Ok(UnitaryOperator::identity(d));
    };
    let spectrum = HermitianSpectrum::of(h_s)?;
    let dx = profile.width() / steps as f64;
    let mass = window.midpoint_mass(steps);
    let mut u = UnitaryOperator::identity(d);
    for k in 0..steps {
        let x = (k as f64 + 0.5) * dx;
        let back = spectrum.propagator(-x / nu, hbar);
        let v = profile.sample(x).conjugate_by(back.operator());
        let generator = v.scale_real(dx / (nu * hbar * mass)).hermitian_part();
        let step = HermitianSpectrum::of(&generator)?.propagator(1.0, 1.0);
        u = step.then_after(&u);
    }
    Ok(u)
}

/// `e^{-i H x/(nu hbar)} U e^{i H x/(nu hbar)}`, the transit unitary seen from offset `x`.
pub fn dressed_unitary(
    u: &UnitaryOperator,
    x: f64,
    system: &HermitianSpectrum,
    hbar: f64,
    nu: f64,
) -> UnitaryOperator {
    let rot = system.propagator(x / nu, hbar);
    UnitaryOperator::assume(u.operator().conjugate_by(rot.operator()))
}
