//! Phase-wise material constants and their level-set blend.

use crate::error::{invalid, Result};
use crate::levelset::smoothed_heaviside;
use crate::scalar::Real;

/// Constants of one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProps<T> {
    /// Density, kg/m^3.
    pub rho: T,
    /// Specific heat capacity, J/(kg K).
    pub cp: T,
    /// Thermal conductivity, W/(m K).
    pub kappa: T,
    /// Dynamic viscosity, kg/(m s).
    pub mu: T,
}

impl<T: Real> PhaseProps<T> {
    pub fn new(rho: T, cp: T, kappa: T, mu: T) -> Self {
        PhaseProps { rho, cp, kappa, mu }
    }

    pub fn rho_cp(&self) -> T {
        self.rho * self.cp
    }

    /// Thermal diffusivity `kappa / (rho cp)`.
    pub fn alpha(&self) -> T {
        self.kappa / self.rho_cp()
    }

    pub fn nu(&self) -> T {
        self.mu / self.rho
    }

    fn validate(&self, phase: &str) -> Result<()> {
        for (name, v) in [
            ("rho", self.rho),
            ("cp", self.cp),
            ("kappa", self.kappa),
            ("mu", self.mu),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return invalid(format!(
                    "{phase} {name} must be positive and finite, got {v}"
                ));
            }
        }
        Ok(())
    }
}

/// Liquid (phase 1, `phi < 0`) and solid (phase 2) constants with the shared
/// latent heat and melting temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPair<T> {
    pub liquid: PhaseProps<T>,
    pub solid: PhaseProps<T>,
    /// Latent heat of melting, J/kg.
    pub h_m: T,
    /// Melting temperature, K.
    pub t_m: T,
}

impl<T: Real> MaterialPair<T> {
    pub fn new(liquid: PhaseProps<T>, solid: PhaseProps<T>, h_m: T, t_m: T) -> Result<Self> {
        let pair = MaterialPair {
            liquid,
            solid,
            h_m,
            t_m,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        self.liquid.validate("liquid")?;
        self.solid.validate("solid")?;
        if !(self.h_m > T::zero()) || !self.h_m.is_finite() {
            return invalid(format!("latent heat must be positive, got {}", self.h_m));
        }
        if !self.t_m.is_finite() {
            return invalid("melting temperature must be finite");
        }
        Ok(())
    }

    pub fn phase(&self, phase: Phase) -> PhaseProps<T> {
        match phase {
            Phase::Liquid => self.liquid,
            Phase::Solid => self.solid,
        }
    }

    /// Blend of both phases at level-set value `phi`.
    pub fn blend_at(&self, phi: T, epsilon: T) -> PhaseProps<T> {
        let h = smoothed_heaviside(phi, epsilon);
        let (a, b) = (self.liquid, self.solid);
        PhaseProps {
            rho: mix(a.rho, b.rho, h),
            cp: mix(a.cp, b.cp, h),
            kappa: mix(a.kappa, b.kappa, h),
            mu: mix(a.mu, b.mu, h),
        }
    }
}

/// `p1 + (p2 - p1) H`, exact at both ends and clamped to the interval.
#[inline]
pub(crate) fn mix<T: Real>(p1: T, p2: T, h: T) -> T {
    if h <= T::zero() {
        p1
    } else if h >= T::one() {
        p2
    } else {
        (p1 + (p2 - p1) * h).max(p1.min(p2)).min(p1.max(p2))
    }
}

/// Phase label; `phi < 0` is liquid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Liquid,
    Solid,
}

impl Phase {
    #[inline]
    pub fn of<T: Real>(phi: T) -> Phase {
        if phi < T::zero() {
            Phase::Liquid
        } else {
            Phase::Solid
        }
    }

    pub fn other(self) -> Phase {
        match self {
            Phase::Liquid => Phase::Solid,
            Phase::Solid => Phase::Liquid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Source<T> {
    Uniform(PhaseProps<T>),
    Blended {
        pair: MaterialPair<T>,
        phi: Vec<T>,
        epsilon: T,
    },
}

/// Material properties over the mesh. Assembly evaluates them at quadrature
/// points from the interpolated level set; nodal values are kept for output.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField<T> {
    source: Source<T>,
    nodal: Vec<PhaseProps<T>>,
}

impl<T: Real> MaterialField<T> {
    /// The same constants everywhere.
    pub fn uniform(props: PhaseProps<T>, node_count: usize) -> Self {
        MaterialField {
            source: Source::Uniform(props),
            nodal: vec![props; node_count],
        }
    }

    /// Properties blended through the smoothed Heaviside of `phi`.
    pub fn blended(pair: MaterialPair<T>, phi: &[T], epsilon: T) -> Self {
        let nodal = phi.iter().map(|&p| pair.blend_at(p, epsilon)).collect();
        MaterialField {
            source: Source::Blended {
                pair,
                phi: phi.to_vec(),
                epsilon,
            },
            nodal,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodal.len()
    }

    pub fn nodal(&self) -> &[PhaseProps<T>] {
        &self.nodal
    }

    /// Properties at a point given the element's node indices and shape
    /// function values there.
    #[inline]
    pub fn at_point(&self, nodes: &[usize], shape: &[T]) -> PhaseProps<T> {
        match &self.source {
            Source::Uniform(p) => *p,
            Source::Blended { pair, phi, epsilon } => {
                let mut v = T::zero();
                for (k, &i) in nodes.iter().enumerate() {
                    v += shape[k] * phi[i];
                }
                pair.blend_at(v, *epsilon)
            }
        }
    }
}
