//! Solid-angle quadrature for the emission pattern W(Ω).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular distribution of spontaneously emitted photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionPattern {
    Isotropic,
    /// W(θ) = (3/16π)(1 + cos²θ) about the given axis (0 = x, 1 = y, 2 = z).
    Dipole(u8),
}

impl EmissionPattern {
    fn density(&self, u: [f64; 3]) -> f64 {
        match *self {
            EmissionPattern::Isotropic => 1.0 / (4.0 * PI),
            EmissionPattern::Dipole(axis) => {
                let c = u[axis as usize];
                3.0 / (16.0 * PI) * (1.0 + c * c)
            }
        }
    }

    fn tag(&self) -> u8 {
        match *self {
            EmissionPattern::Isotropic => 0,
            EmissionPattern::Dipole(a) => 1 + a,
        }
    }
}

/// Gauss-Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..order {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[order - 1 - i] = wi;
    }
    (x, w)
}

/// Directions and weights integrating W(Ω) over the sphere.
///
/// The emission matrix elements depend only on |u_j|, so the product rule is
/// folded onto the first octant: each stored node carries the weight of its
/// eight sign images. Folding is exact for even orders.
#[derive(Clone, Debug, PartialEq)]
pub struct EmissionQuadrature {
    pub pattern: EmissionPattern,
    pub theta_order: usize,
    pub phi_points: usize,
    pub nodes: Vec<([f64; 3], f64)>,
}

impl EmissionQuadrature {
    /// Gauss-Legendre in cos θ (`theta_order` points) × uniform φ
    /// (`2 * theta_order` points).
    pub fn new(pattern: EmissionPattern, theta_order: usize) -> Result<Self> {
        if theta_order < 2 || !theta_order.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "quadrature order must be even and ≥ 2, got {theta_order}"
            )));
        }
        if let EmissionPattern::Dipole(a) = pattern {
            if a > 2 {
                return Err(Error::invalid(format!("dipole axis must be 0..=2, got {a}")));
            }
        }
        let phi_points = 2 * theta_order;
        let (ct, wt) = gauss_legendre(theta_order);
        let dphi = 2.0 * PI / phi_points as f64;
        let mut nodes = Vec::with_capacity(theta_order * phi_points / 8);
        for (c, wc) in ct.iter().zip(&wt) {
            if *c <= 0.0 {
                continue;
            }
            let st = (1.0 - c * c).sqrt();
            // φ_k = (k + ½)Δφ; points in (0, π/2) are the first-quadrant images.
            for k in 0..phi_points / 4 {
                let phi = (k as f64 + 0.5) * dphi;
                let u = [st * phi.cos(), st * phi.sin(), *c];
                nodes.push((u, 8.0 * wc * dphi * pattern.density(u)));
            }
        }
        let q = EmissionQuadrature {
            pattern,
            theta_order,
            phi_points,
            nodes,
        };
        q.check_normalized()?;
        Ok(q)
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let t = self.total_weight();
        if self.nodes.iter().any(|(_, w)| *w < 0.0) || (t - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("quadrature weights not normalized: sum = {t}")));
        }
        Ok(())
    }

    /// Stable byte description for cache fingerprints.
    pub fn fingerprint_bytes(&self) -> Vec<u8> {
        let mut b = vec![self.pattern.tag()];
        b.extend_from_slice(&(self.theta_order as u64).to_le_bytes());
        b.extend_from_slice(&(self.phi_points as u64).to_le_bytes());
        b
    }
}
