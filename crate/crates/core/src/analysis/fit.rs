//! Weighted least-squares fringe fit `E(phi) = V cos(phi + phi0)`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    /// Analyzer phase setting, rad.
    pub phase: f64,
    pub e: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FringeScan {
    pub points: Vec<FringePoint>,
}

impl FringeScan {
    pub fn new(points: Vec<FringePoint>) -> Result<Self> {
        if let Some(p) = points
            .iter()
            .find(|p| !(p.e.abs() <= 1.0) || !(p.sigma >= 0.0))
        {
            return Err(Error::invalid(
                "scan",
                format!("point {p:?} has |E| > 1 or negative error"),
            ));
        }
        Ok(Self { points })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityFit {
    pub visibility: f64,
    /// Fringe offset folded into `[-pi, pi)`.
    pub phi0: f64,
    /// Covariance of `(V, phi0)`.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
}

impl VisibilityFit {
    pub fn sigma_visibility(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn sigma_phi0(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

/// Folds an angle into `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        y - TAU
    } else {
        y
    }
}

// Floor on point errors so exact synthetic data still gets finite weights.
const MIN_SIGMA: f64 = 1e-9;

/// Fits `E = a cos(phi) - b sin(phi)` with `a = V cos(phi0)`, `b = V sin(phi0)`.
pub fn fit_visibility(scan: &FringeScan) -> Result<VisibilityFit> {
    let pts = &scan.points;
    if pts.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 points, got {}",
            pts.len()
        )));
    }
    let lo = pts.iter().map(|p| p.phase).fold(f64::INFINITY, f64::min);
    let hi = pts
        .iter()
        .map(|p| p.phase)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > PI) {
        return Err(Error::Fit(format!(
            "scan spans {:.3} rad, need more than pi",
            hi - lo
        )));
    }
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let w = 1.0 / p.sigma.max(MIN_SIGMA).powi(2);
        let (x1, x2) = (p.phase.cos(), -p.phase.sin());
        s11 += w * x1 * x1;
        s12 += w * x1 * x2;
        s22 += w * x2 * x2;
        r1 += w * x1 * p.e;
        r2 += w * x2 * p.e;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-12 * (s11 * s22).max(f64::MIN_POSITIVE)) {
        return Err(Error::Fit("singular normal equations".into()));
    }
    let (c11, c12, c22) = (s22 / det, -s12 / det, s11 / det);
    let a = c11 * r1 + c12 * r2;
    let b = c12 * r1 + c22 * r2;
    let v = a.hypot(b);
    let chi2 = pts
        .iter()
        .map(|p| {
            let model = a * p.phase.cos() - b * p.phase.sin();
            ((p.e - model) / p.sigma.max(MIN_SIGMA)).powi(2)
        })
        .sum();
    let covariance = if v > 0.0 {
        // Jacobian of (V, phi0) with respect to (a, b).
        let j = [[a / v, b / v], [-b / (v * v), a / (v * v)]];
        let c = [[c11, c12], [c12, c22]];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                out[i][k] = (0..2)
                    .flat_map(|m| (0..2).map(move |n| (m, n)))
                    .map(|(m, n)| j[i][m] * c[m][n] * j[k][n])
                    .sum();
            }
        }
        out
    } else {
        [[c11.max(c22), 0.0], [0.0, f64::INFINITY]]
    };
    Ok(VisibilityFit {
        visibility: v,
        phi0: wrap_phase(b.atan2(a)),
        covariance,
        chi2,
    })
}
