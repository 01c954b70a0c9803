//! CHSH combination of four correlation coefficients.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellComponent {
    pub write_phase: f64,
    pub read_phase: f64,
    pub e: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellResult {
    pub s: f64,
    pub sigma_s: f64,
    pub components: [BellComponent; 4],
}

/// Setting pairs `(w, r), (w, r'), (w', r), (w', r')` maximising `S` for
/// fringes `E = V cos(phi_w + phi_r + phi0)`.
pub fn optimal_settings(phi0: f64) -> [(f64, f64); 4] {
    let (w, w2) = (0.0, FRAC_PI_2);
    let (r, r2) = (-FRAC_PI_4 - phi0, FRAC_PI_4 - phi0);
    [(w, r), (w, r2), (w2, r), (w2, r2)]
}

/// `S = |E1 + E2 + E3 - E4|`, errors added in quadrature.
pub fn chsh(components: &[BellComponent]) -> Result<BellResult> {
    let components: [BellComponent; 4] = components.try_into().map_err(|_| {
        Error::Undefined(format!(
            "CHSH needs 4 correlations, got {}",
            components.len()
        ))
    })?;
    let [a, b, c, d] = components;
    let s = (a.e + b.e + c.e - d.e).abs();
    let sigma_s = components
        .iter()
        .map(|k| k.sigma * k.sigma)
        .sum::<f64>()
        .sqrt();
    Ok(BellResult {
        s,
        sigma_s,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn comps(e: [f64; 4]) -> Vec<BellComponent> {
        e.iter()
            .map(|&e| BellComponent {
                write_phase: 0.0,
                read_phase: 0.0,
                e,
                sigma: 0.01,
            })
            .collect()
    }

    #[test]
    fn ideal_and_classical() {
        let h = 1.0 / SQRT_2;
        let r = chsh(&comps([h, h, h, -h])).unwrap();
        assert!((r.s - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((r.sigma_s - 0.02).abs() < 1e-12);
        assert_eq!(chsh(&comps([0.5; 4])).unwrap().s, 1.0);
        assert!(chsh(&comps([0.5; 4])[..3]).is_err());
    }

    #[test]
    fn optimal_settings_reach_tsirelson() {
        let phi0 = 0.7;
        let e: Vec<BellComponent> = optimal_settings(phi0)
            .iter()
            .map(|&(w, r)| BellComponent {
                write_phase: w,
                read_phase: r,
                e: (w + r + phi0).cos(),
                sigma: 0.0,
            })
            .collect();
        assert!((chsh(&e).unwrap().s - 2.0 * SQRT_2).abs() < 1e-12);
    }
}
