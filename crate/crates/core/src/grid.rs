//! Logarithmic radius grids shared by the scaling fits and the layer-cake
//! quadrature.

use serde::{Deserialize, Serialize};

/// Geometrically spaced radii in `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self, String> {
        if !(r_min.is_finite() && r_max.is_finite()) || r_min <= 0.0 || r_max <= r_min {
            return Err(format!(
                "log grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
            ));
        }
        if n < 2 {
            return Err(format!("log grid needs at least 2 radii, got {n}"));
        }
        Ok(LogGrid { r_min, r_max, n })
    }

    pub fn radii(&self) -> Vec<f64> {
        let lo = self.r_min.ln();
        let hi = self.r_max.ln();
        (0..self.n)
            .map(|i| {
                let t = i as f64 / (self.n - 1) as f64;
                (lo + t * (hi - lo)).exp()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_are_geometric_and_span_the_range() {
        let g = LogGrid::new(0.01, 1.0, 5).unwrap();
        let r = g.radii();
        assert_eq!(r.len(), 5);
        assert!((r[0] - 0.01).abs() < 1e-15);
        assert!((r[4] - 1.0).abs() < 1e-12);
        let q0 = r[1] / r[0];
        let q1 = r[3] / r[2];
        assert!((q0 - q1).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(LogGrid::new(0.0, 1.0, 4).is_err());
        assert!(LogGrid::new(0.5, 0.5, 4).is_err());
        assert!(LogGrid::new(0.1, 1.0, 1).is_err());
    }
}
