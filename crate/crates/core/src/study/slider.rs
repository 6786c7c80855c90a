use serde::{Deserialize, Serialize};

use super::StudyError;

/// Logarithmic slider: equal distances are equal scale ratios.
///
/// Position `steps - 1` is scale 1 and position 0 is `s_lb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliderGrid {
    pub steps: u32,
    pub s_lb: f64,
}

impl SliderGrid {
    pub fn new(steps: u32, s_lb: f64) -> Result<Self, StudyError> {
        if steps < 2 {
            return Err(StudyError::Config(format!("slider_steps must be >= 2, got {steps}")));
        }
        if !(s_lb > 0.0 && s_lb < 1.0) {
            return Err(StudyError::Config(format!("s_lb must be in (0, 1), got {s_lb}")));
        }
        Ok(Self { steps, s_lb })
    }

    /// `s_lb ^ ((steps - 1 - position) / (steps - 1))`.
    pub fn scale(&self, position: u32) -> Result<f64, StudyError> {
        if position >= self.steps {
            return Err(StudyError::SliderPosition {
                position,
                steps: self.steps,
            });
        }
        let top = (self.steps - 1) as f64;
        let exponent = (top - position as f64) / top;
        Ok(self.s_lb.powf(exponent))
    }

    /// Nearest grid position to `scale` in the log domain.
    pub fn position(&self, scale: f64) -> u32 {
        if !(scale > 0.0) {
            return 0;
        }
        let top = (self.steps - 1) as f64;
        let t = 1.0 - scale.ln() / self.s_lb.ln();
        (t * top).round().clamp(0.0, top) as u32
    }

    /// Grid position when `scale` lies on the grid (relative tolerance 1e-9).
    pub fn exact_position(&self, scale: f64) -> Option<u32> {
        let p = self.position(scale);
        let on_grid = self.scale(p).ok()?;
        ((on_grid - scale).abs() <= 1e-9 * scale.abs().max(1e-12)).then_some(p)
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..self.steps).map(|p| self.scale(p).expect("in range")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let g = SliderGrid::new(100, 0.05).unwrap();
        assert_eq!(g.scale(99).unwrap(), 1.0);
        assert_eq!(g.scale(0).unwrap(), 0.05);
        let odd = SliderGrid::new(101, 0.05).unwrap();
        assert!((odd.scale(50).unwrap() - 0.05f64.sqrt()).abs() < 1e-15);
        assert!(matches!(g.scale(100), Err(StudyError::SliderPosition { .. })));
    }

    #[test]
    fn round_trip_on_grid() {
        let g = SliderGrid::new(100, 0.05).unwrap();
        let scales = g.scales();
        assert!(scales.windows(2).all(|w| w[0] < w[1]));
        for (p, s) in scales.iter().enumerate() {
            assert_eq!(g.position(*s), p as u32);
            assert_eq!(g.exact_position(*s), Some(p as u32));
        }
        assert_eq!(g.exact_position(0.35), None);
    }
}
