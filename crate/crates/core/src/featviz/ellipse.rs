use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

/// Quantile of the chi-square distribution with 2 degrees of freedom:
/// `-2 ln(1 - level)`.
pub fn chi2_quantile_2dof(level: f64) -> f64 {
    -2.0 * (-level).ln_1p()
}

/// Confidence ellipse. `width` spans the major axis, `height` the minor
/// axis; `orientation` is the major-axis angle in `(-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: Point,
    pub width: f64,
    pub height: f64,
    pub orientation: f64,
    /// `(width + height) / 2`.
    pub size: f64,
}

impl Ellipse {
    fn new(center: Point, width: f64, height: f64, orientation: f64) -> Self {
        Self {
            center,
            width,
            height,
            orientation,
            size: (width + height) / 2.0,
        }
    }

    /// Whether `p` lies inside or on the ellipse.
    pub fn contains(&self, p: Point) -> bool {
        let (s, c) = self.orientation.sin_cos();
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        let (a, b) = (self.width / 2.0, self.height / 2.0);
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    }
}

/// Sample-mean / unbiased-covariance ellipse with semi-axes `√(q·λ)` where
/// `q` is the 2-dof chi-square quantile at `level`.
pub fn confidence_ellipse(points: &[Point], level: f64) -> Result<Ellipse> {
    if points.len() < 3 {
        return Err(Error::Config(format!("need at least 3 points, got {}", points.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let (sxx, sxy, syy) = (sxx / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0));

    let half_trace = (sxx + syy) / 2.0;
    let radius = ((sxx - syy) / 2.0).hypot(sxy);
    let major = half_trace + radius;
    let minor = half_trace - radius;
    if !(minor >= 1e-12) {
        return Err(Error::DegenerateCovariance(minor));
    }
    let mut orientation = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if orientation <= -std::f64::consts::FRAC_PI_2 {
        orientation += std::f64::consts::PI;
    }
    let q = chi2_quantile_2dof(level);
    Ok(Ellipse::new(
        [mx, my],
        2.0 * (q * major).sqrt(),
        2.0 * (q * minor).sqrt(),
        orientation,
    ))
}
