//! Covariance ellipse of a point cloud, scaled to two standard deviations.

use serde::{Deserialize, Serialize};

use crate::detections::TreePoint;
use crate::error::{Error, Result};

/// Minor/major eigenvalue ratio at or below which a cloud counts as collinear.
const COLLINEAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Major axis direction from +x, radians in `(-pi/2, pi/2]`.
    pub angle: f64,
}

impl Ellipse {
    /// Whether `(x, y)` lies inside or on the ellipse.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_major).powi(2) + (v / self.semi_minor).powi(2) <= 1.0
    }
}

pub fn fit_ellipse(members: &[TreePoint]) -> Result<Ellipse> {
    let xy: Vec<[f64; 2]> = members.iter().map(TreePoint::xy).collect();
    fit_ellipse_xy(&xy)
}

pub fn fit_ellipse_xy(points: &[[f64; 2]]) -> Result<Ellipse> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / nf;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let (a, b, c) = (sxx / (nf - 1.0), sxy / (nf - 1.0), syy / (nf - 1.0));

    let mean = 0.5 * (a + c);
    let half_gap = (0.5 * (a - c)).hypot(b);
    let major = mean + half_gap;
    let minor = mean - half_gap;
    if major.is_nan() || major <= 0.0 || minor <= COLLINEAR_RATIO * major {
        return Err(Error::Collinear);
    }
    Ok(Ellipse {
        center: [mx, my],
        semi_major: 2.0 * major.sqrt(),
        semi_minor: 2.0 * minor.sqrt(),
        angle: 0.5 * (2.0 * b).atan2(a - c),
    })
}
