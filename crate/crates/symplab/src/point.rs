//! Phase-space points and the two model charts.
//!
//! Every point carries `2n` coordinates. In the `TorusAnnulus` chart the
//! first `n` entries are angles on the unit-circumference torus (stored in
//! `[0, 1)`) and the last `n` are actions in `R^n`. In the `Euclidean`
//! chart all coordinates are unconstrained.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Euclidean,
    TorusAnnulus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub coords: Vec<f64>,
    pub chart: Chart,
}

/// Reduce to `[0, 1)`. Idempotent: already-reduced values pass through.
pub fn mod1(x: f64) -> f64 {
    let y = x - x.floor();
    // x.floor() of e.g. -1e-17 yields y = 1.0 exactly after rounding
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Distance on the unit-circumference circle.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = mod1(a - b);
    d.min(1.0 - d)
}

impl PhasePoint {
    pub fn euclidean(coords: Vec<f64>) -> Self {
        assert!(coords.len() % 2 == 0, "phase points have 2n coordinates");
        PhasePoint {
            coords,
            chart: Chart::Euclidean,
        }
    }

    pub fn torus_annulus(coords: Vec<f64>) -> Self {
        assert!(coords.len() % 2 == 0, "phase points have 2n coordinates");
        let mut p = PhasePoint {
            coords,
            chart: Chart::TorusAnnulus,
        };
        p.reduce();
        p
    }

    /// Degrees of freedom.
    pub fn dof(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Angle block (first n coordinates) for torus-annulus points.
    pub fn angles(&self) -> &[f64] {
        &self.coords[..self.dof()]
    }

    /// Action block (last n coordinates).
    pub fn actions(&self) -> &[f64] {
        &self.coords[self.dof()..]
    }

    /// Reduce torus coordinates mod 1 in place. No-op on Euclidean charts.
    pub fn reduce(&mut self) {
        if self.chart == Chart::TorusAnnulus {
            let n = self.dof();
            for x in &mut self.coords[..n] {
                *x = mod1(*x);
            }
        }
    }

    /// `d_infty` between two points in the same chart: max over coordinates,
    /// with per-coordinate circle distance on the angle block.
    pub fn dist_inf(&self, other: &PhasePoint) -> f64 {
        assert_eq!(self.chart, other.chart);
        assert_eq!(self.coords.len(), other.coords.len());
        let n = self.dof();
        let mut d: f64 = 0.0;
        for (i, (a, b)) in self.coords.iter().zip(other.coords.iter()).enumerate() {
            let di = if self.chart == Chart::TorusAnnulus && i < n {
                circle_dist(*a, *b)
            } else {
                (a - b).abs()
            };
            d = d.max(di);
        }
        d
    }
}

/// `d_infty` on raw coordinate vectors with a periodicity mask: coordinates
/// flagged `true` are compared on the circle. Used by the census
/// deduplication, where maps like toral automorphisms wrap every coordinate.
pub fn dist_inf_masked(a: &[f64], b: &[f64], periodic: &[bool]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..a.len() {
        let di = if periodic[i] {
            circle_dist(a[i], b[i])
        } else {
            (a[i] - b[i]).abs()
        };
        d = d.max(di);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod1_idempotent() {
        for &x in &[-3.7, -1.0, -1e-17, 0.0, 0.25, 0.999999, 1.0, 17.3] {
            let once = mod1(x);
            assert!((0.0..1.0).contains(&once), "mod1({x}) = {once}");
            assert_eq!(mod1(once), once);
        }
    }

    #[test]
    fn circle_dist_wraps() {
        assert!((circle_dist(0.95, 0.05) - 0.1).abs() < 1e-15);
        assert!((circle_dist(0.2, 0.7) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn torus_point_reduces_angles_only() {
        let p = PhasePoint::torus_annulus(vec![1.25, -0.5, 2.5, -2.5]);
        assert_eq!(p.angles(), &[0.25, 0.5]);
        assert_eq!(p.actions(), &[2.5, -2.5]);
    }

    #[test]
    fn dist_inf_torus() {
        let a = PhasePoint::torus_annulus(vec![0.95, 0.0]);
        let b = PhasePoint::torus_annulus(vec![0.05, 0.3]);
        assert!((a.dist_inf(&b) - 0.3).abs() < 1e-15);
    }
}
