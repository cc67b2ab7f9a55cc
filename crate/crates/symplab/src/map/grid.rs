//! Volume-preserving cell permutations of a uniform grid on `T^n x [0,1]^n`.
//!
//! A `GridPermutation` translates each grid cell rigidly onto its image
//! cell, so cell volumes are preserved exactly. The permutation is either
//! an explicit table (small examples, config files) or the functional
//! rearrangement built by the emergence construction, which never
//! materializes its (potentially astronomically many) cells.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::MapError;
use crate::construction::Rearrangement;
use crate::point::mod1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub n: usize,
    /// Cells per angle axis.
    pub res_theta: u64,
    /// Cells per action axis.
    pub res_r: u64,
}

impl GridSpec {
    /// Cell index of a point; angle coordinates are wrapped, action
    /// coordinates must lie in `[0, 1]` (up to a small slack).
    pub fn cell_of(&self, z: &[f64]) -> Result<Vec<u64>, MapError> {
        let n = self.n;
        let mut idx = Vec::with_capacity(2 * n);
        for &t in &z[..n] {
            let t = mod1(t);
            let i = ((t * self.res_theta as f64).floor() as u64).min(self.res_theta - 1);
            idx.push(i);
        }
        for &r in &z[n..] {
            if !(-1e-12..=1.0 + 1e-12).contains(&r) {
                return Err(MapError::DomainViolation(format!(
                    "action coordinate {r} outside [0,1]"
                )));
            }
            let i = ((r.max(0.0) * self.res_r as f64).floor() as u64).min(self.res_r - 1);
            idx.push(i);
        }
        Ok(idx)
    }

    /// Lower corner of a cell.
    pub fn corner(&self, cell: &[u64]) -> Vec<f64> {
        let n = self.n;
        let mut c = Vec::with_capacity(2 * n);
        for &i in &cell[..n] {
            c.push(i as f64 / self.res_theta as f64);
        }
        for &i in &cell[n..] {
            c.push(i as f64 / self.res_r as f64);
        }
        c
    }

    pub fn cell_center(&self, cell: &[u64]) -> Vec<f64> {
        let n = self.n;
        let mut c = Vec::with_capacity(2 * n);
        for &i in &cell[..n] {
            c.push((i as f64 + 0.5) / self.res_theta as f64);
        }
        for &i in &cell[n..] {
            c.push((i as f64 + 0.5) / self.res_r as f64);
        }
        c
    }
}

#[derive(Clone, Debug)]
pub enum CellPerm {
    /// Identity outside the listed cells.
    Explicit {
        fwd: BTreeMap<Vec<u64>, Vec<u64>>,
        inv: BTreeMap<Vec<u64>, Vec<u64>>,
    },
    /// Functional permutation from the emergence construction.
    Rearrangement {
        rearr: Arc<Rearrangement>,
        inverted: bool,
    },
}

#[derive(Clone, Debug)]
pub struct GridPermutation {
    pub grid: GridSpec,
    pub perm: CellPerm,
}

impl GridPermutation {
    pub fn explicit(
        grid: GridSpec,
        pairs: Vec<(Vec<u64>, Vec<u64>)>,
    ) -> Result<Self, MapError> {
        let mut fwd = BTreeMap::new();
        let mut inv = BTreeMap::new();
        for (a, b) in pairs {
            if a.len() != 2 * grid.n || b.len() != 2 * grid.n {
                return Err(MapError::DomainViolation(
                    "cell index arity mismatch".into(),
                ));
            }
            if fwd.insert(a.clone(), b.clone()).is_some() {
                return Err(MapError::DomainViolation(format!(
                    "duplicate source cell {a:?}"
                )));
            }
            if inv.insert(b.clone(), a.clone()).is_some() {
                return Err(MapError::DomainViolation(format!(
                    "duplicate target cell {b:?}"
                )));
            }
        }
        // cells mapped away must be mapped onto (permutation, not injection)
        for src in fwd.keys() {
            if !inv.contains_key(src) && fwd.contains_key(src) {
                // src is vacated; permutation requires someone maps onto it
                // unless src also appears as a target.
                if !fwd.values().any(|v| v == src) {
                    return Err(MapError::DomainViolation(format!(
                        "cell {src:?} is vacated but never filled; not a bijection"
                    )));
                }
            }
        }
        Ok(GridPermutation {
            grid,
            perm: CellPerm::Explicit { fwd, inv },
        })
    }

    pub fn from_rearrangement(rearr: Arc<Rearrangement>) -> Self {
        GridPermutation {
            grid: rearr.grid(),
            perm: CellPerm::Rearrangement {
                rearr,
                inverted: false,
            },
        }
    }

    pub fn inverse(&self) -> Self {
        let perm = match &self.perm {
            CellPerm::Explicit { fwd, inv } => CellPerm::Explicit {
                fwd: inv.clone(),
                inv: fwd.clone(),
            },
            CellPerm::Rearrangement { rearr, inverted } => CellPerm::Rearrangement {
                rearr: rearr.clone(),
                inverted: !inverted,
            },
        };
        GridPermutation {
            grid: self.grid,
            perm,
        }
    }

    fn image_cell(&self, cell: &[u64]) -> Vec<u64> {
        match &self.perm {
            CellPerm::Explicit { fwd, .. } => {
                fwd.get(cell).cloned().unwrap_or_else(|| cell.to_vec())
            }
            CellPerm::Rearrangement { rearr, inverted } => {
                if *inverted {
                    rearr.cell_inv(cell)
                } else {
                    rearr.cell_fwd(cell)
                }
            }
        }
    }

    /// Translate the point by the difference of its cell's corner and the
    /// image cell's corner.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>, MapError> {
        let cell = self.grid.cell_of(z)?;
        let img = self.image_cell(&cell);
        if img == cell {
            return Ok(z.to_vec());
        }
        let src = self.grid.corner(&cell);
        let dst = self.grid.corner(&img);
        Ok(z
            .iter()
            .zip(src.iter().zip(&dst))
            .map(|(x, (s, d))| x + (d - s))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{evaluate, MapDefinition};
    use crate::point::PhasePoint;

    fn swap_two() -> GridPermutation {
        let grid = GridSpec {
            n: 1,
            res_theta: 4,
            res_r: 4,
        };
        GridPermutation::explicit(
            grid,
            vec![
                (vec![0, 0], vec![2, 3]),
                (vec![2, 3], vec![0, 0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn swap_is_involution_on_cell_centers() {
        let g = MapDefinition::GridPermutation(swap_two());
        let center = PhasePoint::torus_annulus(vec![0.125, 0.125]);
        let once = evaluate(&g, &center).unwrap();
        assert_eq!(once.coords, vec![0.625, 0.875]);
        let back = evaluate(&g, &once).unwrap();
        assert_eq!(back.coords, center.coords);
    }

    #[test]
    fn identity_off_support() {
        let g = MapDefinition::GridPermutation(swap_two());
        let z = PhasePoint::torus_annulus(vec![0.6, 0.1]);
        let img = evaluate(&g, &z).unwrap();
        assert_eq!(img.coords, z.coords);
    }

    #[test]
    fn inverse_undoes_forward_everywhere() {
        let p = swap_two();
        let pinv = p.inverse();
        for &(t, r) in &[(0.01, 0.99), (0.13, 0.2), (0.51, 0.51), (0.124, 0.124)] {
            let z = vec![t, r];
            let w = p.apply(&z).unwrap();
            let back = pinv.apply(&w).unwrap();
            assert_eq!(back, z);
        }
    }

    #[test]
    fn rejects_non_bijection() {
        let grid = GridSpec {
            n: 1,
            res_theta: 4,
            res_r: 4,
        };
        let bad = GridPermutation::explicit(
            grid,
            vec![(vec![0, 0], vec![1, 1])], // vacates (0,0) without filling it
        );
        assert!(bad.is_err());
    }
}
