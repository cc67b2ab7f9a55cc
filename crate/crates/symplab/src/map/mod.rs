//! The symplectic map zoo: explicit map families, exact and
//! finite-difference Jacobians, symplecticity verification, and orbit
//! iteration. Every other module consumes maps through this interface.

pub mod grid;

use nalgebra::DMatrix;

use crate::normal_form::gf::{GeneratingFunction, TWO_PI};
use crate::point::{mod1, Chart, PhasePoint};
use crate::poly::Poly;

pub use grid::{CellPerm, GridPermutation, GridSpec};

#[derive(Debug, Clone, thiserror::Error)]
pub enum MapError {
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("implicit solve diverged: residual {residual:.3e} after {iters} iterations")]
    ImplicitSolveDivergence { residual: f64, iters: usize },
    #[error("orbit escaped at step {step}")]
    OrbitEscape { step: usize },
    #[error("matrix is not symplectic: max |M^T J M - J| = {defect:.3e}")]
    NotSymplectic { defect: f64 },
    #[error("chart is not conformally symplectic: defect {defect:.3e}")]
    NotConformal { defect: f64 },
    #[error("singular linear data: {0}")]
    Singular(String),
}

/// Newton options for the implicit generating-function solve.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// An affine conformally-symplectic chart `H(z) = A z + b` with
/// `A^T J A = lambda J`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineChart {
    pub lin: DMatrix<f64>,
    pub trans: Vec<f64>,
    pub lambda: f64,
}

impl AffineChart {
    pub fn new(lin: DMatrix<f64>, trans: Vec<f64>) -> Result<Self, MapError> {
        let dim = lin.nrows();
        assert_eq!(lin.ncols(), dim);
        assert_eq!(trans.len(), dim);
        assert!(dim % 2 == 0);
        let j = standard_form(dim / 2);
        let m = lin.transpose() * &j * &lin;
        // lambda from the (0, n) entry of M^T J M = lambda J
        let lambda = m[(0, dim / 2)];
        if lambda == 0.0 {
            return Err(MapError::Singular("conformal factor lambda = 0".into()));
        }
        let defect = (&m - j.scale(lambda)).amax();
        if defect > 1e-10 * lambda.abs().max(1.0) {
            return Err(MapError::NotConformal { defect });
        }
        Ok(AffineChart { lin, trans, lambda })
    }

    pub fn identity(dim: usize) -> Self {
        AffineChart {
            lin: DMatrix::identity(dim, dim),
            trans: vec![0.0; dim],
            lambda: 1.0,
        }
    }

    /// Uniform scaling chart `z -> rho z` (conformal factor `rho^2`).
    pub fn scaling(dim: usize, rho: f64) -> Self {
        AffineChart {
            lin: DMatrix::identity(dim, dim).scale(rho),
            trans: vec![0.0; dim],
            lambda: rho * rho,
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(z);
        let w = &self.lin * v;
        w.iter().zip(&self.trans).map(|(a, b)| a + b).collect()
    }

    pub fn apply_inverse(&self, z: &[f64]) -> Result<Vec<f64>, MapError> {
        let shifted: Vec<f64> = z.iter().zip(&self.trans).map(|(a, b)| a - b).collect();
        let v = nalgebra::DVector::from_column_slice(&shifted);
        self.lin
            .clone()
            .lu()
            .solve(&v)
            .map(|w| w.iter().copied().collect())
            .ok_or_else(|| MapError::Singular("affine chart not invertible".into()))
    }
}

/// Optional polynomial perturbation added to a map image; each component is
/// a polynomial in the 2n input coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyPerturbation {
    pub components: Vec<Poly>,
}

#[derive(Clone, Debug)]
pub enum MapDefinition {
    /// `(x, p) -> (x + p + g, p + g)` with `g = a sin(2 pi x) / (2 pi)`,
    /// both coordinates on the unit-circumference torus.
    StandardMap { a: f64 },
    /// `(theta, r) -> (theta + alpha + grad Q(r), r)`.
    IntegrableTwist { alpha: Vec<f64>, q: Poly },
    /// Truncated elliptic normal form on `R^{2n} ~ C^n`:
    /// `z_k -> z_k exp(2 pi i (alpha_hat_k + sum_m omega_km |z_m|^2))`,
    /// plus an optional polynomial remainder. Frequencies are stored in
    /// the unit-circumference convention.
    EllipticNormalForm {
        alpha_hat: Vec<f64>,
        omega: DMatrix<f64>,
        remainder: Option<PolyPerturbation>,
    },
    /// `(x, y) -> (y, -grad V(y) - x)` on `R^{2n}`.
    HenonLike { v_hat: Poly },
    /// Implicit exact symplectic map from a generating function.
    GeneratingFunctionMap {
        s: GeneratingFunction,
        newton: NewtonOptions,
        /// Optional radius bound on `|r|` for the implicit solve domain.
        r_max: Option<f64>,
    },
    /// `z -> M z` with `M^T J M = J`; optionally on the torus
    /// `T^{2n} = R^{2n}/Z^{2n}` (integer matrices act as toral
    /// automorphisms there).
    LinearSymplectic { mat: DMatrix<f64>, torus: bool },
    /// Piecewise-translation volume-preserving map permuting grid cells on
    /// `T^n x [0,1]^n`.
    GridPermutation(GridPermutation),
    Iterate {
        inner: Box<MapDefinition>,
        k: u32,
    },
    /// `z -> H(inner(H^{-1}(z)))` for an affine conformally-symplectic `H`.
    Conjugate {
        inner: Box<MapDefinition>,
        chart: AffineChart,
    },
    /// Left-to-right composition: `maps[last] ( ... maps[0](z) )`.
    Composed { maps: Vec<MapDefinition> },
}

/// The standard symplectic form `J = [[0, I], [-I, 0]]` on `R^{2n}`.
pub fn standard_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

impl MapDefinition {
    pub fn linear_symplectic(mat: DMatrix<f64>, torus: bool) -> Result<Self, MapError> {
        let dim = mat.nrows();
        assert!(dim % 2 == 0 && mat.ncols() == dim);
        let j = standard_form(dim / 2);
        let defect = (mat.transpose() * &j * &mat - &j).amax();
        if defect > 1e-10 {
            return Err(MapError::NotSymplectic { defect });
        }
        Ok(MapDefinition::LinearSymplectic { mat, torus })
    }

    pub fn generating(s: GeneratingFunction) -> Self {
        MapDefinition::GeneratingFunctionMap {
            s,
            newton: NewtonOptions::default(),
            r_max: None,
        }
    }

    /// Degrees of freedom `n` (phase space has dimension `2n`).
    pub fn dof(&self) -> usize {
        match self {
            MapDefinition::StandardMap { .. } => 1,
            MapDefinition::IntegrableTwist { alpha, .. } => alpha.len(),
            MapDefinition::EllipticNormalForm { alpha_hat, .. } => alpha_hat.len(),
            MapDefinition::HenonLike { v_hat } => v_hat.nvars(),
            MapDefinition::GeneratingFunctionMap { s, .. } => s.n(),
            MapDefinition::LinearSymplectic { mat, .. } => mat.nrows() / 2,
            MapDefinition::GridPermutation(g) => g.grid.n,
            MapDefinition::Iterate { inner, .. } => inner.dof(),
            MapDefinition::Conjugate { inner, .. } => inner.dof(),
            MapDefinition::Composed { maps } => maps[0].dof(),
        }
    }

    /// Chart the map is declared on.
    pub fn chart(&self) -> Chart {
        match self {
            MapDefinition::StandardMap { .. }
            | MapDefinition::IntegrableTwist { .. }
            | MapDefinition::GeneratingFunctionMap { .. }
            | MapDefinition::GridPermutation(_) => Chart::TorusAnnulus,
            MapDefinition::LinearSymplectic { torus, .. } => {
                if *torus {
                    Chart::TorusAnnulus
                } else {
                    Chart::Euclidean
                }
            }
            MapDefinition::EllipticNormalForm { .. } | MapDefinition::HenonLike { .. } => {
                Chart::Euclidean
            }
            MapDefinition::Iterate { inner, .. } => inner.chart(),
            MapDefinition::Conjugate { .. } => Chart::Euclidean,
            MapDefinition::Composed { maps } => maps[0].chart(),
        }
    }

    /// Which coordinates live on a circle (used for lifted Newton solves
    /// and torus-aware distances).
    pub fn periodic_mask(&self) -> Vec<bool> {
        let n = self.dof();
        match self {
            MapDefinition::StandardMap { .. } => vec![true; 2],
            MapDefinition::IntegrableTwist { .. }
            | MapDefinition::GeneratingFunctionMap { .. }
            | MapDefinition::GridPermutation(_) => {
                let mut m = vec![true; n];
                m.extend(vec![false; n]);
                m
            }
            MapDefinition::LinearSymplectic { torus, .. } => vec![*torus; 2 * n],
            MapDefinition::EllipticNormalForm { .. } | MapDefinition::HenonLike { .. } => {
                vec![false; 2 * n]
            }
            MapDefinition::Iterate { inner, .. } => inner.periodic_mask(),
            MapDefinition::Conjugate { .. } => vec![false; 2 * n],
            MapDefinition::Composed { maps } => maps[0].periodic_mask(),
        }
    }

    pub fn evaluate(&self, z: &PhasePoint) -> Result<PhasePoint, MapError> {
        evaluate(self, z)
    }
}

fn wrap_coords(coords: &mut [f64], mask: &[bool]) {
    for (x, &p) in coords.iter_mut().zip(mask) {
        if p {
            *x = mod1(*x);
        }
    }
}

fn out_point(map: &MapDefinition, mut coords: Vec<f64>) -> PhasePoint {
    wrap_coords(&mut coords, &map.periodic_mask());
    PhasePoint {
        coords,
        chart: map.chart(),
    }
}

pub fn evaluate(map: &MapDefinition, z: &PhasePoint) -> Result<PhasePoint, MapError> {
    let dim = 2 * map.dof();
    if z.coords.len() != dim {
        return Err(MapError::DomainViolation(format!(
            "point has {} coordinates, map needs {}",
            z.coords.len(),
            dim
        )));
    }
    if map.chart() != z.chart {
        return Err(MapError::DomainViolation(format!(
            "point chart {:?} does not match map chart {:?}",
            z.chart,
            map.chart()
        )));
    }
    if !z.coords.iter().all(|x| x.is_finite()) {
        return Err(MapError::DomainViolation("non-finite coordinates".into()));
    }
    let coords = evaluate_coords(map, &z.coords)?;
    Ok(out_point(map, coords))
}

/// Raw coordinate action (wrapping applied by the public entry point).
fn evaluate_coords(map: &MapDefinition, z: &[f64]) -> Result<Vec<f64>, MapError> {
    match map {
        MapDefinition::StandardMap { a } => {
            let (x, p) = (z[0], z[1]);
            let g = a * (TWO_PI * x).sin() / TWO_PI;
            Ok(vec![x + p + g, p + g])
        }
        MapDefinition::IntegrableTwist { alpha, q } => {
            let n = alpha.len();
            let (theta, r) = z.split_at(n);
            let gq = q.eval_gradient(r);
            let mut out: Vec<f64> = theta
                .iter()
                .zip(alpha.iter().zip(&gq))
                .map(|(t, (a, g))| t + a + g)
                .collect();
            out.extend_from_slice(r);
            Ok(out)
        }
        MapDefinition::EllipticNormalForm {
            alpha_hat,
            omega,
            remainder,
        } => {
            let n = alpha_hat.len();
            let (x, y) = z.split_at(n);
            let actions: Vec<f64> = (0..n).map(|m| x[m] * x[m] + y[m] * y[m]).collect();
            let mut out = vec![0.0; 2 * n];
            for k in 0..n {
                let mut phase = alpha_hat[k];
                for m in 0..n {
                    phase += omega[(k, m)] * actions[m];
                }
                let (s, c) = (TWO_PI * phase).sin_cos();
                out[k] = x[k] * c - y[k] * s;
                out[n + k] = x[k] * s + y[k] * c;
            }
            if let Some(p) = remainder {
                for (o, comp) in out.iter_mut().zip(&p.components) {
                    *o += comp.eval(z);
                }
            }
            Ok(out)
        }
        MapDefinition::HenonLike { v_hat } => {
            let n = v_hat.nvars();
            let (x, y) = z.split_at(n);
            let grad = v_hat.eval_gradient(y);
            let mut out = y.to_vec();
            out.extend((0..n).map(|i| -grad[i] - x[i]));
            Ok(out)
        }
        MapDefinition::GeneratingFunctionMap { s, newton, r_max } => {
            let n = s.n();
            let (theta, r) = z.split_at(n);
            if let Some(rm) = r_max {
                let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > *rm {
                    return Err(MapError::DomainViolation(format!(
                        "|r| = {norm:.3e} above configured radius {rm:.3e}"
                    )));
                }
            }
            let tb = solve_image_angle(s, theta, r, newton)?;
            let dtheta = s.d_theta(&tb, r);
            let mut out = tb;
            out.extend(r.iter().zip(&dtheta).map(|(ri, d)| ri - d));
            Ok(out)
        }
        MapDefinition::LinearSymplectic { mat, .. } => {
            let v = nalgebra::DVector::from_column_slice(z);
            Ok((mat * v).iter().copied().collect())
        }
        MapDefinition::GridPermutation(g) => g.apply(z),
        MapDefinition::Iterate { inner, k } => {
            let mut cur = z.to_vec();
            let mask = inner.periodic_mask();
            for step in 0..*k {
                cur = evaluate_coords(inner, &cur).map_err(|e| match e {
                    MapError::OrbitEscape { .. } => MapError::OrbitEscape {
                        step: step as usize,
                    },
                    other => other,
                })?;
                wrap_coords(&mut cur, &mask);
            }
            Ok(cur)
        }
        MapDefinition::Conjugate { inner, chart } => {
            let w = chart.apply_inverse(z)?;
            let mut w = w;
            wrap_coords(&mut w, &inner.periodic_mask());
            let fw = evaluate_coords(inner, &w)?;
            let mut fw = fw;
            wrap_coords(&mut fw, &inner.periodic_mask());
            Ok(chart.apply(&fw))
        }
        MapDefinition::Composed { maps } => {
            let mut cur = z.to_vec();
            for m in maps {
                cur = evaluate_coords(m, &cur)?;
                wrap_coords(&mut cur, &m.periodic_mask());
            }
            Ok(cur)
        }
    }
}

/// Damped Newton for the image angle of the generating relations:
/// find `tb` with `tb - dS/dr(tb, r) = theta`. Initial guess
/// `tb_0 = theta + alpha`.
fn solve_image_angle(
    s: &GeneratingFunction,
    theta: &[f64],
    r: &[f64],
    opts: &NewtonOptions,
) -> Result<Vec<f64>, MapError> {
    let n = s.n();
    let mut tb: Vec<f64> = theta.iter().zip(&s.alpha).map(|(t, a)| t + a).collect();
    let residual = |tb: &[f64]| -> Vec<f64> {
        let dr = s.d_r(tb, r);
        (0..n).map(|i| tb[i] - dr[i] - theta[i]).collect()
    };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut res = residual(&tb);
    let mut res_norm = norm(&res);
    for iter in 0..opts.max_iter {
        if res_norm <= opts.tol {
            return Ok(tb);
        }
        let (_, s_rt, _) = s.second_derivs(&tb, r);
        // d(residual_i)/d(tb_j) = delta_ij - d2 S / dr_i dtb_j
        let mut jac = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] -= s_rt[(i, j)];
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(&res);
        let step = jac.lu().solve(&rhs).ok_or(MapError::ImplicitSolveDivergence {
            residual: res_norm,
            iters: iter,
        })?;
        // damping: halve until the residual decreases
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = (0..n).map(|i| tb[i] - lambda * step[i]).collect();
            let cand_res = residual(&cand);
            let cand_norm = norm(&cand_res);
            if cand_norm < res_norm || lambda < 1.0 / 256.0 {
                tb = cand;
                res = cand_res;
                res_norm = cand_norm;
                break;
            }
            lambda *= 0.5;
        }
    }
    if res_norm <= opts.tol {
        Ok(tb)
    } else {
        Err(MapError::ImplicitSolveDivergence {
            residual: res_norm,
            iters: opts.max_iter,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JacobianScheme {
    Analytic,
    CentralDifference { h: f64 },
}

impl Default for JacobianScheme {
    fn default() -> Self {
        JacobianScheme::Analytic
    }
}

pub fn jacobian(
    map: &MapDefinition,
    z: &PhasePoint,
    scheme: JacobianScheme,
) -> Result<DMatrix<f64>, MapError> {
    match scheme {
        JacobianScheme::Analytic => jacobian_coords(map, &z.coords),
        JacobianScheme::CentralDifference { h } => jacobian_fd(map, &z.coords, h),
    }
}

/// Central differences on the coordinate action. Image differences of
/// periodic coordinates are taken with the nearest representative so the
/// stencil is immune to wrap seams.
fn jacobian_fd(map: &MapDefinition, z: &[f64], h: f64) -> Result<DMatrix<f64>, MapError> {
    let dim = z.len();
    let mask = map.periodic_mask();
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[j] += h;
        zm[j] -= h;
        let fp = evaluate_coords(map, &zp)?;
        let fm = evaluate_coords(map, &zm)?;
        for i in 0..dim {
            let mut d = fp[i] - fm[i];
            if mask[i] {
                d -= d.round();
            }
            jac[(i, j)] = d / (2.0 * h);
        }
    }
    Ok(jac)
}

fn jacobian_coords(map: &MapDefinition, z: &[f64]) -> Result<DMatrix<f64>, MapError> {
    match map {
        MapDefinition::StandardMap { a } => {
            let c = a * (TWO_PI * z[0]).cos();
            Ok(DMatrix::from_row_slice(2, 2, &[1.0 + c, 1.0, c, 1.0]))
        }
        MapDefinition::IntegrableTwist { alpha, q } => {
            let n = alpha.len();
            let r = &z[n..];
            let mut jac = DMatrix::identity(2 * n, 2 * n);
            for i in 0..n {
                let qi = q.partial(i);
                for j in 0..n {
                    jac[(i, n + j)] = qi.partial(j).eval(r);
                }
            }
            Ok(jac)
        }
        MapDefinition::EllipticNormalForm {
            alpha_hat,
            omega,
            remainder,
        } => {
            let n = alpha_hat.len();
            let (x, y) = z.split_at(n);
            let actions: Vec<f64> = (0..n).map(|m| x[m] * x[m] + y[m] * y[m]).collect();
            let mut jac = DMatrix::zeros(2 * n, 2 * n);
            for k in 0..n {
                let mut phase = alpha_hat[k];
                for m in 0..n {
                    phase += omega[(k, m)] * actions[m];
                }
                let (s, c) = (TWO_PI * phase).sin_cos();
                // z'_k = z_k e^{i 2 pi phase}; d phase / d x_m = omega_km 2 x_m
                for m in 0..n {
                    let dpx = TWO_PI * omega[(k, m)] * 2.0 * x[m];
                    let dpy = TWO_PI * omega[(k, m)] * 2.0 * y[m];
                    // derivative of (x_k c - y_k s, x_k s + y_k c)
                    jac[(k, m)] += (-x[k] * s - y[k] * c) * dpx;
                    jac[(k, n + m)] += (-x[k] * s - y[k] * c) * dpy;
                    jac[(n + k, m)] += (x[k] * c - y[k] * s) * dpx;
                    jac[(n + k, n + m)] += (x[k] * c - y[k] * s) * dpy;
                }
                jac[(k, k)] += c;
                jac[(k, n + k)] += -s;
                jac[(n + k, k)] += s;
                jac[(n + k, n + k)] += c;
            }
            if let Some(p) = remainder {
                for (i, comp) in p.components.iter().enumerate() {
                    for j in 0..2 * n {
                        jac[(i, j)] += comp.partial(j).eval(z);
                    }
                }
            }
            Ok(jac)
        }
        MapDefinition::HenonLike { v_hat } => {
            let n = v_hat.nvars();
            let y = &z[n..];
            let mut jac = DMatrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                jac[(i, n + i)] = 1.0;
                jac[(n + i, i)] = -1.0;
                let vi = v_hat.partial(i);
                for j in 0..n {
                    jac[(n + i, n + j)] = -vi.partial(j).eval(y);
                }
            }
            Ok(jac)
        }
        MapDefinition::GeneratingFunctionMap { s, newton, .. } => {
            let n = s.n();
            let (theta, r) = z.split_at(n);
            let tb = solve_image_angle(s, theta, r, newton)?;
            let (s_tt, s_rt, s_rr) = s.second_derivs(&tb, r);
            // dtheta = (I - S_rt) dtb - S_rr dr  =>  dtb = M1^{-1}(dtheta + S_rr dr)
            let m1 = DMatrix::identity(n, n) - &s_rt;
            let m1_inv = m1
                .lu()
                .try_inverse()
                .ok_or(MapError::Singular("implicit Jacobian solve".into()))?;
            // drbar = -S_tt dtb + (I - S_rt^T) dr
            let top_left = m1_inv.clone();
            let top_right = &m1_inv * &s_rr;
            let bottom_left = -&s_tt * &m1_inv;
            let bottom_right =
                (DMatrix::identity(n, n) - s_rt.transpose()) - &s_tt * &m1_inv * &s_rr;
            let mut jac = DMatrix::zeros(2 * n, 2 * n);
            jac.view_mut((0, 0), (n, n)).copy_from(&top_left);
            jac.view_mut((0, n), (n, n)).copy_from(&top_right);
            jac.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
            jac.view_mut((n, n), (n, n)).copy_from(&bottom_right);
            Ok(jac)
        }
        MapDefinition::LinearSymplectic { mat, .. } => Ok(mat.clone()),
        MapDefinition::GridPermutation(g) => {
            let _ = g.apply(z)?;
            Ok(DMatrix::identity(z.len(), z.len()))
        }
        MapDefinition::Iterate { inner, k } => {
            let mut jac = DMatrix::identity(z.len(), z.len());
            let mut cur = z.to_vec();
            let mask = inner.periodic_mask();
            for _ in 0..*k {
                jac = jacobian_coords(inner, &cur)? * jac;
                cur = evaluate_coords(inner, &cur)?;
                wrap_coords(&mut cur, &mask);
            }
            Ok(jac)
        }
        MapDefinition::Conjugate { inner, chart } => {
            let mut w = chart.apply_inverse(z)?;
            wrap_coords(&mut w, &inner.periodic_mask());
            let ji = jacobian_coords(inner, &w)?;
            let a_inv = chart
                .lin
                .clone()
                .lu()
                .try_inverse()
                .ok_or(MapError::Singular("chart inverse".into()))?;
            Ok(&chart.lin * ji * a_inv)
        }
        MapDefinition::Composed { maps } => {
            let mut jac = DMatrix::identity(z.len(), z.len());
            let mut cur = z.to_vec();
            for m in maps {
                jac = jacobian_coords(m, &cur)? * jac;
                cur = evaluate_coords(m, &cur)?;
                wrap_coords(&mut cur, &m.periodic_mask());
            }
            Ok(jac)
        }
    }
}

#[derive(Clone, Debug)]
pub struct SymplecticityReport {
    /// Sup over tested points of `max |J^T Omega J - Omega|`.
    pub max_defect: f64,
    pub points_tested: usize,
    /// Points whose defect exceeded the tolerance (divergent evaluations
    /// are recorded with infinite defect).
    pub failures: Vec<(PhasePoint, f64)>,
}

/// Defect of a single Jacobian against the standard form.
pub fn symplectic_defect(jac: &DMatrix<f64>) -> f64 {
    let n = jac.nrows() / 2;
    let j = standard_form(n);
    (jac.transpose() * &j * jac - &j).amax()
}

pub fn check_symplectic(
    map: &MapDefinition,
    sample: &[PhasePoint],
    tol: f64,
    scheme: JacobianScheme,
) -> SymplecticityReport {
    let mut max_defect: f64 = 0.0;
    let mut failures = Vec::new();
    for z in sample {
        let defect = match jacobian(map, z, scheme) {
            Ok(jac) => symplectic_defect(&jac),
            Err(_) => f64::INFINITY,
        };
        max_defect = max_defect.max(defect);
        if defect > tol {
            failures.push((z.clone(), defect));
        }
    }
    SymplecticityReport {
        max_defect,
        points_tested: sample.len(),
        failures,
    }
}

/// Generic symplecticity check for closures (used by the renormalization
/// module whose local maps are not zoo members). Finite differences only.
pub fn symplectic_defect_fd<F>(f: F, z: &[f64], h: f64) -> Result<f64, MapError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, MapError>,
{
    let dim = z.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[j] += h;
        zm[j] -= h;
        let fp = f(&zp)?;
        let fm = f(&zm)?;
        for i in 0..dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(symplectic_defect(&jac))
}

pub fn iterate_orbit(
    map: &MapDefinition,
    z: &PhasePoint,
    k: usize,
) -> Result<Vec<PhasePoint>, MapError> {
    let mut orbit = Vec::with_capacity(k + 1);
    orbit.push(z.clone());
    let mut cur = z.clone();
    for step in 0..k {
        cur = evaluate(map, &cur).map_err(|e| match e {
            MapError::DomainViolation(_) | MapError::ImplicitSolveDivergence { .. } => {
                MapError::OrbitEscape { step }
            }
            other => other,
        })?;
        if !cur.coords.iter().all(|x| x.is_finite()) {
            return Err(MapError::OrbitEscape { step });
        }
        orbit.push(cur.clone());
    }
    Ok(orbit)
}

/// Seeded uniform sample of points for a map's natural domain box.
pub fn sample_points(
    map: &MapDefinition,
    count: usize,
    lo: &[f64],
    hi: &[f64],
    seed: u64,
) -> Vec<PhasePoint> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let chart = map.chart();
    (0..count)
        .map(|_| {
            let coords: Vec<f64> = lo
                .iter()
                .zip(hi)
                .map(|(a, b)| rng.gen_range(*a..*b))
                .collect();
            let mut p = PhasePoint { coords, chart };
            p.reduce();
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tp(coords: Vec<f64>) -> PhasePoint {
        PhasePoint::torus_annulus(coords)
    }

    #[test]
    fn standard_map_integrable_shear() {
        // a = 0 is the integrable shear
        let m = MapDefinition::StandardMap { a: 0.0 };
        let img = evaluate(&m, &tp(vec![0.3, 0.5])).unwrap();
        assert_abs_diff_eq!(img.coords[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(img.coords[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn twist_pure_rotation_mod_1() {
        let m = MapDefinition::IntegrableTwist {
            alpha: vec![0.25],
            q: Poly::zero(1),
        };
        let img = evaluate(&m, &tp(vec![0.9, 0.7])).unwrap();
        assert_abs_diff_eq!(img.coords[0], 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(img.coords[1], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn generating_function_shear_by_hand() {
        // S = alpha r + r^2/2 with alpha = 0.1:
        // theta = tb - (alpha + r), rbar = r. At (0, 0.2) the image is (0.3, 0.2).
        let q = Poly::from_terms(1, &[(&[2], 0.5)]);
        let s = GeneratingFunction::twist(vec![0.1], q).unwrap();
        let m = MapDefinition::generating(s);
        let img = evaluate(&m, &tp(vec![0.0, 0.2])).unwrap();
        assert_abs_diff_eq!(img.coords[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(img.coords[1], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn standard_map_jacobian_formula() {
        let a = 1.0;
        let m = MapDefinition::StandardMap { a };
        let z = tp(vec![0.37, 0.11]);
        let jac = jacobian(&m, &z, JacobianScheme::Analytic).unwrap();
        let c = a * (TWO_PI * 0.37).cos();
        assert_abs_diff_eq!(jac[(0, 0)], 1.0 + c, epsilon = 1e-15);
        assert_abs_diff_eq!(jac[(0, 1)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jac[(1, 0)], c, epsilon = 1e-15);
        assert_abs_diff_eq!(jac[(1, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn central_difference_agrees_with_analytic() {
        let m = MapDefinition::StandardMap { a: 1.0 };
        let pts = sample_points(&m, 20, &[0.0, 0.0], &[1.0, 1.0], 42);
        for z in pts {
            let ja = jacobian(&m, &z, JacobianScheme::Analytic).unwrap();
            let jf = jacobian(&m, &z, JacobianScheme::CentralDifference { h: 1e-5 }).unwrap();
            assert!((ja - jf).amax() < 1e-6);
        }
    }

    #[test]
    fn linear_symplectic_constructor_rejects() {
        let bad = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(MapDefinition::linear_symplectic(bad, false).is_err());
        let good = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        assert!(MapDefinition::linear_symplectic(good, false).is_ok());
    }

    #[test]
    fn iterate_matches_repeated_evaluate() {
        let m = MapDefinition::StandardMap { a: 1.3 };
        let it2 = MapDefinition::Iterate {
            inner: Box::new(m.clone()),
            k: 2,
        };
        let z = tp(vec![0.21, 0.43]);
        let once = evaluate(&m, &evaluate(&m, &z).unwrap()).unwrap();
        let twice = evaluate(&it2, &z).unwrap();
        assert_eq!(once.coords, twice.coords);
    }

    #[test]
    fn conjugate_matches_three_step_composition() {
        let inner = MapDefinition::HenonLike {
            v_hat: Poly::from_terms(1, &[(&[4], 0.25)]),
        };
        let chart = AffineChart::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]),
            vec![0.1, -0.2],
        )
        .unwrap();
        let conj = MapDefinition::Conjugate {
            inner: Box::new(inner.clone()),
            chart: chart.clone(),
        };
        let z = PhasePoint::euclidean(vec![0.3, 0.4]);
        let via_map = evaluate(&conj, &z).unwrap();
        let w = chart.apply_inverse(&z.coords).unwrap();
        let fw = evaluate(&inner, &PhasePoint::euclidean(w)).unwrap();
        let direct = chart.apply(&fw.coords);
        for i in 0..2 {
            assert_abs_diff_eq!(via_map.coords[i], direct[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn orbit_examples() {
        // period 2 rotation
        let m = MapDefinition::IntegrableTwist {
            alpha: vec![0.5],
            q: Poly::zero(1),
        };
        let orbit = iterate_orbit(&m, &tp(vec![0.0, 0.0]), 2).unwrap();
        let th: Vec<f64> = orbit.iter().map(|p| p.coords[0]).collect();
        assert_eq!(th, vec![0.0, 0.5, 0.0]);

        // a = 0 standard map from (0, 0.25)
        let sm = MapDefinition::StandardMap { a: 0.0 };
        let orbit = iterate_orbit(&sm, &tp(vec![0.0, 0.25]), 4).unwrap();
        let xs: Vec<f64> = orbit.iter().map(|p| p.coords[0]).collect();
        for (x, want) in xs.iter().zip([0.0, 0.25, 0.5, 0.75, 0.0]) {
            assert_abs_diff_eq!(*x, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn zoo_symplecticity_analytic() {
        let zoo: Vec<MapDefinition> = vec![
            MapDefinition::StandardMap { a: 3.0 },
            MapDefinition::HenonLike {
                v_hat: Poly::from_terms(1, &[(&[4], 0.25)]),
            },
            MapDefinition::IntegrableTwist {
                alpha: vec![0.3],
                q: Poly::from_terms(1, &[(&[2], 0.5), (&[3], 0.1)]),
            },
        ];
        for m in zoo {
            let chart_box = match m.chart() {
                Chart::TorusAnnulus => ([0.0, -0.5], [1.0, 0.5]),
                Chart::Euclidean => ([-0.8, -0.8], [0.8, 0.8]),
            };
            let pts = sample_points(&m, 100, &chart_box.0, &chart_box.1, 7);
            let rep = check_symplectic(&m, &pts, 1e-12, JacobianScheme::Analytic);
            assert!(
                rep.max_defect < 1e-12,
                "{m:?} defect {}",
                rep.max_defect
            );
            assert!(rep.failures.is_empty());
        }
    }

    #[test]
    fn elliptic_normal_form_symplectic_and_fd_consistent() {
        let omega = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -0.7]);
        let m = MapDefinition::EllipticNormalForm {
            alpha_hat: vec![0.21, 0.34],
            omega,
            remainder: None,
        };
        let pts = sample_points(&m, 50, &[-0.7; 4], &[0.7; 4], 5);
        let rep = check_symplectic(&m, &pts, 1e-11, JacobianScheme::Analytic);
        assert!(rep.max_defect < 1e-11, "defect {}", rep.max_defect);
        for z in &pts[..10] {
            let ja = jacobian(&m, z, JacobianScheme::Analytic).unwrap();
            let jf = jacobian(&m, z, JacobianScheme::CentralDifference { h: 1e-6 }).unwrap();
            assert!((ja - jf).amax() < 1e-7);
        }
    }

    #[test]
    fn generating_function_map_symplectic() {
        use crate::normal_form::gf::FourierMode;
        let q = Poly::from_terms(1, &[(&[2], 0.5)]);
        let mut s = GeneratingFunction::twist(vec![0.31], q).unwrap();
        s.push_mode(FourierMode {
            m: vec![1],
            cos_coeff: Poly::from_terms(1, &[(&[2], 0.02), (&[3], 0.01)]),
            sin_coeff: Poly::from_terms(1, &[(&[2], -0.015)]),
        })
        .unwrap();
        let m = MapDefinition::generating(s);
        let pts = sample_points(&m, 60, &[0.0, -0.4], &[1.0, 0.4], 11);
        let rep = check_symplectic(&m, &pts, 1e-10, JacobianScheme::Analytic);
        assert!(rep.max_defect < 1e-10, "defect {}", rep.max_defect);
    }

    #[test]
    fn torus_reduction_idempotent_through_maps() {
        let m = MapDefinition::StandardMap { a: 2.0 };
        let img = evaluate(&m, &tp(vec![0.9999999, 0.9999999])).unwrap();
        for c in &img.coords {
            assert!((0.0..1.0).contains(c));
        }
    }
}
