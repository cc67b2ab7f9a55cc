//! Generating functions `S(tb, r) = alpha.r + Q(r) + s(tb, r)` for exact
//! symplectic maps, with the angle-dependent remainder stored as truncated
//! Fourier data and an optional radial cutoff.
//!
//! The implicit relations are the `sd0` convention used throughout:
//! `theta = tb - dS/dr(tb, r)` and `rbar = r - dS/dtb(tb, r)`, where `tb`
//! is the image angle. All frequencies live on the unit-circumference
//! torus, so a mode `m` contributes `cos(2 pi m.tb)` / `sin(2 pi m.tb)`.

use nalgebra::DMatrix;

use crate::poly::Poly;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// One Fourier mode of the remainder. The radial coefficients are
/// polynomials in `r`; the angular factor is `cos(2 pi m.tb)` resp.
/// `sin(2 pi m.tb)`. Canonical modes have their first nonzero entry
/// positive (the sign is absorbed by the sin coefficient).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMode {
    pub m: Vec<i64>,
    pub cos_coeff: Poly,
    pub sin_coeff: Poly,
}

impl FourierMode {
    pub fn is_zero_mode(&self) -> bool {
        self.m.iter().all(|&x| x == 0)
    }
}

/// Quintic bump profile: `kappa = 1` on `|u| <= 1`, `0` on `|u| >= 2`,
/// and the unique degree-5 interpolant with vanishing first and second
/// derivatives at both ends in between. `C^2` everywhere.
pub fn bump_kappa(u: f64) -> f64 {
    let u = u.abs();
    if u <= 1.0 {
        1.0
    } else if u >= 2.0 {
        0.0
    } else {
        let t = u - 1.0;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

pub fn bump_kappa_d1(u: f64) -> f64 {
    let s = if u < 0.0 { -1.0 } else { 1.0 };
    let u = u.abs();
    if !(1.0..2.0).contains(&u) {
        0.0
    } else {
        let t = u - 1.0;
        s * (-30.0) * t * t * (t - 1.0) * (t - 1.0)
    }
}

pub fn bump_kappa_d2(u: f64) -> f64 {
    let u = u.abs();
    if !(1.0..2.0).contains(&u) {
        0.0
    } else {
        let t = u - 1.0;
        -60.0 * t * (2.0 * t - 1.0) * (t - 1.0)
    }
}

/// Radial cutoff applied to the remainder: the factor `1 - kappa(|r|/delta)`
/// vanishes identically on `|r| <= delta` and equals 1 on `|r| >= 2 delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialCutoff {
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratingFunction {
    n: usize,
    pub alpha: Vec<f64>,
    /// Polynomial part; `grad Q(0) = 0` (no linear terms).
    pub q: Poly,
    modes: Vec<FourierMode>,
    /// Normalization degree `D` this function is certified through.
    pub degree: u32,
    pub cutoff: Option<RadialCutoff>,
}

#[derive(Debug, thiserror::Error)]
pub enum GfError {
    #[error("polynomial part has linear terms; grad Q(0) must vanish")]
    LinearTermInQ,
    #[error("zero mode present in the remainder; it belongs to Q")]
    ZeroModeInRemainder,
    #[error("non-finite coefficient in generating function data")]
    NonFiniteCoefficient,
}

impl GeneratingFunction {
    /// A pure twist `S = alpha.r + Q(r)`.
    pub fn twist(alpha: Vec<f64>, q: Poly) -> Result<Self, GfError> {
        let n = alpha.len();
        assert_eq!(q.nvars(), n);
        let gf = GeneratingFunction {
            n,
            alpha,
            q,
            modes: Vec::new(),
            degree: 0,
            cutoff: None,
        };
        gf.validate()?;
        Ok(gf)
    }

    pub fn with_modes(
        alpha: Vec<f64>,
        q: Poly,
        modes: Vec<FourierMode>,
        degree: u32,
    ) -> Result<Self, GfError> {
        let n = alpha.len();
        assert_eq!(q.nvars(), n);
        let mut gf = GeneratingFunction {
            n,
            alpha,
            q,
            modes: Vec::new(),
            degree,
            cutoff: None,
        };
        for m in modes {
            gf.push_mode(m)?;
        }
        gf.validate()?;
        Ok(gf)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn validate(&self) -> Result<(), GfError> {
        for i in 0..self.n {
            let mut lin = vec![0u32; self.n];
            lin[i] = 1;
            if self.q.coeff(&lin) != 0.0 {
                return Err(GfError::LinearTermInQ);
            }
        }
        for m in &self.modes {
            if m.is_zero_mode() {
                return Err(GfError::ZeroModeInRemainder);
            }
            for (_, c) in m.cos_coeff.terms().chain(m.sin_coeff.terms()) {
                if !c.is_finite() {
                    return Err(GfError::NonFiniteCoefficient);
                }
            }
        }
        if !self.alpha.iter().all(|a| a.is_finite()) {
            return Err(GfError::NonFiniteCoefficient);
        }
        Ok(())
    }

    /// Add a mode, merging with an existing one carrying the same `m` and
    /// canonicalizing the sign of `m` (first nonzero entry positive; a flip
    /// negates the sin coefficient since cos is even and sin odd).
    pub fn push_mode(&mut self, mode: FourierMode) -> Result<(), GfError> {
        if mode.is_zero_mode() {
            return Err(GfError::ZeroModeInRemainder);
        }
        let mut m = mode.m.clone();
        let mut cos_c = mode.cos_coeff;
        let mut sin_c = mode.sin_coeff;
        if let Some(first) = m.iter().find(|&&x| x != 0) {
            if *first < 0 {
                for x in &mut m {
                    *x = -*x;
                }
                sin_c = sin_c.scale(-1.0);
            }
        }
        if let Some(existing) = self.modes.iter_mut().find(|e| e.m == m) {
            existing.cos_coeff = existing.cos_coeff.add(&cos_c);
            existing.sin_coeff = existing.sin_coeff.add(&sin_c);
        } else {
            self.modes.push(FourierMode {
                m,
                cos_coeff: cos_c,
                sin_coeff: sin_c,
            });
            self.modes.sort_by(|a, b| a.m.cmp(&b.m));
        }
        self.modes
            .retain(|e| !(e.cos_coeff.is_zero() && e.sin_coeff.is_zero()));
        Ok(())
    }

    fn cutoff_factor(&self, r: &[f64]) -> f64 {
        match &self.cutoff {
            None => 1.0,
            Some(c) => {
                let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                1.0 - bump_kappa(norm / c.delta)
            }
        }
    }

    /// Gradient and Hessian of the cutoff factor `w(r) = 1 - kappa(|r|/delta)`.
    fn cutoff_derivs(&self, r: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
        let n = self.n;
        match &self.cutoff {
            None => (1.0, vec![0.0; n], DMatrix::zeros(n, n)),
            Some(c) => {
                let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                let u = norm / c.delta;
                let w = 1.0 - bump_kappa(u);
                if !(1.0..2.0).contains(&u) || norm == 0.0 {
                    // flat regions: all derivatives vanish
                    return (w, vec![0.0; n], DMatrix::zeros(n, n));
                }
                let k1 = bump_kappa_d1(u);
                let k2 = bump_kappa_d2(u);
                let grad_u: Vec<f64> = r.iter().map(|x| x / (c.delta * norm)).collect();
                let mut grad_w = vec![0.0; n];
                for i in 0..n {
                    grad_w[i] = -k1 * grad_u[i];
                }
                let mut hess = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let hess_u = (if i == j { 1.0 / norm } else { 0.0 }
                            - r[i] * r[j] / (norm * norm * norm))
                            / c.delta;
                        hess[(i, j)] = -k2 * grad_u[i] * grad_u[j] - k1 * hess_u;
                    }
                }
                (w, grad_w, hess)
            }
        }
    }

    /// Remainder `s(tb, r)` without the cutoff factor.
    fn raw_remainder(&self, tb: &[f64], r: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|mode| {
                let phase = TWO_PI * dot_i64(&mode.m, tb);
                mode.cos_coeff.eval(r) * phase.cos() + mode.sin_coeff.eval(r) * phase.sin()
            })
            .sum()
    }

    pub fn remainder(&self, tb: &[f64], r: &[f64]) -> f64 {
        self.cutoff_factor(r) * self.raw_remainder(tb, r)
    }

    pub fn value(&self, tb: &[f64], r: &[f64]) -> f64 {
        let lin: f64 = self.alpha.iter().zip(r).map(|(a, x)| a * x).sum();
        lin + self.q.eval(r) + self.remainder(tb, r)
    }

    /// `dS/dtb` as a vector.
    pub fn d_theta(&self, tb: &[f64], r: &[f64]) -> Vec<f64> {
        let w = self.cutoff_factor(r);
        let mut out = vec![0.0; self.n];
        for mode in &self.modes {
            let phase = TWO_PI * dot_i64(&mode.m, tb);
            let c = mode.cos_coeff.eval(r);
            let s = mode.sin_coeff.eval(r);
            let d = -c * phase.sin() + s * phase.cos();
            for i in 0..self.n {
                out[i] += w * TWO_PI * mode.m[i] as f64 * d;
            }
        }
        out
    }

    /// `dS/dr` as a vector.
    pub fn d_r(&self, tb: &[f64], r: &[f64]) -> Vec<f64> {
        let (w, grad_w, _) = self.cutoff_derivs(r);
        let mut out: Vec<f64> = (0..self.n)
            .map(|i| self.alpha[i] + self.q.partial(i).eval(r))
            .collect();
        let s0 = self.raw_remainder(tb, r);
        for i in 0..self.n {
            out[i] += grad_w[i] * s0;
        }
        for mode in &self.modes {
            let phase = TWO_PI * dot_i64(&mode.m, tb);
            let (cp, sp) = (phase.cos(), phase.sin());
            for i in 0..self.n {
                out[i] += w
                    * (mode.cos_coeff.partial(i).eval(r) * cp
                        + mode.sin_coeff.partial(i).eval(r) * sp);
            }
        }
        out
    }

    /// Second derivatives needed by the implicit Jacobian:
    /// `(S_tbtb, S_rtb, S_rr)` where `S_rtb[i][j] = d2 S / dr_i dtb_j`.
    pub fn second_derivs(
        &self,
        tb: &[f64],
        r: &[f64],
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.n;
        let (w, grad_w, hess_w) = self.cutoff_derivs(r);
        let mut s_tt = DMatrix::zeros(n, n);
        let mut s_rt = DMatrix::zeros(n, n);
        let mut s_rr = DMatrix::zeros(n, n);

        // Q part
        for i in 0..n {
            let qi = self.q.partial(i);
            for j in 0..n {
                s_rr[(i, j)] += qi.partial(j).eval(r);
            }
        }

        let s0 = self.raw_remainder(tb, r);
        let mut grad_r_s0 = vec![0.0; n];
        for mode in &self.modes {
            let phase = TWO_PI * dot_i64(&mode.m, tb);
            let (cp, sp) = (phase.cos(), phase.sin());
            for i in 0..n {
                grad_r_s0[i] +=
                    mode.cos_coeff.partial(i).eval(r) * cp + mode.sin_coeff.partial(i).eval(r) * sp;
            }
        }
        let mut grad_t_s0 = vec![0.0; n];
        for mode in &self.modes {
            let phase = TWO_PI * dot_i64(&mode.m, tb);
            let d = -mode.cos_coeff.eval(r) * phase.sin() + mode.sin_coeff.eval(r) * phase.cos();
            for j in 0..n {
                grad_t_s0[j] += TWO_PI * mode.m[j] as f64 * d;
            }
        }

        for mode in &self.modes {
            let phase = TWO_PI * dot_i64(&mode.m, tb);
            let (cp, sp) = (phase.cos(), phase.sin());
            let c = mode.cos_coeff.eval(r);
            let s = mode.sin_coeff.eval(r);
            for i in 0..n {
                let mi = TWO_PI * mode.m[i] as f64;
                for j in 0..n {
                    let mj = TWO_PI * mode.m[j] as f64;
                    // angle-angle: second angular derivative
                    s_tt[(i, j)] += w * mi * mj * (-c * cp - s * sp);
                    // r-angle: radial derivative of the angular derivative
                    let dci = mode.cos_coeff.partial(i).eval(r);
                    let dsi = mode.sin_coeff.partial(i).eval(r);
                    s_rt[(i, j)] += w * mj * (-dci * sp + dsi * cp);
                    // r-r
                    let d2c = mode.cos_coeff.partial(i).partial(j).eval(r);
                    let d2s = mode.sin_coeff.partial(i).partial(j).eval(r);
                    s_rr[(i, j)] += w * (d2c * cp + d2s * sp);
                }
            }
        }
        // cutoff cross terms
        for i in 0..n {
            for j in 0..n {
                s_rt[(i, j)] += grad_w[i] * grad_t_s0[j];
                s_rr[(i, j)] += grad_w[i] * grad_r_s0[j]
                    + grad_r_s0[i] * grad_w[j]
                    + hess_w[(i, j)] * s0;
            }
        }
        (s_tt, s_rt, s_rr)
    }

    /// Sup over a `2^k`-style angle grid of the angle-dependent remainder
    /// magnitude at radius vector `r` (cutoff included).
    pub fn remainder_sup_at(&self, r: &[f64], grid: usize) -> f64 {
        let mut sup: f64 = 0.0;
        let n = self.n;
        let mut idx = vec![0usize; n];
        loop {
            let tb: Vec<f64> = idx.iter().map(|&i| i as f64 / grid as f64).collect();
            sup = sup.max(self.remainder(&tb, r).abs());
            // advance odometer
            let mut k = 0;
            loop {
                if k == n {
                    return sup;
                }
                idx[k] += 1;
                if idx[k] < grid {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

pub fn dot_i64(m: &[i64], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(a, b)| *a as f64 * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_profile_shape() {
        assert_eq!(bump_kappa(0.5), 1.0);
        assert_eq!(bump_kappa(1.0), 1.0);
        assert_eq!(bump_kappa(2.0), 0.0);
        assert_eq!(bump_kappa(3.0), 0.0);
        assert!((bump_kappa(1.5) - 0.5).abs() < 1e-12);
        // C^2 join: derivatives vanish at both ends of the ramp
        for u in [1.0, 2.0] {
            assert_eq!(bump_kappa_d1(u), 0.0);
            assert_eq!(bump_kappa_d2(u), 0.0);
        }
        // finite-difference agreement in the ramp
        let h = 1e-6;
        for &u in &[1.2, 1.5, 1.9] {
            let fd = (bump_kappa(u + h) - bump_kappa(u - h)) / (2.0 * h);
            assert!((fd - bump_kappa_d1(u)).abs() < 1e-6);
            let fd2 = (bump_kappa_d1(u + h) - bump_kappa_d1(u - h)) / (2.0 * h);
            assert!((fd2 - bump_kappa_d2(u)).abs() < 1e-5);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // S = 0.3 r + r^2/2 + (1 - kappa)(0.01 cos(2 pi tb) r^2 + 0.02 sin(4 pi tb) r^3)
        let q = Poly::from_terms(1, &[(&[2], 0.5)]);
        let mut gf = GeneratingFunction::twist(vec![0.3], q).unwrap();
        gf.push_mode(FourierMode {
            m: vec![1],
            cos_coeff: Poly::from_terms(1, &[(&[2], 0.01)]),
            sin_coeff: Poly::zero(1),
        })
        .unwrap();
        gf.push_mode(FourierMode {
            m: vec![2],
            cos_coeff: Poly::zero(1),
            sin_coeff: Poly::from_terms(1, &[(&[3], 0.02)]),
        })
        .unwrap();
        gf.cutoff = Some(RadialCutoff { delta: 0.05 });

        let h = 1e-6;
        for &(tb, r) in &[(0.13, 0.09), (0.77, 0.3), (0.5, 0.049)] {
            let dt = gf.d_theta(&[tb], &[r])[0];
            let fd_t = (gf.value(&[tb + h], &[r]) - gf.value(&[tb - h], &[r])) / (2.0 * h);
            assert!((dt - fd_t).abs() < 1e-6, "d_theta at ({tb},{r})");
            let dr = gf.d_r(&[tb], &[r])[0];
            let fd_r = (gf.value(&[tb], &[r + h]) - gf.value(&[tb], &[r - h])) / (2.0 * h);
            assert!((dr - fd_r).abs() < 1e-6, "d_r at ({tb},{r})");

            let (s_tt, s_rt, s_rr) = gf.second_derivs(&[tb], &[r]);
            let fd_tt =
                (gf.d_theta(&[tb + h], &[r])[0] - gf.d_theta(&[tb - h], &[r])[0]) / (2.0 * h);
            let fd_rt = (gf.d_theta(&[tb], &[r + h])[0] - gf.d_theta(&[tb], &[r - h])[0])
                / (2.0 * h);
            let fd_rr = (gf.d_r(&[tb], &[r + h])[0] - gf.d_r(&[tb], &[r - h])[0]) / (2.0 * h);
            assert!((s_tt[(0, 0)] - fd_tt).abs() < 1e-5);
            assert!((s_rt[(0, 0)] - fd_rt).abs() < 1e-5);
            assert!((s_rr[(0, 0)] - fd_rr).abs() < 1e-5);
        }
    }

    #[test]
    fn cutoff_kills_remainder_inside() {
        let q = Poly::from_terms(1, &[(&[2], 0.5)]);
        let mut gf = GeneratingFunction::twist(vec![0.1], q).unwrap();
        gf.push_mode(FourierMode {
            m: vec![1],
            cos_coeff: Poly::from_terms(1, &[(&[2], 1.0)]),
            sin_coeff: Poly::zero(1),
        })
        .unwrap();
        gf.cutoff = Some(RadialCutoff { delta: 0.1 });
        assert_eq!(gf.remainder(&[0.2], &[0.05]), 0.0);
        assert!(gf.remainder(&[0.2], &[0.25]).abs() > 0.0);
    }

    #[test]
    fn mode_canonicalization_merges_negatives() {
        let q = Poly::zero(1);
        let mut gf = GeneratingFunction::twist(vec![0.0], q).unwrap();
        gf.push_mode(FourierMode {
            m: vec![-1],
            cos_coeff: Poly::constant(1, 1.0),
            sin_coeff: Poly::constant(1, 0.5),
        })
        .unwrap();
        assert_eq!(gf.modes().len(), 1);
        assert_eq!(gf.modes()[0].m, vec![1]);
        // cos(-x) = cos(x), sin flips
        assert_eq!(gf.modes()[0].cos_coeff.coeff(&[0]), 1.0);
        assert_eq!(gf.modes()[0].sin_coeff.coeff(&[0]), -0.5);
    }
}
