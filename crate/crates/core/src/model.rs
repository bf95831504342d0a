//! The reduced spiderweb equations.
//!
//! Bodies sit at radius `r_i` on the spokes `θ_k = 2πk/ℓ`. By symmetry only
//! the body at `(r_i, 0)` of each ring needs an equation; its residual is
//!
//! ```text
//! f_i(r) = λ r_i − F_i(r)/m_i
//! ```
//!
//! where `F_i/m_i` is the radial acceleration from the central mass, the
//! other `ℓ−1` bodies of its own ring, and all bodies of the other rings. A
//! zero of `f` is a spiderweb central configuration for that λ.
//!
//! All formulas are generic over [`Scalar`]: the solver runs them in `f64`
//! and the certifier in [`crate::Interval`]. Squared distances are always
//! formed as `(r_i − r_j)² + 2 r_i r_j (1 − cos θ_k)`, a sum of nonnegative
//! terms, so an interval enclosure of a distance is bounded away from zero
//! whenever the radii are.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::params::SpiderwebParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("need at least 2 spokes per ring, got {0}")]
    TooFewSpokes(usize),
    #[error("expected {expected} radii, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("radii are not certainly strictly increasing and positive at index {0}")]
    NotInCone(usize),
    #[error("collision singularity: zero distance at x = {0}")]
    Collision(f64),
    #[error("ring index {0} out of range")]
    BadIndex(usize),
}

/// Trigonometric tables of the `ℓ` spoke angles, shared by every formula.
#[derive(Debug, Clone)]
pub struct Spokes<T> {
    ell: usize,
    cos: Vec<T>,
    /// `1 − cos θ_k`, computed as `2 sin²(πk/ℓ)` to keep relative accuracy.
    vers: Vec<T>,
    cos2: Vec<T>,
    cos3: Vec<T>,
    zeta: T,
}

impl<T: Scalar> Spokes<T> {
    pub fn new(ell: usize) -> Result<Self, ModelError> {
        if ell < 2 {
            return Err(ModelError::TooFewSpokes(ell));
        }
        let l = ell as i64;
        let two = T::from_int(2);
        let cos: Vec<T> = (0..l).map(|k| T::cos_turn(k, l)).collect();
        let vers: Vec<T> = (0..l)
            .map(|k| two * T::cos_turn(2 * l - 4 * k, 8 * l).sqr())
            .collect();
        let cos2 = (0..l).map(|k| T::cos_turn(2 * k, l)).collect();
        let cos3 = (0..l).map(|k| T::cos_turn(3 * k, l)).collect();
        let zeta = vers[1..]
            .iter()
            .fold(T::zero(), |acc, &v| acc + T::one() / v.sqrt());
        Ok(Spokes {
            ell,
            cos,
            vers,
            cos2,
            cos3,
            zeta,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `ζ_ℓ = Σ_{k=1}^{ℓ−1} (1 − cos θ_k)^{−1/2}`.
    pub fn zeta(&self) -> T {
        self.zeta
    }

    pub fn cos(&self, k: usize) -> T {
        self.cos[k]
    }

    pub fn versine(&self, k: usize) -> T {
        self.vers[k]
    }

    /// `d_k(x)² = 1 + x² − 2x cos θ_k`.
    fn unit_dist_sq(&self, x: T, k: usize) -> T {
        (T::one() - x).sqr() + T::from_int(2) * x * self.vers[k]
    }

    fn unit_dists(&self, x: T) -> Result<impl Iterator<Item = (usize, T)> + '_, ModelError> {
        let d2: Vec<T> = (0..self.ell).map(|k| self.unit_dist_sq(x, k)).collect();
        if d2.iter().any(|d| !d.certainly_positive()) {
            return Err(ModelError::Collision(x.mid()));
        }
        Ok(d2.into_iter().enumerate())
    }
}

/// `ζ_ℓ` for the given spoke count.
pub fn zeta<T: Scalar>(ell: usize) -> Result<T, ModelError> {
    Ok(Spokes::<T>::new(ell)?.zeta())
}

/// `φ_ν(x) = Σ_k d_k(x)^{−ν}` for integer `ν ≥ 1`.
pub fn phi<T: Scalar>(nu: u32, x: T, spokes: &Spokes<T>) -> Result<T, ModelError> {
    Ok(spokes.unit_dists(x)?.fold(T::zero(), |acc, (_, d2)| {
        let d = d2.sqrt();
        acc + T::one() / d.powi(nu)
    }))
}

/// `φ_1'(x) = −Σ_k (x − cos θ_k) / d_k³`.
pub fn phi_d1<T: Scalar>(x: T, spokes: &Spokes<T>) -> Result<T, ModelError> {
    Ok(-spokes.unit_dists(x)?.fold(T::zero(), |acc, (k, d2)| {
        acc + (x - spokes.cos[k]) / (d2 * d2.sqrt())
    }))
}

/// `φ_1''(x) = −Σ_k (d_k² − 3(x − cos θ_k)²) / d_k⁵`.
pub fn phi_d2<T: Scalar>(x: T, spokes: &Spokes<T>) -> Result<T, ModelError> {
    let three = T::from_int(3);
    Ok(-spokes.unit_dists(x)?.fold(T::zero(), |acc, (k, d2)| {
        let u = x - spokes.cos[k];
        acc + (d2 - three * u.sqr()) / (d2.sqr() * d2.sqrt())
    }))
}

/// Row-dominance kernel
/// `h_ℓ(x) = Σ_{k=1}^{ℓ−1} (1−c_k)(2x² + x(3 − c_k) − 1 − 3c_k) / d_k(x)⁵`.
pub fn h_ell<T: Scalar>(x: T, spokes: &Spokes<T>) -> T {
    let (two, three) = (T::from_int(2), T::from_int(3));
    (1..spokes.ell).fold(T::zero(), |acc, k| {
        let c = spokes.cos[k];
        let d2 = spokes.unit_dist_sq(x, k);
        let poly = two * x.sqr() + x * (three - c) - T::one() - three * c;
        acc + spokes.vers[k] * poly / (d2.sqr() * d2.sqrt())
    })
}

/// Derivative of [`h_ell`] in `x`.
pub fn h_ell_d1<T: Scalar>(x: T, spokes: &Spokes<T>) -> T {
    let (two, three, four, five) = (
        T::from_int(2),
        T::from_int(3),
        T::from_int(4),
        T::from_int(5),
    );
    (1..spokes.ell).fold(T::zero(), |acc, k| {
        let c = spokes.cos[k];
        let d2 = spokes.unit_dist_sq(x, k);
        let poly = two * x.sqr() + x * (three - c) - T::one() - three * c;
        let dpoly = four * x + three - c;
        let num = dpoly * d2 - five * poly * (x - c);
        acc + spokes.vers[k] * num / (d2.powi(3) * d2.sqrt())
    })
}

/// Closed forms of `h_ℓ` for `ℓ ∈ {2, 3, 4}`.
pub fn h_ell_closed_form(x: f64, ell: usize) -> Option<f64> {
    match ell {
        2 => Some(4.0 / (1.0 + x).powi(3)),
        3 => Some(3.0 * (0.5 + 3.5 * x + 2.0 * x * x) / (1.0 + x + x * x).powf(2.5)),
        4 => Some(
            4.0 / (1.0 + x).powi(3) + 2.0 * (2.0 * x * x + 3.0 * x - 1.0) / (1.0 + x * x).powf(2.5),
        ),
        _ => None,
    }
}

/// Where a force on ring `i` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Center,
    Ring(usize),
}

/// The second-derivative tensor `∂²_{lj} f_i`, stored by its three nonzero
/// patterns: both indices equal to `i`, one of them equal to `i`, or both
/// equal to some `j ≠ i`. Entries with `i, l, j` pairwise distinct vanish.
#[derive(Debug, Clone)]
pub struct Hessian<T> {
    /// `∂²_{ii} f_i`.
    pub own: Vec<T>,
    /// `(i, j) ↦ ∂²_{ij} f_i` for `j ≠ i`.
    pub cross: DMatrix<T>,
    /// `(i, j) ↦ ∂²_{jj} f_i` for `j ≠ i`.
    pub pure: DMatrix<T>,
}

impl<T: Scalar> Hessian<T> {
    pub fn n(&self) -> usize {
        self.own.len()
    }

    /// `∂² f_i / ∂r_l ∂r_j`.
    pub fn get(&self, i: usize, l: usize, j: usize) -> T {
        match (l == i, j == i) {
            (true, true) => self.own[i],
            (true, false) => self.cross[(i, j)],
            (false, true) => self.cross[(i, l)],
            (false, false) if l == j => self.pure[(i, j)],
            _ => T::zero(),
        }
    }

    /// Dense `n × n` slice `(l, j) ↦ ∂²_{lj} f_i`.
    pub fn slice(&self, i: usize) -> DMatrix<T> {
        let n = self.n();
        DMatrix::from_fn(n, n, |l, j| self.get(i, l, j))
    }
}

/// A parameter set lifted into a scalar kind, ready for evaluation.
#[derive(Debug, Clone)]
pub struct System<T> {
    spokes: Spokes<T>,
    m0: T,
    masses: Vec<T>,
    lambda: T,
    sqrt2: T,
}

impl<T: Scalar> System<T> {
    pub fn new(params: &SpiderwebParams) -> Self {
        let spokes = Spokes::new(params.ell()).expect("validated parameters have ell >= 2");
        Self::with_spokes(params, spokes)
    }

    /// Reuses a precomputed table; `spokes.ell()` must match the parameters.
    pub fn with_spokes(params: &SpiderwebParams, spokes: Spokes<T>) -> Self {
        assert_eq!(spokes.ell(), params.ell());
        System {
            spokes,
            m0: T::from_f64(params.m0()),
            masses: params.masses().iter().map(|&m| T::from_f64(m)).collect(),
            lambda: T::from_f64(params.lambda()),
            sqrt2: T::from_int(2).sqrt(),
        }
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn spokes(&self) -> &Spokes<T> {
        &self.spokes
    }

    pub fn check_radii(&self, r: &[T]) -> Result<(), ModelError> {
        if r.len() != self.n() {
            return Err(ModelError::LengthMismatch {
                expected: self.n(),
                got: r.len(),
            });
        }
        if !r[0].certainly_positive() {
            return Err(ModelError::NotInCone(0));
        }
        for i in 1..r.len() {
            if !r[i - 1].certainly_less(r[i]) {
                return Err(ModelError::NotInCone(i));
            }
        }
        Ok(())
    }

    /// Squared distance between the body at `(s, 0)` and body `k` of a ring
    /// of radius `rj`.
    #[inline]
    fn dist_sq(&self, s: T, rj: T, k: usize) -> T {
        (s - rj).sqr() + T::from_int(2) * s * rj * self.spokes.vers[k]
    }

    /// `Σ_k (s − r_j cos θ_k) / |·|³`: outward pull per unit mass of ring `j`
    /// on a body at `(s, 0)`, with opposite sign.
    fn ring_pull(&self, s: T, rj: T) -> T {
        let gap = s - rj;
        let two = T::from_int(2);
        (0..self.spokes.ell).fold(T::zero(), |acc, k| {
            let v = self.spokes.vers[k];
            let d2 = gap.sqr() + two * s * rj * v;
            acc + (gap + rj * v) / (d2 * d2.sqrt())
        })
    }

    /// `ζ_ℓ / 2^{3/2}`.
    fn self_coeff(&self) -> T {
        self.spokes.zeta / (T::from_int(2) * self.sqrt2)
    }

    /// Radial acceleration `F_i/m_i` of the body of ring `i`.
    fn acceleration(&self, r: &[T], i: usize) -> T {
        let ri2 = r[i].sqr();
        let mut a = -(self.masses[i] * self.self_coeff() + self.m0) / ri2;
        for (j, &rj) in r.iter().enumerate() {
            if j != i {
                a = a - self.masses[j] * self.ring_pull(r[i], rj);
            }
        }
        a
    }

    /// The residual map `f(r)`.
    pub fn residual(&self, r: &[T]) -> Result<Vec<T>, ModelError> {
        self.check_radii(r)?;
        Ok((0..self.n())
            .map(|i| self.lambda * r[i] - self.acceleration(r, i))
            .collect())
    }

    /// `λ_i(r) = F_i / (m_i r_i)`.
    pub fn lambda_values(&self, r: &[T]) -> Result<Vec<T>, ModelError> {
        self.check_radii(r)?;
        Ok((0..self.n())
            .map(|i| self.acceleration(r, i) / r[i])
            .collect())
    }

    /// `Λ_i = λ_i − λ_{i+1}`.
    pub fn lambda_gaps(&self, r: &[T]) -> Result<Vec<T>, ModelError> {
        let l = self.lambda_values(r)?;
        Ok(l.windows(2).map(|w| w[0] - w[1]).collect())
    }

    /// `λ` felt by a massless test ring of radius `s` placed among the rings
    /// `r` (which must not include `s`).
    pub fn probe_lambda(&self, s: T, r: &[T]) -> Result<T, ModelError> {
        self.check_radii(r)?;
        if !s.certainly_positive() {
            return Err(ModelError::NotInCone(0));
        }
        let mut a = -self.m0 / s.sqr();
        for (j, &rj) in r.iter().enumerate() {
            if !(s.certainly_less(rj) || rj.certainly_less(s)) {
                return Err(ModelError::Collision((s / rj).mid()));
            }
            a = a - self.masses[j] * self.ring_pull(s, rj);
        }
        Ok(a / s)
    }

    /// `F_ij / m_i` through `φ_1`: the acceleration of ring `i` due to the
    /// given source.
    pub fn force_contribution(&self, r: &[T], i: usize, source: Source) -> Result<T, ModelError> {
        self.check_radii(r)?;
        if i >= self.n() {
            return Err(ModelError::BadIndex(i));
        }
        let ri2 = r[i].sqr();
        Ok(match source {
            Source::Center => -self.m0 / ri2,
            Source::Ring(j) if j >= self.n() => return Err(ModelError::BadIndex(j)),
            Source::Ring(j) if j == i => -self.masses[i] * self.self_coeff() / ri2,
            Source::Ring(j) if j < i => {
                let y = r[j] / r[i];
                let phi1 = phi(1, y, &self.spokes)?;
                let dphi = phi_d1(y, &self.spokes)?;
                -self.masses[j] / ri2 * (phi1 + y * dphi)
            }
            Source::Ring(j) => {
                let x = r[i] / r[j];
                self.masses[j] * x.sqr() / ri2 * phi_d1(x, &self.spokes)?
            }
        })
    }

    /// Jacobian `∂_j f_i` in the trigonometric-sum form.
    pub fn jacobian(&self, r: &[T]) -> Result<DMatrix<T>, ModelError> {
        self.check_radii(r)?;
        let n = self.n();
        let l = self.spokes.ell;
        let (two, three, four, seven, eight) = (
            T::from_int(2),
            T::from_int(3),
            T::from_int(4),
            T::from_int(7),
            T::from_int(8),
        );
        let mut jac = DMatrix::from_element(n, n, T::zero());
        for i in 0..n {
            let ri = r[i];
            let ri3 = ri.powi(3);
            let mut diag =
                self.lambda - (self.masses[i] * self.spokes.zeta / self.sqrt2 + two * self.m0) / ri3;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let rj = r[j];
                let mut s_diag = T::zero();
                let mut s_off = T::zero();
                for k in 0..l {
                    let c = self.spokes.cos[k];
                    let c2 = self.spokes.cos2[k];
                    let d2 = self.dist_sq(ri, rj, k);
                    let d5 = d2.sqr() * d2.sqrt();
                    s_diag = s_diag
                        + (four * ri.sqr() + rj.sqr() - eight * ri * rj * c + three * rj.sqr() * c2)
                            / d5;
                    s_off = s_off
                        + (ri * rj * (seven + c2) - four * (ri.sqr() + rj.sqr()) * c) / d5;
                }
                let half_m = self.masses[j] / two;
                diag = diag - half_m * s_diag;
                jac[(i, j)] = -half_m * s_off;
            }
            jac[(i, i)] = diag;
        }
        Ok(jac)
    }

    /// Jacobian through `φ_1`, `φ_1'`, `φ_1''` in the ratio variables
    /// `x_j = r_i/r_j` (`j > i`) and `y_j = r_j/r_i` (`j < i`). Independent of
    /// [`System::jacobian`]; used to cross-check it.
    pub fn jacobian_phi_form(&self, r: &[T]) -> Result<DMatrix<T>, ModelError> {
        self.check_radii(r)?;
        let n = self.n();
        let (two, four) = (T::from_int(2), T::from_int(4));
        let sp = &self.spokes;
        let mut jac = DMatrix::from_element(n, n, T::zero());
        for i in 0..n {
            let ri3 = r[i].powi(3);
            let mut diag =
                self.lambda - self.masses[i] * sp.zeta / (self.sqrt2 * ri3) - two * self.m0 / ri3;
            for j in 0..n {
                if j < i {
                    let y = r[j] / r[i];
                    let (p, p1, p2) = (phi(1, y, sp)?, phi_d1(y, sp)?, phi_d2(y, sp)?);
                    let mj = self.masses[j] / ri3;
                    diag = diag - mj * (two * p + four * y * p1 + y.sqr() * p2);
                    jac[(i, j)] = mj * (two * p1 + y * p2);
                } else if j > i {
                    let x = r[i] / r[j];
                    let (p1, p2) = (phi_d1(x, sp)?, phi_d2(x, sp)?);
                    let mj = self.masses[j] * x.powi(3) / ri3;
                    diag = diag - mj * p2;
                    jac[(i, j)] = mj * (two * p1 + x * p2);
                }
            }
            jac[(i, i)] = diag;
        }
        Ok(jac)
    }

    /// The second-derivative tensor of `f`.
    pub fn hessian(&self, r: &[T]) -> Result<Hessian<T>, ModelError> {
        self.check_radii(r)?;
        let n = self.n();
        let l = self.spokes.ell;
        let c = |x: i64| T::from_int(x);
        let mut own = vec![T::zero(); n];
        let mut cross = DMatrix::from_element(n, n, T::zero());
        let mut pure = DMatrix::from_element(n, n, T::zero());
        for i in 0..n {
            let ri = r[i];
            let ri4 = ri.powi(4);
            let mut h_own =
                (c(3) * self.masses[i] * self.spokes.zeta / self.sqrt2 + c(6) * self.m0) / ri4;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let rj = r[j];
                let (ri2, rj2, rirj) = (ri.sqr(), rj.sqr(), ri * rj);
                let mut s_own = T::zero();
                let mut s_cross = T::zero();
                let mut s_pure = T::zero();
                for k in 0..l {
                    let (c1, c2, c3) = (self.spokes.cos[k], self.spokes.cos2[k], self.spokes.cos3[k]);
                    let v = self.spokes.vers[k];
                    let d2 = self.dist_sq(ri, rj, k);
                    let d7 = d2.powi(3) * d2.sqrt();
                    let u = (ri - rj) + rj * v;
                    s_own = s_own
                        + u * (c(4) * ri2 - rj2 - c(8) * rirj * c1 + c(5) * rj2 * c2) / d7;
                    s_cross = s_cross
                        + (ri * (c(8) * ri2 + c(23) * rj2) * c1
                            - rj * (c(20) * ri2 + c(2) * rj2 + (c(4) * ri2 + c(6) * rj2) * c2
                                - rirj * c3))
                            / d7;
                    s_pure = s_pure
                        + (rj * (c(8) * rj2 + c(23) * ri2) * c1
                            - ri * (c(20) * rj2 + c(2) * ri2 + (c(4) * rj2 + c(6) * ri2) * c2
                                - rirj * c3))
                            / d7;
                }
                let mj = self.masses[j];
                h_own = h_own + c(3) * mj / c(2) * s_own;
                cross[(i, j)] = -(c(3) * mj / c(4)) * s_cross;
                pure[(i, j)] = -(c(3) * mj / c(4)) * s_pure;
            }
            own[i] = h_own;
            cross[(i, i)] = h_own;
            pure[(i, i)] = h_own;
        }
        Ok(Hessian { own, cross, pure })
    }

    /// Row sums `−∂_i f_i − Σ_{j≠i} ∂_j f_i` through the `h_ℓ` decomposition:
    /// `−λ + m_i ζ/(√2 r_i³) + 2m_0/r_i³ + Σ_{j≠i} m_j x_j³ h_ℓ(x_j)/r_i³`,
    /// with `x_j = r_i / r_j` for every `j`.
    pub fn row_dominance(&self, r: &[T]) -> Result<Vec<T>, ModelError> {
        self.check_radii(r)?;
        let two = T::from_int(2);
        Ok((0..self.n())
            .map(|i| {
                let ri3 = r[i].powi(3);
                let mut s =
                    -self.lambda + (self.masses[i] * self.spokes.zeta / self.sqrt2 + two * self.m0) / ri3;
                for (j, &rj) in r.iter().enumerate() {
                    if j != i {
                        let x = r[i] / rj;
                        s = s + self.masses[j] * x.powi(3) * h_ell(x, &self.spokes) / ri3;
                    }
                }
                s
            })
            .collect())
    }
}

/// `f(r)` for the given parameters in scalar kind `T`.
pub fn residual<T: Scalar>(params: &SpiderwebParams, r: &[T]) -> Result<Vec<T>, ModelError> {
    System::<T>::new(params).residual(r)
}

/// `D_r f(r)` for the given parameters in scalar kind `T`.
pub fn jacobian<T: Scalar>(params: &SpiderwebParams, r: &[T]) -> Result<DMatrix<T>, ModelError> {
    System::<T>::new(params).jacobian(r)
}

/// `D²_r f(r)` for the given parameters in scalar kind `T`.
pub fn hessian<T: Scalar>(params: &SpiderwebParams, r: &[T]) -> Result<Hessian<T>, ModelError> {
    System::<T>::new(params).hessian(r)
}

/// `(λ_1, …, λ_n)` for the given parameters in scalar kind `T`.
pub fn lambda_values<T: Scalar>(params: &SpiderwebParams, r: &[T]) -> Result<Vec<T>, ModelError> {
    System::<T>::new(params).lambda_values(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use approx::assert_relative_eq;

    fn params(ell: usize, m0: f64, masses: &[f64]) -> SpiderwebParams {
        SpiderwebParams::new(ell, m0, masses.to_vec(), -1.0).unwrap()
    }

    #[test]
    fn zeta_values() {
        assert_relative_eq!(zeta::<f64>(2).unwrap(), std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-15);
        // direct two-term sum at high precision: 2·(3/2)^{-1/2}
        assert_relative_eq!(zeta::<f64>(3).unwrap(), 1.632_993_161_855_452, max_relative = 1e-15);
        assert_relative_eq!(zeta::<f64>(4).unwrap(), 2.0 + std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-15);
        let z10 = zeta::<Interval>(10).unwrap();
        assert!(z10.lo() >= 10.9);
        assert!(z10.contains(zeta::<f64>(10).unwrap()));
        assert_eq!(zeta::<f64>(1), Err(ModelError::TooFewSpokes(1)));
    }

    #[test]
    fn phi_examples() {
        for ell in 2..12 {
            let sp = Spokes::<f64>::new(ell).unwrap();
            assert_relative_eq!(phi(1, 0.0, &sp).unwrap(), ell as f64, max_relative = 1e-15);
            assert!(phi_d1(0.0, &sp).unwrap().abs() < 1e-14);
        }
        let sp = Spokes::<f64>::new(2).unwrap();
        assert_relative_eq!(phi(1, 0.5, &sp).unwrap(), 8.0 / 3.0, max_relative = 1e-15);
        assert_eq!(phi(1, 1.0, &sp), Err(ModelError::Collision(1.0)));
        assert!(phi_d1(1.0, &sp).is_err());
    }

    #[test]
    fn phi_derivatives_by_finite_differences() {
        let sp = Spokes::<f64>::new(7).unwrap();
        let h = 1e-6;
        for &x in &[0.1, 0.4, 0.8, 1.3, 2.5] {
            let fd1 = (phi(1, x + h, &sp).unwrap() - phi(1, x - h, &sp).unwrap()) / (2.0 * h);
            assert_relative_eq!(phi_d1(x, &sp).unwrap(), fd1, max_relative = 1e-7);
            let fd2 = (phi_d1(x + h, &sp).unwrap() - phi_d1(x - h, &sp).unwrap()) / (2.0 * h);
            assert_relative_eq!(phi_d2(x, &sp).unwrap(), fd2, max_relative = 1e-7);
        }
    }

    #[test]
    fn phi_and_derivatives_positive_on_unit_interval() {
        for ell in 2..20 {
            let sp = Spokes::<f64>::new(ell).unwrap();
            for q in 1..100 {
                let x = q as f64 / 100.0;
                assert!(phi(1, x, &sp).unwrap() > 0.0);
                assert!(phi_d1(x, &sp).unwrap() > 0.0);
                assert!(phi_d2(x, &sp).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn h_closed_forms_match_sum() {
        for ell in 2..=4 {
            let sp = Spokes::<f64>::new(ell).unwrap();
            for q in 0..100 {
                let x = q as f64 / 99.0;
                let closed = h_ell_closed_form(x, ell).unwrap();
                assert!((h_ell(x, &sp) - closed).abs() <= 1e-12 * closed.abs().max(1.0));
            }
        }
        let sp = Spokes::<f64>::new(2).unwrap();
        assert_relative_eq!(h_ell(0.0, &sp), 4.0, max_relative = 1e-15);
        assert_eq!(h_ell_closed_form(0.3, 5), None);
    }

    #[test]
    fn h_derivative_by_finite_differences() {
        let sp = Spokes::<f64>::new(11).unwrap();
        let h = 1e-6;
        for &x in &[0.05, 0.3, 0.6, 0.95, 1.4] {
            let fd = (h_ell(x + h, &sp) - h_ell(x - h, &sp)) / (2.0 * h);
            assert_relative_eq!(h_ell_d1(x, &sp), fd, max_relative = 1e-6, epsilon = 1e-8);
        }
    }

    #[test]
    fn force_examples() {
        let p = params(2, 0.0, &[1.0, 1.0]);
        let sys = System::<f64>::new(&p);
        let r = [1.0, 2.0];
        assert_eq!(sys.force_contribution(&r, 0, Source::Center).unwrap(), 0.0);
        // ℓ = 2: bodies of ring 2 at (2,0) and (−2,0) pull the body at (1,0)
        // with 1/1² outward and 1/3² inward.
        let direct = 1.0 - 1.0 / 9.0;
        assert_relative_eq!(sys.force_contribution(&r, 0, Source::Ring(1)).unwrap(), direct, max_relative = 1e-14);
        // and ring 1 pulls the body at (2,0) with 1/1² + 1/3² inward.
        assert_relative_eq!(
            sys.force_contribution(&r, 1, Source::Ring(0)).unwrap(),
            -(1.0 + 1.0 / 9.0),
            max_relative = 1e-14
        );
        // self term: the opposite body at distance 2 r.
        assert_relative_eq!(sys.force_contribution(&r, 0, Source::Ring(0)).unwrap(), -0.25, max_relative = 1e-14);
        assert!(sys.force_contribution(&[1.0, 1.0], 0, Source::Ring(1)).is_err());
    }

    #[test]
    fn residual_is_lambda_r_minus_total_force() {
        let p = params(5, 0.7, &[1.0, 0.4, 2.0, 1.3]);
        let sys = System::<f64>::new(&p);
        let r = [0.8, 1.1, 1.9, 2.2];
        let f = sys.residual(&r).unwrap();
        for i in 0..4 {
            let mut total = sys.force_contribution(&r, i, Source::Center).unwrap();
            for j in 0..4 {
                total += sys.force_contribution(&r, i, Source::Ring(j)).unwrap();
            }
            assert_relative_eq!(f[i], -r[i] - total, max_relative = 1e-13);
        }
    }

    #[test]
    fn single_ring_closed_form_zero() {
        let p = params(2, 0.0, &[1.0]);
        let r1 = 4f64.powf(-1.0 / 3.0);
        assert!(residual(&p, &[r1]).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn massless_ring_is_invisible() {
        let p1 = params(3, 0.2, &[1.5]);
        let p2 = SpiderwebParams::new_restricted(3, 0.2, vec![1.5, 0.0], -1.0).unwrap();
        let f1 = residual(&p1, &[0.9]).unwrap();
        let f2 = residual(&p2, &[0.9, 1.7]).unwrap();
        assert_eq!(f1[0], f2[0]);
    }

    #[test]
    fn jacobian_forms_agree_and_have_sign_structure() {
        let p = params(6, 0.3, &[1.0, 2.0, 0.5]);
        let sys = System::<f64>::new(&p);
        let r = [1.0, 1.7, 2.6];
        let a = sys.jacobian(&r).unwrap();
        let b = sys.jacobian_phi_form(&r).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(a[(i, j)], b[(i, j)], max_relative = 1e-11);
                if i == j {
                    assert!(a[(i, j)] < 0.0);
                } else {
                    assert!(a[(i, j)] > 0.0);
                }
            }
        }
        let one = System::<f64>::new(&params(5, 0.4, &[2.0]));
        let r1 = 1.3f64;
        let expect = -1.0 - 2.0 * zeta::<f64>(5).unwrap() / (2f64.sqrt() * r1.powi(3)) - 0.8 / r1.powi(3);
        assert_relative_eq!(one.jacobian(&[r1]).unwrap()[(0, 0)], expect, max_relative = 1e-14);
    }

    #[test]
    fn hessian_vanishing_pattern_and_symmetry() {
        let p = params(4, 0.0, &[1.0, 1.0, 1.0]);
        let h = hessian::<f64>(&p, &[1.0, 1.5, 2.2]).unwrap();
        assert_eq!(h.get(0, 1, 2), 0.0);
        assert_eq!(h.get(1, 0, 2), 0.0);
        for i in 0..3 {
            for l in 0..3 {
                for j in 0..3 {
                    assert_eq!(h.get(i, l, j), h.get(i, j, l));
                }
            }
        }
    }

    #[test]
    fn lambda_gaps_and_homogeneity() {
        let p = params(3, 0.5, &[1.0, 2.0, 1.0]);
        let sys = System::<f64>::new(&p);
        let r = [0.7, 1.4, 2.0];
        let l = sys.lambda_values(&r).unwrap();
        let g = sys.lambda_gaps(&r).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], l[0] - l[1]);
        let c = 1.7;
        let rc: Vec<f64> = r.iter().map(|x| x * c).collect();
        let lc = sys.lambda_values(&rc).unwrap();
        for i in 0..3 {
            assert_relative_eq!(lc[i], l[i] / c.powi(3), max_relative = 1e-13);
        }
    }

    #[test]
    fn probe_matches_lambda_of_massless_ring() {
        let p = SpiderwebParams::new_restricted(4, 0.0, vec![1.0, 0.0], -1.0).unwrap();
        let sys = System::<f64>::new(&p);
        let l = sys.lambda_values(&[1.0, 1.6]).unwrap();
        let probe = System::<f64>::new(&params(4, 0.0, &[1.0])).probe_lambda(1.6, &[1.0]).unwrap();
        assert_relative_eq!(l[1], probe, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_radii() {
        let p = params(3, 0.0, &[1.0, 1.0]);
        let sys = System::<f64>::new(&p);
        assert_eq!(sys.residual(&[1.0, 1.0]), Err(ModelError::NotInCone(1)));
        assert_eq!(sys.residual(&[1.0]), Err(ModelError::LengthMismatch { expected: 2, got: 1 }));
        let isys = System::<Interval>::new(&p);
        let overlapping = [Interval::new(1.0, 1.2).unwrap(), Interval::new(1.1, 1.3).unwrap()];
        assert_eq!(isys.residual(&overlapping), Err(ModelError::NotInCone(1)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (SpiderwebParams, Vec<f64>)> {
            (1usize..=6, 2usize..=12, 0.0..2.0f64, -3.0..-0.2f64).prop_flat_map(|(n, ell, m0, lambda)| {
                (
                    prop::collection::vec(0.1..3.0f64, n),
                    prop::collection::vec(0.15..1.0f64, n),
                )
                    .prop_map(move |(masses, steps)| {
                        let mut acc = 0.0;
                        let r = steps
                            .iter()
                            .map(|s| {
                                acc += s;
                                acc
                            })
                            .collect();
                        (SpiderwebParams::new(ell, m0, masses, lambda).unwrap(), r)
                    })
            })
        }

        fn bumped(r: &[f64], j: usize, h: f64) -> Vec<f64> {
            let mut v = r.to_vec();
            v[j] += h;
            v
        }

        fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
            (a - b).abs() <= rel * a.abs().max(b.abs()).max(scale)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn jacobian_matches_central_differences((p, r) in instance()) {
                let sys = System::<f64>::new(&p);
                let jac = sys.jacobian(&r).unwrap();
                let scale = jac.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                let n = r.len();
                for j in 0..n {
                    let h = 1e-6 * r[j];
                    let fp = sys.residual(&bumped(&r, j, h)).unwrap();
                    let fm = sys.residual(&bumped(&r, j, -h)).unwrap();
                    for i in 0..n {
                        let fd = (fp[i] - fm[i]) / (2.0 * h);
                        prop_assert!(close(jac[(i, j)], fd, 1e-6, 1e-3 * scale), "{} vs {}", jac[(i, j)], fd);
                    }
                }
            }

            #[test]
            fn jacobian_forms_agree((p, r) in instance()) {
                let sys = System::<f64>::new(&p);
                let a = sys.jacobian(&r).unwrap();
                let b = sys.jacobian_phi_form(&r).unwrap();
                let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                for (x, y) in a.iter().zip(b.iter()) {
                    prop_assert!(close(*x, *y, 1e-10, 1e-6 * scale));
                }
            }

            #[test]
            fn hessian_matches_central_differences((p, r) in instance()) {
                let sys = System::<f64>::new(&p);
                let hes = sys.hessian(&r).unwrap();
                let n = r.len();
                let scale = (0..n).fold(0.0f64, |a, i| a.max(hes.own[i].abs()));
                for j in 0..n {
                    let h = 1e-5 * r[j];
                    let jp = sys.jacobian(&bumped(&r, j, h)).unwrap();
                    let jm = sys.jacobian(&bumped(&r, j, -h)).unwrap();
                    for i in 0..n {
                        for l in 0..n {
                            let fd = (jp[(i, l)] - jm[(i, l)]) / (2.0 * h);
                            prop_assert!(close(hes.get(i, l, j), fd, 1e-5, 1e-4 * scale),
                                "i={} l={} j={}: {} vs {}", i, l, j, hes.get(i, l, j), fd);
                        }
                    }
                }
            }

            #[test]
            fn row_identity((p, r) in instance()) {
                let sys = System::<f64>::new(&p);
                let jac = sys.jacobian_phi_form(&r).unwrap();
                let rhs = sys.row_dominance(&r).unwrap();
                for i in 0..r.len() {
                    let lhs = -jac.row(i).iter().sum::<f64>();
                    let scale = jac.row(i).iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    prop_assert!(close(lhs, rhs[i], 1e-10, scale), "{} vs {}", lhs, rhs[i]);
                }
            }

            #[test]
            fn sign_structure((p, r) in instance()) {
                let sys = System::<f64>::new(&p);
                let n = r.len();
                for i in 0..n {
                    for j in 0..n {
                        let f = sys.force_contribution(&r, i, Source::Ring(j)).unwrap();
                        prop_assert_eq!(f > 0.0, i < j);
                    }
                }
                // λ_i decreases when any other ring moves out.
                for i in 0..n {
                    for j in (0..n).filter(|&j| j != i) {
                        let h = 1e-6 * (r[j] - if j > 0 { r[j - 1] } else { 0.0 });
                        let up = sys.lambda_values(&bumped(&r, j, h));
                        let dn = sys.lambda_values(&bumped(&r, j, -h));
                        if let (Ok(up), Ok(dn)) = (up, dn) {
                            prop_assert!(up[i] < dn[i]);
                        }
                    }
                }
            }

            #[test]
            fn interval_encloses_float((p, r) in instance()) {
                let fs = System::<f64>::new(&p);
                let is = System::<Interval>::new(&p);
                let ri: Vec<Interval> = r.iter().map(|&x| Interval::point(x)).collect();
                let f = fs.residual(&r).unwrap();
                let fi = is.residual(&ri).unwrap();
                let j = fs.jacobian(&r).unwrap();
                let ji = is.jacobian(&ri).unwrap();
                let h = fs.hessian(&r).unwrap();
                let hi = is.hessian(&ri).unwrap();
                for i in 0..r.len() {
                    prop_assert!(fi[i].contains(f[i]) || (fi[i].mid() - f[i]).abs() <= 1e-13 * f[i].abs().max(1.0));
                    prop_assert!(fi[i].width() <= 1e-12 * fi[i].mag().max(1.0));
                    for k in 0..r.len() {
                        let near = |a: Interval, b: f64| a.contains(b) || (a.mid() - b).abs() <= 1e-12 * b.abs().max(1.0);
                        prop_assert!(near(ji[(i, k)], j[(i, k)]));
                        prop_assert!(near(hi.cross[(i, k)], h.cross[(i, k)]));
                        prop_assert!(near(hi.pure[(i, k)], h.pure[(i, k)]));
                    }
                }
            }
        }
    }
}
