//! Characteristic triplets of exponential-Levy models.
//!
//! A model is described by `(A, nu, gamma)` at unit horizon: `A` the Gaussian
//! covariance, `nu` a finite-activity jump measure with all exponential
//! moments (see [`crate::measure`]), and `gamma` the drift. Because every
//! supported measure integrates `|x|` near infinity, the exponent is kept in
//! truncation-free form
//!
//! ```text
//! psi(w) = i<gamma, w> - <w, A w>/2 + ∫ (e^{i<w,x>} - 1 - i<w,x>) nu(dx)
//! ```
//!
//! and is evaluated at complex arguments `w = u - i theta`, which is how all
//! symmetry identities and moment computations enter. Two transform rules are
//! used throughout and are verified in tests against the exponent itself:
//!
//! * Esscher tilt by `theta`: `psi_new(u) = psi(u - i theta) - psi(-i theta)`,
//! * linear image by `M`:     `psi_new(u) = psi(M' u)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{LevyMeasure, MomentPoly};

/// Characteristic triplet `(A, nu, gamma)` of a Levy process at unit time.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    dim: usize,
    a: DMatrix<f64>,
    nu: LevyMeasure,
    gamma: DVector<f64>,
}

impl LevyTriplet {
    /// Validated constructor: `A` symmetric PSD, dimensions consistent, all
    /// entries finite.
    pub fn new(a: DMatrix<f64>, nu: LevyMeasure, gamma: DVector<f64>) -> Result<Self> {
        let dim = gamma.len();
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, drift has length {dim}",
                a.nrows(),
                a.ncols()
            )));
        }
        if nu.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "jump measure has dimension {}, drift has length {dim}",
                nu.dim()
            )));
        }
        if gamma.iter().any(|x| !x.is_finite()) || a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("triplet entries".into()));
        }
        linalg::check_symmetric(&a)?;
        linalg::check_psd(&a)?;
        Ok(Self { dim, a, nu, gamma })
    }

    /// Martingale-normalized triplet: drift chosen so that `E e^{xi_l} = 1`
    /// for every coordinate, i.e. `psi(-i e_l) = 0`.
    pub fn with_martingale_drift(a: DMatrix<f64>, nu: LevyMeasure) -> Result<Self> {
        let gamma = martingale_drift(&a, &nu)?;
        Self::new(a, nu, gamma)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn nu(&self) -> &LevyMeasure {
        &self.nu
    }

    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    /// Characteristic exponent at a complex argument.
    pub fn char_exponent(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "argument has length {}, triplet dimension is {}",
                w.len(),
                self.dim
            )));
        }
        let i = Complex64::new(0.0, 1.0);
        let mut psi = Complex64::new(0.0, 0.0);
        for k in 0..self.dim {
            psi += i * self.gamma[k] * w[k];
        }
        psi -= 0.5 * linalg::bilinear_complex(&self.a, w);
        match &self.nu {
            LevyMeasure::Atomic { atoms, .. } => {
                for a in atoms {
                    let mut wx = Complex64::new(0.0, 0.0);
                    for k in 0..self.dim {
                        wx += w[k] * a.location[k];
                    }
                    psi += a.mass * ((i * wx).exp() - 1.0 - i * wx);
                }
            }
            LevyMeasure::GaussianMixture { components, .. } => {
                for c in components {
                    let mut wm = Complex64::new(0.0, 0.0);
                    for k in 0..self.dim {
                        wm += w[k] * c.mean[k];
                    }
                    let wcw = linalg::bilinear_complex(&c.covariance, w);
                    psi += c.intensity * ((i * wm - 0.5 * wcw).exp() - 1.0 - i * wm);
                }
            }
        }
        if !psi.re.is_finite() || !psi.im.is_finite() {
            return Err(Error::NonFinite("characteristic exponent".into()));
        }
        Ok(psi)
    }

    /// Characteristic function `exp(psi(w))`.
    pub fn char_fn(&self, w: &[Complex64]) -> Result<Complex64> {
        Ok(self.char_exponent(w)?.exp())
    }

    /// `E exp(<theta, xi_1>)`, the exponential moment at a real direction.
    pub fn exp_moment(&self, theta: &DVector<f64>) -> Result<f64> {
        let w: Vec<Complex64> = theta.iter().map(|&t| Complex64::new(0.0, -t)).collect();
        Ok(self.char_exponent(&w)?.re.exp())
    }

    /// Esscher transform: reweight by `e^{<theta, x>}`. The Gaussian part is
    /// unchanged, the measure is tilted, and the drift picks up
    /// `A theta + ∫ x (e^{<theta,x>} - 1) nu(dx)`.
    pub fn esscher(&self, theta: &DVector<f64>) -> Result<LevyTriplet> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "tilt direction has length {}, triplet dimension is {}",
                theta.len(),
                self.dim
            )));
        }
        let zero = DVector::zeros(self.dim);
        let mut gamma = &self.gamma + &self.a * theta;
        for k in 0..self.dim {
            gamma[k] += self.nu.moment(theta, MomentPoly::Coord(k))?
                - self.nu.moment(&zero, MomentPoly::Coord(k))?;
        }
        LevyTriplet::new(self.a.clone(), self.nu.exp_tilt(theta)?, gamma)
    }

    /// Image triplet of `M xi` for a linear map `M` (m x dim). In the
    /// truncation-free parameterization the drift maps linearly and atoms of
    /// the image landing at the origin are dropped.
    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<LevyTriplet> {
        if m.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "map has {} columns, triplet dimension is {}",
                m.ncols(),
                self.dim
            )));
        }
        LevyTriplet::new(m * &self.a * m.transpose(), self.nu.map(m)?, m * &self.gamma)
    }

    /// Covariance of `xi_1`: Gaussian part plus second moments of the jumps.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let zero = DVector::zeros(self.dim);
        let mut cov = self.a.clone();
        for k in 0..self.dim {
            for l in k..self.dim {
                let jump = self.nu.moment(&zero, MomentPoly::CoordProd(k, l))?;
                cov[(k, l)] += jump;
                if l != k {
                    cov[(l, k)] += jump;
                }
            }
        }
        Ok(cov)
    }

    /// Triplet of the same process observed over horizon `t`.
    pub fn scale_time(&self, t: f64) -> Result<LevyTriplet> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {t} must be positive")));
        }
        LevyTriplet::new(&self.a * t, self.nu.scale(t), &self.gamma * t)
    }
}

/// Drift making every coordinate of `e^xi` a unit-mean martingale:
/// `gamma_l = -a_ll/2 - ∫ (e^{x_l} - 1 - x_l) nu(dx)`.
pub fn martingale_drift(a: &DMatrix<f64>, nu: &LevyMeasure) -> Result<DVector<f64>> {
    let dim = nu.dim();
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, measure dimension is {dim}",
            a.nrows(),
            a.ncols()
        )));
    }
    let zero = DVector::zeros(dim);
    let total = nu.moment(&zero, MomentPoly::One)?;
    let mut gamma = DVector::zeros(dim);
    for l in 0..dim {
        let mut e_l = DVector::zeros(dim);
        e_l[l] = 1.0;
        let exp_int = nu.moment(&e_l, MomentPoly::One)? - total - nu.moment(&zero, MomentPoly::Coord(l))?;
        gamma[l] = -0.5 * a[(l, l)] - exp_int;
    }
    Ok(gamma)
}

/// Projection of R^{n+1} onto the zero-sum hyperplane of the first `n`
/// coordinates: an `n x (n+1)` matrix whose first `n` columns form the
/// centering matrix `I - J/n` and whose last column is zero.
pub fn projection_full(n: usize) -> DMatrix<f64> {
    assert!(n >= 1, "projection needs at least one coordinate");
    let mut p = DMatrix::zeros(n, n + 1);
    for r in 0..n {
        for c in 0..n {
            p[(r, c)] = if r == c { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 };
        }
    }
    p
}

/// Square centering matrix `I - J/n`: [`projection_full`] with the zero
/// column omitted.
pub fn projection_reduced(n: usize) -> DMatrix<f64> {
    projection_full(n).columns(0, n).into_owned()
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawTriplet {
    dim: usize,
    /// Row-major dim x dim Gaussian covariance.
    a: Vec<f64>,
    gamma: Vec<f64>,
    nu: LevyMeasure,
}

impl From<&LevyTriplet> for RawTriplet {
    fn from(t: &LevyTriplet) -> Self {
        RawTriplet {
            dim: t.dim,
            a: t.a.transpose().iter().copied().collect(),
            gamma: t.gamma.iter().copied().collect(),
            nu: t.nu.clone(),
        }
    }
}

impl TryFrom<RawTriplet> for LevyTriplet {
    type Error = Error;

    fn try_from(raw: RawTriplet) -> Result<Self> {
        if raw.a.len() != raw.dim * raw.dim {
            return Err(Error::DimensionMismatch(format!(
                "A has {} entries, expected {}",
                raw.a.len(),
                raw.dim * raw.dim
            )));
        }
        if raw.gamma.len() != raw.dim {
            return Err(Error::DimensionMismatch(format!(
                "gamma has length {}, expected {}",
                raw.gamma.len(),
                raw.dim
            )));
        }
        LevyTriplet::new(
            DMatrix::from_row_slice(raw.dim, raw.dim, &raw.a),
            raw.nu,
            DVector::from_vec(raw.gamma),
        )
    }
}

impl Serialize for LevyTriplet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawTriplet::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LevyTriplet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTriplet::deserialize(d)?;
        LevyTriplet::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Atom, MixtureComponent};

    fn dvec(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn test_triplet() -> LevyTriplet {
        let a = DMatrix::from_row_slice(2, 2, &[0.04, 0.018, 0.018, 0.09]);
        let nu = LevyMeasure::atomic(
            2,
            vec![
                Atom { location: dvec(&[0.2, -0.1]), mass: 0.4 },
                Atom { location: dvec(&[-0.3, 0.25]), mass: 0.7 },
            ],
        )
        .unwrap();
        LevyTriplet::new(a, nu, dvec(&[-0.02, -0.045])).unwrap()
    }

    fn mixture_triplet() -> LevyTriplet {
        let a = DMatrix::from_row_slice(2, 2, &[0.05, -0.01, -0.01, 0.07]);
        let nu = LevyMeasure::gaussian_mixture(
            2,
            vec![
                MixtureComponent {
                    intensity: 0.5,
                    mean: dvec(&[0.1, -0.05]),
                    covariance: DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]),
                },
                MixtureComponent {
                    intensity: 0.3,
                    mean: dvec(&[-0.2, 0.15]),
                    covariance: DMatrix::from_row_slice(2, 2, &[0.02, 0.0, 0.0, 0.03]),
                },
            ],
        )
        .unwrap();
        LevyTriplet::new(a, nu, dvec(&[0.01, -0.03])).unwrap()
    }

    fn cgrid() -> Vec<Vec<Complex64>> {
        let mut pts = Vec::new();
        for &(re1, im1, re2, im2) in &[
            (1.0, 0.0, -1.0, 0.0),
            (0.3, -0.5, 0.7, 0.25),
            (-1.2, 0.1, 0.4, -0.6),
            (2.0, 0.0, 0.0, 0.5),
        ] {
            pts.push(vec![Complex64::new(re1, im1), Complex64::new(re2, im2)]);
        }
        pts
    }

    #[test]
    fn gaussian_exponent_matches_closed_form() {
        // No jumps: psi(u) = i<gamma,u> - u'Au/2.
        let a = DMatrix::from_row_slice(2, 2, &[0.04, 0.02, 0.02, 0.09]);
        let t = LevyTriplet::new(a, LevyMeasure::zero(2), dvec(&[-0.02, -0.045])).unwrap();
        let u = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let psi = t.char_exponent(&u).unwrap();
        // i(-0.02 + 0.045) - (0.04 - 2*0.02 + 0.09)/2 = 0.025 i - 0.045
        assert!((psi.re + 0.045).abs() < 1e-16);
        assert!((psi.im - 0.025).abs() < 1e-16);
    }

    #[test]
    fn esscher_identity_holds_on_grid() {
        for t in [test_triplet(), mixture_triplet()] {
            let theta = dvec(&[0.5, -0.25]);
            let tilted = t.esscher(&theta).unwrap();
            let at_theta = t
                .char_exponent(&[Complex64::new(0.0, -theta[0]), Complex64::new(0.0, -theta[1])])
                .unwrap();
            for u in cgrid() {
                let lhs = tilted.char_exponent(&u).unwrap();
                let shifted: Vec<Complex64> = u
                    .iter()
                    .zip(theta.iter())
                    .map(|(w, &th)| w - Complex64::new(0.0, 1.0) * th)
                    .collect();
                let rhs = t.char_exponent(&shifted).unwrap() - at_theta;
                assert!(
                    (lhs - rhs).norm() < 1e-12,
                    "esscher identity violated: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn linear_map_identity_holds_on_grid() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]);
        for t in [test_triplet(), mixture_triplet()] {
            let mapped = t.linear_map(&m).unwrap();
            for u in cgrid() {
                let lhs = mapped.char_exponent(&u).unwrap();
                let mtu = [
                    m[(0, 0)] * u[0] + m[(1, 0)] * u[1],
                    m[(0, 1)] * u[0] + m[(1, 1)] * u[1],
                ];
                let rhs = t.char_exponent(&mtu).unwrap();
                assert!((lhs - rhs).norm() < 1e-12, "map identity violated");
            }
        }
    }

    #[test]
    fn martingale_drift_single_atom_hand_value() {
        // 1-d, A=0, one atom at 0.1 with mass 1:
        // gamma = -(e^0.1 - 1 - 0.1) = -0.005170918075647702...
        let nu = LevyMeasure::atomic(1, vec![Atom { location: dvec(&[0.1]), mass: 1.0 }]).unwrap();
        let gamma = martingale_drift(&DMatrix::zeros(1, 1), &nu).unwrap();
        assert!((gamma[0] + 0.005_170_918_075_647_702).abs() < 1e-15);
    }

    #[test]
    fn martingale_drift_normalizes_exponential_moments() {
        for base in [test_triplet(), mixture_triplet()] {
            let t = LevyTriplet::with_martingale_drift(base.a.clone(), base.nu.clone()).unwrap();
            for l in 0..t.dim() {
                let mut e_l = DVector::zeros(t.dim());
                e_l[l] = 1.0;
                let m = t.exp_moment(&e_l).unwrap();
                assert!((m - 1.0).abs() < 1e-12, "coordinate {l}: E e^xi = {m}");
            }
        }
    }

    #[test]
    fn covariance_adds_jump_second_moments() {
        let t = test_triplet();
        let cov = t.covariance().unwrap();
        // Hand value of the (0,0) entry: a_00 + sum w x_0^2.
        let jump = 0.4 * 0.2 * 0.2 + 0.7 * 0.3 * 0.3;
        assert!((cov[(0, 0)] - (0.04 + jump)).abs() < 1e-15);
        assert!((cov[(0, 1)] - cov[(1, 0)]).abs() < 1e-15);
    }

    #[test]
    fn projection_rows_sum_to_zero_and_reduced_is_idempotent() {
        for n in 1..6 {
            let p = projection_full(n);
            for r in 0..n {
                let s: f64 = (0..=n).map(|c| p[(r, c)]).sum();
                assert!(s.abs() < 1e-15, "row {r} sums to {s}");
            }
            let q = projection_reduced(n);
            assert!(((&q * &q) - &q).amax() < 1e-15, "centering not idempotent");
        }
    }

    #[test]
    fn time_scaling_scales_the_exponent() {
        let t = mixture_triplet();
        let scaled = t.scale_time(2.5).unwrap();
        for u in cgrid() {
            let lhs = scaled.char_exponent(&u).unwrap();
            let rhs = t.char_exponent(&u).unwrap() * 2.5;
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let t = test_triplet();
        let json = serde_json::to_string(&t).unwrap();
        let back: LevyTriplet = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
        assert_eq!(json, serde_json::to_string(&back).unwrap());
    }

    #[test]
    fn invalid_triplets_are_rejected() {
        let bad_a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(LevyTriplet::new(bad_a, LevyMeasure::zero(2), dvec(&[0.0, 0.0])).is_err());
        let a = DMatrix::identity(2, 2);
        assert!(LevyTriplet::new(a.clone(), LevyMeasure::zero(3), dvec(&[0.0, 0.0])).is_err());
        assert!(LevyTriplet::new(a, LevyMeasure::zero(2), dvec(&[f64::NAN, 0.0])).is_err());
    }
}
