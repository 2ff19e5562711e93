//! Distribution symmetries of exponential-Levy models, decided directly on
//! the characteristic triplet.
//!
//! Two independent routes are provided and are expected to agree:
//!
//! * **structural checks** — finitely many residuals on `(A, nu, gamma)`:
//!   a linear condition on the Gaussian covariance, invariance of a tilted
//!   and centered image of the jump measure under the coordinate swap
//!   `i <-> j`, and one scalar drift condition;
//! * **grid checks** — sampling the identity
//!   `phi(u - i shift) = phi(swap(u) - i shift)` for `u` in the zero-sum
//!   hyperplane (swap family), or `phi(u - i e_i/2) = phi(K_i' u - i e_i/2)`
//!   on all of R^n (self-duality).
//!
//! All checks are pure functions of the triplet; indices are 0-based.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measure::MomentPoly;
use crate::report::{ResidualEntry, SymmetryKind, SymmetryReport};
use crate::triplet::{projection_full, LevyTriplet};

/// Default absolute tolerance for structural residuals.
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Default absolute tolerance for characteristic-function grid residuals.
pub const CHARFN_TOL: f64 = 1e-10;

/// Sampling plan for grid checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Number of sample points.
    pub count: usize,
    /// Points are drawn with uniform direction and radius uniform in
    /// `[0, radius]`.
    pub radius: f64,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { count: 1000, radius: 2.0, seed: 42 }
    }
}

fn validate_pair(dim: usize, i: usize, j: usize) -> Result<()> {
    if i >= dim || j >= dim {
        return Err(Error::DimensionMismatch(format!(
            "indices ({i},{j}) out of range for dimension {dim}"
        )));
    }
    if i == j {
        return Err(Error::InvalidArgument("swap indices must differ".into()));
    }
    Ok(())
}

/// u with coordinates i and j exchanged.
pub fn swap_coords(u: &[f64], i: usize, j: usize) -> Vec<f64> {
    let mut v = u.to_vec();
    v.swap(i, j);
    v
}

/// Reflection `K_i`: `(K_i u)_l = u_l - u_i` for `l != i`, `(K_i u)_i = -u_i`.
/// An involution.
pub fn k_transform(u: &[f64], i: usize) -> Vec<f64> {
    let ui = u[i];
    let mut v: Vec<f64> = u.iter().map(|&x| x - ui).collect();
    v[i] = -ui;
    v
}

/// Transpose `K_i'`: coordinate i becomes `-sum(u)`, all others unchanged.
/// Also an involution.
pub fn k_transform_transpose(u: &[f64], i: usize) -> Vec<f64> {
    let s: f64 = u.iter().sum();
    let mut v = u.to_vec();
    v[i] = -s;
    v
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

/// The three residuals shared by the swap-invariance family. The family
/// member is encoded in the tilt direction `theta = (e_i + e_j)/2 + v` and a
/// scalar rate gap added to the drift condition:
///
/// * plain swap-invariance: `v` as given (zero if absent), rate gap 0;
/// * multiplicative weight on the last coordinate: `v = e_{dim-1}`;
/// * quasi-invariance with power alpha: `v = alpha/2 (e_i - e_j)` plus the
///   weight term, rate gap `r_i - r_j`.
pub(crate) struct CoreResiduals {
    pub gaussian: f64,
    pub measure: f64,
    pub drift: f64,
}

pub(crate) fn swap_core(
    t: &LevyTriplet,
    i: usize,
    j: usize,
    n_assets: usize,
    v: &DVector<f64>,
    rate_gap: f64,
) -> Result<CoreResiduals> {
    let dim = t.dim();
    validate_pair(dim, i, j)?;
    if n_assets < 2 || n_assets > dim || i >= n_assets || j >= n_assets {
        return Err(Error::InvalidArgument(format!(
            "swap coordinates must lie among the first {n_assets} of {dim}"
        )));
    }
    if v.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "weight vector has length {}, triplet dimension is {dim}",
            v.len()
        )));
    }
    let a = t.a();
    let gamma = t.gamma();
    let nu = t.nu();

    // Gaussian condition a_li - a_lj = (a_ii - a_jj)/2 for the other swap
    // coordinates; vacuous (residual 0) for two assets.
    let half_diag = 0.5 * (a[(i, i)] - a[(j, j)]);
    let mut gaussian = 0.0_f64;
    for l in 0..n_assets {
        if l == i || l == j {
            continue;
        }
        gaussian = gaussian.max((a[(l, i)] - a[(l, j)] - half_diag).abs());
    }

    // Tilt, center over the swap coordinates, compare with the swapped image.
    let mut theta = v.clone();
    theta[i] += 0.5;
    theta[j] += 0.5;
    let centering = embedded_centering(n_assets, dim);
    let projected = nu.exp_tilt(&theta)?.map(&centering)?;
    let measure = projected.matching_residual(&projected.swap(i, j));

    // Drift condition.
    let zero = DVector::zeros(dim);
    let jump = nu.moment(&theta, MomentPoly::Coord(j))? - nu.moment(&theta, MomentPoly::Coord(i))?
        - nu.moment(&zero, MomentPoly::Coord(j))?
        + nu.moment(&zero, MomentPoly::Coord(i))?;
    let mut cross = 0.0;
    for k in 0..dim {
        cross += (a[(j, k)] - a[(i, k)]) * v[k];
    }
    let rhs = -half_diag + cross + jump + rate_gap;
    let drift = (gamma[i] - gamma[j] - rhs).abs();

    Ok(CoreResiduals { gaussian, measure, drift })
}

/// Centering matrix of the first `n_assets` coordinates embedded into an
/// `n_assets x dim` map; trailing coordinates are annihilated.
fn embedded_centering(n_assets: usize, dim: usize) -> DMatrix<f64> {
    let p = projection_full(n_assets);
    let mut m = DMatrix::zeros(n_assets, dim);
    m.view_mut((0, 0), (n_assets, n_assets))
        .copy_from(&p.view((0, 0), (n_assets, n_assets)));
    m
}

/// Exchangeability in coordinates `i`, `j`: equal diagonal, equal cross
/// covariances, swap-invariant jump measure and equal drift.
pub fn check_exchangeable(t: &LevyTriplet, i: usize, j: usize, tol: f64) -> Result<SymmetryReport> {
    let dim = t.dim();
    validate_pair(dim, i, j)?;
    let a = t.a();
    let mut cross = 0.0_f64;
    for l in 0..dim {
        if l == i || l == j {
            continue;
        }
        cross = cross.max((a[(l, i)] - a[(l, j)]).abs());
    }
    let residuals = vec![
        ResidualEntry::new("gaussian_diagonal", (a[(i, i)] - a[(j, j)]).abs(), tol),
        ResidualEntry::new("gaussian_cross", cross, tol),
        ResidualEntry::new("measure_swap", t.nu().matching_residual(&t.nu().swap(i, j)), tol),
        ResidualEntry::new("drift_equal", (t.gamma()[i] - t.gamma()[j]).abs(), tol),
    ];
    Ok(SymmetryReport::from_residuals(
        SymmetryKind::Exchangeable,
        residuals,
        format!("coordinates ({i},{j})"),
    ))
}

/// Swap-invariance of `e^xi` in coordinates `i`, `j`, optionally under the
/// multiplicative weight `exp(<v, xi>)`.
pub fn check_swap_invariant(
    t: &LevyTriplet,
    i: usize,
    j: usize,
    v: Option<&DVector<f64>>,
    tol: f64,
) -> Result<SymmetryReport> {
    let dim = t.dim();
    let v = match v {
        Some(v) => v.clone(),
        None => DVector::zeros(dim),
    };
    let core = swap_core(t, i, j, dim, &v, 0.0)?;
    Ok(report_from_core(
        SymmetryKind::SwapInvariant,
        core,
        tol,
        format!("coordinates ({i},{j}), weight {:?}", v.as_slice()),
    ))
}

/// Swap-invariance weighted by the exponential of the last coordinate; the
/// triplet covers the assets plus the weight factor as its final coordinate.
pub fn check_weighted_swap_invariant(
    t: &LevyTriplet,
    i: usize,
    j: usize,
    tol: f64,
) -> Result<SymmetryReport> {
    let dim = t.dim();
    if dim < 3 {
        return Err(Error::InvalidArgument(
            "weighted check needs at least two assets plus the weight coordinate".into(),
        ));
    }
    let mut v = DVector::zeros(dim);
    v[dim - 1] = 1.0;
    let core = swap_core(t, i, j, dim - 1, &v, 0.0)?;
    Ok(report_from_core(
        SymmetryKind::WeightedSwapInvariant,
        core,
        tol,
        format!("coordinates ({i},{j}), weight coordinate {}", dim - 1),
    ))
}

pub(crate) fn report_from_core(
    kind: SymmetryKind,
    core: CoreResiduals,
    tol: f64,
    details: String,
) -> SymmetryReport {
    SymmetryReport::from_residuals(
        kind,
        vec![
            ResidualEntry::new("gaussian_condition", core.gaussian, tol),
            ResidualEntry::new("projected_measure_swap", core.measure, tol),
            ResidualEntry::new("drift_condition", core.drift, tol),
        ],
        details,
    )
}

// ---------------------------------------------------------------------------
// Grid checks
// ---------------------------------------------------------------------------

/// Snap to the dyadic grid 2^-30 so that sums of a few coordinates are exact
/// and reflection involutions hold bit for bit.
fn snap(x: f64) -> f64 {
    const SCALE: f64 = 1_073_741_824.0; // 2^30
    (x * SCALE).round() / SCALE
}

/// Direction uniform on the sphere of the first `n_assets` coordinates after
/// centering, radius uniform in `[0, radius]`, trailing coordinates zero.
fn sample_hyperplane(rng: &mut ChaCha8Rng, dim: usize, n_assets: usize, radius: f64) -> Vec<f64> {
    loop {
        let mut z: Vec<f64> = (0..n_assets).map(|_| rng.sample(StandardNormal)).collect();
        let mean = z.iter().sum::<f64>() / n_assets as f64;
        for x in z.iter_mut() {
            *x -= mean;
        }
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let r = radius * rng.random::<f64>();
        let mut u = vec![0.0; dim];
        for (k, x) in z.iter().enumerate() {
            u[k] = snap(x / norm * r);
        }
        // Snapping each coordinate separately leaves a ~2^-31 zero-sum
        // violation, and the identities under test hold only on the
        // hyperplane itself. Dyadic values of this size sum exactly, so
        // folding the error into the last active coordinate restores
        // `sum(u) == 0` bit for bit.
        let head: f64 = u[..n_assets - 1].iter().sum();
        u[n_assets - 1] = -head;
        return u;
    }
}

fn sample_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let r = radius * rng.random::<f64>();
        return z.iter().map(|x| snap(x / norm * r)).collect();
    }
}

fn shifted(u: &[f64], shift: &[f64]) -> Vec<Complex64> {
    u.iter().zip(shift.iter()).map(|(&re, &s)| Complex64::new(re, -s)).collect()
}

/// Maximal deviation of `phi(u - i shift)` from
/// `exp(i (u_i - u_j) rate_gap) * phi(swap_ij(u) - i shift)` over points `u`
/// whose first `n_assets` coordinates sum to zero (trailing coordinates are
/// held at zero). With `shift = (e_i + e_j)/2 + v` and `rate_gap = 0` this
/// samples the characteristic-function form of (possibly weighted)
/// swap-invariance; quasi-invariance uses its own tilt direction together
/// with the carrying-cost gap `r_i - r_j`, which enters as a phase.
///
/// Both sides are divided by the tilt's exponential moment `phi(-i shift)`,
/// so the compared values are characteristic functions of the tilted
/// probability law. That keeps them inside the unit disk and makes the
/// residual a scale-free quantity: roundoff stays near machine precision
/// instead of growing with the exponential moments of the model.
pub fn check_charfn_symmetry(
    t: &LevyTriplet,
    i: usize,
    j: usize,
    shift: &[f64],
    n_assets: usize,
    rate_gap: f64,
    grid: &GridSpec,
) -> Result<f64> {
    let dim = t.dim();
    validate_pair(dim, i, j)?;
    if n_assets < 2 || n_assets > dim || i >= n_assets || j >= n_assets {
        return Err(Error::InvalidArgument(format!(
            "swap coordinates must lie among the first {n_assets} of {dim}"
        )));
    }
    if shift.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "shift has length {}, triplet dimension is {dim}",
            shift.len()
        )));
    }
    let normalizer = t.char_exponent(&shifted(&vec![0.0; dim], shift))?;
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut worst = 0.0_f64;
    for _ in 0..grid.count {
        let u = sample_hyperplane(&mut rng, dim, n_assets, grid.radius);
        let us = swap_coords(&u, i, j);
        let lhs = (t.char_exponent(&shifted(&u, shift))? - normalizer).exp();
        let phase = Complex64::new(0.0, (u[i] - u[j]) * rate_gap).exp();
        let rhs = phase * (t.char_exponent(&shifted(&us, shift))? - normalizer).exp();
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Maximal deviation of `phi(u)` from `phi(swap_ij(u))` over a ball in
/// R^dim; zero exactly for models exchangeable in `(i, j)`. Unlike
/// [`check_charfn_symmetry`] the points are not restricted to a hyperplane:
/// exchangeability is a statement about the full distribution, not only
/// about price ratios.
pub fn check_charfn_exchangeable(
    t: &LevyTriplet,
    i: usize,
    j: usize,
    grid: &GridSpec,
) -> Result<f64> {
    let dim = t.dim();
    validate_pair(dim, i, j)?;
    let zero = vec![0.0; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut worst = 0.0_f64;
    for _ in 0..grid.count {
        let u = sample_ball(&mut rng, dim, grid.radius);
        let us = swap_coords(&u, i, j);
        let lhs = t.char_fn(&shifted(&u, &zero))?;
        let rhs = t.char_fn(&shifted(&us, &zero))?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Maximal deviation of `phi(u - i e_i/2)` from `phi(K_i' u - i e_i/2)` over
/// a ball in R^dim; zero exactly for models whose i-th price relative is
/// self-dual. Sampled points are dyadic so the reflection involution is
/// asserted exactly.
pub fn check_self_dual(t: &LevyTriplet, i: usize, grid: &GridSpec) -> Result<f64> {
    let dim = t.dim();
    if i >= dim {
        return Err(Error::DimensionMismatch(format!(
            "index {i} out of range for dimension {dim}"
        )));
    }
    let mut shift = vec![0.0; dim];
    shift[i] = 0.5;
    // Normalize by the tilt's exponential moment, as in
    // [`check_charfn_symmetry`], so roundoff does not scale with the model.
    let normalizer = t.char_exponent(&shifted(&vec![0.0; dim], &shift))?;
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut worst = 0.0_f64;
    for _ in 0..grid.count {
        let u = sample_ball(&mut rng, dim, grid.radius);
        let ku = k_transform_transpose(&u, i);
        assert_eq!(
            k_transform_transpose(&ku, i),
            u,
            "reflection involution must be exact on dyadic points"
        );
        let lhs = (t.char_exponent(&shifted(&u, &shift))? - normalizer).exp();
        let rhs = (t.char_exponent(&shifted(&ku, &shift))? - normalizer).exp();
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Reduce the pair `(i, j)` of an n-dimensional model to an (n-1)-dimensional
/// model whose `i'`-th coordinate is self-dual exactly when the original
/// model is swap-invariant in `(i, j)`.
///
/// The reduction changes measure with density `e^{xi_j} / E e^{xi_j}`
/// (an Esscher tilt by `e_j`) and then maps `xi` to the differences
/// `(xi_l - xi_j)` for `l != j`. Returns the reduced triplet together with
/// the index of the surviving swap coordinate.
pub fn reduce_to_selfdual(t: &LevyTriplet, i: usize, j: usize) -> Result<(LevyTriplet, usize)> {
    let dim = t.dim();
    validate_pair(dim, i, j)?;
    if dim < 2 {
        return Err(Error::InvalidArgument("reduction needs dimension at least 2".into()));
    }
    let mut e_j = DVector::zeros(dim);
    e_j[j] = 1.0;
    let tilted = t.esscher(&e_j)?;
    let mut m = DMatrix::zeros(dim - 1, dim);
    let mut row = 0;
    for l in 0..dim {
        if l == j {
            continue;
        }
        m[(row, l)] = 1.0;
        m[(row, j)] = -1.0;
        row += 1;
    }
    let reduced = tilted.linear_map(&m)?;
    let reduced_index = if i < j { i } else { i - 1 };
    Ok((reduced, reduced_index))
}
