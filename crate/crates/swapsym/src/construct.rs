//! Randomized model builders with prescribed symmetries.
//!
//! Each `make_*` function draws a model from a family that satisfies the
//! corresponding structural conditions *exactly* (up to rounding), which the
//! checkers and Monte-Carlo tests then confirm independently:
//!
//! * covariance conditions are imposed by construction and a diagonal ridge
//!   restores positive definiteness without disturbing them;
//! * jump measures are built as `e^{-<theta,x>} nu_sym` with `nu_sym`
//!   invariant under the coordinate swap, so the tilted measure condition
//!   holds by symmetry;
//! * drifts are martingale drifts, which satisfy the drift condition
//!   automatically once the other two conditions hold (for the quasi family
//!   the required carrying-cost gap is computed and returned instead).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::sym_eigenvalues;
use crate::measure::{Atom, LevyMeasure, MixtureComponent, MomentPoly};
use crate::quasi::quasi_weight_vector;
use crate::triplet::LevyTriplet;

/// Shape of the jump part of a randomized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    None,
    Atomic { atoms: usize },
    Mixture { components: usize },
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Random symmetric positive-definite matrix with entries on the scale of
/// `scale^2` (asset-return covariances for `scale` around a volatility).
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> DMatrix<f64> {
    let s = scale / (dim as f64).sqrt();
    let b = DMatrix::from_fn(dim, dim, |_, _| s * normal(rng));
    let mut a = &b * b.transpose();
    let ridge = 0.05 * scale * scale;
    for l in 0..dim {
        a[(l, l)] += ridge;
    }
    a
}

/// Generic finite-activity jump measure with no built-in symmetry.
pub fn random_measure<R: Rng + ?Sized>(rng: &mut R, dim: usize, jumps: JumpKind) -> LevyMeasure {
    match jumps {
        JumpKind::None => LevyMeasure::zero(dim),
        JumpKind::Atomic { atoms } => {
            let list = (0..atoms)
                .map(|_| Atom {
                    location: DVector::from_fn(dim, |_, _| 0.25 * normal(rng)),
                    mass: 0.05 + 0.35 * rng.random::<f64>(),
                })
                .collect();
            LevyMeasure::atomic(dim, list).expect("random atoms are valid")
        }
        JumpKind::Mixture { components } => {
            let list = (0..components)
                .map(|_| MixtureComponent {
                    intensity: 0.05 + 0.3 * rng.random::<f64>(),
                    mean: DVector::from_fn(dim, |_, _| 0.15 * normal(rng)),
                    covariance: random_spd(rng, dim, 0.12),
                })
                .collect();
            LevyMeasure::gaussian_mixture(dim, list).expect("random components are valid")
        }
    }
}

/// Generic martingale-normalized model with no built-in symmetry.
pub fn random_triplet<R: Rng + ?Sized>(rng: &mut R, dim: usize, jumps: JumpKind) -> LevyTriplet {
    let a = random_spd(rng, dim, 0.25);
    let nu = random_measure(rng, dim, jumps);
    LevyTriplet::with_martingale_drift(a, nu).expect("construction is valid")
}

fn swap_matrix(a: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = a.clone();
    m.swap_rows(i, j);
    m.swap_columns(i, j);
    m
}

/// Jump measure invariant under the swap of coordinates `i`, `j`: every
/// random atom/component is paired with its swapped image at equal weight.
pub fn swap_symmetric_measure<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    i: usize,
    j: usize,
    jumps: JumpKind,
) -> LevyMeasure {
    match random_measure(rng, dim, jumps) {
        LevyMeasure::Atomic { atoms, .. } => {
            let mut list = Vec::with_capacity(2 * atoms.len());
            for atom in atoms {
                let mut loc = atom.location.clone();
                loc.swap_rows(i, j);
                list.push(Atom { location: loc, mass: atom.mass });
                list.push(atom);
            }
            LevyMeasure::atomic(dim, list).expect("symmetrized atoms are valid")
        }
        LevyMeasure::GaussianMixture { components, .. } => {
            let mut list = Vec::with_capacity(2 * components.len());
            for c in components {
                let mut mean = c.mean.clone();
                mean.swap_rows(i, j);
                list.push(MixtureComponent {
                    intensity: c.intensity,
                    mean,
                    covariance: swap_matrix(&c.covariance, i, j),
                });
                list.push(c);
            }
            LevyMeasure::gaussian_mixture(dim, list).expect("symmetrized components are valid")
        }
    }
}

/// Add the smallest diagonal ridge keeping the matrix comfortably positive
/// definite; diagonal shifts preserve the cross-covariance conditions.
fn ensure_pd(a: &mut DMatrix<f64>) {
    let min = sym_eigenvalues(a)[0];
    let floor = 1e-6;
    if min < floor {
        let bump = floor - min;
        for l in 0..a.nrows() {
            a[(l, l)] += bump;
        }
    }
}

/// Impose `a_li - a_lj = (a_ii - a_jj)/2` for the listed rows `l`, keeping
/// each pair sum `a_li + a_lj` fixed.
fn impose_cross_condition(a: &mut DMatrix<f64>, i: usize, j: usize, rows: &[usize]) {
    let d = 0.5 * (a[(i, i)] - a[(j, j)]);
    for &l in rows {
        let s = a[(l, i)] + a[(l, j)];
        let li = 0.5 * (s + d);
        let lj = 0.5 * (s - d);
        a[(l, i)] = li;
        a[(i, l)] = li;
        a[(l, j)] = lj;
        a[(j, l)] = lj;
    }
}

/// Model exchangeable in coordinates `i`, `j`: covariance averaged with its
/// swapped image, symmetric jump measure, martingale drift.
pub fn make_exchangeable<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    i: usize,
    j: usize,
    jumps: JumpKind,
) -> LevyTriplet {
    let a0 = random_spd(rng, dim, 0.25);
    let a = 0.5 * (&a0 + swap_matrix(&a0, i, j));
    let nu = swap_symmetric_measure(rng, dim, i, j, jumps);
    LevyTriplet::with_martingale_drift(a, nu).expect("construction is valid")
}

/// Martingale model that is swap-invariant in `(i, j)` without being
/// exchangeable: generic diagonal, cross condition imposed, jump measure of
/// the form `e^{-(x_i+x_j)/2} nu_sym`.
pub fn make_swap_invariant<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    i: usize,
    j: usize,
    jumps: JumpKind,
) -> LevyTriplet {
    let mut a = random_spd(rng, dim, 0.25);
    let rows: Vec<usize> = (0..dim).filter(|&l| l != i && l != j).collect();
    impose_cross_condition(&mut a, i, j, &rows);
    ensure_pd(&mut a);
    let mut theta = DVector::zeros(dim);
    theta[i] = 0.5;
    theta[j] = 0.5;
    let nu = swap_symmetric_measure(rng, dim, i, j, jumps)
        .exp_tilt(&(-theta))
        .expect("tilt of a finite measure");
    LevyTriplet::with_martingale_drift(a, nu).expect("construction is valid")
}

/// Martingale model of dimension `n_assets + 1` that is swap-invariant in
/// `(i, j)` under the weight `e^{last coordinate}`: cross condition on the
/// asset block, equal covariances against the weight coordinate, and jump
/// measure `e^{-(x_i+x_j)/2 - x_last} nu_sym`.
pub fn make_weighted_swap_invariant<R: Rng + ?Sized>(
    rng: &mut R,
    n_assets: usize,
    i: usize,
    j: usize,
    jumps: JumpKind,
) -> LevyTriplet {
    let dim = n_assets + 1;
    let mut a = random_spd(rng, dim, 0.25);
    let rows: Vec<usize> = (0..n_assets).filter(|&l| l != i && l != j).collect();
    impose_cross_condition(&mut a, i, j, &rows);
    let w = 0.5 * (a[(i, dim - 1)] + a[(j, dim - 1)]);
    for l in [i, j] {
        a[(l, dim - 1)] = w;
        a[(dim - 1, l)] = w;
    }
    ensure_pd(&mut a);
    let mut theta = DVector::zeros(dim);
    theta[i] = 0.5;
    theta[j] = 0.5;
    theta[dim - 1] = 1.0;
    let nu = swap_symmetric_measure(rng, dim, i, j, jumps)
        .exp_tilt(&(-theta))
        .expect("tilt of a finite measure");
    LevyTriplet::with_martingale_drift(a, nu).expect("construction is valid")
}

/// Martingale model that is quasi-invariant in `(i, j)` with the prescribed
/// power once the returned carrying-cost rates `(r_i, r_j)` are applied. For
/// `weighted` models the dimension is `n_assets + 1`.
pub fn make_quasi_invariant<R: Rng + ?Sized>(
    rng: &mut R,
    n_assets: usize,
    i: usize,
    j: usize,
    alpha: f64,
    weighted: bool,
    jumps: JumpKind,
) -> Result<(LevyTriplet, (f64, f64))> {
    let dim = if weighted { n_assets + 1 } else { n_assets };
    let mut a = random_spd(rng, dim, 0.25);
    let rows: Vec<usize> = (0..n_assets).filter(|&l| l != i && l != j).collect();
    impose_cross_condition(&mut a, i, j, &rows);
    ensure_pd(&mut a);
    let mut theta = quasi_weight_vector(dim, i, j, alpha, weighted);
    theta[i] += 0.5;
    theta[j] += 0.5;
    let nu = swap_symmetric_measure(rng, dim, i, j, jumps).exp_tilt(&(-&theta))?;
    let t = LevyTriplet::with_martingale_drift(a.clone(), nu)?;

    // Required rate gap: with a symmetric tilted measure and martingale
    // drift the drift condition reads
    //   r_i - r_j = alpha/2 (a_ii + a_jj - 2 a_ij) - wterm - int (e^{x_i} - e^{x_j}) dnu.
    let s = a[(i, i)] + a[(j, j)] - 2.0 * a[(i, j)];
    let wterm = if weighted { a[(j, dim - 1)] - a[(i, dim - 1)] } else { 0.0 };
    let jump = t.nu().moment(&DVector::zeros(dim), MomentPoly::ExpDiff(i, j))?;
    let gap = 0.5 * alpha * s - wterm - jump;
    Ok((t, (gap, 0.0)))
}

/// Fully exchangeable model: covariance and jump measure averaged over every
/// coordinate permutation.
pub fn make_fully_exchangeable<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    jumps: JumpKind,
) -> LevyTriplet {
    let perms = permutations(dim);
    let a0 = random_spd(rng, dim, 0.25);
    let mut a = DMatrix::zeros(dim, dim);
    for p in &perms {
        a += permute_matrix(&a0, p);
    }
    a /= perms.len() as f64;

    let base = random_measure(rng, dim, jumps);
    let nu = match base {
        LevyMeasure::Atomic { atoms, .. } => {
            let mut list = Vec::with_capacity(atoms.len() * perms.len());
            for atom in &atoms {
                for p in &perms {
                    list.push(Atom {
                        location: permute_vector(&atom.location, p),
                        mass: atom.mass,
                    });
                }
            }
            LevyMeasure::atomic(dim, list).expect("permuted atoms are valid")
        }
        LevyMeasure::GaussianMixture { components, .. } => {
            let mut list = Vec::with_capacity(components.len() * perms.len());
            for c in &components {
                for p in &perms {
                    list.push(MixtureComponent {
                        intensity: c.intensity,
                        mean: permute_vector(&c.mean, p),
                        covariance: permute_matrix(&c.covariance, p),
                    });
                }
            }
            LevyMeasure::gaussian_mixture(dim, list).expect("permuted components are valid")
        }
    };
    LevyTriplet::with_martingale_drift(a, nu).expect("construction is valid")
}

/// Copy with the drift of coordinate `l` offset by `delta`; breaks drift
/// conditions by exactly `|delta|`.
pub fn with_drift_offset(t: &LevyTriplet, l: usize, delta: f64) -> Result<LevyTriplet> {
    let mut gamma = t.gamma().clone();
    gamma[l] += delta;
    LevyTriplet::new(t.a().clone(), t.nu().clone(), gamma)
}

/// Copy with the symmetric covariance entry `(l, k)` offset by `delta`;
/// fails if the result is no longer positive semidefinite.
pub fn with_covariance_offset(
    t: &LevyTriplet,
    l: usize,
    k: usize,
    delta: f64,
) -> Result<LevyTriplet> {
    let mut a = t.a().clone();
    a[(l, k)] += delta;
    if l != k {
        a[(k, l)] += delta;
    }
    LevyTriplet::new(a, t.nu().clone(), t.gamma().clone())
}

fn permutations(dim: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..dim).collect();
    heap_permute(&mut current, dim, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for l in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(l, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

fn permute_vector(v: &DVector<f64>, p: &[usize]) -> DVector<f64> {
    DVector::from_fn(v.len(), |l, _| v[p[l]])
}

fn permute_matrix(a: &DMatrix<f64>, p: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |l, k| a[(p[l], p[k])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi::{check_quasi_swap_invariant, solve_alpha, AlphaSolveOptions};
    use crate::symmetry::{
        check_exchangeable, check_swap_invariant, check_weighted_swap_invariant, STRUCTURAL_TOL,
    };
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const KINDS: [JumpKind; 3] = [
        JumpKind::None,
        JumpKind::Atomic { atoms: 3 },
        JumpKind::Mixture { components: 2 },
    ];

    #[test]
    fn exchangeable_family_passes_and_implies_swap_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2usize, 3, 4] {
            for kind in KINDS {
                let t = make_exchangeable(&mut rng, dim, 0, 1, kind);
                let e = check_exchangeable(&t, 0, 1, STRUCTURAL_TOL).unwrap();
                assert!(e.pass, "dim {dim} {kind:?}: {:?}", e.residuals);
                let s = check_swap_invariant(&t, 0, 1, None, STRUCTURAL_TOL).unwrap();
                assert!(s.pass, "dim {dim} {kind:?}: {:?}", s.residuals);
            }
        }
    }

    #[test]
    fn swap_invariant_family_passes_without_being_exchangeable() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut non_exchangeable = 0;
        for dim in [2usize, 3, 4] {
            for kind in KINDS {
                let t = make_swap_invariant(&mut rng, dim, 0, 1, kind);
                let s = check_swap_invariant(&t, 0, 1, None, STRUCTURAL_TOL).unwrap();
                assert!(s.pass, "dim {dim} {kind:?}: {:?}", s.residuals);
                if !check_exchangeable(&t, 0, 1, STRUCTURAL_TOL).unwrap().pass {
                    non_exchangeable += 1;
                }
            }
        }
        assert!(non_exchangeable > 0, "family should leave exchangeability generically broken");
    }

    #[test]
    fn weighted_family_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n_assets in [2usize, 3] {
            for kind in KINDS {
                let t = make_weighted_swap_invariant(&mut rng, n_assets, 0, 1, kind);
                let rep = check_weighted_swap_invariant(&t, 0, 1, STRUCTURAL_TOL).unwrap();
                assert!(rep.pass, "n {n_assets} {kind:?}: {:?}", rep.residuals);
            }
        }
    }

    #[test]
    fn quasi_family_passes_and_solver_recovers_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for weighted in [false, true] {
            for kind in KINDS {
                let alpha = 0.9;
                let (t, rates) =
                    make_quasi_invariant(&mut rng, 2, 0, 1, alpha, weighted, kind).unwrap();
                let rep = check_quasi_swap_invariant(&t, 0, 1, alpha, rates, weighted, 1e-9)
                    .unwrap();
                assert!(rep.pass, "weighted {weighted} {kind:?}: {:?}", rep.residuals);
                let solved =
                    solve_alpha(&t, 0, 1, rates, weighted, &AlphaSolveOptions::default()).unwrap();
                assert!(
                    (solved - alpha).abs() < 1e-9,
                    "weighted {weighted} {kind:?}: solved {solved}"
                );
            }
        }
    }

    #[test]
    fn drift_perturbation_breaks_the_invariant_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let t = make_swap_invariant(&mut rng, 3, 0, 1, JumpKind::Atomic { atoms: 3 });
        let bad = with_drift_offset(&t, 0, 0.05).unwrap();
        let rep = check_swap_invariant(&bad, 0, 1, None, STRUCTURAL_TOL).unwrap();
        assert!(!rep.pass);
        assert!((rep.residual("drift_condition") - 0.05).abs() < 1e-12);
    }

    #[test]
    fn fully_exchangeable_correlation_respects_the_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for dim in [2usize, 3, 4] {
            for kind in KINDS {
                let t = make_fully_exchangeable(&mut rng, dim, kind);
                for (i, j) in [(0usize, 1usize), (0, dim - 1)] {
                    if i == j {
                        continue;
                    }
                    let e = check_exchangeable(&t, i, j, STRUCTURAL_TOL).unwrap();
                    assert!(e.pass, "dim {dim} {kind:?} pair ({i},{j}): {:?}", e.residuals);
                }
                let sigma = t.covariance().unwrap();
                let rho = sigma[(0, 1)] / (sigma[(0, 0)] * sigma[(1, 1)]).sqrt();
                let bound = -1.0 / (dim as f64 - 1.0);
                assert!(
                    rho >= bound - 1e-12,
                    "dim {dim} {kind:?}: correlation {rho} below bound {bound}"
                );
            }
        }
    }

    #[test]
    fn permutation_generator_is_complete() {
        let perms = permutations(4);
        assert_eq!(perms.len(), 24);
        let mut unique: Vec<Vec<usize>> = perms.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 24);
    }
}
