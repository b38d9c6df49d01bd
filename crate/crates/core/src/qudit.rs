//! Pure and mixed qudit states.
//!
//! A [`QuditState`] is a unit vector in a `d`-dimensional Hilbert space and a
//! [`DensityMatrix`] a Hermitian, positive semidefinite, unit-trace `d x d`
//! operator. Both are immutable once built; every constructor validates its
//! invariants so downstream code can rely on them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::{Error, Result, C64};

/// Tolerance on `|norm^2 - 1|` for pure states.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on Hermiticity and trace for density matrices.
pub const DENSITY_TOL: f64 = 1e-10;
/// Most negative eigenvalue still accepted as numerical drift.
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues below this contribute nothing to the entropy.
const ENTROPY_CUTOFF: f64 = 1e-12;

/// A normalized state vector `sum_i a_i |i>` of a qudit.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    amps: DVector<C64>,
}

impl QuditState {
    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let amps = DVector::from_vec(amplitudes);
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL || !n2.is_finite() {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amps })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let mut amps = DVector::from_vec(amplitudes);
        let n = amps.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        amps.unscale_mut(n);
        Ok(Self { amps })
    }

    /// Normalizes a real amplitude vector.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|k>` of a `dim`-level system.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(Error::DimensionMismatch(k, dim));
        }
        let mut amps = DVector::zeros(dim);
        amps[k] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub(crate) fn from_vector_unchecked(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub(crate) fn vector(&self) -> &DVector<C64> {
        &self.amps
    }

    /// The same state multiplied by the global phase `e^{i theta}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self {
            amps: self.amps.map(|a| a * phase),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuditState) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// The rank-one projector `|s><s|`.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.amps * self.amps.adjoint(),
        }
    }
}

impl Serialize for QuditState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        pairs.serialize(serializer)
    }
}

/// The ground state `|0_d>`.
pub fn ground_state(dim: usize) -> Result<QuditState> {
    QuditState::basis(dim, 0)
}

/// Pure-state fidelity `|<a|b>|^2`.
pub fn fidelity_pure(a: &QuditState, b: &QuditState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `<s| rho |s>` for a pure reference state against a mixed state.
pub fn fidelity_state_vs_density(s: &QuditState, rho: &DensityMatrix) -> Result<f64> {
    same_dim(s.dim(), rho.dim())?;
    let v = s.vector();
    Ok(v.dotc(&(&rho.m * v)).re)
}

/// A validated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates `entries` as a density matrix.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidDensity(format!(
                "not square: {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        check_dim(entries.nrows())?;
        let rho = Self { m: entries };
        let herm = rho.hermiticity_error();
        if herm > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = rho.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidDensity(format!("min eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    /// `I_d / d`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            m: DMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    /// A diagonal state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let d = populations.len();
        let diag = DVector::from_iterator(d, populations.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Largest entry-wise deviation from `rho = rho^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }
}

/// Von Neumann entropy `-sum lambda log2 lambda` in bits.
///
/// Eigenvalues within `[-PSD_TOL, 0]` are clipped to zero before evaluation.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

/// Entropy in bits of a probability spectrum, `0 log 0 = 0`.
pub fn entropy_of_spectrum(spectrum: &[f64]) -> f64 {
    let s: f64 = spectrum
        .iter()
        .map(|&l| l.max(0.0))
        .filter(|&l| l > ENTROPY_CUTOFF)
        .map(|l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// Convex combination `sum_k w_k rho_k`.
pub fn mix(components: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
    let Some((_, first)) = components.first() else {
        return Err(Error::InvalidWeights("empty mixture".into()));
    };
    let d = first.dim();
    let mut total = 0.0;
    let mut acc = DMatrix::<C64>::zeros(d, d);
    for &(w, rho) in components {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidWeights(format!("negative or non-finite weight {w}")));
        }
        same_dim(d, rho.dim())?;
        acc += rho.m.scale(w);
        total += w;
    }
    if (total - 1.0).abs() > DENSITY_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(DensityMatrix { m: acc })
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn plus() -> QuditState {
        QuditState::new(vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap()
    }

    #[test]
    fn ground_state_is_first_basis_vector() {
        assert_eq!(ground_state(2).unwrap().amplitudes(), &[c(1.0), c(0.0)]);
        let g5 = ground_state(5).unwrap();
        assert_eq!(g5.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)]);
        assert!(matches!(ground_state(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn constructor_rejects_bad_norm() {
        assert!(matches!(QuditState::new(vec![c(1.0), c(1.0)]), Err(Error::NotNormalized(_))));
        assert!(QuditState::from_real(&[0.0, 0.0]).is_err());
        assert!(matches!(QuditState::new(vec![c(1.0)]), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn projectors() {
        let p0 = ground_state(2).unwrap().to_density();
        assert_eq!(p0.entries()[(0, 0)], c(1.0));
        assert_eq!(p0.entries()[(1, 1)], c(0.0));
        let pp = plus().to_density();
        for z in pp.entries().iter() {
            assert!((z - c(0.5)).norm() < 1e-15);
        }
        assert!((pp.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_fidelities() {
        let e0 = QuditState::basis(2, 0).unwrap();
        let e1 = QuditState::basis(2, 1).unwrap();
        assert!((fidelity_pure(&plus(), &plus()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity_pure(&e0, &e1).unwrap(), 0.0);
        assert!((fidelity_pure(&plus(), &e0).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity_pure(&e0, &ground_state(3).unwrap()).is_err());
    }

    #[test]
    fn mixed_fidelities() {
        let s = plus();
        assert!((fidelity_state_vs_density(&s, &s.to_density()).unwrap() - 1.0).abs() < 1e-12);
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((fidelity_state_vs_density(&s, &mm).unwrap() - 0.5).abs() < 1e-12);
        let e0 = ground_state(2).unwrap();
        let rho = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        assert!((fidelity_state_vs_density(&e0, &rho).unwrap() - 0.7).abs() < 1e-12);
        assert!(fidelity_state_vs_density(&ground_state(3).unwrap(), &rho).is_err());
    }

    #[test]
    fn entropy_reference_values() {
        assert!(von_neumann_entropy(&plus().to_density()).abs() < 1e-12);
        let mm = DensityMatrix::maximally_mixed(4).unwrap();
        assert!((von_neumann_entropy(&mm) - 2.0).abs() < 1e-12);
        // -(3/4) log2(3/4) - (1/4) log2(1/4), evaluated independently
        let expected = 0.75 * (4.0f64 / 3.0).log2() + 0.25 * 2.0;
        assert!((expected - 0.811_278_124_459_132_8).abs() < 1e-15);
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        assert!((von_neumann_entropy(&rho) - expected).abs() < 1e-12);
    }

    #[test]
    fn density_validation() {
        let not_herm = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(not_herm).is_err());
        assert!(DensityMatrix::diagonal(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.1, -0.1]).is_err());
        // drift inside the PSD tolerance is accepted and clipped in entropy
        let rho = DensityMatrix::diagonal(&[1.0 + 5e-11, -5e-11]).unwrap();
        assert!(von_neumann_entropy(&rho).abs() < 1e-12);
    }

    #[test]
    fn mixing() {
        let e0 = ground_state(2).unwrap().to_density();
        let e1 = QuditState::basis(2, 1).unwrap().to_density();
        assert_eq!(mix(&[(1.0, &e0)]).unwrap(), e0);
        let half = mix(&[(0.5, &e0), (0.5, &e1)]).unwrap();
        assert_eq!(half, DensityMatrix::diagonal(&[0.5, 0.5]).unwrap());
        assert!(matches!(mix(&[(0.45, &e0), (0.45, &e1)]), Err(Error::InvalidWeights(_))));
        assert!(mix(&[(-0.5, &e0), (1.5, &e1)]).is_err());
        let e3 = ground_state(3).unwrap().to_density();
        assert!(mix(&[(0.5, &e0), (0.5, &e3)]).is_err());
    }

    fn arb_state(dim: std::ops::Range<usize>) -> impl Strategy<Value = QuditState> {
        dim.prop_flat_map(|d| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d))
            .prop_filter_map("zero vector", |v| {
                QuditState::normalized(v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).ok()
            })
    }

    fn arb_pair() -> impl Strategy<Value = (QuditState, QuditState)> {
        (2usize..8).prop_flat_map(|d| (arb_state(d..d + 1), arb_state(d..d + 1)))
    }

    proptest! {
        #[test]
        fn constructed_states_are_unit_norm(s in arb_state(2..12)) {
            prop_assert!((s.vector().norm_squared() - 1.0).abs() <= NORM_TOL);
        }

        #[test]
        fn projectors_are_valid_density_matrices(s in arb_state(2..12)) {
            let rho = s.to_density();
            prop_assert!(DensityMatrix::new(rho.entries().clone()).is_ok());
            let ev = rho.eigenvalues();
            prop_assert!((ev[0] - 1.0).abs() < 1e-10);
            prop_assert!(ev[1..].iter().all(|l| l.abs() < 1e-10));
        }

        #[test]
        fn fidelity_symmetric_and_phase_invariant((a, b) in arb_pair(), t1 in 0.0f64..6.3, t2 in 0.0f64..6.3) {
            let f = fidelity_pure(&a, &b).unwrap();
            prop_assert!((f - fidelity_pure(&b, &a).unwrap()).abs() < 1e-12);
            let g = fidelity_pure(&a.with_global_phase(t1), &b.with_global_phase(t2)).unwrap();
            prop_assert!((f - g).abs() < 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        }

        #[test]
        fn mixed_fidelity_matches_pure((a, b) in arb_pair()) {
            let via_density = fidelity_state_vs_density(&a, &b.to_density()).unwrap();
            prop_assert!((via_density - fidelity_pure(&a, &b).unwrap()).abs() <= 1e-10);
        }

        #[test]
        fn entropy_of_orthogonal_mixture_is_shannon(raw in prop::collection::vec(0.0f64..1.0, 2..9)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let d = w.len();
            let projs: Vec<DensityMatrix> = (0..d).map(|k| QuditState::basis(d, k).unwrap().to_density()).collect();
            let comps: Vec<(f64, &DensityMatrix)> = w.iter().copied().zip(projs.iter()).collect();
            let rho = mix(&comps).unwrap();
            let shannon: f64 = w.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
            prop_assert!((von_neumann_entropy(&rho) - shannon).abs() <= 1e-9);
        }
    }
}
