//! Transmission layer: depolarizing noise, teleportation links and
//! entanglement purification.
//!
//! Two noise knobs are kept apart. `lambda` is the device noise applied
//! while states are prepared and clustered; `p` is the link noise seen while
//! teleporting centroids to the listener.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::qudit::{check_dim, same_dim, DensityMatrix, QuditState};
use crate::{Error, Result, C64};

/// Label attached to reports whenever purification was modelled.
pub const PURIFICATION_MODEL: &str = "simplified-recurrence";

/// Smallest `lambda` keeping the depolarizing map completely positive.
pub fn lambda_min(dim: usize) -> f64 {
    let d = dim as f64;
    -1.0 / (d * d - 1.0)
}

fn check_lambda(lambda: f64, dim: usize) -> Result<()> {
    check_dim(dim)?;
    let min = lambda_min(dim);
    if lambda.is_finite() && lambda >= min && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidChannel { lambda, dim, min })
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// `rho -> lambda rho + (1 - lambda) I / d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepolarizingChannel {
    dim: usize,
    lambda: f64,
}

impl DepolarizingChannel {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        check_lambda(lambda, dim)?;
        Ok(Self { dim, lambda })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        depolarize(rho, self)
    }
}

pub fn depolarize(rho: &DensityMatrix, ch: &DepolarizingChannel) -> Result<DensityMatrix> {
    same_dim(rho.dim(), ch.dim)?;
    Ok(mix_with_identity(rho.entries(), ch.lambda))
}

fn mix_with_identity(m: &DMatrix<C64>, keep: f64) -> DensityMatrix {
    let d = m.nrows();
    let mut out = m.scale(keep);
    let shift = (1.0 - keep) / d as f64;
    for i in 0..d {
        out[(i, i)] += C64::new(shift, 0.0);
    }
    DensityMatrix::from_matrix_unchecked(out)
}

/// Minimal output entropy (bits) of the `d`-dimensional depolarizing channel:
/// one eigenvalue `lambda + (1 - lambda)/d` and `d - 1` copies of
/// `(1 - lambda)/d`.
pub fn min_output_entropy(lambda: f64, dim: usize) -> Result<f64> {
    check_lambda(lambda, dim)?;
    let d = dim as f64;
    let low = (1.0 - lambda) / d;
    let high = lambda + low;
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(high) + (d - 1.0) * term(low))
}

/// Average teleportation fidelity `1 - (d - 1) p / d`.
pub fn avg_teleport_fidelity(p: f64, dim: usize) -> Result<f64> {
    check_probability(p)?;
    check_dim(dim)?;
    let d = dim as f64;
    Ok(1.0 - (d - 1.0) * p / d)
}

/// One round of the recurrence `F -> F^2 / (F^2 + (1 - F)^2)`.
pub fn purify_step(f: f64) -> f64 {
    let good = f * f;
    let bad = (1.0 - f) * (1.0 - f);
    good / (good + bad)
}

/// Number of recurrence rounds needed to lift `fidelity` to `target`.
pub fn purification_rounds(fidelity: f64, target: f64, dim: usize) -> Result<usize> {
    if !(target < 1.0) {
        return Err(Error::InvalidTarget(target));
    }
    if fidelity <= 1.0 / dim as f64 {
        return Err(Error::Unpurifiable { fidelity, dim });
    }
    let mut f = fidelity;
    let mut rounds = 0;
    while f < target {
        // 1/2 is the fixed point; below it the recurrence moves away from 1
        if f <= 0.5 {
            return Err(Error::Unpurifiable { fidelity, dim });
        }
        f = purify_step(f);
        rounds += 1;
    }
    Ok(rounds)
}

/// An entanglement-backed link carrying qudits to the listener.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeleportationLink {
    dim: usize,
    depol_prob: f64,
    current_fidelity: f64,
    pairs_available: usize,
}

impl TeleportationLink {
    pub fn new(dim: usize, depol_prob: f64, pairs_available: usize) -> Result<Self> {
        let current_fidelity = avg_teleport_fidelity(depol_prob, dim)?;
        Ok(Self {
            dim,
            depol_prob,
            current_fidelity,
            pairs_available,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depol_prob(&self) -> f64 {
        self.depol_prob
    }

    pub fn current_fidelity(&self) -> f64 {
        self.current_fidelity
    }

    pub fn pairs_available(&self) -> usize {
        self.pairs_available
    }

    /// Teleports `s`, spending one pair. The output is
    /// `(1 - p)|s><s| + p I / d`.
    pub fn teleport(&mut self, s: &QuditState) -> Result<DensityMatrix> {
        same_dim(s.dim(), self.dim)?;
        if self.pairs_available == 0 {
            return Err(Error::ResourceExhausted);
        }
        self.pairs_available -= 1;
        Ok(mix_with_identity(s.to_density().entries(), 1.0 - self.depol_prob))
    }

    /// Purifies until `target` is reached. Each round pairs up the surviving
    /// pairs and keeps one of every two. Returns the purified link and the
    /// number of pairs consumed.
    pub fn purify(&self, target: f64) -> Result<(TeleportationLink, usize)> {
        if !(target < 1.0) {
            return Err(Error::InvalidTarget(target));
        }
        let f0 = self.current_fidelity;
        if f0 >= target {
            return Ok((self.clone(), 0));
        }
        if f0 <= 1.0 / self.dim as f64 {
            return Err(Error::Unpurifiable {
                fidelity: f0,
                dim: self.dim,
            });
        }
        let mut f = f0;
        let mut pairs = self.pairs_available;
        while f < target {
            if f <= 0.5 {
                return Err(Error::Unpurifiable {
                    fidelity: f0,
                    dim: self.dim,
                });
            }
            if pairs < 2 {
                return Err(Error::PurificationFailed { best: f, target });
            }
            pairs /= 2;
            f = purify_step(f);
        }
        let d = self.dim as f64;
        let link = TeleportationLink {
            dim: self.dim,
            // keeps F = 1 - (d - 1) p / d for the purified pairs
            depol_prob: ((1.0 - f) * d / (d - 1.0)).clamp(0.0, 1.0),
            current_fidelity: f,
            pairs_available: pairs,
        };
        Ok((link, self.pairs_available - pairs))
    }
}

/// Orbital-angular-momentum labels and amplitudes of the entangled pair
/// `sum_l a_l |l>|-l>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntangledPairSpec {
    pub dim: usize,
    /// Modes of the first photon; its partner carries `-l`.
    pub modes: Vec<i64>,
    #[serde(serialize_with = "serialize_complex")]
    pub amplitudes: Vec<C64>,
}

impl EntangledPairSpec {
    pub fn partner(&self, mode: i64) -> i64 {
        -mode
    }

    /// Amplitudes of the joint state over `modes x modes`, indexed
    /// `i * d + j` for first-photon mode `modes[i]` and second `modes[j]`.
    pub fn joint_state(&self) -> Result<QuditState> {
        let d = self.dim;
        let mut amps = vec![C64::new(0.0, 0.0); d * d];
        for (i, &l) in self.modes.iter().enumerate() {
            let j = self
                .modes
                .iter()
                .position(|&m| m == self.partner(l))
                .expect("mode set is closed under negation");
            amps[i * d + j] = self.amplitudes[i];
        }
        QuditState::new(amps)
    }
}

fn serialize_complex<S: serde::Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|a| [a.re, a.im]))
}

/// The `d` smallest-magnitude OAM numbers, skipping `l = 0` for even `d`,
/// with uniform amplitudes.
pub fn make_pair_spec(dim: usize) -> Result<EntangledPairSpec> {
    check_dim(dim)?;
    let half = (dim / 2) as i64;
    let modes: Vec<i64> = if dim % 2 == 1 {
        (-half..=half).collect()
    } else {
        (-half..=half).filter(|&l| l != 0).collect()
    };
    let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(EntangledPairSpec {
        dim,
        modes,
        amplitudes: vec![a; dim],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{fidelity_state_vs_density, ground_state, von_neumann_entropy};
    use proptest::prelude::*;

    fn any_state(d: usize) -> QuditState {
        let v: Vec<C64> = (0..d).map(|i| C64::new(0.3 + i as f64, 0.1 * i as f64 - 0.2)).collect();
        QuditState::normalized(v).unwrap()
    }

    #[test]
    fn depolarize_endpoints() {
        let rho = any_state(3).to_density();
        let id = DepolarizingChannel::new(3, 1.0).unwrap();
        assert_eq!(depolarize(&rho, &id).unwrap().entries(), rho.entries());
        let full = DepolarizingChannel::new(3, 0.0).unwrap();
        let out = depolarize(&rho, &full).unwrap();
        let mm = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((out.entries() - mm.entries()).norm() < 1e-15);
        assert!(matches!(
            DepolarizingChannel::new(2, -0.5),
            Err(Error::InvalidChannel { .. })
        ));
        assert!(DepolarizingChannel::new(2, -1.0 / 3.0).is_ok());
        assert!(DepolarizingChannel::new(2, 1.0 + 1e-9).is_err());
        let ch = DepolarizingChannel::new(2, 0.5).unwrap();
        assert!(depolarize(&rho, &ch).is_err());
    }

    #[test]
    fn entropy_closed_form() {
        for d in 2..8 {
            assert!(min_output_entropy(1.0, d).unwrap().abs() < 1e-15);
        }
        assert!((min_output_entropy(0.0, 4).unwrap() - 2.0).abs() < 1e-15);
        // eigenvalues 0.75 / 0.25 of depolarize(|0><0|) at lambda = 0.5
        let oracle = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((min_output_entropy(0.5, 2).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.811_278_124_459_132_8).abs() < 1e-15);
        assert!(min_output_entropy(-0.5, 2).is_err());
    }

    #[test]
    fn teleport_examples() {
        let s = any_state(4);
        let mut clean = TeleportationLink::new(4, 0.0, 1).unwrap();
        let out = clean.teleport(&s).unwrap();
        assert!((fidelity_state_vs_density(&s, &out).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(clean.pairs_available(), 0);
        assert!(matches!(clean.teleport(&s), Err(Error::ResourceExhausted)));

        let mut l5 = TeleportationLink::new(5, 0.2, 2).unwrap();
        let f5 = fidelity_state_vs_density(&any_state(5), &l5.teleport(&any_state(5)).unwrap()).unwrap();
        assert!((f5 - 0.84).abs() < 1e-12);
        let mut l10 = TeleportationLink::new(10, 0.2, 1).unwrap();
        let f10 = fidelity_state_vs_density(&any_state(10), &l10.teleport(&any_state(10)).unwrap()).unwrap();
        assert!((f10 - 0.82).abs() < 1e-12);
        assert!(l5.teleport(&s).is_err());
    }

    #[test]
    fn average_fidelity() {
        assert_eq!(avg_teleport_fidelity(0.0, 7).unwrap(), 1.0);
        assert!((avg_teleport_fidelity(1.0, 7).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert!((avg_teleport_fidelity(0.2, 5).unwrap() - 0.84).abs() < 1e-12);
        assert!(avg_teleport_fidelity(1.2, 5).is_err());
        assert!(avg_teleport_fidelity(-0.1, 5).is_err());
    }

    #[test]
    fn purification_examples() {
        // F = 0.9 at d = 2 means p = 0.2
        let good = TeleportationLink::new(2, 0.2, 4).unwrap();
        let (same, used) = good.purify(0.85).unwrap();
        assert_eq!(used, 0);
        assert_eq!(same, good);

        assert!((purify_step(0.7) - 0.49 / 0.58).abs() < 1e-15);
        // F = 0.7 at d = 2 means p = 0.6
        let link = TeleportationLink::new(2, 0.6, 8).unwrap();
        let (out, used) = link.purify(0.8).unwrap();
        assert_eq!(used, 4);
        assert_eq!(out.pairs_available(), 4);
        assert!((out.current_fidelity() - 0.844_827_586_206_896_5).abs() < 1e-12);
        assert!((avg_teleport_fidelity(out.depol_prob(), 2).unwrap() - out.current_fidelity()).abs() < 1e-12);

        let half = TeleportationLink::new(2, 1.0, 8).unwrap();
        assert!(matches!(half.purify(0.9), Err(Error::Unpurifiable { .. })));
        // fixed point above 1/d still cannot improve
        let d10 = TeleportationLink::new(10, 5.0 / 9.0, 8).unwrap();
        assert!((d10.current_fidelity() - 0.5).abs() < 1e-12);
        assert!(d10.purify(0.9).is_err());
        assert!(matches!(link.purify(1.0), Err(Error::InvalidTarget(_))));

        let starved = TeleportationLink::new(2, 0.6, 3).unwrap();
        match starved.purify(0.95) {
            Err(Error::PurificationFailed { best, .. }) => assert!(best > 0.7),
            other => panic!("{other:?}"),
        }
        assert_eq!(purification_rounds(0.7, 0.8, 2).unwrap(), 1);
        assert_eq!(purification_rounds(0.9, 0.85, 2).unwrap(), 0);
    }

    #[test]
    fn recurrence_fixed_points() {
        assert_eq!(purify_step(0.5), 0.5);
        assert_eq!(purify_step(1.0), 1.0);
        for i in 1..20 {
            let f = 0.5 + 0.025 * i as f64;
            assert!(purify_step(f) > f);
        }
    }

    #[test]
    fn pair_specs() {
        let p2 = make_pair_spec(2).unwrap();
        assert_eq!(p2.modes, vec![-1, 1]);
        assert!((p2.amplitudes[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(make_pair_spec(3).unwrap().modes, vec![-1, 0, 1]);
        assert_eq!(make_pair_spec(4).unwrap().modes, vec![-2, -1, 1, 2]);
        for d in 2..12 {
            let p = make_pair_spec(d).unwrap();
            assert_eq!(p.modes.len(), d);
            let norm: f64 = p.amplitudes.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(p.modes.iter().all(|l| p.modes.contains(&p.partner(*l))));
            assert!(p.joint_state().is_ok());
        }
        assert!(make_pair_spec(1).is_err());
    }

    #[test]
    fn pair_state_is_maximally_entangled() {
        let d = 4;
        let joint = make_pair_spec(d).unwrap().joint_state().unwrap();
        // reduced state of the first photon: sum_j |a_ij|^2 on the diagonal
        let a = joint.amplitudes();
        for i in 0..d {
            for k in 0..d {
                let rho_ik: C64 = (0..d).map(|j| a[i * d + j] * a[k * d + j].conj()).sum();
                let expect = if i == k { 1.0 / d as f64 } else { 0.0 };
                assert!((rho_ik - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_increases_with_dimension() {
        for lambda in [0.0, 0.25, 0.5, 0.75] {
            let s: Vec<f64> = (2..=16).map(|d| min_output_entropy(lambda, d).unwrap()).collect();
            assert!(s.windows(2).all(|w| w[1] > w[0]));
        }
    }

    proptest! {
        #[test]
        fn closed_form_matches_spectrum(d in 2usize..10, lambda in 0.0f64..=1.0, seed in 0u64..1000) {
            let v: Vec<C64> = (0..d).map(|i| {
                let t = (seed as f64 + 1.0) * (i as f64 + 1.0);
                C64::new(t.sin(), (1.7 * t).cos())
            }).collect();
            let s = QuditState::normalized(v).unwrap();
            let out = depolarize(&s.to_density(), &DepolarizingChannel::new(d, lambda).unwrap()).unwrap();
            prop_assert!((von_neumann_entropy(&out) - min_output_entropy(lambda, d).unwrap()).abs() <= 1e-9);
        }

        #[test]
        fn teleport_fidelity_is_input_independent(d in 2usize..10, p in 0.0f64..=1.0, seed in 0u64..1000) {
            let v: Vec<C64> = (0..d).map(|i| C64::new(((seed + 3) as f64 * (i + 1) as f64).cos(), 0.4)).collect();
            let s = QuditState::normalized(v).unwrap();
            let mut link = TeleportationLink::new(d, p, 1).unwrap();
            let f = fidelity_state_vs_density(&s, &link.teleport(&s).unwrap()).unwrap();
            prop_assert!((f - avg_teleport_fidelity(p, d).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn depolarize_is_trace_preserving(d in 2usize..8, t in 0.0f64..=1.0) {
            let lambda = lambda_min(d) + t * (1.0 - lambda_min(d));
            let out = depolarize(&ground_state(d).unwrap().to_density(), &DepolarizingChannel::new(d, lambda).unwrap()).unwrap();
            prop_assert!((out.trace() - 1.0).abs() <= 1e-12);
            prop_assert!(out.min_eigenvalue() >= -1e-10);
        }
    }
}
