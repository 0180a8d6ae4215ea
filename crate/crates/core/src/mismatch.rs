//! Monte Carlo device mismatch and CMRR statistics.
//!
//! Each device gets an independent Gaussian threshold shift with Pelgrom
//! area scaling, σ_VT = A_VT/sqrt(W L), and a relative k' error. Sample `i`
//! draws from its own ChaCha stream of `seed`, so it can be regenerated in
//! isolation and results do not depend on thread scheduling.

use crate::cards;
use crate::circuits::{design_amplifier, AmplifierSpec, Feedback, Kind, DEFAULT_GM_OVER_ID};
use crate::dcsolve::solve_op;
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::smallsig::{cm_gain_oracle, cmrr_db, dm_gain_oracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSpec {
    /// Pelgrom coefficient A_VT (V·µm).
    pub a_vt: f64,
    /// Relative standard deviation of k'.
    pub sigma_kprime_rel: f64,
    pub samples: usize,
    pub seed: u64,
}

pub const DEFAULT_A_VT: f64 = 1e-3;
pub const DEFAULT_SAMPLES: usize = 100;
/// Runs with more failed samples than this fraction are invalid.
pub const MAX_FAILED_FRACTION: f64 = 0.05;

impl Default for MismatchSpec {
    fn default() -> Self {
        Self {
            a_vt: DEFAULT_A_VT,
            sigma_kprime_rel: 0.0,
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

impl MismatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::domain("at least one Monte Carlo sample is required"));
        }
        if !(self.a_vt >= 0.0 && self.a_vt.is_finite()) || !(self.sigma_kprime_rel >= 0.0 && self.sigma_kprime_rel.is_finite()) {
            return Err(Error::domain("mismatch sigmas must be finite and non-negative"));
        }
        Ok(())
    }

    /// Threshold standard deviation of one device (V).
    pub fn sigma_vt(&self, params: &DeviceParams) -> f64 {
        self.a_vt / (params.width * params.length).sqrt()
    }
}

/// Perturbed copy of `nominal` for sample `index`.
pub fn sample_one(nominal: &[DeviceParams], spec: &MismatchSpec, index: u64) -> Vec<DeviceParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    nominal
        .iter()
        .map(|p| {
            let zv: f64 = StandardNormal.sample(&mut rng);
            let zk: f64 = StandardNormal.sample(&mut rng);
            let mut q = p.clone();
            q.model.vt0 += spec.sigma_vt(p) * zv;
            q.model.kprime *= 1.0 + spec.sigma_kprime_rel * zk;
            q
        })
        .collect()
}

/// `spec.samples` perturbed parameter sets.
pub fn sample(nominal: &[DeviceParams], spec: &MismatchSpec) -> Result<Vec<Vec<DeviceParams>>> {
    spec.validate()?;
    Ok((0..spec.samples as u64).map(|i| sample_one(nominal, spec, i)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmrrStats {
    pub kind: Kind,
    pub length: f64,
    pub mean_db: f64,
    /// Sample standard deviation (n - 1); zero for a single sample.
    pub std_db: f64,
    /// Samples that solved and entered the statistics.
    pub samples: usize,
    pub n_failed: usize,
    pub seed: u64,
    /// False when more than 5% of samples failed.
    pub valid: bool,
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Mean and sample standard deviation. Deviations are taken from the first
/// value, so identical samples give exactly zero spread.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let Some(&x0) = xs.first() else {
        return (f64::NAN, f64::NAN);
    };
    let n = xs.len() as f64;
    let d: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    let md = compensated_sum(d.iter().copied()) / n;
    let var = if xs.len() > 1 {
        compensated_sum(d.iter().map(|v| (v - md) * (v - md))) / (n - 1.0)
    } else {
        0.0
    };
    (x0 + md, var.sqrt())
}

/// Monte Carlo CMRR of a back-gate differential stage at each length, with
/// the default cards and g_m/I_D.
pub fn cmrr_monte_carlo(kind: Kind, lengths: &[f64], spec: &MismatchSpec) -> Result<Vec<CmrrStats>> {
    cmrr_monte_carlo_with(kind, lengths, spec, DEFAULT_GM_OVER_ID, &cards::pair)
}

/// As [`cmrr_monte_carlo`] with caller-chosen g_m/I_D and cards.
pub fn cmrr_monte_carlo_with(
    kind: Kind,
    lengths: &[f64],
    spec: &MismatchSpec,
    gm_over_id: f64,
    cards: &(dyn Fn(f64) -> (DeviceParams, DeviceParams) + Sync),
) -> Result<Vec<CmrrStats>> {
    spec.validate()?;
    if !kind.is_differential() {
        return Err(Error::domain(format!("{} has no common-mode loop", kind.label())));
    }
    lengths
        .iter()
        .map(|&l| {
            let (n, p) = cards(l);
            let d = design_amplifier(&AmplifierSpec::new(kind, Feedback::BackGate, n, p).gm_over_id(gm_over_id))?;
            let t = &d.topology;
            let nominal_op = solve_op(&t.circuit, Some(&d.guess))?;
            let nominal: Vec<DeviceParams> = t.circuit.devices.iter().map(|d| d.params.clone()).collect();
            let results: Vec<Option<f64>> = (0..spec.samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut ti = t.clone();
                    for (dev, q) in ti.circuit.devices.iter_mut().zip(sample_one(&nominal, spec, i)) {
                        dev.params = q;
                    }
                    let op = solve_op(&ti.circuit, Some(&nominal_op.node_voltages)).ok()?;
                    let dm = dm_gain_oracle(&ti, &op).ok()?;
                    let cm = cm_gain_oracle(&ti, &op).ok()?;
                    Some(cmrr_db(dm, cm)).filter(|v| v.is_finite())
                })
                .collect();
            let ok: Vec<f64> = results.iter().flatten().copied().collect();
            let n_failed = results.len() - ok.len();
            let (mean_db, std_db) = mean_std(&ok);
            Ok(CmrrStats {
                kind,
                length: l,
                mean_db,
                std_db,
                samples: ok.len(),
                n_failed,
                seed: spec.seed,
                valid: (n_failed as f64) <= MAX_FAILED_FRACTION * spec.samples as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_nominal() {
        let (n, p) = cards::pair(1.0);
        let spec = MismatchSpec {
            a_vt: 0.0,
            ..Default::default()
        };
        for s in sample(&[n.clone(), p.clone()], &spec).unwrap() {
            assert_eq!(s, vec![n.clone(), p.clone()]);
        }
    }

    #[test]
    fn samples_reproduce_in_isolation() {
        let (n, p) = cards::pair(0.15);
        let spec = MismatchSpec {
            sigma_kprime_rel: 0.01,
            seed: 7,
            samples: 10,
            ..Default::default()
        };
        let all = sample(&[n.clone(), p.clone()], &spec).unwrap();
        assert_eq!(all[6], sample_one(&[n, p], &spec, 6));
        assert_ne!(all[6], all[7]);
    }

    #[test]
    fn threshold_draws_are_centered() {
        let (n, _) = cards::pair(1.0);
        let spec = MismatchSpec {
            seed: 11,
            ..Default::default()
        };
        let count = 100_000u64;
        let sigma = spec.sigma_vt(&n);
        let shifts: Vec<f64> = (0..count).map(|i| sample_one(std::slice::from_ref(&n), &spec, i)[0].model.vt0 - n.model.vt0).collect();
        let (mean, std) = mean_std(&shifts);
        assert!(mean.abs() < 3.0 * sigma / (count as f64).sqrt(), "{mean}");
        assert!((std / sigma - 1.0).abs() < 0.01, "{std} vs {sigma}");
    }

    #[test]
    fn identical_values_have_zero_spread() {
        assert_eq!(mean_std(&[0.1, 0.1, 0.1]), (0.1, 0.0));
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(MismatchSpec { samples: 0, ..Default::default() }.validate().is_err());
        assert!(MismatchSpec { a_vt: -1.0, ..Default::default() }.validate().is_err());
        let spec = MismatchSpec::default();
        assert!(cmrr_monte_carlo(Kind::CcsBg, &[1.0], &spec).is_err());
    }
}
