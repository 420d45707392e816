//! System reliability of NMR and MMR as a function of the unit reliability
//! `R`, assuming independent, identically reliable units and perfect voters.
//!
//! Three routes are provided and cross-checked in tests:
//!
//! * closed forms: the binomial tail for NMR and
//!   `(3R²(1−R) + R³) · (1 − (1−R)^(k−3))` for MMR,
//! * [`ReliabilityPolynomial`], whose integer coefficients come from
//!   brute-force enumeration of masked fault patterns,
//! * seeded Monte Carlo sampling of unit failures.
//!
//! # Monte Carlo streams
//!
//! Trials are cut into fixed blocks of [`MC_BLOCK`]. Block `i` draws from
//! ChaCha8 seeded with `seed` (via `seed_from_u64`) on stream `i`, and each
//! unit of each trial consumes one `u64` compared against `(1 − R) · 2^64`
//! (rand's `Bernoulli`). Blocks are independent of how they are scheduled,
//! so the estimate depends only on `(scheme, R, trials, seed)`.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fault_injection::{masked_counts_by_cardinality, masks, FaultModel};
use crate::voters::{RedundancyScheme, SchemeKind};

/// Trials per Monte Carlo block (one RNG stream each).
pub const MC_BLOCK: u64 = 1 << 16;

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1)) as u64
}

fn check_probability(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("reliability {r} is outside [0, 1]")));
    }
    Ok(())
}

/// `R_sys(R) = Σ_f c_f · R^(U−f) · (1−R)^f`, where `c_f` counts the masked
/// patterns with `f` faulty units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReliabilityPolynomial {
    unit_count: usize,
    coefficients: Vec<u64>,
}

impl ReliabilityPolynomial {
    pub fn from_counts(coefficients: Vec<u64>) -> Result<Self> {
        let units = coefficients
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidParameter("empty coefficient list".into()))?;
        if coefficients[0] != 1 {
            return Err(Error::InvalidParameter("the fault-free pattern must be masked".into()));
        }
        for (f, &c) in coefficients.iter().enumerate() {
            let limit = binomial(units as u64, f as u64);
            if c > limit {
                return Err(Error::InvalidParameter(format!(
                    "coefficient {c} at f={f} exceeds C({units},{f}) = {limit}"
                )));
            }
        }
        Ok(ReliabilityPolynomial {
            unit_count: units,
            coefficients,
        })
    }

    pub fn unit_count(&self) -> usize {
        self.unit_count
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        let u = self.unit_count as i32;
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(f, &c)| c as f64 * r.powi(u - f as i32) * (1.0 - r).powi(f as i32))
            .sum()
    }
}

/// Probability that at least `(n + 1) / 2` of `n` units work.
pub fn nmr_reliability(n: usize, r: f64) -> Result<f64> {
    RedundancyScheme::nmr(n)?;
    check_probability(r)?;
    let n32 = n as i32;
    Ok((n.div_ceil(2)..=n)
        .map(|i| binomial(n as u64, i as u64) as f64 * r.powi(i as i32) * (1.0 - r).powi(n32 - i as i32))
        .sum())
}

/// 2-of-3 on the majority cluster times 1-of-(k−3) on the minority cluster.
pub fn mmr_reliability(k: usize, r: f64) -> Result<f64> {
    RedundancyScheme::mmr(k)?;
    check_probability(r)?;
    let majority = 3.0 * r * r * (1.0 - r) + r.powi(3);
    let minority = 1.0 - (1.0 - r).powi(k as i32 - 3);
    Ok(majority * minority)
}

pub fn closed_form_reliability(scheme: RedundancyScheme, r: f64) -> Result<f64> {
    match scheme.kind() {
        SchemeKind::Nmr => nmr_reliability(scheme.unit_count(), r),
        SchemeKind::Mmr => mmr_reliability(scheme.unit_count(), r),
    }
}

/// Reliability polynomial from brute-force enumeration under inversion
/// faults, independent of the closed forms.
pub fn scheme_polynomial(scheme: RedundancyScheme) -> Result<ReliabilityPolynomial> {
    ReliabilityPolynomial::from_counts(masked_counts_by_cardinality(scheme, FaultModel::Inversion)?)
}

/// Multiplies two polynomials written in the `R^i (1−R)^(U−i)` basis, each
/// given as coefficients indexed by the number of working units `i`.
fn basis_product(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Expands the MMR closed form into integer coefficients indexed by the
/// number of faulty units.
pub fn mmr_closed_form_coefficients(k: usize) -> Result<Vec<u64>> {
    RedundancyScheme::mmr(k)?;
    let m = k as u64 - 3;
    // 3R²(1−R) + R³ over three units, indexed by working units.
    let majority = [0, 0, 3, 1];
    // 1 − (1−R)^m: every working-unit count except zero.
    let minority: Vec<u64> = (0..=m).map(|i| if i == 0 { 0 } else { binomial(m, i) }).collect();
    let mut by_working = basis_product(&majority, &minority);
    by_working.reverse();
    Ok(by_working)
}

/// Binomial-tail coefficients of NMR indexed by the number of faulty units.
pub fn nmr_closed_form_coefficients(n: usize) -> Result<Vec<u64>> {
    RedundancyScheme::nmr(n)?;
    Ok((0..=n)
        .map(|f| {
            if f <= (n - 1) / 2 {
                binomial(n as u64, f as u64)
            } else {
                0
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub masked: u64,
    pub trials: u64,
    /// `sqrt(p̂ (1 − p̂) / trials)`.
    pub std_error: f64,
    pub seed: u64,
}

/// Draws every unit faulty with probability `1 − R` per trial and counts
/// the trials whose fault pattern is masked under inversion faults.
pub fn monte_carlo_reliability(scheme: RedundancyScheme, r: f64, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    check_probability(r)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least one trial".into()));
    }
    let fail = Bernoulli::new(1.0 - r).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let units = scheme.unit_count();
    let blocks = trials.div_ceil(MC_BLOCK);
    let masked: u64 = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let n = MC_BLOCK.min(trials - block * MC_BLOCK);
            let mut masked = 0u64;
            for _ in 0..n {
                let mut faulty = 0u64;
                for u in 0..units {
                    if fail.sample(&mut rng) {
                        faulty |= 1 << u;
                    }
                }
                masked += u64::from(masks(scheme, FaultModel::Inversion, faulty));
            }
            masked
        })
        .sum();
    let p = masked as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        estimate: p,
        masked,
        trials,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        seed,
    })
}

/// `steps` evenly spaced points from `r_min` to `r_max`, both included.
pub fn uniform_grid(r_min: f64, r_max: f64, steps: usize) -> Result<Vec<f64>> {
    check_probability(r_min)?;
    check_probability(r_max)?;
    if r_min > r_max {
        return Err(Error::InvalidParameter(format!("r_min {r_min} exceeds r_max {r_max}")));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter("a grid needs at least 2 steps".into()));
    }
    let span = r_max - r_min;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                r_max
            } else {
                r_min + span * i as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaPoint {
    pub r: f64,
    pub nmr: f64,
    pub mmr: f64,
    /// `100 · (R_NMR − R_MMR) / R_NMR`, zero where both vanish.
    pub percent_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDelta {
    pub nmr: RedundancyScheme,
    pub mmr: RedundancyScheme,
    pub mean_percent_delta: f64,
    pub series: Vec<DeltaPoint>,
}

/// Mean relative reliability shortfall of each MMR scheme against its NMR
/// partner over a uniform grid of unit reliabilities.
pub fn reliability_delta_sweep(
    pairs: &[(RedundancyScheme, RedundancyScheme)],
    r_min: f64,
    r_max: f64,
    steps: usize,
) -> Result<Vec<PairDelta>> {
    let grid = uniform_grid(r_min, r_max, steps)?;
    pairs
        .iter()
        .map(|&(nmr, mmr)| {
            if nmr.kind() != SchemeKind::Nmr || mmr.kind() != SchemeKind::Mmr {
                return Err(Error::InvalidParameter(format!(
                    "pair ({nmr}, {mmr}) must be an NMR scheme followed by an MMR scheme"
                )));
            }
            let series = grid
                .iter()
                .map(|&r| {
                    let a = closed_form_reliability(nmr, r)?;
                    let b = closed_form_reliability(mmr, r)?;
                    let percent_delta = if a == 0.0 { 0.0 } else { 100.0 * (a - b) / a };
                    Ok(DeltaPoint {
                        r,
                        nmr: a,
                        mmr: b,
                        percent_delta,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mean_percent_delta = series.iter().map(|p| p.percent_delta).sum::<f64>() / series.len() as f64;
            Ok(PairDelta {
                nmr,
                mmr,
                mean_percent_delta,
                series,
            })
        })
        .collect()
}
