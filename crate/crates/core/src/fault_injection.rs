//! Unit-level fault injection: corrupting replica outputs, deciding whether
//! a redundancy scheme masks a fault pattern, and brute-force enumeration of
//! all fault patterns.
//!
//! A faulty unit corrupts its whole output word. Behavioral masking uses a
//! single-bit word and requires the vote to be right for both logic values;
//! gate-level masking requires the system outputs to match the fault-free
//! unit on every checked input vector.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function_units::{exhaustive_sweep, unpack, DEFAULT_INPUT_CAP};
use crate::netlist::{Corruption, NetCorruption, Netlist};
use crate::reliability::binomial;
use crate::voters::{build_redundant_system, unit_mask, RedundancyScheme, MAX_UNITS};

/// Default ceiling on the unit count for `2^U` pattern enumeration.
pub const DEFAULT_UNIT_CAP: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FaultModel {
    StuckAt0,
    StuckAt1,
    #[default]
    Inversion,
}

impl FaultModel {
    pub const ALL: [FaultModel; 3] = [FaultModel::StuckAt0, FaultModel::StuckAt1, FaultModel::Inversion];

    pub fn corruption(self) -> Corruption {
        match self {
            FaultModel::StuckAt0 => Corruption::Force0,
            FaultModel::StuckAt1 => Corruption::Force1,
            FaultModel::Inversion => Corruption::Invert,
        }
    }

    /// Corrupts the units selected by `faulty` in a word holding one bit per unit.
    #[inline]
    fn corrupt_mask(self, outputs: u64, faulty: u64) -> u64 {
        match self {
            FaultModel::StuckAt0 => outputs & !faulty,
            FaultModel::StuckAt1 => outputs | faulty,
            FaultModel::Inversion => outputs ^ faulty,
        }
    }

    pub fn apply_bit(self, bit: bool) -> bool {
        match self {
            FaultModel::StuckAt0 => false,
            FaultModel::StuckAt1 => true,
            FaultModel::Inversion => !bit,
        }
    }
}

impl fmt::Display for FaultModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultModel::StuckAt0 => "sa0",
            FaultModel::StuckAt1 => "sa1",
            FaultModel::Inversion => "inversion",
        })
    }
}

impl FromStr for FaultModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inversion" => Ok(FaultModel::Inversion),
            "sa0" => Ok(FaultModel::StuckAt0),
            "sa1" => Ok(FaultModel::StuckAt1),
            other => Err(Error::InvalidParameter(format!(
                "unknown fault model `{other}` (expected inversion, sa0 or sa1)"
            ))),
        }
    }
}

/// Set of faulty units, 1-based. Unit `i` is bit `i - 1` of the mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FaultPattern {
    mask: u64,
}

impl FaultPattern {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i == 0 || i > MAX_UNITS {
                return Err(Error::InvalidPattern(format!(
                    "unit index {i} is outside 1..={MAX_UNITS}"
                )));
            }
            let bit = 1u64 << (i - 1);
            if mask & bit != 0 {
                return Err(Error::InvalidPattern(format!("unit {i} listed twice")));
            }
            mask |= bit;
        }
        Ok(FaultPattern { mask })
    }

    pub(crate) fn from_mask(mask: u64) -> Self {
        FaultPattern { mask }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn cardinality(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn contains(&self, unit: usize) -> bool {
        (1..=MAX_UNITS).contains(&unit) && (self.mask >> (unit - 1)) & 1 == 1
    }

    pub fn indices(&self) -> Vec<usize> {
        (1..=MAX_UNITS).filter(|&i| self.contains(i)).collect()
    }

    /// Errors unless every index is within `1..=units`.
    pub fn check_units(&self, units: usize) -> Result<()> {
        if self.mask & !unit_mask(units) != 0 {
            let bad = self.indices().into_iter().find(|&i| i > units).unwrap();
            return Err(Error::InvalidPattern(format!(
                "unit index {bad} is outside 1..={units}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for FaultPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for FaultPattern {
    type Err = Error;

    /// Comma-separated 1-based unit indices; the empty string is no faults.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let indices = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPattern(format!("`{t}` is not a unit index")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(&indices)
    }
}

/// Applies `model` to the output words of the faulty units.
pub fn apply_faults(correct: &[Vec<bool>], pattern: FaultPattern, model: FaultModel) -> Result<Vec<Vec<bool>>> {
    pattern.check_units(correct.len())?;
    Ok(correct
        .iter()
        .enumerate()
        .map(|(u, word)| {
            if pattern.contains(u + 1) {
                word.iter().map(|&b| model.apply_bit(b)).collect()
            } else {
                word.clone()
            }
        })
        .collect())
}

/// Behavioral masking for a pattern given as a unit mask.
#[inline]
pub(crate) fn masks(scheme: RedundancyScheme, model: FaultModel, faulty: u64) -> bool {
    let all = unit_mask(scheme.unit_count());
    [0u64, all]
        .into_iter()
        .all(|correct| scheme.vote_mask(model.corrupt_mask(correct, faulty)) == (correct != 0))
}

pub fn is_masked(scheme: RedundancyScheme, pattern: FaultPattern, model: FaultModel) -> Result<bool> {
    pattern.check_units(scheme.unit_count())?;
    Ok(masks(scheme, model, pattern.mask()))
}

pub fn masked_counts_by_cardinality(scheme: RedundancyScheme, model: FaultModel) -> Result<Vec<u64>> {
    masked_counts_by_cardinality_with_cap(scheme, model, DEFAULT_UNIT_CAP)
}

/// `c[f]` is the number of masked patterns with exactly `f` faulty units.
pub fn masked_counts_by_cardinality_with_cap(
    scheme: RedundancyScheme,
    model: FaultModel,
    cap: usize,
) -> Result<Vec<u64>> {
    let units = scheme.unit_count();
    if units > cap {
        return Err(Error::TooLarge(format!(
            "{scheme} has {units} units, above the enumeration cap of {cap}; use Monte Carlo sampling instead"
        )));
    }
    const CHUNK: u64 = 1 << 12;
    let patterns = 1u64 << units;
    let chunks = patterns.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; units + 1];
            for mask in c * CHUNK..((c + 1) * CHUNK).min(patterns) {
                if masks(scheme, model, mask) {
                    counts[mask.count_ones() as usize] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; units + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

/// Best-placement maximum: the largest `f` for which some pattern of `f`
/// faulty units is masked.
pub fn max_tolerable_faults(scheme: RedundancyScheme, model: FaultModel) -> Result<usize> {
    let counts = masked_counts_by_cardinality(scheme, model)?;
    Ok(max_from_counts(&counts))
}

/// Any-placement guarantee: the largest `f` for which every pattern of at
/// most `f` faulty units is masked.
pub fn guaranteed_tolerance(scheme: RedundancyScheme, model: FaultModel) -> Result<usize> {
    let counts = masked_counts_by_cardinality(scheme, model)?;
    Ok(guaranteed_from_counts(&counts))
}

pub fn max_from_counts(counts: &[u64]) -> usize {
    counts.iter().rposition(|&c| c > 0).unwrap_or(0)
}

pub fn guaranteed_from_counts(counts: &[u64]) -> usize {
    let units = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .take_while(|&(f, &c)| c == binomial(units as u64, f as u64))
        .last()
        .map_or(0, |(f, _)| f)
}

/// Random input vectors to check when a unit is too wide to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskingReport {
    pub masked: bool,
    pub vectors_checked: u64,
    pub exhaustive: bool,
    /// Exhaustive runs report the lexicographically smallest failing vector,
    /// sampled runs the first one drawn.
    pub failing_vector: Option<Vec<bool>>,
}

/// Builds the redundant system around `unit`, corrupts the output words of
/// the faulty replicas and compares the system outputs with the fault-free
/// unit. Units wider than [`DEFAULT_INPUT_CAP`] inputs require `sampling`.
pub fn gate_level_masking_check(
    unit: &Netlist,
    scheme: RedundancyScheme,
    pattern: FaultPattern,
    model: FaultModel,
    sampling: Option<Sampling>,
) -> Result<MaskingReport> {
    gate_level_masking_check_with_cap(unit, scheme, pattern, model, sampling, DEFAULT_INPUT_CAP)
}

pub fn gate_level_masking_check_with_cap(
    unit: &Netlist,
    scheme: RedundancyScheme,
    pattern: FaultPattern,
    model: FaultModel,
    sampling: Option<Sampling>,
    cap: usize,
) -> Result<MaskingReport> {
    pattern.check_units(scheme.unit_count())?;
    let n = unit.input_count();
    let exhaustive = n <= cap;
    if !exhaustive && sampling.is_none() {
        return Err(Error::TooLarge(format!(
            "unit has {n} inputs, above the exhaustive cap of {cap}; provide a sample size and seed"
        )));
    }

    let system = build_redundant_system(unit, scheme)?;
    let reference = unit.compile()?;
    let faulty = system.netlist.compile()?;
    let corruptions: Vec<NetCorruption> = pattern
        .indices()
        .into_iter()
        .flat_map(|u| system.replica_outputs[u - 1].iter().copied())
        .map(|net| NetCorruption {
            net,
            corruption: model.corruption(),
        })
        .collect();
    let overlay = faulty.overlay(&corruptions);

    // Returns the lanes on which the faulty system disagrees with the unit.
    let compare = |bufs: &mut [Vec<u64>; 4], inputs: &[u64]| -> u64 {
        let [v1, want, v2, got] = bufs;
        reference.run(inputs, None, v1, want).expect("arity matches");
        faulty.run(inputs, overlay.as_deref(), v2, got).expect("arity matches");
        want.iter().zip(got.iter()).fold(0, |acc, (w, g)| acc | (w ^ g))
    };

    if exhaustive {
        let failing = exhaustive_sweep(n, <[Vec<u64>; 4]>::default, |bufs, _, inputs| compare(bufs, inputs));
        return Ok(MaskingReport {
            masked: failing.is_none(),
            vectors_checked: 1u64 << n,
            exhaustive: true,
            failing_vector: failing.map(|v| unpack(v, n)),
        });
    }

    let Sampling { samples, seed } = sampling.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bufs = <[Vec<u64>; 4]>::default();
    let mut inputs = vec![0u64; n];
    let mut remaining = samples;
    while remaining > 0 {
        inputs.iter_mut().for_each(|w| *w = rng.random());
        let live = if remaining >= 64 { !0 } else { (1u64 << remaining) - 1 };
        let bad = compare(&mut bufs, &inputs) & live;
        if bad != 0 {
            let lane = bad.trailing_zeros();
            return Ok(MaskingReport {
                masked: false,
                vectors_checked: samples - remaining + u64::from(lane) + 1,
                exhaustive: false,
                failing_vector: Some(inputs.iter().map(|w| (w >> lane) & 1 == 1).collect()),
            });
        }
        remaining = remaining.saturating_sub(64);
    }
    Ok(MaskingReport {
        masked: true,
        vectors_checked: samples,
        exhaustive: false,
        failing_vector: None,
    })
}

/// Every pattern over `units` units with its mask, in mask order.
pub fn all_patterns(units: usize) -> impl Iterator<Item = FaultPattern> {
    (0..(1u64 << units)).map(FaultPattern::from_mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voters::{vote_mmr, vote_nmr, SchemeKind};

    fn nmr(n: usize) -> RedundancyScheme {
        RedundancyScheme::nmr(n).unwrap()
    }

    fn mmr(k: usize) -> RedundancyScheme {
        RedundancyScheme::mmr(k).unwrap()
    }

    fn pat(indices: &[usize]) -> FaultPattern {
        FaultPattern::from_indices(indices).unwrap()
    }

    #[test]
    fn apply_faults_examples() {
        let ones = vec![vec![true]; 5];
        let flat = |w: Vec<Vec<bool>>| w.into_iter().map(|x| u8::from(x[0])).collect::<Vec<_>>();
        for model in FaultModel::ALL {
            assert_eq!(
                flat(apply_faults(&ones, FaultPattern::empty(), model).unwrap()),
                [1, 1, 1, 1, 1]
            );
        }
        assert_eq!(
            flat(apply_faults(&ones, pat(&[2]), FaultModel::Inversion).unwrap()),
            [1, 0, 1, 1, 1]
        );
        assert_eq!(
            flat(apply_faults(&ones, pat(&[4, 5]), FaultModel::StuckAt0).unwrap()),
            [1, 1, 1, 0, 0]
        );
        assert!(matches!(
            apply_faults(&ones, pat(&[6]), FaultModel::Inversion),
            Err(Error::InvalidPattern(_))
        ));
    }

    #[test]
    fn inversion_flips_every_bit() {
        let word = vec![true, false, false, true];
        let out = apply_faults(std::slice::from_ref(&word), pat(&[1]), FaultModel::Inversion).unwrap();
        assert!(out[0].iter().zip(&word).all(|(a, b)| a != b));
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!("1,4".parse::<FaultPattern>().unwrap().indices(), vec![1, 4]);
        assert_eq!(" 4 , 1 ".parse::<FaultPattern>().unwrap().indices(), vec![1, 4]);
        assert_eq!("".parse::<FaultPattern>().unwrap(), FaultPattern::empty());
        for bad in ["0", "1,1", "a", "1,,2", "65"] {
            assert!(
                matches!(bad.parse::<FaultPattern>(), Err(Error::InvalidPattern(_))),
                "{bad}"
            );
        }
        assert_eq!(pat(&[5, 2]).to_string(), "2,5");
    }

    #[test]
    fn model_parsing() {
        for m in FaultModel::ALL {
            assert_eq!(m.to_string().parse::<FaultModel>().unwrap(), m);
        }
        assert!("stuck".parse::<FaultModel>().is_err());
    }

    #[test]
    fn is_masked_examples() {
        let inv = FaultModel::Inversion;
        assert!(is_masked(nmr(5), pat(&[1, 2]), inv).unwrap());
        assert!(is_masked(mmr(5), pat(&[1, 4]), inv).unwrap());
        assert!(!is_masked(mmr(5), pat(&[1, 2]), inv).unwrap());
        assert!(matches!(
            is_masked(mmr(5), pat(&[6]), inv),
            Err(Error::InvalidPattern(_))
        ));
    }

    /// Reference predicate built from the slice-based voters and
    /// `apply_faults`, sharing no code with the mask fast path.
    fn is_masked_reference(scheme: RedundancyScheme, pattern: FaultPattern, model: FaultModel) -> bool {
        [false, true].into_iter().all(|v| {
            let words = apply_faults(&vec![vec![v]; scheme.unit_count()], pattern, model).unwrap();
            let bits: Vec<bool> = words.into_iter().map(|w| w[0]).collect();
            let out = match scheme.kind() {
                SchemeKind::Nmr => vote_nmr(&bits).unwrap(),
                SchemeKind::Mmr => vote_mmr(&bits).unwrap().mo,
            };
            out == v
        })
    }

    #[test]
    fn fast_path_matches_reference() {
        for scheme in [nmr(3), nmr(5), nmr(7), mmr(5), mmr(6), mmr(7), mmr(8)] {
            for model in FaultModel::ALL {
                for p in all_patterns(scheme.unit_count()) {
                    assert_eq!(
                        is_masked(scheme, p, model).unwrap(),
                        is_masked_reference(scheme, p, model),
                        "{scheme} {p} {model}"
                    );
                }
            }
        }
    }

    #[test]
    fn mmr_counts_match_closed_form_coefficients() {
        let inv = FaultModel::Inversion;
        assert_eq!(masked_counts_by_cardinality(mmr(5), inv).unwrap(), [1, 5, 6, 0, 0, 0]);
        assert_eq!(
            masked_counts_by_cardinality(mmr(6), inv).unwrap(),
            [1, 6, 12, 9, 0, 0, 0]
        );
        assert_eq!(
            masked_counts_by_cardinality(mmr(7), inv).unwrap(),
            [1, 7, 18, 22, 12, 0, 0, 0]
        );
    }

    #[test]
    fn nmr_counts_are_binomial_up_to_tolerance() {
        for n in [3usize, 5, 7, 9, 11] {
            let counts = masked_counts_by_cardinality(nmr(n), FaultModel::Inversion).unwrap();
            for (f, &c) in counts.iter().enumerate() {
                let expected = if f <= (n - 1) / 2 {
                    binomial(n as u64, f as u64)
                } else {
                    0
                };
                assert_eq!(c, expected, "n={n} f={f}");
            }
        }
    }

    #[test]
    fn tolerance_numbers() {
        let inv = FaultModel::Inversion;
        for (k, t) in [(5, 2), (6, 3), (7, 4)] {
            assert_eq!(max_tolerable_faults(mmr(k), inv).unwrap(), t);
            assert_eq!(guaranteed_tolerance(mmr(k), inv).unwrap(), 1);
        }
        for (n, t) in [(3, 1), (5, 2), (7, 3), (9, 4)] {
            assert_eq!(max_tolerable_faults(nmr(n), inv).unwrap(), t);
            assert_eq!(guaranteed_tolerance(nmr(n), inv).unwrap(), t);
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            masked_counts_by_cardinality_with_cap(mmr(7), FaultModel::Inversion, 6),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            max_tolerable_faults(nmr(21), FaultModel::Inversion),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn mmr_masking_is_the_cluster_conditions() {
        for k in 5..=12 {
            let scheme = mmr(k);
            for p in all_patterns(k) {
                let majority_faults = (p.mask() & 0b111).count_ones();
                let minority_faults = (p.mask() >> 3).count_ones() as usize;
                let expected = majority_faults <= 1 && minority_faults <= k - 4;
                assert_eq!(
                    is_masked(scheme, p, FaultModel::Inversion).unwrap(),
                    expected,
                    "k={k} {p}"
                );
            }
        }
    }

    #[test]
    fn nmr_masking_is_monotone() {
        for n in [3, 5, 7, 9] {
            let scheme = nmr(n);
            for p in all_patterns(n) {
                if is_masked(scheme, p, FaultModel::Inversion).unwrap() {
                    continue;
                }
                for extra in 0..n {
                    let bigger = FaultPattern::from_mask(p.mask() | 1 << extra);
                    assert!(!is_masked(scheme, bigger, FaultModel::Inversion).unwrap());
                }
            }
        }
    }

    #[test]
    fn stuck_at_is_no_worse_than_inversion() {
        for scheme in [nmr(3), nmr(5), nmr(7), nmr(9), mmr(5), mmr(6), mmr(7), mmr(9)] {
            for p in all_patterns(scheme.unit_count()) {
                if is_masked(scheme, p, FaultModel::Inversion).unwrap() {
                    assert!(is_masked(scheme, p, FaultModel::StuckAt0).unwrap());
                    assert!(is_masked(scheme, p, FaultModel::StuckAt1).unwrap());
                }
            }
        }
    }

    #[test]
    fn counts_helpers() {
        assert_eq!(max_from_counts(&[1, 5, 6, 0, 0, 0]), 2);
        assert_eq!(guaranteed_from_counts(&[1, 5, 6, 0, 0, 0]), 1);
        assert_eq!(guaranteed_from_counts(&[1, 3, 0, 0]), 1);
        assert_eq!(guaranteed_from_counts(&[1, 1, 0]), 0);
    }
}
