//! Masked Hamming matching and the accept/reject decision.

use serde::Serialize;

use super::{IrisCode, IrisError};

/// Accept threshold: a comparison passes strictly below this distance.
pub const DECISION_THRESHOLD: f64 = 0.36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Pass,
    Fail,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::Pass => write!(f, "PASS"),
            Decision::Fail => write!(f, "FAIL"),
        }
    }
}

// Fractional disagreement over the joint mask at one relative shift.
fn masked_hd(a: &IrisCode, b: &IrisCode) -> Option<f64> {
    let mut joint = 0usize;
    let mut diff = 0usize;
    for i in 0..a.len() {
        if a.mask[i] && b.mask[i] {
            joint += 1;
            if a.bits[i] != b.bits[i] {
                diff += 1;
            }
        }
    }
    (joint > 0).then(|| diff as f64 / joint as f64)
}

/// Minimum masked Hamming distance over cyclic angular shifts in
/// `[-max_shift, max_shift]` (whole lattice columns, bits and masks
/// together), with its best shift. Ties prefer the smaller `|shift|`, then
/// the negative one.
pub fn hamming(a: &IrisCode, b: &IrisCode, max_shift: usize) -> Result<(f64, isize), IrisError> {
    if a.len() != b.len() || !a.same_layout(b) {
        return Err(IrisError::LatticeMismatch(format!(
            "code layouts differ: {}x{}x{} vs {}x{}x{}",
            a.wavelengths, a.radial_sites, a.angular_sites, b.wavelengths, b.radial_sites, b.angular_sites
        )));
    }
    let mut best: Option<(f64, isize)> = None;
    // Visit shifts in tie-break order: 0, -1, +1, -2, +2, ... and accept
    // only strict improvements.
    let shifts = std::iter::once(0isize).chain((1..=max_shift as isize).flat_map(|s| [-s, s]));
    for s in shifts {
        if let Some(hd) = masked_hd(a, &b.shifted(s)) {
            if best.map_or(true, |(bhd, _)| hd < bhd) {
                best = Some((hd, s));
            }
        }
    }
    best.ok_or(IrisError::EmptyJointMask)
}

/// Strict threshold test: passes iff `hd < 0.36`.
pub fn decide(hd: f64) -> Result<Decision, IrisError> {
    if !(0.0..=1.0).contains(&hd) {
        return Err(IrisError::OutOfRange(hd));
    }
    Ok(if hd < DECISION_THRESHOLD {
        Decision::Pass
    } else {
        Decision::Fail
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy_code(bits: &[bool], mask: &[bool], angular_sites: usize) -> IrisCode {
        assert_eq!(bits.len() % (2 * angular_sites), 0);
        IrisCode {
            bits: bits.to_vec(),
            mask: mask.to_vec(),
            wavelengths: 1,
            radial_sites: bits.len() / (2 * angular_sites),
            angular_sites,
        }
    }

    fn random_code(seed: u64, angular_sites: usize, radial_sites: usize) -> IrisCode {
        let n = 2 * angular_sites * radial_sites;
        let mut state = seed;
        let mut draw = |density: u64| -> Vec<bool> {
            (0..n)
                .map(|_| crate::sampling::splitmix64(&mut state) % 100 < density)
                .collect()
        };
        IrisCode {
            bits: draw(50),
            mask: draw(80),
            wavelengths: 1,
            radial_sites,
            angular_sites,
        }
    }

    #[test]
    fn identical_codes_match_at_zero() {
        let a = random_code(5, 8, 4);
        let full = IrisCode {
            mask: vec![true; a.len()],
            ..a.clone()
        };
        let (hd, shift) = hamming(&full, &full, 4).unwrap();
        assert_eq!(hd, 0.0);
        assert_eq!(shift, 0);
    }

    #[test]
    fn complement_is_distance_one() {
        let a = random_code(6, 8, 4);
        let full = IrisCode {
            mask: vec![true; a.len()],
            ..a.clone()
        };
        let not = IrisCode {
            bits: full.bits.iter().map(|b| !b).collect(),
            ..full.clone()
        };
        let (hd, _) = hamming(&full, &not, 0).unwrap();
        assert_eq!(hd, 1.0);
    }

    #[test]
    fn empty_joint_mask_is_an_error() {
        let a = toy_code(&[true; 16], &[false; 16], 8);
        assert!(matches!(hamming(&a, &a, 3), Err(IrisError::EmptyJointMask)));
    }

    #[test]
    fn layout_mismatch_rejected() {
        let a = random_code(1, 8, 4);
        let b = random_code(1, 4, 8);
        assert!(hamming(&a, &b, 0).is_err());
    }

    // Brute-force oracle: enumerates shifts and bits directly.
    fn oracle(a: &IrisCode, b: &IrisCode, max_shift: usize) -> Option<(f64, isize)> {
        let mut table: Vec<(isize, f64)> = Vec::new();
        for s in -(max_shift as isize)..=(max_shift as isize) {
            let bs = b.shifted(s);
            let mut joint = 0;
            let mut diff = 0;
            for i in 0..a.len() {
                if a.mask[i] && bs.mask[i] {
                    joint += 1;
                    if a.bits[i] != bs.bits[i] {
                        diff += 1;
                    }
                }
            }
            if joint > 0 {
                table.push((s, diff as f64 / joint as f64));
            }
        }
        table
            .into_iter()
            .min_by(|(s1, h1), (s2, h2)| {
                h1.partial_cmp(h2)
                    .unwrap()
                    .then(s1.abs().cmp(&s2.abs()))
                    .then(s1.cmp(s2)) // negative shift preferred
            })
            .map(|(s, h)| (h, s))
    }

    #[test]
    fn matches_bruteforce_on_200_toy_codes() {
        for seed in 0..200u64 {
            let a = random_code(seed * 2 + 1, 8, 4);
            let b = random_code(seed * 2 + 2, 8, 4);
            let got = hamming(&a, &b, 3).ok();
            let want = oracle(&a, &b, 3);
            match (got, want) {
                (Some((gh, gs)), Some((wh, ws))) => {
                    assert!((gh - wh).abs() < 1e-12, "seed {seed}");
                    assert_eq!(gs, ws, "seed {seed}");
                }
                (None, None) => {}
                other => panic!("seed {seed}: {other:?}"),
            }
        }
    }

    #[test]
    fn symmetry_without_shifts() {
        for seed in 0..20u64 {
            let a = random_code(seed + 100, 8, 4);
            let b = random_code(seed + 200, 8, 4);
            if let (Ok((h1, _)), Ok((h2, _))) = (hamming(&a, &b, 0), hamming(&b, &a, 0)) {
                assert_eq!(h1, h2);
            }
        }
    }

    #[test]
    fn symmetry_with_shifts_negates_best_shift() {
        for seed in 0..30u64 {
            let a = random_code(seed + 300, 8, 4);
            let b = random_code(seed + 400, 8, 4);
            let (ha, sa) = hamming(&a, &b, 3).unwrap();
            let (hb, sb) = hamming(&b, &a, 3).unwrap();
            assert!((ha - hb).abs() < 1e-12, "seed {seed}");
            // Best shifts negate whenever the minimum is unique.
            let unique = {
                let mut hits = 0;
                for s in -3isize..=3 {
                    let bs = b.shifted(s);
                    let mut joint = 0;
                    let mut diff = 0;
                    for i in 0..a.len() {
                        if a.mask[i] && bs.mask[i] {
                            joint += 1;
                            if a.bits[i] != bs.bits[i] {
                                diff += 1;
                            }
                        }
                    }
                    if joint > 0 && (diff as f64 / joint as f64 - ha).abs() < 1e-12 {
                        hits += 1;
                    }
                }
                hits == 1
            };
            if unique {
                assert_eq!(sa, -sb, "seed {seed}");
            }
        }
    }

    #[test]
    fn decide_threshold_is_strict() {
        assert_eq!(decide(0.30).unwrap(), Decision::Pass);
        assert_eq!(decide(0.36).unwrap(), Decision::Fail);
        assert_eq!(decide(0.359).unwrap(), Decision::Pass);
        assert_eq!(decide(0.0).unwrap(), Decision::Pass);
        assert_eq!(decide(1.0).unwrap(), Decision::Fail);
        assert!(decide(-0.1).is_err());
        assert!(decide(1.1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hd_bounded_and_self_distance_zero(seed in any::<u64>()) {
            let a = random_code(seed, 8, 4);
            if let Ok((hd, _)) = hamming(&a, &a, 2) {
                prop_assert!((0.0..=1.0).contains(&hd));
                prop_assert_eq!(hd, 0.0);
            }
            let b = random_code(seed ^ 0xF00D, 8, 4);
            if let Ok((hd, _)) = hamming(&a, &b, 2) {
                prop_assert!((0.0..=1.0).contains(&hd));
            }
        }
    }
}
