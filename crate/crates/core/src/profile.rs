//! Built-in action profiles: per-action band limits, box rules, matching
//! tolerance, and localization trigger behavior.

use crate::dsp::BandpassSpec;
use crate::localize::{ActionProfile, BoxRule, TriggerMode};

/// Chisel strikes: impulsive, localized once per detected onset, evaluated
/// tightly (one hop frame of tolerance). Broadband transients, so no band
/// limit is applied before beamforming.
pub fn chiseling() -> ActionProfile {
    ActionProfile {
        name: "chiseling".into(),
        band: None,
        box_rule: BoxRule::FixedCube { edge_m: 0.05 },
        j: 1,
        trigger: TriggerMode::Impulsive,
    }
}

/// Hand sawing: sustained activity localized on a 40 ms grid while active.
/// The blade's radiation concentrates between 1 and 5 kHz, so recordings are
/// band-limited before beamforming. Extents are an assumed bounding volume of
/// a hand saw in its working orientation.
pub fn sawing() -> ActionProfile {
    ActionProfile {
        name: "sawing".into(),
        band: Some(BandpassSpec::new(1_000.0, 5_000.0)),
        box_rule: BoxRule::InstrumentExtents { extents: [0.30, 0.08, 0.15] },
        j: 3,
        trigger: TriggerMode::Continuous { interval_s: 0.04 },
    }
}

/// Drilling: sustained, with energy spread up to 10 kHz. The band limit is
/// applied to the beamformer input at its full 192 kHz rate. Extents are an
/// assumed bounding volume of a hand drill with bit.
pub fn drilling() -> ActionProfile {
    ActionProfile {
        name: "drilling".into(),
        band: Some(BandpassSpec::new(1_000.0, 10_000.0)),
        box_rule: BoxRule::InstrumentExtents { extents: [0.25, 0.08, 0.20] },
        j: 10,
        trigger: TriggerMode::Continuous { interval_s: 0.04 },
    }
}

/// All built-in profiles.
pub fn builtin_profiles() -> Vec<ActionProfile> {
    vec![chiseling(), sawing(), drilling()]
}

/// Look up a built-in profile by name.
pub fn profile_by_name(name: &str) -> Option<ActionProfile> {
    builtin_profiles().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_validate() {
        for p in builtin_profiles() {
            p.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(profile_by_name("chiseling").unwrap().j, 1);
        assert_eq!(profile_by_name("sawing").unwrap().j, 3);
        assert_eq!(profile_by_name("drilling").unwrap().j, 10);
        assert!(profile_by_name("welding").is_none());
    }

    #[test]
    fn trigger_modes_match_action_character() {
        assert_eq!(chiseling().trigger, TriggerMode::Impulsive);
        for p in [sawing(), drilling()] {
            match p.trigger {
                TriggerMode::Continuous { interval_s } => assert_eq!(interval_s, 0.04),
                TriggerMode::Impulsive => panic!("{} should localize continuously", p.name),
            }
        }
    }

    #[test]
    fn band_limits() {
        assert!(chiseling().band.is_none());
        let saw = sawing().band.unwrap();
        assert_eq!((saw.lo_hz, saw.hi_hz), (1_000.0, 5_000.0));
        let drill = drilling().band.unwrap();
        assert_eq!((drill.lo_hz, drill.hi_hz), (1_000.0, 10_000.0));
    }
}
