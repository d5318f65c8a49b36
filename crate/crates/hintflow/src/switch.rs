//! Per-group effective-update tracking and the adaptive zero-hint switch.
//!
//! Each resource group carries one [`SwitchState`]: an EMA of the group's
//! effective-update rate and a sticky switch flag. Once the EMA reaches the
//! threshold the group's hint ratio is forced to zero for the rest of the run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedules::DecaySchedule;

/// Smoothed reachability state for one resource group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchState {
    /// EMA of the effective-update rate.
    pub ema: f64,
    /// Most recent raw effective-update rate.
    pub last_raw: f64,
    /// Step at which the group entered the zero-hint regime, if it has.
    pub switch_step: Option<u64>,
    pub switched: bool,
}

impl Default for SwitchState {
    fn default() -> Self {
        SwitchState::new()
    }
}

impl SwitchState {
    /// Fresh state: the EMA starts at zero, so a group must demonstrate
    /// reachability before it can switch.
    pub fn new() -> Self {
        SwitchState { ema: 0.0, last_raw: 0.0, switch_step: None, switched: false }
    }

    /// Folds a raw effective-update rate into the EMA.
    /// `ema' = alpha * ema + (1 - alpha) * u`.
    pub fn ema_update(&mut self, u: f64, alpha: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("effective-update rate {u} outside [0, 1]")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::domain(format!("EMA alpha {alpha} outside [0, 1)")));
        }
        self.ema = alpha * self.ema + (1.0 - alpha) * u;
        self.last_raw = u;
        Ok(())
    }

    /// Fires the switch the first time the EMA reaches `tau`. Permanent.
    pub fn check_switch(&mut self, t: u64, tau: f64) {
        if !self.switched && self.ema >= tau {
            self.switched = true;
            self.switch_step = Some(t);
        }
    }
}

/// Fraction of instances whose rollout group contains at least one strictly
/// positive advantage.
pub fn effective_update_rate(instance_advantages: &[Vec<f64>]) -> Result<f64> {
    if instance_advantages.is_empty() {
        return Err(Error::domain(
            "effective-update rate undefined on an empty group batch; skip absent groups",
        ));
    }
    for adv in instance_advantages {
        if adv.is_empty() {
            return Err(Error::domain("instance advantage list must be nonempty"));
        }
    }
    let reachable = instance_advantages
        .iter()
        .filter(|adv| adv.iter().any(|&a| a > 0.0))
        .count();
    Ok(reachable as f64 / instance_advantages.len() as f64)
}

/// Hint ratio actually applied at step `t`: zero once the group has switched,
/// otherwise the schedule's ratio.
pub fn effective_ratio(schedule: &DecaySchedule, t: u64, state: &SwitchState) -> f64 {
    if state.switched {
        0.0
    } else {
        schedule.hint_ratio(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn update_rate_counts_reachable_instances() {
        let u = effective_update_rate(&[vec![1.0, -1.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!((u - 1.0 / 3.0).abs() < 1e-15);

        let zero = effective_update_rate(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(zero, 0.0);

        let one = effective_update_rate(&[vec![0.5, -0.5], vec![2.0, -1.0, -1.0]]).unwrap();
        assert_eq!(one, 1.0);

        assert!(effective_update_rate(&[]).is_err());
    }

    #[test]
    fn ema_update_examples() {
        let mut s = SwitchState::new();
        s.ema = 0.2;
        s.ema_update(0.6, 0.5).unwrap();
        assert!((s.ema - 0.4).abs() < 1e-15);
        assert_eq!(s.last_raw, 0.6);

        let mut fixed = SwitchState::new();
        fixed.ema = 0.37;
        fixed.ema_update(0.37, 0.5).unwrap();
        assert!((fixed.ema - 0.37).abs() < 1e-15);

        let mut pass = SwitchState::new();
        pass.ema_update(1.0, 0.0).unwrap();
        assert_eq!(pass.ema, 1.0);

        assert!(SwitchState::new().ema_update(1.5, 0.5).is_err());
        assert!(SwitchState::new().ema_update(0.5, 1.0).is_err());
    }

    #[test]
    fn switch_fires_at_first_crossing() {
        let mut s = SwitchState::new();
        for (t, u) in [(0u64, 0.1), (1, 0.3), (2, 0.45)] {
            s.ema = u; // drive the EMA directly for the example series
            s.check_switch(t, 0.4);
        }
        assert_eq!(s.switch_step, Some(2));
        assert!(s.switched);
    }

    #[test]
    fn switch_with_zero_threshold_fires_immediately() {
        let mut s = SwitchState::new();
        s.check_switch(0, 0.0);
        assert_eq!(s.switch_step, Some(0));
    }

    #[test]
    fn switch_never_fires_below_threshold() {
        let mut s = SwitchState::new();
        for t in 0..100 {
            s.ema_update(0.2, 0.5).unwrap();
            s.check_switch(t, 0.4);
        }
        assert_eq!(s.switch_step, None);
        assert!(!s.switched);
    }

    #[test]
    fn switch_is_permanent() {
        let mut s = SwitchState::new();
        s.ema_update(1.0, 0.0).unwrap();
        s.check_switch(3, 0.4);
        assert_eq!(s.switch_step, Some(3));
        s.ema_update(0.0, 0.0).unwrap();
        s.check_switch(9, 0.4);
        assert_eq!(s.switch_step, Some(3));
        assert!(s.switched);
    }

    #[test]
    fn effective_ratio_respects_switch_and_horizon() {
        let schedule = DecaySchedule::cosine(100).unwrap();
        let mut s = SwitchState::new();

        let expected = 0.5 * (1.0 + (0.1 * std::f64::consts::PI).cos());
        assert!((expected - 0.9755282581475768).abs() < 1e-15);
        assert!((effective_ratio(&schedule, 10, &s) - expected).abs() < 1e-12);

        s.switched = true;
        s.switch_step = Some(5);
        assert_eq!(effective_ratio(&schedule, 10, &s), 0.0);

        let fresh = SwitchState::new();
        assert_eq!(effective_ratio(&schedule, 101, &fresh), 0.0);
    }

    proptest! {
        #[test]
        fn ema_stays_in_unit_interval(
            us in proptest::collection::vec(0.0f64..=1.0, 1..50),
            alpha in 0.0f64..0.999,
        ) {
            let mut s = SwitchState::new();
            for u in us {
                s.ema_update(u, alpha).unwrap();
                prop_assert!((0.0..=1.0).contains(&s.ema));
            }
        }

        #[test]
        fn switch_step_is_first_crossing(
            us in proptest::collection::vec(0.0f64..=1.0, 1..50),
            alpha in 0.0f64..0.999,
            tau in 0.0f64..=1.0,
        ) {
            let mut s = SwitchState::new();
            let mut first = None;
            for (t, u) in us.iter().enumerate() {
                s.ema_update(*u, alpha).unwrap();
                if first.is_none() && s.ema >= tau {
                    first = Some(t as u64);
                }
                s.check_switch(t as u64, tau);
            }
            prop_assert_eq!(s.switch_step, first);
        }

        #[test]
        fn big_tau_never_switches(
            us in proptest::collection::vec(0.0f64..=1.0, 1..50),
        ) {
            let mut s = SwitchState::new();
            for (t, u) in us.iter().enumerate() {
                s.ema_update(*u, 0.5).unwrap();
                s.check_switch(t as u64, 1.5);
            }
            prop_assert!(!s.switched);
        }
    }
}
