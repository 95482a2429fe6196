//! Localization status and the failure conditions that end tracking.

use serde::{Deserialize, Serialize};

use super::GraphConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizationState {
    Initializing,
    Tracking,
    Lost,
}

impl std::fmt::Display for LocalizationState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LocalizationState::Initializing => "initializing",
            LocalizationState::Tracking => "tracking",
            LocalizationState::Lost => "lost",
        })
    }
}

/// What happened to one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrameOutcome {
    Initialization { success: bool },
    Tracking { success: bool, occluded: bool, out_of_domain: bool },
    /// Frame handled without an attempt (the frame after getting lost).
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateMachine {
    pub state: LocalizationState,
    pub consecutive_failures: usize,
    pub consecutive_occluded: usize,
}

impl Default for StateMachine {
    fn default() -> Self {
        StateMachine { state: LocalizationState::Initializing, consecutive_failures: 0, consecutive_occluded: 0 }
    }
}

impl StateMachine {
    /// Advances by one frame. Outcomes that do not belong to the current
    /// state leave it unchanged; a lost system always moves on to
    /// re-initialization.
    pub fn step(&mut self, outcome: FrameOutcome, cfg: &GraphConfig) -> LocalizationState {
        use LocalizationState::*;
        self.state = match (self.state, outcome) {
            (Lost, _) => {
                self.reset_counters();
                Initializing
            }
            (Initializing, FrameOutcome::Initialization { success: true }) => {
                self.reset_counters();
                Tracking
            }
            (Tracking, FrameOutcome::Tracking { success, occluded, out_of_domain }) => {
                if out_of_domain {
                    Lost
                } else if occluded {
                    self.consecutive_occluded += 1;
                    if self.consecutive_occluded >= cfg.max_occluded {
                        Lost
                    } else {
                        Tracking
                    }
                } else {
                    self.consecutive_occluded = 0;
                    if success {
                        self.consecutive_failures = 0;
                        Tracking
                    } else {
                        self.consecutive_failures += 1;
                        if self.consecutive_failures >= cfg.max_failures {
                            Lost
                        } else {
                            Tracking
                        }
                    }
                }
            }
            (s, _) => s,
        };
        self.state
    }

    fn reset_counters(&mut self) {
        self.consecutive_failures = 0;
        self.consecutive_occluded = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tracking() -> StateMachine {
        StateMachine { state: LocalizationState::Tracking, ..Default::default() }
    }

    fn track(success: bool, occluded: bool, out_of_domain: bool) -> FrameOutcome {
        FrameOutcome::Tracking { success, occluded, out_of_domain }
    }

    #[test]
    fn five_failures_lose_tracking() {
        let cfg = GraphConfig::default();
        let mut sm = tracking();
        for _ in 0..4 {
            assert_eq!(sm.step(track(false, false, false), &cfg), LocalizationState::Tracking);
        }
        assert_eq!(sm.step(track(false, false, false), &cfg), LocalizationState::Lost);
    }

    #[test]
    fn success_resets_failure_count() {
        let cfg = GraphConfig::default();
        let mut sm = tracking();
        for _ in 0..4 {
            sm.step(track(false, false, false), &cfg);
        }
        sm.step(track(true, false, false), &cfg);
        for _ in 0..4 {
            assert_eq!(sm.step(track(false, false, false), &cfg), LocalizationState::Tracking);
        }
    }

    #[test]
    fn out_of_domain_is_immediately_lost() {
        let mut sm = tracking();
        assert_eq!(sm.step(track(true, false, true), &GraphConfig::default()), LocalizationState::Lost);
    }

    #[test]
    fn occlusion_threshold() {
        let cfg = GraphConfig::default();
        let mut sm = tracking();
        for _ in 0..9 {
            assert_eq!(sm.step(track(false, true, false), &cfg), LocalizationState::Tracking);
        }
        assert_eq!(sm.consecutive_failures, 0);
        assert_eq!(sm.step(track(false, true, false), &cfg), LocalizationState::Lost);
    }

    #[test]
    fn only_allowed_transitions() {
        let cfg = GraphConfig::default();
        let mut sm = StateMachine::default();
        assert_eq!(sm.step(track(true, false, false), &cfg), LocalizationState::Initializing);
        assert_eq!(sm.step(FrameOutcome::Initialization { success: false }, &cfg), LocalizationState::Initializing);
        assert_eq!(sm.step(FrameOutcome::Initialization { success: true }, &cfg), LocalizationState::Tracking);
        assert_eq!(sm.step(FrameOutcome::Initialization { success: true }, &cfg), LocalizationState::Tracking);
        sm.state = LocalizationState::Lost;
        assert_eq!(sm.step(FrameOutcome::Skipped, &cfg), LocalizationState::Initializing);
    }
}
