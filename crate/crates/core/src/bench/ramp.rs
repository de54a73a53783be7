//! Virtual-user ramp: user `i` (0-based) starts at `(i + 1) / ramp_rate`
//! seconds, so `floor(ramp_rate * t)` users are active at time `t`, capped
//! at `max_users`.

use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSchedule {
    pub max_users: u32,
    /// Users started per second.
    pub ramp_rate: f64,
}

impl RampSchedule {
    pub fn start_offset(&self, user: u32) -> Duration {
        Duration::from_secs_f64((user as f64 + 1.0) / self.ramp_rate)
    }

    /// Time at which the last user starts.
    pub fn ramp_duration(&self) -> Duration {
        if self.max_users == 0 {
            return Duration::ZERO;
        }
        self.start_offset(self.max_users - 1)
    }

    /// Number of users whose start offset is at or before `t`.
    pub fn active_at(&self, t: Duration) -> u32 {
        (0..self.max_users)
            .take_while(|&u| self.start_offset(u) <= t)
            .count() as u32
    }
}
