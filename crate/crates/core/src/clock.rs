/// Monotonic elapsed-time source.
pub trait Clock {
    /// Seconds since some fixed origin.
    fn now_secs(&self) -> f64;
}

/// A clock that never advances. Time limits never trigger and all recorded
/// durations are zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_secs(&self) -> f64 {
        0.0
    }
}
