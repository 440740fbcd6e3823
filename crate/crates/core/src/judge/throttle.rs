use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Counting semaphore bounding concurrent backend calls.
pub struct InFlight {
    bound: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

pub struct InFlightGuard<'a> {
    owner: &'a InFlight,
}

impl InFlight {
    pub fn new(bound: usize) -> Self {
        Self {
            bound: bound.max(1),
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn acquire(&self) -> InFlightGuard<'_> {
        let mut used = self.used.lock().expect("in-flight lock poisoned");
        while *used >= self.bound {
            used = self.freed.wait(used).expect("in-flight lock poisoned");
        }
        *used += 1;
        InFlightGuard { owner: self }
    }

    pub fn current(&self) -> usize {
        *self.used.lock().expect("in-flight lock poisoned")
    }
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut used = self.owner.used.lock().expect("in-flight lock poisoned");
        *used -= 1;
        self.owner.freed.notify_one();
    }
}

/// Token bucket refilled continuously at `requests_per_minute / 60` tokens per
/// second. Capacity is one second's worth of tokens (at least one).
pub struct RateLimiter {
    rate_per_sec: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn per_minute(requests_per_minute: u32) -> Self {
        let rate_per_sec = f64::from(requests_per_minute.max(1)) / 60.0;
        let capacity = rate_per_sec.ceil().max(1.0);
        Self {
            rate_per_sec,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Blocks until a token is available and takes it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter lock poisoned");
                let (tokens, last) = &mut *state;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.rate_per_sec).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - *tokens) / self.rate_per_sec)
            };
            std::thread::sleep(wait);
        }
    }
}
