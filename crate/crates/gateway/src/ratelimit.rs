use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

/// Token bucket refilled continuously at `per_minute / 60` tokens per second.
#[derive(Debug)]
pub struct RateLimiter {
    per_minute: f64,
    state: Mutex<Bucket>,
}

#[derive(Debug)]
struct Bucket {
    tokens: f64,
    last: Instant,
}

impl RateLimiter {
    pub const DEFAULT_PER_MINUTE: u32 = 30;

    pub fn per_minute(n: u32) -> Self {
        let n = f64::from(n.max(1));
        Self {
            per_minute: n,
            state: Mutex::new(Bucket {
                tokens: n,
                last: Instant::now(),
            }),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut b = self.state.lock().expect("limiter lock");
                let now = Instant::now();
                let refill = now.duration_since(b.last).as_secs_f64() * self.per_minute / 60.0;
                b.tokens = (b.tokens + refill).min(self.per_minute);
                b.last = now;
                if b.tokens >= 1.0 {
                    b.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - b.tokens) * 60.0 / self.per_minute)
            };
            thread::sleep(wait);
        }
    }
}

/// Counting semaphore bounding concurrent in-flight requests.
#[derive(Debug)]
pub struct InFlight {
    max: usize,
    busy: Mutex<usize>,
    cv: Condvar,
}

pub struct InFlightGuard<'a>(&'a InFlight);

impl InFlight {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            busy: Mutex::new(0),
            cv: Condvar::new(),
        }
    }

    pub fn enter(&self) -> InFlightGuard<'_> {
        let mut busy = self.busy.lock().expect("in-flight lock");
        while *busy >= self.max {
            busy = self.cv.wait(busy).expect("in-flight lock");
        }
        *busy += 1;
        InFlightGuard(self)
    }
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().expect("in-flight lock") -= 1;
        self.0.cv.notify_one();
    }
}
