use std::sync::{Condvar, Mutex};

/// Counting semaphore: at most `permits` callers inside at once; the rest
/// wait in line.
#[derive(Debug)]
pub struct Limiter {
    in_use: Mutex<usize>,
    freed: Condvar,
    permits: usize,
}

pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Limiter {
    pub fn new(permits: usize) -> Self {
        Self { in_use: Mutex::new(0), freed: Condvar::new(), permits: permits.max(1) }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_use.lock().expect("limiter lock");
        while *n >= self.permits {
            n = self.freed.wait(n).expect("limiter lock");
        }
        *n += 1;
        Permit { limiter: self }
    }

    pub fn in_use(&self) -> usize {
        *self.in_use.lock().expect("limiter lock")
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.limiter.in_use.lock().expect("limiter lock") -= 1;
        self.limiter.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    #[test]
    fn never_exceeds_permits() {
        let lim = Limiter::new(2);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let _p = lim.acquire();
                    peak.fetch_max(lim.in_use(), Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(lim.in_use(), 0);
    }
}
