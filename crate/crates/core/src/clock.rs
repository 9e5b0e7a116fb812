//! Wall-clock helpers that degrade to a zero clock on `wasm32`, where
//! `std::time::Instant` is unavailable.

#[cfg(not(target_arch = "wasm32"))]
mod imp {
    use std::time::Instant;

    #[derive(Debug, Clone, Copy)]
    pub struct Stopwatch(Instant);

    impl Stopwatch {
        pub fn start() -> Self {
            Stopwatch(Instant::now())
        }

        pub fn elapsed_secs(&self) -> f64 {
            self.0.elapsed().as_secs_f64()
        }
    }
}

#[cfg(target_arch = "wasm32")]
mod imp {
    #[derive(Debug, Clone, Copy)]
    pub struct Stopwatch;

    impl Stopwatch {
        pub fn start() -> Self {
            Stopwatch
        }

        pub fn elapsed_secs(&self) -> f64 {
            0.0
        }
    }
}

pub use imp::Stopwatch;

/// A cooperative deadline measured from a [`Stopwatch`].
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    start: Stopwatch,
    budget: Option<f64>,
}

impl Deadline {
    pub fn new(budget: Option<f64>) -> Self {
        Deadline { start: Stopwatch::start(), budget }
    }

    pub fn none() -> Self {
        Deadline::new(None)
    }

    pub fn expired(&self) -> bool {
        match self.budget {
            Some(b) => self.start.elapsed_secs() > b,
            None => false,
        }
    }

    pub fn elapsed_secs(&self) -> f64 {
        self.start.elapsed_secs()
    }
}
