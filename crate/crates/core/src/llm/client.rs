use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use serde::Serialize;

use super::{Backend, CacheKey, LlmError, LlmParams, ResponseCache};
use crate::prompting::Prompt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClientStats {
    pub requests: u64,
    pub cache_hits: u64,
    pub transport_calls: u64,
    pub failures: u64,
    pub peak_in_flight: usize,
}

#[derive(Default)]
struct Counters {
    requests: AtomicU64,
    cache_hits: AtomicU64,
    transport_calls: AtomicU64,
    failures: AtomicU64,
    peak: AtomicUsize,
}

/// Counting semaphore bounding concurrent transport calls.
struct Gate {
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn enter(&self) -> usize {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        *n
    }

    fn leave(&self) {
        *self.in_flight.lock().unwrap() -= 1;
        self.freed.notify_one();
    }
}

/// Backend plus optional cache, shared across worker threads.
pub struct LlmClient {
    backend: Arc<dyn Backend>,
    params: LlmParams,
    cache: Option<ResponseCache>,
    gate: Gate,
    // Requests for the same key wait on one lock so only the first one
    // reaches the backend.
    key_locks: Mutex<HashMap<CacheKey, Arc<Mutex<()>>>>,
    counters: Counters,
}

impl LlmClient {
    pub fn new(backend: Arc<dyn Backend>, params: LlmParams, cache: Option<ResponseCache>) -> Result<Self, LlmError> {
        params.validate()?;
        Ok(Self {
            backend,
            gate: Gate {
                limit: params.max_in_flight,
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
            },
            params,
            cache,
            key_locks: Mutex::new(HashMap::new()),
            counters: Counters::default(),
        })
    }

    pub fn params(&self) -> &LlmParams {
        &self.params
    }

    pub fn stats(&self) -> ClientStats {
        let c = &self.counters;
        ClientStats {
            requests: c.requests.load(Ordering::Relaxed),
            cache_hits: c.cache_hits.load(Ordering::Relaxed),
            transport_calls: c.transport_calls.load(Ordering::Relaxed),
            failures: c.failures.load(Ordering::Relaxed),
            peak_in_flight: c.peak.load(Ordering::Relaxed),
        }
    }

    fn transport(&self, prompt: &Prompt, trial_index: u64) -> Result<String, LlmError> {
        let n = self.gate.enter();
        self.counters.peak.fetch_max(n, Ordering::Relaxed);
        self.counters.transport_calls.fetch_add(1, Ordering::Relaxed);
        let out = self.backend.complete(prompt, &self.params, trial_index);
        self.gate.leave();
        if out.is_err() {
            self.counters.failures.fetch_add(1, Ordering::Relaxed);
        }
        out
    }

    /// Returns the cached response when present; otherwise calls the
    /// backend and stores the result.
    pub fn complete(&self, prompt: &Prompt, trial_index: u64) -> Result<String, LlmError> {
        self.counters.requests.fetch_add(1, Ordering::Relaxed);
        let Some(cache) = &self.cache else {
            return self.transport(prompt, trial_index);
        };
        let key = CacheKey::for_prompt(prompt, &self.params, trial_index);
        let lock = self.key_locks.lock().unwrap().entry(key.clone()).or_default().clone();
        let _guard = lock.lock().unwrap();
        if let Some(hit) = cache.get(&key) {
            self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }
        let text = self.transport(prompt, trial_index)?;
        cache.put(&key, &self.params, trial_index, &text)?;
        Ok(text)
    }
}
