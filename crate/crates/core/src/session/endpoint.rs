//! Energy endpointer: end of speech after 300 ms below -40 dBFS.

use crate::audio::{db_to_gain, rms};

pub const ENDPOINT_SILENCE_S: f64 = 0.3;
pub const ENDPOINT_LEVEL_DBFS: f64 = -40.0;
/// Analysis block for the level measurement.
pub const ENDPOINT_BLOCK_S: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Endpointer {
    block: usize,
    needed: usize,
    level: f64,
    pending: Vec<f64>,
    quiet: usize,
    consumed: u64,
}

impl Endpointer {
    pub fn new(sample_rate: u32) -> Self {
        let fs = sample_rate as f64;
        Self {
            block: (ENDPOINT_BLOCK_S * fs).round() as usize,
            needed: (ENDPOINT_SILENCE_S * fs).round() as usize,
            level: db_to_gain(ENDPOINT_LEVEL_DBFS),
            pending: Vec::new(),
            quiet: 0,
            consumed: 0,
        }
    }

    pub fn reset(&mut self) {
        self.pending.clear();
        self.quiet = 0;
        self.consumed = 0;
    }

    /// Feeds samples; returns the offset (in samples since the last reset) at
    /// which the quiet run reached 300 ms, if it did within this chunk.
    pub fn push(&mut self, samples: &[f64]) -> Option<u64> {
        self.pending.extend_from_slice(samples);
        let mut hit = None;
        let mut start = 0;
        while start + self.block <= self.pending.len() {
            let blk = &self.pending[start..start + self.block];
            self.consumed += self.block as u64;
            if rms(blk) < self.level {
                self.quiet += self.block;
                if self.quiet >= self.needed && hit.is_none() {
                    hit = Some(self.consumed);
                }
            } else {
                self.quiet = 0;
            }
            start += self.block;
        }
        self.pending.drain(..start);
        hit
    }
}
