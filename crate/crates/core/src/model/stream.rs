//! Keyed derivation of independent random streams.
//!
//! A stream is identified by the master seed and a path of labelled indices,
//! e.g. `scenario/1 instance/3 future/7`. The pair is hashed with SHA-256 and
//! the digest seeds a ChaCha8 generator, so streams never share state and the
//! order in which they are created is irrelevant.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Random stream handed to every stochastic operation.
pub type Stream = ChaCha8Rng;

const DOMAIN_TAG: &[u8] = b"plan-stream/v1";

/// Labelled path identifying one stream below a master seed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StreamPath {
    parts: Vec<(&'static str, u64)>,
}

impl StreamPath {
    pub fn root() -> Self {
        Self::default()
    }

    /// Extend the path by one `label/index` component.
    pub fn with(mut self, label: &'static str, index: u64) -> Self {
        self.parts.push((label, index));
        self
    }

    pub fn scenario(j: usize) -> Self {
        Self::root().with("scenario", j as u64)
    }

    pub fn parts(&self) -> &[(&'static str, u64)] {
        &self.parts
    }
}

impl std::fmt::Display for StreamPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, (label, index)) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{label}/{index}")?;
        }
        Ok(())
    }
}

/// Derive the stream for `(master_seed, path)`.
///
/// Pure function: identical inputs always yield identical draw sequences.
pub fn derive_stream(master_seed: u64, path: &StreamPath) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN_TAG);
    hasher.update(master_seed.to_le_bytes());
    for (label, index) in &path.parts {
        // Length prefix keeps ("ab", 1) and ("a", ..) unambiguous.
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        hasher.update(index.to_le_bytes());
    }
    let seed: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(seed)
}

/// A stream that is only derived on first use.
///
/// The assignment heuristic needs a tie-break stream per future but almost
/// never draws from it; deferring the hash keeps the hot loop cheap.
pub struct LazyStream {
    master_seed: u64,
    path: StreamPath,
    inner: Option<Stream>,
}

impl LazyStream {
    pub fn new(master_seed: u64, path: StreamPath) -> Self {
        Self {
            master_seed,
            path,
            inner: None,
        }
    }

    fn get(&mut self) -> &mut Stream {
        let (seed, path) = (self.master_seed, &self.path);
        self.inner.get_or_insert_with(|| derive_stream(seed, path))
    }
}

impl RngCore for LazyStream {
    fn next_u32(&mut self) -> u32 {
        self.get().next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.get().next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.get().fill_bytes(dest)
    }
}
