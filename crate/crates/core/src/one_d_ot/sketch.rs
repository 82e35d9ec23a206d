//! KLL streaming quantile sketch: a hierarchy of compactors with doubling
//! weights, giving rank-accurate quantiles in sublinear space.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::RngStream;
use crate::one_d_ot::SortedSlice;

const MAGIC: &[u8; 4] = b"KLL1";

/// Streaming quantile summary. Level `h` (0-based) holds items of weight
/// `2^h`; when a level reaches its capacity it is sorted, one fair coin
/// picks the even- or odd-indexed survivors, and those are promoted to the
/// next level.
#[derive(Debug, Clone)]
pub struct KllSketch {
    k: usize,
    compactors: Vec<Vec<f64>>,
    items_seen: u64,
    rng: ChaCha8Rng,
}

impl KllSketch {
    pub fn new(k: usize, rng: RngStream) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("sketch capacity k must be >= 2"));
        }
        Ok(KllSketch {
            k,
            compactors: vec![Vec::new()],
            items_seen: 0,
            rng: rng.rng(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn levels(&self) -> usize {
        self.compactors.len()
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    /// Number of items currently retained across all levels.
    pub fn retained(&self) -> usize {
        self.compactors.iter().map(Vec::len).sum()
    }

    /// Capacity of level `h` given the current height: `ceil(k (2/3)^(H-1-h)) + 1`.
    fn capacity(&self, h: usize) -> usize {
        let exp = (self.compactors.len() - 1 - h) as i32;
        (self.k as f64 * (2f64 / 3.0).powi(exp)).ceil() as usize + 1
    }

    pub fn insert(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: "sketch item",
                index: 0,
            });
        }
        self.compactors[0].push(x);
        self.items_seen += 1;
        self.compress();
        Ok(())
    }

    fn compress(&mut self) {
        loop {
            let over = (0..self.compactors.len()).find(|&h| self.compactors[h].len() >= self.capacity(h));
            match over {
                Some(h) => self.compact_level(h),
                None => break,
            }
        }
    }

    fn compact_level(&mut self, h: usize) {
        if h + 1 == self.compactors.len() {
            self.compactors.push(Vec::new());
        }
        let mut level = std::mem::take(&mut self.compactors[h]);
        level.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let offset = usize::from(self.rng.random_bool(0.5));
        let promoted: Vec<f64> = level
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == offset)
            .map(|(_, x)| x)
            .collect();
        self.compactors[h + 1].extend(promoted);
    }

    /// The discrete distribution held by the sketch,
    /// `sum_h sum_{x in C_h} 2^h delta_x`, normalized by retained weight.
    pub fn to_slice(&self) -> Result<SortedSlice> {
        let mut values = Vec::with_capacity(self.retained());
        let mut weights = Vec::with_capacity(self.retained());
        for (h, level) in self.compactors.iter().enumerate() {
            let w = (1u64 << h) as f64;
            for &x in level {
                values.push(x);
                weights.push(w);
            }
        }
        if values.is_empty() {
            return Err(Error::EmptyInput("sketch holds no items"));
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        SortedSlice::from_weighted_values(values, weights)
    }

    /// Merges two sketches of equal base capacity by concatenating levels
    /// and re-compacting. Takes ownership of both inputs.
    pub fn merge(mut self, other: KllSketch) -> Result<KllSketch> {
        if self.k != other.k {
            return Err(Error::SizeMismatch {
                n: self.k,
                m: other.k,
            });
        }
        if other.compactors.len() > self.compactors.len() {
            self.compactors.resize(other.compactors.len(), Vec::new());
        }
        for (h, level) in other.compactors.into_iter().enumerate() {
            self.compactors[h].extend(level);
        }
        self.items_seen += other.items_seen;
        self.compress();
        Ok(self)
    }

    /// Versioned binary layout: magic "KLL1", then `k`, `H`, `items_seen`
    /// as u64 LE, then per level a u64 count followed by that many f64 LE
    /// items. The compaction RNG is not part of the layout.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.k as u64).to_le_bytes())?;
        w.write_all(&(self.compactors.len() as u64).to_le_bytes())?;
        w.write_all(&self.items_seen.to_le_bytes())?;
        for level in &self.compactors {
            w.write_all(&(level.len() as u64).to_le_bytes())?;
            for &x in level {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<KllSketch> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::CorruptSketch("bad magic".into()));
        }
        let k = read_u64(&mut r)? as usize;
        let levels = read_u64(&mut r)? as usize;
        let items_seen = read_u64(&mut r)?;
        if k < 2 || levels == 0 || levels > 64 {
            return Err(Error::CorruptSketch("implausible header".into()));
        }
        let mut compactors = Vec::with_capacity(levels);
        for _ in 0..levels {
            let count = read_u64(&mut r)? as usize;
            if count > (1 << 32) {
                return Err(Error::CorruptSketch("implausible level size".into()));
            }
            let mut level = Vec::with_capacity(count);
            let mut buf = [0u8; 8];
            for _ in 0..count {
                r.read_exact(&mut buf)?;
                level.push(f64::from_le_bytes(buf));
            }
            compactors.push(level);
        }
        Ok(KllSketch {
            k,
            compactors,
            items_seen,
            rng: RngStream::from_seed(0).rng(),
        })
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sketch(k: usize, seed: u64) -> KllSketch {
        KllSketch::new(k, RngStream::from_seed(seed)).unwrap()
    }

    fn rank_of(stream_max: u64, v: f64) -> f64 {
        // Stream is 1..=stream_max, so the rank of v is v clamped to range.
        v.clamp(0.0, stream_max as f64)
    }

    #[test]
    fn small_stream_is_exact() {
        let mut sk = sketch(200, 1);
        for x in [5.0, 1.0, 3.0, 2.0, 4.0] {
            sk.insert(x).unwrap();
        }
        let slice = sk.to_slice().unwrap();
        assert_eq!(slice.values(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(slice.weights().iter().all(|&w| (w - 0.2).abs() < 1e-15));
    }

    #[test]
    fn nan_rejected() {
        let mut sk = sketch(8, 1);
        assert!(sk.insert(f64::NAN).is_err());
    }

    #[test]
    fn median_rank_error_within_bound() {
        let n = 100_000u64;
        let mut sk = sketch(200, 42);
        for x in 1..=n {
            sk.insert(x as f64).unwrap();
        }
        let slice = sk.to_slice().unwrap();
        let med = slice.quantile(0.5).unwrap();
        let err = (rank_of(n, med) - 0.5 * n as f64).abs();
        assert!(err <= 0.02 * n as f64, "rank error {err}");
        assert!(sk.retained() <= 3 * sk.k() + 2 * sk.levels());
        let h_bound = ((n as f64 / sk.k() as f64).log2() + 2.0).ceil() as usize;
        assert!(sk.levels() <= h_bound, "H = {} > {}", sk.levels(), h_bound);
    }

    #[test]
    fn merge_keeps_rank_bound() {
        let n = 50_000u64;
        let mut a = sketch(200, 7);
        let mut b = sketch(200, 8);
        for x in 1..=n {
            a.insert(x as f64).unwrap();
            b.insert((x + n) as f64).unwrap();
        }
        let merged = a.merge(b).unwrap();
        assert_eq!(merged.items_seen(), 2 * n);
        let slice = merged.to_slice().unwrap();
        for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let q = slice.quantile(t).unwrap();
            let err = (rank_of(2 * n, q) - t * 2.0 * n as f64).abs();
            assert!(err <= 0.02 * 2.0 * n as f64, "t = {t}: rank error {err}");
        }
    }

    #[test]
    fn merge_requires_equal_k() {
        let a = sketch(100, 1);
        let b = sketch(200, 1);
        assert!(a.merge(b).is_err());
    }

    #[test]
    fn serialization_round_trips_byte_identically() {
        let mut sk = sketch(64, 3);
        for x in 0..10_000 {
            sk.insert((x as f64).sin()).unwrap();
        }
        let mut buf1 = Vec::new();
        sk.write_to(&mut buf1).unwrap();
        let back = KllSketch::read_from(&buf1[..]).unwrap();
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf1, buf2);
        assert_eq!(back.items_seen(), sk.items_seen());
    }

    #[test]
    fn corrupt_magic_rejected() {
        let buf = b"NOPE\0\0\0\0\0\0\0\0";
        assert!(KllSketch::read_from(&buf[..]).is_err());
    }
}
