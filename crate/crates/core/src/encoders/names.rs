//! Self-contained fallback name encoder: hashed character trigram counts.

use ndarray::Array2;

use super::EmbeddingSet;
use crate::scalar::Scalar;

pub const DEFAULT_TRIGRAM_DIM: usize = 256;

fn fnv1a(chars: &[char]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for c in chars {
        let mut buf = [0u8; 4];
        for b in c.encode_utf8(&mut buf).bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Count vector of the character trigrams of `#name#`, hashed into `dim` buckets.
pub fn trigram_embeddings<T: Scalar, S: AsRef<str>>(names: &[S], dim: usize) -> EmbeddingSet<T> {
    assert!(dim > 0, "trigram dim must be positive");
    let mut m = Array2::<T>::zeros((names.len(), dim));
    for (i, name) in names.iter().enumerate() {
        let padded: Vec<char> = std::iter::once('#')
            .chain(name.as_ref().chars().flat_map(char::to_lowercase))
            .chain(std::iter::once('#'))
            .collect();
        for tri in padded.windows(3) {
            m[[i, (fnv1a(tri) % dim as u64) as usize]] += T::one();
        }
    }
    EmbeddingSet::new(m).expect("counts are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_counts() {
        let e = trigram_embeddings::<f64, _>(&["abc", "abc", "Abc", "xyz"], 64);
        assert_eq!(e.row(0), e.row(1));
        assert_eq!(e.row(0), e.row(2));
        assert_eq!(e.row(0).sum(), 3.0); // #ab abc bc#
        assert_ne!(e.row(0), e.row(3));
        let short = trigram_embeddings::<f32, _>(&["a"], 8);
        assert_eq!(short.row(0).sum(), 1.0);
    }
}
