//! Two-universal hashing of raw bits with seeded Toeplitz matrices.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Raw bits hashed by one Toeplitz matrix.
pub const BLOCK_BITS: usize = 16_384;

/// Compresses `bits` (`0`/`1` bytes) to `output_len` bits.
///
/// The input is cut into blocks of [`BLOCK_BITS`] bits and each block is
/// multiplied over GF(2) by its own Toeplitz matrix, whose diagonals come
/// from ChaCha8 keyed by `seed` on stream `block index`. Block `b` emits
/// `floor(L c_b / n) - floor(L c_{b-1} / n)` bits, where `c_b` counts the
/// input bits up to and including block `b`, so the compression ratio is
/// uniform. The caller chooses `output_len` from its entropy budget.
pub fn extract(bits: &[u8], output_len: usize, seed: u64) -> Result<Vec<u8>> {
    if output_len > bits.len() {
        return Err(Error::Length {
            requested: output_len,
            available: bits.len(),
        });
    }
    if output_len == 0 {
        return Ok(Vec::new());
    }
    let n = bits.len() as u128;
    let quota = |consumed: usize| (output_len as u128 * consumed as u128 / n) as usize;
    let blocks: Vec<Vec<u8>> = bits
        .par_chunks(BLOCK_BITS)
        .enumerate()
        .map(|(b, block)| {
            let start = b * BLOCK_BITS;
            let out = quota(start + block.len()) - quota(start);
            toeplitz_block(block, out, seed, b as u64)
        })
        .collect();
    Ok(blocks.concat())
}

fn toeplitz_block(input: &[u8], out: usize, seed: u64, block: u64) -> Vec<u8> {
    if out == 0 {
        return Vec::new();
    }
    let len = input.len();
    let words = len.div_ceil(64);
    // reversed input, so row r is the dot product with diagonals r..r+len
    let mut x = vec![0u64; words];
    for (k, &bit) in input.iter().rev().enumerate() {
        x[k / 64] |= ((bit & 1) as u64) << (k % 64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let diag_bits = out + len - 1;
    let mut v: Vec<u64> = (0..diag_bits.div_ceil(64))
        .map(|_| rng.next_u64())
        .collect();
    if diag_bits % 64 != 0 {
        *v.last_mut().expect("non-empty") &= (1u64 << (diag_bits % 64)) - 1;
    }
    v.push(0);

    (0..out)
        .map(|r| {
            let (base, shift) = (r / 64, r % 64);
            let mut acc = 0u64;
            for (w, &xw) in x.iter().enumerate() {
                let lo = v[base + w] >> shift;
                let hi = if shift == 0 {
                    0
                } else {
                    v[base + w + 1] << (64 - shift)
                };
                acc ^= (lo | hi) & xw;
            }
            (acc.count_ones() & 1) as u8
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct matrix product with `T[r][c] = diag[r - c + len - 1]`.
    fn naive(input: &[u8], out: usize, seed: u64) -> Vec<u8> {
        let len = input.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let diag_bits = out + len - 1;
        let words: Vec<u64> = (0..diag_bits.div_ceil(64))
            .map(|_| rng.next_u64())
            .collect();
        let diag = |i: usize| ((words[i / 64] >> (i % 64)) & 1) as u8;
        (0..out)
            .map(|r| (0..len).fold(0u8, |acc, c| acc ^ (diag(r + len - 1 - c) & input[c])))
            .collect()
    }

    #[test]
    fn matches_direct_product() {
        let input: Vec<u8> = (0..300u32).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
        for out in [1, 63, 64, 65, 200] {
            assert_eq!(toeplitz_block(&input, out, 9, 0), naive(&input, out, 9));
        }
    }

    #[test]
    fn lengths_and_determinism() {
        let input: Vec<u8> = (0..40_000u32).map(|i| (i.count_ones() % 2) as u8).collect();
        assert!(extract(&input, 0, 1).unwrap().is_empty());
        let a = extract(&input, 12_345, 1).unwrap();
        assert_eq!(a.len(), 12_345);
        assert_eq!(a, extract(&input, 12_345, 1).unwrap());
        assert_ne!(a, extract(&input, 12_345, 2).unwrap());
        assert!(matches!(
            extract(&input, 40_001, 1),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn linear_over_gf2() {
        let a: Vec<u8> = (0..5000u32).map(|i| (i % 3 == 0) as u8).collect();
        let b: Vec<u8> = (0..5000u32).map(|i| (i % 5 == 1) as u8).collect();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let (ha, hb, hs) = (
            extract(&a, 1000, 4).unwrap(),
            extract(&b, 1000, 4).unwrap(),
            extract(&sum, 1000, 4).unwrap(),
        );
        assert!(ha.iter().zip(&hb).zip(&hs).all(|((x, y), z)| x ^ y == *z));
    }
}
