//! Compression-based e-processes for the fair-coin null.
//!
//! Any lossless prefix-free code induces a sub-probability
//! `q(x) = 2^(-CL(x))` by Kraft's inequality, and the capital
//! `log2 E_t = t - CL(x_1..x_t)` is then an e-process against iid fair
//! coin flips. The built-in coder is the Krichevsky-Trofimov sequential
//! estimator, whose code lengths give an exact Kraft sum of 1; external
//! byte-oriented codecs plug in through [`CompressorAdapter`] with
//! conservative 8-bits-per-byte accounting.

use crate::evcore::EProcessTrace;
use crate::{EvError, Result};

/// Running Krichevsky-Trofimov state: add-one-half symbol counts.
#[derive(Debug, Clone, Copy, Default)]
pub struct KtState {
    pub zeros: u64,
    pub ones: u64,
}

impl KtState {
    /// log2 predictive probability of `bit` given the counts so far.
    pub fn log2_predict(&self, bit: u8) -> f64 {
        let n = (self.zeros + self.ones) as f64;
        let count = if bit == 1 { self.ones } else { self.zeros } as f64;
        ((count + 0.5) / (n + 1.0)).log2()
    }

    pub fn push(&mut self, bit: u8) {
        if bit == 1 {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
    }
}

fn check_bits(bits: &[u8]) -> Result<()> {
    for (i, &b) in bits.iter().enumerate() {
        if b > 1 {
            return Err(EvError::NonBinarySymbol { index: i, value: b });
        }
    }
    Ok(())
}

/// log2 of the KT sequential probability of a bit string; 0 for the empty
/// string.
pub fn kt_log2prob(bits: &[u8]) -> Result<f64> {
    check_bits(bits)?;
    let mut state = KtState::default();
    let mut acc = 0.0;
    for &b in bits {
        acc += state.log2_predict(b);
        state.push(b);
    }
    Ok(acc)
}

/// An external lossless compressor reporting the compressed byte count for
/// a byte string. Code length in bits is 8 times the reported count.
pub trait CompressorAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn compressed_len(&self, bytes: &[u8]) -> Result<usize>;
}

/// Which coder drives [`compression_eprocess`].
pub enum Coder<'a> {
    /// Built-in Krichevsky-Trofimov coder (exact Kraft accounting).
    Kt,
    /// External byte codec through the prefix-free framing of
    /// [`frame_bits`].
    Adapter(&'a dyn CompressorAdapter),
}

/// Packs bits into a prefix-free byte framing: one leading byte holding the
/// count of zero-padding bits, then big-endian packed bits with a
/// zero-padded final byte.
pub fn frame_bits(bits: &[u8]) -> Result<Vec<u8>> {
    check_bits(bits)?;
    let pad = (8 - bits.len() % 8) % 8;
    let mut out = Vec::with_capacity(1 + (bits.len() + 7) / 8);
    out.push(pad as u8);
    let mut byte = 0u8;
    for (i, &b) in bits.iter().enumerate() {
        byte = (byte << 1) | b;
        if i % 8 == 7 {
            out.push(byte);
            byte = 0;
        }
    }
    if pad > 0 {
        out.push(byte << pad);
    }
    Ok(out)
}

/// Inverse of [`frame_bits`]; rejects malformed framings (bad padding
/// byte, nonzero padding bits, or padding with no payload).
pub fn unframe_bytes(bytes: &[u8]) -> Result<Vec<u8>> {
    let (&pad, payload) = bytes
        .split_first()
        .ok_or_else(|| EvError::InvalidArgument("empty framing".into()))?;
    if pad > 7 {
        return Err(EvError::InvalidArgument(format!("padding byte {pad} exceeds 7")));
    }
    if payload.is_empty() && pad != 0 {
        return Err(EvError::InvalidArgument("padding declared with no payload".into()));
    }
    let total = payload.len() * 8;
    let n = total - pad as usize;
    let mut bits = Vec::with_capacity(n);
    for i in 0..total {
        let bit = (payload[i / 8] >> (7 - i % 8)) & 1;
        if i < n {
            bits.push(bit);
        } else if bit != 0 {
            return Err(EvError::InvalidArgument("nonzero padding bits".into()));
        }
    }
    Ok(bits)
}

/// E-process against the fair-coin null: `log2 capital[t] = t - CL(x_1..x_t)`
/// with CL the coder's code length in bits.
pub fn compression_eprocess(bits: &[u8], coder: &Coder) -> Result<EProcessTrace> {
    check_bits(bits)?;
    let ln2 = std::f64::consts::LN_2;
    let mut ln_factors = Vec::with_capacity(bits.len());
    match coder {
        Coder::Kt => {
            let mut state = KtState::default();
            for &b in bits {
                // per-step log2 factor: 1 + log2 q(b | past)
                ln_factors.push(ln2 * (1.0 + state.log2_predict(b)));
                state.push(b);
            }
        }
        Coder::Adapter(adapter) => {
            let mut prev_log2 = 0.0;
            for t in 1..=bits.len() {
                let framed = frame_bits(&bits[..t])?;
                let cl = 8.0 * adapter.compressed_len(&framed)? as f64;
                let log2_cap = t as f64 - cl;
                ln_factors.push(ln2 * (log2_cap - prev_log2));
                prev_log2 = log2_cap;
            }
        }
    }
    EProcessTrace::from_ln_factors(ln_factors)
}

/// Exact Kraft sum of the KT coder over all strings of length `n <= 12`.
pub fn kraft_check(n: usize) -> Result<f64> {
    if n > 12 {
        return Err(EvError::InvalidArgument(format!(
            "exhaustive Kraft check limited to n <= 12, got {n}"
        )));
    }
    let mut sum = 0.0;
    for word in 0u32..(1 << n) {
        let bits: Vec<u8> = (0..n).map(|i| ((word >> i) & 1) as u8).collect();
        sum += kt_log2prob(&bits)?.exp2();
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Direct two-step recursion oracle for KT probabilities.
    fn kt_recursion_prob(bits: &[u8]) -> f64 {
        let mut zeros = 0.0;
        let mut ones = 0.0;
        let mut q = 1.0;
        for &b in bits {
            let n = zeros + ones;
            q *= if b == 1 { (ones + 0.5) / (n + 1.0) } else { (zeros + 0.5) / (n + 1.0) };
            if b == 1 {
                ones += 1.0;
            } else {
                zeros += 1.0;
            }
        }
        q
    }

    #[test]
    fn kt_log2prob_examples() {
        assert_eq!(kt_log2prob(&[]).unwrap(), 0.0);
        // (0,1): q = 1/2 * 1/4 = 1/8
        assert!((kt_log2prob(&[0, 1]).unwrap() - (-3.0)).abs() < 1e-12);
        // (0,0,0,0): q = (1/2)(3/4)(5/6)(7/8) = 105/384
        let expected = (105.0f64 / 384.0).log2();
        assert!((kt_log2prob(&[0, 0, 0, 0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - (-1.870717)).abs() < 1e-6);
        assert!(kt_log2prob(&[0, 2]).is_err());
    }

    #[test]
    fn compression_eprocess_examples() {
        let t = compression_eprocess(&[0, 1], &Coder::Kt).unwrap();
        assert!((t.final_capital() - 0.5).abs() < 1e-12);
        let t = compression_eprocess(&[0, 0, 0, 0], &Coder::Kt).unwrap();
        assert!((t.final_capital() - 4.375).abs() < 1e-12);
        let t = compression_eprocess(&[], &Coder::Kt).unwrap();
        assert_eq!(t.final_capital(), 1.0);
    }

    #[test]
    fn kt_matches_recursion_oracle() {
        for word in 0u32..64 {
            let bits: Vec<u8> = (0..6).map(|i| ((word >> i) & 1) as u8).collect();
            let got = kt_log2prob(&bits).unwrap().exp2();
            let oracle = kt_recursion_prob(&bits);
            assert!((got - oracle).abs() < 1e-14);
        }
    }

    #[test]
    fn kraft_sums_to_one() {
        assert!((kraft_check(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((kraft_check(2).unwrap() - 1.0).abs() < 1e-12);
        assert!((kraft_check(12).unwrap() - 1.0).abs() < 1e-10);
        assert!(kraft_check(13).is_err());
    }

    struct FixedLenCodec;
    impl CompressorAdapter for FixedLenCodec {
        fn name(&self) -> &str {
            "identity"
        }
        fn compressed_len(&self, bytes: &[u8]) -> Result<usize> {
            Ok(bytes.len())
        }
    }

    #[test]
    fn adapter_byte_accounting_is_conservative() {
        // identity codec: CL = 8 * framed length >= t, so capital <= 1 throughout
        let bits = [0u8, 1, 1, 0, 1, 0, 0, 1, 1];
        let t = compression_eprocess(&bits, &Coder::Adapter(&FixedLenCodec)).unwrap();
        assert!(t.capital().iter().all(|&k| k <= 1.0));
    }

    struct FailingCodec;
    impl CompressorAdapter for FailingCodec {
        fn name(&self) -> &str {
            "failing"
        }
        fn compressed_len(&self, _bytes: &[u8]) -> Result<usize> {
            Err(EvError::AdapterFailure { name: "failing".into(), message: "boom".into() })
        }
    }

    #[test]
    fn adapter_failures_surface_as_errors() {
        let err = compression_eprocess(&[0, 1], &Coder::Adapter(&FailingCodec)).unwrap_err();
        assert!(matches!(err, EvError::AdapterFailure { .. }));
    }

    #[test]
    fn framing_rejects_malformed_input() {
        assert!(unframe_bytes(&[]).is_err());
        assert!(unframe_bytes(&[9, 0xff]).is_err());
        assert!(unframe_bytes(&[3]).is_err());
        assert!(unframe_bytes(&[1, 0b0000_0001]).is_err()); // nonzero padding bit
    }

    proptest! {
        #[test]
        fn framing_round_trips(bits in proptest::collection::vec(0u8..=1, 0..200)) {
            let framed = frame_bits(&bits).unwrap();
            prop_assert_eq!(unframe_bytes(&framed).unwrap(), bits);
        }
    }
}
