//! Mapping from post-selected clicks to the paired bit sequences, plus the
//! entropy and mutual-information diagnostics that justify publishing one
//! sequence while keeping the other private.
//!
//! Channel index equals the binary value of the two-bit outcome: channel 1
//! contributes bit 0 to the private sequence and bit 1 to the public one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::optics_sim::ClickEvent;
use crate::real::Real;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("channel {0} outside 0..4")]
    ChannelOutOfRange(usize),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityDomain(f64),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("sequences are empty")]
    Empty,
}

/// Probabilities of the four two-bit outcomes `00, 01, 10, 11`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ProbVector<R: Real> {
    p: [R; 4],
}

impl<R: Real> ProbVector<R> {
    const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(p1: R, p2: R, p3: R, p4: R) -> Result<Self, CodecError> {
        let p = [p1, p2, p3, p4];
        for &x in &p {
            if !(x >= R::zero() && x <= R::one()) {
                return Err(CodecError::ProbabilityDomain(x.to_f64().unwrap_or(f64::NAN)));
            }
        }
        let sum = p.iter().fold(R::zero(), |a, &b| a + b);
        if (sum - R::one()).abs() > R::of(Self::SUM_TOLERANCE) {
            return Err(CodecError::NotNormalized(sum.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { p })
    }

    pub fn uniform() -> Self {
        let q = R::of(0.25);
        Self { p: [q, q, q, q] }
    }

    pub fn probs(&self) -> [R; 4] {
        self.p
    }

    /// Probability that the private-sequence bit is 1: `p3 + p4`.
    pub fn marginal_private(&self) -> R {
        self.p[2] + self.p[3]
    }

    /// Probability that the public-sequence bit is 1: `p2 + p4`.
    pub fn marginal_public(&self) -> R {
        self.p[1] + self.p[3]
    }
}

impl<R: Real> TryFrom<[f64; 4]> for ProbVector<R> {
    type Error = CodecError;
    fn try_from(v: [f64; 4]) -> Result<Self, CodecError> {
        ProbVector::new(R::of(v[0]), R::of(v[1]), R::of(v[2]), R::of(v[3]))
    }
}

impl<R: Real> From<ProbVector<R>> for [f64; 4] {
    fn from(v: ProbVector<R>) -> [f64; 4] {
        v.p.map(|x| x.to_f64().expect("probability fits f64"))
    }
}

/// The private sequence, the public sequence, and the optional per-event
/// XOR stream held by an auditor.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSequences {
    pub private: BitString,
    pub public: BitString,
    pub audit: Option<BitString>,
}

impl PairedSequences {
    pub fn len(&self) -> usize {
        self.private.len()
    }

    pub fn is_empty(&self) -> bool {
        self.private.is_empty()
    }

    /// Attaches the XOR audit stream.
    pub fn with_audit(mut self) -> Self {
        self.audit = Some(audit_stream(&self));
        self
    }
}

/// Maps each single-click event to one bit of each sequence: channel `c`
/// contributes its high bit to the private sequence and its low bit to the
/// public one, in event order.
pub fn encode_clicks<'a, I>(events: I) -> Result<PairedSequences, CodecError>
where
    I: IntoIterator<Item = &'a ClickEvent>,
{
    let mut private = BitString::new();
    let mut public = BitString::new();
    for event in events {
        if event.channel > 3 {
            return Err(CodecError::ChannelOutOfRange(event.channel));
        }
        private.push(event.channel & 0b10 != 0);
        public.push(event.channel & 0b01 != 0);
    }
    Ok(PairedSequences {
        private,
        public,
        audit: None,
    })
}

/// Recovers the channel index from one bit pair; inverse of [`encode_clicks`].
pub fn decode_bit_pair(private: bool, public: bool) -> usize {
    (private as usize) << 1 | public as usize
}

/// Shannon entropy of a binary outcome, in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy<R: Real>(p: R) -> Result<R, CodecError> {
    if !(p >= R::zero() && p <= R::one()) {
        return Err(CodecError::ProbabilityDomain(p.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(h(p))
}

fn h<R: Real>(p: R) -> R {
    let q = R::one() - p;
    let mut out = R::zero();
    if p > R::zero() {
        out = out - p * p.log2();
    }
    if q > R::zero() {
        out = out - q * q.log2();
    }
    out
}

/// Absolute difference of the two sequence entropies implied by the state,
/// `|H(p3 + p4) - H(p2 + p4)|`.
pub fn entropy_distance<R: Real>(probs: &ProbVector<R>) -> R {
    (h(probs.marginal_private()) - h(probs.marginal_public())).abs()
}

/// Largest achievable entropy distance when both one-marginals are confined
/// to `[lo, hi]`.
///
/// `H` is concave with its maximum at 1/2, so the extremes are the interval
/// point nearest 1/2 against the endpoint with the smaller entropy.
pub fn max_entropy_distance<R: Real>(lo: R, hi: R) -> Result<R, CodecError> {
    for &x in &[lo, hi] {
        if !(x >= R::zero() && x <= R::one()) {
            return Err(CodecError::ProbabilityDomain(x.to_f64().unwrap_or(f64::NAN)));
        }
    }
    if lo > hi {
        return Err(CodecError::ProbabilityDomain(
            lo.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let half = R::of(0.5);
    let nearest_half = if lo > half {
        lo
    } else if hi < half {
        hi
    } else {
        half
    };
    let h_max = h(nearest_half);
    let h_min = h(lo).min(h(hi));
    Ok(h_max - h_min)
}

/// Plug-in mutual information of the two sequences from their empirical
/// 2x2 joint distribution, in bits. Never negative.
pub fn mutual_information_estimate(seqs: &PairedSequences) -> Result<f64, CodecError> {
    let n = seqs.len();
    if n == 0 || seqs.public.len() != n {
        return Err(CodecError::Empty);
    }
    let mut joint = [[0usize; 2]; 2];
    for i in 0..n {
        joint[seqs.private.get(i) as usize][seqs.public.get(i) as usize] += 1;
    }
    let total = n as f64;
    let marg_private = [
        (joint[0][0] + joint[0][1]) as f64 / total,
        (joint[1][0] + joint[1][1]) as f64 / total,
    ];
    let marg_public = [
        (joint[0][0] + joint[1][0]) as f64 / total,
        (joint[0][1] + joint[1][1]) as f64 / total,
    ];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p_ab = joint[a][b] as f64 / total;
            if p_ab > 0.0 {
                mi += p_ab * (p_ab / (marg_private[a] * marg_public[b])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Acceptance threshold for the plug-in estimate: ten times its expected
/// bias of `1 / (2 N ln 2)` for a 2x2 table, floored at 1e-4 so short
/// sequences are not rejected on estimator noise alone.
pub fn mutual_information_threshold(len: usize) -> f64 {
    let bias = 1.0 / (2.0 * len.max(1) as f64 * std::f64::consts::LN_2);
    (10.0 * bias).max(1e-4)
}

/// Elementwise XOR of the two sequences; the auditor's stream.
pub fn audit_stream(seqs: &PairedSequences) -> BitString {
    seqs.private.xor(&seqs.public)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn events(channels: &[usize]) -> Vec<ClickEvent> {
        channels
            .iter()
            .enumerate()
            .map(|(i, &c)| ClickEvent {
                pulse_index: i as u64,
                channel: c,
            })
            .collect()
    }

    #[test]
    fn channel_one_maps_to_private_zero_public_one() {
        let seqs = encode_clicks(&events(&[1])).unwrap();
        assert_eq!(seqs.private.to_string01(), "0");
        assert_eq!(seqs.public.to_string01(), "1");
    }

    #[test]
    fn channel_two_maps_to_private_one_public_zero() {
        let seqs = encode_clicks(&events(&[2])).unwrap();
        assert_eq!(seqs.private.to_string01(), "1");
        assert_eq!(seqs.public.to_string01(), "0");
    }

    #[test]
    fn encoding_preserves_order() {
        let seqs = encode_clicks(&events(&[0, 3, 1])).unwrap();
        assert_eq!(seqs.private.to_string01(), "010");
        assert_eq!(seqs.public.to_string01(), "011");
    }

    #[test]
    fn channel_out_of_range_rejected() {
        let err = encode_clicks(&events(&[4])).unwrap_err();
        assert_eq!(err, CodecError::ChannelOutOfRange(4));
    }

    #[test]
    fn binary_entropy_reference_points() {
        assert_eq!(binary_entropy(0.5f64).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0f64).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0f64).unwrap(), 0.0);
        let h52 = binary_entropy(0.52f64).unwrap();
        assert!((h52 - 0.998_845_535_995).abs() < 1e-10);
        assert!((h52 - 0.998_845_5).abs() < 1e-6);
        assert!(binary_entropy(1.2f64).is_err());
    }

    #[test]
    fn entropy_distance_reference_points() {
        let uniform = ProbVector::<f64>::uniform();
        assert_eq!(entropy_distance(&uniform), 0.0);

        // Both marginals 0.5.
        let balanced = ProbVector::new(0.24, 0.26, 0.26, 0.24).unwrap();
        assert!(entropy_distance(&balanced).abs() < 1e-15);

        // Marginals 0.48 vs 0.50: |H(0.48) - 1| = 0.0011544640048...
        let skewed = ProbVector::new(0.26, 0.26, 0.24, 0.24).unwrap();
        let d = entropy_distance(&skewed);
        assert!((d - 0.001_154_464_004_8).abs() < 1e-10, "d = {d}");
        assert!((d - 0.001_154_7).abs() < 1e-6);
    }

    #[test]
    fn max_entropy_distance_reference_points() {
        assert_eq!(max_entropy_distance(0.5f64, 0.5).unwrap(), 0.0);

        // 1 - H(0.6) = 0.0290494055453...
        let d = max_entropy_distance(0.4f64, 0.6).unwrap();
        assert!((d - 0.029_049_405_545_3).abs() < 1e-10, "d = {d}");
        assert!((d - 0.029_049).abs() < 1e-5);
        assert!((d - 0.028).abs() < 0.002);

        // 1 - H(0.52) = 0.0011544640048...
        let d = max_entropy_distance(0.48f64, 0.52).unwrap();
        assert!((d - 0.001_154_464_004_8).abs() < 1e-10);

        // Interval not containing 1/2.
        let d = max_entropy_distance(0.6f64, 0.7).unwrap();
        let expected = binary_entropy(0.6).unwrap() - binary_entropy(0.7).unwrap();
        assert!((d - expected).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_extremes() {
        let q1 = BitString::from_str01("01010110");
        let identical = PairedSequences {
            private: q1.clone(),
            public: q1.clone(),
            audit: None,
        };
        let mi = mutual_information_estimate(&identical).unwrap();
        let h1 = binary_entropy(q1.count_ones() as f64 / q1.len() as f64).unwrap();
        assert!((mi - h1).abs() < 1e-12);

        let negated = PairedSequences {
            private: q1.clone(),
            public: q1.not(),
            audit: None,
        };
        let mi = mutual_information_estimate(&negated).unwrap();
        assert!((mi - h1).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_near_zero_for_independent_streams() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let n = 1_000_000;
        let seqs = PairedSequences {
            private: BitString::random(&mut rng, n),
            public: BitString::random(&mut rng, n),
            audit: None,
        };
        let mi = mutual_information_estimate(&seqs).unwrap();
        assert!(mi < 1e-4, "MI = {mi}");
        assert!(mi < mutual_information_threshold(n).max(1e-4));
    }

    #[test]
    fn audit_stream_xor_table() {
        let seqs = PairedSequences {
            private: BitString::from_str01("0011"),
            public: BitString::from_str01("0101"),
            audit: None,
        };
        assert_eq!(audit_stream(&seqs).to_string01(), "0110");
    }

    proptest! {
        #[test]
        fn encode_decode_bijection(channels in proptest::collection::vec(0usize..4, 1..100)) {
            let seqs = encode_clicks(&events(&channels)).unwrap();
            for (i, &c) in channels.iter().enumerate() {
                prop_assert_eq!(decode_bit_pair(seqs.private.get(i), seqs.public.get(i)), c);
            }
        }

        #[test]
        fn audit_xor_public_recovers_private(channels in proptest::collection::vec(0usize..4, 1..100)) {
            let seqs = encode_clicks(&events(&channels)).unwrap().with_audit();
            let audit = seqs.audit.clone().unwrap();
            prop_assert_eq!(audit.xor(&seqs.public), seqs.private);
        }

        #[test]
        fn entropy_distance_invariant_under_double_complement(
            raw in proptest::collection::vec(0.01f64..1.0, 4)
        ) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let v = ProbVector::new(p[0], p[1], p[2], p[3]).unwrap();
            // Swapping p1<->p4 and p2<->p3 complements both marginals.
            let w = ProbVector::new(p[3], p[2], p[1], p[0]).unwrap();
            prop_assert!((entropy_distance(&v) - entropy_distance(&w)).abs() < 1e-12);
        }

        #[test]
        fn entropy_distance_zero_when_marginals_equal(
            p2 in 0.0f64..0.5, p4 in 0.0f64..0.4,
        ) {
            // p2 = p3 forces equal marginals.
            let p3 = p2;
            let p1 = 1.0 - p2 - p3 - p4;
            prop_assume!(p1 >= 0.0);
            let v = ProbVector::new(p1, p2, p3, p4).unwrap();
            prop_assert!(entropy_distance(&v) < 1e-12);
        }

        #[test]
        fn entropy_distance_bounded_by_max_over_band(
            a in 0.24f64..0.26, b in 0.24f64..0.26, c in 0.24f64..0.26,
        ) {
            // Construct a vector whose marginals both land in [0.48, 0.52].
            let d = 1.0 - a - b - c;
            prop_assume!((0.22..=0.28).contains(&d));
            let v = ProbVector::new(a, b, c, d).unwrap();
            let m_private = v.marginal_private();
            let m_public = v.marginal_public();
            prop_assume!((0.48..=0.52).contains(&m_private));
            prop_assume!((0.48..=0.52).contains(&m_public));
            let bound = max_entropy_distance(0.48, 0.52).unwrap();
            prop_assert!(entropy_distance(&v) <= bound + 1e-15);
        }
    }
}
