use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::KnowledgeVector;
use crate::error::{Error, Result};

/// 2^61 - 1, a Mersenne prime.
pub const DEFAULT_PRIME: u64 = (1 << 61) - 1;
/// Fixed-point resolution: six decimal places.
pub const DEFAULT_SCALE: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldElement(pub u64);

/// Prime field plus the fixed-point scale used to embed reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationField {
    prime: u64,
    scale: u64,
}

impl Default for AggregationField {
    fn default() -> Self {
        Self {
            prime: DEFAULT_PRIME,
            scale: DEFAULT_SCALE,
        }
    }
}

impl AggregationField {
    pub fn new(prime: u64, scale: u64) -> Result<Self> {
        if prime >= 1 << 63 {
            return Err(Error::invalid("prime", "must be below 2^63"));
        }
        if !primal_check::miller_rabin(prime) || prime < 3 {
            return Err(Error::NotPrime(prime));
        }
        if scale == 0 {
            return Err(Error::invalid("scale", "must be positive"));
        }
        Ok(Self { prime, scale })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Largest magnitude representable after the centered lift.
    fn half(&self) -> u64 {
        (self.prime - 1) / 2
    }

    /// Checks that `participants` values of magnitude at most `magnitude`
    /// can be summed without wrapping around the field.
    pub fn check_headroom(&self, participants: usize, magnitude: f64) -> Result<()> {
        let per = (magnitude * self.scale as f64).round() + 1.0;
        let total = participants as f64 * per;
        if !total.is_finite() || total >= self.half() as f64 {
            return Err(Error::FieldOverflow {
                participants,
                magnitude,
                prime: self.prime,
                scale: self.scale,
            });
        }
        Ok(())
    }

    pub fn encode(&self, x: f64) -> Result<FieldElement> {
        let v = (x * self.scale as f64).round();
        if !v.is_finite() || v.abs() > self.half() as f64 {
            return Err(Error::FieldOverflow {
                participants: 1,
                magnitude: x.abs(),
                prime: self.prime,
                scale: self.scale,
            });
        }
        let v = v as i128;
        let p = self.prime as i128;
        Ok(FieldElement(v.rem_euclid(p) as u64))
    }

    pub fn decode(&self, e: FieldElement) -> f64 {
        let lifted = if e.0 > self.half() {
            e.0 as i128 - self.prime as i128
        } else {
            e.0 as i128
        };
        lifted as f64 / self.scale as f64
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(((a.0 as u128 + b.0 as u128) % self.prime as u128) as u64)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if a.0 == 0 {
            a
        } else {
            FieldElement(self.prime - a.0)
        }
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.random_range(0..self.prime))
    }
}

fn pair_mask(field: &AggregationField, mask_seed: u64, stream: u64, dims: usize) -> Vec<FieldElement> {
    let mut rng = ChaCha20Rng::seed_from_u64(mask_seed);
    rng.set_stream(stream);
    (0..dims).map(|_| field.random(&mut rng)).collect()
}

fn validate_contributions(contributions: &[(KnowledgeVector, f64)], field: &AggregationField) -> Result<usize> {
    let dims = contributions
        .first()
        .map(|(k, _)| k.dims())
        .ok_or_else(|| Error::invalid("contributions", "at least one contribution is required"))?;
    let mut magnitude = 0.0f64;
    for (k, w) in contributions {
        if k.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: k.dims(),
            });
        }
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::invalid("weight", format!("{w} must be finite and >= 0")));
        }
        for x in k.values() {
            if !x.is_finite() {
                return Err(Error::invalid("knowledge", "coordinates must be finite"));
            }
            magnitude = magnitude.max((w * x).abs());
        }
    }
    field.check_headroom(contributions.len(), magnitude)?;
    Ok(dims)
}

/// What each participant sends to the aggregator: its weighted, encoded
/// vector plus the sum of its pairwise masks. Masks for the pair (i, j) are
/// added by i and subtracted by j, so they cancel in the total.
pub fn masked_submissions(
    contributions: &[(KnowledgeVector, f64)],
    field: &AggregationField,
    mask_seed: u64,
) -> Result<Vec<Vec<FieldElement>>> {
    let dims = validate_contributions(contributions, field)?;
    let n = contributions.len();
    let mut submissions = contributions
        .iter()
        .map(|(k, w)| k.values().iter().map(|x| field.encode(w * x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    for i in 0..n {
        for j in (i + 1)..n {
            let mask = pair_mask(field, mask_seed, (i * n + j) as u64, dims);
            for (d, m) in mask.into_iter().enumerate() {
                submissions[i][d] = field.add(submissions[i][d], m);
                submissions[j][d] = field.add(submissions[j][d], field.neg(m));
            }
        }
    }
    Ok(submissions)
}

/// Coordinate-wise field sum of submissions.
pub fn aggregate_submissions(submissions: &[Vec<FieldElement>], field: &AggregationField) -> Vec<FieldElement> {
    let dims = submissions.first().map_or(0, Vec::len);
    (0..dims)
        .map(|d| {
            submissions
                .iter()
                .fold(FieldElement(0), |acc, s| field.add(acc, s[d]))
        })
        .collect()
}

/// Weighted sum of contributions computed through the masked protocol.
/// Rejects inputs that could wrap around the field before touching them.
pub fn secure_aggregate(
    contributions: &[(KnowledgeVector, f64)],
    field: &AggregationField,
    mask_seed: u64,
) -> Result<KnowledgeVector> {
    let submissions = masked_submissions(contributions, field, mask_seed)?;
    let total = aggregate_submissions(&submissions, field);
    Ok(KnowledgeVector(total.into_iter().map(|e| field.decode(e)).collect()))
}
