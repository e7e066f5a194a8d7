//! Reproducible dataset assembly: per-type mixing, per-query derived seeds,
//! split assignment, and skip accounting.

use rand::Rng;
use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::inject::{InjectContext, InjectError, inject_with_rng};
use super::{ConfusionTable, CorpusError, ErrorType, QueryPair, Split, corpus_alphabet};

/// Per-type proportions; must sum to 1 within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub wrong: f64,
    pub missing: f64,
    pub disorder: f64,
}

impl Default for MixSpec {
    fn default() -> Self {
        MixSpec { wrong: 1.0 / 3.0, missing: 1.0 / 3.0, disorder: 1.0 / 3.0 }
    }
}

impl MixSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let parts = [self.wrong, self.missing, self.disorder];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p))
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(CorpusError::InvalidMix(format!("{parts:?}")));
        }
        Ok(())
    }

    fn proportions(&self) -> [f64; 3] {
        [self.wrong, self.missing, self.disorder]
    }

    /// Exact per-type counts for `n` samples by largest remainder.
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let props = self.proportions();
        let mut counts = [0usize; 3];
        let mut fracs = [(0.0f64, 0usize); 3];
        let mut assigned = 0;
        for (k, p) in props.iter().enumerate() {
            let exact = p * n as f64;
            counts[k] = exact.floor() as usize;
            assigned += counts[k];
            fracs[k] = (exact - exact.floor(), k);
        }
        fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for (_, k) in fracs.iter().take(n - assigned) {
            counts[*k] += 1;
        }
        counts
    }
}

impl std::str::FromStr for MixSpec {
    type Err = String;

    /// Accepts `w,m,d` where each part is a decimal or a fraction like `1/3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated proportions, got {s:?}"));
        }
        let parse_one = |p: &str| -> Result<f64, String> {
            if let Some((num, den)) = p.split_once('/') {
                let num: f64 = num.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
                let den: f64 = den.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
                if den == 0.0 {
                    return Err(format!("{p:?}: zero denominator"));
                }
                Ok(num / den)
            } else {
                p.parse().map_err(|e| format!("{p:?}: {e}"))
            }
        };
        let mix = MixSpec {
            wrong: parse_one(parts[0])?,
            missing: parse_one(parts[1])?,
            disorder: parse_one(parts[2])?,
        };
        mix.validate().map_err(|e| e.to_string())?;
        Ok(mix)
    }
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub mix: MixSpec,
    pub seed: u64,
    /// Number of composed injections per query; 1 matches the single-error
    /// invariants.
    pub repeat: usize,
    /// Substitute from the corpus alphabet when a unit has no confusion
    /// entry.
    pub fallback: bool,
    pub dev: usize,
    pub test: usize,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            mix: MixSpec::default(),
            seed: 0,
            repeat: 1,
            fallback: true,
            dev: 0,
            test: 0,
        }
    }
}

/// Queries that could not receive the requested error, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipStats {
    pub too_short: usize,
    pub no_confusable: usize,
    pub no_swappable: usize,
    /// Composed injections that collapsed back to the clean query.
    pub degenerate: usize,
}

impl SkipStats {
    pub fn total(&self) -> usize {
        self.too_short + self.no_confusable + self.no_swappable + self.degenerate
    }
}

#[derive(Debug, Clone)]
pub struct BuiltDataset {
    pub pairs: Vec<QueryPair>,
    pub skips: SkipStats,
}

impl BuiltDataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &QueryPair> {
        self.pairs.iter().filter(move |p| p.split == split)
    }
}

/// Derive a per-query seed from the run seed and the sample id, so
/// generation is order-independent and parallelizable.
pub(crate) fn derive_seed(global: u64, id: &str, salt: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(id.as_bytes());
    hasher.update([0u8]);
    hasher.update(salt.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Build noisy/clean pairs from deduplicated clean entries.
///
/// Each query is assigned an error type so that per-type frequencies match
/// `mix` up to rounding; queries the assignment cannot noise are skipped
/// and counted. Deterministic: the same inputs and seed produce identical
/// output, independent of platform.
pub fn build_dataset(
    clean: &[(String, String)],
    table: &ConfusionTable,
    opts: &DatasetOptions,
) -> Result<BuiltDataset, CorpusError> {
    if clean.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if opts.repeat == 0 {
        return Err(CorpusError::InvalidRepeat);
    }
    opts.mix.validate()?;

    let alphabet = corpus_alphabet(clean.iter().map(|(_, q)| q.as_str()));
    let ctx = InjectContext { table, alphabet: &alphabet, fallback: opts.fallback };

    // Type assignment: exact counts, deterministically shuffled.
    let counts = opts.mix.counts(clean.len());
    let mut kinds: Vec<ErrorType> = Vec::with_capacity(clean.len());
    for (k, kind) in ErrorType::ALL.iter().enumerate() {
        kinds.extend(std::iter::repeat_n(*kind, counts[k]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    kinds.shuffle(&mut rng);

    let mut pairs: Vec<QueryPair> = Vec::with_capacity(clean.len());
    let mut skips = SkipStats::default();
    'queries: for ((id, q_clean), kind) in clean.iter().zip(kinds) {
        // Salted retries absorb compositions that undo themselves.
        'attempts: for attempt in 0..8 {
            let seed = derive_seed(opts.seed, id, attempt);
            let mut qrng = ChaCha8Rng::seed_from_u64(seed);
            let mut current = q_clean.clone();
            let mut last: Option<(ErrorType, usize)> = None;
            for step in 0..opts.repeat {
                let step_kind = if step == 0 { kind } else { draw_kind(&opts.mix, &mut qrng) };
                match inject_with_rng(&current, step_kind, &mut qrng, &ctx) {
                    Ok(inj) => {
                        current = inj.q_noise;
                        last = Some((inj.kind, inj.error_pos));
                    }
                    Err(e) => {
                        count_skip(&mut skips, &e);
                        continue 'queries;
                    }
                }
            }
            if current == *q_clean {
                continue 'attempts;
            }
            let (error, error_pos) = last.expect("repeat >= 1 guarantees one injection");
            pairs.push(QueryPair {
                id: id.clone(),
                q_noise: current,
                q_clean: q_clean.clone(),
                error,
                error_pos,
                split: Split::Train,
            });
            continue 'queries;
        }
        skips.degenerate += 1;
    }

    if opts.dev + opts.test > pairs.len() {
        return Err(CorpusError::SplitTooLarge {
            dev: opts.dev,
            test: opts.test,
            pairs: pairs.len(),
        });
    }

    // Split assignment on shuffled indices; emission order stays corpus
    // order.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng);
    for (rank, idx) in order.into_iter().enumerate() {
        pairs[idx].split = if rank < opts.test {
            Split::Test
        } else if rank < opts.test + opts.dev {
            Split::Dev
        } else {
            Split::Train
        };
    }

    Ok(BuiltDataset { pairs, skips })
}

fn draw_kind(mix: &MixSpec, rng: &mut ChaCha8Rng) -> ErrorType {
    let x: f64 = rng.random();
    if x < mix.wrong {
        ErrorType::WrongWords
    } else if x < mix.wrong + mix.missing {
        ErrorType::MissingWords
    } else {
        ErrorType::DisorderWords
    }
}

fn count_skip(skips: &mut SkipStats, err: &InjectError) {
    match err {
        InjectError::TooShort { .. } => skips.too_short += 1,
        InjectError::NoConfusableUnit(_) => skips.no_confusable += 1,
        InjectError::NoSwappablePair => skips.no_swappable += 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_pairs_jsonl;

    fn synthetic_corpus(n: usize) -> Vec<(String, String)> {
        // Whitespace-free queries over a small alphabet, lengths 3..=8.
        let alphabet = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'];
        (0..n)
            .map(|i| {
                let len = 3 + i % 6;
                let q: String = (0..len).map(|k| alphabet[(i * 7 + k * 3 + i / 9) % 8]).collect();
                (format!("q{i}"), format!("{q}{}", alphabet[i % 8]))
            })
            .collect()
    }

    #[test]
    fn mix_counts_exact_thirds() {
        let mix = MixSpec::default();
        assert_eq!(mix.counts(99), [33, 33, 33]);
        assert_eq!(mix.counts(100).iter().sum::<usize>(), 100);
    }

    #[test]
    fn mix_parsing() {
        let mix: MixSpec = "1/3,1/3,1/3".parse().unwrap();
        assert!((mix.wrong - 1.0 / 3.0).abs() < 1e-12);
        let mix: MixSpec = "0.5, 0.25, 0.25".parse().unwrap();
        assert_eq!(mix.counts(8), [4, 2, 2]);
        assert!("0.5,0.6,0.2".parse::<MixSpec>().is_err());
        assert!("1,0".parse::<MixSpec>().is_err());
    }

    #[test]
    fn thirds_on_99_queries() {
        let clean = synthetic_corpus(99);
        let built = build_dataset(&clean, &ConfusionTable::empty(), &DatasetOptions::default()).unwrap();
        assert_eq!(built.skips.total(), 0);
        let mut counts = [0usize; 3];
        for p in &built.pairs {
            counts[ErrorType::ALL.iter().position(|k| *k == p.error).unwrap()] += 1;
        }
        assert_eq!(counts, [33, 33, 33]);
    }

    #[test]
    fn byte_identical_across_runs() {
        let clean = synthetic_corpus(64);
        let opts = DatasetOptions { seed: 42, dev: 8, test: 8, ..DatasetOptions::default() };
        let mut bytes_a = Vec::new();
        let mut bytes_b = Vec::new();
        let a = build_dataset(&clean, &ConfusionTable::empty(), &opts).unwrap();
        let b = build_dataset(&clean, &ConfusionTable::empty(), &opts).unwrap();
        write_pairs_jsonl(&mut bytes_a, &a.pairs).unwrap();
        write_pairs_jsonl(&mut bytes_b, &b.pairs).unwrap();
        assert!(!bytes_a.is_empty());
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn split_sizes_respected() {
        let clean = synthetic_corpus(50);
        let opts = DatasetOptions { seed: 7, dev: 10, test: 5, ..DatasetOptions::default() };
        let built = build_dataset(&clean, &ConfusionTable::empty(), &opts).unwrap();
        assert_eq!(built.split(Split::Test).count(), 5);
        assert_eq!(built.split(Split::Dev).count(), 10);
        assert_eq!(built.split(Split::Train).count(), built.pairs.len() - 15);
    }

    #[test]
    fn split_too_large_rejected() {
        let clean = synthetic_corpus(10);
        let opts = DatasetOptions { dev: 8, test: 8, ..DatasetOptions::default() };
        assert!(matches!(
            build_dataset(&clean, &ConfusionTable::empty(), &opts),
            Err(CorpusError::SplitTooLarge { .. })
        ));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            build_dataset(&[], &ConfusionTable::empty(), &DatasetOptions::default()),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn short_queries_skipped_not_fatal() {
        let clean = vec![
            ("a".to_string(), "x".to_string()),
            ("b".to_string(), "wxyz".to_string()),
        ];
        let opts = DatasetOptions {
            mix: MixSpec { wrong: 0.0, missing: 1.0, disorder: 0.0 },
            ..DatasetOptions::default()
        };
        let built = build_dataset(&clean, &ConfusionTable::empty(), &opts).unwrap();
        assert_eq!(built.pairs.len(), 1);
        assert_eq!(built.skips.too_short, 1);
    }

    #[test]
    fn repeat_composes_two_errors() {
        let clean = synthetic_corpus(30);
        let opts = DatasetOptions { repeat: 2, seed: 3, ..DatasetOptions::default() };
        let built = build_dataset(&clean, &ConfusionTable::empty(), &opts).unwrap();
        assert!(!built.pairs.is_empty());
        for p in &built.pairs {
            assert_ne!(p.q_noise, p.q_clean);
        }
    }
}
