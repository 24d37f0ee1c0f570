//! Synthetic desk-scale dataset whose correct labels are known by
//! construction.
//!
//! Ten level-1 sections each own a private vocabulary of pseudo-words. Each
//! section's words live in their own two embedding axes, so vectors of
//! different sections are orthogonal and every query built from one
//! section's words can only match that section.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::LabeledExample;
use crate::preprocess::{lemmatize_word, DEFAULT_STOPWORDS};

pub const SECTIONS: usize = 10;
pub const WORDS_PER_SECTION: usize = 6;
pub const AXES_PER_SECTION: usize = 2;
pub const FIXTURE_DIM: usize = SECTIONS * AXES_PER_SECTION;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_QUERIES: usize = 120;

const CONSONANTS: &[u8] = b"bdfgklmnprtvz";
const VOWELS: &[u8] = b"aeiou";
const NOISE_WORDS: &[&str] = &["qxv", "zzqx", "wkrj", "xqzt"];
const FILLERS: &[&str] = &["the", "of", "and", "for", "with"];

#[derive(Debug, Clone)]
pub struct Section {
    pub level1: String,
    pub level5: String,
    pub words: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub sections: Vec<Section>,
    pub taxonomy_csv: String,
    pub embeddings_txt: String,
    seed: u64,
}

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub taxonomy: PathBuf,
    pub embeddings: PathBuf,
    pub queries: PathBuf,
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    (0..3)
        .flat_map(|_| {
            [
                CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char,
                VOWELS[rng.gen_range(0..VOWELS.len())] as char,
            ]
        })
        .collect()
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

impl FixtureSet {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used: BTreeSet<String> = DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect();
        used.extend(NOISE_WORDS.iter().map(|s| s.to_string()));

        let mut sections = Vec::with_capacity(SECTIONS);
        for k in 0..SECTIONS {
            let mut words = Vec::with_capacity(WORDS_PER_SECTION);
            while words.len() < WORDS_PER_SECTION {
                let w = pseudo_word(&mut rng);
                if lemmatize_word(&w) == w && used.insert(w.clone()) {
                    words.push(w);
                }
            }
            let level5 = format!("{k}{:04}", rng.gen_range(1000..10000));
            sections.push(Section {
                level1: k.to_string(),
                level5,
                words,
            });
        }

        let mut taxonomy_csv = String::from("level,code,heading\n");
        for s in &sections {
            for level in 1..=5usize {
                let heading = if level == 5 {
                    let (head, tail) = s.words.split_at(WORDS_PER_SECTION - 1);
                    format!("{} and {}", capitalize(&head.join(" ")), tail[0])
                } else {
                    capitalize(&s.words[..level.min(WORDS_PER_SECTION)].join(" "))
                };
                let _ = writeln!(taxonomy_csv, "{level},{},{heading}", &s.level5[..level]);
            }
        }

        let mut embeddings_txt = String::new();
        for (k, s) in sections.iter().enumerate() {
            for w in &s.words {
                let mut v = vec![0.0f64; FIXTURE_DIM];
                for axis in 0..AXES_PER_SECTION {
                    v[k * AXES_PER_SECTION + axis] = rng.gen_range(0.2..1.0);
                }
                embeddings_txt.push_str(w);
                for x in v {
                    let _ = write!(embeddings_txt, " {x:.6}");
                }
                embeddings_txt.push('\n');
            }
        }

        Self {
            sections,
            taxonomy_csv,
            embeddings_txt,
            seed,
        }
    }

    /// `n` labelled queries. Each mixes one to three words of a single
    /// section with random casing, punctuation, stopwords and out-of-vocabulary
    /// noise; the gold label is that section's level-1 code.
    pub fn queries(&self, n: usize) -> Vec<LabeledExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x05ee_d0f0_e1e5);
        let mut queries: Vec<LabeledExample> = (0..n)
            .map(|i| {
                let section = &self.sections[i % SECTIONS];
                let count = rng.gen_range(1..=3);
                let mut parts: Vec<String> = section
                    .words
                    .choose_multiple(&mut rng, count)
                    .map(|w| match rng.gen_range(0..3) {
                        0 => w.to_uppercase(),
                        1 => capitalize(w),
                        _ => w.clone(),
                    })
                    .collect();
                if rng.gen_bool(0.3) {
                    parts.push(FILLERS.choose(&mut rng).unwrap().to_string());
                }
                if rng.gen_bool(0.3) {
                    parts.push(NOISE_WORDS.choose(&mut rng).unwrap().to_uppercase());
                }
                parts.shuffle(&mut rng);
                let sep = [" ", " / ", "-", ", "].choose(&mut rng).unwrap();
                LabeledExample {
                    content: parts.join(sep),
                    gold_level1: section.level1.clone(),
                }
            })
            .collect();
        queries.shuffle(&mut rng);
        queries
    }

    pub fn queries_csv(&self, n: usize) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["content", "gold_level1"]).unwrap();
        for q in self.queries(n) {
            w.write_record([&q.content, &q.gold_level1]).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Writes `taxonomy.csv`, `embeddings.txt` and `queries.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, num_queries: usize) -> Result<FixturePaths> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = FixturePaths {
            taxonomy: dir.join("taxonomy.csv"),
            embeddings: dir.join("embeddings.txt"),
            queries: dir.join("queries.csv"),
        };
        let write = |path: &Path, text: &str| fs::write(path, text).map_err(|e| Error::io(path, e));
        write(&paths.taxonomy, &self.taxonomy_csv)?;
        write(&paths.embeddings, &self.embeddings_txt)?;
        write(&paths.queries, &self.queries_csv(num_queries))?;
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingTable;
    use crate::preprocess::{preprocess, PipelineConfig};
    use crate::taxonomy::Taxonomy;

    #[test]
    fn deterministic_for_seed() {
        let a = FixtureSet::generate(7);
        let b = FixtureSet::generate(7);
        assert_eq!(a.taxonomy_csv, b.taxonomy_csv);
        assert_eq!(a.embeddings_txt, b.embeddings_txt);
        assert_eq!(a.queries_csv(150), b.queries_csv(150));
        assert_ne!(a.embeddings_txt, FixtureSet::generate(8).embeddings_txt);
    }

    #[test]
    fn files_load_cleanly() {
        let f = FixtureSet::generate(DEFAULT_SEED);
        let tax = Taxonomy::from_reader(f.taxonomy_csv.as_bytes()).unwrap();
        assert!(tax.warnings().is_empty());
        assert_eq!(tax.entries_at(5).count(), SECTIONS);
        let table = EmbeddingTable::from_reader(f.embeddings_txt.as_bytes())
            .unwrap()
            .unwrap();
        assert_eq!(table.dim(), FIXTURE_DIM);
        assert_eq!(table.vocab_size(), SECTIONS * WORDS_PER_SECTION);
    }

    #[test]
    fn sections_are_orthogonal() {
        let f = FixtureSet::generate(DEFAULT_SEED);
        let table = EmbeddingTable::from_reader(f.embeddings_txt.as_bytes())
            .unwrap()
            .unwrap();
        for (i, a) in f.sections.iter().enumerate() {
            for b in &f.sections[i + 1..] {
                for wa in &a.words {
                    for wb in &b.words {
                        let dot: f32 = table
                            .lookup(wa)
                            .unwrap()
                            .iter()
                            .zip(table.lookup(wb).unwrap())
                            .map(|(x, y)| x * y)
                            .sum();
                        assert_eq!(dot, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn query_words_come_from_their_section() {
        let f = FixtureSet::generate(DEFAULT_SEED);
        let cfg = PipelineConfig::default();
        let queries = f.queries(DEFAULT_QUERIES);
        assert_eq!(queries.len(), DEFAULT_QUERIES);
        for q in queries {
            let section = &f.sections[q.gold_level1.parse::<usize>().unwrap()];
            let tokens = preprocess(&q.content, &cfg);
            assert!(
                tokens.iter().any(|t| section.words.contains(t)),
                "{}",
                q.content
            );
            for t in &tokens {
                assert!(
                    section.words.contains(t) || NOISE_WORDS.contains(&t.as_str()),
                    "{t}"
                );
            }
        }
    }
}
