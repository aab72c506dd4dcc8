//! Context-specific property selection.
//!
//! Entity articles are topic-modeled with LDA; the top words of every topic
//! are scored against the property descriptions with TF-IDF, and properties
//! whose text contains the surviving words are ranked by how often they do.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::text::preprocess;
use crate::text::{lemmatize, tokenize, Stopwords};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectionError {
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("corpus has no tokens after preprocessing")]
    EmptyVocabulary,
    #[error("invalid selection config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub tfidf_threshold: f64,
    /// A property must be used strictly more often than this.
    pub count_threshold: u64,
    pub num_topics: usize,
    pub num_properties: usize,
    pub lda_iterations: usize,
    pub words_per_topic: usize,
    /// Dirichlet prior on document-topic mixtures; `None` means `50 / n_t`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            tfidf_threshold: 2.5,
            count_threshold: 1000,
            num_topics: 5,
            num_properties: 50,
            lda_iterations: 200,
            words_per_topic: 10,
            alpha: None,
            beta: 0.01,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.num_topics == 0 {
            return Err(SelectionError::InvalidConfig("num_topics must be >= 1"));
        }
        if self.num_properties == 0 {
            return Err(SelectionError::InvalidConfig("num_properties must be >= 1"));
        }
        if self.lda_iterations == 0 {
            return Err(SelectionError::InvalidConfig("lda_iterations must be >= 1"));
        }
        if self.words_per_topic == 0 {
            return Err(SelectionError::InvalidConfig("words_per_topic must be >= 1"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) || self.alpha.is_some_and(|a| !(a.is_finite() && a > 0.0)) {
            return Err(SelectionError::InvalidConfig("priors must be positive"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.num_topics as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDescription {
    pub id: String,
    pub label: String,
    pub description: String,
    pub count: u64,
}

impl PropertyDescription {
    /// Lemmatized tokens of label and description together.
    pub fn text_tokens(&self) -> Vec<String> {
        let mut toks: Vec<String> = tokenize(&self.label).iter().map(|t| lemmatize(t)).collect();
        toks.extend(tokenize(&self.description).iter().map(|t| lemmatize(t)));
        toks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    /// `n_t x V`, rows sum to one.
    pub topic_word: Vec<Vec<f64>>,
    /// `D x n_t`, rows sum to one.
    pub doc_topic: Vec<Vec<f64>>,
    pub vocabulary: Vec<String>,
}

/// Collapsed Gibbs sampler state for LDA with symmetric priors.
pub struct GibbsSampler {
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<Vec<u32>>,
    topic_total: Vec<u32>,
    vocabulary: Vec<String>,
    alpha: f64,
    beta: f64,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(corpus: &[Vec<String>], num_topics: usize, alpha: f64, beta: f64, seed: u64) -> Result<Self, SelectionError> {
        if corpus.is_empty() {
            return Err(SelectionError::EmptyCorpus);
        }
        let vocab: BTreeSet<&String> = corpus.iter().flatten().collect();
        if vocab.is_empty() {
            return Err(SelectionError::EmptyVocabulary);
        }
        let vocabulary: Vec<String> = vocab.into_iter().cloned().collect();
        let ids: BTreeMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
        let docs: Vec<Vec<usize>> = corpus
            .iter()
            .map(|d| d.iter().map(|w| ids[w.as_str()]).collect())
            .collect();

        let k = num_topics;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut topic_word = vec![vec![0u32; vocabulary.len()]; k];
        let mut topic_total = vec![0u32; k];
        let mut assignments = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let mut z = Vec::with_capacity(doc.len());
            for &w in doc {
                let t = rng.random_range(0..k);
                doc_topic[d][t] += 1;
                topic_word[t][w] += 1;
                topic_total[t] += 1;
                z.push(t);
            }
            assignments.push(z);
        }
        Ok(Self {
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            vocabulary,
            alpha,
            beta,
            rng,
            weights: vec![0.0; k],
        })
    }

    pub fn num_topics(&self) -> usize {
        self.topic_total.len()
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let k = self.num_topics();
        let vbeta = self.vocabulary.len() as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old][w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.doc_topic[d][t] as f64 + self.alpha) * (self.topic_word[t][w] as f64 + self.beta)
                        / (self.topic_total[t] as f64 + vbeta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new][w] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    /// Sum of all topic counts; equals the corpus token count at all times.
    pub fn total_assignments(&self) -> u64 {
        self.topic_total.iter().map(|&c| c as u64).sum()
    }

    pub fn token_count(&self) -> u64 {
        self.docs.iter().map(|d| d.len() as u64).sum()
    }

    pub fn model(&self) -> TopicModel {
        let k = self.num_topics();
        let v = self.vocabulary.len();
        let vbeta = v as f64 * self.beta;
        let topic_word = (0..k)
            .map(|t| {
                let denom = self.topic_total[t] as f64 + vbeta;
                self.topic_word[t].iter().map(|&c| (c as f64 + self.beta) / denom).collect()
            })
            .collect();
        let kalpha = k as f64 * self.alpha;
        let doc_topic = self
            .doc_topic
            .iter()
            .zip(&self.docs)
            .map(|(row, doc)| {
                let denom = doc.len() as f64 + kalpha;
                row.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
            })
            .collect();
        TopicModel { topic_word, doc_topic, vocabulary: self.vocabulary.clone() }
    }
}

pub fn train_lda(corpus: &[Vec<String>], config: &SelectionConfig) -> Result<TopicModel, SelectionError> {
    config.validate()?;
    let mut s = GibbsSampler::new(corpus, config.num_topics, config.alpha(), config.beta, config.seed)?;
    for _ in 0..config.lda_iterations {
        s.sweep();
    }
    Ok(s.model())
}

/// Union of each topic's `words_per_topic` most probable words, minus
/// stopwords, first occurrence kept.
pub fn top_topic_words(model: &TopicModel, words_per_topic: usize, stopwords: &Stopwords) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in &model.topic_word {
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| {
            row[b]
                .partial_cmp(&row[a])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then_with(|| model.vocabulary[a].cmp(&model.vocabulary[b]))
        });
        for &i in idx.iter().take(words_per_topic) {
            let w = &model.vocabulary[i];
            if !stopwords.contains(w) && seen.insert(w.clone()) {
                out.push(w.clone());
            }
        }
    }
    out
}

/// Word x description TF-IDF scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfMatrix {
    pub words: Vec<String>,
    /// `m[i][j]`: score of word `i` in description `j`.
    pub m: Vec<Vec<f64>>,
    /// Row sums of `m`.
    pub cumulative: Vec<f64>,
}

impl TfidfMatrix {
    /// Raw term frequency times `ln(N / df)`; words absent from every
    /// description score zero.
    pub fn build(words: &[String], descriptions: &[PropertyDescription]) -> Self {
        let docs: Vec<Vec<String>> = descriptions.iter().map(PropertyDescription::text_tokens).collect();
        let n = docs.len() as f64;
        let mut m = Vec::with_capacity(words.len());
        let mut cumulative = Vec::with_capacity(words.len());
        for w in words {
            let tf: Vec<f64> = docs.iter().map(|d| d.iter().filter(|t| *t == w).count() as f64).collect();
            let df = tf.iter().filter(|&&c| c > 0.0).count();
            let idf = if df == 0 { 0.0 } else { libm::log(n / df as f64) };
            let row: Vec<f64> = tf.iter().map(|c| c * idf).collect();
            cumulative.push(row.iter().sum());
            m.push(row);
        }
        Self { words: words.to_vec(), m, cumulative }
    }
}

/// Words whose cumulative TF-IDF reaches `threshold`, best first, ties by
/// word.
pub fn rank_by_tfidf(words: &[String], descriptions: &[PropertyDescription], threshold: f64) -> Vec<(String, f64)> {
    let mx = TfidfMatrix::build(words, descriptions);
    let mut ranked: Vec<(String, f64)> = mx
        .words
        .into_iter()
        .zip(mx.cumulative)
        .filter(|(_, s)| *s >= threshold)
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked
}

/// Properties used more than `count_threshold` times whose text contains at
/// least one ranked word, ordered by total occurrences of ranked words
/// (then usage count, then id), truncated to `max`.
pub fn select_frequent(
    ranked_words: &[String],
    descriptions: &[PropertyDescription],
    count_threshold: u64,
    max: usize,
) -> Vec<String> {
    let words: BTreeSet<&str> = ranked_words.iter().map(String::as_str).collect();
    let mut scored: Vec<(usize, u64, &str)> = descriptions
        .iter()
        .filter(|p| p.count > count_threshold)
        .filter_map(|p| {
            let occ = p.text_tokens().iter().filter(|t| words.contains(t.as_str())).count();
            (occ > 0).then_some((occ, p.count, p.id.as_str()))
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
    let mut seen = BTreeSet::new();
    scored
        .into_iter()
        .filter(|s| seen.insert(s.2))
        .take(max)
        .map(|s| String::from(s.2))
        .collect()
}

/// Everything produced along the way, for reports and debugging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub properties: Vec<String>,
    pub topic_words: Vec<String>,
    pub ranked_words: Vec<(String, f64)>,
}

/// Full property selection over already loaded article texts.
pub fn select_properties(
    articles: &[String],
    descriptions: &[PropertyDescription],
    config: &SelectionConfig,
    stopwords: &Stopwords,
) -> Result<Selection, SelectionError> {
    config.validate()?;
    let corpus: Vec<Vec<String>> = articles.iter().map(|a| preprocess(a, stopwords)).collect();
    let model = train_lda(&corpus, config)?;
    let topic_words = top_topic_words(&model, config.words_per_topic, stopwords);
    let ranked_words = rank_by_tfidf(&topic_words, descriptions, config.tfidf_threshold);
    let words: Vec<String> = ranked_words.iter().map(|(w, _)| w.clone()).collect();
    let properties = select_frequent(&words, descriptions, config.count_threshold, config.num_properties);
    Ok(Selection { properties, topic_words, ranked_words })
}
