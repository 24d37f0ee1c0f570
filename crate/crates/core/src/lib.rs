//! Zero-shot classification of short texts (cargo descriptions, product
//! names) against a hierarchical code taxonomy such as SITC.
//!
//! Every taxonomy heading and every query is turned into a TF-IDF weighted
//! average of pretrained word vectors; a query receives the code of the
//! heading with the highest cosine similarity, and the fine-grained code is
//! rolled up to its level-1 section for evaluation.
//!
//! ```
//! use sitcls::{build_index, classify_indexed, CategoryDoc, EmbeddingTable, PipelineConfig};
//!
//! let table = EmbeddingTable::from_entries(2, [
//!     ("tuna", vec![1.0, 0.1]),
//!     ("coal", vec![0.0, 1.0]),
//! ]).unwrap();
//! let docs = vec![
//!     CategoryDoc { code: "03711".into(), heading: "Tuna, prepared".into() },
//!     CategoryDoc { code: "32121".into(), heading: "Anthracite coal".into() },
//! ];
//! let index = build_index(&docs, &table, &PipelineConfig::default(), true).unwrap();
//! let result = classify_indexed("CANNED TUNA", &index, &table, 5).unwrap();
//! assert_eq!(result.predicted_code, "03711");
//! assert_eq!(result.rolled_up_code, "0");
//! ```

pub mod classify;
pub mod cli;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod preprocess;
pub mod taxonomy;
pub mod vectorize;

pub use classify::{
    build_index, classify_batch, classify_faithful, classify_indexed, cosine, rank, CategoryIndex,
    ClassificationResult, Classifier, FaithfulClassifier, IndexedClassifier, Mode, Scored,
    Unclassifiable,
};
pub use embeddings::{parse_embedding_line, EmbeddingTable};
pub use error::{Error, Result};
pub use eval::{
    accuracy, evaluate, mode_agreement, percent_agreement, EvalReport, LabeledExample, Proportion,
};
pub use preprocess::{preprocess, PipelineConfig, TokenList};
pub use taxonomy::{rollup, CategoryDoc, Taxonomy, TaxonomyEntry};
pub use vectorize::{
    build_corpus, doc_embedding, tfidf, weighted_matrix, Corpus, DocVector, TfIdfModel,
};
