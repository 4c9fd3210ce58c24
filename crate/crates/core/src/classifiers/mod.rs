//! Classifiers emitting continuous class-1 scores for ROC analysis.

mod lda;
mod tree;

pub use lda::{fit_lda, fit_lda_dataset, fit_lda_sketched, DiscriminantModel, RIDGE};
pub use tree::{fit_c45, Node, TreeModel, TreeParams};
