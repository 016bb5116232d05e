//! Datasets: the Boston housing table, MNIST IDX files and synthetic
//! generators.

mod boston;
mod mnist;
mod synth;

use std::path::PathBuf;

pub use boston::{load_boston, BostonDataset, BOSTON_ROWS, BOSTON_TRAIN_ROWS};
pub use mnist::{downsample_2x2, load_mnist, load_mnist_limit, one_hot, MnistSubset, MNIST_TRAIN_SUBSET};
pub use synth::{synth_linear, synth_separable, SeparableSet};

/// Directory holding the bundled datasets.
pub fn bundled_data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn bundled_boston_path() -> PathBuf {
    bundled_data_dir().join("boston_housing.csv")
}

/// `(images, labels)` of the bundled 3,000-digit training subset.
pub fn bundled_mnist_train() -> (PathBuf, PathBuf) {
    let d = bundled_data_dir().join("mnist");
    (
        d.join("train-3000-images-idx3-ubyte.gz"),
        d.join("train-3000-labels-idx1-ubyte.gz"),
    )
}

/// `(images, labels)` of the bundled 10,000-digit test set.
pub fn bundled_mnist_test() -> (PathBuf, PathBuf) {
    let d = bundled_data_dir().join("mnist");
    (d.join("t10k-images-idx3-ubyte.gz"), d.join("t10k-labels-idx1-ubyte.gz"))
}
