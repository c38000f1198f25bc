//! Shared-space correlation learning between two paired views.
//!
//! [`CcaModel`] is classical regularized CCA. [`DccaModel`] trains one MLP
//! encoder per view on the total canonical correlation of their outputs and
//! finishes with a CCA head; with a positive category re-pairing
//! probability it becomes the category-based variant.

mod cca;
mod dcca;
mod encoder;
mod pairs;

pub use cca::{CcaModel, Side};
pub use dcca::{dcca_loss_grad, DccaConfig, DccaLoss, DccaModel};
pub use encoder::{EncoderGrads, EncoderStack};
pub use pairs::{category_repair_indices, expand_category_pairs};

use ndarray::{Array2, ArrayView2};

use crate::error::Result;

/// A fitted projection of both views into a common `k`-dimensional space.
pub trait SharedSpace {
    fn n_components(&self) -> usize;
    fn project(&self, data: ArrayView2<f64>, side: Side) -> Result<Array2<f64>>;
}
