//! Rooted trees and layered DAGs, black-box exploration with query
//! accounting, generators, and the JSON file format.

mod dag;
mod explore;
pub mod generate;
mod io;
mod path;
mod transform;

pub use dag::{EvenOddPartition, LayeredDag, VertexId};
pub use explore::{
    dfs_order, explore_from, Annotations, ExplorableHandle, Explored, Explorer, Gate, Instance, Mark, QueryLedger,
};
pub use io::GraphFile;
pub use path::{PathSpec, PathStep, RestrictedView};
pub use transform::{binarize, binarize_instance, Binarized};
