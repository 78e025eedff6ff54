//! Heap patience sorting and the Hammersley tree process.
//!
//! * [`heap_sort`]: online sorting into a minimal forest of heaps, leading-dead
//!   counts, rightmost insertion and exhaustive oracles.
//! * [`hammersley_process`]: the space-time particle system with sources and
//!   sinks, and its graphical record.
//! * [`root_process`]: the dual dynamics of root heights and the falling map.
//! * [`geometric`]: the red/blue construction and the tagged particle.
//! * [`experiments`]: Monte Carlo runners producing reproducible reports.
//!
//! Labels and times are generic over [`Real`] (`f32` or `f64`); exact
//! enumeration accepts any [`Weight`], including rationals.

pub mod distributions;
pub mod error;
pub mod experiments;
pub mod geometric;
pub mod hammersley_process;
pub mod heap_sort;
pub mod rng;
pub mod root_process;
mod scalar;
pub mod stats;

pub use distributions::{Atom, OffspringDistribution, Rect};
pub use error::{Error, Result};
pub use hammersley_process::GraphicalRecord;
pub use heap_sort::SortState;
pub use rng::RandomStream;
pub use root_process::RootConfiguration;
pub use scalar::{Real, Weight};

pub type Atom64 = Atom<f64>;
pub type Atom32 = Atom<f32>;
pub type SortState64 = SortState<f64>;
pub type SortState32 = SortState<f32>;
pub type Distribution64 = OffspringDistribution<f64>;
pub type Distribution32 = OffspringDistribution<f32>;
pub type Record64 = GraphicalRecord<f64>;
pub type Record32 = GraphicalRecord<f32>;
pub type RootConfiguration64 = RootConfiguration<f64>;
