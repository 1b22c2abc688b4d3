//! Energy-efficiency optimization for a RIS-assisted UAV downlink.
//!
//! One UAV hovering at a fixed altitude serves `K` single-antenna ground
//! users (GUs), helped by a reconfigurable intelligent surface with `M`
//! passive elements. The crate maximizes energy efficiency
//! `η = R_t / P_t` (bits per joule) jointly over
//!
//! * RIS phase shifts `θ` and per-GU transmit powers `P` (continuous GA),
//! * the RIS element On–Off vector `X` (binary GA),
//! * the UAV horizontal position `W_U` (Adam with finite-difference
//!   gradients),
//!
//! alternating between the three blocks until `η` stops improving.
//!
//! ```
//! use ris_uav::prelude::*;
//!
//! let mut scn = default_scenario();
//! scn.num_gus = 1;
//! scn.set_num_elements(4);
//! let seed = 7;
//! let scn = scn.with_sampled_gus(&RngStream::new(seed, "gus")).unwrap();
//! let scatter = ScatteringDraw::sample(&RngStream::new(seed, "scatter"), 1, 4);
//!
//! let mut cfg = BcdConfig::for_scenario(&scn);
//! cfg.max_outer_iters = 2;
//! let result = optimize(&scn, &scatter, &default_init(&scn), &cfg, &RngStream::new(seed, "proposed")).unwrap();
//! assert!(result.eta_trace.windows(2).all(|w| w[1] >= w[0]));
//! ```
//!
//! The guide under `book/` walks through the model and each solver; its
//! code listings are compiled and run as doctests of this crate.

pub mod bcd;
pub mod channel;
pub mod error;
pub mod harness;
pub mod objective;
pub mod optim;
pub mod scenario;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bcd::{
        baseline_no_ris, baseline_random_phase, default_init, optimize, BcdConfig, BcdResult, Scheme,
    };
    pub use crate::channel::{ChannelSet, ScatteringDraw};
    pub use crate::objective::{
        energy_efficiency, penalized_fitness, total_power, PenaltyConfig, SolutionState,
    };
    pub use crate::scenario::{default_scenario, load_scenario, Point, RngStream, Scenario};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system-model.md")]
    mod system_model {}
    #[doc = include_str!("../../../book/src/energy-efficiency.md")]
    mod energy_efficiency {}
    #[doc = include_str!("../../../book/src/genetic-algorithms.md")]
    mod genetic_algorithms {}
    #[doc = include_str!("../../../book/src/placement.md")]
    mod placement {}
    #[doc = include_str!("../../../book/src/block-coordinate-descent.md")]
    mod block_coordinate_descent {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
