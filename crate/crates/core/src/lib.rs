//! Phase-space toolkit for a four-state continuous-variable QKD protocol with
//! photon-added-then-subtracted coherent states (PASCS).
//!
//! Quadrature convention: vacuum variance `1/4`, homodyne outcome `ζ_r`.

pub mod channel;
pub mod error;
pub mod intercept;
pub mod keyrate;
pub mod numerics;
pub mod protocol;
pub mod special;
pub mod state;

pub use channel::{BeamSplitter, ChannelSpec};
pub use error::{Error, Result};
pub use intercept::{EveSuccess, IrCurvePoint};
pub use keyrate::{AttackScenario, KeyRateConfig, KeyRateReport, SweepAxis, SweepResult};
pub use numerics::{Grid2D, IntegrationConfig};
pub use protocol::{ProtocolConfig, SiftReport};
pub use state::{FockVector, PascsParams, PhasePoint, SignalLabel, StateFamily};
