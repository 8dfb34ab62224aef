pub mod analytic;
pub mod error;
pub mod infinite;
pub mod joint;
pub mod observers;
pub mod oracle;
pub mod params;
pub mod qbd;
pub mod sim;

pub use error::{Error, Result};
pub use joint::{JointDist, PgfPoint};
pub use params::{MaxSpeed, ModelParams, Rho, SpeedProfile, Variant};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/uncapped.md")]
    mod uncapped {}
    #[doc = include_str!("../../../book/src/capped.md")]
    mod capped {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/observers.md")]
    mod observers {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
