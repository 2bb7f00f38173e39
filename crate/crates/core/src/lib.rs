//! CRC-aided belief-propagation list decoding of polar codes combined with
//! ordered statistics decoding.

pub mod bp;
pub mod channel;
pub mod code;
pub mod config;
pub mod crc;
pub mod error;
pub mod gf2;
pub mod oracle;
pub mod osd;
pub mod pipeline;
pub mod polar;
pub mod sim;

pub use error::{Error, Result};
