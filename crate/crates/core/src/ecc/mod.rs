//! Error-correcting codes for robust signatures.
//!
//! [`BlockCode`] is the interface the robust decoder needs; [`ReedSolomon`]
//! over GF(2^8) is the shipped implementation.

pub mod gf256;
pub mod robust;
pub mod rs;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use robust::{Layout, RobustSignatureSpec};
pub use rs::ReedSolomon;

/// A systematic block code over bytes.
pub trait BlockCode {
    fn message_len(&self) -> usize;
    fn codeword_len(&self) -> usize;
    fn encode(&self, msg: &[u8]) -> Result<Vec<u8>>;
    /// `None` signals a decoding failure.
    fn decode(&self, word: &[u8]) -> Option<Vec<u8>>;
}

/// Reed-Solomon parameters: field size, message and codeword symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EccSpec {
    #[serde(default = "default_field_size")]
    pub cq: u16,
    pub ck: usize,
    pub cn: usize,
}

fn default_field_size() -> u16 {
    256
}

impl EccSpec {
    pub fn new(ck: usize, cn: usize) -> Result<Self> {
        let spec = EccSpec { cq: 256, ck, cn };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cq != 256 {
            return Err(invalid(format!("only c_q = 256 is supported, got {}", self.cq)));
        }
        if self.ck == 0 || self.ck >= self.cn || self.cn > 255 {
            return Err(invalid(format!(
                "need 0 < c_k < c_n <= 255, got c_k={}, c_n={}",
                self.ck, self.cn
            )));
        }
        Ok(())
    }

    /// Correctable symbol errors per block.
    pub fn t(&self) -> usize {
        (self.cn - self.ck) / 2
    }

    pub fn rate(&self) -> f64 {
        self.ck as f64 / self.cn as f64
    }

    pub fn codec(&self) -> Result<ReedSolomon> {
        ReedSolomon::new(self.ck, self.cn)
    }
}
