//! Covert ephemeral messaging over router state: the shared codebook, the
//! five sender/receiver techniques, and receiver threshold calibration.

mod calibrate;
mod codebook;
mod message;
mod params;
mod protocol;

use thiserror::Error;

pub use calibrate::{calibrate, estimate_threshold, CalibrationParams, ThresholdEstimate};
pub use codebook::{derive_codebook, Codebook, CodebookMode, MAX_BITS_PER_WORD};
pub use message::{Message, Symbol, Technique};
pub use params::{ProtocolParams, T_MIN};
pub use protocol::{
    cpc_recv, cpc_send, decode_cpc, decode_matrix, decode_message, decode_tdp, decode_threshold,
    matrix_recv, matrix_send, read_start, receive_plan, sbtc_recv, sbtc_send, sbtp_recv, sbtp_send,
    send_plan, tag, tdp_recv, tdp_send, untag, Party, PlannedRequest, RttSample,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CovertError {
    #[error("bits per word must be in 1..=8, got {0}")]
    BitsPerWord(u8),
    #[error("message must have at least one bit")]
    EmptyMessage,
    #[error("unknown technique {0:?}")]
    UnknownTechnique(String),
    #[error("no usable samples")]
    NoSamples,
    #[error("{0}")]
    InvalidParams(String),
    #[error(transparent)]
    Name(#[from] crate::ndn::NameError),
}
