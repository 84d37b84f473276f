//! Transmitter chain and channel.

pub mod channel;
pub mod encoder;
pub mod interleaver;
pub mod layout;
pub mod repetition;

pub use channel::{apply_channel, draw_gains, ChannelMode, ChannelObservation, GroundTruth, Samples};
pub use encoder::{PayloadCode, SparseSignal, UserEncoder};
pub use interleaver::{interleaver_prefix, make_interleaver};
pub use layout::{FrameLayout, Message};
pub use repetition::RepetitionDD;
