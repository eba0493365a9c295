//! Wire frames, session records, replay and the live server.

pub mod frame;
pub mod live;
pub mod record;
pub mod replay;
pub mod server;

pub use frame::{Frame, PROTO};
pub use live::{LiveConfig, LiveSession, ProtocolError};
pub use record::{
    load_record, parse_record, save_record, write_record, LoadedRecord, RecordError, RleMask, RleRow,
    SessionRecord, SessionStatus, SessionSummary, TargetOutcome,
};
pub use replay::{replay, reproduces, ReplayReport, TargetReplay};
pub use server::{handle_connection, Server};
