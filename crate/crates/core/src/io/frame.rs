//! Line-delimited JSON frames shared by record files and the live protocol.
//!
//! Every frame is one JSON object on one line with a `type` field.

use serde::{Deserialize, Serialize};

use crate::guidance::CueKind;
use crate::metrics::TrajectoryClass;
use crate::sim::SessionConfig;

use super::record::SessionStatus;

pub const PROTO: &str = "bnav/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridInfo {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardInfo {
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Hello {
    pub proto: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board: Option<BoardInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SessionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandFrame {
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipFrame {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CueFrame {
    pub kind: CueKind,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pen {
    Up,
    Down,
}

/// Either a live pen toggle (`t`, `pen`) or one row of a stored paint layer
/// (`target`, `y`, `runs`), or a stored layer header (`target`, `width`,
/// `height`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PaintFrame {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pen: Option<Pen>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
    /// `[start_x, length]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivedFrame {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

/// Per-target or per-session summary. Only the fields that apply are set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryFrame {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<TrajectoryClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<SessionStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrived_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filled_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_t: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_c: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_r: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_i: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Frame {
    Hello(Hello),
    Command(CommandFrame),
    Tip(TipFrame),
    Cue(CueFrame),
    Paint(PaintFrame),
    Arrived(ArrivedFrame),
    Summary(SummaryFrame),
    Error(ErrorFrame),
}

impl Frame {
    pub fn hello() -> Self {
        Frame::Hello(Hello { proto: PROTO.to_string(), ..Hello::default() })
    }

    pub fn error(message: impl Into<String>) -> Self {
        Frame::Error(ErrorFrame { message: message.into() })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Frame::Hello(_) => "hello",
            Frame::Command(_) => "command",
            Frame::Tip(_) => "tip",
            Frame::Cue(_) => "cue",
            Frame::Paint(_) => "paint",
            Frame::Arrived(_) => "arrived",
            Frame::Summary(_) => "summary",
            Frame::Error(_) => "error",
        }
    }

    /// One line of JSON, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }

    pub fn parse(line: &str) -> Result<Frame, serde_json::Error> {
        serde_json::from_str(line)
    }
}
