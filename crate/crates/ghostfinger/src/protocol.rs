//! Wire messages of the live session endpoint. Each WebSocket text message
//! carries one JSON object.

use std::collections::BTreeMap;

use ghostfinger_core::dof::DofEvent;
use ghostfinger_core::script::{Command, Diagnostic};
use ghostfinger_core::visual::Frame;
use ghostfinger_core::{InstanceId, ParamKey, PrimitiveKind};
use serde::{Deserialize, Serialize};

use crate::session::{Ack, LiveCommand, LiveError};

/// Client to server. Externally tagged: `{"set_intent": 5.0}`,
/// `{"spawn": {"name": .., "kind": .., "params": {..}}}`, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMsg {
    SetIntent(f64),
    Spawn {
        name: String,
        kind: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Set {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Kill {
        name: String,
    },
    LoadScript(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDiagnostic {
    pub line: usize,
    pub col: usize,
    pub kind: String,
    pub message: String,
}

impl From<&Diagnostic> for WireDiagnostic {
    fn from(d: &Diagnostic) -> Self {
        WireDiagnostic {
            line: d.line,
            col: d.col,
            kind: d.kind.name().to_string(),
            message: d.message.clone(),
        }
    }
}

/// Server to client, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Frame(Frame),
    DofEvent(DofEvent),
    Ack {
        command: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<InstanceId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
    },
    Error {
        error: String,
        message: String,
    },
    ScriptRejected {
        diagnostics: Vec<WireDiagnostic>,
    },
}

impl ServerMsg {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ServerMsg::Error {
            error: code.to_string(),
            message: message.into(),
        }
    }

    pub fn from_ack(ack: &Ack) -> Self {
        let (command, name, id, value) = match ack {
            Ack::Intent(z) => ("set_intent", None, None, Some(*z)),
            Ack::Spawned { name, id } => ("spawn", Some(name.clone()), Some(*id), None),
            Ack::Updated { name } => ("set", Some(name.clone()), None, None),
            Ack::Killed { name } => ("kill", Some(name.clone()), None, None),
            Ack::ScriptLoaded { commands } => ("load_script", None, None, Some(*commands as f64)),
        };
        ServerMsg::Ack {
            command: command.to_string(),
            name,
            id,
            value,
        }
    }

    pub fn from_live_error(err: &LiveError) -> Self {
        match err {
            LiveError::Script(diags) => ServerMsg::ScriptRejected {
                diagnostics: diags.iter().map(WireDiagnostic::from).collect(),
            },
            other => ServerMsg::error(other.code(), other.to_string()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// A client message that could not become a command.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ProtocolError {
    pub code: &'static str,
    pub message: String,
}

impl ProtocolError {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        ProtocolError {
            code,
            message: message.into(),
        }
    }

    pub fn to_msg(&self) -> ServerMsg {
        ServerMsg::error(self.code, self.message.clone())
    }
}

fn params(map: &BTreeMap<String, f64>) -> Result<Vec<(ParamKey, f64)>, ProtocolError> {
    map.iter()
        .map(|(k, v)| {
            ParamKey::from_name(k)
                .map(|key| (key, *v))
                .ok_or_else(|| ProtocolError::new("UnknownKey", format!("unknown parameter `{k}`")))
        })
        .collect()
}

impl ClientMsg {
    pub fn into_command(self) -> Result<LiveCommand, ProtocolError> {
        Ok(match self {
            ClientMsg::SetIntent(z) => LiveCommand::SetIntent(z),
            ClientMsg::LoadScript(text) => LiveCommand::LoadScript(text),
            ClientMsg::Spawn {
                name,
                kind,
                params: p,
            } => {
                let kind = PrimitiveKind::from_name(&kind).ok_or_else(|| {
                    ProtocolError::new("UnknownKind", format!("unknown primitive kind `{kind}`"))
                })?;
                LiveCommand::Scene(Command::Spawn {
                    name,
                    kind,
                    params: params(&p)?,
                })
            }
            ClientMsg::Set { name, params: p } => LiveCommand::Scene(Command::Set {
                name,
                params: params(&p)?,
            }),
            ClientMsg::Kill { name } => LiveCommand::Scene(Command::Kill { name }),
        })
    }
}

/// Decodes one text message.
pub fn decode(text: &str) -> Result<LiveCommand, ProtocolError> {
    let msg: ClientMsg = serde_json::from_str(text.trim_end_matches('\n'))
        .map_err(|e| ProtocolError::new("MalformedMessage", e.to_string()))?;
    msg.into_command()
}
