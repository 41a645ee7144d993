use psatz::conic::Tolerances;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Record of one invocation, written alongside every result.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub inputs: Vec<String>,
    pub config: Value,
    pub version: &'static str,
    pub tolerances: Tolerances,
    pub timing: Timing,
    pub exit_code: i32,
}

#[derive(Debug, Serialize)]
pub struct Document {
    pub manifest: RunManifest,
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
