//! Uniform execution surface over engines.
//!
//! The embedded reference engine is wrapped by [`ReferenceAdapter`]. Everything else is reached
//! through a bridge: a small external process (or HTTP endpoint) that speaks line-delimited JSON.
//!
//! Request: `{"id": 7, "action": "execute", "payload": {"query": "..."}}`
//!
//! Reply: `{"id": 7, "ok": true, "rows": [...]}` or
//! `{"id": 7, "ok": false, "error": {"class": "syntax", "message": "..."}}`

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::engine::{FaultSet, Store};
use crate::ir::{parse, ParseError};
use crate::model::{Dialect, LabeledPropertyGraph};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Engine-styled outcome of one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RawResult {
    /// Row texts or structured rows, exactly as the engine produced them.
    Rows { rows: Vec<Json> },
    EngineError { class: String, message: String },
    Timeout,
}

impl RawResult {
    pub fn rows(rows: Vec<Json>) -> Self {
        RawResult::Rows { rows }
    }

    pub fn error(class: impl Into<String>, message: impl Into<String>) -> Self {
        RawResult::EngineError {
            class: class.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdapterError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol-error: {0}")]
    Protocol(String),
    #[error("timed out")]
    Timeout,
    #[error("{class}: {message}")]
    Engine { class: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Capabilities {
    /// The engine only understands the parser's query subset.
    pub supports_subset_only: bool,
}

pub trait EngineAdapter: Send {
    fn name(&self) -> &str;
    fn dialect(&self) -> Dialect;
    fn capabilities(&self) -> Capabilities;
    fn load(&mut self, graph: &LabeledPropertyGraph) -> Result<(), AdapterError>;
    fn execute(&mut self, query: &str) -> RawResult;
    fn reset(&mut self) -> Result<(), AdapterError>;
    fn ping(&mut self) -> Result<(), AdapterError>;

    /// Hash of the engine's whole state, when the engine can report one.
    fn state_digest(&self) -> Option<String> {
        None
    }
}

/// The embedded engine. Rows come out in the structured `canonical-json` form.
pub struct ReferenceAdapter {
    name: String,
    dialect: Dialect,
    faults: FaultSet,
    store: Store,
}

impl ReferenceAdapter {
    pub fn new(name: impl Into<String>, dialect: Dialect, faults: FaultSet) -> Self {
        ReferenceAdapter {
            name: name.into(),
            dialect,
            faults,
            store: Store::new(),
        }
    }

    pub fn faults(&self) -> FaultSet {
        self.faults
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }
}

pub fn parse_error_class(e: &ParseError) -> &'static str {
    match e {
        ParseError::UnsupportedSyntax { .. } => "unsupported",
        ParseError::Syntax { .. } | ParseError::UnboundVariable(_) => "syntax",
    }
}

impl EngineAdapter for ReferenceAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn dialect(&self) -> Dialect {
        self.dialect
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_subset_only: true,
        }
    }

    fn load(&mut self, graph: &LabeledPropertyGraph) -> Result<(), AdapterError> {
        self.store.load(graph);
        Ok(())
    }

    fn execute(&mut self, query: &str) -> RawResult {
        let ir = match parse(query, self.dialect) {
            Ok(ir) => ir,
            Err(e) => return RawResult::error(parse_error_class(&e), e.to_string()),
        };
        match self.store.execute(&ir, self.faults) {
            Ok(rs) => RawResult::rows(rs.to_json_rows()),
            Err(e) => RawResult::error(e.class(), e.to_string()),
        }
    }

    fn reset(&mut self) -> Result<(), AdapterError> {
        self.store.reset();
        Ok(())
    }

    fn ping(&mut self) -> Result<(), AdapterError> {
        Ok(())
    }

    fn state_digest(&self) -> Option<String> {
        Some(self.store.digest())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgeAction {
    Load,
    Execute,
    Reset,
    Ping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeRequest {
    pub id: u64,
    pub action: BridgeAction,
    #[serde(default)]
    pub payload: Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeErrorBody {
    pub class: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReply {
    pub id: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Json>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<BridgeErrorBody>,
}

pub trait Transport: Send {
    fn round_trip(&mut self, request: &BridgeRequest, timeout: Duration) -> Result<BridgeReply, AdapterError>;
}

/// Line-delimited JSON over a pair of byte streams, usually a child process's stdin/stdout.
pub struct LineTransport {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    early: HashMap<u64, BridgeReply>,
    child: Option<Child>,
}

impl LineTransport {
    pub fn new(reader: impl Read + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });
        LineTransport {
            writer: Box::new(writer),
            lines,
            early: HashMap::new(),
            child: None,
        }
    }

    /// Starts `program args...` and talks to it over its standard streams.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, AdapterError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AdapterError::Transport(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut t = LineTransport::new(stdout, stdin);
        t.child = Some(child);
        Ok(t)
    }
}

impl Drop for LineTransport {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Transport for LineTransport {
    fn round_trip(&mut self, request: &BridgeRequest, timeout: Duration) -> Result<BridgeReply, AdapterError> {
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        // replies to requests that already timed out are stale
        self.early.retain(|id, _| *id >= request.id);
        if let Some(reply) = self.early.remove(&request.id) {
            return Ok(reply);
        }
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(AdapterError::Transport(e.to_string())),
                Err(RecvTimeoutError::Timeout) => return Err(AdapterError::Timeout),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(AdapterError::Transport("bridge closed its output".into()))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let reply: BridgeReply = serde_json::from_str(&line)
                .map_err(|e| AdapterError::Protocol(format!("{e}: {}", line.trim())))?;
            if reply.id == request.id {
                return Ok(reply);
            }
            if reply.id > request.id {
                self.early.insert(reply.id, reply);
            }
        }
    }
}

/// One HTTP POST per request.
pub struct HttpTransport {
    url: String,
}

impl HttpTransport {
    /// `base` is the bridge address; requests go to `<base>/execute`.
    pub fn new(base: &str) -> Self {
        let base = base.trim_end_matches('/');
        let url = if base.ends_with("/execute") {
            base.to_owned()
        } else {
            format!("{base}/execute")
        };
        HttpTransport { url }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Transport for HttpTransport {
    #[cfg(feature = "net")]
    fn round_trip(&mut self, request: &BridgeRequest, timeout: Duration) -> Result<BridgeReply, AdapterError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let mut resp = agent.post(&self.url).send_json(request).map_err(|e| match e {
            ureq::Error::Timeout(_) => AdapterError::Timeout,
            other => AdapterError::Transport(other.to_string()),
        })?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        let reply: BridgeReply =
            serde_json::from_str(&text).map_err(|e| AdapterError::Protocol(format!("{e}: {}", text.trim())))?;
        if reply.id != request.id {
            return Err(AdapterError::Protocol(format!(
                "reply id {} does not match request id {}",
                reply.id, request.id
            )));
        }
        Ok(reply)
    }

    #[cfg(not(feature = "net"))]
    fn round_trip(&mut self, _request: &BridgeRequest, _timeout: Duration) -> Result<BridgeReply, AdapterError> {
        Err(AdapterError::Transport(format!(
            "built without HTTP support, cannot reach {}",
            self.url
        )))
    }
}

pub struct BridgeAdapter {
    name: String,
    dialect: Dialect,
    capabilities: Capabilities,
    timeout: Duration,
    transport: Box<dyn Transport>,
    next_id: u64,
}

impl BridgeAdapter {
    pub fn new(name: impl Into<String>, dialect: Dialect, transport: Box<dyn Transport>) -> Self {
        BridgeAdapter {
            name: name.into(),
            dialect,
            capabilities: Capabilities::default(),
            timeout: DEFAULT_TIMEOUT,
            transport,
            next_id: 1,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_capabilities(mut self, capabilities: Capabilities) -> Self {
        self.capabilities = capabilities;
        self
    }

    fn call(&mut self, action: BridgeAction, payload: Json) -> Result<Vec<Json>, AdapterError> {
        let request = BridgeRequest {
            id: self.next_id,
            action,
            payload,
        };
        self.next_id += 1;
        let reply = self.transport.round_trip(&request, self.timeout)?;
        if reply.ok {
            return Ok(reply.rows.unwrap_or_default());
        }
        let error = reply.error.ok_or_else(|| {
            AdapterError::Protocol("reply has ok=false but no error object".into())
        })?;
        Err(AdapterError::Engine {
            class: error.class,
            message: error.message,
        })
    }
}

impl EngineAdapter for BridgeAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn dialect(&self) -> Dialect {
        self.dialect
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn load(&mut self, graph: &LabeledPropertyGraph) -> Result<(), AdapterError> {
        let payload = serde_json::to_value(graph).expect("graph serializes");
        self.call(BridgeAction::Load, payload).map(|_| ())
    }

    fn execute(&mut self, query: &str) -> RawResult {
        let payload = json!({"query": query, "dialect": self.dialect});
        match self.call(BridgeAction::Execute, payload) {
            Ok(rows) => RawResult::rows(rows),
            Err(AdapterError::Timeout) => RawResult::Timeout,
            Err(AdapterError::Engine { class, message }) => RawResult::EngineError { class, message },
            Err(AdapterError::Protocol(m)) => RawResult::error("protocol-error", m),
            Err(AdapterError::Transport(m)) => RawResult::error("transport", m),
        }
    }

    fn reset(&mut self) -> Result<(), AdapterError> {
        self.call(BridgeAction::Reset, Json::Null).map(|_| ())
    }

    fn ping(&mut self) -> Result<(), AdapterError> {
        self.call(BridgeAction::Ping, Json::Null).map(|_| ())
    }
}

/// Answers one bridge request with `adapter`.
pub fn handle_bridge_request(adapter: &mut dyn EngineAdapter, request: &BridgeRequest) -> BridgeReply {
    let fail = |class: &str, message: String| BridgeReply {
        id: request.id,
        ok: false,
        rows: None,
        error: Some(BridgeErrorBody {
            class: class.to_owned(),
            message,
        }),
    };
    let done = |rows: Option<Vec<Json>>| BridgeReply {
        id: request.id,
        ok: true,
        rows,
        error: None,
    };
    let lift = |r: Result<(), AdapterError>| match r {
        Ok(()) => done(None),
        Err(e) => fail("runtime", e.to_string()),
    };
    match request.action {
        BridgeAction::Ping => lift(adapter.ping()),
        BridgeAction::Reset => lift(adapter.reset()),
        BridgeAction::Load => match serde_json::from_value::<LabeledPropertyGraph>(request.payload.clone()) {
            Ok(g) => lift(adapter.load(&g)),
            Err(e) => fail("protocol-error", format!("bad graph payload: {e}")),
        },
        BridgeAction::Execute => {
            let Some(query) = request.payload.get("query").and_then(Json::as_str) else {
                return fail("protocol-error", "payload has no `query` string".into());
            };
            match adapter.execute(query) {
                RawResult::Rows { rows } => done(Some(rows)),
                RawResult::EngineError { class, message } => fail(&class, message),
                RawResult::Timeout => fail("timeout", "engine timed out".into()),
            }
        }
    }
}

/// Serves the bridge protocol on a pair of streams until the input closes.
pub fn serve_bridge(
    adapter: &mut dyn EngineAdapter,
    input: impl BufRead,
    mut output: impl Write,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<BridgeRequest>(&line) {
            Ok(request) => handle_bridge_request(adapter, &request),
            Err(e) => BridgeReply {
                id: serde_json::from_str::<Json>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(Json::as_u64))
                    .unwrap_or(0),
                ok: false,
                rows: None,
                error: Some(BridgeErrorBody {
                    class: "protocol-error".into(),
                    message: e.to_string(),
                }),
            },
        };
        serde_json::to_writer(&mut output, &reply)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

/// Serves `inner` on its own thread behind OS pipes and returns a bridge adapter speaking to it,
/// the same path an external bridge process takes.
pub fn pipe_bridge(mut inner: Box<dyn EngineAdapter>) -> std::io::Result<BridgeAdapter> {
    let (req_r, req_w) = std::io::pipe()?;
    let (rep_r, rep_w) = std::io::pipe()?;
    let name = inner.name().to_owned();
    let dialect = inner.dialect();
    let capabilities = inner.capabilities();
    std::thread::spawn(move || {
        let _ = serve_bridge(inner.as_mut(), std::io::BufReader::new(req_r), rep_w);
    });
    Ok(BridgeAdapter::new(name, dialect, Box::new(LineTransport::new(rep_r, req_w))).with_capabilities(capabilities))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixture_g0;
    use std::io::{pipe, BufReader, PipeReader, PipeWriter};

    /// A bridge running `respond` on its own thread, connected through OS pipes.
    fn stub(respond: impl Fn(BridgeRequest) -> Vec<String> + Send + 'static) -> LineTransport {
        let (req_r, req_w): (PipeReader, PipeWriter) = pipe().unwrap();
        let (rep_r, mut rep_w) = pipe().unwrap();
        std::thread::spawn(move || {
            for line in BufReader::new(req_r).lines() {
                let request: BridgeRequest = serde_json::from_str(&line.unwrap()).unwrap();
                for out in respond(request) {
                    if writeln!(rep_w, "{out}").is_err() {
                        return;
                    }
                }
            }
        });
        LineTransport::new(rep_r, req_w)
    }

    fn adapter(t: LineTransport) -> BridgeAdapter {
        BridgeAdapter::new("stub", Dialect::Cypher, Box::new(t)).with_timeout(Duration::from_secs(2))
    }

    #[test]
    fn reference_counts_g0() {
        let mut a = ReferenceAdapter::new("ref", Dialect::Cypher, FaultSet::none());
        a.load(&fixture_g0()).unwrap();
        assert_eq!(a.execute("MATCH (n:nt0) RETURN count(n)"), RawResult::rows(vec![json!([2])]));
        assert!(matches!(
            a.execute("MATCH p=shortestPath((a)-[*]-(b)) RETURN p"),
            RawResult::EngineError { class, .. } if class == "unsupported"
        ));
        assert!(a.ping().is_ok());
    }

    #[test]
    fn stub_rows_pass_through() {
        let mut a = adapter(stub(|r| {
            let rows = if r.action == BridgeAction::Execute {
                json!(["[3, 25.78666666666667]"])
            } else {
                json!([])
            };
            vec![json!({"id": r.id, "ok": true, "rows": rows}).to_string()]
        }));
        assert!(a.ping().is_ok());
        assert_eq!(
            a.execute("MATCH (n) RETURN count(n), avg(n.p9)"),
            RawResult::rows(vec![json!("[3, 25.78666666666667]")])
        );
    }

    #[test]
    fn invalid_json_is_a_protocol_error() {
        let mut a = adapter(stub(|_| vec!["this is not json".into()]));
        assert!(matches!(a.ping(), Err(AdapterError::Protocol(_))));
        assert!(matches!(
            a.execute("MATCH (n) RETURN n"),
            RawResult::EngineError { class, .. } if class == "protocol-error"
        ));
    }

    #[test]
    fn engine_errors_and_timeouts() {
        let mut a = adapter(stub(|r| match r.action {
            BridgeAction::Ping => vec![],
            _ => vec![json!({"id": r.id, "ok": false, "error": {"class": "syntax", "message": "bad"}})
                .to_string()],
        }))
        .with_timeout(Duration::from_millis(100));
        assert_eq!(a.ping(), Err(AdapterError::Timeout));
        assert_eq!(a.execute("RETURN"), RawResult::error("syntax", "bad"));
    }

    #[test]
    fn out_of_order_replies_match_by_id() {
        // the stub answers every request twice: a stale copy for the previous id first
        let mut a = adapter(stub(|r| {
            vec![
                json!({"id": r.id.saturating_sub(1), "ok": true, "rows": ["stale"]}).to_string(),
                json!({"id": r.id, "ok": true, "rows": [r.id]}).to_string(),
            ]
        }));
        assert_eq!(a.execute("q"), RawResult::rows(vec![json!(1)]));
        assert_eq!(a.execute("q"), RawResult::rows(vec![json!(2)]));
    }

    #[test]
    fn reference_behind_a_bridge() {
        let (req_r, req_w) = pipe().unwrap();
        let (rep_r, rep_w) = pipe().unwrap();
        std::thread::spawn(move || {
            let mut inner = ReferenceAdapter::new("inner", Dialect::Cypher, FaultSet::none());
            serve_bridge(&mut inner, BufReader::new(req_r), rep_w).unwrap();
        });
        let mut a = adapter(LineTransport::new(rep_r, req_w));
        a.ping().unwrap();
        a.load(&fixture_g0()).unwrap();
        assert_eq!(a.execute("MATCH (n:nt0) RETURN count(n)"), RawResult::rows(vec![json!([2])]));
        assert!(matches!(a.execute("MATCH (n RETURN n"), RawResult::EngineError { class, .. } if class == "syntax"));
        a.reset().unwrap();
        assert_eq!(a.execute("MATCH (n) RETURN count(n)"), RawResult::rows(vec![json!([0])]));
    }
}
