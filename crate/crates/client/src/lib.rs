//! Runs the phoenix operations either in this process or against a
//! `phoenixd` server. Both backends take the same request types, so callers
//! pick one at startup and never branch again.

use phoenix_core::api::{
    self, ApiError, BenchRequest, DbSource, EvalRequest, GenRequest, GenResponse, Health, MonitorRequest,
    MonitorResponse, SynthAutomatonRequest, SynthAutomatonResponse, SynthPltlRequest, SynthPltlResponse,
};
use phoenix_core::harness::{MemReport, MetricsReport, Throughput};
use phoenix_core::synth::ExternalSolver;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

/// Environment variable naming the server to use when no URL is given.
pub const SERVER_ENV: &str = "PHOENIX_SERVER";

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error("cannot reach {url}: {message}")]
    Transport { url: String, message: String },
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, ClientError>;

pub trait Backend {
    fn health(&self) -> Result<Health>;
    fn monitor(&self, req: &MonitorRequest) -> Result<MonitorResponse>;
    fn synth_pltl(&self, req: &SynthPltlRequest) -> Result<SynthPltlResponse>;
    fn synth_dfa(&self, req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse>;
    fn synth_mm(&self, req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse>;
    fn generate(&self, req: &GenRequest) -> Result<GenResponse>;
    fn eval(&self, req: &EvalRequest) -> Result<MetricsReport>;
    fn bench(&self, req: &BenchRequest) -> Result<Throughput>;
    fn mem(&self, req: &DbSource) -> Result<MemReport>;
}

/// Calls the library directly.
#[derive(Debug, Clone, Default)]
pub struct InProcess {
    solver: Option<ExternalSolver>,
}

impl InProcess {
    pub fn new() -> Self {
        InProcess::default()
    }

    /// Uses a DIMACS solver binary for PLTL synthesis.
    pub fn with_solver(mut self, solver: ExternalSolver) -> Self {
        self.solver = Some(solver);
        self
    }
}

impl Backend for InProcess {
    fn health(&self) -> Result<Health> {
        Ok(api::health())
    }

    fn monitor(&self, req: &MonitorRequest) -> Result<MonitorResponse> {
        Ok(api::monitor(req)?)
    }

    fn synth_pltl(&self, req: &SynthPltlRequest) -> Result<SynthPltlResponse> {
        Ok(api::synth_pltl(req, self.solver.as_ref())?)
    }

    fn synth_dfa(&self, req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse> {
        Ok(api::synth_dfa(req)?)
    }

    fn synth_mm(&self, req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse> {
        Ok(api::synth_mm(req)?)
    }

    fn generate(&self, req: &GenRequest) -> Result<GenResponse> {
        Ok(api::generate(req)?)
    }

    fn eval(&self, req: &EvalRequest) -> Result<MetricsReport> {
        Ok(api::eval(req)?)
    }

    fn bench(&self, req: &BenchRequest) -> Result<Throughput> {
        Ok(api::bench(req)?)
    }

    fn mem(&self, req: &DbSource) -> Result<MemReport> {
        Ok(api::mem(req)?)
    }
}

/// Talks JSON to a running server.
#[derive(Debug, Clone)]
pub struct Http {
    base: String,
    client: reqwest::blocking::Client,
}

impl Http {
    pub fn new(base: &str) -> Self {
        Http {
            base: base.trim_end_matches('/').to_string(),
            // synthesis can run for minutes
            client: reqwest::blocking::Client::builder()
                .timeout(None)
                .build()
                .expect("HTTP client without TLS always builds"),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn transport(&self, e: reqwest::Error) -> ClientError {
        ClientError::Transport {
            url: self.base.clone(),
            message: e.to_string(),
        }
    }

    fn decode<T: DeserializeOwned>(&self, resp: reqwest::blocking::Response) -> Result<T> {
        if resp.status().is_success() {
            return resp.json().map_err(|e| self.transport(e));
        }
        let status = resp.status();
        let text = resp.text().map_err(|e| self.transport(e))?;
        match serde_json::from_str::<ApiError>(&text) {
            Ok(e) => Err(e.into()),
            Err(_) => Err(ClientError::Transport {
                url: self.base.clone(),
                message: format!("{status}: {text}"),
            }),
        }
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        let resp = self
            .client
            .post(self.url(path))
            .json(body)
            .send()
            .map_err(|e| self.transport(e))?;
        self.decode(resp)
    }
}

impl Backend for Http {
    fn health(&self) -> Result<Health> {
        let resp = self.client.get(self.url("/health")).send().map_err(|e| self.transport(e))?;
        self.decode(resp)
    }

    fn monitor(&self, req: &MonitorRequest) -> Result<MonitorResponse> {
        self.post("/v1/monitor", req)
    }

    fn synth_pltl(&self, req: &SynthPltlRequest) -> Result<SynthPltlResponse> {
        self.post("/v1/synth/pltl", req)
    }

    fn synth_dfa(&self, req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse> {
        self.post("/v1/synth/dfa", req)
    }

    fn synth_mm(&self, req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse> {
        self.post("/v1/synth/mm", req)
    }

    fn generate(&self, req: &GenRequest) -> Result<GenResponse> {
        self.post("/v1/gen", req)
    }

    fn eval(&self, req: &EvalRequest) -> Result<MetricsReport> {
        self.post("/v1/eval", req)
    }

    fn bench(&self, req: &BenchRequest) -> Result<Throughput> {
        self.post("/v1/bench", req)
    }

    fn mem(&self, req: &DbSource) -> Result<MemReport> {
        self.post("/v1/mem", req)
    }
}

/// The HTTP backend when a server URL is given (or set in
/// `PHOENIX_SERVER`), otherwise the in-process one.
pub fn connect(server: Option<&str>, solver: Option<ExternalSolver>) -> Result<Box<dyn Backend>> {
    let env = std::env::var(SERVER_ENV).ok().filter(|s| !s.is_empty());
    match server.map(str::to_string).or(env) {
        Some(url) => {
            if solver.is_some() {
                return Err(ClientError::Unsupported(
                    "an external solver can only be used in-process".into(),
                ));
            }
            Ok(Box::new(Http::new(&url)))
        }
        None => {
            let mut b = InProcess::new();
            if let Some(s) = solver {
                b = b.with_solver(s);
            }
            Ok(Box::new(b))
        }
    }
}
