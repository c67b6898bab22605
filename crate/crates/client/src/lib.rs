//! Thin async client for the offcut session service.

use std::time::Duration;

use offcut_core::io::{load_design, save_design, DesignDocument, DocumentError, RunDoc};
use offcut_core::optimizer::OptimizerConfig;
use offcut_core::protocol::{
    EditRequest, EditResponse, LockRequest, LockResponse, OptimizeAccepted, PathPointDoc, RunState, SelectRequest, SessionCreated,
    StatusDoc, SuggestionsDoc,
};
use reqwest::{Method, Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Api { status: StatusCode, message: String, path: Option<String> },
    #[error("malformed response: {0}")]
    Decode(#[from] serde_json::Error),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("optimization ended as {state}{}", error.as_ref().map(|e| format!(": {e}")).unwrap_or_default())]
    RunEnded { state: RunState, error: Option<String> },
}

#[derive(Debug, Deserialize)]
struct ErrorReply {
    error: String,
    #[serde(default)]
    path: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

/// Handle to one server-side session.
#[derive(Debug, Clone)]
pub struct SessionHandle {
    client: Client,
    pub id: String,
}

impl Client {
    pub fn new(base_url: &str) -> Self {
        Self { base: base_url.trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    async fn send(&self, method: Method, path: &str, body: Option<Vec<u8>>) -> Result<Response, ClientError> {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.header("content-type", "application/json").body(b);
        }
        let res = req.send().await?;
        if res.status().is_success() {
            return Ok(res);
        }
        let status = res.status();
        let bytes = res.bytes().await?;
        let (message, path) = match serde_json::from_slice::<ErrorReply>(&bytes) {
            Ok(e) => (e.error, e.path),
            Err(_) => (String::from_utf8_lossy(&bytes).into_owned(), None),
        };
        Err(ClientError::Api { status, message, path })
    }

    async fn json<T: DeserializeOwned>(&self, method: Method, path: &str, body: Option<Vec<u8>>) -> Result<T, ClientError> {
        let bytes = self.send(method, path, body).await?.bytes().await?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        self.send(Method::GET, "/health", None).await.map(|_| ())
    }

    pub async fn create_session(&self, doc: &DesignDocument) -> Result<SessionHandle, ClientError> {
        let created: SessionCreated = self.json(Method::POST, "/sessions", Some(save_design(doc))).await?;
        Ok(SessionHandle { client: self.clone(), id: created.id })
    }

    pub fn session(&self, id: &str) -> SessionHandle {
        SessionHandle { client: self.clone(), id: id.to_string() }
    }
}

fn body<T: Serialize>(v: &T) -> Option<Vec<u8>> {
    Some(serde_json::to_vec(v).expect("request bodies serialize"))
}

impl SessionHandle {
    fn path(&self, rest: &str) -> String {
        format!("/sessions/{}{rest}", self.id)
    }

    pub async fn design(&self) -> Result<DesignDocument, ClientError> {
        let bytes = self.client.send(Method::GET, &self.path("/design"), None).await?.bytes().await?;
        Ok(load_design(&bytes)?)
    }

    pub async fn optimize(&self, config: &OptimizerConfig) -> Result<u64, ClientError> {
        let accepted: OptimizeAccepted = self.client.json(Method::POST, &self.path("/optimize"), body(config)).await?;
        Ok(accepted.run)
    }

    pub async fn cancel(&self) -> Result<(), ClientError> {
        self.client.send(Method::DELETE, &self.path("/optimize"), None).await.map(|_| ())
    }

    pub async fn status(&self) -> Result<StatusDoc, ClientError> {
        self.client.json(Method::GET, &self.path("/status"), None).await
    }

    /// Polls the status until the run stops; errors unless it completed.
    pub async fn wait(&self, poll: Duration) -> Result<StatusDoc, ClientError> {
        loop {
            let st = self.status().await?;
            match st.state {
                RunState::Running => tokio::time::sleep(poll).await,
                RunState::Done => return Ok(st),
                state => return Err(ClientError::RunEnded { state, error: st.error }),
            }
        }
    }

    pub async fn run(&self) -> Result<RunDoc, ClientError> {
        self.client.json(Method::GET, &self.path("/run"), None).await
    }

    pub async fn suggestions(&self) -> Result<SuggestionsDoc, ClientError> {
        self.client.json(Method::GET, &self.path("/suggestions"), None).await
    }

    pub async fn path_point(&self, k: usize, t: usize) -> Result<PathPointDoc, ClientError> {
        self.client.json(Method::GET, &self.path(&format!("/suggestions/{k}/path/{t}")), None).await
    }

    pub async fn select(&self, k: usize, t: Option<usize>) -> Result<DesignDocument, ClientError> {
        let bytes = self.client.send(Method::POST, &self.path("/select"), body(&SelectRequest { k, t })).await?.bytes().await?;
        Ok(load_design(&bytes)?)
    }

    pub async fn lock(&self, req: &LockRequest) -> Result<LockResponse, ClientError> {
        self.client.json(Method::POST, &self.path("/lock"), body(req)).await
    }

    pub async fn edit(&self, req: &EditRequest) -> Result<EditResponse, ClientError> {
        self.client.json(Method::POST, &self.path("/edit"), body(req)).await
    }

    pub async fn plan_svg(&self, board: usize) -> Result<String, ClientError> {
        Ok(self.client.send(Method::GET, &self.path(&format!("/plan.svg?board={board}")), None).await?.text().await?)
    }

    pub async fn close(&self) -> Result<(), ClientError> {
        self.client.send(Method::DELETE, &self.path(""), None).await.map(|_| ())
    }
}
