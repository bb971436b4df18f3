//! Thin async client for the play service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), codenames_client::ClientError> {
//! use codenames_client::Client;
//! use codenames_core::agents::Role;
//!
//! let client = Client::new("http://127.0.0.1:8080");
//! let created = client.create(&Client::config(Role::Guesser, "static:spymaster:a".parse().unwrap())).await?;
//! let step = client.agent_step(&created.id).await?;
//! println!("clue: {:?}", step.clue);
//! # Ok(()) }
//! ```

use codenames_core::agents::{AgentSpec, Role};
use codenames_core::game::Clue;
use codenames_core::harness::Environment;
use codenames_core::session::{ActionResponse, ApiError, BeliefsResponse, SessionConfig, SessionView};
use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Response of `POST /sessions`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub view: SessionView,
}

#[derive(Debug, Error)]
pub enum ClientError {
    /// The service answered with an error body.
    #[error("{status}: {} ({})", .error.message, .error.code)]
    Api { status: StatusCode, error: ApiError },
    #[error(transparent)]
    Http(#[from] reqwest::Error),
}

impl ClientError {
    /// The error code for service errors.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { error, .. } => Some(&error.code),
            ClientError::Http(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base_url.into().trim_end_matches('/').to_owned(),
        }
    }

    /// A deterministic session with default composition and a random seed.
    pub fn config(role: Role, agent: AgentSpec) -> SessionConfig {
        SessionConfig {
            role,
            agent,
            composition: None,
            seed: None,
            environment: Environment::Deterministic,
            turn_limit: None,
        }
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    async fn send<T: DeserializeOwned>(&self, request: RequestBuilder) -> Result<T, ClientError> {
        let response = request.send().await?;
        let status = response.status();
        if status.is_success() {
            Ok(response.json().await?)
        } else {
            Err(Self::api_error(status, response).await)
        }
    }

    async fn api_error(status: StatusCode, response: reqwest::Response) -> ClientError {
        let text = response.text().await.unwrap_or_default();
        // errors that never reached a handler may not be JSON
        let error = serde_json::from_str(&text).unwrap_or(ApiError {
            code: "http".into(),
            message: text,
            rule: None,
        });
        ClientError::Api { status, error }
    }

    pub async fn create(&self, config: &SessionConfig) -> Result<Created, ClientError> {
        self.send(self.request(Method::POST, "/sessions").json(config)).await
    }

    pub async fn view(&self, id: &str) -> Result<SessionView, ClientError> {
        self.send(self.request(Method::GET, &format!("/sessions/{id}/view"))).await
    }

    pub async fn clue(&self, id: &str, clue: &Clue) -> Result<ActionResponse, ClientError> {
        self.send(self.request(Method::POST, &format!("/sessions/{id}/clue")).json(clue)).await
    }

    pub async fn guess<S: AsRef<str>>(&self, id: &str, words: &[S]) -> Result<ActionResponse, ClientError> {
        let words: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
        let body = GuessBody { words };
        self.send(self.request(Method::POST, &format!("/sessions/{id}/guess")).json(&body)).await
    }

    pub async fn agent_step(&self, id: &str) -> Result<ActionResponse, ClientError> {
        self.send(self.request(Method::POST, &format!("/sessions/{id}/agent-step"))).await
    }

    pub async fn beliefs(&self, id: &str) -> Result<BeliefsResponse, ClientError> {
        self.send(self.request(Method::GET, &format!("/sessions/{id}/beliefs"))).await
    }

    /// The game record in transcript text form.
    pub async fn transcript(&self, id: &str) -> Result<String, ClientError> {
        let response = self.request(Method::GET, &format!("/sessions/{id}/transcript")).send().await?;
        let status = response.status();
        if status.is_success() {
            Ok(response.text().await?)
        } else {
            Err(Self::api_error(status, response).await)
        }
    }
}

#[derive(Serialize)]
struct GuessBody<'a> {
    words: Vec<&'a str>,
}
