//! Async client for the ontoform HTTP service.

use ontoform_core::ontology::Product;
use ontoform_core::wire::{
    ApiError, CreateSession, ExportFormat, NextStep, SessionCreated, SessionStatus, SubmitAnswer,
    Submitted,
};
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{0}")]
    Api(ApiError),
    #[error("unexpected {status} response: {body}")]
    Unexpected { status: StatusCode, body: String },
}

impl ClientError {
    /// The service error code, when the service answered with one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api(e) => Some(&e.code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OntoformClient {
    base: String,
    http: reqwest::Client,
}

impl OntoformClient {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self::with_client(base, reqwest::Client::new())
    }

    pub fn with_client(base: impl Into<String>, http: reqwest::Client) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        OntoformClient { base, http }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/api{path}", self.base)
    }

    async fn decode<T: DeserializeOwned>(response: Response) -> Result<T, ClientError> {
        let status = response.status();
        let body = response.text().await?;
        if status.is_success() {
            return serde_json::from_str(&body)
                .map_err(|_| ClientError::Unexpected { status, body });
        }
        match serde_json::from_str::<ApiError>(&body) {
            Ok(err) => Err(ClientError::Api(err)),
            Err(_) => Err(ClientError::Unexpected { status, body }),
        }
    }

    pub async fn products(&self) -> Result<Vec<Product>, ClientError> {
        Self::decode(self.http.get(self.url("/products")).send().await?).await
    }

    pub async fn create_session(
        &self,
        product: &str,
        session_id: Option<&str>,
    ) -> Result<SessionCreated, ClientError> {
        let body = CreateSession {
            product: product.to_string(),
            session_id: session_id.map(str::to_string),
        };
        let response = self
            .http
            .post(self.url("/sessions"))
            .json(&body)
            .send()
            .await?;
        Self::decode(response).await
    }

    pub async fn session(&self, id: &str) -> Result<SessionStatus, ClientError> {
        Self::decode(
            self.http
                .get(self.url(&format!("/sessions/{id}")))
                .send()
                .await?,
        )
        .await
    }

    pub async fn form(&self, id: &str) -> Result<NextStep, ClientError> {
        Self::decode(
            self.http
                .get(self.url(&format!("/sessions/{id}/form")))
                .send()
                .await?,
        )
        .await
    }

    pub async fn submit(&self, id: &str, answer: &SubmitAnswer) -> Result<Submitted, ClientError> {
        let response = self
            .http
            .post(self.url(&format!("/sessions/{id}/answers")))
            .json(answer)
            .send()
            .await?;
        Self::decode(response).await
    }

    /// Raw export body, byte for byte as served.
    pub async fn export(&self, id: &str, format: ExportFormat) -> Result<String, ClientError> {
        let response = self
            .http
            .get(self.url(&format!("/sessions/{id}/export?format={}", format.as_str())))
            .send()
            .await?;
        let status = response.status();
        let body = response.text().await?;
        if status.is_success() {
            return Ok(body);
        }
        match serde_json::from_str::<ApiError>(&body) {
            Ok(err) => Err(ClientError::Api(err)),
            Err(_) => Err(ClientError::Unexpected { status, body }),
        }
    }
}
