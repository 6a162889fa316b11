//! Async client for the grantmatch HTTP service, and remote document
//! fetching for the ingestion layout.

use grantmatch_core::api::{ErrorBody, GrantSummary, ReloadSummary, ResearcherProfile};
use grantmatch_core::corpus::{DocumentKind, Owner, RawDocument};
use grantmatch_core::recommend::RecommendationList;
use reqwest::header::CONTENT_TYPE;
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;
use url::Url;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid uri `{uri}`: {reason}")]
    InvalidUri { uri: String, reason: String },
    #[error("request to {uri} failed: {source}")]
    Transport {
        uri: String,
        #[source]
        source: reqwest::Error,
    },
    #[error("not found: {uri}")]
    NotFound { uri: String },
    #[error("{uri} returned {status}: {message}")]
    Status {
        uri: String,
        status: u16,
        message: String,
        field: Option<String>,
    },
    #[error("{uri} returned unsupported content type `{content_type}`")]
    UnsupportedContent { uri: String, content_type: String },
    #[error("{uri} returned a body that is not valid UTF-8")]
    Undecodable { uri: String },
    #[error("unexpected response body from {uri}: {message}")]
    Decode { uri: String, message: String },
}

impl ClientError {
    /// The field a validation error refers to, if the service named one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::Status { field, .. } => field.as_deref(),
            _ => None,
        }
    }
}

fn parse_http_url(uri: &str) -> Result<Url, ClientError> {
    let url = Url::parse(uri).map_err(|e| ClientError::InvalidUri {
        uri: uri.to_owned(),
        reason: e.to_string(),
    })?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(ClientError::InvalidUri {
            uri: uri.to_owned(),
            reason: format!("scheme `{}` is not http(s)", url.scheme()),
        });
    }
    Ok(url)
}

fn transport(uri: &Url) -> impl FnOnce(reqwest::Error) -> ClientError + '_ {
    move |source| ClientError::Transport {
        uri: uri.to_string(),
        source,
    }
}

pub struct GrantMatchClient {
    base: Url,
    http: reqwest::Client,
}

impl GrantMatchClient {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let mut base = parse_http_url(base)?;
        if !base.path().ends_with('/') {
            base.set_path(&format!("{}/", base.path()));
        }
        Ok(Self {
            base,
            http: reqwest::Client::new(),
        })
    }

    fn url(&self, segments: &[&str]) -> Url {
        let mut url = self.base.clone();
        url.path_segments_mut()
            .expect("http url has a path")
            .pop_if_empty()
            .extend(segments);
        url
    }

    async fn decode<T: DeserializeOwned>(url: &Url, resp: Response) -> Result<T, ClientError> {
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(transport(url))?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode {
                uri: url.to_string(),
                message: e.to_string(),
            });
        }
        let body: Option<ErrorBody> = serde_json::from_slice(&bytes).ok();
        if status == StatusCode::NOT_FOUND && body.is_none() {
            return Err(ClientError::NotFound { uri: url.to_string() });
        }
        let (message, field) = match body {
            Some(b) => (b.error, b.field),
            None => (String::from_utf8_lossy(&bytes).into_owned(), None),
        };
        Err(ClientError::Status {
            uri: url.to_string(),
            status: status.as_u16(),
            message,
            field,
        })
    }

    pub async fn grants(&self) -> Result<Vec<GrantSummary>, ClientError> {
        let url = self.url(&["grants"]);
        let resp = self.http.get(url.clone()).send().await.map_err(transport(&url))?;
        Self::decode(&url, resp).await
    }

    /// Either parameter may be left to the service default.
    pub async fn recommendations(
        &self,
        grant_id: &str,
        alpha: Option<f64>,
        threshold: Option<f64>,
    ) -> Result<RecommendationList, ClientError> {
        let mut url = self.url(&["grants", grant_id, "recommendations"]);
        {
            let mut q = url.query_pairs_mut();
            if let Some(a) = alpha {
                q.append_pair("alpha", &a.to_string());
            }
            if let Some(t) = threshold {
                q.append_pair("threshold", &t.to_string());
            }
        }
        if url.query() == Some("") {
            url.set_query(None);
        }
        let resp = self.http.get(url.clone()).send().await.map_err(transport(&url))?;
        Self::decode(&url, resp).await
    }

    pub async fn researcher(&self, id: &str) -> Result<ResearcherProfile, ClientError> {
        let url = self.url(&["researchers", id]);
        let resp = self.http.get(url.clone()).send().await.map_err(transport(&url))?;
        Self::decode(&url, resp).await
    }

    pub async fn reload(&self) -> Result<ReloadSummary, ClientError> {
        let url = self.url(&["reload"]);
        let resp = self.http.post(url.clone()).send().await.map_err(transport(&url))?;
        Self::decode(&url, resp).await
    }
}

/// Maps a `Content-Type` value to a document kind. `None` means binary or
/// otherwise unsupported.
pub fn kind_from_content_type(content_type: &str) -> Option<DocumentKind> {
    let mime = content_type.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
    match mime.as_str() {
        "text/html" | "application/xhtml+xml" => Some(DocumentKind::Html),
        m if m.starts_with("text/") => Some(DocumentKind::PlainText),
        _ => None,
    }
}

/// Downloads `uri` as a raw document with id and origin set to the uri.
///
/// A missing content type falls back to the extension of the url path, then
/// to plain text.
pub async fn fetch_remote(uri: &str, owner: Owner) -> Result<RawDocument, ClientError> {
    let url = parse_http_url(uri)?;
    let resp = reqwest::get(url.clone()).await.map_err(transport(&url))?;
    let status = resp.status();
    if status == StatusCode::NOT_FOUND {
        return Err(ClientError::NotFound { uri: uri.to_owned() });
    }
    if !status.is_success() {
        return Err(ClientError::Status {
            uri: uri.to_owned(),
            status: status.as_u16(),
            message: status.canonical_reason().unwrap_or("request failed").to_owned(),
            field: None,
        });
    }
    let kind = match resp.headers().get(CONTENT_TYPE) {
        Some(value) => {
            let ct = value.to_str().unwrap_or("");
            kind_from_content_type(ct).ok_or_else(|| ClientError::UnsupportedContent {
                uri: uri.to_owned(),
                content_type: ct.to_owned(),
            })?
        }
        None => DocumentKind::from_path(std::path::Path::new(url.path())).unwrap_or(DocumentKind::PlainText),
    };
    let bytes = resp.bytes().await.map_err(transport(&url))?;
    let body = String::from_utf8(bytes.to_vec()).map_err(|_| ClientError::Undecodable { uri: uri.to_owned() })?;
    Ok(RawDocument {
        id: uri.to_owned(),
        origin: uri.to_owned(),
        kind,
        body,
        owner,
    })
}
