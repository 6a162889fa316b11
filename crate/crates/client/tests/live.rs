use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::header::CONTENT_TYPE;
use axum::routing::get;
use axum::Router;

use grantmatch_client::{fetch_remote, ClientError, GrantMatchClient};
use grantmatch_core::corpus::{DocumentKind, Owner};
use grantmatch_core::recommend::DEFAULT_THRESHOLD;
use grantmatch_core::sample;
use grantmatch_service::{router, AppState};

async fn spawn(app: Router) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

async fn sample_client() -> GrantMatchClient {
    let state = AppState::from_analysis(sample::analysis(), DEFAULT_THRESHOLD);
    let addr = spawn(router(Arc::new(state))).await;
    GrantMatchClient::new(&format!("http://{addr}")).unwrap()
}

#[tokio::test]
async fn recommendations_round_trip() {
    let client = sample_client().await;
    let list = client.recommendations("kayamori", Some(0.5), Some(0.4)).await.unwrap();
    assert_eq!(list.selected, ["1-C"]);
    let list = client.recommendations("kayamori", Some(0.8), None).await.unwrap();
    assert_eq!(list.selected.len(), 3);
    let list = client.recommendations("kayamori", None, None).await.unwrap();
    assert_eq!(list.params.alpha, 0.5);
}

#[tokio::test]
async fn validation_error_carries_field() {
    let client = sample_client().await;
    let err = client.recommendations("kayamori", Some(1.3), None).await.unwrap_err();
    assert!(matches!(err, ClientError::Status { status: 400, .. }), "{err:?}");
    assert_eq!(err.field(), Some("alpha"));
}

#[tokio::test]
async fn listing_researcher_and_missing() {
    let client = sample_client().await;
    let grants = client.grants().await.unwrap();
    assert_eq!(grants[0].grant_id, "kayamori");
    let r = client.researcher("1-A").await.unwrap();
    assert_eq!(r.researcher.kaken_keywords.len(), 3);
    let err = client.researcher("zz").await.unwrap_err();
    assert!(matches!(err, ClientError::Status { status: 404, .. }), "{err:?}");
    let err = client.reload().await.unwrap_err();
    assert!(matches!(err, ClientError::Status { status: 409, .. }), "{err:?}");
}

#[tokio::test]
async fn unreachable_service() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let client = GrantMatchClient::new(&format!("http://{addr}")).unwrap();
    assert!(matches!(client.grants().await, Err(ClientError::Transport { .. })));
}

async fn pages() -> SocketAddr {
    let app = Router::new()
        .route(
            "/call",
            get(|| async { ([(CONTENT_TYPE, "text/html; charset=utf-8")], "<p>Grant <b>call</b></p>") }),
        )
        .route(
            "/notes",
            get(|| async { ([(CONTENT_TYPE, "text/plain")], "plain notes") }),
        )
        .route(
            "/report.pdf",
            get(|| async { ([(CONTENT_TYPE, "application/pdf")], vec![0x25u8, 0x50, 0x44, 0x46]) }),
        )
        .route(
            "/latin1",
            get(|| async { ([(CONTENT_TYPE, "text/plain")], vec![0x63u8, 0x61, 0x66, 0xe9]) }),
        )
        .route("/fail", get(|| async { axum::http::StatusCode::SERVICE_UNAVAILABLE }));
    spawn(app).await
}

fn owner() -> Owner {
    Owner::Grant("g".into())
}

#[tokio::test]
async fn fetch_kinds_from_content_type() {
    let addr = pages().await;
    let doc = fetch_remote(&format!("http://{addr}/call"), owner()).await.unwrap();
    assert_eq!(doc.kind, DocumentKind::Html);
    assert_eq!(doc.body, "<p>Grant <b>call</b></p>");
    assert_eq!(doc.id, format!("http://{addr}/call"));
    let doc = fetch_remote(&format!("http://{addr}/notes"), owner()).await.unwrap();
    assert_eq!(doc.kind, DocumentKind::PlainText);
}

#[tokio::test]
async fn fetch_errors() {
    let addr = pages().await;
    let err = fetch_remote(&format!("http://{addr}/missing"), owner())
        .await
        .unwrap_err();
    assert!(matches!(err, ClientError::NotFound { .. }), "{err:?}");
    let err = fetch_remote(&format!("http://{addr}/report.pdf"), owner())
        .await
        .unwrap_err();
    assert!(matches!(err, ClientError::UnsupportedContent { .. }), "{err:?}");
    let err = fetch_remote(&format!("http://{addr}/latin1"), owner())
        .await
        .unwrap_err();
    assert!(matches!(err, ClientError::Undecodable { .. }), "{err:?}");
    let err = fetch_remote(&format!("http://{addr}/fail"), owner()).await.unwrap_err();
    assert!(matches!(err, ClientError::Status { status: 503, .. }), "{err:?}");
    assert!(err.to_string().contains(&addr.to_string()));
    let err = fetch_remote("file:///etc/passwd", owner()).await.unwrap_err();
    assert!(matches!(err, ClientError::InvalidUri { .. }), "{err:?}");
}
