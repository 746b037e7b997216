mod common;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use futures_util::StreamExt;
use liverec::backend::Backend;
use liverec::schema::{Outcome, ProbeResult};
use liverec::server::{self, BackendInfo, Service, SubmitError};
use serde_json::json;
use tokio_tungstenite::tungstenite::Message;

fn service(dir: &std::path::Path, adapter_args: &[&str]) -> Arc<Service> {
    let mut env = common::env_in(dir);
    env.adapter_args = adapter_args.iter().map(|s| s.to_string()).collect();
    Arc::new(Service::start(vec![Backend::builtin("mock").unwrap()], env, 80))
}

async fn spawn_server(service: Arc<Service>) -> SocketAddr {
    let (tx, rx) = tokio::sync::oneshot::channel();
    tokio::spawn(server::serve("127.0.0.1:0".parse().unwrap(), service, move |addr| {
        let _ = tx.send(addr);
    }));
    rx.await.unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn http_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_server(service(dir.path(), &[])).await;
    let base = format!("http://{addr}");
    let client = reqwest::Client::new();

    let backends: Vec<BackendInfo> = client.get(format!("{base}/backends")).send().await.unwrap().json().await.unwrap();
    assert_eq!(backends.len(), 1);
    assert_eq!(backends[0].id, "mock");
    assert!(backends[0].available);

    let none = client.get(format!("{base}/recordings/latest?language=mock")).send().await.unwrap();
    assert_eq!(none.status(), 404);

    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/live?language=mock")).await.unwrap();
    let (_, mut incoming) = ws.split();

    let resp = client
        .post(format!("{base}/probe"))
        .json(&json!({ "language": "mock", "source": common::read_fixture("binary_search_g.toml") }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    let result: ProbeResult = resp.json().await.unwrap();
    let rec = result.recording.clone().unwrap();
    assert_eq!(rec.return_value.as_deref(), Some("-1"));
    let history = |name: &str| -> Vec<String> {
        rec.histories
            .iter()
            .find(|h| h.name == name)
            .map(|h| h.entries.iter().map(|e| e.value.clone()).collect())
            .unwrap_or_default()
    };
    assert_eq!(history("low"), ["0", "3", "5", "6"]);
    assert_eq!(history("mid"), ["2", "4", "5"]);

    let pushed = tokio::time::timeout(Duration::from_secs(5), incoming.next()).await.unwrap().unwrap().unwrap();
    let Message::Text(text) = pushed else { panic!("expected text, got {pushed:?}") };
    let pushed: ProbeResult = serde_json::from_str(&text).unwrap();
    assert_eq!(pushed, result);

    let latest: ProbeResult = client
        .get(format!("{base}/recordings/latest?language=mock"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(latest, result);
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_language_and_bad_source() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_server(service(dir.path(), &[])).await;
    let client = reqwest::Client::new();
    let resp = client
        .post(format!("http://{addr}/probe"))
        .json(&json!({ "language": "cobol", "source": "" }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 404);
    let resp = client.get(format!("http://{addr}/recordings/latest?language=cobol")).send().await.unwrap();
    assert_eq!(resp.status(), 404);

    let result: ProbeResult = client
        .post(format!("http://{addr}/probe"))
        .json(&json!({ "language": "mock", "source": "no annotation here" }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(result.outcome, Outcome::AnnotationError);

    let ok: ProbeResult = client
        .post(format!("http://{addr}/probe"))
        .json(&json!({ "language": "mock", "source": common::read_fixture("foo.toml") }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(ok.is_recording());
}

#[test]
fn burst_is_coalesced() {
    let dir = tempfile::tempdir().unwrap();
    let service = service(dir.path(), &["--latency", "15"]);
    let mut results = service.subscribe("mock").unwrap();
    let foo = common::read_fixture("foo.toml");
    let first = service.enqueue("mock", foo.clone()).unwrap();
    // Let the worker pick up the first submission.
    std::thread::sleep(Duration::from_millis(300));
    let burst: Vec<_> = (1..=5)
        .map(|n| {
            let source = foo.replacen("#@foo(3)", &format!("#@foo({n})"), 1);
            service.enqueue("mock", source).unwrap()
        })
        .collect();
    assert!(first.blocking_recv().unwrap().is_ok());
    let answers: Vec<_> = burst.into_iter().map(|rx| rx.blocking_recv().unwrap()).collect();
    for a in &answers[..4] {
        assert_eq!(a.as_ref().unwrap_err(), &SubmitError::Superseded);
    }
    let last = answers[4].as_ref().unwrap();
    assert_eq!(last.probe.as_ref().unwrap().args, ["5"]);
    let mut produced = 0;
    while results.try_recv().is_ok() {
        produced += 1;
    }
    assert_eq!(produced, 2);
}

#[test]
fn workers_are_serialized_per_backend() {
    let dir = tempfile::tempdir().unwrap();
    let service = service(dir.path(), &[]);
    let foo = common::read_fixture("foo.toml");
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (service, foo) = (service.clone(), foo.clone());
            std::thread::spawn(move || service.submit_blocking("mock", foo))
        })
        .collect();
    for h in handles {
        match h.join().unwrap() {
            Ok(r) => assert_eq!(r.recording.unwrap().return_value.as_deref(), Some("3")),
            Err(e) => assert_eq!(e, SubmitError::Superseded),
        }
    }
}
