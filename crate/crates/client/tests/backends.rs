use std::net::SocketAddr;
use std::sync::mpsc;

use phoenix_client::{connect, Backend, ClientError, Http, InProcess};
use phoenix_core::api::{
    DbSource, ErrorKind, EvalRequest, GenKind, GenRequest, MonitorRequest, SynthAutomatonRequest,
};
use phoenix_core::automata::RunMode;
use phoenix_core::synth::ExternalSolver;
use phoenix_core::traces::GenConfig;

const RLF_DB: &str = "[signature]\nname=rlf_report\nlayer=RRC\nkind=pltl\nseverity=high\nbody=(imp (prop ueInformationRequest) (S (not (prop rrcConnectionRequest)) (prop securityModeComplete)))\n";

/// Starts a server on an ephemeral port in a background thread.
fn spawn_server() -> String {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = phoenix_service::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            phoenix_service::serve(listener, std::future::pending()).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

fn source() -> DbSource {
    DbSource {
        db: RLF_DB.into(),
        ..DbSource::default()
    }
}

#[test]
fn http_matches_in_process() {
    let url = spawn_server();
    let http = Http::new(&url);
    let local = InProcess::new();
    assert_eq!(http.health().unwrap().status, "ok");

    let gen = GenRequest {
        kind: GenKind::Malicious,
        attack: Some("rlf_report".into()),
        sessions: None,
        layer: None,
        catalog: Default::default(),
        config: GenConfig::new(3, 20, 4),
    };
    let a = http.generate(&gen).unwrap();
    assert_eq!(a, local.generate(&gen).unwrap());
    assert_eq!(a.count, 20);

    let mon = MonitorRequest {
        source: source(),
        traces: a.traces.clone(),
        mode: RunMode::StopFirst,
    };
    let r = http.monitor(&mon).unwrap();
    assert_eq!(r, local.monitor(&mon).unwrap());
    assert_eq!(r.report.flagged_traces(), 20);

    let ev = EvalRequest {
        source: source(),
        traces: a.traces,
    };
    assert_eq!(http.eval(&ev).unwrap(), local.eval(&ev).unwrap());
    assert_eq!(http.mem(&source()).unwrap(), local.mem(&source()).unwrap());
}

#[test]
fn server_errors_come_back_typed() {
    let http = Http::new(&spawn_server());
    let req = SynthAutomatonRequest {
        pos: "a\n".into(),
        neg: "a\n".into(),
    };
    match http.synth_dfa(&req) {
        Err(ClientError::Api(e)) => assert_eq!(e.kind, ErrorKind::Failed, "{e}"),
        other => panic!("expected an API error, got {other:?}"),
    }
    let bad = DbSource {
        db: "[signature]\nname=x\n".into(),
        ..DbSource::default()
    };
    match http.mem(&bad) {
        Err(ClientError::Api(e)) => assert_eq!(e.kind, ErrorKind::Invalid),
        other => panic!("expected an API error, got {other:?}"),
    }
}

#[test]
fn unreachable_server_is_transport_error() {
    // port 9 (discard) is almost never listening
    let http = Http::new("http://127.0.0.1:9");
    assert!(matches!(http.health(), Err(ClientError::Transport { .. })));
}

#[test]
fn external_solver_needs_in_process() {
    let solver = ExternalSolver::new("minisat");
    assert!(matches!(
        connect(Some("http://127.0.0.1:1"), Some(solver.clone())),
        Err(ClientError::Unsupported(_))
    ));
    assert!(connect(Some("http://127.0.0.1:1"), None).is_ok());
}
