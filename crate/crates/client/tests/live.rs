use std::time::Duration;

use offcut_client::{Client, ClientError};
use offcut_core::fixtures::bookshelf;
use offcut_core::io::{optimize_document, DesignDocument};
use offcut_core::optimizer::{OptimizerConfig, RunControl};
use offcut_core::protocol::RunState;

async fn spawn_server() -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(offcut_service::serve(listener));
    format!("http://{addr}")
}

fn doc() -> DesignDocument {
    let f = bookshelf();
    DesignDocument::from_problem("bookshelf", 18.0, &f.problem, &f.x)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn remote_run_matches_the_in_process_run() {
    let client = Client::new(&spawn_server().await);
    client.health().await.unwrap();
    let session = client.create_session(&doc()).await.unwrap();
    assert_eq!(session.design().await.unwrap(), doc());

    let config = OptimizerConfig { seed: 11, generations: 1, keep: 2, improve_iterations: 2, workers: 2, ..Default::default() };
    session.optimize(&config).await.unwrap();
    let st = session.wait(Duration::from_millis(20)).await.unwrap();
    assert_eq!(st.state, RunState::Done);
    let remote = session.run().await.unwrap();
    let local = optimize_document(&doc(), &config, &RunControl::default()).unwrap();
    assert_eq!(remote, local);

    let sugg = session.suggestions().await.unwrap();
    let p0 = session.path_point(0, 0).await.unwrap();
    assert_eq!(p0.params.values, doc().values());
    let selected = session.select(0, None).await.unwrap();
    assert_eq!(selected.values(), remote.results[sugg.suggestions[0].result].params.values);
    assert!(session.plan_svg(0).await.unwrap().starts_with("<?xml"));
    session.close().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn api_errors_carry_status_and_path() {
    let client = Client::new(&spawn_server().await);
    let mut bad = doc();
    bad.boards[0].height = -1.0;
    match client.create_session(&bad).await {
        Err(ClientError::Api { status, path, .. }) => {
            assert_eq!(status.as_u16(), 422);
            assert_eq!(path.as_deref(), Some("boards[0].height"));
        }
        other => panic!("unexpected {other:?}"),
    }
    match client.session("missing").status().await {
        Err(ClientError::Api { status, .. }) => assert_eq!(status.as_u16(), 404),
        other => panic!("unexpected {other:?}"),
    }
}
