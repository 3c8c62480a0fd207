use std::collections::{BTreeMap, BTreeSet};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mosbench_core::model::Dimension;
use mosbench_core::mos::{compute_mos, MosConfig};
use mosbench_core::store::{load_study, StudyFormat};
use mosbench_server::{router, AppState, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const TOKEN: &str = "letmein";

fn app(dir: &std::path::Path) -> Router {
    router(
        AppState::open(&ServerConfig {
            store_dir: dir.to_path_buf(),
            admin_token: Some(TOKEN.into()),
        })
        .unwrap(),
    )
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }

    fn error(&self) -> String {
        self.json()["error"].as_str().unwrap().to_string()
    }
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<&[u8]>, token: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_vec())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let content_type = res
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        bytes,
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    send(app, "GET", uri, None, None).await
}

async fn post(app: &Router, uri: &str, body: &Value) -> Reply {
    send(app, "POST", uri, Some(body.to_string().as_bytes()), None).await
}

/// Two prompts: a simple one with three videos and a complex one with two.
fn study_request(id: &str) -> Value {
    json!({
        "study_id": id,
        "name": "pilot",
        "prompts": [
            {"prompt_id": "p1", "text": "a red ball rolls", "task": "color", "subtasks": ["ball is red"]},
            {"prompt_id": "p2", "text": "a cat jumps then sleeps", "task": "complex",
             "subtasks": ["cat jumps", "cat sleeps", "order is right"]}
        ],
        "videos": [
            {"video_id": "v1", "prompt_id": "p1", "model_id": "ma", "split": "test"},
            {"video_id": "v2", "prompt_id": "p1", "model_id": "mb", "split": "test"},
            {"video_id": "v3", "prompt_id": "p1", "model_id": "mc", "split": "test"},
            {"video_id": "v4", "prompt_id": "p2", "model_id": "ma", "split": "test"},
            {"video_id": "v5", "prompt_id": "p2", "model_id": "mb", "split": "test"}
        ],
        "subjects": ["alice", "bob", "carol"],
        "annotators_per_sample": 2,
        "sessions": 1,
        "seed": 3,
        "video_urls": {"v1": "https://cdn.example/v1.mp4"}
    })
}

async fn create(app: &Router, id: &str) -> Value {
    let r = send(app, "POST", "/studies", Some(study_request(id).to_string().as_bytes()), Some(TOKEN)).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
    r.json()
}

fn session_ids(created: &Value) -> Vec<String> {
    created["sessions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["session_id"].as_str().unwrap().to_string())
        .collect()
}

fn rating(video: &str, p: i64, c: i64, votes: usize) -> Value {
    json!({"video_id": video, "perception": p, "correspondence": c, "votes": vec![true; votes]})
}

fn keys(v: &Value) -> BTreeSet<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

fn set(items: &[&'static str]) -> BTreeSet<&'static str> {
    items.iter().copied().collect()
}

/// Answers every task of a session with scores that vary by video;
/// returns the number of videos rated.
async fn finish_session(app: &Router, sid: &str, score: i64) -> usize {
    let mut rated = 0;
    loop {
        let next = get(app, &format!("/sessions/{sid}/next")).await.json();
        if next["status"] == "complete" {
            return rated;
        }
        let subtasks = next["prompt"]["subtasks"].as_array().unwrap().len();
        for v in next["videos"].as_array().unwrap() {
            let id = v["video_id"].as_str().unwrap();
            let k: i64 = id[1..].parse().unwrap();
            let body = rating(id, 1 + (score + k) % 5, 1 + (2 * score + k) % 5, subtasks);
            let r = post(app, &format!("/sessions/{sid}/ratings"), &body).await;
            assert_eq!(r.status, StatusCode::OK);
            rated += 1;
        }
    }
}

#[tokio::test]
async fn study_creation_needs_the_admin_token() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let body = study_request("s1").to_string();
    let r = send(&app, "POST", "/studies", Some(body.as_bytes()), None).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::UNAUTHORIZED, "unauthorized"));
    let r = send(&app, "POST", "/studies", Some(body.as_bytes()), Some("nope")).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    let created = create(&app, "s1").await;
    // 5 videos x 2 annotators over 3 subjects
    let total: u64 = created["sessions"].as_array().unwrap().iter().map(|s| s["total"].as_u64().unwrap()).sum();
    assert_eq!(total, 10);
    assert_eq!(session_ids(&created).len(), 3);

    let r = send(&app, "POST", "/studies", Some(body.as_bytes()), Some(TOKEN)).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::CONFLICT, "study_exists"));
}

#[tokio::test]
async fn open_token_and_bad_study_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(
        AppState::open(&ServerConfig {
            store_dir: dir.path().to_path_buf(),
            admin_token: None,
        })
        .unwrap(),
    );
    let mut bad_id = study_request("has.dot");
    let r = post(&app, "/studies", &bad_id).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "invalid_study"));

    bad_id["study_id"] = json!("ok");
    bad_id["annotators_per_sample"] = json!(4);
    let r = post(&app, "/studies", &bad_id).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY, "three subjects cannot cover four annotators");

    let mut orphan = study_request("ok");
    orphan["videos"][0]["prompt_id"] = json!("p9");
    assert_eq!(post(&app, "/studies", &orphan).await.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r = send(&app, "POST", "/studies", Some(b"{not json"), None).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::BAD_REQUEST, "bad_request"));

    assert_eq!(post(&app, "/studies", &study_request("ok")).await.status, StatusCode::CREATED);
}

#[tokio::test]
async fn next_task_groups_by_prompt_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let created = create(&app, "s1").await;
    for sid in session_ids(&created) {
        let a = get(&app, &format!("/sessions/{sid}/next")).await;
        assert_eq!(a.status, StatusCode::OK);
        let b = get(&app, &format!("/sessions/{sid}/next")).await;
        assert_eq!(a.bytes, b.bytes);
        let task = a.json();
        assert_eq!(task["status"], "task");
        let videos = task["videos"].as_array().unwrap();
        assert!((1..=3).contains(&videos.len()));
        let prompt = task["prompt"]["prompt_id"].as_str().unwrap();
        for v in videos {
            let id = v["video_id"].as_str().unwrap();
            let expected = if id <= "v3" { "p1" } else { "p2" };
            assert_eq!(prompt, expected);
            let url = if id == "v1" { "https://cdn.example/v1.mp4" } else { id };
            assert_eq!(v["url"], url);
        }
        assert_eq!(task["dimensions"], json!(["perception", "correspondence"]));
        assert_eq!(task["progress"]["completed"], 0);
        let p = get(&app, &format!("/sessions/{sid}/progress")).await.json();
        assert!(p["opened_at"].is_u64());
        assert!(p["closed_at"].is_null());
    }
}

#[tokio::test]
async fn submission_errors() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let sid = session_ids(&create(&app, "s1").await)[0].clone();
    let task = get(&app, &format!("/sessions/{sid}/next")).await.json();
    let video = task["videos"][0]["video_id"].as_str().unwrap().to_string();
    let subtasks = task["prompt"]["subtasks"].as_array().unwrap().len();
    let url = format!("/sessions/{sid}/ratings");

    let r = post(&app, &url, &rating(&video, 0, 3, subtasks)).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "out_of_range"));
    let r = post(&app, &url, &rating(&video, 3, 6, subtasks)).await;
    assert_eq!(r.error(), "out_of_range");
    let r = post(&app, &url, &json!({"video_id": video, "perception": 3, "correspondence": 3})).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "missing_field"));
    assert!(r.json()["message"].as_str().unwrap().contains("votes"));
    let r = post(&app, &url, &rating(&video, 3, 3, subtasks + 1)).await;
    assert_eq!(r.error(), "vote_count");
    let r = post(&app, &url, &json!({"video_id": video, "perception": 3.5, "correspondence": 3, "votes": [true]})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post(&app, &url, &json!({"video_id": video, "perception": 3, "correspondence": 3, "votes": [true], "extra": 1})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post(&app, &url, &rating("v99", 3, 3, 1)).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::NOT_FOUND, "unknown_video"));
    // rejected submissions leave no trace
    assert_eq!(get(&app, &format!("/sessions/{sid}/progress")).await.json()["completed"], 0);

    let r = post(&app, &url, &rating(&video, 4, 2, subtasks)).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["progress"]["completed"], 1);
    let r = post(&app, &url, &rating(&video, 4, 2, subtasks)).await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::CONFLICT, "duplicate"));

    for uri in ["/sessions/nope/next", "/sessions/s1.nope/progress", "/sessions/zz.s000-alice/next"] {
        let r = get(&app, uri).await;
        assert_eq!((r.status, r.error().as_str()), (StatusCode::NOT_FOUND, "unknown_session"));
    }
    let r = post(&app, "/sessions/nope/ratings", &rating("v1", 3, 3, 1)).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn progress_counts_submissions() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let created = create(&app, "s1").await;
    let sid = session_ids(&created)[0].clone();
    let total = created["sessions"][0]["total"].as_u64().unwrap();
    let p = get(&app, &format!("/sessions/{sid}/progress")).await.json();
    assert_eq!((p["completed"].as_u64(), p["total"].as_u64(), p["cursor"].as_u64()), (Some(0), Some(total), Some(0)));

    let mut submitted = 0;
    while submitted < 3 {
        let task = get(&app, &format!("/sessions/{sid}/next")).await.json();
        let n = task["prompt"]["subtasks"].as_array().unwrap().len();
        let v = task["videos"][0]["video_id"].as_str().unwrap().to_string();
        post(&app, &format!("/sessions/{sid}/ratings"), &rating(&v, 3, 3, n)).await;
        submitted += 1;
        let p = get(&app, &format!("/sessions/{sid}/progress")).await.json();
        assert_eq!(p["completed"], submitted);
    }
}

#[tokio::test]
async fn full_study_exports_a_loadable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());

    let empty = create(&app, "empty").await;
    assert_eq!(session_ids(&empty).len(), 3);
    let r = get(&app, "/studies/empty/export").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.content_type.unwrap().starts_with("text/csv"));
    assert_eq!(String::from_utf8(r.bytes).unwrap(), "subject_id,video_id,dimension,raw_score,votes\n");

    let created = create(&app, "s1").await;
    let sids = session_ids(&created);
    let first = finish_session(&app, &sids[0], 4).await;
    let mid = get(&app, "/studies/s1/export").await;
    let text = String::from_utf8(mid.bytes).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * first);

    let mut rated = first;
    for (i, sid) in sids.iter().enumerate().skip(1) {
        rated += finish_session(&app, sid, 2 + i as i64).await;
    }
    assert_eq!(rated, 10);
    for sid in &sids {
        let next = get(&app, &format!("/sessions/{sid}/next")).await;
        assert_eq!(next.status, StatusCode::OK);
        assert_eq!(next.json()["status"], "complete");
        let p = get(&app, &format!("/sessions/{sid}/progress")).await.json();
        assert_eq!(p["completed"], p["total"]);
        assert_eq!(p["cursor"], p["total"]);
        assert!(p["closed_at"].as_u64() >= p["opened_at"].as_u64());
    }

    let r = get(&app, "/studies/s1/export?format=json").await;
    assert_eq!(r.content_type.as_deref(), Some("application/json"));
    let path = dir.path().join("export.json");
    std::fs::write(&path, &r.bytes).unwrap();
    let exported = load_study(&path, StudyFormat::Json).unwrap();
    assert!(exported.validate().is_empty());
    assert_eq!(exported.ratings().len(), 20);
    assert_eq!(exported.votes.len(), 10);
    let on_disk = load_study(&dir.path().join("s1"), StudyFormat::Csv).unwrap();
    assert_eq!(on_disk.ratings(), exported.ratings());
    assert_eq!(on_disk.votes, exported.votes);

    let csv = get(&app, "/studies/s1/export").await;
    assert_eq!(csv.bytes, std::fs::read(dir.path().join("s1/ratings.csv")).unwrap());

    let out = compute_mos(&exported, &MosConfig::default());
    assert_eq!(out.records.len(), 5);
    for r in &out.records {
        assert_eq!(r.contributing_counts.get(Dimension::Perception), 2);
    }

    let r = get(&app, "/studies/zz/export").await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::NOT_FOUND, "unknown_study"));
    let r = get(&app, "/studies/s1/export?format=xml").await;
    assert_eq!((r.status, r.error().as_str()), (StatusCode::BAD_REQUEST, "bad_request"));
}

#[tokio::test]
async fn sessions_resume_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let sid;
    let before;
    {
        let app = app(dir.path());
        sid = session_ids(&create(&app, "s1").await)[1].clone();
        let task = get(&app, &format!("/sessions/{sid}/next")).await.json();
        let n = task["prompt"]["subtasks"].as_array().unwrap().len();
        let v = task["videos"][0]["video_id"].as_str().unwrap().to_string();
        post(&app, &format!("/sessions/{sid}/ratings"), &rating(&v, 5, 1, n)).await;
        before = get(&app, &format!("/sessions/{sid}/progress")).await.bytes;
    }
    let app = app(dir.path());
    let after = get(&app, &format!("/sessions/{sid}/progress")).await;
    assert_eq!(after.bytes, before);
    assert_eq!(after.json()["completed"], 1);
    let r = send(&app, "POST", "/studies", Some(study_request("s1").to_string().as_bytes()), Some(TOKEN)).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_never_interleave() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut req = study_request("busy");
    let subjects: Vec<String> = (0..8).map(|i| format!("subj{i}")).collect();
    req["subjects"] = json!(subjects);
    req["annotators_per_sample"] = json!(8);
    let r = send(&app, "POST", "/studies", Some(req.to_string().as_bytes()), Some(TOKEN)).await;
    let sids = session_ids(&r.json());
    assert_eq!(sids.len(), 8);

    let mut handles = Vec::new();
    for (i, sid) in sids.iter().enumerate() {
        let (app, sid) = (app.clone(), sid.clone());
        handles.push(tokio::spawn(async move { finish_session(&app, &sid, 1 + (i as i64 % 5)).await }));
    }
    let mut total = 0;
    for h in handles {
        total += h.await.unwrap();
    }
    assert_eq!(total, 40);

    let study = load_study(&dir.path().join("busy"), StudyFormat::Csv).unwrap();
    assert_eq!(study.ratings().len(), 80);
    let mut per_subject: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in study.ratings() {
        per_subject.entry(&r.subject_id).or_default().insert(&r.video_id);
    }
    for sid in &sids {
        let p = get(&app, &format!("/sessions/{sid}/progress")).await.json();
        let subject = p["subject_id"].as_str().unwrap();
        assert_eq!(p["completed"].as_u64().unwrap() as usize, per_subject[subject].len());
    }
    // each subject's two dimensions and votes landed together
    for ((s, v), votes) in &study.votes {
        assert!(per_subject[s.as_str()].contains(v.as_str()));
        assert!(!votes.is_empty());
    }
}

#[tokio::test]
async fn response_schemas_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let created = create(&app, "s1").await;
    assert_eq!(keys(&created), set(&["study_id", "sessions"]));
    assert_eq!(keys(&created["sessions"][0]), set(&["session_id", "subject_id", "block", "total"]));

    let sid = session_ids(&created)[0].clone();
    let task = get(&app, &format!("/sessions/{sid}/next")).await.json();
    assert_eq!(keys(&task), set(&["status", "session_id", "pretest", "prompt", "videos", "dimensions", "progress"]));
    assert_eq!(keys(&task["prompt"]), set(&["prompt_id", "text", "task", "subtasks"]));
    assert_eq!(keys(&task["videos"][0]), set(&["video_id", "url"]));
    assert_eq!(keys(&task["progress"]), set(&["completed", "total"]));

    let n = task["prompt"]["subtasks"].as_array().unwrap().len();
    let v = task["videos"][0]["video_id"].as_str().unwrap();
    let ack = post(&app, &format!("/sessions/{sid}/ratings"), &rating(v, 3, 3, n)).await.json();
    assert_eq!(keys(&ack), set(&["session_id", "video_id", "progress"]));

    let p = get(&app, &format!("/sessions/{sid}/progress")).await.json();
    assert_eq!(
        keys(&p),
        set(&["session_id", "subject_id", "completed", "total", "cursor", "pretest", "opened_at", "closed_at"])
    );

    let err = get(&app, "/sessions/x/next").await.json();
    assert_eq!(keys(&err), set(&["error", "message"]));

    finish_session(&app, &sid, 3).await;
    let done = get(&app, &format!("/sessions/{sid}/next")).await.json();
    assert_eq!(keys(&done), set(&["status", "session_id", "progress"]));
}

#[tokio::test]
async fn pretest_flag_reaches_the_task() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut req = study_request("qual");
    req["pretest"] = json!(true);
    let r = send(&app, "POST", "/studies", Some(req.to_string().as_bytes()), Some(TOKEN)).await;
    let sid = session_ids(&r.json())[0].clone();
    assert_eq!(get(&app, &format!("/sessions/{sid}/next")).await.json()["pretest"], true);
    assert_eq!(get(&app, &format!("/sessions/{sid}/progress")).await.json()["pretest"], true);
}
