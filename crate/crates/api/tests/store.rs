use polypareto::{Molp, Region};
use polypareto_api::*;

fn result() -> ApproximationResult {
    let molp: Molp = serde_json::from_str(include_str!("../data/instance_r.json")).unwrap();
    let req = ApproximationRequest::new(Task::Inner, molp, Region::Interval { a: -1.0, b: 0.0 }, 1);
    Pipeline::default().run(req).unwrap()
}

#[test]
fn dir_store_round_trips_by_content_hash() {
    let dir = tempfile::tempdir().unwrap();
    let store = DirStore::open(dir.path().join("runs")).unwrap();
    let r = result();
    assert_eq!(r.id.len(), 64);
    assert_eq!(r.id, r.request.job_id());
    assert!(store.get(&r.id).unwrap().is_none());
    store.put(&r).unwrap();
    store.put(&r).unwrap();
    assert_eq!(store.get(&r.id).unwrap().unwrap(), r);
    assert_eq!(store.ids().unwrap(), vec![r.id.clone()]);
    let reopened = DirStore::open(dir.path().join("runs")).unwrap();
    assert_eq!(reopened.get(&r.id).unwrap().unwrap(), r);
    assert!(matches!(
        store.get("../etc/passwd"),
        Err(ApiError::NotFound(_))
    ));
}

#[test]
fn memory_store_round_trips() {
    let store = MemoryStore::default();
    let r = result();
    store.put(&r).unwrap();
    assert_eq!(store.get(&r.id).unwrap().unwrap(), r);
    assert!(store.get("00").unwrap().is_none());
}

#[test]
fn different_requests_get_different_ids() {
    let molp: Molp = serde_json::from_str(include_str!("../data/instance_r.json")).unwrap();
    let a = ApproximationRequest::new(
        Task::Inner,
        molp.clone(),
        Region::Interval { a: -1.0, b: 0.0 },
        1,
    );
    let mut b = a.clone();
    b.seed = 1;
    let mut c = a.clone();
    c.degree = 2;
    assert_ne!(a.job_id(), b.job_id());
    assert_ne!(a.job_id(), c.job_id());
    assert_eq!(a.job_id(), a.clone().job_id());
}

#[test]
fn problem_references_resolve_inside_the_problem_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("r.json"),
        include_str!("../data/instance_r.json"),
    )
    .unwrap();
    let text = r#"{"task": "inner", "molp": {"reference": "r.json"},
                   "region": {"type": "interval", "a": -1.0, "b": 0.0}}"#;
    let req: ApproximationRequest = serde_json::from_str(text).unwrap();
    assert_eq!(req.v, SCHEMA_VERSION);
    assert_eq!(req.degree, 1);
    let plain = Pipeline::default();
    assert!(matches!(plain.run(req.clone()), Err(ApiError::Invalid(_))));
    let pipeline = Pipeline {
        problem_dir: Some(dir.path().to_path_buf()),
        ..Pipeline::default()
    };
    let r = pipeline.run(req).unwrap();
    assert!(matches!(r.request.molp, ProblemSource::Inline(_)));
    assert!((r.objective.unwrap() + 0.375).abs() < 1e-6);
    for bad in ["../r.json", "/etc/passwd", "missing.json"] {
        let text = format!(
            r#"{{"task": "inner", "molp": {{"reference": "{bad}"}},
                "region": {{"type": "interval", "a": -1.0, "b": 0.0}}}}"#
        );
        let req: ApproximationRequest = serde_json::from_str(&text).unwrap();
        assert!(
            matches!(pipeline.run(req), Err(ApiError::Invalid(_))),
            "{bad}"
        );
    }
}
