mod common;

use std::process::Command;

use common::scorer::{backend_handler, golden_cases, replay_handler, serve};
use hinfill::classifier::classifier_features;
use hinfill::error::Error;
use hinfill::lm::wire::{EmbedResponse, ErrorResponse, FillRequest, FillResponse, InfoResponse, ScoreResponse, TokensRequest};
use hinfill::lm::{train_builtin_lm, LmConfig, RemoteBackend, ScorerBackend};
use hinfill::sampler::{sample_paths, PairPool, SamplerConfig, SamplerContext};
use hinfill::synthetic::bundled_fixture;
use hinfill::tokens::tokenize;
use hinfill::verbalize::{build_infill_template, MaskedTemplate, TemplateJson};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn round_trip<T: Serialize + DeserializeOwned>(v: &Value) -> Value {
    let typed: T = serde_json::from_value(v.clone()).unwrap();
    serde_json::to_value(typed).unwrap()
}

#[test]
fn golden_bodies_survive_typed_round_trip() {
    let cases = golden_cases();
    assert_eq!(cases.len(), 7);
    for c in cases {
        let req = match c.path.as_str() {
            "/v1/score" | "/v1/embed" => round_trip::<TokensRequest>(&c.request),
            "/v1/fill" => round_trip::<FillRequest>(&c.request),
            "/v1/info" => Value::Null,
            p => panic!("unexpected path {p}"),
        };
        assert_eq!(req, c.request, "{}", c.name);
        let resp = match (c.status, c.path.as_str()) {
            (200, "/v1/score") => round_trip::<ScoreResponse>(&c.response),
            (200, "/v1/fill") => round_trip::<FillResponse>(&c.response),
            (200, "/v1/embed") => round_trip::<EmbedResponse>(&c.response),
            (200, "/v1/info") => round_trip::<InfoResponse>(&c.response),
            _ => round_trip::<ErrorResponse>(&c.response),
        };
        assert_eq!(resp, c.response, "{}", c.name);
    }
}

fn case(name: &str) -> common::scorer::GoldenCase {
    golden_cases().into_iter().find(|c| c.name == name).unwrap()
}

#[test]
fn client_sends_exactly_the_golden_requests() {
    let server = serve(replay_handler(golden_cases()));
    let remote = RemoteBackend::new(&server.url);

    let info = remote.info().unwrap();
    assert_eq!(serde_json::to_value(&info).unwrap(), case("info").response);

    let lp = remote.score(&tokenize("asthma associated with il4")).unwrap();
    assert_eq!(lp, -7.25);

    let t = build_infill_template(&tokenize("asthma"), &tokenize("dupilumab"), 2).unwrap();
    let cands = vec![tokenize("associated with"), tokenize("treated by")];
    let fills = remote.fill(&t, 1, Some(&cands), 2).unwrap();
    assert_eq!(serde_json::to_value(&fills).unwrap(), case("fill_edge_candidates").response["fills"]);

    let t = t.fill(1, &tokenize("associated with")).unwrap();
    let fills = remote.fill(&t, 3, None, 3).unwrap();
    assert_eq!(fills.len(), 3);
    assert_eq!(fills[2].tokens, tokenize("interleukin 5"));

    assert_eq!(remote.embed(&tokenize("il4")).unwrap(), vec![0.5, -0.25, 0.125, 0.0]);

    let bad = MaskedTemplate::try_from(
        serde_json::from_value::<TemplateJson>(case("error_bad_mask").request["template"].clone()).unwrap(),
    )
    .unwrap();
    match remote.fill(&bad, 0, None, 1) {
        Err(Error::Backend { status: 400, message }) => assert_eq!(message, "no mask at position 0"),
        other => panic!("expected a 400, got {other:?}"),
    }
    match remote.embed(&tokenize("loading")) {
        Err(Error::Backend { status: 503, message }) => assert_eq!(message, "model not ready"),
        other => panic!("expected a 503, got {other:?}"),
    }
}

#[test]
fn remote_over_builtin_matches_builtin() {
    let hin = bundled_fixture();
    let lm = train_builtin_lm(&hin, &LmConfig::default()).unwrap();
    let server = serve(backend_handler(lm.clone()));
    let remote = RemoteBackend::connect(&server.url).unwrap();

    assert_eq!(remote.info().unwrap(), lm.info().unwrap());
    for s in ["asthma associated with il4", "il4 targeted by dupilumab . It relates to gout", "unknownword"] {
        assert_eq!(remote.score(&tokenize(s)).unwrap(), lm.score(&tokenize(s)).unwrap());
    }
    let mut t = build_infill_template(&tokenize("asthma"), &tokenize("dupilumab"), 3).unwrap();
    while let Some(pos) = t.masks().first().map(|m| m.position) {
        let fills = lm.fill(&t, pos, None, 5).unwrap();
        assert_eq!(remote.fill(&t, pos, None, 5).unwrap(), fills);
        t = t.fill(pos, &fills[0].tokens).unwrap();
    }
    assert_eq!(remote.embed(&tokenize("il4 il13")).unwrap(), lm.embed(&tokenize("il4 il13")).unwrap());
    let (a, b) = (tokenize("il4"), tokenize("asthma"));
    assert_eq!(
        classifier_features(&remote, &a, &b, &tokenize("associated with")).unwrap(),
        classifier_features(&lm, &a, &b, &tokenize("associated with")).unwrap()
    );

    let schema = hin.derive_schema();
    let cfg = SamplerConfig {
        hop_min: 2,
        hop_max: 2,
        repeats: 2,
        pairs: 8,
        ..Default::default()
    };
    let pool = PairPool::all_edges(&hin);
    let run = |backend: &dyn ScorerBackend| {
        let ctx = SamplerContext {
            hin: &hin,
            schema: &schema,
            backend,
            classifier: None,
        };
        sample_paths(&ctx, &pool, &cfg).unwrap().0
    };
    assert_eq!(run(&remote), run(&lm));
}

#[test]
fn transport_failures_are_distinguished() {
    let dead = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}", l.local_addr().unwrap())
    };
    assert!(matches!(RemoteBackend::connect(&dead), Err(Error::Transport(_))));

    let garbage = serve(Box::new(|_, _, _| (200, "not json".to_string())));
    let r = RemoteBackend::new(&garbage.url);
    assert!(matches!(r.score(&tokenize("a")), Err(Error::Transport(_))));

    let wrong_dim = serve(Box::new(|_, path, _| match path {
        "/v1/info" => (200, r#"{"embedding_dim": 3, "capabilities": ["embed"]}"#.to_string()),
        _ => (200, r#"{"vector": [1.0, 2.0]}"#.to_string()),
    }));
    let r = RemoteBackend::new(&wrong_dim.url);
    assert!(matches!(r.embed(&tokenize("a")), Err(Error::Dimension { expected: 3, actual: 2 })));
}

#[test]
fn cli_uses_the_url_override() {
    let hin = bundled_fixture();
    let lm = train_builtin_lm(&hin, &LmConfig::default()).unwrap();
    let server = serve(backend_handler(lm));
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hinfill"))
        .args(["pipeline", "--set", "sampler.hop_max=2", "--set", "sampler.hop_min=2", "--set", "sampler.pairs=10", "--set", "embed.dim=8"])
        .arg("--out")
        .arg(dir.path())
        .env("HINFILL_SCORER_URL", &server.url)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("lm-info.json").exists());
    assert!(!dir.path().join("lm.json").exists());
    assert!(dir.path().join("metapaths.json").exists());

    let dead = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}", l.local_addr().unwrap())
    };
    let out = Command::new(env!("CARGO_BIN_EXE_hinfill"))
        .args(["train-lm", "--out"])
        .arg(dir.path())
        .env("HINFILL_SCORER_URL", dead)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.lines().last().unwrap().starts_with("ERROR 3: "), "{err}");
}
