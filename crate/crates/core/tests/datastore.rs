use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;

use gapforge_core::config::PipelineConfig;
use gapforge_core::datastore::{read_dataset, spawn_server, DatasetError, TopicDataset};
use gapforge_core::pipeline::build;
use proptest::prelude::*;

fn built(dir: &Path) -> TopicDataset {
    let config = PipelineConfig {
        mock_mode: true,
        cache_dir: None,
        output_dir: dir.to_path_buf(),
        fake_now: Some("2025-01-01T00:00:00Z".into()),
        ..PipelineConfig::default()
    };
    build("Peking duck", &config).unwrap().dataset
}

/// Minimal HTTP/1.1 GET returning (status, headers, body).
fn get(addr: std::net::SocketAddr, path: &str) -> (u16, String, Vec<u8>) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let head = String::from_utf8_lossy(&raw[..split]).into_owned();
    let status = head.split(' ').nth(1).unwrap().parse().unwrap();
    let body = raw[split + 4..].to_vec();
    let body = if head
        .to_ascii_lowercase()
        .contains("transfer-encoding: chunked")
    {
        dechunk(&body)
    } else {
        body
    };
    (status, head, body)
}

fn dechunk(mut data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let line_end = data.windows(2).position(|w| w == b"\r\n").unwrap();
        let size =
            usize::from_str_radix(std::str::from_utf8(&data[..line_end]).unwrap().trim(), 16)
                .unwrap();
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&data[line_end + 2..line_end + 2 + size]);
        data = &data[line_end + 4 + size..];
    }
}

#[test]
fn server_is_read_only_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let ds = built(dir.path());
    std::fs::write(dir.path().join("broken.json"), b"{\"schema_version\": 9}").unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
    let on_disk = std::fs::read(dir.path().join("Peking_duck.json")).unwrap();

    let server = spawn_server(dir.path(), "127.0.0.1:0").unwrap();
    let addr = server.local_addr();

    let (status, head, body) = get(addr, "/api/topics");
    assert_eq!(status, 200);
    assert!(head
        .to_ascii_lowercase()
        .contains("access-control-allow-origin: *"));
    assert_eq!(body, br#"["Peking duck"]"#);

    let bodies: Vec<Vec<u8>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let path = if i % 2 == 0 {
                    "/api/datasets/Peking_duck"
                } else {
                    "/api/datasets/Peking%20duck"
                };
                s.spawn(move || get(addr, path))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap().2).collect()
    });
    assert!(bodies.iter().all(|b| *b == on_disk));
    assert_eq!(TopicDataset::from_slice(&bodies[0]).unwrap(), ds);

    assert_eq!(get(addr, "/api/datasets/broken").0, 404);
    assert_eq!(get(addr, "/api/datasets/Nothing").0, 404);
    server.shutdown().unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("Peking_duck.json")).unwrap(),
        on_disk
    );
}

#[test]
fn bind_conflict_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    assert!(matches!(
        spawn_server(dir.path(), &addr),
        Err(DatasetError::Bind { .. })
    ));
}

#[test]
fn golden_shape_after_write() {
    let dir = tempfile::tempdir().unwrap();
    let ds = built(dir.path());
    let back = read_dataset(&dir.path().join("Peking_duck.json")).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.fact_count(), 30);
}

/// Ways to break exactly one dataset invariant.
#[derive(Debug, Clone)]
enum Mutation {
    SchemaVersion(u32),
    EmptyTopic,
    BadTimestamp,
    DropLanguage,
    SwapLanguages,
    MisfiledFact(usize),
    DuplicateId(usize),
    EmptyTranslation(usize),
    BadLink(usize),
    Similarity(usize),
    OverCap,
}

fn mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        (2u32..100).prop_map(Mutation::SchemaVersion),
        Just(Mutation::EmptyTopic),
        Just(Mutation::BadTimestamp),
        Just(Mutation::DropLanguage),
        Just(Mutation::SwapLanguages),
        (0usize..30).prop_map(Mutation::MisfiledFact),
        (1usize..30).prop_map(Mutation::DuplicateId),
        (0usize..30).prop_map(Mutation::EmptyTranslation),
        (0usize..30).prop_map(Mutation::BadLink),
        (0usize..30).prop_map(Mutation::Similarity),
        Just(Mutation::OverCap),
    ]
}

fn apply(ds: &mut TopicDataset, m: &Mutation) {
    let nth = |ds: &mut TopicDataset, i: usize| {
        let lang = ds.languages[i / 10].clone();
        (lang.clone(), i % 10)
    };
    match *m {
        Mutation::SchemaVersion(v) => ds.schema_version = v,
        Mutation::EmptyTopic => ds.topic.clear(),
        Mutation::BadTimestamp => ds.generated_at = "yesterday".into(),
        Mutation::DropLanguage => {
            ds.languages.remove(1);
        }
        Mutation::SwapLanguages => ds.languages.swap(0, 2),
        Mutation::MisfiledFact(i) => {
            let (lang, j) = nth(ds, i);
            let other = if lang == "fr" { "ru" } else { "fr" };
            ds.facts.get_mut(&lang).unwrap()[j].language_code = other.into();
        }
        Mutation::DuplicateId(i) => {
            let first = ds.facts["fr"][0].id.clone();
            let (lang, j) = nth(ds, i);
            let j = if lang == "fr" && j == 0 { 1 } else { j };
            ds.facts.get_mut(&lang).unwrap()[j].id = first;
        }
        Mutation::EmptyTranslation(i) => {
            let (lang, j) = nth(ds, i);
            ds.facts.get_mut(&lang).unwrap()[j].text_en = "  ".into();
        }
        Mutation::BadLink(i) => {
            let (lang, j) = nth(ds, i);
            ds.facts.get_mut(&lang).unwrap()[j].source_link_url = "not a url".into();
        }
        Mutation::Similarity(i) => {
            let (lang, j) = nth(ds, i);
            ds.facts.get_mut(&lang).unwrap()[j].similarity = 1.5;
        }
        Mutation::OverCap => {
            ds.provenance.insert("selection.cap".into(), "9".into());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_rejects_every_broken_invariant(m in mutation()) {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = built(dir.path());
        apply(&mut ds, &m);
        prop_assert!(ds.validate().is_err(), "{:?} accepted", m);
        let bytes = serde_json::to_vec(&ds).unwrap();
        prop_assert!(matches!(TopicDataset::from_slice(&bytes), Err(DatasetError::Schema(_))));
    }
}
