use bnav_core::io::{load_record, parse_record, replay, reproduces, save_record, Frame, RecordError, SessionStatus};
use bnav_core::sim::{run_session, SessionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(seed: u64) -> bnav_core::io::SessionRecord {
    run_session(&SessionConfig::default().with_seed(seed)).unwrap()
}

#[test]
fn save_load_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let rec = record(seed);
        let path = dir.path().join(format!("s{seed}.ndjson"));
        save_record(&rec, &path).unwrap();
        let loaded = load_record(&path).unwrap();
        assert!(!loaded.partial);
        assert_eq!(loaded.record, rec);
        let report = replay(&loaded.record).unwrap();
        assert!(report.is_consistent(), "{:?}", report.mismatches);
        assert!(reproduces(&loaded.record).unwrap());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), loaded.record.to_text());
    }
}

#[test]
fn timeout_record_round_trips() {
    let mut cfg = SessionConfig::default().with_seed(3);
    cfg.timeout = 40.0;
    let rec = run_session(&cfg).unwrap();
    assert_eq!(rec.status, SessionStatus::Timeout);
    let loaded = parse_record(&rec.to_text()).unwrap();
    assert_eq!(loaded.record, rec);
    assert!(replay(&rec).unwrap().is_consistent());
}

#[test]
fn every_line_is_a_typed_frame() {
    let text = record(1).to_text();
    let mut kinds = std::collections::BTreeSet::new();
    for line in text.lines() {
        kinds.insert(Frame::parse(line).unwrap().kind());
    }
    for k in ["hello", "command", "tip", "cue", "arrived", "paint", "summary"] {
        assert!(kinds.contains(k), "no {k} frame");
    }
    assert!(text.lines().next().unwrap().contains("\"proto\":\"bnav/1\""));
}

#[test]
fn truncation_never_panics() {
    let text = record(2).to_text();
    let bytes = text.as_bytes();
    let mut cuts: Vec<usize> = text.match_indices('\n').flat_map(|(i, _)| [i, i + 1, i.saturating_sub(1)]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    cuts.extend((0..2000).map(|_| rng.random_range(0..bytes.len())));
    let full_lines = text.lines().count();
    for cut in cuts {
        let cut = cut.min(bytes.len());
        let piece = String::from_utf8_lossy(&bytes[..cut]);
        match parse_record(&piece) {
            Ok(loaded) => {
                let complete = piece.matches('\n').count();
                assert_eq!(loaded.partial, complete < full_lines || !piece.ends_with('\n'));
                if loaded.partial {
                    assert_eq!(loaded.record.status, SessionStatus::Incomplete);
                }
            }
            // only a cut inside the header leaves nothing to load
            Err(e) => assert!(!piece.contains('\n') || matches!(e, RecordError::CorruptRecord { .. }), "{e}"),
        }
    }
}

#[test]
fn byte_corruption_never_panics() {
    let text = record(4).to_text();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        let mut bytes = text.clone().into_bytes();
        for _ in 0..rng.random_range(1..5) {
            let i = rng.random_range(0..bytes.len());
            bytes[i] = rng.random();
        }
        if let Ok(loaded) = parse_record(&String::from_utf8_lossy(&bytes)) {
            let _ = replay(&loaded.record);
        }
    }
}

#[test]
fn incompatible_header_is_a_schema_mismatch() {
    let text = record(1).to_text().replacen("bnav/1", "bnav/9", 1);
    assert!(matches!(parse_record(&text), Err(RecordError::SchemaMismatch(_))));
}
