use neurodeck::neeg::{read_epochs, read_recording, write_epochs, write_recording, MANIFEST_FILE};
use neurodeck::provenance::Provenance;
use neurodeck::topomap::{parse_topomap_csv, topo_rows, topomap_csv, topomap_svg};
use neurodeck::PipelineConfig;
use neurodeck_core::dataset::{
    generate_synthetic, EpochSet, Paradigm, SyntheticSpec, TrialCounts, N_CHANNELS,
};
use proptest::prelude::*;
use tempfile::TempDir;

fn f32_exact(v: f64) -> f64 {
    v as f32 as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn topomap_csv_round_trips(
        values in prop::collection::vec(-1e6f64..1e6, N_CHANNELS),
        mask in prop::collection::vec(any::<bool>(), N_CHANNELS),
        hash in "[0-9a-f]{64}",
    ) {
        let rows = topo_rows(&values, &mask).unwrap();
        let text = topomap_csv(&rows, &hash).unwrap();
        let first_line = format!("# config_hash={hash}");
        prop_assert_eq!(text.lines().next(), Some(first_line.as_str()));
        prop_assert_eq!(parse_topomap_csv(&text).unwrap(), rows.clone());
        let svg = topomap_svg(&rows, "t", &hash);
        prop_assert_eq!(svg.matches("class=\"sig\"").count(), mask.iter().filter(|&&m| m).count());
    }

    #[test]
    fn epoch_sets_round_trip_at_f32(
        labels in prop::collection::vec(0usize..3, 1..6),
        scale in 1e-3f64..1e3,
    ) {
        let mut set = EpochSet::empty(250.0, N_CHANNELS, 8);
        for (i, &k) in labels.iter().enumerate() {
            let p = Paradigm::from_index(k).unwrap();
            let epoch: Vec<f64> = (0..N_CHANNELS * 8).map(|j| scale * ((i * 31 + j) as f64).sin()).collect();
            set.push(&epoch, p, p.tasks()[i % 3], "s1").unwrap();
        }
        let dir = TempDir::new().unwrap();
        let m = write_epochs(dir.path(), &set, Provenance::new("h", 1)).unwrap();
        let (back, m2) = read_epochs(dir.path()).unwrap();
        prop_assert_eq!(m, m2);
        prop_assert_eq!(&back.paradigms, &set.paradigms);
        prop_assert_eq!(&back.tasks, &set.tasks);
        prop_assert!(back.data.iter().zip(&set.data).all(|(a, b)| *a == f32_exact(*b)));
    }
}

#[test]
fn recordings_round_trip_and_reject_foreign_manifests() {
    let spec = SyntheticSpec::with_amplitude(1.0, TrialCounts::uniform(1), 3);
    let rec = generate_synthetic(&spec).unwrap().remove(0);
    let dir = TempDir::new().unwrap();
    write_recording(dir.path(), &rec, Provenance::new("h", 3)).unwrap();
    let (back, m) = read_recording(dir.path()).unwrap();
    assert_eq!(back.events, rec.events);
    assert_eq!(back.fs_hz, rec.fs_hz);
    assert!(back
        .data
        .iter()
        .zip(&rec.data)
        .all(|(a, b)| *a == f32_exact(*b)));
    assert_eq!(m.data_sha256.len(), 64);
    assert!(read_epochs(dir.path()).is_err());

    let path = dir.path().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("NEEG1", "NEEG9");
    std::fs::write(&path, text).unwrap();
    let err = read_recording(dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn config_hash_tracks_content() {
    let a = PipelineConfig::default();
    let b = PipelineConfig::from_json(&a.to_json()).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), a.clone().with_seed(1).hash());
    assert_eq!(a.hash().len(), 64);
}
