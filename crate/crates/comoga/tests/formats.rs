use comoga::commands::tabular::BUNDLED_MODEL;
use comoga::config::{resolve, TabularConfig, ToyConfig};
use comoga::formats::{parse_json, read_json, to_json_string, trajectory_csv, write_json, ArchiveFile, ArchivePoint, ModelFile};
use comoga_core::toy::{run_comoga_toy, STANDARD_STARTS};
use comoga_core::{AggregatorConfig, Preference};
use serde_json::json;

#[test]
fn model_files_round_trip() {
    let file: ModelFile = parse_json(BUNDLED_MODEL).unwrap();
    let mdp = file.to_model().unwrap();
    assert_eq!((mdp.n_states(), mdp.n_actions(), mdp.n_objectives(), mdp.n_constraints()), (5, 2, 2, 1));
    let back = ModelFile::from_model(&mdp);
    assert_eq!(back, file);
    assert_eq!(to_json_string(&back), BUNDLED_MODEL);
}

#[test]
fn model_errors_name_the_key() {
    let mut v: serde_json::Value = serde_json::from_str(BUNDLED_MODEL).unwrap();
    v["extra"] = json!(1);
    let err = parse_json::<ModelFile>(&v.to_string()).unwrap_err();
    assert!(err.contains("extra"), "{err}");

    let mut v: serde_json::Value = serde_json::from_str(BUNDLED_MODEL).unwrap();
    v["gamma"] = json!("high");
    assert!(parse_json::<ModelFile>(&v.to_string()).unwrap_err().starts_with("gamma"));

    let mut file: ModelFile = parse_json(BUNDLED_MODEL).unwrap();
    file.transition.pop();
    assert!(file.to_model().unwrap_err().to_string().starts_with("P:"));

    let mut file: ModelFile = parse_json(BUNDLED_MODEL).unwrap();
    file.gamma = 1.0;
    assert_eq!(file.to_model().unwrap_err().exit_code(), 2);
}

#[test]
fn archives_are_filtered_and_validated() {
    let file = ArchiveFile {
        points: vec![
            ArchivePoint { objectives: vec![1.0, 2.0], feasible: true, preference: Some(vec![1.0, 0.0]) },
            ArchivePoint { objectives: vec![2.0, 1.0], feasible: true, preference: None },
            ArchivePoint { objectives: vec![0.5, 0.5], feasible: true, preference: None },
            ArchivePoint { objectives: vec![9.0, 9.0], feasible: false, preference: None },
        ],
        reference: Some(vec![0.0, 0.0]),
    };
    let archive = file.to_archive().unwrap();
    assert_eq!(archive.len(), 2);
    assert_eq!(archive.reference, Some(vec![0.0, 0.0]));
    let back = ArchiveFile::from_archive(&archive);
    assert_eq!(back.points[0].preference, Some(vec![1.0, 0.0]));

    let parsed: ArchiveFile = parse_json(r#"{"points": [{"objectives": [1, 2]}]}"#).unwrap();
    assert!(parsed.points[0].feasible);

    let ragged = ArchiveFile {
        points: vec![
            ArchivePoint { objectives: vec![1.0, 2.0], feasible: true, preference: None },
            ArchivePoint { objectives: vec![1.0], feasible: true, preference: None },
        ],
        reference: None,
    };
    assert!(ragged.to_archive().unwrap_err().to_string().starts_with("points[1].objectives"));
    let bad_ref = ArchiveFile { reference: Some(vec![0.0]), ..file };
    assert!(bad_ref.to_archive().unwrap_err().to_string().starts_with("reference"));
}

#[test]
fn json_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/archive.json");
    let file = ArchiveFile { points: vec![ArchivePoint { objectives: vec![0.1, 1.0 / 3.0], feasible: true, preference: None }], reference: None };
    write_json(&path, &file).unwrap();
    assert_eq!(read_json::<ArchiveFile>(&path).unwrap(), file);
    assert_eq!(read_json::<ArchiveFile>(&dir.path().join("missing.json")).unwrap_err().exit_code(), 2);
}

#[test]
fn trajectory_csv_round_trips_doubles() {
    let traj = run_comoga_toy(STANDARD_STARTS[2], &Preference::uniform(2), &AggregatorConfig::plain(0.05), 30).unwrap();
    let text = trajectory_csv(&traj);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["step", "x1", "x2", "L1", "L2", "C", "mode"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), traj.len());
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i);
        assert_eq!(row[1].parse::<f64>().unwrap(), traj.points[i].x1);
        assert_eq!(row[2].parse::<f64>().unwrap(), traj.points[i].x2);
        assert_eq!(row[5].parse::<f64>().unwrap(), traj.constraint_values[i]);
        assert_eq!(&row[6], traj.kinds[i].as_str());
    }
    assert_eq!(&rows[0][6], "start");
}

#[test]
fn config_precedence_is_flags_then_file_then_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.json");
    std::fs::write(&path, r#"{"steps": 500, "epsilon": 0.02}"#).unwrap();
    let cfg: ToyConfig = resolve(Some(&path), vec![("steps", json!(7))]).unwrap();
    assert_eq!(cfg.steps, 7);
    assert_eq!(cfg.epsilon, 0.02);
    assert_eq!(cfg.ls_lr, ToyConfig::default().ls_lr);

    let err = resolve::<ToyConfig>(None, vec![("stpes", json!(1))]).unwrap_err();
    assert!(err.to_string().contains("stpes"), "{err}");
    let err = resolve::<TabularConfig>(None, vec![("g_min", json!("small"))]).unwrap_err();
    assert!(err.to_string().starts_with("g_min"), "{err}");
    let err = resolve::<TabularConfig>(None, vec![("random_model", json!({"n_states": 2}))]).unwrap_err();
    assert!(err.to_string().starts_with("random_model"), "{err}");
}

#[test]
fn validation_names_the_key() {
    let cases: Vec<(ToyConfig, &str)> = vec![
        (ToyConfig { steps: 0, ..ToyConfig::default() }, "steps"),
        (ToyConfig { epsilon: -1.0, ..ToyConfig::default() }, "epsilon"),
        (ToyConfig { preference: vec![0.0, 0.0], ..ToyConfig::default() }, "preference"),
        (ToyConfig { grid_count: Some(1), ..ToyConfig::default() }, "grid_count"),
        (ToyConfig { oracle_resolution: 50, ..ToyConfig::default() }, "oracle_resolution"),
    ];
    for (cfg, key) in cases {
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().starts_with(key), "{err}");
        assert_eq!(err.exit_code(), 2);
    }
    let t = TabularConfig { g_max: 1e-6, ..TabularConfig::default() };
    assert!(t.validate().unwrap_err().to_string().starts_with("g_max"));
    let t = TabularConfig { method: comoga::config::TabularMethod::Generalized, ..TabularConfig::default() };
    assert!(t.validate().unwrap_err().to_string().starts_with("sequences"));
}
