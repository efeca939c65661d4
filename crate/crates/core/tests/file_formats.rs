use std::fs;

use pairspec::dhw::SolverOptions;
use pairspec::field::FieldConfig;
use pairspec::io::*;
use pairspec::sweep::*;

fn zero_grid() -> SpectrumGrid {
    sweep_grid(
        &FieldConfig::new(0.0, 0.4),
        &GridSpec::square(Plane::Xy, 1.0, 3),
        &SolverOptions::default(),
        &Executor::new(1),
    )
    .unwrap()
}

fn sample_grid() -> SpectrumGrid {
    let spec = GridSpec::square(Plane::Xz, 1.0, 4);
    SpectrumGrid::tabulate(spec, FieldConfig::new(0.4, 0.4), |q| 1.0 / 3.0 + q.qx * 1e-3 - q.qz * 1e-7).unwrap()
}

#[test]
fn zero_field_sweep_writes_nine_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_grid(&zero_grid(), dir.path(), "zero", false, None).unwrap();
    let text = fs::read_to_string(&files.csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "q1,q2,f");
    assert_eq!(lines.len(), 10);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0.0000000000000000e0")));
    assert_eq!(lines[1], "-1.0000000000000000e0,-1.0000000000000000e0,0.0000000000000000e0");
    assert!(!text.contains('\r'));
}

#[test]
fn round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let grid = sample_grid();
    let files = write_grid(&grid, dir.path(), "g", true, Some(serde_json::json!({"note": "x"}))).unwrap();
    let back = read_grid(&files.csv).unwrap();
    assert_eq!(back.values, grid.values);
    assert_eq!(back.spec, grid.spec);
    assert_eq!(back.field, grid.field);
    assert_eq!(read_grid(&files.sidecar).unwrap().values, grid.values);

    let raw = fs::read(files.raw.unwrap()).unwrap();
    assert_eq!(raw.len(), 8 * grid.values.len());
    assert_eq!(raw[..8], grid.values[0].to_le_bytes());
    let side = read_sidecar(&files.sidecar).unwrap();
    assert_eq!(side.schema, SIDECAR_SCHEMA);
    assert_eq!(
        (side.axis1.name.as_str(), side.axis2.name.as_str(), side.fixed_axis.as_str()),
        ("qx", "qz", "qy")
    );
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_grid(&sample_grid(), dir.path(), "a", true, None).unwrap();
    let b = write_grid(&sample_grid(), dir.path(), "b", true, None).unwrap();
    assert_eq!(fs::read(&a.csv).unwrap(), fs::read(&b.csv).unwrap());
    assert_eq!(fs::read(a.raw.unwrap()).unwrap(), fs::read(b.raw.unwrap()).unwrap());
}

#[test]
fn truncated_csv_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_grid(&sample_grid(), dir.path(), "t", false, None).unwrap();
    let text = fs::read_to_string(&files.csv).unwrap();
    fs::write(&files.csv, &text[..text.len() - 20]).unwrap();
    assert!(matches!(read_grid(&files.csv), Err(IoError::Csv { .. })));
    let rows: Vec<&str> = text.lines().take(5).collect();
    fs::write(&files.csv, rows.join("\n") + "\n").unwrap();
    assert!(matches!(read_grid(&files.csv), Err(IoError::Csv { .. })));
}

#[test]
fn missing_or_foreign_sidecar_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_grid(&sample_grid(), dir.path(), "s", false, None).unwrap();
    let text = fs::read_to_string(&files.sidecar).unwrap();
    fs::write(&files.sidecar, text.replace("\"schema_version\": 1", "\"schema_version\": 99")).unwrap();
    assert!(matches!(read_grid(&files.csv), Err(IoError::UnsupportedVersion { version: 99, .. })));
    fs::remove_file(&files.sidecar).unwrap();
    assert!(matches!(read_grid(&files.csv), Err(IoError::Io { .. })));
}

#[test]
fn flagged_points_survive_the_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut grid = sample_grid();
    grid.status[5] = PointStatus::Clipped;
    let files = write_grid(&grid, dir.path(), "f", false, None).unwrap();
    let back = read_grid(&files.csv).unwrap();
    assert_eq!(back.status[5], PointStatus::Clipped);
    assert_eq!(back.flagged(), 1);
}
