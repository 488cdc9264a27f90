use std::fs;

use rdmd::dmd::SnapshotMatrix;
use rdmd::pipeline::{
    generate_synthetic, load_frame_set, numbered_stems, run_bgsub, save_frames, InputSource, RunConfig, SyntheticSpec,
    Threshold,
};

fn small_square(seed: u64, frames: usize) -> SyntheticSpec {
    SyntheticSpec { height: 32, width: 32, frames, ..SyntheticSpec::moving_square(seed) }
}

#[test]
fn chunks_do_not_depend_on_their_neighbours() {
    let dir = tempfile::tempdir().unwrap();
    let (d, _) = generate_synthetic(&small_square(2, 90)).unwrap();
    save_frames(&d, dir.path().join("all"), &numbered_stems(90), 255).unwrap();
    // the middle chunk alone, as its own video
    let middle = d.slice(30..60).unwrap();
    let stems: Vec<String> = numbered_stems(90)[30..60].to_vec();
    save_frames(&middle, dir.path().join("middle"), &stems, 255).unwrap();

    let run = |sub: &str| {
        let input = InputSource::Frames { pattern: dir.path().join(sub).to_str().unwrap().into(), truth: None };
        let cfg = RunConfig { chunk_length: 30, k: 6, threshold: Threshold::Fixed(0.1), ..RunConfig::new(input, 5) };
        run_bgsub(&cfg).unwrap()
    };
    let all = run("all");
    let alone = run("middle");
    assert_eq!(all.report.chunks.len(), 3);
    assert_eq!(all.report.chunks[1].eigenvalues, alone.report.chunks[0].eigenvalues);
    for t in 0..30 {
        assert_eq!(all.residual.values.column(30 + t), alone.residual.values.column(t));
        assert_eq!(all.masks.frames[30 + t], alone.masks.frames[t]);
    }
    assert_eq!(alone.stems, stems);
}

#[test]
fn masks_follow_input_names() {
    let dir = tempfile::tempdir().unwrap();
    let (d, _) = generate_synthetic(&small_square(4, 30)).unwrap();
    let stems: Vec<String> = (0..30).map(|i| format!("cam_{:03}", 100 + i)).collect();
    save_frames(&d, dir.path().join("in"), &stems, 255).unwrap();
    let input = InputSource::Frames { pattern: format!("{}/cam_*.pgm", dir.path().join("in").display()), truth: None };
    let out_dir = dir.path().join("out");
    let cfg = RunConfig {
        chunk_length: 30,
        k: 5,
        threshold: Threshold::Fixed(0.1),
        output_dir: Some(out_dir.clone()),
        ..RunConfig::new(input, 1)
    };
    run_bgsub(&cfg).unwrap();
    let mut names: Vec<String> =
        fs::read_dir(out_dir.join("masks")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    let expected: Vec<String> = stems.iter().map(|s| format!("{s}.pgm")).collect();
    assert_eq!(names, expected);
}

#[test]
fn quantized_frames_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (d, _) = generate_synthetic(&small_square(6, 5)).unwrap();
    let q = SnapshotMatrix::new(d.data().map(|v| (v * 255.0).round() / 255.0), 32, 32).unwrap();
    save_frames(&q, dir.path().join("a"), &numbered_stems(5), 255).unwrap();
    let back = load_frame_set(dir.path().join("a").to_str().unwrap()).unwrap();
    assert_eq!(back.snapshots, q);
    save_frames(&back.snapshots, dir.path().join("b"), &back.stems, back.maxval).unwrap();
    for s in &back.stems {
        let name = format!("{s}.pgm");
        assert_eq!(fs::read(dir.path().join("a").join(&name)).unwrap(), fs::read(dir.path().join("b").join(&name)).unwrap());
    }
}

#[test]
fn sixteen_bit_frames_keep_their_depth() {
    let dir = tempfile::tempdir().unwrap();
    let (d, _) = generate_synthetic(&small_square(8, 3)).unwrap();
    let q = SnapshotMatrix::new(d.data().map(|v| (v * 4095.0).round() / 4095.0), 32, 32).unwrap();
    save_frames(&q, dir.path(), &numbered_stems(3), 4095).unwrap();
    let back = load_frame_set(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(back.maxval, 4095);
    assert_eq!(back.snapshots, q);
}
