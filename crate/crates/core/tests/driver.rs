#![cfg(unix)]

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sotkit::driver::TrackerCommand;
use sotkit::io::{parse_bbox_file, result_path};
use sotkit::synth::Direction;
use sotkit::{BBox, Error};

// Writes one box per file in the frames dir. Forward repeats the init box,
// backward doubles its width on the last processed frame so the pass is distinguishable.
const MOCK: &str = r#"#!/bin/sh
frames="$1"; init="$2"; out="$3"; dir="$4"
echo "$dir" >> "$frames/../calls.log"
echo "mock tracker: $dir"
n=$(ls "$frames" | wc -l)
IFS=, read x y w h < "$init"
: > "$out"
i=1
while [ "$i" -le "$n" ]; do
  if [ "$dir" = backward ] && [ "$i" -eq "$n" ]; then
    echo "$x,$y,$(( w * 2 )),$h" >> "$out"
  else
    echo "$x,$y,$w,$h" >> "$out"
  fi
  i=$((i + 1))
done
"#;

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn frames(dir: &Path, n: usize) -> PathBuf {
    let frames = dir.join("frames");
    fs::create_dir_all(&frames).unwrap();
    for i in 0..n {
        fs::write(frames.join(format!("{i:04}.jpg")), b"").unwrap();
    }
    frames
}

#[test]
fn forward_run_returns_processing_order_track() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = frames(tmp.path(), 5);
    let cmd = TrackerCommand::parse(script(tmp.path(), "mock.sh", MOCK).to_str().unwrap()).unwrap();
    let init = BBox::new(3.0, 4.0, 10.0, 20.0);
    let work = tmp.path().join("work");
    let track = cmd.run("obj", &frames, &init, &work, Direction::Forward).unwrap();
    assert_eq!(track.sequence_id, "obj");
    assert_eq!(track.boxes, vec![Some(init); 5]);
    assert_eq!(fs::read_to_string(work.join("obj.forward.init.txt")).unwrap(), "3,4,10,20\n");

    let back = cmd.run("obj", &frames, &init, &work, Direction::Backward).unwrap();
    assert_eq!(back.boxes[4], Some(BBox::new(3.0, 4.0, 20.0, 20.0)));
    assert_eq!(fs::read_to_string(tmp.path().join("calls.log")).unwrap(), "forward\nbackward\n");
}

#[test]
fn failures_become_driver_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = frames(tmp.path(), 3);
    let init = BBox::new(0.0, 0.0, 1.0, 1.0);
    let work = tmp.path().join("work");

    let crash = TrackerCommand::parse(script(tmp.path(), "crash.sh", "#!/bin/sh\nexit 7\n").to_str().unwrap()).unwrap();
    match crash.run("a", &frames, &init, &work, Direction::Forward) {
        Err(Error::Driver { sequence, .. }) => assert_eq!(sequence, "a"),
        other => panic!("{other:?}"),
    }

    let garbage = script(tmp.path(), "garbage.sh", "#!/bin/sh\necho 'not,a,box' > \"$3\"\n");
    let garbage = TrackerCommand::parse(garbage.to_str().unwrap()).unwrap();
    assert!(matches!(
        garbage.run("b", &frames, &init, &work, Direction::Forward),
        Err(Error::Driver { .. })
    ));

    // exits 0 without writing, while a stale file from an earlier run exists
    fs::write(work.join("c.forward.txt"), "1,1,1,1\n1,1,1,1\n1,1,1,1\n").unwrap();
    let silent = TrackerCommand::parse(script(tmp.path(), "silent.sh", "#!/bin/sh\n").to_str().unwrap()).unwrap();
    assert!(matches!(
        silent.run("c", &frames, &init, &work, Direction::Forward),
        Err(Error::Driver { .. })
    ));

    let missing = TrackerCommand::parse("/nonexistent/tracker --flag").unwrap();
    assert!(matches!(
        missing.run("d", &frames, &init, &work, Direction::Forward),
        Err(Error::Driver { .. })
    ));
}

fn sotkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sotkit")).args(args).output().unwrap()
}

fn manifest(dir: &Path, frames: &Path, n: usize) -> PathBuf {
    let gt = dir.join("gt.txt");
    fs::write(&gt, "5,5,10,10\n".repeat(n)).unwrap();
    let path = dir.join("manifest.toml");
    fs::write(
        &path,
        format!(
            "name = \"mock\"\n\n[[sequence]]\nid = \"cam\"\nframe_count = {n}\nmodality = \"rgb\"\ngroundtruth = \"gt.txt\"\ninit_box = [5.0, 5.0, 10.0, 10.0]\nframes_dir = \"{}\"\n",
            frames.file_name().unwrap().to_str().unwrap()
        ),
    )
    .unwrap();
    path
}

#[test]
fn pipeline_drives_both_passes_through_the_tracker() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = frames(tmp.path(), 6);
    let manifest = manifest(tmp.path(), &frames, 6);
    let mock = script(tmp.path(), "mock.sh", MOCK);
    let out = tmp.path().join("out");
    let o = sotkit(&[
        "pipeline",
        "--manifest",
        manifest.to_str().unwrap(),
        "--tracker-cmd",
        mock.to_str().unwrap(),
        "--trigger-score",
        "-1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(!stdout.contains("mock tracker"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mock tracker: backward"));
    assert_eq!(stdout, "cam\t95.2\nMEAN\t95.2\n");
    assert_eq!(fs::read_to_string(tmp.path().join("calls.log")).unwrap(), "forward\nbackward\n");
    // the steady forward pass wins over the backward one with a jump in it
    let fusion = fs::read_to_string(out.join("fusion.tsv")).unwrap();
    assert!(fusion.lines().nth(1).unwrap().starts_with("cam\tforward\t0\t"), "{fusion}");
    let track = parse_bbox_file(&result_path(&out.join("tracks"), "cam")).unwrap();
    assert_eq!(track.boxes, vec![Some(BBox::new(5.0, 5.0, 10.0, 10.0)); 6]);
}

#[test]
fn trigger_skips_backward_for_steady_tracks() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = frames(tmp.path(), 4);
    let manifest = manifest(tmp.path(), &frames, 4);
    let mock = script(tmp.path(), "mock.sh", MOCK);
    let o = sotkit(&[
        "fuse",
        "--manifest",
        manifest.to_str().unwrap(),
        "--tracker-cmd",
        mock.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(tmp.path().join("calls.log")).unwrap(), "forward\n");
    assert!(String::from_utf8(o.stdout).unwrap().contains("cam\tforward-only"));
}

#[test]
fn tracker_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = frames(tmp.path(), 4);
    let manifest = manifest(tmp.path(), &frames, 4);
    let crash = script(tmp.path(), "crash.sh", "#!/bin/sh\necho boom >&2\nexit 1\n");
    let o = sotkit(&[
        "pipeline",
        "--manifest",
        manifest.to_str().unwrap(),
        "--tracker-cmd",
        crash.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("boom") && stderr.contains("cam"), "{stderr}");
}
