//! Runs a user-supplied tracker executable for one sequence and direction.
//!
//! The command is invoked as `<cmd...> <frames-dir> <init-box-file>
//! <output-file> <forward|backward>`. The init-box file holds one box line;
//! the tracker must write a box file in processing order and exit 0.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::io::{format_bbox_lines, parse_bbox_str};
use crate::synth::Direction;
use crate::tracklet::Tracklet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrackerCommand {
    program: String,
    args: Vec<String>,
}

impl TrackerCommand {
    /// Splits on whitespace; the first word is the program.
    pub fn parse(cmdline: &str) -> Result<Self> {
        let mut words = cmdline.split_whitespace().map(str::to_owned);
        let program = words
            .next()
            .ok_or_else(|| Error::domain("empty tracker command"))?;
        Ok(TrackerCommand {
            program,
            args: words.collect(),
        })
    }

    /// Runs the tracker and returns its output in processing order. Scratch
    /// files go to `work_dir` as `<id>.<direction>.init.txt` and `<id>.<direction>.txt`.
    pub fn run(
        &self,
        sequence_id: &str,
        frames_dir: &Path,
        init_box: &BBox,
        work_dir: &Path,
        direction: Direction,
    ) -> Result<Tracklet> {
        let fail = |message: String| Error::Driver {
            sequence: sequence_id.to_owned(),
            message,
        };
        fs::create_dir_all(work_dir).map_err(|e| Error::io(work_dir, e))?;
        let init_path = work_dir.join(format!("{sequence_id}.{direction}.init.txt"));
        let output_path: PathBuf = work_dir.join(format!("{sequence_id}.{direction}.txt"));
        fs::write(&init_path, format_bbox_lines(&[Some(*init_box)])).map_err(|e| Error::io(&init_path, e))?;
        // stale output must not be mistaken for this run's
        if output_path.exists() {
            fs::remove_file(&output_path).map_err(|e| Error::io(&output_path, e))?;
        }

        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(frames_dir)
            .arg(&init_path)
            .arg(&output_path)
            .arg(direction.to_string())
            .stdin(Stdio::null())
            .output()
            .map_err(|e| fail(format!("cannot start {}: {e}", self.program)))?;
        // tracker chatter goes to our diagnostics stream, never to data output
        let mut stderr = std::io::stderr().lock();
        let _ = stderr.write_all(&output.stdout);
        let _ = stderr.write_all(&output.stderr);
        if !output.status.success() {
            return Err(fail(format!("{} exited with {}", self.program, output.status)));
        }
        let text = fs::read_to_string(&output_path)
            .map_err(|e| fail(format!("cannot read {}: {e}", output_path.display())))?;
        let boxes = parse_bbox_str(&text, &output_path.display().to_string()).map_err(|e| fail(e.to_string()))?;
        Ok(Tracklet::new(sequence_id, boxes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_command_line() {
        let c = TrackerCommand::parse("  python3 run.py --fast ").unwrap();
        assert_eq!(c.program, "python3");
        assert_eq!(c.args, vec!["run.py", "--fast"]);
        assert!(TrackerCommand::parse("   ").is_err());
    }
}
