//! Per-step trajectory records, stored as JSON lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ball::BallState;
use super::crawler::{CrawlerState, INTERNAL_DIM};
use super::vec2::Vec2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBall {
    pub pos: Vec2,
    pub vel: Vec2,
    pub active: bool,
    pub visible: bool,
}

/// State before step `step`, the action taken there and the reward it
/// earned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub body_pos: Vec2,
    pub joints: Vec<f64>,
    pub ball: TraceBall,
    pub action: Vec<f64>,
    pub reward: f64,
}

impl TraceStep {
    pub fn record(
        step: usize,
        crawler: &CrawlerState,
        ball: &BallState,
        visible: bool,
        action: &[f64],
        reward: f64,
    ) -> Self {
        let joints: [f64; INTERNAL_DIM] = crawler.internal();
        Self {
            step,
            body_pos: crawler.body_pos,
            joints: joints.to_vec(),
            ball: TraceBall {
                pos: ball.pos,
                vel: ball.vel,
                active: ball.active,
                visible,
            },
            action: action.to_vec(),
            reward,
        }
    }
}

pub fn write_trace(path: &Path, steps: &[TraceStep]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for s in steps {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceStep>> {
    let reader = BufReader::new(File::open(path)?);
    let mut steps = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let step = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        steps.push(step);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_line_layout() {
        let crawler = CrawlerState::default();
        let ball = BallState::launched(Vec2::new(5.0, 0.0), Vec2::new(-2.0, 0.0), 0);
        let s = TraceStep::record(3, &crawler, &ball, true, &[0.5; 8], -5.0);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["step"], 3);
        assert_eq!(v["body_pos"], serde_json::json!([0.0, 0.0]));
        assert_eq!(v["joints"].as_array().unwrap().len(), 16);
        assert_eq!(v["ball"]["pos"], serde_json::json!([5.0, 0.0]));
        assert_eq!(v["ball"]["visible"], true);
        assert_eq!(v["action"].as_array().unwrap().len(), 8);
        assert_eq!(v["reward"], -5.0);
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.jsonl");
        let crawler = CrawlerState::default();
        let steps: Vec<_> = (0..3)
            .map(|i| TraceStep::record(i, &crawler, &BallState::inactive(), false, &[0.0; 8], 0.0))
            .collect();
        write_trace(&path, &steps).unwrap();
        assert_eq!(read_trace(&path).unwrap(), steps);

        std::fs::write(&path, "{\"step\": 1}\n").unwrap();
        match read_trace(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("{e}"),
        }
    }
}
