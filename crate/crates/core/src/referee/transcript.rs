use std::collections::VecDeque;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::protocol::{Message, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sent,
    Received,
}

/// One transcript line: a message the referee sent to or received from a station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// Microseconds since session start, strictly increasing.
    pub t_us: u64,
    pub dir: Direction,
    pub peer: Role,
    pub msg: Message,
}

const TAIL_LEN: usize = 32;

pub(crate) struct Transcript {
    start: Instant,
    last: Option<u64>,
    sink: Option<Box<dyn Write + Send>>,
    tail: VecDeque<TranscriptEntry>,
}

impl Transcript {
    pub(crate) fn new(sink: Option<Box<dyn Write + Send>>) -> Self {
        Transcript {
            start: Instant::now(),
            last: None,
            sink,
            tail: VecDeque::with_capacity(TAIL_LEN),
        }
    }

    pub(crate) fn log(&mut self, dir: Direction, peer: Role, msg: &Message) {
        let elapsed = self.start.elapsed().as_micros() as u64;
        let t_us = match self.last {
            Some(prev) => elapsed.max(prev + 1),
            None => elapsed,
        };
        self.last = Some(t_us);
        let entry = TranscriptEntry {
            t_us,
            dir,
            peer,
            msg: msg.clone(),
        };
        if let Some(sink) = self.sink.as_mut() {
            let line = serde_json::to_string(&entry).expect("transcript entry serializes");
            // a broken transcript sink must not abort the session
            if writeln!(sink, "{line}").is_err() {
                self.sink = None;
            }
        }
        if self.tail.len() == TAIL_LEN {
            self.tail.pop_front();
        }
        self.tail.push_back(entry);
    }

    pub(crate) fn tail(&self) -> Vec<TranscriptEntry> {
        self.tail.iter().cloned().collect()
    }

    pub(crate) fn flush(&mut self) {
        if let Some(sink) = self.sink.as_mut() {
            let _ = sink.flush();
        }
    }
}
