//! Answer source backed by a child process speaking a line protocol:
//! request `sample_id,concept_id\n`, reply `<decimal>\n`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use vtt_core::{Dataset, Mue, Question};

use crate::error::AdapterError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

pub struct SubprocessMue {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<std::io::Result<String>>,
    timeout: Duration,
    samples: Vec<String>,
    concepts: Vec<String>,
    /// Set after a timeout: a late reply would be paired with the wrong request.
    desynced: bool,
}

impl SubprocessMue {
    /// Starts `command` and speaks the protocol on its stdin/stdout. Ids sent
    /// to the child are the dataset's sample and concept ids.
    pub fn spawn(mut command: Command, dataset: &Dataset, timeout: Duration) -> Result<Self, AdapterError> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            replies,
            timeout,
            samples: dataset.sample_ids().to_vec(),
            concepts: dataset.concept_ids().to_vec(),
            desynced: false,
        })
    }

    /// Convenience for `sh -c <script>`.
    pub fn shell(script: &str, dataset: &Dataset, timeout: Duration) -> Result<Self, AdapterError> {
        let mut command = Command::new("sh");
        command.arg("-c").arg(script);
        Self::spawn(command, dataset, timeout)
    }

    /// Sends one request and waits for its reply.
    pub fn ask(&mut self, sample_id: &str, concept_id: &str) -> Result<f64, AdapterError> {
        if self.desynced {
            return Err(AdapterError::Closed);
        }
        writeln!(self.stdin, "{sample_id},{concept_id}")?;
        self.stdin.flush()?;
        match self.replies.recv_timeout(self.timeout) {
            Ok(line) => parse_reply(&line?),
            Err(RecvTimeoutError::Timeout) => {
                self.desynced = true;
                Err(AdapterError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => Err(AdapterError::Closed),
        }
    }
}

/// Parses one reply line into a probability.
pub fn parse_reply(line: &str) -> Result<f64, AdapterError> {
    let text = line.trim();
    let value: f64 = text.parse().map_err(|_| AdapterError::Parse(text.to_owned()))?;
    if !(0.0..=1.0).contains(&value) {
        return Err(AdapterError::OutOfRange(value));
    }
    Ok(value)
}

impl Mue for SubprocessMue {
    fn answer(&mut self, q: &Question) -> vtt_core::Result<f64> {
        let sample = self
            .samples
            .get(q.sample)
            .cloned()
            .ok_or(vtt_core::Error::MissingEntry { sample: q.sample, concept: q.concept })?;
        let concept = self
            .concepts
            .get(q.concept)
            .cloned()
            .ok_or(vtt_core::Error::UnknownConcept(q.concept))?;
        self.ask(&sample, &concept)
            .map_err(|e| vtt_core::Error::Adapter(e.to_string()))
    }
}

impl Drop for SubprocessMue {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
