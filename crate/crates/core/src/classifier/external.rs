//! Child-process classifier backend.
//!
//! One JSON object per line over the child's stdin/stdout:
//!
//! ```text
//! -> {"op":"train","examples":[{"text":"...","label":"positive"}, ...]}
//! <- {"ok":true}
//! -> {"op":"predict","text":"..."}
//! <- {"probs":[p_pos,p_neg]}
//! ```
//!
//! Any reply that does not match aborts the call with a protocol error;
//! a closed pipe is a transport error.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::Deserialize;
use serde_json::json;

use super::{check_both_classes, training_digest, Checkpoint, Classifier, LabeledText, ModelRecord, Prediction, Provenance};
use crate::{Error, Result};

/// Child probabilities must sum to one within this tolerance; they are
/// then renormalized.
const PROB_SUM_TOLERANCE: f64 = 1e-6;

pub struct ExternalClassifier {
    command: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    trained: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainReply {
    ok: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictReply {
    probs: Vec<f64>,
}

impl ExternalClassifier {
    pub fn spawn(program: &str, args: &[&str]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Transport(format!("cannot spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let command = std::iter::once(program).chain(args.iter().copied()).collect::<Vec<_>>().join(" ");
        Ok(ExternalClassifier { command, child, stdin, stdout, trained: false })
    }

    /// Runs `command` through `sh -c`.
    pub fn from_shell(command: &str) -> Result<Self> {
        let mut clf = Self::spawn("sh", &["-c", command])?;
        clf.command = command.to_string();
        Ok(clf)
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn exchange(&mut self, request: &serde_json::Value) -> Result<String> {
        let command = self.command.clone();
        let transport = |e: std::io::Error| Error::Transport(format!("child {command:?}: {e}"));
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        self.stdin.write_all(line.as_bytes()).map_err(transport)?;
        self.stdin.flush().map_err(transport)?;
        let mut reply = String::new();
        let n = self.stdout.read_line(&mut reply).map_err(transport)?;
        if n == 0 {
            return Err(Error::Transport(format!("child {:?} closed its output", self.command)));
        }
        Ok(reply)
    }
}

pub(crate) fn parse_probs(reply: &str) -> Result<Prediction> {
    let parsed: PredictReply = serde_json::from_str(reply.trim())
        .map_err(|e| Error::Protocol(format!("bad predict reply {:?}: {e}", reply.trim())))?;
    let [p_pos, p_neg] = parsed.probs[..] else {
        return Err(Error::Protocol(format!("expected two probabilities, got {}", parsed.probs.len())));
    };
    if !(p_pos.is_finite() && p_neg.is_finite()) || p_pos < 0.0 || p_neg < 0.0 {
        return Err(Error::Protocol(format!("invalid probabilities [{p_pos}, {p_neg}]")));
    }
    let sum = p_pos + p_neg;
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::Protocol(format!("probabilities sum to {sum}")));
    }
    Ok(Prediction::from_positive(p_pos / sum))
}

impl Classifier for ExternalClassifier {
    fn name(&self) -> &str {
        "external"
    }

    fn train(
        &mut self,
        data: &[LabeledText<'_>],
        _seed: u64,
        _checkpoint: Checkpoint<'_>,
        provenance: Provenance,
    ) -> Result<ModelRecord> {
        check_both_classes(data)?;
        let examples: Vec<_> = data
            .iter()
            .map(|d| json!({"text": d.text, "label": d.label.as_str()}))
            .collect();
        let reply = self.exchange(&json!({"op": "train", "examples": examples}))?;
        match serde_json::from_str::<TrainReply>(reply.trim()) {
            Ok(TrainReply { ok: true }) => {}
            _ => return Err(Error::Protocol(format!("bad train reply {:?}", reply.trim()))),
        }
        self.trained = true;
        Ok(ModelRecord {
            provenance,
            training_digest: training_digest(&format!("external:{}", self.command), data),
            model_digest: None,
            train_size: data.len(),
            epoch: None,
        })
    }

    fn predict(&mut self, text: &str) -> Result<Prediction> {
        if !self.trained {
            return Err(Error::Invalid("predict called before train".into()));
        }
        let reply = self.exchange(&json!({"op": "predict", "text": text}))?;
        parse_probs(&reply)
    }
}

impl Drop for ExternalClassifier {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
