use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use super::{FrameMessage, LatencyStats, Session, StreamError, STREAM_SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamSummary {
    pub lines: usize,
    pub estimates: usize,
    pub rejected: usize,
    pub latency: LatencyStats,
}

fn write_line<W: Write, T: serde::Serialize>(out: &mut W, value: &T) -> Result<()> {
    let io = |e| Error::io("stream output", e);
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n").map_err(io)?;
    out.flush().map_err(io)
}

/// Drives `session` with one JSON frame per input line until end of input.
/// Blank lines are skipped.
pub fn run_lines<R: BufRead, W: Write>(session: &mut Session, input: R, mut output: W) -> Result<StreamSummary> {
    let mut summary = StreamSummary::default();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("stream input", e))?;
        if line.trim().is_empty() {
            continue;
        }
        summary.lines += 1;
        let result = serde_json::from_str::<FrameMessage>(&line)
            .map_err(|e| Error::Stream(format!("malformed frame: {e}")))
            .and_then(|msg| session.push(&msg));
        match result {
            Ok(Some(out)) => {
                summary.estimates += 1;
                write_line(&mut output, &out)?;
            }
            Ok(None) => {}
            Err(e) => {
                log::warn!("line {}: {e}", i + 1);
                summary.rejected += 1;
                write_line(
                    &mut output,
                    &StreamError {
                        v: STREAM_SCHEMA_VERSION,
                        line: i + 1,
                        error: e.to_string(),
                    },
                )?;
            }
        }
    }
    summary.latency = session.latency().clone();
    Ok(summary)
}

fn handle(stream: TcpStream, session: Result<Session>) -> Result<StreamSummary> {
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
    let reader = BufReader::new(stream.try_clone().map_err(|e| Error::io("tcp stream", e))?);
    let mut session = session?;
    let summary = run_lines(&mut session, reader, BufWriter::new(stream))?;
    log::info!(
        "session {peer}: {} frames, {} estimates, {} rejected, latency mean {:?} max {:?}",
        summary.lines,
        summary.estimates,
        summary.rejected,
        summary.latency.mean(),
        summary.latency.max
    );
    Ok(summary)
}

/// Accepts connections and runs one independent session per connection on
/// its own thread. Stops accepting after `max_sessions` connections, if
/// given, and returns once those sessions have finished.
pub fn serve_tcp<F>(listener: TcpListener, new_session: F, max_sessions: Option<usize>) -> Result<Vec<StreamSummary>>
where
    F: Fn() -> Result<Session> + Send + Sync + 'static,
{
    let new_session = Arc::new(new_session);
    let mut handles = Vec::new();
    for (n, conn) in listener.incoming().enumerate() {
        let stream = conn.map_err(|e| Error::io("tcp listener", e))?;
        let factory = Arc::clone(&new_session);
        handles.push(thread::spawn(move || handle(stream, factory())));
        if max_sessions.is_some_and(|m| n + 1 >= m) {
            break;
        }
    }
    let mut out = Vec::new();
    for h in handles {
        match h.join() {
            Ok(Ok(s)) => out.push(s),
            Ok(Err(e)) => log::warn!("session ended with error: {e}"),
            Err(_) => return Err(Error::Stream("session thread panicked".into())),
        }
    }
    Ok(out)
}
