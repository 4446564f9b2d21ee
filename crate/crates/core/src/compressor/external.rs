use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;

use crate::error::{Error, Result};

/// Runs `command` with `data` on stdin and returns the number of bytes it
/// wrote to stdout.
pub(crate) fn compressed_size(command: &[String], data: &[u8]) -> Result<u64> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::Config("external compressor command is empty".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| Error::Backend(format!("cannot start `{program}`: {e}")))?;

    let mut stdin = child.stdin.take().expect("stdin is piped");
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let size = thread::scope(|scope| {
        // Feed stdin from a separate thread so a compressor that streams its
        // output before reading all input cannot deadlock us.
        let writer = scope.spawn(move || stdin.write_all(data));
        let mut sink = Vec::new();
        let read = stdout.read_to_end(&mut sink);
        let written = writer.join().expect("stdin writer panicked");
        match (read, written) {
            (Ok(n), Ok(())) => Ok(n as u64),
            (Err(e), _) => Err(Error::Backend(format!("reading from `{program}`: {e}"))),
            (_, Err(e)) => Err(Error::Backend(format!("writing to `{program}`: {e}"))),
        }
    });

    let status = child
        .wait()
        .map_err(|e| Error::Backend(format!("waiting for `{program}`: {e}")))?;
    if !status.success() {
        return Err(Error::Backend(format!("`{program}` exited with {status}")));
    }
    size
}
