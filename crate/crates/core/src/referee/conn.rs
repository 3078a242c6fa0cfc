use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::time::Duration;

use super::protocol::Message;

const MAX_LINE: u64 = 64 * 1024;

#[derive(Debug)]
pub(crate) enum RecvError {
    Timeout,
    Closed,
    Io(io::Error),
    Malformed(String),
}

/// A newline-delimited JSON connection.
pub(crate) struct Conn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    line: String,
}

impl Conn {
    pub(crate) fn new(stream: TcpStream, timeout: Option<Duration>) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(timeout)?;
        stream.set_write_timeout(timeout)?;
        let writer = stream.try_clone()?;
        Ok(Conn {
            reader: BufReader::new(stream),
            writer,
            line: String::new(),
        })
    }

    pub(crate) fn send(&mut self, msg: &Message) -> io::Result<()> {
        self.writer.write_all(msg.to_line().as_bytes())
    }

    /// Writes several messages in one call.
    pub(crate) fn send_all(&mut self, msgs: &[Message]) -> io::Result<()> {
        let buf: String = msgs.iter().map(Message::to_line).collect();
        self.writer.write_all(buf.as_bytes())
    }

    pub(crate) fn recv(&mut self) -> Result<Message, RecvError> {
        self.line.clear();
        let read = (&mut self.reader)
            .take(MAX_LINE)
            .read_line(&mut self.line)
            .map_err(|e| match e.kind() {
                io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => RecvError::Timeout,
                io::ErrorKind::InvalidData => RecvError::Malformed("line is not utf-8".into()),
                _ => RecvError::Io(e),
            })?;
        if read == 0 {
            return Err(RecvError::Closed);
        }
        if !self.line.ends_with('\n') {
            return Err(if read as u64 >= MAX_LINE {
                RecvError::Malformed(format!("line longer than {MAX_LINE} bytes"))
            } else {
                RecvError::Closed
            });
        }
        serde_json::from_str(self.line.trim_end()).map_err(|e| RecvError::Malformed(e.to_string()))
    }

    /// Whether the peer has already sent bytes that have not been read.
    pub(crate) fn has_pending(&mut self) -> io::Result<bool> {
        if !self.reader.buffer().is_empty() {
            return Ok(true);
        }
        let stream = self.reader.get_ref();
        stream.set_nonblocking(true)?;
        let mut probe = [0u8; 1];
        let pending = match stream.peek(&mut probe) {
            Ok(n) => Ok(n > 0),
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => Ok(false),
            Err(e) => Err(e),
        };
        stream.set_nonblocking(false)?;
        pending
    }
}
