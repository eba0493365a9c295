//! TCP transport for [`LiveSession`]: one thread per connection, one frame
//! per line in each direction.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::thread;

use super::frame::Frame;
use super::live::{LiveConfig, LiveSession};

const MAX_LINE: usize = 1 << 20;

/// Runs one connection until the peer closes it or breaks the protocol. On
/// a violation an `error` frame is written before returning.
pub fn handle_connection<R: BufRead, W: Write>(mut reader: R, mut writer: W, config: LiveConfig) -> io::Result<()> {
    let mut session = LiveSession::new(config);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader.by_ref().take(MAX_LINE as u64 + 1).read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        if buf.len() > MAX_LINE {
            return send(&mut writer, &Frame::error("frame too long"));
        }
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let frame = match Frame::parse(line) {
            Ok(f) => f,
            Err(e) => return send(&mut writer, &Frame::error(format!("malformed frame: {e}"))),
        };
        match session.handle(frame) {
            Ok(replies) => {
                for r in &replies {
                    writeln!(writer, "{}", r.to_line())?;
                }
                writer.flush()?;
            }
            Err(e) => return send(&mut writer, &Frame::error(e.to_string())),
        }
    }
}

fn send<W: Write>(writer: &mut W, frame: &Frame) -> io::Result<()> {
    writeln!(writer, "{}", frame.to_line())?;
    writer.flush()
}

fn serve_stream(stream: TcpStream, config: LiveConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    handle_connection(reader, stream, config)
}

pub struct Server {
    listener: TcpListener,
    config: LiveConfig,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: LiveConfig) -> io::Result<Self> {
        Ok(Self { listener: TcpListener::bind(addr)?, config })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections forever.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let config = self.config;
            thread::spawn(move || serve_stream(stream, config));
        }
        Ok(())
    }

    /// Serves exactly `n` connections and waits for all of them to close.
    pub fn run_for(self, n: usize) -> io::Result<()> {
        let mut handles = Vec::with_capacity(n);
        for _ in 0..n {
            let (stream, _) = self.listener.accept()?;
            let config = self.config;
            handles.push(thread::spawn(move || serve_stream(stream, config)));
        }
        for h in handles {
            h.join().map_err(|_| io::Error::other("connection thread panicked"))??;
        }
        Ok(())
    }
}
