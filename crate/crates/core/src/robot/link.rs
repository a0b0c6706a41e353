use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::thread;
use std::time::Duration;

use crate::geom::Timestamp;
use crate::transport::{pipe, PipeReader, PipeWriter};

/// The robot's side of a connection to the edge.
pub trait Link {
    /// Offers one encoded frame at simulated time `now`. `Ok(false)` means
    /// the link cannot accept it yet and the caller should keep it queued.
    fn try_send(&mut self, now: Timestamp, bytes: &[u8]) -> io::Result<bool>;

    /// Appends bytes received from the edge without blocking.
    fn poll_recv(&mut self, out: &mut Vec<u8>) -> io::Result<()>;

    /// Closes the sending direction so the edge sees end of stream.
    fn finish(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// In-process link over a pair of pipes.
#[derive(Debug)]
pub struct PipeLink {
    tx: Option<PipeWriter>,
    rx: PipeReader,
}

impl PipeLink {
    pub fn new(tx: PipeWriter, rx: PipeReader) -> Self {
        PipeLink { tx: Some(tx), rx }
    }
}

impl Link for PipeLink {
    fn try_send(&mut self, _now: Timestamp, bytes: &[u8]) -> io::Result<bool> {
        match &mut self.tx {
            Some(tx) => tx.write_all(bytes).map(|_| true),
            None => Err(io::Error::new(io::ErrorKind::BrokenPipe, "link already finished")),
        }
    }

    fn poll_recv(&mut self, out: &mut Vec<u8>) -> io::Result<()> {
        self.rx.read_available(out);
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        self.tx = None;
        Ok(())
    }
}

/// TCP link. A helper thread drains the socket into a pipe so that polling
/// never blocks the robot's event loop.
#[derive(Debug)]
pub struct TcpLink {
    stream: TcpStream,
    rx: PipeReader,
    reader: Option<thread::JoinHandle<()>>,
}

/// How long `finish` waits for the peer to close its side.
const CLOSE_WAIT: Duration = Duration::from_secs(30);

impl TcpLink {
    pub fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        let mut reader = stream.try_clone()?;
        let (mut w, rx) = pipe();
        let reader = thread::Builder::new().name("robot-rx".into()).spawn(move || {
            // Keeps reading after the session stops listening: closing a
            // socket with unread input resets it and the peer loses data.
            let mut buf = [0u8; 4096];
            let mut forward = true;
            while let Ok(n) = reader.read(&mut buf) {
                if n == 0 {
                    break;
                }
                forward = forward && w.write_all(&buf[..n]).is_ok();
            }
        })?;
        Ok(TcpLink {
            stream,
            rx,
            reader: Some(reader),
        })
    }
}

impl Link for TcpLink {
    fn try_send(&mut self, _now: Timestamp, bytes: &[u8]) -> io::Result<bool> {
        self.stream.write_all(bytes).map(|_| true)
    }

    fn poll_recv(&mut self, out: &mut Vec<u8>) -> io::Result<()> {
        self.rx.read_available(out);
        Ok(())
    }

    /// Half-closes, then waits for the peer to close its side.
    fn finish(&mut self) -> io::Result<()> {
        self.stream.flush()?;
        self.stream.shutdown(Shutdown::Write)?;
        self.stream.set_read_timeout(Some(CLOSE_WAIT))?;
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
        Ok(())
    }
}

/// Refuses every send during `[from, until)` of simulated time.
#[derive(Debug)]
pub struct StalledLink<L> {
    inner: L,
    from: Timestamp,
    until: Timestamp,
}

impl<L: Link> StalledLink<L> {
    pub fn new(inner: L, from: Timestamp, until: Timestamp) -> Self {
        StalledLink { inner, from, until }
    }

    pub fn into_inner(self) -> L {
        self.inner
    }
}

impl<L: Link> Link for StalledLink<L> {
    fn try_send(&mut self, now: Timestamp, bytes: &[u8]) -> io::Result<bool> {
        if now >= self.from && now < self.until {
            return Ok(false);
        }
        self.inner.try_send(now, bytes)
    }

    fn poll_recv(&mut self, out: &mut Vec<u8>) -> io::Result<()> {
        self.inner.poll_recv(out)
    }

    fn finish(&mut self) -> io::Result<()> {
        self.inner.finish()
    }
}

impl<L: Link + ?Sized> Link for Box<L> {
    fn try_send(&mut self, now: Timestamp, bytes: &[u8]) -> io::Result<bool> {
        (**self).try_send(now, bytes)
    }

    fn poll_recv(&mut self, out: &mut Vec<u8>) -> io::Result<()> {
        (**self).poll_recv(out)
    }

    fn finish(&mut self) -> io::Result<()> {
        (**self).finish()
    }
}
