use std::io::Write;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::thread;

use super::server::Server;
use super::wire::read_frame;
use super::TosError;

/// Carries one request frame to the server and returns the reply frame.
pub trait Transport {
    fn exchange(&mut self, frame: &[u8]) -> Result<Vec<u8>, TosError>;
}

/// In-process transport; frames still travel as bytes.
#[derive(Clone)]
pub struct Loopback {
    server: Arc<Mutex<Server>>,
}

impl Loopback {
    pub fn new(server: Arc<Mutex<Server>>) -> Self {
        Self { server }
    }

    pub fn server(&self) -> &Arc<Mutex<Server>> {
        &self.server
    }
}

impl Transport for Loopback {
    fn exchange(&mut self, frame: &[u8]) -> Result<Vec<u8>, TosError> {
        let mut server = self.server.lock().map_err(|_| TosError::Rejected("server poisoned".into()))?;
        Ok(server.handle_bytes(frame))
    }
}

pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, TosError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self { stream })
    }
}

impl Transport for TcpTransport {
    fn exchange(&mut self, frame: &[u8]) -> Result<Vec<u8>, TosError> {
        self.stream.write_all(frame)?;
        read_frame(&mut self.stream)
    }
}

fn serve_connection(mut stream: TcpStream, server: Arc<Mutex<Server>>) -> Result<(), TosError> {
    loop {
        let frame = match read_frame(&mut stream) {
            Ok(f) => f,
            Err(TosError::Io(e)) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e),
        };
        let reply = {
            let mut s = server.lock().map_err(|_| TosError::Rejected("server poisoned".into()))?;
            s.rotate_if_due()?;
            s.handle_bytes(&frame)
        };
        stream.write_all(&reply)?;
    }
}

/// Accepts connections, one thread each, until `max_connections` have been
/// served (forever when `None`).
pub fn serve(
    listener: TcpListener,
    server: Arc<Mutex<Server>>,
    max_connections: Option<usize>,
) -> Result<(), TosError> {
    let mut handles = Vec::new();
    for (i, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        let server = Arc::clone(&server);
        handles.push(thread::spawn(move || serve_connection(stream, server)));
        if max_connections.is_some_and(|max| i + 1 >= max) {
            break;
        }
    }
    for h in handles {
        h.join().map_err(|_| TosError::Rejected("connection thread panicked".into()))??;
    }
    Ok(())
}
