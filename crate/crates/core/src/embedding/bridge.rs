//! Line-delimited JSON embedding protocol.
//!
//! The server first writes a handshake `{"name":..,"dim":..}`. Each request
//! `{"id":n,"texts":[..]}` is answered by `{"id":n,"vectors":[[..],..]}` or
//! `{"id":n,"error":".."}`. Responses may arrive out of order.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::{EmbedError, EmbeddingProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Request<'a> {
    id: u64,
    #[serde(borrow)]
    texts: Vec<&'a str>,
}

#[derive(Debug, Deserialize)]
struct OwnedRequest {
    id: Option<u64>,
    texts: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Response {
    id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

const DEFAULT_WINDOW: usize = 4;

/// Client side of the protocol over a child process's stdio or a TCP socket.
pub struct BridgeClient {
    handshake: Handshake,
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
    window: usize,
    child: Option<Child>,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient").field("handshake", &self.handshake).finish_non_exhaustive()
    }
}

impl BridgeClient {
    pub fn from_streams(
        mut reader: Box<dyn BufRead + Send>,
        writer: Box<dyn Write + Send>,
    ) -> Result<Self, EmbedError> {
        let line = read_line(&mut reader)?;
        let handshake: Handshake =
            serde_json::from_str(&line).map_err(|e| EmbedError::Protocol(format!("bad handshake: {e}")))?;
        if handshake.dim == 0 {
            return Err(EmbedError::Protocol("handshake declares dim 0".into()));
        }
        debug!(name = %handshake.name, dim = handshake.dim, "bridge connected");
        Ok(Self { handshake, reader, writer, next_id: 0, window: DEFAULT_WINDOW, child: None })
    }

    /// Spawns `command` and talks to it over stdin/stdout.
    pub fn spawn(command: &mut Command) -> Result<Self, EmbedError> {
        let mut child = command.stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().map_err(EmbedError::Transport)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = Self::from_streams(Box::new(BufReader::new(stdout)), Box::new(BufWriter::new(stdin)))?;
        client.child = Some(child);
        Ok(client)
    }

    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self, EmbedError> {
        let stream = TcpStream::connect(addr).map_err(EmbedError::Transport)?;
        let read_half = stream.try_clone().map_err(EmbedError::Transport)?;
        Self::from_streams(Box::new(BufReader::new(read_half)), Box::new(BufWriter::new(stream)))
    }

    pub fn handshake(&self) -> &Handshake {
        &self.handshake
    }

    /// Maximum number of requests in flight.
    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        self
    }

    fn send(&mut self, texts: &[String]) -> Result<u64, EmbedError> {
        let id = self.next_id;
        self.next_id += 1;
        let req = Request { id, texts: texts.iter().map(String::as_str).collect() };
        let mut line = serde_json::to_string(&req).expect("request serializes");
        line.push('\n');
        self.writer.write_all(line.as_bytes()).map_err(EmbedError::Transport)?;
        self.writer.flush().map_err(EmbedError::Transport)?;
        Ok(id)
    }

    fn receive(&mut self) -> Result<(u64, Vec<Vec<f64>>), EmbedError> {
        let line = read_line(&mut self.reader)?;
        let resp: Response =
            serde_json::from_str(&line).map_err(|e| EmbedError::Protocol(format!("bad response: {e}")))?;
        let id = resp.id.ok_or_else(|| EmbedError::Protocol("response without id".into()))?;
        match (resp.vectors, resp.error) {
            (_, Some(message)) => Err(EmbedError::Remote { id, message }),
            (Some(v), None) => Ok((id, v)),
            (None, None) => Err(EmbedError::Protocol(format!("response {id} has neither vectors nor error"))),
        }
    }
}

fn read_line(reader: &mut Box<dyn BufRead + Send>) -> Result<String, EmbedError> {
    let mut line = String::new();
    let n = reader.read_line(&mut line).map_err(EmbedError::Transport)?;
    if n == 0 {
        return Err(EmbedError::Transport(io::Error::new(io::ErrorKind::UnexpectedEof, "bridge closed the stream")));
    }
    Ok(line)
}

impl EmbeddingProvider for BridgeClient {
    fn name(&self) -> &str {
        &self.handshake.name
    }

    fn dim(&self) -> usize {
        self.handshake.dim
    }

    fn embed_batch(&mut self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(self.embed_batches(&[texts])?.pop().expect("one batch"))
    }

    fn embed_batches(&mut self, batches: &[&[String]]) -> Result<Vec<Vec<Vec<f64>>>, EmbedError> {
        let mut pending: HashMap<u64, usize> = HashMap::new();
        let mut results: Vec<Option<Vec<Vec<f64>>>> = vec![None; batches.len()];
        let mut next = 0;
        let mut done = 0;
        while done < batches.len() {
            while next < batches.len() && pending.len() < self.window {
                let id = self.send(batches[next])?;
                pending.insert(id, next);
                next += 1;
            }
            let (id, vectors) = self.receive()?;
            match pending.remove(&id) {
                Some(slot) => {
                    results[slot] = Some(vectors);
                    done += 1;
                }
                None => warn!(id, "ignoring response for unknown request"),
            }
        }
        Ok(results.into_iter().map(|r| r.expect("all slots filled")).collect())
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            // closing stdin lets a well-behaved server exit on its own
            self.writer = Box::new(io::sink());
            if !matches!(child.try_wait(), Ok(Some(_))) {
                let _ = child.kill();
            }
            let _ = child.wait();
        }
    }
}

/// Serves `provider` over the protocol until `reader` reaches EOF.
/// Malformed requests are answered with an error line and do not stop
/// the loop.
pub fn serve<P, R, W>(provider: &mut P, reader: R, mut writer: W) -> io::Result<()>
where
    P: EmbeddingProvider + ?Sized,
    R: BufRead,
    W: Write,
{
    let hs = Handshake { name: provider.name().to_string(), dim: provider.dim() };
    writeln!(writer, "{}", serde_json::to_string(&hs).expect("handshake serializes"))?;
    writer.flush()?;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<OwnedRequest>(&line) {
            Ok(OwnedRequest { id: Some(id), texts: Some(texts) }) => match provider.embed_batch(&texts) {
                Ok(vectors) => Response { id: Some(id), vectors: Some(vectors), error: None },
                Err(e) => Response { id: Some(id), vectors: None, error: Some(e.to_string()) },
            },
            Ok(OwnedRequest { id, .. }) => {
                Response { id, vectors: None, error: Some("request needs id and texts".into()) }
            }
            Err(e) => Response { id: None, vectors: None, error: Some(format!("malformed request: {e}")) },
        };
        writeln!(writer, "{}", serde_json::to_string(&resp).expect("response serializes"))?;
        writer.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{embed_texts, FallbackProvider};
    use std::net::TcpListener;
    use std::thread;

    fn tcp_server() -> (std::net::SocketAddr, thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let h = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let reader = BufReader::new(stream.try_clone().unwrap());
            serve(&mut FallbackProvider { dim: 32, seed: 5 }, reader, stream).unwrap();
        });
        (addr, h)
    }

    #[test]
    fn tcp_round_trip_matches_local() {
        let (addr, h) = tcp_server();
        let mut client = BridgeClient::connect(addr).unwrap().with_window(3);
        assert_eq!(client.handshake(), &Handshake { name: "fallback-3gram".into(), dim: 32 });
        let texts: Vec<String> = (0..200).map(|i| format!("message {i}")).collect();
        let remote = embed_texts(&mut client, &texts, 16).unwrap();
        let local = embed_texts(&mut FallbackProvider { dim: 32, seed: 5 }, &texts, 64).unwrap();
        assert_eq!(remote, local);
        drop(client);
        h.join().unwrap();
    }

    #[test]
    fn remote_errors_surface() {
        let (addr, h) = tcp_server();
        let mut client = BridgeClient::connect(addr).unwrap();
        let err = client.embed_batch(&["".to_string()]).unwrap_err();
        assert!(matches!(err, EmbedError::Remote { id: 0, .. }), "{err:?}");
        // the server survives and answers the next request
        assert_eq!(client.embed_batch(&["ok".to_string()]).unwrap().len(), 1);
        drop(client);
        h.join().unwrap();
    }

    #[test]
    fn server_answers_malformed_lines() {
        let input = b"not json\n{\"id\":4}\n{\"id\":5,\"texts\":[\"abc\"]}\n";
        let mut out = Vec::new();
        serve(&mut FallbackProvider { dim: 8, seed: 0 }, &input[..], &mut out).unwrap();
        let lines: Vec<serde_json::Value> =
            String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["dim"], 8);
        assert!(lines[1]["error"].is_string());
        assert_eq!(lines[2]["id"], 4);
        assert!(lines[2]["error"].is_string());
        assert_eq!(lines[3]["vectors"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn out_of_order_responses() {
        // a scripted server answering request 1 before request 0
        let script = concat!(
            "{\"name\":\"s\",\"dim\":2}\n",
            "{\"id\":1,\"vectors\":[[0.0,1.0]]}\n",
            "{\"id\":0,\"vectors\":[[1.0,0.0]]}\n",
        );
        let mut client = BridgeClient::from_streams(
            Box::new(BufReader::new(io::Cursor::new(script.as_bytes().to_vec()))),
            Box::new(io::sink()),
        )
        .unwrap();
        let a = vec!["a".to_string()];
        let b = vec!["b".to_string()];
        let out = client.embed_batches(&[&a, &b]).unwrap();
        assert_eq!(out, vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]);
    }

    #[test]
    fn eof_is_transport_error() {
        let r = BridgeClient::from_streams(Box::new(BufReader::new(io::empty())), Box::new(io::sink()));
        assert!(matches!(r, Err(EmbedError::Transport(_))));
    }
}
