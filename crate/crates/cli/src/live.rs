//! Live Jetstream capture over a websocket.

use std::net::TcpStream;

use simpact_core::ingest::jetstream::subscribe_url;
use simpact_core::ingest::{JetstreamAdapter, RawEvent};
use tracing::{debug, info, warn};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

use crate::config::JetstreamConfig;
use crate::error::CliError;

/// Reads commit messages until `max_events` events were adapted or the
/// server closes the stream.
pub fn capture(cfg: &JetstreamConfig) -> Result<Vec<RawEvent>, CliError> {
    let url = subscribe_url(&cfg.endpoint, &cfg.collections, cfg.cursor);
    info!(%url, "connecting to jetstream");
    let (mut socket, _) =
        tungstenite::connect(url.as_str()).map_err(|e| CliError::Data(format!("jetstream connect {url}: {e}")))?;
    let events = read_events(&mut socket, cfg.max_events);
    let _ = socket.close(None);
    events
}

fn read_events(
    socket: &mut WebSocket<MaybeTlsStream<TcpStream>>,
    max_events: usize,
) -> Result<Vec<RawEvent>, CliError> {
    let mut adapter = JetstreamAdapter::new();
    let mut out = Vec::new();
    let mut rejected = 0usize;
    while out.len() < max_events {
        let msg = match socket.read() {
            Ok(m) => m,
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => break,
            Err(tungstenite::Error::Protocol(e)) => {
                debug!(%e, "stream ended");
                break;
            }
            Err(e) => return Err(CliError::Data(format!("jetstream read: {e}"))),
        };
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        match adapter.adapt_str(&text) {
            Ok(Some(e)) => out.push(e),
            Ok(None) => {}
            Err(e) => {
                rejected += 1;
                debug!(%e, "rejected message");
            }
        }
    }
    if rejected > 0 {
        warn!(rejected, "jetstream messages could not be adapted");
    }
    info!(events = out.len(), "jetstream capture finished");
    Ok(out)
}
