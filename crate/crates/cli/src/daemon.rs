use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::Arc;

use log::{error, info, warn};
use sknn_core::paillier::PublicKey;
use sknn_core::primitives::{C1Session, C2Responder, ProtocolConfig, SessionPool};
use sknn_core::rng::session_rng;
use sknn_core::sknn::{c1_handle_query, EncryptedDatabase};
use sknn_core::transport::{accept_tcp, connect_tcp, Message, Role, DEFAULT_MAX_FRAME, ERR_FAULT, ERR_UNEXPECTED};
use sknn_core::Result;

use crate::commands::{read_public, read_secret};
use crate::Failure;

/// Binds and announces the bound address on stdout, so callers that asked
/// for port 0 can find the daemon.
fn bind(listen: SocketAddr, name: &str) -> Result<TcpListener, Failure> {
    let listener = TcpListener::bind(listen)?;
    let addr = listener.local_addr()?;
    println!("{name} listening on {addr}");
    std::io::stdout().flush()?;
    Ok(listener)
}

pub fn serve_c1(db: &Path, public: &Path, listen: SocketAddr, c2_addr: &str, parallel: usize) -> Result<(), Failure> {
    let pk = Arc::new(read_public(public)?);
    let db = EncryptedDatabase::read_file(db)?;
    db.check_key(&pk)?;
    info!("database: n = {}, m = {}, l = {}", db.n(), db.m(), db.l());
    let db = Arc::new(db);
    let listener = bind(listen, "C1")?;
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let (pk, db, c2_addr) = (Arc::clone(&pk), Arc::clone(&db), c2_addr.to_string());
        std::thread::spawn(move || {
            if let Err(e) = c1_connection(stream, &pk, &db, &c2_addr, parallel) {
                error!("query failed: {e}");
            }
        });
    }
    Ok(())
}

fn c1_connection(stream: TcpStream, pk: &Arc<PublicKey>, db: &EncryptedDatabase, c2_addr: &str, parallel: usize) -> Result<()> {
    let fp = pk.fingerprint();
    let mut bob = accept_tcp(stream, Role::C1, &fp, DEFAULT_MAX_FRAME)?;
    let id = bob.session_id();
    if bob.peer_role() != Some(Role::Bob) {
        let _ = bob.send(&Message::Error { code: ERR_UNEXPECTED, text: "C1 only accepts queries".into() });
        return Ok(());
    }
    let mut sessions = Vec::with_capacity(parallel);
    for i in 0..parallel {
        let sid = id.derive(i);
        let ep = match connect_tcp(c2_addr, sid, Role::C1, &fp, DEFAULT_MAX_FRAME) {
            Ok(ep) => ep,
            Err(e) => {
                let _ = bob.send(&Message::Error { code: ERR_FAULT, text: format!("C2 unreachable: {e}") });
                return Err(e.into());
            }
        };
        let mut label = b"c1".to_vec();
        label.extend_from_slice(&sid.0);
        sessions.push(C1Session::new(ep, Arc::clone(pk), session_rng(&label), ProtocolConfig::default()));
    }
    let mut pool = SessionPool::new(sessions);
    c1_handle_query(&mut bob, &mut pool, db)?;
    info!("session {id}: query answered");
    Ok(())
}

pub fn serve_c2(sec: &Path, listen: SocketAddr, log_plaintext: bool) -> Result<(), Failure> {
    let sk = read_secret(sec)?;
    if log_plaintext {
        warn!("logging decrypted values");
    }
    let responder = C2Responder::new(Arc::new(sk)).with_log_plaintext(log_plaintext);
    let fp = responder.pk().fingerprint();
    let listener = bind(listen, "C2")?;
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let responder = responder.clone();
        std::thread::spawn(move || {
            let result = accept_tcp(stream, Role::C2, &fp, DEFAULT_MAX_FRAME)
                .map_err(Into::into)
                .and_then(|ep| responder.handle_connection(ep));
            if let Err(e) = result {
                warn!("connection ended with error: {e}");
            }
        });
    }
    Ok(())
}
