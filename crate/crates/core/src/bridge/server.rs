use super::Session;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::thread;

/// Serve one session over a line stream until `close` or end of input.
pub fn serve_lines<R: BufRead, W: Write>(
    session: &mut Session,
    reader: R,
    mut writer: W,
) -> io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match session.handle_line(&line) {
            Some(resp) => {
                writeln!(writer, "{}", resp.to_line())?;
                writer.flush()?;
            }
            None => break,
        }
    }
    Ok(())
}

/// Accept connections on `addr`, one session per connection, each on its own
/// thread. `on_bind` receives the bound address (useful with port 0).
pub fn serve_tcp<A, F, B>(addr: A, make_session: F, on_bind: B) -> io::Result<()>
where
    A: ToSocketAddrs,
    F: Fn() -> Session + Send + Sync + 'static,
    B: FnOnce(std::net::SocketAddr),
{
    let listener = TcpListener::bind(addr)?;
    on_bind(listener.local_addr()?);
    let make_session = std::sync::Arc::new(make_session);
    for stream in listener.incoming() {
        let stream = stream?;
        let make_session = make_session.clone();
        thread::spawn(move || {
            let mut session = make_session();
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(_) => return,
            };
            let _ = serve_lines(&mut session, reader, stream);
        });
    }
    Ok(())
}
