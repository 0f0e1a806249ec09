mod commands;
mod daemon;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sknn_core::transport::{ProtocolKind, TransportError, ERR_PRECONDITION};
use sknn_core::Error;

/// Secure k-nearest-neighbor queries over an encrypted database split
/// between two clouds.
#[derive(Parser, Debug)]
#[command(name = "sknn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Paillier key pair as PREFIX.pub and PREFIX.sec.
    Keygen {
        #[arg(long, value_parser = parse_key_bits, default_value = "1024")]
        bits: u32,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Encrypt a CSV table attribute-wise into a database file.
    EncryptDb {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run C1: holds the encrypted database and answers queries.
    ServeC1 {
        #[arg(long)]
        db: PathBuf,
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long)]
        listen: SocketAddr,
        #[arg(long)]
        c2_addr: String,
        /// Number of parallel C1-C2 sessions per query.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        parallel: u16,
    },
    /// Run C2: holds the secret key.
    ServeC2 {
        #[arg(long)]
        sec: PathBuf,
        #[arg(long)]
        listen: SocketAddr,
        /// Log every decrypted value. For test deployments only.
        #[arg(long)]
        log_plaintext: bool,
    },
    /// Send a query as Bob and print the returned records as CSV.
    Query(QueryArgs),
    /// Time synthetic queries and print CSV.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    c1_addr: String,
    #[arg(long)]
    c2_addr: String,
    #[arg(long = "pub")]
    public: PathBuf,
    /// Comma-separated feature values.
    #[arg(long)]
    query: String,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, value_enum, default_value = "full")]
    protocol: ProtocolArg,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "basic")]
    protocol: Vec<ProtocolArg>,
    #[arg(long, value_delimiter = ',', default_value = "250")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "6")]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "12")]
    l: Vec<usize>,
    #[arg(long = "bits", value_delimiter = ',', value_parser = parse_key_bits, default_value = "512")]
    key_bits: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    parallel: Vec<usize>,
    /// Seed for the synthetic data.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    Basic,
    Full,
}

impl From<ProtocolArg> for ProtocolKind {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Basic => ProtocolKind::Basic,
            ProtocolArg::Full => ProtocolKind::Full,
        }
    }
}

fn parse_key_bits(s: &str) -> Result<u32, String> {
    let bits: u32 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if sknn_core::paillier::ALLOWED_KEY_BITS.contains(&bits) {
        Ok(bits)
    } else {
        Err(format!("key size must be one of {:?}", sknn_core::paillier::ALLOWED_KEY_BITS))
    }
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_PROTOCOL: u8 = 4;
pub const EXIT_PRECONDITION: u8 = 5;

/// Why a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<TransportError> for Failure {
    fn from(e: TransportError) -> Self {
        Failure::Core(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => e.fmt(f),
        }
    }
}

fn exit_code(failure: &Failure) -> u8 {
    let e = match failure {
        Failure::Usage(_) => return EXIT_USAGE,
        Failure::Core(e) => e,
    };
    match e {
        Error::Io(_) | Error::Transport(TransportError::Io(_)) => EXIT_IO,
        Error::Dataset(_) | Error::Cell { .. } | Error::Schema { .. } | Error::Decode(_) => EXIT_IO,
        Error::Precondition(_) | Error::KeySize(_) | Error::PlaintextOutOfRange => EXIT_PRECONDITION,
        Error::Remote { code, .. } if *code == ERR_PRECONDITION => EXIT_PRECONDITION,
        _ => EXIT_PROTOCOL,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Keygen { bits, out_prefix } => commands::keygen(bits, &out_prefix),
        Command::EncryptDb { csv, schema, public, out } => commands::encrypt_db(&csv, &schema, &public, &out),
        Command::ServeC1 { db, public, listen, c2_addr, parallel } => {
            daemon::serve_c1(&db, &public, listen, &c2_addr, parallel as usize)
        }
        Command::ServeC2 { sec, listen, log_plaintext } => daemon::serve_c2(&sec, listen, log_plaintext),
        Command::Query(q) => commands::query(&q),
        Command::Bench(b) => commands::bench(&b),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
