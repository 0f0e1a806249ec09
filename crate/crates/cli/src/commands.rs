use std::path::{Path, PathBuf};

use log::{info, warn};
use sknn_core::bench::{run_point, BenchPoint, CSV_HEADER};
use sknn_core::dataset::{encrypt_table, load_csv, Schema};
use sknn_core::paillier::{keygen as generate, PublicKey, SecretKey};
use sknn_core::rng::session_rng;
use sknn_core::sknn::{bob_encrypt_query, bob_run_query};
use sknn_core::transport::{connect_tcp, Role, SessionId, DEFAULT_MAX_FRAME};

use crate::{BenchArgs, Failure, QueryArgs};

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn keygen(bits: u32, prefix: &Path) -> Result<(), Failure> {
    if bits == 512 {
        warn!("512-bit keys are for testing only");
    }
    let (pk, sk) = generate(bits, &mut session_rng(b"keygen"))?;
    let (pub_path, sec_path) = (with_extension(prefix, "pub"), with_extension(prefix, "sec"));
    pk.write_file(&pub_path)?;
    sk.write_file(&sec_path)?;
    println!("public key: {}", pub_path.display());
    println!("secret key: {}", sec_path.display());
    println!("fingerprint: {}", pk.fingerprint_hex());
    Ok(())
}

/// Loads a public key, accepting a secret key file too.
pub fn read_public(path: &Path) -> Result<PublicKey, Failure> {
    let pk = PublicKey::read_file(path)?;
    if pk.bits() == 512 {
        warn!("{}: 512-bit keys are for testing only", path.display());
    }
    Ok(pk)
}

pub fn read_secret(path: &Path) -> Result<SecretKey, Failure> {
    let bytes = std::fs::read(path)?;
    if PublicKey::from_bytes(&bytes).is_ok() {
        return Err(Failure::Core(sknn_core::Error::Precondition(format!(
            "{} is a public key; C2 needs the secret key",
            path.display()
        ))));
    }
    let sk = SecretKey::from_bytes(&bytes)?;
    if sk.public().bits() == 512 {
        warn!("{}: 512-bit keys are for testing only", path.display());
    }
    Ok(sk)
}

pub fn encrypt_db(csv: &Path, schema: &Path, public: &Path, out: &Path) -> Result<(), Failure> {
    let schema = Schema::read_file(schema)?;
    let table = load_csv(csv, &schema)?;
    let pk = read_public(public)?;
    let db = encrypt_table(&pk, &table, &mut session_rng(b"encrypt-db"))?;
    db.write_file(out)?;
    println!("n = {}, m = {}, l = {}", db.n(), db.m(), db.l());
    println!("fingerprint: {}", pk.fingerprint_hex());
    Ok(())
}

fn parse_query(text: &str) -> Result<Vec<u64>, Failure> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| Failure::Usage(format!("query value `{}` is not a nonnegative integer", v.trim())))
        })
        .collect()
}

pub fn query(args: &QueryArgs) -> Result<(), Failure> {
    let values = parse_query(&args.query)?;
    let pk = read_public(&args.public)?;
    let fp = pk.fingerprint();
    let mut rng = session_rng(b"bob");
    let id = SessionId::random(&mut rng);
    let job = bob_encrypt_query(&pk, &values, args.k as usize, args.protocol.into(), &mut rng)?;
    // C2 must hold the delivery endpoint before C1 can finish.
    let mut c2 = connect_tcp(&args.c2_addr, id, Role::Bob, &fp, DEFAULT_MAX_FRAME)?;
    let mut c1 = connect_tcp(&args.c1_addr, id, Role::Bob, &fp, DEFAULT_MAX_FRAME)?;
    info!("session {id}: query sent");
    let records = bob_run_query(&pk, &mut c1, &mut c2, &job)?;
    for r in records {
        let line: Vec<String> = r.iter().map(ToString::to_string).collect();
        println!("{}", line.join(","));
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<(), Failure> {
    println!("{CSV_HEADER}");
    for &key_bits in &args.key_bits {
        let (_, sk) = generate(key_bits, &mut session_rng(b"bench-key"))?;
        for &protocol in &args.protocol {
            for &n in &args.n {
                for &m in &args.m {
                    for &k in &args.k {
                        for &l in &args.l {
                            for &parallel in &args.parallel {
                                let point = BenchPoint { protocol: protocol.into(), n, m, k, l, key_bits, parallel };
                                println!("{}", run_point(&sk, point, args.seed)?);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
