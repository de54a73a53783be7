//! TLS material: PEM files from `--cert`/`--key`, or a self-signed
//! certificate over a fresh 2048-bit RSA key generated at startup.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use rsa::pkcs8::{EncodePrivateKey, LineEnding};
use rsa::RsaPrivateKey;
use rustls::pki_types::{CertificateDer, PrivateKeyDer, PrivatePkcs8KeyDer};

use super::{ServerConfig, ServerError};

pub const SELF_SIGNED_RSA_BITS: usize = 2048;

pub struct TlsMaterial {
    pub cert_chain: Vec<CertificateDer<'static>>,
    pub key: PrivateKeyDer<'static>,
    pub cert_pem: String,
    pub key_pem: String,
}

impl std::fmt::Debug for TlsMaterial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TlsMaterial")
            .field("certs", &self.cert_chain.len())
            .finish_non_exhaustive()
    }
}

fn tls_err(e: impl std::fmt::Display) -> ServerError {
    ServerError::Tls(e.to_string())
}

/// Self-signed certificate for `names`, signed with a new RSA-2048 key.
pub fn generate_self_signed(names: &[&str]) -> Result<TlsMaterial, ServerError> {
    let rsa_key = RsaPrivateKey::new(&mut rand::thread_rng(), SELF_SIGNED_RSA_BITS).map_err(tls_err)?;
    let pkcs8 = rsa_key.to_pkcs8_der().map_err(tls_err)?;
    let key_pem = rsa_key.to_pkcs8_pem(LineEnding::LF).map_err(tls_err)?.to_string();
    let key_der = PrivatePkcs8KeyDer::from(pkcs8.as_bytes().to_vec());
    let key_pair = rcgen::KeyPair::from_pkcs8_der_and_sign_algo(&key_der, &rcgen::PKCS_RSA_SHA256)
        .map_err(tls_err)?;
    let mut params =
        rcgen::CertificateParams::new(names.iter().map(|s| s.to_string()).collect::<Vec<_>>())
            .map_err(tls_err)?;
    params
        .distinguished_name
        .push(rcgen::DnType::CommonName, "iris-restful self-signed");
    let cert = params.self_signed(&key_pair).map_err(tls_err)?;
    Ok(TlsMaterial {
        cert_pem: cert.pem(),
        cert_chain: vec![cert.der().clone()],
        key: PrivateKeyDer::Pkcs8(key_der),
        key_pem,
    })
}

/// Reads a PEM certificate chain and private key.
pub fn load_pem(cert_path: &Path, key_path: &Path) -> Result<TlsMaterial, ServerError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| tls_err(format!("{}: {e}", p.display())));
    let (cert_pem, key_pem) = (read(cert_path)?, read(key_path)?);
    let cert_chain = rustls_pemfile::certs(&mut BufReader::new(File::open(cert_path)?))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| tls_err(format!("{}: {e}", cert_path.display())))?;
    if cert_chain.is_empty() {
        return Err(tls_err(format!("{}: no certificates", cert_path.display())));
    }
    let key = rustls_pemfile::private_key(&mut BufReader::new(File::open(key_path)?))
        .map_err(|e| tls_err(format!("{}: {e}", key_path.display())))?
        .ok_or_else(|| tls_err(format!("{}: no private key", key_path.display())))?;
    Ok(TlsMaterial {
        cert_chain,
        key,
        cert_pem,
        key_pem,
    })
}

pub fn rustls_config(material: TlsMaterial) -> Result<Arc<rustls::ServerConfig>, ServerError> {
    let provider = Arc::new(rustls::crypto::ring::default_provider());
    let mut config = rustls::ServerConfig::builder_with_provider(provider)
        .with_safe_default_protocol_versions()
        .map_err(tls_err)?
        .with_no_client_auth()
        .with_single_cert(material.cert_chain, material.key)
        .map_err(tls_err)?;
    config.alpn_protocols = vec![b"http/1.1".to_vec()];
    Ok(Arc::new(config))
}

/// TLS context for a configuration, or `None` when serving plain HTTP.
pub fn ensure_tls(config: &ServerConfig) -> Result<Option<Arc<rustls::ServerConfig>>, ServerError> {
    if !config.https_enabled {
        return Ok(None);
    }
    let material = match (&config.cert_path, &config.key_path) {
        (Some(cert), Some(key)) => load_pem(cert, key)?,
        (None, None) => generate_self_signed(&["localhost", "127.0.0.1"])?,
        _ => return Err(ServerError::Config("--cert and --key must be given together".into())),
    };
    rustls_config(material).map(Some)
}
