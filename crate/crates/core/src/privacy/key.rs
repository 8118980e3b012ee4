use std::fmt;
use std::path::Path;

use hmac::{Hmac, Mac};
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Digest, Sha256};

type HmacSha256 = Hmac<Sha256>;

pub const KEY_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum KeyError {
    #[error("secret key must be exactly {KEY_LEN} bytes, got {0}")]
    Length(usize),
    #[error("key file is neither {KEY_LEN} raw bytes nor {} hex characters", KEY_LEN * 2)]
    Format,
    #[error("reading key file: {0}")]
    Io(#[from] std::io::Error),
}

/// 32 bytes of secret key material. Never serialized into dataset artifacts;
/// only its [`fingerprint`](SecretKey::fingerprint) is.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey([u8; KEY_LEN]);

impl SecretKey {
    pub fn generate() -> Self {
        let mut bytes = [0u8; KEY_LEN];
        OsRng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, KeyError> {
        let arr: [u8; KEY_LEN] = bytes.try_into().map_err(|_| KeyError::Length(bytes.len()))?;
        Ok(Self(arr))
    }

    /// Parses key file contents: 32 raw bytes, or 64 hex characters with
    /// optional surrounding whitespace.
    pub fn from_file_contents(contents: &[u8]) -> Result<Self, KeyError> {
        if contents.len() == KEY_LEN {
            return Self::from_bytes(contents);
        }
        let text = std::str::from_utf8(contents).map_err(|_| KeyError::Format)?.trim();
        if text.len() != KEY_LEN * 2 {
            return Err(KeyError::Format);
        }
        let bytes = hex::decode(text).map_err(|_| KeyError::Format)?;
        Self::from_bytes(&bytes)
    }

    pub fn load(path: &Path) -> Result<Self, KeyError> {
        Self::from_file_contents(&std::fs::read(path)?)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    /// First 8 hex characters of the unkeyed SHA-256 of the key; used as a
    /// provenance tag in dataset manifests.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.0))[..8].to_string()
    }

    pub fn keyed_hash(&self, parts: &[&[u8]]) -> [u8; 32] {
        keyed_hash(&self.0, parts)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SecretKey").field(&"[REDACTED]").finish()
    }
}

/// HMAC-SHA256 over the concatenation of `parts`.
pub fn keyed_hash(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    for p in parts {
        mac.update(p);
    }
    mac.finalize().into_bytes().into()
}
