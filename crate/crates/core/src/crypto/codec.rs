//! Hex-text serialization of key material.
//!
//! ```text
//! fedforest-keys 1
//! key_bits 512
//! modulus <hex>
//! generator <hex>
//! domain_bound 1099511627776
//! blind_bits 40
//! scale 1000
//! party DI1 public=<hex> share2=<hex>
//! ```
//!
//! `secret`, `share1` and `share2` are optional per party, so the same format
//! carries both a KGC dump and the slice handed to a single party.

use std::fmt::Write as _;

use num_bigint::BigUint;

use super::{CryptoError, KeyId, KeyPair, PublicKey, SecretKey, ShareIndex, SystemParams, TrapdoorShare};

const MAGIC: &str = "fedforest-keys 1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRecord {
    pub id: KeyId,
    pub public: BigUint,
    pub secret: Option<BigUint>,
    pub share_1: Option<BigUint>,
    pub share_2: Option<BigUint>,
}

impl KeyRecord {
    pub fn full(pair: &KeyPair) -> Self {
        Self {
            id: pair.id().clone(),
            public: pair.public.element.clone(),
            secret: Some(pair.secret.exponent.clone()),
            share_1: Some(pair.share_1.exponent.clone()),
            share_2: Some(pair.share_2.exponent.clone()),
        }
    }

    pub fn public_only(pk: &PublicKey) -> Self {
        Self {
            id: pk.id.clone(),
            public: pk.element.clone(),
            secret: None,
            share_1: None,
            share_2: None,
        }
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey {
            id: self.id.clone(),
            element: self.public.clone(),
        }
    }

    pub fn secret_key(&self) -> Option<SecretKey> {
        self.secret.as_ref().map(|exponent| SecretKey {
            id: self.id.clone(),
            exponent: exponent.clone(),
        })
    }

    pub fn share(&self, index: ShareIndex) -> Option<TrapdoorShare> {
        let exponent = match index {
            ShareIndex::First => self.share_1.as_ref(),
            ShareIndex::Second => self.share_2.as_ref(),
        };
        exponent.map(|exponent| TrapdoorShare {
            id: self.id.clone(),
            index,
            exponent: exponent.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyMaterial {
    pub params: SystemParams,
    pub records: Vec<KeyRecord>,
}

impl KeyMaterial {
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "key_bits {}", p.key_bits()).unwrap();
        writeln!(out, "modulus {}", p.modulus().to_str_radix(16)).unwrap();
        writeln!(out, "generator {}", p.generator().to_str_radix(16)).unwrap();
        writeln!(out, "domain_bound {}", p.domain_bound()).unwrap();
        writeln!(out, "blind_bits {}", p.blind_bits()).unwrap();
        writeln!(out, "scale {}", p.scale()).unwrap();
        for record in &self.records {
            write!(out, "party {} public={}", record.id, record.public.to_str_radix(16)).unwrap();
            for (name, value) in [
                ("secret", &record.secret),
                ("share1", &record.share_1),
                ("share2", &record.share_2),
            ] {
                if let Some(value) = value {
                    write!(out, " {name}={}", value.to_str_radix(16)).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CryptoError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(codec_error("missing header"));
        }
        let mut header = |name: &str| -> Result<String, CryptoError> {
            let line = lines.next().ok_or_else(|| codec_error(&format!("missing {name}")))?;
            let (key, value) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| codec_error(&format!("malformed line: {line}")))?;
            if key != name {
                return Err(codec_error(&format!("expected {name}, found {key}")));
            }
            Ok(value.to_string())
        };
        let key_bits = parse_dec(&header("key_bits")?)?;
        let modulus = parse_hex(&header("modulus")?)?;
        let generator = parse_hex(&header("generator")?)?;
        let domain_bound = parse_dec(&header("domain_bound")?)?;
        let blind_bits = parse_dec(&header("blind_bits")?)?;
        let scale = parse_dec(&header("scale")?)?;
        let params = SystemParams::new(key_bits, modulus, generator, domain_bound, blind_bits, scale)?;

        let mut records = Vec::new();
        for line in lines {
            let mut fields = line.split_whitespace();
            if fields.next() != Some("party") {
                return Err(codec_error(&format!("unexpected line: {line}")));
            }
            let id = KeyId::new(fields.next().ok_or_else(|| codec_error("party without id"))?);
            let mut record = KeyRecord {
                id,
                public: BigUint::default(),
                secret: None,
                share_1: None,
                share_2: None,
            };
            let mut saw_public = false;
            for field in fields {
                let (name, value) = field
                    .split_once('=')
                    .ok_or_else(|| codec_error(&format!("malformed field: {field}")))?;
                let value = parse_hex(value)?;
                match name {
                    "public" => {
                        record.public = value;
                        saw_public = true;
                    }
                    "secret" => record.secret = Some(value),
                    "share1" => record.share_1 = Some(value),
                    "share2" => record.share_2 = Some(value),
                    other => return Err(codec_error(&format!("unknown field {other}"))),
                }
            }
            if !saw_public {
                return Err(codec_error(&format!("party {} has no public key", record.id)));
            }
            records.push(record);
        }
        Ok(Self { params, records })
    }

    pub fn record(&self, id: &KeyId) -> Option<&KeyRecord> {
        self.records.iter().find(|r| &r.id == id)
    }
}

fn codec_error(msg: &str) -> CryptoError {
    CryptoError::Codec(msg.to_string())
}

fn parse_hex(s: &str) -> Result<BigUint, CryptoError> {
    BigUint::parse_bytes(s.as_bytes(), 16).ok_or_else(|| codec_error(&format!("bad hex: {s}")))
}

fn parse_dec<T: std::str::FromStr>(s: &str) -> Result<T, CryptoError> {
    s.trim().parse().map_err(|_| codec_error(&format!("bad number: {s}")))
}
