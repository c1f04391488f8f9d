#![allow(dead_code)]

use fedforest::audit::AuditKeys;
use fedforest::crypto::{enc, keygen_party, keygen_system, Ciphertext, KeyId, KeyPair, PlainScalar, SystemParams};
use fedforest::protocols::{HelperDirectory, HelperParty, Initiator, KeyRing, PartyId, ProtocolContext, TranscriptMode};
use fedforest::rng::RngStream;

/// CP plus three helpers: DI1 and DI2 with their own keys (DI1 also answers for
/// the common key `pk`) and DU with `pk_u`.
pub struct World {
    pub params: SystemParams,
    pub ring: KeyRing,
    pub cp: Initiator,
    pub di1: HelperParty,
    pub di2: HelperParty,
    pub du: HelperParty,
    pub audit: AuditKeys,
    pub pairs: Vec<KeyPair>,
}

pub const KEYS: [&str; 4] = ["pk", "pk_u", "DI1", "DI2"];

impl World {
    pub fn new(bits: u32, seed: u64) -> Self {
        let (params, master) = keygen_system(bits, seed).expect("system keygen");
        let mut ring = KeyRing::new(params.clone());
        let mut cp = Initiator::new(PartyId::new("CP"), seed);
        let mut di1 = HelperParty::new(PartyId::new("DI1"), seed);
        let mut di2 = HelperParty::new(PartyId::new("DI2"), seed);
        let mut du = HelperParty::new(PartyId::new("DU"), seed);
        let mut audit = AuditKeys::new(params.clone());
        let mut pairs = Vec::new();
        for (i, name) in KEYS.iter().enumerate() {
            let pair = keygen_party(&params, &master, *name, seed * 100 + i as u64);
            ring.insert(pair.public.clone());
            cp.add_share(pair.share_1.clone());
            audit.insert(pair.secret.clone());
            match *name {
                "pk" | "DI1" => di1.add_share(pair.share_2.clone()),
                "DI2" => di2.add_share(pair.share_2.clone()),
                _ => du.add_share(pair.share_2.clone()),
            }
            pairs.push(pair);
        }
        Self {
            params,
            ring,
            cp,
            di1,
            di2,
            du,
            audit,
            pairs,
        }
    }

    pub fn context(&self, mode: TranscriptMode) -> ProtocolContext<'_> {
        let mut helpers = HelperDirectory::new();
        helpers.route(KeyId::new("pk"), &self.di1).unwrap();
        helpers.route(KeyId::new("DI1"), &self.di1).unwrap();
        helpers.route(KeyId::new("DI2"), &self.di2).unwrap();
        helpers.route(KeyId::new("pk_u"), &self.du).unwrap();
        ProtocolContext {
            ring: &self.ring,
            initiator: &self.cp,
            helpers,
            common: KeyId::new("pk"),
            mode,
        }
    }

    pub fn pair(&self, key: &str) -> &KeyPair {
        self.pairs.iter().find(|p| p.id().as_str() == key).expect("known key")
    }

    pub fn enc(&self, key: &str, value: i64, rng: &mut RngStream) -> Ciphertext {
        let pk = self.ring.get(&KeyId::new(key)).unwrap();
        enc(&self.params, pk, PlainScalar::unit(value), rng).unwrap()
    }
}
