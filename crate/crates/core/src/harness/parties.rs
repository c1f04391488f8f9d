use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;

#[cfg(feature = "audit")]
use crate::audit::AuditKeys;
use crate::crypto::{
    keygen_party, keygen_system_with, KeyId, KeyMaterial, KeyPair, KeyRecord, ShareIndex, SystemParams, TrapdoorShare,
};
use crate::protocols::{HelperDirectory, HelperParty, Initiator, KeyRing, PartyId, ProtocolContext, TranscriptMode};
use crate::rng::RngStream;

use super::HarnessError;

pub const COMMON_KEY: &str = "pk";
pub const USER_KEY: &str = "pk_u";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Kgc,
    Cp,
    /// Data island, 1-based.
    Di(usize),
    Du,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Kgc => f.write_str("KGC"),
            Role::Cp => f.write_str("CP"),
            Role::Di(i) => write!(f, "DI{i}"),
            Role::Du => f.write_str("DU"),
        }
    }
}

pub fn island_key(i: usize) -> KeyId {
    KeyId::new(&format!("pk_DI{i}"))
}

/// What a party received from the KGC.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Holding {
    SecretKey,
    Share(ShareIndex),
}

#[derive(Clone, Debug, Default)]
pub struct KeyLedger {
    entries: BTreeMap<Role, Vec<(KeyId, Holding)>>,
}

impl KeyLedger {
    fn grant(&mut self, role: Role, key: &KeyId, holding: Holding) {
        self.entries.entry(role).or_default().push((key.clone(), holding));
    }

    pub fn holdings(&self, role: Role) -> &[(KeyId, Holding)] {
        self.entries.get(&role).map_or(&[], Vec::as_slice)
    }

    pub fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        self.entries.keys().copied()
    }

    /// True when some party can decrypt `key` on its own.
    pub fn has_complete_trapdoor(&self, role: Role, key: &KeyId) -> bool {
        let held: Vec<Holding> = self
            .holdings(role)
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, h)| *h)
            .collect();
        held.contains(&Holding::Share(ShareIndex::First)) && held.contains(&Holding::Share(ShareIndex::Second))
    }
}

/// All simulated parties after key distribution. The KGC's master trapdoor
/// and full key pairs are dropped once shares are handed out.
pub struct Federation {
    pub params: SystemParams,
    pub ring: KeyRing,
    pub cp: Initiator,
    pub islands: Vec<HelperParty>,
    pub user: HelperParty,
    user_share: TrapdoorShare,
    pub ledger: KeyLedger,
    /// Island (0-based) that answers for the common key during the defense.
    pub defense_helper: usize,
    #[cfg(feature = "audit")]
    pub audit: AuditKeys,
}

pub struct FederationConfig {
    pub islands: usize,
    pub key_bits: u32,
    pub domain_bits: u32,
    pub blind_bits: u32,
    pub scale: i64,
    pub defense_helper: usize,
}

impl Federation {
    /// KeyManagement: system parameters, one key per island plus `pk` and
    /// `pk_u`, and share distribution.
    ///
    /// CP gets the first share of every key. Island `i` gets the second share
    /// of its own key; the defense helper island also gets the second share of
    /// `pk`. DU gets `sk_u`, the second share of `pk_u`, and the second share of `pk`.
    pub fn setup(config: &FederationConfig, rng: &RngStream) -> Result<Self, HarnessError> {
        if config.islands == 0 || config.defense_helper >= config.islands {
            return Err(HarnessError::Config(format!(
                "defense helper {} is not among {} islands",
                config.defense_helper, config.islands
            )));
        }
        let mut kgc = rng.fork("kgc");
        let (params, master) = keygen_system_with(
            config.key_bits,
            kgc.next_u64(),
            1i64 << config.domain_bits,
            config.blind_bits,
            config.scale,
        )?;
        let mut ring = KeyRing::new(params.clone());
        let mut ledger = KeyLedger::default();
        let mut cp = Initiator::new(PartyId::new("CP"), rng.fork("party-seed").fork("CP").next_u64());
        let party_seed = |role: Role| rng.fork("party-seed").fork(&role.to_string()).next_u64();
        let mut islands: Vec<HelperParty> = (1..=config.islands)
            .map(|i| HelperParty::new(PartyId::new(&Role::Di(i).to_string()), party_seed(Role::Di(i))))
            .collect();
        let mut user = HelperParty::new(PartyId::new("DU"), party_seed(Role::Du));
        #[cfg(feature = "audit")]
        let mut audit = AuditKeys::new(params.clone());

        let mut generate = |id: KeyId| -> KeyPair {
            let pair = keygen_party(&params, &master, id, kgc.next_u64());
            ring.insert(pair.public.clone());
            #[cfg(feature = "audit")]
            audit.insert(pair.secret.clone());
            pair
        };
        let common = generate(KeyId::new(COMMON_KEY));
        let user_key = generate(KeyId::new(USER_KEY));
        let island_pairs: Vec<KeyPair> = (1..=config.islands).map(|i| generate(island_key(i))).collect();

        let give_first = |cp: &mut Initiator, ledger: &mut KeyLedger, pair: &KeyPair| {
            cp.add_share(pair.share_1.clone());
            ledger.grant(Role::Cp, pair.id(), Holding::Share(ShareIndex::First));
        };
        give_first(&mut cp, &mut ledger, &common);
        give_first(&mut cp, &mut ledger, &user_key);
        for pair in &island_pairs {
            give_first(&mut cp, &mut ledger, pair);
        }
        for (i, pair) in island_pairs.iter().enumerate() {
            islands[i].add_share(pair.share_2.clone());
            ledger.grant(Role::Di(i + 1), pair.id(), Holding::Share(ShareIndex::Second));
        }
        islands[config.defense_helper].add_share(common.share_2.clone());
        ledger.grant(Role::Di(config.defense_helper + 1), common.id(), Holding::Share(ShareIndex::Second));
        user.add_share(user_key.share_2.clone());
        user.add_share(common.share_2.clone());
        ledger.grant(Role::Du, user_key.id(), Holding::SecretKey);
        ledger.grant(Role::Du, user_key.id(), Holding::Share(ShareIndex::Second));
        ledger.grant(Role::Du, common.id(), Holding::Share(ShareIndex::Second));

        Ok(Self {
            params,
            ring,
            cp,
            islands,
            user,
            user_share: common.share_2,
            ledger,
            defense_helper: config.defense_helper,
            #[cfg(feature = "audit")]
            audit,
        })
    }

    pub fn common_key(&self) -> KeyId {
        KeyId::new(COMMON_KEY)
    }

    pub fn user_key(&self) -> KeyId {
        KeyId::new(USER_KEY)
    }

    /// DU's second share of `pk`, used for the final joint decryption.
    pub fn user_share(&self) -> &TrapdoorShare {
        &self.user_share
    }

    /// Training side: island `i` answers for its own key, the defense helper for `pk`.
    pub fn training_context(&self, mode: TranscriptMode) -> Result<ProtocolContext<'_>, HarnessError> {
        let mut helpers = HelperDirectory::new();
        for (i, island) in self.islands.iter().enumerate() {
            helpers.route(island_key(i + 1), island)?;
        }
        helpers.route(self.common_key(), &self.islands[self.defense_helper])?;
        Ok(ProtocolContext {
            ring: &self.ring,
            initiator: &self.cp,
            helpers,
            common: self.common_key(),
            mode,
        })
    }

    /// Diagnosis side: DU answers for `pk_u` and `pk`.
    pub fn diagnosis_context(&self, mode: TranscriptMode) -> Result<ProtocolContext<'_>, HarnessError> {
        let mut helpers = HelperDirectory::new();
        helpers.route(self.user_key(), &self.user)?;
        helpers.route(self.common_key(), &self.user)?;
        Ok(ProtocolContext {
            ring: &self.ring,
            initiator: &self.cp,
            helpers,
            common: self.common_key(),
            mode,
        })
    }

    /// Public material only, for export.
    pub fn public_material(&self) -> KeyMaterial {
        KeyMaterial {
            params: self.params.clone(),
            records: self
                .ring
                .ids()
                .map(|id| KeyRecord::public_only(self.ring.get(id).expect("listed key")))
                .collect(),
        }
    }
}
