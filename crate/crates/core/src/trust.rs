//! Chain-of-trust verification for signed layer results.
//!
//! Three strategies are modelled:
//!
//! * [`verify_sequential`]: each validator signs its result together with
//!   the hash of its predecessor's record, and the chain is checked hop by
//!   hop.
//! * [`verify_accumulator_direct`]: every validator also sends its record
//!   straight to the accumulator, which compares those copies with the
//!   forwarded chain.
//! * [`verify_ttp`]: a trusted third party endorses each record and keeps
//!   the registry of participants.
//!
//! Signatures are abstract. The bundled [`KeyPair`] is a keyed SHA-256
//! digest, which gives the sign/verify contract without modelling real
//! asymmetric cryptography. Verification never mutates records.
//!
//! Parallel fan-in (several validators feeding one) has no chain form; it is
//! covered only by the accumulator's set comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::topology::NodeId;

pub type Digest = [u8; 32];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrustError {
    #[error("cannot verify an empty chain")]
    EmptyChain,
    #[error("the expected producer list is empty")]
    EmptyRoster,
    #[error("endorsement signed by {0}, which is not the trusted third party")]
    UnknownTtpKey(NodeId),
    #[error("malformed record encoding: {0}")]
    Malformed(&'static str),
}

pub fn digest(bytes: &[u8]) -> Digest {
    Sha256::digest(bytes).into()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<u8>);

pub trait Signer {
    fn id(&self) -> NodeId;
    fn sign(&self, message: &[u8]) -> Signature;
}

pub trait Verifier {
    fn verify(&self, message: &[u8], signature: &Signature) -> bool;
}

/// Deterministic keyed-digest key pair. The signature of `m` under secret
/// `k` is `SHA-256(k || m)`.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    id: NodeId,
    secret: [u8; 32],
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("id", &self.id).finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn from_secret(id: NodeId, secret: [u8; 32]) -> Self {
        Self { id, secret }
    }

    /// Derive a key from a node id and a seed.
    pub fn derive(id: NodeId, seed: u64) -> Self {
        let mut material = Vec::with_capacity(24);
        material.extend_from_slice(b"qudos-key");
        material.extend_from_slice(&id.0.to_be_bytes());
        material.extend_from_slice(&seed.to_be_bytes());
        Self { id, secret: digest(&material) }
    }

    pub fn generate<R: Rng + ?Sized>(id: NodeId, rng: &mut R) -> Self {
        let mut secret = [0u8; 32];
        rng.fill(&mut secret);
        Self { id, secret }
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        VerifyingKey { id: self.id, secret: self.secret }
    }

    fn mac(secret: &[u8; 32], message: &[u8]) -> Signature {
        let mut h = Sha256::new();
        h.update(secret);
        h.update(message);
        Signature(h.finalize().to_vec())
    }
}

impl Signer for KeyPair {
    fn id(&self) -> NodeId {
        self.id
    }

    fn sign(&self, message: &[u8]) -> Signature {
        Self::mac(&self.secret, message)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct VerifyingKey {
    id: NodeId,
    secret: [u8; 32],
}

impl fmt::Debug for VerifyingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VerifyingKey").field("id", &self.id).finish_non_exhaustive()
    }
}

impl VerifyingKey {
    pub fn id(&self) -> NodeId {
        self.id
    }
}

impl Verifier for VerifyingKey {
    fn verify(&self, message: &[u8], signature: &Signature) -> bool {
        KeyPair::mac(&self.secret, message) == *signature
    }
}

/// Verifying keys of known participants.
#[derive(Debug, Clone, Default)]
pub struct Keyring {
    keys: BTreeMap<NodeId, VerifyingKey>,
}

impl Keyring {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: VerifyingKey) {
        self.keys.insert(key.id, key);
    }

    pub fn get(&self, id: NodeId) -> Option<&VerifyingKey> {
        self.keys.get(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.keys.contains_key(&id)
    }
}

impl FromIterator<VerifyingKey> for Keyring {
    fn from_iter<I: IntoIterator<Item = VerifyingKey>>(iter: I) -> Self {
        let mut ring = Keyring::new();
        for k in iter {
            ring.insert(k);
        }
        ring
    }
}

/// A signed layer result.
///
/// Wire encoding, all integers big-endian:
///
/// ```text
/// producer      u64
/// payload_len   u32, then payload bytes
/// prev_flag     u8 (0 = absent, 1 = present), then 32 hash bytes if present
/// sig_len       u32, then signature bytes
/// ```
///
/// The signature covers the payload and previous-hash fields exactly as
/// encoded. The record digest is SHA-256 of the full encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustRecord {
    pub producer: NodeId,
    pub payload: Vec<u8>,
    pub prev_hash: Option<Digest>,
    pub signature: Signature,
}

fn signed_fields(payload: &[u8], prev_hash: Option<&Digest>) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + payload.len() + 33);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    match prev_hash {
        None => out.push(0),
        Some(h) => {
            out.push(1);
            out.extend_from_slice(h);
        }
    }
    out
}

impl TrustRecord {
    pub fn signing_bytes(&self) -> Vec<u8> {
        signed_fields(&self.payload, self.prev_hash.as_ref())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.producer.0.to_be_bytes());
        out.extend_from_slice(&self.signing_bytes());
        out.extend_from_slice(&(self.signature.0.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.signature.0);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TrustError> {
        let mut r = Reader { bytes, pos: 0 };
        let producer = NodeId(u64::from_be_bytes(r.take(8)?.try_into().unwrap()));
        let len = u32::from_be_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let payload = r.take(len)?.to_vec();
        let prev_hash = match r.take(1)?[0] {
            0 => None,
            1 => Some(r.take(32)?.try_into().unwrap()),
            _ => return Err(TrustError::Malformed("previous-hash flag must be 0 or 1")),
        };
        let sig_len = u32::from_be_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let signature = Signature(r.take(sig_len)?.to_vec());
        if r.pos != bytes.len() {
            return Err(TrustError::Malformed("trailing bytes"));
        }
        Ok(Self { producer, payload, prev_hash, signature })
    }

    pub fn digest(&self) -> Digest {
        digest(&self.encode())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TrustError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(TrustError::Malformed("truncated record"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

/// Sign `payload`, linking it to `predecessor` if there is one.
pub fn produce_record<S: Signer + ?Sized>(
    signer: &S,
    payload: Vec<u8>,
    predecessor: Option<&TrustRecord>,
) -> TrustRecord {
    let prev_hash = predecessor.map(TrustRecord::digest);
    let signature = signer.sign(&signed_fields(&payload, prev_hash.as_ref()));
    TrustRecord { producer: signer.id(), payload, prev_hash, signature }
}

/// Build a chain where record `i` is produced by `signers[i]`.
pub fn build_chain<S: Signer>(signers: &[S], payloads: Vec<Vec<u8>>) -> Vec<TrustRecord> {
    let mut chain: Vec<TrustRecord> = Vec::with_capacity(payloads.len());
    for (signer, payload) in signers.iter().zip(payloads) {
        let record = produce_record(signer, payload, chain.last());
        chain.push(record);
    }
    chain
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    SequentialChain,
    AccumulatorDirect,
    TrustedThirdParty,
}

impl Strategy {
    pub const ALL: [Strategy; 3] =
        [Strategy::SequentialChain, Strategy::AccumulatorDirect, Strategy::TrustedThirdParty];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::SequentialChain => "sequential",
            Strategy::AccumulatorDirect => "accumulator",
            Strategy::TrustedThirdParty => "ttp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Valid,
    TamperDetected,
    DropDetected,
    UnknownParticipant,
    /// Every check the strategy performs passed, yet the chain does not
    /// match the expected producers.
    Undetected,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerificationReport {
    pub strategy: Strategy,
    pub verdict: Verdict,
    /// Position in the verified chain, when the finding has one.
    pub offending_index: Option<usize>,
    /// Participant the finding concerns, when it has one.
    pub offending_producer: Option<NodeId>,
}

impl VerificationReport {
    fn valid(strategy: Strategy) -> Self {
        Self { strategy, verdict: Verdict::Valid, offending_index: None, offending_producer: None }
    }

    fn at(strategy: Strategy, verdict: Verdict, index: Option<usize>, producer: Option<NodeId>) -> Self {
        Self { strategy, verdict, offending_index: index, offending_producer: producer }
    }
}

/// How much of the expected roster [`verify_sequential`] enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainCheck {
    /// Only signatures and hash links are checked, as each validator would
    /// do for its predecessor. A roster mismatch is reported as
    /// [`Verdict::Undetected`].
    #[default]
    LinkOnly,
    /// Producers must match the expected roster exactly.
    EnforceRoster,
}

pub fn verify_sequential(
    chain: &[TrustRecord],
    expected_producers: &[NodeId],
    keys: &Keyring,
    check: ChainCheck,
) -> Result<VerificationReport, TrustError> {
    const S: Strategy = Strategy::SequentialChain;
    if chain.is_empty() {
        return Err(TrustError::EmptyChain);
    }
    if expected_producers.is_empty() {
        return Err(TrustError::EmptyRoster);
    }
    for (i, record) in chain.iter().enumerate() {
        let Some(key) = keys.get(record.producer) else {
            return Ok(VerificationReport::at(S, Verdict::UnknownParticipant, Some(i), Some(record.producer)));
        };
        if !key.verify(&record.signing_bytes(), &record.signature) {
            return Ok(VerificationReport::at(S, Verdict::TamperDetected, Some(i), Some(record.producer)));
        }
        let expected_prev = if i == 0 { None } else { Some(chain[i - 1].digest()) };
        if record.prev_hash != expected_prev {
            return Ok(VerificationReport::at(S, Verdict::TamperDetected, Some(i), Some(record.producer)));
        }
    }

    let producers: Vec<NodeId> = chain.iter().map(|r| r.producer).collect();
    if producers == expected_producers {
        return Ok(VerificationReport::valid(S));
    }
    // Locate the first divergence from the roster.
    let first_diff = producers
        .iter()
        .zip(expected_producers)
        .position(|(a, b)| a != b)
        .unwrap_or(producers.len().min(expected_producers.len()));
    match check {
        ChainCheck::LinkOnly => Ok(VerificationReport::at(S, Verdict::Undetected, Some(first_diff), None)),
        ChainCheck::EnforceRoster => {
            let present: BTreeSet<NodeId> = producers.iter().copied().collect();
            let expected: BTreeSet<NodeId> = expected_producers.iter().copied().collect();
            if let Some(stranger) = producers.iter().position(|p| !expected.contains(p)) {
                return Ok(VerificationReport::at(
                    S,
                    Verdict::UnknownParticipant,
                    Some(stranger),
                    Some(producers[stranger]),
                ));
            }
            let missing = expected_producers.iter().find(|p| !present.contains(p)).copied();
            let verdict = if missing.is_some() { Verdict::DropDetected } else { Verdict::TamperDetected };
            Ok(VerificationReport::at(S, verdict, Some(first_diff), missing))
        }
    }
}

/// Compare the forwarded chain with the copies each validator sent directly
/// to the accumulator.
pub fn verify_accumulator_direct(
    direct_copies: &[TrustRecord],
    forwarded_chain: &[TrustRecord],
    keys: &Keyring,
) -> VerificationReport {
    const S: Strategy = Strategy::AccumulatorDirect;
    let direct: BTreeMap<NodeId, &TrustRecord> = direct_copies.iter().map(|r| (r.producer, r)).collect();
    for (i, record) in forwarded_chain.iter().enumerate() {
        let known = keys.get(record.producer).filter(|_| direct.contains_key(&record.producer));
        let Some(key) = known else {
            return VerificationReport::at(S, Verdict::UnknownParticipant, Some(i), Some(record.producer));
        };
        if !key.verify(&record.signing_bytes(), &record.signature) {
            return VerificationReport::at(S, Verdict::TamperDetected, Some(i), Some(record.producer));
        }
    }
    let forwarded: BTreeMap<NodeId, (usize, &TrustRecord)> =
        forwarded_chain.iter().enumerate().map(|(i, r)| (r.producer, (i, r))).collect();
    if let Some(missing) = direct.keys().find(|p| !forwarded.contains_key(p)) {
        return VerificationReport::at(S, Verdict::DropDetected, None, Some(*missing));
    }
    for (producer, copy) in &direct {
        let (i, record) = forwarded[producer];
        let copy_ok = keys.get(*producer).is_some_and(|k| k.verify(&copy.signing_bytes(), &copy.signature));
        if !copy_ok || copy.payload != record.payload {
            return VerificationReport::at(S, Verdict::TamperDetected, Some(i), Some(*producer));
        }
    }
    VerificationReport::valid(S)
}

/// A trusted third party's signature over `(producer, record digest)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endorsement {
    pub endorser: NodeId,
    pub producer: NodeId,
    pub record_digest: Digest,
    pub signature: Signature,
}

fn endorsement_bytes(producer: NodeId, record_digest: &Digest) -> Vec<u8> {
    let mut out = Vec::with_capacity(40);
    out.extend_from_slice(&producer.0.to_be_bytes());
    out.extend_from_slice(record_digest);
    out
}

/// The trusted third party: a single logical signer holding the participant
/// registry. Distributing it over several nodes is not modelled.
#[derive(Debug, Clone)]
pub struct TrustedThirdParty {
    key: KeyPair,
    registered: Keyring,
}

impl TrustedThirdParty {
    pub fn new(key: KeyPair) -> Self {
        Self { key, registered: Keyring::new() }
    }

    pub fn id(&self) -> NodeId {
        self.key.id
    }

    pub fn register(&mut self, key: VerifyingKey) {
        self.registered.insert(key);
    }

    /// Endorse a record whose producer is registered and whose signature
    /// verifies. Anything else is refused.
    pub fn endorse(&self, record: &TrustRecord) -> Option<Endorsement> {
        let key = self.registered.get(record.producer)?;
        if !key.verify(&record.signing_bytes(), &record.signature) {
            return None;
        }
        let record_digest = record.digest();
        Some(Endorsement {
            endorser: self.key.id,
            producer: record.producer,
            record_digest,
            signature: self.key.sign(&endorsement_bytes(record.producer, &record_digest)),
        })
    }

    /// What a verifier needs to check this party's endorsements.
    pub fn directory(&self) -> TtpDirectory {
        TtpDirectory { ttp: self.key.verifying_key(), registered: self.registered.clone() }
    }
}

/// Public view of a trusted third party.
#[derive(Debug, Clone)]
pub struct TtpDirectory {
    pub ttp: VerifyingKey,
    pub registered: Keyring,
}

pub fn verify_ttp(
    chain: &[TrustRecord],
    endorsements: &[Endorsement],
    directory: &TtpDirectory,
) -> Result<VerificationReport, TrustError> {
    const S: Strategy = Strategy::TrustedThirdParty;
    if let Some(e) = endorsements.iter().find(|e| e.endorser != directory.ttp.id()) {
        return Err(TrustError::UnknownTtpKey(e.endorser));
    }
    for (i, record) in chain.iter().enumerate() {
        if !directory.registered.contains(record.producer) {
            return Ok(VerificationReport::at(S, Verdict::UnknownParticipant, Some(i), Some(record.producer)));
        }
    }
    for e in endorsements {
        if !directory.ttp.verify(&endorsement_bytes(e.producer, &e.record_digest), &e.signature) {
            let index = chain.iter().position(|r| r.producer == e.producer);
            return Ok(VerificationReport::at(S, Verdict::TamperDetected, index, Some(e.producer)));
        }
    }
    for (i, record) in chain.iter().enumerate() {
        let key = directory.registered.get(record.producer).expect("checked above");
        if !key.verify(&record.signing_bytes(), &record.signature) {
            return Ok(VerificationReport::at(S, Verdict::TamperDetected, Some(i), Some(record.producer)));
        }
    }
    let present: BTreeSet<NodeId> = chain.iter().map(|r| r.producer).collect();
    if let Some(e) = endorsements.iter().find(|e| !present.contains(&e.producer)) {
        return Ok(VerificationReport::at(S, Verdict::DropDetected, None, Some(e.producer)));
    }
    let endorsed: BTreeSet<Digest> = endorsements.iter().map(|e| e.record_digest).collect();
    for (i, record) in chain.iter().enumerate() {
        if !endorsed.contains(&record.digest()) {
            return Ok(VerificationReport::at(S, Verdict::TamperDetected, Some(i), Some(record.producer)));
        }
    }
    Ok(VerificationReport::valid(S))
}

/// Adversary actions applied to a finished chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    None,
    /// Flip one payload bit of one record in transit.
    Tamper,
    /// A corrupted validator discards every record before its own and
    /// re-signs its record as the new root.
    Drop,
    /// A node outside the roster inserts its own signed record.
    Inject,
}

impl Attack {
    pub const ALL: [Attack; 4] = [Attack::None, Attack::Tamper, Attack::Drop, Attack::Inject];
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attack::None => "none",
            Attack::Tamper => "tamper",
            Attack::Drop => "drop",
            Attack::Inject => "inject",
        })
    }
}

/// Documented outcome of each strategy under each attack.
pub fn expected_verdict(strategy: Strategy, attack: Attack) -> Verdict {
    match (strategy, attack) {
        (_, Attack::None) => Verdict::Valid,
        (_, Attack::Tamper) => Verdict::TamperDetected,
        (Strategy::SequentialChain, Attack::Drop) => Verdict::Undetected,
        (_, Attack::Drop) => Verdict::DropDetected,
        (_, Attack::Inject) => Verdict::UnknownParticipant,
    }
}

/// An honest run of a validator chain: the records, the copies sent to the
/// accumulator, and the third party's endorsements, plus the key material
/// needed to attack and verify them.
#[derive(Debug, Clone)]
pub struct TrustScenario {
    pub signers: Vec<KeyPair>,
    pub outsider: KeyPair,
    pub ttp: TrustedThirdParty,
    pub chain: Vec<TrustRecord>,
    pub direct_copies: Vec<TrustRecord>,
    pub endorsements: Vec<Endorsement>,
}

impl TrustScenario {
    /// Random chain of `length` records with random payloads.
    pub fn random<R: Rng + ?Sized>(length: usize, rng: &mut R) -> Self {
        let signers: Vec<KeyPair> = (0..length as u64).map(|i| KeyPair::generate(NodeId(i), rng)).collect();
        let payloads = (0..length)
            .map(|_| {
                let len = rng.random_range(1..=32);
                (0..len).map(|_| rng.random::<u8>()).collect()
            })
            .collect();
        let outsider = KeyPair::generate(NodeId(length as u64 + 1000), rng);
        let ttp_key = KeyPair::generate(NodeId(u64::MAX), rng);
        Self::from_parts(signers, payloads, outsider, ttp_key)
    }

    pub fn from_parts(signers: Vec<KeyPair>, payloads: Vec<Vec<u8>>, outsider: KeyPair, ttp_key: KeyPair) -> Self {
        let chain = build_chain(&signers, payloads);
        let mut ttp = TrustedThirdParty::new(ttp_key);
        for s in &signers {
            ttp.register(s.verifying_key());
        }
        let endorsements = chain.iter().filter_map(|r| ttp.endorse(r)).collect();
        Self { direct_copies: chain.clone(), signers, outsider, ttp, chain, endorsements }
    }

    pub fn keyring(&self) -> Keyring {
        self.signers.iter().map(KeyPair::verifying_key).collect()
    }

    pub fn roster(&self) -> Vec<NodeId> {
        self.signers.iter().map(|s| s.id).collect()
    }

    /// Apply `attack` to the forwarded chain. Direct copies and endorsements
    /// were issued before the attack and stay untouched.
    pub fn attacked_chain<R: Rng + ?Sized>(&self, attack: Attack, rng: &mut R) -> Vec<TrustRecord> {
        let mut chain = self.chain.clone();
        match attack {
            Attack::None => {}
            Attack::Tamper => {
                let i = rng.random_range(0..chain.len());
                let byte = rng.random_range(0..chain[i].payload.len());
                let bit = rng.random_range(0..8);
                chain[i].payload[byte] ^= 1 << bit;
            }
            Attack::Drop => {
                assert!(chain.len() >= 2, "a drop needs a predecessor to discard");
                let k = rng.random_range(1..chain.len());
                let mut rest = chain.split_off(k);
                rest[0] = produce_record(&self.signers[k], rest[0].payload.clone(), None);
                for i in 1..rest.len() {
                    // Successors accept and re-link to the new root.
                    let (head, tail) = rest.split_at_mut(i);
                    tail[0] = produce_record(&self.signers[k + i], tail[0].payload.clone(), head.last());
                }
                chain = rest;
            }
            Attack::Inject => {
                let at = rng.random_range(0..=chain.len());
                let prev = if at == 0 { None } else { chain.get(at - 1) };
                let forged = produce_record(&self.outsider, b"injected".to_vec(), prev);
                chain.insert(at, forged);
                // Later records are re-linked so the insertion is not a
                // plain hash mismatch.
                for i in at + 1..chain.len() {
                    let (head, tail) = chain.split_at_mut(i);
                    let producer = tail[0].producer.0 as usize;
                    tail[0] = produce_record(&self.signers[producer], tail[0].payload.clone(), head.last());
                }
            }
        }
        chain
    }

    pub fn verify(
        &self,
        strategy: Strategy,
        forwarded: &[TrustRecord],
    ) -> Result<VerificationReport, TrustError> {
        match strategy {
            Strategy::SequentialChain => {
                verify_sequential(forwarded, &self.roster(), &self.keyring(), ChainCheck::LinkOnly)
            }
            Strategy::AccumulatorDirect => {
                Ok(verify_accumulator_direct(&self.direct_copies, forwarded, &self.keyring()))
            }
            Strategy::TrustedThirdParty => verify_ttp(forwarded, &self.endorsements, &self.ttp.directory()),
        }
    }
}
