use std::borrow::Cow;

use num_bigint::{BigInt, RandBigInt};
use num_traits::One;
use rand::Rng;

use super::session::ProtocolSession;
use super::{Payload, PayloadKind, ProtocolError, ProtocolKind, ProtocolMessage};
use crate::crypto::{
    ct_add, ct_neg, ct_scalar_mul, enc_residue, sdec, trivial_residue, Ciphertext, KeyId, ScaleTag,
};

/// Outcome of a secure comparison `a` vs `b`: `res = 0` iff `a >= b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComparisonResult {
    pub res: u8,
}

impl ComparisonResult {
    pub fn left_is_less(self) -> bool {
        self.res == 1
    }
}

/// Re-encrypts `c` under `dst` without either party seeing the plaintext.
pub fn stra(session: &mut ProtocolSession<'_, '_>, c: &Ciphertext, dst: &KeyId) -> Result<Ciphertext, ProtocolError> {
    session.begin(ProtocolKind::Stra);
    let params = session.params();
    let src_pk = session.public_key(&c.key)?;
    let dst_pk = session.public_key(dst)?;
    let helper = session.helper(&c.key)?;
    let cp = session.initiator();
    let share = cp.share(&c.key)?;

    let r = params.random_residue(&mut session.cp_rng);
    let blind = enc_residue(params, src_pk, &r, c.tag, &mut session.cp_rng);
    let blinded = ct_add(params, c, &blind)?;
    let partial = sdec(params, share, &blinded)?;
    let request = [
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::BlindedCiphertext, Payload::Ciphertext(blinded)),
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::PartialDecryption, Payload::Partial(partial)),
    ];
    let reencrypted = exchange(session, ProtocolKind::Stra, &request, dst)?;
    let reencrypted = expect_ciphertext(ProtocolKind::Stra, reencrypted, dst)?;

    let unblind = ct_neg(params, &enc_residue(params, dst_pk, &r, c.tag, &mut session.cp_rng));
    Ok(ct_add(params, &reencrypted, &unblind)?)
}

/// `c` under the session's common key, running STRA only when needed.
pub fn normalize<'c>(
    session: &mut ProtocolSession<'_, '_>,
    c: &'c Ciphertext,
) -> Result<Cow<'c, Ciphertext>, ProtocolError> {
    let common = session.common();
    if &c.key == common {
        Ok(Cow::Borrowed(c))
    } else {
        Ok(Cow::Owned(stra(session, c, common)?))
    }
}

/// `[[a + b]]` under the common key. The caller keeps `|a + b|` within the domain.
pub fn sadd(session: &mut ProtocolSession<'_, '_>, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, ProtocolError> {
    session.begin(ProtocolKind::Sadd);
    same_tag(a, b)?;
    let a = normalize(session, a)?;
    let b = normalize(session, b)?;
    Ok(ct_add(session.params(), &a, &b)?)
}

/// `[[a · b]]` under the common key, for unit-scale operands.
pub fn smul(session: &mut ProtocolSession<'_, '_>, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, ProtocolError> {
    session.begin(ProtocolKind::Smul);
    same_tag(a, b)?;
    if a.tag != ScaleTag::Unit {
        return Err(ProtocolError::ScaledProduct(a.tag));
    }
    let a = normalize(session, a)?;
    let b = normalize(session, b)?;
    let params = session.params();
    let common = session.common();
    let pk = session.public_key(common)?;
    let helper = session.helper(common)?;
    let cp = session.initiator();
    let share = cp.share(common)?;

    let r_a = params.random_residue(&mut session.cp_rng);
    let r_b = params.random_residue(&mut session.cp_rng);
    let a_blinded = ct_add(params, &a, &enc_residue(params, pk, &r_a, ScaleTag::Unit, &mut session.cp_rng))?;
    let b_blinded = ct_add(params, &b, &enc_residue(params, pk, &r_b, ScaleTag::Unit, &mut session.cp_rng))?;
    let a_partial = sdec(params, share, &a_blinded)?;
    let b_partial = sdec(params, share, &b_blinded)?;
    let request = [
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::BlindedCiphertext, Payload::Ciphertext(a_blinded)),
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::PartialDecryption, Payload::Partial(a_partial)),
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::BlindedCiphertext, Payload::Ciphertext(b_blinded)),
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::PartialDecryption, Payload::Partial(b_partial)),
    ];
    let product = exchange(session, ProtocolKind::Smul, &request, common)?;
    let product = expect_ciphertext(ProtocolKind::Smul, product, common)?;

    // (a + r_a)(b + r_b) - r_b·a - r_a·b - r_a·r_b = a·b
    let cross_a = ct_scalar_mul(params, &a, &-BigInt::from(r_b.clone()));
    let cross_b = ct_scalar_mul(params, &b, &-BigInt::from(r_a.clone()));
    let constant = params.residue_of(&-BigInt::from(r_a * r_b));
    let constant = trivial_residue(params, common, &constant, ScaleTag::Unit);
    let out = ct_add(params, &product, &cross_a)?;
    let out = ct_add(params, &out, &cross_b)?;
    Ok(ct_add(params, &out, &constant)?)
}

/// Secure comparison; CP learns `res` and nothing else about `a` and `b`.
pub fn scom(
    session: &mut ProtocolSession<'_, '_>,
    a: &Ciphertext,
    b: &Ciphertext,
) -> Result<ComparisonResult, ProtocolError> {
    session.begin(ProtocolKind::Scom);
    same_tag(a, b)?;
    let a = normalize(session, a)?;
    let b = normalize(session, b)?;
    let params = session.params();
    let common = session.common();
    let helper = session.helper(common)?;
    let cp = session.initiator();
    let share = cp.share(common)?;

    let flip: bool = session.cp_rng.gen();
    let bound = BigInt::one() << params.blind_bits();
    let magnitude = session.cp_rng.gen_bigint_range(&BigInt::one(), &(bound + 1));
    let k = if flip { -&magnitude } else { magnitude.clone() };
    // k·(2a - 2b + 1)
    // Raise (a - b) or (b - a) to |2k| so only one inversion is needed.
    let (top, bottom) = if flip { (&b, &a) } else { (&a, &b) };
    let difference = ct_add(params, top, &ct_neg(params, bottom))?;
    let d = ct_scalar_mul(params, &difference, &(&magnitude * 2));
    let d = ct_add(params, &d, &trivial_residue(params, common, &params.residue_of(&k), a.tag))?;
    let partial = sdec(params, share, &d)?;
    let request = [
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::BlindedCiphertext, Payload::Ciphertext(d)),
        ProtocolSession::message(&cp.id, &helper.id, PayloadKind::PartialDecryption, Payload::Partial(partial)),
    ];
    let reply = exchange(session, ProtocolKind::Scom, &request, common)?;
    let negative = match reply.payload {
        Payload::Bit(bit @ (0 | 1)) => bit,
        _ => return Err(malformed(ProtocolKind::Scom, "expected a comparison bit")),
    };
    Ok(ComparisonResult {
        res: negative ^ u8::from(flip),
    })
}

/// Sends `request` to the helper for the operands' key and records its reply.
fn exchange(
    session: &mut ProtocolSession<'_, '_>,
    protocol: ProtocolKind,
    request: &[ProtocolMessage],
    target: &KeyId,
) -> Result<ProtocolMessage, ProtocolError> {
    let key = match &request[0].payload {
        Payload::Ciphertext(c) => c.key.clone(),
        _ => return Err(malformed(protocol, "request must open with a ciphertext")),
    };
    let helper = session.helper(&key)?;
    let target = session.public_key(target)?;
    for message in request {
        session.send(protocol, message);
    }
    let mut rng = session.helper_rng(helper, session.seq());
    let reply = helper.handle(session.params(), protocol, request, target, &mut rng)?;
    session.send(protocol, &reply);
    Ok(reply)
}

fn expect_ciphertext(protocol: ProtocolKind, reply: ProtocolMessage, key: &KeyId) -> Result<Ciphertext, ProtocolError> {
    match reply.payload {
        Payload::Ciphertext(c) if &c.key == key => Ok(c),
        _ => Err(malformed(protocol, "expected a re-encryption under the target key")),
    }
}

fn same_tag(a: &Ciphertext, b: &Ciphertext) -> Result<(), ProtocolError> {
    if a.tag != b.tag {
        return Err(ProtocolError::TagMismatch(a.tag, b.tag));
    }
    Ok(())
}

fn malformed(protocol: ProtocolKind, detail: &str) -> ProtocolError {
    ProtocolError::MalformedRequest {
        protocol,
        detail: detail.to_string(),
    }
}
