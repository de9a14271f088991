"""Two-round self-tallying aggregation.

Round 1: every party posts g^(x_ij) for fresh scalars x_ij plus a proof of
knowledge of each exponent.  From everyone's posts, party i derives its pad
keys

    h_ij = prod_{k<i} g^(x_kj)  /  prod_{k>i} g^(x_kj)

which satisfy prod_i h_ij^(x_ij) = 1 for every slot j.

Round 2: party i posts E[T_ij] = (g^(x_ij), g^(T_ij) h_ij^(x_ij)) - the same
x_ij, by construction - plus the validity bundle its policy demands.  The
slot-wise product of all posted second components collapses to g^(sum T_ij),
and a baby-step/giant-step search over the policy window recovers the sum.
No decryption key exists: the "key" cancels only when all n posts multiply.

A party that completes round 1 but never posts round 2 leaves the pads
uncancellable; tally() then fails naming the culprit, and the session must
abort (re-keying is out of scope).
"""

from dataclasses import dataclass

from . import rangeproof
from .dlog import DlogWindow, bsgs
from .elgamal import Ciphertext, Keypair, encrypt_exp
from .encoding import Reader, pack_u8, pack_u32
from .errors import InvalidRound1Proof, MalformedEncoding, MissingPost, ZorroError
from .groups import Group
from .rangeproof import BoundPolicy, L1RangeProof, L2RangeProof
from .sigma import DlogProof, FsTranscript, prove_dlog, verify_dlog

SESSION_BYTES = 16


@dataclass(frozen=True)
class ProtocolConfig:
    group: Group
    n: int
    m: int
    policy: BoundPolicy
    session: bytes

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two parties")
        if self.m < 1:
            raise ValueError("vector dimension must be at least 1")
        if len(self.session) != SESSION_BYTES:
            raise ValueError(f"session id must be {SESSION_BYTES} bytes")

    def base_context(self) -> FsTranscript:
        return FsTranscript(
            b"zorro.protocol.v1|" + self.group.group_id.encode() + b"|" + self.session
        )


@dataclass(frozen=True)
class Round1Secret:
    party: int
    x: tuple


@dataclass(frozen=True)
class Round1Post:
    party: int
    elements: tuple
    proofs: tuple

    def to_bytes(self, group) -> bytes:
        out = [b"\x11", pack_u32(self.party), pack_u32(len(self.elements))]
        out += [group.encode_element(e) for e in self.elements]
        out += [p.to_bytes(group) for p in self.proofs]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, group, data: bytes) -> "Round1Post":
        r = Reader(data)
        if r.u8() != 0x11:
            raise MalformedEncoding("not a round-1 post")
        party = r.u32()
        m = r.u32()
        if not 1 <= m <= 1 << 20:
            raise MalformedEncoding("implausible dimension")
        elements = tuple(group.decode_element(r.take(group.element_bytes)) for _ in range(m))
        proofs = tuple(DlogProof.read_from(group, r) for _ in range(m))
        r.expect_end()
        return cls(party, elements, proofs)


@dataclass(frozen=True)
class Round2Post:
    party: int
    cts: tuple
    bundle: object  # L1RangeProof | L2RangeProof | None

    def to_bytes(self, group) -> bytes:
        out = [b"\x12", pack_u32(self.party), pack_u32(len(self.cts))]
        out += [ct.to_bytes(group) for ct in self.cts]
        if self.bundle is None:
            out.append(pack_u8(0))
        elif isinstance(self.bundle, L1RangeProof):
            out.append(pack_u8(1))
            out.append(self.bundle.to_bytes(group))
        else:
            out.append(pack_u8(2))
            out.append(self.bundle.to_bytes(group))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, group, data: bytes) -> "Round2Post":
        r = Reader(data)
        if r.u8() != 0x12:
            raise MalformedEncoding("not a round-2 post")
        party = r.u32()
        m = r.u32()
        if not 1 <= m <= 1 << 20:
            raise MalformedEncoding("implausible dimension")
        cts = tuple(Ciphertext.read_from(group, r) for _ in range(m))
        kind = r.u8()
        if kind == 0:
            bundle = None
        elif kind == 1:
            bundle = L1RangeProof.read_from(group, r)
        elif kind == 2:
            bundle = L2RangeProof.read_from(group, r)
        else:
            raise MalformedEncoding(f"unknown bundle kind {kind}")
        r.expect_end()
        return cls(party, cts, bundle)


@dataclass(frozen=True)
class TallyResult:
    totals: tuple


def _by_party(cfg, posts) -> dict:
    table = {}
    for post in posts:
        table[post.party] = post
    for i in range(cfg.n):
        if i not in table:
            raise MissingPost(i)
    return table


def round1_generate(cfg: ProtocolConfig, party: int, rng):
    """Draw the m round-1 secrets and build the post carrying their proofs."""
    if not 0 <= party < cfg.n:
        raise ValueError(f"party index {party} out of range")
    group = cfg.group
    base = cfg.base_context()
    x, elements, proofs = [], [], []
    for j in range(cfg.m):
        xj = group.random_scalar(rng)
        Aj = group.g ** xj
        x.append(xj)
        elements.append(Aj)
        proofs.append(prove_dlog(group, xj, Aj, base.child(b"r1", party, j), rng))
    return Round1Secret(party, tuple(x)), Round1Post(party, tuple(elements), tuple(proofs))


def verify_round1(cfg: ProtocolConfig, post: Round1Post) -> bool:
    if len(post.elements) != cfg.m or len(post.proofs) != cfg.m:
        return False
    base = cfg.base_context()
    return all(
        verify_dlog(cfg.group, post.elements[j], post.proofs[j], base.child(b"r1", post.party, j))
        for j in range(cfg.m)
    )


def derive_pads(cfg: ProtocolConfig, round1_posts, party: int):
    """Pad keys h_ij for `party` from everyone's round-1 posts.

    All n posts must be present and every discrete-log proof must check out
    before any pad is trusted.
    """
    table = _by_party(cfg, round1_posts)
    base = cfg.base_context()
    for k in range(cfg.n):
        post = table[k]
        if len(post.elements) != cfg.m or len(post.proofs) != cfg.m:
            raise InvalidRound1Proof(k, 0)
        for j in range(cfg.m):
            if not verify_dlog(cfg.group, post.elements[j], post.proofs[j], base.child(b"r1", k, j)):
                raise InvalidRound1Proof(k, j)
    pads = []
    for j in range(cfg.m):
        h = cfg.group.identity
        for k in range(party):
            h = h * table[k].elements[j]
        for k in range(party + 1, cfg.n):
            h = h / table[k].elements[j]
        pads.append(h)
    return tuple(pads)


def round2_generate(
    cfg: ProtocolConfig, party: int, values, secret: Round1Secret, pads, keypair: Keypair, rng
) -> Round2Post:
    """Encrypt the contribution under the pad keys and attach the policy bundle.

    Encryption randomness is the round-1 secret x_ij; the pads only cancel
    because the exact same exponents reappear here.
    """
    if secret.party != party:
        raise ValueError("round-1 secret belongs to a different party")
    if len(values) != cfg.m:
        raise ValueError(f"expected {cfg.m} entries, got {len(values)}")
    group = cfg.group
    cts = tuple(
        encrypt_exp(group, values[j], secret.x[j], pads[j]) for j in range(cfg.m)
    )
    ctx = cfg.base_context().child(b"r2", party)
    if cfg.policy.kind == rangeproof.L1:
        bundle = rangeproof.prove_l1(group, values, secret.x, pads, keypair.pk, cfg.policy, ctx, rng)
    elif cfg.policy.kind == rangeproof.L2:
        bundle = rangeproof.prove_l2(group, values, secret.x, pads, keypair.pk, cfg.policy, ctx, rng)
    else:
        bundle = None
    return Round2Post(party, cts, bundle)


def verify_contribution(cfg: ProtocolConfig, round1_posts, post: Round2Post, pads=None):
    """Check one round-2 post against the re-derived pad keys.

    Returns (ok, reason).  Round-1 posts are a precondition: missing or
    invalid ones raise, they are not this contribution's fault.  Callers
    that already derived this party's pads may pass them to skip the
    re-derivation.
    """
    if len(post.cts) != cfg.m:
        return False, "malformed"
    if pads is None:
        pads = derive_pads(cfg, round1_posts, post.party)
    ctx = cfg.base_context().child(b"r2", post.party)
    if cfg.policy.kind == rangeproof.NONE:
        if post.bundle is not None:
            return False, "policy"
        return True, None
    if cfg.policy.kind == rangeproof.L1:
        if not isinstance(post.bundle, L1RangeProof):
            return False, "policy"
        return rangeproof.verify_l1(cfg.group, post.cts, post.bundle, cfg.policy, pads, ctx)
    if not isinstance(post.bundle, L2RangeProof):
        return False, "policy"
    return rangeproof.verify_l2(cfg.group, post.cts, post.bundle, cfg.policy, pads, ctx)


def verify_contribution_payload(cfg: ProtocolConfig, round1_posts, payload: bytes, pads=None):
    """Ledger-facing variant of verify_contribution: malformed payload bytes
    are a rejection, never an exception."""
    try:
        post = Round2Post.from_bytes(cfg.group, payload)
    except ZorroError:
        return False, "malformed"
    return verify_contribution(cfg, round1_posts, post, pads=pads)


def tally(cfg: ProtocolConfig, round2_posts, window: DlogWindow | None = None) -> TallyResult:
    """Self-tally: multiply everyone's second components and take small dlogs.

    The window defaults to what the policy implies; sessions without a
    policy must supply one.  A NotInWindow failure here means a corrupt
    contribution slipped past verification.
    """
    table = _by_party(cfg, round2_posts)
    if window is None:
        window = cfg.policy.tally_window(cfg.n)
    if window is None:
        raise ValueError("policy none implies no window; pass one explicitly")
    group = cfg.group
    totals = []
    for j in range(cfg.m):
        point = table[0].cts[j].B
        for i in range(1, cfg.n):
            point = point * table[i].cts[j].B
        totals.append(bsgs(group, point, window))
    return TallyResult(tuple(totals))


class Party:
    """One participant as an explicit state machine.

    States advance round1 -> pads -> round2 -> done; calling out of order
    raises.  The only inputs are public posts, mirroring the no-private-
    channels model.
    """

    def __init__(self, cfg: ProtocolConfig, index: int, rng):
        self.cfg = cfg
        self.index = index
        self.rng = rng
        self.keypair = Keypair.generate(cfg.group, rng)
        self._secret = None
        self._pads = None
        self._state = "new"

    @property
    def secret(self) -> Round1Secret:
        """This party's own round-1 secret (harness and test access)."""
        return self._secret

    @property
    def pads(self):
        return self._pads

    def round1(self) -> Round1Post:
        if self._state != "new":
            raise RuntimeError(f"round1 called in state {self._state}")
        self._secret, post = round1_generate(self.cfg, self.index, self.rng)
        self._state = "round1"
        return post

    def receive_round1(self, posts):
        if self._state != "round1":
            raise RuntimeError(f"receive_round1 called in state {self._state}")
        self._pads = derive_pads(self.cfg, posts, self.index)
        self._state = "pads"

    def round2(self, values) -> Round2Post:
        if self._state != "pads":
            raise RuntimeError(f"round2 called in state {self._state}")
        post = round2_generate(
            self.cfg, self.index, values, self._secret, self._pads, self.keypair, self.rng
        )
        self._state = "round2"
        return post

    def tally(self, posts, window=None) -> TallyResult:
        if self._state != "round2":
            raise RuntimeError(f"tally called in state {self._state}")
        return tally(self.cfg, posts, window)
