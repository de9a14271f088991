"""Composite validity proofs bounding the L2 or L1 norm of an encrypted vector.

Both proofs hang off the same trick: re-encrypt each slot under the prover's
own long-term key h_i (tied to the posted ciphertext by a DH-tuple proof),
then show the relevant quantity decomposes into proven bits.

L2 ("l2"): prove sum_j T_j^2 <= 2^L - 1.  The squares w_j are encrypted with
noise r_j that telescopes to zero across the vector and carries the digit
randomness, so the ledger equality

    prod_j E[w_j]  ==  prod_l E[s_l]^(2^l)

holds as an exact ciphertext identity exactly when sum w = sum 2^l s_l.
Square proofs tie every w_j to T_j^2 and bit proofs pin each digit.

L1 ("l1"): prove every element and their sum decompose into L proven bits,
hence each T_j >= 0 and sum_j T_j <= 2^L - 1.  Digit randomness is chosen to
recompose exactly, so both recompositions are plain ciphertext equalities:

    prod_l E[b_jl]^(2^l) == E*[T_j]      for every j
    prod_j E*[T_j]       == prod_l E[sigma_l]^(2^l)

The enforced bound is always the full digit range 2^L - 1; exact non-power
bounds would need set-membership machinery that is out of scope.
"""

import math
from dataclasses import dataclass

from .dlog import DlogWindow
from .elgamal import Ciphertext, encrypt_exp, hom_mul, hom_pow
from .encoding import Reader, pack_u8, pack_u32, pack_u64
from .errors import BoundExceeded, MalformedEncoding, NegativeEntry
from .sigma import (
    BitProof,
    DhTupleProof,
    SquareProof,
    prove_bit,
    prove_dh_tuple,
    prove_square,
    verify_bit,
    verify_dh_tuple,
    verify_square,
)

L1, L2, NONE = "l1", "l2", "none"

_KIND_CODES = {NONE: 0, L1: 1, L2: 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

# deserialization sanity caps
_MAX_DIM = 1 << 20
_MAX_DIGITS = 256


@dataclass(frozen=True)
class BoundPolicy:
    """Validity policy: which norm is bounded and by how much.

    The digit count L is the smallest width whose range covers the nominal
    bound B (inclusive); what the proof actually enforces is the full digit
    range, exposed as effective_bound.
    """

    kind: str
    B: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind != NONE and self.B < 1:
            raise ValueError("bound must be a positive integer")

    @classmethod
    def l1(cls, B: int) -> "BoundPolicy":
        return cls(L1, B)

    @classmethod
    def l2(cls, B: int) -> "BoundPolicy":
        return cls(L2, B)

    @classmethod
    def none(cls) -> "BoundPolicy":
        return cls(NONE, 0)

    @property
    def L(self) -> int:
        # ceil(log2(x + 1)) == x.bit_length(), exact for any size of B
        if self.kind == L1:
            return max(1, self.B.bit_length())
        if self.kind == L2:
            return max(1, (self.B * self.B).bit_length())
        return 0

    @property
    def effective_bound(self) -> int:
        """What the digit decomposition actually enforces: 2^L - 1."""
        return (1 << self.L) - 1 if self.kind != NONE else 0

    def tally_window(self, n: int) -> DlogWindow | None:
        """Search window for the n-party tally; None when unbounded."""
        if self.kind == L1:
            return DlogWindow(0, n * self.effective_bound)
        if self.kind == L2:
            per_party = math.isqrt(self.effective_bound)
            return DlogWindow(-n * per_party, n * per_party)
        return None

    def to_bytes(self) -> bytes:
        return pack_u8(_KIND_CODES[self.kind]) + pack_u64(self.B)

    @classmethod
    def read_from(cls, reader: Reader) -> "BoundPolicy":
        code = reader.u8()
        if code not in _KIND_NAMES:
            raise MalformedEncoding(f"unknown policy code {code}")
        B = reader.u64()
        kind = _KIND_NAMES[code]
        if kind == NONE and B != 0:
            raise MalformedEncoding("policy none carries no bound")
        return cls(kind, B)


def bits_of(value: int, width: int) -> list[int]:
    """Binary digits of value, least significant first, exactly `width` long."""
    if value < 0 or value >= 1 << width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return [(value >> l) & 1 for l in range(width)]


def noise_terms(group, xstar: list[int]) -> list[int]:
    """r_j = (sum_{k<j} x*_k - sum_{k>j} x*_k) * x*_j; telescopes to zero."""
    q = group.q
    total = sum(xstar) % q
    terms = []
    prefix = 0
    for x in xstar:
        suffix = (total - prefix - x) % q
        terms.append((prefix - suffix) * x % q)
        prefix = (prefix + x) % q
    return terms


# -- re-encryption link -------------------------------------------------------


def reencryption_link(group, t: int, x: int, h_pad, h_i, ctx, rng):
    """Re-encrypt t under h_i with the same randomness x used under h_pad,
    and prove both ciphertexts carry the same plaintext.

    Returns (E*[t], proof).  The proof statement is the DH 4-tuple
    (g, h_pad/h_i, g^x, (h_pad/h_i)^x): the posted and re-encrypted
    ciphertexts differ exactly by that last factor in their second slot.
    """
    base = h_pad / h_i
    if base == group.identity:
        raise ValueError("degenerate link: pad key equals long-term key")
    ct_star = encrypt_exp(group, t, x, h_i)
    statement = (group.g, base, group.g ** x, base ** x)
    return ct_star, prove_dh_tuple(group, x, statement, ctx, rng)


def verify_reencryption_link(group, ct: Ciphertext, ct_star: Ciphertext, h_pad, h_i, proof, ctx) -> bool:
    if ct.A != ct_star.A:
        return False
    base = h_pad / h_i
    if base == group.identity:
        return False
    statement = (group.g, base, ct.A, ct.B / ct_star.B)
    return verify_dh_tuple(group, statement, proof, ctx)


# -- L2 norm bound ------------------------------------------------------------


@dataclass(frozen=True)
class L2RangeProof:
    policy: BoundPolicy
    h_i: object
    reencrypted: tuple        # E*[T_j]; padded with encryptions of 0 past m
    links: tuple              # DH-tuple proofs, one per real slot
    digit_cts: tuple          # E[s_l], L of them
    digit_proofs: tuple       # bit proofs for the digits
    square_cts: tuple         # E[w_j], one per (padded) slot
    square_proofs: tuple      # square-relation proofs, aligned with square_cts

    def to_bytes(self, group) -> bytes:
        m = len(self.links)
        out = [b"\x05", self.policy.to_bytes(), pack_u32(m), group.encode_element(self.h_i)]
        out += [ct.to_bytes(group) for ct in self.reencrypted]
        out += [p.to_bytes(group) for p in self.links]
        out += [ct.to_bytes(group) for ct in self.digit_cts]
        out += [p.to_bytes(group) for p in self.digit_proofs]
        out += [ct.to_bytes(group) for ct in self.square_cts]
        out += [p.to_bytes(group) for p in self.square_proofs]
        return b"".join(out)

    @classmethod
    def read_from(cls, group, reader: Reader) -> "L2RangeProof":
        tag = reader.u8()
        if tag != 0x05:
            raise MalformedEncoding(f"expected L2 bundle tag, got {tag:#x}")
        policy = BoundPolicy.read_from(reader)
        if policy.kind != L2:
            raise MalformedEncoding("bundle policy is not l2")
        m = reader.u32()
        if not 1 <= m <= _MAX_DIM or policy.L > _MAX_DIGITS:
            raise MalformedEncoding("implausible bundle dimensions")
        L = policy.L
        m_ext = _extended_len(m, L)
        h_i = group.decode_element(reader.take(group.element_bytes))
        reenc = tuple(Ciphertext.read_from(group, reader) for _ in range(m_ext))
        links = tuple(DhTupleProof.read_from(group, reader) for _ in range(m))
        digit_cts = tuple(Ciphertext.read_from(group, reader) for _ in range(L))
        digit_proofs = tuple(BitProof.read_from(group, reader) for _ in range(L))
        square_cts = tuple(Ciphertext.read_from(group, reader) for _ in range(m_ext))
        square_proofs = tuple(SquareProof.read_from(group, reader) for _ in range(m_ext))
        return cls(policy, h_i, reenc, links, digit_cts, digit_proofs, square_cts, square_proofs)


def _extended_len(m: int, L: int) -> int:
    # the digit randomness rides on the first L square-ciphertext slots, so
    # the w-vector must be strictly longer than L
    return m if m > L else L + 1


def prove_l2(group, values, x, pad_keys, h_i, policy: BoundPolicy, ctx, rng) -> L2RangeProof:
    """Build the L2 validity bundle for `values` posted with randomness `x`
    under pad keys `pad_keys`, re-encrypted under the prover's key h_i.

    Refuses with BoundExceeded when sum of squares exceeds the effective
    bound 2^L - 1.
    """
    if policy.kind != L2:
        raise ValueError("policy kind must be l2")
    m, L = len(values), policy.L
    s = sum(t * t for t in values)
    if s > policy.effective_bound:
        raise BoundExceeded(f"sum of squares {s} > {policy.effective_bound}")

    m_ext = _extended_len(m, L)
    padded = list(values) + [0] * (m_ext - m)
    x_all = list(x) + [group.random_scalar(rng) for _ in range(m_ext - m)]

    reenc, links = [], []
    for j in range(m):
        ct_star, link = reencryption_link(
            group, values[j], x[j], pad_keys[j], h_i, ctx.child(b"link", j), rng
        )
        reenc.append(ct_star)
        links.append(link)
    for j in range(m, m_ext):
        reenc.append(encrypt_exp(group, 0, x_all[j], h_i))

    digits = bits_of(s, L)
    x_digits = [group.random_scalar(rng) for _ in range(L)]
    digit_cts, digit_proofs = [], []
    for l in range(L):
        ct = encrypt_exp(group, digits[l], x_digits[l], h_i)
        digit_cts.append(ct)
        digit_proofs.append(
            prove_bit(group, digits[l], x_digits[l], ct, h_i, ctx.child(b"bit", l), rng)
        )

    xstar = [group.random_scalar(rng) for _ in range(m_ext)]
    noise = noise_terms(group, xstar)
    square_cts, square_proofs = [], []
    for j in range(m_ext):
        r_w = noise[j]
        if j < L:
            r_w = (r_w + x_digits[j] * (1 << j)) % group.q
        w = padded[j] * padded[j]
        ct_w = encrypt_exp(group, w, r_w, h_i)
        square_cts.append(ct_w)
        square_proofs.append(
            prove_square(
                group, padded[j], x_all[j], r_w, reenc[j], ct_w, h_i,
                ctx.child(b"square", j), rng,
            )
        )

    return L2RangeProof(
        policy, h_i, tuple(reenc), tuple(links), tuple(digit_cts),
        tuple(digit_proofs), tuple(square_cts), tuple(square_proofs),
    )


def verify_l2(group, posted_cts, proof: L2RangeProof, policy: BoundPolicy, pad_keys, ctx):
    """Check an L2 bundle against the posted ciphertexts.

    Returns (ok, reason); reason names the first failed check, one of
    "policy", "malformed", "tuple", "consistency", "bit", "square".
    """
    if proof.policy != policy:
        return False, "policy"
    m, L = len(posted_cts), policy.L
    m_ext = _extended_len(m, L)
    if (
        len(proof.reencrypted) != m_ext
        or len(proof.links) != m
        or len(proof.digit_cts) != L
        or len(proof.digit_proofs) != L
        or len(proof.square_cts) != m_ext
        or len(proof.square_proofs) != m_ext
        or len(pad_keys) != m
    ):
        return False, "malformed"

    for j in range(m):
        if not verify_reencryption_link(
            group, posted_cts[j], proof.reencrypted[j], pad_keys[j], proof.h_i,
            proof.links[j], ctx.child(b"link", j),
        ):
            return False, "tuple"

    lhs = proof.square_cts[0]
    for ct in proof.square_cts[1:]:
        lhs = hom_mul(lhs, ct)
    rhs = proof.digit_cts[0]
    for l in range(1, L):
        rhs = hom_mul(rhs, hom_pow(proof.digit_cts[l], 1 << l))
    if lhs != rhs:
        return False, "consistency"

    for l in range(L):
        if not verify_bit(
            group, proof.digit_cts[l], proof.h_i, proof.digit_proofs[l], ctx.child(b"bit", l)
        ):
            return False, "bit"

    for j in range(m_ext):
        if not verify_square(
            group, proof.reencrypted[j], proof.square_cts[j], proof.h_i,
            proof.square_proofs[j], ctx.child(b"square", j),
        ):
            return False, "square"

    return True, None


# -- L1 norm bound with non-negativity ----------------------------------------


@dataclass(frozen=True)
class L1RangeProof:
    policy: BoundPolicy
    h_i: object
    reencrypted: tuple        # E*[T_j]
    links: tuple              # DH-tuple proofs
    element_digit_cts: tuple  # m x L ciphertexts E[b_jl]
    element_digit_proofs: tuple
    sum_digit_cts: tuple      # L ciphertexts E[sigma_l]
    sum_digit_proofs: tuple

    def to_bytes(self, group) -> bytes:
        m = len(self.links)
        out = [b"\x06", self.policy.to_bytes(), pack_u32(m), group.encode_element(self.h_i)]
        out += [ct.to_bytes(group) for ct in self.reencrypted]
        out += [p.to_bytes(group) for p in self.links]
        for row in self.element_digit_cts:
            out += [ct.to_bytes(group) for ct in row]
        for row in self.element_digit_proofs:
            out += [p.to_bytes(group) for p in row]
        out += [ct.to_bytes(group) for ct in self.sum_digit_cts]
        out += [p.to_bytes(group) for p in self.sum_digit_proofs]
        return b"".join(out)

    @classmethod
    def read_from(cls, group, reader: Reader) -> "L1RangeProof":
        tag = reader.u8()
        if tag != 0x06:
            raise MalformedEncoding(f"expected L1 bundle tag, got {tag:#x}")
        policy = BoundPolicy.read_from(reader)
        if policy.kind != L1:
            raise MalformedEncoding("bundle policy is not l1")
        m = reader.u32()
        if not 1 <= m <= _MAX_DIM or policy.L > _MAX_DIGITS:
            raise MalformedEncoding("implausible bundle dimensions")
        L = policy.L
        h_i = group.decode_element(reader.take(group.element_bytes))
        reenc = tuple(Ciphertext.read_from(group, reader) for _ in range(m))
        links = tuple(DhTupleProof.read_from(group, reader) for _ in range(m))
        elem_cts = tuple(
            tuple(Ciphertext.read_from(group, reader) for _ in range(L)) for _ in range(m)
        )
        elem_proofs = tuple(
            tuple(BitProof.read_from(group, reader) for _ in range(L)) for _ in range(m)
        )
        sum_cts = tuple(Ciphertext.read_from(group, reader) for _ in range(L))
        sum_proofs = tuple(BitProof.read_from(group, reader) for _ in range(L))
        return cls(policy, h_i, reenc, links, elem_cts, elem_proofs, sum_cts, sum_proofs)


def _digit_randomness(group, target: int, width: int, rng) -> list[int]:
    """Scalars rho_l with sum_l 2^l rho_l = target (mod q)."""
    rho = [group.random_scalar(rng) for _ in range(width)]
    rho[0] = (target - sum(rho[l] << l for l in range(1, width))) % group.q
    return rho


def prove_l1(group, values, x, pad_keys, h_i, policy: BoundPolicy, ctx, rng) -> L1RangeProof:
    """Build the L1 + non-negativity bundle.

    Refuses with NegativeEntry on any negative element and BoundExceeded
    when the element sum exceeds 2^L - 1.
    """
    if policy.kind != L1:
        raise ValueError("policy kind must be l1")
    if any(t < 0 for t in values):
        raise NegativeEntry("l1 policy admits only non-negative entries")
    total = sum(values)
    if total > policy.effective_bound:
        raise BoundExceeded(f"element sum {total} > {policy.effective_bound}")
    digits = [bits_of(t, policy.L) for t in values]
    sum_digits = bits_of(total, policy.L)
    return _build_l1(group, values, digits, sum_digits, x, pad_keys, h_i, policy, ctx, rng)


def _build_l1(group, values, digits, sum_digits, x, pad_keys, h_i, policy, ctx, rng) -> L1RangeProof:
    # digit lists are taken as given so tests can force dishonest bundles
    m, L = len(values), policy.L
    reenc, links = [], []
    for j in range(m):
        ct_star, link = reencryption_link(
            group, values[j], x[j], pad_keys[j], h_i, ctx.child(b"link", j), rng
        )
        reenc.append(ct_star)
        links.append(link)

    elem_cts, elem_proofs = [], []
    for j in range(m):
        rho = _digit_randomness(group, x[j], L, rng)
        row_cts, row_proofs = [], []
        for l in range(L):
            ct = encrypt_exp(group, digits[j][l], rho[l], h_i)
            row_cts.append(ct)
            row_proofs.append(
                prove_bit(
                    group, digits[j][l], rho[l], ct, h_i, ctx.child(b"bit", j, l), rng
                )
            )
        elem_cts.append(tuple(row_cts))
        elem_proofs.append(tuple(row_proofs))

    rho_sum = _digit_randomness(group, sum(x) % group.q, L, rng)
    sum_cts, sum_proofs = [], []
    for l in range(L):
        ct = encrypt_exp(group, sum_digits[l], rho_sum[l], h_i)
        sum_cts.append(ct)
        sum_proofs.append(
            prove_bit(group, sum_digits[l], rho_sum[l], ct, h_i, ctx.child(b"sumbit", l), rng)
        )

    return L1RangeProof(
        policy, h_i, tuple(reenc), tuple(links), tuple(elem_cts),
        tuple(elem_proofs), tuple(sum_cts), tuple(sum_proofs),
    )


def verify_l1(group, posted_cts, proof: L1RangeProof, policy: BoundPolicy, pad_keys, ctx):
    """Check an L1 bundle against the posted ciphertexts.

    Returns (ok, reason); reason is one of "policy", "malformed", "tuple",
    "element", "bit", "sum", "sum_bit".
    """
    if proof.policy != policy:
        return False, "policy"
    m, L = len(posted_cts), policy.L
    if (
        len(proof.reencrypted) != m
        or len(proof.links) != m
        or len(proof.element_digit_cts) != m
        or len(proof.element_digit_proofs) != m
        or any(len(row) != L for row in proof.element_digit_cts)
        or any(len(row) != L for row in proof.element_digit_proofs)
        or len(proof.sum_digit_cts) != L
        or len(proof.sum_digit_proofs) != L
        or len(pad_keys) != m
    ):
        return False, "malformed"

    for j in range(m):
        if not verify_reencryption_link(
            group, posted_cts[j], proof.reencrypted[j], pad_keys[j], proof.h_i,
            proof.links[j], ctx.child(b"link", j),
        ):
            return False, "tuple"

    for j in range(m):
        acc = proof.element_digit_cts[j][0]
        for l in range(1, L):
            acc = hom_mul(acc, hom_pow(proof.element_digit_cts[j][l], 1 << l))
        if acc != proof.reencrypted[j]:
            return False, "element"

    for j in range(m):
        for l in range(L):
            if not verify_bit(
                group, proof.element_digit_cts[j][l], proof.h_i,
                proof.element_digit_proofs[j][l], ctx.child(b"bit", j, l),
            ):
                return False, "bit"

    lhs = proof.reencrypted[0]
    for ct in proof.reencrypted[1:]:
        lhs = hom_mul(lhs, ct)
    rhs = proof.sum_digit_cts[0]
    for l in range(1, L):
        rhs = hom_mul(rhs, hom_pow(proof.sum_digit_cts[l], 1 << l))
    if lhs != rhs:
        return False, "sum"

    for l in range(L):
        if not verify_bit(
            group, proof.sum_digit_cts[l], proof.h_i, proof.sum_digit_proofs[l],
            ctx.child(b"sumbit", l),
        ):
            return False, "sum_bit"

    return True, None
