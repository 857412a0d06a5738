"""secp256k1 group arithmetic.

Everything here is exact integer math on the standard curve
y^2 = x^3 + 7 over GF(P).  Points at the API boundary are affine
``(x, y)`` tuples of ints with ``None`` for the point at infinity;
internally operations run in Jacobian coordinates so that a scalar
multiplication costs one field inversion instead of hundreds.

Multiplications by the generator use a precomputed 4-bit window table
(64 windows x 15 points, built once at import), which makes signing
several times faster than the generic ladder.  If gmpy2 is importable
its mpz type is used for the field elements, which roughly halves the
cost of a generic scalar multiplication; results are identical either
way.

This module is deliberately not constant-time: inputs are pseudonym
and number-plate material that the caller already knows, not long-term
signing keys, and the surrounding protocol never handles secrets whose
timing could leak anything useful.
"""

try:  # pragma: no cover - exercised implicitly on hosts with gmpy2
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    _mpz = int

# Domain parameters (SEC 2 v2, section 2.4.1).
P = _mpz(0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F)
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = _mpz(0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798)
GY = _mpz(0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8)

_ZERO = _mpz(0)
_ONE = _mpz(1)

INFINITY = None


def _jac_double(X1, Y1, Z1):
    if not Y1:
        return (_ZERO, _ZERO, _ZERO)
    A = (X1 * X1) % P
    B = (Y1 * Y1) % P
    C = (B * B) % P
    t = X1 + B
    D = (2 * (t * t - A - C)) % P
    E = (3 * A) % P
    X3 = (E * E - 2 * D) % P
    Y3 = (E * (D - X3) - 8 * C) % P
    Z3 = (2 * Y1 * Z1) % P
    return (X3, Y3, Z3)


def _jac_add(X1, Y1, Z1, X2, Y2, Z2):
    if not Z1:
        return (X2, Y2, Z2)
    if not Z2:
        return (X1, Y1, Z1)
    Z1Z1 = (Z1 * Z1) % P
    Z2Z2 = (Z2 * Z2) % P
    U1 = (X1 * Z2Z2) % P
    U2 = (X2 * Z1Z1) % P
    S1 = (Y1 * Z2 * Z2Z2) % P
    S2 = (Y2 * Z1 * Z1Z1) % P
    H = (U2 - U1) % P
    R = (S2 - S1) % P
    if not H:
        if not R:
            return _jac_double(X1, Y1, Z1)
        return (_ZERO, _ZERO, _ZERO)
    HH = (H * H) % P
    HHH = (H * HH) % P
    V = (U1 * HH) % P
    X3 = (R * R - HHH - 2 * V) % P
    Y3 = (R * (V - X3) - S1 * HHH) % P
    Z3 = (Z1 * Z2 * H) % P
    return (X3, Y3, Z3)


def _jac_add_affine(X1, Y1, Z1, x2, y2):
    # Mixed addition, second operand affine (Z2 = 1); saves four field mults.
    if not Z1:
        return (x2, y2, _ONE)
    Z1Z1 = (Z1 * Z1) % P
    U2 = (x2 * Z1Z1) % P
    S2 = (y2 * Z1 * Z1Z1) % P
    H = (U2 - X1) % P
    R = (S2 - Y1) % P
    if not H:
        if not R:
            return _jac_double(X1, Y1, Z1)
        return (_ZERO, _ZERO, _ZERO)
    HH = (H * H) % P
    HHH = (H * HH) % P
    V = (X1 * HH) % P
    X3 = (R * R - HHH - 2 * V) % P
    Y3 = (R * (V - X3) - Y1 * HHH) % P
    Z3 = (Z1 * H) % P
    return (X3, Y3, Z3)


def _jac_to_affine(X, Y, Z):
    if not Z:
        return INFINITY
    zinv = pow(Z, P - 2, P)
    zinv2 = (zinv * zinv) % P
    return (int((X * zinv2) % P), int((Y * zinv2 * zinv) % P))


def _build_base_table():
    """15 odd-and-even multiples of G per 4-bit window, in affine form.

    TABLE[w][d-1] = (d << (4*w)) * G.  A single batched inversion
    (Montgomery's trick) normalizes all 960 points at once.
    """
    jac = []
    row_base = (GX, GY, _ONE)
    for _ in range(64):
        entry = row_base
        row = [entry]
        for _ in range(14):
            entry = _jac_add(*entry, *row_base)
            row.append(entry)
        jac.append(row)
        row_base = entry  # 15 * base
        row_base = _jac_add(*row_base, *jac[-1][0])  # 16 * base
    # Batch-normalize.
    zs = [pt[2] for row in jac for pt in row]
    prefix = [_ONE]
    for z in zs:
        prefix.append((prefix[-1] * z) % P)
    inv = pow(prefix[-1], P - 2, P)
    invs = [None] * len(zs)
    for i in range(len(zs) - 1, -1, -1):
        invs[i] = (prefix[i] * inv) % P
        inv = (inv * zs[i]) % P
    table = []
    flat = 0
    for row in jac:
        arow = []
        for X, Y, Z in row:
            zinv = invs[flat]
            flat += 1
            zinv2 = (zinv * zinv) % P
            arow.append(((X * zinv2) % P, (Y * zinv2 * zinv) % P))
        table.append(arow)
    return table


_BASE_TABLE = _build_base_table()


def scalar_mult_base(k):
    """k * G via the fixed-base window table.  0 < k < N expected."""
    acc = (_ZERO, _ZERO, _ZERO)
    w = 0
    while k:
        d = k & 15
        if d:
            acc = _jac_add_affine(*acc, *_BASE_TABLE[w][d - 1])
        k >>= 4
        w += 1
    return _jac_to_affine(*acc)


def scalar_mult(k, point):
    """k * point for an arbitrary affine point (4-bit window ladder)."""
    if point is INFINITY or k % N == 0:
        return INFINITY
    x, y = _mpz(point[0]), _mpz(point[1])
    pre = [None] * 16
    pre[1] = (x, y, _ONE)
    pre[2] = _jac_double(x, y, _ONE)
    for i in range(3, 16):
        pre[i] = _jac_add_affine(*pre[i - 1], x, y)
    acc = (_ZERO, _ZERO, _ZERO)
    started = False
    for shift in range((k.bit_length() + 3) & ~3, -1, -4):
        if started:
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
        d = (k >> shift) & 15
        if d:
            acc = _jac_add(*acc, *pre[d])
            started = True
    return _jac_to_affine(*acc)


def point_add(p, q):
    if p is INFINITY:
        return q
    if q is INFINITY:
        return p
    r = _jac_add(_mpz(p[0]), _mpz(p[1]), _ONE, _mpz(q[0]), _mpz(q[1]), _ONE)
    return _jac_to_affine(*r)


def double_mult(u1, u2, point):
    """u1 * G + u2 * point, the shape every key recovery needs."""
    a = scalar_mult_base(u1 % N) if u1 % N else INFINITY
    b = scalar_mult(u2 % N, point)
    return point_add(a, b)


def is_on_curve(point):
    if point is INFINITY:
        return False
    x, y = point
    return 0 <= x < P and 0 <= y < P and (y * y - x * x * x - 7) % P == 0


def lift_x(x, odd_y):
    """Recover the curve point with the given x and y parity.

    Returns None when x is not the abscissa of any curve point.
    """
    if not 0 <= x < P:
        return None
    rhs = (pow(_mpz(x), 3, P) + 7) % P
    y = pow(rhs, (P + 1) >> 2, P)  # works since P % 4 == 3
    if (y * y) % P != rhs:
        return None
    if bool(y & 1) != bool(odd_y):
        y = P - y
    return (int(x), int(y))


def compress(point):
    """SEC 1 compressed encoding (33 bytes)."""
    x, y = point
    return bytes([2 | (y & 1)]) + int(x).to_bytes(32, "big")


def decompress(data):
    if len(data) != 33 or data[0] not in (2, 3):
        raise ValueError("bad compressed point")
    point = lift_x(int.from_bytes(data[1:], "big"), data[0] == 3)
    if point is None:
        raise ValueError("x not on curve")
    return point
