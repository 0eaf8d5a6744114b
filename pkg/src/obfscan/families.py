"""Functionality families for corpus generation.

Each family builds a seeded variant of one small algorithm plus a Python
reference implementation; generated variants must agree with the reference
on every argument tuple. All families follow one register/memory discipline
so every obfuscation pass has something to chew on:

- only R0..R7 (plus SP/BP addressing) appear in family code;
- fixed locals live in BP slots -1..-15 and are statically stored then loaded;
- array regions stay within BP-16..-63; computed bases sit at the low end
  of a region and indices grow toward -16, never crossing into the locals;
- every function has >= 3 blocks, >= 1 const, >= 1 mov, bounded loops.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .mir import MASK64, Function
from .mir.textfmt import parse_function

M = MASK64


@dataclass(frozen=True)
class Family:
    name: str
    arity: int
    build: Callable  # rng -> (Function, reference callable)


def _parse(text: str) -> Function:
    return parse_function(text)


def _build_factorial(rng: random.Random):
    k = rng.randrange(9, 13)
    c1 = rng.getrandbits(16)

    def ref(x):
        n = x % k
        acc = 1
        for i in range(1, n + 1):
            acc = (acc * i) & M
        return (acc + c1) & M

    fn = _parse(f"""func factorial(R0) tag=factorial
block entry:
  const R1, 0x1
  const R2, 0x1
  umod R3, R0, {k:#x}
  store [BP-1], R1
  jump check
block check:
  cmp_lt R4, R3, R2
  branch R4, exit, body
block body:
  load R5, [BP-1]
  mul R5, R5, R2
  store [BP-1], R5
  add R2, R2, 0x1
  jump check
block exit:
  load R6, [BP-1]
  add R6, R6, {c1:#x}
  mov R7, R6
  ret R7
""")
    return fn, ref


def _build_fibonacci(rng: random.Random):
    k = rng.randrange(11, 19)
    c1 = rng.getrandbits(16)

    def ref(x):
        n = x % k
        a, b = 0, 1
        for _ in range(n):
            a, b = b, (a + b) & M
        return (a + c1) & M

    fn = _parse(f"""func fibonacci(R0) tag=fibonacci
block entry:
  const R1, 0x0
  const R2, 0x1
  umod R3, R0, {k:#x}
  const R4, 0x0
  store [BP-2], R2
  jump check
block check:
  cmp_lt R5, R4, R3
  branch R5, body, exit
block body:
  load R6, [BP-2]
  add R7, R1, R6
  mov R1, R6
  store [BP-2], R7
  add R4, R4, 0x1
  jump check
block exit:
  mov R5, R1
  add R5, R5, {c1:#x}
  ret R5
""")
    return fn, ref


def _build_gcd(rng: random.Random):
    k1 = rng.randrange(500, 2000)
    k2 = rng.randrange(500, 2000)
    c0 = rng.getrandbits(12)

    def ref(x, y):
        a, b = x % k1, y % k2
        start = a
        while b != 0:
            a, b = b, a % b
        return (start + a + c0) & M

    fn = _parse(f"""func gcd(R0, R1) tag=gcd
block entry:
  umod R2, R0, {k1:#x}
  umod R3, R1, {k2:#x}
  store [BP-1], R2
  jump check
block check:
  cmp_eq R4, R3, 0x0
  branch R4, exit, body
block body:
  umod R5, R2, R3
  mov R2, R3
  mov R3, R5
  jump check
block exit:
  const R7, {c0:#x}
  load R6, [BP-1]
  add R6, R6, R2
  add R6, R6, R7
  ret R6
""")
    return fn, ref


def _fill_ref(x, n, a, b, c):
    return [((x * a + i * b + c) & 0xFFFF) for i in range(n)]


def _build_bubble_sort(rng: random.Random):
    n = rng.choice([4, 5])
    a, b, c = (rng.getrandbits(16) | 1 for _ in range(3))

    def ref(x):
        vals = _fill_ref(x, n, a, b, c)
        for _ in range(n - 1):
            for j in range(n - 1):
                if vals[j + 1] < vals[j]:
                    vals[j], vals[j + 1] = vals[j + 1], vals[j]
        acc = 0
        for i, v in enumerate(vals):
            acc = (acc + v * (i + 1)) & M
        return acc

    fn = _parse(f"""func bubble_sort(R0) tag=bubble_sort
block entry:
  mul R1, R0, {a:#x}
  add R1, R1, {c:#x}
  const R2, 0x0
  store [BP-1], R2
  jump fill_check
block fill_check:
  cmp_lt R3, R2, {n:#x}
  branch R3, fill_body, sort_init
block fill_body:
  mul R5, R2, {b:#x}
  add R5, R5, R1
  and R5, R5, 0xffff
  mov R6, BP
  add R6, R6, {-(15 + n)}
  add R6, R6, R2
  store [R6+0], R5
  add R2, R2, 0x1
  jump fill_check
block sort_init:
  const R2, 0x0
  jump outer_check
block outer_check:
  cmp_lt R3, R2, {n - 1:#x}
  branch R3, inner_init, sum_init
block inner_init:
  const R4, 0x0
  jump inner_check
block inner_check:
  cmp_lt R3, R4, {n - 1:#x}
  branch R3, inner_body, outer_inc
block inner_body:
  mov R5, BP
  add R5, R5, {-(15 + n)}
  add R5, R5, R4
  load R6, [R5+0]
  load R7, [R5+1]
  cmp_lt R3, R7, R6
  branch R3, do_swap, inner_inc
block do_swap:
  store [R5+0], R7
  store [R5+1], R6
  jump inner_inc
block inner_inc:
  add R4, R4, 0x1
  jump inner_check
block outer_inc:
  add R2, R2, 0x1
  jump outer_check
block sum_init:
  const R2, 0x0
  jump sum_check
block sum_check:
  cmp_lt R3, R2, {n:#x}
  branch R3, sum_body, exit
block sum_body:
  mov R5, BP
  add R5, R5, {-(15 + n)}
  add R5, R5, R2
  load R6, [R5+0]
  add R1, R2, 0x1
  mul R6, R6, R1
  load R1, [BP-1]
  add R1, R1, R6
  store [BP-1], R1
  add R2, R2, 0x1
  jump sum_check
block exit:
  load R1, [BP-1]
  ret R1
""")
    return fn, ref


def _build_insertion_sort(rng: random.Random):
    n = rng.choice([4, 5])
    a, b, c = (rng.getrandbits(16) | 1 for _ in range(3))
    d = rng.getrandbits(8) | 1
    e = rng.getrandbits(8)

    def ref(x):
        vals = _fill_ref(x, n, a, b, c)
        for i in range(1, n):
            key = vals[i]
            jj = i
            while jj > 0 and key < vals[jj - 1]:
                vals[jj] = vals[jj - 1]
                jj -= 1
            vals[jj] = key
        acc = 0
        for i, v in enumerate(vals):
            acc = (acc + (v ^ ((i * d + e) & M))) & M
        return acc

    fn = _parse(f"""func insertion_sort(R0) tag=insertion_sort
block entry:
  mul R1, R0, {a:#x}
  add R1, R1, {c:#x}
  const R2, 0x0
  store [BP-1], R2
  jump fill_check
block fill_check:
  cmp_lt R3, R2, {n:#x}
  branch R3, fill_body, sort_init
block fill_body:
  mul R5, R2, {b:#x}
  add R5, R5, R1
  and R5, R5, 0xffff
  mov R6, BP
  add R6, R6, {-(15 + n)}
  add R6, R6, R2
  store [R6+0], R5
  add R2, R2, 0x1
  jump fill_check
block sort_init:
  const R2, 0x1
  jump outer_check
block outer_check:
  cmp_lt R3, R2, {n:#x}
  branch R3, outer_body, sum_init
block outer_body:
  mov R5, BP
  add R5, R5, {-(15 + n)}
  add R5, R5, R2
  load R1, [R5+0]
  mov R4, R2
  jump wh_check
block wh_check:
  cmp_eq R3, R4, 0x0
  branch R3, place, wh_load
block wh_load:
  mov R5, BP
  add R5, R5, {-(15 + n)}
  add R5, R5, R4
  load R6, [R5-1]
  cmp_lt R3, R1, R6
  branch R3, wh_shift, place
block wh_shift:
  store [R5+0], R6
  sub R4, R4, 0x1
  jump wh_check
block place:
  mov R5, BP
  add R5, R5, {-(15 + n)}
  add R5, R5, R4
  store [R5+0], R1
  add R2, R2, 0x1
  jump outer_check
block sum_init:
  const R2, 0x0
  jump sum_check
block sum_check:
  cmp_lt R3, R2, {n:#x}
  branch R3, sum_body, exit
block sum_body:
  mov R5, BP
  add R5, R5, {-(15 + n)}
  add R5, R5, R2
  load R6, [R5+0]
  mul R7, R2, {d:#x}
  add R7, R7, {e:#x}
  xor R6, R6, R7
  load R7, [BP-1]
  add R7, R7, R6
  store [BP-1], R7
  add R2, R2, 0x1
  jump sum_check
block exit:
  load R1, [BP-1]
  ret R1
""")
    return fn, ref


def _build_binary_search(rng: random.Random):
    s = rng.getrandbits(12) | 1
    t = rng.getrandbits(12)
    c1 = rng.getrandbits(8) | 1
    c2 = rng.getrandbits(12)
    c3 = rng.getrandbits(12)

    def ref(x):
        arr = [i * s + t for i in range(8)]
        key = (x % 8) * s + t
        lo, hi = 0, 8
        result = c3
        while lo < hi:
            mid = (lo + hi) >> 1
            if arr[mid] < key:
                lo = mid + 1
            elif key < arr[mid]:
                hi = mid
            else:
                result = (mid * c1 + c2) & M
                break
        return result

    fn = _parse(f"""func binary_search(R0) tag=binary_search
block entry:
  const R7, {c3:#x}
  store [BP-1], R7
  const R2, 0x0
  jump fill_check
block fill_check:
  cmp_lt R3, R2, 0x8
  branch R3, fill_body, prep
block fill_body:
  mul R6, R2, {s:#x}
  add R6, R6, {t:#x}
  mov R5, BP
  add R5, R5, -23
  add R5, R5, R2
  store [R5+0], R6
  add R2, R2, 0x1
  jump fill_check
block prep:
  umod R1, R0, 0x8
  mul R1, R1, {s:#x}
  add R1, R1, {t:#x}
  const R2, 0x0
  const R4, 0x8
  jump bs_check
block bs_check:
  cmp_lt R3, R2, R4
  branch R3, bs_body, exit
block bs_body:
  add R5, R2, R4
  shr R5, R5, 0x1
  mov R6, BP
  add R6, R6, -23
  add R6, R6, R5
  load R7, [R6+0]
  cmp_lt R3, R7, R1
  branch R3, go_right, bs_left
block go_right:
  add R2, R5, 0x1
  jump bs_check
block bs_left:
  cmp_lt R3, R1, R7
  branch R3, go_left, found
block go_left:
  mov R4, R5
  jump bs_check
block found:
  mul R5, R5, {c1:#x}
  add R5, R5, {c2:#x}
  store [BP-1], R5
  jump exit
block exit:
  load R6, [BP-1]
  ret R6
""")
    return fn, ref


def _build_fnv_hash(rng: random.Random):
    rounds = rng.randrange(5, 9)
    offset = rng.getrandbits(32) | 1
    prime = rng.getrandbits(24) | 0x101

    def ref(x):
        h = offset
        v = x
        for _ in range(rounds):
            h = ((h ^ (v & 0xFF)) * prime) & M
            v >>= 8
        return h

    fn = _parse(f"""func fnv_hash(R0) tag=fnv_hash
block entry:
  const R1, {offset:#x}
  store [BP-1], R1
  const R2, 0x0
  mov R3, R0
  jump check
block check:
  cmp_lt R4, R2, {rounds:#x}
  branch R4, body, exit
block body:
  and R5, R3, 0xff
  load R6, [BP-1]
  xor R6, R6, R5
  mul R6, R6, {prime:#x}
  store [BP-1], R6
  shr R3, R3, 0x8
  add R2, R2, 0x1
  jump check
block exit:
  load R7, [BP-1]
  ret R7
""")
    return fn, ref


def _build_crc_mix(rng: random.Random):
    rounds = rng.randrange(8, 13)
    poly = rng.getrandbits(32) | 0x80000001

    def ref(x):
        r = x
        for _ in range(rounds):
            if r & 1:
                r = (r >> 1) ^ poly
            else:
                r >>= 1
        return (x ^ r) & M

    fn = _parse(f"""func crc_mix(R0) tag=crc_mix
block entry:
  mov R1, R0
  const R2, 0x0
  store [BP-2], R1
  jump check
block check:
  cmp_lt R3, R2, {rounds:#x}
  branch R3, body, exit
block body:
  and R4, R1, 0x1
  cmp_eq R5, R4, 0x0
  branch R5, even, odd
block odd:
  shr R1, R1, 0x1
  xor R1, R1, {poly:#x}
  jump inc
block even:
  shr R1, R1, 0x1
  jump inc
block inc:
  add R2, R2, 0x1
  jump check
block exit:
  load R6, [BP-2]
  xor R6, R6, R1
  ret R6
""")
    return fn, ref


def _build_modexp(rng: random.Random):
    m = (rng.getrandbits(16) | 1) + 2  # odd, >= 3
    if m % 2 == 0:
        m += 1
    ebits = rng.randrange(4, 7)
    emask = (1 << ebits) - 1
    c2 = rng.getrandbits(12)

    def ref(b, e):
        base = b % m
        ee = e & emask
        res = 1
        while ee != 0:
            if ee & 1:
                res = (res * base) % m
            base = (base * base) % m
            ee >>= 1
        return (res + c2) & M

    fn = _parse(f"""func modexp(R0, R1) tag=modexp
block entry:
  umod R2, R0, {m:#x}
  and R1, R1, {emask:#x}
  const R4, 0x1
  store [BP-1], R4
  jump check
block check:
  cmp_eq R3, R1, 0x0
  branch R3, exit, body
block body:
  and R5, R1, 0x1
  cmp_eq R3, R5, 0x0
  branch R3, square, mulres
block mulres:
  load R4, [BP-1]
  mul R4, R4, R2
  umod R4, R4, {m:#x}
  store [BP-1], R4
  jump square
block square:
  mul R2, R2, R2
  umod R2, R2, {m:#x}
  shr R1, R1, 0x1
  jump check
block exit:
  load R4, [BP-1]
  add R4, R4, {c2:#x}
  mov R5, R4
  ret R5
""")
    return fn, ref


def _build_minmax_scan(rng: random.Random):
    n = rng.choice([5, 6])
    a = rng.getrandbits(12) | 1
    b = rng.getrandbits(12)
    d = rng.getrandbits(16)

    def ref(x):
        vals = [(((x >> i) & M) * a + b) & 0xFFFF for i in range(n)]
        lo = hi = vals[0]
        for v in vals[1:]:
            if v < lo:
                lo = v
            if hi < v:
                hi = v
        return ((hi - lo) ^ d) & M

    fn = _parse(f"""func minmax_scan(R0) tag=minmax_scan
block entry:
  const R2, 0x0
  jump fill_check
block fill_check:
  cmp_lt R3, R2, {n:#x}
  branch R3, fill_body, init_mm
block fill_body:
  shr R1, R0, R2
  mul R1, R1, {a:#x}
  add R1, R1, {b:#x}
  and R1, R1, 0xffff
  mov R4, BP
  add R4, R4, {-(15 + n)}
  add R4, R4, R2
  store [R4+0], R1
  add R2, R2, 0x1
  jump fill_check
block init_mm:
  mov R4, BP
  add R4, R4, {-(15 + n)}
  load R1, [R4+0]
  store [BP-1], R1
  store [BP-2], R1
  const R2, 0x1
  jump scan_check
block scan_check:
  cmp_lt R3, R2, {n:#x}
  branch R3, scan_body, exit
block scan_body:
  mov R4, BP
  add R4, R4, {-(15 + n)}
  add R4, R4, R2
  load R1, [R4+0]
  load R5, [BP-1]
  cmp_lt R3, R1, R5
  branch R3, new_min, chk_max
block new_min:
  store [BP-1], R1
  jump chk_max
block chk_max:
  load R5, [BP-2]
  cmp_lt R3, R5, R1
  branch R3, new_max, scan_inc
block new_max:
  store [BP-2], R1
  jump scan_inc
block scan_inc:
  add R2, R2, 0x1
  jump scan_check
block exit:
  load R1, [BP-2]
  load R5, [BP-1]
  sub R1, R1, R5
  xor R1, R1, {d:#x}
  ret R1
""")
    return fn, ref


def _build_strlen_scan(rng: random.Random):
    c1 = rng.getrandbits(8) | 1
    c2 = rng.getrandbits(12)
    sh = rng.choice([3, 5, 7])

    def ref(x):
        vals = [(((x >> (i * sh)) & 0x7F) + 1) for i in range(8)]
        vals[x % 8] = 0
        count = 0
        while count < 8 and vals[count] != 0:
            count += 1
        return (count * c1 + c2) & M

    fn = _parse(f"""func strlen_scan(R0) tag=strlen_scan
block entry:
  const R7, {c2:#x}
  store [BP-1], R7
  const R2, 0x0
  jump fill_check
block fill_check:
  cmp_lt R3, R2, 0x8
  branch R3, fill_body, sentinel
block fill_body:
  mul R1, R2, {sh:#x}
  shr R1, R0, R1
  and R1, R1, 0x7f
  add R1, R1, 0x1
  mov R4, BP
  add R4, R4, -23
  add R4, R4, R2
  store [R4+0], R1
  add R2, R2, 0x1
  jump fill_check
block sentinel:
  umod R1, R0, 0x8
  mov R4, BP
  add R4, R4, -23
  add R4, R4, R1
  const R5, 0x0
  store [R4+0], R5
  const R2, 0x0
  jump scan_check
block scan_check:
  cmp_lt R3, R2, 0x8
  branch R3, scan_body, done
block scan_body:
  mov R4, BP
  add R4, R4, -23
  add R4, R4, R2
  load R1, [R4+0]
  cmp_eq R3, R1, 0x0
  branch R3, done, scan_inc
block scan_inc:
  add R2, R2, 0x1
  jump scan_check
block done:
  mul R6, R2, {c1:#x}
  load R7, [BP-1]
  add R6, R6, R7
  ret R6
""")
    return fn, ref


def _build_matmul2(rng: random.Random):
    p = rng.getrandbits(16) | 1
    w = [rng.getrandbits(8) | 1 for _ in range(4)]

    def ref(x):
        a = [(x >> (8 * k)) & 0xFF for k in range(4)]
        xb = (x * p) & M
        b = [(xb >> (8 * k)) & 0xFF for k in range(4)]
        c00 = (a[0] * b[0] + a[1] * b[2]) & M
        c01 = (a[0] * b[1] + a[1] * b[3]) & M
        c10 = (a[2] * b[0] + a[3] * b[2]) & M
        c11 = (a[2] * b[1] + a[3] * b[3]) & M
        return (c00 * w[0] + c01 * w[1] + c10 * w[2] + c11 * w[3]) & M

    lines = ["func matmul2(R0) tag=matmul2", "block fill_a:", "  mov R1, R0"]
    for k in range(4):
        lines += [f"  shr R2, R1, {8 * k:#x}", "  and R2, R2, 0xff",
                  f"  store [BP-{16 + k}], R2"]
    lines += ["  jump fill_b", "block fill_b:", f"  mul R1, R0, {p:#x}"]
    for k in range(4):
        lines += [f"  shr R2, R1, {8 * k:#x}", "  and R2, R2, 0xff",
                  f"  store [BP-{20 + k}], R2"]
    lines += ["  jump compute", "block compute:"]
    prods = [("-2", 16, 20, 17, 22), ("-3", 16, 21, 17, 23),
             ("-4", 18, 20, 19, 22), ("-5", 18, 21, 19, 23)]
    for slot, ai, bi, aj, bj in prods:
        lines += [f"  load R1, [BP-{ai}]", f"  load R2, [BP-{bi}]",
                  "  mul R3, R1, R2",
                  f"  load R1, [BP-{aj}]", f"  load R2, [BP-{bj}]",
                  "  mul R4, R1, R2", "  add R3, R3, R4",
                  f"  store [BP{slot}], R3"]
    lines += ["  jump sum", "block sum:", "  const R5, 0x0"]
    for k in range(4):
        lines += [f"  load R1, [BP-{2 + k}]", f"  mul R1, R1, {w[k]:#x}",
                  "  add R5, R5, R1"]
    lines += ["  jump exit", "block exit:", "  ret R5"]
    return _parse("\n".join(lines) + "\n"), ref


FAMILIES = {
    f.name: f for f in [
        Family("factorial", 1, _build_factorial),
        Family("fibonacci", 1, _build_fibonacci),
        Family("gcd", 2, _build_gcd),
        Family("bubble_sort", 1, _build_bubble_sort),
        Family("insertion_sort", 1, _build_insertion_sort),
        Family("binary_search", 1, _build_binary_search),
        Family("fnv_hash", 1, _build_fnv_hash),
        Family("crc_mix", 1, _build_crc_mix),
        Family("modexp", 2, _build_modexp),
        Family("minmax_scan", 1, _build_minmax_scan),
        Family("strlen_scan", 1, _build_strlen_scan),
        Family("matmul2", 1, _build_matmul2),
    ]
}

FAMILY_NAMES = tuple(FAMILIES)


def build_family(name: str, rng: random.Random):
    """Build one seeded variant: returns (function, reference)."""
    return FAMILIES[name].build(rng)
