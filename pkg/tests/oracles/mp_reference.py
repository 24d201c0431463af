"""High-precision reference losses written directly from the formulas.

Pure mpmath, no numpy and no code shared with the package. Gradients come
from mpmath's numerical differentiation at 40 digits, so they check the
hand-derived kernels independently. No clamping: instances keep every
probability well inside (eps, 1 - eps).
"""

import mpmath as mp

mp.mp.dps = 40


def sig(x):
    return 1 / (1 + mp.exp(-x))


def _entropy(z, t, fg_g, bg_g, margin, fg_w=1, bg_w=1):
    total = mp.mpf(0)
    for zi, ti in zip(z, t):
        P = sig(zi)
        if ti:
            total += -fg_w * (1 - P) ** fg_g * mp.log(sig(zi - margin))
        else:
            total += -bg_w * P**bg_g * mp.log(1 - P)
    return total / len(z)


def _counts(z, t):
    P = [sig(v) for v in z]
    tp = sum(p for p, ti in zip(P, t) if ti)
    fn = sum(1 - p for p, ti in zip(P, t) if ti)
    fp = sum(p for p, ti in zip(P, t) if not ti)
    return P, tp, fn, fp


def tversky_complement(z, t, delta, smooth):
    # smoothing split in half so delta = 0.5 is the Dice coefficient
    _, tp, fn, fp = _counts(z, t)
    s = mp.mpf(smooth) / 2
    ti = (tp + s) / (tp + delta * fn + (1 - delta) * fp + s)
    return 1 - ti


def dice_complement(z, t, smooth, squared=False):
    P = [sig(v) for v in z]
    inter = sum(p * ti for p, ti in zip(P, t))
    if squared:
        den = sum(ti * ti for ti in t) + sum(p * p for p in P) + smooth
    else:
        den = sum(t) + sum(P) + smooth
    return 1 - (2 * inter + smooth) / den


def _compound(e, r, lam):
    if lam is None:
        return e + r
    return lam * e + (1 - lam) * r


def loss(kind, z, t, p):
    """Loss value for flattened logits ``z`` and mask ``t``; ``p`` is a params dict."""
    g, d, gt, m, lam, s = (p["gamma_hat"], p["delta"], p["gamma_tv"], p["margin"], p["lambda"], p["smooth"])
    ft = lambda: tversky_complement(z, t, d, s) ** gt
    table = {
        "BCE": lambda: _entropy(z, t, 0, 0, 0),
        "FOCAL": lambda: _entropy(z, t, g, g, 0),
        "ASYM_FOCAL": lambda: _entropy(z, t, 0, g, 0),
        "ASYM_LARGE_MARGIN": lambda: _entropy(z, t, 0, 0, m),
        "ASYM_FOCAL_MARGIN": lambda: _entropy(z, t, 0, g, m),
        "SYM_FOCAL_MARGIN": lambda: _entropy(z, t, g, g, m),
        "DICE_SORENSEN": lambda: dice_complement(z, t, s),
        "DICE_SQUARED": lambda: dice_complement(z, t, s, squared=True),
        "TVERSKY": lambda: tversky_complement(z, t, d, s),
        "FOCAL_TVERSKY": ft,
        "ASYM_FOCAL_TVERSKY": lambda: tversky_complement(z, t, d, s) ** (1 - gt),
        "BCEDICE": lambda: _compound(_entropy(z, t, 0, 0, 0), dice_complement(z, t, s), lam),
        "HYBRID_FOCAL": lambda: _compound(_entropy(z, t, 0, g, 0), ft(), lam),
        "OURS": lambda: _compound(_entropy(z, t, 0, g, m), ft(), lam),
        "SYM_HYBRID_FOCAL_MARGIN": lambda: _compound(_entropy(z, t, g, g, m), ft(), lam),
        "SYM_UNIFIED_FOCAL": lambda: _compound(_entropy(z, t, 1 - gt, 1 - gt, 0, d, 1 - d), ft(), lam),
        "ASYM_UNIFIED_FOCAL": lambda: _compound(
            _entropy(z, t, 0, gt, 0, d, 1 - d), tversky_complement(z, t, d, s) ** (1 - gt), lam
        ),
    }
    return table[kind]()


def gradient(kind, z, t, p):
    out = []
    for i in range(len(z)):
        def f(x, i=i):
            zz = list(z)
            zz[i] = x
            return loss(kind, zz, t, p)

        out.append(mp.diff(f, z[i]))
    return out
