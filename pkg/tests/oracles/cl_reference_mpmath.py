"""High-precision oracle for the Cramer-Lundberg reference model (drift 1.5, unit-rate
exponential claims, refraction rate 0.25 above level 1).

Independent of the package: roots come from the quadratic c l^2 + (c - 1 - q) l - q,
convolutions from mpmath quadrature at 30 digits.  Run it to regenerate the
frozen constants used in the test-suite (takes ~30 s).
"""
import mpmath as mp
mp.mp.dps = 30
C, ALPHA, B = mp.mpf('1.5'), mp.mpf('0.25'), mp.mpf(1)

def roots(c, q):
    # c l^2 + (c-1-q) l - q = 0
    return mp.polyroots([c, c - 1 - q, -q])

def Wfun(c, q):
    rs = roots(c, q)
    dpsi = lambda l: c - 1 / (l + 1) ** 2
    terms = [(1 / dpsi(r), r) for r in rs]
    return lambda x: mp.mpf(0) if x < 0 else mp.fsum(k * mp.e ** (r * x) for k, r in terms)

def Wprime(c, q):
    rs = roots(c, q)
    dpsi = lambda l: c - 1 / (l + 1) ** 2
    return lambda x: mp.fsum(r / dpsi(r) * mp.e ** (r * x) for r in rs)

def Zfun(c, q):
    W = Wfun(c, q)
    if q == 0:
        return lambda x: mp.mpf(1)
    return lambda x: mp.mpf(1) if x <= 0 else 1 + q * mp.quad(W, [0, x])

def little_w(q, a=0):
    W, Wp, WW = Wfun(C, q), Wprime(C, q), Wfun(C - ALPHA, q)
    def f(x):
        base = W(x - a)
        if x < B:
            return base
        return base + ALPHA * mp.quad(lambda y: WW(x - y) * Wp(y - a), [B, x])
    return f

def little_z(q, a=0):
    W, Z, WW = Wfun(C, q), Zfun(C, q), Wfun(C - ALPHA, q)
    def f(x):
        base = Z(x - a)
        if x < B:
            return base
        return base + ALPHA * q * mp.quad(lambda y: WW(x - y) * W(y - a), [B, x])
    return f

def GH(p, q, a=0):
    w, z = little_w(p + q, a), little_z(p + q, a)
    WWp = Wfun(C - ALPHA, p)
    def corr(f, y):
        if q == 0 or y <= B:
            return 0
        return q * mp.quad(lambda u: WWp(y - u) * f(u), [B, y])
    return (lambda y: w(y) - corr(w, y)), (lambda y: z(y) - corr(z, y))

mp_ = lambda s: mp.mpf(s)
out = {}
q = mp_('0.3'); x, a, c = mp_('1.2'), 0, 3
w = little_w(q)
out['exit_up_U(0.3,1.2,0,3)'] = w(x) / w(c)
z = little_z(q)
out['exit_down_U(0.3,1.2,0,3)'] = z(x) - z(c) / w(c) * w(x)
w0 = little_w(0)
out['exit_up_U(0,1.2,0,3)'] = w0(x) / w0(c)
out['little_w(0.5,2.0)'] = little_w(mp_('0.5'))(mp_(2))
out['little_z(0.5,2.0)'] = little_z(mp_('0.5'))(mp_(2))
# ruin of U at x=1
drift = C - 1 - ALPHA
W0 = Wfun(C, 0)
out['ruin_U(1)'] = 1 - drift / (1 - ALPHA * W0(B)) * w0(mp_(1))
G, H = GH(mp_('0.2'), mp_('0.5'))
out['occ_up(0.2,0.5;1.2,0,3)'] = G(x) / G(c)
out['occ_down(0.2,0.5;1.2,0,3)'] = H(x) - H(c) / G(c) * G(x)
out['occ_down_plus(0.2,0.5;1.2,0,3)'] = H(x) + H(c) / G(c) * G(x)
# survival / bankruptcy, p=0
for qq, xx in [('0.4', '0.8'), ('0.2', '0.5'), ('0.8', '1.5')]:
    qv, xv = mp_(qq), mp_(xx)
    G0, _ = GH(0, qv)
    Wq = Wfun(C, qv)
    den = Zfun(C, qv)(B) - ALPHA * Wq(B)
    out[f'survival({qq},{xx})'] = drift * G0(xv) / den
# Parisian / total occupation
def phi(q):
    return max(roots(C, q), key=lambda r: mp.re(r))
for qq, xx in [('0.5', '1.2'), ('0.2', '0.5'), ('0.8', '1.5')]:
    qv, xv = mp_(qq), mp_(xx)
    ph = phi(qv)
    WW0 = Wfun(C - ALPHA, 0)
    s = xv - B
    integ = mp.quad(lambda u: mp.e ** (-ph * u) * WW0(u), [0, s]) if s > 0 else 0
    tot = drift * mp.e ** (ph * s) * (ph / (qv - ALPHA * ph) - ph * integ)
    out[f'total_occ({qq},{xx})'] = tot
    out[f'parisian({qq},{xx})'] = 1 - tot
# reach-up q=0.5 x=1.2 c=4
qv = mp_('0.5'); ph = phi(qv); WW0 = Wfun(C - ALPHA, 0)
core = lambda y: mp.e ** (ph * (y - B)) * (1 - (qv - ALPHA * ph) * mp.quad(lambda u: mp.e ** (-ph * u) * WW0(u), [0, y - B]))
out['reach_up(0.5;1.2,4)'] = core(mp_('1.2')) / core(mp_(4))
for k, v in out.items():
    print(f"{k:36s} {mp.nstr(v, 17)}")
