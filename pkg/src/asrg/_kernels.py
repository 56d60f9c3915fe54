"""Scalar loops shared by both arithmetic modes.

These functions are plain Python written in the subset numba compiles.  The
``arith`` module compiles a copy of them for float64 and calls the originals
directly on object arrays of ``mpmath.mpf`` for the high-precision mode, so
every routine here must work unchanged for both number types: no literal
array allocation, zeros derived from an argument (``x * 0.0`` or ``x - x``), and only
``+ - * /``, comparisons and ``abs``.

Cost tables: ``bps[e, j]`` is the start of piece ``j`` on edge ``e`` and
``coef[e, j, :]`` its coefficients ``c0..c3``; ``npieces[e]`` pieces are live.
"""


def piece_of(bps, npieces, e, x):
    j = 0
    while j + 1 < npieces[e] and bps[e, j + 1] <= x:
        j += 1
    return j


def cost_d(coef, bps, npieces, e, x):
    """``(l_e(x), l_e'(x))``."""
    j = piece_of(bps, npieces, e, x)
    c0 = coef[e, j, 0]
    c1 = coef[e, j, 1]
    c2 = coef[e, j, 2]
    c3 = coef[e, j, 3]
    val = ((c3 * x + c2) * x + c1) * x + c0
    slope = (3.0 * c3 * x + 2.0 * c2) * x + c1
    return val, slope


def cost_d2(coef, bps, npieces, e, x):
    """``(l_e(x), l_e'(x), l_e''(x))``."""
    j = piece_of(bps, npieces, e, x)
    c0 = coef[e, j, 0]
    c1 = coef[e, j, 1]
    c2 = coef[e, j, 2]
    c3 = coef[e, j, 3]
    val = ((c3 * x + c2) * x + c1) * x + c0
    slope = (3.0 * c3 * x + 2.0 * c2) * x + c1
    curv = 6.0 * c3 * x + 2.0 * c2
    return val, slope, curv


def bin_search(k, coef, bps, npieces, e, target, delta, psi):
    """Root of ``k l(x) + x l'(x) = target`` on the bracket ``[0, target * psi]``.

    Exits once the residual is within ``delta / (2 psi)``, once the bracket is
    narrower than ``delta``, or once the next iterate cannot move in the
    working precision.  Iterates are Newton steps kept strictly inside the
    bracket, with a midpoint step whenever Newton leaves it or stalls.
    """
    lo = target * 0.0
    hi = target * psi
    tol = delta / (2.0 * psi)
    x = (lo + hi) / 2.0
    step_old = hi - lo
    step = step_old
    while hi - lo >= delta:
        val, slope, curv = cost_d2(coef, bps, npieces, e, x)
        r = k * val + x * slope - target
        if r > tol:
            hi = x
        elif r < -tol:
            lo = x
        else:
            return x
        dg = (k + 1.0) * slope + x * curv
        nx = x - r / dg
        # bisect when Newton leaves the bracket or is not converging fast enough
        if not (lo < nx and nx < hi) or abs(2.0 * r) > abs(step_old * dg):
            step_old = step
            nx = (lo + hi) / 2.0
            if not (lo < nx and nx < hi):
                break
        elif nx == x:
            break
        else:
            step_old = step
        step = abs(nx - x)
        x = nx
    return x


def redistrib_into(total, target, vals, k, out):
    """Write into ``out[:k]`` a nonnegative vector summing to ``target``.

    Each component moves by at most ``|total - target|``.  A surplus goes to
    component 0; a deficit is taken greedily from component 0 onward.
    """
    zero = target - target
    if target >= total:
        out[0] = vals[0] + (target - total)
        for i in range(1, k):
            out[i] = vals[i]
    else:
        deficit = total - target
        for i in range(k):
            o = vals[i] - deficit
            if o < zero:
                o = zero
            out[i] = o
            deficit = deficit - (vals[i] - o)
    s = zero
    for i in range(k):
        s = s + out[i]
    r = target - s
    # floating-point residue of the running sums
    if r != zero and out[k - 1] + r >= zero:
        out[k - 1] = out[k - 1] + r


def sort_desc(M, order):
    """Stable order of indices by ``M`` descending (insertion sort, n is small)."""
    n = M.shape[0]
    for i in range(n):
        order[i] = i
    for i in range(1, n):
        j = i
        while j > 0 and M[order[j - 1]] < M[order[j]]:
            tmp = order[j - 1]
            order[j - 1] = order[j]
            order[j] = tmp
            j -= 1


def graphflow(coef, bps, npieces, M, delta, psi, f, w, xhat, ssize, order, vals, red):
    """Approximate flow and demands realising marginal costs ``M``.

    Outputs (preallocated): ``f[i, e]`` flows in original player order,
    ``w[i]`` demands, ``xhat[e]`` edge totals from the bisection, ``ssize[e]``
    support size on each edge (the first ``ssize[e]`` players of ``order``).
    """
    n = M.shape[0]
    m = coef.shape[0]
    zero = delta * 0.0
    sort_desc(M, order)
    thr = 2.0 * n * psi * psi * delta
    for r in range(n):
        vals[r] = M[order[r]]
    for e in range(m):
        for i in range(n):
            f[i, e] = zero
        xhat[e] = zero
        ssize[e] = 0
        l0, _ = cost_d(coef, bps, npieces, e, zero)
        if l0 + thr >= vals[0]:
            continue
        total = zero
        for k in range(1, n + 1):
            total = total + vals[k - 1]
            x = bin_search(k, coef, bps, npieces, e, total, delta, psi)
            val, slope = cost_d(coef, bps, npieces, e, x)
            mhat = k * val + x * slope
            redistrib_into(total, mhat, vals, k, red)
            for r in range(k):
                f[order[r], e] = (red[r] - val) / slope
            if k == n or vals[k] <= val + thr:
                xhat[e] = x
                ssize[e] = k
                break
    for i in range(n):
        s = zero
        for e in range(m):
            s = s + f[i, e]
        w[i] = s


def _set_group(M, gstart, t, value):
    for p in range(gstart[t], gstart[t + 1]):
        M[p] = value


def nested_search(coef, bps, npieces, v, gstart, t0, M, lam, delta, delta1, psi, bands,
                  lo, hi, mid, iters, iters_max, calls, call_of, counters,
                  log_call, log_depth, log_mid, log_gv,
                  f, w, xhat, ssize, order, vals, red):
    """Nested bisection over player groups ``t0 .. T-1`` (iterative form).

    Group ``t`` holds players ``gstart[t] .. gstart[t+1]-1`` and shares one
    marginal cost.  Level ``t`` bisects on ``[0, lam]``; each probe first
    re-solves all deeper levels, then compares the demand of the group's first
    player with its target using tolerance ``bands[t]``.  A level stops when
    inside the band, when its bracket is at most ``delta1`` wide, or when the
    bracket cannot be split further.  Groups before ``t0`` keep the values
    already in ``M``.

    ``counters``: [probes, log entries written, next call id].  On return ``M``
    holds the marginals and ``f, w, xhat, ssize`` the last GraphFlow output,
    which corresponds to ``M``.
    """
    T = gstart.shape[0] - 1
    zero = lam * 0.0
    cap = log_mid.shape[0]
    for s in range(t0, T):
        lo[s] = zero
        hi[s] = lam
        mid[s] = lam / 2.0
        iters[s] = 0
        calls[s] += 1
        call_of[s] = counters[2]
        counters[2] += 1
        _set_group(M, gstart, s, mid[s])
    while True:
        graphflow(coef, bps, npieces, M, delta, psi, f, w, xhat, ssize, order, vals, red)
        counters[0] += 1
        t = T - 1
        while True:
            p = gstart[t]
            gv = w[p]
            iters[t] += 1
            if iters[t] > iters_max[t]:
                iters_max[t] = iters[t]
            if counters[1] < cap:
                q = counters[1]
                log_call[q] = call_of[t]
                log_depth[q] = t
                log_mid[q] = mid[t]
                log_gv[q] = gv
                counters[1] += 1
            done = abs(gv - v[p]) <= bands[t] or hi[t] - lo[t] <= delta1
            if not done:
                if gv > v[p]:
                    hi[t] = mid[t]
                else:
                    lo[t] = mid[t]
                nm = (lo[t] + hi[t]) / 2.0
                if lo[t] < nm and nm < hi[t]:
                    mid[t] = nm
                    _set_group(M, gstart, t, nm)
                    for s in range(t + 1, T):
                        lo[s] = zero
                        hi[s] = lam
                        mid[s] = lam / 2.0
                        iters[s] = 0
                        calls[s] += 1
                        call_of[s] = counters[2]
                        counters[2] += 1
                        _set_group(M, gstart, s, mid[s])
                    break
            # level t finished with the probe just evaluated
            if t == t0:
                return
            t -= 1
