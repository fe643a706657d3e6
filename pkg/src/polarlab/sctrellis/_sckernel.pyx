# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled per-sample executor for successive-cancellation sweeps.

Replays the static op schedule (see schedule.py) with plain C loops: one
flat buffer of (2, m, m) message slots, one flat (n+1, N) bit table, both
reused across samples.  Messages are renormalized by powers of two after
every combine, which leaves posteriors untouched.
"""

from libc.stdint cimport int64_t
from libc.stdlib cimport free, malloc
from libc.math cimport frexp, ldexp


cdef inline void _rescale(double *blk, int sz) nogil:
    cdef double mx = 0.0
    cdef int i, e
    for i in range(sz):
        if blk[i] > mx:
            mx = blk[i]
    if mx <= 0.0:
        return
    frexp(mx, &e)
    if e == 0:
        return
    cdef double sc = ldexp(1.0, -e)
    for i in range(sz):
        blk[i] *= sc


def run_sweeps(int[:, ::1] ops,
               double[:, :, :, ::1] edge,
               int64_t[:, ::1] yobs,
               double[::1] pi,
               int mode,
               signed char[:, ::1] ubits,
               unsigned char[::1] frozen_mask,
               signed char[:, ::1] frozen_vals,
               double[:, ::1] out_p0,
               signed char[:, ::1] out_u,
               signed char[:, ::1] out_x):
    """Run one sweep per sample.

    mode 0: decisions are the supplied true bits (profile estimation).
    mode 1: frozen bits forced from frozen_vals, free bits argmax, ties -> 0.
    Fills out_p0 (posterior of bit 0), out_u (decisions) and out_x (the
    time-ordered source block implied by the decisions).
    """
    cdef Py_ssize_t B = yobs.shape[0]
    cdef Py_ssize_t N = yobs.shape[1]
    cdef int m = <int> edge.shape[0]
    cdef int mm = m * m
    cdef int msz = 2 * mm
    cdef int n = 0
    while (<Py_ssize_t> 1 << n) < N:
        n += 1
    cdef Py_ssize_t nslots = ((<Py_ssize_t> 1) << (n + 1)) - 1
    cdef Py_ssize_t K = ops.shape[0]

    cdef double *M = <double *> malloc(nslots * msz * sizeof(double))
    cdef signed char *bits = <signed char *> malloc((n + 1) * N)
    if M == NULL or bits == NULL:
        if M != NULL:
            free(M)
        if bits != NULL:
            free(bits)
        raise MemoryError("trellis work buffers")

    cdef Py_ssize_t b, kop
    cdef int code, d, j, aux, yv
    cdef int s, t2, r, c, k, L, half, base
    cdef int tbit, vbit, bit
    cdef double acc0, acc1, a0, a1, p0, p1, tot, w, rs0, rs1
    cdef double *A
    cdef double *Bm
    cdef double *dst

    with nogil:
        for b in range(B):
            for kop in range(K):
                code = ops[kop, 0]
                d = ops[kop, 1]
                j = ops[kop, 2]
                aux = ops[kop, 3]
                if code == 0:  # LEAF
                    dst = M + ((( <Py_ssize_t> 1 << d) - 1 + j)) * msz
                    yv = <int> yobs[b, j]
                    for c in range(2):
                        for s in range(m):
                            for t2 in range(m):
                                dst[c * mm + s * m + t2] = edge[s, t2, c, yv]
                    _rescale(dst, msz)
                elif code == 1:  # MINUS
                    A = M + (((<Py_ssize_t> 1 << (d + 1)) - 1 + 2 * j)) * msz
                    Bm = A + msz
                    dst = M + (((<Py_ssize_t> 1 << d) - 1 + j)) * msz
                    for s in range(m):
                        for t2 in range(m):
                            acc0 = 0.0
                            acc1 = 0.0
                            for r in range(m):
                                a0 = A[s * m + r]
                                a1 = A[mm + s * m + r]
                                acc0 += a0 * Bm[r * m + t2] + a1 * Bm[mm + r * m + t2]
                                acc1 += a1 * Bm[r * m + t2] + a0 * Bm[mm + r * m + t2]
                            dst[s * m + t2] = acc0
                            dst[mm + s * m + t2] = acc1
                    _rescale(dst, msz)
                elif code == 2:  # PLUS
                    A = M + (((<Py_ssize_t> 1 << (d + 1)) - 1 + 2 * j)) * msz
                    Bm = A + msz
                    dst = M + (((<Py_ssize_t> 1 << d) - 1 + j)) * msz
                    tbit = bits[d * N + aux]
                    for s in range(m):
                        for t2 in range(m):
                            acc0 = 0.0
                            acc1 = 0.0
                            for r in range(m):
                                acc0 += A[tbit * mm + s * m + r] * Bm[r * m + t2]
                                acc1 += A[(tbit ^ 1) * mm + s * m + r] * Bm[mm + r * m + t2]
                            dst[s * m + t2] = acc0
                            dst[mm + s * m + t2] = acc1
                    _rescale(dst, msz)
                elif code == 3:  # ROOT, aux = i - 1
                    p0 = 0.0
                    p1 = 0.0
                    for s in range(m):
                        w = pi[s]
                        rs0 = 0.0
                        rs1 = 0.0
                        for t2 in range(m):
                            rs0 += M[s * m + t2]
                            rs1 += M[mm + s * m + t2]
                        p0 += w * rs0
                        p1 += w * rs1
                    tot = p0 + p1
                    out_p0[b, aux] = p0 / tot if tot > 0.0 else 0.5
                    if mode == 0:
                        bit = ubits[b, aux]
                    elif frozen_mask[aux]:
                        bit = frozen_vals[b, aux]
                    else:
                        # structural ties reach 0.5 with backend-dependent
                        # rounding; the shared 1e-12 band (see TIE_TOL in the
                        # numpy executor) makes every executor resolve them to 0
                        bit = 0 if out_p0[b, aux] >= 0.5 - 1e-12 else 1
                    bits[aux] = <signed char> bit
                    out_u[b, aux] = <signed char> bit
                else:  # PROP, aux = pair index k
                    L = <int> (N >> d)
                    base = j * L
                    k = aux
                    tbit = bits[d * N + base + 2 * k - 2]
                    vbit = bits[d * N + base + 2 * k - 1]
                    half = L >> 1
                    bits[(d + 1) * N + 2 * j * half + k - 1] = <signed char> (tbit ^ vbit)
                    bits[(d + 1) * N + (2 * j + 1) * half + k - 1] = <signed char> vbit
            for t2 in range(<int> N):
                out_x[b, t2] = bits[n * N + t2]

    free(M)
    free(bits)
