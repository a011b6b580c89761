# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the Pauli-frame trial loop (opcodes in frame.py) and tableau updates."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, int32_t, int64_t, uint64_t

cdef enum:
    OP_END = 0
    OP_PREP0 = 1
    OP_PREPP = 2
    OP_H = 3
    OP_CNOT = 4
    OP_MEASZ = 5
    OP_MEASX = 6
    OP_NOISE = 7
    OP_PAR = 8
    OP_MAJ = 9
    OP_LUT = 10
    OP_CX = 11
    OP_CZ = 12
    OP_TRACK = 13
    OP_CONST = 14

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t TRIAL_MULT = 0xD1B54A32D192ED03ULL


cdef inline uint64_t mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def run_trials(const int32_t[::1] prog, const uint8_t[::1] lut, const uint8_t[::1] ref_meas,
               const uint64_t[:, ::1] thr, int num_slots, int num_temps,
               const int32_t[::1] out_slots, uint64_t seed, int64_t trial_start, int64_t trials,
               const int64_t[::1] fptr, const int64_t[::1] fids, const uint8_t[::1] fcodes):
    cdef Py_ssize_t n_out = out_slots.shape[0]
    out_x_arr = np.zeros((trials, n_out), dtype=np.uint8)
    out_z_arr = np.zeros((trials, n_out), dtype=np.uint8)
    tracked_arr = np.zeros((trials, 2), dtype=np.uint8)
    x_arr = np.zeros(max(num_slots, 1), dtype=np.uint8)
    z_arr = np.zeros(max(num_slots, 1), dtype=np.uint8)
    t_arr = np.zeros(max(num_temps, 1), dtype=np.uint8)
    cdef uint8_t[:, ::1] out_x = out_x_arr
    cdef uint8_t[:, ::1] out_z = out_z_arr
    cdef uint8_t[:, ::1] tracked = tracked_arr
    cdef uint8_t[::1] x = x_arr
    cdef uint8_t[::1] z = z_arr
    cdef uint8_t[::1] T = t_arr
    cdef Py_ssize_t plen = prog.shape[0]
    cdef int64_t k, pc, noise_id, fpos, fend, idx
    cdef int op, s, c, t, r, dst, nargs, j, total, cls
    cdef uint8_t acc, tmp, tr0, tr1
    cdef uint64_t state, u, seed_mixed = mix(seed), tz, tx
    with nogil:
        for k in range(trials):
            state = mix(seed_mixed ^ (<uint64_t>(trial_start + k) * TRIAL_MULT + 1))
            fpos = fptr[k]
            fend = fptr[k + 1]
            noise_id = 0
            tr0 = 0
            tr1 = 0
            for j in range(num_slots):
                x[j] = 0
                z[j] = 0
            pc = 0
            while pc < plen:
                op = prog[pc]
                if op == OP_NOISE:
                    s = prog[pc + 1]
                    cls = prog[pc + 2]
                    tz = thr[cls, 0]
                    tx = thr[cls, 1]
                    if tz or tx:
                        state = state + GOLDEN
                        u = mix(state)
                        if (u >> 32) < tz:
                            z[s] ^= 1
                        if (u & 0xFFFFFFFFULL) < tx:
                            x[s] ^= 1
                    if fpos < fend and fids[fpos] == noise_id:
                        x[s] ^= fcodes[fpos] & 1
                        z[s] ^= fcodes[fpos] >> 1
                        fpos += 1
                    noise_id += 1
                    pc += 3
                elif op == OP_CNOT:
                    c = prog[pc + 1]
                    t = prog[pc + 2]
                    x[t] ^= x[c]
                    z[c] ^= z[t]
                    pc += 3
                elif op == OP_H:
                    s = prog[pc + 1]
                    tmp = x[s]
                    x[s] = z[s]
                    z[s] = tmp
                    pc += 2
                elif op == OP_PREP0:
                    s = prog[pc + 1]
                    state = state + GOLDEN
                    x[s] = 0
                    z[s] = <uint8_t>(mix(state) >> 63)
                    pc += 2
                elif op == OP_PREPP:
                    s = prog[pc + 1]
                    state = state + GOLDEN
                    z[s] = 0
                    x[s] = <uint8_t>(mix(state) >> 63)
                    pc += 2
                elif op == OP_MEASZ:
                    r = prog[pc + 2]
                    T[r] = ref_meas[r] ^ x[prog[pc + 1]]
                    pc += 3
                elif op == OP_MEASX:
                    r = prog[pc + 2]
                    T[r] = ref_meas[r] ^ z[prog[pc + 1]]
                    pc += 3
                elif op == OP_PAR:
                    dst = prog[pc + 1]
                    nargs = prog[pc + 2]
                    acc = 0
                    for j in range(nargs):
                        acc ^= T[prog[pc + 3 + j]]
                    T[dst] = acc
                    pc += 3 + nargs
                elif op == OP_MAJ:
                    dst = prog[pc + 1]
                    nargs = prog[pc + 2]
                    total = 0
                    for j in range(nargs):
                        total += T[prog[pc + 3 + j]]
                    T[dst] = 1 if 2 * total > nargs else 0
                    pc += 3 + nargs
                elif op == OP_LUT:
                    dst = prog[pc + 1]
                    nargs = prog[pc + 2]
                    idx = 0
                    for j in range(nargs):
                        idx |= (<int64_t>T[prog[pc + 3 + j]]) << j
                    T[dst] = lut[prog[pc + 3 + nargs] + idx]
                    pc += 4 + nargs
                elif op == OP_CX:
                    x[prog[pc + 1]] ^= T[prog[pc + 2]] ^ <uint8_t>prog[pc + 3]
                    pc += 4
                elif op == OP_CZ:
                    z[prog[pc + 1]] ^= T[prog[pc + 2]] ^ <uint8_t>prog[pc + 3]
                    pc += 4
                elif op == OP_TRACK:
                    acc = T[prog[pc + 2]] ^ <uint8_t>prog[pc + 3]
                    if prog[pc + 1] == 0:
                        tr0 ^= acc
                    else:
                        tr1 ^= acc
                    pc += 4
                elif op == OP_CONST:
                    T[prog[pc + 1]] = <uint8_t>prog[pc + 2]
                    pc += 3
                else:
                    break
            for j in range(n_out):
                out_x[k, j] = x[out_slots[j]]
                out_z[k, j] = z[out_slots[j]]
            tracked[k, 0] = tr0
            tracked[k, 1] = tr1
    return out_x_arr, out_z_arr, tracked_arr


# --- stabilizer tableau (rows 0..n-1 destabilizers, n..2n-1 stabilizers) ---

cdef inline int g_phase(int x1, int z1, int x2, int z2) nogil:
    # i-exponent of (x1,z1) * (x2,z2) on one qubit
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


cdef inline void rowmult(uint8_t[:, ::1] x, uint8_t[:, ::1] z, uint8_t[::1] r,
                         Py_ssize_t h, Py_ssize_t i, Py_ssize_t n) nogil:
    # row h <- row i * row h
    cdef int total = 2 * r[h] + 2 * r[i]
    cdef Py_ssize_t k
    for k in range(n):
        total += g_phase(x[i, k], z[i, k], x[h, k], z[h, k])
        x[h, k] ^= x[i, k]
        z[h, k] ^= z[i, k]
    total = total % 4
    if total < 0:
        total += 4
    r[h] = 1 if total == 2 else 0


def tab_cnot(uint8_t[:, ::1] x, uint8_t[:, ::1] z, uint8_t[::1] r, int c, int t):
    cdef Py_ssize_t i
    with nogil:
        for i in range(x.shape[0]):
            r[i] ^= x[i, c] & z[i, t] & (x[i, t] ^ z[i, c] ^ 1)
            x[i, t] ^= x[i, c]
            z[i, c] ^= z[i, t]


def tab_h(uint8_t[:, ::1] x, uint8_t[:, ::1] z, uint8_t[::1] r, int q):
    cdef Py_ssize_t i
    cdef uint8_t tmp
    with nogil:
        for i in range(x.shape[0]):
            r[i] ^= x[i, q] & z[i, q]
            tmp = x[i, q]
            x[i, q] = z[i, q]
            z[i, q] = tmp


def tab_pivot(uint8_t[:, ::1] x, int q):
    """First stabilizer row with an X or Y on ``q`` (offset from n), or -1."""
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t i
    for i in range(n):
        if x[n + i, q]:
            return i
    return -1


def tab_collapse(uint8_t[:, ::1] x, uint8_t[:, ::1] z, uint8_t[::1] r, int q, int p, int bit):
    """Random Z measurement of ``q`` with pivot stabilizer row ``n + p``."""
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t i, k, piv = n + p
    with nogil:
        for i in range(2 * n):
            if i != piv and x[i, q]:
                rowmult(x, z, r, i, piv, n)
        for k in range(n):
            x[p, k] = x[piv, k]
            z[p, k] = z[piv, k]
            x[piv, k] = 0
            z[piv, k] = 0
        r[p] = r[piv]
        z[piv, q] = 1
        r[piv] = bit


def tab_product(uint8_t[:, ::1] x, uint8_t[:, ::1] z, uint8_t[::1] r, const uint8_t[::1] select,
                uint8_t[::1] out_x, uint8_t[::1] out_z):
    """Sign bit of the product of stabilizer rows ``n + i`` with ``select[i]``; Pauli in out_x/out_z."""
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t i, k
    cdef int total = 0
    with nogil:
        for k in range(n):
            out_x[k] = 0
            out_z[k] = 0
        for i in range(n):
            if select[i]:
                total += 2 * r[n + i]
                for k in range(n):
                    total += g_phase(x[n + i, k], z[n + i, k], out_x[k], out_z[k])
                    out_x[k] ^= x[n + i, k]
                    out_z[k] ^= z[n + i, k]
        total = total % 4
        if total < 0:
            total += 4
    return 1 if total == 2 else 0
