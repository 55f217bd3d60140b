# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled canonical labeling kernel (same contract as ``_canon_py``)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def canonical_code(cells, perms, nbr_cell, nbr_perm, vtok, starts, Py_ssize_t nverts):
    cdef int[:, ::1] C = np.ascontiguousarray(cells, dtype=np.int32)
    cdef int[:, ::1] P = np.ascontiguousarray(perms, dtype=np.int32)
    cdef int[:, :, ::1] NB = np.ascontiguousarray(nbr_cell, dtype=np.int32)
    cdef int[:, :, ::1] NP = np.ascontiguousarray(nbr_perm, dtype=np.int32)
    cdef int[::1] T = np.ascontiguousarray(vtok, dtype=np.int32)
    cdef int[:, ::1] S = np.ascontiguousarray(starts, dtype=np.int32).reshape(-1, 2)

    cdef Py_ssize_t ncells = C.shape[0]
    cdef Py_ssize_t k = C.shape[1]
    cdef Py_ssize_t nfaces = NB.shape[2]
    cdef Py_ssize_t maxlen = ncells * k + nverts + 1

    cdef int[::1] label = np.empty(nverts if nverts > 0 else 1, dtype=np.int32)
    cdef char[::1] seen = np.empty(ncells if ncells > 0 else 1, dtype=np.int8)
    cdef int[:, ::1] queue = np.empty((ncells if ncells > 0 else 1, 2), dtype=np.int32)
    cdef int[::1] best = np.empty(maxlen, dtype=np.int32)
    cdef int[::1] code = np.empty(maxlen, dtype=np.int32)

    cdef Py_ssize_t bestlen = -1
    cdef Py_ssize_t s, head, tail, pos, i, f, j
    cdef int c, g, v, d, nxt, state, t, ntok, aborted
    cdef int toks[2]

    for s in range(S.shape[0]):
        for j in range(nverts):
            label[j] = -1
        for j in range(ncells):
            seen[j] = 0
        c = S[s, 0]
        g = S[s, 1]
        seen[c] = 1
        queue[0, 0] = c
        queue[0, 1] = g
        head = 0
        tail = 1
        nxt = 0
        pos = 0
        state = 0 if bestlen >= 0 else -1
        aborted = 0
        while head < tail:
            c = queue[head, 0]
            g = queue[head, 1]
            head += 1
            for i in range(k):
                v = C[c, P[g, i]]
                if label[v] < 0:
                    label[v] = nxt
                    toks[0] = nxt
                    toks[1] = T[v]
                    ntok = 2
                    nxt += 1
                else:
                    toks[0] = label[v]
                    ntok = 1
                for j in range(ntok):
                    t = toks[j]
                    if state == 0:
                        if t > best[pos]:
                            aborted = 1
                            break
                        if t < best[pos]:
                            state = -1
                    code[pos] = t
                    pos += 1
                if aborted:
                    break
            if aborted:
                break
            for f in range(nfaces):
                d = NB[c, g, f]
                if d >= 0 and not seen[d]:
                    seen[d] = 1
                    queue[tail, 0] = d
                    queue[tail, 1] = NP[c, g, f]
                    tail += 1
        if aborted:
            continue
        if bestlen < 0 or state == -1:
            for j in range(pos):
                best[j] = code[j]
            bestlen = pos
    if bestlen < 0:
        return None
    return [best[j] for j in range(bestlen)]
