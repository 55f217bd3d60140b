"""Pure-Python canonical labeling kernel.

Mirrors ``_canon_ext.pyx`` exactly; selected when the compiled module is not
available or ``CUBEFLIP_PURE_PYTHON`` is set.
"""


def canonical_code(cells, perms, nbr_cell, nbr_perm, vtok, starts, nverts):
    """Lexicographically least BFS code over the given (cell, frame) starts.

    Parameters
    ----------
    cells : sequence of vertex tuples
    perms : frame slot -> cell slot permutations
    nbr_cell, nbr_perm : nested lists indexed ``[cell][frame][face]``
    vtok : per-vertex invariant token (non-negative)
    starts : list of ``(cell, frame)`` pairs
    nverts : number of vertex ids

    Returns
    -------
    list of int
    """
    best = None
    k = len(perms[0])
    nfaces = len(nbr_cell[0][0]) if nbr_cell else 0
    ncells = len(cells)
    for c0, g0 in starts:
        label = [-1] * nverts
        seen = [False] * ncells
        seen[c0] = True
        queue = [(c0, g0)]
        head = 0
        nxt = 0
        pos = 0
        code = []
        state = 0 if best is not None else -1  # 0 tie so far, -1 already smaller
        aborted = False
        while head < len(queue):
            c, g = queue[head]
            head += 1
            cell = cells[c]
            perm = perms[g]
            for i in range(k):
                v = cell[perm[i]]
                if label[v] < 0:
                    label[v] = nxt
                    toks = (nxt, vtok[v])
                    nxt += 1
                else:
                    toks = (label[v],)
                for t in toks:
                    if state == 0:
                        b = best[pos]
                        if t > b:
                            aborted = True
                            break
                        if t < b:
                            state = -1
                    code.append(t)
                    pos += 1
                if aborted:
                    break
            if aborted:
                break
            nb = nbr_cell[c][g]
            npm = nbr_perm[c][g]
            for f in range(nfaces):
                d = nb[f]
                if d >= 0 and not seen[d]:
                    seen[d] = True
                    queue.append((d, npm[f]))
        if aborted:
            continue
        if best is None or state == -1:
            best = code
    return best
