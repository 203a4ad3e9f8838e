"""Pure numpy kernels; reference implementation for the compiled module."""

import numpy as np


def sequence_loglik(codewords, seqs, logw):
    """out[s, c] = sum_t logw[codewords[c, t], seqs[s, t]]."""
    codewords = np.asarray(codewords, dtype=np.int64)
    seqs = np.asarray(seqs, dtype=np.int64)
    logw = np.asarray(logw, dtype=float)
    out = np.zeros((seqs.shape[0], codewords.shape[0]))
    for t in range(seqs.shape[1]):
        out += logw[codewords[:, t]][:, seqs[:, t]].T
    return out


def batch_tv(rows, target):
    """Half-L1 distance of every row of ``rows`` to ``target``."""
    rows = np.asarray(rows, dtype=float)
    return 0.5 * np.abs(rows - np.asarray(target, dtype=float)[None, :]).sum(axis=1)
