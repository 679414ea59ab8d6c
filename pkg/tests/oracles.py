"""Slow, independent reference computations used to check the library."""

import numpy as np


def direct_dft_bin(frame, k):
    N = len(frame)
    acc = 0j
    for n in range(N):
        acc += frame[n] * complex(np.cos(2 * np.pi * k * n / N), -np.sin(2 * np.pi * k * n / N))
    return acc


def brute_cov(X, w=None):
    D, T = X.shape
    w = np.ones(T) if w is None else w
    R = np.zeros((D, D), dtype=complex)
    for i in range(D):
        for j in range(D):
            s = 0j
            for t in range(T):
                s += w[t] * X[i, t] * np.conj(X[j, t])
            R[i, j] = s / T
    return R


def jacobi_eigh(A, sweeps=100, tol=1e-15):
    """
    Cyclic Jacobi on the real 2n x 2n embedding [[Re, -Im], [Im, Re]] of a
    Hermitian matrix.  Returns (eigenvalues, eigenvectors) of A, descending.
    """
    n = A.shape[0]
    S = np.block([[A.real, -A.imag], [A.imag, A.real]]).astype(float)
    m = 2 * n
    V = np.eye(m)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(S, -1) ** 2))
        if off < tol * np.linalg.norm(S):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                if abs(S[p, q]) < 1e-300:
                    continue
                theta = (S[q, q] - S[p, p]) / (2 * S[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta ** 2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t ** 2 + 1)
                s = t * c
                J = np.eye(m)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                S = J.T @ S @ J
                V = V @ J
    lam = np.diag(S)
    order = np.argsort(lam)[::-1]
    # every eigenvalue appears twice; keep one vector per pair
    vals, vecs = [], []
    for idx in order:
        x = V[:n, idx] + 1j * V[n:, idx]
        x /= np.linalg.norm(x)
        if any(abs(np.vdot(u, x)) > 0.5 and abs(lam[idx] - l) < 1e-8 * max(1, abs(l)) for u, l in zip(vecs, vals)):
            continue
        vals.append(lam[idx])
        vecs.append(x)
    return np.array(vals[:n]), np.array(vecs[:n]).T


def lagrangian_mpdr(R, v):
    """min h^H R h s.t. h^H v = 1 via the dense KKT system [[R, v], [v^H, 0]]."""
    D = v.size
    K = np.zeros((D + 1, D + 1), dtype=complex)
    K[:D, :D] = R
    K[:D, D] = v
    K[D, :D] = v.conj()
    rhs = np.zeros(D + 1, dtype=complex)
    rhs[D] = 1.0
    sol = np.linalg.solve(K, rhs)
    # stationarity R h + v mu = 0 with v^H h = 1  gives  h^H v = 1 as well
    return sol[:D]


def direct_convolution(source, taps):
    """sum_l a_l s_{t-l} for one bin: source (T,), taps (La, M)."""
    T = source.size
    La, M = taps.shape
    out = np.zeros((T, M), dtype=complex)
    for t in range(T):
        for l in range(La):
            if t - l >= 0:
                out[t] += taps[l] * source[t - l]
    return out


def noise_frames_by_enumeration(n_frames, n_samples, head, tail, frame_len, hop):
    """Frames whose in-signal samples all lie in [0, head) or in [N - tail, N)."""
    pad = frame_len - hop
    sel = []
    for t in range(n_frames):
        first = t * hop - pad
        samples = [s for s in range(first, first + frame_len) if 0 <= s < n_samples]
        if not samples:
            continue
        if all(s < head for s in samples) or all(s >= n_samples - tail for s in samples):
            sel.append(t)
    return sel


def fwssnr_loop(ref, test, fs, frame_ms=25.0, overlap=0.75, bands=25, gamma=0.2, lo=-10.0, hi=35.0):
    """Frame-by-frame, band-by-band FWSSNR written without vectorization."""
    n = int(round(frame_ms * 1e-3 * fs))
    hop = int(round(n * (1 - overlap)))
    nfft = 1
    while nfft < n:
        nfft *= 2
    win = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    mel_hi = 2595 * np.log10(1 + (fs / 2) / 700)
    mels = [mel_hi * i / (bands + 1) for i in range(bands + 2)]
    edges = [700 * (10 ** (m / 2595) - 1) for m in mels]
    freqs = [k * fs / nfft for k in range(nfft // 2 + 1)]
    scores = []
    start = 0
    while start + n <= len(ref):
        R = np.abs(np.fft.fft(ref[start:start + n] * win, nfft))[:nfft // 2 + 1]
        X = np.abs(np.fft.fft(test[start:start + n] * win, nfft))[:nfft // 2 + 1]
        num = den = 0.0
        for j in range(bands):
            a, b, c = edges[j], edges[j + 1], edges[j + 2]
            rb = xb = 0.0
            for k, f in enumerate(freqs):
                g = 0.0
                if a < f <= b:
                    g = (f - a) / (b - a)
                elif b < f < c:
                    g = (c - f) / (c - b)
                rb += g * R[k]
                xb += g * X[k]
            if rb == xb:
                snr = hi
            else:
                snr = min(max(10 * np.log10(rb ** 2 / (rb - xb) ** 2), lo), hi)
            wgt = rb ** gamma
            num += wgt * snr
            den += wgt
        if den > 0:
            scores.append(num / den)
        start += hop
    return float(np.mean(scores))
