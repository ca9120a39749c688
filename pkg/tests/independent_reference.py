"""Independent literal transcription of the streaming adaptation loop.

Written as one flat procedural script against plain (weights, biases)
layer lists, with its own forward pass, softmax, gradient, buffer
handling, and momentum step. Deliberately free of any import from the
package under test; tests compare its outputs against the engine.
"""

from __future__ import annotations

import math

import numpy as np


def _forward(layers, x):
    """Returns (logits, pre_activations, activations). activations[0] is x."""
    a = x
    acts = [x]
    pres = []
    last = len(layers) - 1
    for idx, (w, b) in enumerate(layers):
        z = w @ a + b
        pres.append(z)
        if idx < last:
            a = np.maximum(z, 0.0)
        else:
            a = z
        acts.append(a)
    return a, pres, acts


def _softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


def _argmax_first(v):
    best = 0
    for j in range(1, v.shape[0]):
        if v[j] > v[best]:
            best = j
    return best


def _grads(layers, pres, acts, label):
    delta = _softmax(pres[-1])
    delta[label] -= 1.0
    gws = []
    gbs = []
    for layer in range(len(layers) - 1, -1, -1):
        prev = acts[layer]
        gws.append(np.outer(delta, prev))
        gbs.append(delta.copy())
        if layer > 0:
            w = layers[layer][0]
            delta = w.T @ delta
            delta = delta * (pres[layer - 1] > 0.0)
    gws.reverse()
    gbs.reverse()
    return gws, gbs


def reference_run(main_layers, aux_layers, frames, alpha, beta, k, gamma, lam):
    """Run the full per-frame loop, adapting copies of aux_layers.

    main_layers / aux_layers: lists of (weight_matrix, bias_vector).
    Returns a dict with per-frame labels, losses, branches, y_main, y_aux,
    plus the final auxiliary layers and buffer contents.
    """
    aux = [(w.copy(), b.copy()) for w, b in aux_layers]
    vel = [(np.zeros_like(w), np.zeros_like(b)) for w, b in aux_layers]
    buf = []
    labels = []
    losses = []
    branches = []
    mains = []
    auxes = []

    for x in frames:
        main_logits, _, _ = _forward(main_layers, x)
        y_main = _softmax(main_logits)
        aux_logits, pres, acts = _forward(aux, x)
        y_aux = _softmax(aux_logits)

        if len(buf) < k:
            branch = "warmup"
            fused = alpha * y_main + beta * y_aux
            buf.append(y_aux)
        else:
            branch = "steady"
            buf.pop(0)
            buf.append(y_aux)
            total = buf[0]
            for entry in buf[1:]:
                total = total + entry
            fused = alpha * y_main + beta * total
        label = _argmax_first(fused)
        loss = -math.log(max(y_aux[label], 1e-12))

        gws, gbs = _grads(aux, pres, acts, label)
        new_aux = []
        new_vel = []
        for (w, b), (vw, vb), gw, gb in zip(aux, vel, gws, gbs):
            vw = gamma * vw - lam * gw
            vb = gamma * vb - lam * gb
            new_aux.append((w + vw, b + vb))
            new_vel.append((vw, vb))
        aux = new_aux
        vel = new_vel

        labels.append(label)
        losses.append(loss)
        branches.append(branch)
        mains.append(y_main)
        auxes.append(y_aux)

    return {
        "labels": labels,
        "losses": losses,
        "branches": branches,
        "y_main": mains,
        "y_aux": auxes,
        "final_aux": aux,
        "buffer": buf,
    }
