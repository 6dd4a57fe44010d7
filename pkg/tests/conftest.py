import json
import math

import numpy as np
import pytest

from srshift.model import LinearModel, RnnModel


def make_random_model(rng, hidden_size=4, input_dim=1, scale=0.5, name=""):
    return RnnModel(
        hidden_size=hidden_size,
        w_ih=rng.normal(0, scale, (4 * hidden_size, input_dim)),
        w_hh=rng.normal(0, scale, (4 * hidden_size, hidden_size)),
        b=rng.normal(0, 0.1, 4 * hidden_size),
        out_w=rng.normal(0, scale, (1, hidden_size)),
        out_b=float(rng.normal(0, 0.1)),
        name=name)


def scalar_sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


def scalar_lstm_step(model, s, x):
    """Hand-rolled scalar-loop LSTM update; independent of the numpy path."""
    n = model.hidden_size
    h, c = list(s[:n]), list(s[n:])
    xs = [float(x)] if np.isscalar(x) else [float(v) for v in x]
    z = []
    for row in range(4 * n):
        acc = float(model.b[row])
        for col, xv in enumerate(xs):
            acc += float(model.w_ih[row, col]) * xv
        for col in range(n):
            acc += float(model.w_hh[row, col]) * h[col]
        z.append(acc)
    h_next, c_next = [], []
    for j in range(n):
        i = scalar_sigmoid(z[j])
        f = scalar_sigmoid(z[n + j])
        g = math.tanh(z[2 * n + j])
        o = scalar_sigmoid(z[3 * n + j])
        cn = f * c[j] + i * g
        c_next.append(cn)
        h_next.append(o * math.tanh(cn))
    return np.array(h_next + c_next)


def scalar_readout(model, s, x):
    n = model.hidden_size
    acc = float(model.out_b)
    for j in range(n):
        acc += float(model.out_w[0, j]) * float(s[j])
    if model.has_direct_term:
        acc += model.direct_w * float(np.atleast_1d(x)[0])
    return acc


def scalar_process(model, x):
    s = np.zeros(model.state_dim)
    out = []
    for v in x:
        s = scalar_lstm_step(model, s, v)
        out.append(scalar_readout(model, s, v))
    return np.array(out)


def one_pole(a, b=1.0, c=1.0, d=0.0, offset=0.0):
    """Single-state linear surrogate s_n = a s_{n-1} + b x_n + offset."""
    return LinearModel(a=np.array([[a]]), b_in=np.array([b]),
                       c_out=np.array([c]), d=d, offset=np.array([offset]))


def model_json_doc(model: RnnModel):
    """Serialize a model into the importer's JSON convention."""
    rng = np.random.default_rng(7)
    b_ih = rng.normal(0, 0.05, 4 * model.hidden_size)
    return {
        "model_data": {"unit_type": "LSTM", "hidden_size": model.hidden_size,
                       "input_size": model.input_dim, "sample_rate": model.train_rate},
        "state_dict": {
            "rec.weight_ih_l0": model.w_ih.tolist(),
            "rec.weight_hh_l0": model.w_hh.tolist(),
            "rec.bias_ih_l0": b_ih.tolist(),
            "rec.bias_hh_l0": (model.b - b_ih).tolist(),
            "lin.weight": model.out_w.tolist(),
            "lin.bias": [model.out_b],
        },
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_model(rng):
    return make_random_model(rng, hidden_size=4)


@pytest.fixture
def model_file(tmp_path, small_model):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(model_json_doc(small_model)))
    return path
