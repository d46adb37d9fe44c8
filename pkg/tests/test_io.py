import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wskmeans import io as wio
from wskmeans.core import TagMap
from wskmeans.pipeline import FitConfig, Model, TraceRow, fit, predict
from wskmeans.subspace import Projection

PHI = TagMap.with_outside_prototypes(["O", "I-LOC", "I-PER"], 2)


def test_dmat_42(tmp_path):
    path = tmp_path / "m.dmat"
    wio.write_dmat(path, [[42.0]])
    data = path.read_bytes()
    assert data == b"DMAT 1 1\n" + bytes.fromhex("0000000000004540")
    assert wio.read_dmat(path).tolist() == [[42.0]]


@given(arrays(np.float64, st.tuples(st.integers(0, 7), st.integers(0, 5)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_dmat_round_trip(M):
    buf = io.BytesIO()
    wio.dump_dmat(buf, M)
    buf.seek(0)
    out = wio.load_dmat(buf, exact_end=True)
    assert out.shape == M.shape and out.tobytes() == M.tobytes()


def test_dmat_random_7x3(tmp_path, rng):
    M = rng.normal(size=(7, 3))
    wio.write_dmat(tmp_path / "a", M)
    assert wio.read_dmat(tmp_path / "a").tobytes() == M.tobytes()


@pytest.mark.parametrize("data, error", [
    (b"DMAT 2 2\n" + b"\0" * 24, wio.TruncatedPayloadError),
    (b"DMAX 1 1\n" + b"\0" * 8, wio.BadMagicError),
    (b"DMAT 1\n" + b"\0" * 8, wio.BadMagicError),
    (b"DMAT 1 1\n" + b"\0" * 9, wio.TrailingDataError),
    (b"DMAT 1 1\n" + bytes.fromhex("000000000000f87f"), wio.NonFiniteError),
])
def test_dmat_errors(tmp_path, data, error):
    path = tmp_path / "bad.dmat"
    path.write_bytes(data)
    with pytest.raises(error):
        wio.read_dmat(path)


def test_error_codes_distinct():
    codes = [c.code for c in (wio.BadMagicError, wio.TruncatedPayloadError, wio.TrailingDataError,
                              wio.NonFiniteError, wio.LabelError, wio.ModelFormatError)]
    assert len(set(codes)) == len(codes)


def test_refuses_to_write_nan():
    with pytest.raises(wio.NonFiniteError):
        wio.dump_dmat(io.BytesIO(), [[np.nan]])


def test_labels(tmp_path):
    p = tmp_path / "l"
    p.write_text("I-LOC\n-\nO\n")
    assert wio.read_labels(p, PHI) == [1, -1, 0]
    p.write_text("")
    assert wio.read_labels(p, PHI) == []
    p.write_text("I-BOGUS\n")
    with pytest.raises(wio.LabelError) as exc:
        wio.read_labels(p, PHI)
    assert exc.value.line == 1


def test_label_sequences_round_trip(tmp_path):
    seqs = [[0, 1, -1], [2], [0, 0]]
    p = tmp_path / "l"
    wio.write_labels(p, seqs, PHI)
    assert p.read_text() == "O\nI-LOC\n-\n\nI-PER\n\nO\nO\n"
    assert wio.read_label_sequences(p, PHI) == seqs
    with pytest.raises(wio.LabelError):
        wio.read_label_sequences(p, PHI, allow_unlabeled=False)


def test_tag_list(tmp_path):
    p = tmp_path / "t"
    p.write_text("O\nI-LOC\t2\nI-PER\n")
    phi = wio.read_tag_list(p, o_prototypes=3)
    assert phi.proto_tag == (0, 0, 0, 1, 1, 2)
    wio.write_tag_list(tmp_path / "t2", phi)
    assert wio.read_tag_list(tmp_path / "t2") == phi
    p.write_text("I-LOC\nO\n")
    with pytest.raises(wio.LabelError):
        wio.read_tag_list(p)


def _model(rng, with_projection=True):
    C = rng.normal(size=(PHI.k, 3))
    proj = Projection(rng.normal(size=(3, 2)), np.array([0.1, 0.3])) if with_projection else None
    trace = [TraceRow(1, 3.5, 0.0, 1e-10), TraceRow(2, 1 / 3, 0.0, 0.0)]
    return Model(C, PHI, proj, trace)


@pytest.mark.parametrize("with_projection", [True, False])
def test_model_round_trip(tmp_path, rng, with_projection):
    m = _model(rng, with_projection)
    path = tmp_path / "m.model"
    wio.save_model(path, m)
    back = wio.load_model_file(path)
    assert back.centroids.tobytes() == m.centroids.tobytes()
    assert back.tag_map == m.tag_map
    assert back.trace == m.trace
    assert back.u.tobytes() == m.u.tobytes()
    wio.save_model(tmp_path / "again", back)
    assert (tmp_path / "again").read_bytes() == path.read_bytes()


def test_model_layout(rng):
    buf = io.BytesIO()
    wio.dump_model(buf, _model(rng))
    text = buf.getvalue()
    assert text.startswith(b"WSKM-MODEL 1\ncentroids\nDMAT 4 3\n")
    assert b"projection\nDMAT 3 2\n" in text
    assert b"eigenvalues\nDMAT 1 2\n" in text
    assert b"tagmap 4\n0\tO\n1\tO\n2\tI-LOC\n3\tI-PER\ntrace 2\n" in text
    assert text.endswith(b"trace 2\niter,objective,row_sum_residual,ratio_residual\n"
                         b"1,3.5,0.0,1e-10\n2,0.3333333333333333,0.0,0.0\nend\n")


def test_model_errors(rng):
    buf = io.BytesIO()
    wio.dump_model(buf, _model(rng))
    good = buf.getvalue()
    for bad in (b"NOPE" + good[4:], good[:-4], good + b"x", good.replace(b"tagmap", b"tagmop")):
        with pytest.raises(wio.FormatError):
            wio.load_model(io.BytesIO(bad))


def test_fitted_model_predicts_identically_after_reload(tmp_path, rng):
    X = np.vstack([rng.normal(-4, 1, (15, 3)), rng.normal(4, 1, (10, 3)), rng.normal((0, 6, 0), 1, (10, 3))])
    labels = np.full(35, -1)
    labels[[0, 1, 15, 25]] = [0, 0, 1, 2]
    m = fit(X, labels, PHI, FitConfig(o_prototypes=2))
    wio.save_model(tmp_path / "m", m)
    assert predict(X, wio.load_model_file(tmp_path / "m")).tolist() == predict(X, m).tolist()
