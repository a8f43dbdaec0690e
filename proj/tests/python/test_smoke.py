import math

import numpy as np
import pytest

import mtft


def test_import_surface():
    for name in ("hungarian", "ospa", "kalman_update", "run", "PipelineConfig"):
        assert hasattr(mtft, name)


def test_config_defaults():
    cfg = mtft.PipelineConfig()
    assert cfg.batch_size == 24
    assert cfg.filters == 16
    assert cfg.a_t == 5
    assert cfg.p_d == pytest.approx(0.9)


def test_iou():
    a = np.array([0.0, 0.0, 2.0, 2.0])
    assert mtft.iou(a, a) == pytest.approx(1.0)
    b = np.array([10.0, 10.0, 2.0, 2.0])
    assert mtft.iou(a, b) == 0.0


def test_hungarian():
    cost = np.array([[1.0, 2.0], [2.0, 1.0]])
    rows, cols, total = mtft.hungarian(cost)
    assert total == pytest.approx(2.0)
    assert rows == [0, 1]
    assert cols == [0, 1]


def test_ospa_cardinality_case():
    r = mtft.ospa([np.array([0.0, 0.0])], [])
    assert r.overall == pytest.approx(100.0)
    assert r.card == pytest.approx(100.0)
    assert r.loc == pytest.approx(0.0)


def test_gm_eval_peak():
    t = mtft.TargetTuple()
    t.mean = np.zeros(4)
    t.cov = np.eye(4)
    t.weight = 1.0
    s = mtft.TargetSet()
    s.targets = [t]
    assert mtft.gm_eval(s, np.zeros(2)) == pytest.approx(1.0 / (2.0 * math.pi))
    assert mtft.gm_integral(s) == pytest.approx(1.0)


def test_render_extract_roundtrip():
    g = mtft.GridSpec()
    g.extent_x = g.extent_y = 400.0
    g.ts = 10.0
    t = mtft.TargetTuple()
    t.mean = np.array([200.0, 180.0, 30.0, 40.0])
    t.cov = np.diag([100.0, 100.0, 25.0, 25.0])
    t.weight = 1.0
    s = mtft.TargetSet()
    s.targets = [t]
    phd = mtft.render_phd(s, g)
    assert phd.values.shape == (40, 40)
    assert phd.integral() == pytest.approx(1.0, abs=0.02)
    pk = mtft.extract_peaks(phd, 1, 30.0)
    assert len(pk.peaks) == 1
    assert abs(pk.peaks[0].pos[0] - 200.0) <= g.ts
    assert abs(pk.peaks[0].pos[1] - 180.0) <= g.ts


def test_train_online_smoke():
    g = mtft.GridSpec()
    g.extent_x = g.extent_y = 80.0
    g.ts = 10.0
    batch = mtft.PddBatch()
    batch.grid = g
    batch.capacity = 2
    rng = np.random.default_rng(3)
    for _ in range(2):
        m = mtft.PhdMap()
        m.grid = g
        m.values = rng.normal(0.0, 0.3, size=(8, 8))
        batch.push(m)
    assert batch.full()
    params = mtft.make_params(1, 5)
    opt = mtft.make_adam(params)
    target = rng.normal(0.0, 0.3, size=(8, 8))
    rec = mtft.train_online(params, opt, batch, target, 5, mtft.LossKind.KL)
    assert len(rec.epoch_loss) == 5
    assert all(math.isfinite(x) for x in rec.epoch_loss)
    assert opt.t == 5


def test_pipeline_run(tmp_path):
    det = tmp_path / "det.txt"
    rows = []
    for f in range(1, 13):
        for cx, cy in ((200.0 + 5.0 * (f - 1), 300.0),
                       (700.0, 500.0 + 4.0 * (f - 1))):
            rows.append(f"{f},-1,{cx - 15.0},{cy - 20.0},30,40,1,-1,-1,-1")
    det.write_text("\n".join(rows) + "\n")
    seq = mtft.parse_detections(det)
    assert seq.last_frame == 12

    gt = {
        f: [
            (1, np.array([200.0 + 5.0 * (f - 1), 300.0, 30.0, 40.0])),
            (2, np.array([700.0, 500.0 + 4.0 * (f - 1), 30.0, 40.0])),
        ]
        for f in range(1, 13)
    }

    cfg = mtft.PipelineConfig()
    cfg.extent_x = cfg.extent_y = 1000.0
    cfg.filters = 1
    cfg.batch_size = 1000  # window never fills: no training in this smoke run
    res = mtft.run(cfg, seq, gt)
    assert res.has_gt
    assert res.mot.mota == pytest.approx(1.0)
    assert res.mot.id_switches == 0
    assert len(res.tracks) == 12
    assert len(res.tracks[5]) == 2
