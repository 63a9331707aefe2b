import numpy as np
import pytest

from core.errors import (
    CheckpointError, ConfigError, DimensionError, DomainError, MissingArtifactError,
    UndefinedMetricError, UsageError,
)
from core.labeling import martensite_fraction, one_hot
from core.rng import Rng
from core.types import DeformationMode, MicrostructureImage
from neuralnet.checkpoint import decode, encode, load_checkpoint, save_checkpoint
from neuralnet.layers import (
    ChannelSoftmax, Conv2D, ConvTranspose2D, Dense, LeakyReLU, MeanPool2D, ReLU, Reshape,
)
from neuralnet.network import Network, build_critic, build_generator, build_regressor
from neuralnet.optim import Adam, adam_step
from neuralnet.regressor import (
    CnnConfig, Normalizer, predict_batch, predict_props, r_squared, split_indices, train_cnn,
)
from neuralnet.wgan import (
    WganConfig, clip_weights, critic_loss, generate, generate_batch, generate_tensor,
    latent_fraction_map, rescale_latent, train_wgan,
)
from pipeline.stages import trace_slope


def _rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-30)


def _fd_check(module, x, rng, n_param_samples=12, h=1e-5):
    """Compare backward() against central differences of L = sum(R * f(x))."""
    y = module.forward(x)
    R = rng.normal(size=y.shape)
    dx = module.backward(R)

    def loss():
        return float(np.sum(R * module.forward(x, cache=False)))

    num_dx = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = loss()
        x[idx] = old - h
        down = loss()
        x[idx] = old
        num_dx[idx] = (up - down) / (2 * h)
    assert _rel_err(dx, num_dx) < 1e-4

    params = module.parameters() if isinstance(module, Network) else module.params
    grads = module.gradients() if isinstance(module, Network) else module.grads
    for key, p in params.items():
        flat = p.reshape(-1)
        picks = rng.choice(flat.size, size=min(n_param_samples, flat.size), replace=False)
        analytic, numeric = [], []
        for k in picks:
            old = flat[k]
            flat[k] = old + h
            up = loss()
            flat[k] = old - h
            down = loss()
            flat[k] = old
            numeric.append((up - down) / (2 * h))
            analytic.append(grads[key].reshape(-1)[k])
        assert _rel_err(np.array(analytic), np.array(numeric)) < 1e-4, key


# --- Convolution ---

def _naive_conv(x, W, b, stride, pad):
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    k = W.shape[0]
    n, h, w, _ = xp.shape
    ho, wo = (h - k) // stride + 1, (w - k) // stride + 1
    y = np.zeros((n, ho, wo, W.shape[3]))
    for s in range(n):
        for i in range(ho):
            for j in range(wo):
                for kk in range(W.shape[3]):
                    total = b[kk]
                    for p in range(k):
                        for q in range(k):
                            for l in range(W.shape[2]):
                                total += W[p, q, l, kk] * xp[s, stride * i + p, stride * j + q, l]
                    y[s, i, j, kk] = total
    return y


def test_conv_identity_kernel():
    layer = Conv2D(3, 3, 1)
    layer.params["W"][0, 0] = np.eye(3)
    x = np.random.default_rng(0).normal(size=(2, 5, 5, 3))
    assert np.array_equal(layer.forward(x), x)


def test_conv_ones_kernel():
    layer = Conv2D(1, 1, 2)
    layer.params["W"][...] = 1.0
    y = layer.forward(np.ones((1, 3, 3, 1)))
    assert y.shape == (1, 2, 2, 1)
    assert np.all(y == 4.0)


@pytest.mark.parametrize("stride,pad", [(1, 0), (1, 1), (2, 1)])
def test_conv_matches_naive_loops(stride, pad):
    rng = np.random.default_rng(stride * 10 + pad)
    layer = Conv2D(2, 3, 3, stride=stride, padding=pad, rng=Rng(1))
    layer.params["b"][...] = rng.normal(size=3)
    x = rng.normal(size=(2, 7, 7, 2))
    expected = _naive_conv(x, layer.params["W"], layer.params["b"], stride, pad)
    assert np.allclose(layer.forward(x), expected, atol=1e-12, rtol=0)


def test_conv_transpose_is_adjoint_of_conv():
    rng = np.random.default_rng(3)
    conv = Conv2D(2, 3, 4, stride=2, padding=1, rng=Rng(2))
    convt = ConvTranspose2D(3, 2, 4, stride=2, padding=1)
    # W[p, q, c_in, c_out] of the transpose is the conv kernel with channels swapped
    convt.params["W"][...] = conv.params["W"].transpose(0, 1, 3, 2)
    x = rng.normal(size=(1, 8, 8, 2))
    y = rng.normal(size=(1, 4, 4, 3))
    lhs = np.sum(conv.forward(x) * y)
    rhs = np.sum(x * convt.forward(y))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_conv_channel_mismatch():
    with pytest.raises(DimensionError):
        Conv2D(3, 4, 3).forward(np.zeros((1, 8, 8, 2)))


# --- Backward ---

LAYER_CASES = [
    (lambda: Dense(6, 4, Rng(1)), (3, 6)),
    (lambda: Conv2D(2, 3, 3, padding=1, rng=Rng(2)), (2, 8, 8, 2)),
    (lambda: Conv2D(2, 3, 4, stride=2, padding=1, rng=Rng(3)), (2, 8, 8, 2)),
    (lambda: ConvTranspose2D(3, 2, 4, stride=2, padding=1, rng=Rng(4)), (2, 4, 4, 3)),
    (lambda: LeakyReLU(0.2), (2, 8, 8, 2)),
    (ReLU, (2, 8, 8, 2)),
    (lambda: MeanPool2D(2), (2, 8, 8, 2)),
    (ChannelSoftmax, (2, 8, 8, 3)),
    (lambda: Reshape((128,)), (2, 8, 8, 2)),
]


@pytest.mark.parametrize("factory,shape", LAYER_CASES)
def test_layer_gradients_match_finite_differences(factory, shape):
    rng = np.random.default_rng(11)
    layer = factory()
    for key in layer.params:
        if key == "b":
            layer.params[key][...] = rng.normal(scale=0.1, size=layer.params[key].shape)
    _fd_check(layer, rng.normal(size=shape), rng)


def test_zero_upstream_gradient():
    layer = Conv2D(2, 3, 3, padding=1, rng=Rng(5))
    x = np.random.default_rng(0).normal(size=(1, 8, 8, 2))
    y = layer.forward(x)
    dx = layer.backward(np.zeros_like(y))
    assert not dx.any()
    assert not layer.grads["W"].any() and not layer.grads["b"].any()


def test_backward_without_forward():
    with pytest.raises(UsageError):
        Dense(2, 2).backward(np.ones((1, 2)))
    layer = Dense(2, 2)
    layer.forward(np.ones((1, 2)), cache=False)
    with pytest.raises(UsageError):
        layer.backward(np.ones((1, 2)))


def test_linear_network_matches_least_squares_gradient():
    rng = np.random.default_rng(4)
    net = Network([Dense(3, 2, Rng(6))], "linear", (3,))
    X = rng.normal(size=(10, 3))
    Y = rng.normal(size=(10, 2))
    residual = net.forward(X) - Y
    net.backward(residual)
    W = net.parameters()["0.W"]
    b = net.parameters()["0.b"]
    assert np.allclose(net.gradients()["0.W"], X.T @ (X @ W + b - Y), atol=1e-12)
    assert np.allclose(net.gradients()["0.b"], (X @ W + b - Y).sum(axis=0), atol=1e-12)


@pytest.mark.parametrize("builder,shape", [
    (lambda: build_generator(Rng(7), size=8), (2, 2)),
    (lambda: build_critic(Rng(8), size=8), (2, 8, 8, 3)),
    (lambda: build_regressor(Rng(9), size=8, hidden=8), (2, 8, 8, 3)),
])
def test_composed_network_gradients(builder, shape):
    rng = np.random.default_rng(21)
    net = builder()
    # lift the zero-initialized head so every parameter gets a signal
    for value in net.parameters().values():
        if not value.any():
            value[...] = rng.normal(scale=0.1, size=value.shape)
    _fd_check(net, rng.uniform(-1, 1, size=shape), rng, n_param_samples=6)


def test_softmax_sums_to_one():
    y = ChannelSoftmax().forward(np.random.default_rng(0).normal(scale=30, size=(2, 8, 8, 3)))
    assert np.allclose(y.sum(axis=-1), 1.0, atol=1e-12, rtol=0)


def test_network_shapes():
    assert build_generator(Rng(0)).output_shape() == (1, 32, 32, 3)
    assert build_critic(Rng(0)).output_shape() == (1, 1)
    assert build_regressor(Rng(0)).output_shape() == (1, 2)
    n = build_critic(Rng(0)).n_params
    assert build_critic(Rng(1)).n_params == n


def test_reshape_size_mismatch_rejected_at_build():
    with pytest.raises(DimensionError):
        Network([Conv2D(3, 4, 3, padding=1), MeanPool2D(2)], "bad", (7, 7, 3))


# --- Adam ---

def test_adam_zero_gradient_only_advances_step():
    params = {"w": np.array([1.5, -2.0])}
    opt = Adam(lr=0.1)
    opt.step(params, {"w": np.zeros(2)})
    assert np.array_equal(params["w"], [1.5, -2.0])
    assert opt.t == 1


def test_adam_first_step_is_lr():
    params = {"w": np.array([0.0])}
    opt = Adam(lr=1e-4)
    adam_step(params, {"w": np.array([1.0])}, opt)
    assert params["w"][0] == pytest.approx(-1e-4 / (1 + 1e-8), abs=1e-18)


def test_adam_two_step_hand_check():
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    params = {"w": np.array([1.0])}
    opt = Adam(lr, b1, b2, eps)
    opt.step(params, {"w": np.array([1.0])})
    opt.step(params, {"w": np.array([2.0])})

    theta, m, v = 1.0, 0.0, 0.0
    for t, g in ((1, 1.0), (2, 2.0)):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * (g * g)
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
    assert abs(params["w"][0] - theta) < 1e-15


def test_adam_minimizes_quadratic():
    params = {"theta": np.array([0.0])}
    opt = Adam(lr=0.1)
    for _ in range(200):
        opt.step(params, {"theta": 2 * (params["theta"] - 3.0)})
    assert abs(params["theta"][0] - 3.0) < 0.5


def test_adam_shape_mismatch():
    with pytest.raises(DimensionError):
        Adam().step({"w": np.zeros(2)}, {"w": np.zeros(3)})


# --- WGAN ---

def test_critic_loss_examples():
    assert critic_loss(np.ones(4), np.zeros(4)) == 1.0
    batch = np.array([0.3, -0.1, 0.8])
    assert critic_loss(batch, batch) == 0.0
    assert critic_loss([0.6, 0.8], [0.1, 0.3]) == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        critic_loss([], [1.0])


def test_clip_weights():
    net = Network([Dense(2, 2)], "c", (2,))
    net.parameters()["0.W"][...] = [[0.5, -0.5], [0.005, -0.002]]
    clip_weights(net, 0.01)
    assert np.array_equal(net.parameters()["0.W"], [[0.01, -0.01], [0.005, -0.002]])
    before = {k: v.copy() for k, v in net.parameters().items()}
    clip_weights(net, 0.01)
    for k, v in net.parameters().items():
        assert np.array_equal(v, before[k])
    with pytest.raises(ConfigError):
        clip_weights(net, 0.0)


def test_rescale_latent():
    assert np.allclose(rescale_latent([0.0, 100.0]), [[-1.0, 1.0]])
    assert np.allclose(rescale_latent([50.0, 25.0]), [[0.0, -0.5]])
    with pytest.raises(DomainError):
        rescale_latent([101.0, 50.0])
    with pytest.raises(DomainError):
        rescale_latent([-0.1, 50.0])


def test_generate_is_pure_and_valid():
    gen = build_generator(Rng(3))
    a = generate(gen, np.array([30.0, 70.0]))
    b = generate(gen, np.array([30.0, 70.0]))
    assert isinstance(a, MicrostructureImage)
    assert a == b
    grid = np.linspace(0, 100, 5)
    zs = np.array([(u, v) for u in grid for v in grid])
    images = generate_batch(gen, zs)
    assert len(images) == 25
    assert all(im.labels.shape == (32, 32) and im.labels.max() <= 2 for im in images)
    with pytest.raises(DomainError):
        generate(gen, np.array([150.0, 0.0]))
    with pytest.raises(DimensionError):
        generate(gen, np.array([1.0, 2.0, 3.0]))


def test_latent_fraction_map():
    gen = build_generator(Rng(3), size=8)
    table = latent_fraction_map(gen, resolution=3)
    assert list(table.columns) == ["z1", "z2", "martensite_fraction"]
    assert len(table) == 9
    assert table["martensite_fraction"].between(0, 1).all()


def _band_dataset(n, size=8, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        labels = np.zeros((size, size), dtype=np.uint8)
        labels[: rng.integers(1, size)] = 1
        out.append(one_hot(MicrostructureImage(labels)))
    return np.stack(out)


def test_train_wgan_schedule_and_clipping(tmp_path):
    data = _band_dataset(6)
    config = WganConfig(iterations=20, batch_size=4, checkpoint_every=10, log_every=0)
    result = train_wgan(data, config, Rng(5), checkpoint_dir=tmp_path)
    trace = result.trace
    assert list(trace.columns) == ["iteration", "loss", "phase"]
    assert len(trace) == 20
    phases = trace["phase"].tolist()
    assert phases.count("generator") == 2
    assert phases[9] == "generator" and phases[19] == "generator"
    assert np.isfinite(trace["loss"]).all()
    for value in result.critic.parameters().values():
        assert np.abs(value).max() <= config.clip
    assert (tmp_path / "generator.mfnn").exists()
    assert load_checkpoint(tmp_path / "critic.mfnn").extra["iteration"] == 20


def test_train_wgan_is_deterministic():
    data = _band_dataset(4)
    config = WganConfig(iterations=12, batch_size=3, checkpoint_every=0, log_every=0)
    a = train_wgan(data, config, Rng(9))
    b = train_wgan(data, config, Rng(9))
    assert a.trace["loss"].tolist() == b.trace["loss"].tolist()
    for key, value in a.generator.parameters().items():
        assert np.array_equal(value, b.generator.parameters()[key])


def test_train_wgan_rejects_empty_dataset():
    with pytest.raises(ConfigError):
        train_wgan(np.zeros((0, 8, 8, 3)), WganConfig(iterations=1), Rng(0))


def _two_band_dataset(n, size=32, seed=0):
    """Ferrite with one band of each martensite variant at random rows."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        labels = np.zeros((size, size), dtype=np.uint8)
        first, second = rng.choice(size - 3, size=2, replace=False)
        labels[first:first + 3] = 1
        labels[second:second + 3] = 2
        out.append(one_hot(MicrostructureImage(labels)))
    return np.stack(out)


def test_train_wgan_critic_estimate_stops_rising():
    config = WganConfig(iterations=1000, batch_size=8, cycle=10, clip=0.01, checkpoint_every=0, log_every=0)
    result = train_wgan(_two_band_dataset(20, size=8), config, Rng(12))
    tail = result.trace[result.trace["phase"] == "critic"]
    tail = tail.iloc[int(len(tail) * 0.8):]
    slope = trace_slope(result.trace)
    rise = slope * (tail["iteration"].iloc[-1] - tail["iteration"].iloc[0])
    assert np.isfinite(slope)
    assert rise <= 2.0 * tail["loss"].std()
    images = generate_batch(result.generator, np.random.default_rng(0).uniform(0, 100, (16, 2)))
    assert all(set(np.unique(im.labels)) <= {0, 1, 2} for im in images)


@pytest.mark.slow
def test_train_wgan_desk_convergence():
    config = WganConfig(iterations=5000, batch_size=32, cycle=10, clip=0.01, checkpoint_every=0, log_every=0)
    result = train_wgan(_two_band_dataset(200), config, Rng(2024))
    assert trace_slope(result.trace, phase="critic", tail=0.2) <= 0
    images = generate_batch(result.generator, np.random.default_rng(1).uniform(0, 100, (16, 2)))
    assert all(im.labels.shape == (32, 32) and im.labels.max() <= 2 for im in images)


def test_train_wgan_single_image_collapses_onto_it():
    labels = np.zeros((8, 8), dtype=np.uint8)
    labels[2:4] = 1
    labels[5:7] = 2
    target = one_hot(MicrostructureImage(labels))
    config = WganConfig(iterations=2000, batch_size=4, cycle=2, learning_rate=2e-3,
                        checkpoint_every=0, log_every=0)
    result = train_wgan(target[None], config, Rng(8))
    images = generate_batch(result.generator, np.random.default_rng(2).uniform(0, 100, (32, 2)))
    mean_output = np.mean([one_hot(im) for im in images], axis=0)
    assert np.abs(mean_output - target).sum(axis=-1).mean() < 0.1


def test_generate_nearby_latents_agree_more_than_distant_ones():
    gen = build_generator(Rng(21))
    rng = np.random.default_rng(4)
    base = rng.uniform(5, 95, size=(100, 2))
    angle = rng.uniform(0, 2 * np.pi, size=100)
    radius = rng.uniform(0, 4.9, size=100)
    near = np.clip(base + radius[:, None] * np.column_stack([np.cos(angle), np.sin(angle)]), 0, 100)
    corner = rng.uniform(0, 25, size=(100, 2))
    far = 100.0 - corner
    assert np.all(np.linalg.norm(far - corner, axis=1) > 50)

    def mean_l1(a, b):
        return np.abs(generate_tensor(gen, a) - generate_tensor(gen, b)).sum(axis=-1).mean()

    def agreement(a, b):
        return np.mean([np.mean(x.labels == y.labels)
                        for x, y in zip(generate_batch(gen, a), generate_batch(gen, b))])

    assert mean_l1(base, near) < mean_l1(corner, far)
    assert agreement(base, near) >= agreement(corner, far)


# --- Checkpoint ---

def test_checkpoint_round_trip(tmp_path):
    net = build_regressor(Rng(2), size=8, hidden=8)
    opt = Adam(1e-3)
    x = np.random.default_rng(0).uniform(size=(3, 8, 8, 3))
    net.forward(x)
    net.backward(np.ones((3, 2)))
    opt.step(net.parameters(), net.gradients())
    norm = Normalizer("ShearX", np.array([200.0, 0.1]), np.array([400.0, 0.5]))

    path = save_checkpoint(tmp_path / "reg.mfnn", net, opt, norm.to_dict(), {"iteration": 1})
    loaded = load_checkpoint(path)
    assert np.array_equal(loaded.network.forward(x, cache=False), net.forward(x, cache=False))
    assert loaded.optimizer.t == 1
    for key in opt.m:
        assert np.array_equal(loaded.optimizer.m[key], opt.m[key])
        assert np.array_equal(loaded.optimizer.v[key], opt.v[key])
    restored = Normalizer.from_dict(loaded.normalizer)
    assert restored.mode is DeformationMode.ShearX
    assert np.array_equal(restored.high, norm.high)

    again = save_checkpoint(tmp_path / "again.mfnn", loaded.network, loaded.optimizer,
                            loaded.normalizer, loaded.extra)
    assert again.read_bytes() == path.read_bytes()


def test_checkpoint_errors(tmp_path):
    data = encode(build_critic(Rng(1), size=8))
    with pytest.raises(CheckpointError):
        decode(b"XXXX" + data[4:])
    with pytest.raises(CheckpointError):
        decode(data[:4] + (2).to_bytes(4, "little") + data[8:])
    with pytest.raises(CheckpointError):
        decode(data[:-8])
    with pytest.raises(CheckpointError):
        decode(data[:20])
    with pytest.raises(MissingArtifactError):
        load_checkpoint(tmp_path / "absent.mfnn")


# --- CNN regressor ---

def test_normalizer():
    norm = Normalizer(DeformationMode.TensileX)
    with pytest.raises(ConfigError):
        norm.normalize([[1.0, 1.0]])
    norm.fit([[100.0, 0.1], [300.0, 0.3], [200.0, 0.2]])
    assert np.allclose(norm.normalize([[100.0, 0.1], [300.0, 0.3]]), [[0, 0], [1, 1]])
    assert np.allclose(norm.denormalize([[0.5, 0.5]]), [[200.0, 0.2]])
    assert Normalizer.from_dict(norm.to_dict()).to_dict() == norm.to_dict()


def test_normalizer_constant_column_maps_to_zero(caplog):
    norm = Normalizer(DeformationMode.ShearX).fit([[350.0, 0.1], [350.0, 0.3]])
    assert "constant training target" in caplog.text
    assert np.allclose(norm.span, [1.0, 0.2])
    assert np.allclose(norm.normalize([[350.0, 0.2]]), [[0.0, 0.5]])
    assert np.allclose(norm.denormalize([[0.0, 0.5]]), [[350.0, 0.2]])


def test_split_indices_are_disjoint_and_seeded():
    split = split_indices(20, (12, 4, 4), Rng(1))
    union = np.concatenate([split["train"], split["val"], split["test"]])
    assert sorted(union.tolist()) == list(range(20))
    again = split_indices(20, (12, 4, 4), Rng(1))
    assert all(np.array_equal(split[k], again[k]) for k in split)
    with pytest.raises(ConfigError):
        split_indices(20, (20, 0, 0), Rng(1))
    with pytest.raises(ConfigError):
        split_indices(10, (8, 2, 2), Rng(1))


def _fraction_dataset(n, size=8, seed=0):
    rng = np.random.default_rng(seed)
    images = []
    for _ in range(n):
        labels = (rng.uniform(size=(size, size)) < rng.uniform(0.05, 0.95)).astype(np.uint8)
        images.append(MicrostructureImage(labels))
    fractions = np.array([martensite_fraction(im) for im in images])
    return images, fractions


def test_train_cnn_constant_targets():
    images, _ = _fraction_dataset(20)
    targets = np.tile([350.0, 0.2], (20, 1))
    config = CnnConfig(iterations=50, learning_rate=1e-3, split=(12, 4, 4), hidden=8)
    result = train_cnn(images, targets, "ShearX", config, Rng(2))
    val = result.split["val"]
    pred = predict_batch(result.regressor, result.normalizer, [images[i] for i in val])
    assert np.mean(((pred - targets[val]) / [350.0, 0.2]) ** 2) < 1e-6
    assert result.trace["val_mse"].dropna().iloc[-1] < 1e-6


def test_train_cnn_learns_fraction_trend():
    images, fractions = _fraction_dataset(40, seed=1)
    targets = np.column_stack([300.0 + 400.0 * fractions, 0.4 - 0.3 * fractions])
    config = CnnConfig(iterations=300, learning_rate=3e-3, split=(28, 6, 6), hidden=16)
    result = train_cnn(images, targets, "ShearY", config, Rng(3))
    loss = result.trace["loss"].to_numpy()
    assert loss[-50:].mean() < loss[:50].mean()
    assert list(result.trace.columns) == ["iteration", "loss", "val_mse"]


@pytest.mark.slow
def test_train_cnn_fraction_regression_r2():
    images, fractions = _fraction_dataset(116, seed=4)
    targets = np.column_stack([300.0 + 400.0 * fractions, 0.4 - 0.3 * fractions])
    config = CnnConfig(iterations=4000, learning_rate=1e-3, split=(96, 10, 10), hidden=32)
    result = train_cnn(images, targets, "ShearX", config, Rng(4))
    test = result.split["test"]
    pred = predict_batch(result.regressor, result.normalizer, [images[i] for i in test])
    assert r_squared(pred[:, 0], targets[test, 0]) > 0.95


def test_train_cnn_empty_split():
    images, fractions = _fraction_dataset(10)
    targets = np.column_stack([fractions, fractions])
    split = {"train": np.arange(8), "val": np.arange(8, 10), "test": np.array([], dtype=int)}
    with pytest.raises(ConfigError):
        train_cnn(images, targets, "TensileX", CnnConfig(iterations=1), Rng(0), split=split)


def test_predict_props_shape_and_purity():
    images, fractions = _fraction_dataset(10)
    targets = np.column_stack([300 + fractions, 0.3 - 0.1 * fractions])
    config = CnnConfig(iterations=5, split=(6, 2, 2), hidden=8)
    result = train_cnn(images, targets, "TensileY", config, Rng(1))
    a = predict_props(result.regressor, result.normalizer, images[0])
    b = predict_props(result.regressor, result.normalizer, images[0])
    assert a == b
    assert a.mode is DeformationMode.TensileY
    with pytest.raises(DimensionError):
        predict_props(result.regressor, result.normalizer, MicrostructureImage.uniform(0, 16))


def test_r_squared():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(np.full(4, y.mean()), y) == 0.0
    assert r_squared([1.0, 2.0, 3.0, 5.0], y) == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(UndefinedMetricError):
        r_squared([1.0, 2.0], [3.0, 3.0])
    with pytest.raises(ConfigError):
        r_squared([1.0], [1.0])
