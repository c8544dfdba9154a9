from fractions import Fraction

import numpy as np
import pytest

from ssyn.errors import ConfigurationError, DimensionError, NumericError
from ssyn.media import AudioClip, VideoClip, make_batches, segment
from ssyn.ndtensor import Optimizer, Tensor, backward, ops
from ssyn.vqvae import (
    Codebook,
    EncoderNet,
    ReconDecoderNet,
    VqvaeNets,
    encode,
    nearest_code_indices,
    pad_frames_to_multiple,
    quantize,
    reconstruct,
    straight_through,
    vq_losses,
    vqvae_train_step,
)


def brute_force_nearest(flat: np.ndarray, emb: np.ndarray) -> np.ndarray:
    # Strict less-than keeps the lowest index on exact ties.
    out = np.empty(flat.shape[0], dtype=np.int64)
    for i, site in enumerate(flat.astype(np.float64)):
        best, best_d = 0, None
        for k, e in enumerate(emb.astype(np.float64)):
            d = ((site - e) ** 2).sum()
            if best_d is None or d < best_d:
                best, best_d = k, d
        out[i] = best
    return out


def make_codebook(rng, k, d):
    cb = Codebook(rng, k, d)
    cb.embeddings.data = rng.normal(size=(k, d)).astype(np.float32)
    return cb


# ---------------------------------------------------------------- encode


def test_encode_shape_at_full_scale():
    rng = np.random.default_rng(0)
    net = EncoderNet(rng, embed_dim=64, hidden_channels=2)
    video = rng.uniform(0, 1, (2, 3, 8, 144, 256)).astype(np.float32)
    z = encode(net, video)
    assert z.shape == (2, 64, 2, 36, 64)
    assert np.isfinite(z.data).all()


def test_encode_zero_video_constant_interior():
    rng = np.random.default_rng(1)
    net = EncoderNet(rng, embed_dim=6, hidden_channels=4)
    net.conv1_b.data = rng.uniform(0.1, 1.0, 4).astype(np.float32)
    net.conv2_b.data = rng.uniform(0.1, 1.0, 6).astype(np.float32)
    z = encode(net, np.zeros((1, 3, 16, 16, 16), np.float32)).data
    # Interior sites see no zero padding, so a constant input gives a
    # constant bias-driven response there.
    interior = z[:, :, 1:3, 1:3, 1:3]
    ref = interior[:, :, :1, :1, :1]
    np.testing.assert_array_equal(interior, np.broadcast_to(ref, interior.shape))


@pytest.mark.parametrize("shape,axis", [
    ((1, 3, 6, 8, 8), "T"),
    ((1, 3, 8, 10, 8), "H"),
    ((1, 3, 8, 8, 9), "W"),
])
def test_encode_rejects_indivisible_extents(shape, axis):
    rng = np.random.default_rng(2)
    net = EncoderNet(rng, embed_dim=4, hidden_channels=2)
    with pytest.raises(ConfigurationError) as err:
        encode(net, np.zeros(shape, np.float32))
    assert axis in str(err.value)


def test_encode_rejects_wrong_channels():
    rng = np.random.default_rng(3)
    net = EncoderNet(rng, embed_dim=4, hidden_channels=2)
    with pytest.raises(DimensionError):
        encode(net, np.zeros((1, 4, 8, 8, 8), np.float32))


# ---------------------------------------------------------------- quantize


def test_quantize_hand_case():
    rng = np.random.default_rng(4)
    cb = Codebook(rng, 2, 2)
    cb.embeddings.data = np.array([[0.0, 0.0], [1.0, 1.0]], np.float32)
    z = Tensor(np.array([0.2, 0.1], np.float32).reshape(1, 2, 1, 1, 1))
    idx, z_q = quantize(z, cb)
    assert idx.shape == (1, 1, 1, 1)
    assert idx[0, 0, 0, 0] == 0
    np.testing.assert_array_equal(z_q.data.ravel(), [0.0, 0.0])


def test_quantize_tie_breaks_to_lowest_index():
    rng = np.random.default_rng(5)
    cb = Codebook(rng, 2, 2)
    cb.embeddings.data = np.array([[0.0, 0.0], [1.0, 1.0]], np.float32)
    z = Tensor(np.array([0.5, 0.5], np.float32).reshape(1, 2, 1, 1, 1))
    idx, _ = quantize(z, cb)
    assert idx[0, 0, 0, 0] == 0


@pytest.mark.parametrize("seed", range(5))
def test_quantize_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    k, d = 8, 4
    emb = rng.normal(size=(k, d)).astype(np.float32)
    flat = rng.normal(size=(100, d)).astype(np.float32)
    got = nearest_code_indices(flat, emb)
    np.testing.assert_array_equal(got, brute_force_nearest(flat, emb))


def test_quantize_forced_ties_match_oracle():
    # Values on a 1/16 grid make site +- delta exact in float32, so the two
    # mirrored embeddings are genuinely equidistant (bitwise) from each site.
    rng = np.random.default_rng(6)
    d = 4
    sites = (rng.integers(-16, 17, size=(20, d)) / 16.0).astype(np.float32)
    delta = (rng.integers(1, 17, size=(20, d)) / 16.0).astype(np.float32)
    for i in range(20):
        emb = np.stack([sites[i] + delta[i], sites[i] - delta[i]])
        got = nearest_code_indices(sites[i:i + 1], emb)
        np.testing.assert_array_equal(got, brute_force_nearest(sites[i:i + 1], emb))
        assert got[0] == 0  # tie resolves to the lowest index

    # And a crowded codebook where every distance ties across all rows.
    emb = np.concatenate([sites + delta, sites - delta], axis=0)
    got = nearest_code_indices(sites, emb)
    np.testing.assert_array_equal(got, brute_force_nearest(sites, emb))


def test_quantize_nearest_property():
    rng = np.random.default_rng(7)
    cb = make_codebook(rng, 16, 6)
    z = Tensor(rng.normal(size=(2, 6, 2, 2, 2)).astype(np.float32))
    idx, z_q = quantize(z, cb)
    flat_z = np.moveaxis(z.data, 1, 4).reshape(-1, 6).astype(np.float64)
    flat_q = np.moveaxis(z_q.data, 1, 4).reshape(-1, 6).astype(np.float64)
    chosen = ((flat_z - flat_q) ** 2).sum(axis=1)
    for e in cb.embeddings.data.astype(np.float64):
        other = ((flat_z - e) ** 2).sum(axis=1)
        assert (chosen <= other + 1e-12).all()


def test_quantize_permutation_stable():
    rng = np.random.default_rng(8)
    k, d = 12, 5
    emb = rng.normal(size=(k, d)).astype(np.float32)
    flat = rng.normal(size=(64, d)).astype(np.float32)
    base = nearest_code_indices(flat, emb)
    perm = rng.permutation(k)
    permuted = nearest_code_indices(flat, emb[perm])
    inverse = np.argsort(perm)
    np.testing.assert_array_equal(permuted, inverse[base])


def test_quantize_rejects_dim_mismatch():
    rng = np.random.default_rng(9)
    cb = Codebook(rng, 4, 3)
    with pytest.raises(DimensionError):
        quantize(Tensor(np.zeros((1, 5, 1, 1, 1), np.float32)), cb)


def test_quantize_rejects_nonfinite():
    rng = np.random.default_rng(10)
    cb = Codebook(rng, 4, 2)
    z = np.zeros((1, 2, 1, 1, 1), np.float32)
    z[0, 0] = np.inf
    with pytest.raises(NumericError):
        quantize(Tensor(z), cb)


# ---------------------------------------------------------------- losses


def test_vq_losses_identity_is_zero():
    z = Tensor(np.ones((1, 2, 1, 1, 2), np.float32), requires_grad=True)
    q = Tensor(np.ones((1, 2, 1, 1, 2), np.float32), requires_grad=True)
    quant, commit = vq_losses(z, q, beta=0.25)
    assert quant.item() == 0.0
    assert commit.item() == 0.0


def test_vq_losses_hand_arithmetic():
    z = Tensor(np.array([1.0, 0.0], np.float32).reshape(1, 2, 1, 1, 1), requires_grad=True)
    q = Tensor(np.array([0.0, 0.0], np.float32).reshape(1, 2, 1, 1, 1), requires_grad=True)
    quant, commit = vq_losses(z, q, beta=0.25)
    assert quant.item() == pytest.approx(0.5)
    assert commit.item() == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(3))
def test_vq_losses_match_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    z = Tensor(rng.normal(size=(2, 3, 1, 2, 2)).astype(np.float32), requires_grad=True)
    q = Tensor(rng.normal(size=(2, 3, 1, 2, 2)).astype(np.float32), requires_grad=True)
    quant, commit = vq_losses(z, q, beta=0.25)
    acc = 0.0
    for a, b in zip(z.data.ravel().tolist(), q.data.ravel().tolist()):
        acc += (a - b) ** 2
    expected = acc / z.data.size
    assert quant.item() == pytest.approx(expected, rel=1e-6)
    assert commit.item() == pytest.approx(expected, rel=1e-6)


def test_vq_losses_gradient_routing():
    rng = np.random.default_rng(11)
    cb = make_codebook(rng, 4, 2)
    z = Tensor(rng.normal(size=(1, 2, 1, 1, 2)).astype(np.float32), requires_grad=True)
    _, z_q = quantize(z, cb)

    quant, commit = vq_losses(z, z_q, beta=0.25)
    backward(quant)
    assert cb.embeddings.grad is not None
    assert z.grad is None

    cb.embeddings.grad = None
    backward(commit)
    assert z.grad is not None
    assert cb.embeddings.grad is None


def test_vq_losses_shape_mismatch():
    z = Tensor(np.zeros((1, 2, 1, 1, 1), np.float32))
    q = Tensor(np.zeros((1, 3, 1, 1, 1), np.float32))
    with pytest.raises(DimensionError):
        vq_losses(z, q, beta=0.25)


# ---------------------------------------------------------------- straight-through


def test_straight_through_forward_bitwise():
    rng = np.random.default_rng(12)
    z = Tensor(rng.normal(size=(2, 3, 1, 2, 2)).astype(np.float32), requires_grad=True)
    q = Tensor(rng.normal(size=(2, 3, 1, 2, 2)).astype(np.float32), requires_grad=True)
    out = straight_through(z, q)
    assert out.data.tobytes() == q.data.tobytes()


def test_straight_through_identity_gradient():
    rng = np.random.default_rng(13)
    cb = make_codebook(rng, 4, 3)
    z = Tensor(rng.normal(size=(1, 3, 1, 1, 2)).astype(np.float32), requires_grad=True)
    _, z_q = quantize(z, cb)
    out = straight_through(z, z_q)
    backward(ops.sum_all(out))
    np.testing.assert_array_equal(z.grad, np.ones_like(z.data))
    assert cb.embeddings.grad is None


# ---------------------------------------------------------------- reconstruct


def test_reconstruct_shape_inverts_encoder():
    rng = np.random.default_rng(14)
    net = ReconDecoderNet(rng, embed_dim=4, hidden_channels=2)
    z = Tensor(rng.normal(size=(1, 4, 2, 36, 64)).astype(np.float32))
    out = reconstruct(net, z)
    assert out.shape == (1, 3, 8, 144, 256)


def test_reconstruct_zero_network_is_half():
    rng = np.random.default_rng(15)
    net = ReconDecoderNet(rng, embed_dim=3, hidden_channels=2)
    for _, p in net.named_parameters():
        p.data = np.zeros_like(p.data)
    out = reconstruct(net, Tensor(np.ones((1, 3, 1, 2, 2), np.float32)))
    np.testing.assert_array_equal(out.data, np.full_like(out.data, 0.5))


@pytest.mark.parametrize("seed", range(3))
def test_reconstruct_range_open_unit_interval(seed):
    rng = np.random.default_rng(seed)
    net = ReconDecoderNet(rng, embed_dim=4, hidden_channels=3)
    out = reconstruct(net, Tensor(rng.normal(size=(1, 4, 1, 2, 2)).astype(np.float32)))
    assert (out.data > 0.0).all() and (out.data < 1.0).all()


def test_reconstruct_roundtrip_with_encoder_shapes():
    rng = np.random.default_rng(16)
    enc = EncoderNet(rng, embed_dim=4, hidden_channels=2)
    dec = ReconDecoderNet(rng, embed_dim=4, hidden_channels=2)
    video = rng.uniform(0, 1, (2, 3, 4, 8, 8)).astype(np.float32)
    z = encode(enc, video)
    out = reconstruct(dec, z)
    assert out.shape == video.shape


# ---------------------------------------------------------------- training step


def tiny_batch(rng, b=1, t=4, hw=8, fps=4, sr=200):
    frames = rng.uniform(0, 1, (b * t, 3, hw, hw)).astype(np.float32)
    video = VideoClip(frames=frames, fps=Fraction(fps))
    audio = AudioClip(samples=rng.uniform(-1, 1, b * sr).astype(np.float32), sample_rate=sr)
    pairs = segment(video, audio, segment_seconds=1, mode="train")
    return make_batches(pairs, batch_max=2)[0]


def fresh_model(seed, k=8, d=4, hidden=2):
    rng = np.random.default_rng(seed)
    nets = VqvaeNets(encoder=EncoderNet(rng, embed_dim=d, hidden_channels=hidden),
                     recon=ReconDecoderNet(rng, embed_dim=d, hidden_channels=hidden))
    cb = Codebook(rng, k, d)
    params = [p for _, p in nets.named_parameters()] + [cb.embeddings]
    return nets, cb, params


def test_train_step_descends_on_tiny_batch():
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        batch = tiny_batch(rng)
        nets, cb, params = fresh_model(seed)
        opt = Optimizer(params, lr=1e-3, mode="plain")
        first = vqvae_train_step(nets, cb, batch, opt)
        second = vqvae_train_step(nets, cb, batch, opt)
        if second["total"] < first["total"]:
            wins += 1
    assert wins >= 18


def test_train_step_indices_stay_in_range():
    rng = np.random.default_rng(17)
    batch = tiny_batch(rng)
    nets, cb, params = fresh_model(17, k=8)
    opt = Optimizer(params, lr=1e-2, mode="adaptive")
    for _ in range(5):
        record = vqvae_train_step(nets, cb, batch, opt)
        assert record["indices"].min() >= 0
        assert record["indices"].max() < 8


def test_train_step_beta_zero_matches_commitment_free_run():
    def manual_commit_free_step(nets, cb, batch, opt):
        x = Tensor(batch.video_array())
        z_e = encode(nets.encoder, x)
        _, z_q = quantize(z_e, cb)
        quant = ops.mse(z_q, ops.detach(z_e))
        recon = reconstruct(nets.recon, straight_through(z_e, z_q))
        total = ops.add(ops.mse(recon, x), quant)
        backward(total)
        opt.step()

    rng = np.random.default_rng(18)
    batch = tiny_batch(rng)

    nets_a, cb_a, params_a = fresh_model(18)
    opt_a = Optimizer(params_a, lr=1e-3, mode="plain")
    vqvae_train_step(nets_a, cb_a, batch, opt_a, beta=0.0)

    nets_b, cb_b, params_b = fresh_model(18)
    opt_b = Optimizer(params_b, lr=1e-3, mode="plain")
    manual_commit_free_step(nets_b, cb_b, batch, opt_b)

    for (name, pa), (_, pb) in zip(
        nets_a.named_parameters() + cb_a.named_parameters(),
        nets_b.named_parameters() + cb_b.named_parameters(),
    ):
        assert pa.data.tobytes() == pb.data.tobytes(), name


def test_train_step_aborts_on_nonfinite():
    rng = np.random.default_rng(19)
    batch = tiny_batch(rng)
    nets, cb, params = fresh_model(19)
    nets.encoder.conv1_w.data[0, 0, 0, 0, 0] = np.inf
    opt = Optimizer(params, lr=1e-3, mode="plain")
    before = cb.embeddings.data.copy()
    with pytest.raises(NumericError):
        vqvae_train_step(nets, cb, batch, opt)
    assert opt.step_count == 0
    np.testing.assert_array_equal(cb.embeddings.data, before)


# ---------------------------------------------------------------- loss-direction


@pytest.mark.parametrize("seed", range(10))
def test_isolated_quantization_step_moves_codebook_closer(seed):
    rng = np.random.default_rng(seed)
    cb = make_codebook(rng, 6, 3)
    z = Tensor(rng.normal(size=(1, 3, 1, 2, 2)).astype(np.float32))
    _, z_q = quantize(z, cb)
    quant, _ = vq_losses(z, z_q, beta=0.25)
    before = quant.item()
    backward(quant)
    Optimizer([cb.embeddings], lr=1e-2, mode="plain").step()
    _, z_q2 = quantize(z, cb)
    after = ops.mse(z_q2, ops.detach(z)).item()
    assert after < before


@pytest.mark.parametrize("seed", range(10))
def test_isolated_commitment_step_moves_encoder_output_closer(seed):
    rng = np.random.default_rng(50 + seed)
    cb = make_codebook(rng, 6, 3)
    enc = EncoderNet(rng, embed_dim=3, hidden_channels=2)
    video = Tensor(rng.uniform(0, 1, (1, 3, 4, 8, 8)).astype(np.float32))

    z = encode(enc, video)
    _, z_q = quantize(z, cb)
    frozen_q = Tensor(z_q.data.copy())
    _, commit = vq_losses(z, z_q, beta=0.25)
    before = commit.item()
    backward(commit)
    Optimizer([p for _, p in enc.named_parameters()], lr=1e-3, mode="plain").step()

    z2 = encode(enc, video)
    after = ops.mse(z2, frozen_q).item()
    assert after < before


# ---------------------------------------------------------------- padding helper


def test_pad_frames_repeats_last():
    frames = np.arange(2 * 3 * 6 * 2 * 2, dtype=np.float32).reshape(2, 3, 6, 2, 2)
    out = pad_frames_to_multiple(frames, 4)
    assert out.shape == (2, 3, 8, 2, 2)
    np.testing.assert_array_equal(out[:, :, 6], frames[:, :, 5])
    np.testing.assert_array_equal(out[:, :, 7], frames[:, :, 5])
    already = pad_frames_to_multiple(frames[:, :, :4], 4)
    assert already.shape[2] == 4
