import numpy as np
import pytest
import torch

from decotok.captions import CaptionCorpus, parse_token
from decotok.embeddings import (load_embeddings, pseudo_embedding,
                                pseudo_embeddings, save_embeddings)
from decotok.errors import FormatError, ValidationError
from decotok.graph import build_graph
from decotok.quantizer import (GraphProjector, LanguageQuantizer,
                               LatentTokens, indices_to_words, vq_loss)
from decotok.vocab import build_vocabulary


def _corpus(*captions):
    return CaptionCorpus(records=[
        (f"c{i}", [parse_token(tok) for tok in text.split()])
        for i, text in enumerate(captions)])


def _toy_quantizer(d_latent=6, d_text=8, hidden=16, seed=0):
    corpus = _corpus(
        "red/ADJ ball/NOUN rolls/VERB fast/ADV",
        "blue/ADJ cube/NOUN slides/VERB slowly/ADV",
        "green/ADJ disk/NOUN spins/VERB fast/ADV")
    vocab = build_vocabulary(corpus, min_freq=1)
    graph = build_graph(corpus, vocab)
    emb = pseudo_embeddings(vocab, d_text)
    q = LanguageQuantizer(vocab, emb, graph, d_latent, hidden=hidden)
    g = torch.Generator().manual_seed(seed)
    for p in q.projector.parameters():
        with torch.no_grad():
            p.copy_(0.5 * torch.randn(p.shape, generator=g))
    return q


# --------------------------------------------------------------- embeddings


def test_pseudo_embeddings_unit_norm_and_deterministic():
    v1 = pseudo_embedding("ball", "noun", 16)
    v2 = pseudo_embedding("ball", "noun", 16)
    assert np.array_equal(v1, v2)
    assert np.linalg.norm(v1) == pytest.approx(1.0, abs=1e-6)
    assert not np.array_equal(v1, pseudo_embedding("ball", "verb", 16))


def test_embedding_file_round_trip(tmp_path):
    rows = torch.randn(5, 7)
    path = tmp_path / "emb.swte"
    save_embeddings(rows, path)
    again = load_embeddings(path)
    assert torch.equal(again, rows)
    blob = path.read_bytes()
    assert blob[:4] == b"SWTE"


def test_embedding_row_count_checked(tmp_path):
    q = _toy_quantizer()
    path = tmp_path / "emb.swte"
    save_embeddings(torch.randn(3, 8), path)
    with pytest.raises(ValidationError):
        load_embeddings(path, vocab=q.vocab)
    (tmp_path / "bad.swte").write_bytes(b"NOPE" + b"\x00" * 8)
    with pytest.raises(FormatError):
        load_embeddings(tmp_path / "bad.swte")


# ---------------------------------------------------------------- projector


def test_isolated_nodes_zero_w2_gives_constant_rows():
    q = _toy_quantizer()
    single = _corpus("a/NOUN", "b/NOUN", "c/VERB")
    vocab = build_vocabulary(single, min_freq=1)
    graph = build_graph(single, vocab)  # self-loops only
    quant = LanguageQuantizer(vocab, pseudo_embeddings(vocab, 8), graph,
                              d_latent=4, hidden=8)
    with torch.no_grad():
        quant.projector.fc2.weight.zero_()
        quant.projector.fc2.bias.fill_(0.7)
        quant.projector.out.bias.fill_(-0.2)
    out = quant.projected_codebook()
    assert torch.allclose(out, out[0].expand_as(out), atol=0)
    assert not torch.allclose(out[0], torch.zeros_like(out[0]))


def test_two_node_graph_matches_scalar_gcn_oracle():
    corpus = _corpus("cat/NOUN runs/VERB")
    vocab = build_vocabulary(corpus, min_freq=1)
    graph = build_graph(corpus, vocab)
    raw = torch.randn(2, 5, dtype=torch.float64)
    quant = LanguageQuantizer(vocab, raw, graph, d_latent=3, hidden=4).double()
    g = torch.Generator().manual_seed(7)
    for p in quant.projector.parameters():
        with torch.no_grad():
            p.copy_(torch.randn(p.shape, generator=g, dtype=torch.float64))
    got = quant.projected_codebook().detach().numpy()

    # Scalar oracle: adj = [[1,1],[1,1]] with self-loops, deg = 2.
    adj = np.full((2, 2), 0.5)
    p = {n: t.detach().numpy() for n, t in quant.projector.named_parameters()}
    h1 = np.maximum(adj @ raw.numpy() @ p["fc1.weight"].T + p["fc1.bias"], 0)
    h2 = np.maximum(adj @ h1 @ p["fc2.weight"].T + p["fc2.bias"], 0)
    want = h2 @ p["out.weight"].T + p["out.bias"]
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_projector_gradients_reach_all_layers():
    quant = _toy_quantizer()
    out = quant.projected_codebook()
    out.sum().backward()
    for name, p in quant.projector.named_parameters():
        assert p.grad is not None, name


def test_raw_embeddings_are_a_buffer():
    quant = _toy_quantizer()
    names = {n for n, _ in quant.named_parameters()}
    assert not any("raw_embeddings" in n for n in names)
    assert not quant.raw_embeddings.requires_grad


# ---------------------------------------------------------------- quantize


def test_exact_match_returns_zero_distance_index():
    quant = _toy_quantizer()
    projected = quant.projected_codebook().detach()
    span = quant.spatial_range
    target_local = 2
    z = projected[span.start + target_local].reshape(1, 1, -1)
    out = quant.quantize(LatentTokens(z, kind="spatial"), projected)
    assert out.indices[0, 0].item() == target_local
    assert torch.equal(out.values[0, 0], projected[span.start + target_local])


def test_partition_constraint_beats_global_nearest():
    quant = _toy_quantizer()
    projected = quant.projected_codebook().detach()
    t_span = quant.temporal_range
    # A spatial token sitting exactly on a temporal entry must still
    # quantize into the spatial span.
    z = projected[t_span.start].reshape(1, 1, -1)
    out = quant.quantize(LatentTokens(z, kind="spatial"), projected)
    assert 0 <= out.indices[0, 0].item() < len(quant.spatial_range)
    word_pos = quant.vocab.entries[out.indices[0, 0].item()].pos
    assert word_pos in ("noun", "adjective")


def test_matches_brute_force_oracle():
    quant = _toy_quantizer().double()
    projected = quant.projected_codebook().detach()
    z = torch.randn(4, 16, projected.shape[1], dtype=torch.float64)
    for kind in ("spatial", "temporal", "any"):
        out = quant.quantize(LatentTokens(z, kind=kind), projected)
        span = quant._span(kind)
        rows = projected[span.start:span.stop].numpy()
        for b in range(z.shape[0]):
            for l in range(z.shape[1]):
                vec = z[b, l].numpy()
                best, best_d = 0, float("inf")
                for i, row in enumerate(rows):
                    d = float(((vec - row) ** 2).sum())
                    if d < best_d:
                        best, best_d = i, d
                assert out.indices[b, l].item() == best


def test_tie_break_prefers_lowest_index():
    corpus = _corpus("aa/NOUN bb/NOUN cc/NOUN")
    vocab = build_vocabulary(corpus, min_freq=1)
    graph = build_graph(corpus, vocab)
    raw = torch.randn(3, 4)
    quant = LanguageQuantizer(vocab, raw, graph, d_latent=4, hidden=4)
    projected = torch.tensor([[1.0, 0.0, 0.0, 0.0],
                              [1.0, 0.0, 0.0, 0.0],
                              [1.0, 0.0, 0.0, 0.0]])
    z = torch.zeros(1, 2, 4)
    out = quant.quantize(LatentTokens(z, kind="spatial"), projected)
    assert torch.all(out.indices == 0)


def test_straight_through_forward_is_exactly_the_entry():
    quant = _toy_quantizer()
    projected = quant.projected_codebook()
    z = torch.randn(2, 5, projected.shape[1], requires_grad=True)
    out = quant.quantize(LatentTokens(z, kind="temporal"), projected)
    span = quant.temporal_range
    gathered = projected.detach()[span.start:span.stop][out.indices]
    assert torch.equal(out.values.detach(), gathered)
    # Backward is the identity on z.
    out.values.sum().backward()
    assert torch.equal(z.grad, torch.ones_like(z))


def test_quantize_rejects_quantized_and_empty_span():
    quant = _toy_quantizer()
    z = LatentTokens(torch.zeros(1, 2, 6), kind="spatial", quantized=True)
    with pytest.raises(ValidationError):
        quant.quantize(z)

    nouns_only = _corpus("cat/NOUN dog/NOUN")
    vocab = build_vocabulary(nouns_only, min_freq=1)
    graph = build_graph(nouns_only, vocab)
    q2 = LanguageQuantizer(vocab, pseudo_embeddings(vocab, 8), graph,
                           d_latent=4, hidden=4)
    with pytest.raises(ValidationError):
        q2.quantize(LatentTokens(torch.zeros(1, 1, 4), kind="temporal"))


def test_embed_indices_range_check():
    quant = _toy_quantizer()
    with pytest.raises(ValidationError):
        quant.embed_indices(torch.tensor([[99]]), "spatial")


# ----------------------------------------------------------- words mapping


def test_word_index_word_round_trip_is_identity():
    quant = _toy_quantizer()
    projected = quant.projected_codebook().detach()
    vocab = quant.vocab
    for global_idx, entry in enumerate(vocab.entries):
        kind = ("spatial" if entry.pos in ("noun", "adjective")
                else "temporal")
        z = projected[global_idx].reshape(1, 1, -1)
        out = quant.quantize(LatentTokens(z, kind=kind), projected)
        words = indices_to_words(out, vocab)
        assert words == [entry.word]


def test_spatial_tokens_decode_to_nouns_or_adjectives():
    quant = _toy_quantizer()
    projected = quant.projected_codebook().detach()
    z = torch.randn(1, 32, projected.shape[1])
    out = quant.quantize(LatentTokens(z, kind="spatial"), projected)
    span = quant.vocab.spatial_range
    for idx in out.indices.reshape(-1).tolist():
        assert quant.vocab.entries[span.start + idx].pos in ("noun", "adjective")


def test_indices_to_words_range_error():
    quant = _toy_quantizer()
    from decotok.quantizer import QuantizedTokens
    bad = QuantizedTokens(values=torch.empty(0), embeddings=torch.empty(0),
                          indices=torch.tensor([999]), kind="spatial")
    with pytest.raises(ValidationError):
        indices_to_words(bad, quant.vocab)
