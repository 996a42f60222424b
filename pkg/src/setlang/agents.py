"""Teacher and student networks with a discrete differentiable channel.

The teacher encodes its inputs with a small CNN, pools target/distractor
prototype embeddings, and decodes a discrete message with a GRU using
straight-through Gumbel-Softmax sampling. The student encodes the message
with a separate GRU and scores each of its own inputs independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass(frozen=True)
class ChannelConfig:
    vocab_size: int = 14
    max_len: int = 5
    use_eos: bool = True  # one vocabulary-external EOS symbol terminates decoding

    def __post_init__(self):
        if self.vocab_size < 2 or self.max_len < 1:
            raise ValueError("vocab_size >= 2 and max_len >= 1 required")

    @property
    def n_symbols(self) -> int:
        """Alphabet seen on the wire: vocabulary plus EOS if enabled."""
        return self.vocab_size + (1 if self.use_eos else 0)

    @property
    def eos_id(self) -> int:
        if not self.use_eos:
            raise ValueError("channel has no EOS symbol")
        return self.vocab_size


SHAPEWORLD_CHANNEL = ChannelConfig(14, 5)
BIRDS_CHANNEL = ChannelConfig(20, 8)

CHANNEL_PRESETS = {
    "S": ChannelConfig(3, 3),
    "M": ChannelConfig(5, 5),
    "L": ChannelConfig(100, 20),
    "XL": ChannelConfig(1000, 20),
    "default": SHAPEWORLD_CHANNEL,
    "birds": BIRDS_CHANNEL,
}


class ConvEncoder(nn.Module):
    """Stacked conv / batchnorm / ReLU / maxpool blocks, flattened output."""

    def __init__(self, image_size: int = 64, n_filters: int = 64, n_blocks: int = 4):
        super().__init__()
        blocks = []
        in_ch = 3
        for _ in range(n_blocks):
            blocks += [
                nn.Conv2d(in_ch, n_filters, 3, padding=1),
                nn.BatchNorm2d(n_filters),
                nn.ReLU(),
                nn.MaxPool2d(2),
            ]
            in_ch = n_filters
        self.net = nn.Sequential(*blocks)
        side = image_size // (2 ** n_blocks)
        if side < 1:
            raise ValueError("image too small for the number of conv blocks")
        self.out_dim = n_filters * side * side

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x).flatten(1)


@dataclass
class AgentHyperparams:
    image_size: int = 64
    n_filters: int = 64
    n_conv_blocks: int = 4
    hidden_size: int = 1024
    embedding_size: int = 500


def straight_through(soft: torch.Tensor) -> torch.Tensor:
    """Discretize in the forward pass only; gradients flow through `soft`."""
    index = soft.argmax(dim=-1, keepdim=True)
    hard = torch.zeros_like(soft).scatter_(-1, index, 1.0)
    return hard + (soft - soft.detach())


class Teacher(nn.Module):
    def __init__(self, channel: ChannelConfig, hp: AgentHyperparams = AgentHyperparams()):
        super().__init__()
        self.channel = channel
        self.hp = hp
        self.encoder = ConvEncoder(hp.image_size, hp.n_filters, hp.n_conv_blocks)
        self.proj = nn.Linear(2 * self.encoder.out_dim, hp.hidden_size)
        n_sym = channel.n_symbols
        self.token_embedding = nn.Embedding(n_sym, hp.embedding_size)
        self.start_embedding = nn.Parameter(torch.randn(hp.embedding_size) * 0.01)
        self.cell = nn.GRUCell(hp.embedding_size, hp.hidden_size)
        self.head = nn.Linear(hp.hidden_size, n_sym)

    def encode_scenes(self, scenes: torch.Tensor) -> torch.Tensor:
        B, N = scenes.shape[:2]
        feats = self.encoder(scenes.flatten(0, 1))
        return feats.view(B, N, -1)

    def encode_prototypes(
        self, scenes: torch.Tensor, labels: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Mean embedding of targets and of distractors, per game.

        scenes: [B, N, 3, H, W]; labels: [B, N] bool.
        """
        labels = labels.bool()
        if (labels.all(dim=1) | (~labels).all(dim=1)).any():
            raise ValueError("each game needs at least one target and one distractor")
        feats = self.encode_scenes(scenes)
        pos = labels.float().unsqueeze(-1)
        proto_pos = (feats * pos).sum(1) / pos.sum(1)
        proto_neg = (feats * (1 - pos)).sum(1) / (1 - pos).sum(1)
        return proto_pos, proto_neg

    def emit(
        self,
        scenes: torch.Tensor,
        labels: torch.Tensor,
        mode: str = "train",
        tau: float = 1.0,
        eps_mix: float = 0.0,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """Produce a message, one-hot per position: [B, max_len, n_symbols].

        train mode: straight-through Gumbel-Softmax samples (forward pass is
        exactly one-hot), optionally from a mixture of the decoder
        distribution and a uniform distribution. eval mode: greedy argmax.
        """
        if mode not in ("train", "eval"):
            raise ValueError(f"unknown mode {mode!r}")
        proto_pos, proto_neg = self.encode_prototypes(scenes, labels)
        h = self.proj(torch.cat([proto_pos, proto_neg], dim=-1))
        B = h.shape[0]
        inp = self.start_embedding.expand(B, -1)
        outputs = []
        done = torch.zeros(B, dtype=torch.bool, device=h.device)
        for _ in range(self.channel.max_len):
            h = self.cell(inp, h)
            logits = self.head(h)
            if mode == "eval":
                token = F.one_hot(logits.argmax(-1), self.channel.n_symbols).float()
            else:
                probs = F.softmax(logits, dim=-1)
                if eps_mix > 0:
                    probs = (1 - eps_mix) * probs + eps_mix / self.channel.n_symbols
                logp = torch.log(probs + 1e-20)
                u = torch.rand(logp.shape, generator=generator, device=logp.device)
                gumbel = -torch.log(-torch.log(u + 1e-20) + 1e-20)
                soft = F.softmax((logp + gumbel) / tau, dim=-1)
                token = straight_through(soft)
            if self.channel.use_eos:
                eos = F.one_hot(
                    torch.full((B,), self.channel.eos_id, dtype=torch.long, device=h.device),
                    self.channel.n_symbols,
                ).float()
                token = torch.where(done.unsqueeze(-1), eos, token)
                done = done | (token[:, self.channel.eos_id].detach() > 0.5)
            outputs.append(token)
            inp = token @ self.token_embedding.weight
        return torch.stack(outputs, dim=1)


class Student(nn.Module):
    def __init__(self, channel: ChannelConfig, hp: AgentHyperparams = AgentHyperparams()):
        super().__init__()
        self.channel = channel
        self.hp = hp
        self.encoder = ConvEncoder(hp.image_size, hp.n_filters, hp.n_conv_blocks)
        self.feat_proj = nn.Linear(self.encoder.out_dim, hp.hidden_size)
        self.token_embedding = nn.Embedding(channel.n_symbols, hp.embedding_size)
        self.rnn = nn.GRU(hp.embedding_size, hp.hidden_size, batch_first=True)

    def encode_message(self, message: torch.Tensor) -> torch.Tensor:
        """message: [B, L, n_symbols] one-hot (or relaxed) -> [B, hidden]."""
        embeds = message @ self.token_embedding.weight
        _, h = self.rnn(embeds)
        return h[-1]

    def score_logits(self, message: torch.Tensor, scenes: torch.Tensor) -> torch.Tensor:
        enc = self.encode_message(message)
        B, N = scenes.shape[:2]
        feats = self.feat_proj(self.encoder(scenes.flatten(0, 1))).view(B, N, -1)
        return torch.bmm(feats, enc.unsqueeze(-1)).squeeze(-1)

    def score(self, message: torch.Tensor, scenes: torch.Tensor) -> torch.Tensor:
        """Per-scene target probabilities, independent across scenes: [B, N]."""
        return torch.sigmoid(self.score_logits(message, scenes))


class AgentPair(nn.Module):
    def __init__(self, channel: ChannelConfig, hp: AgentHyperparams = AgentHyperparams()):
        super().__init__()
        self.channel = channel
        self.hp = hp
        self.teacher = Teacher(channel, hp)
        self.student = Student(channel, hp)


def message_tokens(message: torch.Tensor, channel: ChannelConfig) -> list[tuple[int, ...]]:
    """Discrete token id sequences (EOS and padding stripped) per game."""
    ids = message.argmax(-1).tolist()
    out = []
    for seq in ids:
        if channel.use_eos and channel.eos_id in seq:
            seq = seq[: seq.index(channel.eos_id)]
        out.append(tuple(seq))
    return out


def tokens_to_message(tokens_batch: list[tuple[int, ...]], channel: ChannelConfig) -> torch.Tensor:
    """One-hot messages [B, max_len, n_symbols] from token id sequences,
    truncated to max_len and padded with EOS."""
    B = len(tokens_batch)
    ids = torch.full((B, channel.max_len), channel.eos_id if channel.use_eos else 0,
                     dtype=torch.long)
    for b, toks in enumerate(tokens_batch):
        toks = tuple(toks)[: channel.max_len]
        if toks:
            ids[b, : len(toks)] = torch.tensor(toks)
    return F.one_hot(ids, channel.n_symbols).float()


def save_checkpoint(path, pair: AgentPair, extra: dict | None = None) -> None:
    torch.save(
        {
            "state_dict": pair.state_dict(),
            "channel": pair.channel.__dict__,
            "hyperparams": pair.hp.__dict__,
            "torch_rng": torch.get_rng_state(),
            "numpy_rng": np.random.get_state(),
            "extra": extra or {},
        },
        path,
    )


def load_checkpoint(path) -> tuple[AgentPair, dict]:
    blob = torch.load(path, weights_only=False)
    pair = AgentPair(ChannelConfig(**blob["channel"]), AgentHyperparams(**blob["hyperparams"]))
    pair.load_state_dict(blob["state_dict"])
    return pair, blob["extra"]
