"""Runner configuration with per-mode hyperparameter defaults."""

from __future__ import annotations

from dataclasses import dataclass

# mode -> (learning rate, epochs)
MODE_DEFAULTS = {
    "finetune_ptr": (3e-5, 10),
    "finetune_instruction": (2e-5, 5),
}
MODES = ("zero_shot", "finetune_ptr", "finetune_instruction")


@dataclass(frozen=True)
class RunnerConfig:
    model: str  # model-hub name or local checkpoint path
    mode: str = "zero_shot"
    learning_rate: float | None = None
    batch_size: int = 32
    epochs: int | None = None
    seed: int = 0
    device: str = "cpu"
    weight_decay: float = 0.01

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return MODE_DEFAULTS.get(self.mode, (0.0, 0))[0]

    @property
    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return MODE_DEFAULTS.get(self.mode, (0.0, 0))[1]

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "mode": self.mode,
            "learning_rate": self.resolved_learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.resolved_epochs,
            "seed": self.seed,
            "device": self.device,
            "weight_decay": self.weight_decay,
        }
