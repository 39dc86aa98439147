from dataclasses import dataclass


@dataclass(frozen=True)
class ServiceConfig:
    model: str = "bert-base-uncased"
    device: str = "cpu"  # "cpu" | "accelerator"
    port: int = 8100
    max_batch: int = 64
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.device not in ("cpu", "accelerator"):
            raise ValueError(f"device must be 'cpu' or 'accelerator', got {self.device!r}")
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if not 0 < self.port < 65536:
            raise ValueError(f"port {self.port} out of range")
