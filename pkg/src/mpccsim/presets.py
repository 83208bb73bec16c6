"""Named figure recipes: preset name -> (command, shipped config file).

Each preset runs end-to-end via ``mpccsim <command> --preset <name>``.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Dict, Tuple

PRESETS: Dict[str, Tuple[str, str]] = {
    "fig2": ("expected", "fig2.toml"),  # agent convergence, P=3 m=0.1
    "fig3": ("expected", "fig3.toml"),  # lossless flow convergence, m=0.1 r=0.5
    "fig4": ("expected", "fig4.toml"),  # rotation-preserving lossy pattern, m=0.45 r=0.9
    "fig5": ("expected", "fig5.toml"),  # rotation-breaking lossy pattern, m=0.1 r=1
    "fig6a": ("sweep", "fig6.toml"),  # efficiency delta bands
    "fig6b": ("sweep", "fig6.toml"),  # loss delta bands
    "fig7a": ("sweep", "fig6.toml"),  # convergence delta bands
    "fig7b": ("sweep", "fig7b.toml"),  # fairness delta bands (with estimation)
    "fig10": ("simulate", "fig10a.toml"),  # simulated vs expected overlay
    "fig10a": ("simulate", "fig10a.toml"),
    "fig10b": ("simulate", "fig10b.toml"),
    "fig10c": ("simulate", "fig10c.toml"),
    "fig11": ("simulate", "fig11.toml"),  # lossy run against flow bounds
    "fig13": ("consistency-map", "fig13.toml"),  # rank-rotation consistency maps
    "fig16": ("axioms", "fig16.toml"),  # window variance vs loss probability
}


def resolve(name: str) -> Tuple[str, Path]:
    """Return (command, config path) for a preset name."""
    from .config import ConfigError  # local import to avoid a cycle

    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (known: {', '.join(sorted(PRESETS))})")
    command, filename = PRESETS[name]
    return command, Path(str(resources.files(__package__) / "presets" / filename))
