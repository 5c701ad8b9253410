# core/io/scenario_registry.py
from pathlib import Path
from typing import Dict, Iterable, List, Set

SCENARIO_DIR = Path(__file__).resolve().parents[2] / "registry" / "scenarios"
DEFAULT_EXTS: Set[str] = {".conf"}


def discover_files(root_dir, include_exts: Iterable[str] = DEFAULT_EXTS) -> List[Path]:
    """
    Recursively discover files under root_dir limited to include_exts, sorted by path.
    """
    root = Path(root_dir).expanduser().resolve()
    if not root.exists() or not root.is_dir():
        return []

    include_exts = {ext.lower() for ext in include_exts}
    return sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in include_exts)


def bundled_scenarios(root_dir=SCENARIO_DIR) -> Dict[str, Path]:
    return {p.stem: p for p in discover_files(root_dir)}


def resolve_config_path(name_or_path) -> Path:
    """An existing file path wins; otherwise the name of a bundled scenario."""
    candidate = Path(name_or_path).expanduser()
    if candidate.is_file():
        return candidate
    scenarios = bundled_scenarios()
    if str(name_or_path) in scenarios:
        return scenarios[str(name_or_path)]
    known = ", ".join(sorted(scenarios)) or "none"
    raise FileNotFoundError(f"No config file or bundled scenario '{name_or_path}' (bundled: {known})")
