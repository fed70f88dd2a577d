import json
from pathlib import Path

EXAMPLE_DIR = Path(__file__).parent / "examples"


def read_examples() -> dict[str, dict]:
    """The shipped experiment configurations by name"""
    return {path.stem: json.loads(path.read_text(encoding="utf-8")) for path in sorted(EXAMPLE_DIR.glob("*.json"))}


EXAMPLES = read_examples()
