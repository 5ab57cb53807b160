"""Example programs shipped with the package, used by the tests and demos."""
from importlib import resources


def names() -> list[str]:
    return sorted(
        p.name[:-4] for p in resources.files(__name__).iterdir() if p.name.endswith(".egg")
    )


def load(name: str) -> str:
    return resources.files(__name__).joinpath(name + ".egg").read_text()
