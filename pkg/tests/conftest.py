import pathlib

DATA_DIR = pathlib.Path(__file__).parent / "data"
