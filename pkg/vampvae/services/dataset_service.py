import gzip
import logging
import re
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from vampvae.config import OMNIGLOT_PSEUDO_INPUTS
from vampvae.errors import ContractError, DimensionError, DomainError, FormatError
from vampvae.models.dataset import Binarization, Dataset, DatasetProfile
from vampvae.models.model_spec import Likelihood
from vampvae.utils import infer_image_shape

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
RAW_DTYPE = np.dtype("<f8")
_RAW_HEADER = re.compile(rb"#\s*(\d+)\s+(\d+)[ \t]*\r?\n")

SYNTH_FLIP_NOISE = 0.05
SYNTH_FRACTIONS = (0.70, 0.15)

PROFILES: dict[str, DatasetProfile] = {
    profile.name: profile for profile in (
        DatasetProfile(name="dynamic-mnist", binarization=Binarization.DYNAMIC, likelihood=Likelihood.BERNOULLI,
                       image_shape=(28, 28), split="holdout_tail", val_rows=10_000, expected_rows=(60_000, 10_000)),
        DatasetProfile(name="static-mnist", binarization=Binarization.STATIC, likelihood=Likelihood.BERNOULLI,
                       image_shape=(28, 28), split="holdout_tail", val_rows=10_000, expected_rows=(60_000, 10_000)),
        DatasetProfile(name="omniglot", binarization=Binarization.DYNAMIC, likelihood=Likelihood.BERNOULLI,
                       image_shape=(28, 28), split="random_val", val_rows=1_345, pseudo_inputs=OMNIGLOT_PSEUDO_INPUTS),
        DatasetProfile(name="caltech101", binarization=Binarization.STATIC, likelihood=Likelihood.BERNOULLI,
                       image_shape=(28, 28), split="fixed", val_rows=2_264, expected_rows=(4_100, 2_307)),
        DatasetProfile(name="frey", binarization=Binarization.NONE, likelihood=Likelihood.DISCRETIZED_LOGISTIC,
                       image_shape=(28, 20), split="random_all", val_rows=200, test_rows=200),
        DatasetProfile(name="histopathology", binarization=Binarization.NONE,
                       likelihood=Likelihood.DISCRETIZED_LOGISTIC, image_shape=(28, 28), split="fixed",
                       val_rows=2_000, expected_rows=(6_800, 2_000)),
    )
}
PROFILES["mnist"] = PROFILES["dynamic-mnist"]


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as handle:
                return handle.read()
        return path.read_bytes()
    except (OSError, EOFError) as exc:
        raise FormatError(f"cannot read {path}: {exc}")


def _idx_header(blob: bytes, magic: int, ndim: int, path) -> tuple[int, ...]:
    header_len = 4 + 4 * ndim
    if len(blob) < header_len:
        raise FormatError(f"{path}: file too short for an IDX header", offset=len(blob))
    found = int(np.frombuffer(blob, dtype=">u4", count=1)[0])
    if found != magic:
        raise FormatError(f"{path}: bad IDX magic 0x{found:08x}, expected 0x{magic:08x}", offset=0)
    return tuple(int(n) for n in np.frombuffer(blob, dtype=">u4", count=ndim, offset=4))


def _idx_payload(blob: bytes, count: int, offset: int, path) -> np.ndarray:
    available = len(blob) - offset
    if available < count:
        raise FormatError(f"{path}: header declares {count} bytes of data, only {available} present",
                          offset=len(blob))
    if available > count:
        raise FormatError(f"{path}: {available - count} unexpected trailing bytes", offset=offset + count)
    return np.frombuffer(blob, dtype=np.uint8, count=count, offset=offset)


def _check_binary(name: str, *splits: np.ndarray) -> None:
    for split in splits:
        if not np.all((split == 0.0) | (split == 1.0)):
            raise DomainError(f"{name} is statically binarized but contains non-binary pixels")


class DatasetService:
    """
    Loading and preparation of image datasets.

    Pixel matrices have one image per row, values in [0, 1]. Native formats are
    IDX (big-endian, as MNIST ships) and a raw little-endian float64 matrix for
    everything else.
    """

    @staticmethod
    def profile(name: str) -> DatasetProfile:
        if name == "synth":
            return DatasetProfile(name="synth", binarization=Binarization.STATIC, likelihood=Likelihood.BERNOULLI,
                                  image_shape=(8, 8), split="synthetic")
        try:
            return PROFILES[name]
        except KeyError:
            raise ContractError(f"unknown dataset {name!r}; known: {sorted(PROFILES) + ['synth']}")

    @staticmethod
    def read_idx_labels(path: str | Path) -> np.ndarray:
        blob = _read_bytes(path)
        (count,) = _idx_header(blob, IDX_LABELS_MAGIC, 1, path)
        return _idx_payload(blob, count, 8, path).astype(np.int64)

    @staticmethod
    def load_idx(images_path: str | Path, labels_path: str | Path | None = None) -> np.ndarray:
        """
        N x (H*W) matrix scaled by 1/255 from an IDX image file (magic 0x00000803).

        When a label file is given it is validated against the image count; the
        labels themselves are not needed by the models.
        """
        blob = _read_bytes(images_path)
        count, height, width = _idx_header(blob, IDX_IMAGES_MAGIC, 3, images_path)
        pixels = _idx_payload(blob, count * height * width, 16, images_path)
        matrix = pixels.reshape(count, height * width).astype(np.float64) / 255.0
        if labels_path is not None:
            labels = DatasetService.read_idx_labels(labels_path)
            if len(labels) != count:
                raise FormatError(f"{labels_path}: {len(labels)} labels for {count} images", offset=4)
        logger.debug("Loaded %d images of %dx%d from %s", count, height, width, images_path)
        return matrix

    @staticmethod
    def load_raw_matrix(path: str | Path, dim: int, scale: float = 1.0) -> np.ndarray:
        """
        N x dim matrix from little-endian float64 values, multiplied by `scale` and clamped to [0, 1].

        An optional first line `# N D` declares the shape; without it the
        payload length must be a multiple of dim * 8. A blob that starts with
        `#` but carries no such line is read as headerless.
        """
        if dim < 1:
            raise ContractError(f"dimension must be >= 1, got {dim}")
        blob = _read_bytes(path)
        if not blob:
            raise FormatError(f"{path}: empty file", offset=0)
        offset, rows = 0, None
        # a leading 0x23 byte can also start a headerless float64 value
        match = _RAW_HEADER.match(blob)
        if match is not None:
            rows, declared_dim = int(match.group(1)), int(match.group(2))
            if declared_dim != dim:
                raise FormatError(f"{path}: header declares {declared_dim} columns, expected {dim}", offset=0)
            offset = match.end()
        payload = len(blob) - offset
        row_bytes = dim * RAW_DTYPE.itemsize
        if rows is not None and payload != rows * row_bytes:
            raise FormatError(f"{path}: header declares {rows} rows but payload holds {payload} bytes",
                              offset=offset + min(payload, rows * row_bytes))
        if payload == 0 or payload % row_bytes:
            raise FormatError(f"{path}: payload of {payload} bytes is not a whole number of {dim}-column rows",
                              offset=offset + payload - payload % row_bytes)
        values = np.frombuffer(blob, dtype=RAW_DTYPE, offset=offset).astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{path}: non-finite values", offset=offset)
        matrix = np.clip(values.reshape(-1, dim) * scale, 0.0, 1.0)
        logger.debug("Loaded raw matrix %s of shape %s", path, matrix.shape)
        return matrix

    @staticmethod
    def save_raw_matrix(path: str | Path, matrix: np.ndarray, header: bool = True) -> Path:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionError(f"raw matrices are 2-D, got shape {matrix.shape}")
        prefix = f"# {matrix.shape[0]} {matrix.shape[1]}\n".encode("ascii") if header else b""
        path = Path(path)
        path.write_bytes(prefix + np.ascontiguousarray(matrix, dtype=RAW_DTYPE).tobytes())
        return path

    @staticmethod
    def canonical_split(name: str, train: np.ndarray, test: np.ndarray | None = None,
                        val: np.ndarray | None = None, seed: int = 0) -> Dataset:
        """
        Build the train/validation/test Dataset the way each benchmark defines it.

        MNIST variants hold out the last 10,000 training rows; OMNIGLOT draws its
        validation rows at random with `seed`; Caltech 101 and Histopathology come
        as fixed files; Frey Faces is split at random from a single matrix.
        """
        profile = DatasetService.profile(name)
        train = np.asarray(train, dtype=np.float64)
        test = None if test is None else np.asarray(test, dtype=np.float64)

        if profile.split == "holdout_tail":
            if test is None or (len(train), len(test)) != profile.expected_rows:
                found = (len(train), None if test is None else len(test))
                raise ContractError(f"{name} expects {profile.expected_rows} train/test rows, got {found}")
            train, val = train[:-profile.val_rows], train[-profile.val_rows:]
        elif profile.split == "random_val":
            if test is None or len(train) <= profile.val_rows:
                raise ContractError(f"{name} needs a test matrix and more than {profile.val_rows} training rows")
            held_out = np.zeros(len(train), dtype=bool)
            held_out[np.random.default_rng(seed).permutation(len(train))[:profile.val_rows]] = True
            train, val = train[~held_out], train[held_out]
        elif profile.split == "fixed":
            if test is None or val is None:
                raise ContractError(f"{name} ships fixed train/validation/test files; all three are required")
            val = np.asarray(val, dtype=np.float64)
            found = (len(train), len(val), len(test))
            expected = (profile.expected_rows[0], profile.val_rows, profile.expected_rows[1])
            if found != expected:
                raise ContractError(f"{name} expects {expected} train/val/test rows, got {found}")
        elif profile.split == "random_all":
            data = train if test is None else np.vstack([train, test])
            if len(data) <= profile.val_rows + profile.test_rows:
                raise ContractError(f"{name} needs more than {profile.val_rows + profile.test_rows} rows")
            order = np.random.default_rng(seed).permutation(len(data))
            test = data[order[:profile.test_rows]]
            val = data[order[profile.test_rows:profile.test_rows + profile.val_rows]]
            train = data[np.sort(order[profile.test_rows + profile.val_rows:])]
        else:
            raise ContractError("synthetic data is produced by synth_clusters, not split from files")

        if train.shape[1] != profile.image_shape[0] * profile.image_shape[1]:
            raise DimensionError(f"{name} images are {profile.image_shape}, rows have {train.shape[1]} values")
        if profile.binarization == Binarization.STATIC:
            _check_binary(name, train, val, test)
        try:
            dataset = Dataset(name=profile.name, train=train, val=val, test=test,
                              binarization=profile.binarization, image_shape=profile.image_shape)
        except ValidationError as exc:
            raise ContractError(f"{name}: {exc.errors()[0]['msg']}")
        logger.info("Dataset %s: %d/%d/%d rows of dimension %d", dataset.name, len(dataset.train),
                    len(dataset.val), len(dataset.test), dataset.dim)
        return dataset

    @staticmethod
    def synth_clusters(n: int, dim: int, k_clusters: int, seed: int, noise: float = SYNTH_FLIP_NOISE) -> Dataset:
        """
        Binary mixture of k product-Bernoulli prototypes with pixel flip noise.

        Prototypes are rows of a Sylvester-Hadamard matrix stretched to `dim`
        pixels and XOR-ed with one random mask; two prototypes differ in half
        their pixels when dim is a multiple of the matrix order. Splits are
        70/15/15.
        """
        if k_clusters < 1:
            raise ContractError(f"k_clusters must be >= 1, got {k_clusters}")
        if n < 3 or dim < 1:
            raise ContractError(f"synthetic data needs n >= 3 and dim >= 1, got n={n}, dim={dim}")
        if not 0.0 <= noise <= 1.0:
            raise ContractError(f"flip noise must lie in [0, 1], got {noise}")
        rng = np.random.default_rng(seed)

        hadamard = np.ones((1, 1))
        while hadamard.shape[0] < k_clusters:
            hadamard = np.block([[hadamard, hadamard], [hadamard, -hadamard]])
        width = hadamard.shape[0]
        stretched = np.repeat(hadamard[:k_clusters] > 0, -(-dim // width), axis=1)[:, :dim]
        prototypes = stretched ^ (rng.random(dim) < 0.5)

        labels = rng.integers(k_clusters, size=n)
        flips = rng.random((n, dim)) < noise
        data = (prototypes[labels] ^ flips).astype(np.float64)

        n_train = int(round(SYNTH_FRACTIONS[0] * n))
        n_val = int(round(SYNTH_FRACTIONS[1] * n))
        return Dataset(name="synth", train=data[:n_train], val=data[n_train:n_train + n_val],
                       test=data[n_train + n_val:], binarization=Binarization.STATIC,
                       image_shape=infer_image_shape(dim))

    @staticmethod
    def load(name: str, *, train_path=None, test_path=None, val_path=None, fmt: str = "idx",
             dim: int | None = None, scale: float = 1.0, seed: int = 0,
             synth_n: int = 512, synth_dim: int = 64, synth_k: int = 8) -> Dataset:
        """Read the files for `name` in format `fmt` ("idx" or "raw") and split them canonically."""
        if name == "synth":
            return DatasetService.synth_clusters(synth_n, synth_dim, synth_k, seed)
        profile = DatasetService.profile(name)
        if train_path is None:
            raise ContractError(f"dataset {name!r} needs --train (and usually --test) files")
        if fmt == "idx":
            def read(path):
                return DatasetService.load_idx(path)
        elif fmt == "raw":
            width = dim or profile.image_shape[0] * profile.image_shape[1]

            def read(path):
                return DatasetService.load_raw_matrix(path, width, scale)
        else:
            raise ContractError(f"unknown data format {fmt!r}")
        return DatasetService.canonical_split(
            name,
            read(train_path),
            None if test_path is None else read(test_path),
            None if val_path is None else read(val_path),
            seed=seed,
        )
