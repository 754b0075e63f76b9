import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def dense_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting; the reference for the banded solver."""
    A = np.array(A, dtype=float)
    x = np.array(b, dtype=float)
    n = len(A)
    for c in range(n):
        p = c + int(np.argmax(np.abs(A[c:, c])))
        if A[p, c] == 0.0:
            raise np.linalg.LinAlgError("singular")
        if p != c:
            A[[c, p]] = A[[p, c]]
            x[[c, p]] = x[[p, c]]
        f = A[c + 1 :, c] / A[c, c]
        A[c + 1 :, c:] -= np.outer(f, A[c, c:])
        x[c + 1 :] -= f * x[c]
    for r in range(n - 1, -1, -1):
        x[r] = (x[r] - A[r, r + 1 :] @ x[r + 1 :]) / A[r, r]
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
