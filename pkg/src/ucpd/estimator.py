"""Estimator-style front end for the changepoint test.

:class:`UStatChangeDetector` wraps the functional API in the familiar
``fit`` / ``predict`` / ``get_params`` protocol so the test composes with
pipelines, grid search, and cloning.  Constructor parameters are stored
verbatim (per estimator convention); all derived state lands in
trailing-underscore attributes during :meth:`fit`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .detector import run_test
from .kernels import Kernel, builtin_kernel, limit_process_name
from .limitsim import LimitLaw, build_limit_law
from .uprocess import as_sample
from .weights import WeightFunction, parse_weight


class UStatChangeDetector(BaseEstimator):
    """At-most-one-changepoint test based on weighted split statistics.

    Parameters
    ----------
    kernel : str or Kernel, default "sign_diff"
        Builtin kernel name or a :class:`~ucpd.kernels.Kernel` instance.
    weight : str or WeightFunction, default "one"
        Weight spec ("one", "pow:NU", "loglog:LAM") or a weight object.
    alpha : float, default 0.05
        Test level, in (0, 0.5].
    law : LimitLaw or None
        Reference law to test against.  When None, a law matching the
        kernel's limit process is simulated at fit time from
        ``grid_size`` / ``reps`` / ``random_state`` and kept on ``law_``.
    grid_size, reps, random_state
        Simulation parameters for the lazily built law.

    Attributes (after ``fit``)
    --------------------------
    statistic_, p_value_, critical_value_, reject_ : test outcome
    changepoint_ : int, the maximizing cut (1-based)
    change_fraction_ : float, the cut as a fraction of n + 1
    decision_ : the full :class:`~ucpd.detector.TestDecision`
    law_ : the reference law used

    Examples
    --------
    >>> det = UStatChangeDetector(kernel="diff", grid_size=256, reps=2000)
    >>> det = det.fit([0.0] * 10 + [5.0] * 10)
    >>> bool(det.reject_)
    True
    """

    def __init__(self, kernel="sign_diff", weight="one", alpha=0.05, law=None,
                 grid_size=2048, reps=10000, random_state=0):
        self.kernel = kernel
        self.weight = weight
        self.alpha = alpha
        self.law = law
        self.grid_size = grid_size
        self.reps = reps
        self.random_state = random_state

    def _resolve(self) -> tuple[Kernel, WeightFunction]:
        kernel = (builtin_kernel(self.kernel)
                  if isinstance(self.kernel, str) else self.kernel)
        weight = (parse_weight(self.weight)
                  if isinstance(self.weight, str) else self.weight)
        return kernel, weight

    def fit(self, X, y=None):
        """Run the test on a one-dimensional sample."""
        sample = as_sample(X)
        kernel, weight = self._resolve()
        law: LimitLaw | None = self.law
        if law is None:
            law = build_limit_law(
                limit_process_name(kernel.symmetry),
                weight,
                self.grid_size,
                self.reps,
                self.random_state,
            )
        decision = run_test(sample, kernel, weight, self.alpha, law)
        self.law_ = law
        self.decision_ = decision
        self.statistic_ = decision.statistic
        self.p_value_ = decision.p_value
        self.critical_value_ = decision.critical_value
        self.reject_ = decision.reject
        self.changepoint_ = decision.k_hat
        self.change_fraction_ = decision.t_hat
        self.n_samples_ = decision.n
        return self

    def predict(self, X=None) -> np.ndarray:
        """Detected changepoint indices: [k_hat] on rejection, else empty.

        With ``X`` given, fits on it first; with ``X=None``, reports the
        already fitted decision.
        """
        if X is not None:
            self.fit(X)
        check_is_fitted(self, "decision_")
        if self.reject_:
            return np.array([self.changepoint_], dtype=np.int64)
        return np.empty(0, dtype=np.int64)
