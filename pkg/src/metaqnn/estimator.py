"""scikit-learn style wrapper: inputs are magnetizations, outputs the network's ``m_z``."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .channels import InputSpec, product_input_mps, propagate_forward
from .errors import ParameterError
from .gates import IsingParams, NetworkConfig, PauliCoeffTable, build_forward_mpo, ising_coeffs, sigma_y_jump_coeffs
from .training import TrainingPair, full_mask, jump_sigma_x_mask, train

_INITS = ("ising", "sigma_y_jump", "zero")
_MASKS = {"jump_sigma_x": jump_sigma_x_mask, "full": full_mask}


def _inputs(X) -> list:
    """Rows are ``(m_z,)`` or ``(m_z, phi)``."""
    out = []
    for row in X:
        phi = float(row[1]) if row.shape[0] > 1 else 0.0
        out.append(InputSpec(float(row[0]), phi))
    return out


class QnnRegressor(RegressorMixin, BaseEstimator):
    """Dissipative quantum neural network trained by analytic gradient descent.

    Parameters
    ----------
    width, depth : int
        Qubits per layer and number of layer transitions.
    dt : float
        Time step of every perceptron.
    omega, v, kappa : float
        Ising couplings of the initial gate.
    init : {"ising", "sigma_y_jump", "zero"}
        Initial coupling table; ``sigma_y_jump`` swaps the decay for ``-i sqrt(kappa) sigma^y``.
    rounds : int
        Gradient-descent rounds performed by :meth:`fit`.
    eps : float
        Learning rate.
    mask : {"jump_sigma_x", "full"}
        Which update entries are trained.
    chi_mps : int
        State bond dimension cap.

    Attributes
    ----------
    coeffs_ : PauliCoeffTable
        Trained couplings.
    history_ : list of TrainRecord
        One record per round, starting with the untrained network.
    """

    def __init__(
        self,
        width=4,
        depth=5,
        dt=0.1,
        omega=70.0,
        v=250.0,
        kappa=1.0,
        init="sigma_y_jump",
        rounds=5,
        eps=10.0,
        mask="jump_sigma_x",
        chi_mps=32,
    ):
        self.width = width
        self.depth = depth
        self.dt = dt
        self.omega = omega
        self.v = v
        self.kappa = kappa
        self.init = init
        self.rounds = rounds
        self.eps = eps
        self.mask = mask
        self.chi_mps = chi_mps

    def _initial_table(self) -> PauliCoeffTable:
        if self.init not in _INITS:
            raise ParameterError(f"init must be one of {_INITS}, got {self.init!r}")
        p = IsingParams(self.omega, self.v, self.kappa)
        if self.init == "ising":
            return ising_coeffs(p)
        if self.init == "sigma_y_jump":
            return sigma_y_jump_coeffs(p)
        return PauliCoeffTable()

    def _config(self, coeffs) -> NetworkConfig:
        return NetworkConfig(self.width, self.depth, self.dt, coeffs, chi_mps=self.chi_mps)

    def _check_X(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] not in (1, 2):
            raise ValueError(f"X must have 1 or 2 columns (m_z[, phi]), got {X.shape[1]}")
        if np.any(np.abs(X[:, 0]) > 0.5):
            raise ValueError("input magnetizations must lie in [-0.5, 0.5]")
        return X

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        X = self._check_X(X)
        if self.mask not in _MASKS:
            raise ParameterError(f"mask must be one of {sorted(_MASKS)}, got {self.mask!r}")
        self.n_features_in_ = X.shape[1]
        pairs = [TrainingPair(spec, float(t)) for spec, t in zip(_inputs(X), y)]
        cfg = self._config(self._initial_table())
        self.history_ = train(pairs, [], cfg, self.rounds, self.eps, _MASKS[self.mask]())
        last = self.history_[-1].coeffs
        self.coeffs_ = last
        return self

    def transform(self, X):
        """Per-layer magnetizations, shape ``(n_samples, depth + 1)``."""
        check_is_fitted(self, "coeffs_")
        X = self._check_X(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        cfg = self._config(self.coeffs_)
        f = build_forward_mpo(cfg)
        rows = []
        for spec in _inputs(X):
            _, tr = propagate_forward(product_input_mps(spec, self.width), cfg, self.depth, mpo=f)
            rows.append(tr.mz_per_layer)
        return np.asarray(rows)

    def predict(self, X):
        """Output-layer magnetization for every input row."""
        return self.transform(X)[:, -1]
