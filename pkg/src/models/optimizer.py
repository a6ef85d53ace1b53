import numpy as np


class Adam:
    """
    Adam optimizer over a single parameter vector (minimization).

    Parameters:
    ----------
    lr : float
        Step size
    beta1, beta2 : float
        Decay rates of the first and second moment estimates
    eps_hat : float
        Added to the root of the second moment estimate
    """

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps_hat=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps_hat = eps_hat
        self.m = None
        self.v = None
        self.t = 0

    def step(self, params, grads):
        """Return the updated parameters; ``params`` is not modified"""
        grads = np.asarray(grads, dtype=np.float64)
        if self.m is None:
            self.m = np.zeros_like(grads)
            self.v = np.zeros_like(grads)
        self.t += 1

        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * (grads * grads)

        # bias-corrected moments
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps_hat)
