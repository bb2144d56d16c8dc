"""Shared frozen reference values.

Eigenvalues were produced by the package's own certification (Sturm bracket
plus Wronskian match, residuals at machine level) and independently
cross-checked against dense tridiagonal diagonalization of the discrete
operator; they are frozen here so regressions surface as value drift, not
as silently moving baselines. Threshold slopes come from the affine far
field fit at the continuum edge.
"""

# sphere k=2 gap eigenvalues, certified with Wronskian residual < 1e-13
MU2_SPHERE_K2 = {
    5.0: 7.683978201207e-02,
    10.0: 2.296689867701e-02,
    20.0: 6.149162803395e-03,
    40.0: 1.574277351469e-03,
}

# Yang-Mills gap eigenvalues
MU2_YM = {
    5.0: 1.320442512366e-01,
    10.0: 4.758579509898e-02,
    20.0: 1.384379170674e-02,
    40.0: 3.655414633543e-03,
}

# sphere k=3, lambda=40: a deep-well case (well at r ~ 0.05, depth ~ -2.5e3)
MU2_SPHERE_K3_L40 = 2.900096788530e-06

# large-k family at Theta = 100
MU2_LARGEK_100 = {8: 7.943794009437e-03, 16: 7.415132251538e-03}
MU2_LARGEK_INF_100 = 7.243283890948e-03

# threshold fit slopes b for sphere k=1 (normalization: positive leading
# Frobenius coefficient of the regular solution)
B_SPHERE_K1 = {
    0.25: 1.640510,
    0.5: 1.275100,
    1.0: 0.6002109,
    1.2: 0.4297414,
    1.35: 0.3337780,
}
