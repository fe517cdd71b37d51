"""Independent symbolic curvature used as an oracle by the tests."""

import sympy as sp


def christoffel(g, X):
    n = len(X)
    gi = g.inv()
    return [
        [
            [
                sum(gi[a, d] * (sp.diff(g[d, b], X[c]) + sp.diff(g[d, c], X[b]) - sp.diff(g[b, c], X[d])) for d in range(n)) / 2
                for c in range(n)
            ]
            for b in range(n)
        ]
        for a in range(n)
    ]


def ricci_tensor(g, X):
    n = len(X)
    G = christoffel(g, X)

    def ric(b, c):
        return sum(
            sp.diff(G[a][b][c], X[a])
            - sp.diff(G[a][b][a], X[c])
            + sum(G[a][a][d] * G[d][b][c] - G[a][c][d] * G[d][b][a] for d in range(n))
            for a in range(n)
        )

    return sp.Matrix(n, n, lambda b, c: ric(b, c)), G


def ricci_scalar(g, X):
    Ric, _ = ricci_tensor(g, X)
    gi = g.inv()
    n = len(X)
    return sum(gi[b, c] * Ric[b, c] for b in range(n) for c in range(n))


def hessian(f, g, X):
    G = christoffel(g, X)
    n = len(X)
    return sp.Matrix(n, n, lambda i, j: sp.diff(f, X[i], X[j]) - sum(G[k][i][j] * sp.diff(f, X[k]) for k in range(n)))
