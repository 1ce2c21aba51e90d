"""Problem and result files.

Problems and results are JSON documents. Complex scalars are ``[re, im]``
pairs, matrices are row-major nested lists of such pairs. A problem file::

    {
      "field": "complex",
      "spaces": {"H": {"dim": 2, "J": {"diag": [1, -1]}}},
      "operators": {"W": {"domain": "H", "codomain": "H", "matrix": [...]}},
      "problem": {"type": "schur", "W": "W", "subspace": [[[1, 0]], [[0, 0]]]},
      "options": {"psd_tol": 1e-10, "seed": 0, "n_samples": 1000}
    }

``run`` turns a parsed problem into a result document with a status of
``solved``, ``no_solution`` (a certified nonexistence) or ``invalid_input``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import (
    InvalidState,
    KreinError,
    NoSolution,
    ParseError,
    ValidationError,
)
from .krein import (
    KreinMap,
    SignatureSpace,
    Subspace,
    Tolerance,
    is_fundamental_symmetry,
    is_krein_selfadjoint,
    j_trace,
    opnorm,
    random_fundamental_symmetry,
    validate_signature,
)

PROBLEM_TYPES = ("ilsq", "spline", "smoothing", "schur", "optimal_inverse", "adjoint", "jtrace")
EXIT_CODES = {"solved": 0, "no_solution": 2, "invalid_input": 3}
EXIT_STRICT = 4
MARGIN_TOL = 1e-8

# operator fields, vector fields and matrix fields of each problem type;
# names prefixed by "?" are optional
_SCHEMA = {
    "ilsq": {"ops": ["A", "W"], "vecs": ["?x"], "mats": ["?Jfs"]},
    "spline": {"ops": ["T", "V", "?B0"], "vecs": ["?h0"], "mats": ["?Jfs"]},
    "smoothing": {"ops": ["T", "V", "?B0"], "vecs": ["?h0"], "mats": ["?Jfs"], "rho": True},
    "schur": {"ops": ["W"], "vecs": [], "mats": ["subspace", "?Jfs"]},
    "optimal_inverse": {"ops": ["A", "W11", "W12", "W22"], "vecs": [], "mats": [], "rho": True},
    "adjoint": {"ops": ["T"], "vecs": [], "mats": []},
    "jtrace": {"ops": ["T"], "vecs": [], "mats": ["?Jfs"]},
}


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ---------------------------------------------------------------------------
# complex encoding
# ---------------------------------------------------------------------------


def _scalar(v, path):
    if isinstance(v, bool):
        raise ParseError(path, "expected a number or [re, im] pair")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
        isinstance(p, (int, float)) and not isinstance(p, bool) for p in v
    ):
        return complex(v[0], v[1])
    raise ParseError(path, "expected a number or [re, im] pair")


def decode_vector(v, path):
    if not isinstance(v, list):
        raise ParseError(path, "expected a list of [re, im] pairs")
    return np.array([_scalar(x, f"{path}[{i}]") for i, x in enumerate(v)], dtype=complex)


def decode_matrix(m, path):
    if not isinstance(m, list) or not all(isinstance(r, list) for r in m):
        raise ParseError(path, "expected a list of rows")
    rows = [[_scalar(x, f"{path}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(m)]
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ParseError(path, "rows have different lengths")
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    return np.array(rows, dtype=complex).reshape(len(rows), widths.pop())


def encode_scalar(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_vector(v):
    return [encode_scalar(z) for z in np.asarray(v).reshape(-1)]


def encode_matrix(M):
    M = np.asarray(M)
    return [[encode_scalar(z) for z in row] for row in M]


# ---------------------------------------------------------------------------
# problem model
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ProblemInstance:
    type: str
    spaces: dict
    operators: dict
    payload: dict
    tol: Tolerance = field(default_factory=Tolerance)
    seed: int = 0
    n_samples: int = 1000
    # how each J was written, so that serialisation preserves it
    j_format: dict = field(default_factory=dict)

    def op(self, name):
        return self.operators[self.payload[name]]


def _require(obj, key, path, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"{path}.{key}" if path else key, "missing field")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise ValidationError(f"{path}.{key}" if path else key, f"expected {kind.__name__}")
    return value


def _parse_space(name, node):
    path = f"spaces.{name}"
    if not isinstance(node, dict):
        raise ValidationError(path, "expected an object")
    dim = _require(node, "dim", path)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ValidationError(f"{path}.dim", "dim must be a positive integer")
    Jnode = node.get("J", {"diag": [1] * dim})
    if isinstance(Jnode, dict):
        signs = _require(Jnode, "diag", f"{path}.J")
        J = np.diag(decode_vector(signs, f"{path}.J.diag"))
        fmt = "diag"
    else:
        J = decode_matrix(Jnode, f"{path}.J")
        fmt = "dense"
    if J.shape != (dim, dim):
        raise ValidationError(f"{path}.J", f"J has shape {J.shape}, expected ({dim}, {dim})")
    try:
        return validate_signature(J), fmt
    except KreinError as exc:
        raise ValidationError(f"{path}.J", str(exc)) from exc


def _parse_operator(name, node, spaces):
    path = f"operators.{name}"
    if not isinstance(node, dict):
        raise ValidationError(path, "expected an object")
    dom = _require(node, "domain", path, str)
    cod = _require(node, "codomain", path, str)
    for key, sp in (("domain", dom), ("codomain", cod)):
        if sp not in spaces:
            raise ValidationError(f"{path}.{key}", f"unknown space {sp!r}")
    M = decode_matrix(_require(node, "matrix", path), f"{path}.matrix")
    D, C = spaces[dom], spaces[cod]
    if M.size == 0:
        M = M.reshape(C.dim, D.dim) if C.dim * D.dim == 0 else M
    if M.shape != (C.dim, D.dim):
        raise ValidationError(f"{path}.matrix", f"shape {M.shape}, expected ({C.dim}, {D.dim})")
    return KreinMap(M, D, C)


def _parse_options(opts):
    if opts is None:
        return Tolerance(), 0, 1000
    if not isinstance(opts, dict):
        raise ValidationError("options", "expected an object")
    kw = {}
    for key in ("rank_tol", "psd_tol", "residual_tol"):
        if key in opts:
            v = opts[key]
            if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0):
                raise ValidationError(f"options.{key}", "expected a nonnegative number")
            if v is None and key != "rank_tol":
                raise ValidationError(f"options.{key}", "expected a nonnegative number")
            kw[key] = v
    seed = opts.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError("options.seed", "expected a nonnegative integer")
    n = opts.get("n_samples", 1000)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValidationError("options.n_samples", "expected a positive integer")
    return Tolerance(**kw), seed, n


def _parse_payload(ptype, node, operators):
    schema = _SCHEMA[ptype]
    payload = {}
    for raw in schema["ops"]:
        key = raw.lstrip("?")
        if key not in node:
            if raw.startswith("?"):
                continue
            raise ValidationError(f"problem.{key}", "missing field")
        name = node[key]
        if not isinstance(name, str) or name not in operators:
            raise ValidationError(f"problem.{key}", f"unknown operator {name!r}")
        payload[key] = name
    for raw in schema["vecs"]:
        key = raw.lstrip("?")
        if key in node:
            payload[key] = decode_vector(node[key], f"problem.{key}")
    for raw in schema["mats"]:
        key = raw.lstrip("?")
        if key in node:
            payload[key] = decode_matrix(node[key], f"problem.{key}")
        elif not raw.startswith("?"):
            raise ValidationError(f"problem.{key}", "missing field")
    if schema.get("rho"):
        rho = _require(node, "rho", "problem")
        if isinstance(rho, bool) or not isinstance(rho, (int, float)) or not np.isfinite(rho):
            raise ValidationError("problem.rho", "expected a real number")
        if rho == 0:
            raise ValidationError("problem.rho", "rho must be nonzero")
        payload["rho"] = float(rho)
    return payload


def _check_dims(p: ProblemInstance):
    """Cross-field invariants; raises ValidationError with a field path."""
    t, pl = p.type, p.payload

    def need(cond, path, msg):
        if not cond:
            raise ValidationError(path, msg)

    def square(name):
        M = p.op(name)
        need(M.domain.dim == M.codomain.dim and np.array_equal(M.domain.J, M.codomain.J),
             f"problem.{name}", "operator must map a space into itself")
        return M

    def selfadjoint(name):
        need(is_krein_selfadjoint(p.op(name), p.tol), f"problem.{name}",
             "operator must be Krein-selfadjoint")

    def jfs(space):
        if "Jfs" in pl:
            need(pl["Jfs"].shape == (space.dim, space.dim) and
                 is_fundamental_symmetry(pl["Jfs"], space, p.tol),
                 "problem.Jfs", "not a fundamental symmetry of the relevant space")

    if t == "ilsq":
        A = p.op("A")
        W = square("W")
        need(W.domain.dim == A.codomain.dim and np.array_equal(W.domain.J, A.codomain.J),
             "problem.W", "W must act on the codomain of A")
        selfadjoint("W")
        if "x" in pl:
            need(pl["x"].size == A.codomain.dim, "problem.x", "length must equal dim of codomain of A")
        jfs(A.codomain)
    elif t in ("spline", "smoothing"):
        T, V = p.op("T"), p.op("V")
        need(T.domain.dim == V.domain.dim and np.array_equal(T.domain.J, V.domain.J),
             "problem.V", "T and V must share their domain")
        if "h0" in pl:
            n = T.domain.dim if t == "spline" else V.codomain.dim
            need(pl["h0"].size == n, "problem.h0", f"length must be {n}")
        if "B0" in pl:
            B0 = p.op("B0")
            need(B0.codomain.dim == V.codomain.dim and np.array_equal(B0.codomain.J, V.codomain.J),
                 "problem.B0", "B0 must map into the codomain of V")
            jfs(B0.domain)
        elif "Jfs" in pl:
            need(False, "problem.Jfs", "Jfs is only used together with B0")
    elif t == "schur":
        W = square("W")
        selfadjoint("W")
        S = pl["subspace"]
        need(S.shape[0] == W.domain.dim, "problem.subspace", "basis rows must equal dim of W")
        jfs(W.domain)
    elif t == "optimal_inverse":
        A = p.op("A")
        W11, W12, W22 = square("W11"), p.op("W12"), square("W22")
        need(W11.domain.dim == A.domain.dim, "problem.W11", "W11 must act on the domain of A")
        need(W22.domain.dim == A.codomain.dim, "problem.W22", "W22 must act on the codomain of A")
        need(W12.domain.dim == A.codomain.dim and W12.codomain.dim == A.domain.dim,
             "problem.W12", "W12 must map the codomain of A into its domain")
        selfadjoint("W11")
        selfadjoint("W22")
        need(pl["rho"] == 1.0 or opnorm(W12.matrix) == 0, "problem.W12",
             "a nonzero W12 requires rho = 1")
    elif t == "jtrace":
        T = square("T")
        jfs(T.domain)


def load_document(source):
    """JSON document from a path, a file object or an already decoded dict."""
    if isinstance(source, dict):
        return source
    try:
        if hasattr(source, "read"):
            return json.load(source)
        return json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError("$", f"malformed JSON: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError("$", f"not UTF-8 text: {exc}") from exc


def parse_problem(source, type_override=None) -> ProblemInstance:
    """Parse and validate a problem document.

    Raises
    ------
    ParseError
        Malformed document or value encoding.
    ValidationError
        A structural or mathematical invariant fails; ``.path`` names the field.
    """
    doc = load_document(source)
    if not isinstance(doc, dict):
        raise ParseError("$", "top level must be an object")
    if doc.get("field") != "complex":
        raise ValidationError("field", 'field must be "complex"')
    spaces_doc = _require(doc, "spaces", "", dict)
    spaces, j_format = {}, {}
    for name, node in spaces_doc.items():
        spaces[name], j_format[name] = _parse_space(name, node)
    ops_doc = _require(doc, "operators", "", dict)
    operators = {name: _parse_operator(name, node, spaces) for name, node in ops_doc.items()}
    prob = _require(doc, "problem", "", dict)
    ptype = type_override or prob.get("type")
    if ptype not in PROBLEM_TYPES:
        raise ValidationError("problem.type", f"unknown problem type {ptype!r}")
    payload = _parse_payload(ptype, prob, operators)
    tol, seed, n = _parse_options(doc.get("options"))
    p = ProblemInstance(ptype, spaces, operators, payload, tol, seed, n, j_format)
    _check_dims(p)
    return p


def serialize(p: ProblemInstance) -> dict:
    """Problem document equivalent to ``p`` (inverse of :func:`parse_problem`)."""
    spaces = {}
    for name, S in p.spaces.items():
        if p.j_format.get(name) == "diag":
            J = {"diag": [float(s) for s in np.real(np.diag(S.J))]}
        else:
            J = encode_matrix(S.J)
        spaces[name] = {"dim": S.dim, "J": J}
    ops = {}
    for name, M in p.operators.items():
        dom = next(k for k, s in p.spaces.items() if s is M.domain)
        cod = next(k for k, s in p.spaces.items() if s is M.codomain)
        ops[name] = {"domain": dom, "codomain": cod, "matrix": encode_matrix(M.matrix)}
    prob = {"type": p.type}
    for key, val in p.payload.items():
        if isinstance(val, str) or isinstance(val, float):
            prob[key] = val
        elif val.ndim == 1:
            prob[key] = encode_vector(val)
        else:
            prob[key] = encode_matrix(val)
    options = dict(p.tol.as_dict(), seed=p.seed, n_samples=p.n_samples)
    return {"field": "complex", "spaces": spaces, "operators": ops, "problem": prob,
            "options": options}


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _result(p: ProblemInstance, status, reason=None, solution=None, certificate=None):
    return {
        "status": status,
        "reason": reason,
        "solution": solution or {},
        "certificates": certificate or {},
        "tool_version": tool_version(),
        "tolerances": p.tol.as_dict() if p is not None else Tolerance().as_dict(),
        "seed": p.seed if p is not None else 0,
        "type": p.type if p is not None else None,
    }


def invalid_result(exc):
    """Result document for an input that failed to parse or validate."""
    doc = _result(None, "invalid_input", type(exc).__name__)
    doc["error"] = {"path": getattr(exc, "path", None), "message": str(exc)}
    return doc


def _solve(p: ProblemInstance):
    from .ilsq import IlsqInstance, analyze_w_inverse, operator_ilsq_min, solve_ilss_point
    from .schur import krein_schur_complement
    from .smoothing import (
        BlockWeight,
        SmoothingInstance,
        operator_smoothing_min,
        optimal_inverse,
        smoothing_feasible,
        smoothing_global_solution,
        solve_smoothing_point,
    )
    from .spline import (
        SplineInstance,
        operator_spline_min,
        solve_spline_point,
        spline_global_solution,
        spline_solvability,
    )

    t, pl, tol = p.type, p.payload, p.tol
    Jfs = pl.get("Jfs")
    if t == "ilsq":
        inst = IlsqInstance(p.op("A"), p.op("W"), tol)
        if "x" in pl:
            s = solve_ilss_point(inst, pl["x"])
            return {"u": encode_vector(s.x), "value": s.value}, s.certificate
        report = analyze_w_inverse(inst)
        s = operator_ilsq_min(inst, Jfs)
        sol = {"X": encode_matrix(s.X), "value": s.value,
               "kernel_basis": encode_matrix(report.kernel_basis),
               "conditions": [bool(c) for c in report.conditions]}
        return sol, s.certificate
    if t == "spline":
        inst = SplineInstance(p.op("T"), p.op("V"), tol)
        if "h0" in pl:
            s = solve_spline_point(inst, pl["h0"])
            return {"x": encode_vector(s.x), "value": s.value}, s.certificate
        if "B0" in pl:
            s = operator_spline_min(inst, p.op("B0"), Jfs)
            return {"X": encode_matrix(s.X), "value": s.value}, s.certificate
        solv = spline_solvability(inst)
        if not solv.global_exists:
            reason = "NotNonnegative" if not solv.kernel_nonnegative else "NotComplementable"
            raise NoSolution(reason, "no global spline operator exists")
        G = spline_global_solution(inst)
        return {"G": encode_matrix(G)}, None
    if t == "smoothing":
        inst = SmoothingInstance(p.op("T"), p.op("V"), pl["rho"], tol)
        if "h0" in pl:
            s = solve_smoothing_point(inst, pl["h0"])
            return {"x": encode_vector(s.x), "value": s.value}, s.certificate
        if "B0" in pl:
            s = operator_smoothing_min(inst, p.op("B0"), Jfs, n_samples=min(p.n_samples, 100),
                                       seed=p.seed)
            return {"X": encode_matrix(s.X), "value": s.value}, s.certificate
        smoothing_feasible(inst)
        g = smoothing_global_solution(inst)
        return {"G": encode_matrix(g.G), "kernel_basis": encode_matrix(g.kernel_basis)}, g.certificate
    if t == "schur":
        W = p.op("W")
        S = Subspace.span(pl["subspace"], W.domain, tol)
        Z = krein_schur_complement(W, S, Jfs, tol)
        return {"Z": encode_matrix(Z.matrix)}, None
    if t == "optimal_inverse":
        W = BlockWeight(p.op("W11"), p.op("W12"), p.op("W22"))
        g = optimal_inverse(p.op("A"), W, pl["rho"], tol, n_check=10,
                            n_samples=min(p.n_samples, 100), seed=p.seed)
        return {"G": encode_matrix(g.G), "kernel_basis": encode_matrix(g.kernel_basis)}, g.certificate
    if t == "adjoint":
        return {"T_sharp": encode_matrix(p.op("T").sharp.matrix)}, None
    if t == "jtrace":
        return {"value": encode_scalar(j_trace(p.op("T"), Jfs, tol))}, None
    raise ValidationError("problem.type", f"unknown problem type {t!r}")


def run(p: ProblemInstance) -> dict:
    """Solve ``p`` and return a result document.

    Certified nonexistence yields ``no_solution``; invariant breaches detected
    only while solving (e.g. a non-selfadjoint block weight) yield
    ``invalid_input``. Internal inconsistencies propagate.
    """
    from .errors import PathMismatch

    try:
        solution, cert = _solve(p)
    except NoSolution as exc:
        c = exc.certificate
        cert_doc = c.as_dict() if hasattr(c, "as_dict") else (c or {})
        return _result(p, "no_solution", exc.reason, certificate=cert_doc)
    except PathMismatch:
        raise
    except (KreinError, ValueError) as exc:
        doc = _result(p, "invalid_input", type(exc).__name__)
        doc["error"] = {"path": getattr(exc, "path", None), "message": str(exc)}
        return doc
    return _result(p, "solved", None, solution, cert.as_dict() if cert is not None else {})


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


def _rand(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _certify_margins(p: ProblemInstance, result, n_samples, seed):
    from .oracle import basis_sum_trace, fd_gradient, ilsq_form, quadratic_min, sample_minimality
    from .smoothing import SmoothingInstance, frechet_derivative, smoothing_objective
    from .spline import SplineInstance

    t, pl, sol = p.type, p.payload, result["solution"]
    margins = {}

    def rel(margin, ref):
        return float(margin / max(1.0, ref))

    if t == "ilsq" and "x" in pl:
        A, W = p.op("A"), p.op("W")
        H = A.codomain
        u = decode_vector(sol["u"], "solution.u")
        q = ilsq_form(A.matrix, H.J, W.matrix, pl["x"])
        ref = opnorm(A.matrix) ** 2 * opnorm(W.matrix) * (1 + np.linalg.norm(u) + np.linalg.norm(pl["x"])) ** 2
        margins["worst_margin"] = rel(sample_minimality(q.batch, u, n_samples, seed=seed,
                                                        vectorized=True), ref)
        _, best = quadratic_min(q, p.tol)
        margins["oracle_value_gap"] = -rel(abs(best - sol["value"]), ref)
    elif t == "ilsq":
        A, W = p.op("A"), p.op("W")
        H = A.codomain
        X0 = decode_matrix(sol["X"], "solution.X")
        Jfs = pl.get("Jfs", H.J)
        G = H.J @ W.matrix

        def F(X):
            R = A.matrix @ X - np.eye(H.dim)
            return float(np.real(np.trace(Jfs @ H.J @ R.conj().T @ G @ R)))

        ref = opnorm(G) * (1 + opnorm(A.matrix) * opnorm(X0)) ** 2
        margins["worst_margin"] = rel(sample_minimality(F, X0, n_samples, seed=seed), ref)
    elif t == "spline" and "h0" in pl:
        inst = SplineInstance(p.op("T"), p.op("V"), p.tol)
        x0 = decode_vector(sol["x"], "solution.x")
        N = inst.kernel_V.basis
        M = inst.gram
        y0 = np.zeros(N.shape[1], dtype=complex)

        def obj(Y):
            Z = x0[None, :] + Y @ N.T
            return np.real(np.einsum("ij,jk,ik->i", Z.conj(), M, Z))

        ref = opnorm(M) * (1 + np.linalg.norm(x0)) ** 2
        margins["worst_margin"] = rel(
            sample_minimality(obj, y0, n_samples, radius=1 + np.linalg.norm(x0), seed=seed,
                              vectorized=True), ref) if N.shape[1] else 0.0
    elif t == "spline" and "B0" in pl:
        inst = SplineInstance(p.op("T"), p.op("V"), p.tol)
        X0 = decode_matrix(sol["X"], "solution.X")
        N = inst.kernel_V.basis
        D = p.op("B0").domain
        Jfs = pl.get("Jfs", D.J)
        M = inst.gram

        def F(Y):
            X = X0 + N @ Y
            return float(np.real(np.trace(Jfs @ D.J @ X.conj().T @ M @ X)))

        ref = opnorm(M) * (1 + opnorm(X0)) ** 2
        margins["worst_margin"] = rel(sample_minimality(
            F, np.zeros((N.shape[1], D.dim), dtype=complex), n_samples,
            radius=1 + opnorm(X0), seed=seed), ref) if N.shape[1] else 0.0
    elif t == "smoothing" and "h0" in pl:
        inst = SmoothingInstance(p.op("T"), p.op("V"), pl["rho"], p.tol)
        x0 = decode_vector(sol["x"], "solution.x")
        ref = inst.scale * (1 + np.linalg.norm(x0) + np.linalg.norm(pl["h0"])) ** 2
        margins["worst_margin"] = rel(sample_minimality(
            lambda x: inst.objective(x, pl["h0"]), x0, n_samples, seed=seed), ref)
    elif t == "smoothing" and "B0" in pl:
        inst = SmoothingInstance(p.op("T"), p.op("V"), pl["rho"], p.tol)
        B0 = p.op("B0")
        Jfs = pl.get("Jfs")
        X0 = decode_matrix(sol["X"], "solution.X")
        ref = inst.scale * (1 + opnorm(X0) + opnorm(B0.matrix)) ** 2
        F = lambda X: smoothing_objective(inst, B0, X, Jfs)
        margins["worst_margin"] = rel(sample_minimality(F, X0, n_samples, seed=seed), ref)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(10):
            Y = _rand(rng, *X0.shape)
            worst = max(worst, abs(frechet_derivative(inst, B0, X0, Y, Jfs)))
        margins["stationarity"] = -rel(worst, ref)
        X = _rand(rng, *X0.shape)
        Y = _rand(rng, *X0.shape)
        d = frechet_derivative(inst, B0, X, Y, Jfs)
        fd = fd_gradient(F, X, Y)
        # finite differences are only good to about 1e-6
        margins["gradient_fd_gap"] = -max(0.0, float(abs(d - fd) / max(1.0, abs(d))) - 1e-6)
    elif t == "spline":
        inst = SplineInstance(p.op("T"), p.op("V"), p.tol)
        G = decode_matrix(sol["G"], "solution.G")
        margins["constraint_gap"] = -rel(opnorm(inst.V.matrix @ G - inst.V.matrix),
                                         opnorm(inst.V.matrix))
    elif t == "smoothing" or t == "optimal_inverse":
        margins.update(result["certificates"].get("margins", {}))
    elif t == "schur":
        W = p.op("W")
        H = W.domain
        Z = decode_matrix(sol["Z"], "solution.Z")
        from .schur import krein_schur_complement

        S = Subspace.span(pl["subspace"], H, p.tol)
        Jalt = random_fundamental_symmetry(H, seed=seed)
        Z2 = krein_schur_complement(W, S, Jalt, p.tol).matrix
        margins["fundamental_symmetry_gap"] = -rel(opnorm(Z - Z2), opnorm(W.matrix))
        # ran Z is J-orthogonal to S
        margins["companion_gap"] = -rel(opnorm(S.basis.conj().T @ H.J @ Z), opnorm(W.matrix))
    elif t == "jtrace":
        T = p.op("T")
        Jfs = pl.get("Jfs", T.domain.J)
        z = complex(*sol["value"])
        margins["basis_sum_gap"] = -rel(abs(z - basis_sum_trace(T.matrix, T.domain.J, Jfs)),
                                        opnorm(T.matrix))
    elif t == "adjoint":
        T = p.op("T")
        Ts = decode_matrix(sol["T_sharp"], "solution.T_sharp")
        rng = np.random.default_rng(seed)
        x = _rand(rng, T.domain.dim)
        y = _rand(rng, T.codomain.dim)
        gap = abs(T.codomain.form(T.matrix @ x, y) - T.domain.form(x, Ts @ y))
        margins["adjoint_identity_gap"] = -rel(gap, opnorm(T.matrix))
    return margins


def certify(p: ProblemInstance, result, n_samples=None, seed=None):
    """Re-run independent oracle checks on a solved result and attach margins.

    Every margin is normalised so that ``>= -1e-8`` means the check passed.

    Raises
    ------
    InvalidState
        ``result`` is not a solved result.
    """
    if result.get("status") != "solved":
        raise InvalidState(f"cannot certify a result with status {result.get('status')!r}")
    n_samples = p.n_samples if n_samples is None else n_samples
    seed = p.seed if seed is None else seed
    margins = _certify_margins(p, result, n_samples, seed)
    out = dict(result)
    certs = dict(out.get("certificates") or {})
    certs["oracle"] = {"n_samples": n_samples, "seed": seed,
                       "margins": {k: float(v) for k, v in margins.items()}}
    out["certificates"] = certs
    out["seed"] = seed
    return out


def margins_ok(result, tol=MARGIN_TOL):
    oracle = result.get("certificates", {}).get("oracle", {})
    return all(v >= -tol for v in oracle.get("margins", {}).values())


def exit_code(result, strict=False):
    code = EXIT_CODES.get(result["status"], 1)
    if strict and code == 0 and not margins_ok(result):
        return EXIT_STRICT
    return code


def process(source, type_override=None, tol=None, seed=None, n_samples=None, strict=False):
    """Parse, run and (for solved results) certify; returns ``(result, exit code)``.

    ``tol`` is a dict of :class:`Tolerance` fields overriding the file options.
    """
    try:
        p = parse_problem(source, type_override)
    except (ParseError, ValidationError) as exc:
        res = invalid_result(exc)
        return res, exit_code(res)
    if tol:
        p.tol = replace(p.tol, **tol)
    if seed is not None:
        p.seed = seed
    if n_samples is not None:
        p.n_samples = n_samples
    res = run(p)
    if res["status"] == "solved":
        res = certify(p, res)
    return res, exit_code(res, strict)
