"""Material description for a linear micropolar porous thermoelastic solid.

Constants follow the constitutive law

    T_ij = C_ijkl E_kl + Gc_ijkl Psi_lk + H2_ij varphi + H3_ijk varphi,k + A_ij theta
    M_ij = Gc_klij E_kl + Gam_ijkl Psi_lk + P2_ij varphi + P3_ijk varphi,k + Gth_ij theta
    g    = -H2_ij E_ij - P2_ij Psi_ji - a varphi - a_i varphi,i - b theta
    h_i  = H3_jki E_jk + P3_jki Psi_kj + a_i varphi + D_ij varphi,j + gamma_i theta
    rho eta = -A_ij E_ij - Gth_ij Psi_ji - b varphi - gamma_i varphi,i + c theta
    (1 + tau d/dt) q_i = K_ij theta,j

with E the (generally non-symmetric) strain, Psi the wryness, varphi the
volume-fraction change, theta the temperature increment over theta0 and q the
heat flux.  C, Gam satisfy the major symmetries C_ijkl = C_klij,
Gam_ijkl = Gam_klij; D, K and the micro-inertia J are symmetric.
"""

from dataclasses import dataclass, fields
import numpy as np

from .errors import (
    NoninvertibleConductivity,
    NonpositiveScalar,
    NotPositiveDefinite,
    SizeMismatch,
    SymmetryViolation,
    ValidationError,
)

VALIDATION_TOL = 1e-12

_SHAPES = {
    "J": (3, 3),
    "C": (3, 3, 3, 3),
    "Gc": (3, 3, 3, 3),
    "Gam": (3, 3, 3, 3),
    "H2": (3, 3),
    "H3": (3, 3, 3),
    "A": (3, 3),
    "P2": (3, 3),
    "P3": (3, 3, 3),
    "Gth": (3, 3),
    "a_vec": (3,),
    "gamma": (3,),
    "D": (3, 3),
    "K": (3, 3),
}


def _frozen(arr):
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MaterialConstants:
    """Full constant set; arrays are stored read-only.

    ``B`` weights the q-quadratic term of the free energy.  It drops out of
    every balance law and of both variational functionals (the term cancels),
    so it defaults to (tau/theta0) * K^-1 when not provided; pass an explicit
    3x3 to override.
    """

    rho: float = 1.0
    theta0: float = 1.0
    tau: float = 0.0
    chi: float = 1.0
    J: np.ndarray = None
    C: np.ndarray = None
    Gc: np.ndarray = None
    Gam: np.ndarray = None
    H2: np.ndarray = None
    H3: np.ndarray = None
    A: np.ndarray = None
    P2: np.ndarray = None
    P3: np.ndarray = None
    Gth: np.ndarray = None
    a_scalar: float = 1.0
    a_vec: np.ndarray = None
    b: float = 0.0
    gamma: np.ndarray = None
    c: float = 1.0
    D: np.ndarray = None
    K: np.ndarray = None
    B: np.ndarray = None

    def __post_init__(self):
        for name, shape in _SHAPES.items():
            val = getattr(self, name)
            if val is None:
                val = np.eye(3) if name in ("J", "D", "K") else np.zeros(shape)
            val = np.asarray(val, dtype=float)
            if val.shape != shape:
                raise SizeMismatch(
                    f"material tensor {name} has shape {val.shape}, expected {shape}",
                    name=name,
                )
            object.__setattr__(self, name, _frozen(val))
        for name in ("rho", "theta0", "tau", "chi", "a_scalar", "b", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))
        try:
            kinv = invert_conductivity(self.K)
        except NoninvertibleConductivity:
            kinv = None
        object.__setattr__(self, "Kinv", kinv if kinv is None else _frozen(kinv))
        if self.B is None:
            if kinv is None or self.theta0 <= 0:
                bmat = np.zeros((3, 3))
            else:
                bmat = (self.tau / self.theta0) * kinv
            object.__setattr__(self, "B", _frozen(bmat))
        else:
            bmat = np.asarray(self.B, dtype=float)
            if bmat.shape != (3, 3):
                raise SizeMismatch(
                    f"material tensor B has shape {bmat.shape}, expected (3, 3)",
                    name="B",
                )
            object.__setattr__(self, "B", _frozen(bmat))

    def replace(self, **changes):
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return MaterialConstants(**kwargs)


@dataclass(frozen=True)
class Violation:
    code: str
    name: str
    where: tuple
    message: str
    added_hypothesis: bool = False


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple

    def codes(self):
        return [v.code for v in self.violations]


def unfold4(T):
    """Pair-unfold a rank-4 tensor: rows index (ij), columns (kl)."""
    return np.asarray(T).reshape(9, 9)


def fold4(M):
    return np.asarray(M).reshape(3, 3, 3, 3)


def invert_conductivity(K):
    """Invert the 3x3 conductivity by Gauss-Jordan with partial pivoting.

    Raises NONINVERTIBLE_CONDUCTIVITY when any pivot falls below
    1e-14 * max|K|.  For symmetric input the result is symmetrized to kill
    roundoff skew, so K_tilde matches its transpose exactly.
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (3, 3):
        raise SizeMismatch(f"conductivity has shape {K.shape}, expected (3, 3)", name="K")
    scale = np.abs(K).max()
    if scale == 0.0:
        raise NoninvertibleConductivity("conductivity is identically zero", pivot=0.0)
    aug = np.hstack([K.astype(float), np.eye(3)])
    for col in range(3):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < 1e-14 * scale:
            raise NoninvertibleConductivity(
                f"conductivity pivot {abs(aug[piv, col]):.3e} below 1e-14 * max|K|",
                pivot=float(abs(aug[piv, col])),
                column=col,
            )
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] / aug[col, col]
        for row in range(3):
            if row != col:
                aug[row] = aug[row] - aug[row, col] * aug[col]
    kinv = aug[:, 3:]
    if np.abs(K - K.T).max() <= VALIDATION_TOL * max(1.0, scale):
        kinv = 0.5 * (kinv + kinv.T)
    return kinv


def _check_sym(violations, name, arr, pair_major=False, tol=VALIDATION_TOL):
    if pair_major:
        M = unfold4(arr)
        diff = np.abs(M - M.T)
        if diff.max() > tol:
            r, s = np.unravel_index(int(np.argmax(diff)), diff.shape)
            idx = (r // 3, r % 3, s // 3, s % 3)
            violations.append(Violation(
                "SYMMETRY_VIOLATION", name, idx,
                f"{name}[{idx}] differs from its (kl)(ij) partner by {diff.max():.3e}",
            ))
    else:
        diff = np.abs(arr - arr.T)
        if diff.max() > tol:
            idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
            violations.append(Violation(
                "SYMMETRY_VIOLATION", name, tuple(int(k) for k in idx),
                f"{name}[{idx}] differs from its transpose by {diff.max():.3e}",
            ))


def validate_material(mc, tol=VALIDATION_TOL):
    """Check stated hypotheses plus the added definiteness conditions.

    Stated: major symmetries of C and Gam, symmetry of D, K, J, invertible K,
    positive rho, theta0, chi, c and tau >= 0.  Added (flagged as such in the
    result): J and K positive definite; J for kinetic-energy positivity, K so
    conduction dissipates.
    """
    violations = []
    _check_sym(violations, "C", mc.C, pair_major=True, tol=tol)
    _check_sym(violations, "Gam", mc.Gam, pair_major=True, tol=tol)
    for name in ("D", "K", "J"):
        _check_sym(violations, name, getattr(mc, name), tol=tol)
    for name in ("rho", "theta0", "chi", "c"):
        val = getattr(mc, name)
        if not val > 0.0:
            violations.append(Violation(
                "NONPOSITIVE_SCALAR", name, (), f"{name} = {val} must be positive"))
    if mc.tau < 0.0:
        violations.append(Violation(
            "NONPOSITIVE_SCALAR", "tau", (), f"tau = {mc.tau} must be >= 0"))
    try:
        invert_conductivity(mc.K)
    except NoninvertibleConductivity as exc:
        violations.append(Violation(
            "NONINVERTIBLE_CONDUCTIVITY", "K", (), exc.message))
    for name, added_note in (("J", "kinetic energy positivity"),
                             ("K", "conduction dissipativity")):
        arr = getattr(mc, name)
        if np.abs(arr - arr.T).max() <= tol:
            lam_min = float(np.linalg.eigvalsh(0.5 * (arr + arr.T))[0])
            if lam_min <= tol:
                violations.append(Violation(
                    "NOT_POSITIVE_DEFINITE", name, (),
                    f"{name} smallest eigenvalue {lam_min:.3e}; "
                    f"definiteness is an added admissibility condition ({added_note})",
                    added_hypothesis=True,
                ))
    return ValidationResult(ok=not violations, violations=tuple(violations))


def require_valid(mc, tol=VALIDATION_TOL):
    """Raise VALIDATION_ERROR carrying the itemized violations if any."""
    res = validate_material(mc, tol=tol)
    if not res.ok:
        raise ValidationError(
            "material fails admissibility: " + "; ".join(
                v.message for v in res.violations),
            violations=[v.code for v in res.violations],
        )
    return mc


def isotropic_preset(lam=1.0, mu=1.0, kappa=0.5,
                     alpha_m=0.5, beta_m=0.2, gamma_m=0.7,
                     j0=1.0, d0=1.0, k0=1.0,
                     a_scalar=1.0, h0=0.0, a0=0.0, b0=0.0, c0=1.0,
                     rho=1.0, theta0=1.0, tau=0.0, chi=1.0):
    """Isotropic(-style) constant set.

    C_ijkl = lam d_ij d_kl + (mu+kappa) d_ik d_jl + mu d_il d_jk and the
    micropolar analogue Gam_ijkl = alpha_m d_ij d_kl + gamma_m d_ik d_jl
    + beta_m d_il d_jk; porosity/thermal moduli enter through scalar
    multiples of the identity (H2 = h0 I, A = a0 I, D = d0 I, K = k0 I).
    All remaining coupling tensors vanish.
    """
    d = np.eye(3)
    C = (lam * np.einsum("ij,kl->ijkl", d, d)
         + (mu + kappa) * np.einsum("ik,jl->ijkl", d, d)
         + mu * np.einsum("il,jk->ijkl", d, d))
    Gam = (alpha_m * np.einsum("ij,kl->ijkl", d, d)
           + gamma_m * np.einsum("ik,jl->ijkl", d, d)
           + beta_m * np.einsum("il,jk->ijkl", d, d))
    return MaterialConstants(
        rho=rho, theta0=theta0, tau=tau, chi=chi,
        J=j0 * d, C=C, Gc=np.zeros((3, 3, 3, 3)), Gam=Gam,
        H2=h0 * d, H3=np.zeros((3, 3, 3)), A=a0 * d,
        P2=np.zeros((3, 3)), P3=np.zeros((3, 3, 3)), Gth=np.zeros((3, 3)),
        a_scalar=a_scalar, a_vec=np.zeros(3), b=b0, gamma=np.zeros(3),
        c=c0, D=d0 * d, K=k0 * d,
    )


def random_admissible_material(seed, coupling_scale, eigen_floor=1.0, tau=0.05):
    """Seeded admissible material with uniformly filled coupling tensors.

    C, Gam, D, K, J start from symmetrized uniform(-1, 1) draws and are
    shifted by lambda_shift * I so the smallest eigenvalue of the unfolded
    form lands on ``eigen_floor`` (default 1.0; anything above the 0.1
    admissibility floor is allowed -- the larger default keeps every
    mechanical mode fast and the coupled quadratic form convex even at
    coupling_scale ~ 0.3).  Couplings (Gc, H2, H3, A, P2, P3, Gth, a_vec, b,
    gamma) are uniform in [-coupling_scale, coupling_scale]; rho, theta0,
    chi, c, a_scalar are uniform in [1, 2).  Draw order is fixed; equal seeds
    give bit-identical constants.
    """
    rng = np.random.default_rng(seed)

    def shifted4():
        S = rng.uniform(-1.0, 1.0, (9, 9))
        S = 0.5 * (S + S.T)
        lam_min = float(np.linalg.eigvalsh(S)[0])
        return fold4(S + (eigen_floor - lam_min) * np.eye(9))

    def shifted2():
        S = rng.uniform(-1.0, 1.0, (3, 3))
        S = 0.5 * (S + S.T)
        lam_min = float(np.linalg.eigvalsh(S)[0])
        return S + (eigen_floor - lam_min) * np.eye(3)

    C = shifted4()
    Gam = shifted4()
    D = shifted2()
    K = shifted2()
    J = shifted2()
    cs = float(coupling_scale)
    Gc = rng.uniform(-cs, cs, (3, 3, 3, 3))
    H2 = rng.uniform(-cs, cs, (3, 3))
    H3 = rng.uniform(-cs, cs, (3, 3, 3))
    A = rng.uniform(-cs, cs, (3, 3))
    P2 = rng.uniform(-cs, cs, (3, 3))
    P3 = rng.uniform(-cs, cs, (3, 3, 3))
    Gth = rng.uniform(-cs, cs, (3, 3))
    a_vec = rng.uniform(-cs, cs, 3)
    b = float(rng.uniform(-cs, cs))
    gamma = rng.uniform(-cs, cs, 3)
    rho, theta0, chi, c, a_scalar = (float(v) for v in rng.uniform(1.0, 2.0, 5))
    mc = MaterialConstants(
        rho=rho, theta0=theta0, tau=tau, chi=chi, J=J, C=C, Gc=Gc, Gam=Gam,
        H2=H2, H3=H3, A=A, P2=P2, P3=P3, Gth=Gth, a_scalar=a_scalar,
        a_vec=a_vec, b=b, gamma=gamma, c=c, D=D, K=K,
    )
    return require_valid(mc)
