"""Translation-invariant Gibbs measures of the 3-state p-SOS model on the binary tree.

Closed-form boundary laws and their classification (:mod:`.laws`), a
generic multi-start recursion solver (:mod:`.recursion`), transition
kernels and spectra (:mod:`.spectral`), extremality tests
(:mod:`.extremality`) and threshold location (:mod:`.thresholds`).
"""

__version__ = "0.1.0"

from psos_gibbs.backend import BACKEND
from psos_gibbs.errors import (
    BranchAbsent,
    BranchVanished,
    ConditionViolation,
    DomainError,
    NonConvergence,
    NoSignChange,
    NotDefined,
    PsosError,
    StochasticityViolation,
    ToleranceAmbiguity,
)
from psos_gibbs.extremality import (
    ExtremalityReport,
    GammaBound,
    Verdict,
    gamma_bound,
    kappa,
    kappa_explicit,
    msw_report,
    theta_monotone_check,
    verify_gamma_lemma,
)
from psos_gibbs.laws import (
    CubicAnalysis,
    LawPoint,
    Region,
    SolutionSet,
    XiAnalysis,
    branch_points_4to7,
    classify,
    cubic_discriminant,
    find_branch,
    region_curves,
    solve_cubic_x1,
    xi_analysis,
)
from psos_gibbs.params import ModelParams
from psos_gibbs.recursion import LawVector, f_map, ti_fixed_points
from psos_gibbs.spectral import (
    KSReport,
    TransitionKernel,
    build_kernel,
    closed_form_eigenvalues,
    eigenvalues,
    kesten_stigum,
)
from psos_gibbs.thresholds import (
    Curve,
    Quantity,
    ThresholdQuery,
    find_threshold,
    paper_threshold_suite,
    trace_curve,
)
