#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace embgeom {

/// Allocation guard: bases with more monomials than this are refused.
/// Full-degree fitting in high ambient dimension is infeasible by design;
/// callers should reduce first.
inline constexpr std::uint64_t kBasisSizeCap = 1'000'000;

/// Number of monomials of total degree <= degree in r variables,
/// i.e. C(r + degree, degree). Never allocates.
std::uint64_t basis_size(int r, int degree);

/// Monomial basis in graded lexicographic order: constant term first, then
/// total degree 1, 2, ... and within a degree the exponent tuples ordered
/// lexicographically with the first variable most significant.
struct MonomialBasis {
    int vars = 0;
    int degree = 0;
    std::vector<std::vector<int>> exponents;

    // Sparse view of one monomial: at most `degree` distinct variables.
    struct Term {
        int count = 0;
        std::array<int, 3> var{};
        std::array<int, 3> pow{};
    };
    std::vector<Term> terms;  // parallel to `exponents`

    std::size_t size() const { return exponents.size(); }
    bool same_shape(const MonomialBasis& other) const { return vars == other.vars && degree == other.degree; }
};

/// Builds the basis for degree in {1,2,3}. Throws std::length_error when the
/// basis size would exceed kBasisSizeCap (the size itself is still available
/// through basis_size).
MonomialBasis build_basis(int r, int degree);

/// Implicit polynomial carrier f(z) = sum_j theta_j * monomial_j(z).
/// theta is kept unit-norm with its first nonzero coefficient positive, so
/// equal surfaces serialize identically.
struct ImplicitPolyModel {
    MonomialBasis basis;
    Eigen::VectorXd theta;
};

/// Normalizes and sign-canonicalizes theta; throws on zero or size mismatch.
ImplicitPolyModel make_model(MonomialBasis basis, Eigen::VectorXd theta);

enum class ResidualKind { algebraic, normalized_surface };

struct FitDiagnostics {
    double rmse = 0.0;
    double mae = 0.0;
    ResidualKind kind = ResidualKind::normalized_surface;
    double smallest_singular_value = 0.0;
    double singular_gap = 0.0;  // s_min / s_next of the scaled design matrix
    bool degenerate = false;    // near-tied smallest singular values
};

/// Homogeneous least-squares fit: theta is the right singular vector of the
/// design matrix attaining the minimal singular value. Columns are scaled to
/// unit RMS before the SVD and the scaling is inverted on theta.
std::pair<ImplicitPolyModel, FitDiagnostics> fit_implicit(const Eigen::MatrixXd& points, int degree);

double evaluate(const ImplicitPolyModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::VectorXd gradient(const ImplicitPolyModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::MatrixXd hessian(const ImplicitPolyModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Per-point residuals plus summary statistics over them.
/// algebraic: |f(z)|; normalized_surface: |f(z)| / (||grad f(z)|| + epsilon).
std::pair<std::vector<double>, FitDiagnostics> residuals(const ImplicitPolyModel& model,
                                                         const Eigen::MatrixXd& points, ResidualKind kind,
                                                         double epsilon = 1e-12);

}  // namespace embgeom
