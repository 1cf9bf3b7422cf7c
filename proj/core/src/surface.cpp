#include "embgeom/surface.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

namespace embgeom {

namespace {

double ipow(double x, int e) {
    switch (e) {
        case 0: return 1.0;
        case 1: return x;
        case 2: return x * x;
        case 3: return x * x * x;
        default: {
            double v = 1.0;
            for (int i = 0; i < e; ++i) v *= x;
            return v;
        }
    }
}

double term_value(const MonomialBasis::Term& t, const Eigen::Ref<const Eigen::VectorXd>& z) {
    double v = 1.0;
    for (int i = 0; i < t.count; ++i) v *= ipow(z[t.var[i]], t.pow[i]);
    return v;
}

void append_terms(MonomialBasis& basis, const std::vector<int>& exps) {
    MonomialBasis::Term t;
    for (int v = 0; v < static_cast<int>(exps.size()); ++v) {
        if (exps[v] == 0) continue;
        if (t.count >= 3) throw std::logic_error("monomial with more than three variables");
        t.var[t.count] = v;
        t.pow[t.count] = exps[v];
        ++t.count;
    }
    basis.exponents.push_back(exps);
    basis.terms.push_back(t);
}

// exponent tuples of total degree exactly `total`, first variable most
// significant, highest power first
void enumerate_degree(MonomialBasis& basis, std::vector<int>& cur, int slot, int total) {
    const int r = static_cast<int>(cur.size());
    if (total == 0) {
        for (int v = slot; v < r; ++v) cur[v] = 0;
        append_terms(basis, cur);
        return;
    }
    if (slot == r - 1) {
        cur[slot] = total;
        append_terms(basis, cur);
        cur[slot] = 0;
        return;
    }
    for (int e = total; e >= 0; --e) {
        cur[slot] = e;
        enumerate_degree(basis, cur, slot + 1, total - e);
    }
    cur[slot] = 0;
}

}  // namespace

std::uint64_t basis_size(int r, int degree) {
    if (r < 1) throw std::invalid_argument("basis_size: r must be positive");
    if (degree < 1 || degree > 3) throw std::invalid_argument("basis_size: degree must be 1, 2 or 3");
    // C(r + degree, degree), built so every partial product stays integral
    std::uint64_t p = 1;
    for (int k = 1; k <= degree; ++k) p = p * static_cast<std::uint64_t>(r + k) / static_cast<std::uint64_t>(k);
    return p;
}

MonomialBasis build_basis(int r, int degree) {
    const std::uint64_t p = basis_size(r, degree);
    if (p > kBasisSizeCap)
        throw std::length_error("build_basis: basis size " + std::to_string(p) + " exceeds the cap of " +
                                std::to_string(kBasisSizeCap) + "; fit in a reduced space instead");
    MonomialBasis basis;
    basis.vars = r;
    basis.degree = degree;
    basis.exponents.reserve(p);
    basis.terms.reserve(p);
    std::vector<int> cur(static_cast<std::size_t>(r), 0);
    for (int total = 0; total <= degree; ++total) enumerate_degree(basis, cur, 0, total);
    return basis;
}

ImplicitPolyModel make_model(MonomialBasis basis, Eigen::VectorXd theta) {
    if (static_cast<std::size_t>(theta.size()) != basis.size())
        throw std::invalid_argument("make_model: theta length does not match basis size");
    const double norm = theta.norm();
    if (!(norm > 0.0) || !theta.allFinite()) throw std::invalid_argument("make_model: theta must be nonzero and finite");
    theta /= norm;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        if (std::abs(theta[j]) > 1e-12) {
            if (theta[j] < 0.0) theta = -theta;
            break;
        }
    }
    return ImplicitPolyModel{std::move(basis), std::move(theta)};
}

std::pair<ImplicitPolyModel, FitDiagnostics> fit_implicit(const Eigen::MatrixXd& points, int degree) {
    const Eigen::Index n = points.rows();
    const auto r = static_cast<int>(points.cols());
    if (n < 2) throw std::invalid_argument("fit_implicit: at least two points required");
    if (!points.allFinite()) throw std::invalid_argument("fit_implicit: non-finite input");
    if ((points.rowwise() - points.row(0)).squaredNorm() == 0.0)
        throw std::invalid_argument("fit_implicit: all points identical");

    MonomialBasis basis = build_basis(r, degree);
    const auto p = static_cast<Eigen::Index>(basis.size());
    if (n < p && p > 20000)
        throw std::invalid_argument("fit_implicit: underdetermined system too large (p = " + std::to_string(p) +
                                    ", n = " + std::to_string(n) + ")");

    Eigen::MatrixXd design(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd z = points.row(i).transpose();
        for (Eigen::Index j = 0; j < p; ++j) design(i, j) = term_value(basis.terms[static_cast<std::size_t>(j)], z);
    }

    // unit-RMS column scaling keeps mixed-degree columns comparably conditioned
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double s = std::sqrt(design.col(j).squaredNorm() / static_cast<double>(n));
        scale[j] = s > 0.0 ? s : 1.0;
        design.col(j) /= scale[j];
    }

    Eigen::VectorXd theta_scaled;
    Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(p);  // descending, zero-padded when n < p
    if (n >= p) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
        theta_scaled = svd.matrixV().col(p - 1);
        spectrum.head(svd.singularValues().size()) = svd.singularValues();
    } else {
        // underdetermined: the nullspace is nonempty and any of its unit
        // vectors attains singular value zero; take the SVD's deterministic
        // completion column
        Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
        theta_scaled = svd.matrixV().col(p - 1);
        spectrum.head(svd.singularValues().size()) = svd.singularValues();
    }

    Eigen::VectorXd theta = theta_scaled.cwiseQuotient(scale);
    ImplicitPolyModel model = make_model(std::move(basis), std::move(theta));

    FitDiagnostics diag;
    diag.smallest_singular_value = spectrum[p - 1];
    const double s_next = p >= 2 ? spectrum[p - 2] : spectrum[p - 1];
    diag.singular_gap = s_next > 0.0 ? spectrum[p - 1] / s_next : 1.0;
    diag.degenerate = !(s_next - spectrum[p - 1] > 1e-10 * spectrum[0]);

    auto [res, stats] = residuals(model, points, ResidualKind::normalized_surface);
    diag.rmse = stats.rmse;
    diag.mae = stats.mae;
    diag.kind = stats.kind;
    return {std::move(model), diag};
}

double evaluate(const ImplicitPolyModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (z.size() != model.basis.vars) throw std::invalid_argument("evaluate: point length does not match basis");
    double acc = 0.0;
    for (std::size_t j = 0; j < model.basis.terms.size(); ++j)
        acc += model.theta[static_cast<Eigen::Index>(j)] * term_value(model.basis.terms[j], z);
    return acc;
}

Eigen::VectorXd gradient(const ImplicitPolyModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (z.size() != model.basis.vars) throw std::invalid_argument("gradient: point length does not match basis");
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(z.size());
    for (std::size_t j = 0; j < model.basis.terms.size(); ++j) {
        const auto& t = model.basis.terms[j];
        const double c = model.theta[static_cast<Eigen::Index>(j)];
        for (int a = 0; a < t.count; ++a) {
            double g = c * t.pow[a] * ipow(z[t.var[a]], t.pow[a] - 1);
            for (int b = 0; b < t.count; ++b)
                if (b != a) g *= ipow(z[t.var[b]], t.pow[b]);
            grad[t.var[a]] += g;
        }
    }
    return grad;
}

Eigen::MatrixXd hessian(const ImplicitPolyModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (z.size() != model.basis.vars) throw std::invalid_argument("hessian: point length does not match basis");
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(z.size(), z.size());
    for (std::size_t j = 0; j < model.basis.terms.size(); ++j) {
        const auto& t = model.basis.terms[j];
        const double c = model.theta[static_cast<Eigen::Index>(j)];
        for (int a = 0; a < t.count; ++a) {
            if (t.pow[a] >= 2) {
                double h = c * t.pow[a] * (t.pow[a] - 1) * ipow(z[t.var[a]], t.pow[a] - 2);
                for (int b = 0; b < t.count; ++b)
                    if (b != a) h *= ipow(z[t.var[b]], t.pow[b]);
                hess(t.var[a], t.var[a]) += h;
            }
            for (int b = a + 1; b < t.count; ++b) {
                double h = c * t.pow[a] * t.pow[b] * ipow(z[t.var[a]], t.pow[a] - 1) * ipow(z[t.var[b]], t.pow[b] - 1);
                for (int o = 0; o < t.count; ++o)
                    if (o != a && o != b) h *= ipow(z[t.var[o]], t.pow[o]);
                hess(t.var[a], t.var[b]) += h;
                hess(t.var[b], t.var[a]) += h;
            }
        }
    }
    return hess;
}

std::pair<std::vector<double>, FitDiagnostics> residuals(const ImplicitPolyModel& model, const Eigen::MatrixXd& points,
                                                         ResidualKind kind, double epsilon) {
    if (points.cols() != model.basis.vars) throw std::invalid_argument("residuals: dimension mismatch");
    if (points.rows() < 1) throw std::invalid_argument("residuals: empty point set");
    if (!points.allFinite()) throw std::invalid_argument("residuals: non-finite input");
    if (kind == ResidualKind::normalized_surface && !(epsilon > 0.0))
        throw std::invalid_argument("residuals: epsilon must be positive for the normalized kind");

    std::vector<double> res(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const Eigen::VectorXd z = points.row(i).transpose();
        const double f = std::abs(evaluate(model, z));
        res[static_cast<std::size_t>(i)] =
            kind == ResidualKind::algebraic ? f : f / (gradient(model, z).norm() + epsilon);
    }
    FitDiagnostics diag;
    diag.kind = kind;
    double sq = 0.0, ab = 0.0;
    for (double v : res) {
        sq += v * v;
        ab += v;
    }
    const auto n = static_cast<double>(res.size());
    diag.rmse = std::sqrt(sq / n);
    diag.mae = ab / n;
    return {std::move(res), diag};
}

}  // namespace embgeom
