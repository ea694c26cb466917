#include "growfn/kernels.hpp"

#include "growfn/error.hpp"

#include <cmath>
#include <sstream>

namespace growfn {

namespace {

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << name << " must be positive and finite, got " << v;
        throw ParameterError(os.str());
    }
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string("non-finite entries in ") + what);
}

}  // namespace

Cholesky::Cholesky(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NumericError("Cholesky factorization failed (matrix not positive definite)");
    lower_ = llt.matrixL();
    const auto diag = lower_.diagonal();
    if (!(diag.array() > 0.0).all() || !diag.allFinite())
        throw NumericError("Cholesky factorization produced a non-positive pivot");
    log_det_ = 2.0 * diag.array().log().sum();
}

Eigen::VectorXd Cholesky::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd z = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(z);
}

Eigen::MatrixXd Cholesky::solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd z = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(z);
}

double Cholesky::quad_form(const Eigen::VectorXd& b) const {
    return lower_.triangularView<Eigen::Lower>().solve(b).squaredNorm();
}

CovMatrix rq_covariance(const RQParams& theta, std::span<const double> times) {
    check_positive(theta.theta1, "theta1");
    check_positive(theta.theta2, "theta2");
    check_positive(theta.theta3, "theta3");
    const auto n = static_cast<Eigen::Index>(times.size());
    CovMatrix c{Eigen::MatrixXd(n, n)};
    const double var = 1.0 / theta.theta1;
    const double denom = theta.theta2 * theta.theta3;
    for (Eigen::Index j = 0; j < n; ++j) {
        c.values(j, j) = var;
        for (Eigen::Index l = 0; l < j; ++l) {
            const double d = times[static_cast<std::size_t>(j)] - times[static_cast<std::size_t>(l)];
            // log1p keeps the huge-theta3 limit accurate.
            const double v = var * std::exp(-theta.theta3 * std::log1p(d * d / denom));
            c.values(j, l) = v;
            c.values(l, j) = v;
        }
    }
    check_finite(c.values, "rational quadratic covariance");
    return c;
}

CovMatrix se_covariance(const SEParams& params, std::span<const double> times) {
    check_positive(params.vscale, "vscale");
    check_positive(params.lscale, "lscale");
    const auto n = static_cast<Eigen::Index>(times.size());
    CovMatrix c{Eigen::MatrixXd(n, n)};
    const double var = 1.0 / params.vscale;
    for (Eigen::Index j = 0; j < n; ++j) {
        c.values(j, j) = var;
        for (Eigen::Index l = 0; l < j; ++l) {
            const double d = times[static_cast<std::size_t>(j)] - times[static_cast<std::size_t>(l)];
            const double v = var * std::exp(-d * d / params.lscale);
            c.values(j, l) = v;
            c.values(l, j) = v;
        }
    }
    check_finite(c.values, "squared exponential covariance");
    return c;
}

CovMatrix add_nugget(const CovMatrix& c, double tau_eps) {
    check_positive(tau_eps, "tau_eps");
    CovMatrix out = c;
    add_to_diagonal(out, 1.0 / tau_eps);
    return out;
}

void add_to_diagonal(CovMatrix& c, double amount) {
    c.values.diagonal().array() += amount;
}

double PrecisionStructure::quad_form(const Eigen::VectorXd& f) const {
    return f.dot(Q * f);
}

PrecisionStructure rw2_structure(int T) {
    if (T < 5) throw ParameterError("rw2_structure needs T >= 5, got " + std::to_string(T));
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> d2;
    for (int r = 0; r < T - 2; ++r) {
        d2.emplace_back(r, r, 1.0);
        d2.emplace_back(r, r + 1, -2.0);
        d2.emplace_back(r, r + 2, 1.0);
    }
    Eigen::SparseMatrix<double> D2(T - 2, T);
    D2.setFromTriplets(d2.begin(), d2.end());

    PrecisionStructure s;
    s.Q = Eigen::SparseMatrix<double>(D2.transpose() * D2);
    s.Q.prune(0.0);
    s.D = Eigen::VectorXd(s.Q.diagonal());
    Eigen::SparseMatrix<double> diag(T, T);
    for (int j = 0; j < T; ++j) diag.insert(j, j) = s.D(j);
    s.Omega = diag - s.Q;
    s.Omega.prune(0.0);
    return s;
}

Eigen::MatrixXd proper_gmrf_precision(const PrecisionStructure& s, double kappa, double rho) {
    check_positive(kappa, "kappa");
    if (!(rho > -1.0 && rho < 1.0))
        throw ParameterError("proper GMRF needs -1 < rho < 1; use the intrinsic structure for rho = 1");
    Eigen::MatrixXd r = -rho * Eigen::MatrixXd(s.Omega);
    r.diagonal() += s.D;
    return kappa * r;
}

std::vector<Eigen::Index> even_subset(Eigen::Index T, Eigen::Index k) {
    if (k < 2 || k > T) throw ParameterError("subset size must lie in [2, T]");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
    for (Eigen::Index r = 0; r < k; ++r)
        idx[static_cast<std::size_t>(r)] = static_cast<Eigen::Index>(
            std::llround(static_cast<double>(r) * static_cast<double>(T - 1) / static_cast<double>(k - 1)));
    return idx;
}

}  // namespace growfn
