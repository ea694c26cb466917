#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>
#include <vector>

namespace growfn {

/// Rational quadratic kernel parameters.
///
/// theta1 is the inverse vertical scale, theta2 the mean (squared) length
/// scale and theta3 the scale-mixture shape. All must be positive and finite.
struct RQParams {
    double theta1 = 1.0;
    double theta2 = 1.0;
    double theta3 = 1.0;

    double operator[](std::size_t p) const { return p == 0 ? theta1 : (p == 1 ? theta2 : theta3); }
    double& operator[](std::size_t p) { return p == 0 ? theta1 : (p == 1 ? theta2 : theta3); }
    static constexpr std::size_t size() { return 3; }
};

/// Squared exponential term: variance 1/vscale, squared length scale lscale.
struct SEParams {
    double vscale = 1.0;
    double lscale = 1.0;
};

/// Dense symmetric covariance matrix.
struct CovMatrix {
    Eigen::MatrixXd values;

    Eigen::Index size() const { return values.rows(); }
};

/// Lower Cholesky factor with its log determinant.
class Cholesky {
public:
    /// Throws NumericError when the matrix is not numerically positive definite.
    explicit Cholesky(const Eigen::MatrixXd& m);

    const Eigen::MatrixXd& lower() const { return lower_; }
    double log_det() const { return log_det_; }
    Eigen::Index size() const { return lower_.rows(); }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
    /// Squared Mahalanobis norm b' M^{-1} b.
    double quad_form(const Eigen::VectorXd& b) const;

private:
    Eigen::MatrixXd lower_;
    double log_det_ = 0.0;
};

/// C_jl = (1/theta1) (1 + (t_j - t_l)^2 / (theta2 theta3))^(-theta3).
CovMatrix rq_covariance(const RQParams& theta, std::span<const double> times);
/// C_jl = (1/vscale) exp(-(t_j - t_l)^2 / lscale).
CovMatrix se_covariance(const SEParams& params, std::span<const double> times);

/// Adds 1/tau_eps to the diagonal.
CovMatrix add_nugget(const CovMatrix& c, double tau_eps);
void add_to_diagonal(CovMatrix& c, double amount);

/// Jitter applied before factorizing C(theta) alone: 1e-8 times the kernel variance.
inline double default_jitter(const RQParams& theta) { return 1e-8 / theta.theta1; }

/// Second-order random walk structure Q = D2' D2 with Q = diag(D) - Omega.
struct PrecisionStructure {
    Eigen::SparseMatrix<double> Q;
    Eigen::VectorXd D;
    Eigen::SparseMatrix<double> Omega;
    int order = 2;
    int rank_deficiency = 2;

    Eigen::Index size() const { return D.size(); }
    /// f' Q f.
    double quad_form(const Eigen::VectorXd& f) const;
};

PrecisionStructure rw2_structure(int T);

/// kappa (D - rho Omega), the precision of a proper order-2 GMRF; |rho| < 1.
Eigen::MatrixXd proper_gmrf_precision(const PrecisionStructure& s, double kappa, double rho);

/// Evenly spaced subset of size k from 0..T-1, always containing both ends.
std::vector<Eigen::Index> even_subset(Eigen::Index T, Eigen::Index k);

}  // namespace growfn
