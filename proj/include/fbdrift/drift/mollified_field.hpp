#pragma once

#include "fbdrift/drift/drift_spec.hpp"

#include <span>
#include <vector>

namespace fbd::drift {

/// Unnormalized space-time bump k(tau, y) = exp(-1/(1 - tau^2 - |y|^2)) on
/// the unit ball of R^{1+d}, and its spatial marginal
/// kbar(|y|) = int k(tau, y) dtau.
double bump_kernel(double s2);
double kernel_marginal(double r);
double kernel_marginal_derivative(double r);
/// int_{R^d} kbar(|y|) dy = int_{R^{1+d}} k.
double kernel_mass(int d);

/// Evaluator for c_m * E_eps(1_{|b| <= m} b).
///
/// Rotation-equivariant, time-constant inner fields are tabulated once as a
/// radial profile beta(r) with b_m(x) = beta(|x|) x/|x|; other fields are
/// integrated on the fly with a tensor Gauss rule over the kernel support.
class MollifiedField {
public:
    MollifiedField(DriftSpec inner, double m, double eps, double c_m, MollifierQuadrature q);

    void eval(double t, std::span<const double> x, std::span<double> out) const;
    /// Row-major Jacobian.
    void grad(double t, std::span<const double> x, std::span<double> out) const;
    /// 1_{|b| <= m} b without the convolution.
    void truncated(double t, std::span<const double> x, std::span<double> out) const;

    bool tabulated() const { return !table_r_.empty(); }
    double support_radius() const { return support_; }
    /// Radii where |inner| crosses the level m (radial-magnitude fields only).
    const std::vector<double>& level_radii() const { return level_radii_; }
    std::size_t rule_size() const { return rule_w_.size(); }

private:
    void build_rule();
    void build_table();
    void profile(double r, double& beta, double& dbeta) const;

    DriftSpec inner_;
    int d_;
    double m_, eps_, c_m_;
    MollifierQuadrature q_;
    bool time_constant_;
    double support_;
    std::vector<double> level_radii_;

    // direct rule: nodes (tau, y) flattened with stride 1 + d
    std::vector<double> rule_z_;
    std::vector<double> rule_w_;
    std::vector<double> rule_g_;  // d gradient weights per node

    // radial table on r = a sinh(u), u = i du
    double table_a_ = 1.0;
    double table_du_ = 1.0 / 64;
    std::vector<double> table_r_, table_beta_, table_dbeta_;
};

}  // namespace fbd::drift
