#include "fbdrift/drift/mollified_field.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace fbd::drift {

double bump_kernel(double s2) {
    if (s2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s2));
}

double kernel_marginal(double r) {
    if (r >= 1.0) return 0.0;
    const double a2 = 1.0 - r * r;
    const double a = std::sqrt(a2);
    const Rule1D& g = gauss_legendre(64);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double q = a2 * (1.0 - g.nodes[i] * g.nodes[i]);
        s += g.weights[i] * std::exp(-1.0 / q);
    }
    return a * s;
}

double kernel_marginal_derivative(double r) {
    if (r >= 1.0) return 0.0;
    const double a2 = 1.0 - r * r;
    const double a = std::sqrt(a2);
    const Rule1D& g = gauss_legendre(64);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double q = a2 * (1.0 - g.nodes[i] * g.nodes[i]);
        const double e = std::exp(-1.0 / q);
        if (e > 0.0) s += g.weights[i] * e * (-2.0 * r / (q * q));
    }
    return a * s;
}

double kernel_mass(int d) {
    const Rule1D g = gauss_legendre(128, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * kernel_marginal(g.nodes[i]) * std::pow(g.nodes[i], d - 1);
    return sphere_area(d) * s;
}

namespace {

void tensor_nodes(int dims, int n, std::vector<double>& pts, std::vector<double>& wts) {
    const Rule1D& g = gauss_legendre(static_cast<std::size_t>(n));
    std::vector<int> idx(static_cast<std::size_t>(dims), 0);
    std::size_t total = 1;
    for (int k = 0; k < dims; ++k) total *= static_cast<std::size_t>(n);
    pts.clear();
    wts.clear();
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t rem = f;
        double w = 1.0;
        for (int k = dims - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(rem % n);
            rem /= n;
        }
        for (int k = 0; k < dims; ++k) {
            pts.push_back(g.nodes[idx[k]]);
            w *= g.weights[idx[k]];
        }
        wts.push_back(w);
    }
}

}  // namespace

MollifiedField::MollifiedField(DriftSpec inner, double m, double eps, double c_m, MollifierQuadrature q)
    : inner_(std::move(inner)), d_(inner_.dimension()), m_(m), eps_(eps), c_m_(c_m), q_(q) {
    time_constant_ = inner_.time_constant();
    support_ = inner_.support_radius() + eps_;

    if (std::isfinite(m_) && inner_.radial_magnitude()) {
        const double rs = std::isfinite(inner_.support_radius()) ? inner_.support_radius() : 1e3;
        const int ns = 4000;
        const double lo = 1e-7 * rs;
        auto f = [&](double r) { return inner_.magnitude_on_axis(0.0, r) - m_; };
        double r0 = lo, f0 = f(lo);
        for (int i = 1; i <= ns; ++i) {
            const double r1 = lo * std::pow(rs / lo, static_cast<double>(i) / ns);
            const double f1 = f(r1);
            if ((f0 > 0.0) != (f1 > 0.0)) {
                double a = r0, b = r1, fa = f0;
                for (int it = 0; it < 80; ++it) {
                    const double c = 0.5 * (a + b);
                    const double fc = f(c);
                    if ((fc > 0.0) == (fa > 0.0)) {
                        a = c;
                        fa = fc;
                    } else {
                        b = c;
                    }
                }
                level_radii_.push_back(0.5 * (a + b));
            }
            r0 = r1;
            f0 = f1;
        }
    }

    if (eps_ == 0.0) return;
    if (q_.allow_table && time_constant_ && inner_.rotation_equivariant() && std::isfinite(support_) && d_ >= 2) {
        build_table();
    } else {
        build_rule();
    }
}

void MollifiedField::truncated(double t, std::span<const double> x, std::span<double> out) const {
    inner_.eval(t, x, out);
    if (!std::isfinite(m_)) return;
    double s = 0.0;
    for (int i = 0; i < d_; ++i) s += out[i] * out[i];
    if (s > m_ * m_) std::fill(out.begin(), out.begin() + d_, 0.0);
}

void MollifiedField::build_rule() {
    const bool st = !time_constant_;
    const int dims = st ? d_ + 1 : d_;
    const int n = q_.direct_nodes;
    std::vector<double> pts, wts;
    tensor_nodes(dims, n, pts, wts);
    if (st && q_.time_nodes != n) {
        // separate resolution in time: rebuild as time_nodes x spatial tensor
        std::vector<double> sp, sw;
        tensor_nodes(d_, n, sp, sw);
        const Rule1D& gt = gauss_legendre(static_cast<std::size_t>(q_.time_nodes));
        pts.clear();
        wts.clear();
        for (std::size_t a = 0; a < gt.size(); ++a)
            for (std::size_t b = 0; b < sw.size(); ++b) {
                pts.push_back(gt.nodes[a]);
                for (int k = 0; k < d_; ++k) pts.push_back(sp[b * d_ + k]);
                wts.push_back(gt.weights[a] * sw[b]);
            }
    }
    const std::size_t count = wts.size();
    double mass = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        const double* p = &pts[j * dims];
        const double tau = st ? p[0] : 0.0;
        const double* y = st ? p + 1 : p;
        double y2 = 0.0;
        for (int k = 0; k < d_; ++k) y2 += y[k] * y[k];
        double w = 0.0;
        std::vector<double> g(static_cast<std::size_t>(d_), 0.0);
        if (st) {
            const double s2 = tau * tau + y2;
            if (s2 >= 1.0) continue;
            const double k = bump_kernel(s2);
            w = wts[j] * k;
            for (int a = 0; a < d_; ++a) g[a] = wts[j] * k * (-2.0 * y[a] / ((1.0 - s2) * (1.0 - s2)));
        } else {
            if (y2 >= 1.0) continue;
            const double r = std::sqrt(y2);
            w = wts[j] * kernel_marginal(r);
            const double dk = kernel_marginal_derivative(r);
            for (int a = 0; a < d_; ++a) g[a] = r > 0.0 ? wts[j] * dk * y[a] / r : 0.0;
        }
        if (w == 0.0) continue;
        rule_z_.push_back(tau);
        for (int k = 0; k < d_; ++k) rule_z_.push_back(y[k]);
        rule_w_.push_back(w);
        rule_g_.insert(rule_g_.end(), g.begin(), g.end());
        mass += w;
    }
    if (!(mass > 0.0)) throw NumericalError("mollifier rule has zero mass");
    for (auto& w : rule_w_) w /= mass;
    for (auto& g : rule_g_) g /= mass;
}

void MollifiedField::build_table() {
    double feature = eps_;
    for (double r : level_radii_) feature = std::min(feature, r);
    feature = std::min(feature, 0.1 * support_);
    table_a_ = 0.5 * feature;
    table_du_ = q_.table_du;
    const double umax = std::asinh(support_ / table_a_);
    const auto nodes = static_cast<std::size_t>(std::ceil(umax / table_du_)) + 1;

    // axisymmetric rule for the marginal kernel
    const Rule1D gq = gauss_legendre(static_cast<std::size_t>(q_.axis_q), 0.0, 1.0);
    const Rule1D gt = gauss_legendre(static_cast<std::size_t>(q_.axis_theta), 0.0, M_PI);
    const double sd2 = d_ >= 3 ? sphere_area(d_ - 1) : 2.0;
    struct AxNode {
        double q, ct, st, w, g;
    };
    std::vector<AxNode> ax;
    double mass = 0.0;
    for (std::size_t a = 0; a < gq.size(); ++a) {
        const double q = gq.nodes[a];
        const double kb = kernel_marginal(q);
        const double dk = kernel_marginal_derivative(q);
        for (std::size_t b = 0; b < gt.size(); ++b) {
            const double th = gt.nodes[b];
            const double base = sd2 * std::pow(q, d_ - 1) * std::pow(std::sin(th), d_ - 2) * gq.weights[a] * gt.weights[b];
            ax.push_back({q, std::cos(th), std::sin(th), base * kb, base * dk * std::cos(th)});
            mass += base * kb;
        }
    }
    for (auto& n : ax) {
        n.w /= mass;
        n.g /= mass;
    }

    std::vector<double> x(static_cast<std::size_t>(d_), 0.0), v(static_cast<std::size_t>(d_));
    auto beta_T = [&](double r) {
        x[0] = r;
        inner_.eval(0.0, x, v);
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += v[i] * v[i];
        if (std::isfinite(m_) && s > m_ * m_) return 0.0;
        return v[0];
    };

    table_r_.resize(nodes);
    table_beta_.resize(nodes);
    table_dbeta_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double r = table_a_ * std::sinh(static_cast<double>(i) * table_du_);
        double b = 0.0, db = 0.0;
        for (const auto& n : ax) {
            const double z1 = r - eps_ * n.q * n.ct;
            const double zp = eps_ * n.q * n.st;
            const double z = std::hypot(z1, zp);
            if (z == 0.0) continue;
            const double val = beta_T(z) * z1 / z;
            b += n.w * val;
            db += n.g * val;
        }
        table_r_[i] = r;
        table_beta_[i] = c_m_ * b;
        table_dbeta_[i] = c_m_ * db / eps_;
        if (!std::isfinite(table_beta_[i]) || !std::isfinite(table_dbeta_[i]))
            throw NumericalError("mollifier table produced a non-finite value at r = " + std::to_string(r));
    }
}

void MollifiedField::profile(double r, double& beta, double& dbeta) const {
    if (r >= table_r_.back() || r >= support_) {
        beta = 0.0;
        dbeta = 0.0;
        return;
    }
    const double u = std::asinh(r / table_a_) / table_du_;
    auto i = static_cast<std::size_t>(u);
    if (i + 1 >= table_r_.size()) i = table_r_.size() - 2;
    while (i > 0 && r < table_r_[i]) --i;
    while (i + 2 < table_r_.size() && r >= table_r_[i + 1]) ++i;
    const double r0 = table_r_[i], r1 = table_r_[i + 1];
    const double h = r1 - r0;
    const double s = (r - r0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double b0 = table_beta_[i], b1 = table_beta_[i + 1];
    const double m0 = table_dbeta_[i] * h, m1 = table_dbeta_[i + 1] * h;
    beta = (2 * s3 - 3 * s2 + 1) * b0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * b1 + (s3 - s2) * m1;
    dbeta = ((6 * s2 - 6 * s) * b0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * b1 + (3 * s2 - 2 * s) * m1) / h;
}

void MollifiedField::eval(double t, std::span<const double> x, std::span<double> out) const {
    if (eps_ == 0.0) {
        truncated(t, x, out);
        for (int i = 0; i < d_; ++i) out[i] *= c_m_;
        return;
    }
    if (tabulated()) {
        double r2 = 0.0;
        for (int i = 0; i < d_; ++i) r2 += x[i] * x[i];
        const double r = std::sqrt(r2);
        if (r == 0.0) {
            std::fill(out.begin(), out.begin() + d_, 0.0);
            return;
        }
        double b, db;
        profile(r, b, db);
        for (int i = 0; i < d_; ++i) out[i] = b * x[i] / r;
        return;
    }
    double y[kMaxDimension], v[kMaxDimension], acc[kMaxDimension] = {};
    const std::size_t stride = static_cast<std::size_t>(d_) + 1;
    for (std::size_t j = 0; j < rule_w_.size(); ++j) {
        const double* z = &rule_z_[j * stride];
        for (int k = 0; k < d_; ++k) y[k] = x[k] - eps_ * z[k + 1];
        truncated(t - eps_ * z[0], std::span<const double>(y, d_), std::span<double>(v, d_));
        for (int k = 0; k < d_; ++k) acc[k] += rule_w_[j] * v[k];
    }
    for (int k = 0; k < d_; ++k) out[k] = c_m_ * acc[k];
}

void MollifiedField::grad(double t, std::span<const double> x, std::span<double> out) const {
    const std::size_t dd = static_cast<std::size_t>(d_) * d_;
    if (eps_ == 0.0) {
        double v[kMaxDimension];
        inner_.eval(t, x, std::span<double>(v, d_));
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += v[i] * v[i];
        if (std::isfinite(m_) && s > m_ * m_) {
            std::fill(out.begin(), out.begin() + dd, 0.0);
            return;
        }
        inner_.grad(t, x, out);
        for (std::size_t k = 0; k < dd; ++k) out[k] *= c_m_;
        return;
    }
    if (tabulated()) {
        double r2 = 0.0;
        for (int i = 0; i < d_; ++i) r2 += x[i] * x[i];
        const double r = std::sqrt(r2);
        double b, db;
        if (r < 1e-14 * table_a_) {
            profile(0.0, b, db);
            for (int i = 0; i < d_; ++i)
                for (int j = 0; j < d_; ++j) out[i * d_ + j] = i == j ? db : 0.0;
            return;
        }
        profile(r, b, db);
        const double br = b / r;
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) {
                const double p = x[i] * x[j] / r2;
                out[i * d_ + j] = db * p + br * ((i == j ? 1.0 : 0.0) - p);
            }
        return;
    }
    double y[kMaxDimension], v[kMaxDimension];
    std::fill(out.begin(), out.begin() + dd, 0.0);
    const std::size_t stride = static_cast<std::size_t>(d_) + 1;
    for (std::size_t j = 0; j < rule_w_.size(); ++j) {
        const double* z = &rule_z_[j * stride];
        for (int k = 0; k < d_; ++k) y[k] = x[k] - eps_ * z[k + 1];
        truncated(t - eps_ * z[0], std::span<const double>(y, d_), std::span<double>(v, d_));
        const double* g = &rule_g_[j * d_];
        for (int i = 0; i < d_; ++i)
            for (int a = 0; a < d_; ++a) out[i * d_ + a] += g[a] * v[i];
    }
    const double f = c_m_ / eps_;
    for (std::size_t k = 0; k < dd; ++k) out[k] *= f;
}

}  // namespace fbd::drift
