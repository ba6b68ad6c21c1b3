#include "fbdrift/drift/test_functions.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/quadrature.hpp"

#include <cmath>
#include <cstdio>

namespace fbd::drift {

namespace {
double dist2(std::span<const double> x, const std::vector<double>& c, double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = x[i] - (c.empty() ? 0.0 : c[i]);
        s += y[i] * y[i];
    }
    return s;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string center_tag(const std::vector<double>& c) {
    std::string s;
    for (double v : c) s += fmt("_%g", v);
    return s;
}
}  // namespace

bool TestFunction::radial() const {
    if (kind == Kind::TensorBump) return false;
    for (double c : center)
        if (c != 0.0) return false;
    return true;
}

double TestFunction::inner_radius() const {
    return kind == Kind::HardyQuasi ? outer * std::exp(-log_width) : 0.0;
}

double TestFunction::extent() const {
    switch (kind) {
        case Kind::Gaussian: return 9.0 * width;
        case Kind::HardyQuasi: return outer;
        case Kind::TensorBump: return width * std::sqrt(static_cast<double>(dimension));
    }
    return width;
}

double TestFunction::profile(double r) const {
    switch (kind) {
        case Kind::Gaussian: return std::exp(-0.5 * r * r / (width * width));
        case Kind::HardyQuasi: {
            const double rin = inner_radius();
            if (r <= rin || r >= outer) return 0.0;
            const double a = 0.5 * (dimension - 2) - eta;
            const double u = std::log(r / rin) / log_width;
            const double s = std::sin(M_PI * u);
            return std::pow(r, -a) * s * s;
        }
        case Kind::TensorBump: break;
    }
    throw InvalidArgument("profile of a non-radial test function");
}

double TestFunction::profile_derivative(double r) const {
    switch (kind) {
        case Kind::Gaussian: return -r / (width * width) * std::exp(-0.5 * r * r / (width * width));
        case Kind::HardyQuasi: {
            const double rin = inner_radius();
            if (r <= rin || r >= outer) return 0.0;
            const double a = 0.5 * (dimension - 2) - eta;
            const double u = std::log(r / rin) / log_width;
            const double s = std::sin(M_PI * u);
            return std::pow(r, -a - 1.0) * (-a * s * s + (M_PI / log_width) * std::sin(2.0 * M_PI * u));
        }
        case Kind::TensorBump: break;
    }
    throw InvalidArgument("profile of a non-radial test function");
}

double TestFunction::value(std::span<const double> x) const {
    double y[32];
    const double r2 = dist2(x, center, y);
    if (kind == Kind::TensorBump) {
        double p = 1.0;
        for (int i = 0; i < dimension; ++i) {
            const double q = 1.0 - (y[i] / width) * (y[i] / width);
            if (q <= 0.0) return 0.0;
            p *= q * q * q;
        }
        return p;
    }
    return profile(std::sqrt(r2));
}

void TestFunction::gradient(std::span<const double> x, std::span<double> out) const {
    double y[32];
    const double r2 = dist2(x, center, y);
    if (kind == Kind::TensorBump) {
        double q[32];
        for (int i = 0; i < dimension; ++i) {
            q[i] = 1.0 - (y[i] / width) * (y[i] / width);
            if (q[i] <= 0.0) {
                for (int k = 0; k < dimension; ++k) out[k] = 0.0;
                return;
            }
        }
        for (int i = 0; i < dimension; ++i) {
            double p = 3.0 * q[i] * q[i] * (-2.0 * y[i] / (width * width));
            for (int k = 0; k < dimension; ++k)
                if (k != i) p *= q[k] * q[k] * q[k];
            out[i] = p;
        }
        return;
    }
    const double r = std::sqrt(r2);
    const double dp = r > 0.0 ? profile_derivative(r) / r : (kind == Kind::Gaussian ? -1.0 / (width * width) : 0.0);
    for (int i = 0; i < dimension; ++i) out[i] = dp * y[i];
}

nlohmann::json TestFunction::to_json() const {
    static const char* names[] = {"gaussian", "hardy_quasi", "tensor_bump"};
    nlohmann::json j{{"id", id}, {"kind", names[static_cast<int>(kind)]}, {"dimension", dimension}};
    if (kind == Kind::HardyQuasi) {
        j["eta"] = eta;
        j["log_width"] = log_width;
        j["outer"] = outer;
    } else {
        j["width"] = width;
        j["center"] = center.empty() ? std::vector<double>(static_cast<std::size_t>(dimension), 0.0) : center;
    }
    return j;
}

TestFunction gaussian_test_function(int d, double sigma, std::vector<double> center) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian width must be positive");
    TestFunction f;
    f.kind = TestFunction::Kind::Gaussian;
    f.dimension = d;
    f.width = sigma;
    f.center = std::move(center);
    f.id = "gauss_w" + fmt("%g", sigma) + center_tag(f.center);
    return f;
}

TestFunction hardy_quasi_optimizer(int d, double eta, double log_width, double outer) {
    if (!(log_width > 0.0) || !(outer > 0.0)) throw InvalidArgument("quasi-optimizer needs positive widths");
    TestFunction f;
    f.kind = TestFunction::Kind::HardyQuasi;
    f.dimension = d;
    f.eta = eta;
    f.log_width = log_width;
    f.outer = outer;
    f.id = "hardyq_eta" + fmt("%g", eta) + "_L" + fmt("%g", log_width);
    return f;
}

TestFunction tensor_bump(int d, double half_width, std::vector<double> center) {
    if (!(half_width > 0.0)) throw InvalidArgument("tensor bump width must be positive");
    TestFunction f;
    f.kind = TestFunction::Kind::TensorBump;
    f.dimension = d;
    f.width = half_width;
    f.center = std::move(center);
    f.id = "tbump_w" + fmt("%g", half_width) + center_tag(f.center);
    return f;
}

TestFunctionFamily hardy_quasi_family(int d, double outer, const std::vector<double>& etas,
                                      const std::vector<double>& log_widths) {
    TestFunctionFamily fam;
    fam.descriptor = "hardy-quasi(outer=" + fmt("%g", outer) + ")";
    for (double L : log_widths)
        for (double e : etas) fam.members.push_back(hardy_quasi_optimizer(d, e, L, outer));
    fam.validate();
    return fam;
}

TestFunctionFamily reference_family(int d, double scale) {
    TestFunctionFamily fam = hardy_quasi_family(d, 0.9 * scale);
    fam.descriptor = "reference(scale=" + fmt("%g", scale) + ")";
    for (double s : {0.05, 0.1, 0.2, 0.4}) fam.members.push_back(gaussian_test_function(d, s * scale));
    std::vector<double> off(static_cast<std::size_t>(d), 0.0);
    off[0] = 0.3 * scale;
    fam.members.push_back(gaussian_test_function(d, 0.15 * scale, off));
    fam.members.push_back(tensor_bump(d, 0.5 * scale));
    fam.members.push_back(tensor_bump(d, 0.3 * scale, off));
    fam.validate();
    return fam;
}

void test_function_norms(const TestFunction& f, const TestFunctionFamily& fam, double& l2sq, double& grad_sq) {
    const int d = f.dimension;
    if (f.radial()) {
        RadialRuleOptions opt;
        opt.dimension = d;
        opt.nodes_per_segment = fam.radial_nodes;
        std::vector<double> bp;
        if (f.inner_radius() > 0.0) bp.push_back(f.inner_radius());
        const RadialRule rule = make_radial_rule(f.extent(), bp, opt);
        const double S = sphere_area(d);
        l2sq = S * rule.integrate([&](double r) { return f.profile(r) * f.profile(r); });
        grad_sq = S * rule.integrate([&](double r) { return f.profile_derivative(r) * f.profile_derivative(r); });
        return;
    }
    double ext = f.extent();
    std::vector<double> c = f.center.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : f.center;
    double s0 = 0.0, s1 = 0.0;
    std::vector<double> x(static_cast<std::size_t>(d)), g(static_cast<std::size_t>(d));
    for_each_tensor_cell(d, -ext, ext, fam.tensor_cells, [&](std::span<const double> y, double vol) {
        for (int i = 0; i < d; ++i) x[i] = c[i] + y[i];
        const double v = f.value(x);
        f.gradient(x, g);
        double gg = 0.0;
        for (double q : g) gg += q * q;
        s0 += vol * v * v;
        s1 += vol * gg;
    });
    l2sq = s0;
    grad_sq = s1;
}

void TestFunctionFamily::validate() const {
    if (members.empty()) throw InvalidArgument("test-function family is empty");
    for (const auto& f : members) {
        double a = 0.0, b = 0.0;
        test_function_norms(f, *this, a, b);
        if (!std::isfinite(a) || !std::isfinite(b) || !(b > 0.0))
            throw NumericalError("test function '" + f.id + "' has degenerate norms");
    }
}

nlohmann::json TestFunctionFamily::provenance() const {
    nlohmann::json m = nlohmann::json::array();
    for (const auto& f : members) m.push_back(f.to_json());
    return {{"descriptor", descriptor},
            {"radial_rule", "gauss-legendre " + std::to_string(radial_nodes) + " nodes per segment"},
            {"sphere_rule_polar_nodes", sphere_nodes},
            {"tensor_cells_per_axis", tensor_cells},
            {"members", m}};
}

}  // namespace fbd::drift
