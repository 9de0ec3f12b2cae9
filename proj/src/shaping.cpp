#include "aggrate/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "aggrate/simd/kernels.hpp"

namespace aggrate {
namespace {

const double kInvLog2 = 1.0 / kLn2;

double norm2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::string fmt(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, buf + len);
}

QuadratureSpec with_truncation(QuadratureSpec spec, double trunc) {
    if (spec.method == QuadMethod::grid) spec.truncation = trunc;
    return spec;
}

} // namespace

void PGDConfig::validate() const {
    if (!(trunc_obj >= 4.0) || !(trunc_grad >= 4.0))
        throw ConfigError("pgd: truncation must be >= 4 sigma");
    if (!(armijo_beta > 0 && armijo_beta < 1))
        throw ConfigError("pgd: armijo backtrack factor must be in (0,1)");
    if (!(armijo_c > 0 && armijo_c < 1)) throw ConfigError("pgd: armijo slope must be in (0,1)");
    if (!(armijo_step0 > 0)) throw ConfigError("pgd: initial step must be > 0");
    if (!(stop_tol > 0)) throw ConfigError("pgd: stop tolerance must be > 0");
    if (max_iters < 1) throw ConfigError("pgd: max iterations must be >= 1");
}

void FWConfig::validate() const {
    if (!(stop_tol > 0)) throw ConfigError("fw: stop tolerance must be > 0");
    if (!(line_search_tol > 0)) throw ConfigError("fw: line search tolerance must be > 0");
    if (max_iters < 1) throw ConfigError("fw: max iterations must be >= 1");
}

std::string ShapingResult::trace_csv_header() { return "iter,objective,step,delta_p"; }

std::string ShapingResult::trace_csv() const {
    std::string out = "# schema=1\n" + trace_csv_header() + "\n";
    for (const TraceRow& r : trace) {
        out += std::to_string(r.iter);
        out += ',';
        out += fmt(r.objective);
        out += ',';
        out += fmt(r.step);
        out += ',';
        out += fmt(r.delta_p);
        out += '\n';
    }
    return out;
}

double MixtureObjective::value(std::span<const double> p) const {
    const auto& kern = simd::active();
    const std::size_t nb = weights.size();
    std::vector<double> per_block(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        const double* block = table.data() + i * dim * dim;
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            if (p[k] == 0.0) continue;
            const double mix = kern.dot(block + k * dim, p.data(), dim);
            acc += p[k] * std::log2(std::max(mix, kMixFloor));
        }
        per_block[i] = weights[i] * acc;
    }
    return pairwise_sum(per_block);
}

std::vector<double> MixtureObjective::gradient(std::span<const double> p) const {
    const auto& kern = simd::active();
    std::vector<double> grad(dim, 0.0);
    std::vector<double> mixes(dim);
    const std::size_t nb = weights.size();
    for (std::size_t i = 0; i < nb; ++i) {
        const double* block = table.data() + i * dim * dim;
        for (std::size_t k = 0; k < dim; ++k)
            mixes[k] = std::max(kern.dot(block + k * dim, p.data(), dim), kMixFloor);
        for (std::size_t k = 0; k < dim; ++k) {
            grad[k] += weights[i] * std::log2(mixes[k]);
            if (p[k] == 0.0) continue;
            const double coeff = weights[i] * p[k] * kInvLog2 / mixes[k];
            kern.axpy(coeff, block + k * dim, grad.data(), dim);
        }
    }
    return grad;
}

namespace {

// node tables are materialized once per solve; keep them in memory reason
void check_table_size(std::size_t blocks, std::size_t dim) {
    if (blocks * dim * dim > std::size_t{40000000})
        throw ConfigError("quadrature too fine for the shaping optimizer; "
                          "reduce the order or draw count");
}

MixtureObjective exact_lifi_impl(const OpticalConstellation& c, double q1_sq,
                                 const LinkPhysics& phys, const GaussianExpectation& quad) {
    phys.validate();
    const std::size_t m = c.size();
    MixtureObjective obj;
    obj.dim = m;
    obj.scale = 2.0 * phys.bandwidth_hz;
    obj.offset = -phys.bandwidth_hz * kInvLog2;
    const double a = phys.gain_mag() * std::sqrt(q1_sq) /
                     std::sqrt(phys.bandwidth_hz * phys.noise_psd);
    std::vector<double> diffs(m);
    const auto nodes = quad.nodes();
    const auto w = quad.weights();
    check_table_size(nodes.size(), m);
    obj.weights.assign(w.begin(), w.end());
    obj.table.resize(nodes.size() * m * m);
    const auto& kern = simd::active();
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < m; ++j) diffs[j] = a * (c.points[k] - c.points[j]);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            kern.gauss_row(diffs.data(), m, nodes[i], obj.table.data() + (i * m + k) * m);
    }
    return obj;
}

MixtureObjective exact_wifi_impl(const RFConstellation& c, double q2_sq,
                                 const LinkPhysics& phys, const GaussianExpectation& quad) {
    phys.validate();
    const std::size_t n = c.size();
    MixtureObjective obj;
    obj.dim = n;
    obj.scale = phys.bandwidth_hz;
    obj.offset = -phys.bandwidth_hz * kInvLog2;
    const double a = phys.gain_mag() * std::sqrt(q2_sq) /
                     std::sqrt(phys.bandwidth_hz * phys.noise_psd);
    std::vector<double> dre(n * n), dim_(n * n);
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j) {
            const cplx d = a * (c.points[l] - c.points[j]);
            dre[l * n + j] = d.real();
            dim_[l * n + j] = d.imag();
        }
    const auto& kern = simd::active();
    if (quad.tensorized()) {
        const auto ax = quad.cx_axis_nodes();
        const auto aw = quad.cx_axis_weights();
        const std::size_t q = ax.size();
        check_table_size(q * q, n);
        obj.weights.resize(q * q);
        obj.table.resize(q * q * n * n);
        std::vector<double> ere(q * n), eim(q * n);
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < q; ++j) obj.weights[i * q + j] = aw[i] * aw[j];
        for (std::size_t l = 0; l < n; ++l) {
            for (std::size_t i = 0; i < q; ++i) {
                kern.sq_exp_row(dre.data() + l * n, n, ax[i], ere.data() + i * n);
                kern.sq_exp_row(dim_.data() + l * n, n, ax[i], eim.data() + i * n);
            }
            for (std::size_t i = 0; i < q; ++i)
                for (std::size_t j = 0; j < q; ++j) {
                    double* row = obj.table.data() + ((i * q + j) * n + l) * n;
                    const double* re = ere.data() + i * n;
                    const double* im = eim.data() + j * n;
                    for (std::size_t t = 0; t < n; ++t) row[t] = re[t] * im[t];
                }
        }
    } else {
        const auto re = quad.cx_re();
        const auto im = quad.cx_im();
        const auto w = quad.cx_weights();
        check_table_size(re.size(), n);
        obj.weights.assign(w.begin(), w.end());
        obj.table.resize(re.size() * n * n);
        for (std::size_t i = 0; i < re.size(); ++i)
            for (std::size_t l = 0; l < n; ++l)
                kern.gauss_row_cx(dre.data() + l * n, dim_.data() + l * n, n, re[i], im[i],
                                  obj.table.data() + (i * n + l) * n);
    }
    return obj;
}

} // namespace

MixtureObjective exact_objective_lifi(const OpticalConstellation& c, double q1_sq,
                                      const LinkPhysics& phys, const GaussianExpectation& quad) {
    return exact_lifi_impl(c, q1_sq, phys, quad);
}

MixtureObjective exact_objective_wifi(const RFConstellation& c, double q2_sq,
                                      const LinkPhysics& phys, const GaussianExpectation& quad) {
    return exact_wifi_impl(c, q2_sq, phys, quad);
}

MixtureObjective lb_objective_lifi(const OpticalConstellation& c, double q1_sq,
                                   const LinkPhysics& phys) {
    phys.validate();
    const std::size_t m = c.size();
    MixtureObjective obj;
    obj.dim = m;
    obj.scale = 2.0 * phys.bandwidth_hz;
    obj.offset = phys.bandwidth_hz * (1.0 - kInvLog2);
    obj.weights = {1.0};
    obj.table.resize(m * m);
    const double g = phys.gain_mag();
    const double s = g * g * q1_sq / (4.0 * phys.bandwidth_hz * phys.noise_psd);
    std::vector<double> args(m * m);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < m; ++j) {
            const double d = c.points[k] - c.points[j];
            args[k * m + j] = -d * d * s;
        }
    simd::active().vexp(args.data(), obj.table.data(), m * m);
    return obj;
}

MixtureObjective lb_objective_wifi(const RFConstellation& c, double q2_sq,
                                   const LinkPhysics& phys) {
    phys.validate();
    const std::size_t n = c.size();
    MixtureObjective obj;
    obj.dim = n;
    obj.scale = phys.bandwidth_hz;
    obj.offset = phys.bandwidth_hz * (1.0 - kInvLog2);
    obj.weights = {1.0};
    obj.table.resize(n * n);
    const double g = phys.gain_mag();
    const double s = g * g * q2_sq / (2.0 * phys.bandwidth_hz * phys.noise_psd);
    std::vector<double> args(n * n);
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j)
            args[l * n + j] = -std::norm(c.points[l] - c.points[j]) * s;
    simd::active().vexp(args.data(), obj.table.data(), n * n);
    return obj;
}

std::vector<double> grad_phi_lifi(const OpticalConstellation& c, double q1_sq,
                                  const LinkPhysics& phys, const QuadratureSpec& quad,
                                  double trunc_grad) {
    const GaussianExpectation engine(with_truncation(quad, trunc_grad));
    const MixtureObjective obj = exact_objective_lifi(c, q1_sq, phys, engine);
    std::vector<double> g = obj.gradient(c.probs);
    for (double& v : g) v *= obj.scale;
    return g;
}

std::vector<double> grad_phi_wifi(const RFConstellation& c, double q2_sq,
                                  const LinkPhysics& phys, const QuadratureSpec& quad,
                                  double trunc_grad) {
    const GaussianExpectation engine(with_truncation(quad, trunc_grad));
    const MixtureObjective obj = exact_objective_wifi(c, q2_sq, phys, engine);
    std::vector<double> g = obj.gradient(c.probs);
    for (double& v : g) v *= obj.scale;
    return g;
}

ShapingResult pgd_minimize(const MixtureObjective& obj, const MixtureObjective& grad_obj,
                           const FeasibleSet& set, std::span<const double> start,
                           const PGDConfig& cfg) {
    cfg.validate();
    ShapingResult res;
    std::vector<double> p = project_feasible(start, set);
    if (set.dim <= 1) {
        res.probs = p;
        res.converged = true;
        res.trace.push_back({0, obj.scale * obj.value(p), 0.0, 0.0});
        return res;
    }
    double f = obj.value(p);
    res.trace.push_back({0, obj.scale * f, 0.0, 0.0});
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const std::vector<double> g = grad_obj.gradient(p);
        double alpha = cfg.armijo_step0;
        std::vector<double> cand;
        double fc = f;
        bool accepted = false;
        for (int bt = 0; bt < 64; ++bt) {
            std::vector<double> shifted(p.begin(), p.end());
            for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= alpha * g[i];
            cand = project_feasible(shifted, set);
            double m = 0.0;
            for (std::size_t i = 0; i < cand.size(); ++i) m += g[i] * (p[i] - cand[i]);
            if (m <= 1e-15 * (1.0 + std::abs(f))) {
                // projected step is stationary at this scale
                accepted = false;
                break;
            }
            fc = obj.value(cand);
            if (fc <= f - cfg.armijo_c * m) {
                accepted = true;
                break;
            }
            alpha *= cfg.armijo_beta;
        }
        if (!accepted) {
            res.converged = true;
            break;
        }
        const double dp = norm2(cand, p);
        p = cand;
        f = fc;
        res.trace.push_back({it, obj.scale * f, alpha, dp});
        if (dp <= cfg.stop_tol) {
            res.converged = true;
            break;
        }
    }
    res.probs = p;
    return res;
}

std::vector<double> fw_lp_step(std::span<const double> grad, const FeasibleSet& set) {
    return lp_min_vertex(grad, set);
}

ShapingResult fw_minimize(const MixtureObjective& obj, const FeasibleSet& set,
                          std::span<const double> start, const FWConfig& cfg) {
    cfg.validate();
    ShapingResult res;
    std::vector<double> p = project_feasible(start, set);
    double f = obj.value(p);
    res.trace.push_back({0, obj.scale * f, 0.0, 0.0});
    if (set.dim <= 1) {
        res.probs = p;
        res.converged = true;
        return res;
    }
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const std::vector<double> g = obj.gradient(p);
        const std::vector<double> v = lp_min_vertex(g, set);
        std::vector<double> d(p.size());
        double gap = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            d[i] = v[i] - p[i];
            gap += g[i] * d[i];
        }
        if (std::abs(gap) <= cfg.stop_tol) {
            res.converged = true;
            break;
        }
        // directional-derivative bisection for the step
        auto dir_deriv = [&](double lam) {
            std::vector<double> q(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) q[i] = p[i] + lam * d[i];
            const std::vector<double> gq = obj.gradient(q);
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) s += gq[i] * d[i];
            return s;
        };
        double lambda;
        const double g1 = dir_deriv(1.0);
        if (g1 <= 0.0) {
            lambda = 1.0;
        } else {
            double a = 0.0, b = 1.0;
            while (b - a > cfg.line_search_tol) {
                const double mid = 0.5 * (a + b);
                if (dir_deriv(mid) < 0.0)
                    a = mid;
                else
                    b = mid;
            }
            lambda = 0.5 * (a + b);
        }
        std::vector<double> cand(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) cand[i] = p[i] + lambda * d[i];
        double fc = obj.value(cand);
        if (fc > f + 1e-12 * (1.0 + std::abs(f))) {
            // bisection target was unreliable; damp along the same direction
            lambda = 2.0 / (it + 2.0);
            for (int halvings = 0; halvings < 50; ++halvings) {
                for (std::size_t i = 0; i < p.size(); ++i) cand[i] = p[i] + lambda * d[i];
                fc = obj.value(cand);
                if (fc <= f) break;
                lambda *= 0.5;
            }
            if (fc > f) {
                res.converged = std::abs(gap) <= 10.0 * cfg.stop_tol;
                break;
            }
        }
        double dp = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            dp += (cand[i] - p[i]) * (cand[i] - p[i]);
        dp = std::sqrt(dp);
        p = cand;
        f = fc;
        res.trace.push_back({it, obj.scale * f, lambda, dp});
    }
    res.probs = p;
    return res;
}

ShapingResult pgd_optimize_lifi(const OpticalConstellation& c, double q1_sq,
                                const LinkPhysics& phys, const QuadratureSpec& quad,
                                const PGDConfig& cfg) {
    cfg.validate();
    const FeasibleSet set = FeasibleSet::optical(c);
    if (c.size() <= 1) {
        ShapingResult r;
        r.probs = {1.0};
        r.converged = true;
        r.trace.push_back({0, 0.0, 0.0, 0.0});
        return r;
    }
    const GaussianExpectation oe(with_truncation(quad, cfg.trunc_obj));
    const MixtureObjective obj = exact_objective_lifi(c, q1_sq, phys, oe);
    if (quad.method == QuadMethod::grid && cfg.trunc_grad != cfg.trunc_obj) {
        const GaussianExpectation ge(with_truncation(quad, cfg.trunc_grad));
        return pgd_minimize(obj, exact_objective_lifi(c, q1_sq, phys, ge), set, c.probs, cfg);
    }
    return pgd_minimize(obj, obj, set, c.probs, cfg);
}

ShapingResult pgd_optimize_wifi(const RFConstellation& c, double q2_sq,
                                const LinkPhysics& phys, const QuadratureSpec& quad,
                                const PGDConfig& cfg) {
    cfg.validate();
    const FeasibleSet set = FeasibleSet::rf(c);
    if (c.size() <= 1) {
        ShapingResult r;
        r.probs = {1.0};
        r.converged = true;
        r.trace.push_back({0, 0.0, 0.0, 0.0});
        return r;
    }
    const GaussianExpectation oe(with_truncation(quad, cfg.trunc_obj));
    const MixtureObjective obj = exact_objective_wifi(c, q2_sq, phys, oe);
    if (quad.method == QuadMethod::grid && cfg.trunc_grad != cfg.trunc_obj) {
        const GaussianExpectation ge(with_truncation(quad, cfg.trunc_grad));
        return pgd_minimize(obj, exact_objective_wifi(c, q2_sq, phys, ge), set, c.probs, cfg);
    }
    return pgd_minimize(obj, obj, set, c.probs, cfg);
}

ShapingResult fw_optimize_lifi(const OpticalConstellation& c, double q1_sq,
                               const LinkPhysics& phys, const FWConfig& cfg) {
    const FeasibleSet set = FeasibleSet::optical(c);
    if (c.size() <= 1) {
        ShapingResult r;
        r.probs = {1.0};
        r.converged = true;
        r.trace.push_back({0, 0.0, 0.0, 0.0});
        return r;
    }
    return fw_minimize(lb_objective_lifi(c, q1_sq, phys), set, c.probs, cfg);
}

ShapingResult fw_optimize_wifi(const RFConstellation& c, double q2_sq,
                               const LinkPhysics& phys, const FWConfig& cfg) {
    const FeasibleSet set = FeasibleSet::rf(c);
    if (c.size() <= 1) {
        ShapingResult r;
        r.probs = {1.0};
        r.converged = true;
        r.trace.push_back({0, 0.0, 0.0, 0.0});
        return r;
    }
    return fw_minimize(lb_objective_wifi(c, q2_sq, phys), set, c.probs, cfg);
}

} // namespace aggrate
