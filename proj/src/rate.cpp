#include "aggrate/rate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "aggrate/simd/kernels.hpp"

namespace aggrate {
namespace {

const double kInvLog2 = 1.0 / kLn2;

const char* kQuadWarning = "quadrature rule reaches under 6 noise sigmas; "
                           "raise the order or truncation";

double safe_log2(double mix) { return std::log2(std::max(mix, kMixFloor)); }

// low-order rules cover too little of the noise tail to trust
bool quad_reach_low(const GaussianExpectation& quad) {
    switch (quad.spec().method) {
        case QuadMethod::gauss_hermite: return quad.spec().order < 16;
        case QuadMethod::grid: return quad.spec().truncation < 6.0;
        case QuadMethod::monte_carlo: return false;
    }
    return false;
}

// normalized pairwise level differences: rows[k][m] = a * (x_k - x_m)
std::vector<double> diff_rows(const std::vector<double>& x, double a) {
    const std::size_t m = x.size();
    std::vector<double> rows(m * m);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < m; ++j) rows[k * m + j] = a * (x[k] - x[j]);
    return rows;
}

double mc_std_err(std::span<const double> draws, double mean_weighted, double scale) {
    // draws carry the per-draw integrand values (equal weights)
    const std::size_t n = draws.size();
    if (n < 2) return 0.0;
    const double mean = mean_weighted;
    double ss = 0.0;
    for (double v : draws) ss += (v - mean) * (v - mean);
    return scale * std::sqrt(ss / (static_cast<double>(n) * (n - 1)));
}

} // namespace

void LinkPhysics::validate() const {
    if (!(bandwidth_hz > 0)) throw ConfigError("link physics: bandwidth must be > 0");
    if (!(noise_psd > 0)) throw ConfigError("link physics: noise psd must be > 0");
    if (!(amp_efficiency > 0)) throw ConfigError("link physics: amplifier efficiency must be > 0");
    if (!std::isfinite(gain.real()) || !std::isfinite(gain.imag()))
        throw ConfigError("link physics: gain must be finite");
}

double snr_lifi(const OpticalConstellation& c, double q1_sq, const LinkPhysics& phys) {
    const double g = phys.gain_mag();
    return g * g * q1_sq * moments(c).elec_power / (phys.bandwidth_hz * phys.noise_psd);
}

double snr_wifi(const RFConstellation& c, double q2_sq, const LinkPhysics& phys) {
    const double g = phys.gain_mag();
    return g * g * q2_sq * moments(c).elec_power / (phys.bandwidth_hz * phys.noise_psd);
}

double rate_lifi(const OpticalConstellation& c, double q1_sq, const LinkPhysics& phys,
                 const GaussianExpectation& quad, double* std_err, std::string* warn) {
    if (std_err) *std_err = 0.0;
    if (q1_sq < 0) throw ConfigError("rate: q1_sq must be >= 0");
    phys.validate();
    const std::size_t m = c.size();
    const double b = phys.bandwidth_hz;
    if (m <= 1 || q1_sq == 0.0) return 0.0;

    const double a = phys.gain_mag() * std::sqrt(q1_sq) /
                     std::sqrt(b * phys.noise_psd);
    const std::vector<double> rows = diff_rows(c.points, a);
    if (warn && quad_reach_low(quad)) *warn = kQuadWarning;

    const auto& kern = simd::active();
    const auto nodes = quad.nodes();
    const auto w = quad.weights();
    std::vector<double> per_node(nodes.size());
    std::vector<double> weighted(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (c.probs[k] == 0.0) continue;
            const double mix = kern.gauss_mix(rows.data() + k * m, c.probs.data(), m, nodes[i]);
            acc += c.probs[k] * safe_log2(mix);
        }
        per_node[i] = acc;
        weighted[i] = w[i] * acc;
    }
    const double ev = pairwise_sum(weighted);
    if (std_err && quad.stochastic()) *std_err = mc_std_err(per_node, ev, 2.0 * b);
    return -b * kInvLog2 - 2.0 * b * ev;
}

double rate_wifi(const RFConstellation& c, double q2_sq, const LinkPhysics& phys,
                 const GaussianExpectation& quad, double* std_err, std::string* warn) {
    if (std_err) *std_err = 0.0;
    if (q2_sq < 0) throw ConfigError("rate: q2_sq must be >= 0");
    phys.validate();
    const std::size_t n = c.size();
    const double b = phys.bandwidth_hz;
    if (n <= 1 || q2_sq == 0.0) return 0.0;

    const double a = phys.gain_mag() * std::sqrt(q2_sq) / std::sqrt(b * phys.noise_psd);
    std::vector<double> dre(n * n), dim(n * n);
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j) {
            const cplx d = a * (c.points[l] - c.points[j]);
            dre[l * n + j] = d.real();
            dim[l * n + j] = d.imag();
        }
    if (warn && quad_reach_low(quad)) *warn = kQuadWarning;

    const auto& kern = simd::active();
    double ev = 0.0;
    std::vector<double> per_draw;
    if (quad.tensorized()) {
        const auto ax = quad.cx_axis_nodes();
        const auto aw = quad.cx_axis_weights();
        const std::size_t q = ax.size();
        std::vector<double> ere(q * n), eim(q * n), node_vals(q * q), kacc(q * q);
        std::vector<double> row_sums;
        std::fill(node_vals.begin(), node_vals.end(), 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            if (c.probs[l] == 0.0) continue;
            // separable components of exp(-|u + w|^2)
            for (std::size_t i = 0; i < q; ++i) {
                kern.sq_exp_row(dre.data() + l * n, n, ax[i], ere.data() + i * n);
                kern.sq_exp_row(dim.data() + l * n, n, ax[i], eim.data() + i * n);
            }
            for (std::size_t i = 0; i < q; ++i)
                for (std::size_t j = 0; j < q; ++j) {
                    const double mix = kern.mix_prod(c.probs.data(), ere.data() + i * n,
                                                     eim.data() + j * n, n);
                    node_vals[i * q + j] += c.probs[l] * safe_log2(mix);
                }
        }
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < q; ++j) kacc[i * q + j] = aw[i] * aw[j] * node_vals[i * q + j];
        ev = pairwise_sum(kacc);
    } else {
        const auto re = quad.cx_re();
        const auto im = quad.cx_im();
        const auto w = quad.cx_weights();
        per_draw.assign(re.size(), 0.0);
        std::vector<double> weighted(re.size());
        for (std::size_t i = 0; i < re.size(); ++i) {
            double acc = 0.0;
            for (std::size_t l = 0; l < n; ++l) {
                if (c.probs[l] == 0.0) continue;
                const double mix = kern.gauss_mix_cx(dre.data() + l * n, dim.data() + l * n,
                                                     c.probs.data(), n, re[i], im[i]);
                acc += c.probs[l] * safe_log2(mix);
            }
            per_draw[i] = acc;
            weighted[i] = w[i] * acc;
        }
        ev = pairwise_sum(weighted);
        if (std_err && quad.stochastic()) *std_err = mc_std_err(per_draw, ev, b);
    }
    return -b * kInvLog2 - b * ev;
}

RateBounds bounds_lifi(const OpticalConstellation& c, double q1_sq, const LinkPhysics& phys) {
    if (q1_sq < 0) throw ConfigError("bounds: q1_sq must be >= 0");
    phys.validate();
    const std::size_t m = c.size();
    const double b = phys.bandwidth_hz;
    RateBounds r;
    const double a = phys.gain_mag() * std::sqrt(q1_sq) / std::sqrt(b * phys.noise_psd);
    // exponents -t^2/4 (lower core) and -t^2/2 (upper core)
    std::vector<double> lo_args(m), up_args(m), lo_row(m), up_row(m);
    double up = 0.0, lo = 0.0;
    const auto& kern = simd::active();
    for (std::size_t k = 0; k < m; ++k) {
        if (c.probs[k] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) {
            const double t = a * (c.points[k] - c.points[j]);
            lo_args[j] = -0.25 * t * t;
            up_args[j] = -0.5 * t * t;
        }
        kern.vexp(lo_args.data(), lo_row.data(), m);
        kern.vexp(up_args.data(), up_row.data(), m);
        lo += c.probs[k] * safe_log2(kern.dot(lo_row.data(), c.probs.data(), m));
        up += c.probs[k] * safe_log2(kern.dot(up_row.data(), c.probs.data(), m));
    }
    r.upper = -2.0 * b * up;
    r.lower = b - b * kInvLog2 - 2.0 * b * lo;
    return r;
}

RateBounds bounds_wifi(const RFConstellation& c, double q2_sq, const LinkPhysics& phys) {
    if (q2_sq < 0) throw ConfigError("bounds: q2_sq must be >= 0");
    phys.validate();
    const std::size_t n = c.size();
    const double b = phys.bandwidth_hz;
    RateBounds r;
    const double a2 = phys.gain_mag() * phys.gain_mag() * q2_sq / (b * phys.noise_psd);
    std::vector<double> lo_args(n), up_args(n), lo_row(n), up_row(n);
    double up = 0.0, lo = 0.0;
    const auto& kern = simd::active();
    for (std::size_t l = 0; l < n; ++l) {
        if (c.probs[l] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            const double q = std::norm(c.points[l] - c.points[j]) * a2;
            lo_args[j] = -0.5 * q;
            up_args[j] = -q;
        }
        kern.vexp(lo_args.data(), lo_row.data(), n);
        kern.vexp(up_args.data(), up_row.data(), n);
        lo += c.probs[l] * safe_log2(kern.dot(lo_row.data(), c.probs.data(), n));
        up += c.probs[l] * safe_log2(kern.dot(up_row.data(), c.probs.data(), n));
    }
    r.upper = -b * up;
    r.lower = b - b * kInvLog2 - b * lo;
    return r;
}

std::string RateReport::csv_header() {
    return "snr1,snr2,rate_lifi,rate_wifi,rate_total,lower,upper";
}

namespace {
std::string fmt(double v);
} // namespace

std::string RateReport::csv_row() const {
    std::string out;
    out += fmt(snr1);
    out += ',';
    out += fmt(snr2);
    out += ',';
    out += fmt(rate_lifi);
    out += ',';
    out += fmt(rate_wifi);
    out += ',';
    out += fmt(rate_total);
    out += ',';
    out += fmt(lower_total);
    out += ',';
    out += fmt(upper_total);
    return out;
}

RateReport rate_aggregate(const OpticalConstellation& c1, const RFConstellation& c2,
                          double q1_sq, double q2_sq, const LinkPhysics& phys1,
                          const LinkPhysics& phys2, const GaussianExpectation& quad) {
    RateReport rep;
    std::string warn1, warn2;
    rep.snr1 = snr_lifi(c1, q1_sq, phys1);
    rep.snr2 = snr_wifi(c2, q2_sq, phys2);
    rep.rate_lifi = rate_lifi(c1, q1_sq, phys1, quad, &rep.mc_std_lifi, &warn1);
    rep.rate_wifi = rate_wifi(c2, q2_sq, phys2, quad, &rep.mc_std_wifi, &warn2);
    rep.rate_total = rep.rate_lifi + rep.rate_wifi;
    const RateBounds bl = bounds_lifi(c1, q1_sq, phys1);
    const RateBounds bw = bounds_wifi(c2, q2_sq, phys2);
    rep.lower_total = bl.lower + bw.lower;
    rep.upper_total = bl.upper + bw.upper;
    rep.quad_warning = warn1.empty() ? warn2 : warn1;
    return rep;
}

RateBounds bounds_aggregate(const OpticalConstellation& c1, const RFConstellation& c2,
                            double q1_sq, double q2_sq, const LinkPhysics& phys1,
                            const LinkPhysics& phys2) {
    const RateBounds bl = bounds_lifi(c1, q1_sq, phys1);
    const RateBounds bw = bounds_wifi(c2, q2_sq, phys2);
    return {bl.lower + bw.lower, bl.upper + bw.upper};
}

double mmse(const OpticalConstellation& c, double snr, const GaussianExpectation& quad) {
    if (snr < 0) throw ConfigError("mmse: snr must be >= 0");
    const std::size_t m = c.size();
    const double eps = moments(c).elec_power;
    if (m <= 1 || eps <= 0.0) return 0.0;
    const double a = std::sqrt(snr / eps);

    std::vector<double> neg_ax(m), px(m);
    for (std::size_t j = 0; j < m; ++j) {
        neg_ax[j] = -a * c.points[j];
        px[j] = c.probs[j] * c.points[j];
    }
    const auto& kern = simd::active();
    const auto nodes = quad.nodes();
    const auto w = quad.weights();
    std::vector<double> acc(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double v = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (c.probs[k] == 0.0) continue;
            const double y = a * c.points[k] + nodes[i];
            const double den = kern.gauss_mix(neg_ax.data(), c.probs.data(), m, y);
            const double num = kern.gauss_mix(neg_ax.data(), px.data(), m, y);
            const double est = num / std::max(den, kMixFloor);
            v += c.probs[k] * (c.points[k] - est) * (c.points[k] - est);
        }
        acc[i] = w[i] * v;
    }
    return pairwise_sum(acc);
}

double mmse(const RFConstellation& c, double snr, const GaussianExpectation& quad) {
    if (snr < 0) throw ConfigError("mmse: snr must be >= 0");
    const std::size_t n = c.size();
    const double eps = moments(c).elec_power;
    if (n <= 1 || eps <= 0.0) return 0.0;
    const double a = std::sqrt(snr / eps);

    std::vector<double> nre(n), nim(n), pre(n), pim(n);
    for (std::size_t j = 0; j < n; ++j) {
        nre[j] = -a * c.points[j].real();
        nim[j] = -a * c.points[j].imag();
        pre[j] = c.probs[j] * c.points[j].real();
        pim[j] = c.probs[j] * c.points[j].imag();
    }
    const auto& kern = simd::active();
    const auto re = quad.cx_re();
    const auto im = quad.cx_im();
    const auto w = quad.cx_weights();
    std::vector<double> acc(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) {
        double v = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            if (c.probs[l] == 0.0) continue;
            const double yre = a * c.points[l].real() + re[i];
            const double yim = a * c.points[l].imag() + im[i];
            const double den =
                kern.gauss_mix_cx(nre.data(), nim.data(), c.probs.data(), n, yre, yim);
            const double d = std::max(den, kMixFloor);
            const double ere = kern.gauss_mix_cx(nre.data(), nim.data(), pre.data(), n, yre, yim) / d;
            const double eim = kern.gauss_mix_cx(nre.data(), nim.data(), pim.data(), n, yre, yim) / d;
            const double dr = c.points[l].real() - ere;
            const double di = c.points[l].imag() - eim;
            v += c.probs[l] * (dr * dr + di * di);
        }
        acc[i] = w[i] * v;
    }
    return pairwise_sum(acc);
}

double lmmse(double t, double x) {
    if (!(t > 0)) throw std::domain_error("lmmse: t must be > 0");
    return t / (1.0 + t * x);
}

double lmmse_inv(double t, double y) {
    if (!(t > 0)) throw std::domain_error("lmmse_inv: t must be > 0");
    if (!(y > 0) || y > t * (1.0 + 1e-12))
        throw std::domain_error("lmmse_inv: argument must lie in (0, t]");
    return std::max(1.0 / y - 1.0 / t, 0.0);
}

double qsq_for_snr_lifi(double snr, const OpticalConstellation& c, const LinkPhysics& phys) {
    const double g = phys.gain_mag();
    const double eps = moments(c).elec_power;
    if (g <= 0 || eps <= 0) throw ConfigError("qsq_for_snr: dead link");
    return snr * phys.bandwidth_hz * phys.noise_psd / (g * g * eps);
}

double qsq_for_snr_wifi(double snr, const RFConstellation& c, const LinkPhysics& phys) {
    const double g = phys.gain_mag();
    const double eps = moments(c).elec_power;
    if (g <= 0 || eps <= 0) throw ConfigError("qsq_for_snr: dead link");
    return snr * phys.bandwidth_hz * phys.noise_psd / (g * g * eps);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, buf + len);
}

} // namespace

} // namespace aggrate
