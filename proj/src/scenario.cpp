#include "aggrate/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace aggrate {

using nlohmann::json;

namespace {

// -57 dBm/MHz -> watts/Hz
double noise_w_per_hz(const json& j, const std::string& where) {
    if (j.contains("w_per_hz")) return j.at("w_per_hz").get<double>();
    if (j.contains("dbm_per_mhz"))
        return dbm_per_mhz_to_w_per_hz(j.at("dbm_per_mhz").get<double>());
    throw ConfigError(where + ": noise needs either w_per_hz or dbm_per_mhz");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

json pairs_json(const std::vector<double>& points, const std::vector<double>& probs) {
    json arr = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) arr.push_back({points[i], probs[i]});
    return arr;
}

json pairs_json(const std::vector<cplx>& points, const std::vector<double>& probs) {
    json arr = json::array();
    for (std::size_t i = 0; i < points.size(); ++i)
        arr.push_back({{points[i].real(), points[i].imag()}, probs[i]});
    return arr;
}

OpticalConstellation optical_from_json(const json& j, const std::string& where) {
    OpticalConstellation c;
    c.peak = get_or(j, "peak", 2.0);
    c.mean_cap = get_or(j, "mean_cap", c.peak / 2.0);
    c.elec_cap = get_or(j, "elec_cap", c.peak * c.peak / 2.0);
    if (j.contains("pairs")) {
        for (const auto& pr : j.at("pairs")) {
            c.points.push_back(pr.at(0).get<double>());
            c.probs.push_back(pr.at(1).get<double>());
        }
    } else if (j.contains("points")) {
        c.points = j.at("points").get<std::vector<double>>();
        if (j.contains("probs"))
            c.probs = j.at("probs").get<std::vector<double>>();
        else
            c.probs.assign(c.points.size(), 1.0 / c.points.size());
    } else {
        const int order = get_or(j, "order", 8);
        return make_pam(order, c.peak, c.mean_cap, c.elec_cap);
    }
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

RFConstellation rf_from_json(const json& j, const std::string& where) {
    RFConstellation c;
    c.elec_cap = get_or(j, "elec_cap", 1.0);
    if (j.contains("pairs")) {
        for (const auto& pr : j.at("pairs")) {
            c.points.emplace_back(pr.at(0).at(0).get<double>(), pr.at(0).at(1).get<double>());
            c.probs.push_back(pr.at(1).get<double>());
        }
    } else if (j.contains("points")) {
        for (const auto& pt : j.at("points"))
            c.points.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
        if (j.contains("probs"))
            c.probs = j.at("probs").get<std::vector<double>>();
        else
            c.probs.assign(c.points.size(), 1.0 / c.points.size());
    } else {
        const int order = get_or(j, "order", 16);
        return make_qam(order, c.elec_cap);
    }
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

FadingMode fading_from_string(const std::string& s) {
    if (s == "mean") return FadingMode::mean;
    if (s == "los") return FadingMode::los;
    if (s == "sampled") return FadingMode::sampled;
    throw ConfigError("wifi.fading must be one of mean|los|sampled");
}

std::string fading_to_string(FadingMode m) {
    switch (m) {
        case FadingMode::mean: return "mean";
        case FadingMode::los: return "los";
        case FadingMode::sampled: return "sampled";
    }
    return "?";
}

} // namespace

double dbm_per_mhz_to_w_per_hz(double dbm_per_mhz) {
    return std::pow(10.0, dbm_per_mhz / 10.0 - 9.0);
}

Scenario Scenario::table1_default() {
    Scenario s;
    s.seed = 1;
    s.lifi_geom = LiFiGeometry{};            // 60 deg half-power, 1 cm^2, 4 m, on-axis
    s.c1 = make_pam(8, 2.0, 1.0, 2.0);
    s.b1_hz = 40e6;
    s.sigma1_sq = 1e-21;
    s.eta1 = 1.0;
    s.wifi_geom = WiFiGeometry{};            // 4 m, breakpoint 5 m, 2.4 GHz, 45 deg, K=1
    s.c2 = make_qam(16, 1.0);
    s.b2_hz = 20e6;
    s.sigma2_sq = dbm_per_mhz_to_w_per_hz(-57.0);
    s.eta2 = 1.0;
    s.budget = PowerBudget{4.0, 3.2, 4.0};
    s.quad = QuadratureSpec{};
    s.solver = AlternatingConfig{};
    return s;
}

Scenario Scenario::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: invalid json: ") + e.what());
    }
    Scenario s = table1_default();
    try {
        s.seed = get_or(j, "seed", std::uint64_t{1});
        if (j.contains("lifi")) {
            const json& l = j.at("lifi");
            if (l.contains("geometry")) {
                const json& g = l.at("geometry");
                s.lifi_geom.half_power_angle_deg =
                    get_or(g, "half_power_angle_deg", s.lifi_geom.half_power_angle_deg);
                s.lifi_geom.detector_area_m2 =
                    get_or(g, "detector_area_m2", s.lifi_geom.detector_area_m2);
                s.lifi_geom.distance_m = get_or(g, "distance_m", s.lifi_geom.distance_m);
                s.lifi_geom.radiance_angle_deg =
                    get_or(g, "radiance_angle_deg", s.lifi_geom.radiance_angle_deg);
                s.lifi_geom.incidence_angle_deg =
                    get_or(g, "incidence_angle_deg", s.lifi_geom.incidence_angle_deg);
                s.lifi_geom.filter_gain = get_or(g, "filter_gain", s.lifi_geom.filter_gain);
                s.lifi_geom.refractive_index =
                    get_or(g, "refractive_index", s.lifi_geom.refractive_index);
                s.lifi_geom.fov_deg = get_or(g, "fov_deg", s.lifi_geom.fov_deg);
            }
            if (l.contains("gain_override"))
                s.lifi_gain_override = l.at("gain_override").get<double>();
            if (l.contains("constellation"))
                s.c1 = optical_from_json(l.at("constellation"), "lifi.constellation");
            s.b1_hz = get_or(l, "bandwidth_hz", s.b1_hz);
            if (l.contains("noise")) s.sigma1_sq = noise_w_per_hz(l.at("noise"), "lifi");
            s.sigma1_sq = get_or(l, "noise_psd_a2_per_hz", s.sigma1_sq);
            s.eta1 = get_or(l, "amp_efficiency", s.eta1);
            s.drive_current_max_a = get_or(l, "drive_current_max_a", s.drive_current_max_a);
        }
        if (j.contains("wifi")) {
            const json& w = j.at("wifi");
            if (w.contains("geometry")) {
                const json& g = w.at("geometry");
                s.wifi_geom.distance_m = get_or(g, "distance_m", s.wifi_geom.distance_m);
                s.wifi_geom.breakpoint_m = get_or(g, "breakpoint_m", s.wifi_geom.breakpoint_m);
                s.wifi_geom.carrier_hz = get_or(g, "carrier_hz", s.wifi_geom.carrier_hz);
                s.wifi_geom.ricean_k = get_or(g, "ricean_k", s.wifi_geom.ricean_k);
                s.wifi_geom.aoa_deg = get_or(g, "aoa_deg", s.wifi_geom.aoa_deg);
                s.wifi_geom.shadow_std_near_db =
                    get_or(g, "shadow_std_near_db", s.wifi_geom.shadow_std_near_db);
                s.wifi_geom.shadow_std_far_db =
                    get_or(g, "shadow_std_far_db", s.wifi_geom.shadow_std_far_db);
            }
            if (w.contains("gain_override")) {
                const json& g = w.at("gain_override");
                s.wifi_gain_override = cplx(g.at(0).get<double>(), g.at(1).get<double>());
            }
            if (w.contains("fading")) s.fading = fading_from_string(w.at("fading").get<std::string>());
            if (w.contains("constellation"))
                s.c2 = rf_from_json(w.at("constellation"), "wifi.constellation");
            s.b2_hz = get_or(w, "bandwidth_hz", s.b2_hz);
            if (w.contains("noise")) s.sigma2_sq = noise_w_per_hz(w.at("noise"), "wifi");
            s.eta2 = get_or(w, "amp_efficiency", s.eta2);
        }
        if (j.contains("budget")) {
            const json& b = j.at("budget");
            s.budget.total_elec = get_or(b, "total_elec_w", s.budget.total_elec);
            s.budget.max_avg_optical = get_or(b, "max_avg_optical_w", s.budget.max_avg_optical);
            s.budget.max_inst_optical = get_or(b, "max_inst_optical_w", s.budget.max_inst_optical);
            s.budget.budget_uses_caps = get_or(b, "budget_uses_caps", s.budget.budget_uses_caps);
        }
        if (j.contains("quadrature")) {
            const json& q = j.at("quadrature");
            if (q.contains("method"))
                s.quad.method = parse_quad_method(q.at("method").get<std::string>());
            s.quad.order = get_or(q, "order", s.quad.order);
            s.quad.truncation = get_or(q, "truncation", s.quad.truncation);
        }
        if (j.contains("solver")) {
            const json& v = j.at("solver");
            s.solver.outer_tol_scale = get_or(v, "outer_tol_scale", s.solver.outer_tol_scale);
            s.solver.outer_tol_abs = get_or(v, "outer_tol_abs", s.solver.outer_tol_abs);
            s.solver.max_outer = get_or(v, "max_outer", s.solver.max_outer);
            s.solver.wf_tol = get_or(v, "wf_tol", s.solver.wf_tol);
            s.solver.root_tol = get_or(v, "root_tol", s.solver.root_tol);
            if (v.contains("pgd")) {
                const json& p = v.at("pgd");
                s.solver.pgd.trunc_obj = get_or(p, "trunc_obj", s.solver.pgd.trunc_obj);
                s.solver.pgd.trunc_grad = get_or(p, "trunc_grad", s.solver.pgd.trunc_grad);
                s.solver.pgd.armijo_beta = get_or(p, "armijo_beta", s.solver.pgd.armijo_beta);
                s.solver.pgd.armijo_c = get_or(p, "armijo_c", s.solver.pgd.armijo_c);
                s.solver.pgd.armijo_step0 = get_or(p, "armijo_step0", s.solver.pgd.armijo_step0);
                s.solver.pgd.stop_tol = get_or(p, "stop_tol", s.solver.pgd.stop_tol);
                s.solver.pgd.max_iters = get_or(p, "max_iters", s.solver.pgd.max_iters);
            }
            if (v.contains("fw")) {
                const json& f = v.at("fw");
                s.solver.fw.stop_tol = get_or(f, "stop_tol", s.solver.fw.stop_tol);
                s.solver.fw.line_search_tol =
                    get_or(f, "line_search_tol", s.solver.fw.line_search_tol);
                s.solver.fw.max_iters = get_or(f, "max_iters", s.solver.fw.max_iters);
            }
        }
        if (j.contains("allocation")) {
            const json& a = j.at("allocation");
            const std::string mode = get_or<std::string>(a, "mode", "equal_split");
            if (mode == "equal_split") {
                s.equal_split = true;
            } else if (mode == "fixed") {
                s.equal_split = false;
                s.q1_sq_fixed = a.at("q1_sq").get<double>();
                s.q2_sq_fixed = a.at("q2_sq").get<double>();
            } else {
                throw ConfigError("allocation.mode must be equal_split or fixed");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string Scenario::to_json_text() const {
    json j;
    j["seed"] = seed;
    j["lifi"] = {
        {"geometry",
         {{"half_power_angle_deg", lifi_geom.half_power_angle_deg},
          {"detector_area_m2", lifi_geom.detector_area_m2},
          {"distance_m", lifi_geom.distance_m},
          {"radiance_angle_deg", lifi_geom.radiance_angle_deg},
          {"incidence_angle_deg", lifi_geom.incidence_angle_deg},
          {"filter_gain", lifi_geom.filter_gain},
          {"refractive_index", lifi_geom.refractive_index},
          {"fov_deg", lifi_geom.fov_deg}}},
        {"constellation",
         {{"pairs", pairs_json(c1.points, c1.probs)},
          {"peak", c1.peak},
          {"mean_cap", c1.mean_cap},
          {"elec_cap", c1.elec_cap}}},
        {"bandwidth_hz", b1_hz},
        {"noise_psd_a2_per_hz", sigma1_sq},
        {"amp_efficiency", eta1},
        {"drive_current_max_a", drive_current_max_a}};
    if (lifi_gain_override) j["lifi"]["gain_override"] = *lifi_gain_override;
    j["wifi"] = {{"geometry",
                  {{"distance_m", wifi_geom.distance_m},
                   {"breakpoint_m", wifi_geom.breakpoint_m},
                   {"carrier_hz", wifi_geom.carrier_hz},
                   {"ricean_k", wifi_geom.ricean_k},
                   {"aoa_deg", wifi_geom.aoa_deg},
                   {"shadow_std_near_db", wifi_geom.shadow_std_near_db},
                   {"shadow_std_far_db", wifi_geom.shadow_std_far_db}}},
                 {"fading", fading_to_string(fading)},
                 {"constellation",
                  {{"pairs", pairs_json(c2.points, c2.probs)}, {"elec_cap", c2.elec_cap}}},
                 {"bandwidth_hz", b2_hz},
                 {"noise", {{"w_per_hz", sigma2_sq}}},
                 {"amp_efficiency", eta2}};
    if (wifi_gain_override)
        j["wifi"]["gain_override"] = {wifi_gain_override->real(), wifi_gain_override->imag()};
    j["budget"] = {{"total_elec_w", budget.total_elec},
                   {"max_avg_optical_w", budget.max_avg_optical},
                   {"max_inst_optical_w", budget.max_inst_optical},
                   {"budget_uses_caps", budget.budget_uses_caps}};
    j["quadrature"] = {{"method", to_string(quad.method)},
                       {"order", quad.order},
                       {"truncation", quad.truncation}};
    j["solver"] = {{"outer_tol_scale", solver.outer_tol_scale},
                   {"outer_tol_abs", solver.outer_tol_abs},
                   {"max_outer", solver.max_outer},
                   {"wf_tol", solver.wf_tol},
                   {"root_tol", solver.root_tol},
                   {"pgd",
                    {{"trunc_obj", solver.pgd.trunc_obj},
                     {"trunc_grad", solver.pgd.trunc_grad},
                     {"armijo_beta", solver.pgd.armijo_beta},
                     {"armijo_c", solver.pgd.armijo_c},
                     {"armijo_step0", solver.pgd.armijo_step0},
                     {"stop_tol", solver.pgd.stop_tol},
                     {"max_iters", solver.pgd.max_iters}}},
                   {"fw",
                    {{"stop_tol", solver.fw.stop_tol},
                     {"line_search_tol", solver.fw.line_search_tol},
                     {"max_iters", solver.fw.max_iters}}}};
    if (equal_split)
        j["allocation"] = {{"mode", "equal_split"}};
    else
        j["allocation"] = {{"mode", "fixed"}, {"q1_sq", q1_sq_fixed}, {"q2_sq", q2_sq_fixed}};
    return j.dump(2);
}

LinkPhysics Scenario::lifi_physics() const {
    LinkPhysics p;
    p.gain = lifi_gain_override ? *lifi_gain_override : lifi_gain(lifi_geom);
    p.bandwidth_hz = b1_hz;
    p.noise_psd = sigma1_sq;
    p.amp_efficiency = eta1;
    return p;
}

LinkPhysics Scenario::wifi_physics() const {
    LinkPhysics p;
    if (wifi_gain_override) {
        p.gain = *wifi_gain_override;
    } else {
        switch (fading) {
            case FadingMode::mean: p.gain = wifi_gain(wifi_geom, mean_fading()); break;
            case FadingMode::los: p.gain = wifi_gain_los(wifi_geom); break;
            case FadingMode::sampled:
                p.gain = wifi_gain(wifi_geom, sample_fading(seed, wifi_geom));
                break;
        }
    }
    p.bandwidth_hz = b2_hz;
    p.noise_psd = sigma2_sq;
    p.amp_efficiency = eta2;
    return p;
}

PowerAllocation Scenario::fixed_allocation() const {
    PowerAllocation a;
    if (!equal_split) {
        a.q1_sq = q1_sq_fixed;
        a.q2_sq = q2_sq_fixed;
        return a;
    }
    const LinkPhysics p1 = lifi_physics();
    const LinkPhysics p2 = wifi_physics();
    const double k1 = budget_coef_lifi(c1, p1, budget);
    const double k2 = budget_coef_wifi(c2, p2, budget);
    const double half = budget.total_elec / 2.0;
    const double tau2 = budget.tau(c1) * budget.tau(c1);
    a.q1_sq = (k1 > 0.0) ? std::min(half / k1, tau2) : 0.0;
    const double leftover = budget.total_elec - k1 * a.q1_sq;
    a.q2_sq = (k2 > 0.0) ? leftover / k2 : 0.0;
    return a;
}

void Scenario::validate() const {
    try {
        lifi_geom.validate();
        wifi_geom.validate();
        c1.validate();
        c2.validate();
        budget.validate();
        quad.validate();
        solver.validate();
        lifi_physics().validate();
        wifi_physics().validate();
        if (!equal_split && (q1_sq_fixed < 0 || q2_sq_fixed < 0))
            throw ConfigError("allocation: fixed powers must be >= 0");
    } catch (const ConfigError&) {
        throw;
    } catch (const InfeasibleError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

} // namespace aggrate
